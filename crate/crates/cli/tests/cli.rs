use edgewalk::oracles::build_diamond;
use edgewalk::serialize_graph;
use edgewalk_cli::run;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("edgewalk").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn statistic(text: &str, name: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("no {name} in output:\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn hitting_time_from_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("diamond0.qw");
    std::fs::write(&path, serialize_graph(&build_diamond(0.0))).unwrap();
    let (code, out, err) = invoke(&["hitting-time", "--graph", path.to_str().unwrap(), "--nmax", "50"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("P_out,0.800000"), "{out}");
    assert!(out.contains("\n3,0.790123456790\n"));
    assert!((statistic(&out, "h") - 3.05).abs() < 1e-9);
    assert_eq!(out.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 50);
}

#[test]
fn hitting_time_json() {
    let (code, out, _) = invoke(&[
        "hitting-time",
        "--builtin",
        "diamond:0",
        "--nmax",
        "50",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["p_out"].as_f64().unwrap(), 0.8);
    assert_eq!(v["q"].as_array().unwrap().len(), 50);
    assert_eq!(v["circle_p_out"].as_f64().unwrap(), 0.8);
}

#[test]
fn no_arrival_is_a_computation_error() {
    let (code, out, err) = invoke(&["hitting-time", "--builtin", "diamond:3.141592653589793"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("never reached"), "{err}");
}

#[test]
fn zero_steps_echo_the_initial_distribution() {
    let (code, out, _) = invoke(&["simulate", "--builtin", "line:0.6,0.8,3", "--steps", "0"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "edge,probability");
    let nonzero: Vec<&str> = lines[1..].iter().copied().filter(|l| !l.ends_with(",0")).collect();
    assert_eq!(nonzero, ["\"tail_in:1,n0\",1.00000000000"]);
}

#[test]
fn monitored_simulation_matches_diamond() {
    let (code, out, _) = invoke(&[
        "simulate",
        "--builtin",
        "diamond:0",
        "--steps",
        "7",
        "--monitor",
        "2,tail_out:1",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,p_survive,q_arrive");
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[3], "3,0.209876543210,0.790123456790");
    assert_eq!(lines[7], "7,0.200121932632,0.00975461057766");
}

#[test]
fn distribution_conserves_probability() {
    let (code, out, _) = invoke(&[
        "simulate",
        "--builtin",
        "random:8",
        "--seed",
        "7",
        "--steps",
        "40",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let total: f64 = v["distribution"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["probability"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn scatter_is_unitary_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scatter.csv");
    let (code, out, _) = invoke(&[
        "scatter",
        "--builtin",
        "diamond:0.4",
        "--samples",
        "16",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,re_t,im_t,re_r,im_r,norm");
    assert_eq!(lines.len(), 17);
    for l in &lines[1..] {
        let norm: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((norm - 1.0).abs() < 1e-11, "{l}");
    }
}

#[test]
fn bound_states_of_the_diamond() {
    let (code, out, _) = invoke(&["bound-states", "--builtin", "diamond", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["count"], 4);
    for b in v["bound_states"].as_array().unwrap() {
        let norm: f64 = b["vector"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["re"].as_f64().unwrap().powi(2) + a["im"].as_f64().unwrap().powi(2))
            .sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn tri_check_reports_invariance_and_table() {
    let (code, out, _) = invoke(&["tri-check", "--builtin", "diamond", "--phi", "0.9", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["invariant"], true);
    assert!(v["max_diff"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["transmission"].as_array().unwrap().len(), 64);
}

#[test]
fn tri_check_flags_a_broken_two_port() {
    let (code, out, _) = invoke(&["tri-check", "--builtin", "line:0+0.8i,0.6", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["invariant"], false);
    assert!(v["witness"]["vertex"].is_string());
}

#[test]
fn self_test_passes() {
    let (code, out, _) = invoke(&["self-test"]);
    assert_eq!(code, 0);
    assert!(out.lines().count() >= 11);
    assert!(!out.contains("FAIL"));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let args = ["scatter", "--builtin", "random:10", "--seed", "3", "--samples", "32"];
    let (_, a, _) = invoke(&args);
    let (_, b, _) = invoke(&args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["scatter"][..],
        &["scatter", "--builtin", "diamond", "--graph", "x.qw"],
        &["scatter", "--builtin", "hexagon"],
        &["scatter", "--builtin", "line:0.6"],
        &["hitting-time", "--builtin", "diamond", "--nmax", "0"],
        &["simulate", "--builtin", "diamond", "--monitor", "0,2"],
        &["simulate", "--builtin", "line:1,0", "--phi", "1"],
        &["frobnicate"],
    ] {
        let (code, out, err) = invoke(args);
        assert_eq!(code, 2, "{args:?}");
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }
}

#[test]
fn invalid_graphs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.qw");
    std::fs::write(&path, "vertex a grover 2\ntail_in a\n").unwrap();
    let (code, _, err) = invoke(&["bound-states", "--graph", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("bad.qw"));
    let (code, _, _) = invoke(&["bound-states", "--graph", "/nonexistent/graph.qw"]);
    assert_eq!(code, 1);
    let (code, _, err) = invoke(&["scatter", "--builtin", "line:0.9,0.9"]);
    assert_eq!(code, 1, "{err}");
}
