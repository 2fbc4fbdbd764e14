//! Fixed-precision rendering shared by every subcommand.

use edgewalk::Complex64;
use serde_json::Value;

pub const SIGNIFICANT: usize = 12;

/// `x` to 12 significant digits: fixed notation for `1e-5 <= |x| < 1e12`,
/// scientific otherwise. Zeros are kept so columns line up.
pub fn fmt(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// `x` rounded to 12 significant digits as a JSON number; `null` if not
/// finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT - 1, x).parse().expect("round trip");
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn complex(z: Complex64) -> Value {
    serde_json::json!({ "re": num(z.re), "im": num(z.im) })
}

/// Builds CSV text with a fixed header. Fields never contain commas except
/// edge labels, which are quoted.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        let quoted: Vec<String> = fields
            .iter()
            .map(|f| if f.contains(',') { format!("\"{f}\"") } else { f.clone() })
            .collect();
        self.text.push_str(&quoted.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
