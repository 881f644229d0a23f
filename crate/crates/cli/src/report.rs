use amerdual::scalar::{render_decimal, ExtScalar};
use amerdual::Scalar;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

const DECIMAL_DIGITS: usize = 12;

/// One reported number: `value` is authoritative (`p/q` in rational mode),
/// `decimal` is an annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub label: String,
    pub value: String,
    pub decimal: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub mode: String,
    /// Arguments that reproduce this report (without the program name).
    pub invocation: Vec<String>,
    pub inputs_digest: String,
    pub values: Vec<Entry>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub artifacts: Map<String, Value>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(command: &str, mode: &str, invocation: Vec<String>, inputs: &Value) -> Self {
        Report {
            command: command.to_string(),
            mode: mode.to_string(),
            invocation,
            inputs_digest: digest(inputs),
            values: Vec::new(),
            artifacts: Map::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn value<F: Scalar>(&mut self, label: impl Into<String>, v: &F) {
        self.values.push(Entry { label: label.into(), value: v.render(), decimal: render_decimal(v, DECIMAL_DIGITS) });
    }

    pub fn ext_value<F: Scalar>(&mut self, label: impl Into<String>, v: &ExtScalar<F>) {
        match v {
            Some(x) => self.value(label, x),
            None => self.values.push(Entry { label: label.into(), value: "-inf".into(), decimal: "-inf".into() }),
        }
    }

    pub fn count(&mut self, label: impl Into<String>, n: usize) {
        self.values.push(Entry { label: label.into(), value: n.to_string(), decimal: n.to_string() });
    }

    pub fn artifact(&mut self, key: &str, v: Value) {
        self.artifacts.insert(key.to_string(), v);
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} ({} mode)\ninputs {}\n", self.command, self.mode, self.inputs_digest);
        let width = self.values.iter().map(|e| e.label.chars().count()).max().unwrap_or(0);
        for e in &self.values {
            let pad = width - e.label.chars().count();
            out.push_str(&format!("  {}{}  {}", e.label, " ".repeat(pad), e.value));
            if e.decimal != e.value {
                out.push_str(&format!("  (≈ {})", e.decimal));
            }
            out.push('\n');
        }
        for (k, v) in &self.artifacts {
            let text = v.to_string();
            if text.chars().count() <= 160 {
                out.push_str(&format!("  {k}: {text}\n"));
            } else {
                out.push_str(&format!("  {k}: (see --json)\n"));
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("error: {e}\n"));
        }
        out
    }
}

/// SHA-256 of the canonical JSON text of the inputs.
pub fn digest(inputs: &Value) -> String {
    hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use amerdual::Rational;

    #[test]
    fn rational_values_render_as_fractions() {
        let mut r = Report::new("x", "rational", vec![], &Value::Null);
        r.value("a", &Rational::ratio(18, 5));
        r.value("b", &Rational::from_i64(2));
        r.ext_value::<Rational>("c", &None);
        assert_eq!(r.values[0].value, "18/5");
        assert_eq!(r.values[0].decimal, "3.6");
        assert_eq!(r.values[1].value, "2");
        assert_eq!(r.values[2].value, "-inf");
        assert!(r.to_text().contains("18/5  (≈ 3.6)"));
    }

    #[test]
    fn digest_depends_on_content_only() {
        let a = serde_json::json!({"x": 1, "y": [1, 2]});
        let b: Value = serde_json::from_str("{ \"x\" : 1, \"y\" : [1,2] }").unwrap();
        assert_eq!(digest(&a), digest(&b));
        assert_ne!(digest(&a), digest(&serde_json::json!({"x": 2, "y": [1, 2]})));
    }
}
