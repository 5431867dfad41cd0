use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            tolerance,
            pass: value <= tolerance,
            note: None,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            tolerance,
            pass: value >= tolerance,
            note: None,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, note: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            relation: Relation::AtMost,
            tolerance: 0.0,
            pass: false,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        // NaN is not valid JSON; serialize unevaluated checks as null.
        let mut v = serde_json::to_value(self).expect("summary serializes");
        if let Some(checks) = v.get_mut("checks").and_then(|c| c.as_array_mut()) {
            for (c, orig) in checks.iter_mut().zip(&self.checks) {
                if !orig.value.is_finite() {
                    c["value"] = serde_json::Value::Null;
                }
            }
        }
        serde_json::to_string_pretty(&v).expect("summary serializes")
    }

    pub fn report_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let rel = match c.relation {
                    Relation::AtMost => "<=",
                    Relation::AtLeast => ">=",
                };
                let mut s = format!(
                    "[{}] {}: {:.6e} {rel} {:.3e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
                if let Some(n) = &c.note {
                    s.push_str(&format!(" ({n})"));
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_relations() {
        assert!(Check::at_most("a", 1.0, 1.0).pass);
        assert!(!Check::at_most("a", 1.1, 1.0).pass);
        assert!(Check::at_least("a", 2.0, 1.0).pass);
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
        assert!(!Check::failed("a", "why").pass);
    }
}
