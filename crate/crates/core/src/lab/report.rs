use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// Flat summary plus one numeric row per trial.
///
/// Summary keys are snake_case and serialize in sorted order, so two runs with
/// equal inputs produce byte-identical JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub summary: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        let mut summary = Map::new();
        summary.insert("experiment".into(), Value::from(experiment));
        summary.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        Self {
            summary,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.summary.insert(key.to_string(), value.into());
        self
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn get_bool(&self, key: &str) -> Option<bool> {
        self.summary.get(key).and_then(Value::as_bool)
    }

    pub fn experiment(&self) -> &str {
        self.summary["experiment"].as_str().unwrap_or_default()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary is plain JSON")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_sorted() {
        let mut r = ExperimentReport::new("demo", &["a"]);
        r.set("zeta", 1.0).set("alpha", 0.5);
        let json = r.summary_json();
        let a = json.find("alpha").unwrap();
        let e = json.find("experiment").unwrap();
        let z = json.find("zeta").unwrap();
        assert!(a < e && e < z);
        assert_eq!(r.get_f64("alpha"), Some(0.5));
        assert_eq!(r.experiment(), "demo");
    }
}
