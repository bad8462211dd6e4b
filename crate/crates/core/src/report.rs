//! Machine-readable run reports.
//!
//! A report holds the command line, a hash of the parsed configuration, one
//! JSON object per instance and the timings. Everything outside `timing` is a
//! deterministic function of the inputs, so two runs of the same command can
//! be compared after [`RunReport::without_timing`].

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    /// Wall time per entry of `results`, in the same order.
    pub per_result_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub config_hash: String,
    pub tolerance: f64,
    pub results: Vec<Value>,
    pub timing: Timing,
}

impl RunReport {
    /// Empty report for `command`, hashing `config` together with τ.
    pub fn new<C: Serialize>(command: Vec<String>, config: &C, tolerance: f64) -> Self {
        Self {
            tool: "tdm".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config_hash: config_hash(config, tolerance),
            tolerance,
            results: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn push(&mut self, result: Value, seconds: f64) {
        self.results.push(result);
        self.timing.per_result_seconds.push(seconds);
    }

    /// Copy with all timings zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.timing.total_seconds = 0.0;
        r.timing.per_result_seconds.iter_mut().for_each(|t| *t = 0.0);
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// First 16 hex digits of SHA-256 over the compact JSON of `(config, τ)`.
pub fn config_hash<C: Serialize>(config: &C, tolerance: f64) -> String {
    let canonical = serde_json::to_vec(&(config, tolerance)).expect("config serializes");
    let digest = Sha256::digest(&canonical);
    hex::encode(&digest[..8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&json!({"d": 4, "method": "full"}), 1e-9);
        assert_eq!(a, config_hash(&json!({"d": 4, "method": "full"}), 1e-9));
        assert_eq!(a.len(), 16);
        assert_ne!(a, config_hash(&json!({"d": 5, "method": "full"}), 1e-9));
        assert_ne!(a, config_hash(&json!({"d": 4, "method": "full"}), 1e-8));
    }

    #[test]
    fn field_order_is_fixed() {
        let mut r = RunReport::new(vec!["tdm".into()], &json!({}), 1e-9);
        r.push(json!({"member": true}), 0.25);
        let text = r.to_json();
        let keys = ["\"tool\"", "\"version\"", "\"command\"", "\"config_hash\"", "\"tolerance\"", "\"results\"", "\"timing\""];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.without_timing().timing.per_result_seconds, vec![0.0]);
    }
}
