use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub values: BTreeMap<String, f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), pass, values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    /// Passes when `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value <= bound).with("value", value).with("bound", bound)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub search_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub total_ms: f64,
}

/// Result document of one CLI invocation. Everything except `timing` is
/// reproducible for a fixed seed and thread count.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub tolerances: Tolerances,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub payload: Value,
    pub timing: Timing,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// JSON without the `timing` field, for golden comparisons.
    pub fn reproducible_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("timing");
        }
        v
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = format!("{}\n", self.command.join(" "));
        for c in &self.checks {
            let values: Vec<String> = c.values.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
            out.push_str(&format!("  [{}] {} {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, values.join(" ")));
        }
        if let Some(runs) = self.payload.get("runs").and_then(Value::as_array) {
            for r in runs {
                let name = r["run"].as_str().unwrap_or("?");
                match r["value"].as_f64() {
                    Some(p) => out.push_str(&format!("  run {name}: probability {p:.12}\n")),
                    None => {
                        let rows = r["value"]["rows"].as_u64().unwrap_or(0);
                        out.push_str(&format!("  run {name}: state of dimension {rows}\n"));
                    }
                }
            }
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out.push_str(&format!(
            "  {} in {:.1} ms (seed {}, threads {})\n",
            if self.passed() { "ok" } else { "FAILED" },
            self.timing.total_ms,
            self.seed,
            self.threads
        ));
        out
    }
}
