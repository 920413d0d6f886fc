//! Verification reports: schema, aggregation and rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::matrix::Mat;
use crate::scalar::C64;

pub const SCHEMA_VERSION: u32 = 1;

/// Failures stored with full inputs; later failing trials keep only the value.
pub const MAX_FAILURE_INPUTS: usize = 10;

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`
/// so that reports round-trip through JSON.
mod lossless_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    #[serde(with = "lossless_f64")]
    pub max: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn within(&self) -> bool {
        self.max <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub quantity: String,
    #[serde(with = "lossless_f64")]
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<serde_json::Value>,
}

/// A quantity that must stay at or above `floor` at every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    #[serde(with = "lossless_f64")]
    pub min: f64,
    pub floor: f64,
}

impl LowerBound {
    pub fn within(&self) -> bool {
        self.min >= self.floor
    }
}

/// Exact-equality tally of an exact-arithmetic suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactTally {
    pub agreed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub suite: String,
    pub space: Option<String>,
    pub morphisms: Vec<String>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_residuals: BTreeMap<String, Residual>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lower_bounds: BTreeMap<String, LowerBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactTally>,
    pub failures: Vec<Failure>,
    /// Observations that do not affect the verdict.
    #[serde(default)]
    pub notes: Vec<String>,
    pub passed: bool,
    pub wall_time: f64,
}

impl VerificationReport {
    /// Consistency of `passed`, `failures` and `max_residuals`.
    pub fn is_consistent(&self) -> bool {
        let residuals_ok = self.max_residuals.values().all(Residual::within);
        let bounds_ok = self.lower_bounds.values().all(LowerBound::within);
        let exact_ok = self.exact.is_none_or(|t| t.agreed == t.total);
        self.passed == self.failures.is_empty()
            && self.passed == (residuals_ok && bounds_ok && exact_ok)
    }

    pub fn residual(&self, key: &str) -> Option<f64> {
        self.max_residuals.get(key).map(|r| r.max)
    }

    /// The report with `wall_time` cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict}  {}", self.suite);
        let row = |out: &mut String, k: &str, v: &str| {
            let _ = writeln!(out, "  {k:<12}{v}");
        };
        if let Some(space) = &self.space {
            row(&mut out, "space", space);
        }
        for m in &self.morphisms {
            row(&mut out, "morphism", m);
        }
        row(&mut out, "n", &self.n.to_string());
        row(&mut out, "trials", &self.trials.to_string());
        row(&mut out, "seed", &self.seed.to_string());
        row(&mut out, "tolerance", &format!("{:e}", self.tolerance));
        if let Some(t) = self.exact {
            row(&mut out, "exact", &format!("{}/{}", t.agreed, t.total));
        }
        if !self.max_residuals.is_empty() {
            let width = self
                .max_residuals
                .keys()
                .map(String::len)
                .max()
                .unwrap_or(0);
            let _ = writeln!(out, "  residuals");
            for (k, r) in &self.max_residuals {
                let mark = if r.within() { "ok" } else { "EXCEEDED" };
                let _ = writeln!(
                    out,
                    "    {k:<width$}  max {:<12.3e} tol {:<8.1e} {mark}",
                    r.max, r.tolerance
                );
            }
        }
        for (k, b) in &self.lower_bounds {
            let mark = if b.within() { "ok" } else { "BELOW FLOOR" };
            let _ = writeln!(
                out,
                "    {k}  min {:<12.3e} floor {:<8.1e} {mark}",
                b.min, b.floor
            );
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "  failures ({})", self.failures.len());
            for f in self.failures.iter().take(MAX_FAILURE_INPUTS) {
                let _ = writeln!(
                    out,
                    "    trial {:<5} {:<28} {:.6e}",
                    f.trial, f.quantity, f.value
                );
                if let Some(inputs) = &f.inputs {
                    let _ = writeln!(out, "      inputs {inputs}");
                }
            }
            if self.failures.len() > MAX_FAILURE_INPUTS {
                let _ = writeln!(
                    out,
                    "    ... {} more",
                    self.failures.len() - MAX_FAILURE_INPUTS
                );
            }
        }
        for note in &self.notes {
            row(&mut out, "note", note);
        }
        row(&mut out, "wall time", &format!("{:.3} s", self.wall_time));
        out
    }
}

/// Matrix entries as nested `[re, im]` pairs.
pub fn mat_to_json(m: &Mat<C64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect();
    serde_json::json!(rows)
}

/// Collects residuals trial by trial into a [`VerificationReport`].
#[derive(Debug)]
pub struct ReportBuilder {
    report: VerificationReport,
    failing_trials_with_inputs: Vec<usize>,
}

impl ReportBuilder {
    pub fn new(suite: &str, n: usize, trials: usize, seed: u64, tolerance: f64) -> Self {
        Self {
            report: VerificationReport {
                schema_version: SCHEMA_VERSION,
                suite: suite.to_string(),
                space: None,
                morphisms: Vec::new(),
                n,
                trials,
                seed,
                tolerance,
                max_residuals: BTreeMap::new(),
                lower_bounds: BTreeMap::new(),
                exact: None,
                failures: Vec::new(),
                notes: Vec::new(),
                passed: true,
                wall_time: 0.0,
            },
            failing_trials_with_inputs: Vec::new(),
        }
    }

    pub fn space(mut self, label: String) -> Self {
        self.report.space = Some(label);
        self
    }

    pub fn morphisms(mut self, labels: Vec<String>) -> Self {
        self.report.morphisms = labels;
        self
    }

    /// Registers a residual key before any trial so it appears even when
    /// no sample contributes.
    pub fn declare(&mut self, key: &str, tolerance: f64) {
        self.report
            .max_residuals
            .entry(key.to_string())
            .or_insert(Residual {
                max: 0.0,
                tolerance,
            });
    }

    fn failure(
        &mut self,
        trial: usize,
        quantity: String,
        value: f64,
        inputs: &dyn Fn() -> serde_json::Value,
    ) {
        let keep_inputs = self.failing_trials_with_inputs.contains(&trial)
            || self.failing_trials_with_inputs.len() < MAX_FAILURE_INPUTS;
        let inputs = if keep_inputs {
            if !self.failing_trials_with_inputs.contains(&trial) {
                self.failing_trials_with_inputs.push(trial);
            }
            Some(inputs())
        } else {
            None
        };
        self.report.failures.push(Failure {
            trial,
            quantity,
            value,
            inputs,
        });
    }

    /// Records one residual under `key`; `detail` names the exact quantity
    /// in the failure list.
    pub fn record(
        &mut self,
        trial: usize,
        key: &str,
        detail: &str,
        value: f64,
        tolerance: f64,
        inputs: &dyn Fn() -> serde_json::Value,
    ) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        let entry = self
            .report
            .max_residuals
            .entry(key.to_string())
            .or_insert(Residual {
                max: 0.0,
                tolerance,
            });
        entry.max = entry.max.max(value);
        if value.is_nan() || value > tolerance {
            self.failure(trial, detail.to_string(), value, inputs);
        }
    }

    /// Records a quantity that must not drop below `floor`.
    pub fn record_floor(
        &mut self,
        trial: usize,
        key: &str,
        detail: &str,
        value: f64,
        floor: f64,
        inputs: &dyn Fn() -> serde_json::Value,
    ) {
        let value = if value.is_nan() {
            f64::NEG_INFINITY
        } else {
            value
        };
        let entry = self
            .report
            .lower_bounds
            .entry(key.to_string())
            .or_insert(LowerBound {
                min: f64::INFINITY,
                floor,
            });
        entry.min = entry.min.min(value);
        if value.is_nan() || value < floor {
            self.failure(trial, detail.to_string(), value, inputs);
        }
    }

    /// Records one exact comparison; `discrepancy` is informational.
    pub fn record_exact(
        &mut self,
        trial: usize,
        detail: &str,
        equal: bool,
        discrepancy: f64,
        inputs: &dyn Fn() -> serde_json::Value,
    ) {
        let tally = self.report.exact.get_or_insert(ExactTally {
            agreed: 0,
            total: 0,
        });
        tally.total += 1;
        if equal {
            tally.agreed += 1;
        } else {
            self.failure(trial, detail.to_string(), discrepancy, inputs);
        }
    }

    /// Records a trial that could not be evaluated at all.
    pub fn record_error(&mut self, trial: usize, key: &str, message: &str, tolerance: f64) {
        let msg = message.to_string();
        self.record(
            trial,
            key,
            &format!("{key}: {message}"),
            f64::INFINITY,
            tolerance,
            &|| serde_json::json!({ "error": msg }),
        );
    }

    pub fn note(&mut self, note: String) {
        self.report.notes.push(note);
    }

    pub fn finish(mut self, wall_time: f64) -> VerificationReport {
        let r = &mut self.report;
        r.passed = r.failures.is_empty();
        r.wall_time = wall_time;
        debug_assert!(r.is_consistent());
        self.report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(pass: bool) -> VerificationReport {
        let mut b = ReportBuilder::new("harmonic", 3, 2, 42, 1e-8)
            .space("slr-so:n=3".into())
            .morphisms(vec!["slr-so:n=3:kl=12".into()]);
        b.record(0, "tau", "tau", 1e-12, 1e-8, &|| serde_json::json!(null));
        let v = if pass { 1e-10 } else { 0.5 };
        b.record(
            1,
            "tau",
            "tau",
            v,
            1e-8,
            &|| serde_json::json!({ "x": [[1.0, 0.0]] }),
        );
        b.finish(0.01)
    }

    #[test]
    fn passing_report_text() {
        let r = sample(true);
        assert!(r.passed && r.is_consistent());
        let t = r.render_text();
        assert!(t.contains("PASS") && t.contains("harmonic") && t.contains("1.000e-10"));
        assert!(t.contains("seed") && t.contains("42"));
    }

    #[test]
    fn failing_report_text_shows_inputs() {
        let r = sample(false);
        assert!(!r.passed && r.is_consistent());
        assert_eq!(r.failures.len(), 1);
        let t = r.render_text();
        assert!(t.contains("FAIL") && t.contains("inputs") && t.contains("\"x\""));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        for pass in [true, false] {
            let r = sample(pass);
            let back = VerificationReport::from_json(&r.to_json()).unwrap();
            assert_eq!(back, r);
        }
        let mut b = ReportBuilder::new("x", 1, 1, 0, 1e-8);
        b.record_error(0, "tau", "division by zero", 1e-8);
        let r = b.finish(0.0);
        let back = VerificationReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back.failures[0].value, f64::INFINITY);
        assert_eq!(back.residual("tau"), Some(f64::INFINITY));
    }

    #[test]
    fn exact_tally_and_input_cap() {
        let mut b = ReportBuilder::new("lemma", 2, 20, 1, 0.0);
        for t in 0..20 {
            b.record_exact(t, "identity", t % 2 == 0, 1.0, &|| serde_json::json!(t));
        }
        let r = b.finish(0.0);
        assert_eq!(
            r.exact,
            Some(ExactTally {
                agreed: 10,
                total: 20
            })
        );
        assert_eq!(r.failures.len(), 10);
        assert!(r.failures.iter().all(|f| f.inputs.is_some()));
        assert!(!r.passed && r.is_consistent());

        let mut b = ReportBuilder::new("many", 2, 30, 1, 1e-8);
        for t in 0..30 {
            b.record(t, "tau", "tau", 1.0, 1e-8, &|| serde_json::json!(t));
        }
        let r = b.finish(0.0);
        assert_eq!(
            r.failures.iter().filter(|f| f.inputs.is_some()).count(),
            MAX_FAILURE_INPUTS
        );
    }

    #[test]
    fn lower_bounds() {
        let mut b = ReportBuilder::new("control", 2, 3, 1, 0.1);
        for (t, v) in [0.5, 2.0, 0.3].into_iter().enumerate() {
            b.record_floor(t, "tau", "tau", v, 0.1, &|| serde_json::json!(null));
        }
        let r = b.finish(0.0);
        assert!(r.passed && r.is_consistent());
        assert_eq!(r.lower_bounds["tau"].min, 0.3);
        let back = VerificationReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);

        let mut b = ReportBuilder::new("control", 2, 1, 1, 0.1);
        b.record_floor(0, "tau", "tau", 0.01, 0.1, &|| serde_json::json!(null));
        let r = b.finish(0.0);
        assert!(!r.passed && r.is_consistent());
        assert!(r.render_text().contains("BELOW FLOOR"));
    }
}
