//! Machine-readable run reports.
//!
//! Every CLI command emits a single [`Report`]: a versioned JSON document
//! (`schema: 1`) with the command echo, the configuration (including the RNG
//! seed and the normalization choice), named scalar values, and named checks
//! compared against tolerances. Maps are ordered (`BTreeMap`) so that the
//! same configuration and seed produce byte-identical output; the only
//! volatile data (timestamp and wall time) lives in the separate `timing`
//! field, which is excluded from the determinism contract.
//!
//! The CSV rendering has the fixed column order
//! `kind,name,value,tolerance,pass` with one row per value (`kind = value`,
//! empty tolerance/pass) and per check (`kind = check`).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// Output format selection for report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Json,
    Csv,
    Both,
}

/// A named residual compared against a tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Volatile run metadata, excluded from the determinism contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Seconds since the Unix epoch at report creation.
    pub timestamp: f64,
    /// Wall-clock duration of the run in seconds.
    pub wall_seconds: f64,
}

/// A complete run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Report format version.
    pub schema: u32,
    /// Echo of the invoked command line.
    pub command: String,
    /// RNG seed used for any randomized sweep in the run.
    pub seed: u64,
    /// Normalization convention applied to metric output.
    pub normalization: String,
    /// Configuration echo (grid sizes, tolerances, thread cap, ...).
    pub config: BTreeMap<String, String>,
    /// Named scalar outputs.
    pub values: BTreeMap<String, f64>,
    /// Named residuals with tolerances.
    pub checks: BTreeMap<String, Check>,
    /// True when every check passed.
    pub passed: bool,
    /// Volatile metadata; not part of the determinism contract.
    pub timing: Timing,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64, normalization: impl Into<String>) -> Self {
        Self {
            schema: 1,
            command: command.into(),
            seed,
            normalization: normalization.into(),
            config: BTreeMap::new(),
            values: BTreeMap::new(),
            checks: BTreeMap::new(),
            passed: true,
            timing: Timing {
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs_f64())
                    .unwrap_or(0.0),
                wall_seconds: 0.0,
            },
        }
    }

    pub fn set_config(&mut self, key: impl Into<String>, value: impl ToString) {
        self.config.insert(key.into(), value.to_string());
    }

    pub fn add_value(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn add_check(&mut self, name: impl Into<String>, value: f64, tolerance: f64) -> bool {
        let pass = value.is_finite() && value.abs() <= tolerance;
        self.checks.insert(
            name.into(),
            Check {
                value,
                tolerance,
                pass,
            },
        );
        self.passed &= pass;
        pass
    }

    /// Names of all failing checks, in map order.
    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// CSV rendering with the fixed column order kind,name,value,tolerance,pass.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "name", "value", "tolerance", "pass"])
            .expect("csv header");
        for (name, value) in &self.values {
            w.write_record(["value", name, &format!("{value:.17e}"), "", ""])
                .expect("csv value row");
        }
        for (name, c) in &self.checks {
            w.write_record([
                "check",
                name,
                &format!("{:.17e}", c.value),
                &format!("{:.2e}", c.tolerance),
                if c.pass { "true" } else { "false" },
            ])
            .expect("csv check row");
        }
        String::from_utf8(w.into_inner().expect("csv buffer")).expect("csv utf8")
    }

    /// Write the report to `out` (or stdout when `None`) in the requested
    /// formats. With an output path, CSV goes to the same path with the
    /// extension replaced by `csv`.
    pub fn emit(&self, out: Option<&Path>, emit: Emit) -> std::io::Result<()> {
        let json = matches!(emit, Emit::Json | Emit::Both);
        let csv = matches!(emit, Emit::Csv | Emit::Both);
        match out {
            None => {
                let mut stdout = std::io::stdout().lock();
                if json {
                    writeln!(stdout, "{}", self.to_json())?;
                }
                if csv {
                    write!(stdout, "{}", self.to_csv())?;
                }
            }
            Some(path) => {
                if json {
                    std::fs::write(path.with_extension("json"), self.to_json())?;
                }
                if csv {
                    std::fs::write(path.with_extension("csv"), self.to_csv())?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("ahsolve test", 42, "fix-ur");
        r.set_config("grid", 64);
        r.add_value("nu", 17.479);
        r.add_check("residual", 1e-12, 1e-10);
        r.add_check("defect", 0.5, 1e-6);
        r
    }

    #[test]
    fn checks_drive_pass_state() {
        let r = sample();
        assert!(!r.passed, "one failing check fails the report");
        assert_eq!(r.failures(), vec!["defect"], "failing checks are named");
        assert!(r.checks["residual"].pass, "within-tolerance check passes");
    }

    #[test]
    fn json_is_deterministic_outside_timing() {
        let strip = |r: &Report| {
            let mut v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
            v.as_object_mut().unwrap().remove("timing");
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(
            strip(&sample()),
            strip(&sample()),
            "identical config produces identical JSON outside the timing field"
        );
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["schema"], 1, "schema version is recorded");
        assert_eq!(v["seed"], 42, "seed is recorded");
    }

    #[test]
    fn csv_has_fixed_columns() {
        let text = sample().to_csv();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "kind,name,value,tolerance,pass",
            "column order is part of the format contract"
        );
        assert!(
            text.lines().any(|l| l.starts_with("check,defect,") && l.ends_with("false")),
            "failing check row carries pass = false: {text}"
        );
    }
}
