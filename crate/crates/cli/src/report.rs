//! Verification reports: per-check records, a deterministic structured TOML
//! rendering (byte-identical for a fixed manifest and seed, floats at 17
//! significant digits), and a fixed-width human table.

use std::fmt::Write as _;

/// One executed check.
#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub id: String,
    pub label: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub engine: String,
    pub manifest: String,
    pub suite: String,
    pub seed: u64,
    pub points: usize,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    pub fn failed(&self) -> usize {
        self.checks.len() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    /// Records sorted by check id (the output order contract).
    fn sorted_checks(&self) -> Vec<&CheckRecord> {
        let mut v: Vec<&CheckRecord> = self.checks.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    /// Structured rendering: valid TOML with a fixed field order and floats
    /// printed with 17 significant digits (round-trip exact).
    pub fn to_structured(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[report]");
        let _ = writeln!(out, "engine = {}", toml_str(&self.engine));
        let _ = writeln!(out, "manifest = {}", toml_str(&self.manifest));
        let _ = writeln!(out, "suite = {}", toml_str(&self.suite));
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "points = {}", self.points);
        let _ = writeln!(out);
        let _ = writeln!(out, "[summary]");
        let _ = writeln!(out, "total = {}", self.checks.len());
        let _ = writeln!(out, "passed = {}", self.passed());
        let _ = writeln!(out, "failed = {}", self.failed());
        let _ = writeln!(
            out,
            "status = {}",
            toml_str(if self.all_pass() { "pass" } else { "fail" })
        );
        for c in self.sorted_checks() {
            let _ = writeln!(out);
            let _ = writeln!(out, "[[check]]");
            let _ = writeln!(out, "id = {}", toml_str(&c.id));
            let _ = writeln!(out, "label = {}", toml_str(&c.label));
            let _ = writeln!(out, "samples = {}", c.samples);
            let _ = writeln!(out, "max_error = {}", toml_float(c.max_error));
            let _ = writeln!(out, "tolerance = {}", toml_float(c.tolerance));
            let _ = writeln!(out, "pass = {}", c.pass);
            if let Some(note) = &c.note {
                let _ = writeln!(out, "note = {}", toml_str(note));
            }
        }
        out
    }

    /// Fixed-width human table (3 significant digits).
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<26} {:<46} {:>7} {:>10} {:>9} {:>6}",
            "check", "label", "samples", "max-err", "tol", "status"
        );
        let _ = writeln!(out, "{}", "-".repeat(110));
        for c in self.sorted_checks() {
            let _ = writeln!(
                out,
                "{:<26} {:<46} {:>7} {:>10} {:>9} {:>6}",
                clip(&c.id, 26),
                clip(&c.label, 46),
                c.samples,
                human_float(c.max_error),
                human_float(c.tolerance),
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(out, "{}", "-".repeat(110));
        let _ = writeln!(
            out,
            "{} checks: {} passed, {} failed  [{}]",
            self.checks.len(),
            self.passed(),
            self.failed(),
            if self.all_pass() { "PASS" } else { "FAIL" }
        );
        out
    }
}

fn clip(s: &str, width: usize) -> String {
    let count = s.chars().count();
    if count <= width {
        s.to_string()
    } else {
        let kept: String = s.chars().take(width.saturating_sub(3)).collect();
        format!("{kept}...")
    }
}

fn toml_str(s: &str) -> String {
    format!("{:?}", s)
}

/// 17 significant digits, round-trip exact for f64; infinities spelled as
/// TOML's `inf`.
fn toml_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v.is_nan() {
        return "nan".into();
    }
    format!("{v:.16e}")
}

fn human_float(v: f64) -> String {
    if v.is_infinite() {
        return "inf".into();
    }
    format!("{v:.2e}")
}
