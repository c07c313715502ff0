//! Run reports: one structured JSON document per run plus delimiter-separated
//! envelope tables for plotting. Reports carry no timestamps or absolute
//! paths, so identical scenario and seed produce byte-identical output.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::algebra::{InverseReport, StructureReport};
use crate::certificates::{
    AnchorConvention, CertificateReport, DichotomyReport, EnvelopeEstimate, EquivalenceReport,
};
use crate::error::Result;
use crate::lyapunov::{LSampleRow, LyapunovReport, RoundtripReport, UniformRoundtripReport};
use crate::rates::RateValidation;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: "trichotomy",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// A knob whose setting changes the verdicts; surfaced rather than resolved.
#[derive(Debug, Clone, Serialize)]
pub struct DiscrepancyFlag {
    pub id: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum CheckOutcome {
    RateAxioms {
        rate: String,
        result: RateValidation,
        passed: bool,
    },
    Structure {
        structure: StructureReport,
        inverses: InverseReport,
        passed: bool,
    },
    Growth {
        report: CertificateReport,
        uniform_constant: Option<f64>,
        passed: bool,
    },
    Trichotomy {
        report: CertificateReport,
        passed: bool,
    },
    Dichotomy {
        report: DichotomyReport,
        passed: bool,
    },
    Equivalence {
        report: EquivalenceReport,
        passed: bool,
    },
    Lyapunov {
        report: LyapunovReport,
        passed: bool,
    },
    Roundtrip {
        report: RoundtripReport,
        passed: bool,
    },
    UniformRoundtrip {
        report: UniformRoundtripReport,
        passed: bool,
    },
    Conformance {
        claim: String,
        expected: String,
        observed: String,
        passed: bool,
    },
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        match self {
            CheckOutcome::RateAxioms { passed, .. }
            | CheckOutcome::Structure { passed, .. }
            | CheckOutcome::Growth { passed, .. }
            | CheckOutcome::Trichotomy { passed, .. }
            | CheckOutcome::Dichotomy { passed, .. }
            | CheckOutcome::Equivalence { passed, .. }
            | CheckOutcome::Lyapunov { passed, .. }
            | CheckOutcome::Roundtrip { passed, .. }
            | CheckOutcome::UniformRoundtrip { passed, .. }
            | CheckOutcome::Conformance { passed, .. } => *passed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub subcommand: String,
    pub seed: u64,
    /// The scenario after applying command-line overrides.
    pub scenario: serde_json::Value,
    pub overrides: Vec<String>,
    pub discrepancy_flags: Vec<DiscrepancyFlag>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl RunReport {
    pub fn finalize(mut self) -> Self {
        self.passed = self.checks.iter().all(CheckOutcome::passed);
        self
    }
}

pub fn write_report(dir: &Path, name: &str, report: &RunReport) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

fn write_table(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One (anchor, raw, hull) table per envelope.
pub fn write_envelope_table(
    dir: &Path,
    name: &str,
    estimate: &EnvelopeEstimate,
) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    write_table(
        &path,
        "anchor,raw,hull",
        estimate
            .anchor_points
            .iter()
            .zip(&estimate.raw_values)
            .zip(&estimate.monotone_hull)
            .map(|((a, r), h)| format!("{a},{r},{h}")),
    )?;
    Ok(path)
}

/// All four envelope tables of a certificate.
pub fn write_certificate_tables(
    dir: &Path,
    prefix: &str,
    report: &CertificateReport,
) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in &report.envelopes {
        let name = format!(
            "{prefix}_{}_{}.csv",
            anchor_slug(report.anchor),
            e.inequality.label()
        );
        out.push(write_envelope_table(dir, &name, e)?);
    }
    Ok(out)
}

fn anchor_slug(anchor: AnchorConvention) -> &'static str {
    match anchor {
        AnchorConvention::AsPrinted => "as-printed",
        AnchorConvention::AllAtS => "all-at-s",
    }
}

/// Per-sample values of the measured function, for plotting.
pub fn write_l_samples_table(dir: &Path, name: &str, rows: &[LSampleRow]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    write_table(
        &path,
        "t,x_id,L_value,converged",
        rows.iter()
            .map(|r| format!("{},{},{},{}", r.t, r.x_id, r.value, r.converged)),
    )?;
    Ok(path)
}

/// Condition-envelope tables of a verification report.
pub fn write_lyapunov_tables(
    dir: &Path,
    prefix: &str,
    report: &LyapunovReport,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    {
        let path = dir.join(format!("{prefix}_l0.csv"));
        write_table(
            &path,
            "anchor,raw,hull",
            report
                .l0
                .times
                .iter()
                .zip(&report.l0.t_raw)
                .zip(&report.l0.t_hull)
                .map(|((a, r), h)| format!("{a},{r},{h}")),
        )?;
        out.push(path);
    }
    for c in &report.conditions {
        let path = dir.join(format!("{prefix}_cond{}.csv", c.index));
        write_table(
            &path,
            "anchor,raw,hull",
            c.anchor_points
                .iter()
                .zip(&c.raw_values)
                .zip(&c.monotone_hull)
                .map(|((a, r), h)| format!("{a},{r},{h}")),
        )?;
        out.push(path);
    }
    out.push(write_l_samples_table(
        dir,
        &format!("{prefix}_samples.csv"),
        &report.l_samples,
    )?);
    Ok(out)
}
