//! Aggregated evaluation results and their file forms.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DeletionCurve;
use crate::transforms::Domain;

/// Averages for one attribution method on one dataset slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub domain: Domain,
    /// Maps that went into the averages.
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faithfulness_auc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<DeletionCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    pub methods: Vec<MethodSummary>,
}

pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, report)
        .map_err(|e| Error::InvalidFormat(format!("report serialization failed: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Long-form CSV, one metric per row: `method,domain,metric,value`.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "method,domain,metric,value")?;
    for m in &report.methods {
        let mut row = |metric: &str, value: f64| -> Result<()> {
            writeln!(out, "{},{},{metric},{value}", m.method, m.domain)?;
            Ok(())
        };
        if let Some(v) = m.rank_accuracy {
            row("rank_accuracy", v)?;
        }
        if let Some(v) = m.faithfulness_auc {
            row("faithfulness_auc", v)?;
        }
        if let Some(v) = m.complexity {
            row("complexity", v)?;
        }
        if let Some(c) = &m.curve {
            row("baseline_score", c.baseline_score)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Curve as `fraction,score` rows, anchored at the fraction-0 baseline.
pub fn write_curve_csv(path: &Path, curve: &DeletionCurve) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "fraction,score")?;
    writeln!(out, "0,{}", curve.baseline_score)?;
    for (f, s) in curve.fractions.iter().zip(&curve.scores) {
        writeln!(out, "{f},{s}")?;
    }
    out.flush()?;
    Ok(())
}
