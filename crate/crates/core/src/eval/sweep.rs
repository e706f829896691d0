use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, MetricsReport, Stat};
use crate::advisor::{Advisor, AdvisorError, CostSpec};
use crate::data::Dataset;
use crate::trainer::{TrainingPanel, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub variant: Variant,
    /// Training repetition index.
    pub repetition: usize,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub alphas: Vec<f64>,
    pub variants: Vec<Variant>,
    /// In grid order: alpha, then variant, then repetition.
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub variant: Variant,
    pub value_added: f64,
    pub se: f64,
    pub advising_rate: f64,
    pub repetitions: usize,
}

/// Run `task(alpha_index, alpha, variant, repetition)` over the full grid on
/// at most `workers` threads. Output order never depends on scheduling.
pub fn run_grid<E, F>(
    alphas: &[f64],
    variants: &[Variant],
    repetitions: usize,
    workers: Option<usize>,
    task: F,
) -> Result<SweepResult, E>
where
    E: Send + From<EvalError>,
    F: Fn(usize, f64, Variant, usize) -> Result<MetricsReport, E> + Sync,
{
    if alphas.is_empty() || variants.is_empty() || repetitions == 0 {
        return Err(EvalError::InvalidSpec("sweep grid is empty".into()).into());
    }
    let mut grid = Vec::new();
    for (ai, &a) in alphas.iter().enumerate() {
        for &v in variants {
            for rep in 0..repetitions {
                grid.push((ai, a, v, rep));
            }
        }
    }
    let run = || -> Result<Vec<SweepPoint>, E> {
        grid.par_iter()
            .map(|&(ai, alpha, variant, repetition)| {
                Ok(SweepPoint {
                    alpha,
                    variant,
                    repetition,
                    report: task(ai, alpha, variant, repetition)?,
                })
            })
            .collect()
    };
    let points = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| EvalError::InvalidSpec(e.to_string()).into())?
            .install(run)?,
        None => run()?,
    };
    Ok(SweepResult {
        alphas: alphas.to_vec(),
        variants: variants.to_vec(),
        points,
    })
}

impl SweepResult {
    /// Value added per (alpha, variant), averaged over training repetitions.
    pub fn curve(&self) -> Vec<CurvePoint> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &variant in &self.variants {
                let pts: Vec<&SweepPoint> = self
                    .points
                    .iter()
                    .filter(|p| p.alpha == alpha && p.variant == variant)
                    .collect();
                let va: Vec<f64> = pts.iter().map(|p| p.report.overall.value_added.mean).collect();
                let rate: Vec<f64> = pts.iter().map(|p| p.report.overall.advising_rate.mean).collect();
                let s = Stat::of(&va);
                out.push(CurvePoint {
                    alpha,
                    variant,
                    value_added: s.mean,
                    se: s.se,
                    advising_rate: Stat::of(&rate).mean,
                    repetitions: pts.len(),
                });
            }
        }
        out
    }

    pub fn write_curve_csv(&self, path: &Path) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_path(path)?;
        for c in self.curve() {
            w.serialize(c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Advising rate of a fixed rule set on a fixed panel as the advisor's
/// believed alpha varies.
pub fn advising_rate_curve(
    advisor: &Advisor,
    dataset: &Dataset,
    panel: &TrainingPanel,
    alphas: &[f64],
) -> Result<Vec<(f64, f64)>, AdvisorError> {
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let a = Advisor {
            costs: CostSpec {
                alpha,
                ..advisor.costs
            },
            ..advisor.clone()
        };
        let mut advised = 0;
        for i in 0..panel.len() {
            let advice = a.advise(&dataset.rows[panel.rows[i]].values, panel.h[i], panel.c_h[i])?;
            advised += usize::from(advice.contradicts(panel.h[i]));
        }
        out.push((alpha, advised as f64 / panel.len().max(1) as f64));
    }
    Ok(out)
}
