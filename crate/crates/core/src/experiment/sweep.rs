use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Family, PrivGanSpec};
use super::runner::{run_seed, with_pool, SeedMetrics};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_MEDIANS_FILE: &str = "sweep_medians.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    N,
    Epochs,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweepAxis::Lambda),
            "n" | "N" => Ok(SweepAxis::N),
            "epochs" => Ok(SweepAxis::Epochs),
            other => Err(Error::Config {
                path: "--axis".into(),
                detail: format!("unknown sweep axis `{other}` (expected lambda, N or epochs)"),
            }),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::N => "N",
            SweepAxis::Epochs => "epochs",
        }
    }

    fn key(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "privgan.lambda",
            SweepAxis::N => "privgan.n",
            SweepAxis::Epochs => "train.epochs",
        }
    }

    fn label(self, value: f64) -> String {
        match self {
            SweepAxis::Lambda => format!("{value}"),
            _ => format!("{}", value as usize),
        }
    }

    /// The config with this axis set to `value`, writing into `<output_dir>/<axis>-<value>`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let bad = |detail: String| Error::Config {
            path: self.key().into(),
            detail,
        };
        let mut cfg = base.clone();
        let integral = value.is_finite() && value >= 0.0 && value.fract() == 0.0;
        match self {
            SweepAxis::Lambda | SweepAxis::N => {
                if cfg.family != Family::Privgan {
                    return Err(bad(format!("axis {} needs family = \"privgan\"", self.name())));
                }
                let p = cfg.privgan.get_or_insert_with(|| PrivGanSpec {
                    n: 2,
                    lambda: None,
                    dp_init_epochs: 50,
                    co_train_delay: 100,
                    privacy_mode: Default::default(),
                });
                if self == SweepAxis::Lambda {
                    p.lambda = Some(value);
                } else if integral {
                    p.n = value as usize;
                } else {
                    return Err(bad(format!("N must be an integer, got {value}")));
                }
            }
            SweepAxis::Epochs => {
                if !integral || value < 1.0 {
                    return Err(bad(format!("epochs must be a positive integer, got {value}")));
                }
                cfg.train.epochs = value as usize;
            }
        }
        cfg.output_dir = base.output_dir.join(format!("{}-{}", self.name(), self.label(value)));
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `0.1,1,10`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|e| Error::Config {
                path: "--values".into(),
                detail: format!("`{v}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::Config {
            path: "--values".into(),
            detail: "no values".into(),
        });
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub run_id: String,
    pub value: f64,
    pub seed: u64,
    pub metrics: SeedMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepMedian {
    pub value: f64,
    pub seeds: usize,
    pub metrics: SeedMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub medians: Vec<SweepMedian>,
    pub csv_path: PathBuf,
    pub medians_path: PathBuf,
}

/// Middle value, or the mean of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub(crate) const METRIC_HEADER: &str =
    "whitebox_accuracy,tvd_score,mc_accuracy,downstream_accuracy,avg_entropy,class_diversity";

pub(crate) fn metric_cells(m: &SeedMetrics) -> String {
    [m.whitebox, m.tvd, m.mc, m.downstream, m.avg_entropy, m.class_diversity]
        .iter()
        .map(|v| v.map_or(String::new(), |x| format!("{x:?}")))
        .collect::<Vec<_>>()
        .join(",")
}

fn column_median(rows: &[&SeedMetrics], pick: impl Fn(&SeedMetrics) -> Option<f64>) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(|m| pick(m)).collect();
    median(&v)
}

/// Runs every (value, seed) pair, writing each run under
/// `<output_dir>/<axis>-<value>/seed-<seed>/`, then `sweep.csv` with one row
/// per pair and `sweep_medians.csv` with per-value medians.
pub fn run_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    base.validate()?;
    let data = base.dataset.load()?;
    let configs = values
        .iter()
        .map(|&v| {
            let cfg = axis.apply(base, v)?;
            cfg.validate_for(&data)?;
            let bytes = cfg.to_toml()?.into_bytes();
            Ok((v, cfg, bytes))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|i| base.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let outcomes = with_pool(|| {
        jobs.par_iter()
            .map(|&(i, s)| run_seed(&configs[i].1, &configs[i].2, &data, s))
            .collect::<Result<Vec<_>>>()
    })??;

    let rows: Vec<SweepRow> = jobs
        .iter()
        .zip(outcomes)
        .map(|(&(i, seed), o)| SweepRow {
            run_id: o.manifest.run_id,
            value: configs[i].0,
            seed,
            metrics: o.metrics,
        })
        .collect();
    let medians: Vec<SweepMedian> = configs
        .iter()
        .map(|(v, _, _)| {
            let group: Vec<&SeedMetrics> = rows.iter().filter(|r| r.value == *v).map(|r| &r.metrics).collect();
            SweepMedian {
                value: *v,
                seeds: group.len(),
                metrics: SeedMetrics {
                    whitebox: column_median(&group, |m| m.whitebox),
                    tvd: column_median(&group, |m| m.tvd),
                    mc: column_median(&group, |m| m.mc),
                    downstream: column_median(&group, |m| m.downstream),
                    avg_entropy: column_median(&group, |m| m.avg_entropy),
                    class_diversity: column_median(&group, |m| m.class_diversity),
                },
            }
        })
        .collect();

    let mut csv = format!("run_id,axis,value,seed,{METRIC_HEADER}\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.run_id,
            axis.name(),
            axis.label(r.value),
            r.seed,
            metric_cells(&r.metrics)
        ));
    }
    let mut med = format!("axis,value,seeds,{METRIC_HEADER}\n");
    for m in &medians {
        med.push_str(&format!(
            "{},{},{},{}\n",
            axis.name(),
            axis.label(m.value),
            m.seeds,
            metric_cells(&m.metrics)
        ));
    }
    let csv_path = base.output_dir.join(SWEEP_FILE);
    let medians_path = base.output_dir.join(SWEEP_MEDIANS_FILE);
    write_atomic(&csv_path, csv.as_bytes())?;
    write_atomic(&medians_path, med.as_bytes())?;
    Ok(SweepResult {
        axis,
        rows,
        medians,
        csv_path,
        medians_path,
    })
}
