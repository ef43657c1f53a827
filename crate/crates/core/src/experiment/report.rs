use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::runner::{
    sha256_hex, AttackReport, RunManifest, SeedMetrics, ATTACK_REPORT_FILE, CONFIG_FILE, HISTOGRAM_FILE, MANIFEST_FILE,
    UTILITY_REPORT_FILE,
};
use super::sweep::{metric_cells, METRIC_HEADER};
use crate::error::{Error, Result};
use crate::evalmetrics::UtilityReport;
use crate::fsutil::{read_to_string, write_atomic};

pub const METRICS_FILE: &str = "metrics.csv";

/// A verified run directory.
#[derive(Clone, Debug)]
pub struct VerifiedRun {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub attack: Option<AttackReport>,
    pub utility: Option<UtilityReport>,
    pub metrics: SeedMetrics,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads a seed directory's manifest and checks the config hash and every
/// recorded artifact hash against the files on disk.
pub fn verify_run(dir: &Path) -> Result<VerifiedRun> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: RunManifest = serde_json::from_str(&read_to_string(&manifest_path)?)?;
    let config_path = dir.join(CONFIG_FILE);
    let config_hash = sha256_hex(&read_bytes(&config_path)?);
    if config_hash != manifest.config_hash {
        return Err(Error::Integrity {
            path: manifest_path,
            detail: format!(
                "config hash {} does not match {CONFIG_FILE} ({config_hash})",
                manifest.config_hash
            ),
        });
    }
    for (name, artifact) in &manifest.artifacts {
        let path = dir.join(&artifact.path);
        let actual = sha256_hex(&read_bytes(&path)?);
        if actual != artifact.sha256 {
            return Err(Error::Integrity {
                path,
                detail: format!("artifact `{name}` hash {actual} differs from the manifest"),
            });
        }
    }
    let load = |file: &str| -> Result<Option<String>> {
        if manifest.artifacts.values().any(|a| a.path == file) {
            read_to_string(&dir.join(file)).map(Some)
        } else {
            Ok(None)
        }
    };
    let attack: Option<AttackReport> = load(ATTACK_REPORT_FILE)?
        .map(|t| serde_json::from_str(&t))
        .transpose()?;
    let utility: Option<UtilityReport> = load(UTILITY_REPORT_FILE)?
        .map(|t| serde_json::from_str(&t))
        .transpose()?;
    let metrics = match &attack {
        Some(a) => SeedMetrics::from_reports(a, utility.as_ref()),
        None => SeedMetrics::default(),
    };
    Ok(VerifiedRun {
        dir: dir.to_path_buf(),
        manifest,
        attack,
        utility,
        metrics,
    })
}

/// Seed directories under `dir` (or `dir` itself), found by their manifests, in path order.
pub fn find_runs(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        if dir.join(MANIFEST_FILE).is_file() {
            out.push(dir.to_path_buf());
            return Ok(());
        }
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        entries.sort();
        for e in entries {
            walk(&e, out)?;
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, &mut out)?;
    if out.is_empty() {
        return Err(Error::io(
            dir.join(MANIFEST_FILE),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no run manifest found"),
        ));
    }
    Ok(out)
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Verifies every run under `dir`, writes `<dir>/metrics.csv` and returns a
/// plain-text summary.
pub fn report(dir: &Path) -> Result<(String, Vec<VerifiedRun>)> {
    let runs = find_runs(dir)?
        .iter()
        .map(|d| verify_run(d))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = format!("run_id,dir,seed,{METRIC_HEADER}\n");
    let mut out = String::new();
    let mut last_config = None;
    for run in &runs {
        let rel = run.dir.strip_prefix(dir).unwrap_or(&run.dir).display().to_string();
        let rel = if rel.is_empty() { ".".to_string() } else { rel };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            run.manifest.run_id,
            rel,
            run.manifest.seed,
            metric_cells(&run.metrics)
        ));
        if last_config.as_ref() != Some(&run.manifest.config_hash) {
            let text = read_to_string(&run.dir.join(CONFIG_FILE))?;
            let _ = writeln!(out, "== config {} ({rel}) ==", &run.manifest.config_hash[..12]);
            for line in text.lines() {
                let _ = writeln!(out, "  {line}");
            }
            last_config = Some(run.manifest.config_hash.clone());
        }
        let m = &run.metrics;
        let _ = writeln!(
            out,
            "run {} [{}] seed {}: whitebox {} | tvd {} | mc {} | downstream {} | entropy {} | diversity {}",
            run.manifest.run_id,
            run.manifest.family.name(),
            run.manifest.seed,
            show(m.whitebox),
            show(m.tvd),
            show(m.mc),
            show(m.downstream),
            show(m.avg_entropy),
            show(m.class_diversity),
        );
        if !run.manifest.dropped_indices.is_empty() {
            let _ = writeln!(out, "  partition dropped rows {:?}", run.manifest.dropped_indices);
        }
        if run.manifest.artifacts.values().any(|a| a.path == HISTOGRAM_FILE) {
            let _ = writeln!(out, "  histogram: {}", run.dir.join(HISTOGRAM_FILE).display());
        }
    }
    let metrics_path = dir.join(METRICS_FILE);
    write_atomic(&metrics_path, csv.as_bytes())?;
    let _ = writeln!(out, "metrics table: {}", metrics_path.display());
    Ok((out, runs))
}
