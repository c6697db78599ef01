//! CSV and manifest output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mberjidf::complexity::{psi_sum_bound, ComplexityParams, ComplexityRegistry};
use mberjidf::harness::{run_experiment, Axis, BerCurve, ExperimentConfig};
use mberjidf::receiver::ReceiverRegistry;

use crate::config::render;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.cfg";
pub const COMPLEXITY_FILE: &str = "complexity.csv";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub version: &'static str,
    pub duration: Duration,
    /// Written files, manifest last.
    pub files: Vec<PathBuf>,
}

fn format_x(axis: Axis, x: f64) -> String {
    match axis {
        Axis::Symbol | Axis::Users => format!("{}", x as u64),
        Axis::Snr => x.to_string(),
    }
}

/// `x,ber,ci_halfwidth,trials` table of one curve.
pub fn curve_csv(curve: &BerCurve) -> String {
    let mut out = String::from("x,ber,ci_halfwidth,trials\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_x(curve.axis, p.x),
            p.ber,
            p.ci_halfwidth,
            p.trials
        );
    }
    out
}

/// Operation counts of every registered algorithm at the configured
/// dimensions, with the `psi_sum` upper bound `I * B * D`.
pub fn complexity_csv(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let (m, d, i, b) = (
        cfg.receive_antennas as u64,
        cfg.rank as u64,
        cfg.taps as u64,
        cfg.branches as u64,
    );
    let params = ComplexityParams {
        psi_sum: psi_sum_bound(d, i, b),
        ..ComplexityParams::bounded(m, d, i, b)
    };
    let registry = ComplexityRegistry::builtin();
    let mut out = String::from("algorithm,mults,adds\n");
    for label in registry.labels() {
        let c = registry.count(label, &params)?;
        let _ = writeln!(out, "{label},{},{}", c.mults, c.adds);
    }
    Ok(out)
}

pub fn convergence_file(receiver: &str) -> String {
    format!("convergence_{receiver}.csv")
}

pub fn sweep_file(axis: Axis, receiver: &str) -> String {
    format!("ber_vs_{}_{receiver}.csv", axis.as_str())
}

/// Manifest text: the full config plus `#` metadata lines that parsing ignores.
pub fn manifest_text(cfg: &ExperimentConfig, duration: Duration, files: &[PathBuf]) -> String {
    let mut out = format!("# mberjidf {VERSION}\n");
    let _ = writeln!(
        out,
        "# snr convention: SNR = 10 log10(N_U A^2 / sigma^2), A = 1"
    );
    let _ = writeln!(out, "# wall_clock_s = {:.3}", duration.as_secs_f64());
    for f in files {
        let _ = writeln!(out, "# output = {}", f.display());
    }
    out.push_str(&render(cfg));
    out
}

/// Tracks files written under one directory and deletes them unless committed.
pub struct OutputGuard {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputGuard {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.files)
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Writes `complexity.csv` alone.
pub fn export_complexity(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf, CliError> {
    let csv = complexity_csv(cfg)?;
    let mut guard = OutputGuard::new(out)?;
    let path = guard.write(COMPLEXITY_FILE, &csv)?;
    guard.commit();
    Ok(path)
}

/// Runs the experiment and writes one CSV per curve, the complexity table and
/// the manifest. On failure nothing written by this call is left behind.
pub fn run_and_export(
    cfg: &ExperimentConfig,
    out: &Path,
    threads: usize,
) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let complexity = complexity_csv(cfg)?;
    let result = run_experiment(cfg, &ReceiverRegistry::builtin(), threads)?;

    let mut guard = OutputGuard::new(out)?;
    for curve in &result.convergence {
        guard.write(&convergence_file(&curve.receiver), &curve_csv(curve))?;
    }
    for curve in &result.sweep {
        guard.write(&sweep_file(curve.axis, &curve.receiver), &curve_csv(curve))?;
    }
    guard.write(COMPLEXITY_FILE, &complexity)?;
    let duration = start.elapsed();
    let manifest = manifest_text(cfg, duration, guard.files());
    guard.write(MANIFEST_FILE, &manifest)?;
    Ok(RunManifest {
        config: cfg.clone(),
        seed: cfg.seed,
        version: VERSION,
        duration,
        files: guard.commit(),
    })
}
