//! Central finite-difference check of the analytic MBER gradients.
//!
//! The reference derivative only evaluates the error probability of a
//! branch; it shares none of the gradient code. For a real function of a
//! complex vector, `df/dconj(z_k) = (df/da_k + i df/db_k) / 2` with
//! `z_k = a_k + i b_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jidf::{BranchState, Interpolator};
use crate::mber::{error_prob, grad_p, grad_w};
use crate::{Result, C64};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

fn central_wirtinger(len: usize, f: impl Fn(usize, C64) -> Result<f64>) -> Result<Vec<C64>> {
    (0..len)
        .map(|k| {
            let h = FD_STEP;
            let da = (f(k, C64::new(h, 0.0))? - f(k, C64::new(-h, 0.0))?) / (2.0 * h);
            let db = (f(k, C64::new(0.0, h))? - f(k, C64::new(0.0, -h))?) / (2.0 * h);
            Ok(C64::new(da, db) * 0.5)
        })
        .collect()
}

/// Finite-difference `dPe/dconj(w)`.
pub fn fd_grad_w(branch: &BranchState, w: &[C64], r: &[C64], b: f64, rho: f64) -> Result<Vec<C64>> {
    central_wirtinger(w.len(), |k, delta| {
        let mut moved = w.to_vec();
        moved[k] += delta;
        error_prob(branch, &moved, r, b, rho)
    })
}

/// Finite-difference `dPe/dconj(p)`.
pub fn fd_grad_p(branch: &BranchState, w: &[C64], r: &[C64], b: f64, rho: f64) -> Result<Vec<C64>> {
    let taps = branch.interpolator().taps().to_vec();
    central_wirtinger(taps.len(), |k, delta| {
        let mut moved = taps.clone();
        moved[k] += delta;
        let mut br = branch.clone();
        br.set_interpolator(Interpolator::new(moved)?)?;
        error_prob(&br, w, r, b, rho)
    })
}

/// `||a - b|| / ||b||`.
pub fn relative_error(analytic: &[C64], reference: &[C64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let norm: f64 = reference.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub instances: usize,
    pub receive_antennas: usize,
    pub rank: usize,
    pub taps: usize,
    pub branches: usize,
    pub rho: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            instances: 100,
            receive_antennas: 8,
            rank: 3,
            taps: 2,
            branches: 2,
            rho: 1.0,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub instances: usize,
    pub max_rel_error_w: f64,
    pub max_rel_error_p: f64,
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| {
            C64::new(
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            )
        })
        .collect()
}

/// Random instance: branch `l` of `B` with random taps, random filter,
/// received vector and symbol.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    cfg: &GradCheckConfig,
) -> Result<(BranchState, Vec<C64>, Vec<C64>, f64)> {
    let l = rng.random_range(0..cfg.branches);
    let mut branch = BranchState::deterministic(l, cfg.receive_antennas, cfg.rank, cfg.taps)?;
    branch.set_interpolator(Interpolator::new(random_vec(rng, cfg.taps))?)?;
    let w = random_vec(rng, cfg.rank);
    let r = random_vec(rng, cfg.receive_antennas);
    let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
    Ok((branch, w, r, b))
}

pub fn run_gradcheck(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport {
        instances: cfg.instances,
        max_rel_error_w: 0.0,
        max_rel_error_p: 0.0,
    };
    for _ in 0..cfg.instances {
        let (branch, w, r, b) = random_instance(&mut rng, cfg)?;
        let ew = relative_error(
            &grad_w(&r, b, &w, &branch, cfg.rho)?,
            &fd_grad_w(&branch, &w, &r, b, cfg.rho)?,
        );
        let ep = relative_error(
            &grad_p(&r, b, &w, &branch, cfg.rho)?,
            &fd_grad_p(&branch, &w, &r, b, cfg.rho)?,
        );
        report.max_rel_error_w = report.max_rel_error_w.max(ew);
        report.max_rel_error_p = report.max_rel_error_p.max(ep);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let rep = run_gradcheck(&GradCheckConfig::default()).unwrap();
        assert!(rep.max_rel_error_w < 1e-5, "{rep:?}");
        assert!(rep.max_rel_error_p < 1e-5, "{rep:?}");
    }

    #[test]
    fn overlapping_rows_still_exact() {
        let cfg = GradCheckConfig {
            instances: 30,
            receive_antennas: 40,
            rank: 8,
            taps: 8,
            branches: 4,
            rho: 3.0,
            seed: 5,
        };
        let rep = run_gradcheck(&cfg).unwrap();
        assert!(
            rep.max_rel_error_w < 1e-5 && rep.max_rel_error_p < 1e-5,
            "{rep:?}"
        );
    }
}
