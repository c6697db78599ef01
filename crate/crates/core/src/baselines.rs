//! Full-rank reference receivers: complex LMS and full-rank MBER stochastic
//! gradient. Both start from `w = [1, 0, ..., 0]`.

use std::f64::consts::PI;

use crate::mber::StepSizeController;
use crate::receiver::{Receiver, ReceiverParams, StepOutcome, FULL_LMS, FULL_MBER};
use crate::{hard_decision, Error, Result, C64};

fn unit_impulse(len: usize) -> Vec<C64> {
    let mut w = vec![C64::new(0.0, 0.0); len];
    w[0] = C64::new(1.0, 0.0);
    w
}

fn output(w: &[C64], r: &[C64]) -> C64 {
    w.iter().zip(r).map(|(a, b)| a.conj() * b).sum()
}

/// `e = b - w^H r`, `w <- w + mu conj(e) r`.
pub fn lms_step(w: &[C64], r: &[C64], b: f64, mu: f64) -> Vec<C64> {
    let e = C64::new(b, 0.0) - output(w, r);
    let g = e.conj() * mu;
    w.iter().zip(r).map(|(wi, ri)| wi + ri * g).collect()
}

/// Full-rank MBER update with `g = ||w||^2 = 1`, followed by rescaling `w` to unit norm.
pub fn mber_fullrank_step(w: &[C64], r: &[C64], b: f64, mu: f64, rho: f64) -> Vec<C64> {
    let re_x = output(w, r).re;
    let step = mu * (-re_x * re_x / (2.0 * rho * rho)).exp() * hard_decision(b)
        / (2.0 * (2.0 * PI).sqrt() * rho);
    let mut next: Vec<C64> = w
        .iter()
        .zip(r)
        .map(|(wi, ri)| wi + (ri - wi * re_x) * step)
        .collect();
    let norm = next.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        for v in &mut next {
            *v /= norm;
        }
        next
    } else {
        unit_impulse(w.len())
    }
}

fn check_len(w: &[C64], r: &[C64]) -> Result<()> {
    if w.len() != r.len() {
        return Err(Error::Argument(format!(
            "received vector has {} samples, filter has {}",
            r.len(),
            w.len()
        )));
    }
    Ok(())
}

fn controller(params: &ReceiverParams, fixed: f64) -> StepSizeController {
    if params.adaptive_baselines {
        StepSizeController::new(params.step_rule)
    } else {
        StepSizeController::fixed(fixed)
    }
}

#[derive(Debug, Clone)]
pub struct LmsReceiver {
    w: Vec<C64>,
    mu: StepSizeController,
    rho: f64,
}

impl LmsReceiver {
    pub fn new(receive_antennas: usize, mu: f64) -> Self {
        LmsReceiver {
            w: unit_impulse(receive_antennas),
            mu: StepSizeController::fixed(mu),
            rho: 1.0,
        }
    }

    pub fn from_params(p: &ReceiverParams) -> Result<Self> {
        if p.receive_antennas == 0 {
            return Err(Error::config("receive_antennas", "must be at least 1"));
        }
        Ok(LmsReceiver {
            w: unit_impulse(p.receive_antennas),
            mu: controller(p, p.mu_lms),
            rho: p.rho,
        })
    }

    pub fn weights(&self) -> &[C64] {
        &self.w
    }
}

impl Receiver for LmsReceiver {
    fn name(&self) -> &str {
        FULL_LMS
    }

    fn step(&mut self, r: &[C64], training: Option<f64>) -> Result<StepOutcome> {
        check_len(&self.w, r)?;
        let y = output(&self.w, r);
        let decision = hard_decision(y.re);
        self.w = lms_step(&self.w, r, training.unwrap_or(decision), self.mu.mu());
        self.mu.adapt(y, decision, self.rho);
        Ok(StepOutcome {
            decision,
            branch: None,
            step_sizes: vec![self.mu.mu()],
        })
    }
}

#[derive(Debug, Clone)]
pub struct FullRankMberReceiver {
    w: Vec<C64>,
    mu: StepSizeController,
    rho: f64,
}

impl FullRankMberReceiver {
    pub fn new(receive_antennas: usize, mu: f64, rho: f64) -> Self {
        FullRankMberReceiver {
            w: unit_impulse(receive_antennas),
            mu: StepSizeController::fixed(mu),
            rho,
        }
    }

    pub fn from_params(p: &ReceiverParams) -> Result<Self> {
        if p.receive_antennas == 0 {
            return Err(Error::config("receive_antennas", "must be at least 1"));
        }
        if !(p.rho > 0.0 && p.rho.is_finite()) {
            return Err(Error::config("rho", "must be positive"));
        }
        Ok(FullRankMberReceiver {
            w: unit_impulse(p.receive_antennas),
            mu: controller(p, p.mu_mber),
            rho: p.rho,
        })
    }

    pub fn weights(&self) -> &[C64] {
        &self.w
    }
}

impl Receiver for FullRankMberReceiver {
    fn name(&self) -> &str {
        FULL_MBER
    }

    fn step(&mut self, r: &[C64], training: Option<f64>) -> Result<StepOutcome> {
        check_len(&self.w, r)?;
        let y = output(&self.w, r);
        let decision = hard_decision(y.re);
        self.w = mber_fullrank_step(
            &self.w,
            r,
            training.unwrap_or(decision),
            self.mu.mu(),
            self.rho,
        );
        self.mu.adapt(y, decision, self.rho);
        Ok(StepOutcome {
            decision,
            branch: None,
            step_sizes: vec![self.mu.mu()],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jidf::{BranchState, DecimationPattern, Interpolator};
    use crate::mber::{q_function, update_w};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

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

    #[test]
    fn lms_zero_error_is_fixed_point() {
        let w = vec![C64::new(0.5, 0.0), C64::new(0.0, 0.0)];
        let r = vec![C64::new(2.0, 0.0), C64::new(3.0, -1.0)];
        // w^H r = 1
        assert_eq!(lms_step(&w, &r, 1.0, 0.3), w);
    }

    #[test]
    fn full_rank_mber_matches_identity_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = 6;
        let branch = BranchState::new(
            0,
            Interpolator::unit_impulse(1),
            DecimationPattern::from_offsets((0..m).collect(), m).unwrap(),
        )
        .unwrap();
        for _ in 0..50 {
            let mut w = random_vec(&mut rng, m);
            let n = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            w.iter_mut().for_each(|v| *v /= n);
            let r = random_vec(&mut rng, m);
            let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let via_branch = update_w(&w, &r, b, &branch, 0.05, 0.4);
            let direct = mber_fullrank_step(&w, &r, b, 0.05, 0.4);
            let norm = via_branch.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for (a, d) in via_branch.iter().zip(&direct) {
                assert!((a / norm - d).norm() < 1e-10);
            }
        }
        let w = unit_impulse(m);
        let r = random_vec(&mut rng, m);
        assert_eq!(mber_fullrank_step(&w, &r, 1.0, 0.0, 0.4), w);
    }

    /// Wiener solution of a static single-user channel; LMS decisions reach the
    /// same error rate.
    #[test]
    fn lms_reaches_wiener_error_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let m = 4;
        let h = random_vec(&mut rng, m);
        let sigma = 1.2;
        let draw = |rng: &mut ChaCha8Rng| {
            let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let r: Vec<C64> = h
                .iter()
                .map(|hv| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    hv * b + C64::new(re, im) * (sigma / 2f64.sqrt())
                })
                .collect();
            (b, r)
        };
        let mut rx = LmsReceiver::new(m, 0.01);
        for _ in 0..10_000 {
            let (b, r) = draw(&mut rng);
            rx.step(&r, Some(b)).unwrap();
        }
        // Wiener w = (h h^H + sigma^2 I)^-1 h is parallel to h; its decision
        // statistic Re[h^H r] = ||h||^2 b + N(0, ||h||^2 sigma^2 / 2)
        let hn = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let bound = q_function(hn / (sigma / 2f64.sqrt()));
        let trials = 20_000;
        let mut errors = 0;
        for _ in 0..trials {
            let (b, r) = draw(&mut rng);
            if hard_decision(output(rx.weights(), &r).re) != b {
                errors += 1;
            }
        }
        let ber = errors as f64 / trials as f64;
        let tol = 4.0 * (bound * (1.0 - bound) / trials as f64).sqrt() + 0.01 * bound;
        assert!(
            (ber - bound).abs() < tol + 0.005,
            "ber {ber} vs wiener {bound}"
        );
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut rx = LmsReceiver::new(4, 0.1);
        assert!(rx.step(&[C64::new(1.0, 0.0); 3], None).is_err());
    }
}
