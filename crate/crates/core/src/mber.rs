//! Minimum-BER adaptation of the JIDF receiver.
//!
//! The cost of branch `l` is the kernel estimate of the error probability
//!
//! ```text
//! Pe(l) = Q( sign(b) Re[x_l] / (rho sqrt(g)) ),   x_l = w^H r_l,   g = ||S_D,l w||^2
//! ```
//!
//! Gradients are Wirtinger derivatives with respect to `conj(w)` and
//! `conj(p_l)`. The stochastic-gradient updates use the constrained form that
//! assumes `g = 1`, which the receiver restores after every change by scaling
//! the interpolators.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

use crate::jidf::{g_value, BranchState, Interpolator};
use crate::receiver::{Receiver, StepOutcome};
use crate::{hard_decision, Error, Result, C64};

/// Below this projected energy a branch is treated as degenerate.
pub const DEGENERATE_ENERGY: f64 = 1e-12;

/// Standard normal tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn check_energy(g: f64) -> Result<()> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(Error::DegenerateSubspace(g))
    }
}

/// Single-point Gaussian kernel density of the decision statistic, centred at
/// `sign(b) Re[x_bar]` with variance `g rho^2`.
pub fn kernel_density(x_tilde: f64, x_bar: C64, b: f64, g: f64, rho: f64) -> Result<f64> {
    check_energy(g)?;
    if rho <= 0.0 {
        return Err(Error::Argument(format!(
            "kernel radius {rho} must be positive"
        )));
    }
    let var = g * rho * rho;
    let centre = hard_decision(b) * x_bar.re;
    Ok((-(x_tilde - centre).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
}

/// `Pe = Q( sign(b) Re[x_bar] / (rho sqrt(g)) )`.
pub fn branch_error_prob(x_bar: C64, b: f64, g: f64, rho: f64) -> Result<f64> {
    check_energy(g)?;
    Ok(q_function(hard_decision(b) * x_bar.re / (rho * g.sqrt())))
}

/// Branch quantities for one received vector.
#[derive(Debug, Clone)]
pub struct BranchOutput {
    /// Projected vector `r_bar = S_D^H r`.
    pub projected: Vec<C64>,
    /// Filter output `w^H r_bar`.
    pub output: C64,
    /// `g = w^H S_D^H S_D w`.
    pub energy: f64,
}

pub fn evaluate_branch(branch: &BranchState, w: &[C64], r: &[C64]) -> BranchOutput {
    let projected = branch.project(r);
    let output = inner(w, &projected);
    BranchOutput {
        projected,
        output,
        energy: g_value(branch, w),
    }
}

/// `a^H b`.
fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Error probability of `branch` for filter `w` on `(r, b)`.
pub fn error_prob(branch: &BranchState, w: &[C64], r: &[C64], b: f64, rho: f64) -> Result<f64> {
    let out = evaluate_branch(branch, w, r);
    branch_error_prob(out.output, b, out.energy, rho)
}

/// Common scalar `-exp(-Re[x]^2 / (2 rho^2 g)) sign(b) / (2 sqrt(2 pi) rho)`.
fn gradient_scale(re_x: f64, b: f64, g: f64, rho: f64) -> f64 {
    -(-re_x * re_x / (2.0 * rho * rho * g)).exp() * hard_decision(b)
        / (2.0 * (2.0 * PI).sqrt() * rho)
}

/// `dPe / d conj(w)` for a general (unnormalised) branch.
pub fn grad_w(r: &[C64], b: f64, w: &[C64], branch: &BranchState, rho: f64) -> Result<Vec<C64>> {
    let out = evaluate_branch(branch, w, r);
    let g = out.energy;
    check_energy(g)?;
    let re_x = out.output.re;
    let scale = gradient_scale(re_x, b, g, rho);
    let gram = branch.energy_grad_filter(w);
    let (a, c) = (1.0 / g.sqrt(), re_x / (g * g.sqrt()));
    Ok(out
        .projected
        .iter()
        .zip(&gram)
        .map(|(rb, gw)| (rb * a - gw * c) * scale)
        .collect())
}

/// `dPe / d conj(p_l)`, stacked over the taps.
pub fn grad_p(r: &[C64], b: f64, w: &[C64], branch: &BranchState, rho: f64) -> Result<Vec<C64>> {
    let out = evaluate_branch(branch, w, r);
    let g = out.energy;
    check_energy(g)?;
    let re_x = out.output.re;
    let scale = gradient_scale(re_x, b, g, rho);
    let u = branch.tap_input(r, w);
    let dg = branch.energy_grad_taps(w);
    let (a, c) = (1.0 / g.sqrt(), re_x / (g * g.sqrt()));
    Ok(u.iter()
        .zip(&dg)
        .map(|(uj, dj)| (uj * a - dj * c) * scale)
        .collect())
}

/// Constrained filter update, valid when `g = 1`:
/// `w + mu kappa sign(b) (r_bar - Re[x] S^H S w)` with `kappa = exp(-Re[x]^2/2rho^2) / (2 sqrt(2pi) rho)`.
pub fn update_w(w: &[C64], r: &[C64], b: f64, branch: &BranchState, mu: f64, rho: f64) -> Vec<C64> {
    let out = evaluate_branch(branch, w, r);
    let re_x = out.output.re;
    let step = -mu * gradient_scale(re_x, b, 1.0, rho);
    let gram = branch.energy_grad_filter(w);
    w.iter()
        .zip(out.projected.iter().zip(&gram))
        .map(|(wd, (rb, gw))| wd + (rb - gw * re_x) * step)
        .collect()
}

/// Constrained interpolator update, valid when `g = 1`.
pub fn update_p(
    branch: &BranchState,
    r: &[C64],
    b: f64,
    w: &[C64],
    mu: f64,
    rho: f64,
) -> Interpolator {
    let out = evaluate_branch(branch, w, r);
    let re_x = out.output.re;
    let scale = gradient_scale(re_x, b, 1.0, rho);
    let u = branch.tap_input(r, w);
    let dg = branch.energy_grad_taps(w);
    let mut p = branch.interpolator().clone();
    for (pj, (uj, dj)) in p.taps_mut().iter_mut().zip(u.iter().zip(&dg)) {
        *pj -= (uj - dj * re_x) * scale * mu;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Scaled,
    /// `g` had collapsed; the interpolator was reset to a scaled unit impulse.
    Reset,
}

/// Scale the branch interpolator so that `g(p, w) = 1`.
pub fn normalize_p(branch: &mut BranchState, w: &[C64]) -> Result<Normalization> {
    let g = g_value(branch, w);
    let mut outcome = Normalization::Scaled;
    let g = if g < DEGENERATE_ENERGY || !g.is_finite() {
        branch.set_interpolator(Interpolator::unit_impulse(branch.taps()))?;
        outcome = Normalization::Reset;
        g_value(branch, w)
    } else {
        g
    };
    check_energy(g)?;
    branch.interpolator_mut().scale(1.0 / g.sqrt());
    Ok(outcome)
}

/// Index of the smallest error probability; ties go to the lowest index.
pub fn select_branch(error_probs: &[f64]) -> usize {
    let mut best = 0;
    for (l, pe) in error_probs.iter().enumerate().skip(1) {
        if *pe < error_probs[best] {
            best = l;
        }
    }
    best
}

/// Constants of the adaptive step-size recursion
/// `mu <- clamp(delta1 mu + delta2 Q(sign(b_hat) Re[x] / rho), mu_minus, mu_plus)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub delta1: f64,
    pub delta2: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Starting value, clamped into the bounds.
    pub mu_init: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            delta1: 0.99,
            delta2: 1e-4,
            mu_plus: 1e-2,
            mu_minus: 1e-5,
            mu_init: 1e-2,
        }
    }
}

impl StepRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 > 0.0 && self.delta1 <= 1.0) {
            return Err(Error::config(
                "delta1",
                format!("{} must lie in (0, 1]", self.delta1),
            ));
        }
        if !(self.delta2 >= 0.0 && self.delta2.is_finite()) {
            return Err(Error::config(
                "delta2",
                format!("{} must be finite and >= 0", self.delta2),
            ));
        }
        if !(self.mu_minus >= 0.0 && self.mu_minus <= self.mu_plus && self.mu_plus.is_finite()) {
            return Err(Error::config(
                "mu_minus",
                format!(
                    "need 0 <= mu_minus <= mu_plus, got {} and {}",
                    self.mu_minus, self.mu_plus
                ),
            ));
        }
        if !(self.mu_init.is_finite() && self.mu_init >= 0.0) {
            return Err(Error::config("mu_init", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeController {
    mu: f64,
    rule: StepRule,
}

impl StepSizeController {
    pub fn new(rule: StepRule) -> Self {
        StepSizeController {
            mu: rule.mu_init.clamp(rule.mu_minus, rule.mu_plus),
            rule,
        }
    }

    /// Fixed step size; adaptation becomes a no-op.
    pub fn fixed(mu: f64) -> Self {
        StepSizeController {
            mu,
            rule: StepRule {
                delta1: 1.0,
                delta2: 0.0,
                mu_plus: mu,
                mu_minus: mu,
                mu_init: mu,
            },
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rule(&self) -> &StepRule {
        &self.rule
    }

    pub fn adapt(&mut self, x_bar: C64, b_hat: f64, rho: f64) {
        let StepRule {
            delta1,
            delta2,
            mu_plus,
            mu_minus,
            ..
        } = self.rule;
        let q = q_function(hard_decision(b_hat) * x_bar.re / rho);
        self.mu = (delta1 * self.mu + delta2 * q).clamp(mu_minus, mu_plus);
    }
}

/// Shared reduced-rank receive filter `w_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRankFilter(Vec<C64>);

impl ReducedRankFilter {
    pub fn unit_impulse(rank: usize) -> Self {
        let mut w = vec![C64::new(0.0, 0.0); rank];
        w[0] = C64::new(1.0, 0.0);
        ReducedRankFilter(w)
    }

    pub fn new(w: Vec<C64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("filter must be nonempty and finite".into()));
        }
        Ok(ReducedRankFilter(w))
    }

    pub fn weights(&self) -> &[C64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JidfConfig {
    /// Rank `D`.
    pub rank: usize,
    /// Interpolator length `I`.
    pub taps: usize,
    /// Number of branches `B`.
    pub branches: usize,
    /// Kernel radius `rho`.
    pub rho: f64,
    pub step: StepRule,
    pub dd_reference: DdReference,
    pub timing: DecisionTiming,
}

/// Symbol reference used by each branch in decision-directed mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DdReference {
    /// Branch `l` adapts toward its own decision.
    #[default]
    PerBranch,
    /// All branches adapt toward the receiver's a-priori decision.
    Common,
}

/// Which decision a step reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionTiming {
    /// Output of the filters as they stand before the symbol is used.
    #[default]
    BeforeUpdate,
    /// Output of the selected branch after the interpolator updates.
    AfterUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    DecisionDirected,
}

/// Multi-branch JIDF receiver with MBER adaptation of the interpolators and
/// the shared reduced-rank filter.
#[derive(Debug, Clone)]
pub struct JidfReceiver {
    branches: Vec<BranchState>,
    filter: ReducedRankFilter,
    mu_w: StepSizeController,
    mu_p: Vec<StepSizeController>,
    rho: f64,
    mode: Mode,
    resets: usize,
    dd_reference: DdReference,
    timing: DecisionTiming,
}

impl JidfReceiver {
    pub fn new(receive_antennas: usize, cfg: &JidfConfig) -> Result<Self> {
        if cfg.branches == 0 {
            return Err(Error::config("branches", "must be at least 1"));
        }
        if cfg.taps == 0 || cfg.taps >= receive_antennas {
            return Err(Error::config(
                "taps",
                format!("{} must lie in 1..{receive_antennas}", cfg.taps),
            ));
        }
        if cfg.rank == 0 || cfg.rank > receive_antennas {
            return Err(Error::config(
                "rank",
                format!("{} must lie in 1..={receive_antennas}", cfg.rank),
            ));
        }
        if !(cfg.rho > 0.0 && cfg.rho.is_finite()) {
            return Err(Error::config(
                "rho",
                format!("{} must be positive", cfg.rho),
            ));
        }
        cfg.step.validate()?;
        let filter = ReducedRankFilter::unit_impulse(cfg.rank);
        let mut branches = Vec::with_capacity(cfg.branches);
        for l in 0..cfg.branches {
            let mut b = BranchState::deterministic(l, receive_antennas, cfg.rank, cfg.taps)
                .map_err(|e| Error::config("branches", e.to_string()))?;
            normalize_p(&mut b, filter.weights())?;
            branches.push(b);
        }
        Ok(JidfReceiver {
            branches,
            filter,
            mu_w: StepSizeController::new(cfg.step),
            mu_p: vec![StepSizeController::new(cfg.step); cfg.branches],
            rho: cfg.rho,
            mode: Mode::Training,
            resets: 0,
            dd_reference: cfg.dd_reference,
            timing: cfg.timing,
        })
    }

    pub fn branches(&self) -> &[BranchState] {
        &self.branches
    }

    pub fn filter(&self) -> &ReducedRankFilter {
        &self.filter
    }

    pub fn mu_w(&self) -> f64 {
        self.mu_w.mu()
    }

    pub fn mu_p(&self) -> Vec<f64> {
        self.mu_p.iter().map(|c| c.mu()).collect()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of degenerate-branch resets so far.
    pub fn resets(&self) -> usize {
        self.resets
    }

    /// Largest `|g(p_l, w) - 1|` over the branches.
    pub fn constraint_residual(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| (g_value(b, self.filter.weights()) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Per-branch error probabilities for the current filters, using `b`
    /// when known and each branch's own decision otherwise.
    pub fn error_probs(&self, r: &[C64], b: Option<f64>) -> Result<Vec<f64>> {
        let w = self.filter.weights();
        self.branches
            .iter()
            .map(|branch| {
                let out = evaluate_branch(branch, w, r);
                let bl = b.unwrap_or_else(|| hard_decision(out.output.re));
                branch_error_prob(out.output, bl, out.energy, self.rho)
            })
            .collect()
    }

    fn normalize(&mut self, l: usize) -> Result<()> {
        if normalize_p(&mut self.branches[l], self.filter.weights())? == Normalization::Reset {
            self.resets += 1;
        }
        Ok(())
    }

    /// One symbol of the adaptive algorithm. Returns the hard decision, the
    /// selected branch and the current step sizes `[mu_w, mu_p...]`.
    pub fn process(&mut self, r: &[C64], training: Option<f64>) -> Result<StepOutcome> {
        if r.len() != self.branches[0].input_len() {
            return Err(Error::Argument(format!(
                "received vector has {} samples, receiver expects {}",
                r.len(),
                self.branches[0].input_len()
            )));
        }
        self.mode = if training.is_some() {
            Mode::Training
        } else {
            Mode::DecisionDirected
        };
        let rho = self.rho;

        // decision of the filters as they stand, selecting on confidence only
        let w = self.filter.weights();
        let prior = self
            .branches
            .iter()
            .map(|b| {
                let o = evaluate_branch(b, w, r);
                branch_error_prob(o.output, hard_decision(o.output.re), o.energy, rho)
                    .map(|pe| (pe, o.output.re))
            })
            .collect::<Result<Vec<_>>>()?;
        let prior_pe: Vec<f64> = prior.iter().map(|p| p.0).collect();
        let prior_decision = hard_decision(prior[select_branch(&prior_pe)].1);
        let dd_reference = self.dd_reference;
        let reference = |own: f64| match (training, dd_reference) {
            (Some(b), _) => b,
            (None, DdReference::Common) => prior_decision,
            (None, DdReference::PerBranch) => hard_decision(own),
        };

        // interpolator updates, then rescale so g = 1
        for l in 0..self.branches.len() {
            let branch = &self.branches[l];
            let w = self.filter.weights();
            let bl = reference(evaluate_branch(branch, w, r).output.re);
            let p = update_p(branch, r, bl, w, self.mu_p[l].mu(), rho);
            if p.taps().iter().all(|t| t.is_finite()) {
                self.branches[l].set_interpolator(p)?;
            }
            self.normalize(l)?;
        }

        // branch selection
        let w = self.filter.weights();
        let outputs: Vec<BranchOutput> = self
            .branches
            .iter()
            .map(|b| evaluate_branch(b, w, r))
            .collect();
        let probs = outputs
            .iter()
            .map(|o| branch_error_prob(o.output, reference(o.output.re), o.energy, rho))
            .collect::<Result<Vec<_>>>()?;
        let best = select_branch(&probs);
        let decision = hard_decision(outputs[best].output.re);

        // filter update from the selected branch
        let b = training.unwrap_or(decision);
        let updated = update_w(w, r, b, &self.branches[best], self.mu_w.mu(), rho);
        let energy: f64 = updated.iter().map(|v| v.norm_sqr()).sum();
        self.filter = if updated.iter().all(|v| v.is_finite()) && energy > DEGENERATE_ENERGY {
            ReducedRankFilter(updated)
        } else {
            self.resets += 1;
            ReducedRankFilter::unit_impulse(self.filter.0.len())
        };

        self.mu_w.adapt(outputs[best].output, decision, rho);
        for (ctrl, o) in self.mu_p.iter_mut().zip(&outputs) {
            ctrl.adapt(o.output, hard_decision(o.output.re), rho);
        }

        // restore g = 1 for the new filter
        for l in 0..self.branches.len() {
            self.normalize(l)?;
        }

        let mut step_sizes = Vec::with_capacity(1 + self.mu_p.len());
        step_sizes.push(self.mu_w.mu());
        step_sizes.extend(self.mu_p.iter().map(|c| c.mu()));
        Ok(StepOutcome {
            decision: match self.timing {
                DecisionTiming::BeforeUpdate => prior_decision,
                DecisionTiming::AfterUpdate => decision,
            },
            branch: Some(best),
            step_sizes,
        })
    }
}

impl Receiver for JidfReceiver {
    fn name(&self) -> &str {
        crate::receiver::JIDF_MBER
    }

    fn step(&mut self, r: &[C64], training: Option<f64>) -> Result<StepOutcome> {
        self.process(r, training)
    }
}
