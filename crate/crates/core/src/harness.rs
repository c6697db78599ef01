//! Seeded Monte Carlo engine.
//!
//! A trial draws one channel realisation, runs `training + decision_directed`
//! symbols through every configured receiver on the same received vectors and
//! records the desired-stream errors. Trial `t` always uses random stream `t`
//! of the base seed, so results do not depend on execution order or thread
//! count, and every grid point sees the same stream (common random numbers).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::mber::{DdReference, DecisionTiming, StepRule};
use crate::receiver::{ReceiverParams, ReceiverRegistry, FULL_LMS, FULL_MBER, JIDF_MBER};
use crate::signal::{
    awgn, generate_symbols, received_vector, sigma_for_snr, FadingState, SystemConfig,
};
use crate::{Error, Result};

/// 95% two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Symbol,
    Users,
    Snr,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Symbol => "symbol",
            Axis::Users => "users",
            Axis::Snr => "snr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    Users(Vec<usize>),
    Snr(Vec<f64>),
}

impl Sweep {
    pub fn axis(&self) -> Axis {
        match self {
            Sweep::Users(_) => Axis::Users,
            Sweep::Snr(_) => Axis::Snr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub users: usize,
    pub antennas_per_user: usize,
    pub receive_antennas: usize,
    pub snr_db: f64,
    /// Overrides the SNR-derived noise level when set.
    pub sigma: Option<f64>,
    pub doppler: f64,
    pub normalize_channel: bool,
    pub receivers: Vec<String>,
    pub rank: usize,
    pub taps: usize,
    pub branches: usize,
    pub training: usize,
    pub decision_directed: usize,
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
    pub desired_user: usize,
    pub desired_antenna: usize,
    pub step_rule: StepRule,
    pub mu_lms: f64,
    pub mu_mber: f64,
    /// Step size quoted for the other reduced-rank baselines; kept for the record.
    pub mu_reduced_rank: f64,
    pub adaptive_baselines: bool,
    pub dd_reference: DdReference,
    pub timing: DecisionTiming,
    /// `rho = rho_scale * sigma`, or `rho_noiseless` when `sigma = 0`.
    pub rho_scale: f64,
    pub rho_noiseless: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ExperimentConfig {
    /// Full-scale configuration: `M = 40`, `N_U = 2`, `K = 4`, `D = I = 8`, `B = 4`.
    pub fn paper() -> Self {
        ExperimentConfig {
            users: 4,
            antennas_per_user: 2,
            receive_antennas: 40,
            snr_db: 15.0,
            sigma: None,
            doppler: 1e-5,
            normalize_channel: false,
            receivers: vec![JIDF_MBER.into(), FULL_LMS.into(), FULL_MBER.into()],
            rank: 8,
            taps: 8,
            branches: 4,
            training: 200,
            decision_directed: 1000,
            sweep: Sweep::Users(vec![2, 4, 6, 8, 10, 12, 14, 16, 18]),
            trials: 200,
            seed: 1,
            desired_user: 0,
            desired_antenna: 0,
            step_rule: StepRule::default(),
            mu_lms: 0.085,
            mu_mber: 0.05,
            mu_reduced_rank: 0.035,
            adaptive_baselines: false,
            dd_reference: DdReference::PerBranch,
            timing: DecisionTiming::BeforeUpdate,
            rho_scale: 2.0,
            rho_noiseless: 1.0,
        }
    }

    /// Desk-scale configuration: `M = 16`, `K = 2`, `D = I = 4`, `B = 2`.
    pub fn desk() -> Self {
        ExperimentConfig {
            users: 2,
            receive_antennas: 16,
            rank: 4,
            taps: 4,
            branches: 2,
            sweep: Sweep::Users(vec![1, 2, 3, 4]),
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::Unknown {
                kind: "preset",
                name: other.to_owned(),
                known: PRESETS.join(", "),
            }),
        }
    }

    pub fn total_symbols(&self) -> usize {
        self.training + self.decision_directed
    }

    /// First index and length of the steady-state window: the final quarter of
    /// the decision-directed symbols (of all symbols if there are none).
    pub fn steady_window(&self) -> (usize, usize) {
        let span = if self.decision_directed > 0 {
            self.decision_directed
        } else {
            self.total_symbols()
        };
        let len = (span / 4).max(1);
        (self.total_symbols() - len, len)
    }

    pub fn grid(&self) -> Vec<GridPoint> {
        match &self.sweep {
            Sweep::Users(ks) => ks
                .iter()
                .map(|&k| GridPoint {
                    x: k as f64,
                    users: k,
                    snr_db: self.snr_db,
                })
                .collect(),
            Sweep::Snr(snrs) => snrs
                .iter()
                .map(|&s| GridPoint {
                    x: s,
                    users: self.users,
                    snr_db: s,
                })
                .collect(),
        }
    }

    pub fn base_point(&self) -> GridPoint {
        GridPoint {
            x: match self.sweep {
                Sweep::Users(_) => self.users as f64,
                Sweep::Snr(_) => self.snr_db,
            },
            users: self.users,
            snr_db: self.snr_db,
        }
    }

    pub fn system(&self, point: &GridPoint) -> SystemConfig {
        SystemConfig {
            users: point.users,
            antennas_per_user: self.antennas_per_user,
            receive_antennas: self.receive_antennas,
            amplitudes: vec![1.0; point.users],
            sigma: self
                .sigma
                .unwrap_or_else(|| sigma_for_snr(point.snr_db, self.antennas_per_user, 1.0)),
            doppler: self.doppler,
            normalize_channel: self.normalize_channel,
        }
    }

    pub fn rho(&self, sigma: f64) -> f64 {
        if sigma > 0.0 {
            self.rho_scale * sigma
        } else {
            self.rho_noiseless
        }
    }

    pub fn receiver_params(&self, system: &SystemConfig) -> ReceiverParams {
        ReceiverParams {
            receive_antennas: self.receive_antennas,
            rank: self.rank,
            taps: self.taps,
            branches: self.branches,
            rho: self.rho(system.sigma),
            step_rule: self.step_rule,
            mu_lms: self.mu_lms,
            mu_mber: self.mu_mber,
            adaptive_baselines: self.adaptive_baselines,
            dd_reference: self.dd_reference,
            timing: self.timing,
        }
    }

    /// Checks every grid point and receiver before any simulation runs.
    pub fn validate(&self, registry: &ReceiverRegistry) -> Result<()> {
        if self.total_symbols() == 0 {
            return Err(Error::config(
                "training",
                "training + decision_directed must be at least 1",
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.receivers.is_empty() {
            return Err(Error::config("receivers", "at least one receiver required"));
        }
        if self.rank == 0 || self.rank > self.receive_antennas {
            return Err(Error::config(
                "rank",
                format!(
                    "D = {} must lie in 1..=M = {}",
                    self.rank, self.receive_antennas
                ),
            ));
        }
        if self.taps == 0 || self.taps >= self.receive_antennas {
            return Err(Error::config(
                "taps",
                format!(
                    "I = {} must lie in 1..M = {}",
                    self.taps, self.receive_antennas
                ),
            ));
        }
        if self.desired_antenna >= self.antennas_per_user {
            return Err(Error::config(
                "desired_antenna",
                "must be below antennas_per_user",
            ));
        }
        if !(self.rho_scale > 0.0 && self.rho_scale.is_finite()) {
            return Err(Error::config("rho_scale", "must be positive"));
        }
        if !(self.rho_noiseless > 0.0 && self.rho_noiseless.is_finite()) {
            return Err(Error::config("rho_noiseless", "must be positive"));
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config("sigma", "must be finite and >= 0"));
            }
        }
        let grid = self.grid();
        if grid.is_empty() {
            return Err(Error::config("sweep", "grid has no points"));
        }
        for point in grid.iter().chain(std::iter::once(&self.base_point())) {
            if self.desired_user >= point.users {
                return Err(Error::config(
                    "desired_user",
                    format!("must be below K = {}", point.users),
                ));
            }
            let system = self.system(point);
            system.validate()?;
            let params = self.receiver_params(&system);
            if !(params.rho > 0.0 && params.rho.is_finite()) {
                return Err(Error::config(
                    "sigma",
                    format!("kernel radius {} is not usable", params.rho),
                ));
            }
            for name in &self.receivers {
                registry.create(name, &params)?;
            }
        }
        Ok(())
    }
}

pub const PRESETS: [&str; 2] = ["paper", "desk"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub users: usize,
    pub snr_db: f64,
}

/// Per-symbol trace of one receiver over one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub receiver: String,
    pub errors: Vec<bool>,
    pub branches: Vec<Option<usize>>,
    pub step_sizes: Vec<Vec<f64>>,
}

impl TrialRecord {
    pub fn error_count(&self, range: std::ops::Range<usize>) -> usize {
        self.errors[range].iter().filter(|e| **e).count()
    }
}

/// Random generator of trial `trial`: stream `trial` of the base seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs one trial at `point` for every configured receiver on shared received vectors.
pub fn run_trial(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    registry: &ReceiverRegistry,
    trial: u64,
) -> Result<Vec<TrialRecord>> {
    let system = cfg.system(point);
    system.validate()?;
    let params = cfg.receiver_params(&system);
    let mut receivers = cfg
        .receivers
        .iter()
        .map(|name| registry.create(name, &params))
        .collect::<Result<Vec<_>>>()?;

    let mut root = trial_rng(cfg.seed, trial);
    let mut channel_rng = ChaCha8Rng::seed_from_u64(root.random());
    let mut symbol_rng = ChaCha8Rng::seed_from_u64(root.random());
    let mut noise_rng = ChaCha8Rng::seed_from_u64(root.random());

    let (k, m, n_u) = (
        system.users,
        system.receive_antennas,
        system.antennas_per_user,
    );
    let mut fading = FadingState::new(&mut channel_rng, k, m, n_u, system.doppler);
    let total = cfg.total_symbols();
    let mut records: Vec<TrialRecord> = cfg
        .receivers
        .iter()
        .map(|name| TrialRecord {
            receiver: name.clone(),
            errors: Vec::with_capacity(total),
            branches: Vec::with_capacity(total),
            step_sizes: Vec::with_capacity(total),
        })
        .collect();

    for i in 0..total {
        let frame = generate_symbols(&mut symbol_rng, k, n_u);
        let noise = awgn(&mut noise_rng, system.sigma, m);
        let r = received_vector(&frame, fading.channels(), &system, &noise)?;
        let desired = frame.get(cfg.desired_user, cfg.desired_antenna);
        let training = (i < cfg.training).then_some(desired);
        for (rx, rec) in receivers.iter_mut().zip(&mut records) {
            let out = rx.step(&r, training)?;
            rec.errors.push(out.decision != desired);
            rec.branches.push(out.branch);
            rec.step_sizes.push(out.step_sizes);
        }
        fading.advance();
    }
    Ok(records)
}

/// Per-symbol error counts of one receiver, summed over trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorTally {
    pub per_symbol: Vec<u64>,
    pub trials: u64,
}

impl ErrorTally {
    fn zero(len: usize) -> Self {
        ErrorTally {
            per_symbol: vec![0; len],
            trials: 0,
        }
    }

    fn from_record(rec: &TrialRecord) -> Self {
        ErrorTally {
            per_symbol: rec.errors.iter().map(|e| *e as u64).collect(),
            trials: 1,
        }
    }

    fn merge(mut self, other: &ErrorTally) -> Self {
        for (a, b) in self.per_symbol.iter_mut().zip(&other.per_symbol) {
            *a += b;
        }
        self.trials += other.trials;
        self
    }

    pub fn errors_in(&self, range: std::ops::Range<usize>) -> u64 {
        self.per_symbol[range].iter().sum()
    }

    /// Mean BER over a symbol window, with its binomial 95% half-width.
    pub fn window_ber(&self, range: std::ops::Range<usize>) -> (f64, f64) {
        let n = (range.len() as u64 * self.trials) as f64;
        let p = self.errors_in(range) as f64 / n;
        (p, binomial_halfwidth(p, n))
    }
}

pub fn binomial_halfwidth(p: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return f64::NAN;
    }
    Z95 * (p * (1.0 - p) / n).sqrt()
}

/// Runs all trials at one grid point and sums errors per receiver.
pub fn run_point(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    registry: &ReceiverRegistry,
) -> Result<Vec<ErrorTally>> {
    let total = cfg.total_symbols();
    let zero = || vec![ErrorTally::zero(total); cfg.receivers.len()];
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            run_trial(cfg, point, registry, t)
                .map(|recs| recs.iter().map(ErrorTally::from_record).collect::<Vec<_>>())
        })
        .try_reduce(zero, |a, b| {
            Ok(a.into_iter().zip(&b).map(|(x, y)| x.merge(y)).collect())
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub x: f64,
    pub ber: f64,
    pub ci_halfwidth: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub receiver: String,
    pub axis: Axis,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    pub fn bers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ber).collect()
    }
}

/// BER against symbol index (1-based), averaged over trials.
pub fn convergence_curve(receiver: &str, tally: &ErrorTally) -> BerCurve {
    let n = tally.trials as f64;
    BerCurve {
        receiver: receiver.to_owned(),
        axis: Axis::Symbol,
        points: tally
            .per_symbol
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let p = *e as f64 / n;
                BerPoint {
                    x: (i + 1) as f64,
                    ber: p,
                    ci_halfwidth: binomial_halfwidth(p, n),
                    trials: tally.trials,
                }
            })
            .collect(),
    }
}

/// Steady-state BER of one receiver at each grid point.
pub fn ber_curve(
    cfg: &ExperimentConfig,
    receiver: &str,
    points: &[(GridPoint, ErrorTally)],
) -> BerCurve {
    let (start, len) = cfg.steady_window();
    BerCurve {
        receiver: receiver.to_owned(),
        axis: cfg.sweep.axis(),
        points: points
            .iter()
            .map(|(pt, tally)| {
                let (ber, ci) = tally.window_ber(start..start + len);
                BerPoint {
                    x: pt.x,
                    ber,
                    ci_halfwidth: ci,
                    trials: tally.trials,
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Per receiver, BER against symbol index at the base configuration.
    pub convergence: Vec<BerCurve>,
    /// Per receiver, steady-state BER across the sweep.
    pub sweep: Vec<BerCurve>,
    /// Raw tallies of the base configuration, in receiver order.
    pub base_tallies: Vec<ErrorTally>,
}

/// Runs the base point and every sweep point on a pool of `threads` workers
/// (`0` lets the pool pick).
pub fn run_experiment(
    cfg: &ExperimentConfig,
    registry: &ReceiverRegistry,
    threads: usize,
) -> Result<ExperimentResult> {
    cfg.validate(registry)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    pool.install(|| {
        let base = cfg.base_point();
        let grid = cfg.grid();
        let mut results = Vec::with_capacity(grid.len());
        let mut base_tallies = None;
        for point in &grid {
            let tallies = run_point(cfg, point, registry)?;
            if point.users == base.users && point.snr_db == base.snr_db && base_tallies.is_none() {
                base_tallies = Some(tallies.clone());
            }
            results.push((*point, tallies));
        }
        let base_tallies = match base_tallies {
            Some(t) => t,
            None => run_point(cfg, &base, registry)?,
        };
        let convergence = cfg
            .receivers
            .iter()
            .zip(&base_tallies)
            .map(|(name, t)| convergence_curve(name, t))
            .collect();
        let sweep = cfg
            .receivers
            .iter()
            .enumerate()
            .map(|(idx, name)| {
                let pts: Vec<(GridPoint, ErrorTally)> =
                    results.iter().map(|(p, t)| (*p, t[idx].clone())).collect();
                ber_curve(cfg, name, &pts)
            })
            .collect();
        Ok(ExperimentResult {
            convergence,
            sweep,
            base_tallies,
        })
    })
}
