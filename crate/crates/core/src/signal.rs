//! Uplink signal model: binary user symbols, Clarke flat-fading channels,
//! circularly symmetric Gaussian noise and the superposed received vector
//!
//! ```text
//! r(i) = sum_k A_k H_k(i) b_k(i) + n(i)
//! ```

use std::f64::consts::{PI, TAU};
use std::ops::Deref;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result, C64};

/// Sinusoids per fading coefficient in the sum-of-sinusoids generator.
pub const OSCILLATORS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of users `K`.
    pub users: usize,
    /// Transmit antennas per user `N_U`.
    pub antennas_per_user: usize,
    /// Receive antennas at the base station `M`.
    pub receive_antennas: usize,
    /// Per-user amplitude `A_k`.
    pub amplitudes: Vec<f64>,
    /// Noise standard deviation; `sigma^2` is the total complex variance per entry.
    pub sigma: f64,
    /// Normalized Doppler rate `f_d T`.
    pub doppler: f64,
    /// Scale every channel entry by `1/sqrt(M)` when building the received vector.
    pub normalize_channel: bool,
}

impl SystemConfig {
    /// Equal-power users (`A_k = 1`) with the noise level set from `snr_db`.
    pub fn equal_power(
        users: usize,
        antennas_per_user: usize,
        receive_antennas: usize,
        snr_db: f64,
        doppler: f64,
    ) -> Self {
        SystemConfig {
            users,
            antennas_per_user,
            receive_antennas,
            amplitudes: vec![1.0; users],
            sigma: sigma_for_snr(snr_db, antennas_per_user, 1.0),
            doppler,
            normalize_channel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::config("users", "must be at least 1"));
        }
        if self.antennas_per_user == 0 {
            return Err(Error::config("antennas_per_user", "must be at least 1"));
        }
        if self.users * self.antennas_per_user >= self.receive_antennas {
            return Err(Error::config(
                "receive_antennas",
                format!(
                    "users * antennas_per_user = {} must be below receive_antennas = {}",
                    self.users * self.antennas_per_user,
                    self.receive_antennas
                ),
            ));
        }
        if self.amplitudes.len() != self.users {
            return Err(Error::config(
                "amplitudes",
                format!(
                    "expected {} values, got {}",
                    self.users,
                    self.amplitudes.len()
                ),
            ));
        }
        if let Some(a) = self
            .amplitudes
            .iter()
            .find(|a| !(**a > 0.0 && a.is_finite()))
        {
            return Err(Error::config(
                "amplitudes",
                format!("{a} is not a positive finite gain"),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(
                "sigma",
                format!("{} must be finite and >= 0", self.sigma),
            ));
        }
        if !(0.0..0.5).contains(&self.doppler) {
            return Err(Error::config(
                "doppler",
                format!("{} must lie in [0, 0.5)", self.doppler),
            ));
        }
        Ok(())
    }

    /// Number of transmitted streams `K * N_U`.
    pub fn streams(&self) -> usize {
        self.users * self.antennas_per_user
    }
}

/// Noise standard deviation for `SNR = 10 log10(N_U A^2 / sigma^2)`.
pub fn sigma_for_snr(snr_db: f64, antennas_per_user: usize, amplitude: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    (antennas_per_user as f64 * amplitude * amplitude / snr).sqrt()
}

/// One time instant of BPSK symbols for every user and antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    users: usize,
    antennas_per_user: usize,
    symbols: Vec<f64>,
}

impl SymbolFrame {
    pub fn new(users: usize, antennas_per_user: usize, symbols: Vec<f64>) -> Result<Self> {
        if symbols.len() != users * antennas_per_user {
            return Err(Error::Argument(format!(
                "symbol frame needs {} entries, got {}",
                users * antennas_per_user,
                symbols.len()
            )));
        }
        if symbols.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Argument("symbols must be +1 or -1".into()));
        }
        Ok(SymbolFrame {
            users,
            antennas_per_user,
            symbols,
        })
    }

    pub fn get(&self, user: usize, antenna: usize) -> f64 {
        self.symbols[user * self.antennas_per_user + antenna]
    }

    /// Symbols `b_k` of one user.
    pub fn user(&self, user: usize) -> &[f64] {
        let n = self.antennas_per_user;
        &self.symbols[user * n..(user + 1) * n]
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas_per_user(&self) -> usize {
        self.antennas_per_user
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.symbols
    }

    /// Copy with every user except `keep` silenced.
    pub fn only_user(&self, keep: usize) -> SymbolFrameView<'_> {
        SymbolFrameView { frame: self, keep }
    }
}

/// A frame with all but one user zeroed, used to check superposition.
#[derive(Debug, Clone, Copy)]
pub struct SymbolFrameView<'a> {
    frame: &'a SymbolFrame,
    keep: usize,
}

/// i.i.d. equiprobable `+1`/`-1` symbols.
pub fn generate_symbols<R: Rng + ?Sized>(
    rng: &mut R,
    users: usize,
    antennas_per_user: usize,
) -> SymbolFrame {
    let symbols = (0..users * antennas_per_user)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    SymbolFrame {
        users,
        antennas_per_user,
        symbols,
    }
}

/// `M x N_U` channel matrix of one user, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ChannelMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "channel matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(ChannelMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(1.0, 0.0);
        }
        ChannelMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

/// Oscillator parameters of a single fading coefficient.
#[derive(Debug, Clone)]
struct Coefficient {
    /// `cos` of each ray's Doppler angle.
    cos_angle: [f64; OSCILLATORS],
    phase: [f64; OSCILLATORS],
}

impl Coefficient {
    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut cos_angle = [0.0; OSCILLATORS];
        let mut phase = [0.0; OSCILLATORS];
        for (c, p) in cos_angle.iter_mut().zip(phase.iter_mut()) {
            *c = (rng.random::<f64>() * TAU - PI).cos();
            *p = rng.random::<f64>() * TAU;
        }
        Coefficient { cos_angle, phase }
    }

    fn sample(&self, doppler: f64, time: u64) -> C64 {
        let t = time as f64;
        let sum: C64 = self
            .cos_angle
            .iter()
            .zip(&self.phase)
            .map(|(c, p)| C64::from_polar(1.0, TAU * doppler * c * t + p))
            .sum();
        sum / (OSCILLATORS as f64).sqrt()
    }
}

/// Clarke sum-of-sinusoids generator for every `(k, f, n)` channel coefficient.
#[derive(Debug, Clone)]
pub struct FadingState {
    doppler: f64,
    time: u64,
    coefficients: Vec<Coefficient>,
    channels: Vec<ChannelMatrix>,
}

impl FadingState {
    pub fn new<R: Rng + ?Sized>(
        rng: &mut R,
        users: usize,
        receive_antennas: usize,
        antennas_per_user: usize,
        doppler: f64,
    ) -> Self {
        let per_user = receive_antennas * antennas_per_user;
        let coefficients = (0..users * per_user)
            .map(|_| Coefficient::random(rng))
            .collect();
        let mut state = FadingState {
            doppler,
            time: 0,
            coefficients,
            channels: (0..users)
                .map(|_| ChannelMatrix {
                    rows: receive_antennas,
                    cols: antennas_per_user,
                    data: vec![C64::new(0.0, 0.0); per_user],
                })
                .collect(),
        };
        state.refresh();
        state
    }

    fn refresh(&mut self) {
        let (doppler, time) = (self.doppler, self.time);
        let mut coeffs = self.coefficients.iter();
        for h in &mut self.channels {
            for v in &mut h.data {
                *v = coeffs
                    .next()
                    .expect("coefficient per entry")
                    .sample(doppler, time);
            }
        }
    }

    /// Move every coefficient forward by one symbol period.
    pub fn advance(&mut self) {
        if self.doppler == 0.0 {
            self.time += 1;
            return;
        }
        self.time += 1;
        self.refresh();
    }

    pub fn channels(&self) -> &[ChannelMatrix] {
        &self.channels
    }

    pub fn channel(&self, user: usize) -> &ChannelMatrix {
        &self.channels[user]
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn doppler(&self) -> f64 {
        self.doppler
    }
}

/// Circularly symmetric complex Gaussian vector with `E[n n^H] = sigma^2 I`.
pub fn awgn<R: Rng + ?Sized>(rng: &mut R, sigma: f64, len: usize) -> Vec<C64> {
    let s = sigma / 2f64.sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * s, im * s)
        })
        .collect()
}

/// Complex `M`-vector observed at the base station for one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedVector(Vec<C64>);

impl ReceivedVector {
    pub fn new(samples: Vec<C64>) -> Self {
        ReceivedVector(samples)
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }
}

impl Deref for ReceivedVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl From<Vec<C64>> for ReceivedVector {
    fn from(v: Vec<C64>) -> Self {
        ReceivedVector(v)
    }
}

trait UserSymbols {
    fn users(&self) -> usize;
    fn antennas_per_user(&self) -> usize;
    fn symbol(&self, user: usize, antenna: usize) -> f64;
}

impl UserSymbols for SymbolFrame {
    fn users(&self) -> usize {
        self.users
    }
    fn antennas_per_user(&self) -> usize {
        self.antennas_per_user
    }
    fn symbol(&self, user: usize, antenna: usize) -> f64 {
        self.get(user, antenna)
    }
}

impl UserSymbols for SymbolFrameView<'_> {
    fn users(&self) -> usize {
        self.frame.users
    }
    fn antennas_per_user(&self) -> usize {
        self.frame.antennas_per_user
    }
    fn symbol(&self, user: usize, antenna: usize) -> f64 {
        if user == self.keep {
            self.frame.get(user, antenna)
        } else {
            0.0
        }
    }
}

fn superpose(
    frame: &dyn UserSymbols,
    channels: &[ChannelMatrix],
    cfg: &SystemConfig,
    noise: &[C64],
) -> Result<ReceivedVector> {
    let m = cfg.receive_antennas;
    let n_u = cfg.antennas_per_user;
    if frame.users() != cfg.users || frame.antennas_per_user() != n_u {
        return Err(Error::config(
            "symbols",
            format!(
                "frame is {}x{}, configuration expects {}x{}",
                frame.users(),
                frame.antennas_per_user(),
                cfg.users,
                n_u
            ),
        ));
    }
    if channels.len() != cfg.users {
        return Err(Error::config(
            "channels",
            format!(
                "expected {} channel matrices, got {}",
                cfg.users,
                channels.len()
            ),
        ));
    }
    if let Some(h) = channels.iter().find(|h| h.rows != m || h.cols != n_u) {
        return Err(Error::config(
            "channels",
            format!(
                "channel matrix is {}x{}, expected {m}x{n_u}",
                h.rows, h.cols
            ),
        ));
    }
    if noise.len() != m {
        return Err(Error::config(
            "noise",
            format!("noise has {} entries, expected {m}", noise.len()),
        ));
    }
    if cfg.amplitudes.len() != cfg.users {
        return Err(Error::config(
            "amplitudes",
            "one amplitude per user required",
        ));
    }
    let norm = if cfg.normalize_channel {
        1.0 / (m as f64).sqrt()
    } else {
        1.0
    };
    let mut r = noise.to_vec();
    for (k, h) in channels.iter().enumerate() {
        let gain = cfg.amplitudes[k] * norm;
        for (f, out) in r.iter_mut().enumerate() {
            let row = &h.data[f * n_u..(f + 1) * n_u];
            let mut acc = C64::new(0.0, 0.0);
            for (n, hv) in row.iter().enumerate() {
                acc += hv * frame.symbol(k, n);
            }
            *out += acc * gain;
        }
    }
    Ok(ReceivedVector(r))
}

/// `r = sum_k A_k H_k b_k + n`.
pub fn received_vector(
    frame: &SymbolFrame,
    channels: &[ChannelMatrix],
    cfg: &SystemConfig,
    noise: &[C64],
) -> Result<ReceivedVector> {
    superpose(frame, channels, cfg, noise)
}

/// Noiseless contribution of a single user.
pub fn user_contribution(
    frame: &SymbolFrame,
    user: usize,
    channels: &[ChannelMatrix],
    cfg: &SystemConfig,
) -> Result<ReceivedVector> {
    let zero = vec![C64::new(0.0, 0.0); cfg.receive_antennas];
    superpose(&frame.only_user(user), channels, cfg, &zero)
}
