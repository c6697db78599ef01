//! Flat `key = value` configuration files.
//!
//! A file lists any subset of the keys in [`KEYS`]; `#` starts a comment.
//! Values are resolved in three layers: preset, then file, then flags.

use std::str::FromStr;

use mberjidf::harness::{ExperimentConfig, Sweep};
use mberjidf::mber::{DdReference, DecisionTiming};
use mberjidf::receiver::ReceiverRegistry;

use crate::CliError;

/// Every recognised key, in manifest order. `preset` is only read from files.
pub const KEYS: [&str; 32] = [
    "users",
    "antennas_per_user",
    "receive_antennas",
    "snr_db",
    "sigma",
    "doppler",
    "normalize_channel",
    "receivers",
    "rank",
    "taps",
    "branches",
    "training",
    "decision_directed",
    "sweep",
    "trials",
    "seed",
    "desired_user",
    "desired_antenna",
    "delta1",
    "delta2",
    "mu_plus",
    "mu_minus",
    "mu_init",
    "mu_lms",
    "mu_mber",
    "mu_reduced_rank",
    "adaptive_baselines",
    "dd_reference",
    "decision_timing",
    "rho_scale",
    "rho_noiseless",
    "preset",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| CliError::value(key, format!("{value:?}: {e}")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let v: f64 = parse(key, value)?;
    if !v.is_finite() {
        return Err(CliError::value(key, format!("{value:?} is not finite")));
    }
    Ok(v)
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_sweep(value: &str) -> Result<Sweep, CliError> {
    let (axis, list) = value.split_once(':').ok_or_else(|| {
        CliError::value(
            "sweep",
            format!("{value:?}: expected users:<list> or snr:<list>"),
        )
    })?;
    let sweep = match axis.trim() {
        "users" => Sweep::Users(parse_list("sweep", list)?),
        "snr" => {
            let v: Vec<f64> = parse_list("sweep", list)?;
            if v.iter().any(|s| !s.is_finite()) {
                return Err(CliError::value("sweep", "SNR values must be finite"));
            }
            Sweep::Snr(v)
        }
        other => {
            return Err(CliError::value(
                "sweep",
                format!("unknown axis {other:?} (users, snr)"),
            ))
        }
    };
    Ok(sweep)
}

fn sweep_string(sweep: &Sweep) -> String {
    match sweep {
        Sweep::Users(k) => format!("users:{}", join(k)),
        Sweep::Snr(s) => format!("snr:{}", join(s)),
    }
}

fn dd_reference_str(r: DdReference) -> &'static str {
    match r {
        DdReference::PerBranch => "per-branch",
        DdReference::Common => "common",
    }
}

fn timing_str(t: DecisionTiming) -> &'static str {
    match t {
        DecisionTiming::BeforeUpdate => "before-update",
        DecisionTiming::AfterUpdate => "after-update",
    }
}

/// Assigns one key. `preset` is not accepted here.
pub fn set_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), CliError> {
    let value = value.trim();
    match key {
        "users" => cfg.users = parse(key, value)?,
        "antennas_per_user" => cfg.antennas_per_user = parse(key, value)?,
        "receive_antennas" => cfg.receive_antennas = parse(key, value)?,
        "snr_db" => cfg.snr_db = parse_f64(key, value)?,
        "sigma" => {
            cfg.sigma = match value {
                "auto" => None,
                v => Some(parse_f64(key, v)?),
            }
        }
        "doppler" => cfg.doppler = parse_f64(key, value)?,
        "normalize_channel" => cfg.normalize_channel = parse(key, value)?,
        "receivers" => {
            cfg.receivers = value
                .split(',')
                .map(|s| s.trim().to_owned())
                .filter(|s| !s.is_empty())
                .collect()
        }
        "rank" => cfg.rank = parse(key, value)?,
        "taps" => cfg.taps = parse(key, value)?,
        "branches" => cfg.branches = parse(key, value)?,
        "training" => cfg.training = parse(key, value)?,
        "decision_directed" => cfg.decision_directed = parse(key, value)?,
        "sweep" => cfg.sweep = parse_sweep(value)?,
        "trials" => cfg.trials = parse(key, value)?,
        "seed" => cfg.seed = parse(key, value)?,
        "desired_user" => cfg.desired_user = parse(key, value)?,
        "desired_antenna" => cfg.desired_antenna = parse(key, value)?,
        "delta1" => cfg.step_rule.delta1 = parse_f64(key, value)?,
        "delta2" => cfg.step_rule.delta2 = parse_f64(key, value)?,
        "mu_plus" => cfg.step_rule.mu_plus = parse_f64(key, value)?,
        "mu_minus" => cfg.step_rule.mu_minus = parse_f64(key, value)?,
        "mu_init" => cfg.step_rule.mu_init = parse_f64(key, value)?,
        "mu_lms" => cfg.mu_lms = parse_f64(key, value)?,
        "mu_mber" => cfg.mu_mber = parse_f64(key, value)?,
        "mu_reduced_rank" => cfg.mu_reduced_rank = parse_f64(key, value)?,
        "adaptive_baselines" => cfg.adaptive_baselines = parse(key, value)?,
        "dd_reference" => {
            cfg.dd_reference = match value {
                "per-branch" => DdReference::PerBranch,
                "common" => DdReference::Common,
                v => {
                    return Err(CliError::value(
                        key,
                        format!("{v:?}: expected per-branch or common"),
                    ))
                }
            }
        }
        "decision_timing" => {
            cfg.timing = match value {
                "before-update" => DecisionTiming::BeforeUpdate,
                "after-update" => DecisionTiming::AfterUpdate,
                v => {
                    return Err(CliError::value(
                        key,
                        format!("{v:?}: expected before-update or after-update"),
                    ))
                }
            }
        }
        "rho_scale" => cfg.rho_scale = parse_f64(key, value)?,
        "rho_noiseless" => cfg.rho_noiseless = parse_f64(key, value)?,
        _ => return Err(CliError::UnknownKey(key.to_owned())),
    }
    Ok(())
}

/// All keys with their current values, in [`KEYS`] order (without `preset`).
pub fn key_values(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let s = &cfg.step_rule;
    vec![
        ("users", cfg.users.to_string()),
        ("antennas_per_user", cfg.antennas_per_user.to_string()),
        ("receive_antennas", cfg.receive_antennas.to_string()),
        ("snr_db", cfg.snr_db.to_string()),
        (
            "sigma",
            cfg.sigma
                .map_or_else(|| "auto".to_owned(), |v| v.to_string()),
        ),
        ("doppler", cfg.doppler.to_string()),
        ("normalize_channel", cfg.normalize_channel.to_string()),
        ("receivers", cfg.receivers.join(",")),
        ("rank", cfg.rank.to_string()),
        ("taps", cfg.taps.to_string()),
        ("branches", cfg.branches.to_string()),
        ("training", cfg.training.to_string()),
        ("decision_directed", cfg.decision_directed.to_string()),
        ("sweep", sweep_string(&cfg.sweep)),
        ("trials", cfg.trials.to_string()),
        ("seed", cfg.seed.to_string()),
        ("desired_user", cfg.desired_user.to_string()),
        ("desired_antenna", cfg.desired_antenna.to_string()),
        ("delta1", s.delta1.to_string()),
        ("delta2", s.delta2.to_string()),
        ("mu_plus", s.mu_plus.to_string()),
        ("mu_minus", s.mu_minus.to_string()),
        ("mu_init", s.mu_init.to_string()),
        ("mu_lms", cfg.mu_lms.to_string()),
        ("mu_mber", cfg.mu_mber.to_string()),
        ("mu_reduced_rank", cfg.mu_reduced_rank.to_string()),
        ("adaptive_baselines", cfg.adaptive_baselines.to_string()),
        (
            "dd_reference",
            dd_reference_str(cfg.dd_reference).to_owned(),
        ),
        ("decision_timing", timing_str(cfg.timing).to_owned()),
        ("rho_scale", cfg.rho_scale.to_string()),
        ("rho_noiseless", cfg.rho_noiseless.to_string()),
    ]
}

/// Renders a complete config file.
pub fn render(cfg: &ExperimentConfig) -> String {
    key_values(cfg)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

/// Parsed `key = value` lines of a file, in order, with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: Vec<(usize, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| CliError::Syntax {
                line,
                text: raw.to_owned(),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(CliError::UnknownKey(key.to_owned()));
            }
            if let Some((first, _, _)) = entries.iter().find(|(_, k, _)| k == key) {
                return Err(CliError::Duplicate {
                    key: key.to_owned(),
                    first: *first,
                    line,
                });
            }
            entries.push((line, key.to_owned(), value.trim().to_owned()));
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(_, _, v)| v.as_str())
    }
}

/// Command-line layer: explicit flags and `--set key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub set: Vec<(String, String)>,
}

/// Resolves preset, file and flags into a validated configuration.
pub fn resolve(file: Option<&ConfigFile>, flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    let preset = flags
        .preset
        .as_deref()
        .or_else(|| file.and_then(|f| f.get("preset")))
        .unwrap_or("paper");
    let mut cfg = ExperimentConfig::preset(preset)?;
    if let Some(file) = file {
        for (_, key, value) in file.entries.iter().filter(|(_, k, _)| k != "preset") {
            set_key(&mut cfg, key, value)?;
        }
    }
    for (key, value) in &flags.set {
        if key == "preset" {
            return Err(CliError::value("preset", "use --preset"));
        }
        set_key(&mut cfg, key, value)?;
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = flags.trials {
        cfg.trials = trials;
    }
    cfg.validate(&ReceiverRegistry::builtin())?;
    Ok(cfg)
}

/// Parses a rendered config (or manifest) on top of the `paper` preset.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    resolve(Some(&ConfigFile::parse(text)?), &Overrides::default())
}

/// Splits `key=value`.
pub fn split_assignment(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Syntax {
        line: 0,
        text: s.to_owned(),
    })?;
    Ok((k.trim().to_owned(), v.trim().to_owned()))
}
