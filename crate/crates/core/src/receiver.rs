//! Common interface of the adaptive receivers and the name-keyed registry the
//! harness and CLI use to build them at runtime.

use crate::baselines::{FullRankMberReceiver, LmsReceiver};
use crate::mber::{DdReference, DecisionTiming, JidfConfig, JidfReceiver, StepRule};
use crate::{Error, Result, C64};

pub const JIDF_MBER: &str = "jidf-mber";
pub const FULL_LMS: &str = "full-lms";
pub const FULL_MBER: &str = "full-mber";

/// What a receiver reports after processing one received vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Hard decision on the desired symbol.
    pub decision: f64,
    /// Selected branch, for multi-branch receivers.
    pub branch: Option<usize>,
    /// Step sizes after adaptation.
    pub step_sizes: Vec<f64>,
}

/// An adaptive linear detector for one desired stream.
pub trait Receiver: Send {
    fn name(&self) -> &str;

    /// Detect the desired symbol in `r` and adapt. `training` carries the
    /// transmitted symbol in training mode and is `None` when decision directed.
    fn step(&mut self, r: &[C64], training: Option<f64>) -> Result<StepOutcome>;
}

/// Everything any registered receiver may need at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverParams {
    pub receive_antennas: usize,
    pub rank: usize,
    pub taps: usize,
    pub branches: usize,
    pub rho: f64,
    pub step_rule: StepRule,
    pub mu_lms: f64,
    pub mu_mber: f64,
    /// Drive the baselines with the adaptive step-size rule instead of fixed steps.
    pub adaptive_baselines: bool,
    pub dd_reference: DdReference,
    pub timing: DecisionTiming,
}

impl ReceiverParams {
    pub fn jidf(&self) -> JidfConfig {
        JidfConfig {
            rank: self.rank,
            taps: self.taps,
            branches: self.branches,
            rho: self.rho,
            step: self.step_rule,
            dd_reference: self.dd_reference,
            timing: self.timing,
        }
    }
}

pub type ReceiverFactory = fn(&ReceiverParams) -> Result<Box<dyn Receiver>>;

pub struct ReceiverRegistry {
    entries: Vec<(String, ReceiverFactory)>,
}

impl ReceiverRegistry {
    pub fn empty() -> Self {
        ReceiverRegistry {
            entries: Vec::new(),
        }
    }

    /// Registry holding `jidf-mber`, `full-lms` and `full-mber`.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(JIDF_MBER, |p| {
            Ok(Box::new(JidfReceiver::new(p.receive_antennas, &p.jidf())?))
        });
        reg.register(FULL_LMS, |p| Ok(Box::new(LmsReceiver::from_params(p)?)));
        reg.register(FULL_MBER, |p| {
            Ok(Box::new(FullRankMberReceiver::from_params(p)?))
        });
        reg
    }

    /// Adds or replaces the factory registered under `name`.
    pub fn register(&mut self, name: &str, factory: ReceiverFactory) {
        match self.entries.iter_mut().find(|(n, _)| n == name) {
            Some(entry) => entry.1 = factory,
            None => self.entries.push((name.to_owned(), factory)),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn create(&self, name: &str, params: &ReceiverParams) -> Result<Box<dyn Receiver>> {
        let (_, factory) = self
            .entries
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::Unknown {
                kind: "receiver",
                name: name.to_owned(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })?;
        factory(params)
    }
}

impl Default for ReceiverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ReceiverParams {
        ReceiverParams {
            receive_antennas: 16,
            rank: 4,
            taps: 4,
            branches: 2,
            rho: 0.5,
            step_rule: StepRule::default(),
            mu_lms: 0.085,
            mu_mber: 0.05,
            adaptive_baselines: false,
            dd_reference: DdReference::PerBranch,
            timing: DecisionTiming::BeforeUpdate,
        }
    }

    #[test]
    fn builtin_names_resolve() {
        let reg = ReceiverRegistry::builtin();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            vec![JIDF_MBER, FULL_LMS, FULL_MBER]
        );
        for name in [JIDF_MBER, FULL_LMS, FULL_MBER] {
            let rx = reg.create(name, &params()).unwrap();
            assert_eq!(rx.name(), name);
        }
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = ReceiverRegistry::builtin()
            .create("eig", &params())
            .err()
            .unwrap();
        let msg = err.to_string();
        assert!(msg.contains("eig") && msg.contains(FULL_LMS), "{msg}");
    }

    #[test]
    fn register_replaces() {
        let mut reg = ReceiverRegistry::builtin();
        reg.register(FULL_LMS, |p| {
            Ok(Box::new(FullRankMberReceiver::from_params(p)?))
        });
        assert_eq!(reg.names().count(), 3);
        assert_eq!(reg.create(FULL_LMS, &params()).unwrap().name(), FULL_MBER);
    }
}
