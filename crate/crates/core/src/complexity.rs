//! Per-symbol arithmetic cost of each receive algorithm, as counts of
//! complex multiplications and additions. One model per algorithm, looked up
//! by its table label.

use crate::jidf::structural_counts;
use crate::jidf::DecimationPattern;
use crate::{Error, Result};

pub const LABEL_FULL_LMS: &str = "Full-Rank-LMS";
pub const LABEL_FULL_MBER: &str = "Full-Rank-MBER";
pub const LABEL_MBER_MWF: &str = "MBER-MWF";
pub const LABEL_MBER_JIDF: &str = "MBER-JIDF";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityParams {
    /// Receive antennas `M`.
    pub m: u64,
    /// Rank `D`.
    pub d: u64,
    /// Interpolator length `I`.
    pub i: u64,
    /// Branch count `B`.
    pub b: u64,
    /// `sum_l sum_j psi_j` over all branches.
    pub psi_sum: u64,
}

impl ComplexityParams {
    /// Parameters with `psi_sum` at its upper bound `I B D`.
    pub fn bounded(m: u64, d: u64, i: u64, b: u64) -> Self {
        ComplexityParams {
            m,
            d,
            i,
            b,
            psi_sum: psi_sum_bound(d, i, b),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("M", self.m), ("D", self.d), ("I", self.i), ("B", self.b)] {
            if v == 0 {
                return Err(Error::Argument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCount {
    pub mults: u64,
    pub adds: u64,
}

pub trait ComplexityModel: Send + Sync {
    fn label(&self) -> &'static str;
    fn count(&self, p: &ComplexityParams) -> OpCount;
}

struct FullRankLms;
struct FullRankMber;
struct MberMwf;
struct MberJidf;

impl ComplexityModel for FullRankLms {
    fn label(&self) -> &'static str {
        LABEL_FULL_LMS
    }
    fn count(&self, p: &ComplexityParams) -> OpCount {
        OpCount {
            mults: 2 * p.m + 1,
            adds: 2 * p.m,
        }
    }
}

impl ComplexityModel for FullRankMber {
    fn label(&self) -> &'static str {
        LABEL_FULL_MBER
    }
    fn count(&self, p: &ComplexityParams) -> OpCount {
        OpCount {
            mults: 4 * p.m + 1,
            adds: 4 * p.m - 1,
        }
    }
}

impl ComplexityModel for MberMwf {
    fn label(&self) -> &'static str {
        LABEL_MBER_MWF
    }
    fn count(&self, p: &ComplexityParams) -> OpCount {
        let (m, d) = (p.m, p.d);
        OpCount {
            mults: (d + 1) * m * m + (3 * d + 1) * m + m + 3 * d + 10,
            adds: (d - 1) * m * m + (2 * d - 1) * m + m + 2 * d + 1,
        }
    }
}

impl ComplexityModel for MberJidf {
    fn label(&self) -> &'static str {
        LABEL_MBER_JIDF
    }
    fn count(&self, p: &ComplexityParams) -> OpCount {
        let ComplexityParams {
            m,
            d,
            i,
            b,
            psi_sum,
        } = *p;
        OpCount {
            mults: m * d * b + d * b + 7 * i * b + 4 * d + 1 + psi_sum,
            adds: m * d * b + i * b - b + 4 * d - 1 + psi_sum,
        }
    }
}

pub struct ComplexityRegistry {
    models: Vec<Box<dyn ComplexityModel>>,
}

impl ComplexityRegistry {
    pub fn builtin() -> Self {
        ComplexityRegistry {
            models: vec![
                Box::new(FullRankLms),
                Box::new(FullRankMber),
                Box::new(MberMwf),
                Box::new(MberJidf),
            ],
        }
    }

    pub fn register(&mut self, model: Box<dyn ComplexityModel>) {
        self.models.retain(|m| m.label() != model.label());
        self.models.push(model);
    }

    pub fn labels(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.models.iter().map(|m| m.label())
    }

    pub fn get(&self, label: &str) -> Result<&dyn ComplexityModel> {
        self.models
            .iter()
            .find(|m| m.label() == label)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                name: label.to_owned(),
                known: self.labels().collect::<Vec<_>>().join(", "),
            })
    }

    pub fn count(&self, label: &str, params: &ComplexityParams) -> Result<OpCount> {
        params.validate()?;
        if label == LABEL_MBER_MWF && params.d < 1 {
            return Err(Error::Argument("MBER-MWF needs D >= 1".into()));
        }
        Ok(self.get(label)?.count(params))
    }
}

impl Default for ComplexityRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Evaluate the operation count of algorithm `label`.
pub fn complexity_count(label: &str, params: &ComplexityParams) -> Result<OpCount> {
    ComplexityRegistry::builtin().count(label, params)
}

pub fn psi_sum_bound(d: u64, i: u64, b: u64) -> u64 {
    i * b * d
}

/// `sum_l sum_j psi_j` for the deterministic decimation patterns of `B` branches.
pub fn psi_sum_measured(m: usize, d: usize, i: usize, b: usize) -> Result<u64> {
    let mut total = 0;
    for l in 0..b {
        let pattern = DecimationPattern::deterministic(l, m, d)?;
        total += structural_counts(&pattern, i).1.iter().sum::<usize>() as u64;
    }
    Ok(total)
}
