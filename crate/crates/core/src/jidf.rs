//! Dimensionality reduction for one processing branch: an `I`-tap
//! interpolator followed by a decimation unit that keeps `D` of the `M`
//! interpolated samples.
//!
//! The interpolated vector is `P^H r`, where `P` is the `M x M` banded
//! Toeplitz convolution matrix of the taps. The same vector is `R' conj(p)`
//! with `R'` the zero-padded Hankel matrix of `r`; the branch works with the
//! Hankel form and never materialises `P` or the one-hot decimation rows.
//!
//! Indices are zero-based throughout: branch `l` and row `d` of the
//! selection formula `q = floor(M/D) * d + l`.

use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Interpolation taps `p_1 ... p_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolator {
    taps: Vec<C64>,
}

impl Interpolator {
    pub fn new(taps: Vec<C64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Argument(
                "interpolator needs at least one tap".into(),
            ));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("interpolator taps must be finite".into()));
        }
        Ok(Interpolator { taps })
    }

    /// `[1, 0, ..., 0]`.
    pub fn unit_impulse(len: usize) -> Self {
        let mut taps = vec![ZERO; len.max(1)];
        taps[0] = ONE;
        Interpolator { taps }
    }

    pub fn taps(&self) -> &[C64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.taps {
            *t *= factor;
        }
    }

    pub(crate) fn taps_mut(&mut self) -> &mut [C64] {
        &mut self.taps
    }
}

/// Row offsets of a binary decimation matrix: row `d` keeps interpolated
/// sample `offsets[d]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecimationPattern {
    offsets: Vec<usize>,
    len: usize,
}

impl DecimationPattern {
    /// Deterministic pattern of branch `branch`: `q_d = floor(M/D) * d + branch`.
    pub fn deterministic(branch: usize, len: usize, rank: usize) -> Result<Self> {
        if rank == 0 || rank > len {
            return Err(Error::Argument(format!(
                "rank {rank} must lie in 1..={len}"
            )));
        }
        let spacing = len / rank;
        let offsets: Vec<usize> = (0..rank).map(|d| spacing * d + branch).collect();
        if let Some(d) = offsets.iter().position(|&q| q >= len) {
            return Err(Error::Argument(format!(
                "branch {branch}, row {d}: offset {} exceeds last sample index {}",
                offsets[d],
                len - 1
            )));
        }
        Ok(DecimationPattern { offsets, len })
    }

    /// Arbitrary ordered selection of distinct samples.
    pub fn from_offsets(offsets: Vec<usize>, len: usize) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::Argument(
                "decimation pattern needs at least one row".into(),
            ));
        }
        if let Some(q) = offsets.iter().find(|&&q| q >= len) {
            return Err(Error::Argument(format!(
                "offset {q} out of range for length {len}"
            )));
        }
        let mut seen = vec![false; len];
        for &q in &offsets {
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::Argument(format!("offset {q} selected twice")));
            }
        }
        Ok(DecimationPattern { offsets, len })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn rank(&self) -> usize {
        self.offsets.len()
    }

    /// Length `M` of the vector being decimated.
    pub fn input_len(&self) -> usize {
        self.len
    }

    /// Dense `D x M` 0/1 matrix; for tests and diagnostics only.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.offsets
            .iter()
            .map(|&q| {
                let mut row = vec![0u8; self.len];
                row[q] = 1;
                row
            })
            .collect()
    }
}

/// Zero-padded `M x I` Hankel matrix with `R'[m][j] = r[m + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl HankelMatrix {
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `R' x` for an `I`-vector `x`.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|m| (0..self.cols).map(|j| self.get(m, j) * x[j]).sum())
            .collect()
    }
}

pub fn hankel_from_received(r: &[C64], taps: usize) -> Result<HankelMatrix> {
    let m = r.len();
    if taps == 0 || taps > m {
        return Err(Error::Argument(format!(
            "tap count {taps} must lie in 1..={m}"
        )));
    }
    let mut data = Vec::with_capacity(m * taps);
    for row in 0..m {
        for j in 0..taps {
            data.push(r.get(row + j).copied().unwrap_or(ZERO));
        }
    }
    Ok(HankelMatrix {
        rows: m,
        cols: taps,
        data,
    })
}

/// Dense `M x M` convolution matrix with taps running down from the diagonal.
pub fn toeplitz_interp_matrix(p: &Interpolator, len: usize) -> Result<Vec<Vec<C64>>> {
    if p.len() > len {
        return Err(Error::Argument(format!(
            "{} taps exceed matrix size {len}",
            p.len()
        )));
    }
    let mut out = vec![vec![ZERO; len]; len];
    for c in 0..len {
        for (j, t) in p.taps().iter().enumerate().take(len - c) {
            out[c + j][c] = *t;
        }
    }
    Ok(out)
}

/// Structural nonzero counts of the decimated Hankel matrix `T R'`.
///
/// `phi[d]` counts the columns of row `d` not forced to zero by padding and
/// `psi[j]` counts the rows of column `j` likewise.
pub fn structural_counts(pattern: &DecimationPattern, taps: usize) -> (Vec<usize>, Vec<usize>) {
    let m = pattern.input_len();
    let phi = pattern.offsets().iter().map(|&q| taps.min(m - q)).collect();
    let psi = (0..taps)
        .map(|j| pattern.offsets().iter().filter(|&&q| q + j < m).count())
        .collect();
    (phi, psi)
}

/// One processing branch: interpolator plus decimation pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    index: usize,
    interpolator: Interpolator,
    pattern: DecimationPattern,
    phi: Vec<usize>,
    psi: Vec<usize>,
}

impl BranchState {
    pub fn new(
        index: usize,
        interpolator: Interpolator,
        pattern: DecimationPattern,
    ) -> Result<Self> {
        let m = pattern.input_len();
        if interpolator.len() >= m {
            return Err(Error::Argument(format!(
                "interpolator length {} must be below {m}",
                interpolator.len()
            )));
        }
        let (phi, psi) = structural_counts(&pattern, interpolator.len());
        Ok(BranchState {
            index,
            interpolator,
            pattern,
            phi,
            psi,
        })
    }

    /// Branch `index` with the deterministic pattern and a unit-impulse interpolator.
    pub fn deterministic(index: usize, len: usize, rank: usize, taps: usize) -> Result<Self> {
        let pattern = DecimationPattern::deterministic(index, len, rank)?;
        BranchState::new(index, Interpolator::unit_impulse(taps), pattern)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn interpolator(&self) -> &Interpolator {
        &self.interpolator
    }

    pub fn interpolator_mut(&mut self) -> &mut Interpolator {
        &mut self.interpolator
    }

    pub fn set_interpolator(&mut self, p: Interpolator) -> Result<()> {
        if p.len() != self.interpolator.len() {
            return Err(Error::Argument(format!(
                "interpolator length {} differs from branch length {}",
                p.len(),
                self.interpolator.len()
            )));
        }
        self.interpolator = p;
        Ok(())
    }

    pub fn pattern(&self) -> &DecimationPattern {
        &self.pattern
    }

    pub fn phi(&self) -> &[usize] {
        &self.phi
    }

    pub fn psi(&self) -> &[usize] {
        &self.psi
    }

    pub fn rank(&self) -> usize {
        self.pattern.rank()
    }

    pub fn taps(&self) -> usize {
        self.interpolator.len()
    }

    pub fn input_len(&self) -> usize {
        self.pattern.input_len()
    }

    /// `sum_j psi_j`, the data-dependent term of the complexity model.
    pub fn psi_sum(&self) -> usize {
        self.psi.iter().sum()
    }

    /// True when no two selected rows share a received sample, i.e. the
    /// spacing between sorted offsets is at least the tap count.
    pub fn rows_disjoint(&self) -> bool {
        let mut q = self.pattern.offsets().to_vec();
        q.sort_unstable();
        q.windows(2).all(|w| w[1] - w[0] >= self.taps())
    }

    /// `r_bar = T R' conj(p)`.
    pub fn project(&self, r: &[C64]) -> Vec<C64> {
        project_branch(r, self)
    }

    /// `S_D w = P T^T w`, the equivalent `M`-tap combiner of this branch.
    pub fn composite(&self, w: &[C64]) -> Vec<C64> {
        let m = self.input_len();
        let mut z = vec![ZERO; m];
        for (&q, wd) in self.pattern.offsets().iter().zip(w) {
            for (j, p) in self.interpolator.taps().iter().enumerate() {
                if q + j < m {
                    z[q + j] += wd * p;
                }
            }
        }
        z
    }

    /// `T P^H z` for an `M`-vector `z`; the adjoint of [`composite`](Self::composite).
    pub fn adjoint(&self, z: &[C64]) -> Vec<C64> {
        let m = self.input_len();
        let taps = self.interpolator.taps();
        self.pattern
            .offsets()
            .iter()
            .map(|&q| {
                taps.iter()
                    .enumerate()
                    .filter(|(j, _)| q + j < m)
                    .map(|(j, p)| p.conj() * z[q + j])
                    .sum()
            })
            .collect()
    }

    /// `u = R'^T T^T conj(w)`, so that the branch output is `p^H u`.
    pub fn tap_input(&self, r: &[C64], w: &[C64]) -> Vec<C64> {
        let m = self.input_len();
        let mut u = vec![ZERO; self.taps()];
        for (&q, wd) in self.pattern.offsets().iter().zip(w) {
            let wc = wd.conj();
            for (j, uj) in u.iter_mut().enumerate() {
                if q + j < m {
                    *uj += wc * r[q + j];
                }
            }
        }
        u
    }

    /// Derivative of `g` with respect to `conj(p)`: `sum_d conj(w_d) (S_D w)[q_d + j]`.
    pub fn energy_grad_taps(&self, w: &[C64]) -> Vec<C64> {
        let z = self.composite(w);
        let m = self.input_len();
        let mut out = vec![ZERO; self.taps()];
        for (&q, wd) in self.pattern.offsets().iter().zip(w) {
            let wc = wd.conj();
            for (j, o) in out.iter_mut().enumerate() {
                if q + j < m {
                    *o += wc * z[q + j];
                }
            }
        }
        out
    }

    /// `S_D^H S_D w`, the derivative of `g` with respect to `conj(w)`.
    pub fn energy_grad_filter(&self, w: &[C64]) -> Vec<C64> {
        self.adjoint(&self.composite(w))
    }
}

pub fn project_branch(r: &[C64], branch: &BranchState) -> Vec<C64> {
    let m = branch.input_len();
    let taps = branch.interpolator.taps();
    branch
        .pattern
        .offsets()
        .iter()
        .map(|&q| {
            taps.iter()
                .enumerate()
                .filter(|(j, _)| q + j < m)
                .map(|(j, p)| r[q + j] * p.conj())
                .sum()
        })
        .collect()
}

/// `g = w^H S_D^H S_D w = ||S_D w||^2`, exact for any pattern.
pub fn g_value(branch: &BranchState, w: &[C64]) -> f64 {
    branch.composite(w).iter().map(|z| z.norm_sqr()).sum()
}

/// Row-truncated tap-energy form `sum_d |w_d|^2 sum_{j < phi_d} |p_j|^2`.
///
/// Equals [`g_value`] when [`BranchState::rows_disjoint`] holds; with
/// overlapping rows it drops the cross terms between rows.
pub fn g_structural(branch: &BranchState, w: &[C64]) -> f64 {
    let taps = branch.interpolator.taps();
    branch
        .phi
        .iter()
        .zip(w)
        .map(|(&phi, wd)| wd.norm_sqr() * taps[..phi].iter().map(|p| p.norm_sqr()).sum::<f64>())
        .sum()
}

/// Column-truncated weight form of the tap derivative of `g`:
/// `(|w_1|^2 + ... + |w_psi_j|^2) p_j`. Matches
/// [`BranchState::energy_grad_taps`] under the same condition as [`g_structural`].
pub fn energy_grad_taps_structural(branch: &BranchState, w: &[C64]) -> Vec<C64> {
    let m = branch.input_len();
    branch
        .interpolator
        .taps()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let weight: f64 = branch
                .pattern
                .offsets()
                .iter()
                .zip(w)
                .filter(|(&q, _)| q + j < m)
                .map(|(_, wd)| wd.norm_sqr())
                .sum();
            p * weight
        })
        .collect()
}

/// Result of the exhaustive decimation search.
#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub best: DecimationPattern,
    pub mean_error_prob: f64,
    /// Number of patterns enumerated, `M (M-1) ... (M-D+1)`.
    pub patterns: usize,
}

/// All ordered selections of `rank` distinct samples out of `len`.
pub fn enumerate_patterns(len: usize, rank: usize) -> Vec<Vec<usize>> {
    fn rec(
        len: usize,
        rank: usize,
        cur: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == rank {
            out.push(cur.clone());
            return;
        }
        for q in 0..len {
            if !used[q] {
                used[q] = true;
                cur.push(q);
                rec(len, rank, cur, used, out);
                cur.pop();
                used[q] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(
        len,
        rank,
        &mut Vec::with_capacity(rank),
        &mut vec![false; len],
        &mut out,
    );
    out
}

/// Mean branch error probability of `branch` over `(r, b)` pairs.
pub fn mean_error_prob(
    branch: &BranchState,
    ensemble: &[(Vec<C64>, f64)],
    w: &[C64],
    rho: f64,
) -> Result<f64> {
    let g = g_value(branch, w);
    let mut acc = 0.0;
    for (r, b) in ensemble {
        let x: C64 = branch
            .project(r)
            .iter()
            .zip(w)
            .map(|(rb, wd)| wd.conj() * rb)
            .sum();
        acc += crate::mber::branch_error_prob(x, *b, g, rho)?;
    }
    Ok(acc / ensemble.len().max(1) as f64)
}

/// Exhaustive search over every ordered decimation pattern for fixed filters.
/// Limited to `M <= 8`, `D <= 3`.
pub fn exhaustive_decimation_oracle(
    ensemble: &[(Vec<C64>, f64)],
    p: &Interpolator,
    w: &[C64],
    len: usize,
    rank: usize,
    rho: f64,
) -> Result<ExhaustiveResult> {
    if len > 8 || rank > 3 || rank == 0 || rank > len {
        return Err(Error::Argument(format!(
            "exhaustive search limited to M <= 8 and 1 <= D <= min(3, M); got M = {len}, D = {rank}"
        )));
    }
    if w.len() != rank {
        return Err(Error::Argument(format!(
            "filter has {} taps, rank is {rank}",
            w.len()
        )));
    }
    let patterns = enumerate_patterns(len, rank);
    let mut best: Option<(DecimationPattern, f64)> = None;
    for offsets in &patterns {
        let pattern = DecimationPattern::from_offsets(offsets.clone(), len)?;
        let branch = BranchState::new(0, p.clone(), pattern.clone())?;
        let pe = mean_error_prob(&branch, ensemble, w, rho)?;
        if best.as_ref().is_none_or(|(_, b)| pe < *b) {
            best = Some((pattern, pe));
        }
    }
    let (best, mean_error_prob) = best.expect("at least one pattern");
    Ok(ExhaustiveResult {
        best,
        mean_error_prob,
        patterns: patterns.len(),
    })
}
