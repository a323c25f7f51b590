//! Modal analysis: eigen-structure, participation factors and identification
//! of the interconnection mode by comparing a connected system (CIS) with
//! the same system after its tie-lines are removed (DIS).

mod eigen;

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, RowDVector, SVD};
use thiserror::Error;

use crate::statespace::StateSpaceModel;

pub use eigen::C64;

/// Default zero-mode threshold, relative to `‖A‖∞`.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

/// Default participation threshold for [`dominant_states`].
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Eigenvalues closer than this (relative to `‖A‖∞`) share one invariant
/// subspace during eigenvector recovery.
const CLUSTER_TOL: f64 = 1e-9;
/// Singular-value cutoff, relative to `‖A‖∞`, for null vectors of `A − λI`
/// restricted to a cluster subspace.
const NULL_TOL: f64 = 1e-7;
/// A cluster whose left/right Gram matrix has a singular value below this is
/// reported defective.
const BIORTHO_TOL: f64 = 1e-6;
/// Defective eigenvalues within this distance (relative to `‖A‖∞`) are
/// replaced by their mean, which is far better conditioned than the split
/// values QR returns for a Jordan block.
const DEFECTIVE_MERGE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModalError {
    #[error("QR iteration did not converge ({remaining} eigenvalues unresolved)")]
    NoConvergence { remaining: usize },
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("mode sets have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("ambiguous pairing near {cis} (CIS) / {dis} (DIS): alternatives within {gap:e}")]
    AmbiguousMatch { cis: C64, dis: C64, gap: f64 },
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("mode index {0} out of range")]
    UnknownMode(usize),
}

/// Eigenvalues with paired right (columns of `Φ`) and left (rows of `Ψ`)
/// eigenvectors.
///
/// For non-defective modes `ΨΦ = I`. Modes in a Jordan block are flagged in
/// [`ModeSet::defective`]; their vectors span the right subspace but carry
/// no normalization.
#[derive(Debug, Clone)]
pub struct ModeSet {
    eigenvalues: Vec<C64>,
    right: DMatrix<C64>,
    left: DMatrix<C64>,
    defective: Vec<bool>,
    labels: Vec<String>,
    norm: f64,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues (1/s), sorted by magnitude, upper half-plane first.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// Right eigenvectors as columns.
    pub fn right(&self) -> &DMatrix<C64> {
        &self.right
    }

    /// Left eigenvectors as rows.
    pub fn left(&self) -> &DMatrix<C64> {
        &self.left
    }

    pub fn is_defective(&self, mode: usize) -> bool {
        self.defective[mode]
    }

    pub fn defective(&self) -> &[bool] {
        &self.defective
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `‖A‖∞` of the decomposed matrix.
    pub fn matrix_norm(&self) -> f64 {
        self.norm
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.len(), "one label per state");
        self.labels = labels;
        self
    }
}

/// Full spectrum of `A` with left and right eigenvectors.
pub fn eigen_decompose(a: &DMatrix<f64>) -> Result<ModeSet, ModalError> {
    let (n, m) = a.shape();
    if n != m {
        return Err(ModalError::NotSquare(n, m));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(ModalError::NonFinite);
    }
    let labels = (0..n).map(|i| format!("x{i}")).collect();
    let norm = a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Ok(ModeSet {
            eigenvalues: vec![C64::new(0.0, 0.0); n],
            right: DMatrix::identity(n, n),
            left: DMatrix::identity(n, n),
            defective: vec![false; n],
            labels,
            norm,
        });
    }

    let values = eigen::eigenvalues(a).map_err(|e| ModalError::NoConvergence { remaining: e.remaining })?;
    let at = a.transpose();

    // Cluster the upper half-plane (and real) eigenvalues; the lower half is
    // recovered by conjugation.
    let mut reps: Vec<C64> = values.iter().copied().filter(|v| v.im >= 0.0).collect();
    reps.sort_by(|x, y| cmp_c64(*x, *y));
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for v in reps {
        match clusters.iter_mut().find(|c| (c[0] - v).norm() <= CLUSTER_TOL * norm) {
            Some(c) => c.push(v),
            None => clusters.push(vec![v]),
        }
    }

    let mut modes: Vec<Mode> = Vec::with_capacity(n);
    for (ci, cluster) in clusters.iter().enumerate() {
        let k = cluster.len();
        let mut center = cluster.iter().sum::<C64>() / k as f64;
        if cluster.iter().all(|v| v.im == 0.0) {
            center.im = 0.0;
        }
        let offset = 1e-10 * norm;
        let seed = 0x5eed_u64 + ci as u64;
        let (right, g_r) = cluster_vectors(a, center, k, offset, seed, norm);
        let (left, g_l) = cluster_vectors(&at, center, k, offset, seed ^ 0xff, norm);

        let gram = left.transpose() * &right;
        let well_paired = g_r == k && g_l == k && min_singular(&gram) > BIORTHO_TOL;
        let (right, left_rows, defective) = if well_paired {
            let inv = gram.try_inverse().expect("well-conditioned Gram matrix");
            (right, inv * left.transpose(), false)
        } else {
            (right, left.transpose(), true)
        };

        for (j, value) in cluster.iter().enumerate() {
            let mut phi = right.column(j).into_owned();
            let mut psi = left_rows.row(j).into_owned();
            let mut lambda = if center.im == 0.0 { C64::new(value.re, 0.0) } else { *value };
            if !defective {
                normalize_pair(&mut phi, &mut psi);
                if k == 1 {
                    // Rayleigh quotient refinement
                    let ac = a.map(|v| C64::new(v, 0.0));
                    lambda = (&psi * (&ac * &phi))[(0, 0)];
                    if center.im == 0.0 {
                        lambda.im = 0.0;
                    }
                }
            } else {
                let s = phi.norm();
                if s > 0.0 {
                    phi /= C64::new(s, 0.0);
                }
            }
            let conj_needed = lambda.im != 0.0;
            if conj_needed {
                modes.push(Mode {
                    value: lambda.conj(),
                    right: phi.map(|c| c.conj()),
                    left: psi.map(|c| c.conj()),
                    defective,
                });
            }
            modes.push(Mode {
                value: lambda,
                right: phi,
                left: psi,
                defective,
            });
        }
    }

    merge_defective(&mut modes, DEFECTIVE_MERGE_TOL * norm);
    modes.sort_by(|x, y| cmp_c64(x.value, y.value));

    let mut right = DMatrix::zeros(n, n);
    let mut left = DMatrix::zeros(n, n);
    for (i, mode) in modes.iter().enumerate() {
        right.set_column(i, &mode.right);
        left.set_row(i, &mode.left);
    }
    Ok(ModeSet {
        eigenvalues: modes.iter().map(|m| m.value).collect(),
        defective: modes.iter().map(|m| m.defective).collect(),
        right,
        left,
        labels,
        norm,
    })
}

/// Decomposes a model's system matrix and carries its state labels over.
pub fn decompose_model(model: &StateSpaceModel) -> Result<ModeSet, ModalError> {
    let labels = model.labels().iter().map(|l| l.to_string()).collect();
    Ok(eigen_decompose(model.a())?.with_labels(labels))
}

/// Eigenvalues only.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>, ModalError> {
    let (n, m) = a.shape();
    if n != m {
        return Err(ModalError::NotSquare(n, m));
    }
    eigen::eigenvalues(a).map_err(|e| ModalError::NoConvergence { remaining: e.remaining })
}

struct Mode {
    value: C64,
    right: DVector<C64>,
    left: RowDVector<C64>,
    defective: bool,
}

/// Magnitude ascending, then upper half-plane before lower.
fn cmp_c64(x: C64, y: C64) -> Ordering {
    let (mx, my) = (x.norm(), y.norm());
    let scale = mx.max(my).max(1.0);
    if (mx - my).abs() > 1e-12 * scale {
        return mx.partial_cmp(&my).unwrap_or(Ordering::Equal);
    }
    y.im.partial_cmp(&x.im)
        .unwrap_or(Ordering::Equal)
        .then(x.re.partial_cmp(&y.re).unwrap_or(Ordering::Equal))
}

/// Basis of the cluster subspace with eigenvectors first, plus the count of
/// eigenvectors found.
fn cluster_vectors(a: &DMatrix<f64>, center: C64, k: usize, offset: f64, seed: u64, norm: f64) -> (DMatrix<C64>, usize) {
    let n = a.nrows();
    let basis = eigen::cluster_subspace(a, center, k, offset, seed);
    let ac = a.map(|v| C64::new(v, 0.0));
    let residual = (&ac - DMatrix::from_diagonal_element(n, n, center)) * &basis;
    let svd = SVD::new(residual, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap_or(Ordering::Equal));
    let null = order.iter().filter(|&&i| svd.singular_values[i] <= NULL_TOL * norm).count();
    let mut out = DMatrix::zeros(n, k);
    for (col, &i) in order.iter().enumerate() {
        let coeffs = v_t.row(i).map(|c| c.conj()).transpose();
        out.set_column(col, &(&basis * coeffs));
    }
    if center.im == 0.0 {
        for v in out.iter_mut() {
            v.im = 0.0;
        }
    }
    (out, null)
}

fn min_singular(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Unit right vector with its largest entry real positive; left vector scaled
/// so `ψφ` keeps its value.
fn normalize_pair(phi: &mut DVector<C64>, psi: &mut RowDVector<C64>) {
    let Some((_, pivot)) = phi.iter().enumerate().max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap_or(Ordering::Equal))
    else {
        return;
    };
    let pivot = *pivot;
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    let scale = phase / C64::new(phi.norm(), 0.0);
    *phi *= scale;
    *psi /= scale;
}

fn merge_defective(modes: &mut [Mode], tol: f64) {
    let idx: Vec<usize> = (0..modes.len()).filter(|&i| modes[i].defective).collect();
    let mut assigned = vec![false; modes.len()];
    for &i in &idx {
        if assigned[i] {
            continue;
        }
        let group: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&j| !assigned[j] && (modes[j].value - modes[i].value).norm() <= tol)
            .collect();
        let mean = group.iter().map(|&j| modes[j].value).sum::<C64>() / group.len() as f64;
        let closed = group.iter().all(|&j| {
            let c = modes[j].value.conj();
            group.iter().any(|&h| modes[h].value == c)
        });
        for &j in &group {
            assigned[j] = true;
            modes[j].value = if closed { C64::new(mean.re, 0.0) } else { mean };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryPair {
    /// Index of the upper half-plane eigenvalue.
    pub upper: usize,
    /// Index of its conjugate.
    pub lower: Option<usize>,
    /// `|Im λ|` (rad/s).
    pub frequency: f64,
    /// `Re λ` (1/s).
    pub real: f64,
    pub undamped: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeClassification {
    pub zero: Vec<usize>,
    pub oscillatory: Vec<OscillatoryPair>,
    /// Non-zero real eigenvalues.
    pub aperiodic: Vec<usize>,
}

impl ModeClassification {
    /// Oscillatory frequencies (rad/s), ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.oscillatory.iter().map(|p| p.frequency).collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        f
    }

    pub fn pair_with_frequency(&self, frequency: f64, tol: f64) -> Option<&OscillatoryPair> {
        self.oscillatory.iter().find(|p| (p.frequency - frequency).abs() <= tol)
    }
}

/// Splits modes into structural zeros, oscillatory conjugate pairs (sorted
/// by frequency) and aperiodic modes. `zero_tol` is relative to `‖A‖∞`.
pub fn classify_modes(modes: &ModeSet, zero_tol: f64) -> ModeClassification {
    let tol = zero_tol * modes.norm;
    let ev = &modes.eigenvalues;
    let mut out = ModeClassification::default();
    for (i, v) in ev.iter().enumerate() {
        if modes.norm == 0.0 || v.norm() < tol {
            out.zero.push(i);
        } else if v.im.abs() <= tol {
            out.aperiodic.push(i);
        } else if v.im > 0.0 {
            let lower = ev
                .iter()
                .enumerate()
                .filter(|(j, w)| *j != i && w.im < 0.0)
                .min_by(|a, b| (a.1.conj() - v).norm().partial_cmp(&(b.1.conj() - v).norm()).unwrap_or(Ordering::Equal))
                .map(|(j, _)| j);
            out.oscillatory.push(OscillatoryPair {
                upper: i,
                lower,
                frequency: v.im,
                real: v.re,
                undamped: v.re.abs() <= tol,
            });
        }
    }
    out.oscillatory
        .sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap_or(Ordering::Equal));
    out
}

/// `p[k][i]`: normalized participation of state `k` in mode `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationMatrix {
    labels: Vec<String>,
    columns: Vec<Option<Vec<f64>>>,
}

impl ParticipationMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode_count(&self) -> usize {
        self.columns.len()
    }

    /// Participation of every state in `mode`; `None` for defective modes.
    pub fn column(&self, mode: usize) -> Option<&[f64]> {
        self.columns.get(mode).and_then(|c| c.as_deref())
    }

    pub fn get(&self, state: usize, mode: usize) -> Option<f64> {
        self.column(mode).map(|c| c[state])
    }

    /// Modes whose column was omitted because they are defective.
    pub fn omitted(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&i| self.columns[i].is_none()).collect()
    }
}

/// `p[k][i] = |Φ[k][i]·Ψ[i][k]| / Σ_k |Φ[k][i]·Ψ[i][k]|`.
pub fn participation_factors(modes: &ModeSet) -> ParticipationMatrix {
    let n = modes.len();
    let columns = (0..n)
        .map(|i| {
            if modes.defective[i] {
                return None;
            }
            let raw: Vec<f64> = (0..n).map(|k| (modes.right[(k, i)] * modes.left[(i, k)]).norm()).collect();
            let total: f64 = raw.iter().sum();
            (total > 0.0).then(|| raw.iter().map(|v| v / total).collect())
        })
        .collect();
    ParticipationMatrix {
        labels: modes.labels.clone(),
        columns,
    }
}

/// States whose participation in `mode` is at least `threshold`, largest
/// first.
pub fn dominant_states(p: &ParticipationMatrix, mode: usize, threshold: f64) -> Result<Vec<(String, f64)>, ModalError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ModalError::InvalidThreshold(threshold));
    }
    if mode >= p.mode_count() {
        return Err(ModalError::UnknownMode(mode));
    }
    let Some(col) = p.column(mode) else {
        return Ok(Vec::new());
    };
    let mut out: Vec<(String, f64)> = col
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= threshold)
        .map(|(k, v)| (p.labels[k].clone(), *v))
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    /// Upper half-plane mode index in the CIS set.
    pub cis: usize,
    /// Upper half-plane mode index in the DIS set.
    pub dis: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMatch {
    pub pairs: Vec<MatchedPair>,
    /// CIS oscillatory modes with no DIS partner: the interconnection modes.
    pub interconnection: Vec<usize>,
    pub unmatched_dis: Vec<usize>,
    pub cis_zero_count: usize,
    pub dis_zero_count: usize,
}

/// Alternatives closer than this to an accepted pairing make the match
/// ambiguous.
pub const AMBIGUITY_GAP: f64 = 1e-6;

/// Pairs CIS and DIS oscillatory modes greedily by distance between their
/// upper half-plane eigenvalues. Whatever CIS modes remain unpaired arose
/// from the interconnection.
pub fn identify_interconnection_mode(cis: &ModeSet, dis: &ModeSet, zero_tol: f64) -> Result<ModeMatch, ModalError> {
    if cis.len() != dis.len() {
        return Err(ModalError::DimensionMismatch(cis.len(), dis.len()));
    }
    let cc = classify_modes(cis, zero_tol);
    let dc = classify_modes(dis, zero_tol);
    let c_reps: Vec<usize> = cc.oscillatory.iter().map(|p| p.upper).collect();
    let d_reps: Vec<usize> = dc.oscillatory.iter().map(|p| p.upper).collect();

    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (a, &i) in c_reps.iter().enumerate() {
        for (b, &j) in d_reps.iter().enumerate() {
            candidates.push(((cis.eigenvalues[i] - dis.eigenvalues[j]).norm(), a, b));
        }
    }
    candidates.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut c_used = vec![false; c_reps.len()];
    let mut d_used = vec![false; d_reps.len()];
    let mut pairs = Vec::new();
    for &(d, a, b) in &candidates {
        if c_used[a] || d_used[b] {
            continue;
        }
        let rival = candidates.iter().find(|&&(d2, a2, b2)| {
            (a2 == a) != (b2 == b) && !c_used[a2] && !d_used[b2] && (d2 - d).abs() <= AMBIGUITY_GAP
        });
        if let Some(&(d2, _, _)) = rival {
            return Err(ModalError::AmbiguousMatch {
                cis: cis.eigenvalues[c_reps[a]],
                dis: dis.eigenvalues[d_reps[b]],
                gap: (d2 - d).abs(),
            });
        }
        c_used[a] = true;
        d_used[b] = true;
        pairs.push(MatchedPair {
            cis: c_reps[a],
            dis: d_reps[b],
            distance: d,
        });
    }
    Ok(ModeMatch {
        pairs,
        interconnection: (0..c_reps.len()).filter(|&a| !c_used[a]).map(|a| c_reps[a]).collect(),
        unmatched_dis: (0..d_reps.len()).filter(|&b| !d_used[b]).map(|b| d_reps[b]).collect(),
        cis_zero_count: cc.zero.len(),
        dis_zero_count: dc.zero.len(),
    })
}
