//! Finite-dimensional quantum states with labeled subsystems.
//!
//! A [`QuantumState`] is a density matrix together with an ordered list of
//! subsystem dimensions and unique labels. Every reduction, transpose or
//! channel application addresses subsystems by label; positional indices
//! never leak through the public API.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, hermitian_eigenvalues, hermitize, hermiticity_defect, kron, psd_sqrt,
    trace, CMatrix, CVector, ONE, ZERO,
};

/// Tolerance used when validating density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues with magnitude below this are treated as exact zeros.
pub const EIG_CLAMP: f64 = 1e-12;

pub(crate) fn as_strs(labels: &[String]) -> Vec<&str> {
    labels.iter().map(String::as_str).collect()
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::Label(format!("duplicate label `{l}`")));
        }
    }
    Ok(())
}

fn check_layout(dims: &[usize], labels: &[String]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Dimension("a state needs at least one subsystem".into()));
    }
    if dims.len() != labels.len() {
        return Err(Error::Label(format!(
            "{} dims but {} labels",
            dims.len(),
            labels.len()
        )));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::Dimension(format!("subsystem `{}` has dimension 0", labels[pos])));
    }
    check_unique(labels)?;
    Ok(dims.iter().product())
}

/// Subsystem positions of `keep`, sorted into the state's own order.
fn positions<L: AsRef<str>>(labels: &[String], keep: &[L]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(keep.len());
    for k in keep {
        let k = k.as_ref();
        let pos = labels
            .iter()
            .position(|l| l == k)
            .ok_or_else(|| Error::Label(format!("no subsystem labeled `{k}` in {labels:?}")))?;
        if out.contains(&pos) {
            return Err(Error::Label(format!("label `{k}` listed twice")));
        }
        out.push(pos);
    }
    out.sort_unstable();
    Ok(out)
}

/// Splits every flat index into (kept index, traced index) under the given
/// kept positions. Returns the two lookup tables and the two dimensions.
fn split_indices(dims: &[usize], kept: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let n: usize = dims.iter().product();
    let is_kept: Vec<bool> = (0..dims.len()).map(|i| kept.contains(&i)).collect();
    let dk: usize = kept.iter().map(|&i| dims[i]).product();
    let dt = n / dk;
    let mut kidx = vec![0usize; n];
    let mut tidx = vec![0usize; n];
    let mut digits = vec![0usize; dims.len()];
    for flat in 0..n {
        let (mut k, mut t) = (0usize, 0usize);
        for (pos, &d) in dims.iter().enumerate() {
            if is_kept[pos] {
                k = k * d + digits[pos];
            } else {
                t = t * d + digits[pos];
            }
        }
        kidx[flat] = k;
        tidx[flat] = t;
        // increment mixed-radix counter, last subsystem fastest
        for pos in (0..dims.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    (kidx, tidx, dk, dt)
}

/// Index map for reordering subsystems: `map[old_flat] = new_flat` where new
/// subsystem i is old subsystem `order[i]`.
fn permutation_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let n: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let mut new_strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        new_strides[i] = new_strides[i + 1] * new_dims[i + 1];
    }
    // stride in the new layout for each old subsystem
    let mut stride_of_old = vec![0usize; dims.len()];
    for (new_pos, &old) in order.iter().enumerate() {
        stride_of_old[old] = new_strides[new_pos];
    }
    let mut map = vec![0usize; n];
    let mut digits = vec![0usize; dims.len()];
    for slot in map.iter_mut() {
        *slot = digits.iter().zip(&stride_of_old).map(|(d, s)| d * s).sum();
        for pos in (0..dims.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < dims[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }
    map
}

/// Encodes colon splits such as `AA':BB'` as disjoint label groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    groups: Vec<Vec<String>>,
}

impl Partition {
    pub fn new<G, L>(groups: G) -> Result<Self>
    where
        G: IntoIterator,
        G::Item: IntoIterator<Item = L>,
        L: Into<String>,
    {
        let groups: Vec<Vec<String>> = groups
            .into_iter()
            .map(|g| g.into_iter().map(Into::into).collect())
            .collect();
        let mut seen = HashSet::new();
        for g in &groups {
            if g.is_empty() {
                return Err(Error::Label("partition group is empty".into()));
            }
            for l in g {
                if !seen.insert(l.clone()) {
                    return Err(Error::Label(format!("label `{l}` appears in two groups")));
                }
            }
        }
        Ok(Self { groups })
    }

    /// Parses `A1,A2:B1,B2`.
    pub fn parse(spec: &str) -> Result<Self> {
        let groups: Vec<Vec<String>> = spec
            .split(':')
            .map(|g| {
                g.split(',')
                    .map(|l| l.trim().to_string())
                    .filter(|l| !l.is_empty())
                    .collect()
            })
            .collect();
        Self::new(groups)
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn all_labels(&self) -> Vec<String> {
        self.groups.iter().flatten().cloned().collect()
    }

    pub fn validate_for(&self, labels: &[String]) -> Result<()> {
        for l in self.groups.iter().flatten() {
            if !labels.contains(l) {
                return Err(Error::Label(format!("partition label `{l}` not in state {labels:?}")));
            }
        }
        Ok(())
    }
}

/// Density matrix on labeled subsystems. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    matrix: CMatrix,
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl QuantumState {
    /// Validates and symmetrizes a density matrix.
    pub fn new<L: Into<String>>(
        matrix: CMatrix,
        dims: Vec<usize>,
        labels: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = check_layout(&dims, &labels)?;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "matrix is {}x{} but dims {dims:?} give {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let matrix = hermitize(&matrix);
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { matrix, dims, labels })
    }

    /// Builds a state whose invariants hold by construction (products,
    /// reductions and channel outputs of valid states).
    pub(crate) fn from_trusted(matrix: CMatrix, dims: Vec<usize>, labels: Vec<String>) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        debug_assert_eq!(dims.len(), labels.len());
        Self {
            matrix: hermitize(&matrix),
            dims,
            labels,
        }
    }

    pub fn maximally_mixed<L: Into<String>>(dims: Vec<usize>, labels: impl IntoIterator<Item = L>) -> Result<Self> {
        let n: usize = dims.iter().product();
        let m = CMatrix::identity(n, n).map(|z| z / n as f64);
        Self::new(m, dims, labels)
    }

    /// Computational basis projector |digits⟩⟨digits|.
    pub fn basis<L: Into<String>>(dims: Vec<usize>, digits: &[usize], labels: impl IntoIterator<Item = L>) -> Result<Self> {
        Ok(PureState::basis(dims, digits, labels)?.to_density())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim_of<L: AsRef<str>>(&self, labels: &[L]) -> Result<usize> {
        Ok(positions(&self.labels, labels)?.iter().map(|&p| self.dims[p]).product())
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    /// Spectrum in ascending order, unclamped.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Number of eigenvalues above [`EIG_CLAMP`].
    pub fn rank(&self) -> usize {
        self.eigenvalues().iter().filter(|&&x| x > EIG_CLAMP).count()
    }

    pub fn relabel<L: Into<String>>(&self, labels: impl IntoIterator<Item = L>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        check_layout(&self.dims, &labels)?;
        Ok(Self {
            matrix: self.matrix.clone(),
            dims: self.dims.clone(),
            labels,
        })
    }

    /// Same state with one label renamed.
    pub fn rename(&self, from: &str, to: &str) -> Result<Self> {
        let mut labels = self.labels.clone();
        let pos = positions(&labels, &[from])?[0];
        labels[pos] = to.to_string();
        self.relabel(labels)
    }

    /// ρ ⊗ σ with concatenated dims and labels.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_unique(&labels)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ok(Self::from_trusted(kron(&self.matrix, &other.matrix), dims, labels))
    }

    /// Reorders subsystems to the given label order (must be a permutation).
    pub fn reorder<L: AsRef<str>>(&self, order: &[L]) -> Result<QuantumState> {
        if order.len() != self.labels.len() {
            return Err(Error::Label("reorder needs every label exactly once".into()));
        }
        let mut pos = Vec::with_capacity(order.len());
        for l in order {
            pos.push(positions(&self.labels, &[l.as_ref()])?[0]);
        }
        let map = permutation_map(&self.dims, &pos);
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(map[i], map[j])] = self.matrix[(i, j)];
            }
        }
        let dims = pos.iter().map(|&p| self.dims[p]).collect();
        let labels = pos.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(Self::from_trusted(m, dims, labels))
    }

    /// Reduced state on `keep`, subsystems kept in their original order.
    pub fn partial_trace<L: AsRef<str>>(&self, keep: &[L]) -> Result<QuantumState> {
        if keep.is_empty() {
            return Err(Error::Argument("partial trace needs a nonempty keep set".into()));
        }
        let kept = positions(&self.labels, keep)?;
        if kept.len() == self.dims.len() {
            return Ok(self.clone());
        }
        let (kidx, tidx, dk, dt) = split_indices(&self.dims, &kept);
        // rows[t][k] = flat index with traced part t and kept part k
        let mut rows = vec![vec![0usize; dk]; dt];
        for flat in 0..self.dim() {
            rows[tidx[flat]][kidx[flat]] = flat;
        }
        let mut out = CMatrix::zeros(dk, dk);
        for block in &rows {
            for (a, &ia) in block.iter().enumerate() {
                for (b, &ib) in block.iter().enumerate() {
                    out[(a, b)] += self.matrix[(ia, ib)];
                }
            }
        }
        let dims = kept.iter().map(|&p| self.dims[p]).collect();
        let labels = kept.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(Self::from_trusted(out, dims, labels))
    }

    /// Traces out the listed subsystems.
    pub fn trace_out<L: AsRef<str>>(&self, remove: &[L]) -> Result<QuantumState> {
        let removed = positions(&self.labels, remove)?;
        let keep: Vec<&str> = (0..self.labels.len())
            .filter(|p| !removed.contains(p))
            .map(|p| self.labels[p].as_str())
            .collect();
        self.partial_trace(&keep)
    }

    /// Purification on (own subsystems) ⊗ env, env dimension = numerical rank.
    pub fn purify(&self, env_label: &str) -> Result<PureState> {
        if self.has_label(env_label) {
            return Err(Error::Label(format!("environment label `{env_label}` already in use")));
        }
        let (values, vectors) = hermitian_eigen(&self.matrix);
        let kept: Vec<usize> = (0..values.len()).rev().filter(|&j| values[j] > EIG_CLAMP).collect();
        let mass: f64 = kept.iter().map(|&j| values[j]).sum();
        let r = kept.len();
        let n = self.dim();
        let mut v = CVector::zeros(n * r);
        for (c, &j) in kept.iter().enumerate() {
            let w = (values[j] / mass).sqrt();
            for s in 0..n {
                v[s * r + c] = vectors[(s, j)] * w;
            }
        }
        let mut dims = self.dims.clone();
        dims.push(r);
        let mut labels = self.labels.clone();
        labels.push(env_label.to_string());
        Ok(PureState::from_trusted(v, dims, labels))
    }

    /// Partial transpose on the listed subsystems. Hermitian with unit trace,
    /// not necessarily positive.
    pub fn partial_transpose<L: AsRef<str>>(&self, on: &[L]) -> Result<CMatrix> {
        if on.is_empty() {
            return Err(Error::Argument("partial transpose needs a nonempty label set".into()));
        }
        let tpos = positions(&self.labels, on)?;
        let (kidx, tidx, dk, dt) = split_indices(&self.dims, &tpos);
        // flat index from (untransposed part, transposed part)
        let mut join = vec![vec![0usize; dk]; dt];
        for flat in 0..self.dim() {
            join[tidx[flat]][kidx[flat]] = flat;
        }
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let ni = join[tidx[i]][kidx[j]];
                let nj = join[tidx[j]][kidx[i]];
                out[(ni, nj)] = self.matrix[(i, j)];
            }
        }
        Ok(out)
    }

    /// (I ⊗ K) ρ (I ⊗ K)† with K acting on `target` (in state order); the
    /// output subsystems replace the targets at the first target's position.
    fn conjugate_on(
        &self,
        ops: &[CMatrix],
        target: &[usize],
        out_dims: &[usize],
        out_labels: &[String],
    ) -> Result<QuantumState> {
        let others: Vec<usize> = (0..self.dims.len()).filter(|p| !target.contains(p)).collect();
        let mut order = others.clone();
        order.extend_from_slice(target);
        let labels_perm: Vec<&str> = order.iter().map(|&p| self.labels[p].as_str()).collect();
        let permuted = self.reorder(&labels_perm)?;
        let d_other: usize = others.iter().map(|&p| self.dims[p]).product();
        let id = CMatrix::identity(d_other, d_other);
        let d_out: usize = out_dims.iter().product();
        let mut acc = CMatrix::zeros(d_other * d_out, d_other * d_out);
        for k in ops {
            let big = kron(&id, k);
            acc += &big * permuted.matrix() * big.adjoint();
        }
        let mut dims: Vec<usize> = others.iter().map(|&p| self.dims[p]).collect();
        dims.extend_from_slice(out_dims);
        let mut labels: Vec<String> = others.iter().map(|&p| self.labels[p].clone()).collect();
        labels.extend(out_labels.iter().cloned());
        check_unique(&labels)?;
        let raw = Self::from_trusted(acc, dims, labels);
        // put outputs back where the first target was
        let insert_at = others.iter().filter(|&&p| p < target[0]).count();
        let mut final_order: Vec<String> = others.iter().map(|&p| self.labels[p].clone()).collect();
        for (i, l) in out_labels.iter().enumerate() {
            final_order.insert(insert_at + i, l.clone());
        }
        raw.reorder(&final_order)
    }

    /// Applies the CPTP map with the given Kraus operators to `target`.
    pub fn apply_channel<L: AsRef<str>, M: AsRef<str>>(
        &self,
        kraus: &[CMatrix],
        target: &[L],
        out_dims: &[usize],
        out_labels: &[M],
    ) -> Result<QuantumState> {
        let tpos = positions(&self.labels, target)?;
        if tpos.is_empty() {
            return Err(Error::Argument("channel target is empty".into()));
        }
        let d_in: usize = tpos.iter().map(|&p| self.dims[p]).product();
        let d_out: usize = out_dims.iter().product();
        if out_dims.len() != out_labels.len() {
            return Err(Error::Label("out_dims and out_labels differ in length".into()));
        }
        validate_kraus(kraus, d_in, d_out)?;
        let out_labels: Vec<String> = out_labels.iter().map(|l| l.as_ref().to_string()).collect();
        self.conjugate_on(kraus, &tpos, out_dims, &out_labels)
    }

    /// Runs the measurement with Kraus operators `kraus` on `target` and
    /// returns the post-measurement ensemble together with the flagged state
    /// Σ_k A_k ρ A_k† ⊗ |k⟩⟨k|_flag. Zero-probability outcomes are dropped.
    pub fn measurement_pushforward<L: AsRef<str>>(
        &self,
        kraus: &[CMatrix],
        target: &[L],
        flag_label: &str,
    ) -> Result<(Ensemble, QuantumState)> {
        let tpos = positions(&self.labels, target)?;
        if tpos.is_empty() {
            return Err(Error::Argument("measurement target is empty".into()));
        }
        if self.has_label(flag_label) {
            return Err(Error::Label(format!("flag label `{flag_label}` already in use")));
        }
        let d: usize = tpos.iter().map(|&p| self.dims[p]).product();
        validate_kraus(kraus, d, d)?;
        let tdims: Vec<usize> = tpos.iter().map(|&p| self.dims[p]).collect();
        let tlabels: Vec<String> = tpos.iter().map(|&p| self.labels[p].clone()).collect();
        let mut branches = Vec::new();
        for k in kraus {
            let branch = self.conjugate_on(std::slice::from_ref(k), &tpos, &tdims, &tlabels)?;
            let p = trace(branch.matrix()).re;
            if p > EIG_CLAMP {
                branches.push((p, branch));
            }
        }
        let total: f64 = branches.iter().map(|(p, _)| p).sum();
        let m = branches.len();
        let n = self.dim();
        let mut flagged = CMatrix::zeros(n * m, n * m);
        let mut members = Vec::with_capacity(m);
        for (k, (p, branch)) in branches.into_iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    flagged[(i * m + k, j * m + k)] = branch.matrix()[(i, j)] / total;
                }
            }
            let normalized = branch.matrix().map(|z| z / p);
            members.push((p / total, Self::from_trusted(normalized, self.dims.clone(), self.labels.clone())));
        }
        let mut dims = self.dims.clone();
        dims.push(m);
        let mut labels = self.labels.clone();
        labels.push(flag_label.to_string());
        Ok((Ensemble::new(members)?, Self::from_trusted(flagged, dims, labels)))
    }

    /// Σ_i p_i ρ_i ⊗ |i⟩⟨i| over each flag label in `flags` (all flags carry
    /// the same index). Flags are appended after the member subsystems.
    pub fn flagged_mixture(ens: &Ensemble, flags: &[&str]) -> Result<QuantumState> {
        let first = &ens.members()[0].1;
        let k = ens.len();
        let mut dims = first.dims.clone();
        let mut labels = first.labels.clone();
        for f in flags {
            dims.push(k);
            labels.push(f.to_string());
        }
        check_unique(&labels)?;
        let n = first.dim();
        let kf = k.pow(flags.len() as u32);
        let mut m = CMatrix::zeros(n * kf, n * kf);
        for (i, (p, s)) in ens.members().iter().enumerate() {
            // flag block index i repeated on every flag register
            let mut f = 0usize;
            for _ in flags {
                f = f * k + i;
            }
            for a in 0..n {
                for b in 0..n {
                    m[(a * kf + f, b * kf + f)] = s.matrix[(a, b)] * *p;
                }
            }
        }
        Ok(Self::from_trusted(m, dims, labels))
    }
}

fn validate_kraus(kraus: &[CMatrix], d_in: usize, d_out: usize) -> Result<()> {
    if kraus.is_empty() {
        return Err(Error::Validation("empty Kraus set".into()));
    }
    let mut sum = CMatrix::zeros(d_in, d_in);
    for k in kraus {
        if k.nrows() != d_out || k.ncols() != d_in {
            return Err(Error::Dimension(format!(
                "Kraus operator is {}x{}, expected {d_out}x{d_in}",
                k.nrows(),
                k.ncols()
            )));
        }
        sum += k.adjoint() * k;
    }
    let defect = linalg::max_abs_diff(&sum, &CMatrix::identity(d_in, d_in));
    if defect > STATE_TOL {
        return Err(Error::Validation(format!(
            "Kraus set is not trace preserving (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Unit vector on labeled subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: CVector,
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl PureState {
    pub fn new<L: Into<String>>(
        vector: CVector,
        dims: Vec<usize>,
        labels: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = check_layout(&dims, &labels)?;
        if vector.len() != n {
            return Err(Error::Dimension(format!(
                "vector has length {} but dims {dims:?} give {n}",
                vector.len()
            )));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("vector norm is {norm}, expected 1")));
        }
        Ok(Self { vector, dims, labels })
    }

    pub(crate) fn from_trusted(vector: CVector, dims: Vec<usize>, labels: Vec<String>) -> Self {
        debug_assert_eq!(vector.len(), dims.iter().product::<usize>());
        Self { vector, dims, labels }
    }

    pub fn basis<L: Into<String>>(dims: Vec<usize>, digits: &[usize], labels: impl IntoIterator<Item = L>) -> Result<Self> {
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(x, d)| x >= d) {
            return Err(Error::Parameter(format!("basis digits {digits:?} invalid for dims {dims:?}")));
        }
        let n: usize = dims.iter().product();
        let idx = digits.iter().zip(&dims).fold(0, |acc, (x, d)| acc * d + x);
        let mut v = CVector::zeros(n);
        v[idx] = ONE;
        Self::new(v, dims, labels)
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn to_density(&self) -> QuantumState {
        QuantumState::from_trusted(linalg::outer(&self.vector), self.dims.clone(), self.labels.clone())
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        check_unique(&labels)?;
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ok(Self::from_trusted(linalg::kron_vec(&self.vector, &other.vector), dims, labels))
    }

    /// Coefficient matrix Ψ with rows indexed by the kept subsystems and
    /// columns by the rest, so that ρ_keep = Ψ Ψ†.
    pub(crate) fn split_matrix(&self, kept: &[usize]) -> CMatrix {
        let (kidx, tidx, dk, dt) = split_indices(&self.dims, kept);
        let mut m = CMatrix::zeros(dk, dt);
        for (flat, z) in self.vector.iter().enumerate() {
            m[(kidx[flat], tidx[flat])] = *z;
        }
        m
    }

    pub fn partial_trace<L: AsRef<str>>(&self, keep: &[L]) -> Result<QuantumState> {
        if keep.is_empty() {
            return Err(Error::Argument("partial trace needs a nonempty keep set".into()));
        }
        let kept = positions(&self.labels, keep)?;
        let psi = self.split_matrix(&kept);
        let dims = kept.iter().map(|&p| self.dims[p]).collect();
        let labels = kept.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(QuantumState::from_trusted(&psi * psi.adjoint(), dims, labels))
    }

    /// Nonzero spectrum of the marginal on `keep`, computed on whichever side
    /// of the Schmidt cut is smaller.
    pub fn marginal_spectrum<L: AsRef<str>>(&self, keep: &[L]) -> Result<Vec<f64>> {
        let kept = positions(&self.labels, keep)?;
        if kept.is_empty() || kept.len() == self.dims.len() {
            return Ok(vec![1.0]);
        }
        let psi = self.split_matrix(&kept);
        let gram = if psi.nrows() <= psi.ncols() {
            &psi * psi.adjoint()
        } else {
            psi.adjoint() * &psi
        };
        Ok(hermitian_eigenvalues(&gram))
    }
}

/// Probability-weighted list of states on identical subsystems.
#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<(f64, QuantumState)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, QuantumState)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("ensemble has no members".into()));
        }
        let (dims, labels) = (members[0].1.dims.clone(), members[0].1.labels.clone());
        let mut total = 0.0;
        for (p, s) in &members {
            if *p < 0.0 || !p.is_finite() {
                return Err(Error::Validation(format!("negative probability {p}")));
            }
            if s.dims != dims || s.labels != labels {
                return Err(Error::Dimension("ensemble members live on different subsystems".into()));
            }
            total += p;
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, QuantumState)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Σ p_k ρ_k
    pub fn average(&self) -> QuantumState {
        let first = &self.members[0].1;
        let mut m = CMatrix::zeros(first.dim(), first.dim());
        for (p, s) in &self.members {
            m += s.matrix.map(|z| z * *p);
        }
        QuantumState::from_trusted(m, first.dims.clone(), first.labels.clone())
    }

    /// Reduces every member to `keep`.
    pub fn partial_trace<L: AsRef<str>>(&self, keep: &[L]) -> Result<Ensemble> {
        let members = self
            .members
            .iter()
            .map(|(p, s)| Ok((*p, s.partial_trace(keep)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members })
    }

    /// Ensemble of pure members, each member's eigen-decomposition flattened.
    pub fn refine_to_pure(&self) -> Vec<(f64, CVector)> {
        let mut out = Vec::new();
        for (p, s) in &self.members {
            let (values, vectors) = hermitian_eigen(&s.matrix);
            for (j, &v) in values.iter().enumerate() {
                if v > EIG_CLAMP && p * v > 0.0 {
                    out.push((p * v, vectors.column(j).into_owned()));
                }
            }
        }
        out
    }
}

/// Named state families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Bell,
    Ghz { n: usize },
    W { n: usize },
    Werner { p: f64, d: usize },
    Isotropic { f: f64, d: usize },
    MaximallyMixed { d: usize },
    Flower { d: usize },
    /// Computational basis product |i_1⟩|i_2⟩… with the given local dims.
    Product { dims: Vec<usize>, digits: Vec<usize> },
    ClassicallyCorrelated { d: usize },
}

#[derive(Debug, Clone)]
pub enum NamedState {
    Pure(PureState),
    Mixed(QuantumState),
}

impl NamedState {
    pub fn into_mixed(self) -> QuantumState {
        match self {
            NamedState::Pure(p) => p.to_density(),
            NamedState::Mixed(m) => m,
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            NamedState::Pure(p) => p.labels(),
            NamedState::Mixed(m) => m.labels(),
        }
    }
}

/// Labels A, B, C, … for n parties.
pub fn letter_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'A' + i as u8) as char).to_string()
            } else {
                format!("P{i}")
            }
        })
        .collect()
}

fn check_prob(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::Parameter(format!("{name} out of range [0, 1]: {x}")));
    }
    Ok(())
}

fn check_dim(name: &str, d: usize, min: usize) -> Result<()> {
    if d < min {
        return Err(Error::Parameter(format!("{name} must be at least {min}, got {d}")));
    }
    Ok(())
}

fn maximally_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = a;
    }
    v
}

pub fn make_named_state(family: &Family) -> Result<NamedState> {
    Ok(match *family {
        Family::Bell => NamedState::Pure(PureState::from_trusted(maximally_entangled(2), vec![2, 2], letter_labels(2))),
        Family::Ghz { n } => {
            check_dim("n", n, 2)?;
            let mut v = CVector::zeros(1 << n);
            let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[0] = a;
            v[(1 << n) - 1] = a;
            NamedState::Pure(PureState::from_trusted(v, vec![2; n], letter_labels(n)))
        }
        Family::W { n } => {
            check_dim("n", n, 2)?;
            let mut v = CVector::zeros(1 << n);
            let a = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
            for k in 0..n {
                v[1 << k] = a;
            }
            NamedState::Pure(PureState::from_trusted(v, vec![2; n], letter_labels(n)))
        }
        Family::Werner { p, d } => {
            check_prob("p", p)?;
            check_dim("d", d, 2)?;
            // p · P_antisym / dim(P_antisym) + (1 − p) · I / d²
            let n = d * d;
            let anti_dim = (d * (d - 1) / 2) as f64;
            let mut m = CMatrix::zeros(n, n);
            for i in 0..d {
                for j in 0..d {
                    let a = i * d + j;
                    let b = j * d + i;
                    m[(a, a)] += Complex64::new(0.5 * p / anti_dim, 0.0);
                    m[(b, a)] -= Complex64::new(0.5 * p / anti_dim, 0.0);
                }
            }
            for i in 0..n {
                m[(i, i)] += Complex64::new((1.0 - p) / n as f64, 0.0);
            }
            NamedState::Mixed(QuantumState::new(m, vec![d, d], letter_labels(2))?)
        }
        Family::Isotropic { f, d } => {
            check_prob("F", f)?;
            check_dim("d", d, 2)?;
            let n = d * d;
            let phi = linalg::outer(&maximally_entangled(d));
            let rest = (CMatrix::identity(n, n) - &phi).map(|z| z * ((1.0 - f) / (n as f64 - 1.0)));
            let m = phi.map(|z| z * f) + rest;
            NamedState::Mixed(QuantumState::new(m, vec![d, d], letter_labels(2))?)
        }
        Family::MaximallyMixed { d } => {
            check_dim("d", d, 1)?;
            NamedState::Mixed(QuantumState::maximally_mixed(vec![d], ["A"])?)
        }
        Family::Flower { d } => NamedState::Pure(flower_state(d)?),
        Family::Product { ref dims, ref digits } => {
            NamedState::Pure(PureState::basis(dims.clone(), digits, letter_labels(dims.len()))?)
        }
        Family::ClassicallyCorrelated { d } => {
            check_dim("d", d, 1)?;
            let mut m = CMatrix::zeros(d * d, d * d);
            for i in 0..d {
                m[(i * d + i, i * d + i)] = Complex64::new(1.0 / d as f64, 0.0);
            }
            NamedState::Mixed(QuantumState::new(m, vec![d, d], letter_labels(2))?)
        }
    })
}

/// (1/√(2d)) Σ_{i,j} |i⟩_{A1}|j⟩_{A2}|i⟩_{B1}|j⟩_{B2} U_j|i⟩_C with U_0 = I and
/// U_1 the discrete Fourier transform.
pub fn flower_state(d: usize) -> Result<PureState> {
    check_dim("d", d, 2)?;
    let f = linalg::dft(d);
    let dims = vec![d, 2, d, 2, d];
    let n: usize = dims.iter().product();
    let amp = 1.0 / ((2 * d) as f64).sqrt();
    let mut v = CVector::zeros(n);
    for i in 0..d {
        for j in 0..2 {
            for c in 0..d {
                let coeff = if j == 0 {
                    if c == i { ONE } else { ZERO }
                } else {
                    f[(c, i)]
                };
                let idx = (((i * 2 + j) * d + i) * 2 + j) * d + c;
                v[idx] += coeff * amp;
            }
        }
    }
    let labels = ["A1", "A2", "B1", "B2", "C"].map(String::from).to_vec();
    Ok(PureState::from_trusted(v, dims, labels))
}

/// ‖a − b‖₁, the full trace norm of the difference.
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::Dimension(format!("dims {:?} vs {:?}", a.dims, b.dims)));
    }
    Ok(linalg::trace_norm_hermitian(&(a.matrix() - b.matrix())))
}

/// Uhlmann fidelity (Tr √(√a b √a))², equal to |⟨φ|ψ⟩|² for pure inputs.
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::Dimension(format!("dims {:?} vs {:?}", a.dims, b.dims)));
    }
    let sa = psd_sqrt(a.matrix());
    let inner = &sa * b.matrix() * &sa;
    let root: f64 = hermitian_eigenvalues(&inner)
        .iter()
        .filter(|&&x| x > EIG_CLAMP)
        .map(|x| x.sqrt())
        .sum();
    Ok((root * root).min(1.0))
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pure_state_with<R: rand::Rng + ?Sized, L: Into<String>>(
    dims: Vec<usize>,
    labels: impl IntoIterator<Item = L>,
    rng: &mut R,
) -> Result<PureState> {
    let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
    let n = check_layout(&dims, &labels)?;
    let v = linalg::gaussian_vector(n, rng);
    let norm = v.norm();
    Ok(PureState::from_trusted(v / Complex64::new(norm, 0.0), dims, labels))
}

/// Reduction of a Haar-random pure state on dims ⊗ C^rank.
pub fn random_state_with<R: rand::Rng + ?Sized, L: Into<String>>(
    dims: Vec<usize>,
    labels: impl IntoIterator<Item = L>,
    rank: usize,
    rng: &mut R,
) -> Result<QuantumState> {
    if rank == 0 {
        return Err(Error::Argument("rank must be at least 1".into()));
    }
    let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
    let n = check_layout(&dims, &labels)?;
    let g = linalg::gaussian_matrix(n, rank, rng);
    let m = &g * g.adjoint();
    let tr = trace(&m).re;
    Ok(QuantumState::from_trusted(m.map(|z| z / tr), dims, labels))
}

pub fn random_state<L: Into<String>>(
    dims: Vec<usize>,
    labels: impl IntoIterator<Item = L>,
    rank: usize,
    seed: u64,
) -> Result<QuantumState> {
    random_state_with(dims, labels, rank, &mut seeded_rng(seed))
}

/// Haar-distributed rows × cols isometry, deterministic per seed.
pub fn random_isometry(rows: usize, cols: usize, seed: u64) -> Result<CMatrix> {
    if cols > rows || cols == 0 {
        return Err(Error::Dimension(format!("no {rows}x{cols} isometry")));
    }
    Ok(linalg::haar_isometry(rows, cols, &mut seeded_rng(seed)))
}

/// Random Kraus set with `outcomes` elements on a d-dimensional system,
/// cut from a Haar isometry C^d → C^d ⊗ C^outcomes.
pub fn random_kraus<R: rand::Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Vec<CMatrix> {
    let v = linalg::haar_isometry(d * outcomes, d, rng);
    (0..outcomes)
        .map(|k| CMatrix::from_fn(d, d, |i, j| v[(k * d + i, j)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn bell() -> QuantumState {
        make_named_state(&Family::Bell).unwrap().into_mixed()
    }

    #[test]
    fn tensor_of_basis_states() {
        let a = QuantumState::basis(vec![2], &[0], ["A"]).unwrap();
        let b = QuantumState::basis(vec![2], &[1], ["B"]).unwrap();
        let ab = a.tensor(&b).unwrap();
        let expect = QuantumState::basis(vec![2, 2], &[0, 1], ["A", "B"]).unwrap();
        assert!(max_abs_diff(ab.matrix(), expect.matrix()) < 1e-15);
    }

    #[test]
    fn tensor_of_maximally_mixed() {
        let a = QuantumState::maximally_mixed(vec![2], ["A"]).unwrap();
        let b = QuantumState::maximally_mixed(vec![3], ["B"]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.dims(), &[2, 3]);
        let expect = CMatrix::identity(6, 6).map(|z| z / 6.0);
        assert!(max_abs_diff(ab.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn tensor_rejects_duplicate_labels() {
        let a = QuantumState::maximally_mixed(vec![2], ["A"]).unwrap();
        assert!(matches!(a.tensor(&a), Err(Error::Label(_))));
    }

    #[test]
    fn bell_times_werner_traces_back() {
        let w = make_named_state(&Family::Werner { p: 0.5, d: 2 })
            .unwrap()
            .into_mixed()
            .relabel(["C", "D"])
            .unwrap();
        let big = bell().tensor(&w).unwrap();
        assert_eq!(big.dim(), 16);
        let back = big.partial_trace(&["A", "B"]).unwrap();
        assert!(max_abs_diff(back.matrix(), bell().matrix()) < 1e-12);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let a = bell().partial_trace(&["A"]).unwrap();
        let expect = CMatrix::identity(2, 2).map(|z| z / 2.0);
        assert!(max_abs_diff(a.matrix(), &expect) < 1e-15);
    }

    #[test]
    fn partial_trace_keeps_original_order() {
        let s = random_state(vec![2, 3, 2], ["X", "Y", "Z"], 6, 11).unwrap();
        let r = s.partial_trace(&["Z", "X"]).unwrap();
        assert_eq!(r.labels(), &["X".to_string(), "Z".to_string()]);
        assert_eq!(r.dims(), &[2, 2]);
    }

    #[test]
    fn partial_trace_empty_keep_is_an_error() {
        let keep: [&str; 0] = [];
        assert!(matches!(bell().partial_trace(&keep), Err(Error::Argument(_))));
    }

    #[test]
    fn flower_two_reduced_has_rank_two() {
        let f = flower_state(2).unwrap();
        let r = f.partial_trace(&["A1", "A2", "B1", "B2"]).unwrap();
        assert_eq!(r.dim(), 16);
        assert_eq!(r.rank(), 2);
    }

    #[test]
    fn purify_maximally_mixed_qubit() {
        let s = QuantumState::maximally_mixed(vec![2], ["A"]).unwrap();
        let p = s.purify("E").unwrap();
        assert_eq!(p.dims(), &[2, 2]);
        let back = p.partial_trace(&["A"]).unwrap();
        assert!(max_abs_diff(back.matrix(), s.matrix()) < 1e-12);
    }

    #[test]
    fn purify_pure_has_trivial_env() {
        let p = bell().purify("E").unwrap();
        assert_eq!(*p.dims().last().unwrap(), 1);
    }

    #[test]
    fn purify_rank_three_qutrit() {
        let s = random_state(vec![3], ["A"], 3, 5).unwrap();
        let p = s.purify("E").unwrap();
        assert_eq!(p.dims(), &[3, 3]);
        let back = p.partial_trace(&["A"]).unwrap();
        assert!(max_abs_diff(back.matrix(), s.matrix()) < 1e-10);
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = bell().partial_transpose(&["B"]).unwrap();
        let ev = hermitian_eigenvalues(&pt);
        assert!((ev[0] + 0.5).abs() < 1e-12);
        assert!((ev[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_state_partial_transpose_is_psd() {
        let a = random_state(vec![2], ["A"], 2, 1).unwrap();
        let b = random_state(vec![3], ["B"], 3, 2).unwrap();
        let pt = a.tensor(&b).unwrap().partial_transpose(&["B"]).unwrap();
        assert!(hermitian_eigenvalues(&pt)[0] > -1e-12);
    }

    #[test]
    fn identity_channel_is_noop() {
        let s = random_state(vec![2, 2], ["A", "B"], 4, 9).unwrap();
        let out = s.apply_channel(&[CMatrix::identity(2, 2)], &["A"], &[2], &["A"]).unwrap();
        assert!(max_abs_diff(out.matrix(), s.matrix()) < 1e-14);
        assert_eq!(out.labels(), s.labels());
    }

    #[test]
    fn dephasing_bell_gives_classical_correlation() {
        let k0 = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ZERO]));
        let k1 = CMatrix::from_diagonal(&CVector::from_vec(vec![ZERO, ONE]));
        let out = bell().apply_channel(&[k0, k1], &["A"], &[2], &["A"]).unwrap();
        let cc = make_named_state(&Family::ClassicallyCorrelated { d: 2 }).unwrap().into_mixed();
        assert!(max_abs_diff(out.matrix(), cc.matrix()) < 1e-14);
    }

    #[test]
    fn trace_out_channel_matches_partial_trace() {
        let s = random_state(vec![2, 3], ["A", "B"], 6, 4).unwrap();
        let kraus: Vec<CMatrix> = (0..3)
            .map(|i| CMatrix::from_fn(1, 3, |_, j| if i == j { ONE } else { ZERO }))
            .collect();
        let out = s.apply_channel(&kraus, &["B"], &[1], &["B0"]).unwrap();
        let expect = s.partial_trace(&["A"]).unwrap();
        assert!(max_abs_diff(out.matrix(), expect.matrix()) < 1e-14);
    }

    #[test]
    fn non_trace_preserving_kraus_is_rejected() {
        let k = CMatrix::identity(2, 2).map(|z| z * 0.5);
        assert!(matches!(
            bell().apply_channel(&[k], &["A"], &[2], &["A"]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn basis_measurement_on_bell() {
        let k0 = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ZERO]));
        let k1 = CMatrix::from_diagonal(&CVector::from_vec(vec![ZERO, ONE]));
        let (ens, flagged) = bell().measurement_pushforward(&[k0, k1], &["A"], "A0").unwrap();
        assert_eq!(ens.len(), 2);
        let s00 = QuantumState::basis(vec![2, 2], &[0, 0], ["A", "B"]).unwrap();
        let s11 = QuantumState::basis(vec![2, 2], &[1, 1], ["A", "B"]).unwrap();
        assert!((ens.members()[0].0 - 0.5).abs() < 1e-14);
        assert!(max_abs_diff(ens.members()[0].1.matrix(), s00.matrix()) < 1e-14);
        assert!(max_abs_diff(ens.members()[1].1.matrix(), s11.matrix()) < 1e-14);
        assert_eq!(flagged.dims(), &[2, 2, 2]);
    }

    #[test]
    fn identity_measurement_is_single_member() {
        let s = random_state(vec![2, 2], ["A", "B"], 3, 8).unwrap();
        let (ens, _) = s.measurement_pushforward(&[CMatrix::identity(2, 2)], &["A"], "F").unwrap();
        assert_eq!(ens.len(), 1);
        assert!(max_abs_diff(ens.members()[0].1.matrix(), s.matrix()) < 1e-14);
    }

    #[test]
    fn random_povm_pushforward_is_consistent() {
        let mut rng = seeded_rng(21);
        for _ in 0..5 {
            let s = random_state_with(vec![2, 2], ["A", "B"], 4, &mut rng).unwrap();
            let kraus = random_kraus(2, 2, &mut rng);
            let (ens, flagged) = s.measurement_pushforward(&kraus, &["A"], "K").unwrap();
            let total: f64 = ens.members().iter().map(|(p, _)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let checked = QuantumState::new(flagged.matrix().clone(), flagged.dims().to_vec(), flagged.labels().to_vec());
            assert!(checked.is_ok());
            let avg = flagged.partial_trace(&["A", "B"]).unwrap();
            assert!(max_abs_diff(avg.matrix(), ens.average().matrix()) < 1e-12);
        }
    }

    #[test]
    fn werner_endpoint_is_singlet() {
        let w = make_named_state(&Family::Werner { p: 1.0, d: 2 }).unwrap().into_mixed();
        let mut singlet = CVector::zeros(4);
        singlet[1] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        singlet[2] = Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = PureState::new(singlet, vec![2, 2], ["A", "B"]).unwrap().to_density();
        assert!((fidelity(&w, &s).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn werner_rejects_bad_p() {
        assert!(matches!(
            make_named_state(&Family::Werner { p: 1.5, d: 2 }),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn flower_marginal_on_c_is_maximally_mixed() {
        for d in 2..=4 {
            let f = flower_state(d).unwrap();
            assert!((f.vector().norm() - 1.0).abs() < 1e-12);
            let c = f.partial_trace(&["C"]).unwrap();
            let expect = CMatrix::identity(d, d).map(|z| z / d as f64);
            assert!(max_abs_diff(c.matrix(), &expect) < 1e-12);
        }
        assert_eq!(flower_state(2).unwrap().dim(), 32);
    }

    #[test]
    fn trace_distance_and_fidelity_basics() {
        let s = random_state(vec![2, 2], ["A", "B"], 4, 3).unwrap();
        assert!(trace_distance(&s, &s).unwrap() < 1e-12);
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-9);
        let mut rng = seeded_rng(4);
        let phi = random_pure_state_with(vec![3], ["A"], &mut rng).unwrap();
        let psi = random_pure_state_with(vec![3], ["A"], &mut rng).unwrap();
        let overlap = phi.vector().dotc(psi.vector()).norm_sqr();
        let f = fidelity(&phi.to_density(), &psi.to_density()).unwrap();
        assert!((f - overlap).abs() < 1e-9);
    }

    #[test]
    fn random_state_is_deterministic_and_full_rank() {
        let a = random_state(vec![2, 3], ["A", "B"], 6, 99).unwrap();
        let b = random_state(vec![2, 3], ["A", "B"], 6, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rank(), 6);
        assert!(QuantumState::new(a.matrix().clone(), vec![2, 3], ["A", "B"]).is_ok());
    }

    #[test]
    fn partition_parse() {
        let p = Partition::parse("A1,A2:B1,B2").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.groups()[1], vec!["B1".to_string(), "B2".to_string()]);
        assert!(Partition::parse("A:A").is_err());
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let m = CMatrix::identity(2, 2);
        assert!(matches!(QuantumState::new(m, vec![2], ["A"]), Err(Error::InvalidState(_))));
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(1, 1)] = Complex64::new(-0.5, 0.0);
        assert!(matches!(QuantumState::new(m, vec![2], ["A"]), Err(Error::InvalidState(_))));
    }
}
