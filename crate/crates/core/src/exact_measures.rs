//! Directly computable entanglement measures and the convex-roof engine.
//!
//! Decompositions ρ = Σ p_i ρ_i are reached through isometries W acting on
//! the purifying system: with |Ψ⟩ = Σ_j √λ_j |e_j⟩|j⟩_C, applying
//! W : C → K ⊗ F and projecting K onto |i⟩ gives the (sub-normalized) branch
//! √p_i ρ_i, traced over F. With F trivial every member is pure, and every
//! decomposition into at most dim K pure members arises this way.

use serde::{Deserialize, Serialize};

use crate::entropy::{mutual_information, Marginals};
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eigenvalues, CMatrix, CVector};
use crate::optimize::{
    best_index, derive_seed, nelder_mead, run_starts, IsometryChart, OptimizationResult,
    OptimizerOptions,
};
use crate::states::{as_strs, seeded_rng, Ensemble, PureState, QuantumState, EIG_CLAMP};

/// Label given to the purifying system during searches.
pub const PURIFIER: &str = "C~";

/// PPT tolerance on the smallest partial-transpose eigenvalue.
pub const PPT_TOL: f64 = 1e-9;

fn complement(s: &QuantumState, a: &[&str]) -> Result<Vec<String>> {
    for l in a {
        if !s.has_label(l) {
            return Err(Error::Label(format!("no subsystem labeled `{l}`")));
        }
    }
    if a.is_empty() {
        return Err(Error::Argument("bipartition side is empty".into()));
    }
    let rest: Vec<String> = s.labels().iter().filter(|l| !a.contains(&l.as_str())).cloned().collect();
    if rest.is_empty() {
        return Err(Error::Argument("bipartition side covers every subsystem".into()));
    }
    Ok(rest)
}

/// log₂ ‖ρ^{T_a}‖₁ across the cut {a, rest}.
pub fn log_negativity(s: &QuantumState, a: &[&str]) -> Result<f64> {
    complement(s, a)?;
    let pt = s.partial_transpose(a)?;
    Ok(linalg::trace_norm_hermitian(&pt).log2())
}

/// (‖ρ^{T_a}‖₁ − 1) / 2. Affine under flagged mixtures, unlike its log.
pub fn negativity(s: &QuantumState, a: &[&str]) -> Result<f64> {
    complement(s, a)?;
    let pt = s.partial_transpose(a)?;
    Ok((linalg::trace_norm_hermitian(&pt) - 1.0) / 2.0)
}

/// Smallest eigenvalue of the partial transpose on `a`.
pub fn min_partial_transpose_eigenvalue(s: &QuantumState, a: &[&str]) -> Result<f64> {
    complement(s, a)?;
    Ok(hermitian_eigenvalues(&s.partial_transpose(a)?)[0])
}

/// True iff ρ^{T_a} ≥ −1e-9.
pub fn ppt_check(s: &QuantumState, a: &[&str]) -> Result<bool> {
    Ok(min_partial_transpose_eigenvalue(s, a)? >= -PPT_TOL)
}

/// A decomposition, encoded as the isometry C → K ⊗ F that produces it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoofCertificate {
    /// dim K, the number of members.
    pub members: usize,
    /// dim F; 1 means pure members.
    pub env_extra: usize,
    /// Chart base point V₀ ((members · env_extra) × rank).
    #[serde(with = "crate::codec::matrix")]
    pub base_isometry: CMatrix,
    pub params: Vec<f64>,
}

impl RoofCertificate {
    pub fn isometry(&self) -> CMatrix {
        IsometryChart::new(&self.base_isometry).isometry(&self.params)
    }

    /// Re-pads this certificate into a larger (members, env_extra) layout;
    /// the extra members get probability zero.
    pub fn embedded(&self, members: usize, env_extra: usize) -> Result<RoofCertificate> {
        if members < self.members || env_extra < self.env_extra {
            return Err(Error::Argument("cannot embed a certificate into a smaller layout".into()));
        }
        let w = self.isometry();
        let mut out = CMatrix::zeros(members * env_extra, w.ncols());
        for i in 0..self.members {
            for g in 0..self.env_extra {
                out.set_row(i * env_extra + g, &w.row(i * self.env_extra + g));
            }
        }
        Ok(RoofCertificate {
            members,
            env_extra,
            params: vec![0.0; IsometryChart::new(&out).n_params()],
            base_isometry: out,
        })
    }

    /// Certificate for a known decomposition of `s`. Mixed members are split
    /// into their eigenvectors, so the result always has pure members.
    pub fn from_ensemble(s: &QuantumState, ens: &Ensemble) -> Result<RoofCertificate> {
        if ens.members()[0].1.dims() != s.dims() {
            return Err(Error::Dimension("ensemble lives on different subsystems".into()));
        }
        let avg = ens.average();
        let gap = linalg::max_abs_diff(avg.matrix(), s.matrix());
        if gap > 1e-8 {
            return Err(Error::Argument(format!("ensemble does not average to the state (gap {gap:.2e})")));
        }
        let p = Purification::of(s)?;
        let pure = ens.refine_to_pure();
        let r = p.rank();
        let mut w = CMatrix::zeros(pure.len(), r);
        for j in 0..r {
            let col = p.coeffs.column(j);
            let lambda: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            for (i, (pi, psi)) in pure.iter().enumerate() {
                w[(i, j)] = col.dotc(psi) * (pi.sqrt() / lambda);
            }
        }
        // polar part removes rounding drift off the isometry manifold
        let svd = w.svd(true, true);
        let w = svd.u.expect("requested") * svd.v_t.expect("requested");
        let members = pure.len();
        Ok(RoofCertificate {
            members,
            env_extra: 1,
            params: vec![0.0; IsometryChart::new(&w).n_params()],
            base_isometry: w,
        })
    }

    /// The ensemble this certificate encodes for state `s`.
    pub fn ensemble(&self, s: &QuantumState) -> Result<Ensemble> {
        let p = Purification::of(s)?;
        let members = p
            .branches(&self.isometry(), self.members, self.env_extra)
            .into_iter()
            .map(|(w, m)| (w, m.into_mixed()))
            .collect::<Vec<_>>();
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        Ensemble::new(members.into_iter().map(|(w, m)| (w / total, m)).collect())
    }
}

/// Member of a decomposition: pure when the internal environment is trivial.
pub(crate) enum Member {
    Pure(PureState),
    Mixed(QuantumState),
}

impl Member {
    fn as_marginals(&self) -> &dyn Marginals {
        match self {
            Member::Pure(p) => p,
            Member::Mixed(m) => m,
        }
    }

    fn into_mixed(self) -> QuantumState {
        match self {
            Member::Pure(p) => p.to_density(),
            Member::Mixed(m) => m,
        }
    }
}

/// Purification |Ψ⟩ = Σ_j √λ_j |e_j⟩|j⟩ stored as the n × r coefficient
/// matrix.
#[derive(Debug, Clone)]
pub struct Purification {
    pub coeffs: CMatrix,
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
}

impl Purification {
    pub fn of(s: &QuantumState) -> Result<Self> {
        let p = s.purify(PURIFIER)?;
        let r = *p.dims().last().expect("purification has an environment");
        let n = s.dim();
        let coeffs = CMatrix::from_fn(n, r, |i, j| p.vector()[i * r + j]);
        Ok(Self {
            coeffs,
            dims: s.dims().to_vec(),
            labels: s.labels().to_vec(),
        })
    }

    pub fn rank(&self) -> usize {
        self.coeffs.ncols()
    }

    /// G = C · Wᵀ, an n × D matrix whose row-major flattening is
    /// (I ⊗ W)|Ψ⟩.
    pub fn apply(&self, w: &CMatrix) -> CMatrix {
        &self.coeffs * w.transpose()
    }

    /// Non-empty branches (p_i, member_i) for the layout K ⊗ F.
    fn branches(&self, w: &CMatrix, members: usize, env_extra: usize) -> Vec<(f64, Member)> {
        let g = self.apply(w);
        let n = g.nrows();
        let mut out = Vec::new();
        for i in 0..members {
            let block = g.columns(i * env_extra, env_extra);
            let weight: f64 = block.iter().map(|z| z.norm_sqr()).sum();
            if weight <= 1e-14 {
                continue;
            }
            let member = if env_extra == 1 {
                let v: CVector = block.column(0).map(|z| z / weight.sqrt());
                Member::Pure(PureState::from_trusted(v, self.dims.clone(), self.labels.clone()))
            } else {
                let m = (block * block.adjoint()).map(|z| z / weight);
                Member::Mixed(QuantumState::from_trusted(m, self.dims.clone(), self.labels.clone()))
            };
            debug_assert!(n == member_dim(&member));
            out.push((weight, member));
        }
        out
    }
}

fn member_dim(m: &Member) -> usize {
    match m {
        Member::Pure(p) => p.dim(),
        Member::Mixed(q) => q.dim(),
    }
}

/// Functional averaged over decomposition members.
pub type RoofFunctional<'a> = dyn Fn(&dyn Marginals) -> Result<f64> + Sync + 'a;

#[derive(Debug, Clone)]
pub struct RoofOptions {
    /// Member count k; defaults to 2·rank capped at rank².
    pub members: Option<usize>,
    /// Internal environment per member; 1 restricts to pure decompositions.
    pub env_extra: usize,
    pub optimizer: OptimizerOptions,
    /// Decompositions injected as extra starting points.
    pub seeds: Vec<RoofCertificate>,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self {
            members: None,
            env_extra: 1,
            optimizer: OptimizerOptions::default(),
            seeds: Vec::new(),
        }
    }
}

impl RoofOptions {
    pub fn with_optimizer(optimizer: OptimizerOptions) -> Self {
        Self {
            optimizer,
            ..Self::default()
        }
    }
}

pub fn default_members(rank: usize) -> usize {
    (2 * rank).min(rank * rank).max(1)
}

fn roof_value(f: &RoofFunctional, p: &Purification, w: &CMatrix, members: usize, env_extra: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut weight = 0.0;
    for (pi, m) in p.branches(w, members, env_extra) {
        total += pi * f(m.as_marginals())?;
        weight += pi;
    }
    Ok(total / weight)
}

/// Σ p_i f(ρ_i) for the decomposition a certificate encodes.
pub fn evaluate_roof(f: &RoofFunctional, s: &QuantumState, cert: &RoofCertificate) -> Result<f64> {
    let p = Purification::of(s)?;
    roof_value(f, &p, &cert.isometry(), cert.members, cert.env_extra)
}

struct RunOutcome {
    value: f64,
    cert: RoofCertificate,
    trace: Vec<f64>,
    converged: bool,
}

/// Upper bound on min Σ p_i f(ρ_i) over decompositions of `s`.
///
/// Starting points: the spectral decomposition, every seed, then Haar-random
/// isometries up to the restart budget. The single-member decomposition
/// (f(s) itself) is always a candidate.
pub fn convex_roof(
    f: &RoofFunctional,
    s: &QuantumState,
    opts: &RoofOptions,
) -> Result<OptimizationResult<RoofCertificate>> {
    let p = Purification::of(s)?;
    let r = p.rank();
    let k = opts.members.unwrap_or_else(|| default_members(r));
    if k < r {
        return Err(Error::Argument(format!("member count {k} is below the rank {r}")));
    }
    if opts.env_extra == 0 {
        return Err(Error::Argument("env_extra must be at least 1".into()));
    }
    let fe = opts.env_extra;
    let d = k * fe;

    let trivial_value = f(s)?;
    let trivial = RoofCertificate {
        members: 1,
        env_extra: r,
        base_isometry: CMatrix::identity(r, r),
        params: vec![0.0; r * r],
    };

    let mut starts: Vec<CMatrix> = Vec::new();
    let mut spectral = CMatrix::zeros(d, r);
    for j in 0..r {
        spectral[(j * fe, j)] = linalg::ONE;
    }
    starts.push(spectral);
    for seed in &opts.seeds {
        starts.push(seed.embedded(k, fe)?.base_isometry);
    }
    let master = opts.optimizer.seed;
    let mut idx = starts.len() as u64;
    while starts.len() < opts.optimizer.restarts.max(1) {
        let mut rng = seeded_rng(derive_seed(master, idx));
        starts.push(linalg::haar_isometry(d, r, &mut rng));
        idx += 1;
    }
    let restarts_used = starts.len();
    let o = opts.optimizer;
    let outcomes = run_starts(starts, |_, base| {
        let chart = IsometryChart::new(&base);
        let objective = |theta: &[f64]| {
            roof_value(f, &p, &chart.isometry(theta), k, fe).unwrap_or(f64::INFINITY)
        };
        let x0 = vec![0.0; chart.n_params()];
        let nm = nelder_mead(objective, &x0, o.initial_step, o.max_iterations, o.tolerance);
        RunOutcome {
            value: nm.value,
            cert: RoofCertificate {
                members: k,
                env_extra: fe,
                base_isometry: base,
                params: nm.x,
            },
            trace: nm.trace,
            converged: nm.converged,
        }
    });
    let values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let best = best_index(&values).expect("at least one start");
    if trivial_value <= outcomes[best].value {
        return Ok(OptimizationResult {
            value: trivial_value,
            certificate: trivial,
            trace: vec![trivial_value],
            converged: outcomes[best].converged,
            restarts_used,
        });
    }
    let win = outcomes.into_iter().nth(best).expect("index in range");
    Ok(OptimizationResult {
        value: win.value,
        certificate: win.cert,
        trace: win.trace,
        converged: win.converged,
        restarts_used,
    })
}

/// Entanglement of formation across {a, rest}: pure-member convex roof of
/// the entropy of entanglement S(ρ_a).
pub fn entanglement_of_formation(
    s: &QuantumState,
    a: &[&str],
    opts: &RoofOptions,
) -> Result<OptimizationResult<RoofCertificate>> {
    complement(s, a)?;
    let opts = RoofOptions {
        env_extra: 1,
        ..opts.clone()
    };
    let side: Vec<String> = a.iter().map(|l| l.to_string()).collect();
    let f = move |m: &dyn Marginals| m.entropy_of(&as_strs(&side));
    convex_roof(&f, s, &opts)
}

/// Upper bound on the c-squashed entanglement: convex roof of (1/2) I(a:rest)
/// over decompositions (mixed when `env_extra` > 1).
pub fn c_squashed(
    s: &QuantumState,
    a: &[&str],
    opts: &RoofOptions,
) -> Result<OptimizationResult<RoofCertificate>> {
    let rest = complement(s, a)?;
    let side: Vec<String> = a.iter().map(|l| l.to_string()).collect();
    let f = move |m: &dyn Marginals| Ok(0.5 * mutual_information(m, &as_strs(&side), &as_strs(&rest))?);
    convex_roof(&f, s, opts)
}

/// Functional of [`c_squashed`], exposed for certificate re-evaluation.
pub fn half_mutual_information(a: Vec<String>, b: Vec<String>) -> impl Fn(&dyn Marginals) -> Result<f64> + Sync {
    move |m: &dyn Marginals| Ok(0.5 * mutual_information(m, &as_strs(&a), &as_strs(&b))?)
}

/// Functional of [`entanglement_of_formation`].
pub fn entanglement_entropy(a: Vec<String>) -> impl Fn(&dyn Marginals) -> Result<f64> + Sync {
    move |m: &dyn Marginals| m.entropy_of(&as_strs(&a))
}

/// Numerical rank helper re-exported for callers choosing k.
pub fn numerical_rank(s: &QuantumState) -> usize {
    s.eigenvalues().iter().filter(|&&x| x > EIG_CLAMP).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_named_state, random_pure_state_with, random_state, Family};

    fn named(f: Family) -> QuantumState {
        make_named_state(&f).unwrap().into_mixed()
    }

    fn quick() -> RoofOptions {
        RoofOptions::with_optimizer(OptimizerOptions::default().with_budget(4, 400))
    }

    #[test]
    fn log_negativity_examples() {
        assert!((log_negativity(&named(Family::Bell), &["A"]).unwrap() - 1.0).abs() < 1e-12);
        let prod = named(Family::Product { dims: vec![2, 3], digits: vec![1, 2] });
        assert!(log_negativity(&prod, &["A"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn werner_log_negativity_threshold() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let en = log_negativity(&named(Family::Werner { p, d: 2 }), &["A"]).unwrap();
            if p <= 1.0 / 3.0 {
                assert!(en.abs() < 1e-12, "p={p}: {en}");
            } else {
                assert!(en > 1e-6, "p={p}: {en}");
            }
        }
    }

    #[test]
    fn ppt_examples() {
        assert!(!ppt_check(&named(Family::Bell), &["A"]).unwrap());
        assert!(ppt_check(&named(Family::ClassicallyCorrelated { d: 3 }), &["A"]).unwrap());
        let flower = crate::states::flower_state(2).unwrap();
        let lost = flower.partial_trace(&["A1", "B1", "B2"]).unwrap();
        assert!(ppt_check(&lost, &["A1"]).unwrap());
    }

    #[test]
    fn bipartition_must_be_proper() {
        let bell = named(Family::Bell);
        assert!(log_negativity(&bell, &["A", "B"]).is_err());
        assert!(log_negativity(&bell, &["Z"]).is_err());
    }

    #[test]
    fn pure_input_gives_exact_value() {
        let mut rng = seeded_rng(5);
        let psi = random_pure_state_with(vec![2, 3], ["A", "B"], &mut rng).unwrap().to_density();
        let r = entanglement_of_formation(&psi, &["A"], &quick()).unwrap();
        let exact = crate::entropy::von_neumann_entropy(&psi.partial_trace(&["A"]).unwrap());
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn bell_formation_is_one() {
        let r = entanglement_of_formation(&named(Family::Bell), &["A"], &quick()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let c = c_squashed(&named(Family::Bell), &["A"], &quick()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn classically_correlated_has_zero_c_squashed() {
        let r = c_squashed(&named(Family::ClassicallyCorrelated { d: 2 }), &["A"], &quick()).unwrap();
        assert!(r.value <= 5e-3, "{}", r.value);
    }

    #[test]
    fn certificate_reproduces_value() {
        let s = random_state(vec![2, 2], ["A", "B"], 2, 3).unwrap();
        let r = entanglement_of_formation(&s, &["A"], &quick()).unwrap();
        let f = entanglement_entropy(vec!["A".into()]);
        let again = evaluate_roof(&f, &s, &r.certificate).unwrap();
        assert!((again - r.value).abs() < 1e-9);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.trace.last().unwrap(), r.value);
        let ens = r.certificate.ensemble(&s).unwrap();
        assert!(linalg::max_abs_diff(ens.average().matrix(), s.matrix()) < 1e-9);
    }

    #[test]
    fn known_decomposition_round_trips() {
        let bell = named(Family::Bell);
        let dephased = named(Family::ClassicallyCorrelated { d: 2 });
        let ens = Ensemble::new(vec![
            (0.5, QuantumState::basis(vec![2, 2], &[0, 0], ["A", "B"]).unwrap()),
            (0.5, QuantumState::basis(vec![2, 2], &[1, 1], ["A", "B"]).unwrap()),
        ])
        .unwrap();
        let cert = RoofCertificate::from_ensemble(&dephased, &ens).unwrap();
        let f = half_mutual_information(vec!["A".into()], vec!["B".into()]);
        assert!(evaluate_roof(&f, &dephased, &cert).unwrap().abs() < 1e-10);
        assert!(RoofCertificate::from_ensemble(&bell, &ens).is_err());
    }

    #[test]
    fn too_few_members_is_an_error() {
        let s = random_state(vec![2, 2], ["A", "B"], 4, 1).unwrap();
        let opts = RoofOptions {
            members: Some(3),
            ..quick()
        };
        assert!(matches!(entanglement_of_formation(&s, &["A"], &opts), Err(Error::Argument(_))));
    }

    #[test]
    fn roof_never_exceeds_trivial_value() {
        let s = random_state(vec![2, 2], ["A", "B"], 3, 12).unwrap();
        let r = c_squashed(&s, &["A"], &quick()).unwrap();
        let trivial = 0.5 * mutual_information(&s, &["A"], &["B"]).unwrap();
        assert!(r.value <= trivial + 1e-9);
    }

    #[test]
    fn embedding_keeps_the_decomposition() {
        let s = random_state(vec![2, 2], ["A", "B"], 2, 8).unwrap();
        let r = entanglement_of_formation(&s, &["A"], &quick()).unwrap();
        let big = r.certificate.embedded(6, 1).unwrap();
        let f = entanglement_entropy(vec!["A".into()]);
        assert!((evaluate_roof(&f, &s, &big).unwrap() - r.value).abs() < 1e-9);
    }
}
