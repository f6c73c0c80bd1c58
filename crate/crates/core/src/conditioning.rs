//! Conditioned measures: f(parties ∪ ancillas) − f(ancillas), minimized over
//! extensions of the input state.
//!
//! Extensions are generated from the purification |Ψ⟩ of ρ by an isometry
//! V : C → (ancillas) ⊗ F, with F discarded. Every channel from the purifying
//! system into the ancillas has such a dilation, so with large enough F every
//! extension is reachable. Values are certified upper bounds: each one comes
//! with a certificate that rebuilds the extension it was measured on.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::codec::StateFile;
use crate::entropy::{multipartite_i_n, multipartite_s_n, mutual_information, Marginals};
use crate::error::{Error, Result};
use crate::exact_measures::{c_squashed, entanglement_of_formation, Purification, RoofOptions};
use crate::linalg::{self, hermitian_eigen, CMatrix, CVector};
use crate::optimize::{
    best_index, derive_seed, nelder_mead, run_starts, IsometryChart, OptimizationResult,
    OptimizerOptions,
};
use crate::states::{as_strs, seeded_rng, Ensemble, Partition, PureState, QuantumState, EIG_CLAMP};

/// Label of the discarded Stinespring environment.
pub const DISCARDED: &str = "F~";

/// Tolerance for an extension tracing back to its input state.
pub const EXTENSION_TOL: f64 = 1e-9;

/// Largest dense flag extension built as a seed for non-entropic bases.
const SPECTRAL_SEED_MAX_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasure {
    MutualInformation,
    In,
    Sn,
    LogNegativity,
    Negativity,
    Formation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// One ancilla per party: f(A A′ : B B′) − f(A′ : B′).
    Symmetric,
    /// A single ancilla E on the second side: f(A : B E) − f(A : E).
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedMeasure {
    pub base: BaseMeasure,
    pub conditioning: Conditioning,
    pub factor: f64,
}

impl ConditionedMeasure {
    pub fn c_i() -> Self {
        Self {
            base: BaseMeasure::MutualInformation,
            conditioning: Conditioning::Symmetric,
            factor: 0.5,
        }
    }

    pub fn e_sq_q() -> Self {
        Self {
            base: BaseMeasure::MutualInformation,
            conditioning: Conditioning::Asymmetric,
            factor: 0.5,
        }
    }

    /// CE built on a generating measure, no prefactor.
    pub fn ce(base: BaseMeasure) -> Self {
        Self {
            base,
            conditioning: Conditioning::Symmetric,
            factor: 1.0,
        }
    }

    /// Multipartite C_I (`In`) or C_S (`Sn`), no prefactor.
    pub fn multipartite(which: BaseMeasure) -> Self {
        Self::ce(which)
    }

    pub fn with_factor(self, factor: f64) -> Self {
        Self { factor, ..self }
    }
}

/// Which labels play which part: `parties[i]` are subsystems of the input
/// state, `ancillas[i]` the extension systems attached to them. Asymmetric
/// conditioning has two parties and a single ancilla group E.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub parties: Vec<Vec<String>>,
    pub ancillas: Vec<Vec<String>>,
}

fn fresh_label(base: String, used: &mut HashSet<String>) -> String {
    let mut l = base;
    while used.contains(&l) {
        l.push('\'');
    }
    used.insert(l.clone());
    l
}

impl Roles {
    /// One primed ancilla per party, named after the party's first label.
    pub fn symmetric(parties: &Partition) -> Result<Self> {
        if parties.len() < 2 {
            return Err(Error::Argument("conditioning needs at least two parties".into()));
        }
        let mut used: HashSet<String> = parties.all_labels().into_iter().collect();
        used.insert(DISCARDED.to_string());
        let ancillas = parties
            .groups()
            .iter()
            .map(|g| vec![fresh_label(format!("{}'", g[0]), &mut used)])
            .collect();
        Ok(Self {
            parties: parties.groups().to_vec(),
            ancillas,
        })
    }

    pub fn asymmetric(parties: &Partition) -> Result<Self> {
        if parties.len() != 2 {
            return Err(Error::Argument("asymmetric conditioning needs exactly two parties".into()));
        }
        let mut used: HashSet<String> = parties.all_labels().into_iter().collect();
        used.insert(DISCARDED.to_string());
        Ok(Self {
            parties: parties.groups().to_vec(),
            ancillas: vec![vec![fresh_label("E".into(), &mut used)]],
        })
    }

    pub fn party_labels(&self) -> Vec<String> {
        self.parties.iter().flatten().cloned().collect()
    }

    pub fn ancilla_labels(&self) -> Vec<String> {
        self.ancillas.iter().flatten().cloned().collect()
    }

    /// Symmetric roles seen asymmetrically: all ancillas merged into E.
    pub fn merged(&self) -> Self {
        Self {
            parties: self.parties.clone(),
            ancillas: vec![self.ancilla_labels()],
        }
    }

    fn check_shape(&self, conditioning: Conditioning) -> Result<()> {
        let ok = match conditioning {
            Conditioning::Symmetric => self.parties.len() >= 2 && self.ancillas.len() == self.parties.len(),
            Conditioning::Asymmetric => self.parties.len() == 2 && self.ancillas.len() == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "roles with {} parties and {} ancilla groups do not fit {conditioning:?} conditioning",
                self.parties.len(),
                self.ancillas.len()
            )))
        }
    }
}

/// Stinespring layout: ancilla labels and dims, plus the discarded F.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionAnsatz {
    pub out_labels: Vec<String>,
    pub out_dims: Vec<usize>,
    pub env_extra: usize,
}

impl ExtensionAnsatz {
    /// Symmetric: a qubit per ancilla, F = rank. Asymmetric: E = F = rank.
    /// Both make the trivial extension reachable from the chart origin.
    pub fn default_for(roles: &Roles, conditioning: Conditioning, rank: usize) -> Self {
        let out_labels = roles.ancilla_labels();
        let out_dims = match conditioning {
            Conditioning::Symmetric => vec![2; out_labels.len()],
            Conditioning::Asymmetric => vec![rank; out_labels.len()],
        };
        Self {
            out_labels,
            out_dims,
            env_extra: rank,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.out_dims.iter().product::<usize>() * self.env_extra
    }

    fn validate(&self, roles: &Roles) -> Result<()> {
        if self.out_labels.len() != self.out_dims.len() {
            return Err(Error::Argument("ansatz labels and dims differ in length".into()));
        }
        if self.out_dims.contains(&0) || self.env_extra == 0 {
            return Err(Error::Argument("ansatz dimensions must be at least 1".into()));
        }
        let mut a = self.out_labels.clone();
        let mut b = roles.ancilla_labels();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::Label(format!(
                "ansatz labels {:?} do not match the ancilla roles {:?}",
                self.out_labels,
                roles.ancilla_labels()
            )));
        }
        Ok(())
    }
}

/// An extension state. Products are kept factored so entropies of large
/// tensor products stay cheap.
#[derive(Debug, Clone)]
pub enum Extension {
    Pure(PureState),
    Mixed(QuantumState),
    Product {
        left: Box<Extension>,
        right: Box<Extension>,
        labels: Vec<String>,
    },
    /// Σ_i p_i ρ_i ⊗ |i⟩⟨i| on every flag, kept block-diagonal.
    Flagged {
        ensemble: Ensemble,
        flags: Vec<String>,
        labels: Vec<String>,
    },
}

fn shannon(weights: impl Iterator<Item = f64>) -> f64 {
    weights.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

impl Extension {
    /// Flag extension in factored form; flags follow the member subsystems.
    pub fn flagged(ensemble: Ensemble, flags: Vec<String>) -> Result<Self> {
        let mut labels = ensemble.members()[0].1.labels().to_vec();
        for f in &flags {
            if labels.contains(f) {
                return Err(Error::Label(format!("flag `{f}` clashes with a subsystem label")));
            }
            labels.push(f.clone());
        }
        Ok(Extension::Flagged { ensemble, flags, labels })
    }

    pub fn product(left: Extension, right: Extension) -> Result<Self> {
        let mut labels = left.labels().to_vec();
        for l in right.labels() {
            if labels.contains(l) {
                return Err(Error::Label(format!("label `{l}` on both tensor factors")));
            }
            labels.push(l.clone());
        }
        Ok(Extension::Product {
            left: Box::new(left),
            right: Box::new(right),
            labels,
        })
    }

    pub fn labels(&self) -> &[String] {
        match self {
            Extension::Pure(p) => p.labels(),
            Extension::Mixed(m) => m.labels(),
            Extension::Product { labels, .. } => labels,
            Extension::Flagged { labels, .. } => labels,
        }
    }

    fn check_labels(&self, keep: &[&str]) -> Result<()> {
        for l in keep {
            if !self.labels().iter().any(|x| x == l) {
                return Err(Error::Label(format!("extension has no subsystem `{l}`")));
            }
        }
        Ok(())
    }

    /// Reduction to `keep` (nonempty); subsystems stay in extension order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Extension> {
        self.check_labels(keep)?;
        match self {
            Extension::Pure(p) => {
                if keep.len() == p.labels().len() {
                    Ok(self.clone())
                } else {
                    Ok(Extension::Mixed(p.partial_trace(keep)?))
                }
            }
            Extension::Mixed(m) => Ok(Extension::Mixed(m.partial_trace(keep)?)),
            Extension::Product { left, right, .. } => {
                let (lk, rk): (Vec<&str>, Vec<&str>) = keep.iter().partition(|l| left.labels().iter().any(|x| x == *l));
                match (lk.is_empty(), rk.is_empty()) {
                    (false, true) => left.partial_trace(&lk),
                    (true, false) => right.partial_trace(&rk),
                    (false, false) => Extension::product(left.partial_trace(&lk)?, right.partial_trace(&rk)?),
                    (true, true) => Err(Error::Argument("partial trace needs a nonempty keep set".into())),
                }
            }
            Extension::Flagged { ensemble, flags, .. } => {
                let (fk, sk): (Vec<&str>, Vec<&str>) = keep.iter().partition(|l| flags.iter().any(|f| f == *l));
                if fk.is_empty() {
                    return Ok(Extension::Mixed(ensemble.average().partial_trace(&sk)?));
                }
                let flags: Vec<String> = fk.iter().map(|l| l.to_string()).collect();
                if sk.is_empty() {
                    return Ok(Extension::Mixed(flag_register(ensemble, &flags)));
                }
                Extension::flagged(ensemble.partial_trace(&sk)?, flags)
            }
        }
    }

    pub fn to_density(&self) -> Result<QuantumState> {
        match self {
            Extension::Pure(p) => Ok(p.to_density()),
            Extension::Mixed(m) => Ok(m.clone()),
            Extension::Product { left, right, .. } => left.to_density()?.tensor(&right.to_density()?),
            Extension::Flagged { ensemble, flags, .. } => QuantumState::flagged_mixture(ensemble, &as_strs(flags)),
        }
    }

    /// Same state with labels renamed through `map` (unlisted labels kept).
    pub fn renamed(&self, map: &std::collections::HashMap<String, String>) -> Result<Extension> {
        let rename = |ls: &[String]| -> Vec<String> { ls.iter().map(|l| map.get(l).unwrap_or(l).clone()).collect() };
        match self {
            Extension::Pure(p) => Ok(Extension::Pure(PureState::new(
                p.vector().clone(),
                p.dims().to_vec(),
                rename(p.labels()),
            )?)),
            Extension::Mixed(m) => Ok(Extension::Mixed(m.relabel(rename(m.labels()))?)),
            Extension::Product { left, right, .. } => Extension::product(left.renamed(map)?, right.renamed(map)?),
            Extension::Flagged { ensemble, flags, .. } => {
                let members = ensemble
                    .members()
                    .iter()
                    .map(|(p, m)| Ok((*p, m.relabel(rename(m.labels()))?)))
                    .collect::<Result<Vec<_>>>()?;
                Extension::flagged(Ensemble::new(members)?, rename(flags))
            }
        }
    }

    /// Density matrix of the marginal on `keep`, in extension order.
    pub fn marginal(&self, keep: &[&str]) -> Result<QuantumState> {
        self.partial_trace(keep)?.to_density()
    }
}

impl Marginals for Extension {
    fn subsystem_labels(&self) -> &[String] {
        self.labels()
    }

    fn entropy_of(&self, labels: &[&str]) -> Result<f64> {
        match self {
            Extension::Pure(p) => p.entropy_of(labels),
            Extension::Mixed(m) => m.entropy_of(labels),
            Extension::Product { left, right, .. } => {
                self.check_labels(labels)?;
                let (lk, rk): (Vec<&str>, Vec<&str>) =
                    labels.iter().partition(|l| left.labels().iter().any(|x| x == *l));
                Ok(left.entropy_of(&lk)? + right.entropy_of(&rk)?)
            }
            Extension::Flagged { ensemble, flags, .. } => {
                self.check_labels(labels)?;
                let (fk, sk): (Vec<&str>, Vec<&str>) = labels.iter().partition(|l| flags.iter().any(|f| f == *l));
                if fk.is_empty() {
                    return ensemble.average().entropy_of(&sk);
                }
                let mut total = shannon(ensemble.members().iter().map(|(p, _)| *p));
                for (p, m) in ensemble.members() {
                    if *p > 0.0 {
                        total += p * m.entropy_of(&sk)?;
                    }
                }
                Ok(total)
            }
        }
    }
}

/// Classical state Σ_i p_i |i…i⟩⟨i…i| on the flag registers alone.
fn flag_register(ens: &Ensemble, flags: &[String]) -> QuantumState {
    let k = ens.len();
    let kf = k.pow(flags.len() as u32);
    let mut m = CMatrix::zeros(kf, kf);
    for (i, (p, _)) in ens.members().iter().enumerate() {
        let f = flags.iter().fold(0usize, |acc, _| acc * k + i);
        m[(f, f)] = num_complex::Complex64::new(*p, 0.0);
    }
    QuantumState::from_trusted(m, vec![k; flags.len()], flags.to_vec())
}

/// How a certificate's extension is produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtensionKind {
    /// Isometry on the purifying system of the input state.
    Stinespring {
        ansatz: ExtensionAnsatz,
        #[serde(with = "crate::codec::matrix")]
        base_isometry: CMatrix,
        params: Vec<f64>,
    },
    /// The extension state itself.
    Explicit { state: StateFile },
    /// Tensor product of two self-contained extensions.
    Product {
        left: Box<ExtensionKind>,
        right: Box<ExtensionKind>,
    },
    /// Flag extension of an ensemble.
    Flagged {
        flags: Vec<String>,
        weights: Vec<f64>,
        members: Vec<StateFile>,
    },
}

impl ExtensionKind {
    pub fn from_extension(e: &Extension) -> Self {
        match e {
            Extension::Pure(p) => ExtensionKind::Explicit {
                state: StateFile::from_pure(p),
            },
            Extension::Mixed(m) => ExtensionKind::Explicit {
                state: StateFile::from_mixed(m),
            },
            Extension::Product { left, right, .. } => ExtensionKind::Product {
                left: Box::new(Self::from_extension(left)),
                right: Box::new(Self::from_extension(right)),
            },
            Extension::Flagged { ensemble, flags, .. } => ExtensionKind::Flagged {
                flags: flags.clone(),
                weights: ensemble.members().iter().map(|(p, _)| *p).collect(),
                members: ensemble.members().iter().map(|(_, m)| StateFile::from_mixed(m)).collect(),
            },
        }
    }

    fn build(&self, purification: Option<&Purification>) -> Result<Extension> {
        match self {
            ExtensionKind::Stinespring {
                ansatz,
                base_isometry,
                params,
            } => {
                let p = purification.ok_or_else(|| {
                    Error::Argument("a Stinespring extension inside a product must be materialized first".into())
                })?;
                let chart = IsometryChart::new(base_isometry);
                if params.len() != chart.n_params() || base_isometry.ncols() != p.rank() {
                    return Err(Error::Argument("certificate does not match the state's rank".into()));
                }
                let v = chart.isometry(params);
                Ok(Extension::Pure(stinespring_state(p, ansatz, &v)?))
            }
            ExtensionKind::Explicit { state } => match state.to_named()? {
                crate::states::NamedState::Pure(p) => Ok(Extension::Pure(p)),
                crate::states::NamedState::Mixed(m) => Ok(Extension::Mixed(m)),
            },
            ExtensionKind::Product { left, right } => Extension::product(left.build(None)?, right.build(None)?),
            ExtensionKind::Flagged { flags, weights, members } => {
                if weights.len() != members.len() {
                    return Err(Error::Argument("flagged certificate: weights and members differ in length".into()));
                }
                let members = weights
                    .iter()
                    .zip(members)
                    .map(|(p, m)| Ok((*p, m.to_mixed()?)))
                    .collect::<Result<Vec<_>>>()?;
                Extension::flagged(Ensemble::new(members)?, flags.clone())
            }
        }
    }
}

/// An extension together with the roles it is measured under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionCertificate {
    pub roles: Roles,
    #[serde(flatten)]
    pub kind: ExtensionKind,
}

impl ExtensionCertificate {
    /// Rebuilds the extension of `s` and checks that it traces back to `s`.
    pub fn build(&self, s: &QuantumState) -> Result<Extension> {
        let p = match self.kind {
            ExtensionKind::Stinespring { .. } => Some(Purification::of(s)?),
            _ => None,
        };
        let e = self.kind.build(p.as_ref())?;
        check_extends(&e, &self.roles, s)?;
        Ok(e)
    }

    /// Same extension, stored as an explicit state with F traced out.
    pub fn materialize(&self, s: &QuantumState) -> Result<ExtensionCertificate> {
        let e = self.build(s)?;
        let keep: Vec<String> = e.labels().iter().filter(|l| *l != DISCARDED).cloned().collect();
        let e = if keep.len() == e.labels().len() {
            e
        } else {
            e.partial_trace(&as_strs(&keep))?
        };
        Ok(ExtensionCertificate {
            roles: self.roles.clone(),
            kind: ExtensionKind::from_extension(&e),
        })
    }

    /// The same extension read asymmetrically (every ancilla becomes part of
    /// E). Needs two parties.
    pub fn to_asymmetric(&self) -> ExtensionCertificate {
        ExtensionCertificate {
            roles: self.roles.merged(),
            kind: self.kind.clone(),
        }
    }
}

/// Errors unless the parties' marginal of `e` equals `s` within 1e-9.
pub fn check_extends(e: &Extension, roles: &Roles, s: &QuantumState) -> Result<()> {
    let parties = roles.party_labels();
    let mut sorted_p = parties.clone();
    let mut sorted_s = s.labels().to_vec();
    sorted_p.sort();
    sorted_s.sort();
    if sorted_p != sorted_s {
        return Err(Error::Label(format!(
            "roles cover {parties:?} but the state is on {:?}",
            s.labels()
        )));
    }
    for l in roles.ancilla_labels() {
        if !e.labels().contains(&l) {
            return Err(Error::Label(format!("extension lacks ancilla `{l}`")));
        }
    }
    let back = e.marginal(&as_strs(&parties))?.reorder(s.labels())?;
    let gap = linalg::max_abs_diff(back.matrix(), s.matrix());
    if gap > EXTENSION_TOL {
        return Err(Error::Validation(format!("extension does not reduce to the state (gap {gap:.2e})")));
    }
    Ok(())
}

/// (I ⊗ V)|Ψ⟩ on the input subsystems, ancillas and F.
fn stinespring_state(p: &Purification, ansatz: &ExtensionAnsatz, v: &CMatrix) -> Result<PureState> {
    let d = ansatz.output_dim();
    if v.nrows() != d || v.ncols() != p.rank() {
        return Err(Error::Dimension(format!(
            "isometry is {}x{}, ansatz needs {d}x{}",
            v.nrows(),
            v.ncols(),
            p.rank()
        )));
    }
    let g = p.apply(v);
    let n = g.nrows();
    let vec = CVector::from_fn(n * d, |k, _| g[(k / d, k % d)]);
    let mut dims = p.dims.clone();
    dims.extend_from_slice(&ansatz.out_dims);
    dims.push(ansatz.env_extra);
    let mut labels = p.labels.clone();
    labels.extend(ansatz.out_labels.iter().cloned());
    labels.push(DISCARDED.to_string());
    let unique: HashSet<&String> = labels.iter().collect();
    if unique.len() != labels.len() {
        return Err(Error::Label("ancilla labels clash with the state's labels".into()));
    }
    Ok(PureState::from_trusted(vec, dims, labels))
}

/// Σ_i p_i ρ_i ⊗ |i⟩⟨i| on every ancilla. Each ancilla group must be a single
/// label; symmetric roles give the two-sided flags, asymmetric ones a single
/// flag E.
pub fn flag_extension(ens: &Ensemble, roles: &Roles) -> Result<QuantumState> {
    let mut flags = Vec::new();
    for g in &roles.ancillas {
        if g.len() != 1 {
            return Err(Error::Argument("flag extensions need one label per ancilla group".into()));
        }
        flags.push(g[0].as_str());
    }
    QuantumState::flagged_mixture(ens, &flags)
}

/// [`flag_extension`] kept block-diagonal; entropies cost no more than the
/// members' own.
pub fn flag_extension_factored(ens: &Ensemble, roles: &Roles) -> Result<Extension> {
    let mut flags = Vec::new();
    for g in &roles.ancillas {
        if g.len() != 1 {
            return Err(Error::Argument("flag extensions need one label per ancilla group".into()));
        }
        flags.push(g[0].clone());
    }
    Extension::flagged(ens.clone(), flags)
}

/// Eigen-decomposition of `s` as an ensemble of pure members.
pub fn spectral_ensemble(s: &QuantumState) -> Result<Ensemble> {
    let (values, vectors) = hermitian_eigen(s.matrix());
    let kept: Vec<usize> = (0..values.len()).rev().filter(|&j| values[j] > EIG_CLAMP).collect();
    let mass: f64 = kept.iter().map(|&j| values[j]).sum();
    let members = kept
        .iter()
        .map(|&j| {
            let v = vectors.column(j).into_owned();
            let m = QuantumState::from_trusted(linalg::outer(&v), s.dims().to_vec(), s.labels().to_vec());
            (values[j] / mass, m)
        })
        .collect();
    Ensemble::new(members)
}

fn base_value(
    e: &Extension,
    base: BaseMeasure,
    groups: &[Vec<String>],
    inner: &OptimizerOptions,
) -> Result<(f64, bool)> {
    let two = || -> Result<(Vec<&str>, Vec<&str>)> {
        if groups.len() != 2 {
            return Err(Error::Argument(format!("{base:?} is bipartite, got {} groups", groups.len())));
        }
        Ok((as_strs(&groups[0]), as_strs(&groups[1])))
    };
    let union: Vec<String> = groups.iter().flatten().cloned().collect();
    match base {
        BaseMeasure::MutualInformation => {
            let (a, b) = two()?;
            Ok((mutual_information(e, &a, &b)?, true))
        }
        BaseMeasure::In => Ok((multipartite_i_n(e, &Partition::new(groups.to_vec())?)?, true)),
        BaseMeasure::Sn => Ok((multipartite_s_n(e, &Partition::new(groups.to_vec())?)?, true)),
        BaseMeasure::LogNegativity | BaseMeasure::Negativity => {
            let (a, _) = two()?;
            let m = e.marginal(&as_strs(&union))?;
            let norm = linalg::trace_norm_hermitian(&m.partial_transpose(&a)?);
            Ok((
                if base == BaseMeasure::LogNegativity {
                    norm.log2()
                } else {
                    (norm - 1.0) / 2.0
                },
                true,
            ))
        }
        BaseMeasure::Formation => {
            let (a, _) = two()?;
            let m = e.marginal(&as_strs(&union))?;
            if m.dim_of(&a)? == 1 || m.dim() == m.dim_of(&a)? {
                return Ok((0.0, true));
            }
            let r = entanglement_of_formation(&m, &a, &RoofOptions::with_optimizer(*inner))?;
            Ok((r.value, r.converged))
        }
    }
}

/// factor · [base(big split) − base(ancilla split)] on extension `e`.
/// The flag reports whether nested optimizations (formation base) converged.
pub fn conditioned_objective(
    e: &Extension,
    cm: &ConditionedMeasure,
    roles: &Roles,
    inner: &OptimizerOptions,
) -> Result<(f64, bool)> {
    roles.check_shape(cm.conditioning)?;
    let (big, small): (Vec<Vec<String>>, Vec<Vec<String>>) = match cm.conditioning {
        Conditioning::Symmetric => (
            roles
                .parties
                .iter()
                .zip(&roles.ancillas)
                .map(|(p, a)| p.iter().chain(a).cloned().collect())
                .collect(),
            roles.ancillas.clone(),
        ),
        Conditioning::Asymmetric => {
            let e_grp = &roles.ancillas[0];
            (
                vec![
                    roles.parties[0].clone(),
                    roles.parties[1].iter().chain(e_grp).cloned().collect(),
                ],
                vec![roles.parties[0].clone(), e_grp.clone()],
            )
        }
    };
    let (hi, ok_hi) = base_value(e, cm.base, &big, inner)?;
    let (lo, ok_lo) = base_value(e, cm.base, &small, inner)?;
    Ok((cm.factor * (hi - lo), ok_hi && ok_lo))
}

/// Rebuilds a certificate's extension of `s` and measures it.
pub fn evaluate_certificate(
    s: &QuantumState,
    cm: &ConditionedMeasure,
    cert: &ExtensionCertificate,
    inner: &OptimizerOptions,
) -> Result<(f64, bool)> {
    let e = cert.build(s)?;
    conditioned_objective(&e, cm, &cert.roles, inner)
}

#[derive(Debug, Clone)]
pub struct ConditionOptions {
    pub optimizer: OptimizerOptions,
    /// Budget for nested convex roofs (formation base).
    pub inner: OptimizerOptions,
    /// Search layout; the default depends on the conditioning and rank.
    pub ansatz: Option<ExtensionAnsatz>,
    /// Extensions evaluated as candidates; Stinespring ones matching the
    /// ansatz also seed a simplex run.
    pub seeds: Vec<ExtensionCertificate>,
    /// Decompositions of the input whose flag extensions are candidates.
    pub ensembles: Vec<Ensemble>,
    /// Evaluate only the trivial extension.
    pub trivial_only: bool,
    /// Add the flag extension of the eigen-decomposition.
    pub spectral_seed: bool,
    /// For a mutual-information base with two parties, also run the
    /// c-squashed convex roof and add the flag extension of its best
    /// decomposition.
    pub roof_seed: bool,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self {
            optimizer: OptimizerOptions::default(),
            inner: OptimizerOptions::nested(),
            ansatz: None,
            seeds: Vec::new(),
            ensembles: Vec::new(),
            trivial_only: false,
            spectral_seed: true,
            roof_seed: true,
        }
    }
}

impl ConditionOptions {
    pub fn with_optimizer(optimizer: OptimizerOptions) -> Self {
        Self {
            optimizer,
            ..Self::default()
        }
    }

    pub fn trivial() -> Self {
        Self {
            trivial_only: true,
            ..Self::default()
        }
    }
}

/// Chart origin giving the trivial extension, if the layout can hold it:
/// ancillas in |0…0⟩ with C moved into F (symmetric), or C copied into E
/// (asymmetric, where that is the state's own purification).
fn trivial_isometry(ansatz: &ExtensionAnsatz, conditioning: Conditioning, r: usize) -> Option<CMatrix> {
    let f = ansatz.env_extra;
    let anc: usize = ansatz.out_dims.iter().product();
    let mut v = CMatrix::zeros(anc * f, r);
    match conditioning {
        Conditioning::Symmetric if f >= r => {
            for j in 0..r {
                v[(j, j)] = linalg::ONE;
            }
        }
        Conditioning::Asymmetric if anc >= r => {
            for j in 0..r {
                v[(j * f, j)] = linalg::ONE;
            }
        }
        _ => return None,
    }
    Some(v)
}

/// s ⊗ |0…0⟩ on the ancillas.
fn product_extension(s: &QuantumState, ansatz: &ExtensionAnsatz) -> Result<QuantumState> {
    let digits = vec![0; ansatz.out_dims.len()];
    let anc = QuantumState::basis(ansatz.out_dims.clone(), &digits, ansatz.out_labels.iter().cloned())?;
    s.tensor(&anc)
}

struct Candidate {
    value: f64,
    cert: ExtensionCertificate,
    trace: Vec<f64>,
    converged: bool,
}

/// Certified upper bound on the conditioned measure `cm` of `s` under `roles`.
///
/// Candidates: the trivial extension (always), flag extensions of supplied
/// ensembles and of the spectral decomposition, supplied certificates, then
/// multi-start simplex runs over the Stinespring chart seeded with the
/// trivial isometry, matching certificates and Haar-random isometries.
pub fn minimize_conditioned(
    s: &QuantumState,
    cm: &ConditionedMeasure,
    roles: &Roles,
    opts: &ConditionOptions,
) -> Result<OptimizationResult<ExtensionCertificate>> {
    roles.check_shape(cm.conditioning)?;
    if cm.factor.is_nan() || cm.factor <= 0.0 {
        return Err(Error::Argument(format!("factor must be positive, got {}", cm.factor)));
    }
    let p = Purification::of(s)?;
    let r = p.rank();
    let ansatz = opts
        .ansatz
        .clone()
        .unwrap_or_else(|| ExtensionAnsatz::default_for(roles, cm.conditioning, r));
    ansatz.validate(roles)?;
    let inner = opts.inner;
    let eval = |cert: &ExtensionCertificate| evaluate_certificate(s, cm, cert, &inner);

    let stinespring = |base: CMatrix| ExtensionCertificate {
        roles: roles.clone(),
        kind: ExtensionKind::Stinespring {
            ansatz: ansatz.clone(),
            params: vec![0.0; IsometryChart::new(&base).n_params()],
            base_isometry: base,
        },
    };
    let trivial_v = trivial_isometry(&ansatz, cm.conditioning, r);
    let trivial = match &trivial_v {
        Some(v) => stinespring(v.clone()),
        None => ExtensionCertificate {
            roles: roles.clone(),
            kind: ExtensionKind::Explicit {
                state: StateFile::from_mixed(&product_extension(s, &ansatz)?),
            },
        },
    };
    let (tv, tok) = eval(&trivial)?;
    let mut candidates = vec![Candidate {
        value: tv,
        cert: trivial,
        trace: vec![tv],
        converged: tok,
    }];
    if opts.trivial_only {
        return Ok(OptimizationResult {
            value: tv,
            certificate: candidates.pop().expect("trivial candidate").cert,
            trace: vec![tv],
            converged: tok,
            restarts_used: 0,
        });
    }

    let mut explicit: Vec<ExtensionCertificate> = Vec::new();
    let single_labels = roles.ancillas.iter().all(|g| g.len() == 1);
    if single_labels {
        let mut ensembles = opts.ensembles.clone();
        // dense fallbacks for non-entropic bases stay small
        let entropic = matches!(cm.base, BaseMeasure::MutualInformation | BaseMeasure::In | BaseMeasure::Sn);
        let flagged_dim = s.dim() * r.pow(roles.ancillas.len() as u32);
        if opts.spectral_seed && r > 1 && (entropic || flagged_dim <= SPECTRAL_SEED_MAX_DIM) {
            ensembles.push(spectral_ensemble(s)?);
        }
        if opts.roof_seed && r > 1 && cm.base == BaseMeasure::MutualInformation && roles.parties.len() == 2 {
            let roof = c_squashed(s, &as_strs(&roles.parties[0]), &RoofOptions::with_optimizer(opts.optimizer))?;
            ensembles.push(roof.certificate.ensemble(s)?);
        }
        for ens in &ensembles {
            explicit.push(ExtensionCertificate {
                roles: roles.clone(),
                kind: ExtensionKind::from_extension(&flag_extension_factored(ens, roles)?),
            });
        }
    }
    let mut starts: Vec<CMatrix> = trivial_v.into_iter().collect();
    for seed in &opts.seeds {
        if let ExtensionKind::Stinespring {
            ansatz: a, base_isometry, params, ..
        } = &seed.kind
        {
            if *a == ansatz && seed.roles == *roles && base_isometry.ncols() == r {
                starts.push(IsometryChart::new(base_isometry).isometry(params));
            }
        }
        explicit.push(seed.clone());
    }
    for cert in explicit {
        let (value, converged) = eval(&cert)?;
        candidates.push(Candidate {
            value,
            trace: vec![value],
            cert,
            converged,
        });
    }

    let d = ansatz.output_dim();
    if d < r {
        return Err(Error::Argument(format!(
            "ansatz output dimension {d} is below the rank {r}"
        )));
    }
    let o = opts.optimizer;
    let mut idx = starts.len() as u64;
    while starts.len() < o.restarts.max(1) {
        let mut rng = seeded_rng(derive_seed(o.seed, idx));
        starts.push(linalg::haar_isometry(d, r, &mut rng));
        idx += 1;
    }
    let restarts_used = starts.len();
    let runs = run_starts(starts, |_, base| {
        let chart = IsometryChart::new(&base);
        let objective = |theta: &[f64]| -> f64 {
            let v = chart.isometry(theta);
            if linalg::isometry_defect(&v) > EXTENSION_TOL {
                return f64::INFINITY;
            }
            stinespring_state(&p, &ansatz, &v)
                .and_then(|psi| conditioned_objective(&Extension::Pure(psi), cm, roles, &inner))
                .map(|(v, _)| v)
                .unwrap_or(f64::INFINITY)
        };
        let nm = nelder_mead(objective, &vec![0.0; chart.n_params()], o.initial_step, o.max_iterations, o.tolerance);
        (nm, base)
    });
    let mut nm_converged = true;
    let mut run_candidates = Vec::with_capacity(runs.len());
    let run_values: Vec<f64> = runs.iter().map(|(nm, _)| nm.value).collect();
    if let Some(b) = best_index(&run_values) {
        nm_converged = runs[b].0.converged;
    }
    for (nm, base) in runs {
        let cert = ExtensionCertificate {
            roles: roles.clone(),
            kind: ExtensionKind::Stinespring {
                ansatz: ansatz.clone(),
                base_isometry: base,
                params: nm.x,
            },
        };
        run_candidates.push(Candidate {
            value: nm.value,
            cert,
            trace: nm.trace,
            converged: true,
        });
    }
    candidates.extend(run_candidates);

    let values: Vec<f64> = candidates.iter().map(|c| c.value).collect();
    let best = best_index(&values).expect("trivial candidate present");
    let mut win = candidates.swap_remove(best);
    let mut inner_ok = win.converged;
    if cm.base == BaseMeasure::Formation && matches!(win.cert.kind, ExtensionKind::Stinespring { .. }) {
        let (value, ok) = eval(&win.cert)?;
        inner_ok = ok;
        win.value = value;
        if win.trace.last() != Some(&value) {
            win.trace = vec![value];
        }
    }
    Ok(OptimizationResult {
        value: win.value,
        certificate: win.cert,
        trace: win.trace,
        converged: nm_converged && inner_ok,
        restarts_used,
    })
}

fn bipartite(s: &QuantumState, a: &[&str]) -> Result<(QuantumState, Partition)> {
    for l in a {
        if !s.has_label(l) {
            return Err(Error::Label(format!("no subsystem labeled `{l}`")));
        }
    }
    let b: Vec<&str> = s.labels().iter().map(String::as_str).filter(|l| !a.contains(l)).collect();
    let part = Partition::new(vec![a.to_vec(), b])?;
    Ok((s.clone(), part))
}

fn restrict(s: &QuantumState, parties: &Partition) -> Result<QuantumState> {
    parties.validate_for(s.labels())?;
    let labels = parties.all_labels();
    if labels.len() == s.labels().len() {
        Ok(s.clone())
    } else {
        s.partial_trace(&labels)
    }
}

/// C_I across a two-group partition (labels outside it are traced out).
pub fn c_i(
    s: &QuantumState,
    parties: &Partition,
    opts: &ConditionOptions,
) -> Result<OptimizationResult<ExtensionCertificate>> {
    if parties.len() != 2 {
        return Err(Error::Argument("C_I needs exactly two groups".into()));
    }
    conditional_entanglement(s, parties, ConditionedMeasure::c_i(), opts)
}

/// CE for an arbitrary conditioned measure over a partition.
pub fn conditional_entanglement(
    s: &QuantumState,
    parties: &Partition,
    cm: ConditionedMeasure,
    opts: &ConditionOptions,
) -> Result<OptimizationResult<ExtensionCertificate>> {
    let s = restrict(s, parties)?;
    let roles = match cm.conditioning {
        Conditioning::Symmetric => Roles::symmetric(parties)?,
        Conditioning::Asymmetric => Roles::asymmetric(parties)?,
    };
    minimize_conditioned(&s, &cm, &roles, opts)
}

/// Upper bound on the squashed entanglement between `a` and the rest.
pub fn e_sq_q_bound(
    s: &QuantumState,
    a: &[&str],
    opts: &ConditionOptions,
) -> Result<OptimizationResult<ExtensionCertificate>> {
    let (s, part) = bipartite(s, a)?;
    conditional_entanglement(&s, &part, ConditionedMeasure::e_sq_q(), opts)
}

/// Multipartite C_I (`In`) or C_S (`Sn`), factor 1.
pub fn multipartite_conditioned(
    s: &QuantumState,
    parties: &Partition,
    which: BaseMeasure,
    opts: &ConditionOptions,
) -> Result<OptimizationResult<ExtensionCertificate>> {
    if !matches!(which, BaseMeasure::In | BaseMeasure::Sn) {
        return Err(Error::Argument("multipartite conditioning takes I_n or S_n".into()));
    }
    conditional_entanglement(s, parties, ConditionedMeasure::multipartite(which), opts)
}

/// Extension of ρ⊗σ built from extensions of each factor; party and ancilla
/// groups are joined pairwise. Ancilla labels of `a` that collide with labels
/// of `b` are primed.
pub fn tensor_certificates(
    rho: &QuantumState,
    a: &ExtensionCertificate,
    sigma: &QuantumState,
    b: &ExtensionCertificate,
) -> Result<ExtensionCertificate> {
    if a.roles.parties.len() != b.roles.parties.len() || a.roles.ancillas.len() != b.roles.ancillas.len() {
        return Err(Error::Argument("certificates have different role shapes".into()));
    }
    let a = a.materialize(rho)?;
    let b = b.materialize(sigma)?;
    let ea = a.kind.build(None)?;
    let eb = b.kind.build(None)?;
    let mut used: HashSet<String> = ea.labels().iter().chain(eb.labels()).cloned().collect();
    let mut map = std::collections::HashMap::new();
    for l in ea.labels() {
        if eb.labels().contains(l) {
            if !a.roles.ancilla_labels().contains(l) {
                return Err(Error::Label(format!("party label `{l}` appears in both factors")));
            }
            map.insert(l.clone(), fresh_label(format!("{l}'"), &mut used));
        }
    }
    let ea = ea.renamed(&map)?;
    let rename = |g: &Vec<Vec<String>>| -> Vec<Vec<String>> {
        g.iter()
            .map(|grp| grp.iter().map(|l| map.get(l).unwrap_or(l).clone()).collect())
            .collect()
    };
    let join = |x: &[Vec<String>], y: &[Vec<String>]| -> Vec<Vec<String>> {
        x.iter().zip(y).map(|(p, q)| p.iter().chain(q).cloned().collect()).collect()
    };
    let roles = Roles {
        parties: join(&a.roles.parties, &b.roles.parties),
        ancillas: join(&rename(&a.roles.ancillas), &b.roles.ancillas),
    };
    Ok(ExtensionCertificate {
        roles,
        kind: ExtensionKind::Product {
            left: Box::new(ExtensionKind::from_extension(&ea)),
            right: Box::new(b.kind),
        },
    })
}

/// Splits a symmetric extension τ of ρ⊗σ into extensions of each factor:
/// ρ keeps τ whole and treats σ's parties as extra ancillas; σ gets τ with ρ
/// traced out. The two objectives sum to τ's objective for any base.
pub fn split_product_certificate(
    product: &QuantumState,
    cert: &ExtensionCertificate,
    rho_parties: &[Vec<String>],
) -> Result<(ExtensionCertificate, ExtensionCertificate)> {
    let roles = &cert.roles;
    if rho_parties.len() != roles.parties.len() {
        return Err(Error::Argument("party groups do not line up".into()));
    }
    let sigma_parties: Vec<Vec<String>> = roles
        .parties
        .iter()
        .zip(rho_parties)
        .map(|(all, r)| all.iter().filter(|l| !r.contains(l)).cloned().collect())
        .collect();
    let tau = cert.materialize(product)?;
    let e = tau.kind.build(None)?;
    let rho_cert = ExtensionCertificate {
        roles: Roles {
            parties: rho_parties.to_vec(),
            ancillas: sigma_parties
                .iter()
                .zip(&roles.ancillas)
                .map(|(s, x)| s.iter().chain(x).cloned().collect())
                .collect(),
        },
        kind: tau.kind.clone(),
    };
    let keep: Vec<String> = sigma_parties.iter().flatten().chain(roles.ancillas.iter().flatten()).cloned().collect();
    let sigma_cert = ExtensionCertificate {
        roles: Roles {
            parties: sigma_parties,
            ancillas: roles.ancillas.clone(),
        },
        kind: ExtensionKind::from_extension(&e.partial_trace(&as_strs(&keep))?),
    };
    Ok((rho_cert, sigma_cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{flower_state, make_named_state, random_state, Family};

    fn named(f: Family) -> QuantumState {
        make_named_state(&f).unwrap().into_mixed()
    }

    fn ab() -> Partition {
        Partition::parse("A:B").unwrap()
    }

    fn quick() -> ConditionOptions {
        ConditionOptions::with_optimizer(OptimizerOptions::default().with_budget(3, 300))
    }

    #[test]
    fn trivial_extension_gives_base_value() {
        let bell = named(Family::Bell);
        let r = c_i(&bell, &ab(), &ConditionOptions::trivial()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let w = named(Family::Werner { p: 0.8, d: 2 });
        let ce = conditional_entanglement(
            &w,
            &ab(),
            ConditionedMeasure::ce(BaseMeasure::LogNegativity),
            &ConditionOptions::trivial(),
        )
        .unwrap();
        let en = crate::exact_measures::log_negativity(&w, &["A"]).unwrap();
        assert!((ce.value - en).abs() < 1e-10);
    }

    #[test]
    fn flower_trivial_value() {
        for (d, want) in [(2usize, 1.5), (3, 1.0 + 0.5 * 3f64.log2()), (4, 2.0)] {
            let rho = flower_state(d).unwrap().partial_trace(&["A1", "A2", "B1", "B2"]).unwrap();
            let r = e_sq_q_bound(&rho, &["A1", "A2"], &ConditionOptions::trivial()).unwrap();
            assert!((r.value - want).abs() < 1e-9, "d={d}: {}", r.value);
        }
    }

    #[test]
    fn bell_c_i_is_one() {
        let r = c_i(&named(Family::Bell), &ab(), &quick()).unwrap();
        assert!((r.value - 1.0).abs() < 5e-3);
        assert!(r.converged);
    }

    #[test]
    fn classical_state_c_i_vanishes() {
        let r = c_i(&named(Family::ClassicallyCorrelated { d: 2 }), &ab(), &quick()).unwrap();
        assert!(r.value <= 5e-3, "{}", r.value);
    }

    #[test]
    fn flag_objective_is_average_mutual_information() {
        let members: Vec<(f64, QuantumState)> = (0..3)
            .map(|i| (1.0 / 3.0, random_state(vec![2, 2], ["A", "B"], 2, 40 + i).unwrap()))
            .collect();
        let expect: f64 = members
            .iter()
            .map(|(p, m)| p * 0.5 * mutual_information(m, &["A"], &["B"]).unwrap())
            .sum();
        let ens = Ensemble::new(members).unwrap();
        let roles = Roles::symmetric(&ab()).unwrap();
        let ext = Extension::Mixed(flag_extension(&ens, &roles).unwrap());
        let (v, _) = conditioned_objective(&ext, &ConditionedMeasure::c_i(), &roles, &OptimizerOptions::nested()).unwrap();
        assert!((v - expect).abs() < 1e-9);
        check_extends(&ext, &roles, &ens.average()).unwrap();
    }

    #[test]
    fn factored_extensions_match_dense() {
        let members: Vec<(f64, QuantumState)> = (0..3)
            .map(|i| ([0.2, 0.3, 0.5][i as usize], random_state(vec![2, 2], ["A", "B"], 3, 70 + i).unwrap()))
            .collect();
        let ens = Ensemble::new(members).unwrap();
        let roles = Roles::symmetric(&ab()).unwrap();
        let factored = flag_extension_factored(&ens, &roles).unwrap();
        let dense = Extension::Mixed(flag_extension(&ens, &roles).unwrap());
        let other = random_state(vec![2, 2], ["C", "D"], 2, 80).unwrap();
        let prod = Extension::product(factored.clone(), Extension::Mixed(other.clone())).unwrap();
        let prod_dense = Extension::Mixed(dense.to_density().unwrap().tensor(&other).unwrap());
        for (f, d) in [(&factored, &dense), (&prod, &prod_dense)] {
            for keep in [vec!["A"], vec!["A", "A'"], vec!["A'", "B'"], vec!["A", "B", "A'", "B'"]] {
                let (x, y) = (f.entropy_of(&keep).unwrap(), d.entropy_of(&keep).unwrap());
                assert!((x - y).abs() < 1e-12, "{keep:?}: {x} vs {y}");
            }
        }
        let keep = ["A", "B'", "C"];
        assert!((prod.entropy_of(&keep).unwrap() - prod_dense.entropy_of(&keep).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn certificates_reproduce_and_traces_descend() {
        let s = random_state(vec![2, 2], ["A", "B"], 2, 9).unwrap();
        let r = c_i(&s, &ab(), &quick()).unwrap();
        let (again, _) = evaluate_certificate(&s, &ConditionedMeasure::c_i(), &r.certificate, &OptimizerOptions::nested()).unwrap();
        assert!((again - r.value).abs() < 1e-9);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.trace.last().unwrap(), r.value);
        let trivial = 0.5 * mutual_information(&s, &["A"], &["B"]).unwrap();
        assert!(r.value <= trivial + 1e-9);
        let json = serde_json::to_string(&r.certificate).unwrap();
        let back: ExtensionCertificate = serde_json::from_str(&json).unwrap();
        let (v2, _) = evaluate_certificate(&s, &ConditionedMeasure::c_i(), &back, &OptimizerOptions::nested()).unwrap();
        assert!((v2 - r.value).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_reading_never_exceeds_symmetric() {
        let s = random_state(vec![2, 2], ["A", "B"], 3, 4).unwrap();
        let r = c_i(&s, &ab(), &quick()).unwrap();
        let asym = r.certificate.to_asymmetric();
        let (v, _) = evaluate_certificate(&s, &ConditionedMeasure::e_sq_q(), &asym, &OptimizerOptions::nested()).unwrap();
        assert!(v <= r.value + 1e-9);
    }

    #[test]
    fn product_certificates_add_and_split_back() {
        let rho = random_state(vec![2, 2], ["A", "B"], 2, 1).unwrap();
        let sigma = random_state(vec![2, 2], ["C", "D"], 2, 2).unwrap();
        let cm = ConditionedMeasure::c_i();
        let inner = OptimizerOptions::nested();
        let ra = c_i(&rho, &ab(), &quick()).unwrap();
        let rb = c_i(&sigma, &Partition::parse("C:D").unwrap(), &quick()).unwrap();
        let both = rho.tensor(&sigma).unwrap();
        let t = tensor_certificates(&rho, &ra.certificate, &sigma, &rb.certificate).unwrap();
        let (v, _) = evaluate_certificate(&both, &cm, &t, &inner).unwrap();
        assert!((v - ra.value - rb.value).abs() < 1e-9);
        let (x, y) = split_product_certificate(&both, &t, &[vec!["A".into()], vec!["B".into()]]).unwrap();
        let (vx, _) = evaluate_certificate(&rho, &cm, &x, &inner).unwrap();
        let (vy, _) = evaluate_certificate(&sigma, &cm, &y, &inner).unwrap();
        assert!((vx + vy - v).abs() < 1e-9);
        // x carries C and D as ancillas; tensoring it with y must rename them
        let again = tensor_certificates(&rho, &x, &sigma, &y).unwrap();
        let (va, _) = evaluate_certificate(&both, &cm, &again, &inner).unwrap();
        assert!((va - v).abs() < 1e-9);
    }

    #[test]
    fn multipartite_two_groups_matches_bipartite() {
        let bell = named(Family::Bell);
        let m = multipartite_conditioned(&bell, &ab(), BaseMeasure::In, &ConditionOptions::trivial()).unwrap();
        assert!((0.5 * m.value - 1.0).abs() < 1e-10);
        let ghz = named(Family::Ghz { n: 3 });
        let p = Partition::parse("A:B:C").unwrap();
        let g = multipartite_conditioned(&ghz, &p, BaseMeasure::In, &quick()).unwrap();
        assert!(g.value <= 3.0 + 1e-9);
    }

    #[test]
    fn pure_state_extensions_factorize() {
        let s = crate::states::random_pure_state_with(vec![2, 2], ["A", "B"], &mut seeded_rng(3))
            .unwrap()
            .to_density();
        let roles = Roles::symmetric(&ab()).unwrap();
        let ansatz = ExtensionAnsatz::default_for(&roles, Conditioning::Symmetric, 1);
        let v = linalg::haar_isometry(ansatz.output_dim(), 1, &mut seeded_rng(8));
        let psi = stinespring_state(&Purification::of(&s).unwrap(), &ansatz, &v).unwrap();
        let e = Extension::Pure(psi);
        let whole = e.marginal(&["A", "B", "A'", "B'"]).unwrap();
        let anc = e.marginal(&["A'", "B'"]).unwrap();
        let prod = s.tensor(&anc).unwrap();
        assert!(linalg::max_abs_diff(whole.matrix(), prod.matrix()) < 1e-10);
    }

    #[test]
    fn bad_roles_are_rejected() {
        let bell = named(Family::Bell);
        assert!(c_i(&bell, &Partition::parse("A:Z").unwrap(), &quick()).is_err());
        assert!(c_i(&bell, &Partition::parse("A").unwrap(), &quick()).is_err());
    }
}
