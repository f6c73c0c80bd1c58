//! Seeded verification harness. Each check samples cases, measures the slack
//! of an identity or inequality, and reports the worst case.
//!
//! Exact identities use 1e-8 (1e-9 for the chain rule); checks that depend on
//! optimizer output use 5e-3 to 0.08 bits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditioning::{
    c_i, conditional_entanglement, conditioned_objective, e_sq_q_bound,
    evaluate_certificate, flag_extension, split_product_certificate, tensor_certificates,
    BaseMeasure, ConditionOptions, ConditionedMeasure, Extension, ExtensionCertificate, ExtensionKind,
    Roles,
};
use crate::entropy::{
    conditional_entropy, conditional_mutual_information, continuity_bound, continuity_bound_ci,
    holevo_quantity, multipartite_i_n, multipartite_s_n, mutual_information, von_neumann_entropy,
};
use crate::error::{Error, Result};
use crate::exact_measures::{
    c_squashed, min_partial_transpose_eigenvalue, Purification, RoofOptions,
};
use crate::linalg::{self, CMatrix};
use crate::optimize::{derive_seed, OptimizerOptions};
use crate::states::{
    fidelity, flower_state, make_named_state, random_kraus, random_pure_state_with, random_state,
    seeded_rng, trace_distance, Ensemble, Family, Partition, QuantumState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Quick,
    Full,
}

impl Profile {
    fn pick(self, full: usize, quick: usize) -> usize {
        match self {
            Profile::Full => full,
            Profile::Quick => quick,
        }
    }

    /// Optimizer budget for searches inside checks.
    pub fn optimizer(self, seed: u64) -> OptimizerOptions {
        let o = OptimizerOptions::default().with_seed(seed);
        match self {
            Profile::Full => o,
            Profile::Quick => o.with_budget(4, 500),
        }
    }
}

/// Worst case of one assertion inside a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartReport {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub cases_run: usize,
    pub worst: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    /// True iff every part has margin ≥ −tolerance.
    pub passed: bool,
    /// Margin and tolerance of the part closest to (or furthest past) failure.
    pub margin: f64,
    pub tolerance: f64,
    pub cases_run: usize,
    pub seed: u64,
    pub details: String,
    pub parts: Vec<PartReport>,
}

struct Part {
    name: &'static str,
    tolerance: f64,
    margin: f64,
    cases: usize,
    worst: String,
}

impl Part {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            margin: f64::INFINITY,
            cases: 0,
            worst: String::new(),
        }
    }

    /// Records a slack; negative means the assertion is violated by that much.
    fn record(&mut self, slack: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if self.cases == 1 || slack < self.margin {
            self.margin = slack;
            self.worst = what();
        }
    }

    fn equal(&mut self, a: f64, b: f64, what: impl FnOnce() -> String) {
        self.record(-(a - b).abs(), what);
    }

    fn at_least(&mut self, lhs: f64, rhs: f64, what: impl FnOnce() -> String) {
        self.record(lhs - rhs, what);
    }

    fn finish(self, scale: f64) -> PartReport {
        let tolerance = self.tolerance * scale;
        let margin = if self.cases == 0 { 0.0 } else { self.margin };
        PartReport {
            name: self.name.to_string(),
            passed: self.cases > 0 && margin >= -tolerance,
            margin,
            tolerance,
            cases_run: self.cases,
            worst: self.worst,
        }
    }
}

fn assemble(name: &str, seed: u64, parts: Result<(Vec<Part>, String)>, scale: f64) -> CheckReport {
    match parts {
        Err(e) => CheckReport {
            name: name.to_string(),
            passed: false,
            margin: f64::NEG_INFINITY,
            tolerance: 0.0,
            cases_run: 0,
            seed,
            details: format!("error: {e}"),
            parts: vec![],
        },
        Ok((parts, note)) => {
            let parts: Vec<PartReport> = parts.into_iter().map(|p| p.finish(scale)).collect();
            let worst = parts
                .iter()
                .min_by(|a, b| {
                    let ra = (a.margin + a.tolerance) / a.tolerance.abs().max(1e-300);
                    let rb = (b.margin + b.tolerance) / b.tolerance.abs().max(1e-300);
                    ra.total_cmp(&rb)
                })
                .cloned();
            let (margin, tolerance, mut details) = match &worst {
                Some(w) => (w.margin, w.tolerance, format!("{}: {}", w.name, w.worst)),
                None => (0.0, 0.0, "no parts".to_string()),
            };
            if !note.is_empty() {
                details.push_str("; ");
                details.push_str(&note);
            }
            CheckReport {
                name: name.to_string(),
                passed: !parts.is_empty() && parts.iter().all(|p| p.passed),
                margin,
                tolerance,
                cases_run: parts.iter().map(|p| p.cases_run).max().unwrap_or(0),
                seed,
                details,
                parts,
            }
        }
    }
}

fn named(f: Family) -> Result<QuantumState> {
    Ok(make_named_state(&f)?.into_mixed())
}

fn groups(spec: &[&[&str]]) -> Vec<Vec<String>> {
    spec.iter().map(|g| g.iter().map(|l| l.to_string()).collect()).collect()
}

fn roles(parties: &[&[&str]], ancillas: &[&[&str]]) -> Roles {
    Roles {
        parties: groups(parties),
        ancillas: groups(ancillas),
    }
}

/// Unfactored I(parties ∪ ancillas) − I(ancillas) on a state.
fn mi_objective(s: &QuantumState, r: &Roles) -> Result<f64> {
    let cm = ConditionedMeasure::ce(BaseMeasure::MutualInformation);
    Ok(conditioned_objective(&Extension::Mixed(s.clone()), &cm, r, &OptimizerOptions::nested())?.0)
}

fn four_party(seed: u64, rank: usize) -> Result<QuantumState> {
    random_state(vec![2, 2, 2, 2], ["A", "B", "A'", "B'"], rank, seed)
}

fn c_i_roles() -> Roles {
    roles(&[&["A"], &["B"]], &[&["A'"], &["B'"]])
}

/// Flagged mixtures of two extensions have the mixture of their objectives.
pub fn check_convexity_flag(seed: u64, profile: Profile) -> CheckReport {
    check_convexity_flag_scaled(seed, profile, 1.0)
}

fn check_convexity_flag_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut mi = Part::new("mutual information, two-sided flags", 1e-8);
        let mut neg = Part::new("negativity, one-sided flag", 1e-8);
        let mut en_dev: f64 = 0.0;
        let inner = OptimizerOptions::nested();
        let big = roles(&[&["A"], &["B"]], &[&["A'", "A''"], &["B'", "B''"]]);
        let one_sided = roles(&[&["A"], &["B"]], &[&["A'", "A''"], &["B'"]]);
        let neg_cm = ConditionedMeasure::ce(BaseMeasure::Negativity);
        let en_cm = ConditionedMeasure::ce(BaseMeasure::LogNegativity);
        for case in 0..profile.pick(20, 5) {
            let rho = four_party(derive_seed(seed, 2 * case as u64), 1 + case % 4)?;
            let sigma = four_party(derive_seed(seed, 2 * case as u64 + 1), 1 + (case + 2) % 4)?;
            let r_mi = mi_objective(&rho, &c_i_roles())?;
            let s_mi = mi_objective(&sigma, &c_i_roles())?;
            let r_n = conditioned_objective(&Extension::Mixed(rho.clone()), &neg_cm, &c_i_roles(), &inner)?.0;
            let s_n = conditioned_objective(&Extension::Mixed(sigma.clone()), &neg_cm, &c_i_roles(), &inner)?.0;
            let r_en = conditioned_objective(&Extension::Mixed(rho.clone()), &en_cm, &c_i_roles(), &inner)?.0;
            let s_en = conditioned_objective(&Extension::Mixed(sigma.clone()), &en_cm, &c_i_roles(), &inner)?.0;
            for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let ens = Ensemble::new(vec![(lambda, rho.clone()), (1.0 - lambda, sigma.clone())])?;
                let tau = QuantumState::flagged_mixture(&ens, &["A''", "B''"])?;
                let v = mi_objective(&tau, &big)?;
                let want = lambda * r_mi + (1.0 - lambda) * s_mi;
                mi.equal(v, want, || format!("case {case}, lambda {lambda}: {v:.12} vs {want:.12}"));
                let tau1 = QuantumState::flagged_mixture(&ens, &["A''"])?;
                let e1 = Extension::Mixed(tau1);
                let v = conditioned_objective(&e1, &neg_cm, &one_sided, &inner)?.0;
                let want = lambda * r_n + (1.0 - lambda) * s_n;
                neg.equal(v, want, || format!("case {case}, lambda {lambda}: {v:.12} vs {want:.12}"));
                let v = conditioned_objective(&e1, &en_cm, &one_sided, &inner)?.0;
                en_dev = en_dev.max((v - (lambda * r_en + (1.0 - lambda) * s_en)).abs());
            }
        }
        Ok((
            vec![mi, neg],
            format!("log-negativity is not affine on flagged mixtures; largest deviation {en_dev:.3e} (not asserted)"),
        ))
    };
    assemble("convexity_flag", seed, run(), scale)
}

/// Local measurements on A do not raise I(AA′:BB′) − I(A′:B′) on average.
pub fn check_measurement_monotonicity(seed: u64, profile: Profile) -> CheckReport {
    check_measurement_monotonicity_scaled(seed, profile, 1.0)
}

fn check_measurement_monotonicity_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut avg = Part::new("average objective does not increase", 1e-8);
        let mut holevo = Part::new("Holevo combination is nonnegative", 1e-8);
        let mut step = Part::new("flagged-state equality step", 1e-8);
        let r = c_i_roles();
        for case in 0..profile.pick(30, 10) {
            let mut rng = seeded_rng(derive_seed(seed, case as u64));
            let rank = rng.random_range(1..=4);
            let ext = random_state(vec![2, 2, 2, 2], ["A", "B", "A'", "B'"], rank, rng.random())?;
            let kraus: Vec<CMatrix> = if case == 0 {
                vec![CMatrix::identity(2, 2)]
            } else {
                random_kraus(2, rng.random_range(2..=3), &mut rng)
            };
            let (ens, flagged) = ext.measurement_pushforward(&kraus, &["A"], "A0")?;
            let before = mi_objective(&ext, &r)?;
            let mut after = 0.0;
            for (p, m) in ens.members() {
                after += p * mi_objective(m, &r)?;
            }
            avg.at_least(before, after, || format!("case {case}: {before:.9} vs {after:.9}"));
            let chi = |keep: &[&str]| -> Result<f64> { holevo_quantity(&ens.partial_trace(keep)?) };
            let combo = chi(&["B", "B'"])? + chi(&["A'", "B'"])? - chi(&["A'"])? - chi(&["B'"])?;
            holevo.at_least(combo, 0.0, || format!("case {case}: {combo:.3e}"));
            let lhs = mutual_information(&flagged, &["A", "A0", "A'"], &["B", "B'"])?
                - mutual_information(&flagged, &["A'"], &["B'"])?;
            step.equal(lhs, after + combo, || format!("case {case}: {lhs:.12} vs {:.12}", after + combo));
        }
        Ok((vec![avg, holevo, step], String::new()))
    };
    assemble("measurement_monotonicity", seed, run(), scale)
}

/// Telescoping of the objective over a split of the parties, and the
/// chain-rule bound on each telescoped term.
pub fn check_superadditivity_decomposition(seed: u64, profile: Profile) -> CheckReport {
    check_superadditivity_scaled(seed, profile, 1.0)
}

fn check_superadditivity_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut tele = Part::new("telescoping identity", 1e-8);
        let mut dom = Part::new("terms dominate conditional mutual information", 1e-8);
        let mut flag = Part::new("flag extension gives ensemble average", 1e-8);
        let labels = ["A1", "A2", "A'", "B1", "B2", "B'"];
        let whole = roles(&[&["A1", "A2"], &["B1", "B2"]], &[&["A'"], &["B'"]]);
        let first = roles(&[&["A1"], &["B1"]], &[&["A2", "A'"], &["B2", "B'"]]);
        let second = roles(&[&["A2"], &["B2"]], &[&["A'"], &["B'"]]);
        for case in 0..profile.pick(20, 5) {
            let s = if case == 0 {
                // product across the 1 | 2 split
                let a = random_state(vec![2, 2], ["A1", "B1"], 2, derive_seed(seed, 1000))?;
                let b = random_state(vec![2, 2, 2, 2], ["A2", "A'", "B2", "B'"], 3, derive_seed(seed, 1001))?;
                a.tensor(&b)?.reorder(&labels)?
            } else {
                random_state(vec![2; 6], labels, 1 + case % 4, derive_seed(seed, case as u64))?
            };
            let t = mi_objective(&s, &whole)?;
            let t1 = mi_objective(&s, &first)?;
            let t2 = mi_objective(&s, &second)?;
            tele.equal(t, t1 + t2, || format!("case {case}: {t:.12} vs {:.12}", t1 + t2));
            let c1 = conditional_mutual_information(&s, &["A1"], &["B1"], &["A2", "A'", "B2", "B'"])?;
            let c2 = conditional_mutual_information(&s, &["A2"], &["B2"], &["A'", "B'"])?;
            dom.at_least(t1, c1, || format!("case {case}, first term: {t1:.9} vs {c1:.9}"));
            dom.at_least(t2, c2, || format!("case {case}, second term: {t2:.9} vs {c2:.9}"));
        }
        for case in 0..profile.pick(5, 2) {
            let members = (0..3)
                .map(|i| {
                    let m = random_state(vec![2; 4], ["A1", "A2", "B1", "B2"], 2, derive_seed(seed, (500 + 3 * case + i) as u64))?;
                    Ok((1.0 / 3.0, m))
                })
                .collect::<Result<Vec<_>>>()?;
            let want: f64 = members
                .iter()
                .map(|(p, m)| Ok(p * mutual_information(m, &["A1", "A2"], &["B1", "B2"])?))
                .sum::<Result<f64>>()?;
            let ens = Ensemble::new(members)?;
            let tau = flag_extension(&ens, &whole)?;
            let v = mi_objective(&tau, &whole)?;
            flag.equal(v, want, || format!("ensemble {case}: {v:.12} vs {want:.12}"));
        }
        Ok((vec![tele, dom, flag], String::new()))
    };
    assemble("superadditivity_decomposition", seed, run(), scale)
}

/// Best values after exchanging certificates between the factors and the
/// product until the additivity gap closes or `rounds` runs out.
pub struct Exchange {
    pub product: f64,
    pub first: f64,
    pub second: f64,
    pub rounds: usize,
}

impl Exchange {
    pub fn gap(&self) -> f64 {
        self.product - self.first - self.second
    }
}

/// Runs the conditioned search on ρ, σ and ρ⊗σ, injecting the tensor product
/// of the factors' certificates into the product search and splitting the
/// product's certificate back into certificates for the factors.
pub fn certificate_exchange(
    rho: &QuantumState,
    rho_parts: &Partition,
    sigma: &QuantumState,
    sigma_parts: &Partition,
    cm: ConditionedMeasure,
    opts: &ConditionOptions,
    rounds: usize,
) -> Result<Exchange> {
    let inner = opts.inner;
    let mut a = conditional_entanglement(rho, rho_parts, cm, opts)?;
    let mut b = conditional_entanglement(sigma, sigma_parts, cm, opts)?;
    let both = rho.tensor(sigma)?;
    let joint = Partition::new(
        rho_parts
            .groups()
            .iter()
            .zip(sigma_parts.groups())
            .map(|(x, y)| x.iter().chain(y).cloned().collect::<Vec<_>>()),
    )?;
    let seed_cert = tensor_certificates(rho, &a.certificate, sigma, &b.certificate)?;
    let popts = ConditionOptions {
        seeds: vec![seed_cert],
        ..opts.clone()
    };
    let p = conditional_entanglement(&both, &joint, cm, &popts)?;
    let (mut pv, mut pc): (f64, ExtensionCertificate) = (p.value, p.certificate);
    let mut used = 0;
    for round in 0..rounds {
        used = round + 1;
        let (x, y) = split_product_certificate(&both, &pc, rho_parts.groups())?;
        let (vx, _) = evaluate_certificate(rho, &cm, &x, &inner)?;
        let (vy, _) = evaluate_certificate(sigma, &cm, &y, &inner)?;
        if vx < a.value {
            a.value = vx;
            a.certificate = x;
        }
        if vy < b.value {
            b.value = vy;
            b.certificate = y;
        }
        let t = tensor_certificates(rho, &a.certificate, sigma, &b.certificate)?;
        let (vt, _) = evaluate_certificate(&both, &cm, &t, &inner)?;
        if vt < pv {
            pv = vt;
            pc = t;
        }
        if (pv - a.value - b.value).abs() <= 1e-9 {
            break;
        }
    }
    Ok(Exchange {
        product: pv,
        first: a.value,
        second: b.value,
        rounds: used,
    })
}

/// Additivity of C_I: the exact identity on product extensions, and the
/// optimizer-level gap after certificate exchange.
pub fn check_additivity_ci(seed: u64, profile: Profile) -> CheckReport {
    check_additivity_ci_scaled(seed, profile, 1.0)
}

fn check_additivity_ci_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut ident = Part::new("product-extension identity", 1e-8);
        let mut gap = Part::new("optimizer additivity gap", 0.05);
        let mut pure = Part::new("pure pairs", 5e-3);
        let r1 = c_i_roles();
        let r2 = roles(&[&["C"], &["D"]], &[&["C'"], &["D'"]]);
        let joint = roles(&[&["A", "C"], &["B", "D"]], &[&["A'", "C'"], &["B'", "D'"]]);
        for case in 0..profile.pick(50, 10) {
            let mut rng = seeded_rng(derive_seed(seed, case as u64));
            let e1 = random_state(vec![2; 4], ["A", "B", "A'", "B'"], rng.random_range(1..=4), rng.random())?;
            let e2 = random_state(vec![2; 4], ["C", "D", "C'", "D'"], rng.random_range(1..=4), rng.random())?;
            let tau = e1.tensor(&e2)?;
            let lhs = mi_objective(&tau, &joint)?;
            let rhs = mi_objective(&e1, &r1)? + mi_objective(&e2, &r2)?;
            ident.equal(lhs, rhs, || format!("case {case}: {lhs:.12} vs {rhs:.12}"));
        }
        let opts = ConditionOptions::with_optimizer(profile.optimizer(seed));
        let ab = Partition::parse("A:B")?;
        let cd = Partition::parse("C:D")?;
        let cm = ConditionedMeasure::c_i();
        let bell = named(Family::Bell)?;
        let bell_cd = bell.relabel(["C", "D"])?;
        let prod_cd = named(Family::Product {
            dims: vec![2, 2],
            digits: vec![0, 0],
        })?
        .relabel(["C", "D"])?;
        for (name, sigma, want) in [("Bell x Bell", &bell_cd, 2.0), ("Bell x product", &prod_cd, 1.0)] {
            let x = certificate_exchange(&bell, &ab, sigma, &cd, cm, &opts, 3)?;
            pure.equal(x.product, want, || format!("{name}: {:.9} vs {want}", x.product));
            gap.record(-x.gap().abs(), || format!("{name}: gap {:.3e}", x.gap()));
        }
        for case in 0..profile.pick(5, 2) {
            let rho = random_state(vec![2, 2], ["A", "B"], 2, derive_seed(seed, 100 + 2 * case as u64))?;
            let sigma = random_state(vec![2, 2], ["C", "D"], 2, derive_seed(seed, 101 + 2 * case as u64))?;
            let x = certificate_exchange(&rho, &ab, &sigma, &cd, cm, &opts, 3)?;
            gap.record(-x.gap().abs(), || {
                format!(
                    "pair {case}: product {:.6}, factors {:.6} + {:.6}, {} rounds",
                    x.product, x.first, x.second, x.rounds
                )
            });
        }
        Ok((vec![ident, gap, pure], String::new()))
    };
    assemble("additivity_ci", seed, run(), scale)
}

/// Certified chain E_sq^q ≤ C_I ≤ E_sq^c: the C_I search is seeded with the
/// flag extension of the best c-squashed decomposition, the E_sq^q search
/// with the C_I certificate read asymmetrically.
pub fn check_ordering(seed: u64, profile: Profile) -> CheckReport {
    check_ordering_scaled(seed, profile, 1.0)
}

/// Random mixture of product pure states, with the decomposition.
pub fn separable_with_decomposition(seed: u64, members: usize) -> Result<(QuantumState, Ensemble)> {
    let mut rng = seeded_rng(seed);
    let mut weights: Vec<f64> = (0..members).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut items = Vec::with_capacity(members);
    for w in weights {
        let a = random_pure_state_with(vec![2], ["A"], &mut rng)?;
        let b = random_pure_state_with(vec![2], ["B"], &mut rng)?;
        items.push((w, a.tensor(&b)?.to_density()));
    }
    let ens = Ensemble::new(items)?;
    Ok((ens.average(), ens))
}

/// Chain values for one state.
pub struct OrderingChain {
    pub e_sq_q: f64,
    pub c_i: f64,
    pub c_squashed: f64,
    /// Flag extension of the roof decomposition, measured as C_I.
    pub flag_value: f64,
    /// Best C_I certificate measured as E_sq^q.
    pub asymmetric_value: f64,
}

pub fn ordering_chain(s: &QuantumState, optimizer: OptimizerOptions, extra: Option<&Ensemble>) -> Result<OrderingChain> {
    let inner = OptimizerOptions::nested();
    let mut roof_opts = RoofOptions::with_optimizer(optimizer);
    if let Some(ens) = extra {
        roof_opts.seeds.push(crate::exact_measures::RoofCertificate::from_ensemble(s, ens)?);
        let k = roof_opts.seeds[0].members.max(crate::exact_measures::default_members(s.rank()));
        roof_opts.members = Some(k);
    }
    let csq = c_squashed(s, &["A"], &roof_opts)?;
    let ens = csq.certificate.ensemble(s)?;
    let sym = Roles::symmetric(&Partition::parse("A:B")?)?;
    let flag_cert = ExtensionCertificate {
        roles: sym.clone(),
        kind: ExtensionKind::from_extension(&crate::conditioning::flag_extension_factored(&ens, &sym)?),
    };
    let (flag_value, _) = evaluate_certificate(s, &ConditionedMeasure::c_i(), &flag_cert, &inner)?;
    let opts = ConditionOptions {
        ensembles: vec![ens],
        roof_seed: false,
        ..ConditionOptions::with_optimizer(optimizer)
    };
    let ci = c_i(s, &Partition::parse("A:B")?, &opts)?;
    let asym = ci.certificate.to_asymmetric();
    let (asymmetric_value, _) = evaluate_certificate(s, &ConditionedMeasure::e_sq_q(), &asym, &inner)?;
    let qopts = ConditionOptions {
        seeds: vec![asym],
        roof_seed: false,
        ..ConditionOptions::with_optimizer(optimizer)
    };
    let esq = e_sq_q_bound(s, &["A"], &qopts)?;
    Ok(OrderingChain {
        e_sq_q: esq.value,
        c_i: ci.value,
        c_squashed: csq.value,
        flag_value,
        asymmetric_value,
    })
}

fn check_ordering_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut flag = Part::new("roof decomposition converts to an equal C_I value", 1e-8);
        let mut asym = Part::new("C_I certificate read asymmetrically does not increase", 1e-8);
        let mut upper = Part::new("C_I <= E_sq^c", 2e-8);
        let mut lower = Part::new("E_sq^q <= C_I", 2e-8);
        let mut pure = Part::new("pure states: all equal S(A)", 5e-3);
        let mut sep = Part::new("separable states: all vanish", 5e-3);
        let optimizer = profile.optimizer(seed);
        let mut states: Vec<(String, QuantumState)> = Vec::new();
        for case in 0..profile.pick(10, 3) {
            let rank = 2 + case % 3;
            states.push((
                format!("random rank-{rank} state {case}"),
                random_state(vec![2, 2], ["A", "B"], rank, derive_seed(seed, case as u64))?,
            ));
        }
        let ps: &[f64] = match profile {
            Profile::Full => &[0.5, 0.8, 1.0],
            Profile::Quick => &[0.8],
        };
        for &p in ps {
            states.push((format!("werner({p})"), named(Family::Werner { p, d: 2 })?));
        }
        let pure_state = random_pure_state_with(vec![2, 2], ["A", "B"], &mut seeded_rng(derive_seed(seed, 77)))?;
        let (sep_state, sep_ens) = separable_with_decomposition(derive_seed(seed, 78), 6)?;
        states.push(("random pure state".into(), pure_state.to_density()));
        states.push(("separable mixture".into(), sep_state));
        let sa = von_neumann_entropy(&pure_state.partial_trace(&["A"])?);
        for (name, s) in &states {
            let extra = if name == "separable mixture" { Some(&sep_ens) } else { None };
            let c = ordering_chain(s, optimizer, extra)?;
            let show = || format!("{name}: E_sq^q {:.6}, C_I {:.6}, E_sq^c {:.6}", c.e_sq_q, c.c_i, c.c_squashed);
            flag.equal(c.flag_value, c.c_squashed, || format!("{name}: {:.12} vs {:.12}", c.flag_value, c.c_squashed));
            asym.at_least(c.c_i, c.asymmetric_value, show);
            upper.at_least(c.c_squashed, c.c_i, show);
            lower.at_least(c.c_i, c.e_sq_q, show);
            if name == "random pure state" {
                for v in [c.e_sq_q, c.c_i, c.c_squashed] {
                    pure.equal(v, sa, show);
                }
            }
            if name == "separable mixture" {
                for v in [c.e_sq_q, c.c_i, c.c_squashed] {
                    sep.at_least(0.0, v, show);
                }
            }
        }
        Ok((vec![flag, asym, upper, lower, pure, sep], String::new()))
    };
    assemble("ordering", seed, run(), scale)
}

/// Flower state value, separability after losing A2, and the drop of C_I.
pub fn check_flower(seed: u64, profile: Profile) -> CheckReport {
    check_flower_scaled(seed, profile, 1.0)
}

/// Reduced flower state ρ_{A1A2B1B2}.
pub fn flower_reduced(d: usize) -> Result<QuantumState> {
    flower_state(d)?.partial_trace(&["A1", "A2", "B1", "B2"])
}

/// ρ_{A1B1B2}: the flower state after A2 is lost.
pub fn flower_after_loss(d: usize) -> Result<QuantumState> {
    flower_state(d)?.partial_trace(&["A1", "B1", "B2"])
}

fn check_flower_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut value = Part::new("trivial-extension E_sq^q = 1 + log2(d)/2", 1e-9);
        let mut ppt = Part::new("PPT after losing A2", 1e-9);
        let mut lock = Part::new("C_I after losing A2 below a quarter of the value", 0.0);
        for d in 2..=4 {
            let want = 1.0 + 0.5 * (d as f64).log2();
            let rho = flower_reduced(d)?;
            let r = e_sq_q_bound(&rho, &["A1", "A2"], &ConditionOptions::trivial())?;
            value.equal(r.value, want, || format!("d={d}: {:.12} vs {want:.12}", r.value));
            let lost = flower_after_loss(d)?;
            let m = min_partial_transpose_eigenvalue(&lost, &["A1"])?;
            ppt.at_least(m, 0.0, || format!("d={d}: min eigenvalue {m:.3e}"));
            if d == 2 || profile == Profile::Full {
                let opts = ConditionOptions::with_optimizer(profile.optimizer(seed));
                let ci = c_i(&lost, &Partition::parse("A1:B1,B2")?, &opts)?;
                let bound = 0.25 * want;
                lock.at_least(bound, ci.value, || format!("d={d}: C_I {:.6} vs {bound:.6}", ci.value));
            }
        }
        Ok((vec![value, ppt, lock], String::new()))
    };
    assemble("flower", seed, run(), scale)
}

/// Purifications of ρ and σ with maximal overlap: coefficient matrices √ρ
/// and √σ·V·U† where √ρ√σ = U Σ V†.
pub fn uhlmann_purifications(rho: &QuantumState, sigma: &QuantumState) -> Result<(Purification, Purification)> {
    if rho.dims() != sigma.dims() {
        return Err(Error::Dimension("states live on different subsystems".into()));
    }
    let sr = linalg::psd_sqrt(rho.matrix());
    let ss = linalg::psd_sqrt(sigma.matrix());
    let svd = (&sr * &ss).svd(true, true);
    let u = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").adjoint();
    let make = |coeffs: CMatrix, s: &QuantumState| Purification {
        coeffs,
        dims: s.dims().to_vec(),
        labels: s.labels().to_vec(),
    };
    Ok((make(sr, rho), make(ss * v * u.adjoint(), sigma)))
}

/// Extension of the state on A', B' produced by a shared isometry on the
/// purifying system.
fn shared_extension(p: &Purification, v: &CMatrix) -> Result<QuantumState> {
    let d = v.nrows();
    let g = p.apply(v);
    let n = g.nrows();
    let psi = crate::linalg::CVector::from_fn(n * d, |k, _| g[(k / d, k % d)]);
    let mut dims = p.dims.clone();
    dims.extend_from_slice(&[2, 2, d / 4]);
    let mut labels = p.labels.clone();
    labels.extend(["A'".to_string(), "B'".to_string(), "F~".to_string()]);
    let pure = crate::states::PureState::new(psi, dims, labels)?;
    pure.partial_trace(&["A", "B", "A'", "B'"])
}

/// Conditional-entropy continuity, and continuity of the objective under a
/// shared extension channel applied to Uhlmann-optimal purifications.
pub fn check_continuity(seed: u64, profile: Profile) -> CheckReport {
    check_continuity_scaled(seed, profile, 1.0)
}

fn perturbed_pair(seed: u64, dims: Vec<usize>, eps_cap: f64) -> Result<(QuantumState, QuantumState, f64)> {
    let labels = ["A", "B"];
    let mut rng = seeded_rng(seed);
    let rho = random_state(dims.clone(), labels, rng.random_range(1..=dims.iter().product()), rng.random())?;
    let tau = random_state(dims, labels, 2, rng.random())?;
    let t = rng.random::<f64>() * eps_cap / 2.0;
    let m = rho.matrix().map(|z| z * (1.0 - t)) + tau.matrix().map(|z| z * t);
    let sigma = QuantumState::new(m, rho.dims().to_vec(), labels)?;
    let eps = trace_distance(&rho, &sigma)?;
    Ok((rho, sigma, eps))
}

fn check_continuity_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut fannes = Part::new("conditional entropy within 4 eps log dA + 2 H(eps)", 1e-9);
        let mut fid = Part::new("fidelity at least 1 - eps", 1e-9);
        let mut dist = Part::new("extensions within 2 sqrt(eps)", 1e-9);
        let mut obj = Part::new("objective difference within eps'", 1e-6);
        for case in 0..profile.pick(50, 10) {
            let dims = if case % 2 == 0 { vec![2, 2] } else { vec![2, 3] };
            let (rho, sigma, eps) = perturbed_pair(derive_seed(seed, case as u64), dims, 0.1)?;
            let d = (conditional_entropy(&rho, &["A"], &["B"])? - conditional_entropy(&sigma, &["A"], &["B"])?).abs();
            let bound = continuity_bound(eps, 2)?;
            fannes.at_least(bound, d, || format!("case {case}: eps {eps:.4}, |dS| {d:.6} vs {bound:.6}"));
            let f = fidelity(&rho, &sigma)?;
            fid.at_least(f, 1.0 - eps, || format!("case {case}: F {f:.9}, eps {eps:.4}"));
        }
        let r = c_i_roles();
        for case in 0..profile.pick(20, 5) {
            let (rho, sigma, eps) = if case == 0 {
                let bell = named(Family::Bell)?;
                let t = 0.01 / 1.5;
                let m = bell.matrix().map(|z| z * (1.0 - t)) + CMatrix::identity(4, 4).map(|z| z * (t / 4.0));
                let sigma = QuantumState::new(m, vec![2, 2], ["A", "B"])?;
                let eps = trace_distance(&bell, &sigma)?;
                (bell, sigma, eps)
            } else {
                perturbed_pair(derive_seed(seed, 1000 + case as u64), vec![2, 2], 0.1)?
            };
            let (pr, ps) = uhlmann_purifications(&rho, &sigma)?;
            let v = crate::states::random_isometry(16, 4, derive_seed(seed, 2000 + case as u64))?;
            let er = shared_extension(&pr, &v)?;
            let es = shared_extension(&ps, &v)?;
            let gap = trace_distance(&er, &es)?;
            let limit = 2.0 * eps.sqrt();
            dist.at_least(limit, gap, || format!("case {case}: {gap:.6} vs {limit:.6}"));
            let diff = (mi_objective(&er, &r)? - mi_objective(&es, &r)?).abs();
            let bound = continuity_bound_ci(eps, 4)?;
            obj.at_least(bound, diff, || format!("case {case}: eps {eps:.4}, diff {diff:.6} vs {bound:.4}"));
        }
        Ok((vec![fannes, fid, dist, obj], String::new()))
    };
    assemble("continuity", seed, run(), scale)
}

/// Three-qubit GHZ-family state p|GHZ+⟩⟨GHZ+| + (1−p)|GHZ−⟩⟨GHZ−|.
pub fn ghz_family(p: f64, labels: [&str; 3]) -> Result<QuantumState> {
    let mut m = CMatrix::zeros(8, 8);
    let h = num_complex::Complex64::new(0.5, 0.0);
    m[(0, 0)] = h;
    m[(7, 7)] = h;
    m[(0, 7)] = h * (2.0 * p - 1.0);
    m[(7, 0)] = h * (2.0 * p - 1.0);
    QuantumState::new(m, vec![2, 2, 2], labels)
}

/// Multipartite telescoping on product extensions and the optimizer gap.
pub fn check_multipartite_additivity(seed: u64, profile: Profile) -> CheckReport {
    check_multipartite_scaled(seed, profile, 1.0)
}

fn check_multipartite_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut ident_i = Part::new("I_n product-extension identity", 1e-8);
        let mut ident_s = Part::new("S_n product-extension identity", 1e-8);
        let mut gap = Part::new("optimizer additivity gap", 0.08);
        let mut prod = Part::new("product pairs vanish", 5e-3);
        let mut two = Part::new("I_2 matches bipartite C_I", 5e-3);
        let first = ["A", "B", "C", "A'", "B'", "C'"];
        let second = ["D", "E", "F", "D'", "E'", "F'"];
        let g1 = groups(&[&["A", "A'"], &["B", "B'"], &["C", "C'"]]);
        let a1 = groups(&[&["A'"], &["B'"], &["C'"]]);
        let g2 = groups(&[&["D", "D'"], &["E", "E'"], &["F", "F'"]]);
        let a2 = groups(&[&["D'"], &["E'"], &["F'"]]);
        let gj = groups(&[&["A", "A'", "D", "D'"], &["B", "B'", "E", "E'"], &["C", "C'", "F", "F'"]]);
        let aj = groups(&[&["A'", "D'"], &["B'", "E'"], &["C'", "F'"]]);
        let layouts = [[2, 1, 1], [1, 2, 1], [1, 1, 2]];
        for case in 0..profile.pick(20, 5) {
            let mut rng = seeded_rng(derive_seed(seed, case as u64));
            let mut dims1 = vec![2, 2, 2];
            dims1.extend(layouts[case % 3]);
            let mut dims2 = vec![2, 2, 2];
            dims2.extend(layouts[(case + 1) % 3]);
            let e1 = random_state(dims1, first, rng.random_range(1..=4), rng.random())?;
            let e2 = random_state(dims2, second, rng.random_range(1..=4), rng.random())?;
            let tau = e1.tensor(&e2)?;
            for (part, f) in [
                (&mut ident_i, multipartite_i_n::<QuantumState> as fn(&QuantumState, &Partition) -> Result<f64>),
                (&mut ident_s, multipartite_s_n::<QuantumState>),
            ] {
                let obj = |s: &QuantumState, g: &[Vec<String>], a: &[Vec<String>]| -> Result<f64> {
                    Ok(f(s, &Partition::new(g.to_vec())?)? - f(s, &Partition::new(a.to_vec())?)?)
                };
                let lhs = obj(&tau, &gj, &aj)?;
                let rhs = obj(&e1, &g1, &a1)? + obj(&e2, &g2, &a2)?;
                part.equal(lhs, rhs, || format!("case {case}: {lhs:.12} vs {rhs:.12}"));
            }
        }
        let opts = ConditionOptions::with_optimizer(profile.optimizer(seed));
        let abc = Partition::parse("A:B:C")?;
        let def = Partition::parse("D:E:F")?;
        let cm = ConditionedMeasure::multipartite(BaseMeasure::In);
        let product = |labels: [&str; 3]| -> Result<QuantumState> {
            named(Family::Product {
                dims: vec![2, 2, 2],
                digits: vec![0, 1, 0],
            })?
            .relabel(labels)
        };
        let ghz = named(Family::Ghz { n: 3 })?;
        let mut pairs: Vec<(String, QuantumState, QuantumState)> = vec![
            ("ghz x product".into(), ghz, product(["D", "E", "F"])?),
            ("product x product".into(), product(["A", "B", "C"])?, product(["D", "E", "F"])?),
        ];
        let ps: &[(f64, f64)] = match profile {
            Profile::Full => &[(0.9, 0.7), (0.8, 0.6), (0.95, 0.5)],
            Profile::Quick => &[(0.9, 0.7)],
        };
        for &(p, q) in ps {
            pairs.push((
                format!("ghz family {p} x {q}"),
                ghz_family(p, ["A", "B", "C"])?,
                ghz_family(q, ["D", "E", "F"])?,
            ));
        }
        for (name, rho, sigma) in &pairs {
            let x = certificate_exchange(rho, &abc, sigma, &def, cm, &opts, 3)?;
            gap.record(-x.gap().abs(), || {
                format!("{name}: product {:.6}, factors {:.6} + {:.6}", x.product, x.first, x.second)
            });
            if name == "product x product" {
                for v in [x.product, x.first, x.second] {
                    prod.at_least(0.0, v, || format!("{name}: {v:.6}"));
                }
            }
        }
        let bell = named(Family::Bell)?;
        let ab = Partition::parse("A:B")?;
        let half = ConditionedMeasure::multipartite(BaseMeasure::In).with_factor(0.5);
        let m = conditional_entanglement(&bell, &ab, half, &opts)?;
        let b = c_i(&bell, &ab, &opts)?;
        two.equal(m.value, b.value, || format!("{:.9} vs {:.9}", m.value, b.value));
        Ok((vec![ident_i, ident_s, gap, prod, two], String::new()))
    };
    assemble("multipartite_additivity", seed, run(), scale)
}

/// I(AA′:BB′) − I(A′:B′) = I(A′:B|B′) + I(A:B′|A′) + I(A:B|A′B′).
pub fn check_chain_rule(seed: u64, profile: Profile) -> CheckReport {
    check_chain_rule_scaled(seed, profile, 1.0)
}

fn check_chain_rule_scaled(seed: u64, profile: Profile, scale: f64) -> CheckReport {
    let run = || -> Result<(Vec<Part>, String)> {
        let mut ident = Part::new("four-term expansion", 1e-9);
        let mut bound = Part::new("objective dominates I(A:B|A'B')", 1e-9);
        for case in 0..profile.pick(30, 10) {
            let mut rng = seeded_rng(derive_seed(seed, case as u64));
            let dims = vec![2, rng.random_range(2..=3), 2, 2];
            let s = random_state(dims, ["A", "B", "A'", "B'"], rng.random_range(1..=6), rng.random())?;
            let lhs = mi_objective(&s, &c_i_roles())?;
            let t1 = conditional_mutual_information(&s, &["A'"], &["B"], &["B'"])?;
            let t2 = conditional_mutual_information(&s, &["A"], &["B'"], &["A'"])?;
            let t3 = conditional_mutual_information(&s, &["A"], &["B"], &["A'", "B'"])?;
            ident.equal(lhs, t1 + t2 + t3, || format!("case {case}: {lhs:.12} vs {:.12}", t1 + t2 + t3));
            bound.at_least(lhs, t3, || format!("case {case}: {lhs:.9} vs {t3:.9}"));
        }
        Ok((vec![ident, bound], String::new()))
    };
    assemble("chain_rule", seed, run(), scale)
}

type ScaledCheck = fn(u64, Profile, f64) -> CheckReport;

const CHECKS: [(&str, ScaledCheck); 9] = [
    ("additivity_ci", check_additivity_ci_scaled),
    ("chain_rule", check_chain_rule_scaled),
    ("continuity", check_continuity_scaled),
    ("convexity_flag", check_convexity_flag_scaled),
    ("flower", check_flower_scaled),
    ("measurement_monotonicity", check_measurement_monotonicity_scaled),
    ("multipartite_additivity", check_multipartite_scaled),
    ("ordering", check_ordering_scaled),
    ("superadditivity_decomposition", check_superadditivity_scaled),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Every check, ordered by name. Each check gets its own seed derived from
/// `master_seed`.
pub fn run_all(master_seed: u64, profile: Profile) -> Vec<CheckReport> {
    run_all_scaled(master_seed, profile, 1.0)
}

/// [`run_all`] with every tolerance multiplied by `tolerance_scale`.
pub fn run_all_scaled(master_seed: u64, profile: Profile, tolerance_scale: f64) -> Vec<CheckReport> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(i, (_, check))| check(derive_seed(master_seed, i as u64), profile, tolerance_scale))
        .collect()
}

/// Runs one named check.
pub fn run_check(name: &str, seed: u64, profile: Profile) -> Result<CheckReport> {
    CHECKS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, check)| check(seed, profile, 1.0))
        .ok_or_else(|| Error::Argument(format!("no check named `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_checks_pass_quickly() {
        for r in [
            check_chain_rule(1, Profile::Quick),
            check_convexity_flag(2, Profile::Quick),
            check_measurement_monotonicity(3, Profile::Quick),
            check_superadditivity_decomposition(4, Profile::Quick),
        ] {
            assert!(r.passed, "{}: {}", r.name, r.details);
            assert!(r.cases_run > 0);
        }
    }

    #[test]
    fn negative_tolerance_forces_failure() {
        let r = check_chain_rule_scaled(1, Profile::Quick, -1.0);
        assert!(!r.passed);
    }

    #[test]
    fn reports_are_reproducible() {
        let a = serde_json::to_string(&check_continuity(9, Profile::Quick)).unwrap();
        let b = serde_json::to_string(&check_continuity(9, Profile::Quick)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn part_tracks_worst_case() {
        let mut p = Part::new("x", 1e-8);
        p.at_least(1.0, 0.5, || "a".into());
        p.equal(1.0, 1.0 + 1e-6, || "b".into());
        p.at_least(2.0, 0.0, || "c".into());
        let r = p.finish(1.0);
        assert_eq!(r.worst, "b");
        assert!(!r.passed);
        assert_eq!(r.cases_run, 3);
    }

    #[test]
    fn uhlmann_purifications_reach_the_fidelity() {
        let rho = random_state(vec![2, 2], ["A", "B"], 3, 5).unwrap();
        let sigma = random_state(vec![2, 2], ["A", "B"], 4, 6).unwrap();
        let (p, q) = uhlmann_purifications(&rho, &sigma).unwrap();
        let overlap = (p.coeffs.adjoint() * &q.coeffs).trace().norm();
        assert!((overlap * overlap - fidelity(&rho, &sigma).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn unknown_check_is_an_error() {
        assert!(run_check("nope", 1, Profile::Quick).is_err());
        assert_eq!(check_names().len(), 9);
    }
}
