//! Entropic and correlation functionals, all in bits.
//!
//! Every functional is written against the [`Marginals`] trait so that the
//! same code evaluates on mixed states and, more cheaply, on the pure global
//! states produced by extension searches.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::states::{as_strs, Ensemble, Partition, PureState, QuantumState, EIG_CLAMP};

/// Entropy value together with the spectrum it came from.
#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub value: f64,
    pub spectrum: Vec<f64>,
    /// Total magnitude of negative eigenvalues that were clamped to zero.
    pub clamped_mass: f64,
}

/// −Σ λ log₂ λ over the clamped spectrum, 0 log 0 = 0.
pub fn entropy_of_spectrum(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .filter(|&&x| x > EIG_CLAMP)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy_report(s: &QuantumState) -> EntropyReport {
    let spectrum = s.eigenvalues();
    let clamped_mass = spectrum.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    EntropyReport {
        value: entropy_of_spectrum(&spectrum),
        spectrum,
        clamped_mass,
    }
}

pub fn von_neumann_entropy(s: &QuantumState) -> f64 {
    entropy_of_spectrum(&s.eigenvalues())
}

/// Anything that can report the entropy of a labeled marginal.
pub trait Marginals {
    fn subsystem_labels(&self) -> &[String];

    /// S of the marginal on `labels`; the empty set has entropy 0.
    fn entropy_of(&self, labels: &[&str]) -> Result<f64>;
}

impl Marginals for QuantumState {
    fn subsystem_labels(&self) -> &[String] {
        self.labels()
    }

    fn entropy_of(&self, labels: &[&str]) -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        Ok(von_neumann_entropy(&self.partial_trace(labels)?))
    }
}

impl Marginals for PureState {
    fn subsystem_labels(&self) -> &[String] {
        self.labels()
    }

    fn entropy_of(&self, labels: &[&str]) -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_of_spectrum(&self.marginal_spectrum(labels)?))
    }
}

fn ensure_disjoint(sets: &[&[&str]]) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        for l in *set {
            if !seen.insert(*l) {
                return Err(Error::Label(format!("label `{l}` appears in two argument sets")));
            }
        }
    }
    Ok(())
}

fn union<'a>(sets: &[&[&'a str]]) -> Vec<&'a str> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

/// S(a|b) = S(ab) − S(b).
pub fn conditional_entropy<M: Marginals + ?Sized>(s: &M, a: &[&str], b: &[&str]) -> Result<f64> {
    ensure_disjoint(&[a, b])?;
    Ok(s.entropy_of(&union(&[a, b]))? - s.entropy_of(b)?)
}

/// I(a:b) = S(a) + S(b) − S(ab).
pub fn mutual_information<M: Marginals + ?Sized>(s: &M, a: &[&str], b: &[&str]) -> Result<f64> {
    ensure_disjoint(&[a, b])?;
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    Ok(s.entropy_of(a)? + s.entropy_of(b)? - s.entropy_of(&union(&[a, b]))?)
}

/// I(a:b|e) = S(ae) + S(be) − S(e) − S(abe).
pub fn conditional_mutual_information<M: Marginals + ?Sized>(
    s: &M,
    a: &[&str],
    b: &[&str],
    e: &[&str],
) -> Result<f64> {
    ensure_disjoint(&[a, b, e])?;
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    Ok(s.entropy_of(&union(&[a, e]))? + s.entropy_of(&union(&[b, e]))?
        - s.entropy_of(e)?
        - s.entropy_of(&union(&[a, b, e]))?)
}

/// χ = S(Σ p_k ρ_k) − Σ p_k S(ρ_k).
pub fn holevo_quantity(ens: &Ensemble) -> Result<f64> {
    if ens.is_empty() {
        return Err(Error::Validation("empty ensemble".into()));
    }
    let avg = von_neumann_entropy(&ens.average());
    let mean: f64 = ens.members().iter().map(|(p, s)| p * von_neumann_entropy(s)).sum();
    Ok(avg - mean)
}

fn group_strs(groups: &[Vec<String>]) -> Vec<Vec<&str>> {
    groups.iter().map(|g| as_strs(g)).collect()
}

/// I_n = Σ_i S(A_i) − S(A_1⋯A_n).
pub fn multipartite_i_n<M: Marginals + ?Sized>(s: &M, groups: &Partition) -> Result<f64> {
    if groups.len() < 2 {
        return Err(Error::Argument("I_n needs at least two groups".into()));
    }
    let g = group_strs(groups.groups());
    let refs: Vec<&[&str]> = g.iter().map(Vec::as_slice).collect();
    let mut total = 0.0;
    for grp in &refs {
        total += s.entropy_of(grp)?;
    }
    Ok(total - s.entropy_of(&union(&refs))?)
}

/// S_n = Σ_i S(all but A_i) − (n − 1) S(A_1⋯A_n).
pub fn multipartite_s_n<M: Marginals + ?Sized>(s: &M, groups: &Partition) -> Result<f64> {
    let n = groups.len();
    if n < 2 {
        return Err(Error::Argument("S_n needs at least two groups".into()));
    }
    let g = group_strs(groups.groups());
    let refs: Vec<&[&str]> = g.iter().map(Vec::as_slice).collect();
    let mut total = 0.0;
    for skip in 0..n {
        let rest: Vec<&[&str]> = refs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, r)| *r)
            .collect();
        total += s.entropy_of(&union(&rest))?;
    }
    Ok(total - (n as f64 - 1.0) * s.entropy_of(&union(&refs))?)
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Argument(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// H(e) = −e log₂ e − (1 − e) log₂(1 − e).
pub fn binary_entropy(e: f64) -> Result<f64> {
    check_unit_interval("binary entropy argument", e)?;
    Ok(entropy_of_spectrum(&[e, 1.0 - e]))
}

/// Conditional-entropy continuity bound 4ε log₂ d_A + 2H(ε), ε a trace norm.
pub fn continuity_bound(eps: f64, d_a: usize) -> Result<f64> {
    check_unit_interval("epsilon", eps)?;
    Ok(4.0 * eps * (d_a as f64).log2() + 2.0 * binary_entropy(eps)?)
}

/// ε′ = 16√ε log₂(d_A d_B) + 6H(2√ε); the H term is pinned at 1 when 2√ε > 1.
pub fn continuity_bound_ci(eps: f64, d_a_times_d_b: usize) -> Result<f64> {
    check_unit_interval("epsilon", eps)?;
    let root = eps.sqrt();
    let h = if 2.0 * root <= 1.0 { binary_entropy(2.0 * root)? } else { 1.0 };
    Ok(16.0 * root * (d_a_times_d_b as f64).log2() + 6.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::states::{make_named_state, random_state, Family};

    fn named(f: Family) -> QuantumState {
        make_named_state(&f).unwrap().into_mixed()
    }

    #[test]
    fn pure_state_has_zero_entropy() {
        assert!(von_neumann_entropy(&named(Family::Bell)).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_entropy_is_log_d() {
        for d in [2usize, 3, 5] {
            let s = named(Family::MaximallyMixed { d });
            assert!((von_neumann_entropy(&s) - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn werner_entropy_matches_spectrum_formula() {
        // werner(0.5, 2): eigenvalues 0.5 + 0.125 on the singlet, 0.125 thrice
        let s = named(Family::Werner { p: 0.5, d: 2 });
        let expect = -(0.625f64 * 0.625f64.log2()) - 3.0 * 0.125 * 0.125f64.log2();
        assert!((von_neumann_entropy(&s) - expect).abs() < 1e-12);
        let r = entropy_report(&s);
        assert!(r.clamped_mass <= 1e-8);
    }

    #[test]
    fn conditional_entropy_examples() {
        let bell = named(Family::Bell);
        assert!((conditional_entropy(&bell, &["A"], &["B"]).unwrap() + 1.0).abs() < 1e-12);
        let a = random_state(vec![2], ["A"], 2, 1).unwrap();
        let b = random_state(vec![3], ["B"], 3, 2).unwrap();
        let ab = a.tensor(&b).unwrap();
        let h = conditional_entropy(&ab, &["A"], &["B"]).unwrap();
        assert!((h - von_neumann_entropy(&a)).abs() < 1e-10);
        let cc = named(Family::ClassicallyCorrelated { d: 2 });
        assert!(conditional_entropy(&cc, &["A"], &["B"]).unwrap().abs() < 1e-12);
        assert!(conditional_entropy(&cc, &["A"], &["A"]).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        assert!((mutual_information(&named(Family::Bell), &["A"], &["B"]).unwrap() - 2.0).abs() < 1e-12);
        let a = random_state(vec![2], ["A"], 2, 3).unwrap();
        let b = random_state(vec![2], ["B"], 2, 4).unwrap();
        assert!(mutual_information(&a.tensor(&b).unwrap(), &["A"], &["B"]).unwrap().abs() < 1e-10);
        let cc = named(Family::ClassicallyCorrelated { d: 2 });
        assert!((mutual_information(&cc, &["A"], &["B"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cmi_examples() {
        let ghz = named(Family::Ghz { n: 3 });
        assert!((conditional_mutual_information(&ghz, &["A"], &["B"], &["C"]).unwrap() - 1.0).abs() < 1e-12);
        let ab = random_state(vec![2, 2], ["A", "B"], 4, 5).unwrap();
        let e = random_state(vec![3], ["E"], 3, 6).unwrap();
        let abe = ab.tensor(&e).unwrap();
        let cmi = conditional_mutual_information(&abe, &["A"], &["B"], &["E"]).unwrap();
        let mi = mutual_information(&ab, &["A"], &["B"]).unwrap();
        assert!((cmi - mi).abs() < 1e-10);
    }

    #[test]
    fn pure_and_mixed_marginals_agree() {
        let mut rng = crate::states::seeded_rng(3);
        let p = crate::states::random_pure_state_with(vec![2, 3, 2], ["A", "B", "C"], &mut rng).unwrap();
        let m = p.to_density();
        for set in [vec!["A"], vec!["B"], vec!["A", "C"], vec!["A", "B", "C"]] {
            let a = p.entropy_of(&set).unwrap();
            let b = m.entropy_of(&set).unwrap();
            assert!((a - b).abs() < 1e-10, "{set:?}: {a} vs {b}");
        }
    }

    #[test]
    fn holevo_examples() {
        let z0 = QuantumState::basis(vec![2], &[0], ["A"]).unwrap();
        let z1 = QuantumState::basis(vec![2], &[1], ["A"]).unwrap();
        let ens = Ensemble::new(vec![(0.5, z0.clone()), (0.5, z1)]).unwrap();
        assert!((holevo_quantity(&ens).unwrap() - 1.0).abs() < 1e-12);
        let one = Ensemble::new(vec![(1.0, z0.clone())]).unwrap();
        assert!(holevo_quantity(&one).unwrap().abs() < 1e-12);
        let s = random_state(vec![2], ["A"], 2, 7).unwrap();
        let same = Ensemble::new(vec![(0.3, s.clone()), (0.7, s)]).unwrap();
        assert!(holevo_quantity(&same).unwrap().abs() < 1e-10);
    }

    #[test]
    fn multipartite_examples() {
        let ghz = named(Family::Ghz { n: 3 });
        let singles = Partition::parse("A:B:C").unwrap();
        assert!((multipartite_i_n(&ghz, &singles).unwrap() - 3.0).abs() < 1e-12);
        assert!((multipartite_s_n(&ghz, &singles).unwrap() - 3.0).abs() < 1e-12);
        let prod = named(Family::Product { dims: vec![2, 2, 2], digits: vec![0, 1, 0] });
        assert!(multipartite_i_n(&prod, &singles).unwrap().abs() < 1e-12);
        assert!(multipartite_s_n(&prod, &singles).unwrap().abs() < 1e-12);
        let bell = named(Family::Bell);
        let two = Partition::parse("A:B").unwrap();
        assert!((multipartite_i_n(&bell, &two).unwrap() - 2.0).abs() < 1e-12);
        let r = random_state(vec![2, 3], ["A", "B"], 6, 8).unwrap();
        let i2 = multipartite_i_n(&r, &two).unwrap();
        let s2 = multipartite_s_n(&r, &two).unwrap();
        assert!((i2 - s2).abs() < 1e-10);
        assert!((i2 - mutual_information(&r, &["A"], &["B"]).unwrap()).abs() < 1e-10);
        assert!(multipartite_i_n(&r, &Partition::parse("A").unwrap()).is_err());
    }

    #[test]
    fn bound_formulas() {
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(continuity_bound(0.0, 4).unwrap(), 0.0);
        let h02 = -(0.2f64 * 0.2f64.log2()) - 0.8 * 0.8f64.log2();
        let expect = 16.0 * 0.1 * 2.0 + 6.0 * h02;
        assert!((continuity_bound_ci(0.01, 4).unwrap() - expect).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
        assert!(continuity_bound(-0.1, 2).is_err());
    }

    #[test]
    fn empty_label_sets_are_zero() {
        let s = QuantumState::new(CMatrix::identity(2, 2).map(|z| z / 2.0), vec![2], ["A"]).unwrap();
        assert_eq!(s.entropy_of(&[]).unwrap(), 0.0);
        assert_eq!(mutual_information(&s, &["A"], &[]).unwrap(), 0.0);
    }
}
