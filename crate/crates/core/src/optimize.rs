//! Seeded multi-start Nelder–Mead and the isometry chart it searches over.
//!
//! Restarts are independent and may run on the rayon pool; the merge step
//! picks the lowest value and breaks ties by restart index, so results do not
//! depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Absolute spread of simplex values at which a run counts as converged.
    pub tolerance: f64,
    pub seed: u64,
    pub initial_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iterations: 2000,
            tolerance: 1e-7,
            seed: 42,
            initial_step: 0.3,
        }
    }
}

impl OptimizerOptions {
    /// Budget used for optimizations nested inside another objective.
    pub fn nested() -> Self {
        Self {
            restarts: 4,
            max_iterations: 500,
            ..Self::default()
        }
    }

    pub fn with_budget(self, restarts: usize, max_iterations: usize) -> Self {
        Self {
            restarts,
            max_iterations,
            ..self
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Best value, the certificate that reproduces it, and the run history.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult<C> {
    pub value: f64,
    pub certificate: C,
    /// Best value after each iteration of the winning run; non-increasing
    /// and ending at `value`.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub restarts_used: usize,
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Iterations without a best-value gain above the tolerance after which a
/// run counts as settled.
pub fn stall_window(n_params: usize) -> usize {
    (10 * n_params).max(50)
}

/// Nelder–Mead with dimension-adaptive coefficients (Gao & Han 2012).
/// Stops when the simplex values spread by at most `tolerance`, or when the
/// best value has improved by at most `tolerance` over the last
/// [`stall_window`] iterations; both count as converged.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iterations: usize,
    tolerance: f64,
) -> NelderMeadOutcome {
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        sanitize(f(x))
    };
    let f0 = eval(x0);
    if n == 0 {
        return NelderMeadOutcome {
            x: vec![],
            value: f0,
            trace: vec![f0],
            converged: true,
            iterations: 0,
            evaluations: 1,
        };
    }
    let nf = n as f64;
    let alpha = 1.0;
    let gamma = 1.0 + 2.0 / nf;
    let rho = 0.75 - 1.0 / (2.0 * nf);
    let sigma = 1.0 - 1.0 / nf;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut trace = Vec::with_capacity(max_iterations + 1);
    let mut converged = false;
    let mut iterations = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        let spread = simplex[n].1 - simplex[0].1;
        let window = stall_window(n);
        let stalled = trace.len() > window && trace[trace.len() - 1 - window] - simplex[0].1 <= tolerance;
        if spread <= tolerance || stalled {
            converged = true;
            break;
        }
        if iterations >= max_iterations {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let worst = simplex[n].0.clone();
        let f_worst = simplex[n].1;
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;

        for i in 0..n {
            trial[i] = centroid[i] + alpha * (centroid[i] - worst[i]);
        }
        let f_r = eval(&trial);
        if f_r < f_best {
            for i in 0..n {
                trial2[i] = centroid[i] + gamma * (trial[i] - centroid[i]);
            }
            let f_e = eval(&trial2);
            simplex[n] = if f_e < f_r {
                (trial2.clone(), f_e)
            } else {
                (trial.clone(), f_r)
            };
            continue;
        }
        if f_r < f_second {
            simplex[n] = (trial.clone(), f_r);
            continue;
        }
        // contraction, outside or inside
        let outside = f_r < f_worst;
        for i in 0..n {
            trial2[i] = if outside {
                centroid[i] + rho * (trial[i] - centroid[i])
            } else {
                centroid[i] - rho * (centroid[i] - worst[i])
            };
        }
        let f_c = eval(&trial2);
        if (outside && f_c <= f_r) || (!outside && f_c < f_worst) {
            simplex[n] = (trial2.clone(), f_c);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for i in 0..n {
                vertex.0[i] = best[i] + sigma * (vertex.0[i] - best[i]);
            }
            vertex.1 = eval(&vertex.0);
        }
    }
    let (x, value) = simplex.swap_remove(0);
    NelderMeadOutcome {
        x,
        value,
        trace,
        converged,
        iterations,
        evaluations,
    }
}

/// SplitMix64 finalizer; derives independent per-restart seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs every start (in parallel when a pool is available) and returns the
/// outcomes in start order.
pub fn run_starts<S, T, F>(starts: Vec<S>, run: F) -> Vec<T>
where
    S: Send,
    T: Send,
    F: Fn(usize, S) -> T + Sync + Send,
{
    starts
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| run(i, s))
        .collect()
}

/// Index of the lowest value; ties go to the earliest index.
pub fn best_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        let v = sanitize(v);
        match best {
            None => best = Some(i),
            Some(b) if v < sanitize(values[b]) => best = Some(i),
            _ => {}
        }
    }
    best
}

/// Smooth chart onto the isometries C^r → C^D around a base point V₀:
/// V(θ) = U₀ · exp(iH(θ)) · [I_r; 0], where U₀ completes V₀ to a unitary and
/// H(θ) = [[A, B†], [B, 0]] with A Hermitian (r × r) and B complex
/// ((D − r) × r). θ = 0 gives V₀ exactly.
#[derive(Debug, Clone)]
pub struct IsometryChart {
    unitary: CMatrix,
    cols: usize,
}

impl IsometryChart {
    pub fn new(base: &CMatrix) -> Self {
        Self {
            unitary: linalg::complete_to_unitary(base),
            cols: base.ncols(),
        }
    }

    pub fn rows(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_params(&self) -> usize {
        let (d, r) = (self.rows(), self.cols);
        r * r + 2 * r * (d - r)
    }

    pub fn generator(&self, params: &[f64]) -> CMatrix {
        assert_eq!(params.len(), self.n_params(), "parameter vector has wrong length");
        let (d, r) = (self.rows(), self.cols);
        let mut h = CMatrix::zeros(d, d);
        let mut it = params.iter().copied();
        let mut next = || it.next().expect("length checked above");
        for i in 0..r {
            h[(i, i)] = Complex64::new(next(), 0.0);
        }
        for i in 0..r {
            for j in (i + 1)..r {
                let z = Complex64::new(next(), next());
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        for i in r..d {
            for j in 0..r {
                let z = Complex64::new(next(), next());
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        h
    }

    pub fn isometry(&self, params: &[f64]) -> CMatrix {
        if params.iter().all(|&x| x == 0.0) {
            return self.unitary.columns(0, self.cols).into_owned();
        }
        let local = linalg::exp_i_hermitian_columns(&self.generator(params), self.cols);
        &self.unitary * local
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::seeded_rng;

    #[test]
    fn nelder_mead_minimizes_a_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5;
        let out = nelder_mead(f, &[0.0, 0.0], 0.5, 2000, 1e-12);
        assert!(out.converged);
        assert!((out.value - 0.5).abs() < 1e-9);
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] + 2.0).abs() < 1e-4);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*out.trace.last().unwrap(), out.value);
    }

    #[test]
    fn nelder_mead_handles_rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let out = nelder_mead(f, &[-1.2, 1.0], 0.3, 5000, 1e-14);
        assert!(out.value < 1e-8, "value {}", out.value);
    }

    #[test]
    fn nan_is_treated_as_infinite() {
        let f = |x: &[f64]| if x[0] > 0.5 { f64::NAN } else { (x[0] + 1.0).powi(2) };
        let out = nelder_mead(f, &[0.0], 0.4, 500, 1e-12);
        assert!((out.x[0] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn chart_is_isometric_and_anchored() {
        let mut rng = seeded_rng(2);
        let base = linalg::haar_isometry(6, 2, &mut rng);
        let chart = IsometryChart::new(&base);
        assert_eq!(chart.n_params(), 4 + 16);
        let zero = vec![0.0; chart.n_params()];
        assert!(linalg::max_abs_diff(&chart.isometry(&zero), &base) < 1e-15);
        let theta: Vec<f64> = (0..chart.n_params()).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(linalg::isometry_defect(&chart.isometry(&theta)) < 1e-12);
    }

    #[test]
    fn best_index_breaks_ties_by_position() {
        assert_eq!(best_index(&[2.0, 1.0, 1.0]), Some(1));
        assert_eq!(best_index(&[f64::NAN, 3.0]), Some(1));
        assert_eq!(best_index(&[]), None);
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..8).map(|i| derive_seed(42, i)).collect();
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(a.len(), b.len());
    }
}
