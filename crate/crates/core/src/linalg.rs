//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything here works on `DMatrix<Complex64>`. Hermitian inputs are
//! symmetrized before any eigen-solve so that rounding noise in the
//! anti-Hermitian part never leaks into spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// (M + M†) / 2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj).map(|z| z * 0.5)
}

/// Largest |M_ij − conj(M_ji)|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    let h = hermitize(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        ev = hermitian_eigen(&h).0;
    }
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending with the
/// matching eigenvectors as columns.
///
/// The QR iteration can break down on very sparse inputs with entries spread
/// over many orders of magnitude; those are retried in a fixed random basis.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let h = hermitize(m);
    let (values, vectors) = eigen_sorted(&h);
    if finite(&values, &vectors) {
        return (values, vectors);
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x5eed);
    for _ in 0..4 {
        let u = haar_isometry(n, n, &mut rng);
        let (values, w) = eigen_sorted(&hermitize(&(u.adjoint() * &h * &u)));
        let vectors = &u * w;
        if finite(&values, &vectors) {
            return (values, vectors);
        }
    }
    eigen_sorted(&h)
}

fn finite(values: &[f64], vectors: &CMatrix) -> bool {
    values.iter().all(|x| x.is_finite()) && vectors.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn eigen_sorted(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Trace norm of a Hermitian matrix: the sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// |v⟩⟨v|
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Square root of a positive semidefinite matrix. Eigenvalues below 1e-12
/// are treated as zero so rounding noise is not amplified by the root.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate().take(n) {
        let s = if v > 1e-12 { v.sqrt() } else { 0.0 };
        scaled.column_mut(j).scale_mut(s);
    }
    &scaled * vectors.adjoint()
}

/// First `cols` columns of exp(iH) for Hermitian H.
pub fn exp_i_hermitian_columns(h: &CMatrix, cols: usize) -> CMatrix {
    let n = h.nrows();
    assert!(cols <= n);
    if h.iter().all(|z| *z == ZERO) {
        return CMatrix::identity(n, cols);
    }
    let (values, vectors) = hermitian_eigen(h);
    let mut left = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let phase = Complex64::new(0.0, v).exp();
        left.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    // exp(iH)[:, :cols] = Q diag(e^{iλ}) (Q[:cols, :])†
    let right = vectors.rows(0, cols).adjoint();
    left * right
}

/// Extends the orthonormal columns of `v` (n × r) to an n × n unitary whose
/// first r columns are exactly `v`. Deterministic: the extra columns come from
/// Gram–Schmidt against the standard basis.
pub fn complete_to_unitary(v: &CMatrix) -> CMatrix {
    let (n, r) = v.shape();
    assert!(r <= n, "cannot complete {n}x{r} to a unitary");
    let mut cols: Vec<CVector> = (0..r).map(|j| v.column(j).into_owned()).collect();
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = CVector::zeros(n);
        e[k] = ONE;
        for _ in 0..2 {
            for c in &cols {
                let overlap = c.dotc(&e);
                e -= c * overlap;
            }
        }
        let norm = e.norm();
        if norm > 1e-6 {
            cols.push(e / Complex64::new(norm, 0.0));
        }
    }
    assert_eq!(cols.len(), n, "unitary completion lost rank");
    CMatrix::from_columns(&cols)
}

/// ‖V†V − I‖_max
pub fn isometry_defect(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    max_abs_diff(&g, &CMatrix::identity(v.ncols(), v.ncols()))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Haar-distributed isometry: QR of a complex Ginibre matrix with the phases
/// of R's diagonal absorbed into Q.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Unitary discrete Fourier transform, F_{kj} = ω^{jk} / √d.
pub fn dft(d: usize) -> CMatrix {
    let norm = 1.0 / (d as f64).sqrt();
    CMatrix::from_fn(d, d, |k, j| {
        let angle = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        Complex64::from_polar(norm, angle)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&CMatrix::identity(2, 2), &CMatrix::identity(3, 3));
        assert_eq!(k, CMatrix::identity(6, 6));
    }

    #[test]
    fn sparse_product_spectrum_is_finite() {
        let mut g = CMatrix::zeros(8, 8);
        let h = Complex64::new(0.5, 0.0);
        g[(0, 0)] = h;
        g[(7, 7)] = h;
        g[(0, 7)] = h * 0.8;
        g[(7, 0)] = h * 0.8;
        let mut k = g.clone();
        k[(0, 7)] = h * 0.4;
        k[(7, 0)] = h * 0.4;
        let t = g.kronecker(&k);
        let (values, vectors) = hermitian_eigen(&t);
        let top: Vec<f64> = values[60..].to_vec();
        for (got, want) in top.iter().zip([0.03, 0.07, 0.27, 0.63]) {
            assert!((got - want).abs() < 1e-12, "{values:?}");
        }
        let back = &vectors * CMatrix::from_diagonal(&CVector::from_iterator(64, values.iter().map(|&x| Complex64::new(x, 0.0)))) * vectors.adjoint();
        assert!(max_abs_diff(&back, &t) < 1e-12);
    }

    #[test]
    fn haar_isometry_is_isometric_and_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = haar_isometry(6, 3, &mut rng);
        assert!(isometry_defect(&v) < 1e-12);
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(v, haar_isometry(6, 3, &mut rng2));
    }

    #[test]
    fn completion_keeps_leading_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = haar_isometry(5, 2, &mut rng);
        let u = complete_to_unitary(&v);
        assert!(isometry_defect(&u) < 1e-12);
        assert!(max_abs_diff(&u.columns(0, 2).into_owned(), &v) < 1e-15);
    }

    #[test]
    fn exp_of_generator_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = hermitize(&gaussian_matrix(5, 5, &mut rng));
        let u = exp_i_hermitian_columns(&h, 5);
        assert!(isometry_defect(&u) < 1e-12);
        let cols = exp_i_hermitian_columns(&h, 2);
        assert!(max_abs_diff(&cols, &u.columns(0, 2).into_owned()) < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gaussian_matrix(4, 4, &mut rng);
        let m = &g * g.adjoint();
        let s = psd_sqrt(&m);
        assert!(max_abs_diff(&(&s * &s), &m) < 1e-10);
    }

    #[test]
    fn dft_is_unitary() {
        for d in 1..6 {
            assert!(isometry_defect(&dft(d)) < 1e-13);
        }
    }
}
