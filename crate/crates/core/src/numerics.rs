//! Dense linear algebra primitives.
//!
//! Everything here is generic over the real scalar type (`f32` or `f64`) and,
//! for the exponential, over real or complex matrix entries. The rest of the
//! crate instantiates these with `f64` through the aliases at the crate root.

use simba::scalar::SupersetOf;
use nalgebra::{ComplexField, DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Dense complex matrix with real scalar `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVector<T> = DVector<Complex<T>>;

/// Matrix entry type: a real float or a complex number over one.
///
/// The product goes through `matrixmultiply` for `f32`/`f64` and splits
/// complex products into four real ones so they take the same fast path.
pub trait Elem: ComplexField + Copy {
    fn matmul(a: &DMatrix<Self>, b: &DMatrix<Self>) -> DMatrix<Self>;
}

/// Real scalar type used by the generic numerics.
pub trait Real: RealField + Copy + Elem {}

impl Elem for f64 {
    fn matmul(a: &DMatrix<Self>, b: &DMatrix<Self>) -> DMatrix<Self> {
        a * b
    }
}

impl Elem for f32 {
    fn matmul(a: &DMatrix<Self>, b: &DMatrix<Self>) -> DMatrix<Self> {
        a * b
    }
}

impl Real for f64 {}
impl Real for f32 {}

// Below this size the split costs more than it saves.
const SPLIT_GEMM_MIN: usize = 24;

impl<T: Real> Elem for Complex<T> {
    fn matmul(a: &DMatrix<Self>, b: &DMatrix<Self>) -> DMatrix<Self> {
        if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_GEMM_MIN {
            return a * b;
        }
        let (ar, ai) = split(a);
        let (br, bi) = split(b);
        let re = &ar * &br - &ai * &bi;
        let im = &ar * &bi + &ai * &br;
        join(&re, &im)
    }
}

/// Real and imaginary parts of a complex matrix.
pub fn split<T: Real>(a: &CMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

/// Inverse of [`split`].
pub fn join<T: Real>(re: &DMatrix<T>, im: &DMatrix<T>) -> CMatrix<T> {
    re.zip_map(im, Complex::new)
}

/// Complex matrix product through the fast real kernels.
pub fn cmul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    <Complex<T> as Elem>::matmul(a, b)
}

pub(crate) fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    <T as SupersetOf<f64>>::to_subset(&x).unwrap_or(f64::NAN)
}

pub fn cidentity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n, n)
}

pub fn ensure_square<N: nalgebra::Scalar>(a: &DMatrix<N>) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Largest elementwise modulus.
pub fn max_abs<N: Elem>(a: &DMatrix<N>) -> N::RealField {
    a.iter()
        .map(|z| z.modulus())
        .fold(N::RealField::zero(), |m, x| if x > m { x } else { m })
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<N: Elem>(a: &DMatrix<N>) -> N::RealField {
    a.column_iter()
        .map(|c| c.iter().fold(N::RealField::zero(), |s, z| s + z.modulus()))
        .fold(N::RealField::zero(), |m, x| if x > m { x } else { m })
}

/// Elementwise deviation from Hermiticity, `max |A - A†|`.
pub fn hermiticity_defect<T: Real>(a: &CMatrix<T>) -> T {
    max_abs(&(a - a.adjoint()))
}

/// `max |U†U - 1|`.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    max_abs(&(cmul(&u.adjoint(), u) - cidentity::<T>(n)))
}

/// Hilbert–Schmidt pairing `tr(A†B)`.
pub fn hs_inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<Complex<T>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "hs_inner of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |s, (x, y)| {
            s + x.conj() * y
        }))
}

/// Kronecker product `A ⊗ B`.
pub fn kron<N: Elem>(a: &DMatrix<N>, b: &DMatrix<N>) -> DMatrix<N> {
    a.kronecker(b)
}

// Padé coefficients and 1-norm thresholds (Higham 2005, double precision).
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn coef<N: Elem>(x: f64) -> N {
    N::from_real(nalgebra::convert(x))
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
///
/// The Padé degree (3 to 13) and the number of squarings are chosen from the
/// 1-norm of the argument.
pub fn expm<N: Elem>(a: &DMatrix<N>) -> Result<DMatrix<N>> {
    let n = ensure_square(a)?;
    if a.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let eye = DMatrix::<N>::identity(n, n);
    let norm = <N::RealField as SupersetOf<f64>>::to_subset(&norm1(a)).unwrap_or(f64::INFINITY);

    let a2 = N::matmul(a, a);
    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            return pade_low(a, &a2, &eye, m);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale: N = coef(0.5f64.powi(s));
    let a = a * scale;
    let a2 = N::matmul(&a, &a);
    let a4 = N::matmul(&a2, &a2);
    let a6 = N::matmul(&a4, &a2);
    let b = PADE_13;
    let inner_u = &a6 * coef::<N>(b[13]) + &a4 * coef::<N>(b[11]) + &a2 * coef::<N>(b[9]);
    let u = N::matmul(&a6, &inner_u)
        + &a6 * coef::<N>(b[7])
        + &a4 * coef::<N>(b[5])
        + &a2 * coef::<N>(b[3])
        + &eye * coef::<N>(b[1]);
    let u = N::matmul(&a, &u);
    let inner_v = &a6 * coef::<N>(b[12]) + &a4 * coef::<N>(b[10]) + &a2 * coef::<N>(b[8]);
    let v = N::matmul(&a6, &inner_v)
        + &a6 * coef::<N>(b[6])
        + &a4 * coef::<N>(b[4])
        + &a2 * coef::<N>(b[2])
        + &eye * coef::<N>(b[0]);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = N::matmul(&r, &r);
    }
    Ok(r)
}

fn pade_low<N: Elem>(
    a: &DMatrix<N>,
    a2: &DMatrix<N>,
    eye: &DMatrix<N>,
    m: usize,
) -> Result<DMatrix<N>> {
    let b: &[f64] = match m {
        3 => &PADE_3,
        5 => &PADE_5,
        7 => &PADE_7,
        _ => &PADE_9,
    };
    let mut power = eye.clone();
    let mut u = eye * coef::<N>(b[1]);
    let mut v = eye * coef::<N>(b[0]);
    for k in 1..=m / 2 {
        power = N::matmul(&power, a2);
        u += &power * coef::<N>(b[2 * k + 1]);
        v += &power * coef::<N>(b[2 * k]);
    }
    let u = N::matmul(a, &u);
    pade_solve(&u, &v)
}

fn pade_solve<N: Elem>(u: &DMatrix<N>, v: &DMatrix<N>) -> Result<DMatrix<N>> {
    let lu = (v - u).lu();
    lu.solve(&(v + u))
        .ok_or_else(|| Error::Numerical("singular Padé denominator".into()))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Returns `(λ, V)` with `H = V diag(λ) V†`.
pub fn eig_hermitian<T: Real>(h: &CMatrix<T>) -> Result<(DVector<T>, CMatrix<T>)> {
    ensure_square(h)?;
    let defect = hermiticity_defect(h);
    let tol = lit::<T>(1e-10) * (T::one() + max_abs(h));
    if defect > tol {
        return Err(Error::NotHermitian(to_f64(defect)));
    }
    let sym = (h + h.adjoint()) * Complex::new(lit::<T>(0.5), T::zero());
    let eig = sym.symmetric_eigen();
    Ok(sort_eigen(eig.eigenvalues, eig.eigenvectors))
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eig_symmetric<T: Real>(s: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    ensure_square(s)?;
    let defect = max_abs(&(s - s.transpose()));
    let tol = lit::<T>(1e-10) * (T::one() + max_abs(s));
    if defect > tol {
        return Err(Error::NotHermitian(to_f64(defect)));
    }
    let sym = (s + s.transpose()) * lit::<T>(0.5);
    let eig = sym.symmetric_eigen();
    Ok(sort_eigen(eig.eigenvalues, eig.eigenvectors))
}

fn sort_eigen<T: Real, N: Elem>(vals: DVector<T>, vecs: DMatrix<N>) -> (DVector<T>, DMatrix<N>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted = DVector::from_iterator(vals.len(), order.iter().map(|&i| vals[i]));
    let mut out = DMatrix::zeros(vecs.nrows(), vecs.ncols());
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &vecs.column(src));
    }
    (sorted, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn sigma_x() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    fn sigma_y() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }

    fn sigma_z() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    fn random_matrix(seed: u64, n: usize, scale: f64) -> CMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale)
    }

    // Power series summed far past convergence after scaling by 2^-s.
    fn taylor_oracle(a: &CMatrix<f64>) -> CMatrix<f64> {
        let n = a.nrows();
        let norm = norm1(a);
        let s = (norm.max(1.0)).log2().ceil() as i32 + 4;
        let a = a * c(0.5f64.powi(s), 0.0);
        let mut term = cidentity::<f64>(n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * &a * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::<f64>::zeros(4, 4);
        assert_eq!(expm(&z).unwrap(), cidentity::<f64>(4));
    }

    #[test]
    fn expm_diagonal_phases() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0., PI), c(0., -PI)]));
        let e = expm(&a).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 1)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_half_pi_x_rotation() {
        // exp(-iθσx) = cosθ·1 - i sinθ·σx at θ = π/2
        let a = sigma_x() * c(0.0, -PI / 2.0);
        let e = expm(&a).unwrap();
        let expected = sigma_x() * c(0.0, -1.0);
        assert!(max_abs(&(e - expected)) < 1e-14);
    }

    #[test]
    fn expm_matches_taylor_across_norms() {
        for (seed, scale) in [(1, 1e-3), (2, 0.1), (3, 1.0), (4, 5.0), (5, 40.0)] {
            let a = random_matrix(seed, 6, scale);
            let e = expm(&a).unwrap();
            let t = taylor_oracle(&a);
            let rel = max_abs(&(&e - &t)) / max_abs(&t);
            assert!(rel < 1e-12, "scale {scale}: rel err {rel:e}");
        }
    }

    #[test]
    fn expm_large_skew_hermitian_stays_unitary() {
        let h = random_matrix(9, 16, 1.0);
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        let norm = norm1(&h);
        let a = &h * c(0.0, -900.0 / norm);
        let u = expm(&a).unwrap();
        assert!(unitarity_defect(&u) < 1e-11);
    }

    #[test]
    fn expm_real_matches_complex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let r = DMatrix::<f64>::from_fn(30, 30, |_, _| rng.gen_range(-0.5..0.5));
        let er = expm(&r).unwrap();
        let ec = expm(&r.map(|x| c(x, 0.0))).unwrap();
        assert!(max_abs(&(er.map(|x| c(x, 0.0)) - ec)) < 1e-12);
    }

    #[test]
    fn expm_rejects_bad_input() {
        let a = CMatrix::<f64>::zeros(2, 3);
        assert!(matches!(expm(&a), Err(Error::NotSquare { .. })));
        let mut b = CMatrix::<f64>::zeros(2, 2);
        b[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(expm(&b), Err(Error::NonFinite)));
    }

    #[test]
    fn expm_single_precision() {
        let a = sigma_x().map(|z| Complex::new(z.re as f32, z.im as f32)) * Complex::new(0.0f32, -1.0);
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - 1.0f32.cos()).abs() < 1e-6);
    }

    #[test]
    fn eig_sigma_z_and_x() {
        let (l, _) = eig_hermitian(&sigma_z()).unwrap();
        assert_abs_diff_eq!(l[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l[1], 1.0, epsilon = 1e-14);

        let (l, v) = eig_hermitian(&sigma_x()).unwrap();
        assert_abs_diff_eq!(l[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l[1], 1.0, epsilon = 1e-14);
        let r = 1.0 / 2f64.sqrt();
        // (|0⟩ - |1⟩)/√2 up to phase
        let overlap = v[(0, 0)].conj() * c(r, 0.) + v[(1, 0)].conj() * c(-r, 0.);
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
        let overlap = v[(0, 1)].conj() * c(r, 0.) + v[(1, 1)].conj() * c(r, 0.);
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(eig_hermitian(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn hs_inner_paulis() {
        let one = cidentity::<f64>(2);
        assert_eq!(hs_inner(&one, &one).unwrap(), c(2.0, 0.0));
        assert_eq!(hs_inner(&sigma_x(), &sigma_y()).unwrap(), c(0.0, 0.0));
        assert_eq!(hs_inner(&sigma_z(), &sigma_z()).unwrap(), c(2.0, 0.0));
        assert!(hs_inner(&one, &cidentity::<f64>(3)).is_err());
    }

    #[test]
    fn split_product_matches_direct() {
        let a = random_matrix(21, 40, 1.0);
        let b = random_matrix(22, 40, 1.0);
        assert!(max_abs(&(cmul(&a, &b) - &a * &b)) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn expm_inverse_pair(seed in 0u64..10_000, n in 1usize..8) {
            let mut a = random_matrix(seed, n, 1.0);
            let f = norm1(&a);
            if f > 0.0 {
                a *= c(10.0 / f, 0.0);
            }
            let p = expm(&a).unwrap();
            let m = expm(&(-&a)).unwrap();
            prop_assert!(max_abs(&(&p * &m - cidentity::<f64>(n))) < 1e-10);
        }

        #[test]
        fn expm_respects_direct_sums(seed in 0u64..10_000, n in 1usize..5, k in 1usize..5) {
            let a = random_matrix(seed, n, 2.0);
            let b = random_matrix(seed + 1, k, 2.0);
            let mut block = CMatrix::<f64>::zeros(n + k, n + k);
            block.view_mut((0, 0), (n, n)).copy_from(&a);
            block.view_mut((n, n), (k, k)).copy_from(&b);
            let e = expm(&block).unwrap();
            let ea = expm(&a).unwrap();
            let eb = expm(&b).unwrap();
            prop_assert!(max_abs(&(e.view((0, 0), (n, n)) - ea)) < 1e-11);
            prop_assert!(max_abs(&(e.view((n, n), (k, k)) - eb)) < 1e-11);
            prop_assert!(e.view((0, n), (n, k)).iter().all(|z| z.norm() < 1e-12));
        }

        #[test]
        fn eig_reconstructs(seed in 0u64..10_000, n in 1usize..12) {
            let h = random_matrix(seed, n, 1.0);
            let h = (&h + h.adjoint()) * c(0.5, 0.0);
            let (l, v) = eig_hermitian(&h).unwrap();
            let d = CMatrix::from_diagonal(&l.map(|x| c(x, 0.0)));
            let back = &v * d * v.adjoint();
            prop_assert!((back - &h).norm() <= 1e-9 * h.norm().max(1e-300));
            prop_assert!(unitarity_defect(&v) < 1e-10);
            prop_assert!(l.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
