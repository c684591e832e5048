//! Pauli strings, column-stacking vectorisation and the commutator and
//! conjugation superoperators.
//!
//! Conventions:
//! - every Pauli string carries a single global factor ½, so `zz` is
//!   `σz⊗σz/2` and `z1` is `σz⊗1/2`;
//! - `vec` stacks columns, hence `vec(AρB) = (Bᵀ⊗A)·vec(ρ)`,
//!   `ad_H = 1⊗H − Hᵀ⊗1` and `Ad_U = Ū⊗U`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{
    cidentity, ensure_square, hermiticity_defect, kron, lit, to_f64, unitarity_defect, CMatrix,
    CVector, Real,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c {
            '1' => Some(Pauli::I),
            'x' | 'X' => Some(Pauli::X),
            'y' | 'Y' => Some(Pauli::Y),
            'z' | 'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => '1',
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        }
    }

    /// The 2×2 matrix `σ` (identity for `I`), without the ½.
    pub fn matrix<T: Real>(self) -> CMatrix<T> {
        let o = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        let entries = match self {
            Pauli::I => [one, o, o, one],
            Pauli::X => [o, one, one, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [one, o, o, -one],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }
}

/// A real multiple of a tensor product of Pauli matrices, e.g. `2.0 * xx11`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(label: &str, coefficient: f64) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::InvalidPauli(label.to_string()));
        }
        let letters = label
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli(label.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if !coefficient.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite coefficient for `{label}`"
            )));
        }
        Ok(Self {
            letters,
            coefficient,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.to_char()).collect()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// `coefficient · ½ · ⊗σ`, dimension `2ⁿ`.
    pub fn to_operator<T: Real>(&self) -> CMatrix<T> {
        let mut m = cidentity::<T>(1);
        for p in &self.letters {
            m = kron(&m, &p.matrix::<T>());
        }
        m * Complex::new(lit::<T>(0.5 * self.coefficient), T::zero())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} * {}", self.coefficient, self.label())
    }
}

/// See [`PauliString::to_operator`].
pub fn pauli_operator<T: Real>(p: &PauliString) -> CMatrix<T> {
    p.to_operator()
}

/// A sum of Pauli strings on a fixed number of qubits.
///
/// Parses from text such as `"2.0 * xx11 + 1.0 * 1zz1 - z111"`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(terms: Vec<PauliString>) -> Result<Self> {
        let n_qubits = terms
            .first()
            .map(|t| t.n_qubits())
            .ok_or_else(|| Error::Parse("empty Pauli sum".into()))?;
        if let Some(bad) = terms.iter().find(|t| t.n_qubits() != n_qubits) {
            return Err(Error::Parse(format!(
                "term `{}` has {} qubits, expected {n_qubits}",
                bad.label(),
                bad.n_qubits()
            )));
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn to_operator<T: Real>(&self) -> CMatrix<T> {
        let dim = 1 << self.n_qubits;
        self.terms
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, t| acc + t.to_operator::<T>())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut rest = s.trim();
        if rest.is_empty() {
            return Err(Error::Parse("empty Pauli sum".into()));
        }
        loop {
            if let Some(r) = rest.strip_prefix('-') {
                sign = -sign;
                rest = r.trim_start();
                continue;
            }
            if let Some(r) = rest.strip_prefix('+') {
                rest = r.trim_start();
                continue;
            }
            // A term ends at the next top-level `+`/`-` that is not part of an exponent.
            let end = term_end(rest);
            let (term, tail) = rest.split_at(end);
            terms.push(parse_term(term.trim(), sign)?);
            sign = 1.0;
            rest = tail.trim_start();
            if rest.is_empty() {
                break;
            }
        }
        PauliSum::new(terms)
    }
}

fn term_end(s: &str) -> usize {
    let bytes = s.as_bytes();
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        if (b == b'+' || b == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            return i;
        }
    }
    s.len()
}

fn parse_term(term: &str, sign: f64) -> Result<PauliString> {
    let (coef, label) = match term.split_once('*') {
        Some((c, l)) => {
            let c: f64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient in `{term}`")))?;
            (c, l.trim())
        }
        None => (1.0, term),
    };
    PauliString::new(label, sign * coef)
}

/// Column-stacking vectorisation.
pub fn vec<T: Real>(rho: &CMatrix<T>) -> Result<CVector<T>> {
    ensure_square(rho)?;
    Ok(CVector::from_column_slice(rho.as_slice()))
}

/// Inverse of [`vec`].
pub fn unvec<T: Real>(v: &CVector<T>) -> Result<CMatrix<T>> {
    let n = (v.len() as f64).sqrt().round() as usize;
    if n * n != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "length {} is not a perfect square",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Matrix of `ρ ↦ [H, ρ]`.
pub fn ad_superop<T: Real>(h: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = ensure_square(h)?;
    let eye = cidentity::<T>(n);
    Ok(kron(&eye, h) - kron(&h.transpose(), &eye))
}

/// Matrix of `ρ ↦ UρU†`.
pub fn adj_superop<T: Real>(u: &CMatrix<T>) -> Result<CMatrix<T>> {
    ensure_square(u)?;
    let defect = unitarity_defect(u);
    if defect > lit::<T>(1e-10) {
        return Err(Error::NotUnitary(to_f64(defect)));
    }
    Ok(kron(&u.conjugate(), u))
}

/// Matrix of `ρ ↦ AρB`.
pub fn sandwich_superop<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    kron(&b.transpose(), a)
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn ensure_hermitian<T: Real>(h: &CMatrix<T>, tol: f64) -> Result<()> {
    ensure_square(h)?;
    let d = hermiticity_defect(h);
    if to_f64(d) > tol {
        return Err(Error::NotHermitian(to_f64(d)));
    }
    Ok(())
}

/// Orthonormal Hermitian basis of Liouville space: column `a` is
/// `vec(σ_a)/√N` where `σ_a` runs over Pauli tensors (no ½ factor) in
/// lexicographic order `1 < x < y < z`, first qubit most significant.
pub fn pauli_basis<T: Real>(n_qubits: usize) -> CMatrix<T> {
    let dim = 1usize << n_qubits;
    let d2 = dim * dim;
    let scale = Complex::new(T::one() / lit::<T>((dim as f64).sqrt()), T::zero());
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut out = CMatrix::zeros(d2, d2);
    for a in 0..d2 {
        let mut m = cidentity::<T>(1);
        for k in 0..n_qubits {
            let digit = (a >> (2 * (n_qubits - 1 - k))) & 3;
            m = kron(&m, &letters[digit].matrix::<T>());
        }
        out.column_mut(a)
            .copy_from_slice((m * scale).as_slice());
    }
    out
}

/// Real matrix of a Hermiticity-preserving superoperator in the basis of
/// [`pauli_basis`]. Fails if the imaginary residue exceeds `tol`.
pub fn real_representation<T: Real>(
    s: &CMatrix<T>,
    basis: &CMatrix<T>,
    tol: f64,
) -> Result<nalgebra::DMatrix<T>> {
    ensure_square(s)?;
    if s.nrows() != basis.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "superoperator {} vs basis {}",
            s.nrows(),
            basis.nrows()
        )));
    }
    let r = crate::numerics::cmul(&basis.adjoint(), &crate::numerics::cmul(s, basis));
    let (re, im) = crate::numerics::split(&r);
    let leak = to_f64(crate::numerics::max_abs(&im));
    if leak > tol * (1.0 + to_f64(crate::numerics::max_abs(&re))) {
        return Err(Error::InvalidArgument(format!(
            "superoperator does not preserve Hermiticity (imaginary part {leak:e})"
        )));
    }
    Ok(re)
}

/// Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)` of the map with Liouville matrix `f`.
pub fn choi_matrix<T: Real>(f: &CMatrix<T>) -> Result<CMatrix<T>> {
    let d2 = ensure_square(f)?;
    let n = (d2 as f64).sqrt().round() as usize;
    if n * n != d2 {
        return Err(Error::DimensionMismatch(format!(
            "{d2} is not a perfect square"
        )));
    }
    Ok(CMatrix::from_fn(d2, d2, |r, c| {
        let (i, k) = (r / n, r % n);
        let (j, l) = (c / n, c % n);
        f[(k + n * l, i + n * j)]
    }))
}
