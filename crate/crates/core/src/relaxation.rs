//! Relaxation superoperators built from double commutators with dipolar
//! spherical tensors, and the slow/medium/fast mode analysis of their
//! spectra.
//!
//! Qubit indices are zero-based: the two spin pairs of the four-qubit
//! models are `(0, 1)` and `(2, 3)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{pauli_basis, real_representation, sandwich_superop, vec, Pauli, PauliString};
use crate::error::{Error, Result};
use crate::numerics::{cidentity, cmul, eig_hermitian, eig_symmetric, ensure_square, kron};
use crate::{CMat, RMat};

/// Rate of the medium band of the secular model, s⁻¹.
pub const MEDIUM_RATE: f64 = 4.0;
/// Target longitudinal rate `T₁⁻¹` of a spin pair, s⁻¹.
pub const TARGET_T1_RATE: f64 = 0.024;
/// Default band cuts, s⁻¹.
pub const DEFAULT_CUTS: (f64, f64) = (2.0, 6.0);

/// Matrix of `ρ ↦ [A†, [A, ρ]] = A†Aρ − A†ρA − AρA† + ρAA†`.
pub fn double_commutator_superop(a: &CMat) -> Result<CMat> {
    let n = ensure_square(a)?;
    let ad = a.adjoint();
    let eye = cidentity::<f64>(n);
    Ok(sandwich_superop(&(&ad * a), &eye) - sandwich_superop(&ad, a) - sandwich_superop(a, &ad)
        + sandwich_superop(&eye, &(a * &ad)))
}

/// Single-spin operator `σ/2` (or `I±`) on qubit `k` of `n`.
fn spin(n: usize, k: usize, which: char) -> CMat {
    let half = Complex64::new(0.5, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let local = match which {
        'x' => Pauli::X.matrix::<f64>() * half,
        'y' => Pauli::Y.matrix::<f64>() * half,
        'z' => Pauli::Z.matrix::<f64>() * half,
        '+' => (Pauli::X.matrix::<f64>() + Pauli::Y.matrix::<f64>() * i) * half,
        '-' => (Pauli::X.matrix::<f64>() - Pauli::Y.matrix::<f64>() * i) * half,
        _ => unreachable!(),
    };
    let mut m = cidentity::<f64>(1);
    for q in 0..n {
        m = if q == k { kron(&m, &local) } else { kron(&m, &cidentity::<f64>(2)) };
    }
    m
}

fn check_pair(pair: (usize, usize), n: usize) -> Result<()> {
    if pair.0 == pair.1 || pair.0 >= n || pair.1 >= n {
        return Err(Error::InvalidArgument(format!(
            "invalid qubit pair {pair:?} for {n} qubits"
        )));
    }
    Ok(())
}

/// Rank-2 irreducible spherical tensor `T_{2,q}` on `pair`.
///
/// `T_{2,0} = (3IzIz − I·I)/√6`, `T_{2,±1} = ∓(I±Iz + IzI±)/2`,
/// `T_{2,±2} = I±I±/2`.
pub fn spherical_tensor_t2(pair: (usize, usize), q: i32, n: usize) -> Result<CMat> {
    check_pair(pair, n)?;
    let (a, b) = pair;
    let p = |x: char, y: char| spin(n, a, x) * spin(n, b, y);
    let c = |x: f64| Complex64::new(x, 0.0);
    Ok(match q {
        0 => (p('z', 'z') * c(3.0) - p('x', 'x') - p('y', 'y') - p('z', 'z')) * c(1.0 / 6f64.sqrt()),
        1 => (p('+', 'z') + p('z', '+')) * c(-0.5),
        -1 => (p('-', 'z') + p('z', '-')) * c(0.5),
        2 => p('+', '+') * c(0.5),
        -2 => p('-', '-') * c(0.5),
        _ => return Err(Error::InvalidArgument(format!("q = {q} outside -2..=2"))),
    })
}

/// Secular operator used by [`RelaxationModel::full`]: the `IzIz` part of
/// `T_{2,0}`, i.e. `(3/2)·zz/√6`.
pub fn secular_zz(pair: (usize, usize), n: usize) -> Result<CMat> {
    check_pair(pair, n)?;
    Ok(spin(n, pair.0, 'z') * spin(n, pair.1, 'z') * Complex64::new(3.0 / 6f64.sqrt(), 0.0))
}

/// Which operator carries the secular (`q = 0`) part of the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SecularTerm {
    /// `(3/2)·zz/√6`, which keeps the pure-T2 band structure.
    #[default]
    ZzOnly,
    /// The complete `T_{2,0}` including the flip-flop part.
    FullTensor,
}

#[derive(Debug, Clone)]
pub struct RelaxationTerm {
    pub operator: CMat,
    pub weight: f64,
    pub label: String,
}

/// A Lindblad-type relaxation superoperator `Γ = Σ w [A†, [A, ·]]` together
/// with its spectral decomposition.
#[derive(Debug, Clone)]
pub struct RelaxationModel {
    pub name: String,
    pub n_qubits: usize,
    pub terms: Vec<RelaxationTerm>,
    pub gamma: CMat,
    /// Overall scale applied to all weights.
    pub calibration: f64,
    /// Ratio of secular to non-secular weight, if any.
    pub secular_boost: Option<f64>,
    eigenvalues: Vec<f64>,
    /// Eigenvectors in Liouville space, columns ordered like `eigenvalues`.
    eigenvectors: CMat,
    eigenvectors_real: RMat,
    gamma_real: RMat,
}

impl RelaxationModel {
    /// Builds `Γ` from explicit terms.
    pub fn from_terms(name: &str, n_qubits: usize, terms: Vec<RelaxationTerm>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut gamma = CMat::zeros(dim * dim, dim * dim);
        for t in &terms {
            if t.weight < 0.0 || !t.weight.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "weight {} of `{}` must be nonnegative",
                    t.weight, t.label
                )));
            }
            if t.operator.nrows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "term `{}` has dimension {}, expected {dim}",
                    t.label,
                    t.operator.nrows()
                )));
            }
            gamma += double_commutator_superop(&t.operator)? * Complex64::new(t.weight, 0.0);
        }
        Self::from_gamma(name, n_qubits, terms, gamma, 1.0, None)
    }

    fn from_gamma(
        name: &str,
        n_qubits: usize,
        terms: Vec<RelaxationTerm>,
        gamma: CMat,
        calibration: f64,
        secular_boost: Option<f64>,
    ) -> Result<Self> {
        let basis = pauli_basis::<f64>(n_qubits);
        let mut gamma_real = real_representation(&gamma, &basis, 1e-10)?;
        gamma_real = (&gamma_real + gamma_real.transpose()) * 0.5;
        let (vals, vecs) = eig_symmetric(&gamma_real)?;
        let vecs_c = vecs.map(|x| Complex64::new(x, 0.0));
        Ok(Self {
            name: name.to_string(),
            n_qubits,
            terms,
            gamma,
            calibration,
            secular_boost,
            eigenvalues: vals.iter().copied().collect(),
            eigenvectors: cmul(&basis, &vecs_c),
            eigenvectors_real: vecs,
            gamma_real,
        })
    }

    /// Pure T2 model: `4·Σ_pairs [zz, [zz, ·]]`, spectrum `{0, 4, 8}` s⁻¹.
    pub fn pure_t2() -> Result<Self> {
        let n = 4;
        let terms = [(0, 1), (2, 3)]
            .iter()
            .map(|&(a, b)| {
                let mut label = vec!['1'; n];
                label[a] = 'z';
                label[b] = 'z';
                let label: String = label.into_iter().collect();
                Ok(RelaxationTerm {
                    operator: PauliString::new(&label, 1.0)?.to_operator(),
                    weight: MEDIUM_RATE,
                    label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::from_terms("pure-t2", n, terms)?;
        m.calibration = MEDIUM_RATE;
        Ok(m)
    }

    /// Full dipolar model on the pairs `(0,1)` and `(2,3)` with the
    /// default secular term and the calibrated boost.
    pub fn full() -> Result<Self> {
        Self::full_with(calibrated_secular_boost(), SecularTerm::ZzOnly)
    }

    /// Full dipolar model: secular weight `c`, non-secular weights
    /// `c / secular_boost`, with `c` fixed so the secular medium rate is 4 s⁻¹.
    pub fn full_with(secular_boost: f64, secular: SecularTerm) -> Result<Self> {
        if !(secular_boost > 0.0) || !secular_boost.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "secular boost must be positive, got {secular_boost}"
            )));
        }
        let n = 4;
        let pairs = [(0usize, 1usize), (2, 3)];
        let secular_op = |p| match secular {
            SecularTerm::ZzOnly => secular_zz(p, n),
            SecularTerm::FullTensor => spherical_tensor_t2(p, 0, n),
        };
        let c = MEDIUM_RATE / smallest_gap_squared(&secular_op(pairs[0])?)?;
        let mut terms = Vec::new();
        for &p in &pairs {
            terms.push(RelaxationTerm {
                operator: secular_op(p)?,
                weight: c,
                label: format!("T2,0{p:?}"),
            });
            for q in [-2, -1, 1, 2] {
                terms.push(RelaxationTerm {
                    operator: spherical_tensor_t2(p, q, n)?,
                    weight: c / secular_boost,
                    label: format!("T2,{q}{p:?}"),
                });
            }
        }
        let mut m = Self::from_terms("full", n, terms)?;
        m.calibration = c;
        m.secular_boost = Some(secular_boost);
        Ok(m)
    }

    /// Zero relaxation on `n` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::from_terms("none", n_qubits, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// Eigenvalues of `Γ` in ascending order, s⁻¹.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors (columns) in Liouville space.
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    /// Eigenvectors in the coordinates of [`pauli_basis`].
    pub fn eigenvectors_real(&self) -> &RMat {
        &self.eigenvectors_real
    }

    /// `Γ` in the orthonormal Pauli basis (real symmetric).
    pub fn gamma_real(&self) -> &RMat {
        &self.gamma_real
    }

    /// Rayleigh quotient `⟨vec A, Γ vec A⟩ / ⟨vec A, vec A⟩`.
    pub fn rate_of(&self, op: &CMat) -> Result<f64> {
        let v = vec(op)?;
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator of Liouville dimension {} vs {}",
                v.len(),
                self.dim()
            )));
        }
        let num = v.dotc(&(&self.gamma * &v)).re;
        Ok(num / v.norm_squared())
    }

    /// Longitudinal rate `T₁⁻¹` of `I_z(a) + I_z(b)`.
    pub fn longitudinal_rate(&self, pair: (usize, usize)) -> Result<f64> {
        check_pair(pair, self.n_qubits)?;
        self.rate_of(&(spin(self.n_qubits, pair.0, 'z') + spin(self.n_qubits, pair.1, 'z')))
    }

    /// Transverse rate `T₂⁻¹` of `I_+` on qubit `k`.
    pub fn transverse_rate(&self, k: usize) -> Result<f64> {
        if k >= self.n_qubits {
            return Err(Error::InvalidArgument(format!("qubit {k} out of range")));
        }
        self.rate_of(&spin(self.n_qubits, k, '+'))
    }
}

/// Smallest nonzero `(λᵢ − λⱼ)²` over the eigenvalues of a Hermitian `A`.
fn smallest_gap_squared(a: &CMat) -> Result<f64> {
    let (vals, _) = eig_hermitian(a)?;
    let mut best = f64::INFINITY;
    for i in 0..vals.len() {
        for j in 0..i {
            let d = (vals[i] - vals[j]).powi(2);
            if d > 1e-12 && d < best {
                best = d;
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InvalidArgument("secular operator has a flat spectrum".into()))
    }
}

/// Boost at which the pair longitudinal rate equals [`TARGET_T1_RATE`].
///
/// Non-secular weights enter the longitudinal rate linearly, so one
/// evaluation at unit boost suffices.
pub fn calibrated_secular_boost() -> f64 {
    // Rate at unit boost, computed once by `full_with(1.0, ZzOnly)`: the
    // longitudinal mode only sees the non-secular terms, whose weight is
    // the calibration constant 32/3.
    const RATE_AT_UNIT_BOOST: f64 = 40.0 / 3.0;
    RATE_AT_UNIT_BOOST / TARGET_T1_RATE
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModeClassification {
    /// `(eigenvalue, index)` pairs, index into [`RelaxationModel::eigenvalues`].
    pub slow: Vec<(f64, usize)>,
    pub medium: Vec<(f64, usize)>,
    pub fast: Vec<(f64, usize)>,
    pub cuts: (f64, f64),
}

impl ModeClassification {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.slow.len(), self.medium.len(), self.fast.len())
    }

    pub fn class(&self, k: usize) -> &[(f64, usize)] {
        match k {
            0 => &self.slow,
            1 => &self.medium,
            _ => &self.fast,
        }
    }
}

/// Bins the spectrum of `Γ` by `cuts` (lower bound inclusive for the upper class).
pub fn classify_modes(model: &RelaxationModel, cuts: (f64, f64)) -> Result<ModeClassification> {
    if !(cuts.0 < cuts.1) {
        return Err(Error::InvalidArgument(format!(
            "cuts must be ascending, got {cuts:?}"
        )));
    }
    let mut out = ModeClassification {
        slow: Vec::new(),
        medium: Vec::new(),
        fast: Vec::new(),
        cuts,
    };
    for (i, &v) in model.eigenvalues.iter().enumerate() {
        if v < cuts.0 {
            out.slow.push((v, i));
        } else if v < cuts.1 {
            out.medium.push((v, i));
        } else {
            out.fast.push((v, i));
        }
    }
    Ok(out)
}

/// Eigenvector columns of one class.
pub fn class_basis(model: &RelaxationModel, class: &[(f64, usize)]) -> CMat {
    let w = model.eigenvectors();
    let mut out = CMat::zeros(w.nrows(), class.len());
    for (c, &(_, i)) in class.iter().enumerate() {
        out.set_column(c, &w.column(i));
    }
    out
}

/// Like [`class_basis`], in Pauli coordinates.
pub fn class_basis_real(model: &RelaxationModel, class: &[(f64, usize)]) -> RMat {
    let w = model.eigenvectors_real();
    let mut out = RMat::zeros(w.nrows(), class.len());
    for (c, &(_, i)) in class.iter().enumerate() {
        out.set_column(c, &w.column(i));
    }
    out
}

/// Frobenius norms of the nine blocks of `S` in the `Γ` eigenbasis, rows
/// and columns ordered slow, medium, fast.
pub fn blocks_in_gamma_basis(
    s: &CMat,
    model: &RelaxationModel,
    classes: &ModeClassification,
) -> Result<[[f64; 3]; 3]> {
    ensure_square(s)?;
    if s.nrows() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "superoperator {} vs relaxation {}",
            s.nrows(),
            model.dim()
        )));
    }
    let bases: Vec<CMat> = (0..3).map(|k| class_basis(model, classes.class(k))).collect();
    let mut out = [[0.0; 3]; 3];
    for (r, br) in bases.iter().enumerate() {
        if br.ncols() == 0 {
            continue;
        }
        let left = br.adjoint();
        for (c, bc) in bases.iter().enumerate() {
            if bc.ncols() == 0 {
                continue;
            }
            out[r][c] = cmul(&left, &cmul(s, bc)).norm();
        }
    }
    Ok(out)
}

/// Histogram of eigenvalues rounded to `decimals`.
pub fn spectrum_histogram(values: &[f64], decimals: i32) -> Vec<(f64, usize)> {
    let scale = 10f64.powi(decimals);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        let mut r = (v * scale).round() / scale;
        if r == 0.0 {
            r = 0.0;
        }
        match out.iter_mut().find(|(x, _)| *x == r) {
            Some(e) => e.1 += 1,
            None => out.push((r, 1)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}
