//! The four-qubit model systems, the Bell-pair encoding of two logical
//! qubits and the protected operator subspace.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{adj_superop, ensure_hermitian, PauliString, PauliSum};
use crate::error::{Error, Result};
use crate::numerics::{cidentity, cmul, expm, max_abs, unitarity_defect};
use crate::relaxation::RelaxationModel;
use crate::CMat;

/// Drift plus linear controls, `H(t) = H_d + Σ_j u_j(t) H_j`, all in Hz.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    pub name: String,
    pub n_qubits: usize,
    pub drift: CMat,
    pub controls: Vec<CMat>,
    pub drift_terms: Option<PauliSum>,
    pub control_terms: Vec<PauliSum>,
    pub relaxation: Option<Arc<RelaxationModel>>,
}

impl ControlSystem {
    pub fn new(name: &str, drift: CMat, controls: Vec<CMat>) -> Result<Self> {
        let dim = drift.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch(format!(
                "dimension {dim} is not a power of two"
            )));
        }
        ensure_hermitian(&drift, 1e-12)?;
        for (j, c) in controls.iter().enumerate() {
            if c.shape() != drift.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "control {j} has shape {:?}, drift {:?}",
                    c.shape(),
                    drift.shape()
                )));
            }
            ensure_hermitian(c, 1e-12)?;
        }
        Ok(Self {
            name: name.to_string(),
            n_qubits: dim.trailing_zeros() as usize,
            drift,
            controls,
            drift_terms: None,
            control_terms: Vec::new(),
            relaxation: None,
        })
    }

    pub fn from_pauli(name: &str, drift: &PauliSum, controls: &[PauliSum]) -> Result<Self> {
        if let Some(bad) = controls.iter().find(|c| c.n_qubits() != drift.n_qubits()) {
            return Err(Error::DimensionMismatch(format!(
                "control on {} qubits, drift on {}",
                bad.n_qubits(),
                drift.n_qubits()
            )));
        }
        let mut sys = Self::new(
            name,
            drift.to_operator(),
            controls.iter().map(|c| c.to_operator()).collect(),
        )?;
        sys.drift_terms = Some(drift.clone());
        sys.control_terms = controls.to_vec();
        Ok(sys)
    }

    pub fn with_relaxation(mut self, model: Arc<RelaxationModel>) -> Result<Self> {
        if model.dim() != self.dim() * self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "relaxation on Liouville dimension {}, system {}",
                model.dim(),
                self.dim() * self.dim()
            )));
        }
        self.relaxation = Some(model);
        Ok(self)
    }

    pub fn without_relaxation(mut self) -> Self {
        self.relaxation = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// `H_d + Σ_j u_j H_j`.
    pub fn hamiltonian(&self, u: &[f64]) -> Result<CMat> {
        if u.len() != self.controls.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {} controls",
                u.len(),
                self.controls.len()
            )));
        }
        let mut h = self.drift.clone();
        for (c, &a) in self.controls.iter().zip(u) {
            h += c * Complex64::new(a, 0.0);
        }
        Ok(h)
    }

    pub fn relaxation(&self) -> Result<&RelaxationModel> {
        self.relaxation.as_deref().ok_or(Error::MissingRelaxation)
    }
}

fn sum(terms: &[(&str, f64)]) -> Result<PauliSum> {
    PauliSum::new(
        terms
            .iter()
            .map(|&(l, c)| PauliString::new(l, c))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// The two z-difference controls `z111 − 1z11` and `11z1 − 111z`.
pub fn z_controls() -> Result<Vec<PauliSum>> {
    Ok(vec![
        sum(&[("z111", 1.0), ("1z11", -1.0)])?,
        sum(&[("11z1", 1.0), ("111z", -1.0)])?,
    ])
}

fn intra_pair(j_xx: f64) -> Vec<(&'static str, f64)> {
    vec![("xx11", j_xx), ("11xx", j_xx), ("yy11", j_xx), ("11yy", j_xx)]
}

/// System I: `J_xx(xx11 + 11xx + yy11 + 11yy) + J_zz·1zz1`.
pub fn system_i(j_xx: f64, j_zz: f64) -> Result<ControlSystem> {
    let mut t = intra_pair(j_xx);
    t.push(("1zz1", j_zz));
    ControlSystem::from_pauli("system-I", &sum(&t)?, &z_controls()?)
}

/// System II: `J_xx(xx11 + 11xx + yy11 + 11yy) + J_xyz(1xx1 + 1yy1 + 1zz1)`.
pub fn system_ii(j_xx: f64, j_xyz: f64) -> Result<ControlSystem> {
    let mut t = intra_pair(j_xx);
    t.extend([("1xx1", j_xyz), ("1yy1", j_xyz), ("1zz1", j_xyz)]);
    ControlSystem::from_pauli("system-II", &sum(&t)?, &z_controls()?)
}

/// Named systems with default couplings.
pub fn system_by_name(name: &str) -> Result<ControlSystem> {
    match name.to_ascii_lowercase().as_str() {
        "system-i" | "i" | "1" => system_i(2.0, 1.0),
        "system-ii" | "ii" | "2" => system_ii(2.0, 1.0),
        _ => Err(Error::InvalidArgument(format!("unknown system `{name}`"))),
    }
}

/// `e^{−iθH} A e^{iθH}` with no 2π factor.
pub fn conjugate(op: &CMat, h: &CMat, theta: f64) -> Result<CMat> {
    let u = expm(&(h * Complex64::new(0.0, -theta)))?;
    Ok(&u * op * u.adjoint())
}

/// For each drift Pauli term, `+1` or `−1` if conjugation by `e^{−iπH_C}`
/// fixes or negates it, `0` otherwise.
pub fn pi_conjugation_signs(sys: &ControlSystem, control: usize) -> Result<Vec<(String, i8)>> {
    let terms = sys
        .drift_terms
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("system has no Pauli description".into()))?;
    let h = sys
        .controls
        .get(control)
        .ok_or_else(|| Error::InvalidArgument(format!("no control {control}")))?;
    terms
        .terms()
        .iter()
        .map(|t| {
            let a = t.to_operator::<f64>();
            let b = conjugate(&a, h, std::f64::consts::PI)?;
            let sign = if max_abs(&(&b - &a)) < 1e-10 {
                1
            } else if max_abs(&(&b + &a)) < 1e-10 {
                -1
            } else {
                0
            };
            Ok((t.label(), sign))
        })
        .collect()
}

/// Bell-pair encoding `|ab⟩_L ↦ |ψ^{s(a)}⟩⊗|ψ^{s(b)}⟩`, `s(0)=+`, `s(1)=−`,
/// with `|ψ^±⟩ = (|01⟩ ± |10⟩)/√2`.
#[derive(Debug, Clone)]
pub struct EncodingMap {
    /// Isometry, 16×4.
    pub isometry: CMat,
    /// Orthonormal Hermitian basis of the protected subspace, 256×16.
    pub basis: CMat,
    /// Orthogonal projector onto the protected subspace, 256×256.
    pub projector: CMat,
    pub logical_dim: usize,
}

/// Hermitian orthonormal basis of `d×d` matrices in lexicographic `(i, j)`
/// order: `E_ii`, `(E_ij + E_ji)/√2` for `i < j`, `i(E_ij − E_ji)/√2` for `i > j`.
pub fn hermitian_matrix_basis(d: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut m = CMat::zeros(d, d);
            if i == j {
                m[(i, i)] = Complex64::new(1.0, 0.0);
            } else if i < j {
                m[(i, j)] = Complex64::new(s, 0.0);
                m[(j, i)] = Complex64::new(s, 0.0);
            } else {
                m[(i, j)] = Complex64::new(0.0, s);
                m[(j, i)] = Complex64::new(0.0, -s);
            }
            out.push(m);
        }
    }
    out
}

pub fn bell_encoding() -> EncodingMap {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = |sign: f64| {
        let mut v = CMat::zeros(4, 1);
        v[(1, 0)] = Complex64::new(s, 0.0);
        v[(2, 0)] = Complex64::new(sign * s, 0.0);
        v
    };
    let mut isometry = CMat::zeros(16, 4);
    for a in 0..2 {
        for b in 0..2 {
            let sa = if a == 0 { 1.0 } else { -1.0 };
            let sb = if b == 0 { 1.0 } else { -1.0 };
            let col = crate::numerics::kron(&psi(sa), &psi(sb));
            isometry.set_column(2 * a + b, &col.column(0));
        }
    }
    let herm = hermitian_matrix_basis(4);
    let mut basis = CMat::zeros(256, 16);
    for (k, h) in herm.iter().enumerate() {
        let lifted = &isometry * h * isometry.adjoint();
        basis.column_mut(k).copy_from_slice(lifted.as_slice());
    }
    let projector = cmul(&basis, &basis.adjoint());
    EncodingMap {
        isometry,
        basis,
        projector,
        logical_dim: 4,
    }
}

impl EncodingMap {
    /// `V V†`, the Hilbert-space projector onto the code space.
    pub fn code_projector(&self) -> CMat {
        &self.isometry * self.isometry.adjoint()
    }
}

/// Logical CNOT with the first qubit as control.
pub fn cnot() -> CMat {
    let mut m = CMat::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Physical completion `V U_L V† + (1 − V V†)` and its conjugation superoperator.
pub fn lift_logical_gate(u_logical: &CMat, enc: &EncodingMap) -> Result<(CMat, CMat)> {
    if u_logical.shape() != (enc.logical_dim, enc.logical_dim) {
        return Err(Error::DimensionMismatch(format!(
            "logical gate has shape {:?}",
            u_logical.shape()
        )));
    }
    let d = unitarity_defect(u_logical);
    if d > 1e-10 {
        return Err(Error::NotUnitary(d));
    }
    let v = &enc.isometry;
    let n = v.nrows();
    let u = v * u_logical * v.adjoint() + (cidentity::<f64>(n) - v * v.adjoint());
    let f = adj_superop(&u)?;
    Ok((u, f))
}

/// Compression `B† S B` of a superoperator to the protected subspace.
/// With `check_invariant`, fails if `S` leaks out of it.
pub fn restrict_to_protected(s: &CMat, enc: &EncodingMap, check_invariant: bool) -> Result<CMat> {
    if s.shape() != (enc.basis.nrows(), enc.basis.nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "superoperator has shape {:?}",
            s.shape()
        )));
    }
    let sb = cmul(s, &enc.basis);
    let r = cmul(&enc.basis.adjoint(), &sb);
    if check_invariant {
        let leak = (sb - cmul(&enc.basis, &r)).norm();
        if leak > 1e-9 {
            return Err(Error::NotInvariant(leak));
        }
    }
    Ok(r)
}

/// `‖(1 − Π) S Π‖_F`.
pub fn leakage(s: &CMat, enc: &EncodingMap) -> f64 {
    let sb = cmul(s, &enc.basis);
    let r = cmul(&enc.basis.adjoint(), &sb);
    (sb - cmul(&enc.basis, &r)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ad_superop, vec};
    use crate::numerics::eig_hermitian;

    fn ket(idx: usize, dim: usize) -> CMat {
        let mut v = CMat::zeros(dim, 1);
        v[(idx, 0)] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn drift_basics() {
        let s1 = system_i(2.0, 1.0).unwrap();
        assert!(s1.drift.trace().norm() < 1e-14);
        assert_eq!(s1.n_qubits, 4);
        for c in &s1.controls {
            assert!(max_abs(&(&s1.drift * c - c * &s1.drift)) > 0.1);
        }
        let s2 = system_ii(2.0, 1.0).unwrap();
        let diff = &s2.drift - &s1.drift;
        let expected = sum(&[("1xx1", 1.0), ("1yy1", 1.0)]).unwrap().to_operator::<f64>();
        assert!(max_abs(&(diff - expected)) < 1e-15);
    }

    #[test]
    fn pi_conjugation_flips_only_middle_transverse_terms() {
        let s2 = system_ii(2.0, 1.0).unwrap();
        for control in 0..2 {
            let signs = pi_conjugation_signs(&s2, control).unwrap();
            for (label, sign) in signs {
                let want = if label == "1xx1" || label == "1yy1" { -1 } else { 1 };
                assert_eq!(sign, want, "{label} control {control}");
            }
        }
    }

    #[test]
    fn system_ii_spectrum_not_symmetric() {
        let (vals, _) = eig_hermitian(&system_ii(2.0, 1.0).unwrap().drift).unwrap();
        let asym = (0..16).map(|i| (vals[i] + vals[15 - i]).abs()).fold(0.0, f64::max);
        assert!(asym > 0.1);
    }

    #[test]
    fn encoding_properties() {
        let e = bell_encoding();
        assert!(max_abs(&(e.isometry.adjoint() * &e.isometry - cidentity::<f64>(4))) < 1e-15);
        let p = &e.projector;
        assert!(max_abs(&(cmul(p, p) - p)) < 1e-13);
        assert!(max_abs(&(p - p.adjoint())) < 1e-15);
        assert!((p.trace().re - 16.0).abs() < 1e-12);

        let op = &e.isometry * ket(0, 4) * ket(3, 4).adjoint() * e.isometry.adjoint();
        let v = vec(&op).unwrap();
        assert!((p * &v - &v).norm() < 1e-13);
        let v = vec(&(ket(0, 16) * ket(0, 16).adjoint())).unwrap();
        assert!((p * &v - &v).norm() > 0.5);
    }

    #[test]
    fn protected_subspace_and_pure_t2() {
        let e = bell_encoding();
        let g = RelaxationModel::pure_t2().unwrap();
        assert!(cmul(&g.gamma, &e.projector).norm() < 1e-10);
        assert!(max_abs(&(cmul(&g.gamma, &e.projector) - cmul(&e.projector, &g.gamma))) < 1e-10);
        assert!(restrict_to_protected(&g.gamma, &e, true).unwrap().norm() < 1e-10);
        let r = restrict_to_protected(&cidentity::<f64>(256), &e, true).unwrap();
        assert!(max_abs(&(r - cidentity::<f64>(16))) < 1e-13);
        // The kernel of pure-T2 Γ intersected with the protected span is all of it.
        let kernel = g.eigenvalues().iter().filter(|&&x| x.abs() < 1e-9).count();
        assert!(kernel >= 16);
    }

    #[test]
    fn invariance_of_protected_span() {
        let e = bell_encoding();
        let s1 = system_i(2.0, 1.0).unwrap();
        for h in std::iter::once(&s1.drift).chain(s1.controls.iter()) {
            assert!(leakage(&ad_superop(h).unwrap(), &e) < 1e-9);
        }
        let r = restrict_to_protected(&ad_superop(&s1.drift).unwrap(), &e, true).unwrap();
        assert!(r.norm() > 0.1);
        assert!(max_abs(&(&r - r.adjoint())) < 1e-12);
        let s2 = system_ii(2.0, 1.0).unwrap();
        let ad2 = ad_superop(&s2.drift).unwrap();
        assert!(leakage(&ad2, &e) > 0.1);
        assert!(matches!(restrict_to_protected(&ad2, &e, true), Err(Error::NotInvariant(_))));
    }

    #[test]
    fn lifted_cnot() {
        let e = bell_encoding();
        let (u, f) = lift_logical_gate(&cnot(), &e).unwrap();
        assert!(unitarity_defect(&u) < 1e-14);
        let out = &u * e.isometry.column(2);
        assert!((out - e.isometry.column(3)).norm() < 1e-14);
        assert_eq!(f.nrows(), 256);

        let (_, fi) = lift_logical_gate(&cidentity::<f64>(4), &e).unwrap();
        assert!(max_abs(&(cmul(&fi, &e.basis) - &e.basis)) < 1e-14);
        assert!(lift_logical_gate(&(cnot() * Complex64::new(2.0, 0.0)), &e).is_err());
    }

    #[test]
    fn rejects_bad_systems() {
        let h = CMat::from_fn(4, 4, |i, j| Complex64::new((i * 4 + j) as f64, 0.0));
        assert!(ControlSystem::new("bad", h, vec![]).is_err());
        assert!(system_by_name("system-III").is_err());
        assert_eq!(system_by_name("system-II").unwrap().name, "system-II");
    }
}
