//! Piecewise-constant propagation of closed and open dynamics, fidelity
//! functionals and trajectory diagnostics.
//!
//! Amplitudes and couplings are in Hz; a slot of length `dt` under `H`
//! contributes `exp(−i·2π·H·dt)`, or `exp(−(i·2π·ad_H + Γ)·dt)` in
//! Liouville space.
//!
//! Open dynamics is computed in the orthonormal Pauli basis of Liouville
//! space, where `i·ad_H` is real antisymmetric and `Γ` real symmetric.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{ad_superop, pauli_basis, real_representation};
use crate::error::{Error, Result};
use crate::numerics::{cmul, ensure_square, expm, max_abs};
use crate::relaxation::{class_basis_real, ModeClassification};
use crate::systems::{ControlSystem, EncodingMap};
use crate::{CMat, RMat};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Uniform time step and an `M×J` table of amplitudes in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    dt: f64,
    amplitudes: RMat,
}

impl ControlSequence {
    pub fn new(dt: f64, amplitudes: RMat) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if amplitudes.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dt, amplitudes })
    }

    pub fn zeros(n_slots: usize, n_controls: usize, dt: f64) -> Result<Self> {
        Self::new(dt, RMat::zeros(n_slots, n_controls))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn amplitudes(&self) -> &RMat {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut RMat {
        &mut self.amplitudes
    }

    pub fn n_slots(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_slots() as f64
    }

    pub fn slot(&self, k: usize) -> Vec<f64> {
        self.amplitudes.row(k).iter().copied().collect()
    }

    /// Largest `|u|` over all slots and controls.
    pub fn max_abs(&self) -> f64 {
        self.amplitudes.amax()
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if (self.dt - other.dt).abs() > 1e-15 * self.dt || self.n_controls() != other.n_controls() {
            return Err(Error::DimensionMismatch(
                "sequences differ in dt or control count".into(),
            ));
        }
        let m = self.n_slots() + other.n_slots();
        let mut a = RMat::zeros(m, self.n_controls());
        a.rows_mut(0, self.n_slots()).copy_from(&self.amplitudes);
        a.rows_mut(self.n_slots(), other.n_slots()).copy_from(&other.amplitudes);
        Self::new(self.dt, a)
    }

    pub fn read(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for ControlSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dt={} controls={}", self.dt, self.n_controls())?;
        for row in self.amplitudes.row_iter() {
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for ControlSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty pulse file".into()))?;
        let mut dt = None;
        let mut j = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("dt", v)) => dt = v.parse::<f64>().ok(),
                Some(("controls", v)) => j = v.parse::<usize>().ok(),
                _ => return Err(Error::Parse(format!("unexpected header field `{field}`"))),
            }
        }
        let dt = dt.ok_or_else(|| Error::Parse("header lacks a valid `dt`".into()))?;
        let j = j.ok_or_else(|| Error::Parse("header lacks a valid `controls`".into()))?;
        let mut values = Vec::new();
        let mut m = 0;
        for (i, line) in lines.enumerate() {
            let row = line
                .split_whitespace()
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: bad number `{x}`", i + 2)))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != j {
                return Err(Error::Parse(format!(
                    "line {}: {} values, expected {j}",
                    i + 2,
                    row.len()
                )));
            }
            values.extend(row);
            m += 1;
        }
        Self::new(dt, RMat::from_row_slice(m, j, &values))
    }
}

fn check_controls(sys: &ControlSystem, seq: &ControlSequence) -> Result<()> {
    if sys.n_controls() != seq.n_controls() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} controls, sequence {}",
            sys.n_controls(),
            seq.n_controls()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PropagationRecord<M> {
    pub final_map: M,
    /// Cumulative maps after each slot.
    pub intermediates: Option<Vec<M>>,
    pub elapsed: Duration,
}

/// `exp(−i·2π·H(u)·dt)`.
pub fn slot_unitary(sys: &ControlSystem, u: &[f64], dt: f64) -> Result<CMat> {
    let h = sys.hamiltonian(u)?;
    expm(&(h * Complex64::new(0.0, -TWO_PI * dt)))
}

/// `U(T) = U_M ⋯ U_1`.
pub fn propagate_closed(
    sys: &ControlSystem,
    seq: &ControlSequence,
    keep_intermediates: bool,
) -> Result<PropagationRecord<CMat>> {
    check_controls(sys, seq)?;
    let start = Instant::now();
    let mut u = crate::numerics::cidentity::<f64>(sys.dim());
    let mut inter = keep_intermediates.then(Vec::new);
    for k in 0..seq.n_slots() {
        u = cmul(&slot_unitary(sys, &seq.slot(k), seq.dt())?, &u);
        if let Some(v) = inter.as_mut() {
            v.push(u.clone());
        }
    }
    Ok(PropagationRecord {
        final_map: u,
        intermediates: inter,
        elapsed: start.elapsed(),
    })
}

/// Real Liouville-space generators in some orthonormal real basis:
/// `F(u, dt) = exp(−dt·(2π(A_d + Σ u_j A_j) + Γ))`, `A = real(i·ad_H)`.
#[derive(Debug, Clone)]
pub struct RealGenerators {
    pub drift: RMat,
    pub controls: Vec<RMat>,
    pub gamma: RMat,
    /// Columns spanning the subspace in full Pauli coordinates; `None`
    /// means the whole Liouville space.
    pub embedding: Option<RMat>,
}

impl RealGenerators {
    /// Pauli-basis generators of `sys`, with `Γ` if present and requested.
    pub fn from_system(sys: &ControlSystem, include_gamma: bool) -> Result<Self> {
        let basis = pauli_basis::<f64>(sys.n_qubits);
        Self::with_basis(sys, include_gamma, &basis)
    }

    pub fn with_basis(sys: &ControlSystem, include_gamma: bool, basis: &CMat) -> Result<Self> {
        let i = Complex64::new(0.0, 1.0);
        let rep = |h: &CMat| -> Result<RMat> {
            let a = real_representation(&(ad_superop(h)? * i), basis, 1e-10)?;
            Ok((&a - a.transpose()) * 0.5)
        };
        let d = basis.ncols();
        let gamma = match (&sys.relaxation, include_gamma) {
            (Some(m), true) => m.gamma_real().clone(),
            (None, true) => return Err(Error::MissingRelaxation),
            _ => RMat::zeros(d, d),
        };
        Ok(Self {
            drift: rep(&sys.drift)?,
            controls: sys.controls.iter().map(rep).collect::<Result<_>>()?,
            gamma,
            embedding: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// `2π(A_d + Σ u_j A_j) + Γ`.
    pub fn generator(&self, u: &[f64]) -> Result<RMat> {
        if u.len() != self.controls.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {} controls",
                u.len(),
                self.controls.len()
            )));
        }
        let mut g = &self.drift * TWO_PI + &self.gamma;
        for (a, &x) in self.controls.iter().zip(u) {
            g += a * (TWO_PI * x);
        }
        Ok(g)
    }

    pub fn slot_propagator(&self, u: &[f64], dt: f64) -> Result<RMat> {
        expm(&(self.generator(u)? * -dt))
    }

    /// Per-slot propagators `F_1, …, F_M`.
    pub fn slot_propagators(&self, seq: &ControlSequence) -> Result<Vec<RMat>> {
        (0..seq.n_slots())
            .map(|k| self.slot_propagator(&seq.slot(k), seq.dt()))
            .collect()
    }

    pub fn propagate(&self, seq: &ControlSequence) -> Result<RMat> {
        let mut f = RMat::identity(self.dim(), self.dim());
        for fk in self.slot_propagators(seq)? {
            f = &fk * &f;
        }
        Ok(f)
    }

    /// Restricts to the smallest subspace containing the columns of
    /// `seeds` that is invariant under all generators. The result's
    /// `embedding` maps reduced to full coordinates.
    pub fn reduce(&self, seeds: &RMat) -> Result<Self> {
        let mut ops: Vec<&RMat> = vec![&self.drift, &self.gamma];
        ops.extend(self.controls.iter());
        let q = invariant_subspace(seeds, &ops, 1e-10)?;
        let project = |a: &RMat| -> Result<RMat> {
            let aq = a * &q;
            let r = q.transpose() * &aq;
            let leak = (aq - &q * &r).amax();
            if leak > 1e-8 * (1.0 + a.amax()) {
                return Err(Error::NotInvariant(leak));
            }
            Ok(r)
        };
        let embedding = match &self.embedding {
            Some(e) => e * &q,
            None => q.clone(),
        };
        Ok(Self {
            drift: project(&self.drift)?,
            controls: self.controls.iter().map(project).collect::<Result<_>>()?,
            gamma: project(&self.gamma)?,
            embedding: Some(embedding),
        })
    }
}

/// Orthonormal basis of the smallest subspace containing `seeds` and
/// invariant under `ops`.
pub fn invariant_subspace(seeds: &RMat, ops: &[&RMat], tol: f64) -> Result<RMat> {
    let n = seeds.nrows();
    if ops.iter().any(|a| a.shape() != (n, n)) {
        return Err(Error::DimensionMismatch("operator and seed dimensions differ".into()));
    }
    let scale = ops.iter().map(|a| a.amax()).fold(1.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let admit = |v: DVector<f64>, basis: &mut Vec<DVector<f64>>, reference: f64| -> bool {
        let mut r = v;
        for _ in 0..2 {
            for b in basis.iter() {
                let c = b.dot(&r);
                r.axpy(-c, b, 1.0);
            }
        }
        let norm = r.norm();
        if norm > tol * reference.max(1e-300) && basis.len() < n {
            basis.push(r / norm);
            true
        } else {
            false
        }
    };
    for c in seeds.column_iter() {
        let v = c.into_owned();
        let nv = v.norm();
        admit(v, &mut basis, nv);
    }
    let mut next = 0;
    while next < basis.len() {
        let v = basis[next].clone();
        next += 1;
        for a in ops {
            admit(*a * &v, &mut basis, scale);
        }
    }
    let mut q = RMat::zeros(n, basis.len());
    for (j, b) in basis.iter().enumerate() {
        q.set_column(j, b);
    }
    Ok(q)
}

/// Full Liouville-space `F(T) = F_M ⋯ F_1` in the vec convention.
pub fn propagate_open(
    sys: &ControlSystem,
    seq: &ControlSequence,
    keep_intermediates: bool,
) -> Result<PropagationRecord<CMat>> {
    check_controls(sys, seq)?;
    sys.relaxation()?;
    let start = Instant::now();
    let basis = pauli_basis::<f64>(sys.n_qubits);
    let gens = RealGenerators::with_basis(sys, true, &basis)?;
    let to_vec = |f: &RMat| -> CMat {
        let fc = f.map(|x| Complex64::new(x, 0.0));
        cmul(&cmul(&basis, &fc), &basis.adjoint())
    };
    let mut f = RMat::identity(gens.dim(), gens.dim());
    let mut inter = keep_intermediates.then(Vec::new);
    for k in 0..seq.n_slots() {
        f = gens.slot_propagator(&seq.slot(k), seq.dt())? * &f;
        if let Some(v) = inter.as_mut() {
            v.push(to_vec(&f));
        }
    }
    Ok(PropagationRecord {
        final_map: to_vec(&f),
        intermediates: inter,
        elapsed: start.elapsed(),
    })
}

fn check_same_shape(a: &CMat, b: &CMat) -> Result<usize> {
    let n = ensure_square(a)?;
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(n)
}

/// `f' = (1/N) Re tr(U_t† U)`.
pub fn fidelity_phase_sensitive(u: &CMat, u_target: &CMat) -> Result<f64> {
    let n = check_same_shape(u, u_target)?;
    Ok((u_target.adjoint() * u).trace().re / n as f64)
}

/// `f = |(1/N) tr(U_t† U)|²`.
pub fn fidelity_phase_invariant(u: &CMat, u_target: &CMat) -> Result<f64> {
    let n = check_same_shape(u, u_target)?;
    Ok(((u_target.adjoint() * u).trace() / n as f64).norm_sqr())
}

/// Same quantity as [`fidelity_phase_invariant`], through `(1/N²) Re tr(Ad_t† Ad_U)`.
pub fn fidelity_phase_invariant_superop(u: &CMat, u_target: &CMat) -> Result<f64> {
    check_same_shape(u, u_target)?;
    let a = crate::algebra::adj_superop(u)?;
    let b = crate::algebra::adj_superop(u_target)?;
    fidelity_open(&a, &b)
}

/// `(1/N²) Re tr(F_t† F)`.
pub fn fidelity_open(f: &CMat, f_target: &CMat) -> Result<f64> {
    let n2 = check_same_shape(f, f_target)?;
    Ok(f_target.iter().zip(f.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / n2 as f64)
}

/// `(1/rk Π) Re tr(Πᵗ F_t† Π F)`.
pub fn fidelity_projected(f: &CMat, f_target: &CMat, projector: &CMat) -> Result<f64> {
    check_same_shape(f, f_target)?;
    check_same_shape(f, projector)?;
    let p2 = cmul(projector, projector);
    let defect = max_abs(&(p2 - projector));
    if defect > 1e-8 {
        return Err(Error::NotProjector(format!("‖Π² − Π‖ = {defect:e}")));
    }
    let rank = projector.trace().re.round();
    if rank < 1.0 {
        return Err(Error::NotProjector("rank zero".into()));
    }
    let m = cmul(
        &projector.transpose(),
        &cmul(&f_target.adjoint(), &cmul(projector, f)),
    );
    Ok(m.trace().re / rank)
}

/// `|tr(U_L† V† U V)|² / d²` for a logical target on the code space.
pub fn code_space_fidelity(u: &CMat, u_logical: &CMat, enc: &EncodingMap) -> Result<f64> {
    let v = &enc.isometry;
    if u.nrows() != v.nrows() || u_logical.nrows() != v.ncols() {
        return Err(Error::DimensionMismatch("gate and encoding dimensions differ".into()));
    }
    let w = u_logical.adjoint() * v.adjoint() * u * v;
    Ok(w.trace().norm_sqr() / (v.ncols() * v.ncols()) as f64)
}

/// Target for the real-coordinate projected fidelity `(1/r) tr(Bᵀ F A)`.
#[derive(Debug, Clone)]
pub struct ProjectedTarget {
    /// `A`, columns in the generators' coordinates.
    pub inputs: RMat,
    /// `B`.
    pub outputs: RMat,
    /// Normalisation `r`.
    pub norm: f64,
}

impl ProjectedTarget {
    /// From a Hermiticity-preserving target map in the vec convention and
    /// an optional orthonormal Hermitian basis of `range(Π)` (as vec
    /// columns). Without a basis this is the unprojected `1/N²` fidelity.
    pub fn new(f_target: &CMat, range_basis: Option<&CMat>, n_qubits: usize) -> Result<Self> {
        let basis = pauli_basis::<f64>(n_qubits);
        let ft = real_representation(f_target, &basis, 1e-9)?;
        let d = basis.ncols();
        match range_basis {
            None => Ok(Self {
                inputs: RMat::identity(d, d),
                outputs: ft,
                norm: d as f64,
            }),
            Some(c) => {
                if c.nrows() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "projector basis has {} rows, expected {d}",
                        c.nrows()
                    )));
                }
                let cr = cmul(&basis.adjoint(), c);
                let (re, im) = crate::numerics::split(&cr);
                if im.amax() > 1e-10 {
                    return Err(Error::NotProjector("range basis is not Hermitian".into()));
                }
                // Πᵗ in Pauli coordinates is S Π S with S = diag((−1)^{#y}).
                let s: Vec<f64> = (0..d).map(|a| y_parity(a, n_qubits)).collect();
                let mut inputs = re.clone();
                for (i, mut row) in inputs.row_iter_mut().enumerate() {
                    row *= s[i];
                }
                let outputs = &re * (re.transpose() * (&ft * &inputs));
                Ok(Self {
                    inputs,
                    outputs,
                    norm: re.ncols() as f64,
                })
            }
        }
    }

    /// Both sides in the coordinates of `gens` (identity if unreduced).
    pub fn in_coordinates(&self, gens: &RealGenerators) -> Self {
        match &gens.embedding {
            None => self.clone(),
            Some(q) => Self {
                inputs: q.transpose() * &self.inputs,
                outputs: q.transpose() * &self.outputs,
                norm: self.norm,
            },
        }
    }

    /// Seeds for [`RealGenerators::reduce`].
    pub fn seeds(&self) -> RMat {
        let (d, r) = (self.inputs.nrows(), self.inputs.ncols());
        let mut s = RMat::zeros(d, r + self.outputs.ncols());
        s.columns_mut(0, r).copy_from(&self.inputs);
        s.columns_mut(r, self.outputs.ncols()).copy_from(&self.outputs);
        s
    }

    pub fn fidelity(&self, f: &RMat) -> f64 {
        (self.outputs.transpose() * (f * &self.inputs)).trace() / self.norm
    }
}

/// `(−1)^{number of y letters}` of the Pauli tensor with index `a`.
fn y_parity(a: usize, n_qubits: usize) -> f64 {
    let ys = (0..n_qubits).filter(|k| (a >> (2 * k)) & 3 == 2).count();
    if ys % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A ready-to-evaluate open problem: reduced generators and target.
#[derive(Debug, Clone)]
pub struct OpenModel {
    pub gens: RealGenerators,
    pub target: ProjectedTarget,
}

impl OpenModel {
    /// Builds the reduced model of `sys` (including `Γ` when present) for
    /// the projected target.
    pub fn new(sys: &ControlSystem, f_target: &CMat, range_basis: Option<&CMat>) -> Result<Self> {
        let full = RealGenerators::from_system(sys, sys.relaxation.is_some())?;
        let target = ProjectedTarget::new(f_target, range_basis, sys.n_qubits)?;
        let gens = full.reduce(&target.seeds())?;
        let target = target.in_coordinates(&gens);
        Ok(Self { gens, target })
    }

    pub fn fidelity(&self, seq: &ControlSequence) -> Result<f64> {
        Ok(self.target.fidelity(&self.gens.propagate(seq)?))
    }

    pub fn dim(&self) -> usize {
        self.gens.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub state_index: usize,
    pub p_slow: f64,
    pub p_fast: f64,
}

/// `‖P_slow vec ρ(t)‖²` and `‖P_fast vec ρ(t)‖²` at every slot boundary,
/// for each element of the protected basis as initial state.
pub fn trajectory_projections(
    sys: &ControlSystem,
    seq: &ControlSequence,
    enc: &EncodingMap,
    classes: &ModeClassification,
) -> Result<Vec<TrajectoryRow>> {
    check_controls(sys, seq)?;
    let model = sys.relaxation()?;
    let basis = pauli_basis::<f64>(sys.n_qubits);
    let full = RealGenerators::with_basis(sys, true, &basis)?;
    let (x0, im) = crate::numerics::split(&cmul(&basis.adjoint(), &enc.basis));
    if im.amax() > 1e-10 {
        return Err(Error::NotProjector("protected basis is not Hermitian".into()));
    }
    let gens = full.reduce(&x0)?;
    let q = gens.embedding.as_ref().expect("reduced");
    let slow = class_basis_real(model, &classes.slow).transpose() * q;
    let fast = class_basis_real(model, &classes.fast).transpose() * q;
    let mut x = q.transpose() * &x0;
    let mut rows = Vec::with_capacity((seq.n_slots() + 1) * x.ncols());
    let mut record = |t: f64, x: &RMat| {
        let ps = &slow * x;
        let pf = &fast * x;
        for i in 0..x.ncols() {
            rows.push(TrajectoryRow {
                t,
                state_index: i,
                p_slow: ps.column(i).norm_squared(),
                p_fast: pf.column(i).norm_squared(),
            });
        }
    };
    record(0.0, &x);
    for k in 0..seq.n_slots() {
        x = gens.slot_propagator(&seq.slot(k), seq.dt())? * &x;
        record((k + 1) as f64 * seq.dt(), &x);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `lower = g₀·exp(−T·mean γ)`, `upper = g₀·mean(e^{−γT})`.
pub fn fidelity_envelopes(g0: &[(f64, f64)], gammas: &[f64]) -> Result<Vec<EnvelopeRow>> {
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("no rates".into()));
    }
    if let Some(g) = gammas.iter().find(|&&g| g < 0.0 || !g.is_finite()) {
        return Err(Error::InvalidArgument(format!("negative rate {g}")));
    }
    let n = gammas.len() as f64;
    let mean = gammas.iter().sum::<f64>() / n;
    Ok(g0
        .iter()
        .map(|&(t, q)| EnvelopeRow {
            t,
            lower: q * (-t * mean).exp(),
            upper: q * gammas.iter().map(|g| (-g * t).exp()).sum::<f64>() / n,
        })
        .collect())
}

/// Largest modulus among the eigenvalues of a real square matrix.
pub fn spectral_radius(f: &RMat) -> f64 {
    let n = f.nrows().max(1);
    if let Some(s) = nalgebra::linalg::Schur::try_new(f.clone(), f64::EPSILON, 200 * n) {
        return s.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    gelfand_radius(f)
}

/// `‖F^k‖^{1/k}` for `k = 2^48`, by repeated normalised squaring.
fn gelfand_radius(f: &RMat) -> f64 {
    let mut p = f.clone();
    let mut log_scale = 0.0;
    for _ in 0..48 {
        let s = p.norm();
        if s == 0.0 {
            return 0.0;
        }
        p /= s;
        log_scale = 2.0 * (log_scale + s.ln());
        p = &p * &p;
    }
    ((log_scale + p.norm().ln()) / 2f64.powi(48)).exp()
}
