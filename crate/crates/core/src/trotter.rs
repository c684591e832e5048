//! Algebraic baselines: Trotter decoupling by π z-pulse conjugation,
//! quasi-periodic inversion of free evolution, and a compiled logical CNOT
//! built from bang-bang pulses.
//!
//! In the Bell code space the System I drift acts as
//! `a_A·Z_A + a_B·Z_B + b·X_A X_B` and the z-controls act as `X_A`, `X_B`.
//! The compiled CNOT uses
//! `CNOT ∝ Z_A(π/2)·X_A(π/4)·Z_A(π/4)·XX(−π/4)·Z_A(−π/4)·X_A(−π/4)·Z_A(−π/4)·X_B(π/4)`
//! (rightmost first, `P(θ) = e^{−iθP}`). Pure `XX` evolution comes from free
//! evolution with `X_A X_B` π refocusing (`n2` cycles); `Z_A` rotations come
//! from `n1` steps of free evolution with `X_B` refocusing, each followed by
//! a wait that undoes the accumulated `XX` phase modulo its period. Every
//! free piece is wrapped in one π z-pulse cycle on the first control, which
//! removes the inter-pair flip-flop terms.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, expm};
use crate::propagation::{ControlSequence, OpenModel, TWO_PI};
use crate::systems::{conjugate, ControlSystem, EncodingMap};
use crate::{CMat, RMat};

/// Preset coupling giving the favourable quasi-periodicity.
pub const PRESET_J_XX: f64 = 2.23;
pub const PRESET_N1: usize = 2;
pub const PRESET_N2: usize = 64;
/// Bang-bang pulse amplitude in Hz.
pub const PRESET_PULSE_AMPLITUDE: f64 = 5.0e5;

/// `e^{−i2πτH}`.
fn evolve(h: &CMat, tau: f64) -> Result<CMat> {
    expm(&(h * Complex64::new(0.0, -TWO_PI * tau)))
}

/// The drift with the sign of every term anticommuting with `H_C` flipped,
/// i.e. conjugated by `e^{−iπH_C}`.
pub fn pi_conjugated_drift(sys: &ControlSystem, control: usize) -> Result<CMat> {
    let h = sys
        .controls
        .get(control)
        .ok_or_else(|| Error::InvalidArgument(format!("no control {control}")))?;
    conjugate(&sys.drift, h, std::f64::consts::PI)
}

#[derive(Debug, Clone)]
pub struct TrotterReduction {
    pub n: usize,
    pub approx: CMat,
    /// `e^{−i2πτ H_avg}` with `H_avg` the mean of the drift and its π-conjugate.
    pub exact: CMat,
    /// Frobenius distance between the two.
    pub error: f64,
    pub fidelity: f64,
}

/// `(e^{−i2πτH₊/(2n)} e^{−i2πτH₋/(2n)})ⁿ` against `e^{−i2πτ(H₊+H₋)/2}`,
/// where `H₋` is the drift conjugated by `e^{−iπH_C}`.
pub fn trotter_reduce(sys: &ControlSystem, control: usize, tau: f64, n: usize) -> Result<TrotterReduction> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let plus = &sys.drift;
    let minus = pi_conjugated_drift(sys, control)?;
    let step = evolve(plus, tau / (2 * n) as f64)? * evolve(&minus, tau / (2 * n) as f64)?;
    let mut approx = CMat::identity(step.nrows(), step.ncols());
    for _ in 0..n {
        approx = &step * approx;
    }
    let exact = evolve(&((plus + &minus) * Complex64::new(0.5, 0.0)), tau)?;
    let d = exact.nrows() as f64;
    Ok(TrotterReduction {
        n,
        error: (&approx - &exact).norm(),
        fidelity: (exact.adjoint() * &approx).trace().norm_sqr() / (d * d),
        approx,
        exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiPeriodHit {
    /// Seconds of free evolution.
    pub t: f64,
    /// `|tr(W†U)|²/N²`.
    pub fidelity: f64,
    /// `Re tr(W†U)/N`; close to `+1` for `W`, to `−1` for `−W`.
    pub overlap: f64,
}

/// Scans drift-only evolution `e^{−i2πtH}` for `t` in `[t_start, t_end]`
/// against `target`; best hits first.
pub fn quasi_period_search(h: &CMat, target: &CMat, t_start: f64, t_end: f64, t_step: f64) -> Result<Vec<QuasiPeriodHit>> {
    if !(t_step > 0.0) {
        return Err(Error::InvalidArgument("t_step must be positive".into()));
    }
    if !(t_end >= t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!("empty range [{t_start}, {t_end}]")));
    }
    if target.shape() != h.shape() {
        return Err(Error::DimensionMismatch("target and Hamiltonian differ in shape".into()));
    }
    let (w, v) = eig_hermitian(h)?;
    // tr(W†U) = Σ_k c_k e^{−i2πtλ_k} with c_k = (V†W†V)_kk.
    let wv = v.adjoint() * target.adjoint() * &v;
    let c: Vec<Complex64> = (0..w.len()).map(|k| wv[(k, k)]).collect();
    let n = h.nrows() as f64;
    let steps = ((t_end - t_start) / t_step + 1e-9).floor() as usize;
    let mut hits: Vec<QuasiPeriodHit> = (0..=steps)
        .map(|i| {
            let t = t_start + i as f64 * t_step;
            let z: Complex64 = w
                .iter()
                .zip(&c)
                .map(|(l, ck)| ck * Complex64::from_polar(1.0, -TWO_PI * t * l))
                .sum();
            QuasiPeriodHit {
                t,
                fidelity: z.norm_sqr() / (n * n),
                overlap: z.re / n,
            }
        })
        .collect();
    hits.sort_by(|a, b| b.fidelity.total_cmp(&a.fidelity).then(a.t.total_cmp(&b.t)));
    Ok(hits)
}

/// Largest `|u_j(t_k)|` in Hz.
pub fn control_power(seq: &ControlSequence) -> f64 {
    seq.max_abs()
}

/// Coefficients of the decoupled drift in the code space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicalDrift {
    /// Coefficients of `Z_A` and `Z_B`, Hz.
    pub z: [f64; 2],
    /// Coefficient of `X_A X_B`, Hz.
    pub xx: f64,
}

/// Restricts the average of the drift and its π-conjugate to the code space
/// and reads off the `Z_A`, `Z_B`, `X_A X_B` coefficients. The controls must
/// act as `X_A` and `X_B` there.
pub fn logical_drift(sys: &ControlSystem, enc: &EncodingMap) -> Result<LogicalDrift> {
    if sys.n_controls() != 2 || enc.logical_dim != 4 {
        return Err(Error::InvalidArgument("expected two controls and two logical qubits".into()));
    }
    let v = &enc.isometry;
    let avg = (&sys.drift + pi_conjugated_drift(sys, 0)?) * Complex64::new(0.5, 0.0);
    let restrict = |h: &CMat| -> Result<CMat> {
        let r = v.adjoint() * h * v;
        let leak = (h * v - v * &r).norm();
        if leak > 1e-9 {
            return Err(Error::NotInvariant(leak));
        }
        Ok(r)
    };
    let x = crate::algebra::Pauli::X.matrix::<f64>();
    let z = crate::algebra::Pauli::Z.matrix::<f64>();
    let one = CMat::identity(2, 2);
    let kron = crate::numerics::kron::<Complex64>;
    let (za, zb, xx) = (kron(&z, &one), kron(&one, &z), kron(&x, &x));
    let (xa, xb) = (kron(&x, &one), kron(&one, &x));
    for (j, want) in [xa, xb].iter().enumerate() {
        let d = (restrict(&sys.controls[j])? - want).norm();
        if d > 1e-9 {
            return Err(Error::InvalidArgument(format!("control {j} is not X on logical qubit {j}")));
        }
    }
    let mut h = restrict(&avg)?;
    let shift = h.trace() / Complex64::new(4.0, 0.0);
    for k in 0..4 {
        h[(k, k)] -= shift;
    }
    let coeff = |p: &CMat| (p * &h).trace().re / 4.0;
    let d = LogicalDrift {
        z: [coeff(&za), coeff(&zb)],
        xx: coeff(&xx),
    };
    let model = &za * Complex64::new(d.z[0], 0.0) + &zb * Complex64::new(d.z[1], 0.0) + &xx * Complex64::new(d.xx, 0.0);
    let rest = (&h - model).norm();
    if rest > 1e-9 {
        return Err(Error::InvalidArgument(format!("decoupled drift has other logical terms (norm {rest:.3e})")));
    }
    if d.xx == 0.0 || d.z.iter().any(|&a| a == 0.0) {
        return Err(Error::InvalidArgument("logical coupling or splitting vanishes".into()));
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseRole {
    /// π pulse removing inter-pair flip-flop terms.
    Decouple,
    /// π/2 pulses refocusing logical `Z` terms.
    Refocus,
    /// Logical `X` rotation of the gate itself.
    Gate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanItem {
    /// Free evolution under the drift for `duration` seconds.
    Free { duration: f64 },
    /// `e^{−iΣθ_j H_Cj}`; angles in radians.
    Pulse { angles: Vec<f64>, role: PulseRole },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub name: String,
    pub n1: usize,
    pub n2: usize,
    /// Hz.
    pub pulse_amplitude: f64,
    /// Seconds; every free duration and pulse length is a multiple of it.
    pub dt: f64,
    pub items: Vec<PlanItem>,
}

impl TrotterPlan {
    /// Seconds needed for a pulse at the plan amplitude.
    pub fn pulse_duration(&self, angles: &[f64]) -> f64 {
        angles.iter().map(|a| a.abs()).fold(0.0, f64::max) / (TWO_PI * self.pulse_amplitude)
    }

    /// Total length with finite-amplitude pulses, seconds.
    pub fn duration(&self) -> f64 {
        self.items
            .iter()
            .map(|it| match it {
                PlanItem::Free { duration } => *duration,
                PlanItem::Pulse { angles, .. } => self.pulse_duration(angles),
            })
            .sum()
    }

    pub fn free_duration(&self) -> f64 {
        self.items
            .iter()
            .map(|it| match it {
                PlanItem::Free { duration } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    pub fn n_pulses(&self) -> usize {
        self.items.iter().filter(|it| matches!(it, PlanItem::Pulse { .. })).count()
    }

    /// The logical CNOT (first qubit controls) for `sys` in the Bell code.
    /// Free durations are rounded to multiples of `dt`.
    pub fn cnot(
        sys: &ControlSystem,
        enc: &EncodingMap,
        n1: usize,
        n2: usize,
        pulse_amplitude: f64,
        dt: f64,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument("repetition counts must be at least 1".into()));
        }
        if !(pulse_amplitude > 0.0 && dt > 0.0) {
            return Err(Error::InvalidArgument("pulse amplitude and dt must be positive".into()));
        }
        let drift = logical_drift(sys, enc)?;
        let mut b = PlanBuilder { drift, n1, n2, dt, items: Vec::new() };
        let q = std::f64::consts::FRAC_PI_4;
        b.x_rotate(1, q);
        b.z_rotate(0, -q);
        b.x_rotate(0, -q);
        b.z_rotate(0, -q);
        b.entangle(-q);
        b.z_rotate(0, q);
        b.x_rotate(0, q);
        b.z_rotate(0, 2.0 * q);
        let plan = Self {
            name: format!("cnot-n1={n1}-n2={n2}"),
            n1,
            n2,
            pulse_amplitude,
            dt,
            items: b.items,
        };
        plan.check()?;
        Ok(plan)
    }

    /// The preset: `J_xx = 2.23` Hz System II, `n1 = 2`, `n2 = 64`, 500 kHz pulses.
    pub fn preset(sys: &ControlSystem, enc: &EncodingMap) -> Result<Self> {
        let dt = 1.0 / (8.0 * PRESET_PULSE_AMPLITUDE);
        let mut p = Self::cnot(sys, enc, PRESET_N1, PRESET_N2, PRESET_PULSE_AMPLITUDE, dt)?;
        p.name = "realistic-cnot".into();
        Ok(p)
    }

    /// Errors unless every duration is a non-negative multiple of `dt`.
    pub fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.pulse_amplitude > 0.0) {
            return Err(Error::InvalidArgument("dt and pulse amplitude must be positive".into()));
        }
        for (k, it) in self.items.iter().enumerate() {
            let d = match it {
                PlanItem::Free { duration } => *duration,
                PlanItem::Pulse { angles, .. } => {
                    let mut lengths: Vec<f64> = angles.iter().filter(|a| **a != 0.0).map(|a| self.pulse_duration(&[*a])).collect();
                    lengths.push(0.0);
                    for l in lengths {
                        slots(l, self.dt).map_err(|_| {
                            Error::InvalidArgument(format!("pulse {k} lasts {l} s, not a multiple of dt = {} s", self.dt))
                        })?;
                    }
                    continue;
                }
            };
            slots(d, self.dt).map_err(|_| Error::InvalidArgument(format!("item {k} lasts {d} s, not a multiple of dt = {} s", self.dt)))?;
        }
        Ok(())
    }
}

fn slots(duration: f64, dt: f64) -> Result<u64> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::InvalidArgument(format!("bad duration {duration}")));
    }
    let m = (duration / dt).round();
    if (m * dt - duration).abs() > 1e-6 * dt {
        return Err(Error::InvalidArgument(format!("{duration} s is not a multiple of {dt} s")));
    }
    Ok(m as u64)
}

struct PlanBuilder {
    drift: LogicalDrift,
    n1: usize,
    n2: usize,
    dt: f64,
    items: Vec<PlanItem>,
}

impl PlanBuilder {
    fn free(&mut self, s: f64) {
        let s = (s / self.dt).round() * self.dt;
        if s <= 0.0 {
            return;
        }
        if let Some(PlanItem::Free { duration }) = self.items.last_mut() {
            *duration += s;
        } else {
            self.items.push(PlanItem::Free { duration: s });
        }
    }

    fn pulse(&mut self, angles: [f64; 2], role: PulseRole) {
        self.items.push(PlanItem::Pulse { angles: angles.to_vec(), role });
    }

    /// Free evolution with one symmetric π cycle on the first control.
    fn decoupled(&mut self, s: f64) {
        let pi = std::f64::consts::PI;
        self.free(s / 4.0);
        self.pulse([pi, 0.0], PulseRole::Decouple);
        self.free(s / 2.0);
        self.pulse([pi, 0.0], PulseRole::Decouple);
        self.free(s / 4.0);
    }

    /// `cycles` symmetric refocusing cycles flipping `Z` on the marked qubits.
    fn refocused(&mut self, s: f64, flip: [bool; 2], cycles: usize) {
        let h = std::f64::consts::FRAC_PI_2;
        let p = flip.map(|f| if f { h } else { 0.0 });
        let c = cycles as f64;
        for _ in 0..cycles {
            self.decoupled(s / (4.0 * c));
            self.pulse(p, PulseRole::Refocus);
            self.decoupled(s / (2.0 * c));
            self.pulse(p, PulseRole::Refocus);
            self.decoupled(s / (4.0 * c));
        }
    }

    fn x_rotate(&mut self, qubit: usize, theta: f64) {
        let mut a = [0.0; 2];
        a[qubit] = theta;
        self.pulse(a, PulseRole::Gate);
    }

    /// `e^{−iφX_AX_B}`, using that `XX` evolution is periodic in Ad.
    fn entangle(&mut self, phi: f64) {
        let b = self.drift.xx;
        let period = 1.0 / (2.0 * b.abs());
        let t = (phi / (TWO_PI * b)).rem_euclid(period);
        self.refocused(t, [true, true], self.n2);
    }

    /// `e^{−iθZ_q}`.
    fn z_rotate(&mut self, qubit: usize, theta: f64) {
        let a = self.drift.z[qubit];
        if theta / a < 0.0 {
            self.x_rotate(qubit, std::f64::consts::FRAC_PI_2);
            self.z_rotate(qubit, -theta);
            self.x_rotate(qubit, -std::f64::consts::FRAC_PI_2);
            return;
        }
        let tau = theta / (TWO_PI * a) / self.n1 as f64;
        let mut flip = [true, true];
        flip[qubit] = false;
        for _ in 0..self.n1 {
            self.refocused(tau, flip, 1);
            self.entangle(-TWO_PI * self.drift.xx * tau);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProgramStep {
    /// `slots` consecutive slots with the same amplitudes (Hz).
    Run { slots: u64, amplitudes: Vec<f64> },
    /// An instantaneous `e^{−iΣθ_j H_Cj}`.
    Ideal { angles: Vec<f64> },
}

/// Run-length encoded piecewise-constant controls, optionally with
/// instantaneous pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram {
    pub dt: f64,
    pub n_controls: usize,
    pub steps: Vec<ProgramStep>,
}

impl PulseProgram {
    pub fn n_slots(&self) -> u64 {
        self.steps
            .iter()
            .map(|s| match s {
                ProgramStep::Run { slots, .. } => *slots,
                ProgramStep::Ideal { .. } => 0,
            })
            .sum()
    }

    pub fn duration(&self) -> f64 {
        self.n_slots() as f64 * self.dt
    }

    /// Largest finite amplitude, Hz; instantaneous pulses are not counted.
    pub fn control_power(&self) -> f64 {
        self.steps
            .iter()
            .filter_map(|s| match s {
                ProgramStep::Run { amplitudes, .. } => Some(amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()))),
                ProgramStep::Ideal { .. } => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn has_ideal_pulses(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, ProgramStep::Ideal { .. }))
    }

    /// Expands to a plain sequence; refuses instantaneous pulses and more than `max_slots` slots.
    pub fn to_sequence(&self, max_slots: u64) -> Result<ControlSequence> {
        if self.has_ideal_pulses() {
            return Err(Error::InvalidArgument("instantaneous pulses have no slot representation".into()));
        }
        let m = self.n_slots();
        if m > max_slots {
            return Err(Error::InvalidArgument(format!("{m} slots exceed the limit of {max_slots}")));
        }
        let mut a = RMat::zeros(m as usize, self.n_controls);
        let mut k = 0;
        for s in &self.steps {
            if let ProgramStep::Run { slots, amplitudes } = s {
                for _ in 0..*slots {
                    for (j, x) in amplitudes.iter().enumerate() {
                        a[(k, j)] = *x;
                    }
                    k += 1;
                }
            }
        }
        ControlSequence::new(self.dt, a)
    }

    /// Run-length encoding of a sequence.
    pub fn from_sequence(seq: &ControlSequence) -> Self {
        let mut steps: Vec<ProgramStep> = Vec::new();
        for k in 0..seq.n_slots() {
            let u = seq.slot(k);
            match steps.last_mut() {
                Some(ProgramStep::Run { slots, amplitudes }) if *amplitudes == u => *slots += 1,
                _ => steps.push(ProgramStep::Run { slots: 1, amplitudes: u }),
            }
        }
        Self { dt: seq.dt(), n_controls: seq.n_controls(), steps }
    }

    /// Propagator in the model's coordinates; identical steps share one exponential.
    pub fn propagate(&self, model: &OpenModel) -> Result<RMat> {
        let gens = &model.gens;
        if gens.controls.len() != self.n_controls {
            return Err(Error::DimensionMismatch(format!(
                "program has {} controls, model {}",
                self.n_controls,
                gens.controls.len()
            )));
        }
        let mut cache: HashMap<Vec<u64>, RMat> = HashMap::new();
        let mut f = RMat::identity(gens.dim(), gens.dim());
        for s in &self.steps {
            let (key, build): (Vec<u64>, Box<dyn Fn() -> Result<RMat>>) = match s {
                ProgramStep::Run { slots, amplitudes } => {
                    let mut key = vec![0, *slots];
                    key.extend(amplitudes.iter().map(|a| a.to_bits()));
                    let t = *slots as f64 * self.dt;
                    (key, Box::new(move || gens.slot_propagator(amplitudes, t)))
                }
                ProgramStep::Ideal { angles } => {
                    let mut key = vec![1];
                    key.extend(angles.iter().map(|a| a.to_bits()));
                    (
                        key,
                        Box::new(move || {
                            let mut g = RMat::zeros(gens.dim(), gens.dim());
                            for (c, th) in gens.controls.iter().zip(angles) {
                                g += c * *th;
                            }
                            expm(&(g * -1.0))
                        }),
                    )
                }
            };
            if !cache.contains_key(&key) {
                let m = build()?;
                cache.insert(key.clone(), m);
            }
            f = &cache[&key] * f;
        }
        Ok(f)
    }

    pub fn fidelity(&self, model: &OpenModel) -> Result<f64> {
        Ok(model.target.fidelity(&self.propagate(model)?))
    }
}

impl PulseProgram {
    pub fn read(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

/// Header `dt=<seconds> controls=<J> steps=<S>`, then one line per step:
/// `run <slots> <J amplitudes in Hz>` or `ideal <J angles in rad>`.
impl fmt::Display for PulseProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dt={} controls={} steps={}", self.dt, self.n_controls, self.steps.len())?;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        for s in &self.steps {
            match s {
                ProgramStep::Run { slots, amplitudes } => writeln!(f, "run {slots} {}", join(amplitudes))?,
                ProgramStep::Ideal { angles } => writeln!(f, "ideal {}", join(angles))?,
            }
        }
        Ok(())
    }
}

impl FromStr for PulseProgram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty program file".into()))?;
        let (mut dt, mut j, mut n) = (None, None, None);
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("dt", v)) => dt = v.parse::<f64>().ok().filter(|x| *x > 0.0),
                Some(("controls", v)) => j = v.parse::<usize>().ok(),
                Some(("steps", v)) => n = v.parse::<usize>().ok(),
                _ => return Err(Error::Parse(format!("unexpected header field `{field}`"))),
            }
        }
        let dt = dt.ok_or_else(|| Error::Parse("header lacks a valid `dt`".into()))?;
        let j = j.ok_or_else(|| Error::Parse("header lacks a valid `controls`".into()))?;
        let mut steps = Vec::new();
        for (i, line) in lines.enumerate() {
            let bad = |m: &str| Error::Parse(format!("line {}: {m}", i + 2));
            let mut words = line.split_whitespace();
            let kind = words.next().unwrap_or_default();
            let nums = |w: std::str::SplitWhitespace| {
                w.map(|x| x.parse::<f64>().map_err(|_| bad(&format!("bad number `{x}`"))))
                    .collect::<Result<Vec<_>>>()
            };
            let step = match kind {
                "run" => {
                    let slots = words
                        .next()
                        .and_then(|x| x.parse::<u64>().ok())
                        .ok_or_else(|| bad("bad slot count"))?;
                    ProgramStep::Run { slots, amplitudes: nums(words)? }
                }
                "ideal" => ProgramStep::Ideal { angles: nums(words)? },
                _ => return Err(bad(&format!("unknown step `{kind}`"))),
            };
            let len = match &step {
                ProgramStep::Run { amplitudes, .. } => amplitudes.len(),
                ProgramStep::Ideal { angles } => angles.len(),
            };
            if len != j {
                return Err(bad(&format!("{len} values, expected {j}")));
            }
            steps.push(step);
        }
        if n.is_some_and(|n| n != steps.len()) {
            return Err(Error::Parse(format!("header promises {} steps, found {}", n.unwrap_or(0), steps.len())));
        }
        Ok(Self { dt, n_controls: j, steps })
    }
}

/// Compiles `plan` to slots of length `dt`: pulses become runs at
/// `±pulse_amplitude`, or instantaneous steps when `ideal_pulses` is set.
pub fn compile_trotter_cnot(plan: &TrotterPlan, dt: f64, ideal_pulses: bool) -> Result<PulseProgram> {
    let plan_dt = TrotterPlan { dt, ..plan.clone() };
    plan_dt.check()?;
    let n_controls = plan
        .items
        .iter()
        .find_map(|it| match it {
            PlanItem::Pulse { angles, .. } => Some(angles.len()),
            _ => None,
        })
        .unwrap_or(2);
    let mut steps: Vec<ProgramStep> = Vec::new();
    let push_run = |steps: &mut Vec<ProgramStep>, n: u64, amps: Vec<f64>| {
        if n == 0 {
            return;
        }
        match steps.last_mut() {
            Some(ProgramStep::Run { slots, amplitudes }) if *amplitudes == amps => *slots += n,
            _ => steps.push(ProgramStep::Run { slots: n, amplitudes: amps }),
        }
    };
    for it in &plan.items {
        match it {
            PlanItem::Free { duration } => push_run(&mut steps, slots(*duration, dt)?, vec![0.0; n_controls]),
            PlanItem::Pulse { angles, .. } => {
                if angles.len() != n_controls {
                    return Err(Error::DimensionMismatch("pulses address different numbers of controls".into()));
                }
                if ideal_pulses {
                    steps.push(ProgramStep::Ideal { angles: angles.clone() });
                    continue;
                }
                // Controls switch off one by one as their rotation completes.
                let mut lengths: Vec<(u64, usize)> = angles
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(j, a)| Ok((slots(plan.pulse_duration(&[*a]), dt)?, j)))
                    .collect::<Result<_>>()?;
                lengths.sort();
                let mut done = 0;
                for (i, &(len, _)) in lengths.iter().enumerate() {
                    let amps: Vec<f64> = (0..n_controls)
                        .map(|j| {
                            let active = lengths[i..].iter().any(|&(_, k)| k == j);
                            if active {
                                plan.pulse_amplitude * angles[j].signum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    push_run(&mut steps, len - done, amps);
                    done = len;
                }
            }
        }
    }
    Ok(PulseProgram { dt, n_controls, steps })
}
