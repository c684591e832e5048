//! Gradient ascent on piecewise-constant amplitudes.
//!
//! Gradients use forward products `X_k = F_k ⋯ F_1 X_0` and backward
//! products `Λ_k = F_{k+1}ᵀ ⋯ F_Mᵀ Λ_M`, each built once per call. The
//! first-order slot derivative is `−2πΔt·A_j F_k`; the exact one is read
//! off the exponential of the block matrix `[[L, E], [0, L]]`.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cmul, expm};
use crate::propagation::{ControlSequence, OpenModel, TWO_PI};
use crate::systems::ControlSystem;
use crate::{CMat, RMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    #[default]
    FirstOrder,
    Exact,
}

/// A fidelity functional of a control sequence with a cached forward pass.
pub trait Objective: Sync {
    type Cache;

    fn n_controls(&self) -> usize;

    /// Fidelity plus whatever the backward pass needs.
    fn forward(&self, seq: &ControlSequence) -> Result<(f64, Self::Cache)>;

    fn backward(&self, seq: &ControlSequence, cache: &Self::Cache, mode: GradientMode) -> Result<RMat>;

    fn fidelity(&self, seq: &ControlSequence) -> Result<f64> {
        Ok(self.forward(seq)?.0)
    }

    fn gradient(&self, seq: &ControlSequence, mode: GradientMode) -> Result<(f64, RMat)> {
        let (f, cache) = self.forward(seq)?;
        Ok((f, self.backward(seq, &cache, mode)?))
    }
}

fn check_j(expected: usize, seq: &ControlSequence) -> Result<()> {
    if seq.n_controls() != expected {
        return Err(Error::DimensionMismatch(format!(
            "objective has {expected} controls, sequence {}",
            seq.n_controls()
        )));
    }
    Ok(())
}

/// Top-right block of `exp([[L, E], [0, L]])`, the derivative of `e^L` along `E`.
fn expm_derivative<N: crate::numerics::Elem>(l: &DMatrix<N>, e: &DMatrix<N>) -> Result<DMatrix<N>> {
    let d = l.nrows();
    let mut big = DMatrix::<N>::zeros(2 * d, 2 * d);
    big.view_mut((0, 0), (d, d)).copy_from(l);
    big.view_mut((d, d), (d, d)).copy_from(l);
    big.view_mut((0, d), (d, d)).copy_from(e);
    let x = expm(&big)?;
    Ok(x.view((0, d), (d, d)).into_owned())
}

/// Projected open fidelity `(1/r) tr(Bᵀ F(T) A)` on a reduced model.
#[derive(Debug, Clone)]
pub struct OpenObjective {
    pub model: OpenModel,
}

pub struct OpenCache {
    props: Vec<RMat>,
    /// `X_0 = A, X_k = F_k X_{k−1}`.
    xs: Vec<RMat>,
}

impl OpenObjective {
    pub fn new(model: OpenModel) -> Self {
        Self { model }
    }

    pub fn from_system(sys: &ControlSystem, f_target: &CMat, range_basis: Option<&CMat>) -> Result<Self> {
        Ok(Self::new(OpenModel::new(sys, f_target, range_basis)?))
    }
}

impl Objective for OpenObjective {
    type Cache = OpenCache;

    fn n_controls(&self) -> usize {
        self.model.gens.controls.len()
    }

    fn forward(&self, seq: &ControlSequence) -> Result<(f64, OpenCache)> {
        check_j(self.n_controls(), seq)?;
        let props = self.model.gens.slot_propagators(seq)?;
        let mut xs = Vec::with_capacity(props.len() + 1);
        xs.push(self.model.target.inputs.clone());
        for f in &props {
            let next = f * xs.last().expect("nonempty");
            xs.push(next);
        }
        let t = &self.model.target;
        let fid = t.outputs.dot(xs.last().expect("nonempty")) / t.norm;
        Ok((fid, OpenCache { props, xs }))
    }

    fn backward(&self, seq: &ControlSequence, cache: &OpenCache, mode: GradientMode) -> Result<RMat> {
        let m = seq.n_slots();
        let gens = &self.model.gens;
        let r = self.model.target.norm;
        let dt = seq.dt();
        let mut grad = RMat::zeros(m, self.n_controls());
        let mut lambda = self.model.target.outputs.clone();
        for k in (0..m).rev() {
            match mode {
                GradientMode::FirstOrder => {
                    let x = &cache.xs[k + 1];
                    for (j, a) in gens.controls.iter().enumerate() {
                        grad[(k, j)] = -TWO_PI * dt * lambda.dot(&(a * x)) / r;
                    }
                }
                GradientMode::Exact => {
                    let l = gens.generator(&seq.slot(k))? * -dt;
                    let x = &cache.xs[k];
                    for (j, a) in gens.controls.iter().enumerate() {
                        let d = expm_derivative(&l, &(a * (-TWO_PI * dt)))?;
                        grad[(k, j)] = lambda.dot(&(d * x)) / r;
                    }
                }
            }
            lambda = cache.props[k].transpose() * lambda;
        }
        Ok(grad)
    }
}

/// Closed fidelity through `z = (1/d) tr(W† U(T))`: `Re z` or `|z|²`.
///
/// `W = U_t` gives the plain gate fidelity with `d = N`; `W = U_t V V†`
/// with `d = 4` gives the code-space fidelity of a logical gate.
#[derive(Debug, Clone)]
pub struct ClosedObjective {
    pub drift: CMat,
    pub controls: Vec<CMat>,
    pub w: CMat,
    pub norm: f64,
    pub phase_invariant: bool,
}

pub struct ClosedCache {
    props: Vec<CMat>,
    xs: Vec<CMat>,
    z: Complex64,
}

impl ClosedObjective {
    pub fn new(sys: &ControlSystem, u_target: &CMat, phase_invariant: bool) -> Result<Self> {
        if u_target.shape() != sys.drift.shape() {
            return Err(Error::DimensionMismatch(format!(
                "target {:?} vs system {:?}",
                u_target.shape(),
                sys.drift.shape()
            )));
        }
        Ok(Self {
            drift: sys.drift.clone(),
            controls: sys.controls.clone(),
            w: u_target.clone(),
            norm: sys.dim() as f64,
            phase_invariant,
        })
    }

    /// Phase-invariant fidelity of a logical gate restricted to the code space.
    pub fn code_space(
        sys: &ControlSystem,
        u_logical: &CMat,
        enc: &crate::systems::EncodingMap,
    ) -> Result<Self> {
        let (u_phys, _) = crate::systems::lift_logical_gate(u_logical, enc)?;
        let mut o = Self::new(sys, &u_phys, true)?;
        o.w = &u_phys * enc.code_projector();
        o.norm = enc.logical_dim as f64;
        Ok(o)
    }

    fn hamiltonian(&self, u: &[f64]) -> CMat {
        let mut h = self.drift.clone();
        for (c, &a) in self.controls.iter().zip(u) {
            h += c * Complex64::new(a, 0.0);
        }
        h
    }

    fn value(&self, z: Complex64) -> f64 {
        if self.phase_invariant {
            z.norm_sqr()
        } else {
            z.re
        }
    }
}

impl Objective for ClosedObjective {
    type Cache = ClosedCache;

    fn n_controls(&self) -> usize {
        self.controls.len()
    }

    fn forward(&self, seq: &ControlSequence) -> Result<(f64, ClosedCache)> {
        check_j(self.n_controls(), seq)?;
        let n = self.drift.nrows();
        let dt = seq.dt();
        let mut props = Vec::with_capacity(seq.n_slots());
        let mut xs = vec![crate::numerics::cidentity::<f64>(n)];
        for k in 0..seq.n_slots() {
            let u = expm(&(self.hamiltonian(&seq.slot(k)) * Complex64::new(0.0, -TWO_PI * dt)))?;
            xs.push(cmul(&u, xs.last().expect("nonempty")));
            props.push(u);
        }
        let z = self.w.dotc(xs.last().expect("nonempty")) / self.norm;
        Ok((self.value(z), ClosedCache { props, xs, z }))
    }

    fn backward(&self, seq: &ControlSequence, cache: &ClosedCache, mode: GradientMode) -> Result<RMat> {
        let m = seq.n_slots();
        let dt = seq.dt();
        let mi = Complex64::new(0.0, -TWO_PI * dt);
        let mut grad = RMat::zeros(m, self.n_controls());
        let mut lambda = self.w.clone();
        for k in (0..m).rev() {
            for (j, hj) in self.controls.iter().enumerate() {
                let dz = match mode {
                    GradientMode::FirstOrder => lambda.dotc(&cmul(&(hj * mi), &cache.xs[k + 1])),
                    GradientMode::Exact => {
                        let l = self.hamiltonian(&seq.slot(k)) * mi;
                        let d = expm_derivative(&l, &(hj * mi))?;
                        lambda.dotc(&cmul(&d, &cache.xs[k]))
                    }
                } / self.norm;
                grad[(k, j)] = if self.phase_invariant {
                    2.0 * (cache.z.conj() * dz).re
                } else {
                    dz.re
                };
            }
            lambda = cmul(&cache.props[k].adjoint(), &lambda);
        }
        Ok(grad)
    }
}

/// Gradient of the (optionally projected) open fidelity.
pub fn gradient_open(
    sys: &ControlSystem,
    seq: &ControlSequence,
    f_target: &CMat,
    range_basis: Option<&CMat>,
    mode: GradientMode,
) -> Result<RMat> {
    sys.relaxation()?;
    let obj = OpenObjective::from_system(sys, f_target, range_basis)?;
    Ok(obj.gradient(seq, mode)?.1)
}

/// Gradient of `f'` or, with `phase_invariant`, of `f = |f'|²`.
pub fn gradient_closed(
    sys: &ControlSystem,
    seq: &ControlSequence,
    u_target: &CMat,
    phase_invariant: bool,
    mode: GradientMode,
) -> Result<RMat> {
    let obj = ClosedObjective::new(sys, u_target, phase_invariant)?;
    Ok(obj.gradient(seq, mode)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepPolicy {
    /// `u ← u + α ∇f`.
    Fixed { alpha: f64 },
    /// Steps of RMS length `α` Hz along `∇f`, halved until the Armijo
    /// condition holds. Each iteration starts from twice the last
    /// accepted length, capped at `max_alpha`.
    Backtracking {
        initial: f64,
        shrink: f64,
        slope: f64,
        max_alpha: f64,
    },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Backtracking {
            initial: 1.0,
            shrink: 0.5,
            slope: 1e-4,
            max_alpha: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub step: StepPolicy,
    pub max_iterations: usize,
    /// Stop when the Frobenius norm of the gradient falls below this.
    pub gradient_tolerance: f64,
    /// Stop once the fidelity reaches this value.
    pub fidelity_goal: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Initial amplitudes are uniform in `[−u0, u0]` Hz.
    pub u0: f64,
    /// Hard clip `|u| ≤ u_max` Hz after every update.
    pub u_max: Option<f64>,
    pub gradient_mode: GradientMode,
    /// Worker threads for restarts; results do not depend on it.
    pub workers: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step: StepPolicy::default(),
            max_iterations: 1000,
            gradient_tolerance: 1e-10,
            fidelity_goal: None,
            restarts: 1,
            seed: 0,
            u0: 10.0,
            u_max: None,
            gradient_mode: GradientMode::FirstOrder,
            workers: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match self.step {
            StepPolicy::Fixed { alpha } if !(alpha > 0.0) => return bad("alpha must be positive"),
            StepPolicy::Backtracking {
                initial,
                shrink,
                slope,
                max_alpha,
            } => {
                if !(initial > 0.0) || !(max_alpha >= initial) {
                    return bad("initial step must be positive and not above max_alpha");
                }
                if !(shrink > 0.0 && shrink < 1.0) {
                    return bad("shrink must lie in (0, 1)");
                }
                if !(0.0..1.0).contains(&slope) {
                    return bad("slope must lie in [0, 1)");
                }
            }
            _ => {}
        }
        if self.restarts == 0 {
            return bad("restart count must be at least 1");
        }
        if !(self.u0 >= 0.0) {
            return bad("u0 must be nonnegative");
        }
        if let Some(m) = self.u_max {
            if !(m > 0.0) {
                return bad("u_max must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIterations,
    GradientTolerance,
    FidelityGoal,
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub seed: u64,
    pub fidelity: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best: ControlSequence,
    pub best_fidelity: f64,
    pub best_restart: usize,
    /// Fidelity after every iteration of the best restart, starting with the initial guess.
    pub trace: Vec<f64>,
    pub restarts: Vec<RestartRecord>,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

impl OptimizationResult {
    pub fn restart_fidelities(&self) -> Vec<f64> {
        self.restarts.iter().map(|r| r.fidelity).collect()
    }
}

/// Stable 64-bit mixing of a list of integers (SplitMix64 finaliser).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = splitmix(h);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform amplitudes in `[−u0, u0]`, clipped to `u_max`.
pub fn random_sequence(n_slots: usize, n_controls: usize, dt: f64, u0: f64, u_max: Option<f64>, seed: u64) -> Result<ControlSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = RMat::from_fn(n_slots, n_controls, |_, _| if u0 > 0.0 { rng.gen_range(-u0..=u0) } else { 0.0 });
    if let Some(m) = u_max {
        a.apply(|x| *x = x.clamp(-m, m));
    }
    ControlSequence::new(dt, a)
}

struct Run {
    seq: ControlSequence,
    fidelity: f64,
    trace: Vec<f64>,
    iterations: usize,
    stop: StopReason,
}

fn clip(a: &mut RMat, u_max: Option<f64>) {
    if let Some(m) = u_max {
        a.apply(|x| *x = x.clamp(-m, m));
    }
}

/// Runs one ascent from `initial`.
pub fn ascend<O: Objective>(obj: &O, initial: ControlSequence, config: &OptimizerConfig) -> Result<(ControlSequence, f64, Vec<f64>, usize, StopReason)> {
    let r = run(obj, initial, config)?;
    Ok((r.seq, r.fidelity, r.trace, r.iterations, r.stop))
}

fn run<O: Objective>(obj: &O, initial: ControlSequence, config: &OptimizerConfig) -> Result<Run> {
    let mut seq = initial;
    let (mut f, mut cache) = obj.forward(&seq)?;
    let mut trace = vec![f];
    if !f.is_finite() {
        return Ok(Run { seq, fidelity: f, trace, iterations: 0, stop: StopReason::NonFinite });
    }
    let n = (seq.n_slots() * seq.n_controls()).max(1) as f64;
    let mut alpha_next = match config.step {
        StepPolicy::Backtracking { initial, .. } => initial,
        StepPolicy::Fixed { alpha } => alpha,
    };
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        if config.fidelity_goal.is_some_and(|g| f >= g) {
            stop = StopReason::FidelityGoal;
            break;
        }
        let g = obj.backward(&seq, &cache, config.gradient_mode)?;
        let gnorm = g.norm();
        if !gnorm.is_finite() {
            stop = StopReason::NonFinite;
            break;
        }
        if gnorm < config.gradient_tolerance {
            stop = StopReason::GradientTolerance;
            break;
        }
        iterations += 1;
        match config.step {
            StepPolicy::Fixed { alpha } => {
                let mut a = seq.amplitudes() + &g * alpha;
                clip(&mut a, config.u_max);
                seq = ControlSequence::new(seq.dt(), a)?;
                let (nf, nc) = obj.forward(&seq)?;
                f = nf;
                cache = nc;
                trace.push(f);
                if !f.is_finite() {
                    stop = StopReason::NonFinite;
                    break;
                }
            }
            StepPolicy::Backtracking { shrink, slope, max_alpha, .. } => {
                let dir = &g * (n.sqrt() / gnorm);
                let mut alpha = alpha_next;
                let mut accepted = None;
                while alpha * n.sqrt() > 1e-13 * (1.0 + seq.max_abs()) {
                    let mut a = seq.amplitudes() + &dir * alpha;
                    clip(&mut a, config.u_max);
                    let gain_bound = slope * g.dot(&(&a - seq.amplitudes()));
                    let trial = ControlSequence::new(seq.dt(), a)?;
                    let (nf, nc) = obj.forward(&trial)?;
                    if nf.is_finite() && nf >= f + gain_bound && nf > f {
                        accepted = Some((trial, nf, nc));
                        break;
                    }
                    alpha *= shrink;
                }
                match accepted {
                    Some((s, nf, nc)) => {
                        seq = s;
                        f = nf;
                        cache = nc;
                        trace.push(f);
                        alpha_next = (alpha * 2.0).min(max_alpha);
                    }
                    None => {
                        stop = StopReason::LineSearchFailed;
                        break;
                    }
                }
            }
        }
    }
    if stop == StopReason::MaxIterations && config.fidelity_goal.is_some_and(|g| f >= g) {
        stop = StopReason::FidelityGoal;
    }
    Ok(Run { seq, fidelity: f, trace, iterations, stop })
}

/// Multi-start optimisation of `obj` over `n_slots` slots of length `dt`.
pub fn optimize<O: Objective>(obj: &O, n_slots: usize, dt: f64, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    if n_slots == 0 {
        return Err(Error::InvalidArgument("at least one slot is required".into()));
    }
    let j = obj.n_controls();
    let one = |restart: usize| -> Result<(RestartRecord, Run)> {
        let seed = derive_seed(&[config.seed, restart as u64]);
        let start = Instant::now();
        let init = random_sequence(n_slots, j, dt, config.u0, config.u_max, seed)?;
        let r = run(obj, init, config)?;
        Ok((
            RestartRecord {
                restart,
                seed,
                fidelity: r.fidelity,
                iterations: r.iterations,
                stop_reason: r.stop,
                seconds: start.elapsed().as_secs_f64(),
            },
            r,
        ))
    };
    let workers = config.workers.max(1).min(config.restarts);
    let mut outcomes: Vec<Option<Result<(RestartRecord, Run)>>> = (0..config.restarts).map(|_| None).collect();
    if workers == 1 {
        for (i, slot) in outcomes.iter_mut().enumerate() {
            *slot = Some(one(i));
        }
    } else {
        std::thread::scope(|s| {
            let chunks: Vec<Vec<usize>> = (0..workers)
                .map(|w| (w..config.restarts).step_by(workers).collect())
                .collect();
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|idx| s.spawn(|| idx.into_iter().map(|i| (i, one(i))).collect::<Vec<_>>()))
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("worker panicked") {
                    outcomes[i] = Some(r);
                }
            }
        });
    }
    let mut records = Vec::with_capacity(config.restarts);
    let mut best: Option<(usize, Run)> = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        let (rec, run) = o.expect("every restart ran")?;
        records.push(rec);
        if !run.fidelity.is_finite() {
            continue;
        }
        if best.as_ref().map_or(true, |(_, b)| run.fidelity > b.fidelity) {
            best = Some((i, run));
        }
    }
    let (best_restart, run) = best.ok_or_else(|| Error::Numerical("every restart diverged".into()))?;
    Ok(OptimizationResult {
        best: run.seq,
        best_fidelity: run.fidelity,
        best_restart,
        trace: run.trace,
        iterations: run.iterations,
        stop_reason: run.stop,
        restarts: records,
    })
}
