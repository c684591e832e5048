//! Families of optimised sequences, their statistics, and cross-evaluation
//! of closed-system optima under relaxation.
//!
//! Family member `i` at grid point `t_index` is optimised with master seed
//! `derive_seed([master, t_index, i])`; the open-GRAPE run of a comparison
//! uses `derive_seed([master, OPEN_STREAM])`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grape::{derive_seed, optimize, Objective, OptimizationResult, OptimizerConfig, StopReason};
use crate::propagation::{ControlSequence, OpenModel};

/// Seed stream reserved for the open-GRAPE run of a comparison.
pub const OPEN_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyStats {
    pub count: usize,
    pub mean: f64,
    /// Root-mean-square deviation from the mean; absent for a single value.
    pub rmsd: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl FamilyStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("no values".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite family value {v}")));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let rmsd = (values.len() >= 2)
            .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt());
        Ok(Self {
            count: values.len(),
            mean,
            rmsd,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// `(x − mean)/rmsd`, or `None` when the spread vanishes.
    pub fn z_score(&self, x: f64) -> Option<f64> {
        self.rmsd.filter(|&s| s > 1e-14 * (1.0 + self.mean.abs())).map(|s| (x - self.mean) / s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMember {
    pub member: usize,
    pub seed: u64,
    pub fidelity: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    #[serde(skip)]
    pub sequence: ControlSequence,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopCurveEntry {
    /// Final time in seconds.
    pub t: f64,
    pub n_slots: usize,
    pub stats: FamilyStats,
    pub members: Vec<FamilyMember>,
}

impl TopCurveEntry {
    pub fn fidelities(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.fidelity).collect()
    }

    pub fn sequences(&self) -> impl Iterator<Item = &ControlSequence> {
        self.members.iter().map(|m| &m.sequence)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TopCurve {
    pub dt: f64,
    pub entries: Vec<TopCurveEntry>,
}

/// Number of slots of length `dt` making up `t`; errors unless commensurate.
pub fn slots_for(t: f64, dt: f64) -> Result<usize> {
    if !(t > 0.0 && dt > 0.0 && t.is_finite() && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("T = {t} s and dt = {dt} s must be positive")));
    }
    let m = (t / dt).round();
    if m < 1.0 || (m * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(Error::InvalidArgument(format!("T = {t} s is not a multiple of dt = {dt} s")));
    }
    Ok(m as usize)
}

/// Optimises `family_size` members at one final time.
pub fn family<O: Objective>(
    obj: &O,
    t: f64,
    dt: f64,
    t_index: usize,
    family_size: usize,
    config: &OptimizerConfig,
) -> Result<TopCurveEntry> {
    if family_size == 0 {
        return Err(Error::InvalidArgument("family size must be at least 1".into()));
    }
    let n_slots = slots_for(t, dt)?;
    let mut members = Vec::with_capacity(family_size);
    for i in 0..family_size {
        let seed = derive_seed(&[config.seed, t_index as u64, i as u64]);
        let r = optimize(obj, n_slots, dt, &OptimizerConfig { seed, ..config.clone() })?;
        members.push(FamilyMember {
            member: i,
            seed,
            fidelity: r.best_fidelity,
            iterations: r.iterations,
            stop_reason: r.stop_reason,
            sequence: r.best,
        });
    }
    let stats = FamilyStats::from_values(&members.iter().map(|m| m.fidelity).collect::<Vec<_>>())?;
    Ok(TopCurveEntry { t, n_slots, stats, members })
}

/// Fidelity statistics against final time; entries come out sorted by `T`.
pub fn top_curve<O: Objective>(
    obj: &O,
    t_list: &[f64],
    dt: f64,
    family_size: usize,
    config: &OptimizerConfig,
) -> Result<TopCurve> {
    if t_list.is_empty() {
        return Err(Error::InvalidArgument("empty list of final times".into()));
    }
    let mut order: Vec<usize> = (0..t_list.len()).collect();
    order.sort_by(|&a, &b| t_list[a].total_cmp(&t_list[b]));
    let entries = order
        .into_iter()
        .map(|i| family(obj, t_list[i], dt, i, family_size, config))
        .collect::<Result<_>>()?;
    Ok(TopCurve { dt, entries })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatterRow {
    pub sequence_id: usize,
    pub closed_fidelity: f64,
    pub open_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossEvaluation {
    pub t: f64,
    pub closed: FamilyStats,
    pub open: FamilyStats,
    pub rows: Vec<ScatterRow>,
}

/// Evaluates every stored member of `entry` under the open `model`.
pub fn cross_evaluate(entry: &TopCurveEntry, model: &OpenModel) -> Result<CrossEvaluation> {
    let rows = entry
        .members
        .iter()
        .map(|m| {
            Ok(ScatterRow {
                sequence_id: m.member,
                closed_fidelity: m.fidelity,
                open_fidelity: model.fidelity(&m.sequence)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let open: Vec<f64> = rows.iter().map(|r| r.open_fidelity).collect();
    Ok(CrossEvaluation {
        t: entry.t,
        closed: entry.stats,
        open: FamilyStats::from_values(&open)?,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub t: f64,
    pub open_fidelity: f64,
    pub open_seed: u64,
    pub family: CrossEvaluation,
    /// Standard score of the open-GRAPE result in the cross-evaluated
    /// family; `None` for a family without spread.
    pub z_score: Option<f64>,
    #[serde(skip)]
    pub open_result: OptimizationResult,
}

/// Runs open-GRAPE at `t` and sets it against a closed-optimised family
/// evaluated under the same relaxation.
pub fn compare_open_vs_time_optimal<O, P>(
    open: &P,
    model: &OpenModel,
    closed: &O,
    t: f64,
    dt: f64,
    family_size: usize,
    config: &OptimizerConfig,
) -> Result<Comparison>
where
    O: Objective,
    P: Objective,
{
    let n_slots = slots_for(t, dt)?;
    let open_seed = derive_seed(&[config.seed, OPEN_STREAM]);
    let open_result = optimize(open, n_slots, dt, &OptimizerConfig { seed: open_seed, ..config.clone() })?;
    let entry = family(closed, t, dt, 0, family_size, config)?;
    let family = cross_evaluate(&entry, model)?;
    let open_fidelity = model.fidelity(&open_result.best)?;
    Ok(Comparison {
        t,
        open_fidelity,
        open_seed,
        z_score: family.open.z_score(open_fidelity),
        family,
        open_result,
    })
}
