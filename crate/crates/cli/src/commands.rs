use anyhow::bail;
use opengrape::algebra::ad_superop;
use opengrape::experiments::{compare_open_vs_time_optimal, cross_evaluate, top_curve, FamilyStats};
use opengrape::grape::{optimize, OptimizationResult};
use opengrape::lie::lie_closure;
use opengrape::propagation::{code_space_fidelity, fidelity_phase_invariant, propagate_closed, trajectory_projections, ControlSequence};
use opengrape::relaxation::{blocks_in_gamma_basis, classify_modes, spectrum_histogram, RelaxationModel};
use opengrape::systems::{bell_encoding, pi_conjugation_signs, leakage, restrict_to_protected, system_i, system_ii, ControlSystem};
use opengrape::trotter::{compile_trotter_cnot, control_power, logical_drift, TrotterPlan};
use opengrape::CMat;
use serde_json::{json, Value};

use crate::config::{config_error, FileRef, Gate, Problem, RunConfig};
use crate::output::{cells, Run};

const CLASS_NAMES: [&str; 3] = ["slow", "medium", "fast"];

fn system_summary(sys: &ControlSystem) -> anyhow::Result<Value> {
    let terms: Vec<Value> = sys
        .drift_terms
        .iter()
        .flat_map(|t| t.terms())
        .map(|t| json!({"label": t.label(), "coefficient_hz": t.coefficient}))
        .collect();
    let controls: Vec<Vec<String>> = sys
        .control_terms
        .iter()
        .map(|c| c.terms().iter().map(|t| t.to_string()).collect())
        .collect();
    let signs: Vec<Value> = (0..sys.n_controls())
        .map(|j| {
            pi_conjugation_signs(sys, j).map(|s| {
                let flipped: Vec<String> = s.into_iter().filter(|(_, v)| *v < 0).map(|(l, _)| l).collect();
                json!({"control": j, "flipped_terms": flipped})
            })
        })
        .collect::<Result<_, _>>()?;
    let enc = bell_encoding();
    let logical = logical_drift(sys, &enc).ok();
    Ok(json!({
        "name": sys.name,
        "n_qubits": sys.n_qubits,
        "dimension": sys.dim(),
        "drift_terms": terms,
        "controls": controls,
        "pi_conjugation": signs,
        "logical_drift_hz": logical,
    }))
}

pub fn systems(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("systems", config)?;
    let systems = [system_i(config.j_xx, config.j_inter)?, system_ii(config.j_xx, config.j_inter)?];
    let summaries: Vec<Value> = systems.iter().map(system_summary).collect::<anyhow::Result<_>>()?;
    let mut rows = Vec::new();
    for sys in &systems {
        for t in sys.drift_terms.iter().flat_map(|d| d.terms()) {
            rows.push(cells(&[&sys.name, &t.label(), &t.coefficient]));
        }
        println!("{}: {} qubits, {} controls", sys.name, sys.n_qubits, sys.n_controls());
    }
    run.csv("drift_terms.csv", &["system", "term", "coefficient_hz"], rows)?;
    run.finish(config, Value::Null, json!({ "systems": summaries }))
}

fn relaxation_by_name(name: &str) -> anyhow::Result<RelaxationModel> {
    Ok(match name {
        "pure-t2" => RelaxationModel::pure_t2()?,
        "full" => RelaxationModel::full()?,
        _ => bail!(config_error(format!("field `relaxation`: unknown model `{name}`"))),
    })
}

pub fn gamma_report(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("gamma-report", config)?;
    let model = match &config.relaxation {
        FileRef::Named(n) if n == "none" => relaxation_by_name("full")?,
        FileRef::Named(n) => relaxation_by_name(n)?,
        FileRef::File { .. } => config
            .relaxation_model(4)?
            .ok_or_else(|| config_error("field `relaxation`: no model"))?,
    };
    let hist = spectrum_histogram(model.eigenvalues(), 6);
    let classes = classify_modes(&model, config.cuts)?;
    let enc = bell_encoding();
    let kernel = (&model.gamma * &enc.basis).norm();

    let mut block_rows = Vec::new();
    let mut blocks = serde_json::Map::new();
    for sys in [system_i(config.j_xx, config.j_inter)?, system_ii(config.j_xx, config.j_inter)?] {
        let b = blocks_in_gamma_basis(&ad_superop(&sys.drift)?, &model, &classes)?;
        for (r, row) in b.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                block_rows.push(cells(&[&sys.name, &CLASS_NAMES[r], &CLASS_NAMES[c], v]));
            }
        }
        blocks.insert(sys.name.clone(), json!(b));
    }
    for (v, m) in &hist {
        println!("{v}: {m}");
    }
    run.csv("spectrum.csv", &["rate_per_s", "multiplicity"], hist.iter().map(|(v, m)| cells(&[v, m])))?;
    run.csv("blocks.csv", &["system", "row_class", "column_class", "frobenius_norm_hz"], block_rows)?;
    let rates = model.eigenvalues();
    let result = json!({
        "model": model.name,
        "histogram": hist.iter().map(|(v, m)| json!({"rate_per_s": v, "multiplicity": m})).collect::<Vec<_>>(),
        "class_sizes": classes.sizes(),
        "cuts_per_s": config.cuts,
        "rate_range_per_s": [rates.first(), rates.last()],
        "t1_rate_per_s": model.longitudinal_rate((0, 1))?,
        "t2_rate_per_s": model.transverse_rate(0)?,
        "protected_kernel_residual": kernel,
        "drift_blocks_hz": blocks,
    });
    run.finish(config, Value::Null, result)
}

pub fn lie_dim(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("lie-dim", config)?;
    let sys = config.system()?;
    let mut generators: Vec<CMat> = std::iter::once(sys.drift.clone()).chain(sys.controls.iter().cloned()).collect();
    let mut leak = Vec::new();
    if config.protected {
        if sys.n_qubits != 4 {
            bail!(config_error("field `protected`: needs a 4-qubit system"));
        }
        let enc = bell_encoding();
        let ads: Vec<CMat> = generators.iter().map(ad_superop).collect::<Result<_, _>>()?;
        leak = ads.iter().map(|a| leakage(a, &enc)).collect();
        generators = ads
            .iter()
            .map(|a| restrict_to_protected(a, &enc, false))
            .collect::<Result<_, _>>()?;
    }
    let max_dim = generators[0].nrows().pow(2);
    let r = lie_closure(&generators, config.lie_tolerance, max_dim)?;
    let norms: Vec<f64> = r.basis.iter().map(|b| b.norm()).collect();
    let gram_defect = r
        .basis
        .iter()
        .enumerate()
        .flat_map(|(i, a)| r.basis.iter().enumerate().map(move |(j, b)| (i, j, a, b)))
        .filter(|(i, j, _, _)| i < j)
        .map(|(_, _, a, b)| (a.adjoint() * b).trace().re.abs())
        .fold(0.0, f64::max);
    println!("{}", r.dimension);
    run.csv("basis_norms.csv", &["element", "norm"], norms.iter().enumerate().map(|(i, n)| cells(&[&i, n])))?;
    let result = json!({
        "system": sys.name,
        "protected": config.protected,
        "generator_leakage_hz": leak,
        "dimension": r.dimension,
        "generations": r.generations,
        "tolerance": r.tolerance,
        "certificate": {"basis_norms_min": norms.iter().copied().fold(f64::INFINITY, f64::min),
                        "basis_norms_max": norms.iter().copied().fold(0.0, f64::max),
                        "max_off_diagonal_inner_product": gram_defect},
    });
    run.finish(config, Value::Null, result)
}

/// Fidelities of one sequence with and without relaxation.
struct Evaluation {
    closed: f64,
    open: Option<f64>,
    power_hz: f64,
}

fn evaluate_sequence(problem: &Problem, seq: &ControlSequence) -> anyhow::Result<Evaluation> {
    let u = propagate_closed(&problem.sys, seq, false)?.final_map;
    let closed = match &problem.gate {
        Gate::Logical { u: ul, enc } => code_space_fidelity(&u, ul, enc)?,
        Gate::Physical(ut) => fidelity_phase_invariant(&u, ut)?,
    };
    let open = match problem.sys.relaxation {
        Some(_) => Some(problem.open_model()?.fidelity(seq)?),
        None => None,
    };
    Ok(Evaluation { closed, open, power_hz: control_power(seq) })
}

fn check_resolution(run: &mut Run, seq: &ControlSequence, what: &str) {
    let cycles = seq.max_abs() * seq.dt();
    if cycles > 0.1 {
        run.warn(format!(
            "{what}: max|u|·Δt = {cycles:.3} cycles per slot exceeds 0.1; consider a finer Δt"
        ));
    }
}

fn restart_seeds(r: &OptimizationResult) -> Value {
    json!(r.restarts.iter().map(|x| json!({"restart": x.restart, "seed": x.seed})).collect::<Vec<_>>())
}

fn optimization_json(r: &OptimizationResult) -> Value {
    json!({
        "best_fidelity": r.best_fidelity,
        "best_restart": r.best_restart,
        "iterations": r.iterations,
        "stop_reason": r.stop_reason,
        "restarts": r.restarts,
    })
}

fn write_trace(run: &mut Run, r: &OptimizationResult) -> anyhow::Result<()> {
    run.csv("trace.csv", &["iteration", "fidelity"], r.trace.iter().enumerate().map(|(i, f)| cells(&[&i, f])))
}

fn slots(config: &RunConfig, t: f64) -> anyhow::Result<usize> {
    opengrape::experiments::slots_for(t, config.dt).map_err(|e| config_error(format!("fields `t`/`dt`: {e}")))
}

pub fn optimize_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("optimize", config)?;
    let problem = config.problem()?;
    let m = slots(config, config.t)?;
    let r = match problem.sys.relaxation {
        Some(_) => optimize(&problem.open_objective()?, m, config.dt, &config.optimizer)?,
        None => optimize(&problem.closed_objective()?, m, config.dt, &config.optimizer)?,
    };
    check_resolution(&mut run, &r.best, "optimized sequence");
    let path = run.path("pulse.txt");
    r.best.write(&path)?;
    write_trace(&mut run, &r)?;
    let eval = evaluate_sequence(&problem, &r.best)?;
    println!("fidelity {}", r.best_fidelity);
    let result = json!({
        "fidelity": r.best_fidelity,
        "objective": if problem.sys.relaxation.is_some() { "open" } else { "closed" },
        "closed_fidelity": eval.closed,
        "open_fidelity": eval.open,
        "control_power_hz": eval.power_hz,
        "n_slots": m,
        "optimization": optimization_json(&r),
    });
    run.json("result.json", &result)?;
    run.finish(config, json!({"master": config.optimizer.seed, "restarts": restart_seeds(&r)}), result)
}

fn stats_row(t: f64, s: &FamilyStats) -> Vec<String> {
    let rmsd = s.rmsd.map_or(String::new(), |x| x.to_string());
    cells(&[&t, &s.mean, &rmsd, &s.min, &s.max])
}

const STATS_HEADER: [&str; 5] = ["T_s", "mean", "rmsd", "min", "max"];

pub fn top_curve_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("top-curve", config)?;
    if config.t_list.is_empty() {
        bail!(config_error("field `t_list` must list at least one final time"));
    }
    for &t in &config.t_list {
        slots(config, t)?;
    }
    let problem = config.problem()?;
    let closed = problem.closed_objective()?;
    let curve = top_curve(&closed, &config.t_list, config.dt, config.family_size, &config.optimizer)?;
    run.csv("top_curve.csv", &STATS_HEADER, curve.entries.iter().map(|e| stats_row(e.t, &e.stats)))?;

    let open_model = problem.sys.relaxation.as_ref().map(|_| problem.open_model()).transpose()?;
    let mut member_rows = Vec::new();
    let mut open_rows = Vec::new();
    let mut seeds = Vec::new();
    std::fs::create_dir_all(run.out.join("sequences"))?;
    for (i, e) in curve.entries.iter().enumerate() {
        let cross = open_model.as_ref().map(|m| cross_evaluate(e, m)).transpose()?;
        for (k, mem) in e.members.iter().enumerate() {
            let name = format!("sequences/T{i:03}_m{:03}.txt", mem.member);
            mem.sequence.write(&run.path(&name))?;
            let open = cross.as_ref().map_or(String::new(), |c| c.rows[k].open_fidelity.to_string());
            member_rows.push(cells(&[&e.t, &mem.member, &mem.seed, &mem.fidelity, &open, &mem.iterations, &name]));
            seeds.push(json!({"T_s": e.t, "member": mem.member, "seed": mem.seed}));
        }
        if let Some(c) = cross {
            open_rows.push(stats_row(e.t, &c.open));
        }
        println!("T = {} s: mean {:.6}, max {:.6}", e.t, e.stats.mean, e.stats.max);
    }
    run.csv(
        "members.csv",
        &["T_s", "member", "seed", "closed_fidelity", "open_fidelity", "iterations", "sequence"],
        member_rows,
    )?;
    if open_model.is_some() {
        run.csv("top_curve_open.csv", &STATS_HEADER, open_rows)?;
    }
    let result = json!({ "dt_s": curve.dt, "t_grid_s": config.t_list, "entries": curve.entries });
    run.finish(config, json!({"master": config.optimizer.seed, "members": seeds}), result)
}

fn pulse_files(config: &RunConfig) -> anyhow::Result<Vec<ControlSequence>> {
    if config.pulses.is_empty() {
        bail!(config_error("field `pulses` must name at least one pulse file"));
    }
    config
        .pulses
        .iter()
        .map(|p| {
            ControlSequence::read(p).map_err(|e| config_error(format!("field `pulses`: {}: {e}", p.display())))
        })
        .collect()
}

pub fn evaluate_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("evaluate", config)?;
    let problem = config.problem()?;
    let seqs = pulse_files(config)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (i, (seq, path)) in seqs.iter().zip(&config.pulses).enumerate() {
        if seq.n_controls() != problem.sys.n_controls() {
            bail!(config_error(format!(
                "field `pulses`: {} has {} controls, the system {}",
                path.display(),
                seq.n_controls(),
                problem.sys.n_controls()
            )));
        }
        check_resolution(&mut run, seq, &path.display().to_string());
        let e = evaluate_sequence(&problem, seq)?;
        let open = e.open.map_or(String::new(), |x| x.to_string());
        rows.push(cells(&[&i, &e.closed, &open]));
        println!("{}: closed {:.6}, open {open}", path.display(), e.closed);
        records.push(json!({
            "sequence_id": i,
            "file": path,
            "closed_fidelity": e.closed,
            "open_fidelity": e.open,
            "control_power_hz": e.power_hz,
            "duration_s": seq.duration(),
        }));
    }
    run.csv("scatter.csv", &["sequence_id", "closed_fidelity", "open_fidelity"], rows)?;
    run.finish(config, Value::Null, json!({ "sequences": records }))
}

pub fn compare_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("compare", config)?;
    let problem = config.problem()?;
    let open = problem.open_objective()?;
    let closed = problem.closed_objective()?;
    slots(config, config.t)?;
    let c = compare_open_vs_time_optimal(
        &open,
        &open.model,
        &closed,
        config.t,
        config.dt,
        config.family_size,
        &config.optimizer,
    )?;
    c.open_result.best.write(&run.path("open_pulse.txt"))?;
    write_trace(&mut run, &c.open_result)?;
    let rows = c.family.rows.iter().map(|r| cells(&[&r.sequence_id, &r.closed_fidelity, &r.open_fidelity]));
    run.csv("scatter.csv", &["sequence_id", "closed_fidelity", "open_fidelity"], rows)?;
    check_resolution(&mut run, &c.open_result.best, "open-GRAPE sequence");
    println!(
        "open-GRAPE {:.6}; family under relaxation mean {:.6}, rmsd {}; z-score {}",
        c.open_fidelity,
        c.family.open.mean,
        c.family.open.rmsd.map_or("n/a".into(), |x| format!("{x:.6}")),
        c.z_score.map_or("undefined".into(), |z| format!("{z:.2}")),
    );
    let power = control_power(&c.open_result.best);
    let result = json!({ "comparison": c, "open_optimization": optimization_json(&c.open_result), "open_control_power_hz": power });
    run.json("comparison.json", &result)?;
    run.finish(
        config,
        json!({"master": config.optimizer.seed, "open": c.open_seed, "open_restarts": restart_seeds(&c.open_result)}),
        result,
    )
}

pub fn trotter_cmd(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("trotter", config)?;
    let problem = config.problem()?;
    let enc = problem
        .encoding()
        .ok_or_else(|| config_error("field `target`: Trotter plans need a logical gate on a 4-qubit system"))?;
    let plan = match &config.plan {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error(format!("field `plan`: {}: {e}", path.display())))?;
            serde_json::from_str::<TrotterPlan>(&text)
                .map_err(|e| config_error(format!("field `plan`: {}: {e}", path.display())))?
        }
        None if config.preset == "realistic-cnot" => TrotterPlan::preset(&problem.sys, enc)?,
        None => bail!(config_error(format!("field `preset`: unknown preset `{}`", config.preset))),
    };
    plan.check().map_err(|e| config_error(format!("field `plan`: {e}")))?;
    let program = compile_trotter_cnot(&plan, plan.dt, config.ideal_pulses)?;
    run.json("plan.json", &plan)?;
    program.write(&run.path("program.txt"))?;
    let expanded = !program.has_ideal_pulses() && program.n_slots() <= config.max_slots;
    if expanded {
        program.to_sequence(config.max_slots)?.write(&run.path("pulse.txt"))?;
    } else {
        run.warn(format!(
            "{} slots{}: only the run-length program file is written",
            program.n_slots(),
            if program.has_ideal_pulses() { " with instantaneous pulses" } else { "" }
        ));
    }
    let closed = program.fidelity(&problem.closed_model()?)?;
    let open = match problem.sys.relaxation {
        Some(_) => Some(program.fidelity(&problem.open_model()?)?),
        None => None,
    };
    println!(
        "{}: duration {:.4} s, closed {:.6}, open {}, power {} Hz",
        plan.name,
        program.duration(),
        closed,
        open.map_or("n/a".into(), |x| format!("{x:.6}")),
        program.control_power()
    );
    let result = json!({
        "plan": plan.name,
        "n1": plan.n1,
        "n2": plan.n2,
        "pulse_amplitude_hz": plan.pulse_amplitude,
        "dt_s": program.dt,
        "ideal_pulses": config.ideal_pulses,
        "duration_s": program.duration(),
        "free_duration_s": plan.free_duration(),
        "n_pulses": plan.n_pulses(),
        "n_slots": program.n_slots(),
        "n_steps": program.steps.len(),
        "control_power_hz": program.control_power(),
        "closed_fidelity": closed,
        "open_fidelity": open,
        "pulse_file_written": expanded,
    });
    run.json("report.json", &result)?;
    run.finish(config, Value::Null, result)
}

pub fn project_trajectory(config: &RunConfig) -> anyhow::Result<()> {
    let mut run = Run::start("project-trajectory", config)?;
    let problem = config.problem()?;
    let enc = problem
        .encoding()
        .ok_or_else(|| config_error("field `target`: trajectories need the Bell code of a 4-qubit system"))?;
    let classes = problem.classes(config.cuts)?;
    let seqs = pulse_files(config)?;
    if seqs.len() != 1 {
        bail!(config_error("field `pulses`: project-trajectory takes exactly one pulse file"));
    }
    let rows = trajectory_projections(&problem.sys, &seqs[0], enc, &classes)?;
    let last = rows.last().map(|r| r.t).unwrap_or(0.0);
    let final_rows: Vec<_> = rows.iter().filter(|r| r.t == last).collect();
    let mean = |f: fn(&&opengrape::propagation::TrajectoryRow) -> f64| {
        final_rows.iter().map(f).sum::<f64>() / final_rows.len().max(1) as f64
    };
    let (slow, fast) = (mean(|r| r.p_slow), mean(|r| r.p_fast));
    println!("final mean weights: slow {slow:.6}, fast {fast:.6}");
    run.csv(
        "trajectory.csv",
        &["t_s", "state_index", "p_slow", "p_fast"],
        rows.iter().map(|r| cells(&[&r.t, &r.state_index, &r.p_slow, &r.p_fast])),
    )?;
    let result = json!({
        "n_states": final_rows.len(),
        "n_rows": rows.len(),
        "final_time_s": last,
        "final_mean_p_slow": slow,
        "final_mean_p_fast": fast,
        "class_sizes": classes.sizes(),
    });
    run.finish(config, Value::Null, result)
}
