use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Value};

use fibersim::algebra::{orbit, GateRecord, GateSet, MatrixStarAlgebra, DEFAULT_ORBIT_TOL};
use fibersim::alphapath::{equivalence_check, GridFile};
use fibersim::channels::{is_completely_positive, ChannelRecord};
use fibersim::correlation::{Bipartition, Functional, ReeOptions};
use fibersim::fibration::{load_bundle, Fiber, QuantumFibration};
use fibersim::matcore::{MatrixRecord, TensorShape};
use fibersim::polymer::{
    anneal, evolve_general, ground_space_fidelity, PolymerConfig, Trajectory, DRIFT_TOL, STEP_UNITARITY_TOL,
};
use fibersim::semiclassical::{in_af, ProbeSet, D0_TOL};
use fibersim::states::StateRecord;
use fibersim::topology::TopologyFile;

use crate::args::{AlgebraCmd, AlphaCmd, ChannelCmd, ClassifyArgs, Command, FibrationCmd, MeasureArgs, PolymerArgs, PolymerCmd, TopologyCmd};
use crate::{CliError, CliResult, Ctx, OutFile, Outcome, Table};

const TOPOLOGY_SCHEMA: &str = r#"{"points": [label, ...], "opens": [[label, ...], ...]}"#;
const GATES_SCHEMA: &str = r#"[{"name": str, "rows": n, "cols": n, "entries": [[re, im], ...]}, ...]"#;
const OP_SCHEMA: &str = r#"{"name": str, "rows": n, "cols": n, "entries": [[re, im], ...]}"#;
const STATE_SCHEMA: &str = r#"{"kind": "density" | "unnormalized", "rows": n, "cols": n, "entries": [[re, im], ...]}"#;
const CHANNEL_SCHEMA: &str =
    r#"{"input_dim": d, "output_dim": d', "kraus": [matrix, ...], "outcome_groups": [[index, ...], ...]?}"#;
const GRID_SCHEMA: &str = r#"{"s": [..]?, "t": [..]?, "points": [[{"label": str} | {"state": path} | {"density": state}, ...], ...], "values": {label: x}?, "hamiltonian": matrix?}"#;
const POLYMER_SCHEMA: &str =
    "sections [units] sequence, [local_ops] a/b local+interaction, [couplings], [schedule] kind, [run] total_time+steps";

pub fn dispatch(cmd: &Command, ctx: &Ctx) -> CliResult<Outcome> {
    match cmd {
        Command::Topology(TopologyCmd::Validate { file }) => topology_validate(ctx, file),
        Command::Algebra(AlgebraCmd::Commutant { file }) => algebra_commutant(ctx, file),
        Command::Algebra(AlgebraCmd::Orbit { gates, state, depth }) => algebra_orbit(ctx, gates, state, *depth),
        Command::Channel(ChannelCmd::Check { file }) => channel_check(ctx, file),
        Command::Measure(a) => measure(ctx, a),
        Command::Classify(a) => classify(ctx, a),
        Command::Fibration(FibrationCmd::Assemble { dir }) => fibration_assemble(ctx, dir),
        Command::Fibration(FibrationCmd::Fiber { dir, open, depth }) => fibration_fiber(ctx, dir, open, *depth),
        Command::Polymer(PolymerCmd::Anneal(a)) => polymer(ctx, a, Mode::Anneal),
        Command::Polymer(PolymerCmd::Evolve(a)) => polymer(ctx, a, Mode::Evolve),
        Command::Alpha(AlphaCmd::Check { grid, functional }) => alpha_check(ctx, grid, functional),
    }
}

fn input_err(path: &Path, e: impl ToString, schema: &'static str) -> CliError {
    CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
        schema,
    }
}

fn ok(result: Value) -> Outcome {
    Outcome {
        result,
        ..Outcome::default()
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn topology_validate(ctx: &Ctx, file: &Path) -> CliResult<Outcome> {
    let top: TopologyFile = ctx.read_json(file, TOPOLOGY_SCHEMA)?;
    match top.validate() {
        Ok(t) => {
            let summary = format!("{} points, {} opens, valid", t.points().len(), t.opens().len());
            Ok(ok(json!({
                "valid": true,
                "points": t.points().len(),
                "opens": t.opens().len(),
                "discrete": t.is_discrete(),
                "summary": summary,
            })))
        }
        Err(v) => Ok(Outcome {
            result: json!({"valid": false, "violation": v.to_string()}),
            violation: Some(v.to_string()),
            ..Outcome::default()
        }),
    }
}

fn load_gates(ctx: &Ctx, file: &Path) -> CliResult<GateSet> {
    let records: Vec<GateRecord> = ctx.read_json(file, GATES_SCHEMA)?;
    GateSet::from_records(&records).map_err(|e| input_err(file, e, GATES_SCHEMA))
}

fn algebra_commutant(ctx: &Ctx, file: &Path) -> CliResult<Outcome> {
    let set = load_gates(ctx, file)?;
    let d = set
        .dim()
        .ok_or_else(|| input_err(file, "gate set is empty", GATES_SCHEMA))?;
    let mats: Vec<_> = set.gates().iter().map(|g| g.matrix.clone()).collect();
    let alg = MatrixStarAlgebra::generate(&mats, d)?;
    let comm = alg.commutant();
    Ok(ok(json!({
        "dim": d,
        "generated_span_dim": alg.span_dim(),
        "commutant_span_dim": comm.span_dim(),
        "von_neumann": alg.is_von_neumann(),
        "commutant_basis": comm.basis().iter().map(MatrixRecord::from).collect::<Vec<_>>(),
    })))
}

fn load_state(ctx: &Ctx, file: &Path) -> CliResult<fibersim::DensityOperator> {
    let rec: StateRecord = ctx.read_json(file, STATE_SCHEMA)?;
    rec.to_density().map_err(|e| input_err(file, e, STATE_SCHEMA))
}

fn algebra_orbit(ctx: &Ctx, gates: &Path, state: &Path, depth: usize) -> CliResult<Outcome> {
    let set = load_gates(ctx, gates)?;
    let rho = load_state(ctx, state)?;
    let tol = ctx.tol("orbit_dedup", DEFAULT_ORBIT_TOL);
    ctx.param("depth", depth);
    let states = orbit(&rho, &set, depth, tol)?;
    Ok(ok(json!({
        "orbit_size": states.len(),
        "depth": depth,
        "states": states.iter().map(StateRecord::density).collect::<Vec<_>>(),
    })))
}

fn channel_check(ctx: &Ctx, file: &Path) -> CliResult<Outcome> {
    let rec: ChannelRecord = ctx.read_json(file, CHANNEL_SCHEMA)?;
    ctx.fixed_tol("completeness", fibersim::channels::CP_TOL);
    let ch = match rec.to_channel() {
        Ok(ch) => ch,
        Err(e @ fibersim::Error::CompletenessViolated { .. }) => {
            return Ok(Outcome {
                result: json!({"trace_preserving": false, "completely_positive": null, "error": e.to_string()}),
                violation: Some(e.to_string()),
                ..Outcome::default()
            })
        }
        Err(e) => return Err(input_err(file, e, CHANNEL_SCHEMA)),
    };
    let cp = is_completely_positive(&ch);
    let violation = (!cp.completely_positive).then(|| format!("Choi min eigenvalue {:.3e}", cp.min_eigenvalue));
    Ok(Outcome {
        result: json!({
            "input_dim": ch.input_dim(),
            "output_dim": ch.output_dim(),
            "kraus_operators": ch.kraus().len(),
            "trace_preserving": true,
            "completeness_residual": ch.completeness_residual(),
            "completely_positive": cp.completely_positive,
            "choi_min_eigenvalue": cp.min_eigenvalue,
        }),
        violation,
        ..Outcome::default()
    })
}

fn cut_for(dim: usize, dims: &Option<Vec<usize>>, cut: &[usize]) -> CliResult<Bipartition> {
    let dims = match dims {
        Some(d) => d.clone(),
        None => {
            if !dim.is_power_of_two() || dim < 2 {
                return Err(CliError::Usage(format!("dimension {dim} is not a qubit register; pass --dims")));
            }
            vec![2; dim.trailing_zeros() as usize]
        }
    };
    let shape = TensorShape::new(dims).map_err(|e| CliError::Usage(e.to_string()))?;
    if shape.dim() != dim {
        return Err(CliError::Usage(format!("--dims multiply to {}, state has dimension {dim}", shape.dim())));
    }
    Bipartition::new(shape, cut.to_vec()).map_err(|e| CliError::Usage(e.to_string()))
}

fn functional_for(ctx: &Ctx, name: &str) -> CliResult<Functional> {
    let f: Functional = name.parse().map_err(|e: fibersim::Error| CliError::Usage(e.to_string()))?;
    Ok(match f {
        Functional::Ree(o) => Functional::Ree(ReeOptions {
            seed: ctx.global.seed,
            ..o
        }),
        other => other,
    })
}

fn entropic(f: &Functional) -> bool {
    !matches!(f, Functional::Negativity)
}

fn measure(ctx: &Ctx, a: &MeasureArgs) -> CliResult<Outcome> {
    let rho = load_state(ctx, &a.state)?;
    let cut = cut_for(rho.dim(), &a.dims, &a.cut)?;
    let f = functional_for(ctx, &a.functional)?;
    ctx.param("functional", f.name());
    ctx.param("cut", format!("{:?}", cut.a()));
    ctx.param("dims", format!("{:?}", cut.shape().dims()));
    ctx.param("bits", a.bits);
    let mut value = f.evaluate(&rho, &cut)?;
    let base = if a.bits && entropic(&f) {
        value /= std::f64::consts::LN_2;
        "2"
    } else {
        "e"
    };
    Ok(ok(json!({
        "value": value,
        "exactness": to_value(&f.exactness()),
        "metadata": {
            "functional": f.name(),
            "cut": cut.a(),
            "dims": cut.shape().dims(),
            "log_base": base,
        },
    })))
}

fn classify(ctx: &Ctx, a: &ClassifyArgs) -> CliResult<Outcome> {
    let rec: GateRecord = ctx.read_json(&a.op, OP_SCHEMA)?;
    let m = rec.matrix.to_matrix().map_err(|e| input_err(&a.op, e, OP_SCHEMA))?;
    if !m.is_square() {
        return Err(input_err(&a.op, "operator must be square", OP_SCHEMA));
    }
    let cut = cut_for(m.nrows(), &a.dims, &a.cut)?;
    let f = functional_for(ctx, &a.functional)?;
    let tol = ctx.tol("d0", D0_TOL);
    ctx.param("functional", f.name());
    ctx.param("cut", format!("{:?}", cut.a()));
    ctx.param("dims", format!("{:?}", cut.shape().dims()));
    ctx.param("mixed_probes", a.mixed);
    ctx.param("pure_probes", a.pure);
    let probes = ProbeSet::standard(&cut, a.mixed, a.pure, ctx.global.seed);
    let verdict = in_af(&rec.name, &m, &f, &cut, &probes, tol)?;
    let mut v = to_value(&verdict);
    v["member"] = json!(verdict.is_member());
    Ok(ok(v))
}

fn load_fibration(ctx: &Ctx, dir: &Path) -> CliResult<Result<QuantumFibration, fibersim::Error>> {
    ctx.record_dir(dir)?;
    let spec = load_bundle(dir).map_err(|e| input_err(dir, e, "a bundle directory with topology.json, algebras/, states/, gates/"))?;
    Ok(QuantumFibration::assemble(spec))
}

fn fibration_assemble(ctx: &Ctx, dir: &Path) -> CliResult<Outcome> {
    match load_fibration(ctx, dir)? {
        Ok(fib) => {
            let r = fib.report();
            let mut v = to_value(r);
            v["assembled"] = json!(true);
            v["summary"] = json!(format!(
                "{} opens, isotony residual {:.1e}, presheaf residual {:.1e}",
                r.opens, r.max_isotony_residual, r.max_presheaf_residual
            ));
            Ok(ok(v))
        }
        Err(e) => Ok(Outcome {
            result: json!({"assembled": false, "error": e.to_string()}),
            violation: Some(e.to_string()),
            ..Outcome::default()
        }),
    }
}

fn fibration_fiber(ctx: &Ctx, dir: &Path, open: &[String], depth: usize) -> CliResult<Outcome> {
    let fib = match load_fibration(ctx, dir)? {
        Ok(f) => f,
        Err(e) => {
            return Ok(Outcome {
                result: json!({"assembled": false, "error": e.to_string()}),
                violation: Some(e.to_string()),
                ..Outcome::default()
            })
        }
    };
    let u = fib
        .topology()
        .open_from_labels(open)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !fib.topology().is_open(u) {
        return Err(CliError::Usage(format!("{} is not an open set", fib.topology().display(u))));
    }
    let tol = ctx.tol("orbit_dedup", DEFAULT_ORBIT_TOL);
    ctx.param("open", fib.topology().display(u));
    ctx.param("depth", depth);
    let fiber = fib.fiber_with(u, depth, tol)?;
    Ok(ok(json!({
        "open": fib.topology().labels(u),
        "fiber": match fiber { Fiber::Empty => "empty", Fiber::Orbit(_) => "orbit" },
        "size": fiber.len(),
        "depth": depth,
        "states": fiber.states().iter().map(StateRecord::density).collect::<Vec<_>>(),
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Anneal,
    Evolve,
}

fn load_polymer(ctx: &Ctx, path: &Path) -> CliResult<PolymerConfig> {
    let bytes = ctx.read(path)?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    if is_toml {
        let text = std::str::from_utf8(&bytes).map_err(|e| input_err(path, e, POLYMER_SCHEMA))?;
        toml::from_str(text).map_err(|e| input_err(path, e, POLYMER_SCHEMA))
    } else {
        serde_json::from_slice(&bytes).map_err(|e| input_err(path, e, POLYMER_SCHEMA))
    }
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plots energy and cut entropies from trajectory.csv next to this script."""
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
src = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else here / "trajectory.csv"
with open(src, newline="") as f:
    rows = list(csv.DictReader(f))
t = [float(r["t"]) for r in rows]
cuts = [k for k in rows[0] if k.startswith("ee_cut_")]

fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
ax1.plot(t, [float(r["energy"]) for r in rows])
ax1.set_ylabel("energy")
for k in cuts:
    ax2.plot(t, [float(r[k]) for r in rows], label=k)
ax2.set_xlabel("t")
ax2.set_ylabel("entanglement entropy")
if cuts:
    ax2.legend(fontsize="small")
fig.tight_layout()
fig.savefig(src.with_suffix(".png"), dpi=120)
"#;

struct PolymerJob {
    name: String,
    summary: Value,
    trajectory: Trajectory,
    violation: Option<String>,
}

fn run_polymer(name: String, cfg: &PolymerConfig, mode: Mode) -> Result<PolymerJob, fibersim::Error> {
    let spec = cfg.spec()?;
    let (t, steps) = (cfg.run.total_time, cfg.run.steps);
    let traj = match mode {
        Mode::Anneal => anneal(&spec, &cfg.schedule, t, steps)?,
        Mode::Evolve => evolve_general(&spec, &cfg.general_schedule(&spec), t, steps)?,
    };
    let (fidelity, degeneracy) = ground_space_fidelity(&spec, traj.final_ket(), 1e-9)?;
    let (_, e0, gap) = fibersim::polymer::ground_state(&spec)?;
    let last = traj.len() - 1;
    let mut violation = None;
    if traj.max_trace_drift > DRIFT_TOL {
        violation = Some(format!("trace drift {:.3e} exceeds {DRIFT_TOL:e}", traj.max_trace_drift));
    } else if traj.max_unitarity_defect > STEP_UNITARITY_TOL {
        violation = Some(format!("step unitarity defect {:.3e}", traj.max_unitarity_defect));
    }
    let summary = json!({
        "config": name,
        "mode": match mode { Mode::Anneal => "anneal", Mode::Evolve => "evolve" },
        "sites": spec.len(),
        "dim": spec.shape().dim(),
        "total_time": t,
        "steps": steps,
        "final_energy": traj.energy[last],
        "ground_energy": e0,
        "gap": gap,
        "ground_space_fidelity": fidelity,
        "ground_degeneracy": degeneracy,
        "final_cut_entropies": traj.entropy[last],
        "max_trace_drift": traj.max_trace_drift,
        "max_unitarity_defect": traj.max_unitarity_defect,
    });
    Ok(PolymerJob {
        name,
        summary,
        trajectory: traj,
        violation,
    })
}

fn trajectory_table(t: &Trajectory) -> Table {
    Table {
        header: t.csv_header(),
        rows: t.csv_rows(),
    }
}

fn state_dumps(prefix: &Path, t: &Trajectory) -> Vec<(PathBuf, OutFile)> {
    (0..t.len())
        .map(|k| {
            let ket: Vec<[f64; 2]> = t.kets[k].iter().map(|z| [z.re, z.im]).collect();
            (
                prefix.join("states").join(format!("step_{k:05}.json")),
                OutFile::Json(json!({"step": k, "t": t.times[k], "ket": ket})),
            )
        })
        .collect()
}

fn polymer(ctx: &Ctx, a: &PolymerArgs, mode: Mode) -> CliResult<Outcome> {
    let mut configs = Vec::with_capacity(a.configs.len());
    for p in &a.configs {
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        configs.push((name, load_polymer(ctx, p)?));
    }
    ctx.fixed_tol("trace_drift", DRIFT_TOL);
    ctx.fixed_tol("step_unitarity", STEP_UNITARITY_TOL);
    ctx.param("dump_states", a.dump_states);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.global.jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let jobs: Vec<Result<PolymerJob, fibersim::Error>> =
        pool.install(|| configs.par_iter().map(|(n, c)| run_polymer(n.clone(), c, mode)).collect());
    let jobs = jobs.into_iter().collect::<Result<Vec<_>, _>>()?;

    let single = jobs.len() == 1;
    let mut files = Vec::new();
    let mut violation = None;
    for job in &jobs {
        let prefix = if single { PathBuf::new() } else { PathBuf::from(&job.name) };
        files.push((prefix.join("trajectory.csv"), OutFile::Raw(trajectory_table(&job.trajectory).to_csv()?)));
        files.push((prefix.join("summary.json"), OutFile::Json(job.summary.clone())));
        files.push((prefix.join("plot_trajectory.py"), OutFile::Raw(PLOT_SCRIPT.as_bytes().to_vec())));
        if a.dump_states {
            files.extend(state_dumps(&prefix, &job.trajectory));
        }
        if violation.is_none() {
            violation = job.violation.clone();
        }
    }
    let result = if single {
        jobs[0].summary.clone()
    } else {
        json!({"jobs": jobs.iter().map(|j| j.summary.clone()).collect::<Vec<_>>()})
    };
    let table = single.then(|| trajectory_table(&jobs[0].trajectory));
    Ok(Outcome {
        result,
        violation,
        table,
        files,
    })
}

fn alpha_check(ctx: &Ctx, grid: &Path, functional: &str) -> CliResult<Outcome> {
    let file: GridFile = ctx.read_json(grid, GRID_SCHEMA)?;
    let base = grid.parent().unwrap_or(Path::new("."));
    let g = file.to_grid(base).map_err(|e| input_err(grid, e, GRID_SCHEMA))?;
    let alpha = file.alpha(functional).map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.param("functional", functional);
    ctx.fixed_tol("monotone_slack", fibersim::alphapath::MONOTONE_SLACK);
    ctx.fixed_tol("constant", fibersim::alphapath::CONSTANT_TOL);
    let r = equivalence_check(&g, &g.source(), &g.target(), &alpha)?;
    Ok(ok(json!({
        "verdict": r.verdict.to_string(),
        "is_alpha_homotopy": r.homotopy.is_homotopy,
        "witness": r.homotopy.witness,
        "max_row_spread": r.homotopy.max_row_spread,
        "rows": g.rows(),
        "cols": g.cols(),
        "functional": alpha.name(),
        "scope": "discrete verdict",
    })))
}
