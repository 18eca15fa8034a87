//! Command-line entry points: mesh generation, teacher runs, training,
//! evaluation, landscape sweeps and gradient checks, all driven by one case
//! configuration file.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{
    load_case, CaseConfig, EvalReference, IcSpec, LandscapeSpec, MeshSpec,
};
use crate::diagnostics::{
    alpha_sweep, audit_to_csv, conservation_audit, error_report, landscape_to_csv,
    reports_to_csv, ErrorReport,
};
use crate::losses::{
    add_noise, load_anchor_state, load_observations, predict_field, AnchorSnapshot, LossContext,
    Observation,
};
use crate::mesh::{channel_mesh, geometry_audit, load_mesh, strip_mesh, write_mesh, Mesh};
use crate::network::{Normalizer, SurrogateNet};
use crate::physics::{ghost_kinds, Bathymetry, GhostKind, PhysParams, State};
use crate::reference::DamBreakSpec;
use crate::teacher::{export_trajectory, load_trajectory, run_teacher, TeacherConfig, Trajectory};
use crate::training::{
    sample_times, train_standard, train_windows, WindowPlan, WindowedCase,
    WindowedModel,
};

#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("config: {0}")]
    Config(String),
    /// Exit code 3.
    #[error("runtime: {0}")]
    Runtime(String),
    /// Exit code 4.
    #[error("missing input: {0}")]
    MissingInput(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::MissingInput(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
            CliError::MissingInput(_) => "missing_input",
        }
    }

    /// Machine-readable error record for stderr.
    pub fn json_record(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

fn io_input_error(path: &Path, e: &std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::NotFound {
        CliError::MissingInput(path.display().to_string())
    } else {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    MeshGen,
    Teacher,
    Train,
    Eval,
    Landscape,
    Gradcheck,
}

impl Command {
    pub fn parse(s: &str) -> Option<Command> {
        match s {
            "mesh-gen" => Some(Command::MeshGen),
            "teacher" => Some(Command::Teacher),
            "train" => Some(Command::Train),
            "eval" => Some(Command::Eval),
            "landscape" => Some(Command::Landscape),
            "gradcheck" => Some(Command::Gradcheck),
            _ => None,
        }
    }
}

/// Mesh, bathymetry, boundary recipes and initial state for one case.
pub struct CaseSetup {
    pub cfg: CaseConfig,
    pub mesh: Mesh,
    pub bathy: Bathymetry,
    pub ghosts: Vec<GhostKind>,
    pub ic: State,
}

pub fn run(
    command: Command,
    config_path: &Path,
    overrides: &[String],
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if !config_path.exists() {
        return Err(CliError::MissingInput(config_path.display().to_string()));
    }
    let mut cfg =
        load_case(config_path, overrides).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(dir) = out_dir {
        cfg.output_dir = dir;
    }
    if let Some(s) = seed {
        cfg.seed_init = s;
        cfg.train.seed_sampling = s.wrapping_add(1);
        cfg.data.seed_noise = s.wrapping_add(2);
    }
    match command {
        Command::MeshGen => cmd_mesh_gen(cfg),
        Command::Teacher => cmd_teacher(cfg),
        Command::Train => cmd_train(cfg),
        Command::Eval => cmd_eval(cfg),
        Command::Landscape => cmd_landscape(cfg),
        Command::Gradcheck => cmd_gradcheck(cfg),
    }
}

pub fn build_mesh(cfg: &CaseConfig) -> Result<Mesh, CliError> {
    let mesh = match &cfg.mesh {
        MeshSpec::Strip { length, n_cells, width, bed, left, right } => {
            let bed = *bed;
            strip_mesh(
                *length,
                *n_cells,
                *width,
                cfg.ref_ws,
                move |x| bed.eval(x),
                *left,
                *right,
            )
        }
        MeshSpec::Channel { lx, ly, target_size, block, inlet_q, exit_ws } => channel_mesh(
            *lx,
            *ly,
            *block,
            *target_size,
            cfg.ref_ws,
            crate::mesh::EndCondition::inlet(*inlet_q),
            crate::mesh::EndCondition::exit(*exit_ws),
            |_, _| 0.0,
        ),
        MeshSpec::File(path) => {
            if !path.exists() {
                return Err(CliError::MissingInput(path.display().to_string()));
            }
            load_mesh(path)
        }
    };
    mesh.map_err(|e| CliError::Config(format!("mesh: {e}")))
}

pub fn build_setup(cfg: CaseConfig) -> Result<CaseSetup, CliError> {
    let mesh = build_mesh(&cfg)?;
    let bathy = Bathymetry::from_mesh(&mesh);
    let ghosts = ghost_kinds(&mesh);
    let n = mesh.n_cells();
    let ic = match &cfg.ic {
        IcSpec::QuiescentDepth(depth) => {
            let mut s = State::zeros(n);
            for i in 0..n {
                s.xi[i] = depth - bathy.h_s[i];
            }
            s
        }
        IcSpec::QuiescentWs(ws) => {
            let mut s = State::zeros(n);
            let xi = ws - mesh.reference_ws;
            s.xi.iter_mut().for_each(|v| *v = xi);
            s
        }
        IcSpec::DamBreak { h_left, h_right, x0 } => {
            let mut s = State::zeros(n);
            for (i, c) in mesh.cells.iter().enumerate() {
                let h = if c.centroid[0] < *x0 { *h_left } else { *h_right };
                s.xi[i] = h - bathy.h_s[i];
            }
            s
        }
        IcSpec::File(path) => {
            if !path.exists() {
                return Err(CliError::MissingInput(path.display().to_string()));
            }
            load_anchor_state(path, n).map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    Ok(CaseSetup { cfg, mesh, bathy, ghosts, ic })
}

/// Loads observations and anchors; runs the in-loop teacher when enabled.
pub fn build_data(setup: &CaseSetup) -> Result<(Vec<Observation>, Vec<AnchorSnapshot>), CliError> {
    let cfg = &setup.cfg;
    let mut observations = Vec::new();
    if let Some(path) = &cfg.data.observations {
        if !path.exists() {
            return Err(CliError::MissingInput(path.display().to_string()));
        }
        let mut obs = load_observations(path, &setup.mesh)
            .map_err(|e| CliError::Config(e.to_string()))?;
        for o in obs.iter_mut() {
            o.weight = cfg.data.obs_weight;
        }
        if cfg.data.noise_level > 0.0 {
            obs = add_noise(&obs, cfg.data.noise_level, cfg.data.seed_noise);
        }
        observations = obs;
    }

    let mut anchors = Vec::new();
    for (t, path) in &cfg.data.anchors {
        if !path.exists() {
            return Err(CliError::MissingInput(path.display().to_string()));
        }
        let state = load_anchor_state(path, setup.mesh.n_cells())
            .map_err(|e| CliError::Config(e.to_string()))?;
        anchors.push(AnchorSnapshot { t: *t, state, weight: cfg.data.anchor_weight });
    }
    if let Some(dir) = &cfg.data.trajectory {
        if !dir.join("snapshots.csv").exists() {
            return Err(CliError::MissingInput(dir.join("snapshots.csv").display().to_string()));
        }
        let traj = load_trajectory(dir, setup.mesh.n_cells())
            .map_err(|e| CliError::Config(e.to_string()))?;
        anchors.extend(traj.to_anchors(cfg.data.anchor_weight));
    }
    if cfg.data.teacher {
        let traj = run_case_teacher(
            setup,
            &TeacherConfig {
                cfl: cfg.data.teacher_cfl,
                dt: None,
                n_snap: cfg.data.teacher_snapshots,
                t0: cfg.train.t0,
                t_end: cfg.train.t_end,
                max_abs: 1e6,
            },
        )?;
        anchors.extend(traj.to_anchors(cfg.data.anchor_weight));
    }
    anchors.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok((observations, anchors))
}

fn run_case_teacher(setup: &CaseSetup, config: &TeacherConfig) -> Result<Trajectory, CliError> {
    run_teacher(&setup.ic, &setup.mesh, &setup.bathy, &setup.ghosts, &setup.cfg.phys, config)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    crate::output::atomic_write_str(path, contents)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_mesh_gen(cfg: CaseConfig) -> Result<(), CliError> {
    let mesh = build_mesh(&cfg)?;
    let report = geometry_audit(&mesh);
    let path = cfg.output_dir.join("mesh.swem");
    write_atomic(&path, &write_mesh(&mesh))?;
    println!(
        "mesh: {} cells, {} faces ({} boundary), total area {:.6}",
        mesh.n_cells(),
        mesh.faces.len(),
        mesh.boundary_faces().count(),
        mesh.total_area()
    );
    println!(
        "audit: max closure defect {:.3e} (cell {}), min area {:.3e}, max normal defect {:.3e} -> {}",
        report.max_closure_defect,
        report.worst_closure_cell,
        report.min_area,
        report.max_normal_defect,
        if report.pass { "pass" } else { "FAIL" }
    );
    println!("wrote {}", path.display());
    if !report.pass {
        return Err(CliError::Runtime("geometry audit failed".into()));
    }
    Ok(())
}

fn cmd_teacher(cfg: CaseConfig) -> Result<(), CliError> {
    let setup = build_setup(cfg)?;
    let spec = &setup.cfg.teacher;
    let config = TeacherConfig {
        cfl: spec.cfl,
        dt: spec.dt,
        n_snap: spec.n_snap,
        t0: setup.cfg.train.t0,
        t_end: spec.t_end,
        max_abs: 1e6,
    };
    let traj = run_case_teacher(&setup, &config)?;
    let dir = setup.cfg.output_dir.join("trajectory");
    export_trajectory(&traj, &dir).map_err(|e| CliError::Runtime(e.to_string()))?;
    let audit = conservation_audit(&traj, &setup.mesh, &setup.bathy);
    write_atomic(&setup.cfg.output_dir.join("mass_audit.csv"), &audit_to_csv(&audit))?;
    println!(
        "teacher: {} snapshots over [{}, {}] s, {} cells",
        traj.times.len(),
        config.t0,
        config.t_end,
        setup.mesh.n_cells()
    );
    println!(
        "mass audit: max relative defect {:.3e} -> {}",
        audit.max_relative,
        if audit.pass { "pass" } else { "FAIL" }
    );
    println!("wrote {}", dir.display());
    Ok(())
}

/// Field export rows at one time: `cell_id,x,y,t,h,u,v,xi,uh,vh`.
pub fn field_to_csv(
    mesh: &Mesh,
    bathy: &Bathymetry,
    phys: &PhysParams,
    state: &State,
    t: f64,
) -> String {
    let mut s = String::from("cell_id,x,y,t,h,u,v,xi,uh,vh\n");
    for (i, c) in mesh.cells.iter().enumerate() {
        let (h, u, v) = crate::physics::recover_primitives(
            [state.xi[i], state.uh[i], state.vh[i]],
            bathy.h_s[i],
            phys,
        );
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            i, c.centroid[0], c.centroid[1], t, h, u, v, state.xi[i], state.uh[i], state.vh[i]
        ));
    }
    s
}

fn cmd_train(cfg: CaseConfig) -> Result<(), CliError> {
    let setup = build_setup(cfg)?;
    let (observations, anchors) = build_data(&setup)?;
    let cfg = &setup.cfg;
    let out = &cfg.output_dir;

    if cfg.n_windows <= 1 {
        let norm = Normalizer::for_case(&setup.mesh, cfg.train.t0, cfg.train.t_end);
        let (net, params) = SurrogateNet::init(cfg.net, norm, cfg.seed_init)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let ctx = LossContext::new(
            &setup.mesh,
            cfg.phys.clone(),
            cfg.weights,
            setup.ic.clone(),
            cfg.train.t0,
            observations,
            anchors,
        );
        let outcome = train_standard(&net, params, &ctx, &cfg.train)
            .map_err(|e| CliError::Config(e.to_string()))?;
        net.save_checkpoint(&outcome.params, &out.join("checkpoint.bin"))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&out.join("history.csv"), &outcome.history.to_csv())?;
        let final_state =
            predict_field(&net, &outcome.params, &setup.mesh, &setup.bathy, cfg.train.t_end);
        write_atomic(
            &out.join("field_final.csv"),
            &field_to_csv(&setup.mesh, &setup.bathy, &cfg.phys, &final_state, cfg.train.t_end),
        )?;
        if let Some(last) = outcome.history.rows.last() {
            println!(
                "train: {} steps, final total loss {:.6e}",
                last.step, last.loss.total
            );
        }
        println!("wrote {}", out.join("checkpoint.bin").display());
        if let Some(msg) = outcome.aborted {
            return Err(CliError::Runtime(format!(
                "{msg}; last good checkpoint saved to {}",
                out.join("checkpoint.bin").display()
            )));
        }
    } else {
        let plan = WindowPlan::uniform(cfg.train.t0, cfg.train.t_end, cfg.n_windows)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let case = WindowedCase {
            mesh: &setup.mesh,
            phys: cfg.phys.clone(),
            weights: cfg.weights,
            ic: setup.ic.clone(),
            observations,
            anchors,
            net_cfg: cfg.net,
            seed_init: cfg.seed_init,
        };
        let (model, history) = train_windows(case, &cfg.train, &plan)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        save_windowed(&model, out)?;
        write_atomic(&out.join("history.csv"), &history.to_csv())?;
        let final_state =
            model.predict_field_at(&setup.mesh, &setup.bathy, cfg.train.t_end);
        write_atomic(
            &out.join("field_final.csv"),
            &field_to_csv(&setup.mesh, &setup.bathy, &cfg.phys, &final_state, cfg.train.t_end),
        )?;
        println!(
            "train: {} windows over [{}, {}] s",
            plan.n_windows(),
            cfg.train.t0,
            cfg.train.t_end
        );
        println!("wrote {}", out.join("windows.csv").display());
    }
    Ok(())
}

/// Persists a windowed model: per-window checkpoints plus an index.
pub fn save_windowed(model: &WindowedModel, dir: &Path) -> Result<(), CliError> {
    let mut index = String::from("window,t_lo,t_hi,file\n");
    for k in 0..model.plan.n_windows() {
        let file = format!("checkpoint_w{k:03}.bin");
        model.nets[k]
            .save_checkpoint(&model.params[k], &dir.join(&file))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        index.push_str(&format!(
            "{k},{},{},{file}\n",
            model.plan.boundaries[k],
            model.plan.boundaries[k + 1]
        ));
    }
    write_atomic(&dir.join("windows.csv"), &index)
}

/// A trained model: one network or a window chain.
pub enum Model {
    Single { net: SurrogateNet, params: Vec<f64> },
    Windowed(WindowedModel),
}

impl Model {
    pub fn predict_field_at(&self, mesh: &Mesh, bathy: &Bathymetry, t: f64) -> State {
        match self {
            Model::Single { net, params } => predict_field(net, params, mesh, bathy, t),
            Model::Windowed(m) => m.predict_field_at(mesh, bathy, t),
        }
    }
}

/// Loads `checkpoint.bin` or a windowed index from a checkpoint path or
/// output directory.
pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let missing = || CliError::MissingInput(path.display().to_string());
    if path.is_dir() {
        let index = path.join("windows.csv");
        if index.exists() {
            return load_windowed(path).map(Model::Windowed);
        }
        let single = path.join("checkpoint.bin");
        if single.exists() {
            let (net, params) = SurrogateNet::load_checkpoint(&single)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            return Ok(Model::Single { net, params });
        }
        return Err(missing());
    }
    if !path.exists() {
        return Err(missing());
    }
    let (net, params) =
        SurrogateNet::load_checkpoint(path).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Model::Single { net, params })
}

pub fn load_windowed(dir: &Path) -> Result<WindowedModel, CliError> {
    let index_path = dir.join("windows.csv");
    let text = std::fs::read_to_string(&index_path).map_err(|e| io_input_error(&index_path, &e))?;
    let mut boundaries: Vec<f64> = Vec::new();
    let mut nets = Vec::new();
    let mut params = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("window,")) {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(CliError::Runtime(format!("{}: bad index line {i}", index_path.display())));
        }
        let t_lo: f64 = f[1].parse().map_err(|_| {
            CliError::Runtime(format!("{}: bad t_lo '{}'", index_path.display(), f[1]))
        })?;
        let t_hi: f64 = f[2].parse().map_err(|_| {
            CliError::Runtime(format!("{}: bad t_hi '{}'", index_path.display(), f[2]))
        })?;
        if boundaries.is_empty() {
            boundaries.push(t_lo);
        }
        boundaries.push(t_hi);
        let (net, p) = SurrogateNet::load_checkpoint(&dir.join(f[3].trim()))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        nets.push(net);
        params.push(p);
    }
    if nets.is_empty() {
        return Err(CliError::Runtime(format!("{}: empty window index", index_path.display())));
    }
    let handoffs = Vec::new();
    Ok(WindowedModel { plan: WindowPlan { boundaries }, nets, params, handoffs })
}

fn cmd_eval(cfg: CaseConfig) -> Result<(), CliError> {
    let setup = build_setup(cfg)?;
    let cfg = &setup.cfg;
    let checkpoint = cfg
        .eval
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.output_dir.clone());
    let model = load_model(&checkpoint)?;

    // Reference states per evaluation time.
    let reference_states: Vec<(f64, State)> = match &cfg.eval.reference {
        None => {
            return Err(CliError::Config("eval.reference is required".into()));
        }
        Some(EvalReference::Stoker { h_left, h_right, x0 }) => {
            let spec =
                DamBreakSpec { h_l: *h_left, h_r: *h_right, x0: *x0, g: cfg.phys.g };
            let sol = spec.solve().map_err(|e| CliError::Config(e.to_string()))?;
            if cfg.eval.times.is_empty() {
                return Err(CliError::Config("eval.times required for a stoker reference".into()));
            }
            cfg.eval
                .times
                .iter()
                .map(|&t| {
                    let mut s = State::zeros(setup.mesh.n_cells());
                    for (i, c) in setup.mesh.cells.iter().enumerate() {
                        let (h, u) = sol.eval(c.centroid[0], t);
                        s.xi[i] = h - setup.bathy.h_s[i];
                        s.uh[i] = h * u;
                    }
                    (t, s)
                })
                .collect()
        }
        Some(EvalReference::Trajectory(dir)) => {
            if !dir.join("snapshots.csv").exists() {
                return Err(CliError::MissingInput(
                    dir.join("snapshots.csv").display().to_string(),
                ));
            }
            let traj = load_trajectory(dir, setup.mesh.n_cells())
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let mut pairs: Vec<(f64, State)> =
                traj.times.iter().copied().zip(traj.states).collect();
            if !cfg.eval.times.is_empty() {
                pairs.retain(|(t, _)| {
                    cfg.eval.times.iter().any(|&want| (want - t).abs() <= 1e-9)
                });
                if pairs.is_empty() {
                    return Err(CliError::Config(
                        "eval.times match no trajectory snapshot".into(),
                    ));
                }
            }
            pairs
        }
        Some(EvalReference::Anchors(list)) => {
            let mut pairs = Vec::new();
            for (t, path) in list {
                if !path.exists() {
                    return Err(CliError::MissingInput(path.display().to_string()));
                }
                let state = load_anchor_state(path, setup.mesh.n_cells())
                    .map_err(|e| CliError::Config(e.to_string()))?;
                pairs.push((*t, state));
            }
            pairs
        }
    };

    let mut reports: Vec<ErrorReport> = Vec::new();
    for (t, reference) in &reference_states {
        let pred = model.predict_field_at(&setup.mesh, &setup.bathy, *t);
        write_atomic(
            &cfg.output_dir.join(format!("field_t{t}.csv")),
            &field_to_csv(&setup.mesh, &setup.bathy, &cfg.phys, &pred, *t),
        )?;
        reports.push(error_report(&setup.mesh, &setup.bathy, &cfg.phys, &pred, reference, *t));
    }
    let path = cfg.output_dir.join("errors.csv");
    write_atomic(&path, &reports_to_csv(&reports))?;
    for r in &reports {
        for e in &r.entries {
            println!("t = {}: L2({}) = {:.6e},  Linf({}) = {:.6e}", r.time, e.var, e.l2, e.var, e.linf);
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_landscape(cfg: CaseConfig) -> Result<(), CliError> {
    let setup = build_setup(cfg)?;
    let (observations, anchors) = build_data(&setup)?;
    let cfg = &setup.cfg;
    let LandscapeSpec { checkpoint, alphas, n_t, seed } = cfg.landscape.clone();
    let checkpoint = checkpoint.unwrap_or_else(|| cfg.output_dir.join("checkpoint.bin"));
    if !checkpoint.exists() {
        return Err(CliError::MissingInput(checkpoint.display().to_string()));
    }
    let (net, params) = SurrogateNet::load_checkpoint(&checkpoint)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if !(alphas.contains(&0.0) && alphas.contains(&1.0)) {
        return Err(CliError::Config("landscape.alphas must include 0 and 1".into()));
    }
    let ctx = LossContext::new(
        &setup.mesh,
        cfg.phys.clone(),
        cfg.weights,
        setup.ic.clone(),
        cfg.train.t0,
        observations,
        anchors,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = sample_times(n_t, cfg.train.t0, cfg.train.t_end, &mut rng);
    let curve = alpha_sweep(&net, &params, &ctx, &alphas, &times);
    let path = cfg.output_dir.join("landscape.csv");
    write_atomic(&path, &landscape_to_csv(&curve))?;
    println!(
        "landscape: fvm ratio L(0)/L(1) = {:.3}, data ratio = {:.3}",
        curve.fvm_ratio(),
        curve.data_ratio()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_gradcheck(cfg: CaseConfig) -> Result<(), CliError> {
    let setup = build_setup(cfg)?;
    let (observations, anchors) = build_data(&setup)?;
    let cfg = &setup.cfg;
    let norm = Normalizer::for_case(&setup.mesh, cfg.train.t0, cfg.train.t_end);
    let (net, params) = SurrogateNet::init(cfg.net, norm, cfg.seed_init)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if net.n_params() > 4000 {
        return Err(CliError::Config(format!(
            "gradcheck compares against finite differences over all {} parameters; \
             use a network with at most 4000 (e.g. width 32, 2 layers, 8 features)",
            net.n_params()
        )));
    }
    let ctx = LossContext::new(
        &setup.mesh,
        cfg.phys.clone(),
        cfg.weights,
        setup.ic.clone(),
        cfg.train.t0,
        observations,
        anchors,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed_sampling);
    let times = sample_times(cfg.train.n_t, cfg.train.t0, cfg.train.t_end, &mut rng);

    let mut grad = vec![0.0; net.n_params()];
    let breakdown = crate::losses::loss_and_grad(&net, &params, &ctx, &times, &mut grad);
    if !breakdown.is_finite() {
        return Err(CliError::Runtime("loss is not finite at the initial point".into()));
    }
    let fd = crate::ad::central_gradient(&params, 1e-6, |p| {
        crate::losses::eval_losses(&net, p, &ctx, &times, 1.0).total
    });
    let floor = crate::ad::gradient_check_floor(&fd);
    let worst = crate::ad::max_relative_error(&grad, &fd, floor);
    println!(
        "gradcheck: {} parameters, {} cells, {} times; max relative error {:.3e} (noise floor {:.3e})",
        net.n_params(),
        setup.mesh.n_cells(),
        times.len(),
        worst,
        floor
    );
    if worst <= 1e-6 {
        println!("gradcheck: PASS");
        Ok(())
    } else {
        Err(CliError::Runtime(format!("gradient mismatch {worst:.3e} exceeds 1e-6")))
    }
}
