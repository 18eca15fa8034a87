//! Forward finite-volume solver with Heun (predictor-corrector) marching.
//!
//! Reuses the exact flux/source/ghost code paths of the training loss, so the
//! trajectories it produces are fixed points of the residual the network is
//! trained against. Snapshots land exactly on uniformly spaced times by
//! shortening the final sub-step.

use thiserror::Error;

use crate::losses::AnchorSnapshot;
use crate::mesh::Mesh;
use crate::physics::{flux_balance, Bathymetry, GhostKind, PhysParams, State};

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("invalid teacher config: {0}")]
    InvalidConfig(String),
    #[error("solution blew up at t = {t:.6} s (max |Q| = {max_abs:.3e})")]
    Blowup { t: f64, max_abs: f64 },
    #[error("non-finite state at t = {t:.6} s, cell {cell}")]
    NonFinite { t: f64, cell: usize },
    #[error("trajectory index: {0}")]
    Index(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] crate::losses::DataError),
}

#[derive(Debug, Clone, Copy)]
pub struct TeacherConfig {
    /// Courant number for adaptive stepping (ignored when `dt` is fixed).
    pub cfl: f64,
    /// Fixed step size (s); `None` selects CFL-adaptive stepping.
    pub dt: Option<f64>,
    /// Snapshot count including the initial state (≥ 2).
    pub n_snap: usize,
    pub t0: f64,
    pub t_end: f64,
    /// Abort threshold on max |Q|.
    pub max_abs: f64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig { cfl: 0.5, dt: None, n_snap: 11, t0: 0.0, t_end: 1.0, max_abs: 1e6 }
    }
}

impl TeacherConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // !(a > b) also rejects NaN
    fn validate(&self) -> Result<(), TeacherError> {
        if self.n_snap < 2 {
            return Err(TeacherError::InvalidConfig("need at least 2 snapshots".into()));
        }
        if !(self.t_end > self.t0) {
            return Err(TeacherError::InvalidConfig("t_end must exceed t0".into()));
        }
        match self.dt {
            Some(dt) if !(dt > 0.0) => {
                Err(TeacherError::InvalidConfig("fixed dt must be positive".into()))
            }
            None if !(self.cfl > 0.0 && self.cfl <= 1.0) => {
                Err(TeacherError::InvalidConfig("adaptive stepping needs 0 < cfl <= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Time-ordered full-mesh states at uniformly spaced snapshot times, plus the
/// running time integral of the net boundary mass inflow.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Cumulative ∫ (net boundary inflow) dt at each snapshot time (m³).
    pub boundary_mass_in: Vec<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        self.states.last().expect("trajectory has at least two snapshots")
    }

    /// Snapshots as anchor data for the pooled data loss.
    pub fn to_anchors(&self, weight: f64) -> Vec<AnchorSnapshot> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| AnchorSnapshot { t, state: s.clone(), weight })
            .collect()
    }
}

/// Semi-discrete right-hand side dQ_i/dt = -(1/A_i) Σ F̂ ℓ + S_i, with the
/// net boundary mass inflow as the second return.
pub fn rhs(
    state: &[[f64; 3]],
    mesh: &Mesh,
    bathy: &Bathymetry,
    ghosts: &[GhostKind],
    phys: &PhysParams,
) -> (Vec<[f64; 3]>, f64) {
    let bal = flux_balance(state, mesh, bathy, ghosts, phys);
    let deriv = bal.div.into_iter().map(|d| [-d[0], -d[1], -d[2]]).collect();
    (deriv, bal.boundary_mass_in)
}

/// One Heun step on a flat state vector with a generic right-hand side:
/// y* = y + dt f(y); y⁺ = y + dt/2 (f(y) + f(y*)).
pub fn heun_generic<F>(y: &[f64], dt: f64, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let k1 = f(y);
    let predictor: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + dt * b).collect();
    let k2 = f(&predictor);
    y.iter()
        .zip(k1.iter().zip(&k2))
        .map(|(a, (b, c))| a + 0.5 * dt * (b + c))
        .collect()
}

/// Heun step of the shallow-water system; returns the updated state and the
/// boundary mass inflow integrated with the same predictor-corrector weights.
pub fn heun_step(
    state: &State,
    dt: f64,
    mesh: &Mesh,
    bathy: &Bathymetry,
    ghosts: &[GhostKind],
    phys: &PhysParams,
) -> (State, f64) {
    let rows = state.rows();
    let (k1, b1) = rhs(&rows, mesh, bathy, ghosts, phys);
    let predictor: Vec<[f64; 3]> = rows
        .iter()
        .zip(&k1)
        .map(|(q, k)| [q[0] + dt * k[0], q[1] + dt * k[1], q[2] + dt * k[2]])
        .collect();
    let (k2, b2) = rhs(&predictor, mesh, bathy, ghosts, phys);
    let next: Vec<[f64; 3]> = rows
        .iter()
        .zip(k1.iter().zip(&k2))
        .map(|(q, (a, b))| {
            [
                q[0] + 0.5 * dt * (a[0] + b[0]),
                q[1] + 0.5 * dt * (a[1] + b[1]),
                q[2] + 0.5 * dt * (a[2] + b[2]),
            ]
        })
        .collect();
    (State::from_rows(&next), 0.5 * dt * (b1 + b2))
}

/// CFL-limited step: cfl · min over wet cells of A_i / Σ_f ℓ_f (|u_n| + c).
pub fn stable_dt(
    state: &State,
    mesh: &Mesh,
    bathy: &Bathymetry,
    phys: &PhysParams,
    cfl: f64,
) -> f64 {
    let mut dt = f64::INFINITY;
    for (i, cell) in mesh.cells.iter().enumerate() {
        let q = [state.xi[i], state.uh[i], state.vh[i]];
        let (h, u, v) = crate::physics::recover_primitives(q, bathy.h_s[i], phys);
        if h <= phys.h_min {
            continue;
        }
        let c = (phys.g * h).sqrt();
        let mut wave_sum = 0.0;
        for &(fid, _) in &cell.faces {
            let f = &mesh.faces[fid];
            let un = (u * f.normal[0] + v * f.normal[1]).abs();
            wave_sum += f.length * (un + c);
        }
        if wave_sum > 0.0 {
            dt = dt.min(cell.area / wave_sum);
        }
    }
    cfl * dt
}

/// Integrates the initial state over [t0, t_end], capturing `n_snap`
/// uniformly spaced snapshots. The final sub-step before each snapshot is
/// shortened to land exactly on the snapshot time.
pub fn run_teacher(
    ic: &State,
    mesh: &Mesh,
    bathy: &Bathymetry,
    ghosts: &[GhostKind],
    phys: &PhysParams,
    config: &TeacherConfig,
) -> Result<Trajectory, TeacherError> {
    config.validate()?;
    assert_eq!(ic.n_cells(), mesh.n_cells());
    let span = config.t_end - config.t0;
    let snap_times: Vec<f64> = (0..config.n_snap)
        .map(|j| config.t0 + span * j as f64 / (config.n_snap - 1) as f64)
        .collect();

    let mut state = ic.clone();
    let mut t = config.t0;
    let mut mass_in = 0.0;
    let mut trajectory = Trajectory {
        times: vec![config.t0],
        states: vec![state.clone()],
        boundary_mass_in: vec![0.0],
    };

    for &t_snap in &snap_times[1..] {
        while t < t_snap {
            let dt_raw = match config.dt {
                Some(dt) => dt,
                None => stable_dt(&state, mesh, bathy, phys, config.cfl),
            };
            if !(dt_raw > 0.0 && dt_raw.is_finite()) {
                return Err(TeacherError::InvalidConfig(format!(
                    "step size collapsed to {dt_raw} at t = {t}"
                )));
            }
            let remaining = t_snap - t;
            let (dt, landed) =
                if dt_raw >= remaining { (remaining, true) } else { (dt_raw, false) };
            let (next, db) = heun_step(&state, dt, mesh, bathy, ghosts, phys);
            if let Some(cell) = next
                .xi
                .iter()
                .zip(next.uh.iter().zip(&next.vh))
                .position(|(a, (b, c))| !(a.is_finite() && b.is_finite() && c.is_finite()))
            {
                return Err(TeacherError::NonFinite { t, cell });
            }
            let max_abs = next.max_abs().into_iter().fold(0.0, f64::max);
            if max_abs > config.max_abs {
                return Err(TeacherError::Blowup { t, max_abs });
            }
            state = next;
            mass_in += db;
            t = if landed { t_snap } else { t + dt };
        }
        trajectory.times.push(t_snap);
        trajectory.states.push(state.clone());
        trajectory.boundary_mass_in.push(mass_in);
    }
    Ok(trajectory)
}

/// Writes one anchor CSV per snapshot plus an index listing times and the
/// cumulative boundary mass integral.
pub fn export_trajectory(traj: &Trajectory, dir: &std::path::Path) -> Result<(), TeacherError> {
    std::fs::create_dir_all(dir)?;
    let mut index = String::from("index,time,file,boundary_mass_in\n");
    for (j, state) in traj.states.iter().enumerate() {
        let name = format!("snapshot_{j:04}.csv");
        crate::output::atomic_write_str(
            &dir.join(&name),
            &crate::losses::anchor_state_to_csv(state),
        )?;
        index.push_str(&format!(
            "{j},{},{name},{}\n",
            traj.times[j], traj.boundary_mass_in[j]
        ));
    }
    crate::output::atomic_write_str(&dir.join("snapshots.csv"), &index)?;
    Ok(())
}

/// Reads a trajectory exported by [`export_trajectory`].
pub fn load_trajectory(dir: &std::path::Path, n_cells: usize) -> Result<Trajectory, TeacherError> {
    let index_path = dir.join("snapshots.csv");
    let text = std::fs::read_to_string(&index_path)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut boundary = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("index,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(TeacherError::Index(format!(
                "{}:{}: expected 4 fields",
                index_path.display(),
                i + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, TeacherError> {
            s.trim().parse().map_err(|_| {
                TeacherError::Index(format!(
                    "{}:{}: cannot parse '{s}'",
                    index_path.display(),
                    i + 1
                ))
            })
        };
        times.push(parse(fields[1])?);
        boundary.push(parse(fields[3])?);
        states.push(crate::losses::load_anchor_state(&dir.join(fields[2].trim()), n_cells)?);
    }
    if times.len() < 2 {
        return Err(TeacherError::Index("trajectory needs at least two snapshots".into()));
    }
    Ok(Trajectory { times, states, boundary_mass_in: boundary })
}
