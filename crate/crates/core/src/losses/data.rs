//! Observation and anchor-snapshot data: CSV formats and noise injection.
//!
//! Observation files (header required):
//! `x,y,t,h,u,v,mask_h,mask_u,mask_v` with masks in {0,1}; masked-off value
//! fields may be empty. Anchor snapshots: `cell_id,xi,uh,vh`, one file per
//! snapshot time.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::mesh::Mesh;
use crate::physics::State;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("observation {index} at ({x}, {y}) lies outside the mesh")]
    OutsideDomain { index: usize, x: f64, y: f64 },
    #[error("anchor snapshot covers {got} cells, mesh has {expected}")]
    CellCountMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One masked point measurement in primitive variables.
#[derive(Debug, Clone, Copy)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    /// Containing cell, resolved at load time (supplies h_s).
    pub cell: usize,
    pub h: Option<f64>,
    pub u: Option<f64>,
    pub v: Option<f64>,
    /// Relative weight inside the pooled data loss (default 1).
    pub weight: f64,
}

impl Observation {
    pub fn n_observed(&self) -> usize {
        self.h.is_some() as usize + self.u.is_some() as usize + self.v.is_some() as usize
    }
}

/// A full-mesh reference state at one time, compared in perturbation space.
#[derive(Debug, Clone)]
pub struct AnchorSnapshot {
    pub t: f64,
    pub state: State,
    /// Relative weight inside the pooled data loss (default 1).
    pub weight: f64,
}

pub fn load_observations(path: &Path, mesh: &Mesh) -> Result<Vec<Observation>, DataError> {
    let text = std::fs::read_to_string(path)?;
    parse_observations(&text, mesh, &path.display().to_string())
}

pub fn parse_observations(
    text: &str,
    mesh: &Mesh,
    origin: &str,
) -> Result<Vec<Observation>, DataError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => {
                return Err(DataError::Parse {
                    path: origin.into(),
                    line: 1,
                    msg: "empty observation file".into(),
                })
            }
        }
    };
    let expect = "x,y,t,h,u,v,mask_h,mask_u,mask_v";
    if header.1.trim() != expect {
        return Err(DataError::Parse {
            path: origin.into(),
            line: header.0 + 1,
            msg: format!("header must be '{expect}'"),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| DataError::Parse { path: origin.into(), line: i + 1, msg };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64, DataError> {
            s.parse().map_err(|_| DataError::Parse {
                path: origin.into(),
                line: i + 1,
                msg: format!("cannot parse {what} from '{s}'"),
            })
        };
        let mask = |s: &str, what: &str| -> Result<bool, DataError> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(DataError::Parse {
                    path: origin.into(),
                    line: i + 1,
                    msg: format!("{what} must be 0 or 1, got '{s}'"),
                }),
            }
        };
        let x = num(f[0], "x")?;
        let y = num(f[1], "y")?;
        let t = num(f[2], "t")?;
        let (mh, mu, mv) = (mask(f[6], "mask_h")?, mask(f[7], "mask_u")?, mask(f[8], "mask_v")?);
        if !(mh || mu || mv) {
            return Err(err("observation must have at least one component observed".into()));
        }
        let value = |on: bool, s: &str, what: &str| -> Result<Option<f64>, DataError> {
            if on {
                Ok(Some(num(s, what)?))
            } else {
                Ok(None)
            }
        };
        let cell = mesh
            .locate_cell(x, y)
            .ok_or(DataError::OutsideDomain { index: out.len(), x, y })?;
        out.push(Observation {
            x,
            y,
            t,
            cell,
            h: value(mh, f[3], "h")?,
            u: value(mu, f[4], "u")?,
            v: value(mv, f[5], "v")?,
            weight: 1.0,
        });
    }
    Ok(out)
}

pub fn observations_to_csv(observations: &[Observation]) -> String {
    let mut s = String::from("x,y,t,h,u,v,mask_h,mask_u,mask_v\n");
    for o in observations {
        let field = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            o.x,
            o.y,
            o.t,
            field(o.h),
            field(o.u),
            field(o.v),
            o.h.is_some() as u8,
            o.u.is_some() as u8,
            o.v.is_some() as u8,
        ));
    }
    s
}

pub fn load_anchor_state(path: &Path, n_cells: usize) -> Result<State, DataError> {
    let text = std::fs::read_to_string(path)?;
    parse_anchor_state(&text, n_cells, &path.display().to_string())
}

pub fn parse_anchor_state(text: &str, n_cells: usize, origin: &str) -> Result<State, DataError> {
    let mut state = State::zeros(n_cells);
    let mut seen = vec![false; n_cells];
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "cell_id,xi,uh,vh") {
            continue;
        }
        let err = |msg: String| DataError::Parse { path: origin.into(), line: i + 1, msg };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let cell: usize =
            f[0].parse().map_err(|_| err(format!("cannot parse cell id '{}'", f[0])))?;
        if cell >= n_cells {
            return Err(err(format!("cell id {cell} out of range")));
        }
        if seen[cell] {
            return Err(err(format!("duplicate cell id {cell}")));
        }
        seen[cell] = true;
        count += 1;
        let num = |s: &str| -> Result<f64, DataError> {
            s.parse().map_err(|_| DataError::Parse {
                path: origin.into(),
                line: i + 1,
                msg: format!("cannot parse value '{s}'"),
            })
        };
        state.xi[cell] = num(f[1])?;
        state.uh[cell] = num(f[2])?;
        state.vh[cell] = num(f[3])?;
    }
    if count != n_cells {
        return Err(DataError::CellCountMismatch { got: count, expected: n_cells });
    }
    Ok(state)
}

pub fn anchor_state_to_csv(state: &State) -> String {
    let mut s = String::from("cell_id,xi,uh,vh\n");
    for i in 0..state.n_cells() {
        s.push_str(&format!("{},{},{},{}\n", i, state.xi[i], state.uh[i], state.vh[i]));
    }
    s
}

/// Adds zero-mean Gaussian noise with standard deviation
/// `level · max_j |u_j|` to every observed velocity component; depth values
/// are left untouched. Deterministic per seed.
pub fn add_noise(observations: &[Observation], level: f64, seed: u64) -> Vec<Observation> {
    if level == 0.0 {
        return observations.to_vec();
    }
    let max_speed = observations
        .iter()
        .map(|o| (o.u.unwrap_or(0.0).powi(2) + o.v.unwrap_or(0.0).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let sigma = level * max_speed;
    if sigma == 0.0 {
        return observations.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is positive");
    observations
        .iter()
        .map(|o| {
            let mut o = *o;
            if let Some(u) = o.u.as_mut() {
                *u += normal.sample(&mut rng);
            }
            if let Some(v) = o.v.as_mut() {
                *v += normal.sample(&mut rng);
            }
            o
        })
        .collect()
}
