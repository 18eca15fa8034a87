//! Case configuration: a sectioned key-value text format.
//!
//! ```text
//! [case]
//! name = dam_break
//! output_dir = out/dam_break
//!
//! [mesh]
//! kind = strip
//! length = 20.0
//! n_cells = 100
//! ...
//! ```
//!
//! `#` starts a comment. Values are scalars, booleans, comma-separated lists
//! or strings. Command-line overrides use dotted paths (`train.adam_steps=200`).
//! Unknown keys are rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::losses::LossWeights;
use crate::mesh::{Block, EndCondition, PatchKind};
use crate::network::NetConfig;
use crate::physics::PhysParams;
use crate::training::{AdamConfig, LbfgsConfig, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("missing key [{section}] {key}")]
    Missing { section: String, key: String },
    #[error("[{section}] {key}: {msg}")]
    Invalid { section: String, key: String, msg: String },
    #[error("unknown keys: {0}")]
    UnknownKeys(String),
    #[error("bad override '{0}': expected section.key=value")]
    BadOverride(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default)]
struct Entry {
    value: String,
    line: usize,
    consumed: bool,
}

/// Parsed but untyped configuration.
#[derive(Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    origin: String,
    base_dir: PathBuf,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RawConfig::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn parse(text: &str, origin: &str) -> Result<RawConfig, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = Some(name.trim().to_string());
                sections.entry(name.trim().to_string()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    path: origin.into(),
                    line: i + 1,
                    msg: format!("expected 'key = value', got '{line}'"),
                });
            };
            let Some(section) = current.clone() else {
                return Err(ConfigError::Parse {
                    path: origin.into(),
                    line: i + 1,
                    msg: "key outside any [section]".into(),
                });
            };
            sections.get_mut(&section).unwrap().insert(
                key.trim().to_string(),
                Entry { value: value.trim().to_string(), line: i + 1, consumed: false },
            );
        }
        Ok(RawConfig { sections, origin: origin.into(), base_dir: PathBuf::new() })
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (path, value) =
            spec.split_once('=').ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
        let (section, key) =
            path.split_once('.').ok_or_else(|| ConfigError::BadOverride(spec.into()))?;
        self.sections.entry(section.trim().to_string()).or_default().insert(
            key.trim().to_string(),
            Entry { value: value.trim().to_string(), line: 0, consumed: false },
        );
        Ok(())
    }

    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.sections.get_mut(section).and_then(|s| {
            s.get_mut(key).map(|e| {
                e.consumed = true;
                e.value.clone()
            })
        })
    }

    pub fn get_str(&mut self, section: &str, key: &str) -> Option<String> {
        self.take(section, key)
    }

    pub fn req_str(&mut self, section: &str, key: &str) -> Result<String, ConfigError> {
        self.take(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.into(),
            key: key.into(),
        })
    }

    fn parse_as<T: std::str::FromStr>(
        section: &str,
        key: &str,
        v: &str,
    ) -> Result<T, ConfigError> {
        v.parse().map_err(|_| ConfigError::Invalid {
            section: section.into(),
            key: key.into(),
            msg: format!("cannot parse '{v}'"),
        })
    }

    pub fn get_or<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, ConfigError> {
        match self.take(section, key) {
            Some(v) => Self::parse_as(section, key, &v),
            None => Ok(default),
        }
    }

    pub fn req<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<T, ConfigError> {
        let v = self.req_str(section, key)?;
        Self::parse_as(section, key, &v)
    }

    pub fn get_opt<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
    ) -> Result<Option<T>, ConfigError> {
        match self.take(section, key) {
            Some(v) => Ok(Some(Self::parse_as(section, key, &v)?)),
            None => Ok(None),
        }
    }

    pub fn get_list_f64(
        &mut self,
        section: &str,
        key: &str,
        default: Vec<f64>,
    ) -> Result<Vec<f64>, ConfigError> {
        match self.take(section, key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| Self::parse_as(section, key, s.trim()))
                .collect::<Result<Vec<f64>, _>>(),
        }
    }

    pub fn resolve_path(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        if p.is_absolute() {
            p
        } else {
            self.base_dir.join(p)
        }
    }

    /// Errors on any key never consumed by the typed extraction.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let mut unknown = Vec::new();
        for (sec, entries) in &self.sections {
            for (key, e) in entries {
                if !e.consumed {
                    unknown.push(format!("[{sec}] {key} ({}:{})", self.origin, e.line));
                }
            }
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::UnknownKeys(unknown.join(", ")))
        }
    }
}

#[derive(Debug, Clone)]
pub enum MeshSpec {
    Strip {
        length: f64,
        n_cells: usize,
        width: f64,
        bed: BedProfile,
        left: EndCondition,
        right: EndCondition,
    },
    Channel {
        lx: f64,
        ly: f64,
        target_size: f64,
        block: Option<Block>,
        inlet_q: f64,
        exit_ws: f64,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BedProfile {
    Flat,
    Bump,
}

impl BedProfile {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BedProfile::Flat => 0.0,
            BedProfile::Bump => crate::reference::bump_bed(x),
        }
    }
}

#[derive(Debug, Clone)]
pub enum IcSpec {
    /// Quiescent with uniform depth (m).
    QuiescentDepth(f64),
    /// Quiescent with a flat surface at this elevation (m).
    QuiescentWs(f64),
    /// Two still-water depths split at x0.
    DamBreak { h_left: f64, h_right: f64, x0: f64 },
    /// Anchor-format CSV.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct DataSpec {
    pub observations: Option<PathBuf>,
    pub obs_weight: f64,
    /// Explicit anchor snapshots as (time, anchor CSV path).
    pub anchors: Vec<(f64, PathBuf)>,
    /// Directory holding an exported trajectory (snapshots.csv index).
    pub trajectory: Option<PathBuf>,
    pub anchor_weight: f64,
    /// Generate anchors with the in-loop forward solver at training start.
    pub teacher: bool,
    pub teacher_snapshots: usize,
    pub teacher_cfl: f64,
    pub noise_level: f64,
    pub seed_noise: u64,
}

#[derive(Debug, Clone)]
pub struct TeacherSpec {
    pub cfl: f64,
    pub dt: Option<f64>,
    pub n_snap: usize,
    pub t_end: f64,
}

#[derive(Debug, Clone)]
pub enum EvalReference {
    Stoker { h_left: f64, h_right: f64, x0: f64 },
    Trajectory(PathBuf),
    Anchors(Vec<(f64, PathBuf)>),
}

#[derive(Debug, Clone)]
pub struct EvalSpec {
    pub checkpoint: Option<PathBuf>,
    pub reference: Option<EvalReference>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LandscapeSpec {
    pub checkpoint: Option<PathBuf>,
    pub alphas: Vec<f64>,
    pub n_t: usize,
    pub seed: u64,
}

/// Fully typed case description.
#[derive(Debug, Clone)]
pub struct CaseConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub ref_ws: f64,
    pub mesh: MeshSpec,
    pub phys: PhysParams,
    pub ic: IcSpec,
    pub net: NetConfig,
    pub seed_init: u64,
    pub train: TrainConfig,
    pub weights: LossWeights,
    pub n_windows: usize,
    pub data: DataSpec,
    pub teacher: TeacherSpec,
    pub eval: EvalSpec,
    pub landscape: LandscapeSpec,
}

impl CaseConfig {
    pub fn from_raw(raw: &mut RawConfig) -> Result<CaseConfig, ConfigError> {
        let name = raw.get_str("case", "name").unwrap_or_else(|| "case".into());
        let output_dir = raw
            .get_str("case", "output_dir")
            .map(|s| raw.resolve_path(&s))
            .unwrap_or_else(|| PathBuf::from("out"));

        let ref_ws: f64 = raw.get_or("mesh", "ref_ws", 1.0)?;
        let kind = raw.req_str("mesh", "kind")?;
        let mesh = match kind.as_str() {
            "strip" => {
                let bed = match raw.get_str("mesh", "bed").as_deref().unwrap_or("flat") {
                    "flat" => BedProfile::Flat,
                    "bump" => BedProfile::Bump,
                    other => {
                        return Err(ConfigError::Invalid {
                            section: "mesh".into(),
                            key: "bed".into(),
                            msg: format!("unknown profile '{other}'"),
                        })
                    }
                };
                MeshSpec::Strip {
                    length: raw.req("mesh", "length")?,
                    n_cells: raw.req("mesh", "n_cells")?,
                    width: raw.req("mesh", "width")?,
                    bed,
                    left: end_condition(raw, "left")?,
                    right: end_condition(raw, "right")?,
                }
            }
            "channel" => {
                let block = match raw.get_str("mesh", "block") {
                    None => None,
                    Some(v) => {
                        let parts: Vec<f64> = v
                            .split_whitespace()
                            .map(|s| {
                                s.parse().map_err(|_| ConfigError::Invalid {
                                    section: "mesh".into(),
                                    key: "block".into(),
                                    msg: format!("cannot parse '{s}'"),
                                })
                            })
                            .collect::<Result<_, _>>()?;
                        if parts.len() != 4 {
                            return Err(ConfigError::Invalid {
                                section: "mesh".into(),
                                key: "block".into(),
                                msg: "expected 'cx cy size_x size_y'".into(),
                            });
                        }
                        Some(Block {
                            center: [parts[0], parts[1]],
                            size_x: parts[2],
                            size_y: parts[3],
                        })
                    }
                };
                MeshSpec::Channel {
                    lx: raw.req("mesh", "lx")?,
                    ly: raw.req("mesh", "ly")?,
                    target_size: raw.req("mesh", "target_size")?,
                    block,
                    inlet_q: raw.req("bc", "inlet_q")?,
                    exit_ws: raw.req("bc", "exit_ws")?,
                }
            }
            "file" => {
                let p = raw.req_str("mesh", "path")?;
                MeshSpec::File(raw.resolve_path(&p))
            }
            other => {
                return Err(ConfigError::Invalid {
                    section: "mesh".into(),
                    key: "kind".into(),
                    msg: format!("unknown mesh kind '{other}'"),
                })
            }
        };

        let phys = PhysParams {
            g: raw.get_or("physics", "g", 9.81)?,
            rho: raw.get_or("physics", "rho", 1000.0)?,
            manning: raw.get_list_f64("physics", "manning", vec![0.0])?,
            h_min: raw.get_or("physics", "h_min", 1e-6)?,
        };

        let ic = match raw.get_str("ic", "kind").as_deref().unwrap_or("quiescent") {
            "quiescent" => {
                if let Some(depth) = raw.get_opt::<f64>("ic", "depth")? {
                    IcSpec::QuiescentDepth(depth)
                } else if let Some(ws) = raw.get_opt::<f64>("ic", "ws")? {
                    IcSpec::QuiescentWs(ws)
                } else {
                    IcSpec::QuiescentWs(ref_ws)
                }
            }
            "dambreak" => IcSpec::DamBreak {
                h_left: raw.req("ic", "h_left")?,
                h_right: raw.req("ic", "h_right")?,
                x0: raw.req("ic", "x0")?,
            },
            "file" => {
                let p = raw.req_str("ic", "path")?;
                IcSpec::File(raw.resolve_path(&p))
            }
            other => {
                return Err(ConfigError::Invalid {
                    section: "ic".into(),
                    key: "kind".into(),
                    msg: format!("unknown ic kind '{other}'"),
                })
            }
        };

        let net = NetConfig {
            width: raw.get_or("network", "width", 64)?,
            layers: raw.get_or("network", "layers", 5)?,
            fourier: raw.get_or("network", "fourier", 32)?,
            sigma: raw.get_or("network", "sigma", 1.0)?,
            residual: raw.get_or("network", "residual", false)?,
        };
        let seed_init: u64 = raw.get_or("network", "seed", 1)?;

        let t0: f64 = raw.get_or("train", "t0", 0.0)?;
        let t_end: f64 = raw.req("train", "t_end")?;
        let train = TrainConfig {
            n_t: raw.get_or("train", "n_t", 5)?,
            t0,
            t_end,
            seed_sampling: raw.get_or("train", "seed_sampling", 7)?,
            adam: AdamConfig {
                lr: raw.get_or("train", "adam_lr", 1e-3)?,
                beta1: raw.get_or("train", "adam_beta1", 0.9)?,
                beta2: raw.get_or("train", "adam_beta2", 0.999)?,
                eps: raw.get_or("train", "adam_eps", 1e-8)?,
                decay_factor: raw.get_or("train", "adam_decay_factor", 1.0)?,
                decay_every: raw.get_or("train", "adam_decay_every", 0)?,
                steps: raw.get_or("train", "adam_steps", 0)?,
            },
            lbfgs: LbfgsConfig {
                memory: raw.get_or("train", "lbfgs_memory", 10)?,
                max_iters: raw.get_or("train", "lbfgs_iters", 0)?,
                c1: raw.get_or("train", "lbfgs_c1", 1e-4)?,
                c2: raw.get_or("train", "lbfgs_c2", 0.9)?,
                grad_tol: raw.get_or("train", "lbfgs_grad_tol", 1e-9)?,
            },
        };
        let weights = LossWeights {
            fvm: raw.get_or("train", "lambda_fvm", 1.0)?,
            bc: raw.get_or("train", "lambda_bc", 1.0)?,
            ic: raw.get_or("train", "lambda_ic", 1.0)?,
            data: raw.get_or("train", "lambda_data", 0.0)?,
        };
        let n_windows: usize = raw.get_or("windows", "count", 1)?;

        let anchors = parse_anchor_list(raw, "data", "anchors")?;
        let data = DataSpec {
            observations: raw.get_str("data", "observations").map(|s| raw.resolve_path(&s)),
            obs_weight: raw.get_or("data", "obs_weight", 1.0)?,
            anchors,
            trajectory: raw.get_str("data", "trajectory").map(|s| raw.resolve_path(&s)),
            anchor_weight: raw.get_or("data", "anchor_weight", 1.0)?,
            teacher: raw.get_or("data", "teacher", false)?,
            teacher_snapshots: raw.get_or("data", "teacher_snapshots", 11)?,
            teacher_cfl: raw.get_or("data", "teacher_cfl", 0.5)?,
            noise_level: raw.get_or("data", "noise_level", 0.0)?,
            seed_noise: raw.get_or("data", "seed_noise", 99)?,
        };

        let teacher = TeacherSpec {
            cfl: raw.get_or("teacher", "cfl", 0.5)?,
            dt: raw.get_opt("teacher", "dt")?,
            n_snap: raw.get_or("teacher", "n_snap", 11)?,
            t_end: raw.get_or("teacher", "t_end", t_end)?,
        };

        let eval_reference = match raw.get_str("eval", "reference").as_deref() {
            None => None,
            Some("stoker") => Some(EvalReference::Stoker {
                h_left: raw.req("eval", "h_left")?,
                h_right: raw.req("eval", "h_right")?,
                x0: raw.req("eval", "x0")?,
            }),
            Some("trajectory") => {
                let p = raw.req_str("eval", "trajectory")?;
                Some(EvalReference::Trajectory(raw.resolve_path(&p)))
            }
            Some("anchors") => {
                Some(EvalReference::Anchors(parse_anchor_list(raw, "eval", "anchors")?))
            }
            Some(other) => {
                return Err(ConfigError::Invalid {
                    section: "eval".into(),
                    key: "reference".into(),
                    msg: format!("unknown reference '{other}'"),
                })
            }
        };
        let eval = EvalSpec {
            checkpoint: raw.get_str("eval", "checkpoint").map(|s| raw.resolve_path(&s)),
            reference: eval_reference,
            times: raw.get_list_f64("eval", "times", vec![])?,
        };

        let landscape = LandscapeSpec {
            checkpoint: raw.get_str("landscape", "checkpoint").map(|s| raw.resolve_path(&s)),
            alphas: raw.get_list_f64(
                "landscape",
                "alphas",
                vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            )?,
            n_t: raw.get_or("landscape", "n_t", 10)?,
            seed: raw.get_or("landscape", "seed", 3)?,
        };

        Ok(CaseConfig {
            name,
            output_dir,
            ref_ws,
            mesh,
            phys,
            ic,
            net,
            seed_init,
            train,
            weights,
            n_windows,
            data,
            teacher,
            eval,
            landscape,
        })
    }
}

fn end_condition(raw: &mut RawConfig, side: &str) -> Result<EndCondition, ConfigError> {
    let kind = raw.get_str("bc", side).unwrap_or_else(|| "wall".into());
    let value_key = format!("{side}_value");
    let value: f64 = raw.get_or("bc", &value_key, 0.0)?;
    let kind = match kind.as_str() {
        "wall" => PatchKind::Wall,
        "inlet" | "inlet_discharge" => PatchKind::InletDischarge,
        "exit" | "exit_wse" => PatchKind::ExitWse,
        other => {
            return Err(ConfigError::Invalid {
                section: "bc".into(),
                key: side.into(),
                msg: format!("unknown boundary kind '{other}'"),
            })
        }
    };
    Ok(EndCondition { kind, value })
}

fn parse_anchor_list(
    raw: &mut RawConfig,
    section: &str,
    key: &str,
) -> Result<Vec<(f64, PathBuf)>, ConfigError> {
    let Some(v) = raw.get_str(section, key) else {
        return Ok(vec![]);
    };
    let mut out = Vec::new();
    for item in v.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (t, path) = item.split_once(':').ok_or_else(|| ConfigError::Invalid {
            section: section.into(),
            key: key.into(),
            msg: format!("expected 'time:path', got '{item}'"),
        })?;
        let t: f64 = t.trim().parse().map_err(|_| ConfigError::Invalid {
            section: section.into(),
            key: key.into(),
            msg: format!("cannot parse time '{t}'"),
        })?;
        out.push((t, raw.resolve_path(path.trim())));
    }
    Ok(out)
}

/// Loads, applies overrides, extracts, and rejects unknown keys.
pub fn load_case(path: &Path, overrides: &[String]) -> Result<CaseConfig, ConfigError> {
    let mut raw = RawConfig::load(path)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    let case = CaseConfig::from_raw(&mut raw)?;
    raw.finish()?;
    Ok(case)
}
