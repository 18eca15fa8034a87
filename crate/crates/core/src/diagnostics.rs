//! Error metrics, the momentum-scaling loss-landscape sweep, and mass
//! conservation audits.

use crate::losses::{eval_losses, LossContext};
use crate::mesh::Mesh;
use crate::network::SurrogateNet;
use crate::physics::{recover_primitives, Bathymetry, PhysParams, State};
use crate::teacher::Trajectory;

/// Area-weighted RMS difference: sqrt(Σ A_i (p_i - r_i)² / Σ A_i).
pub fn l2_error(pred: &[f64], reference: &[f64], areas: &[f64]) -> f64 {
    assert_eq!(pred.len(), reference.len(), "field length mismatch");
    assert_eq!(pred.len(), areas.len(), "field/area length mismatch");
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..pred.len() {
        let d = pred[i] - reference[i];
        num += areas[i] * d * d;
        den += areas[i];
    }
    (num / den).sqrt()
}

pub fn linf_error(pred: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(pred.len(), reference.len(), "field length mismatch");
    pred.iter()
        .zip(reference)
        .map(|(p, r)| (p - r).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct ErrorEntry {
    pub var: &'static str,
    pub l2: f64,
    pub linf: f64,
}

/// L2/L∞ errors of the primitive fields at one evaluation time.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub time: f64,
    pub entries: Vec<ErrorEntry>,
}

/// Compares two cell states in primitive variables (h, u, v, |u|) and the
/// perturbation ξ.
pub fn error_report(
    mesh: &Mesh,
    bathy: &Bathymetry,
    phys: &PhysParams,
    pred: &State,
    reference: &State,
    time: f64,
) -> ErrorReport {
    let n = mesh.n_cells();
    assert_eq!(pred.n_cells(), n);
    assert_eq!(reference.n_cells(), n);
    let primitives = |s: &State| {
        let mut h = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut umag = Vec::with_capacity(n);
        for i in 0..n {
            let (hi, ui, vi) =
                recover_primitives([s.xi[i], s.uh[i], s.vh[i]], bathy.h_s[i], phys);
            h.push(hi);
            u.push(ui);
            v.push(vi);
            umag.push((ui * ui + vi * vi).sqrt());
        }
        (h, u, v, umag)
    };
    let areas: Vec<f64> = mesh.cells.iter().map(|c| c.area).collect();
    let (hp, up, vp, mp) = primitives(pred);
    let (hr, ur, vr, mr) = primitives(reference);
    let entry = |var, p: &[f64], r: &[f64]| ErrorEntry {
        var,
        l2: l2_error(p, r, &areas),
        linf: linf_error(p, r),
    };
    ErrorReport {
        time,
        entries: vec![
            entry("h", &hp, &hr),
            entry("u", &up, &ur),
            entry("v", &vp, &vr),
            entry("umag", &mp, &mr),
            entry("xi", &pred.xi, &reference.xi),
        ],
    }
}

pub fn reports_to_csv(reports: &[ErrorReport]) -> String {
    let mut s = String::from("time,var,l2,linf\n");
    for r in reports {
        for e in &r.entries {
            s.push_str(&format!("{},{},{},{}\n", r.time, e.var, e.l2, e.linf));
        }
    }
    s
}

/// Losses of the momentum-scaled predictor Q^α = (ξ, α uh, α vh) along a grid
/// of α values, on frozen evaluation times.
#[derive(Debug, Clone)]
pub struct LandscapeCurve {
    pub alphas: Vec<f64>,
    pub fvm: Vec<f64>,
    pub data: Vec<f64>,
    pub total: Vec<f64>,
}

impl LandscapeCurve {
    fn at(&self, alpha: f64) -> Option<usize> {
        self.alphas.iter().position(|&a| a == alpha)
    }

    /// FVM-loss ratio between the zero-momentum state and the trained one.
    pub fn fvm_ratio(&self) -> f64 {
        let (i0, i1) = (self.at(0.0).unwrap(), self.at(1.0).unwrap());
        self.fvm[i0] / self.fvm[i1]
    }

    pub fn data_ratio(&self) -> f64 {
        let (i0, i1) = (self.at(0.0).unwrap(), self.at(1.0).unwrap());
        self.data[i0] / self.data[i1]
    }
}

/// Sweeps the momentum scale; the depth output is untouched, so the ξ field
/// is identical at every α. The grid must contain α = 0 and α = 1.
pub fn alpha_sweep(
    net: &SurrogateNet,
    params: &[f64],
    ctx: &LossContext<'_>,
    alphas: &[f64],
    eval_times: &[f64],
) -> LandscapeCurve {
    assert!(
        alphas.contains(&0.0) && alphas.contains(&1.0),
        "alpha grid must include 0 and 1"
    );
    let mut curve = LandscapeCurve {
        alphas: alphas.to_vec(),
        fvm: Vec::with_capacity(alphas.len()),
        data: Vec::with_capacity(alphas.len()),
        total: Vec::with_capacity(alphas.len()),
    };
    for &alpha in alphas {
        let b = eval_losses(net, params, ctx, eval_times, alpha);
        curve.fvm.push(b.fvm);
        curve.data.push(b.data);
        curve.total.push(b.total);
    }
    curve
}

pub fn landscape_to_csv(curve: &LandscapeCurve) -> String {
    let mut s = String::from("alpha,loss_fvm,loss_data,loss_total\n");
    for i in 0..curve.alphas.len() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            curve.alphas[i], curve.fvm[i], curve.data[i], curve.total[i]
        ));
    }
    s
}

#[derive(Debug, Clone)]
pub struct AuditInterval {
    pub t0: f64,
    pub t1: f64,
    /// Δ Σ A_i ξ_i over the interval (m³).
    pub mass_change: f64,
    /// ∫ net boundary inflow dt over the interval (m³).
    pub boundary_integral: f64,
    pub defect: f64,
    /// Defect relative to the total water volume at the interval end.
    pub relative: f64,
}

#[derive(Debug, Clone)]
pub struct ConservationAudit {
    pub intervals: Vec<AuditInterval>,
    pub max_relative: f64,
    pub pass: bool,
}

pub const MASS_BUDGET_TOL: f64 = 1e-10;

/// Checks Δ(Σ A ξ) against the recorded time-integrated boundary mass flux
/// for every snapshot interval of a trajectory.
pub fn conservation_audit(
    traj: &Trajectory,
    mesh: &Mesh,
    bathy: &Bathymetry,
) -> ConservationAudit {
    let mass = |s: &State| -> f64 {
        s.xi.iter().zip(&mesh.cells).map(|(xi, c)| xi * c.area).sum()
    };
    let volume = |s: &State| -> f64 {
        s.xi
            .iter()
            .zip(&mesh.cells)
            .zip(&bathy.h_s)
            .map(|((xi, c), h_s)| (xi + h_s).max(0.0) * c.area)
            .sum()
    };
    let mut intervals = Vec::with_capacity(traj.times.len() - 1);
    let mut max_relative = 0.0_f64;
    for j in 0..traj.times.len() - 1 {
        let mass_change = mass(&traj.states[j + 1]) - mass(&traj.states[j]);
        let boundary_integral = traj.boundary_mass_in[j + 1] - traj.boundary_mass_in[j];
        let defect = (mass_change - boundary_integral).abs();
        let relative = defect / volume(&traj.states[j + 1]).max(1e-12);
        max_relative = max_relative.max(relative);
        intervals.push(AuditInterval {
            t0: traj.times[j],
            t1: traj.times[j + 1],
            mass_change,
            boundary_integral,
            defect,
            relative,
        });
    }
    ConservationAudit { intervals, max_relative, pass: max_relative <= MASS_BUDGET_TOL }
}

pub fn audit_to_csv(audit: &ConservationAudit) -> String {
    let mut s = String::from("t0,t1,mass_change,boundary_integral,defect,relative\n");
    for i in &audit.intervals {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i.t0, i.t1, i.mass_change, i.boundary_integral, i.defect, i.relative
        ));
    }
    s
}
