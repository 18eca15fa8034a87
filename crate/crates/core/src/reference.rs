//! Analytic and semi-analytic reference solutions: the wet-bed dam-break
//! Riemann problem, the parabolic bump bed, and lake-at-rest constructors.

use thiserror::Error;

use crate::mesh::Mesh;
use crate::physics::{Bathymetry, State};

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("invalid dam break: need h_L > h_R > 0, got h_L = {h_l}, h_R = {h_r}")]
    InvalidDamBreak { h_l: f64, h_r: f64 },
    #[error("domain is not fully wet at w_s = {w_s} (min clearance {min_clearance:.3e})")]
    PartiallyDry { w_s: f64, min_clearance: f64 },
    #[error("mesh reference surface {mesh_ws} differs from requested w_s = {w_s}")]
    ReferenceMismatch { mesh_ws: f64, w_s: f64 },
}

/// Wet-bed dam break over a flat bed: still water of depth `h_l` left of
/// `x0`, `h_r` right of it.
#[derive(Debug, Clone, Copy)]
pub struct DamBreakSpec {
    pub h_l: f64,
    pub h_r: f64,
    pub x0: f64,
    pub g: f64,
}

/// Exact solution: left rarefaction fan, constant middle state, right shock.
#[derive(Debug, Clone, Copy)]
pub struct StokerSolution {
    pub spec: DamBreakSpec,
    /// Middle-state depth between the fan and the shock (m).
    pub h_m: f64,
    /// Middle-state velocity (m/s).
    pub u_m: f64,
    /// Shock speed (m/s).
    pub shock_speed: f64,
}

impl DamBreakSpec {
    /// Solves the depth-compatibility relation by bisection on [h_R, h_L]
    /// to an interval width of 1e-12.
    pub fn solve(self) -> Result<StokerSolution, ReferenceError> {
        if !(self.h_l > self.h_r && self.h_r > 0.0) {
            return Err(ReferenceError::InvalidDamBreak { h_l: self.h_l, h_r: self.h_r });
        }
        let g = self.g;
        // Rarefaction: u = 2(√(g h_L) - √(g h)); shock: u from Rankine-Hugoniot.
        let f = |h: f64| {
            let rarefaction = 2.0 * ((g * self.h_l).sqrt() - (g * h).sqrt());
            let shock = (h - self.h_r) * (g * (h + self.h_r) / (2.0 * h * self.h_r)).sqrt();
            rarefaction - shock
        };
        let mut lo = self.h_r;
        let mut hi = self.h_l;
        debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h_m = 0.5 * (lo + hi);
        let u_m = 2.0 * ((g * self.h_l).sqrt() - (g * h_m).sqrt());
        // Mass conservation across the shock with the right state at rest.
        let shock_speed = h_m * u_m / (h_m - self.h_r);
        Ok(StokerSolution { spec: self, h_m, u_m, shock_speed })
    }
}

impl StokerSolution {
    /// Depth and velocity at position `x`, time `t ≥ 0`.
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64) {
        let s = self.spec;
        if t <= 0.0 {
            return if x < s.x0 { (s.h_l, 0.0) } else { (s.h_r, 0.0) };
        }
        let c_l = (s.g * s.h_l).sqrt();
        let c_m = (s.g * self.h_m).sqrt();
        let head = s.x0 - c_l * t;
        let tail = s.x0 + (self.u_m - c_m) * t;
        let shock = s.x0 + self.shock_speed * t;
        if x <= head {
            (s.h_l, 0.0)
        } else if x <= tail {
            // Inside the fan: u - c = (x - x0)/t and u + 2c = 2 c_L.
            let xi = (x - s.x0) / t;
            let c = (2.0 * c_l - xi) / 3.0;
            (c * c / s.g, xi + c)
        } else if x < shock {
            (self.h_m, self.u_m)
        } else {
            (s.h_r, 0.0)
        }
    }
}

/// Convenience wrapper solving the spec and evaluating one point.
pub fn stoker_dambreak(spec: DamBreakSpec, x: f64, t: f64) -> Result<(f64, f64), ReferenceError> {
    Ok(spec.solve()?.eval(x, t))
}

/// Parabolic bump bed: z_b = 0.2 - 0.05 (x - 10)² on 8 < x < 12, else 0.
pub fn bump_bed(x: f64) -> f64 {
    if x > 8.0 && x < 12.0 {
        0.2 - 0.05 * (x - 10.0) * (x - 10.0)
    } else {
        0.0
    }
}

/// Quiescent state (ξ ≡ 0, zero momentum) for a fully wet mesh whose
/// reference surface equals `w_s`.
pub fn lake_at_rest(mesh: &Mesh, w_s: f64) -> Result<State, ReferenceError> {
    if (mesh.reference_ws - w_s).abs() > 1e-12 {
        return Err(ReferenceError::ReferenceMismatch { mesh_ws: mesh.reference_ws, w_s });
    }
    let min_clearance = mesh
        .nodes
        .iter()
        .map(|n| w_s - n.z_b)
        .fold(f64::INFINITY, f64::min);
    if min_clearance <= 0.0 {
        return Err(ReferenceError::PartiallyDry { w_s, min_clearance });
    }
    Ok(State::zeros(mesh.n_cells()))
}

/// Recovered depth of the lake-at-rest state, per cell.
pub fn lake_at_rest_depths(mesh: &Mesh) -> Vec<f64> {
    Bathymetry::from_mesh(mesh).h_s
}
