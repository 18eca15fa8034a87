//! Shallow-water physics in perturbation form.
//!
//! The conserved state per cell is Q = (ξ, uh, vh) with ξ = h - h_s the
//! free-surface perturbation above the still-water depth
//! h_s = max(0, w_s - z_b). Fluxes carry the reformulated pressure
//! P = ½ g (ξ² + 2 ξ h_s), so a quiescent state (ξ ≡ 0, zero momentum) gives
//! identically zero face fluxes and sources over arbitrary bathymetry.
//!
//! Everything here is generic over [`Scalar`], so the same code path serves
//! the forward solver (f64), time tangents (`Dual<f64>`) and reverse-mode
//! training gradients (tape variables).

use crate::ad::Scalar;
use crate::mesh::{Mesh, PatchKind};

/// Per-cell state vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Free-surface perturbation ξ (m).
    pub xi: Vec<f64>,
    /// x specific discharge uh (m²/s).
    pub uh: Vec<f64>,
    /// y specific discharge vh (m²/s).
    pub vh: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        State { xi: vec![0.0; n], uh: vec![0.0; n], vh: vec![0.0; n] }
    }

    pub fn n_cells(&self) -> usize {
        self.xi.len()
    }

    pub fn rows(&self) -> Vec<[f64; 3]> {
        (0..self.n_cells()).map(|i| [self.xi[i], self.uh[i], self.vh[i]]).collect()
    }

    pub fn from_rows(rows: &[[f64; 3]]) -> Self {
        State {
            xi: rows.iter().map(|r| r[0]).collect(),
            uh: rows.iter().map(|r| r[1]).collect(),
            vh: rows.iter().map(|r| r[2]).collect(),
        }
    }

    pub fn max_abs(&self) -> [f64; 3] {
        let m = |v: &[f64]| v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
        [m(&self.xi), m(&self.uh), m(&self.vh)]
    }

    pub fn is_finite(&self) -> bool {
        self.xi.iter().chain(&self.uh).chain(&self.vh).all(|x| x.is_finite())
    }
}

/// Physical constants and roughness.
#[derive(Debug, Clone)]
pub struct PhysParams {
    /// Gravity (m/s²).
    pub g: f64,
    /// Water density (kg/m³).
    pub rho: f64,
    /// Manning coefficient per roughness zone (s·m^(-1/3)).
    pub manning: Vec<f64>,
    /// Depth floor for divisions (m).
    pub h_min: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams { g: 9.81, rho: 1000.0, manning: vec![0.0], h_min: 1e-6 }
    }
}

impl PhysParams {
    pub fn manning_for(&self, zone: usize) -> f64 {
        self.manning.get(zone).copied().unwrap_or(0.0)
    }
}

/// Bed description derived from the mesh.
#[derive(Debug, Clone)]
pub struct Bathymetry {
    /// Per-cell bed elevation, mean of the vertex elevations (m).
    pub z_b: Vec<f64>,
    /// Per-cell still-water depth max(0, w_s - z_b) (m).
    pub h_s: Vec<f64>,
    /// Per-face still-water depth (m), mirroring `Face::h_s`.
    pub h_s_face: Vec<f64>,
    /// Per-cell Green-Gauss bed gradient (1/A) Σ z_f ℓ_f n_f ≈ ∇z_b.
    pub bed_grad: Vec<[f64; 2]>,
}

impl Bathymetry {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let mut z_b = Vec::with_capacity(mesh.n_cells());
        let mut h_s = Vec::with_capacity(mesh.n_cells());
        let mut bed_grad = Vec::with_capacity(mesh.n_cells());
        for cell in &mesh.cells {
            let z = cell.node_ids.iter().map(|&v| mesh.nodes[v].z_b).sum::<f64>()
                / cell.node_ids.len() as f64;
            z_b.push(z);
            h_s.push((mesh.reference_ws - z).max(0.0));
            let mut gx = 0.0;
            let mut gy = 0.0;
            for &(fid, sign) in &cell.faces {
                let f = &mesh.faces[fid];
                gx += sign * f.z_b * f.length * f.normal[0];
                gy += sign * f.z_b * f.length * f.normal[1];
            }
            bed_grad.push([gx / cell.area, gy / cell.area]);
        }
        Bathymetry {
            z_b,
            h_s,
            h_s_face: mesh.faces.iter().map(|f| f.h_s).collect(),
            bed_grad,
        }
    }

    /// True when every cell and face keeps a positive still-water depth.
    pub fn fully_wet(&self) -> bool {
        self.h_s.iter().chain(&self.h_s_face).all(|&h| h > 0.0)
    }
}

/// Depth and velocities from one cell state: h = max(ξ + h_s, h_min),
/// u = uh/h, v = vh/h. Velocities are zero when the floor engages.
pub fn recover_primitives<S: Scalar>(q: [S; 3], h_s: f64, p: &PhysParams) -> (S, S, S) {
    let raw = q[0] + h_s;
    if raw.value() < p.h_min {
        (raw.lift(p.h_min), raw.lift(0.0), raw.lift(0.0))
    } else {
        (raw, q[1] / raw, q[2] / raw)
    }
}

/// Face-normal physical flux F·n_x + G·n_y of the perturbation-form system:
/// (h u_n, u_n uh + P n_x, u_n vh + P n_y) with P = ½ g (ξ² + 2 ξ h_s).
pub fn normal_flux<S: Scalar>(q: [S; 3], h_s_face: f64, normal: [f64; 2], p: &PhysParams) -> [S; 3] {
    let (h, u, v) = recover_primitives(q, h_s_face, p);
    let u_n = u * normal[0] + v * normal[1];
    let pressure = (q[0] * q[0] + q[0] * (2.0 * h_s_face)) * (0.5 * p.g);
    [
        h * u_n,
        u_n * q[1] + pressure * normal[0],
        u_n * q[2] + pressure * normal[1],
    ]
}

/// Roe linearisation at a face, in the frame rotated onto the face normal.
#[derive(Debug, Clone)]
pub struct RoeDecomposition<S> {
    /// Eigenvalues ũ_n - c̃, ũ_n, ũ_n + c̃ (ascending).
    pub lambda: [S; 3],
    /// |λ̃_k| after the entropy fix (k = 1, 3 only; λ̃₂ untouched).
    pub lambda_abs: [S; 3],
    /// Wave strengths for the jumps (Δξ, Δ(h u_n), Δ(h u_t)).
    pub alpha: [S; 3],
    pub u_n: S,
    pub u_t: S,
    pub c: S,
}

impl<S: Scalar> RoeDecomposition<S> {
    /// Right eigenvectors in physical components, momentum rotated back by
    /// (n_x, -n_y; n_y, n_x).
    pub fn right_eigenvectors(&self, normal: [f64; 2]) -> [[S; 3]; 3] {
        let [nx, ny] = normal;
        let back = |pn: S, pt: S| [pn * nx - pt * ny, pn * ny + pt * nx];
        let one = self.c.lift(1.0);
        let zero = self.c.lift(0.0);
        let [r1x, r1y] = back(self.lambda[0], self.u_t);
        let [r2x, r2y] = back(zero, one);
        let [r3x, r3y] = back(self.lambda[2], self.u_t);
        [[one, r1x, r1y], [zero, r2x, r2y], [one, r3x, r3y]]
    }
}

/// Harten-style smoothing of |λ̃| for the nonlinear waves: with
/// ε = max(0, λ̃ - λ_L, λ_R - λ̃), |λ̃| < ε is replaced by (λ̃²/ε + ε)/2.
fn entropy_fixed_abs<S: Scalar>(lambda: S, lambda_l: S, lambda_r: S) -> S {
    let zero = lambda.lift(0.0);
    let eps = (lambda - lambda_l).max(lambda_r - lambda).max(zero);
    let a = lambda.abs();
    if a.value() < eps.value() {
        (lambda * lambda / eps + eps) * 0.5
    } else {
        a
    }
}

/// Builds the Roe averages, wave strengths and entropy-fixed eigenvalues for
/// a face. Both sides recover depth with the shared face h_s, so lake-at-rest
/// jumps vanish identically across bathymetry changes.
pub fn roe_decompose<S: Scalar>(
    q_l: [S; 3],
    q_r: [S; 3],
    h_s_face: f64,
    normal: [f64; 2],
    p: &PhysParams,
) -> RoeDecomposition<S> {
    let [nx, ny] = normal;
    let (h_l, u_l, v_l) = recover_primitives(q_l, h_s_face, p);
    let (h_r, u_r, v_r) = recover_primitives(q_r, h_s_face, p);
    let un_l = u_l * nx + v_l * ny;
    let ut_l = v_l * nx - u_l * ny;
    let un_r = u_r * nx + v_r * ny;
    let ut_r = v_r * nx - u_r * ny;

    let sl = h_l.sqrt();
    let sr = h_r.sqrt();
    let denom = sl + sr;
    let u_n = (sl * un_l + sr * un_r) / denom;
    let u_t = (sl * ut_l + sr * ut_r) / denom;
    let c = ((h_l + h_r) * (0.5 * p.g)).sqrt();

    let d1 = q_r[0] - q_l[0];
    let d2 = h_r * un_r - h_l * un_l;
    let d3 = h_r * ut_r - h_l * ut_l;

    let lambda = [u_n - c, u_n, u_n + c];
    let alpha = [
        ((u_n + c) * d1 - d2) / (c * 2.0),
        d3 - u_t * d1,
        (d2 - (u_n - c) * d1) / (c * 2.0),
    ];

    let c_l = (h_l * p.g).sqrt();
    let c_r = (h_r * p.g).sqrt();
    let lambda_abs = [
        entropy_fixed_abs(lambda[0], un_l - c_l, un_r - c_r),
        lambda[1].abs(),
        entropy_fixed_abs(lambda[2], un_l + c_l, un_r + c_r),
    ];

    RoeDecomposition { lambda, lambda_abs, alpha, u_n, u_t, c }
}

/// Roe approximate Riemann flux
/// ½ (F_n(Q_L) + F_n(Q_R)) - ½ Σ_k |λ̃_k| α̃_k r̃_k.
pub fn roe_flux<S: Scalar>(
    q_l: [S; 3],
    q_r: [S; 3],
    h_s_face: f64,
    normal: [f64; 2],
    p: &PhysParams,
) -> [S; 3] {
    let [nx, ny] = normal;
    let dec = roe_decompose(q_l, q_r, h_s_face, normal, p);
    let f_l = normal_flux(q_l, h_s_face, normal, p);
    let f_r = normal_flux(q_r, h_s_face, normal, p);

    let w1 = dec.lambda_abs[0] * dec.alpha[0];
    let w2 = dec.lambda_abs[1] * dec.alpha[1];
    let w3 = dec.lambda_abs[2] * dec.alpha[2];
    // Dissipation in the rotated frame; r̃₁ = (1, λ̃₁, ũ_t), r̃₂ = (0, 0, 1),
    // r̃₃ = (1, λ̃₃, ũ_t).
    let diss_mass = w1 + w3;
    let diss_n = w1 * dec.lambda[0] + w3 * dec.lambda[2];
    let diss_t = (w1 + w3) * dec.u_t + w2;
    // Momentum rotated back to physical components.
    let diss_x = diss_n * nx - diss_t * ny;
    let diss_y = diss_n * ny + diss_t * nx;
    [
        (f_l[0] + f_r[0] - diss_mass) * 0.5,
        (f_l[1] + f_r[1] - diss_x) * 0.5,
        (f_l[2] + f_r[2] - diss_y) * 0.5,
    ]
}

/// Momentum sources: Darcy–Weisbach friction from Manning roughness plus the
/// bed-slope coupling -g ξ ∇z_b that balances the pressure flux of a flat
/// free surface exactly (`bed_grad` is the Green-Gauss gradient used by the
/// flux divergence).
pub fn source_term<S: Scalar>(
    q: [S; 3],
    h_s_cell: f64,
    bed_grad: [f64; 2],
    manning_n: f64,
    p: &PhysParams,
) -> [S; 3] {
    let (h, u, v) = recover_primitives(q, h_s_cell, p);
    let zero = q[0].lift(0.0);
    let mut sx = zero;
    let mut sy = zero;
    if manning_n > 0.0 {
        let speed_sq = u * u + v * v;
        if speed_sq.value() > 0.0 {
            // (f/8)·√(u²+v²)·(u, v) with f = 8 g n² / h^(1/3).
            let coef = speed_sq.sqrt() / h.cbrt() * (p.g * manning_n * manning_n);
            sx = sx - coef * u;
            sy = sy - coef * v;
        }
    }
    sx = sx - q[0] * (p.g * bed_grad[0]);
    sy = sy - q[0] * (p.g * bed_grad[1]);
    [zero, sx, sy]
}

/// Boundary treatment resolved from a patch, ready for ghost-state
/// construction.
#[derive(Debug, Clone, Copy)]
pub enum GhostKind {
    /// Mirror: normal momentum negated, ξ and tangential momentum copied.
    Wall,
    /// Prescribed outward-normal specific discharge q_n (m²/s); inflow is
    /// negative along the outward normal, so q_n = -Q / patch width.
    Inlet { q_n: f64 },
    /// Prescribed surface perturbation ξ_bc = w_s - reference_ws.
    Exit { xi: f64 },
}

/// Resolves each boundary patch into its ghost recipe.
pub fn ghost_kinds(mesh: &Mesh) -> Vec<GhostKind> {
    mesh.patches
        .iter()
        .map(|patch| match patch.kind {
            PatchKind::Wall => GhostKind::Wall,
            PatchKind::InletDischarge => GhostKind::Inlet {
                q_n: -patch.value / patch.total_length,
            },
            PatchKind::ExitWse => GhostKind::Exit { xi: patch.value - mesh.reference_ws },
        })
        .collect()
}

/// Ghost state for a boundary face with outward normal `normal`.
///
/// Wall mirrors the normal momentum; inlet sets the ghost normal discharge to
/// 2 q_n - (interior) so the face mean matches the prescribed value, with zero
/// tangential momentum; exit mirrors ξ about the prescribed perturbation and
/// copies the momenta.
pub fn ghost_state<S: Scalar>(q_int: [S; 3], kind: GhostKind, normal: [f64; 2]) -> [S; 3] {
    let [nx, ny] = normal;
    let m_n = q_int[1] * nx + q_int[2] * ny;
    let m_t = q_int[2] * nx - q_int[1] * ny;
    let (xi, g_n, g_t) = match kind {
        GhostKind::Wall => (q_int[0], -m_n, m_t),
        GhostKind::Inlet { q_n } => (q_int[0], -m_n + 2.0 * q_n, m_t.lift(0.0)),
        GhostKind::Exit { xi } => (-q_int[0] + 2.0 * xi, m_n, m_t),
    };
    [xi, g_n * nx - g_t * ny, g_n * ny + g_t * nx]
}

/// Per-cell flux divergence minus sources, plus the net boundary mass inflow.
pub struct FluxBalance<S> {
    /// (1/A_i) Σ_f F̂ ℓ_f - S_i per cell; the semi-discrete system is
    /// dQ_i/dt = -div_i.
    pub div: Vec<[S; 3]>,
    /// Net mass inflow through the boundary, -Σ_boundary F̂_mass ℓ (m³/s).
    pub boundary_mass_in: S,
}

/// Assembles Roe fluxes over all faces (ghost states on the boundary) and
/// subtracts sources. Each interior flux is computed once and applied with
/// opposite signs, so interior contributions cancel exactly in the global
/// mass budget.
pub fn flux_balance<S: Scalar>(
    q: &[[S; 3]],
    mesh: &Mesh,
    bathy: &Bathymetry,
    ghosts: &[GhostKind],
    p: &PhysParams,
) -> FluxBalance<S> {
    assert_eq!(q.len(), mesh.n_cells());
    assert!(!q.is_empty());
    let zero = q[0][0].lift(0.0);
    let mut div = vec![[zero, zero, zero]; q.len()];
    let mut boundary_mass_in = zero;

    for face in &mesh.faces {
        let l = face.left_cell;
        let flux = match face.right_cell {
            Some(r) => {
                let f = roe_flux(q[l], q[r], face.h_s, face.normal, p);
                let scale_r = face.length / mesh.cells[r].area;
                for k in 0..3 {
                    div[r][k] = div[r][k] - f[k] * scale_r;
                }
                f
            }
            None => {
                let kind = ghosts[face.patch.expect("boundary face without patch")];
                let q_ghost = ghost_state(q[l], kind, face.normal);
                let f = roe_flux(q[l], q_ghost, face.h_s, face.normal, p);
                boundary_mass_in = boundary_mass_in - f[0] * face.length;
                f
            }
        };
        let scale_l = face.length / mesh.cells[l].area;
        for k in 0..3 {
            div[l][k] = div[l][k] + flux[k] * scale_l;
        }
    }

    for (i, cell) in mesh.cells.iter().enumerate() {
        let src = source_term(
            q[i],
            bathy.h_s[i],
            bathy.bed_grad[i],
            p.manning_for(cell.manning_zone),
            p,
        );
        for k in 0..3 {
            div[i][k] = div[i][k] - src[k];
        }
    }

    FluxBalance { div, boundary_mass_in }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::mesh::{strip_mesh, EndCondition};

    const P: f64 = 1e-13;

    fn params() -> PhysParams {
        PhysParams::default()
    }

    #[test]
    fn recover_basic_and_floor() {
        let p = params();
        let (h, u, v) = recover_primitives([0.0, 0.0, 0.0], 1.0, &p);
        assert_eq!((h, u, v), (1.0, 0.0, 0.0));
        let (h, u, _) = recover_primitives([0.5, 1.5, 0.0], 1.0, &p);
        assert_eq!(h, 1.5);
        assert!((u - 1.0).abs() < 1e-15);
        let (h, u, v) = recover_primitives([-2.0, 0.0, 0.0], 1.0, &p);
        assert_eq!((h, u, v), (1e-6, 0.0, 0.0));
    }

    #[test]
    fn normal_flux_values() {
        let p = params();
        let f = normal_flux([0.0, 0.0, 0.0], 2.0, [1.0, 0.0], &p);
        assert_eq!(f, [0.0, 0.0, 0.0]);

        // ξ=0.5, uh=1, h_s=1: u_n = 1/1.5, P = 0.5·9.81·1.25 = 6.13125.
        let f = normal_flux([0.5, 1.0, 0.0], 1.0, [1.0, 0.0], &p);
        assert!((f[0] - 1.0).abs() < P);
        assert!((f[1] - (1.0 / 1.5 + 6.13125)).abs() < P);
        assert_eq!(f[2], 0.0);

        let f = normal_flux([0.5, 1.0, 0.0], 1.0, [0.0, 1.0], &p);
        assert!(f[0].abs() < P && f[1].abs() < P);
        assert!((f[2] - 6.13125).abs() < P);
    }

    #[test]
    fn roe_consistency_equals_normal_flux() {
        let p = params();
        let q = [0.3, 0.7, -0.2];
        let n = [0.6, 0.8];
        let roe = roe_flux(q, q, 1.2, n, &p);
        let phys = normal_flux(q, 1.2, n, &p);
        for k in 0..3 {
            assert_eq!(roe[k], phys[k], "identical states leave no dissipation");
        }
    }

    #[test]
    fn roe_lake_at_rest_is_exactly_zero() {
        let p = params();
        // Shared face h_s despite different cell beds.
        let q = [0.0, 0.0, 0.0];
        let f = roe_flux(q, q, 0.73, [0.3_f64.cos(), 0.3_f64.sin()], &p);
        assert_eq!(f, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn roe_antisymmetry() {
        let p = params();
        let q_l = [0.4, 1.1, -0.3];
        let q_r = [-0.2, 0.5, 0.9];
        let n = [0.28, 0.96];
        let f = roe_flux(q_l, q_r, 1.5, n, &p);
        let g = roe_flux(q_r, q_l, 1.5, [-n[0], -n[1]], &p);
        for k in 0..3 {
            let scale = f[k].abs().max(1.0);
            assert!((f[k] + g[k]).abs() <= 1e-13 * scale, "component {k}: {} vs {}", f[k], g[k]);
        }
    }

    #[test]
    fn roe_eigenvalue_ordering() {
        let p = params();
        let dec = roe_decompose([1.0, 3.0, -1.0], [-0.4, -2.0, 0.5], 1.0, [1.0, 0.0], &p);
        assert!(dec.lambda[0] <= dec.lambda[1] && dec.lambda[1] <= dec.lambda[2]);
        assert!(dec.c >= 0.0);
    }

    #[test]
    fn roe_rotation_invariance() {
        // Rotating normal and momenta together leaves the mass flux unchanged
        // and rotates the momentum flux.
        let p = params();
        let (uh_l, vh_l) = (0.8, -0.1);
        let (uh_r, vh_r) = (0.2, 0.4);
        let theta = 0.7_f64;
        let (c, s) = (theta.cos(), theta.sin());
        let rot = |x: f64, y: f64| (c * x - s * y, s * x + c * y);

        let f0 = roe_flux([0.3, uh_l, vh_l], [0.1, uh_r, vh_r], 1.0, [1.0, 0.0], &p);
        let (ul, vl) = rot(uh_l, vh_l);
        let (ur, vr) = rot(uh_r, vh_r);
        let f1 = roe_flux([0.3, ul, vl], [0.1, ur, vr], 1.0, [c, s], &p);
        let (fx, fy) = rot(f0[1], f0[2]);
        assert!((f0[0] - f1[0]).abs() < 1e-13);
        assert!((fx - f1[1]).abs() < 1e-13);
        assert!((fy - f1[2]).abs() < 1e-13);
    }

    #[test]
    fn roe_dam_break_face_matches_frozen_oracle() {
        // h_L = 2, h_R = 0.5 at rest over h_s_face = 1; the reference value
        // comes from the eigendecomposition oracle exercised live in the
        // acceptance suite.
        let p = params();
        let f = roe_flux([1.0, 0.0, 0.0], [-0.5, 0.0, 0.0], 1.0, [1.0, 0.0], &p);
        // Mass: c̃·0.75 with c̃ = √(g·1.25); momentum: ½ (P_L + P_R);
        // the symmetric at-rest jump leaves no momentum dissipation.
        let expected = [2.6263389442339693, 5.518125, 0.0];
        for k in 0..3 {
            assert!(
                (f[k] - expected[k]).abs() <= 1e-12 * expected[k].abs().max(1.0),
                "component {k}: {} vs {}",
                f[k],
                expected[k]
            );
        }
    }

    #[test]
    fn source_rest_state_is_zero() {
        let p = params();
        let s = source_term([0.0, 0.0, 0.0], 1.0, [0.3, -0.2], 0.05, &p);
        assert_eq!(s, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn source_friction_value() {
        // Flat bed, h=1, u=1: f = 8·9.81·4e-4 = 0.031392, (f/8)·1·1 = 0.0039240.
        let p = params();
        let s = source_term([0.0, 1.0, 0.0], 1.0, [0.0, 0.0], 0.02, &p);
        assert!((s[1] + 0.0039240).abs() < 1e-10, "{}", s[1]);
        assert_eq!(s[2], 0.0);
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn source_pure_bed_slope_without_friction() {
        let p = params();
        let grad = [0.05, -0.02];
        let xi = 0.3;
        let s = source_term([xi, 0.4, -0.1], 1.0, grad, 0.0, &p);
        assert!((s[1] + p.g * xi * grad[0]).abs() < 1e-15);
        assert!((s[2] + p.g * xi * grad[1]).abs() < 1e-15);
    }

    #[test]
    fn ghost_states() {
        let n = [1.0, 0.0];
        // Wall mirror in rotated components.
        let g = ghost_state([0.1, 1.0, 0.5], GhostKind::Wall, n);
        assert_eq!(g, [0.1, -1.0, 0.5]);
        // Inlet: ghost u_n h = 2 q_n - interior.
        let g = ghost_state([0.0, 0.3, 0.2], GhostKind::Inlet { q_n: 0.5 }, n);
        assert!((g[1] - 0.7).abs() < 1e-15);
        assert_eq!(g[2], 0.0);
        // Exit mirrors ξ about the prescribed perturbation.
        let g = ghost_state([0.2, 0.3, -0.1], GhostKind::Exit { xi: 0.0 }, n);
        assert_eq!(g, [-0.2, 0.3, -0.1]);
    }

    #[test]
    fn ghost_wall_mirror_general_normal() {
        let n = [0.6, 0.8];
        let q = [0.05, 0.9, -0.4];
        let g = ghost_state(q, GhostKind::Wall, n);
        let m_n_int = q[1] * n[0] + q[2] * n[1];
        let m_n_ghost = g[1] * n[0] + g[2] * n[1];
        let m_t_int = q[2] * n[0] - q[1] * n[1];
        let m_t_ghost = g[2] * n[0] - g[1] * n[1];
        assert!((m_n_ghost + m_n_int).abs() < 1e-15);
        assert!((m_t_ghost - m_t_int).abs() < 1e-15);
    }

    #[test]
    fn flux_balance_well_balanced_on_bumpy_bed() {
        let mesh = strip_mesh(
            10.0,
            20,
            0.5,
            2.0,
            |x| 0.5 * (0.7 * x).sin().powi(2),
            EndCondition::wall(),
            EndCondition::wall(),
        )
        .unwrap();
        let bathy = Bathymetry::from_mesh(&mesh);
        assert!(bathy.fully_wet());
        let p = params();
        let ghosts = ghost_kinds(&mesh);
        let q = vec![[0.0, 0.0, 0.0]; mesh.n_cells()];
        let bal = flux_balance(&q, &mesh, &bathy, &ghosts, &p);
        for row in &bal.div {
            assert_eq!(*row, [0.0, 0.0, 0.0], "lake at rest must be algebraically steady");
        }
        assert_eq!(bal.boundary_mass_in, 0.0);
    }

    #[test]
    fn flux_balance_constant_offset_surface_is_steady() {
        // A flat free surface above (or below) the reference elevation is
        // still a lake at rest; the Green-Gauss bed term must cancel the
        // pressure divergence exactly.
        let mesh = strip_mesh(
            10.0,
            16,
            0.5,
            2.0,
            |x| 0.3 * (1.1 * x).cos().powi(2),
            EndCondition::wall(),
            EndCondition::wall(),
        )
        .unwrap();
        let bathy = Bathymetry::from_mesh(&mesh);
        let p = params();
        let ghosts = ghost_kinds(&mesh);
        let q = vec![[0.25, 0.0, 0.0]; mesh.n_cells()];
        let bal = flux_balance(&q, &mesh, &bathy, &ghosts, &p);
        for (i, row) in bal.div.iter().enumerate() {
            for k in 0..3 {
                assert!(row[k].abs() < 1e-12, "cell {i} component {k}: {}", row[k]);
            }
        }
    }

    #[test]
    fn flux_balance_two_cell_antisymmetric_update() {
        let mesh = strip_mesh(
            2.0,
            2,
            1.0,
            1.0,
            |_| 0.0,
            EndCondition::wall(),
            EndCondition::wall(),
        )
        .unwrap();
        let bathy = Bathymetry::from_mesh(&mesh);
        let p = params();
        let ghosts = ghost_kinds(&mesh);
        // Dam-break style jump between the two cells.
        let q = vec![[0.5, 0.0, 0.0], [-0.2, 0.0, 0.0]];
        let bal = flux_balance(&q, &mesh, &bathy, &ghosts, &p);
        let face = mesh.interior_faces().next().unwrap();
        let f = roe_flux(q[0], q[1], face.h_s, face.normal, &p);
        let a = mesh.cells[0].area;
        // Wall ghosts leave no boundary mass flux; the interior face drives
        // equal and opposite mass updates.
        assert!((bal.div[0][0] - f[0] * face.length / a).abs() < 1e-14);
        assert!((bal.div[1][0] + f[0] * face.length / a).abs() < 1e-14);
    }

    #[test]
    fn flux_balance_mass_budget_telescopes() {
        // Σ A_i (mass divergence) must equal -(net boundary inflow) to
        // rounding: interior faces cancel pairwise.
        let mesh = crate::mesh::channel_mesh(
            2.0,
            2.0,
            None,
            1.0,
            1.0,
            EndCondition::inlet(0.3),
            EndCondition::exit(1.05),
            |_, _| 0.0,
        )
        .unwrap();
        let bathy = Bathymetry::from_mesh(&mesh);
        let p = params();
        let ghosts = ghost_kinds(&mesh);
        let q = vec![
            [0.02, 0.15, 0.01],
            [-0.01, 0.12, -0.02],
            [0.03, 0.18, 0.0],
            [0.0, 0.1, 0.02],
        ];
        let bal = flux_balance(&q, &mesh, &bathy, &ghosts, &p);
        let total: f64 = bal
            .div
            .iter()
            .zip(&mesh.cells)
            .map(|(row, c)| row[0] * c.area)
            .sum();
        assert!(
            (total + bal.boundary_mass_in).abs() < 1e-13,
            "interior fluxes failed to cancel: {total} vs {}",
            bal.boundary_mass_in
        );
    }
}
