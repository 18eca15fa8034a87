//! Property tests for the flux algebra, mesh geometry and data handling.

use proptest::prelude::*;

use swepinn::mesh::{channel_mesh, geometry_audit, strip_mesh, EndCondition};
use swepinn::network::Normalizer;
use swepinn::physics::{normal_flux, roe_decompose, roe_flux, PhysParams};

fn params() -> PhysParams {
    PhysParams::default()
}

/// Wet perturbation-form states over a given face still-water depth.
fn wet_state(h_s: f64) -> impl Strategy<Value = [f64; 3]> {
    ((-0.25 * h_s)..1.5_f64, -2.0..2.0_f64, -2.0..2.0_f64)
        .prop_map(|(xi, uh, vh)| [xi, uh, vh])
}

fn face() -> impl Strategy<Value = ([f64; 3], [f64; 3], f64, [f64; 2])> {
    (0.3..2.0_f64, 0.0..std::f64::consts::TAU).prop_flat_map(|(h_s, theta)| {
        (wet_state(h_s), wet_state(h_s)).prop_map(move |(ql, qr)| {
            (ql, qr, h_s, [theta.cos(), theta.sin()])
        })
    })
}

proptest! {
    #[test]
    fn roe_consistency((q, _, h_s, n) in face()) {
        let p = params();
        let roe = roe_flux(q, q, h_s, n, &p);
        let phys = normal_flux(q, h_s, n, &p);
        for k in 0..3 {
            let scale = phys[k].abs().max(1.0);
            prop_assert!((roe[k] - phys[k]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn roe_antisymmetry((ql, qr, h_s, n) in face()) {
        let p = params();
        let f = roe_flux(ql, qr, h_s, n, &p);
        let g = roe_flux(qr, ql, h_s, [-n[0], -n[1]], &p);
        for k in 0..3 {
            let scale = f[k].abs().max(1.0);
            prop_assert!((f[k] + g[k]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn roe_eigenvalues_sorted((ql, qr, h_s, n) in face()) {
        let p = params();
        let dec = roe_decompose(ql, qr, h_s, n, &p);
        prop_assert!(dec.lambda[0] <= dec.lambda[1]);
        prop_assert!(dec.lambda[1] <= dec.lambda[2]);
        prop_assert!(dec.c >= 0.0);
        // Wave strengths reconstruct the state jump.
        let d1 = qr[0] - ql[0];
        prop_assert!((dec.alpha[0] + dec.alpha[2] - d1).abs() <= 1e-12 * d1.abs().max(1.0));
    }

    #[test]
    fn strip_meshes_close(n_cells in 1usize..40, length in 0.5..30.0_f64, width in 0.05..2.0_f64) {
        let mesh = strip_mesh(length, n_cells, width, 1.0, |x| 0.1 * (x * 0.7).sin(),
            EndCondition::wall(), EndCondition::wall()).unwrap();
        let report = geometry_audit(&mesh);
        prop_assert!(report.pass, "closure defect {}", report.max_closure_defect);
        prop_assert!((mesh.total_area() - length * width).abs() <= 1e-10 * length * width);
    }

    #[test]
    fn channel_meshes_close(nx in 2usize..12, ny in 2usize..8) {
        let lx = nx as f64 * 0.5;
        let ly = ny as f64 * 0.5;
        let mesh = channel_mesh(lx, ly, None, 0.5, 1.0,
            EndCondition::inlet(0.1), EndCondition::exit(1.0), |x, y| 0.02 * (x + y)).unwrap();
        let report = geometry_audit(&mesh);
        prop_assert!(report.pass);
        prop_assert!((mesh.total_area() - lx * ly).abs() <= 1e-10 * lx * ly);
    }

    #[test]
    fn normalizer_round_trip(x in -100.0..100.0_f64, y in -50.0..50.0_f64, t in 0.0..3600.0_f64) {
        let norm = Normalizer { mean: [3.0, -1.0, 1800.0], std: [12.0, 4.0, 1039.0] };
        let p = norm.normalize(x, y, t);
        let back = norm.denormalize(p);
        prop_assert!((back[0] - x).abs() <= 1e-10 * x.abs().max(1.0));
        prop_assert!((back[1] - y).abs() <= 1e-10 * y.abs().max(1.0));
        prop_assert!((back[2] - t).abs() <= 1e-10 * t.abs().max(1.0));
    }
}
