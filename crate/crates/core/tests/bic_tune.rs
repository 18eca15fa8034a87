//! Scratch tuning harness for the block-in-channel landscape criterion.
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swepinn::diagnostics::{alpha_sweep, error_report};
use swepinn::losses::{LossContext, LossWeights, Observation};
use swepinn::mesh::{channel_mesh, Block, EndCondition};
use swepinn::network::{NetConfig, Normalizer, SurrogateNet};
use swepinn::physics::{ghost_kinds, recover_primitives, PhysParams, State};
use swepinn::teacher::{run_teacher, TeacherConfig};
use swepinn::training::{sample_times, train_standard, AdamConfig, LbfgsConfig, TrainConfig};

#[test]
#[ignore]
fn tune_bic_landscape() {
    let t_end: f64 = std::env::var("BIC_T").map(|s| s.parse().unwrap()).unwrap_or(180.0);
    let width: usize = std::env::var("BIC_W").map(|s| s.parse().unwrap()).unwrap_or(48);
    let layers: usize = std::env::var("BIC_L").map(|s| s.parse().unwrap()).unwrap_or(4);
    let fourier: usize = std::env::var("BIC_M").map(|s| s.parse().unwrap()).unwrap_or(16);
    let steps: u64 = std::env::var("BIC_STEPS").map(|s| s.parse().unwrap()).unwrap_or(3000);
    let lbfgs_iters: u64 = std::env::var("BIC_LBFGS").map(|s| s.parse().unwrap()).unwrap_or(100);
    let n_t: usize = std::env::var("BIC_NT").map(|s| s.parse().unwrap()).unwrap_or(8);

    let mesh = channel_mesh(15.0, 5.0, Some(Block { center: [5.0, 2.5], size_x: 1.0, size_y: 1.0 }),
        0.5, 0.4, EndCondition::inlet(0.38), EndCondition::exit(0.4), |_, _| 0.0).unwrap();
    let bathy = swepinn::physics::Bathymetry::from_mesh(&mesh);
    let ghosts = ghost_kinds(&mesh);
    let phys = PhysParams { manning: vec![0.03], ..PhysParams::default() };
    let mut ic = State::zeros(mesh.n_cells());
    for i in 0..mesh.n_cells() { ic.xi[i] = 0.4 - bathy.h_s[i]; }
    let traj = run_teacher(&ic, &mesh, &bathy, &ghosts, &phys,
        &TeacherConfig { n_snap: 31, t_end, ..TeacherConfig::default() }).unwrap();
    let reference = traj.final_state().clone();
    let (rhs, _) = swepinn::teacher::rhs(&reference.rows(), &mesh, &bathy, &ghosts, &phys);
    let max_rhs = rhs.iter().flatten().fold(0.0_f64, |a, &b| a.max(b.abs()));
    println!("teacher end max |dQ/dt| = {max_rhs:.3e}");

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut observations = Vec::with_capacity(200);
    while observations.len() < 200 {
        let x = rng.random_range(0.0..15.0);
        let y = rng.random_range(0.0..5.0);
        let Some(cell) = mesh.locate_cell(x, y) else { continue };
        let (_, u, v) = recover_primitives(
            [reference.xi[cell], reference.uh[cell], reference.vh[cell]], bathy.h_s[cell], &phys);
        observations.push(Observation { x, y, t: t_end, cell, h: None, u: Some(u), v: Some(v), weight: 1.0 });
    }

    let weights = LossWeights { fvm: 1.0, bc: 30.0, ic: 10.0, data: 10.0 };
    let ctx = LossContext::new(&mesh, phys.clone(), weights, ic.clone(), 0.0, observations.clone(), vec![]);
    let net_cfg = NetConfig { width, layers, fourier, sigma: 1.0, residual: true };
    let (net, params0) = SurrogateNet::init(net_cfg, Normalizer::for_case(&mesh, 0.0, t_end), 1).unwrap();
    let cfg = TrainConfig {
        n_t, t0: 0.0, t_end, seed_sampling: 7,
        adam: AdamConfig { steps, lr: 1e-3, decay_factor: 0.5, decay_every: 2000, ..AdamConfig::default() },
        lbfgs: LbfgsConfig { max_iters: lbfgs_iters, ..LbfgsConfig::default() },
    };
    let cache = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/bic_tune_ckpt.bin");
    let trained = if cache.exists() && std::env::var("BIC_FRESH").is_err() {
        let (n2, p) = SurrogateNet::load_checkpoint(&cache).unwrap();
        assert_eq!(n2.n_params(), net.n_params());
        p
    } else {
        let t0 = std::time::Instant::now();
        let outcome = train_standard(&net, params0, &ctx, &cfg).unwrap();
        println!("trained {} steps (+{} lbfgs rows) in {:.1}s",
            steps, outcome.history.rows.len() as u64 - steps, t0.elapsed().as_secs_f64());
        assert!(outcome.aborted.is_none(), "{:?}", outcome.aborted);
        net.save_checkpoint(&outcome.params, &cache).unwrap();
        outcome.params
    };
    let outcome_params = trained;

    let pred = swepinn::losses::predict_field(&net, &outcome_params, &mesh, &bathy, t_end);
    let rep = error_report(&mesh, &bathy, &phys, &pred, &reference, t_end);
    let l2u = rep.entries.iter().find(|e| e.var == "umag").unwrap().l2;
    println!("data-guided l2(umag) = {l2u:.4e}");

    let alphas = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let times = sample_times(10, 0.0, t_end, &mut rng);
    let curve = alpha_sweep(&net, &outcome_params, &ctx, &alphas, &times);
    println!("-- uniform[0,T] sweep:");
    for i in 0..alphas.len() {
        println!("alpha {:>4}: fvm {:.6e}  data {:.6e}", alphas[i], curve.fvm[i], curve.data[i]);
    }
    println!("fvm ratio {:.3}, data ratio {:.3}", curve.fvm_ratio(), curve.data_ratio());

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let late = sample_times(10, 0.5 * t_end, t_end, &mut rng);
    let curve = alpha_sweep(&net, &outcome_params, &ctx, &alphas, &late);
    println!("-- late[T/2,T] sweep:");
    for i in 0..alphas.len() {
        println!("alpha {:>4}: fvm {:.6e}  data {:.6e}", alphas[i], curve.fvm[i], curve.data[i]);
    }
    println!("fvm ratio {:.3}, data ratio {:.3}", curve.fvm_ratio(), curve.data_ratio());

    for t in [2.0, 10.0, 30.0, 60.0, 120.0, 180.0_f64.min(t_end)] {
        let b1 = swepinn::losses::eval_losses(&net, &outcome_params, &ctx, &[t], 1.0);
        let b0 = swepinn::losses::eval_losses(&net, &outcome_params, &ctx, &[t], 0.0);
        println!("t {:>6}: fvm(1) {:.4e}  fvm(0) {:.4e}  ratio {:.2}", t, b1.fvm, b0.fvm, b0.fvm / b1.fvm);
    }
}
