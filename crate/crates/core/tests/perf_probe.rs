use std::time::Instant;

use swepinn::losses::{loss_and_grad, LossContext, LossWeights};
use swepinn::mesh::{strip_mesh, EndCondition};
use swepinn::network::{NetConfig, Normalizer, SurrogateNet};
use swepinn::physics::{PhysParams, State};

#[test]
fn probe_case1_step_cost() {
    let mesh = strip_mesh(20.0, 100, 0.2, 1.0, |_| 0.0, EndCondition::wall(), EndCondition::wall()).unwrap();
    let cfg = NetConfig { width: 64, layers: 5, fourier: 32, sigma: 2.0, residual: false };
    let (net, params) = SurrogateNet::init(cfg, Normalizer::for_case(&mesh, 0.0, 1.0), 1).unwrap();
    let ctx = LossContext::new(&mesh, PhysParams::default(),
        LossWeights { fvm: 1.0, bc: 5.0, ic: 20.0, data: 0.0 },
        State::zeros(mesh.n_cells()), 0.0, vec![], vec![]);
    let times = [0.1, 0.3, 0.5, 0.7, 0.9];
    let mut grad = vec![0.0; net.n_params()];
    // warmup
    let _ = loss_and_grad(&net, &params, &ctx, &times, &mut grad);
    let t = Instant::now();
    let n = 5;
    for _ in 0..n {
        let _ = loss_and_grad(&net, &params, &ctx, &times, &mut grad);
    }
    println!("case1-scale loss_and_grad: {:.1} ms/step ({} params)", t.elapsed().as_secs_f64() * 1000.0 / n as f64, net.n_params());
}
