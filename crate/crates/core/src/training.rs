//! Two-phase training (Adam, then L-BFGS on frozen time samples) and
//! sequential time-window decomposition with initial-condition handoff.
//!
//! Adam resamples the residual time levels every step; the L-BFGS phase
//! freezes one draw so its objective is deterministic, as a quasi-Newton
//! line search requires. Windowed training chains sub-networks over
//! [τ_{k-1}, τ_k]: window k starts from window k-1's prediction at τ_{k-1}
//! (evaluated on every cell centroid) and warm-starts from its weights.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::losses::{loss_and_grad, predict_field, LossBreakdown, LossContext};
use crate::mesh::Mesh;
use crate::network::{NetConfig, Normalizer, SurrogateNet};
use crate::physics::{Bathymetry, State};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Learning-rate multiplier applied every `decay_every` steps.
    pub decay_factor: f64,
    /// 0 disables the step decay.
    pub decay_every: u64,
    pub steps: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_factor: 1.0,
            decay_every: 0,
            steps: 0,
        }
    }
}

impl AdamConfig {
    /// Learning rate in effect at a 1-based step index.
    pub fn lr_at(&self, step: u64) -> f64 {
        match step.checked_div(self.decay_every) {
            None => self.lr,
            Some(n) => self.lr * self.decay_factor.powi(n as i32),
        }
    }
}

/// First/second-moment accumulators.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n] }
    }
}

/// Standard bias-corrected Adam update; `step` is 1-based.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut [f64],
    grads: &[f64],
    step: u64,
    cfg: &AdamConfig,
) -> f64 {
    let lr = cfg.lr_at(step);
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    lr
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iters: u64,
    /// Strong-Wolfe sufficient-decrease constant.
    pub c1: f64,
    /// Strong-Wolfe curvature constant.
    pub c2: f64,
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig { memory: 10, max_iters: 0, c1: 1e-4, c2: 0.9, grad_tol: 1e-9 }
    }
}

/// One accepted L-BFGS iterate.
#[derive(Debug, Clone, Copy)]
pub struct LbfgsIterate {
    pub value: f64,
    pub grad_norm: f64,
    pub step_length: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsReport {
    pub iterates: Vec<LbfgsIterate>,
    pub converged: bool,
    /// Set when a line search failed and the best-so-far point was returned.
    pub line_search_failure: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

/// Limited-memory BFGS with a strong-Wolfe line search. The objective must
/// be deterministic for the duration of the call. Accepted iterates have
/// non-increasing loss; on line-search failure the best point seen so far is
/// returned with a warning flag in the report.
pub fn lbfgs_minimize<F>(
    params: &mut [f64],
    mut objective: F,
    cfg: &LbfgsConfig,
) -> LbfgsReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = params.len();
    let mut grad = vec![0.0; n];
    let mut value = objective(params, &mut grad);
    let mut report =
        LbfgsReport { iterates: Vec::new(), converged: false, line_search_failure: false };
    let mut history: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        std::collections::VecDeque::new();

    for _ in 0..cfg.max_iters {
        if inf_norm(&grad) <= cfg.grad_tol {
            report.converged = true;
            break;
        }

        // Two-loop recursion for d = -H g.
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for i in 0..n {
                d[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            for di in d.iter_mut() {
                *di *= gamma;
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (a - b) * s[i];
            }
        }

        let mut dg = dot(&d, &grad);
        if dg >= 0.0 {
            // Not a descent direction: drop the memory and steepest-descend.
            history.clear();
            d = grad.iter().map(|g| -g).collect();
            dg = dot(&d, &grad);
            if dg >= 0.0 {
                report.converged = true;
                break;
            }
        }

        match strong_wolfe(params, value, &grad, &d, dg, &mut objective, cfg) {
            Some(ls) => {
                let mut y_vec = vec![0.0; n];
                for i in 0..n {
                    y_vec[i] = ls.grad[i] - grad[i];
                }
                let s_vec: Vec<f64> = d.iter().map(|di| di * ls.alpha).collect();
                for i in 0..n {
                    params[i] += s_vec[i];
                }
                let sy = dot(&s_vec, &y_vec);
                if sy > 1e-10 * inf_norm(&s_vec) * inf_norm(&y_vec) {
                    if history.len() == cfg.memory {
                        history.pop_front();
                    }
                    history.push_back((s_vec, y_vec, 1.0 / sy));
                }
                value = ls.value;
                grad = ls.grad;
                report.iterates.push(LbfgsIterate {
                    value,
                    grad_norm: inf_norm(&grad),
                    step_length: ls.alpha,
                });
            }
            None => {
                report.line_search_failure = true;
                break;
            }
        }
    }
    if !report.converged && inf_norm(&grad) <= cfg.grad_tol {
        report.converged = true;
    }
    report
}

struct LineSearchResult {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
}

/// Strong-Wolfe line search (bracketing plus zoom with cubic interpolation).
fn strong_wolfe<F>(
    x: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    dg0: f64,
    objective: &mut F,
    cfg: &LbfgsConfig,
) -> Option<LineSearchResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const MAX_EVALS: usize = 30;
    let n = x.len();
    let mut trial = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut eval = |alpha: f64, trial: &mut Vec<f64>, grad: &mut Vec<f64>| -> (f64, f64) {
        for i in 0..n {
            trial[i] = x[i] + alpha * d[i];
        }
        let v = objective(trial, grad);
        (v, dot(grad, d))
    };

    let _ = g0;
    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut dg_prev = dg0;
    let mut alpha = 1.0;
    let mut bracket: Option<(f64, f64, f64, f64, f64, f64)> = None;

    for i in 0..MAX_EVALS {
        let (f_a, dg_a) = eval(alpha, &mut trial, &mut grad);
        if !f_a.is_finite() {
            // Retreat into the finite region.
            alpha = 0.5 * (alpha_prev + alpha);
            continue;
        }
        if f_a > f0 + cfg.c1 * alpha * dg0 || (i > 0 && f_a >= f_prev) {
            bracket = Some((alpha_prev, f_prev, dg_prev, alpha, f_a, dg_a));
            break;
        }
        if dg_a.abs() <= -cfg.c2 * dg0 {
            return Some(LineSearchResult { alpha, value: f_a, grad });
        }
        if dg_a >= 0.0 {
            bracket = Some((alpha, f_a, dg_a, alpha_prev, f_prev, dg_prev));
            break;
        }
        alpha_prev = alpha;
        f_prev = f_a;
        dg_prev = dg_a;
        alpha *= 2.0;
    }

    let (mut lo, mut f_lo, mut dg_lo, mut hi, mut f_hi, mut dg_hi) = bracket?;
    for _ in 0..MAX_EVALS {
        let a = cubic_min(lo, f_lo, dg_lo, hi, f_hi, dg_hi);
        let (f_a, dg_a) = eval(a, &mut trial, &mut grad);
        if f_a > f0 + cfg.c1 * a * dg0 || f_a >= f_lo {
            hi = a;
            f_hi = f_a;
            dg_hi = dg_a;
        } else {
            if dg_a.abs() <= -cfg.c2 * dg0 {
                return Some(LineSearchResult { alpha: a, value: f_a, grad });
            }
            if dg_a * (hi - lo) >= 0.0 {
                hi = lo;
                f_hi = f_lo;
                dg_hi = dg_lo;
            }
            lo = a;
            f_lo = f_a;
            dg_lo = dg_a;
        }
        if (hi - lo).abs() * inf_norm(d) < 1e-14 {
            break;
        }
    }
    // Accept the bracket low point if it at least satisfies sufficient decrease.
    if f_lo < f0 && lo > 0.0 {
        let (f_a, _) = eval(lo, &mut trial, &mut grad);
        return Some(LineSearchResult { alpha: lo, value: f_a, grad });
    }
    None
}

/// Minimiser of the cubic interpolant through two (α, f, f') samples, kept
/// inside the bracket with a safeguard.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let guard = 0.1 * (hi - lo);
    let candidate = if disc >= 0.0 {
        let d2 = disc.sqrt() * (b - a).signum();
        b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
    } else {
        0.5 * (a + b)
    };
    if candidate.is_finite() {
        candidate.clamp(lo + guard, hi - guard)
    } else {
        0.5 * (a + b)
    }
}

/// n_t values drawn i.i.d. uniformly from the closed interval [t0, t1].
pub fn sample_times<R: Rng>(n_t: usize, t0: f64, t1: f64, rng: &mut R) -> Vec<f64> {
    (0..n_t).map(|_| rng.random_range(t0..=t1)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Adam,
    Lbfgs,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Adam => "adam",
            Phase::Lbfgs => "lbfgs",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HistoryRow {
    pub step: u64,
    pub phase: Phase,
    pub loss: LossBreakdown,
    /// Adam learning rate, or the accepted L-BFGS step length.
    pub lr: f64,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainHistory {
    pub rows: Vec<HistoryRow>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,phase,loss_total,loss_fvm,loss_bc,loss_ic,loss_data,lr,wall_s\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{:.3}\n",
                r.step,
                r.phase.as_str(),
                r.loss.total,
                r.loss.fvm,
                r.loss.bc,
                r.loss.ic,
                r.loss.data,
                r.lr,
                r.wall_s
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    /// Residual time samples per step.
    pub n_t: usize,
    pub t0: f64,
    pub t_end: f64,
    pub seed_sampling: u64,
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
}

impl TrainConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // !(a > b) also rejects NaN
    fn validate(&self) -> Result<(), TrainError> {
        if self.n_t == 0 {
            return Err(TrainError::InvalidConfig("n_t must be at least 1".into()));
        }
        if !(self.t_end > self.t0) {
            return Err(TrainError::InvalidConfig("t_end must exceed t0".into()));
        }
        Ok(())
    }
}

/// Result of one training run; `aborted` carries a diagnostic when the loss
/// went non-finite (params then hold the last finite iterate).
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub history: TrainHistory,
    pub aborted: Option<String>,
}

/// Adam phase with per-step time resampling, then L-BFGS on one frozen draw.
pub fn train_standard(
    net: &SurrogateNet,
    params: Vec<f64>,
    ctx: &LossContext<'_>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_sampling);
    let mut params = params;
    let mut grad = vec![0.0; net.n_params()];
    let mut adam_state = AdamState::new(net.n_params());
    let mut history = TrainHistory::default();
    let mut last_good = params.clone();

    for step in 1..=cfg.adam.steps {
        let times = sample_times(cfg.n_t, cfg.t0, cfg.t_end, &mut rng);
        let loss = loss_and_grad(net, &params, ctx, &times, &mut grad);
        if !loss.is_finite() {
            return Ok(TrainOutcome {
                params: last_good,
                history,
                aborted: Some(format!("non-finite loss at adam step {step}")),
            });
        }
        last_good.copy_from_slice(&params);
        let lr = adam_step(&mut adam_state, &mut params, &grad, step, &cfg.adam);
        history.rows.push(HistoryRow {
            step,
            phase: Phase::Adam,
            loss,
            lr,
            wall_s: start.elapsed().as_secs_f64(),
        });
    }

    if cfg.lbfgs.max_iters > 0 {
        let frozen_times = sample_times(cfg.n_t, cfg.t0, cfg.t_end, &mut rng);
        let mut step = cfg.adam.steps;
        let mut aborted = None;
        {
            let objective = |p: &[f64], g: &mut [f64]| -> f64 {
                loss_and_grad(net, p, ctx, &frozen_times, g).total
            };
            let mut obj = objective;
            let report = lbfgs_minimize(&mut params, &mut obj, &cfg.lbfgs);
            for it in &report.iterates {
                step += 1;
                // Re-deriving the breakdown per iterate would double the cost;
                // record the total from the line search and fill the terms at
                // the end.
                history.rows.push(HistoryRow {
                    step,
                    phase: Phase::Lbfgs,
                    loss: LossBreakdown { total: it.value, ..LossBreakdown::default() },
                    lr: it.step_length,
                    wall_s: start.elapsed().as_secs_f64(),
                });
            }
            if report.line_search_failure {
                eprintln!("warning: L-BFGS line search failed; keeping best iterate");
            }
            if !params.iter().all(|p| p.is_finite()) {
                aborted = Some("non-finite parameters after L-BFGS".to_string());
                params = last_good.clone();
            }
        }
        // Fill the final breakdown on the last recorded row.
        if let Some(row) = history.rows.last_mut() {
            if row.phase == Phase::Lbfgs {
                let loss = crate::losses::eval_losses(net, &params, ctx, &frozen_times, 1.0);
                row.loss = loss;
            }
        }
        if aborted.is_some() {
            return Ok(TrainOutcome { params, history, aborted });
        }
    }

    Ok(TrainOutcome { params, history, aborted: None })
}

/// Strictly increasing window boundaries τ_0 < τ_1 < … < τ_N covering the
/// training interval.
#[derive(Debug, Clone)]
pub struct WindowPlan {
    pub boundaries: Vec<f64>,
}

impl WindowPlan {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // !(a > b) also rejects NaN
    pub fn uniform(t0: f64, t_end: f64, n_windows: usize) -> Result<Self, TrainError> {
        if n_windows == 0 {
            return Err(TrainError::InvalidConfig("need at least one window".into()));
        }
        if !(t_end > t0) {
            return Err(TrainError::InvalidConfig("t_end must exceed t0".into()));
        }
        let boundaries = (0..=n_windows)
            .map(|k| t0 + (t_end - t0) * k as f64 / n_windows as f64)
            .collect();
        Ok(WindowPlan { boundaries })
    }

    pub fn n_windows(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Window index owning time `t`: right-closed intervals (τ_{k-1}, τ_k],
    /// with t ≤ τ_0 dispatching to window 0.
    pub fn window_of(&self, t: f64) -> usize {
        let n = self.n_windows();
        for k in 0..n {
            if t <= self.boundaries[k + 1] {
                return k;
            }
        }
        n - 1
    }
}

/// Chain of per-window networks with their handoff initial states.
pub struct WindowedModel {
    pub plan: WindowPlan,
    pub nets: Vec<SurrogateNet>,
    pub params: Vec<Vec<f64>>,
    /// Initial state used by each window (window 0: the case IC; window k:
    /// window k-1's prediction at τ_k's left boundary).
    pub handoffs: Vec<State>,
}

impl WindowedModel {
    /// Prediction on all centroids at `t`, dispatched to the owning window.
    pub fn predict_field_at(&self, mesh: &Mesh, bathy: &Bathymetry, t: f64) -> State {
        let k = self.plan.window_of(t);
        predict_field(&self.nets[k], &self.params[k], mesh, bathy, t)
    }
}

/// Everything `train_windows` needs to build per-window contexts.
pub struct WindowedCase<'a> {
    pub mesh: &'a Mesh,
    pub phys: crate::physics::PhysParams,
    pub weights: crate::losses::LossWeights,
    pub ic: State,
    pub observations: Vec<crate::losses::Observation>,
    pub anchors: Vec<crate::losses::AnchorSnapshot>,
    pub net_cfg: NetConfig,
    pub seed_init: u64,
}

/// Sequential windowed training: window k trains on (τ_{k-1}, τ_k] with the
/// predecessor's terminal prediction as IC and its weights as warm start.
/// Data is assigned to the window whose half-open interval contains its
/// timestamp (boundary times belong to the earlier window).
pub fn train_windows(
    case: WindowedCase<'_>,
    cfg: &TrainConfig,
    plan: &WindowPlan,
) -> Result<(WindowedModel, TrainHistory), TrainError> {
    cfg.validate()?;
    let bathy = Bathymetry::from_mesh(case.mesh);
    let mut nets = Vec::with_capacity(plan.n_windows());
    let mut all_params: Vec<Vec<f64>> = Vec::with_capacity(plan.n_windows());
    let mut handoffs = Vec::with_capacity(plan.n_windows());
    let mut history = TrainHistory::default();
    let mut step_offset = 0;

    for k in 0..plan.n_windows() {
        let t_lo = plan.boundaries[k];
        let t_hi = plan.boundaries[k + 1];
        let norm = Normalizer::for_case(case.mesh, t_lo, t_hi);
        let (net, fresh_params) = SurrogateNet::init(case.net_cfg, norm, case.seed_init)
            .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        let params = if k == 0 {
            fresh_params
        } else {
            // Warm start from the previous window.
            all_params[k - 1].clone()
        };

        let ic = if k == 0 {
            case.ic.clone()
        } else {
            let prev: &SurrogateNet = &nets[k - 1];
            predict_field(prev, &all_params[k - 1], case.mesh, &bathy, t_lo)
        };
        handoffs.push(ic.clone());

        let in_window = |t: f64| (k == 0 && t == t_lo) || (t > t_lo && t <= t_hi);
        let observations: Vec<_> =
            case.observations.iter().filter(|o| in_window(o.t)).copied().collect();
        let anchors: Vec<_> =
            case.anchors.iter().filter(|a| in_window(a.t)).cloned().collect();

        let ctx = LossContext::new(
            case.mesh,
            case.phys.clone(),
            case.weights,
            ic,
            t_lo,
            observations,
            anchors,
        );
        let window_cfg = TrainConfig {
            t0: t_lo,
            t_end: t_hi,
            seed_sampling: cfg.seed_sampling.wrapping_add(k as u64),
            ..*cfg
        };
        let outcome = train_standard(&net, params, &ctx, &window_cfg)?;
        if let Some(msg) = outcome.aborted {
            return Err(TrainError::InvalidConfig(format!("window {k}: {msg}")));
        }
        for mut row in outcome.history.rows {
            row.step += step_offset;
            history.rows.push(row);
        }
        step_offset = history.rows.last().map(|r| r.step).unwrap_or(step_offset);
        nets.push(net);
        all_params.push(outcome.params);
    }

    Ok((WindowedModel { plan: plan.clone(), nets, params: all_params, handoffs }, history))
}
