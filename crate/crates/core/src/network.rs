//! Fourier-feature residual MLP surrogate mapping (x, y, t) to the
//! perturbation-form state (ξ, uh, vh).
//!
//! Inputs are z-score normalised, embedded as [cos(Bp); sin(Bp)] with a fixed
//! Gaussian frequency matrix B, and passed through tanh layers with optional
//! identity skips. The depth head applies softplus to η_raw + h_s so the
//! recovered depth h = ξ + h_s stays positive for any parameters.
//!
//! Two forward paths exist on purpose: a generic one over [`Scalar`] used for
//! reference checks and tape-mode tests, and a batched f64 path that carries
//! the time tangent as a dual component and caches activations for a
//! hand-written vector-Jacobian product. Training uses the batched path; its
//! agreement with the generic path is enforced by tests.

use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::ad::{sigmoid, softplus, Dual, Scalar};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetConfig {
    /// Hidden width.
    pub width: usize,
    /// Number of hidden tanh layers.
    pub layers: usize,
    /// Fourier feature count m; the embedding has dimension 2m.
    pub fourier: usize,
    /// Frequency scale σ of the Gaussian B entries.
    pub sigma: f64,
    /// Identity skip around every hidden layer whose input and output widths
    /// match.
    pub residual: bool,
}

impl NetConfig {
    fn validate(&self) -> Result<(), NetworkError> {
        if self.width == 0 || self.layers == 0 || self.fourier == 0 {
            return Err(NetworkError::InvalidConfig(
                "width, layers and fourier features must be positive".into(),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(NetworkError::InvalidConfig("sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Per-input z-score statistics for (x, y, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Normalizer {
    /// x, y statistics from the cell centroids, t from the uniform
    /// distribution over [t0, t1]. Degenerate components (all-equal
    /// coordinates) fall back to unit scale.
    pub fn for_case(mesh: &Mesh, t0: f64, t1: f64) -> Normalizer {
        let n = mesh.n_cells() as f64;
        let mut mean = [0.0_f64; 2];
        for c in &mesh.cells {
            mean[0] += c.centroid[0];
            mean[1] += c.centroid[1];
        }
        mean[0] /= n;
        mean[1] /= n;
        let mut var = [0.0_f64; 2];
        for c in &mesh.cells {
            var[0] += (c.centroid[0] - mean[0]).powi(2);
            var[1] += (c.centroid[1] - mean[1]).powi(2);
        }
        let guard = |s: f64| if s < 1e-12 { 1.0 } else { s };
        let t_mean = 0.5 * (t0 + t1);
        let t_std = (t1 - t0) / 12.0_f64.sqrt();
        Normalizer {
            mean: [mean[0], mean[1], t_mean],
            std: [guard((var[0] / n).sqrt()), guard((var[1] / n).sqrt()), guard(t_std)],
        }
    }

    pub fn normalize(&self, x: f64, y: f64, t: f64) -> [f64; 3] {
        [
            (x - self.mean[0]) / self.std[0],
            (y - self.mean[1]) / self.std[1],
            (t - self.mean[2]) / self.std[2],
        ]
    }

    pub fn denormalize(&self, p: [f64; 3]) -> [f64; 3] {
        [
            p[0] * self.std[0] + self.mean[0],
            p[1] * self.std[1] + self.mean[1],
            p[2] * self.std[2] + self.mean[2],
        ]
    }
}

/// Fixed random frequency matrix B (m×3) applied to normalised inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierEmbedding {
    pub m: usize,
    pub sigma: f64,
    /// Row-major m×3.
    pub b: Vec<f64>,
}

impl FourierEmbedding {
    /// [cos(Bp); sin(Bp)] for a normalised input p.
    pub fn embed<S: Scalar>(&self, p: [S; 3]) -> Vec<S> {
        let mut out = Vec::with_capacity(2 * self.m);
        for j in 0..self.m {
            let u = p[0] * self.b[3 * j] + p[1] * self.b[3 * j + 1] + p[2] * self.b[3 * j + 2];
            out.push(u.cos());
        }
        for j in 0..self.m {
            let u = p[0] * self.b[3 * j] + p[1] * self.b[3 * j + 1] + p[2] * self.b[3 * j + 2];
            out.push(u.sin());
        }
        out
    }
}

/// One evaluation point for the batched forward pass.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    /// Still-water depth used in the depth recovery at this point (m).
    pub h_s: f64,
}

#[derive(Debug, Clone)]
struct LayerSpan {
    w_off: usize,
    b_off: usize,
    d_in: usize,
    d_out: usize,
    skip: bool,
}

/// The surrogate: embedding, hidden layers, 3-output head, normaliser.
#[derive(Debug, Clone)]
pub struct SurrogateNet {
    pub cfg: NetConfig,
    pub norm: Normalizer,
    pub embedding: FourierEmbedding,
    layers: Vec<LayerSpan>,
    head: LayerSpan,
    n_params: usize,
    cache_stride: usize,
}

/// Points per work unit in the batched forward/VJP; fixed so that reduction
/// order (and hence bitwise output) is independent of thread count.
const BATCH_CHUNK: usize = 64;

impl SurrogateNet {
    /// Builds the net and its Xavier-uniform parameter vector; B entries are
    /// N(0, σ²). Deterministic per seed.
    pub fn init(
        cfg: NetConfig,
        norm: Normalizer,
        seed: u64,
    ) -> Result<(SurrogateNet, Vec<f64>), NetworkError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = cfg.fourier;
        let mut b = vec![0.0; 3 * m];
        if cfg.sigma > 0.0 {
            let normal = Normal::new(0.0, cfg.sigma)
                .map_err(|e| NetworkError::InvalidConfig(e.to_string()))?;
            for v in b.iter_mut() {
                *v = normal.sample(&mut rng);
            }
        }
        let embedding = FourierEmbedding { m, sigma: cfg.sigma, b };

        let mut layers = Vec::with_capacity(cfg.layers);
        let mut offset = 0;
        let mut d_in = 2 * m;
        for _ in 0..cfg.layers {
            let d_out = cfg.width;
            layers.push(LayerSpan {
                w_off: offset,
                b_off: offset + d_in * d_out,
                d_in,
                d_out,
                skip: cfg.residual && d_in == d_out,
            });
            offset += d_in * d_out + d_out;
            d_in = d_out;
        }
        let head = LayerSpan {
            w_off: offset,
            b_off: offset + d_in * 3,
            d_in,
            d_out: 3,
            skip: false,
        };
        offset += d_in * 3 + 3;

        let mut params = vec![0.0; offset];
        for span in layers.iter().chain(std::iter::once(&head)) {
            let a = (6.0 / (span.d_in + span.d_out) as f64).sqrt();
            for w in &mut params[span.w_off..span.w_off + span.d_in * span.d_out] {
                *w = rng.random_range(-a..=a);
            }
            // Biases stay zero.
        }

        let cache_stride = 4 * m + cfg.layers * 4 * cfg.width + 6;
        let net = SurrogateNet {
            cfg,
            norm,
            embedding,
            layers,
            head,
            n_params: offset,
            cache_stride,
        };
        Ok((net, params))
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Reference forward pass, generic over the scalar type. Inputs must be
    /// lifted into the same context as the parameters.
    pub fn forward_generic<S: Scalar>(&self, params: &[S], x: S, y: S, t: S, h_s: f64) -> [S; 3] {
        let p = [
            (x - self.norm.mean[0]) / self.norm.std[0],
            (y - self.norm.mean[1]) / self.norm.std[1],
            (t - self.norm.mean[2]) / self.norm.std[2],
        ];
        let mut a = self.embedding.embed(p);
        for span in &self.layers {
            let mut out = Vec::with_capacity(span.d_out);
            for r in 0..span.d_out {
                let mut z = params[span.b_off + r];
                let w_row = span.w_off + r * span.d_in;
                for c in 0..span.d_in {
                    z = z + params[w_row + c] * a[c];
                }
                let y_act = z.tanh();
                out.push(if span.skip { y_act + a[r] } else { y_act });
            }
            a = out;
        }
        let mut o = [params[self.head.b_off]; 3];
        for r in 0..3 {
            let mut z = params[self.head.b_off + r];
            let w_row = self.head.w_off + r * self.head.d_in;
            for c in 0..self.head.d_in {
                z = z + params[w_row + c] * a[c];
            }
            o[r] = z;
        }
        let h = (o[0] + h_s).softplus();
        [h - h_s, o[1], o[2]]
    }

    /// State prediction at a point (f64 path).
    pub fn predict(&self, params: &[f64], x: f64, y: f64, t: f64, h_s: f64) -> [f64; 3] {
        let pt = [EvalPoint { x, y, t, h_s }];
        let mut q = [[0.0; 3]];
        let mut qdot = [[0.0; 3]];
        let mut cache = self.new_cache(1);
        self.forward_batch(params, &pt, &mut q, &mut qdot, &mut cache);
        q[0]
    }

    /// Exact ∂Q/∂t at a point.
    pub fn time_partial(&self, params: &[f64], x: f64, y: f64, t: f64, h_s: f64) -> [f64; 3] {
        let pt = [EvalPoint { x, y, t, h_s }];
        let mut q = [[0.0; 3]];
        let mut qdot = [[0.0; 3]];
        let mut cache = self.new_cache(1);
        self.forward_batch(params, &pt, &mut q, &mut qdot, &mut cache);
        qdot[0]
    }

    pub fn new_cache(&self, n_points: usize) -> Vec<f64> {
        vec![0.0; self.cache_stride * n_points]
    }

    /// Batched forward pass carrying the t tangent; caches activations for
    /// [`SurrogateNet::vjp_batch`]. `q` and `qdot` receive (ξ, uh, vh) and
    /// their exact time partials.
    pub fn forward_batch(
        &self,
        params: &[f64],
        points: &[EvalPoint],
        q: &mut [[f64; 3]],
        qdot: &mut [[f64; 3]],
        cache: &mut [f64],
    ) {
        assert_eq!(points.len(), q.len());
        assert_eq!(points.len(), qdot.len());
        assert_eq!(cache.len(), self.cache_stride * points.len());
        let stride = self.cache_stride;
        q.par_chunks_mut(BATCH_CHUNK)
            .zip(qdot.par_chunks_mut(BATCH_CHUNK))
            .zip(cache.par_chunks_mut(stride * BATCH_CHUNK))
            .zip(points.par_chunks(BATCH_CHUNK))
            .for_each(|(((qs, qds), caches), pts)| {
                for i in 0..pts.len() {
                    self.forward_one(
                        params,
                        &pts[i],
                        &mut qs[i],
                        &mut qds[i],
                        &mut caches[i * stride..(i + 1) * stride],
                    );
                }
            });
    }

    fn forward_one(
        &self,
        params: &[f64],
        pt: &EvalPoint,
        q: &mut [f64; 3],
        qdot: &mut [f64; 3],
        cache: &mut [f64],
    ) {
        let m = self.embedding.m;
        let w = self.cfg.width;
        let p = self.norm.normalize(pt.x, pt.y, pt.t);
        let t_dot = 1.0 / self.norm.std[2];

        let (gamma, rest) = cache.split_at_mut(2 * m);
        let (gdot, mut rest) = rest.split_at_mut(2 * m);
        for j in 0..m {
            let b = &self.embedding.b[3 * j..3 * j + 3];
            let u = b[0] * p[0] + b[1] * p[1] + b[2] * p[2];
            let udot = b[2] * t_dot;
            let (s, c) = u.sin_cos();
            gamma[j] = c;
            gamma[m + j] = s;
            gdot[j] = -s * udot;
            gdot[m + j] = c * udot;
        }

        // a / adot always point at the previous layer's outputs.
        let mut a: &[f64] = gamma;
        let mut adot: &[f64] = gdot;
        for span in &self.layers {
            let (y_s, r1) = rest.split_at_mut(w);
            let (zdot_s, r2) = r1.split_at_mut(w);
            let (aout, r3) = r2.split_at_mut(w);
            let (adout, r4) = r3.split_at_mut(w);
            rest = r4;
            for r in 0..span.d_out {
                let w_row = &params[span.w_off + r * span.d_in..span.w_off + (r + 1) * span.d_in];
                let mut z = params[span.b_off + r];
                let mut zd = 0.0;
                for c in 0..span.d_in {
                    z += w_row[c] * a[c];
                    zd += w_row[c] * adot[c];
                }
                let y = z.tanh();
                let ydot = (1.0 - y * y) * zd;
                y_s[r] = y;
                zdot_s[r] = zd;
                if span.skip {
                    aout[r] = y + a[r];
                    adout[r] = ydot + adot[r];
                } else {
                    aout[r] = y;
                    adout[r] = ydot;
                }
            }
            a = aout;
            adot = adout;
        }

        let (o, rest2) = rest.split_at_mut(3);
        let odot = &mut rest2[..3];
        for r in 0..3 {
            let w_row =
                &params[self.head.w_off + r * self.head.d_in..self.head.w_off + (r + 1) * self.head.d_in];
            let mut z = params[self.head.b_off + r];
            let mut zd = 0.0;
            for c in 0..self.head.d_in {
                z += w_row[c] * a[c];
                zd += w_row[c] * adot[c];
            }
            o[r] = z;
            odot[r] = zd;
        }

        let eta = o[0] + pt.h_s;
        let h = softplus(eta);
        let sig = sigmoid(eta);
        *q = [h - pt.h_s, o[1], o[2]];
        *qdot = [sig * odot[0], odot[1], odot[2]];
    }

    /// Accumulates Σ_i (q̄_i · ∂q_i/∂θ + q̇̄_i · ∂q̇_i/∂θ) into `grad`, using
    /// the caches produced by [`SurrogateNet::forward_batch`] on the same
    /// points. Chunk results are reduced in fixed order, so the outcome is
    /// bitwise independent of the thread count.
    pub fn vjp_batch(
        &self,
        params: &[f64],
        points: &[EvalPoint],
        cache: &[f64],
        qbar: &[[f64; 3]],
        qdotbar: &[[f64; 3]],
        grad: &mut [f64],
    ) {
        assert_eq!(points.len(), qbar.len());
        assert_eq!(points.len(), qdotbar.len());
        assert_eq!(grad.len(), self.n_params);
        let stride = self.cache_stride;
        let chunk_grads: Vec<Vec<f64>> = points
            .par_chunks(BATCH_CHUNK)
            .zip(cache.par_chunks(stride * BATCH_CHUNK))
            .zip(qbar.par_chunks(BATCH_CHUNK))
            .zip(qdotbar.par_chunks(BATCH_CHUNK))
            .map(|(((pts, caches), qbs), qdbs)| {
                let mut g = vec![0.0; self.n_params];
                let mut scratch = VjpScratch::new(self);
                for i in 0..pts.len() {
                    self.vjp_one(
                        params,
                        &pts[i],
                        &caches[i * stride..(i + 1) * stride],
                        &qbs[i],
                        &qdbs[i],
                        &mut g,
                        &mut scratch,
                    );
                }
                g
            })
            .collect();
        for g in chunk_grads {
            for (acc, v) in grad.iter_mut().zip(&g) {
                *acc += v;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn vjp_one(
        &self,
        params: &[f64],
        pt: &EvalPoint,
        cache: &[f64],
        qbar: &[f64; 3],
        qdotbar: &[f64; 3],
        grad: &mut [f64],
        scratch: &mut VjpScratch,
    ) {
        let m = self.embedding.m;
        let w = self.cfg.width;
        let stride_embed = 4 * m;
        let gamma = &cache[..2 * m];
        let gdot = &cache[2 * m..4 * m];
        let layer_cache = |l: usize| {
            let base = stride_embed + l * 4 * w;
            let y = &cache[base..base + w];
            let zdot = &cache[base + w..base + 2 * w];
            let aout = &cache[base + 2 * w..base + 3 * w];
            let adout = &cache[base + 3 * w..base + 4 * w];
            (y, zdot, aout, adout)
        };
        let head_base = stride_embed + self.cfg.layers * 4 * w;
        let o = &cache[head_base..head_base + 3];
        let odot = &cache[head_base + 3..head_base + 6];

        // Head output transform: ξ = softplus(o0 + h_s) - h_s.
        let eta = o[0] + pt.h_s;
        let sig = sigmoid(eta);
        let obar = [
            qbar[0] * sig + qdotbar[0] * sig * (1.0 - sig) * odot[0],
            qbar[1],
            qbar[2],
        ];
        let odotbar = [qdotbar[0] * sig, qdotbar[1], qdotbar[2]];

        // Head affine backward.
        let (a_in, adot_in): (&[f64], &[f64]) = if self.cfg.layers > 0 {
            let (_, _, aout, adout) = layer_cache(self.cfg.layers - 1);
            (aout, adout)
        } else {
            (gamma, gdot)
        };
        let abar = &mut scratch.abar;
        let adbar = &mut scratch.adbar;
        abar[..self.head.d_in].fill(0.0);
        adbar[..self.head.d_in].fill(0.0);
        for r in 0..3 {
            let row = self.head.w_off + r * self.head.d_in;
            for c in 0..self.head.d_in {
                grad[row + c] += obar[r] * a_in[c] + odotbar[r] * adot_in[c];
                abar[c] += params[row + c] * obar[r];
                adbar[c] += params[row + c] * odotbar[r];
            }
            grad[self.head.b_off + r] += obar[r];
        }

        for l in (0..self.cfg.layers).rev() {
            let span = &self.layers[l];
            let (y, zdot, _, _) = layer_cache(l);
            let (a_in, adot_in): (&[f64], &[f64]) = if l == 0 {
                (gamma, gdot)
            } else {
                let (_, _, aout, adout) = layer_cache(l - 1);
                (aout, adout)
            };
            let abar_next = &mut scratch.abar_next;
            let adbar_next = &mut scratch.adbar_next;
            abar_next[..span.d_in].fill(0.0);
            adbar_next[..span.d_in].fill(0.0);
            if span.skip {
                abar_next[..span.d_in].copy_from_slice(&scratch.abar[..span.d_in]);
                adbar_next[..span.d_in].copy_from_slice(&scratch.adbar[..span.d_in]);
            }
            for r in 0..span.d_out {
                let ybar = scratch.abar[r];
                let ydotbar = scratch.adbar[r];
                let s = 1.0 - y[r] * y[r];
                let zbar = ybar * s - ydotbar * 2.0 * y[r] * s * zdot[r];
                let zdotbar = ydotbar * s;
                let row = span.w_off + r * span.d_in;
                grad[span.b_off + r] += zbar;
                for c in 0..span.d_in {
                    grad[row + c] += zbar * a_in[c] + zdotbar * adot_in[c];
                    abar_next[c] += params[row + c] * zbar;
                    adbar_next[c] += params[row + c] * zdotbar;
                }
            }
            std::mem::swap(&mut scratch.abar, &mut scratch.abar_next);
            std::mem::swap(&mut scratch.adbar, &mut scratch.adbar_next);
        }
    }

    /// Versioned binary checkpoint; round-trips bit-exactly.
    pub fn save_checkpoint(&self, params: &[f64], path: &Path) -> Result<(), NetworkError> {
        assert_eq!(params.len(), self.n_params);
        let mut buf = Vec::with_capacity(64 + 8 * (self.embedding.b.len() + params.len()));
        buf.extend_from_slice(MAGIC);
        push_u32(&mut buf, 1);
        push_u32(&mut buf, self.cfg.width as u32);
        push_u32(&mut buf, self.cfg.layers as u32);
        push_u32(&mut buf, self.cfg.fourier as u32);
        push_u32(&mut buf, self.cfg.residual as u32);
        push_f64(&mut buf, self.cfg.sigma);
        for v in self.norm.mean.iter().chain(&self.norm.std) {
            push_f64(&mut buf, *v);
        }
        for v in &self.embedding.b {
            push_f64(&mut buf, *v);
        }
        buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
        for v in params {
            push_f64(&mut buf, *v);
        }
        crate::output::atomic_write(path, &buf)?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<(SurrogateNet, Vec<f64>), NetworkError> {
        let mut file = std::fs::File::open(path)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;
        let mut r = Reader { buf: &buf, pos: 0 };
        if r.bytes(8)? != MAGIC {
            return Err(NetworkError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != 1 {
            return Err(NetworkError::Format(format!("unsupported version {version}")));
        }
        let cfg = NetConfig {
            width: r.u32()? as usize,
            layers: r.u32()? as usize,
            fourier: r.u32()? as usize,
            residual: r.u32()? != 0,
            sigma: 0.0,
        };
        let cfg = NetConfig { sigma: r.f64()?, ..cfg };
        let norm = Normalizer {
            mean: [r.f64()?, r.f64()?, r.f64()?],
            std: [r.f64()?, r.f64()?, r.f64()?],
        };
        let (mut net, _) = SurrogateNet::init(cfg, norm, 0)?;
        for v in net.embedding.b.iter_mut() {
            *v = r.f64()?;
        }
        let n = r.u64()? as usize;
        if n != net.n_params {
            return Err(NetworkError::Format(format!(
                "parameter count {n} does not match config ({})",
                net.n_params
            )));
        }
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            params.push(r.f64()?);
        }
        if r.pos != buf.len() {
            return Err(NetworkError::Format("trailing bytes".into()));
        }
        Ok((net, params))
    }
}

struct VjpScratch {
    abar: Vec<f64>,
    adbar: Vec<f64>,
    abar_next: Vec<f64>,
    adbar_next: Vec<f64>,
}

impl VjpScratch {
    fn new(net: &SurrogateNet) -> Self {
        let n = net.cfg.width.max(2 * net.embedding.m);
        VjpScratch {
            abar: vec![0.0; n],
            adbar: vec![0.0; n],
            abar_next: vec![0.0; n],
            adbar_next: vec![0.0; n],
        }
    }
}

const MAGIC: &[u8; 8] = b"SWEPNET1";

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_bits().to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn bytes(&mut self, n: usize) -> Result<&'a [u8], NetworkError> {
        if self.pos + n > self.buf.len() {
            return Err(NetworkError::Format("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NetworkError> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NetworkError> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, NetworkError> {
        Ok(f64::from_bits(self.u64()?))
    }
}

/// Writes dual-number inputs for the generic forward pass so its time
/// tangent can be compared against the batched path.
pub fn dual_inputs(x: f64, y: f64, t: f64) -> (Dual<f64>, Dual<f64>, Dual<f64>) {
    (
        Dual::new(x, 0.0),
        Dual::new(y, 0.0),
        Dual::new(t, 1.0),
    )
}
