//! Per-person trajectory forecasting: a vanilla LSTM over ground-plane
//! velocities with a bivariate Gaussian output head, trained by
//! backpropagation through time on negative log-likelihood.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const WEIGHTS_MAGIC: [u8; 4] = *b"LBNT";
pub const WEIGHTS_VERSION: u32 = 1;

const RHO_MAX: f64 = 1.0 - 1e-6;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Velocity distribution for one future frame, in meters per frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: Vec2,
    pub sigma: Vec2,
    pub rho: f64,
}

impl GaussianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.x > 0.0 && self.sigma.y > 0.0) {
            return Err(Error::invalid("sigma must be > 0"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::invalid("|rho| must be < 1"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        Vec2::new(
            self.mu.x + self.sigma.x * z1,
            self.mu.y + self.sigma.y * (self.rho * z1 + (1.0 - self.rho * self.rho).sqrt() * z2),
        )
    }
}

/// Embedding, LSTM cell and decoder weights. Matrices are row-major; the
/// gate blocks of `w_x`, `w_h` and `b` are stacked in the order input,
/// forget, output, candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmModel {
    pub d_emb: usize,
    pub d_h: usize,
    pub w_emb: Vec<f64>,
    pub b_emb: Vec<f64>,
    pub w_x: Vec<f64>,
    pub w_h: Vec<f64>,
    pub b: Vec<f64>,
    pub w_dec: Vec<f64>,
    pub b_dec: Vec<f64>,
}

pub const TENSOR_NAMES: [&str; 7] = ["w_emb", "b_emb", "w_x", "w_h", "b", "w_dec", "b_dec"];

impl LstmModel {
    pub fn zeros(d_emb: usize, d_h: usize) -> LstmModel {
        LstmModel {
            d_emb,
            d_h,
            w_emb: vec![0.0; d_emb * 2],
            b_emb: vec![0.0; d_emb],
            w_x: vec![0.0; 4 * d_h * d_emb],
            w_h: vec![0.0; 4 * d_h * d_h],
            b: vec![0.0; 4 * d_h],
            w_dec: vec![0.0; 5 * d_h],
            b_dec: vec![0.0; 5],
        }
    }

    /// Uniform weights in ±1/√fan_in, zero biases.
    pub fn init(d_emb: usize, d_h: usize, seed: u64) -> LstmModel {
        let mut m = LstmModel::zeros(d_emb, d_h);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |w: &mut Vec<f64>, fan_in: usize| {
            let k = 1.0 / (fan_in as f64).sqrt();
            w.iter_mut().for_each(|x| *x = rng.random_range(-k..k));
        };
        fill(&mut m.w_emb, 2);
        fill(&mut m.w_x, d_emb);
        fill(&mut m.w_h, d_h);
        fill(&mut m.w_dec, d_h);
        m
    }

    pub fn shapes(&self) -> [[usize; 2]; 7] {
        let (e, h) = (self.d_emb, self.d_h);
        [[e, 2], [e, 1], [4 * h, e], [4 * h, h], [4 * h, 1], [5, h], [5, 1]]
    }

    pub fn tensors(&self) -> [&Vec<f64>; 7] {
        [&self.w_emb, &self.b_emb, &self.w_x, &self.w_h, &self.b, &self.w_dec, &self.b_dec]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.w_emb,
            &mut self.b_emb,
            &mut self.w_x,
            &mut self.w_h,
            &mut self.b,
            &mut self.w_dec,
            &mut self.b_dec,
        ]
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_emb == 0 || self.d_h == 0 {
            return Err(Error::invalid("model dimensions must be >= 1"));
        }
        for ((name, shape), t) in TENSOR_NAMES.iter().zip(self.shapes()).zip(self.tensors()) {
            if t.len() != shape[0] * shape[1] {
                return Err(Error::invalid(format!("tensor {name} has wrong size")));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("tensor {name} has non-finite entries")));
            }
        }
        Ok(())
    }

    fn scale(&mut self, a: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= a);
        }
    }

    fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Named-tensor container: magic, version, tensor count, then per tensor
    /// its name, rank, dimensions and little-endian f32 payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 4 * self.n_params());
        out.extend_from_slice(&WEIGHTS_MAGIC);
        out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
        out.extend_from_slice(&(TENSOR_NAMES.len() as u32).to_le_bytes());
        for ((name, shape), t) in TENSOR_NAMES.iter().zip(self.shapes()).zip(self.tensors()) {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&2u32.to_le_bytes());
            for d in shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for x in t.iter() {
                out.extend_from_slice(&(*x as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<LstmModel> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != WEIGHTS_MAGIC {
            return Err(Error::format("weights", "bad magic"));
        }
        let version = r.u32()?;
        if version != WEIGHTS_VERSION {
            return Err(Error::format("weights", format!("unsupported version {version}")));
        }
        let count = r.u32()? as usize;
        let mut found: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::format("weights", "tensor name is not UTF-8"))?;
            let rank = r.u32()? as usize;
            if rank > 8 {
                return Err(Error::format("weights", format!("tensor {name}: rank {rank}")));
            }
            let dims: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_>>()?;
            let n = dims.iter().product::<usize>();
            let payload = r.take(n.checked_mul(4).ok_or_else(|| Error::format("weights", "size overflow"))?)?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect();
            found.push((name, dims, data));
        }
        if r.pos != bytes.len() {
            return Err(Error::format("weights", "trailing bytes"));
        }
        let get = |name: &str| {
            found
                .iter()
                .find(|(n, _, _)| n == name)
                .ok_or_else(|| Error::format("weights", format!("missing tensor {name}")))
        };
        let (_, emb_dims, _) = get("w_emb")?;
        let (_, dec_dims, _) = get("w_dec")?;
        if emb_dims.len() != 2 || dec_dims.len() != 2 {
            return Err(Error::format("weights", "w_emb and w_dec must be rank 2"));
        }
        let mut m = LstmModel::zeros(emb_dims[0], dec_dims[1]);
        let shapes = m.shapes();
        for ((name, shape), dst) in TENSOR_NAMES.iter().zip(shapes).zip(m.tensors_mut()) {
            let (_, dims, data) = get(name)?;
            if dims.as_slice() != shape {
                return Err(Error::format(
                    "weights",
                    format!("tensor {name}: shape {dims:?}, expected {shape:?}"),
                ));
            }
            *dst = data.clone();
        }
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LstmModel> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        LstmModel::from_bytes(&bytes)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("weights", "truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// out = W·x + b, W row-major with `out.len()` rows.
fn affine(w: &[f64], x: &[f64], b: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &w[r * n..(r + 1) * n];
        *o = b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// out += Wᵀ·y
fn affine_t_acc(w: &[f64], y: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (r, yr) in y.iter().enumerate() {
        let row = &w[r * n..(r + 1) * n];
        out.iter_mut().zip(row).for_each(|(o, a)| *o += a * yr);
    }
}

/// dW += y·xᵀ
fn outer_acc(dw: &mut [f64], y: &[f64], x: &[f64]) {
    let n = x.len();
    for (r, yr) in y.iter().enumerate() {
        let row = &mut dw[r * n..(r + 1) * n];
        row.iter_mut().zip(x).for_each(|(d, xv)| *d += yr * xv);
    }
}

/// ReLU(W_emb·dv + b_emb).
pub fn embed_velocity(dv: Vec2, m: &LstmModel) -> Vec<f64> {
    let mut e = vec![0.0; m.d_emb];
    affine(&m.w_emb, &[dv.x, dv.y], &m.b_emb, &mut e);
    e.iter_mut().for_each(|v| *v = v.max(0.0));
    e
}

/// One LSTM cell update; returns (h', c').
pub fn lstm_step(h: &[f64], c: &[f64], e: &[f64], m: &LstmModel) -> (Vec<f64>, Vec<f64>) {
    let s = cell_forward(h, c, e, m);
    (s.h, s.c)
}

fn raw_to_params(raw: &[f64; 5]) -> GaussianParams {
    GaussianParams {
        mu: Vec2::new(raw[0], raw[1]),
        sigma: Vec2::new(raw[2].exp(), raw[3].exp()),
        // tanh rounds to ±1 for large inputs, which has no density
        rho: raw[4].tanh().clamp(-RHO_MAX, RHO_MAX),
    }
}

fn decode_raw(h: &[f64], m: &LstmModel) -> [f64; 5] {
    let mut raw = [0.0; 5];
    affine(&m.w_dec, h, &m.b_dec, &mut raw);
    raw
}

/// Fully connected head: μ as is, σ = exp, ρ = tanh.
pub fn decode_gaussian(h: &[f64], m: &LstmModel) -> GaussianParams {
    raw_to_params(&decode_raw(h, m))
}

/// −log N(target; μ, Σ) for the bivariate Gaussian.
pub fn nll_loss(p: &GaussianParams, target: Vec2) -> Result<f64> {
    p.validate()?;
    let zx = (target.x - p.mu.x) / p.sigma.x;
    let zy = (target.y - p.mu.y) / p.sigma.y;
    let q = 1.0 - p.rho * p.rho;
    let z = zx * zx - 2.0 * p.rho * zx * zy + zy * zy;
    Ok(LN_2PI + (p.sigma.x * p.sigma.y).ln() + 0.5 * q.ln() + z / (2.0 * q))
}

/// Loss and its gradient with respect to the raw head outputs
/// (m_x, m_y, s_x, s_y, r).
fn nll_raw(raw: &[f64; 5], target: Vec2) -> (f64, [f64; 5]) {
    let p = raw_to_params(raw);
    let zx = (target.x - p.mu.x) / p.sigma.x;
    let zy = (target.y - p.mu.y) / p.sigma.y;
    let rho = p.rho;
    let q = 1.0 - rho * rho;
    let z = zx * zx - 2.0 * rho * zx * zy + zy * zy;
    let loss = LN_2PI + raw[2] + raw[3] + 0.5 * q.ln() + z / (2.0 * q);
    let grad = [
        -(zx - rho * zy) / (q * p.sigma.x),
        -(zy - rho * zx) / (q * p.sigma.y),
        1.0 - (zx * zx - rho * zx * zy) / q,
        1.0 - (zy * zy - rho * zx * zy) / q,
        -rho - zx * zy + rho * z / q,
    ];
    (loss, grad)
}

struct CellCache {
    x: Vec2,
    a: Vec<f64>,
    e: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates i, f, o, g stacked like the weights.
    gates: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    h: Vec<f64>,
}

fn cell_forward(h_prev: &[f64], c_prev: &[f64], e: &[f64], m: &LstmModel) -> CellCache {
    let n = m.d_h;
    let mut z = vec![0.0; 4 * n];
    affine(&m.w_x, e, &m.b, &mut z);
    for (r, zr) in z.iter_mut().enumerate() {
        let row = &m.w_h[r * n..(r + 1) * n];
        *zr += row.iter().zip(h_prev).map(|(a, b)| a * b).sum::<f64>();
    }
    for (k, v) in z.iter_mut().enumerate() {
        *v = if k < 3 * n { sigmoid(*v) } else { v.tanh() };
    }
    let mut c = vec![0.0; n];
    let mut tc = vec![0.0; n];
    let mut h = vec![0.0; n];
    for j in 0..n {
        let (i, f, o, g) = (z[j], z[n + j], z[2 * n + j], z[3 * n + j]);
        c[j] = f * c_prev[j] + i * g;
        tc[j] = c[j].tanh();
        h[j] = o * tc[j];
    }
    CellCache {
        x: Vec2::ZERO,
        a: Vec::new(),
        e: e.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates: z,
        c,
        tc,
        h,
    }
}

fn step_forward(x: Vec2, h_prev: &[f64], c_prev: &[f64], m: &LstmModel) -> CellCache {
    let mut a = vec![0.0; m.d_emb];
    affine(&m.w_emb, &[x.x, x.y], &m.b_emb, &mut a);
    let e: Vec<f64> = a.iter().map(|v| v.max(0.0)).collect();
    let mut s = cell_forward(h_prev, c_prev, &e, m);
    s.x = x;
    s.a = a;
    s
}

/// Backpropagates `dh`, `dc` through one step; returns the gradients for
/// the previous hidden and cell state and for the input velocity.
fn step_backward(
    s: &CellCache,
    dh: &[f64],
    dc_in: &[f64],
    m: &LstmModel,
    g: &mut LstmModel,
) -> (Vec<f64>, Vec<f64>, Vec2) {
    let n = m.d_h;
    let gt = &s.gates;
    let mut dz = vec![0.0; 4 * n];
    let mut dc_prev = vec![0.0; n];
    for j in 0..n {
        let (i, f, o, gg) = (gt[j], gt[n + j], gt[2 * n + j], gt[3 * n + j]);
        let d_o = dh[j] * s.tc[j];
        let dc = dc_in[j] + dh[j] * o * (1.0 - s.tc[j] * s.tc[j]);
        let d_i = dc * gg;
        let d_g = dc * i;
        let d_f = dc * s.c_prev[j];
        dc_prev[j] = dc * f;
        dz[j] = d_i * i * (1.0 - i);
        dz[n + j] = d_f * f * (1.0 - f);
        dz[2 * n + j] = d_o * o * (1.0 - o);
        dz[3 * n + j] = d_g * (1.0 - gg * gg);
    }
    outer_acc(&mut g.w_x, &dz, &s.e);
    outer_acc(&mut g.w_h, &dz, &s.h_prev);
    g.b.iter_mut().zip(&dz).for_each(|(b, d)| *b += d);

    let mut dh_prev = vec![0.0; n];
    affine_t_acc(&m.w_h, &dz, &mut dh_prev);
    let mut de = vec![0.0; m.d_emb];
    affine_t_acc(&m.w_x, &dz, &mut de);
    let da: Vec<f64> = de
        .iter()
        .zip(&s.a)
        .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
        .collect();
    outer_acc(&mut g.w_emb, &da, &[s.x.x, s.x.y]);
    g.b_emb.iter_mut().zip(&da).for_each(|(b, d)| *b += d);
    let mut dx = [0.0; 2];
    affine_t_acc(&m.w_emb, &da, &mut dx);
    (dh_prev, dc_prev, Vec2::new(dx[0], dx[1]))
}

/// Observed velocities followed by the velocities to predict.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub observed: Vec<Vec2>,
    pub future: Vec<Vec2>,
}

/// Mean NLL over the window's future steps with teacher forcing. When
/// `grad` is given, the parameter gradient is added to it.
pub fn window_loss(m: &LstmModel, w: &Window, grad: Option<&mut LstmModel>) -> f64 {
    let n_obs = w.observed.len();
    let n_fut = w.future.len();
    assert!(n_obs >= 1 && n_fut >= 1, "window needs observed and future steps");
    let inputs: Vec<Vec2> = w
        .observed
        .iter()
        .chain(&w.future[..n_fut - 1])
        .copied()
        .collect();

    let mut h = vec![0.0; m.d_h];
    let mut c = vec![0.0; m.d_h];
    let mut caches = Vec::with_capacity(inputs.len());
    let mut head_grads: Vec<[f64; 5]> = Vec::with_capacity(n_fut);
    let mut loss = 0.0;
    for (t, x) in inputs.iter().enumerate() {
        let s = step_forward(*x, &h, &c, m);
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        caches.push(s);
        if t + 1 >= n_obs {
            let k = t + 1 - n_obs;
            let (l, gr) = nll_raw(&decode_raw(&h, m), w.future[k]);
            loss += l;
            head_grads.push(gr);
        }
    }
    let scale = 1.0 / n_fut as f64;

    if let Some(g) = grad {
        let mut dh_next = vec![0.0; m.d_h];
        let mut dc_next = vec![0.0; m.d_h];
        for t in (0..inputs.len()).rev() {
            let s = &caches[t];
            let mut dh = dh_next.clone();
            if t + 1 >= n_obs {
                let dy: Vec<f64> = head_grads[t + 1 - n_obs].iter().map(|v| v * scale).collect();
                outer_acc(&mut g.w_dec, &dy, &s.h);
                g.b_dec.iter_mut().zip(&dy).for_each(|(b, d)| *b += d);
                affine_t_acc(&m.w_dec, &dy, &mut dh);
            }
            let (dhp, dcp, _) = step_backward(s, &dh, &dc_next, m, g);
            dh_next = dhp;
            dc_next = dcp;
        }
    }
    loss * scale
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecastMode {
    Mean,
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryForecast {
    pub track_id: u64,
    pub positions: Vec<Vec2>,
    /// Emitted per-step displacement; `positions[k] − positions[k−1]`.
    pub velocities: Vec<Vec2>,
    pub params: Vec<GaussianParams>,
}

/// Rolls the model forward `w` frames from a position history.
pub fn forecast(
    history: &[Vec2],
    w: usize,
    m: &LstmModel,
    mode: ForecastMode,
    seed: u64,
) -> Result<TrajectoryForecast> {
    if history.len() < 2 {
        return Err(Error::invalid("forecast needs at least two history positions"));
    }
    let mut h = vec![0.0; m.d_h];
    let mut c = vec![0.0; m.d_h];
    for pair in history.windows(2) {
        let e = embed_velocity(pair[1] - pair[0], m);
        let s = cell_forward(&h, &c, &e, m);
        h = s.h;
        c = s.c;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = *history.last().expect("len checked");
    let mut out = TrajectoryForecast {
        track_id: 0,
        positions: Vec::with_capacity(w),
        velocities: Vec::with_capacity(w),
        params: Vec::with_capacity(w),
    };
    for k in 0..w {
        let p = decode_gaussian(&h, m);
        let v = match mode {
            ForecastMode::Mean => p.mu,
            ForecastMode::Sample => p.sample(&mut rng),
        };
        pos += v;
        out.positions.push(pos);
        out.velocities.push(v);
        out.params.push(p);
        if k + 1 < w {
            let e = embed_velocity(v, m);
            let s = cell_forward(&h, &c, &e, m);
            h = s.h;
            c = s.c;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub d_emb: usize,
    pub d_h: usize,
    /// Observed positions per window (one more than observed velocities).
    pub obs_len: usize,
    pub pred_len: usize,
    /// Frames between consecutive window starts.
    pub window_stride: usize,
    pub train_fraction: f64,
    /// Derived from the run seed when training from the command line.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            d_emb: 16,
            d_h: 64,
            obs_len: 10,
            pred_len: 9,
            window_stride: 2,
            train_fraction: 0.6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.window_stride == 0 {
            return Err(Error::invalid("epochs, batch_size and window_stride must be >= 1"));
        }
        if self.obs_len < 2 || self.pred_len == 0 {
            return Err(Error::invalid("obs_len must be >= 2 and pred_len >= 1"));
        }
        if self.d_emb == 0 || self.d_h == 0 {
            return Err(Error::invalid("model dimensions must be >= 1"));
        }
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::invalid("learning_rate and clip_norm must be > 0"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must be in (0, 1)"));
        }
        Ok(())
    }
}

/// Velocity windows cut from one trajectory. Windows containing a frame
/// without movement are skipped: a person standing exactly still has a
/// zero-variance target and an unbounded likelihood.
pub fn make_windows(traj: &[Vec2], obs_len: usize, pred_len: usize, stride: usize) -> Vec<Window> {
    let span = obs_len + pred_len;
    if traj.len() < span || obs_len < 2 {
        return Vec::new();
    }
    let vel: Vec<Vec2> = traj.windows(2).map(|p| p[1] - p[0]).collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start + span <= traj.len() {
        let v = &vel[start..start + span - 1];
        if v.iter().all(|d| d.norm() > 1e-6) {
            out.push(Window {
                observed: v[..obs_len - 1].to_vec(),
                future: v[obs_len - 1..].to_vec(),
            });
        }
        start += stride;
    }
    out
}

/// Seeded shuffle of trajectory indices into (train, validation).
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = if n < 2 {
        n
    } else {
        ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1)
    };
    let val = idx.split_off(n_train);
    (idx, val)
}

struct Adam {
    m: LstmModel,
    v: LstmModel,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &LstmModel, lr: f64) -> Adam {
        Adam {
            m: LstmModel::zeros(model.d_emb, model.d_h),
            v: LstmModel::zeros(model.d_emb, model.d_h),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut LstmModel, grad: &LstmModel) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in params.into_iter().zip(grad.tensors()).zip(ms).zip(vs) {
            for k in 0..p.len() {
                m[k] = Self::B1 * m[k] + (1.0 - Self::B1) * g[k];
                v[k] = Self::B2 * v[k] + (1.0 - Self::B2) * g[k] * g[k];
                p[k] -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation loss.
    pub model: LstmModel,
    pub losses: Vec<EpochLoss>,
    pub best_epoch: usize,
    pub train_trajectories: Vec<usize>,
    pub val_trajectories: Vec<usize>,
    pub n_train_windows: usize,
    pub n_val_windows: usize,
}

impl TrainOutcome {
    /// Relative drop of validation loss from the first epoch to the best.
    pub fn val_improvement(&self) -> f64 {
        let first = self.losses[0].val_nll;
        let best = self.losses[self.best_epoch - 1].val_nll;
        (first - best) / first.abs()
    }
}

pub fn mean_loss(m: &LstmModel, windows: &[Window]) -> f64 {
    windows.iter().map(|w| window_loss(m, w, None)).sum::<f64>() / windows.len() as f64
}

/// Minibatch Adam on NLL with global-norm clipping. Trajectories are split
/// 60-40 (by default) before windows are cut.
pub fn train(trajectories: &[Vec<Vec2>], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if trajectories.is_empty() {
        return Err(Error::invalid("no trajectories to train on"));
    }
    let (train_idx, val_idx) = split_indices(trajectories.len(), cfg.train_fraction, cfg.seed);
    let cut = |ids: &[usize]| -> Vec<Window> {
        ids.iter()
            .flat_map(|&i| make_windows(&trajectories[i], cfg.obs_len, cfg.pred_len, cfg.window_stride))
            .collect()
    };
    let mut train_w = cut(&train_idx);
    let val_w = cut(&val_idx);
    if train_w.is_empty() || val_w.is_empty() {
        return Err(Error::invalid(format!(
            "not enough moving trajectory data: {} training and {} validation windows",
            train_w.len(),
            val_w.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut model = LstmModel::init(cfg.d_emb, cfg.d_h, rng.random());
    let mut adam = Adam::new(&model, cfg.learning_rate);
    let mut grad = LstmModel::zeros(cfg.d_emb, cfg.d_h);
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, LstmModel)> = None;

    for epoch in 1..=cfg.epochs {
        train_w.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train_w.chunks(cfg.batch_size) {
            grad.scale(0.0);
            for w in batch {
                total += window_loss(&model, w, Some(&mut grad));
            }
            grad.scale(1.0 / batch.len() as f64);
            let norm = grad.norm();
            if norm > cfg.clip_norm {
                grad.scale(cfg.clip_norm / norm);
            }
            adam.step(&mut model, &grad);
        }
        let train_nll = total / train_w.len() as f64;
        let val_nll = mean_loss(&model, &val_w);
        if !val_nll.is_finite() {
            return Err(Error::invalid(format!("validation loss diverged at epoch {epoch}")));
        }
        log::info!("epoch {epoch}: train {train_nll:.4} val {val_nll:.4}");
        losses.push(EpochLoss {
            epoch,
            train_nll,
            val_nll,
        });
        if best.as_ref().is_none_or(|(b, _, _)| val_nll < *b) {
            best = Some((val_nll, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        losses,
        best_epoch,
        train_trajectories: train_idx,
        val_trajectories: val_idx,
        n_train_windows: train_w.len(),
        n_val_windows: val_w.len(),
    })
}

pub const LOSS_CSV_HEADER: &str = "epoch,train_nll,val_nll";

pub fn loss_csv(losses: &[EpochLoss]) -> String {
    let mut out = format!("{LOSS_CSV_HEADER}\n");
    for l in losses {
        out.push_str(&format!("{},{},{}\n", l.epoch, l.train_nll, l.val_nll));
    }
    out
}
