//! Forward and backward passes over one sample.

use rand::Rng;

use super::layout::{DirBlock, Layout};
use super::CellKind;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out += W x` with `W` row-major `out.len() × x.len()`.
fn matvec_add(out: &mut [f64], w: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o += dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// `out += Wᵀ g` with `W` row-major `g.len() × out.len()`.
fn matvec_t_add(out: &mut [f64], w: &[f64], g: &[f64]) {
    let cols = out.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += gr * wv;
        }
    }
}

/// `dW += g xᵀ`.
fn outer_add(dw: &mut [f64], g: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &gr) in g.iter().enumerate() {
        if gr == 0.0 {
            continue;
        }
        for (d, &xv) in dw[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *d += gr * xv;
        }
    }
}

/// One direction of one layer, in processing order.
#[derive(Debug, Clone)]
struct DirTrace {
    /// `(T+1) × H`; row 0 is the zero initial state.
    hs: Vec<f64>,
    /// `T × gates·H` gate activations.
    gates: Vec<f64>,
    /// `(T+1) × H` LSTM cell states; empty for GRU.
    cs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerTrace {
    /// `T × in` input of the layer.
    input: Vec<f64>,
    fwd: DirTrace,
    bwd: DirTrace,
    /// `T × 2H` inverted-dropout scales; empty without dropout.
    drop: Vec<f64>,
}

/// Everything the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    layers: Vec<LayerTrace>,
    /// `T × top` input of the dense part.
    top: Vec<f64>,
    /// `T × D` dense activations.
    dense: Vec<f64>,
    /// Per-token sigmoid outputs.
    pub acts: Vec<f64>,
}

fn position(s: usize, len: usize, reverse: bool) -> usize {
    if reverse {
        len - 1 - s
    } else {
        s
    }
}

fn run_direction(layout: &Layout, p: &[f64], block: DirBlock, input: &[f64], len: usize, reverse: bool) -> DirTrace {
    let h = layout.hidden;
    let gh = layout.cell.gates() * h;
    let width = block.input;
    let w = &p[block.w..block.u];
    let u = &p[block.u..block.b];
    let b = &p[block.b..block.b + gh];
    let lstm = layout.cell == CellKind::Lstm;
    let mut hs = vec![0.0; (len + 1) * h];
    let mut cs = if lstm { vec![0.0; (len + 1) * h] } else { Vec::new() };
    let mut gates = vec![0.0; len * gh];
    let mut pre = vec![0.0; gh];
    for s in 0..len {
        let t = position(s, len, reverse);
        let x = &input[t * width..(t + 1) * width];
        pre.copy_from_slice(b);
        matvec_add(&mut pre, w, x);
        let (done, rest) = hs.split_at_mut((s + 1) * h);
        let h_prev = &done[s * h..];
        let h_next = &mut rest[..h];
        let g = &mut gates[s * gh..(s + 1) * gh];
        match layout.cell {
            CellKind::Gru => {
                matvec_add(&mut pre[..2 * h], &u[..2 * h * h], h_prev);
                for k in 0..2 * h {
                    g[k] = sigmoid(pre[k]);
                }
                let rh: Vec<f64> = (0..h).map(|k| g[h + k] * h_prev[k]).collect();
                matvec_add(&mut pre[2 * h..], &u[2 * h * h..], &rh);
                for k in 0..h {
                    let n = pre[2 * h + k].tanh();
                    g[2 * h + k] = n;
                    let z = g[k];
                    h_next[k] = (1.0 - z) * h_prev[k] + z * n;
                }
            }
            CellKind::Lstm => {
                matvec_add(&mut pre, u, h_prev);
                for k in 0..h {
                    g[k] = sigmoid(pre[k]);
                    g[h + k] = sigmoid(pre[h + k]);
                    g[2 * h + k] = pre[2 * h + k].tanh();
                    g[3 * h + k] = sigmoid(pre[3 * h + k]);
                    let c = g[h + k] * cs[s * h + k] + g[k] * g[2 * h + k];
                    cs[(s + 1) * h + k] = c;
                    h_next[k] = g[3 * h + k] * c.tanh();
                }
            }
        }
    }
    DirTrace { hs, gates, cs }
}

/// Backpropagates `dh_out` (`T × H`, by position) through one direction,
/// accumulating parameter gradients; returns the input gradient by position.
#[allow(clippy::too_many_arguments)]
fn backprop_direction(
    layout: &Layout,
    p: &[f64],
    grad: &mut [f64],
    block: DirBlock,
    input: &[f64],
    trace: &DirTrace,
    dh_out: &[f64],
    len: usize,
    reverse: bool,
) -> Vec<f64> {
    let h = layout.hidden;
    let gh = layout.cell.gates() * h;
    let width = block.input;
    let w = &p[block.w..block.u];
    let u = &p[block.u..block.b];
    let mut dx = vec![0.0; len * width];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dpre = vec![0.0; gh];
    let mut dh_prev = vec![0.0; h];
    for s in (0..len).rev() {
        let t = position(s, len, reverse);
        let x = &input[t * width..(t + 1) * width];
        let hp = &trace.hs[s * h..(s + 1) * h];
        let g = &trace.gates[s * gh..(s + 1) * gh];
        let dh: Vec<f64> = (0..h).map(|k| dh_out[t * h + k] + dh_next[k]).collect();
        dh_prev.fill(0.0);
        match layout.cell {
            CellKind::Gru => {
                for k in 0..h {
                    let (z, n) = (g[k], g[2 * h + k]);
                    dpre[k] = dh[k] * (n - hp[k]) * z * (1.0 - z);
                    dpre[2 * h + k] = dh[k] * z * (1.0 - n * n);
                    dh_prev[k] = dh[k] * (1.0 - z);
                }
                let rh: Vec<f64> = (0..h).map(|k| g[h + k] * hp[k]).collect();
                let mut drh = vec![0.0; h];
                matvec_t_add(&mut drh, &u[2 * h * h..], &dpre[2 * h..]);
                outer_add(&mut grad[block.u + 2 * h * h..block.b], &dpre[2 * h..], &rh);
                for k in 0..h {
                    let r = g[h + k];
                    dpre[h + k] = drh[k] * hp[k] * r * (1.0 - r);
                    dh_prev[k] += drh[k] * r;
                }
                outer_add(&mut grad[block.u..block.u + 2 * h * h], &dpre[..2 * h], hp);
                matvec_t_add(&mut dh_prev, &u[..2 * h * h], &dpre[..2 * h]);
            }
            CellKind::Lstm => {
                for k in 0..h {
                    let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                    let c = trace.cs[(s + 1) * h + k];
                    let c_prev = trace.cs[s * h + k];
                    let tc = c.tanh();
                    let dc = dh[k] * o * (1.0 - tc * tc) + dc_next[k];
                    dpre[k] = dc * gg * i * (1.0 - i);
                    dpre[h + k] = dc * c_prev * f * (1.0 - f);
                    dpre[2 * h + k] = dc * i * (1.0 - gg * gg);
                    dpre[3 * h + k] = dh[k] * tc * o * (1.0 - o);
                    dc_next[k] = dc * f;
                }
                outer_add(&mut grad[block.u..block.b], &dpre, hp);
                matvec_t_add(&mut dh_prev, u, &dpre);
            }
        }
        outer_add(&mut grad[block.w..block.u], &dpre, x);
        for (gb, d) in grad[block.b..block.b + gh].iter_mut().zip(&dpre) {
            *gb += d;
        }
        matvec_t_add(&mut dx[t * width..(t + 1) * width], w, &dpre);
        dh_next.copy_from_slice(&dh_prev);
    }
    dx
}

/// Runs the network over `len` input rows of width `layout.input`.
/// With `dropout = Some((rate, rng))` each recurrent layer's output is
/// scaled by an inverted-dropout mask drawn from `rng`.
pub fn forward<R: Rng>(layout: &Layout, p: &[f64], x: &[f64], len: usize, mut dropout: Option<(f64, &mut R)>) -> Trace {
    let h = layout.hidden;
    let mut input = x[..len * layout.input].to_vec();
    let mut layers = Vec::with_capacity(layout.layers());
    for l in 0..layout.layers() {
        let fwd = run_direction(layout, p, layout.dirs[2 * l], &input, len, false);
        let bwd = run_direction(layout, p, layout.dirs[2 * l + 1], &input, len, true);
        let mut out = vec![0.0; len * 2 * h];
        for t in 0..len {
            // position t is processing step t forward and len-1-t backward
            out[t * 2 * h..t * 2 * h + h].copy_from_slice(&fwd.hs[(t + 1) * h..(t + 2) * h]);
            let sb = len - 1 - t;
            out[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&bwd.hs[(sb + 1) * h..(sb + 2) * h]);
        }
        let drop = match dropout.as_mut() {
            Some((rate, rng)) if *rate > 0.0 => {
                let keep = 1.0 - *rate;
                let scales: Vec<f64> = (0..out.len()).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
                out.iter_mut().zip(&scales).for_each(|(o, s)| *o *= s);
                scales
            }
            _ => Vec::new(),
        };
        layers.push(LayerTrace { input: std::mem::replace(&mut input, out), fwd, bwd, drop });
    }
    let top = input;
    let width = layout.top_width();
    let d = layout.dense;
    let mut dense = vec![0.0; len * d];
    let mut acts = vec![0.0; len];
    let out_w = &p[layout.out_w..layout.out_b];
    for t in 0..len {
        let y = &top[t * width..(t + 1) * width];
        let z = if d > 0 {
            let hd = &mut dense[t * d..(t + 1) * d];
            hd.copy_from_slice(&p[layout.dense_b..layout.dense_b + d]);
            matvec_add(hd, &p[layout.dense_w..layout.dense_b], y);
            hd.iter_mut().for_each(|v| *v = v.tanh());
            dot(out_w, hd)
        } else {
            dot(out_w, y)
        };
        acts[t] = sigmoid(z + p[layout.out_b]);
    }
    Trace { layers, top, dense, acts }
}

/// Gradient of the loss with respect to every parameter, given the loss
/// gradient `da` with respect to each token activation.
pub fn backward(layout: &Layout, p: &[f64], trace: &Trace, da: &[f64]) -> Vec<f64> {
    let len = trace.acts.len();
    let mut grad = vec![0.0; layout.total];
    let width = layout.top_width();
    let d = layout.dense;
    let mut dtop = vec![0.0; len * width];
    for t in 0..len {
        if da[t] == 0.0 {
            continue;
        }
        let a = trace.acts[t];
        let dz = da[t] * a * (1.0 - a);
        grad[layout.out_b] += dz;
        let y = &trace.top[t * width..(t + 1) * width];
        let dy = &mut dtop[t * width..(t + 1) * width];
        if d > 0 {
            let hd = &trace.dense[t * d..(t + 1) * d];
            let dpre: Vec<f64> = (0..d).map(|k| dz * p[layout.out_w + k] * (1.0 - hd[k] * hd[k])).collect();
            for k in 0..d {
                grad[layout.out_w + k] += dz * hd[k];
                grad[layout.dense_b + k] += dpre[k];
            }
            outer_add(&mut grad[layout.dense_w..layout.dense_b], &dpre, y);
            matvec_t_add(dy, &p[layout.dense_w..layout.dense_b], &dpre);
        } else {
            for k in 0..width {
                grad[layout.out_w + k] += dz * y[k];
                dy[k] += dz * p[layout.out_w + k];
            }
        }
    }
    let h = layout.hidden;
    for (l, lt) in trace.layers.iter().enumerate().rev() {
        if !lt.drop.is_empty() {
            dtop.iter_mut().zip(&lt.drop).for_each(|(g, s)| *g *= s);
        }
        let mut dh_f = vec![0.0; len * h];
        let mut dh_b = vec![0.0; len * h];
        for t in 0..len {
            dh_f[t * h..(t + 1) * h].copy_from_slice(&dtop[t * 2 * h..t * 2 * h + h]);
            dh_b[t * h..(t + 1) * h].copy_from_slice(&dtop[t * 2 * h + h..(t + 1) * 2 * h]);
        }
        let (bf, bb) = (layout.dirs[2 * l], layout.dirs[2 * l + 1]);
        let mut dx = backprop_direction(layout, p, &mut grad, bf, &lt.input, &lt.fwd, &dh_f, len, false);
        let dxb = backprop_direction(layout, p, &mut grad, bb, &lt.input, &lt.bwd, &dh_b, len, true);
        dx.iter_mut().zip(&dxb).for_each(|(a, b)| *a += b);
        dtop = dx;
    }
    grad
}
