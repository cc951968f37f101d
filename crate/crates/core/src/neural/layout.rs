//! Where each weight matrix lives in the flat parameter vector.
//!
//! For each layer, forward direction then backward direction:
//! `W` (gates·H × in), `U` (gates·H × H), `b` (gates·H), gate blocks in
//! the order z, r, n (GRU) or i, f, g, o (LSTM). Then the dense layer
//! `W1` (D × 2H), `b1` (D) when D > 0, and the output row `w` (1 × D or
//! 1 × 2H) with its bias. All matrices are row-major.

use super::{CellKind, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirBlock {
    pub w: usize,
    pub u: usize,
    pub b: usize,
    /// Input width of the layer.
    pub input: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub cell: CellKind,
    pub hidden: usize,
    pub dense: usize,
    pub input: usize,
    /// `layers × 2` blocks, forward direction first.
    pub dirs: Vec<DirBlock>,
    pub dense_w: usize,
    pub dense_b: usize,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(config: &ModelConfig, input: usize) -> Self {
        let h = config.hidden;
        let gh = config.cell.gates() * h;
        let mut at = 0;
        let mut dirs = Vec::with_capacity(config.layers * 2);
        for l in 0..config.layers {
            let width = if l == 0 { input } else { 2 * h };
            for _ in 0..2 {
                let w = at;
                let u = w + gh * width;
                let b = u + gh * h;
                at = b + gh;
                dirs.push(DirBlock { w, u, b, input: width });
            }
        }
        let top = if config.layers == 0 { input } else { 2 * h };
        let dense_w = at;
        let dense_b = dense_w + config.dense * top;
        at = dense_b + config.dense;
        let out_w = at;
        let out_b = out_w + if config.dense > 0 { config.dense } else { top };
        let total = out_b + 1;
        Layout { cell: config.cell, hidden: h, dense: config.dense, input, dirs, dense_w, dense_b, out_w, out_b, total }
    }

    pub fn layers(&self) -> usize {
        self.dirs.len() / 2
    }

    /// Width of the vector the dense part sees per token.
    pub fn top_width(&self) -> usize {
        if self.dirs.is_empty() {
            self.input
        } else {
            2 * self.hidden
        }
    }

    /// `(fan_in, fan_out)` of the matrix holding parameter `index`; `(0, 0)`
    /// for biases.
    pub fn fan(&self, index: usize) -> (usize, usize) {
        let gh = self.cell.gates() * self.hidden;
        for d in &self.dirs {
            if (d.w..d.u).contains(&index) {
                return (d.input, gh);
            }
            if (d.u..d.b).contains(&index) {
                return (self.hidden, gh);
            }
            if (d.b..d.b + gh).contains(&index) {
                return (0, 0);
            }
        }
        if (self.dense_w..self.dense_b).contains(&index) {
            return (self.top_width(), self.dense);
        }
        if (self.out_w..self.out_b).contains(&index) {
            return (self.out_b - self.out_w, 1);
        }
        (0, 0)
    }
}
