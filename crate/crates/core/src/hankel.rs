//! Delay embedding of states and inputs, and the stacked regression matrices.
//!
//! Indices are zero-based time rows. The augmented vectors are stacked
//! newest-first, `x̂_j = [x_j; x_{j-1}; …; x_{j-s}]`, and `ŷ_j = [x̂_j; û_j]`.
//! A snapshot window of `m` rows yields `m − 1 − max(s, z)` columns, the first
//! at `j = max(s, z)` and the last at `j = m − 2` so that `x̂_{j+1}` exists.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Sizes of one embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EmbeddingDims {
    /// State channels.
    pub n: usize,
    /// Input channels.
    pub q: usize,
    /// State delays.
    pub s: usize,
    /// Input delays.
    pub z: usize,
    /// Snapshots in the training window.
    pub m: usize,
}

impl EmbeddingDims {
    pub fn state_dim(&self) -> usize {
        self.n * (self.s + 1)
    }

    pub fn input_dim(&self) -> usize {
        self.q * (self.z + 1)
    }

    pub fn feature_dim(&self) -> usize {
        self.state_dim() + self.input_dim()
    }

    pub fn max_delay(&self) -> usize {
        self.s.max(self.z)
    }

    /// Samples needed before the first prediction can be made.
    pub fn warmup(&self) -> usize {
        self.max_delay() + 1
    }

    /// Usable regression columns.
    pub fn columns(&self) -> usize {
        self.m.saturating_sub(1 + self.max_delay())
    }
}

/// Stacked regression data: `y` holds `ŷ_j` and `xp` holds `x̂_{j+1}` column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrices<T> {
    pub y: Matrix<T>,
    pub xp: Matrix<T>,
    pub dims: EmbeddingDims,
}

impl<T: Real> DataMatrices<T> {
    pub fn columns(&self) -> usize {
        self.y.ncols()
    }
}

/// `[w_j; w_{j-1}; …; w_{j-delays}]` for a window whose rows are time instants.
pub fn augment_state<T: Real>(window: &Matrix<T>, j: usize, delays: usize) -> Result<Vec<T>> {
    if j >= window.nrows() {
        return Err(Error::Index(format!(
            "index {j} outside window of {} rows",
            window.nrows()
        )));
    }
    if j < delays {
        return Err(Error::Index(format!(
            "index {j} has fewer than {delays} samples of history"
        )));
    }
    let mut out = Vec::with_capacity(window.ncols() * (delays + 1));
    for d in 0..=delays {
        out.extend_from_slice(window.row(j - d));
    }
    Ok(out)
}

/// Input counterpart of [`augment_state`]; the stacking rule is identical.
pub fn augment_input<T: Real>(window: &Matrix<T>, j: usize, delays: usize) -> Result<Vec<T>> {
    augment_state(window, j, delays)
}

/// Builds `Ŷ` and `X̂′` from aligned state (`𝒯×n`) and input (`𝒯×q`) rows.
pub fn build_matrices<T: Real>(states: &Matrix<T>, inputs: &Matrix<T>, s: usize, z: usize) -> Result<DataMatrices<T>> {
    let m = states.nrows();
    if inputs.nrows() != m {
        return Err(Error::Shape(format!(
            "state window has {m} rows but input window has {}",
            inputs.nrows()
        )));
    }
    let dims = EmbeddingDims {
        n: states.ncols(),
        q: inputs.ncols(),
        s,
        z,
        m,
    };
    if m < dims.max_delay() + 2 {
        return Err(Error::Window(format!(
            "{m} snapshots cannot embed {} delays; at least {} are needed",
            dims.max_delay(),
            dims.max_delay() + 2
        )));
    }
    let c = dims.columns();
    let first = dims.max_delay();
    let (n, q) = (dims.n, dims.q);

    let mut y = Matrix::zeros(dims.feature_dim(), c);
    let mut xp = Matrix::zeros(dims.state_dim(), c);
    for d in 0..=s {
        for k in 0..n {
            let row = y.row_mut(d * n + k);
            for (col, v) in row.iter_mut().enumerate() {
                *v = states[(first + col - d, k)];
            }
            let row = xp.row_mut(d * n + k);
            for (col, v) in row.iter_mut().enumerate() {
                *v = states[(first + col + 1 - d, k)];
            }
        }
    }
    let offset = dims.state_dim();
    for d in 0..=z {
        for k in 0..q {
            let row = y.row_mut(offset + d * q + k);
            for (col, v) in row.iter_mut().enumerate() {
                *v = inputs[(first + col - d, k)];
            }
        }
    }
    Ok(DataMatrices { y, xp, dims })
}
