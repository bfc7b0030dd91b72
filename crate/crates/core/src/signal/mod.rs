//! Grid signals, box kernels and the box-binned measurement model.
//!
//! A low-resolution sensor whose pixels are `k` times larger than the target
//! grid measures sums over `k`-wide (or `k × k`) windows. Translating the
//! sensor by one fine pixel at a time and interlacing the captures yields the
//! full box convolution `u ⊗ b_k`. Every solver in the crate consumes this
//! model through [`forward_stack`] and [`adjoint_stack`].
//!
//! Windows are indexed by their first sample: `y_k(a)` sums `u` over
//! `[a, a + k)` along each axis.

mod convolve;
mod integral;
mod measurement;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use convolve::{aggregate_scale, box_convolve, interlace_measure, shifted_capture};
pub use integral::IntegralImage;
pub use measurement::{
    add_noise, add_noise_with_rng, adjoint_stack, forward_stack, MeasurementSet, StackOperator,
};

/// A real signal on a 1-D or 2-D integer grid, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSignal {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridSignal {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::InvalidShape(format!(
                "shape {:?} needs {} values, got {}",
                shape,
                len,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GridSignal { shape, values })
    }

    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(vec![n], values)
    }

    pub fn from_2d(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], values)
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        check_shape(shape)?;
        Ok(GridSignal {
            shape: shape.to_vec(),
            values: vec![0.0; shape.iter().product()],
        })
    }

    pub fn filled(shape: &[usize], value: f64) -> Result<Self> {
        let mut s = Self::zeros(shape)?;
        s.values.iter_mut().for_each(|v| *v = value);
        Ok(s)
    }

    /// Builds a 2-D signal from a closure over `(row, col)`.
    pub fn from_fn_2d(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self::from_2d(rows, cols, values)
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at a multi-index; panics when out of range.
    pub fn at(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                assert!(i < n, "index {i} out of range {n}");
                acc * n + i
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridSignal {
        GridSignal {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &GridSignal) -> Result<GridSignal> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridSignal) -> Result<GridSignal> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &GridSignal, f: impl Fn(f64, f64) -> f64) -> Result<GridSignal> {
        if self.shape != other.shape {
            return Err(Error::InvalidShape(format!(
                "shape {:?} does not match {:?}",
                self.shape, other.shape
            )));
        }
        Ok(GridSignal {
            shape: self.shape.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn dot(&self, other: &GridSignal) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute elementwise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &GridSignal) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Root mean square of the values.
    pub fn rms(&self) -> f64 {
        (self.norm_sq() / self.len() as f64).sqrt()
    }

    /// Cyclic shift by `offset` samples along every axis: `out(a) = self(a - offset)`.
    pub fn cyclic_shift(&self, offset: &[usize]) -> GridSignal {
        assert_eq!(offset.len(), self.ndim());
        let mut out = self.clone();
        match self.shape[..] {
            [n] => {
                for a in 0..n {
                    out.values[(a + offset[0]) % n] = self.values[a];
                }
            }
            [rows, cols] => {
                for r in 0..rows {
                    for c in 0..cols {
                        let dst = ((r + offset[0]) % rows) * cols + (c + offset[1]) % cols;
                        out.values[dst] = self.values[r * cols + c];
                    }
                }
            }
            _ => unreachable!(),
        }
        out
    }
}

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > 2 {
        return Err(Error::InvalidShape(format!(
            "only 1-D and 2-D signals are supported, got {} axes",
            shape.len()
        )));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!("zero-length axis in {shape:?}")));
    }
    Ok(())
}

/// Box weights: plain window sums or window means.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Weight 1 per sample.
    #[default]
    Unit,
    /// Weight `1 / k^d`, so the kernel sums to one.
    Mean,
}

impl Normalization {
    /// Factor that turns a window sum into this normalization, as a divisor.
    pub fn divisor(self, k: usize, ndim: usize) -> f64 {
        match self {
            Normalization::Unit => 1.0,
            Normalization::Mean => (k as f64).powi(ndim as i32),
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" | "sum" => Ok(Normalization::Unit),
            "mean" => Ok(Normalization::Mean),
            other => Err(Error::InvalidArgument(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Which outputs of the box convolution a sensor records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvMode {
    /// Fully overlapping windows only: `n - k + 1` outputs per axis.
    #[default]
    Valid,
    /// Every partial overlap with zero extension: `n + k - 1` outputs per axis.
    Full,
    /// Wraparound indexing: `n` outputs per axis.
    Cyclic,
}

impl ConvMode {
    /// Output length along an axis of length `n`.
    pub fn output_len(self, n: usize, k: usize) -> Result<usize> {
        if k == 0 {
            return Err(Error::InvalidArgument("box size must be at least 1".into()));
        }
        match self {
            ConvMode::Valid if k > n => Err(Error::KernelTooLarge { k, n, mode: self }),
            ConvMode::Valid => Ok(n - k + 1),
            ConvMode::Full => Ok(n + k - 1),
            ConvMode::Cyclic if k > n => Err(Error::KernelTooLarge { k, n, mode: self }),
            ConvMode::Cyclic => Ok(n),
        }
    }

    pub fn output_shape(self, source: &[usize], k: usize) -> Result<Vec<usize>> {
        source.iter().map(|&n| self.output_len(n, k)).collect()
    }

    /// Source axis length recovered from a measurement axis length.
    pub fn source_len(self, out: usize, k: usize) -> Option<usize> {
        match self {
            ConvMode::Valid => Some(out + k - 1),
            ConvMode::Full => (out + 1).checked_sub(k).filter(|&n| n > 0),
            ConvMode::Cyclic => Some(out),
        }
    }
}

impl std::str::FromStr for ConvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "valid" => Ok(ConvMode::Valid),
            "full" => Ok(ConvMode::Full),
            "cyclic" => Ok(ConvMode::Cyclic),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// A separable `k`-wide box in one or two dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxKernel {
    pub size: usize,
    pub ndim: usize,
    pub normalization: Normalization,
}

impl BoxKernel {
    pub fn new(size: usize, ndim: usize, normalization: Normalization) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("box size must be at least 1".into()));
        }
        if !(1..=2).contains(&ndim) {
            return Err(Error::InvalidArgument(format!("unsupported dimension {ndim}")));
        }
        Ok(BoxKernel {
            size,
            ndim,
            normalization,
        })
    }

    /// Window-sum box matching `signal`'s dimension.
    pub fn unit_for(size: usize, signal: &GridSignal) -> Result<Self> {
        Self::new(size, signal.ndim(), Normalization::Unit)
    }

    /// Weight applied to each sample in the window.
    pub fn weight(&self) -> f64 {
        1.0 / self.normalization.divisor(self.size, self.ndim)
    }
}
