use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::convolve::convolve_from_table;
use super::integral::{axis_pieces, windowed_sums};
use super::{BoxKernel, ConvMode, GridSignal, IntegralImage, Normalization};
use crate::error::{Error, Result};
use crate::linop::LinearOperator;

/// Low-resolution observations `z_j` of one high-resolution signal at
/// several box sizes `k_j`, sharing a convolution mode and normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    scales: Vec<usize>,
    mode: ConvMode,
    normalization: Normalization,
    data: Vec<GridSignal>,
    sigma: f64,
    source_shape: Vec<usize>,
}

impl MeasurementSet {
    /// Validates and sorts the entries by scale.
    pub fn new(
        scales: Vec<usize>,
        data: Vec<GridSignal>,
        mode: ConvMode,
        normalization: Normalization,
        sigma: f64,
        source_shape: Vec<usize>,
    ) -> Result<Self> {
        if scales.is_empty() || scales.len() != data.len() {
            return Err(Error::Inconsistent(format!(
                "{} scales for {} measurements",
                scales.len(),
                data.len()
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise level {sigma} must be >= 0")));
        }
        GridSignal::zeros(&source_shape)?;
        let mut pairs: Vec<_> = scales.into_iter().zip(data).collect();
        pairs.sort_by_key(|(k, _)| *k);
        check_scales(&pairs.iter().map(|p| p.0).collect::<Vec<_>>())?;
        for (k, z) in &pairs {
            let expected = mode.output_shape(&source_shape, *k)?;
            if z.shape() != expected.as_slice() {
                return Err(Error::Inconsistent(format!(
                    "scale {k} measurement has shape {:?}, {mode:?} on {source_shape:?} gives {expected:?}",
                    z.shape()
                )));
            }
        }
        let (scales, data) = pairs.into_iter().unzip();
        Ok(MeasurementSet {
            scales,
            mode,
            normalization,
            data,
            sigma,
            source_shape,
        })
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn mode(&self) -> ConvMode {
        self.mode
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn data(&self) -> &[GridSignal] {
        &self.data
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn source_shape(&self) -> &[usize] {
        &self.source_shape
    }

    pub fn ndim(&self) -> usize {
        self.source_shape.len()
    }

    /// Measurement at box size `k`, if present.
    pub fn get(&self, k: usize) -> Option<&GridSignal> {
        self.scales.iter().position(|&s| s == k).map(|i| &self.data[i])
    }

    /// Keeps only the listed scales.
    pub fn subset(&self, scales: &[usize]) -> Result<MeasurementSet> {
        let data = scales
            .iter()
            .map(|&k| {
                self.get(k)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("no measurement at scale {k}")))
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementSet::new(
            scales.to_vec(),
            data,
            self.mode,
            self.normalization,
            self.sigma,
            self.source_shape.clone(),
        )
    }

    /// Same set expressed with the other normalization.
    pub fn renormalized(&self, to: Normalization) -> MeasurementSet {
        if to == self.normalization {
            return self.clone();
        }
        let d = self.ndim();
        let data = self
            .scales
            .iter()
            .zip(&self.data)
            .map(|(&k, z)| {
                let (from_div, to_div) = (self.normalization.divisor(k, d), to.divisor(k, d));
                z.map(|v| v * from_div / to_div)
            })
            .collect();
        // `sigma` keeps its original meaning; per-scale rescaled noise is not tracked.
        MeasurementSet {
            data,
            normalization: to,
            ..self.clone()
        }
    }

    /// Replaces the measurement data, keeping the configuration.
    pub fn with_data(&self, data: Vec<GridSignal>) -> Result<MeasurementSet> {
        MeasurementSet::new(
            self.scales.clone(),
            data,
            self.mode,
            self.normalization,
            self.sigma,
            self.source_shape.clone(),
        )
    }

    pub fn total_len(&self) -> usize {
        self.data.iter().map(GridSignal::len).sum()
    }

    /// Concatenated measurement values in scale order.
    pub fn flatten(&self) -> Vec<f64> {
        self.data.iter().flat_map(|z| z.values().iter().copied()).collect()
    }
}

fn check_scales(sorted: &[usize]) -> Result<()> {
    if sorted.contains(&0) {
        return Err(Error::InvalidArgument("box sizes must be at least 1".into()));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("repeated box size in {sorted:?}")));
    }
    Ok(())
}

/// The stacked forward map `u -> (u ⊗ b_k1, ..., u ⊗ b_ks)`.
///
/// One summed-area table of `u` serves every scale, so the cost is
/// `O(N · S)` whatever the box sizes.
pub fn forward_stack(
    u: &GridSignal,
    scales: &[usize],
    mode: ConvMode,
    normalization: Normalization,
) -> Result<MeasurementSet> {
    let mut sorted = scales.to_vec();
    sorted.sort_unstable();
    check_scales(&sorted)?;
    if sorted.is_empty() {
        return Err(Error::InvalidArgument("at least one box size is required".into()));
    }
    let table = IntegralImage::new(u);
    let data = sorted
        .iter()
        .map(|&k| {
            let kernel = BoxKernel::new(k, u.ndim(), normalization)?;
            convolve_from_table(&table, &kernel, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::new(sorted, data, mode, normalization, 0.0, u.shape().to_vec())
}

/// Exact transpose of [`forward_stack`] under the standard inner product.
///
/// Each scale contributes a box sum of its measurement taken over the
/// windows that touch a given source pixel.
pub fn adjoint_stack(ms: &MeasurementSet) -> Result<GridSignal> {
    let shape = ms.source_shape().to_vec();
    let d = shape.len();
    let mut out = vec![0.0; shape.iter().product()];
    for (&k, z) in ms.scales().iter().zip(ms.data()) {
        let expected = ms.mode().output_shape(&shape, k)?;
        if z.shape() != expected.as_slice() {
            return Err(Error::Inconsistent(format!(
                "scale {k} measurement shape {:?} differs from {expected:?}",
                z.shape()
            )));
        }
        let table = IntegralImage::new(z);
        let axes: Vec<_> = shape
            .iter()
            .zip(z.shape())
            .map(|(&n, &len)| match ms.mode() {
                ConvMode::Valid => axis_pieces(n, len, k, false, |t| t as isize - (k as isize - 1)),
                ConvMode::Cyclic => axis_pieces(n, len, k, true, |t| t as isize - (k as isize - 1)),
                ConvMode::Full => axis_pieces(n, len, k, false, |t| t as isize),
            })
            .collect();
        let sums = windowed_sums(&table, &axes);
        let div = ms.normalization().divisor(k, d);
        for (o, s) in out.iter_mut().zip(sums) {
            *o += s / div;
        }
    }
    GridSignal::new(shape, out)
}

/// Adds i.i.d. Gaussian noise of standard deviation `sigma` to every pixel of
/// every scale, drawn from a ChaCha8 stream seeded with `seed`.
pub fn add_noise(ms: &MeasurementSet, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise_with_rng(ms, sigma, &mut rng)
}

/// As [`add_noise`] with a caller-supplied generator. Samples are drawn in
/// scale order, then row-major pixel order.
pub fn add_noise_with_rng<R: Rng + ?Sized>(
    ms: &MeasurementSet,
    sigma: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level {sigma} must be >= 0")));
    }
    let mut out = ms.clone();
    out.sigma = sigma;
    if sigma == 0.0 {
        return Ok(out);
    }
    for z in out.data.iter_mut() {
        for v in z.values_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += sigma * e;
        }
    }
    Ok(out)
}

/// [`forward_stack`] as a matrix-free operator on flattened vectors.
#[derive(Clone, Debug)]
pub struct StackOperator {
    scales: Vec<usize>,
    mode: ConvMode,
    normalization: Normalization,
    source_shape: Vec<usize>,
    out_shapes: Vec<Vec<usize>>,
}

impl StackOperator {
    pub fn new(
        scales: &[usize],
        mode: ConvMode,
        normalization: Normalization,
        source_shape: &[usize],
    ) -> Result<Self> {
        let mut scales = scales.to_vec();
        scales.sort_unstable();
        check_scales(&scales)?;
        let out_shapes = scales
            .iter()
            .map(|&k| mode.output_shape(source_shape, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(StackOperator {
            scales,
            mode,
            normalization,
            source_shape: source_shape.to_vec(),
            out_shapes,
        })
    }

    pub fn for_set(ms: &MeasurementSet) -> Result<Self> {
        Self::new(ms.scales(), ms.mode(), ms.normalization(), ms.source_shape())
    }
}

impl LinearOperator for StackOperator {
    fn rows(&self) -> usize {
        self.out_shapes.iter().map(|s| s.iter().product::<usize>()).sum()
    }

    fn cols(&self) -> usize {
        self.source_shape.iter().product()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let u = GridSignal::new(self.source_shape.clone(), x.to_vec())
            .expect("operator input matches its column count");
        let ms = forward_stack(&u, &self.scales, self.mode, self.normalization)
            .expect("shapes were validated at construction");
        let mut off = 0;
        for z in ms.data() {
            y[off..off + z.len()].copy_from_slice(z.values());
            off += z.len();
        }
    }

    fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let mut off = 0;
        let data = self
            .out_shapes
            .iter()
            .map(|s| {
                let len: usize = s.iter().product();
                let z = GridSignal::new(s.clone(), y[off..off + len].to_vec());
                off += len;
                z
            })
            .collect::<Result<Vec<_>>>()
            .expect("operator input matches its row count");
        let ms = MeasurementSet {
            scales: self.scales.clone(),
            mode: self.mode,
            normalization: self.normalization,
            data,
            sigma: 0.0,
            source_shape: self.source_shape.clone(),
        };
        let u = adjoint_stack(&ms).expect("shapes were validated at construction");
        x.copy_from_slice(u.values());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_scale_wraps_box_convolve() {
        let u = GridSignal::from_1d(vec![1., 2., 3., 4.]).unwrap();
        let ms = forward_stack(&u, &[2], ConvMode::Valid, Normalization::Unit).unwrap();
        assert_eq!(ms.data()[0].values(), &[3., 5., 7.]);
    }

    #[test]
    fn unit_box_adjoint_is_identity() {
        let u = GridSignal::from_fn_2d(3, 4, |r, c| (r * 4 + c) as f64).unwrap();
        for mode in [ConvMode::Valid, ConvMode::Full, ConvMode::Cyclic] {
            let ms = forward_stack(&u, &[1], mode, Normalization::Unit).unwrap();
            assert_eq!(adjoint_stack(&ms).unwrap(), u);
        }
    }

    #[test]
    fn scales_are_sorted_and_distinct() {
        let u = GridSignal::from_1d(vec![0.0; 10]).unwrap();
        let ms = forward_stack(&u, &[3, 2], ConvMode::Cyclic, Normalization::Unit).unwrap();
        assert_eq!(ms.scales(), &[2, 3]);
        assert!(forward_stack(&u, &[2, 2], ConvMode::Cyclic, Normalization::Unit).is_err());
        assert!(forward_stack(&u, &[], ConvMode::Cyclic, Normalization::Unit).is_err());
    }

    #[test]
    fn noise_contract() {
        let u = GridSignal::from_1d((0..50).map(f64::from).collect()).unwrap();
        let ms = forward_stack(&u, &[2, 3], ConvMode::Valid, Normalization::Unit).unwrap();
        assert_eq!(add_noise(&ms, 0.0, 1).unwrap().data(), ms.data());
        let a = add_noise(&ms, 0.5, 7).unwrap();
        let b = add_noise(&ms, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sigma(), 0.5);
        assert_ne!(a, add_noise(&ms, 0.5, 8).unwrap());
        assert!(add_noise(&ms, -1.0, 7).is_err());
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let z = GridSignal::from_1d(vec![0.0; 5]).unwrap();
        let r = MeasurementSet::new(
            vec![2],
            vec![z],
            ConvMode::Valid,
            Normalization::Unit,
            0.0,
            vec![8],
        );
        assert!(matches!(r, Err(Error::Inconsistent(_))));
    }
}
