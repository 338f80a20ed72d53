//! Consensus NEH maps from several models' probability outputs.
//!
//! Pipeline: voxel-wise mean of the input maps, separable 3D Gaussian
//! smoothing with σ given in millimetres, then classification into
//! background / low-confidence / high-confidence labels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{BinaryMask, LabelVolume, ProbabilityVolume, ScalarVolume};

pub const DEFAULT_SIGMA_MM: f64 = 1.5;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_HIGH_CONFIDENCE: f64 = 0.75;
pub const DEFAULT_KERNEL_TRUNCATION: f64 = 4.0;

/// Labels written by [`fuse_to_confidence_labels`].
pub const LABEL_BACKGROUND: u32 = 0;
pub const LABEL_LOW_CONFIDENCE: u32 = 1;
pub const LABEL_HIGH_CONFIDENCE: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Gaussian standard deviation in mm; 0 disables smoothing.
    pub sigma_mm: f64,
    /// Inclusive mask threshold on the smoothed mean probability.
    pub threshold: f64,
    /// Inclusive threshold for the high-confidence label.
    pub high_confidence_threshold: f64,
    /// Kernel half-width in units of σ.
    pub kernel_truncation: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            sigma_mm: DEFAULT_SIGMA_MM,
            threshold: DEFAULT_THRESHOLD,
            high_confidence_threshold: DEFAULT_HIGH_CONFIDENCE,
            kernel_truncation: DEFAULT_KERNEL_TRUNCATION,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_mm.is_finite() && self.sigma_mm >= 0.0) {
            return Err(Error::InvalidArgument(format!("sigma_mm = {} must be >= 0", self.sigma_mm)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold = {} must lie in (0, 1)",
                self.threshold
            )));
        }
        if !(self.high_confidence_threshold > self.threshold && self.high_confidence_threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "high-confidence threshold {} must lie in (threshold, 1]",
                self.high_confidence_threshold
            )));
        }
        if !(self.kernel_truncation.is_finite() && self.kernel_truncation > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kernel truncation {} must be positive",
                self.kernel_truncation
            )));
        }
        Ok(())
    }
}

/// Intermediate and final products of the fusion pipeline.
#[derive(Debug, Clone)]
pub struct FusionOutput<T: Real> {
    pub mean: ProbabilityVolume<T>,
    pub smoothed: ProbabilityVolume<T>,
    pub mask: BinaryMask,
    pub confidence: LabelVolume,
}

/// Voxel-wise arithmetic mean of co-registered probability maps.
pub fn average_probability_maps<T: Real>(maps: &[ProbabilityVolume<T>]) -> Result<ProbabilityVolume<T>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no probability maps to average".into()))?;
    for m in &maps[1..] {
        first.geometry().assert_match(m.geometry())?;
    }
    let n = T::from_usize_lossy(maps.len());
    let values = (0..first.values().len())
        .into_par_iter()
        .map(|i| {
            let mut acc = T::zero();
            for m in maps {
                acc += m.values()[i];
            }
            (acc / n).max(T::zero()).min(T::one())
        })
        .collect();
    ProbabilityVolume::new(first.geometry().clone(), values)
}

/// Sampled Gaussian with standard deviation `sigma_vox` voxels, truncated at
/// `truncation · σ` and normalised to unit sum. Index `radius` is the centre.
pub fn gaussian_kernel(sigma_vox: f64, truncation: f64) -> Vec<f64> {
    if sigma_vox <= 0.0 {
        return vec![1.0];
    }
    let radius = (truncation * sigma_vox + 0.5).floor() as i64;
    let w: Vec<f64> = (-radius..=radius)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma_vox * sigma_vox)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Unclamped separable Gaussian smoothing of an arbitrary field.
///
/// Per-axis σ in voxels is `sigma_mm / spacing`. Kernel taps falling outside
/// the grid are dropped and the remaining taps rescaled to unit sum, so
/// constant fields are reproduced exactly and every output is a convex
/// combination of inputs.
pub fn smooth_field<T: Real>(field: &ScalarVolume<T>, sigma_mm: f64, truncation: f64) -> Result<ScalarVolume<T>> {
    if !(sigma_mm.is_finite() && sigma_mm >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_mm = {sigma_mm} must be >= 0")));
    }
    if !(truncation.is_finite() && truncation > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel truncation {truncation} must be positive")));
    }
    let geometry = field.geometry().clone();
    let mut values = field.values().to_vec();
    if sigma_mm == 0.0 {
        return ScalarVolume::new(geometry, values);
    }
    let spacing = geometry.spacing();
    for axis in 0..3 {
        let kernel = gaussian_kernel(sigma_mm / spacing[axis], truncation);
        if kernel.len() > 1 {
            values = convolve_axis(&values, geometry.dims(), axis, &kernel);
        }
    }
    ScalarVolume::new(geometry, values)
}

/// Smooth a probability map; the result is clamped to `[0, 1]`.
pub fn gaussian_smooth_3d<T: Real>(map: &ProbabilityVolume<T>, sigma_mm: f64) -> Result<ProbabilityVolume<T>> {
    gaussian_smooth_3d_with(map, sigma_mm, DEFAULT_KERNEL_TRUNCATION)
}

pub fn gaussian_smooth_3d_with<T: Real>(
    map: &ProbabilityVolume<T>,
    sigma_mm: f64,
    truncation: f64,
) -> Result<ProbabilityVolume<T>> {
    Ok(ProbabilityVolume::clamped(smooth_field(map.as_scalar(), sigma_mm, truncation)?))
}

fn convolve_axis<T: Real>(src: &[T], dims: [usize; 3], axis: usize, kernel: &[f64]) -> Vec<T> {
    let [nx, ny, _] = dims;
    let n = dims[axis];
    let radius = (kernel.len() / 2) as isize;
    let w: Vec<T> = kernel.iter().map(|&k| T::of(k)).collect();
    // Sum of in-grid taps at each position along the axis.
    let norm: Vec<T> = (0..n as isize)
        .map(|p| {
            let lo = (-radius).max(-p);
            let hi = radius.min(n as isize - 1 - p);
            T::of((lo..=hi).map(|o| kernel[(o + radius) as usize]).sum::<f64>())
        })
        .collect();
    let stride = match axis {
        0 => 1,
        1 => nx,
        _ => nx * ny,
    };
    let mut out = vec![T::zero(); src.len()];
    out.par_chunks_mut(nx).enumerate().for_each(|(row, dst)| {
        let j = row % ny;
        let k = row / ny;
        let base = row * nx;
        for (i, slot) in dst.iter_mut().enumerate() {
            let p = [i, j, k][axis] as isize;
            let centre = src[base + i];
            let lo = (-radius).max(-p);
            let hi = radius.min(n as isize - 1 - p);
            let mut acc = T::zero();
            for o in lo..=hi {
                let q = (base + i) as isize + o * stride as isize;
                acc += w[(o + radius) as usize] * (src[q as usize] - centre);
            }
            *slot = centre + acc / norm[p as usize];
        }
    });
    out
}

/// Inclusive threshold: true iff `p >= t`.
pub fn threshold_map<T: Real>(map: &ProbabilityVolume<T>, t: f64) -> Result<BinaryMask> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {t} must lie in (0, 1)")));
    }
    let t = T::of(t);
    BinaryMask::new(
        map.geometry().clone(),
        map.values().iter().map(|&p| p >= t).collect(),
    )
}

/// Average, smooth and classify; returns every intermediate product.
pub fn fuse<T: Real>(maps: &[ProbabilityVolume<T>], cfg: &FusionConfig) -> Result<FusionOutput<T>> {
    cfg.validate()?;
    let mean = average_probability_maps(maps)?;
    let smoothed = gaussian_smooth_3d_with(&mean, cfg.sigma_mm, cfg.kernel_truncation)?;
    let mask = threshold_map(&smoothed, cfg.threshold)?;
    let high = T::of(cfg.high_confidence_threshold);
    let labels = smoothed
        .values()
        .iter()
        .zip(mask.bits())
        .map(|(&p, &inside)| match (inside, p >= high) {
            (false, _) => LABEL_BACKGROUND,
            (true, false) => LABEL_LOW_CONFIDENCE,
            (true, true) => LABEL_HIGH_CONFIDENCE,
        })
        .collect();
    let confidence = LabelVolume::with_alphabet(
        smoothed.geometry().clone(),
        labels,
        [LABEL_BACKGROUND, LABEL_LOW_CONFIDENCE, LABEL_HIGH_CONFIDENCE],
    )?;
    Ok(FusionOutput {
        mean,
        smoothed,
        mask,
        confidence,
    })
}

/// Two-label confidence map: 1 = low (threshold ≤ p < high), 2 = high.
pub fn fuse_to_confidence_labels<T: Real>(maps: &[ProbabilityVolume<T>], cfg: &FusionConfig) -> Result<LabelVolume> {
    Ok(fuse(maps, cfg)?.confidence)
}
