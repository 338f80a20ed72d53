//! Synthetic volumes with known geometry, for tests and demo cohorts.
//!
//! Rasterization is centre-in-shape: a voxel takes a primitive's value iff
//! its centre (grid mm, origin at voxel 0) lies inside the primitive. Later
//! primitives overwrite earlier ones.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::gaussian_smooth_3d;
use crate::rng::CounterRng;
use crate::scalar::Real;
use crate::volume::{LabelVolume, ProbabilityVolume, ScalarVolume, VolumeGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Primitive {
    Sphere {
        center_mm: [f64; 3],
        radius_mm: f64,
        value: f64,
    },
    /// Spherical shell `inner_mm < r ≤ outer_mm`.
    Shell {
        center_mm: [f64; 3],
        inner_mm: f64,
        outer_mm: f64,
        value: f64,
    },
    /// Axis-aligned box with full side lengths `extent_mm`.
    Box {
        center_mm: [f64; 3],
        extent_mm: [f64; 3],
        value: f64,
    },
}

impl Primitive {
    pub fn value(&self) -> f64 {
        match *self {
            Primitive::Sphere { value, .. } | Primitive::Shell { value, .. } | Primitive::Box { value, .. } => value,
        }
    }

    fn center(&self) -> [f64; 3] {
        match *self {
            Primitive::Sphere { center_mm, .. } | Primitive::Shell { center_mm, .. } | Primitive::Box { center_mm, .. } => {
                center_mm
            }
        }
    }

    fn half_extent(&self) -> [f64; 3] {
        match *self {
            Primitive::Sphere { radius_mm, .. } => [radius_mm; 3],
            Primitive::Shell { outer_mm, .. } => [outer_mm; 3],
            Primitive::Box { extent_mm, .. } => extent_mm.map(|e| e / 2.0),
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let c = self.center();
        let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        match *self {
            Primitive::Sphere { radius_mm, .. } => r2 <= radius_mm * radius_mm,
            Primitive::Shell { inner_mm, outer_mm, .. } => r2 > inner_mm * inner_mm && r2 <= outer_mm * outer_mm,
            Primitive::Box { extent_mm, .. } => (0..3).all(|a| d[a].abs() <= extent_mm[a] / 2.0),
        }
    }

    fn validate(&self, index: usize, geometry: &VolumeGeometry) -> Result<()> {
        let shape_ok = match *self {
            Primitive::Sphere { radius_mm, .. } => radius_mm > 0.0,
            Primitive::Shell { inner_mm, outer_mm, .. } => inner_mm >= 0.0 && outer_mm > inner_mm,
            Primitive::Box { extent_mm, .. } => extent_mm.iter().all(|&e| e > 0.0),
        };
        let finite = self.center().iter().chain(&self.half_extent()).all(|v| v.is_finite()) && self.value().is_finite();
        if !shape_ok || !finite {
            return Err(Error::InvalidArgument(format!("primitive {index}: invalid size or value: {self:?}")));
        }
        let (c, h) = (self.center(), self.half_extent());
        for axis in 0..3 {
            let s = geometry.spacing()[axis];
            let lo = -s / 2.0;
            let hi = (geometry.dims()[axis] as f64 - 0.5) * s;
            if c[axis] - h[axis] < lo || c[axis] + h[axis] > hi {
                return Err(Error::InvalidArgument(format!(
                    "primitive {index} extends outside the grid along axis {axis} ([{:.3}, {:.3}] mm vs [{lo:.3}, {hi:.3}] mm)",
                    c[axis] - h[axis],
                    c[axis] + h[axis]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub primitives: Vec<Primitive>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PhantomSpec {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Self {
        Self {
            dims,
            spacing,
            background: 0.0,
            primitives: Vec::new(),
            noise_sd: 0.0,
            seed: 0,
        }
    }

    pub fn with(mut self, p: Primitive) -> Self {
        self.primitives.push(p);
        self
    }

    pub fn geometry(&self) -> Result<VolumeGeometry> {
        VolumeGeometry::new(self.dims, self.spacing)
    }

    pub fn validate(&self) -> Result<VolumeGeometry> {
        let g = self.geometry()?;
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::InvalidArgument(format!("noise_sd {} must be >= 0", self.noise_sd)));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            p.validate(i, &g)?;
        }
        Ok(g)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Noise-free value at every voxel.
    fn rasterize(&self, g: &VolumeGeometry) -> Vec<f64> {
        (0..g.voxel_count())
            .into_par_iter()
            .map(|idx| {
                let p = g.grid_mm(idx);
                self.primitives
                    .iter()
                    .rev()
                    .find(|prim| prim.contains(p))
                    .map_or(self.background, Primitive::value)
            })
            .collect()
    }
}

/// Integer-valued phantom; every value (and the background) must be a
/// non-negative integer. Noise is ignored.
pub fn generate_label_phantom(spec: &PhantomSpec) -> Result<LabelVolume> {
    let g = spec.validate()?;
    for v in std::iter::once(spec.background).chain(spec.primitives.iter().map(Primitive::value)) {
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::InvalidArgument(format!("label phantom value {v} is not a non-negative integer")));
        }
    }
    let labels = spec.rasterize(&g).into_iter().map(|v| v as u32).collect();
    LabelVolume::new(g, labels)
}

/// Piecewise-constant field plus i.i.d. Gaussian noise of `noise_sd`. The
/// noise at voxel `idx` is drawn from stream `idx`, so it does not depend on
/// evaluation order.
pub fn generate_scalar_phantom<T: Real>(spec: &PhantomSpec) -> Result<ScalarVolume<T>> {
    let g = spec.validate()?;
    let mut values = spec.rasterize(&g);
    if spec.noise_sd > 0.0 {
        values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            *v += spec.noise_sd * CounterRng::new(spec.seed, idx as u64).next_normal();
        });
    }
    ScalarVolume::new(g, values.into_iter().map(T::of).collect())
}

/// Indicator of positive-valued voxels, optionally blurred with the fusion
/// Gaussian (`blur_sigma_mm` = 0 leaves it binary).
pub fn generate_probability_phantom<T: Real>(spec: &PhantomSpec, blur_sigma_mm: f64) -> Result<ProbabilityVolume<T>> {
    let g = spec.validate()?;
    let target: Vec<T> = spec
        .rasterize(&g)
        .into_iter()
        .map(|v| if v > 0.0 { T::one() } else { T::zero() })
        .collect();
    let map = ProbabilityVolume::new(g, target)?;
    if blur_sigma_mm == 0.0 {
        return Ok(map);
    }
    gaussian_smooth_3d(&map, blur_sigma_mm)
}
