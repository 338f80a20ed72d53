use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance (mm) applied when comparing two geometries for co-registration.
pub const GEOMETRY_TOLERANCE_MM: f64 = 1e-3;
/// Tolerance (mm) between affine column norms and declared spacing.
pub const SPACING_AFFINE_TOLERANCE_MM: f64 = 1e-4;

/// Grid shape, voxel spacing and voxel-to-world transform of a volume.
///
/// Voxel `(i, j, k)` is stored at linear index `i + nx * (j + ny * k)`, the
/// on-disk NIfTI order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGeometry {
    dims: [usize; 3],
    spacing: [f64; 3],
    affine: [[f64; 4]; 4],
}

impl VolumeGeometry {
    /// Geometry with a diagonal affine (origin at voxel `(0,0,0)`).
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let mut affine = [[0.0; 4]; 4];
        for (axis, s) in spacing.iter().enumerate() {
            affine[axis][axis] = *s;
        }
        affine[3][3] = 1.0;
        Self::with_affine(dims, spacing, affine)
    }

    /// 1 mm isotropic grid with identity affine.
    pub fn isotropic(dims: [usize; 3]) -> Self {
        Self::new(dims, [1.0; 3]).expect("unit spacing is valid")
    }

    pub fn with_affine(dims: [usize; 3], spacing: [f64; 3], affine: [[f64; 4]; 4]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGeometry(format!("zero-sized dimension in {dims:?}")));
        }
        if dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(Error::InvalidGeometry(format!("voxel count of {dims:?} overflows")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be finite and positive, got {spacing:?}"
            )));
        }
        if affine.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("affine contains non-finite entries".into()));
        }
        let det = det3(&affine);
        if det.abs() < 1e-12 {
            return Err(Error::InvalidGeometry("affine is singular".into()));
        }
        for axis in 0..3 {
            let norm = (0..3).map(|r| affine[r][axis].powi(2)).sum::<f64>().sqrt();
            if (norm - spacing[axis]).abs() > SPACING_AFFINE_TOLERANCE_MM {
                return Err(Error::InvalidGeometry(format!(
                    "affine column {axis} has norm {norm} but spacing is {}",
                    spacing[axis]
                )));
            }
        }
        Ok(Self {
            dims,
            spacing,
            affine,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &[[f64; 4]; 4] {
        &self.affine
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Volume of one voxel in mm³.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::MIN, f64::max)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    /// Position of a voxel centre in grid-aligned millimetres (index × spacing).
    #[inline]
    pub fn grid_mm(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        [
            c[0] as f64 * self.spacing[0],
            c[1] as f64 * self.spacing[1],
            c[2] as f64 * self.spacing[2],
        ]
    }

    /// World coordinates of a voxel centre under the affine.
    pub fn world_mm(&self, ijk: [f64; 3]) -> [f64; 3] {
        let a = &self.affine;
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = a[r][0] * ijk[0] + a[r][1] * ijk[1] + a[r][2] * ijk[2] + a[r][3];
        }
        out
    }

    /// Check that two volumes share a grid: equal dims, spacing and affine
    /// within [`GEOMETRY_TOLERANCE_MM`].
    pub fn assert_match(&self, other: &VolumeGeometry) -> Result<()> {
        assert_geometry_match(self, other)
    }
}

/// Returns normally iff `a` and `b` describe the same grid.
pub fn assert_geometry_match(a: &VolumeGeometry, b: &VolumeGeometry) -> Result<()> {
    let mut diffs = String::new();
    if a.dims != b.dims {
        let _ = write!(diffs, "dims {:?} vs {:?}; ", a.dims, b.dims);
    }
    for axis in 0..3 {
        let d = (a.spacing[axis] - b.spacing[axis]).abs();
        if !(d <= GEOMETRY_TOLERANCE_MM) {
            let _ = write!(
                diffs,
                "spacing[{axis}] {} vs {} (|diff| {d:.3e} mm); ",
                a.spacing[axis], b.spacing[axis]
            );
        }
    }
    for r in 0..4 {
        for c in 0..4 {
            let d = (a.affine[r][c] - b.affine[r][c]).abs();
            if !(d <= GEOMETRY_TOLERANCE_MM) {
                let _ = write!(
                    diffs,
                    "affine[{r}][{c}] {} vs {} (|diff| {d:.3e}); ",
                    a.affine[r][c], b.affine[r][c]
                );
            }
        }
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::GeometryMismatch(diffs.trim_end_matches("; ").to_string()))
    }
}

fn det3(a: &[[f64; 4]; 4]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}
