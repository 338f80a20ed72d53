//! Exact Euclidean distance transforms and the mm-scale morphology built on
//! them: boundaries, ball dilation and peri-enhancing rim shells.
//!
//! Distances are measured between voxel centres in millimetres, honouring
//! anisotropic spacing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{masked_stats, BinaryMask, MaskedStats, ScalarVolume, VolumeGeometry};

/// Slack (mm) when comparing a distance against a radius, absorbing the
/// rounding of `sqrt` on exact lattice distances such as 2 × 1.2 mm.
pub const DISTANCE_TOLERANCE_MM: f64 = 1e-9;

/// Default rim radii in mm.
pub const DEFAULT_RIM_RADII_MM: [f64; 3] = [2.0, 4.0, 6.0];

/// Per-voxel Euclidean distance (mm) to the nearest voxel of a reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField<T: Real> {
    geometry: VolumeGeometry,
    distances: Vec<T>,
    empty_reference: bool,
}

impl<T: Real> DistanceField<T> {
    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn distances(&self) -> &[T] {
        &self.distances
    }

    /// True when the reference set was empty; every distance is then `+∞`.
    pub fn is_empty_reference(&self) -> bool {
        self.empty_reference
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.distances[self.geometry.index(i, j, k)]
    }

    /// Mask of voxels with distance ≤ `r_mm`.
    pub fn within(&self, r_mm: f64) -> BinaryMask {
        let limit = T::of(r_mm + DISTANCE_TOLERANCE_MM);
        BinaryMask::new(
            self.geometry.clone(),
            self.distances.iter().map(|&d| d <= limit).collect(),
        )
        .expect("length matches geometry")
    }

    /// Finite distances as a scalar volume (`None` for an empty reference).
    pub fn to_scalar(&self) -> Option<ScalarVolume<T>> {
        (!self.empty_reference)
            .then(|| ScalarVolume::new(self.geometry.clone(), self.distances.clone()).expect("finite"))
    }
}

/// Exact Euclidean distance transform of `mask` (distance 0 on the mask).
///
/// Three separable passes of the lower-envelope-of-parabolas algorithm over
/// squared distances, one per axis, each weighted by that axis' spacing.
pub fn edt<T: Real>(mask: &BinaryMask) -> DistanceField<T> {
    let geometry = mask.geometry().clone();
    if mask.is_empty() {
        return DistanceField {
            distances: vec![T::infinity(); geometry.voxel_count()],
            geometry,
            empty_reference: true,
        };
    }
    let mut sq: Vec<T> = mask
        .bits()
        .iter()
        .map(|&b| if b { T::zero() } else { T::infinity() })
        .collect();
    let spacing = geometry.spacing();
    for axis in 0..3 {
        let s = T::of(spacing[axis]);
        map_lines(&mut sq, geometry.dims(), axis, |src, dst, scratch| {
            squared_distance_1d(src, dst, s, scratch)
        });
    }
    DistanceField {
        distances: sq.into_iter().map(|d| d.sqrt()).collect(),
        geometry,
        empty_reference: false,
    }
}

#[derive(Default)]
struct EnvelopeScratch<T> {
    sites: Vec<usize>,
    starts: Vec<T>,
}

/// `dst[p] = min_q (s·(p − q))² + src[q]` over finite `src[q]`.
fn squared_distance_1d<T: Real>(src: &[T], dst: &mut [T], s: T, scratch: &mut EnvelopeScratch<T>) {
    let EnvelopeScratch { sites, starts } = scratch;
    sites.clear();
    starts.clear();
    let s2 = s * s;
    let two = T::one() + T::one();
    for (q, &fq) in src.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = T::from_usize_lossy(q);
        loop {
            let Some(&p) = sites.last() else {
                sites.push(q);
                starts.push(T::neg_infinity());
                break;
            };
            let pf = T::from_usize_lossy(p);
            // Abscissa (in index units) where parabolas p and q intersect.
            let x = ((fq + s2 * qf * qf) - (src[p] + s2 * pf * pf)) / (two * s2 * (qf - pf));
            if x <= *starts.last().expect("parallel stacks") {
                sites.pop();
                starts.pop();
            } else {
                sites.push(q);
                starts.push(x);
                break;
            }
        }
    }
    if sites.is_empty() {
        dst.fill(T::infinity());
        return;
    }
    let mut k = 0;
    for (p, out) in dst.iter_mut().enumerate() {
        let pf = T::from_usize_lossy(p);
        while k + 1 < sites.len() && starts[k + 1] < pf {
            k += 1;
        }
        let d = pf - T::from_usize_lossy(sites[k]);
        *out = s2 * d * d + src[sites[k]];
    }
}

/// Apply `f` to every grid line along `axis`, in parallel, writing back in place.
fn map_lines<T, F>(data: &mut [T], dims: [usize; 3], axis: usize, f: F)
where
    T: Real,
    F: Fn(&[T], &mut [T], &mut EnvelopeScratch<T>) + Sync,
{
    let [nx, ny, nz] = dims;
    let len = dims[axis];
    let (stride, n_lines) = match axis {
        0 => (1, ny * nz),
        1 => (nx, nx * nz),
        _ => (nx * ny, nx * ny),
    };
    let line_start = |line: usize| match axis {
        0 => line * nx,
        1 => (line % nx) + (line / nx) * nx * ny,
        _ => line,
    };
    let src: &[T] = data;
    let results: Vec<Vec<T>> = (0..n_lines)
        .into_par_iter()
        .map_init(
            || (Vec::with_capacity(len), EnvelopeScratch::default()),
            |(buf, scratch), line| {
                let start = line_start(line);
                buf.clear();
                buf.extend((0..len).map(|t| src[start + t * stride]));
                let mut out = vec![T::zero(); len];
                f(buf, &mut out, scratch);
                out
            },
        )
        .collect();
    for (line, out) in results.into_iter().enumerate() {
        let start = line_start(line);
        for (t, v) in out.into_iter().enumerate() {
            data[start + t * stride] = v;
        }
    }
}

/// Mask voxels with at least one 6-connected neighbour outside the mask or
/// outside the grid.
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let g = mask.geometry();
    let [nx, ny, nz] = g.dims();
    let bits = mask.bits();
    let out = (0..bits.len())
        .into_par_iter()
        .map(|idx| {
            if !bits[idx] {
                return false;
            }
            let [i, j, k] = g.coords(idx);
            i == 0
                || j == 0
                || k == 0
                || i + 1 == nx
                || j + 1 == ny
                || k + 1 == nz
                || !bits[idx - 1]
                || !bits[idx + 1]
                || !bits[idx - nx]
                || !bits[idx + nx]
                || !bits[idx - nx * ny]
                || !bits[idx + nx * ny]
        })
        .collect();
    BinaryMask::new(g.clone(), out).expect("length matches geometry")
}

/// Euclidean ball dilation: voxels whose centre lies within `r_mm` of the mask.
pub fn dilate_mm(mask: &BinaryMask, r_mm: f64) -> Result<BinaryMask> {
    if !(r_mm.is_finite() && r_mm > 0.0) {
        return Err(Error::InvalidArgument(format!("dilation radius {r_mm} mm must be positive")));
    }
    if mask.is_empty() {
        log::warn!("dilating an empty mask; result is empty");
        return Ok(mask.clone());
    }
    Ok(edt::<f64>(mask).within(r_mm))
}

/// Cumulative peri-enhancing shells `0 → r` outside the enhancing tumor.
#[derive(Debug, Clone)]
pub struct RimShellSet {
    pub radii_mm: Vec<f64>,
    /// One mask per radius, nested.
    pub shells: Vec<BinaryMask>,
    /// Human-readable description of each exclusion that was removed.
    pub exclusions_applied: Vec<String>,
}

impl RimShellSet {
    pub fn shell_name(r_mm: f64) -> String {
        format!("0-{}mm", fmt_mm(r_mm))
    }

    pub fn names(&self) -> Vec<String> {
        self.radii_mm.iter().map(|&r| Self::shell_name(r)).collect()
    }

    /// Disjoint bands `0–r₁, r₁–r₂, …`.
    pub fn annular(&self) -> Vec<(String, BinaryMask)> {
        let mut prev: Option<(f64, &BinaryMask)> = None;
        let mut out = Vec::with_capacity(self.shells.len());
        for (&r, shell) in self.radii_mm.iter().zip(&self.shells) {
            let (name, band) = match prev {
                None => (Self::shell_name(r), shell.clone()),
                Some((r0, inner)) => (
                    format!("{}-{}mm", fmt_mm(r0), fmt_mm(r)),
                    shell.and_not(inner).expect("shells share geometry"),
                ),
            };
            out.push((name, band));
            prev = Some((r, shell));
        }
        out
    }
}

fn fmt_mm(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// `shell(r) = dilate_mm(et, r) ∧ ¬et ∧ ¬⋃exclusions` for each radius.
pub fn rim_shells(et: &BinaryMask, radii_mm: &[f64], exclusions: &[BinaryMask]) -> Result<RimShellSet> {
    if radii_mm.is_empty() {
        return Err(Error::InvalidArgument("at least one rim radius is required".into()));
    }
    if radii_mm.iter().any(|&r| !(r.is_finite() && r > 0.0)) || radii_mm.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "rim radii {radii_mm:?} must be positive and strictly ascending"
        )));
    }
    let mut excluded = et.clone();
    let mut exclusions_applied = Vec::with_capacity(exclusions.len());
    for (i, ex) in exclusions.iter().enumerate() {
        excluded = excluded.or(ex)?;
        exclusions_applied.push(format!("exclusion[{i}]: {} voxels", ex.count()));
    }
    let shells = if et.is_empty() {
        log::warn!("enhancing-tumor mask is empty; all rim shells are empty");
        vec![BinaryMask::empty(et.geometry().clone()); radii_mm.len()]
    } else {
        let dist = edt::<f64>(et);
        radii_mm
            .iter()
            .map(|&r| dist.within(r).and_not(&excluded))
            .collect::<Result<_>>()?
    };
    Ok(RimShellSet {
        radii_mm: radii_mm.to_vec(),
        shells,
        exclusions_applied,
    })
}

/// Masked statistics of one named region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStats<T> {
    pub name: String,
    pub stats: MaskedStats<T>,
}

/// Masked statistics for the NEH mask followed by each rim shell, in order.
pub fn rim_intensity_profile<T: Real>(
    scalar: &ScalarVolume<T>,
    shells: &RimShellSet,
    neh: &BinaryMask,
) -> Result<Vec<RegionStats<T>>> {
    let mut out = Vec::with_capacity(shells.shells.len() + 1);
    out.push(RegionStats {
        name: "NEH".into(),
        stats: masked_stats(scalar, neh)?,
    });
    for (name, shell) in shells.names().into_iter().zip(&shells.shells) {
        out.push(RegionStats {
            name,
            stats: masked_stats(scalar, shell)?,
        });
    }
    Ok(out)
}
