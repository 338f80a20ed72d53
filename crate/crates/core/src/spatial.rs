//! Spatial relationship between a preoperative NEH segment (pNEH) and the
//! enhancing recurrence (ETRL): edge distance, near-edge fraction, overlap
//! volume and fraction inside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{boundary, edt, DistanceField, DISTANCE_TOLERANCE_MM};
use crate::rng::CounterRng;
use crate::scalar::{CompensatedSum, Real};
use crate::stats::{descriptive, Descriptive};
use crate::volume::{BinaryMask, VolumeGeometry};

pub const DEFAULT_NEAR_EDGE_MM: f64 = 5.0;
pub const PROXIMITY_MAX_MM: f64 = 5.0;
pub const NEAR_EDGE_MIN_FRACTION: f64 = 0.30;
pub const CONTAINMENT_MIN_FRACTION: f64 = 0.10;
pub const INSIDE_MIN_FRACTION: f64 = 0.20;
pub const DEFAULT_NULL_SHIFTS: usize = 100;

/// What "distance to ETRL" measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceTarget {
    /// Nearest ETRL boundary voxel; voxels deep inside ETRL are positive.
    #[default]
    Boundary,
    /// Nearest ETRL voxel; zero everywhere inside ETRL.
    Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialMetrics<T> {
    pub mean_edge_distance_mm: T,
    pub fraction_near_edge: T,
    pub volume_containment_mm3: T,
    pub volume_containment_log10: Option<T>,
    pub fraction_inside: T,
    pub near_threshold_mm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialBenchmarks {
    pub proximity_flag: bool,
    pub near_edge_flag: bool,
    pub containment_flag: bool,
    pub inside_flag: bool,
}

impl SpatialBenchmarks {
    /// Interpretation thresholds. Proximity is read as "within 5 mm", so
    /// that coincident edges (distance 0) count as favourable.
    pub fn evaluate<T: Real>(m: &SpatialMetrics<T>, pneh_mm3: f64, etrl_mm3: f64) -> Self {
        let smaller = pneh_mm3.min(etrl_mm3);
        Self {
            proximity_flag: m.mean_edge_distance_mm.as_f64() <= PROXIMITY_MAX_MM,
            near_edge_flag: m.fraction_near_edge.as_f64() > NEAR_EDGE_MIN_FRACTION,
            containment_flag: m.volume_containment_mm3.as_f64() > CONTAINMENT_MIN_FRACTION * smaller,
            inside_flag: m.fraction_inside.as_f64() > INSIDE_MIN_FRACTION,
        }
    }
}

/// Observed metric divided by its mean under random circular shifts of pNEH.
/// `None` where the chance baseline is zero or undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullRatios<T> {
    pub mean_edge_distance: Option<T>,
    pub fraction_near_edge: Option<T>,
    pub volume_containment: Option<T>,
    pub fraction_inside: Option<T>,
    pub n_shifts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialReport<T> {
    pub case_id: String,
    pub metrics: SpatialMetrics<T>,
    pub benchmarks: SpatialBenchmarks,
    pub pneh_mm3: f64,
    pub etrl_mm3: f64,
    pub target: DistanceTarget,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub null_ratios: Option<NullRatios<T>>,
}

fn require_non_empty(mask: &BinaryMask, what: &str) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::EmptyMask(format!("{what} is empty")));
    }
    Ok(())
}

fn distance_field<T: Real>(etrl: &BinaryMask, target: DistanceTarget) -> DistanceField<T> {
    match target {
        DistanceTarget::Boundary => edt(&boundary(etrl)),
        DistanceTarget::Region => edt(etrl),
    }
}

fn checked_pair(pneh: &BinaryMask, etrl: &BinaryMask) -> Result<()> {
    pneh.geometry().assert_match(etrl.geometry())?;
    require_non_empty(pneh, "pNEH")?;
    require_non_empty(etrl, "ETRL")
}

fn mean_over<T: Real>(pneh: &BinaryMask, field: &DistanceField<T>) -> T {
    let sum: CompensatedSum<T> = pneh.indices().map(|i| field.distances()[i]).collect();
    sum.total() / T::from_usize_lossy(pneh.count())
}

fn fraction_within<T: Real>(pneh: &BinaryMask, field: &DistanceField<T>, d_mm: f64) -> T {
    let limit = T::of(d_mm + DISTANCE_TOLERANCE_MM);
    let near = pneh.indices().filter(|&i| field.distances()[i] <= limit).count();
    T::of(near as f64 / pneh.count() as f64)
}

/// Mean distance (mm) from pNEH voxels to the ETRL boundary.
pub fn mean_edge_distance<T: Real>(pneh: &BinaryMask, etrl: &BinaryMask) -> Result<T> {
    mean_edge_distance_to(pneh, etrl, DistanceTarget::Boundary)
}

pub fn mean_edge_distance_to<T: Real>(pneh: &BinaryMask, etrl: &BinaryMask, target: DistanceTarget) -> Result<T> {
    checked_pair(pneh, etrl)?;
    Ok(mean_over(pneh, &distance_field::<T>(etrl, target)))
}

/// Share of pNEH voxels within `d_mm` of the ETRL boundary.
pub fn fraction_near_edge<T: Real>(pneh: &BinaryMask, etrl: &BinaryMask, d_mm: f64) -> Result<T> {
    fraction_near_edge_to(pneh, etrl, d_mm, DistanceTarget::Boundary)
}

pub fn fraction_near_edge_to<T: Real>(
    pneh: &BinaryMask,
    etrl: &BinaryMask,
    d_mm: f64,
    target: DistanceTarget,
) -> Result<T> {
    check_near_mm(d_mm)?;
    checked_pair(pneh, etrl)?;
    Ok(fraction_within(pneh, &distance_field::<T>(etrl, target), d_mm))
}

fn check_near_mm(d_mm: f64) -> Result<()> {
    if !(d_mm.is_finite() && d_mm >= 0.0) {
        return Err(Error::InvalidArgument(format!("near-edge distance {d_mm} mm must be non-negative")));
    }
    Ok(())
}

/// Overlap volume in mm³ and its log10 (`None` when there is no overlap).
pub fn volume_containment<T: Real>(pneh: &BinaryMask, etrl: &BinaryMask) -> Result<(T, Option<T>)> {
    let inter = pneh.intersection_count(etrl)?;
    let mm3 = inter as f64 * pneh.geometry().voxel_volume_mm3();
    let log10 = (inter > 0).then(|| T::of(mm3.log10()));
    Ok((T::of(mm3), log10))
}

/// `|pNEH ∩ ETRL| / |pNEH|`.
pub fn fraction_inside<T: Real>(pneh: &BinaryMask, etrl: &BinaryMask) -> Result<T> {
    let inter = pneh.intersection_count(etrl)?;
    require_non_empty(pneh, "pNEH")?;
    Ok(T::of(inter as f64 / pneh.count() as f64))
}

fn metrics_with_field<T: Real>(
    pneh: &BinaryMask,
    etrl: &BinaryMask,
    field: &DistanceField<T>,
    near_mm: f64,
) -> Result<SpatialMetrics<T>> {
    let (mm3, log10) = volume_containment(pneh, etrl)?;
    Ok(SpatialMetrics {
        mean_edge_distance_mm: mean_over(pneh, field),
        fraction_near_edge: fraction_within(pneh, field, near_mm),
        volume_containment_mm3: mm3,
        volume_containment_log10: log10,
        fraction_inside: fraction_inside(pneh, etrl)?,
        near_threshold_mm: T::of(near_mm),
    })
}

/// All four metrics for one case.
pub fn spatial_metrics<T: Real>(
    pneh: &BinaryMask,
    etrl: &BinaryMask,
    near_mm: f64,
    target: DistanceTarget,
) -> Result<SpatialMetrics<T>> {
    check_near_mm(near_mm)?;
    checked_pair(pneh, etrl)?;
    metrics_with_field(pneh, etrl, &distance_field::<T>(etrl, target), near_mm)
}

fn circular_shift(mask: &BinaryMask, shift: [usize; 3]) -> BinaryMask {
    let g: &VolumeGeometry = mask.geometry();
    let d = g.dims();
    BinaryMask::from_fn(g.clone(), |[i, j, k]| {
        mask.get((i + d[0] - shift[0]) % d[0], (j + d[1] - shift[1]) % d[1], (k + d[2] - shift[2]) % d[2])
    })
}

fn ratio<T: Real>(observed: T, baseline: f64) -> Option<T> {
    (baseline.is_finite() && baseline > 0.0).then(|| T::of(observed.as_f64() / baseline))
}

/// Chance-normalized metrics: each observed value divided by its mean over
/// `n_shifts` seeded random circular shifts of pNEH within the grid.
/// Containment uses the linear mm³ value.
pub fn null_ratios<T: Real>(
    pneh: &BinaryMask,
    etrl: &BinaryMask,
    observed: &SpatialMetrics<T>,
    target: DistanceTarget,
    n_shifts: usize,
    seed: u64,
) -> Result<NullRatios<T>> {
    if n_shifts == 0 {
        return Err(Error::InvalidArgument("null baseline needs at least one shift".into()));
    }
    checked_pair(pneh, etrl)?;
    let field = distance_field::<T>(etrl, target);
    let near_mm = observed.near_threshold_mm.as_f64();
    let d = pneh.geometry().dims();
    let mut sums = [CompensatedSum::<f64>::new(); 4];
    for s in 0..n_shifts {
        let mut rng = CounterRng::new(seed, s as u64);
        let shift = d.map(|n| (rng.next_u64() % n as u64) as usize);
        let shifted = circular_shift(pneh, shift);
        let m = metrics_with_field(&shifted, etrl, &field, near_mm)?;
        sums[0].add(m.mean_edge_distance_mm.as_f64());
        sums[1].add(m.fraction_near_edge.as_f64());
        sums[2].add(m.volume_containment_mm3.as_f64());
        sums[3].add(m.fraction_inside.as_f64());
    }
    let base = sums.map(|s| s.total() / n_shifts as f64);
    Ok(NullRatios {
        mean_edge_distance: ratio(observed.mean_edge_distance_mm, base[0]),
        fraction_near_edge: ratio(observed.fraction_near_edge, base[1]),
        volume_containment: ratio(observed.volume_containment_mm3, base[2]),
        fraction_inside: ratio(observed.fraction_inside, base[3]),
        n_shifts,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialOptions {
    pub near_mm: f64,
    pub target: DistanceTarget,
    /// `Some((n_shifts, seed))` enables the ratio-vs-null mode.
    pub null: Option<(usize, u64)>,
}

impl Default for SpatialOptions {
    fn default() -> Self {
        Self {
            near_mm: DEFAULT_NEAR_EDGE_MM,
            target: DistanceTarget::Boundary,
            null: None,
        }
    }
}

/// Metrics, benchmark flags and (optionally) null ratios for one case.
pub fn spatial_report<T: Real>(
    case_id: &str,
    pneh: &BinaryMask,
    etrl: &BinaryMask,
    opts: &SpatialOptions,
) -> Result<SpatialReport<T>> {
    let metrics = spatial_metrics(pneh, etrl, opts.near_mm, opts.target)?;
    let null_ratios = match opts.null {
        Some((n, seed)) => Some(null_ratios(pneh, etrl, &metrics, opts.target, n, seed)?),
        None => None,
    };
    Ok(SpatialReport {
        case_id: case_id.to_string(),
        benchmarks: SpatialBenchmarks::evaluate(&metrics, pneh.volume_mm3(), etrl.volume_mm3()),
        metrics,
        pneh_mm3: pneh.volume_mm3(),
        etrl_mm3: etrl.volume_mm3(),
        target: opts.target,
        null_ratios,
    })
}

/// Cohort table rows, in report order.
pub const SPATIAL_METRIC_NAMES: [&str; 4] = ["FractionInside", "FractionNearEdge", "MeanEdgeDistance", "VolumeContainment"];

/// Per-case value of a named cohort metric; VolumeContainment is log10 mm³.
pub fn spatial_metric_value<T: Real>(m: &SpatialMetrics<T>, name: &str) -> Option<T> {
    match name {
        "FractionInside" => Some(m.fraction_inside),
        "FractionNearEdge" => Some(m.fraction_near_edge),
        "MeanEdgeDistance" => Some(m.mean_edge_distance_mm),
        "VolumeContainment" => m.volume_containment_log10,
        _ => None,
    }
}

/// Mean ± sd per metric over the cohort; undefined per-case values are skipped.
pub fn summarize_spatial<T: Real>(cases: &[SpatialMetrics<T>]) -> Vec<(&'static str, Option<Descriptive<T>>)> {
    SPATIAL_METRIC_NAMES
        .iter()
        .map(|&name| {
            let values: Vec<T> = cases.iter().filter_map(|m| spatial_metric_value(m, name)).collect();
            (name, descriptive(&values).ok())
        })
        .collect()
}
