//! Segmentation agreement: Dice, Jaccard, HD95 and Surface Dice, per BraTS
//! composite region and aggregated over a cohort.
//!
//! Boundary distances are taken between boundary voxel centres using the
//! exact EDT. When both masks are empty Dice and Jaccard are 1 and the
//! boundary metrics are undefined (`None`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::{boundary, edt, DISTANCE_TOLERANCE_MM};
use crate::scalar::Real;
use crate::stats::{descriptive, percentile_sorted, Descriptive};
use crate::volume::{BinaryMask, LabelVolume, Region};

pub const DEFAULT_SURFACE_TOLERANCE_MM: f64 = 2.0;
pub const HAUSDORFF_PERCENTILE: f64 = 95.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMetrics<T> {
    pub dice: T,
    pub jaccard: T,
    pub hausdorff95_mm: Option<T>,
    pub surface_dice: Option<T>,
    pub a_voxels: usize,
    pub b_voxels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport<T> {
    pub case_id: String,
    pub regions: Vec<(Region, RegionMetrics<T>)>,
}

impl<T: Real> CaseReport<T> {
    pub fn region(&self, r: Region) -> Option<&RegionMetrics<T>> {
        self.regions.iter().find(|(x, _)| *x == r).map(|(_, m)| m)
    }
}

fn counts(a: &BinaryMask, b: &BinaryMask) -> Result<(usize, usize, usize)> {
    let inter = a.intersection_count(b)?;
    Ok((a.count(), b.count(), inter))
}

fn dice_from_counts<T: Real>(na: usize, nb: usize, inter: usize) -> T {
    if na + nb == 0 {
        T::one()
    } else {
        T::of(2.0 * inter as f64 / (na + nb) as f64)
    }
}

fn jaccard_from_counts<T: Real>(na: usize, nb: usize, inter: usize) -> T {
    let union = na + nb - inter;
    if union == 0 {
        T::one()
    } else {
        T::of(inter as f64 / union as f64)
    }
}

/// `2|a∩b| / (|a| + |b|)`; 1 when both are empty.
pub fn dice<T: Real>(a: &BinaryMask, b: &BinaryMask) -> Result<T> {
    let (na, nb, i) = counts(a, b)?;
    Ok(dice_from_counts(na, nb, i))
}

/// `|a∩b| / |a∪b|`; 1 when both are empty.
pub fn jaccard<T: Real>(a: &BinaryMask, b: &BinaryMask) -> Result<T> {
    let (na, nb, i) = counts(a, b)?;
    Ok(jaccard_from_counts(na, nb, i))
}

/// Distances from every boundary voxel of `a` to the boundary of `b`, and
/// vice versa.
fn boundary_distances<T: Real>(a: &BinaryMask, b: &BinaryMask) -> Result<(Vec<T>, Vec<T>)> {
    a.geometry().assert_match(b.geometry())?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMask(format!(
            "boundary metrics need two non-empty masks (sizes {} and {})",
            a.count(),
            b.count()
        )));
    }
    let sa = boundary(a);
    let sb = boundary(b);
    let da = edt::<T>(&sa);
    let db = edt::<T>(&sb);
    let a_to_b = sa.indices().map(|i| db.distances()[i]).collect();
    let b_to_a = sb.indices().map(|i| da.distances()[i]).collect();
    Ok((a_to_b, b_to_a))
}

fn hd95_from<T: Real>(mut a_to_b: Vec<T>, mut b_to_a: Vec<T>) -> T {
    let cmp = |x: &T, y: &T| x.partial_cmp(y).expect("finite distances");
    a_to_b.sort_by(cmp);
    b_to_a.sort_by(cmp);
    percentile_sorted(&a_to_b, HAUSDORFF_PERCENTILE).max(percentile_sorted(&b_to_a, HAUSDORFF_PERCENTILE))
}

fn surface_dice_from<T: Real>(a_to_b: &[T], b_to_a: &[T], tau_mm: f64) -> T {
    let limit = T::of(tau_mm + DISTANCE_TOLERANCE_MM);
    let close = a_to_b.iter().filter(|&&d| d <= limit).count() + b_to_a.iter().filter(|&&d| d <= limit).count();
    T::of(close as f64 / (a_to_b.len() + b_to_a.len()) as f64)
}

/// Symmetric 95th-percentile boundary distance in mm.
pub fn hausdorff95<T: Real>(a: &BinaryMask, b: &BinaryMask) -> Result<T> {
    let (ab, ba) = boundary_distances(a, b)?;
    Ok(hd95_from(ab, ba))
}

/// Fraction of both boundaries lying within `tau_mm` of the other boundary.
pub fn surface_dice<T: Real>(a: &BinaryMask, b: &BinaryMask, tau_mm: f64) -> Result<T> {
    if !(tau_mm.is_finite() && tau_mm > 0.0) {
        return Err(Error::InvalidArgument(format!("surface tolerance {tau_mm} mm must be positive")));
    }
    let (ab, ba) = boundary_distances::<T>(a, b)?;
    Ok(surface_dice_from(&ab, &ba, tau_mm))
}

/// All four metrics for one pair of masks.
pub fn region_metrics<T: Real>(a: &BinaryMask, b: &BinaryMask, tau_mm: f64) -> Result<RegionMetrics<T>> {
    let (na, nb, inter) = counts(a, b)?;
    let (hausdorff95_mm, surface_dice) = if na == 0 || nb == 0 {
        (None, None)
    } else {
        let (ab, ba) = boundary_distances::<T>(a, b)?;
        let sd = surface_dice_from(&ab, &ba, tau_mm);
        (Some(hd95_from(ab, ba)), Some(sd))
    };
    Ok(RegionMetrics {
        dice: dice_from_counts(na, nb, inter),
        jaccard: jaccard_from_counts(na, nb, inter),
        hausdorff95_mm,
        surface_dice,
        a_voxels: na,
        b_voxels: nb,
    })
}

/// Per-region metrics for one `(a, b)` segmentation pair.
pub fn evaluate_case<T: Real>(
    case_id: &str,
    a: &LabelVolume,
    b: &LabelVolume,
    regions: &[Region],
    tau_mm: f64,
) -> Result<CaseReport<T>> {
    a.geometry().assert_match(b.geometry())?;
    let regions = regions
        .iter()
        .map(|&r| {
            let ma = a.region(r)?;
            let mb = b.region(r)?;
            Ok((r, region_metrics(&ma, &mb, tau_mm)?))
        })
        .collect::<Result<_>>()?;
    Ok(CaseReport {
        case_id: case_id.to_string(),
        regions,
    })
}

/// Metric identifiers in cohort tables, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Dice,
    Hausdorff95,
    Jaccard,
    SurfaceDice,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Dice, Metric::Hausdorff95, Metric::Jaccard, Metric::SurfaceDice];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Dice => "Dice",
            Metric::Hausdorff95 => "Hausdorff95",
            Metric::Jaccard => "Jaccard",
            Metric::SurfaceDice => "Surface Dice",
        }
    }

    pub fn value<T: Real>(self, m: &RegionMetrics<T>) -> Option<T> {
        match self {
            Metric::Dice => Some(m.dice),
            Metric::Jaccard => Some(m.jaccard),
            Metric::Hausdorff95 => m.hausdorff95_mm,
            Metric::SurfaceDice => m.surface_dice,
        }
    }
}

/// Cohort mean ± sd of one metric in one region; undefined values are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub region: Region,
    pub metric: Metric,
    pub summary: Option<Descriptive<T>>,
    pub n_undefined: usize,
}

/// Unweighted per-case mean ± sd for each (region, metric).
pub fn summarize_cohort<T: Real>(cases: &[CaseReport<T>], regions: &[Region]) -> Vec<MetricSummary<T>> {
    let mut out = Vec::new();
    for &metric in &Metric::ALL {
        for &region in regions {
            let mut values = Vec::new();
            let mut n_undefined = 0;
            for case in cases {
                match case.region(region).map(|m| metric.value(m)) {
                    Some(Some(v)) => values.push(v),
                    _ => n_undefined += 1,
                }
            }
            out.push(MetricSummary {
                region,
                metric,
                summary: descriptive(&values).ok(),
                n_undefined,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::VolumeGeometry;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(rng: &mut ChaCha8Rng, g: &VolumeGeometry) -> BinaryMask {
        // Random union of small boxes so that boundaries are non-trivial.
        let mut bits = vec![false; g.voxel_count()];
        let d = g.dims();
        for _ in 0..rng.gen_range(1..4) {
            let lo: Vec<usize> = (0..3).map(|a| rng.gen_range(0..d[a] - 2)).collect();
            let hi: Vec<usize> = (0..3).map(|a| (lo[a] + rng.gen_range(1..6)).min(d[a])).collect();
            for k in lo[2]..hi[2] {
                for j in lo[1]..hi[1] {
                    for i in lo[0]..hi[0] {
                        bits[g.index(i, j, k)] = true;
                    }
                }
            }
        }
        BinaryMask::new(g.clone(), bits).unwrap()
    }

    /// All-pairs boundary distances.
    fn brute_boundary_dists(a: &BinaryMask, b: &BinaryMask) -> Vec<f64> {
        let g = a.geometry();
        let sb: Vec<[f64; 3]> = boundary(b).indices().map(|i| g.grid_mm(i)).collect();
        boundary(a)
            .indices()
            .map(|i| {
                let p = g.grid_mm(i);
                sb.iter()
                    .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn oracle_percentile(mut v: Vec<f64>, q: f64) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h = q / 100.0 * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    }

    #[test]
    fn identity_and_disjoint() {
        let g = VolumeGeometry::isotropic([8, 8, 8]);
        let a = BinaryMask::from_fn(g.clone(), |[i, j, k]| i < 4 && j < 4 && k < 4);
        let b = BinaryMask::from_fn(g.clone(), |[i, j, k]| i >= 5 && j >= 5 && k >= 5);
        assert_eq!(dice::<f64>(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard::<f64>(&a, &a).unwrap(), 1.0);
        assert_eq!(hausdorff95::<f64>(&a, &a).unwrap(), 0.0);
        assert_eq!(surface_dice::<f64>(&a, &a, 2.0).unwrap(), 1.0);
        assert_eq!(dice::<f64>(&a, &b).unwrap(), 0.0);
        assert_eq!(jaccard::<f64>(&a, &b).unwrap(), 0.0);
        assert_eq!(surface_dice::<f64>(&a, &b, 1.0).unwrap(), 0.0);
        let e = BinaryMask::empty(g);
        assert_eq!(dice::<f64>(&e, &e).unwrap(), 1.0);
        assert_eq!(jaccard::<f64>(&e, &e).unwrap(), 1.0);
        assert!(matches!(hausdorff95::<f64>(&a, &e), Err(Error::EmptyMask(_))));
        assert!(matches!(surface_dice::<f64>(&e, &a, 2.0), Err(Error::EmptyMask(_))));
    }

    #[test]
    fn half_overlap_fixture() {
        // Two 2×2×2 cubes sharing a 2×2×1 slab: |a| = |b| = 8, |a∩b| = 4.
        let g = VolumeGeometry::isotropic([4, 4, 4]);
        let a = BinaryMask::from_fn(g.clone(), |[i, j, k]| i < 2 && j < 2 && k < 2);
        let b = BinaryMask::from_fn(g, |[i, j, k]| i < 2 && j < 2 && (1..3).contains(&k));
        assert_eq!((a.count(), b.count(), a.intersection_count(&b).unwrap()), (8, 8, 4));
        assert_eq!(dice::<f64>(&a, &b).unwrap(), 0.5);
        assert!((jaccard::<f64>(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_points_ten_mm_apart() {
        let g = VolumeGeometry::isotropic([12, 3, 3]);
        let a = BinaryMask::from_fn(g.clone(), |c| c == [0, 1, 1]);
        let b = BinaryMask::from_fn(g, |c| c == [10, 1, 1]);
        assert_eq!(hausdorff95::<f64>(&a, &b).unwrap(), 10.0);
    }

    #[test]
    fn concentric_cubes_within_tolerance() {
        let g = VolumeGeometry::isotropic([12, 12, 12]);
        let outer = BinaryMask::from_fn(g.clone(), |c| c.iter().all(|&x| (2..10).contains(&x)));
        let inner = BinaryMask::from_fn(g, |c| c.iter().all(|&x| (3..9).contains(&x)));
        assert_eq!(surface_dice::<f64>(&outer, &inner, 2.0).unwrap(), 1.0);
        let (ab, ba) = boundary_distances::<f64>(&outer, &inner).unwrap();
        assert!(ab.iter().chain(&ba).all(|&d| d <= 3f64.sqrt() + 1e-12));
        assert!(surface_dice::<f64>(&outer, &inner, 0.5).unwrap() < 1.0);
    }

    #[test]
    fn boundary_metrics_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for spacing in [[1.0; 3], [1.0, 1.2, 2.5]] {
            let g = VolumeGeometry::new([16, 16, 16], spacing).unwrap();
            for _ in 0..8 {
                let a = blob(&mut rng, &g);
                let b = blob(&mut rng, &g);
                let ab = brute_boundary_dists(&a, &b);
                let ba = brute_boundary_dists(&b, &a);
                let hd = oracle_percentile(ab.clone(), 95.0).max(oracle_percentile(ba.clone(), 95.0));
                assert!((hausdorff95::<f64>(&a, &b).unwrap() - hd).abs() < 1e-9);
                let close = ab.iter().chain(&ba).filter(|&&d| d <= 2.0 + 1e-9).count();
                let sd = close as f64 / (ab.len() + ba.len()) as f64;
                assert!((surface_dice::<f64>(&a, &b, 2.0).unwrap() - sd).abs() < 1e-12);
                let full_hd = ab.iter().chain(&ba).copied().fold(0.0, f64::max);
                assert!(hd <= full_hd + 1e-12);
            }
        }
    }

    fn seg(g: &VolumeGeometry) -> LabelVolume {
        LabelVolume::from_fn(g.clone(), |[i, j, k]| {
            let r2 = [i, j, k].iter().map(|&x| (x as f64 - 10.0).powi(2)).sum::<f64>();
            match r2 {
                r if r <= 4.0 => 1,
                r if r <= 16.0 => 4,
                r if r <= 36.0 => 3,
                r if r <= 64.0 => 2,
                _ => 0,
            }
        })
        .unwrap()
    }

    #[test]
    fn identical_segmentations() {
        let g = VolumeGeometry::isotropic([20, 20, 20]);
        let s = seg(&g);
        let rep = evaluate_case::<f64>("c", &s, &s, &Region::DEFAULT_EVALUATION, 2.0).unwrap();
        for (_, m) in &rep.regions {
            assert_eq!(m.dice, 1.0);
            assert_eq!(m.hausdorff95_mm, Some(0.0));
            assert_eq!(m.surface_dice, Some(1.0));
        }
    }

    #[test]
    fn neh_relabelled_as_edema() {
        let g = VolumeGeometry::isotropic([20, 20, 20]);
        let reference = seg(&g);
        let pred = reference.relabel(3, 2).unwrap();
        let rep = evaluate_case::<f64>("c", &pred, &reference, &Region::DEFAULT_EVALUATION, 2.0).unwrap();
        let neh = rep.region(Region::NEH).unwrap();
        assert_eq!(neh.dice, 0.0);
        assert_eq!(neh.a_voxels, 0);
        assert!(neh.hausdorff95_mm.is_none());
        let wt = rep.region(Region::WT).unwrap();
        assert_eq!(wt.dice, 1.0);
        assert_eq!(wt.hausdorff95_mm, Some(0.0));
        let et = rep.region(Region::ET).unwrap();
        assert_eq!(et.dice, 1.0);
        assert!(rep.region(Region::TC).unwrap().dice < 1.0);
    }

    #[test]
    fn cohort_summary_skips_undefined() {
        let g = VolumeGeometry::isotropic([20, 20, 20]);
        let s = seg(&g);
        let shifted = s.relabel(3, 2).unwrap();
        let cases = vec![
            evaluate_case::<f64>("a", &s, &s, &Region::DEFAULT_EVALUATION, 2.0).unwrap(),
            evaluate_case::<f64>("b", &shifted, &s, &Region::DEFAULT_EVALUATION, 2.0).unwrap(),
        ];
        let summary = summarize_cohort(&cases, &Region::DEFAULT_EVALUATION);
        let find = |r, m| summary.iter().find(|x| x.region == r && x.metric == m).unwrap();
        let neh_dice = find(Region::NEH, Metric::Dice).summary.unwrap();
        assert_eq!((neh_dice.mean, neh_dice.n), (0.5, 2));
        let neh_hd = find(Region::NEH, Metric::Hausdorff95);
        assert_eq!(neh_hd.n_undefined, 1);
        assert_eq!(neh_hd.summary.unwrap().sd, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn symmetric_and_dice_jaccard_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = VolumeGeometry::new([12, 12, 12], [1.0, 1.2, 2.5]).unwrap();
            let a = blob(&mut rng, &g);
            let b = blob(&mut rng, &g);
            let m_ab = region_metrics::<f64>(&a, &b, 2.0).unwrap();
            let m_ba = region_metrics::<f64>(&b, &a, 2.0).unwrap();
            prop_assert_eq!(m_ab.dice, m_ba.dice);
            prop_assert_eq!(m_ab.jaccard, m_ba.jaccard);
            prop_assert_eq!(m_ab.hausdorff95_mm, m_ba.hausdorff95_mm);
            prop_assert_eq!(m_ab.surface_dice, m_ba.surface_dice);
            let j = m_ab.jaccard;
            prop_assert!((m_ab.dice - 2.0 * j / (1.0 + j)).abs() <= 1e-12);
        }

        #[test]
        fn surface_dice_monotone_in_tau(seed in any::<u64>(), t1 in 0.1f64..5.0, dt in 0.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = VolumeGeometry::isotropic([12, 12, 12]);
            let a = blob(&mut rng, &g);
            let b = blob(&mut rng, &g);
            let s1 = surface_dice::<f64>(&a, &b, t1).unwrap();
            let s2 = surface_dice::<f64>(&a, &b, t1 + dt).unwrap();
            prop_assert!(s1 <= s2);
        }

        #[test]
        fn translation_invariance(seed in any::<u64>(), dx in 0usize..4, dy in 0usize..4, dz in 0usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let small = VolumeGeometry::isotropic([10, 10, 10]);
            let big = VolumeGeometry::isotropic([16, 16, 16]);
            let a = blob(&mut rng, &small);
            let b = blob(&mut rng, &small);
            // Embed with a one-voxel margin so grid-edge boundaries match.
            let place = |m: &BinaryMask, o: [usize; 3]| BinaryMask::from_fn(big.clone(), |[i, j, k]| {
                let (x, y, z) = (i as isize - o[0] as isize, j as isize - o[1] as isize, k as isize - o[2] as isize);
                (0..10).contains(&x) && (0..10).contains(&y) && (0..10).contains(&z)
                    && m.get(x as usize, y as usize, z as usize)
            });
            let m0 = region_metrics::<f64>(&place(&a, [1, 1, 1]), &place(&b, [1, 1, 1]), 2.0).unwrap();
            let o = [1 + dx, 1 + dy, 1 + dz];
            let m1 = region_metrics::<f64>(&place(&a, o), &place(&b, o), 2.0).unwrap();
            prop_assert_eq!(m0, m1);
        }
    }
}
