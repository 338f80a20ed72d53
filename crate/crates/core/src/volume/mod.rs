//! Volume types, label-set masking and masked descriptive statistics.
//!
//! Every voxel grid carries a [`VolumeGeometry`]; operations that combine two
//! grids check co-registration first and fail with
//! [`Error::GeometryMismatch`](crate::Error::GeometryMismatch).

mod geometry;
pub mod nifti;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use geometry::{
    assert_geometry_match, VolumeGeometry, GEOMETRY_TOLERANCE_MM, SPACING_AFFINE_TOLERANCE_MM,
};
pub use nifti::{load_volume, save_volume, LoadedVolume, NiftiPayload};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// BraTS label alphabet: 0 background, 1 necrosis, 2 edema, 3 NEH, 4 enhancing.
pub const BRATS_LABELS: [u32; 5] = [0, 1, 2, 3, 4];

/// Real-valued voxel grid (rCBV, MRI intensities, distances).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume<T: Real> {
    geometry: VolumeGeometry,
    values: Vec<T>,
}

impl<T: Real> ScalarVolume<T> {
    pub fn new(geometry: VolumeGeometry, values: Vec<T>) -> Result<Self> {
        check_len(&geometry, values.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value {} at voxel {:?}",
                values[pos],
                geometry.coords(pos)
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn filled(geometry: VolumeGeometry, value: T) -> Self {
        let n = geometry.voxel_count();
        Self::new(geometry, vec![value; n]).expect("finite fill value")
    }

    pub fn from_fn(geometry: VolumeGeometry, f: impl Fn([usize; 3]) -> T) -> Result<Self> {
        let values = (0..geometry.voxel_count()).map(|i| f(geometry.coords(i))).collect();
        Self::new(geometry, values)
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.geometry.index(i, j, k)]
    }

    /// Convert to another scalar type.
    pub fn cast<U: Real>(&self) -> ScalarVolume<U> {
        ScalarVolume {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }
}

/// Voxel grid of probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume<T: Real> {
    inner: ScalarVolume<T>,
}

impl<T: Real> ProbabilityVolume<T> {
    pub fn new(geometry: VolumeGeometry, values: Vec<T>) -> Result<Self> {
        Self::try_from(ScalarVolume::new(geometry, values)?)
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        self.inner.geometry()
    }

    pub fn values(&self) -> &[T] {
        self.inner.values()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.inner.get(i, j, k)
    }

    pub fn as_scalar(&self) -> &ScalarVolume<T> {
        &self.inner
    }

    pub fn into_scalar(self) -> ScalarVolume<T> {
        self.inner
    }

    /// Clamp an arbitrary field into `[0, 1]`.
    pub fn clamped(field: ScalarVolume<T>) -> Self {
        let ScalarVolume { geometry, values } = field;
        let values = values
            .into_iter()
            .map(|v| v.max(T::zero()).min(T::one()))
            .collect();
        Self {
            inner: ScalarVolume { geometry, values },
        }
    }
}

impl<T: Real> TryFrom<ScalarVolume<T>> for ProbabilityVolume<T> {
    type Error = Error;

    fn try_from(v: ScalarVolume<T>) -> Result<Self> {
        if let Some(pos) = v.values.iter().position(|&p| !(p >= T::zero() && p <= T::one())) {
            return Err(Error::InvalidData(format!(
                "probability {} outside [0,1] at voxel {:?}",
                v.values[pos],
                v.geometry.coords(pos)
            )));
        }
        Ok(Self { inner: v })
    }
}

/// Integer segmentation labels with a declared alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    geometry: VolumeGeometry,
    labels: Vec<u32>,
    alphabet: BTreeSet<u32>,
}

impl LabelVolume {
    /// Strict constructor: every label must belong to `alphabet`.
    pub fn with_alphabet(
        geometry: VolumeGeometry,
        labels: Vec<u32>,
        alphabet: impl IntoIterator<Item = u32>,
    ) -> Result<Self> {
        check_len(&geometry, labels.len())?;
        let alphabet: BTreeSet<u32> = alphabet.into_iter().collect();
        if let Some(bad) = labels.iter().find(|l| !alphabet.contains(l)) {
            return Err(Error::UnknownLabel(*bad));
        }
        Ok(Self {
            geometry,
            labels,
            alphabet,
        })
    }

    /// Alphabet is the BraTS set extended by any label actually present.
    pub fn new(geometry: VolumeGeometry, labels: Vec<u32>) -> Result<Self> {
        let mut alphabet: BTreeSet<u32> = BRATS_LABELS.into_iter().collect();
        alphabet.extend(labels.iter().copied());
        Self::with_alphabet(geometry, labels, alphabet)
    }

    pub fn from_fn(geometry: VolumeGeometry, f: impl Fn([usize; 3]) -> u32) -> Result<Self> {
        let labels = (0..geometry.voxel_count()).map(|i| f(geometry.coords(i))).collect();
        Self::new(geometry, labels)
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn alphabet(&self) -> &BTreeSet<u32> {
        &self.alphabet
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> u32 {
        self.labels[self.geometry.index(i, j, k)]
    }

    /// Replace every occurrence of `from` by `to`.
    pub fn relabel(&self, from: u32, to: u32) -> Result<Self> {
        let labels = self
            .labels
            .iter()
            .map(|&l| if l == from { to } else { l })
            .collect();
        let mut alphabet = self.alphabet.clone();
        alphabet.insert(to);
        Self::with_alphabet(self.geometry.clone(), labels, alphabet)
    }

    /// Mask of voxels whose label belongs to `labels`.
    pub fn mask(&self, labels: &[u32]) -> Result<BinaryMask> {
        label_mask(self, labels)
    }

    pub fn region(&self, region: Region) -> Result<BinaryMask> {
        label_mask(self, &region.labels())
    }
}

/// Boolean voxel grid with a cached voxel count.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    geometry: VolumeGeometry,
    bits: Vec<bool>,
    count: usize,
}

impl BinaryMask {
    pub fn new(geometry: VolumeGeometry, bits: Vec<bool>) -> Result<Self> {
        check_len(&geometry, bits.len())?;
        let count = bits.iter().filter(|&&b| b).count();
        Ok(Self {
            geometry,
            bits,
            count,
        })
    }

    pub fn empty(geometry: VolumeGeometry) -> Self {
        let n = geometry.voxel_count();
        Self {
            geometry,
            bits: vec![false; n],
            count: 0,
        }
    }

    pub fn full(geometry: VolumeGeometry) -> Self {
        let n = geometry.voxel_count();
        Self {
            geometry,
            bits: vec![true; n],
            count: n,
        }
    }

    pub fn from_fn(geometry: VolumeGeometry, f: impl Fn([usize; 3]) -> bool) -> Self {
        let bits = (0..geometry.voxel_count()).map(|i| f(geometry.coords(i))).collect();
        Self::new(geometry, bits).expect("length matches geometry")
    }

    pub fn geometry(&self) -> &VolumeGeometry {
        &self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn volume_mm3(&self) -> f64 {
        self.count as f64 * self.geometry.voxel_volume_mm3()
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.bits[self.geometry.index(i, j, k)]
    }

    /// Linear indices of the true voxels, ascending.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn not(&self) -> Self {
        Self::new(self.geometry.clone(), self.bits.iter().map(|b| !b).collect())
            .expect("same length")
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// Number of voxels true in both masks.
    pub fn intersection_count(&self, other: &Self) -> Result<usize> {
        self.geometry.assert_match(&other.geometry)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        self.geometry.assert_match(&other.geometry)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    pub fn is_disjoint_from(&self, other: &Self) -> Result<bool> {
        Ok(self.intersection_count(other)? == 0)
    }

    /// Label volume with 1 on the mask, 0 elsewhere.
    pub fn to_labels(&self) -> LabelVolume {
        LabelVolume::with_alphabet(
            self.geometry.clone(),
            self.bits.iter().map(|&b| b as u32).collect(),
            [0, 1],
        )
        .expect("0/1 labels")
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.geometry.assert_match(&other.geometry)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.geometry.clone(), bits)
    }
}

/// Named BraTS evaluation regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Region {
    /// Enhancing tumor, label 4.
    ET,
    /// Tumor core, labels 1, 3, 4.
    TC,
    /// Whole tumor, labels 1–4.
    WT,
    /// Non-enhancing hypercellular tumor, label 3.
    NEH,
    /// Edema, label 2.
    ED,
    /// Necrosis, label 1.
    NC,
    /// Any single label.
    Label(u32),
}

impl Region {
    pub const DEFAULT_EVALUATION: [Region; 4] = [Region::ET, Region::TC, Region::WT, Region::NEH];

    pub fn labels(self) -> Vec<u32> {
        match self {
            Region::ET => vec![4],
            Region::TC => vec![1, 3, 4],
            Region::WT => vec![1, 2, 3, 4],
            Region::NEH => vec![3],
            Region::ED => vec![2],
            Region::NC => vec![1],
            Region::Label(l) => vec![l],
        }
    }

    pub fn name(self) -> String {
        match self {
            Region::ET => "ET".into(),
            Region::TC => "TC".into(),
            Region::WT => "WT".into(),
            Region::NEH => "NEH".into(),
            Region::ED => "ED".into(),
            Region::NC => "NC".into(),
            Region::Label(l) => format!("L{l}"),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_uppercase().as_str() {
            "ET" => Ok(Region::ET),
            "TC" => Ok(Region::TC),
            "WT" => Ok(Region::WT),
            "NEH" => Ok(Region::NEH),
            "ED" => Ok(Region::ED),
            "NC" => Ok(Region::NC),
            u => u
                .strip_prefix('L')
                .unwrap_or(u)
                .parse::<u32>()
                .map(Region::Label)
                .map_err(|_| Error::InvalidArgument(format!("unknown region '{t}'"))),
        }
    }
}

impl From<Region> for String {
    fn from(r: Region) -> Self {
        r.name()
    }
}

impl TryFrom<String> for Region {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Mask true exactly where the voxel label is in `labels`.
pub fn label_mask(seg: &LabelVolume, labels: &[u32]) -> Result<BinaryMask> {
    if let Some(&bad) = labels.iter().find(|l| !seg.alphabet.contains(l)) {
        return Err(Error::UnknownLabel(bad));
    }
    let mut lut = vec![false; seg.alphabet.iter().next_back().map_or(0, |&m| m as usize + 1)];
    for &l in labels {
        lut[l as usize] = true;
    }
    let bits = seg.labels.iter().map(|&l| lut[l as usize]).collect();
    BinaryMask::new(seg.geometry.clone(), bits)
}

/// Mean, population standard deviation and size of a masked region.
///
/// `mean` and `sd` are `None` for an empty mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedStats<T> {
    pub mean: Option<T>,
    pub sd: Option<T>,
    pub voxel_count: usize,
    pub volume_mm3: f64,
}

impl<T: Real> MaskedStats<T> {
    pub fn is_empty(&self) -> bool {
        self.voxel_count == 0
    }
}

/// Masked mean and population sd of `scalar` over `mask`.
pub fn masked_stats<T: Real>(scalar: &ScalarVolume<T>, mask: &BinaryMask) -> Result<MaskedStats<T>> {
    scalar.geometry().assert_match(mask.geometry())?;
    let n = mask.count();
    let volume_mm3 = n as f64 * scalar.geometry().voxel_volume_mm3();
    if n == 0 {
        return Ok(MaskedStats {
            mean: None,
            sd: None,
            voxel_count: 0,
            volume_mm3,
        });
    }
    let values = scalar.values();
    let masked = || mask.indices().map(|i| values[i]);
    let nt = T::from_usize_lossy(n);
    let first = masked().collect::<CompensatedSum<T>>().total() / nt;
    // Second pass removes the rounding left in the first estimate.
    let correction = masked().map(|v| v - first).collect::<CompensatedSum<T>>().total() / nt;
    let mean = first + correction;
    let ss = masked().map(|v| (v - mean) * (v - mean)).collect::<CompensatedSum<T>>().total();
    Ok(MaskedStats {
        mean: Some(mean),
        sd: Some((ss / nt).sqrt()),
        voxel_count: n,
        volume_mm3,
    })
}

fn check_len(geometry: &VolumeGeometry, len: usize) -> Result<()> {
    let expected = geometry.voxel_count();
    if len != expected {
        return Err(Error::InvalidData(format!(
            "{len} values supplied for a grid of {expected} voxels ({:?})",
            geometry.dims()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seg(rng: &mut ChaCha8Rng, n: usize) -> LabelVolume {
        let g = VolumeGeometry::isotropic([n, n, n]);
        let labels = (0..g.voxel_count()).map(|_| rng.gen_range(0..5)).collect();
        LabelVolume::new(g, labels).unwrap()
    }

    #[test]
    fn saturated_and_empty_label_masks() {
        let g = VolumeGeometry::isotropic([4, 4, 4]);
        let seg = LabelVolume::new(g.clone(), vec![4; 64]).unwrap();
        assert_eq!(label_mask(&seg, &[4]).unwrap().count(), 64);
        assert_eq!(label_mask(&seg, &[]).unwrap().count(), 0);
    }

    #[test]
    fn unknown_label_rejected() {
        let g = VolumeGeometry::isotropic([2, 2, 2]);
        let seg = LabelVolume::new(g, vec![0; 8]).unwrap();
        assert!(matches!(label_mask(&seg, &[7]), Err(Error::UnknownLabel(7))));
        assert!(LabelVolume::with_alphabet(
            VolumeGeometry::isotropic([2, 2, 2]),
            vec![9; 8],
            BRATS_LABELS
        )
        .is_err());
    }

    #[test]
    fn presets_match_brats_convention() {
        assert_eq!(Region::ET.labels(), vec![4]);
        assert_eq!(Region::TC.labels(), vec![1, 3, 4]);
        assert_eq!(Region::WT.labels(), vec![1, 2, 3, 4]);
        assert_eq!(Region::NEH.labels(), vec![3]);
        assert_eq!(Region::ED.labels(), vec![2]);
        assert_eq!(Region::NC.labels(), vec![1]);
        assert_eq!("tc".parse::<Region>().unwrap(), Region::TC);
        assert_eq!("L3".parse::<Region>().unwrap(), Region::Label(3));
        assert!("XX".parse::<Region>().is_err());
    }

    #[test]
    fn whole_tumor_is_core_plus_edema() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let seg = random_seg(&mut rng, 16);
            // Brute-force per-voxel counts.
            let count = |set: &[u32]| seg.labels().iter().filter(|l| set.contains(l)).count();
            let wt = seg.region(Region::WT).unwrap().count();
            let tc = seg.region(Region::TC).unwrap().count();
            let ed = seg.region(Region::ED).unwrap().count();
            assert_eq!(wt, tc + ed);
            assert_eq!(wt, count(&[1, 2, 3, 4]));
            assert_eq!(tc, count(&[1, 3, 4]));
        }
    }

    #[test]
    fn constant_field_stats_are_exact() {
        let g = VolumeGeometry::new([5, 6, 7], [1.0, 1.2, 2.5]).unwrap();
        let v = ScalarVolume::filled(g.clone(), 57.39f64);
        let mask = BinaryMask::from_fn(g, |[i, j, _]| (i + j) % 3 == 0);
        let s = masked_stats(&v, &mask).unwrap();
        assert_eq!(s.mean, Some(57.39));
        assert_eq!(s.sd, Some(0.0));
        assert_eq!(s.voxel_count, mask.count());
        let expected = mask.count() as f64 * 1.0 * 1.2 * 2.5;
        assert!((s.volume_mm3 - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn empty_mask_is_flagged() {
        let g = VolumeGeometry::isotropic([3, 3, 3]);
        let v = ScalarVolume::filled(g.clone(), 1.0f64);
        let s = masked_stats(&v, &BinaryMask::empty(g)).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.mean, None);
        assert_eq!(s.sd, None);
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = VolumeGeometry::isotropic([12, 12, 12]);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..g.voxel_count()).map(|_| rng.gen_range(-5.0..300.0)).collect();
            let bits: Vec<bool> = (0..g.voxel_count()).map(|_| rng.gen_bool(0.3)).collect();
            let v = ScalarVolume::new(g.clone(), vals.clone()).unwrap();
            let m = BinaryMask::new(g.clone(), bits.clone()).unwrap();
            let s = masked_stats(&v, &m).unwrap();
            let sel: Vec<f64> = vals.iter().zip(&bits).filter(|(_, &b)| b).map(|(v, _)| *v).collect();
            let n = sel.len() as f64;
            let mean = sel.iter().sum::<f64>() / n;
            let var = sel.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let (m_got, sd_got) = (s.mean.unwrap(), s.sd.unwrap());
            assert!((m_got - mean).abs() <= 1e-9 * mean.abs());
            assert!((sd_got - var.sqrt()).abs() <= 1e-9 * var.sqrt());
        }
    }

    #[test]
    fn stats_reject_mismatched_geometry() {
        let v = ScalarVolume::filled(VolumeGeometry::isotropic([3, 3, 3]), 1.0f32);
        let m = BinaryMask::full(VolumeGeometry::isotropic([3, 3, 4]));
        assert!(matches!(masked_stats(&v, &m), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn nan_is_rejected() {
        let g = VolumeGeometry::isotropic([2, 1, 1]);
        assert!(ScalarVolume::new(g.clone(), vec![1.0, f64::NAN]).is_err());
        assert!(ProbabilityVolume::new(g.clone(), vec![0.5, 1.5]).is_err());
        assert!(ProbabilityVolume::new(g.clone(), vec![0.5, f64::NAN]).is_err());
        assert!(ProbabilityVolume::new(g, vec![0.0, 1.0]).is_ok());
    }

    proptest! {
        #[test]
        fn label_mask_distributes_over_disjoint_sets(seed in any::<u64>(), split in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let seg = random_seg(&mut rng, 6);
            let a: Vec<u32> = BRATS_LABELS.iter().copied().filter(|&l| (l as usize) < split).collect();
            let b: Vec<u32> = BRATS_LABELS.iter().copied().filter(|&l| (l as usize) > split).collect();
            let union: Vec<u32> = a.iter().chain(&b).copied().collect();
            let lhs = label_mask(&seg, &union).unwrap();
            let rhs = label_mask(&seg, &a).unwrap().or(&label_mask(&seg, &b).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn mask_volume_is_count_times_voxel_volume(
            seed in any::<u64>(),
            sx in 0.3f64..3.0, sy in 0.3f64..3.0, sz in 0.3f64..3.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = VolumeGeometry::new([5, 5, 5], [sx, sy, sz]).unwrap();
            let bits = (0..125).map(|_| rng.gen_bool(0.5)).collect();
            let m = BinaryMask::new(g.clone(), bits).unwrap();
            let v = ScalarVolume::filled(g, 2.0f64);
            let s = masked_stats(&v, &m).unwrap();
            let expected = m.count() as f64 * sx * sy * sz;
            prop_assert!((s.volume_mm3 - expected).abs() <= 1e-9 * expected.max(1e-300));
            prop_assert!((m.volume_mm3() - expected).abs() <= 1e-9 * expected.max(1e-300));
        }
    }
}
