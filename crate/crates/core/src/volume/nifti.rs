//! NIfTI-1 single-file (`.nii`, `.nii.gz`) reader and writer.
//!
//! Supported payloads: uint8, int16, int32, float32, float64. Integer data
//! without an effective rescale is returned as a [`LabelVolume`]; anything
//! else becomes a `ScalarVolume<f64>`. Orientation is recorded in the affine
//! (sform preferred over qform) but volumes are never reoriented.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{BinaryMask, LabelVolume, ProbabilityVolume, ScalarVolume, VolumeGeometry};
use crate::error::{Error, Result};
use crate::scalar::Real;

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const MAGIC: &[u8; 4] = b"n+1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;

/// Result of [`load_volume`]: the payload type decides the variant.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedVolume {
    Scalar(ScalarVolume<f64>),
    Label(LabelVolume),
}

impl LoadedVolume {
    pub fn geometry(&self) -> &VolumeGeometry {
        match self {
            LoadedVolume::Scalar(v) => v.geometry(),
            LoadedVolume::Label(v) => v.geometry(),
        }
    }

    /// Scalar view; label volumes are converted value-by-value.
    pub fn into_scalar<T: Real>(self) -> ScalarVolume<T> {
        match self {
            LoadedVolume::Scalar(v) => v.cast(),
            LoadedVolume::Label(l) => ScalarVolume::new(
                l.geometry().clone(),
                l.labels().iter().map(|&x| T::of(x as f64)).collect(),
            )
            .expect("labels are finite"),
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            LoadedVolume::Label(l) => Ok(l),
            LoadedVolume::Scalar(v) => {
                let mut labels = Vec::with_capacity(v.values().len());
                for &x in v.values() {
                    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
                        return Err(Error::InvalidData(format!(
                            "value {x} is not a valid segmentation label"
                        )));
                    }
                    labels.push(x as u32);
                }
                LabelVolume::new(v.geometry().clone(), labels)
            }
        }
    }

    pub fn into_probability<T: Real>(self) -> Result<ProbabilityVolume<T>> {
        ProbabilityVolume::try_from(self.into_scalar::<T>())
    }

    /// Non-zero voxels.
    pub fn into_mask(self) -> BinaryMask {
        match self {
            LoadedVolume::Label(l) => BinaryMask::new(
                l.geometry().clone(),
                l.labels().iter().map(|&x| x != 0).collect(),
            ),
            LoadedVolume::Scalar(v) => BinaryMask::new(
                v.geometry().clone(),
                v.values().iter().map(|&x| x != 0.0).collect(),
            ),
        }
        .expect("length matches geometry")
    }
}

/// Anything that can be written as a NIfTI-1 payload.
pub trait NiftiPayload {
    fn geometry(&self) -> &VolumeGeometry;
    fn datatype(&self) -> (i16, i16);
    fn encode(&self, out: &mut Vec<u8>);
}

impl<T: Real> NiftiPayload for ScalarVolume<T> {
    fn geometry(&self) -> &VolumeGeometry {
        ScalarVolume::geometry(self)
    }

    fn datatype(&self) -> (i16, i16) {
        (T::NIFTI_DATATYPE, T::NIFTI_BITPIX)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        for &v in self.values() {
            v.write_le(out);
        }
    }
}

impl<T: Real> NiftiPayload for ProbabilityVolume<T> {
    fn geometry(&self) -> &VolumeGeometry {
        ProbabilityVolume::geometry(self)
    }

    fn datatype(&self) -> (i16, i16) {
        self.as_scalar().datatype()
    }

    fn encode(&self, out: &mut Vec<u8>) {
        self.as_scalar().encode(out)
    }
}

impl NiftiPayload for LabelVolume {
    fn geometry(&self) -> &VolumeGeometry {
        LabelVolume::geometry(self)
    }

    fn datatype(&self) -> (i16, i16) {
        let max = self.labels().iter().copied().max().unwrap_or(0);
        if max <= u8::MAX as u32 {
            (DT_UINT8, 8)
        } else if max <= i16::MAX as u32 {
            (DT_INT16, 16)
        } else {
            (DT_INT32, 32)
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        match self.datatype().0 {
            DT_UINT8 => out.extend(self.labels().iter().map(|&l| l as u8)),
            DT_INT16 => {
                for &l in self.labels() {
                    out.extend_from_slice(&(l as i16).to_le_bytes());
                }
            }
            _ => {
                for &l in self.labels() {
                    out.extend_from_slice(&(l.min(i32::MAX as u32) as i32).to_le_bytes());
                }
            }
        }
    }
}

impl NiftiPayload for BinaryMask {
    fn geometry(&self) -> &VolumeGeometry {
        BinaryMask::geometry(self)
    }

    fn datatype(&self) -> (i16, i16) {
        (DT_UINT8, 8)
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend(self.bits().iter().map(|&b| b as u8));
    }
}

/// Read a NIfTI-1 file, gzip-compressed or not (detected from content).
pub fn load_volume(path: impl AsRef<Path>) -> Result<LoadedVolume> {
    let path = path.as_ref();
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::nifti(path, format!("gzip stream: {e}")))?;
        out
    } else {
        raw
    };
    if bytes.len() < HEADER_SIZE {
        return Err(Error::nifti(path, "file shorter than the 348-byte header"));
    }
    if LittleEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
        decode::<LittleEndian>(path, &bytes)
    } else if BigEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
        decode::<BigEndian>(path, &bytes)
    } else {
        Err(Error::nifti(path, "sizeof_hdr is not 348"))
    }
}

fn decode<E: ByteOrder>(path: &Path, b: &[u8]) -> Result<LoadedVolume> {
    let err = |m: String| Error::nifti(path, m);
    if &b[344..348] != MAGIC {
        return Err(err(format!("magic {:?} is not n+1 (single-file NIfTI-1)", &b[344..348])));
    }
    let i16_at = |o: usize| E::read_i16(&b[o..o + 2]);
    let f32_at = |o: usize| E::read_f32(&b[o..o + 4]) as f64;

    let dim: Vec<i16> = (0..8).map(|i| i16_at(40 + 2 * i)).collect();
    let ndim = dim[0];
    if !(1..=7).contains(&ndim) {
        return Err(err(format!("dim[0] = {ndim} out of range")));
    }
    if ndim > 3 && dim[4..=ndim as usize].iter().any(|&d| d != 1) {
        return Err(err(format!("payload is not 3D (dim = {:?})", &dim[..=ndim as usize])));
    }
    let mut dims = [1usize; 3];
    for axis in 0..3 {
        if axis < ndim as usize {
            let d = dim[axis + 1];
            if d <= 0 {
                return Err(err(format!("dim[{}] = {d} is not positive", axis + 1)));
            }
            dims[axis] = d as usize;
        }
    }

    let pixdim: Vec<f64> = (0..8).map(|i| f32_at(76 + 4 * i)).collect();
    let spacing = [pixdim[1], pixdim[2], pixdim[3]];
    if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(err(format!("spacing {spacing:?} must be positive")));
    }

    let qform_code = i16_at(252);
    let sform_code = i16_at(254);
    let affine = if sform_code > 0 {
        let mut a = [[0.0; 4]; 4];
        for (r, row) in a.iter_mut().take(3).enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = f32_at(280 + 16 * r + 4 * c);
            }
        }
        a[3][3] = 1.0;
        a
    } else if qform_code > 0 {
        qform_affine(
            [f32_at(256), f32_at(260), f32_at(264)],
            [f32_at(268), f32_at(272), f32_at(276)],
            spacing,
            pixdim[0],
        )
    } else {
        let mut a = [[0.0; 4]; 4];
        for axis in 0..3 {
            a[axis][axis] = spacing[axis];
        }
        a[3][3] = 1.0;
        a
    };
    let geometry = VolumeGeometry::with_affine(dims, spacing, affine)?;

    let datatype = i16_at(70);
    let width = match datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        DT_INT32 | DT_FLOAT32 => 4,
        DT_FLOAT64 => 8,
        other => return Err(err(format!("unsupported datatype code {other}"))),
    };
    let vox_offset = f32_at(108);
    if !(vox_offset >= HEADER_SIZE as f64) || vox_offset.fract() != 0.0 {
        return Err(err(format!("invalid vox_offset {vox_offset}")));
    }
    let start = vox_offset as usize;
    let n = geometry.voxel_count();
    let end = start + n * width;
    if b.len() < end {
        return Err(err(format!(
            "payload truncated: need {} bytes, file has {}",
            end,
            b.len()
        )));
    }
    let data = &b[start..end];

    let slope = f32_at(112);
    let inter = f32_at(116);
    let rescale = slope.is_finite() && slope != 0.0 && (slope != 1.0 || inter != 0.0);
    let is_int = matches!(datatype, DT_UINT8 | DT_INT16 | DT_INT32);

    if is_int && !rescale {
        let labels: Vec<i64> = match datatype {
            DT_UINT8 => data.iter().map(|&v| v as i64).collect(),
            DT_INT16 => data.chunks_exact(2).map(|c| E::read_i16(c) as i64).collect(),
            _ => data.chunks_exact(4).map(|c| E::read_i32(c) as i64).collect(),
        };
        if let Some(neg) = labels.iter().find(|&&l| l < 0) {
            return Err(err(format!("negative label {neg} in integer volume")));
        }
        let labels = labels.into_iter().map(|l| l as u32).collect();
        return Ok(LoadedVolume::Label(LabelVolume::new(geometry, labels)?));
    }

    let mut values: Vec<f64> = match datatype {
        DT_UINT8 => data.iter().map(|&v| v as f64).collect(),
        DT_INT16 => data.chunks_exact(2).map(|c| E::read_i16(c) as f64).collect(),
        DT_INT32 => data.chunks_exact(4).map(|c| E::read_i32(c) as f64).collect(),
        DT_FLOAT32 => data.chunks_exact(4).map(|c| E::read_f32(c) as f64).collect(),
        _ => data.chunks_exact(8).map(E::read_f64).collect(),
    };
    if rescale {
        for v in &mut values {
            *v = *v * slope + inter;
        }
    }
    ScalarVolume::new(geometry, values)
        .map(LoadedVolume::Scalar)
        .map_err(|e| err(e.to_string()))
}

fn qform_affine(bcd: [f64; 3], offset: [f64; 3], spacing: [f64; 3], qfac: f64) -> [[f64; 4]; 4] {
    let [b, c, d] = bcd;
    let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
    let r = [
        [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
        [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
        [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
    ];
    let qfac = if qfac < 0.0 { -1.0 } else { 1.0 };
    let scale = [spacing[0], spacing[1], spacing[2] * qfac];
    let mut out = [[0.0; 4]; 4];
    for row in 0..3 {
        for col in 0..3 {
            out[row][col] = r[row][col] * scale[col];
        }
        out[row][3] = offset[row];
    }
    out[3][3] = 1.0;
    out
}

fn encode_header(geometry: &VolumeGeometry, datatype: i16, bitpix: i16) -> Vec<u8> {
    let mut h = vec![0u8; VOX_OFFSET];
    LittleEndian::write_i32(&mut h[0..4], HEADER_SIZE as i32);
    h[38] = b'r';
    let dims = geometry.dims();
    let mut dim = [1i16; 8];
    dim[0] = 3;
    for axis in 0..3 {
        dim[axis + 1] = dims[axis] as i16;
    }
    for (i, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[40 + 2 * i..42 + 2 * i], *d);
    }
    LittleEndian::write_i16(&mut h[70..72], datatype);
    LittleEndian::write_i16(&mut h[72..74], bitpix);
    let spacing = geometry.spacing();
    let mut pixdim = [1.0f32; 8];
    for axis in 0..3 {
        pixdim[axis + 1] = spacing[axis] as f32;
    }
    for (i, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[76 + 4 * i..80 + 4 * i], *p);
    }
    LittleEndian::write_f32(&mut h[108..112], VOX_OFFSET as f32);
    LittleEndian::write_f32(&mut h[112..116], 1.0);
    LittleEndian::write_f32(&mut h[116..120], 0.0);
    h[123] = 2; // xyzt_units: mm
    let descrip = b"voxelval";
    h[148..148 + descrip.len()].copy_from_slice(descrip);
    LittleEndian::write_i16(&mut h[252..254], 0);
    LittleEndian::write_i16(&mut h[254..256], 2); // NIFTI_XFORM_ALIGNED_ANAT
    let affine = geometry.affine();
    for r in 0..3 {
        for c in 0..4 {
            let o = 280 + 16 * r + 4 * c;
            LittleEndian::write_f32(&mut h[o..o + 4], affine[r][c] as f32);
        }
    }
    h[344..348].copy_from_slice(MAGIC);
    // Bytes 348..352 stay zero: no header extensions.
    h
}

/// Write `volume` as NIfTI-1; a `.gz` suffix selects gzip compression.
///
/// The file is written to a temporary sibling and renamed into place, so a
/// failed write never leaves a partial file at `path`.
pub fn save_volume(volume: &impl NiftiPayload, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let geometry = volume.geometry();
    if geometry.dims().iter().any(|&d| d > i16::MAX as usize) {
        return Err(Error::InvalidGeometry(format!(
            "dims {:?} exceed the NIfTI-1 limit of 32767",
            geometry.dims()
        )));
    }
    let (datatype, bitpix) = volume.datatype();
    let mut bytes = encode_header(geometry, datatype, bitpix);
    volume.encode(&mut bytes);

    let gz = path.extension().is_some_and(|e| e == "gz");
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".voxelval-")
        .tempfile_in(parent)
        .map_err(|e| Error::io(path, e))?;
    let written = if gz {
        let mut enc = GzEncoder::new(tmp.as_file_mut(), Compression::default());
        enc.write_all(&bytes).and_then(|_| enc.finish().map(|_| ()))
    } else {
        tmp.as_file_mut().write_all(&bytes)
    };
    written
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn label_round_trip() {
        let dir = tmpdir();
        let g = VolumeGeometry::new([5, 4, 3], [1.0, 1.5, 2.0]).unwrap();
        let seg = LabelVolume::from_fn(g, |[i, j, k]| ((i + j + k) % 5) as u32).unwrap();
        for name in ["seg.nii", "seg.nii.gz"] {
            let p = dir.path().join(name);
            save_volume(&seg, &p).unwrap();
            let back = load_volume(&p).unwrap().into_labels().unwrap();
            assert_eq!(back.labels(), seg.labels());
            assert_eq!(back.geometry(), seg.geometry());
        }
    }

    #[test]
    fn scalar_round_trip_is_bit_identical() {
        let dir = tmpdir();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let aff = [
            [-1.0, 0.0, 0.0, 120.5],
            [0.0, -1.25, 0.0, 110.0],
            [0.0, 0.0, 2.5, -70.25],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let g = VolumeGeometry::with_affine([7, 6, 5], [1.0, 1.25, 2.5], aff).unwrap();
        let vals: Vec<f64> = (0..g.voxel_count()).map(|_| rng.gen_range(-1e3..1e3)).collect();
        let v = ScalarVolume::new(g, vals).unwrap();
        let p = dir.path().join("v.nii.gz");
        save_volume(&v, &p).unwrap();
        match load_volume(&p).unwrap() {
            LoadedVolume::Scalar(back) => {
                assert_eq!(back.values(), v.values());
                assert_eq!(back.geometry(), v.geometry());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn f32_probability_round_trip() {
        let dir = tmpdir();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = VolumeGeometry::isotropic([6, 6, 6]);
        let vals: Vec<f32> = (0..216).map(|_| rng.gen::<f32>()).collect();
        let p = ProbabilityVolume::new(g, vals).unwrap();
        let path = dir.path().join("p.nii");
        save_volume(&p, &path).unwrap();
        let back: ProbabilityVolume<f32> = load_volume(&path).unwrap().into_probability().unwrap();
        let max_diff = back
            .values()
            .iter()
            .zip(p.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert_eq!(max_diff, 0.0);
    }

    #[test]
    fn zeros_volume_loads() {
        let dir = tmpdir();
        let v = ScalarVolume::filled(VolumeGeometry::isotropic([8, 8, 8]), 0.0f32);
        let p = dir.path().join("z.nii");
        save_volume(&v, &p).unwrap();
        let back: ScalarVolume<f64> = load_volume(&p).unwrap().into_scalar();
        assert_eq!(back.values().len(), 512);
        assert!(back.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn brats_header_geometry() {
        let dir = tmpdir();
        let g = VolumeGeometry::isotropic([240, 240, 155]);
        let p = dir.path().join("brats.nii.gz");
        save_volume(&BinaryMask::empty(g), &p).unwrap();
        let back = load_volume(&p).unwrap();
        assert_eq!(back.geometry().dims(), [240, 240, 155]);
        assert_eq!(back.geometry().spacing(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn write_to_missing_directory_fails_cleanly() {
        let dir = tmpdir();
        let target = dir.path().join("missing").join("v.nii");
        let v = ScalarVolume::filled(VolumeGeometry::isotropic([2, 2, 2]), 1.0f64);
        assert!(matches!(save_volume(&v, &target), Err(Error::Io { .. })));
        assert!(!target.exists());
    }

    #[cfg(unix)]
    #[test]
    fn write_to_read_only_directory_leaves_nothing() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tmpdir();
        let ro = dir.path().join("ro");
        fs::create_dir(&ro).unwrap();
        fs::set_permissions(&ro, fs::Permissions::from_mode(0o555)).unwrap();
        let target = ro.join("v.nii");
        let v = ScalarVolume::filled(VolumeGeometry::isotropic([2, 2, 2]), 1.0f64);
        let res = save_volume(&v, &target);
        // root ignores directory permissions; only check the contract when it applies.
        if res.is_err() {
            assert!(!target.exists());
            assert_eq!(fs::read_dir(&ro).unwrap().count(), 0);
        }
        fs::set_permissions(&ro, fs::Permissions::from_mode(0o755)).unwrap();
    }

    fn raw_header(datatype: i16, bitpix: i16, dims: [i16; 8]) -> Vec<u8> {
        let g = VolumeGeometry::isotropic([2, 2, 2]);
        let mut h = encode_header(&g, datatype, bitpix);
        for (i, d) in dims.iter().enumerate() {
            LittleEndian::write_i16(&mut h[40 + 2 * i..42 + 2 * i], *d);
        }
        h
    }

    #[test]
    fn rejects_non_3d_and_bad_datatypes() {
        let dir = tmpdir();
        let p = dir.path().join("bad.nii");
        let mut bytes = raw_header(DT_UINT8, 8, [4, 2, 2, 2, 3, 1, 1, 1]);
        bytes.extend(vec![0u8; 24]);
        fs::write(&p, &bytes).unwrap();
        assert!(load_volume(&p).is_err());

        let mut bytes = raw_header(DT_UINT8, 8, [4, 2, 2, 2, 1, 1, 1, 1]);
        bytes.extend(vec![1u8; 8]);
        fs::write(&p, &bytes).unwrap();
        assert_eq!(load_volume(&p).unwrap().geometry().dims(), [2, 2, 2]);

        let mut bytes = raw_header(32, 64, [3, 2, 2, 2, 1, 1, 1, 1]);
        bytes.extend(vec![0u8; 64]);
        fs::write(&p, &bytes).unwrap();
        let e = load_volume(&p).unwrap_err().to_string();
        assert!(e.contains("unsupported datatype"), "{e}");
    }

    #[test]
    fn rejects_zero_spacing_and_nan() {
        let dir = tmpdir();
        let p = dir.path().join("bad.nii");
        let mut bytes = raw_header(DT_FLOAT32, 32, [3, 2, 2, 2, 1, 1, 1, 1]);
        LittleEndian::write_f32(&mut bytes[80..84], 0.0);
        bytes.extend(vec![0u8; 32]);
        fs::write(&p, &bytes).unwrap();
        assert!(load_volume(&p).is_err());

        let mut bytes = raw_header(DT_FLOAT32, 32, [3, 2, 2, 2, 1, 1, 1, 1]);
        for i in 0..8 {
            bytes.extend_from_slice(&(if i == 5 { f32::NAN } else { 1.0f32 }).to_le_bytes());
        }
        fs::write(&p, &bytes).unwrap();
        assert!(load_volume(&p).unwrap_err().to_string().contains("non-finite"));
    }

    #[test]
    fn rescale_slope_is_applied() {
        let dir = tmpdir();
        let p = dir.path().join("scaled.nii");
        let mut bytes = raw_header(DT_INT16, 16, [3, 2, 2, 2, 1, 1, 1, 1]);
        LittleEndian::write_f32(&mut bytes[112..116], 0.5);
        LittleEndian::write_f32(&mut bytes[116..120], 10.0);
        for i in 0..8i16 {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        fs::write(&p, &bytes).unwrap();
        match load_volume(&p).unwrap() {
            LoadedVolume::Scalar(v) => assert_eq!(v.values()[3], 11.5),
            other => panic!("expected scalar, got {other:?}"),
        }
    }

    #[test]
    fn qform_used_when_no_sform() {
        let dir = tmpdir();
        let p = dir.path().join("q.nii");
        let mut bytes = raw_header(DT_UINT8, 8, [3, 2, 2, 2, 1, 1, 1, 1]);
        LittleEndian::write_i16(&mut bytes[254..256], 0);
        LittleEndian::write_i16(&mut bytes[252..254], 1);
        // 180 degree rotation about z: (b, c, d) = (0, 0, 1).
        LittleEndian::write_f32(&mut bytes[264..268], 1.0);
        LittleEndian::write_f32(&mut bytes[268..272], 5.0);
        bytes.extend(vec![0u8; 8]);
        fs::write(&p, &bytes).unwrap();
        let g = load_volume(&p).unwrap().geometry().clone();
        let a = g.affine();
        assert_eq!(a[0][0], -1.0);
        assert_eq!(a[1][1], -1.0);
        assert_eq!(a[2][2], 1.0);
        assert_eq!(a[0][3], 5.0);
    }

    #[test]
    fn big_endian_header_is_read() {
        let dir = tmpdir();
        let p = dir.path().join("be.nii");
        let mut h = vec![0u8; VOX_OFFSET];
        BigEndian::write_i32(&mut h[0..4], 348);
        for (i, d) in [3i16, 2, 2, 2, 1, 1, 1, 1].iter().enumerate() {
            BigEndian::write_i16(&mut h[40 + 2 * i..42 + 2 * i], *d);
        }
        BigEndian::write_i16(&mut h[70..72], DT_INT16);
        for i in 0..8 {
            BigEndian::write_f32(&mut h[76 + 4 * i..80 + 4 * i], 1.0);
        }
        BigEndian::write_f32(&mut h[108..112], 352.0);
        h[344..348].copy_from_slice(MAGIC);
        for i in 0..8i16 {
            h.extend_from_slice(&i.to_be_bytes());
        }
        fs::write(&p, &h).unwrap();
        let seg = load_volume(&p).unwrap().into_labels().unwrap();
        assert_eq!(seg.labels(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }
}
