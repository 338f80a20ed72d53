//! Scalar abstraction shared by every voxel-valued type.
//!
//! Voxel intensities, probabilities, distances and statistics are generic over
//! [`Real`], which is implemented for `f32` and `f64`. Geometry (spacing and
//! affine) is always kept in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable as a voxel value.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// NIfTI-1 datatype code used when this type is written to disk.
    const NIFTI_DATATYPE: i16;
    /// Bytes per value in the NIfTI payload.
    const NIFTI_BITPIX: i16;

    /// Append the little-endian encoding of `self`.
    fn write_le(self, out: &mut Vec<u8>);

    /// Lossy conversion from `f64`.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::of(n as f64)
    }
}

impl Real for f32 {
    const NIFTI_DATATYPE: i16 = 16;
    const NIFTI_BITPIX: i16 = 32;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

impl Real for f64 {
    const NIFTI_DATATYPE: i16 = 64;
    const NIFTI_BITPIX: i16 = 64;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let xs = [1.0e16_f64, 1.0, -1.0e16, 1.0];
        let naive: f64 = xs.iter().sum();
        let comp: CompensatedSum<f64> = xs.iter().copied().collect();
        assert_eq!(comp.total(), 2.0);
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn datatype_codes() {
        assert_eq!(<f32 as Real>::NIFTI_DATATYPE, 16);
        assert_eq!(<f64 as Real>::NIFTI_DATATYPE, 64);
        let mut buf = Vec::new();
        1.5f32.write_le(&mut buf);
        assert_eq!(buf, 1.5f32.to_le_bytes());
    }
}
