//! Fixed-point encoding into the `Z_2^64` ring.
//!
//! A real `x` is stored as `round(x * 2^f)` wrapped into a 64-bit word;
//! negative values occupy the top half of the ring (two's complement).
//! All share arithmetic lives in this ring and wraps silently; wrapping is
//! the contract, not an error. A product of two scale-`f` values sits at
//! scale `2f` and must be truncated back before decoding.

use crate::error::{Error, Result};

/// One element of `Z_2^64`, the residue a share or an encoded value lives in.
///
/// Serializes as 8 little-endian bytes everywhere (wire frames, share files,
/// test vectors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Ring64(pub u64);

impl Ring64 {
    pub const ZERO: Ring64 = Ring64(0);
    pub const ONE: Ring64 = Ring64(1);

    #[inline]
    pub fn wrap_add(self, rhs: Ring64) -> Ring64 {
        Ring64(self.0.wrapping_add(rhs.0))
    }

    #[inline]
    pub fn wrap_sub(self, rhs: Ring64) -> Ring64 {
        Ring64(self.0.wrapping_sub(rhs.0))
    }

    #[inline]
    pub fn wrap_neg(self) -> Ring64 {
        Ring64(self.0.wrapping_neg())
    }

    #[inline]
    pub fn wrap_mul(self, rhs: Ring64) -> Ring64 {
        Ring64(self.0.wrapping_mul(rhs.0))
    }

    /// Signed interpretation (two's complement).
    #[inline]
    pub fn as_signed(self) -> i64 {
        self.0 as i64
    }

    pub fn to_le_bytes(self) -> [u8; 8] {
        self.0.to_le_bytes()
    }

    pub fn from_le_bytes(b: [u8; 8]) -> Ring64 {
        Ring64(u64::from_le_bytes(b))
    }
}

impl From<u64> for Ring64 {
    fn from(v: u64) -> Self {
        Ring64(v)
    }
}

/// Session-wide fixed-point parameters. `frac_bits` is a run-wide constant:
/// truncation correctness requires one global scale, so it is never mixed
/// within a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FxConfig {
    /// Ring width in bits; fixed at 64.
    pub ring_bits: u32,
    /// Fractional bits `f`. Default 15; regression runs use 18.
    pub frac_bits: u32,
}

impl FxConfig {
    pub const DEFAULT_FRAC_BITS: u32 = 15;
    pub const REGRESSION_FRAC_BITS: u32 = 18;

    pub fn new(frac_bits: u32) -> Result<FxConfig> {
        if !(1..=30).contains(&frac_bits) {
            return Err(Error::Config(format!(
                "frac_bits must be in 1..=30, got {frac_bits}"
            )));
        }
        Ok(FxConfig {
            ring_bits: 64,
            frac_bits,
        })
    }

    /// Scaling factor `2^f`.
    #[inline]
    pub fn scale(&self) -> f64 {
        (1u64 << self.frac_bits) as f64
    }

    /// Largest representable magnitude, `2^(63-f)`.
    pub fn max_magnitude(&self) -> f64 {
        2f64.powi(63 - self.frac_bits as i32)
    }

    /// Encode a real into the ring: round-to-nearest (ties away from zero)
    /// of `x * 2^f`, wrapped mod 2^64.
    pub fn encode(&self, x: f64) -> Result<Ring64> {
        if !x.is_finite() || x.abs() >= self.max_magnitude() {
            return Err(Error::Overflow {
                value: x,
                max_pow: 63 - self.frac_bits as i32,
            });
        }
        // f64::round is round-half-away-from-zero; the scaled value fits in
        // i64 because |x| < 2^(63-f).
        let scaled = (x * self.scale()).round() as i64;
        Ok(Ring64(scaled as u64))
    }

    /// Decode a ring element: signed interpretation divided by `2^f`.
    /// Exact inverse of `encode` up to the rounding done there.
    #[inline]
    pub fn decode(&self, v: Ring64) -> f64 {
        v.as_signed() as f64 / self.scale()
    }
}

impl Default for FxConfig {
    fn default() -> Self {
        FxConfig {
            ring_bits: 64,
            frac_bits: Self::DEFAULT_FRAC_BITS,
        }
    }
}
