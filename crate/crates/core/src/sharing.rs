//! Additive secret sharing over `Z_2^64`.
//!
//! A secret `x` is split into `share_P0 + share_P1 = x mod 2^64` with
//! `share_P0` uniform, so either share alone is independent of the secret.
//! All linear operations (add, subtract, public scale, public offset) are
//! local and exact; the helper party never holds data shares.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::fixedpoint::Ring64;
use crate::party::PartyId;

/// One party's share of a scalar secret.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Share {
    pub value: Ring64,
    pub owner: PartyId,
}

/// One party's shares of a vector secret. Both computing parties hold the
/// same length; reconstruction is element-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedVector {
    pub owner: PartyId,
    pub vals: Vec<Ring64>,
}

/// One party's shares of a row-major matrix secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedMatrix {
    pub owner: PartyId,
    pub rows: usize,
    pub cols: usize,
    pub vals: Vec<Ring64>,
}

/// Shares whose plaintexts are 0/1 at integer scale (not multiplied by 2^f).
/// Multiplying one of these by a fixed-point share needs no truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedBits {
    pub owner: PartyId,
    pub vals: Vec<Ring64>,
}

impl SharedBits {
    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn as_vector(&self) -> SharedVector {
        SharedVector {
            owner: self.owner,
            vals: self.vals.clone(),
        }
    }
}

/// Split a secret into two additive shares: P0's share is drawn uniformly,
/// P1's share is the difference.
pub fn share_secret(x: Ring64, rng: &mut impl RngCore) -> (Share, Share) {
    let r = Ring64(rng.next_u64());
    (
        Share {
            value: r,
            owner: PartyId::P0,
        },
        Share {
            value: x.wrap_sub(r),
            owner: PartyId::P1,
        },
    )
}

/// Recombine two scalar shares. Shares must come from distinct computing
/// parties.
pub fn reconstruct(s0: Share, s1: Share) -> Result<Ring64> {
    if s0.owner == s1.owner {
        return Err(Error::ShapeMismatch(format!(
            "both shares owned by {:?}",
            s0.owner
        )));
    }
    Ok(s0.value.wrap_add(s1.value))
}

/// Share a plaintext slice element-wise.
pub fn share_vector(xs: &[Ring64], rng: &mut impl RngCore) -> (SharedVector, SharedVector) {
    let mut v0 = Vec::with_capacity(xs.len());
    let mut v1 = Vec::with_capacity(xs.len());
    for &x in xs {
        let r = Ring64(rng.next_u64());
        v0.push(r);
        v1.push(x.wrap_sub(r));
    }
    (
        SharedVector {
            owner: PartyId::P0,
            vals: v0,
        },
        SharedVector {
            owner: PartyId::P1,
            vals: v1,
        },
    )
}

pub fn share_matrix(
    rows: usize,
    cols: usize,
    xs: &[Ring64],
    rng: &mut impl RngCore,
) -> (SharedMatrix, SharedMatrix) {
    assert_eq!(xs.len(), rows * cols, "flat data must match shape");
    let (v0, v1) = share_vector(xs, rng);
    (
        SharedMatrix {
            owner: PartyId::P0,
            rows,
            cols,
            vals: v0.vals,
        },
        SharedMatrix {
            owner: PartyId::P1,
            rows,
            cols,
            vals: v1.vals,
        },
    )
}

pub fn reconstruct_vector(a: &SharedVector, b: &SharedVector) -> Result<Vec<Ring64>> {
    if a.owner == b.owner {
        return Err(Error::ShapeMismatch("shares from the same party".into()));
    }
    if a.vals.len() != b.vals.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector lengths differ: {} vs {}",
            a.vals.len(),
            b.vals.len()
        )));
    }
    Ok(a.vals
        .iter()
        .zip(&b.vals)
        .map(|(x, y)| x.wrap_add(*y))
        .collect())
}

pub fn reconstruct_matrix(a: &SharedMatrix, b: &SharedMatrix) -> Result<Vec<Ring64>> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::ShapeMismatch(format!(
            "matrix shapes differ: {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if a.owner == b.owner {
        return Err(Error::ShapeMismatch("shares from the same party".into()));
    }
    Ok(a.vals
        .iter()
        .zip(&b.vals)
        .map(|(x, y)| x.wrap_add(*y))
        .collect())
}

impl SharedVector {
    pub fn zeros(owner: PartyId, len: usize) -> SharedVector {
        SharedVector {
            owner,
            vals: vec![Ring64::ZERO; len],
        }
    }

    /// Share of a public constant vector: P0 carries the value, P1 zero.
    pub fn from_public(owner: PartyId, xs: &[Ring64]) -> SharedVector {
        let vals = match owner {
            PartyId::P0 => xs.to_vec(),
            _ => vec![Ring64::ZERO; xs.len()],
        };
        SharedVector { owner, vals }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn add(&self, rhs: &SharedVector) -> SharedVector {
        assert_eq!(self.len(), rhs.len());
        SharedVector {
            owner: self.owner,
            vals: self
                .vals
                .iter()
                .zip(&rhs.vals)
                .map(|(a, b)| a.wrap_add(*b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &SharedVector) -> SharedVector {
        assert_eq!(self.len(), rhs.len());
        SharedVector {
            owner: self.owner,
            vals: self
                .vals
                .iter()
                .zip(&rhs.vals)
                .map(|(a, b)| a.wrap_sub(*b))
                .collect(),
        }
    }

    pub fn neg(&self) -> SharedVector {
        SharedVector {
            owner: self.owner,
            vals: self.vals.iter().map(|a| a.wrap_neg()).collect(),
        }
    }

    /// Reconstructs to `scale * x + offset`; zero communication. The offset
    /// is added by P0 only so the sum of shares shifts exactly once.
    pub fn local_affine(&self, public_scale: Ring64, public_offset: Ring64) -> SharedVector {
        let add_offset = self.owner == PartyId::P0;
        SharedVector {
            owner: self.owner,
            vals: self
                .vals
                .iter()
                .map(|a| {
                    let scaled = a.wrap_mul(public_scale);
                    if add_offset {
                        scaled.wrap_add(public_offset)
                    } else {
                        scaled
                    }
                })
                .collect(),
        }
    }

    /// Share of the plaintext sum; local by linearity.
    pub fn sum(&self) -> Share {
        Share {
            owner: self.owner,
            value: self
                .vals
                .iter()
                .fold(Ring64::ZERO, |acc, v| acc.wrap_add(*v)),
        }
    }

    pub fn scalar(&self, idx: usize) -> Share {
        Share {
            owner: self.owner,
            value: self.vals[idx],
        }
    }
}

impl SharedMatrix {
    pub fn zeros(owner: PartyId, rows: usize, cols: usize) -> SharedMatrix {
        SharedMatrix {
            owner,
            rows,
            cols,
            vals: vec![Ring64::ZERO; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Ring64 {
        self.vals[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Ring64) {
        self.vals[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> SharedVector {
        SharedVector {
            owner: self.owner,
            vals: (0..self.rows).map(|r| self.at(r, c)).collect(),
        }
    }

    pub fn set_column(&mut self, c: usize, v: &SharedVector) {
        assert_eq!(v.len(), self.rows);
        for r in 0..self.rows {
            self.set(r, c, v.vals[r]);
        }
    }

    pub fn row(&self, r: usize) -> SharedVector {
        SharedVector {
            owner: self.owner,
            vals: self.vals[r * self.cols..(r + 1) * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> SharedMatrix {
        let mut vals = vec![Ring64::ZERO; self.vals.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                vals[c * self.rows + r] = self.at(r, c);
            }
        }
        SharedMatrix {
            owner: self.owner,
            rows: self.cols,
            cols: self.rows,
            vals,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::FxConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    struct FixedRng(u64);
    impl RngCore for FixedRng {
        fn next_u32(&mut self) -> u32 {
            self.0 as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            for b in dest.iter_mut() {
                *b = 0;
            }
        }
    }

    #[test]
    fn share_with_known_randomness_matches_definition() {
        let cfg = FxConfig::default();
        let x = cfg.encode(42.0).unwrap();
        let (s0, s1) = share_secret(x, &mut FixedRng(7));
        assert_eq!(s0.value, Ring64(7));
        assert_eq!(s1.value, x.wrap_sub(Ring64(7)));
        assert_eq!(reconstruct(s0, s1).unwrap(), x);
    }

    #[test]
    fn reconstruct_examples() {
        let s = |v, o| Share {
            value: Ring64(v),
            owner: o,
        };
        assert_eq!(
            reconstruct(s(7, PartyId::P0), s(35, PartyId::P1)).unwrap(),
            Ring64(42)
        );
        assert_eq!(
            reconstruct(s(0, PartyId::P0), s(0, PartyId::P1)).unwrap(),
            Ring64(0)
        );
        let x = 0xdead_beef_u64;
        assert_eq!(
            reconstruct(
                s(x, PartyId::P0),
                s(x.wrapping_neg(), PartyId::P1)
            )
            .unwrap(),
            Ring64(0)
        );
    }

    #[test]
    fn reconstruct_rejects_same_owner() {
        let s = Share {
            value: Ring64(1),
            owner: PartyId::P0,
        };
        assert!(reconstruct(s, s).is_err());
    }

    #[test]
    fn roundtrip_random_and_boundary_values() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut check = |x: u64| {
            let (s0, s1) = share_secret(Ring64(x), &mut rng);
            assert_eq!(reconstruct(s0, s1).unwrap(), Ring64(x));
        };
        for x in [0u64, 1, 1u64 << 63, u64::MAX] {
            check(x);
        }
        use rand::Rng;
        let mut rng2 = ChaCha12Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            check(rng2.random());
        }
    }

    #[test]
    fn linearity_matches_plaintext_ops() {
        let cfg = FxConfig::default();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let xs: Vec<Ring64> = (0..64).map(|i| cfg.encode(i as f64).unwrap()).collect();
        let ys: Vec<Ring64> = (0..64).map(|i| cfg.encode(-2.0 * i as f64).unwrap()).collect();
        let (x0, x1) = share_vector(&xs, &mut rng);
        let (y0, y1) = share_vector(&ys, &mut rng);

        let sum = reconstruct_vector(&x0.add(&y0), &x1.add(&y1)).unwrap();
        let diff = reconstruct_vector(&x0.sub(&y0), &x1.sub(&y1)).unwrap();
        for i in 0..64 {
            assert_eq!(sum[i], xs[i].wrap_add(ys[i]));
            assert_eq!(diff[i], xs[i].wrap_sub(ys[i]));
        }

        // Local sum of a shared vector reconstructs to the plaintext sum.
        let total = reconstruct(x0.sum(), x1.sum()).unwrap();
        let expect = xs.iter().fold(Ring64::ZERO, |a, v| a.wrap_add(*v));
        assert_eq!(total, expect);
    }

    #[test]
    fn local_affine_builds_missing_indicator_precursor() {
        // avail column of bits -> shares of (a - 1): 0 where present,
        // -1 where missing.
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let avail = [Ring64(1), Ring64(1), Ring64(0), Ring64(1)];
        let (a0, a1) = share_vector(&avail, &mut rng);
        let minus_one = Ring64(1u64.wrapping_neg());
        let r = reconstruct_vector(
            &a0.local_affine(Ring64::ONE, minus_one),
            &a1.local_affine(Ring64::ONE, minus_one),
        )
        .unwrap();
        assert_eq!(r, vec![Ring64(0), Ring64(0), minus_one, Ring64(0)]);
    }

    #[test]
    fn reconstruct_vector_rejects_length_mismatch() {
        let a = SharedVector {
            owner: PartyId::P0,
            vals: vec![Ring64(1); 3],
        };
        let b = SharedVector {
            owner: PartyId::P1,
            vals: vec![Ring64(1); 4],
        };
        assert!(reconstruct_vector(&a, &b).is_err());
    }

    #[test]
    fn share_distribution_is_uniform_by_chi_square() {
        // 10^5 sharings of the same secret; chi-square over 256 buckets of
        // the top byte of P0's share must not reject uniformity at alpha=0.01.
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let cfg = FxConfig::default();
        let x = cfg.encode(1234.5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut buckets = [0u64; 256];
        let n = 100_000;
        for _ in 0..n {
            let (s0, _) = share_secret(x, &mut rng);
            buckets[(s0.value.0 >> 56) as usize] += 1;
        }
        let expected = n as f64 / 256.0;
        let stat: f64 = buckets
            .iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum();
        let crit = ChiSquared::new(255.0).unwrap().inverse_cdf(0.99);
        assert!(
            stat < crit,
            "chi-square stat {stat} exceeds critical value {crit}"
        );
    }
}
