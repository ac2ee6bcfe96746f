//! Fixed-point division of shared values by shared positive divisors.
//!
//! Route: bit-decompose the divisor through a masked opening, locate its top
//! bit as a shared one-hot, normalize into [1/2, 1) at an internal scale of
//! 2^26, run three Newton-Raphson reciprocal steps with exact truncation,
//! and scale the dividend through the same one-hot so the quotient lands
//! back at scale 2^f. Every step is either local, a Beaver product, or an
//! exact truncation; round count is constant.
//!
//! Message sequence per batch: MaskedOpen, BitOpen x6 (decomposition),
//! BitOpen x6 (top-bit scan), DaBitOpen (one-hot), then per product/trunc
//! the sequences documented in `mod.rs`.
//!
//! Contract: divisors satisfy 2^(-f+1) <= y < 2^(53-f) and quotients satisfy
//! |x/y| < 2^9 = 512. Division by zero or a negative divisor is
//! undefined-behavior-by-contract; debug builds can flag it through the
//! plaintext oracle harness, the protocol itself never learns.

use crate::error::Result;
use crate::fixedpoint::Ring64;
use crate::party::PartyCtx;
use crate::sharing::SharedVector;

use super::bits::{bits_to_arith, borrow_prefix, masked_open, word_and, Round};
use super::{exact_trunc, mul_raw_words};

/// Internal reciprocal scale 2^F.
const F: u32 = 26;
/// Right-shift safety margin applied to the large-divisor dividend path.
const DELTA: u32 = 10;
/// Largest supported top-bit index of the divisor (ring representation).
const MAX_TOP_BIT: u32 = 52;
/// Newton-Raphson seed 48/17-style affine start: 2.9142 - 2w.
const NR_SEED: f64 = 2.9142;

struct Reciprocal {
    /// Shares of 2^(F-1-p) for p < F, else 0.
    c_low: Vec<u64>,
    /// Shares of 2^(62-p-DELTA) for p >= F, else 0.
    c_high: Vec<u64>,
    /// Shares of the normalized reciprocal at scale 2^F.
    recip: Vec<u64>,
}

/// Compute the one-hot scaling constants and the NR reciprocal for a batch
/// of positive divisors.
fn reciprocal_parts(ctx: &mut PartyCtx, y: &[u64]) -> Result<Reciprocal> {
    let n = y.len();
    let p0 = ctx.is_p0();

    // Bit-decompose y: open y + r, then y_i = v_i ^ r_i ^ borrow_in_i.
    let masks = ctx.take_dual_masks(n)?;
    let arith: Vec<u64> = masks.iter().map(|m| m.arith).collect();
    let v = masked_open(ctx, y, &arith)?;
    let r_bits: Vec<u64> = masks.iter().map(|m| m.bits).collect();
    let borrows = borrow_prefix(ctx, &v, &r_bits)?;
    let y_bits: Vec<u64> = (0..n)
        .map(|i| {
            let base = r_bits[i] ^ (borrows[i] << 1);
            if p0 {
                base ^ v[i]
            } else {
                base
            }
        })
        .collect();

    // Suffix-OR from the top, then the top set bit as one-hot h = s ^ (s>>1).
    let mut s = y_bits;
    for level in 0..6 {
        let sh = 1u32 << level;
        let shifted: Vec<u64> = s.iter().map(|w| w >> sh).collect();
        let t = word_and(ctx, &s, &shifted)?;
        for i in 0..n {
            s[i] = s[i] ^ shifted[i] ^ t[i];
        }
    }
    let onehot: Vec<u64> = s.iter().map(|w| w ^ (w >> 1)).collect();

    // Arithmetic shares of one-hot bits 0..=MAX_TOP_BIT, batched.
    let per = (MAX_TOP_BIT + 1) as usize;
    let mut flat_bits = Vec::with_capacity(n * per);
    for w in &onehot {
        for bit in 0..=MAX_TOP_BIT {
            flat_bits.push((w >> bit) & 1);
        }
    }
    let flat_arith = bits_to_arith(ctx, &flat_bits)?;

    let mut c_all = vec![0u64; n];
    let mut c_low = vec![0u64; n];
    let mut c_high = vec![0u64; n];
    for i in 0..n {
        for bit in 0..=MAX_TOP_BIT {
            let h = flat_arith[i * per + bit as usize];
            c_all[i] = c_all[i].wrapping_add(h << (62 - bit));
            if bit < F {
                c_low[i] = c_low[i].wrapping_add(h << (F - 1 - bit));
            } else {
                c_high[i] = c_high[i].wrapping_add(h << (62 - bit - DELTA));
            }
        }
    }

    // w = y * 2^(62-p) lands in [2^62, 2^63); bring it to scale F.
    let w_big = mul_raw_words(ctx, y, &c_all)?;
    let w = exact_trunc(ctx, &w_big, 63 - F, Round::Nearest)?;

    // v0 = 2.9142*2^F - 2w, then three NR steps v <- v(2*2^F - wv)/2^F.
    let seed = (NR_SEED * 2f64.powi(F as i32)).round() as u64;
    let two = 1u64 << (F + 1);
    let mut recip: Vec<u64> = w
        .iter()
        .map(|ws| {
            let neg = 0u64.wrapping_sub(ws << 1);
            if p0 {
                neg.wrapping_add(seed)
            } else {
                neg
            }
        })
        .collect();
    for _ in 0..3 {
        let prod = mul_raw_words(ctx, &recip, &w)?;
        let m1 = exact_trunc(ctx, &prod, F, Round::Nearest)?;
        let m2: Vec<u64> = m1
            .iter()
            .map(|m| {
                let neg = 0u64.wrapping_sub(*m);
                if p0 {
                    neg.wrapping_add(two)
                } else {
                    neg
                }
            })
            .collect();
        let prod2 = mul_raw_words(ctx, &recip, &m2)?;
        recip = exact_trunc(ctx, &prod2, F, Round::Nearest)?;
    }

    Ok(Reciprocal {
        c_low,
        c_high,
        recip,
    })
}

fn apply_quotient(
    ctx: &mut PartyCtx,
    x: &[u64],
    rec: &Reciprocal,
    broadcast: bool,
) -> Result<Vec<u64>> {
    let n = x.len();
    let pick = |v: &[u64], i: usize| if broadcast { v[0] } else { v[i] };

    // t = x*2^(F-1-p): small-divisor branch is an exact product, the
    // large-divisor branch shifts down by 63-F-DELTA afterward. The one-hot
    // makes exactly one branch nonzero.
    let mut lhs = Vec::with_capacity(2 * n);
    lhs.extend_from_slice(x);
    lhs.extend_from_slice(x);
    let mut rhs = Vec::with_capacity(2 * n);
    for i in 0..n {
        rhs.push(pick(&rec.c_low, i));
    }
    for i in 0..n {
        rhs.push(pick(&rec.c_high, i));
    }
    let prods = mul_raw_words(ctx, &lhs, &rhs)?;
    let t_high = exact_trunc(ctx, &prods[n..], 63 - F - DELTA, Round::Nearest)?;
    let t: Vec<u64> = (0..n)
        .map(|i| prods[i].wrapping_add(t_high[i]))
        .collect();

    // q = t * recip / 2^(2F - f).
    let rec_vec: Vec<u64> = (0..n).map(|i| pick(&rec.recip, i)).collect();
    let qa = mul_raw_words(ctx, &t, &rec_vec)?;
    exact_trunc(ctx, &qa, 2 * F - ctx.fx.frac_bits, Round::Nearest)
}

/// Element-wise fixed-point division `x / y`; `|result - x/y| <= 2^(-f+2)`
/// within the divisor/quotient contract at the top of this module.
pub fn divide(ctx: &mut PartyCtx, x: &SharedVector, y: &SharedVector) -> Result<SharedVector> {
    if x.len() != y.len() {
        return Err(crate::error::Error::ShapeMismatch(format!(
            "divide operands: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let y_words: Vec<u64> = y.vals.iter().map(|r| r.0).collect();
    let rec = reciprocal_parts(ctx, &y_words)?;
    let x_words: Vec<u64> = x.vals.iter().map(|r| r.0).collect();
    let q = apply_quotient(ctx, &x_words, &rec, false)?;
    Ok(SharedVector {
        owner: x.owner,
        vals: q.into_iter().map(Ring64).collect(),
    })
}

/// Divide a whole vector by one shared positive scalar, paying the divisor
/// decomposition once (the LU elimination pattern).
pub fn divide_by_scalar(
    ctx: &mut PartyCtx,
    x: &SharedVector,
    y_scalar: Ring64,
) -> Result<SharedVector> {
    let rec = reciprocal_parts(ctx, &[y_scalar.0])?;
    let x_words: Vec<u64> = x.vals.iter().map(|r| r.0).collect();
    let q = apply_quotient(ctx, &x_words, &rec, true)?;
    Ok(SharedVector {
        owner: x.owner,
        vals: q.into_iter().map(Ring64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn run_divide(frac_bits: u32, xs: &[f64], ys: &[f64], seed: u64) -> Vec<f64> {
        let cfg = cfg_with(frac_bits, seed);
        let (x0, x1) = share_reals(&cfg, xs, seed + 1);
        let (y0, y1) = share_reals(&cfg, ys, seed + 2);
        let out = run_symmetric(&cfg, (vec![x0, y0], vec![x1, y1]), |ctx, mut v| {
            let y = v.pop().unwrap();
            let x = v.pop().unwrap();
            divide(ctx, &x, &y)
        });
        decode_all(cfg.fx, &out)
    }

    #[test]
    fn divide_basics() {
        let got = run_divide(15, &[7.0, 1.0], &[2.0, 3.0], 300);
        assert!((got[0] - 3.5).abs() <= 2f64.powi(-13), "7/2 -> {}", got[0]);
        assert!(
            (got[1] - 1.0 / 3.0).abs() <= 2f64.powi(-13),
            "1/3 -> {}",
            got[1]
        );
    }

    #[test]
    fn divide_error_bound_over_random_positive_divisors() {
        // 10^4 trials against the plaintext oracle within 2^(-f+2).
        let mut rng = ChaCha12Rng::seed_from_u64(301);
        let n = 10_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let y = 10f64.powf(rng.random_range(-2.0..3.0)); // 0.01 .. 1000
            let q = rng.random_range(-200.0..200.0);
            ys.push(y);
            xs.push(q * y);
        }
        let got = run_divide(15, &xs, &ys, 302);
        let bound = 2f64.powi(-13);
        let q = |v: f64| (v * 32768.0).round() / 32768.0;
        for i in 0..n {
            // The gadget's inputs are the encoded values; measure against
            // the quotient of what was actually shared.
            let want = q(xs[i]) / q(ys[i]);
            assert!(
                (got[i] - want).abs() <= bound,
                "x={} y={} got={} want={want}",
                xs[i],
                ys[i],
                got[i]
            );
        }
    }

    #[test]
    fn divide_then_multiply_roundtrip() {
        let mut rng = ChaCha12Rng::seed_from_u64(303);
        let n = 256;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let y = rng.random_range(0.5..50.0);
            xs.push(rng.random_range(-100.0..100.0));
            ys.push(y);
        }
        let cfg = cfg_with(15, 304);
        let (x0, x1) = share_reals(&cfg, &xs, 305);
        let (y0, y1) = share_reals(&cfg, &ys, 306);
        let out = run_symmetric(&cfg, (vec![x0, y0], vec![x1, y1]), |ctx, mut v| {
            let y = v.pop().unwrap();
            let x = v.pop().unwrap();
            let q = divide(ctx, &x, &y)?;
            super::super::mul_fx(ctx, &q, &y)
        });
        let got = decode_all(cfg.fx, &out);
        for i in 0..n {
            let bound = 2f64.powi(-12) * ys[i].abs();
            assert!(
                (got[i] - xs[i]).abs() <= bound,
                "roundtrip x={} y={} got={}",
                xs[i],
                ys[i],
                got[i]
            );
        }
    }

    #[test]
    fn divide_by_scalar_matches_elementwise() {
        let cfg = cfg_with(18, 307);
        let xs = [12.0, -30.0, 0.5, 100.0];
        let (x0, x1) = share_reals(&cfg, &xs, 308);
        let (y0, y1) = share_reals(&cfg, &[8.0], 309);
        let out = run_symmetric(&cfg, (vec![x0, y0], vec![x1, y1]), |ctx, mut v| {
            let y = v.pop().unwrap();
            let x = v.pop().unwrap();
            divide_by_scalar(ctx, &x, y.vals[0])
        });
        let got = decode_all(cfg.fx, &out);
        for (g, x) in got.iter().zip(xs) {
            assert!((g - x / 8.0).abs() <= 2f64.powi(-16), "got {g}");
        }
    }
}
