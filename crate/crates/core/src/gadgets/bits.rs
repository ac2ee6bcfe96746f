//! Exact bit-level gadgets: comparison, equality, and truncation.
//!
//! Shared pattern: the computing parties open `value + r` where r is a
//! dealer-dealt mask shared both additively and bitwise, so the opening is
//! uniform. The bits of `value = v - r` are then reachable through a borrow
//! circuit over the public v and the XOR-shared bits of r. Borrow propagation
//! runs as a Kogge-Stone prefix over 64-bit words, one AND-round per level,
//! so a batch of B elements costs a constant eight rounds end to end.
//!
//! Everything here is exact: no gadget in this module approximates.

use crate::error::Result;
use crate::fixedpoint::Ring64;
use crate::party::PartyCtx;
use crate::sharing::{SharedBits, SharedVector};
use crate::transport::Tag;

/// Upper bound on elements processed per communication round; large batches
/// split so the triple working set stays small while round counts remain a
/// function of batch size alone.
pub(super) const CHUNK: usize = 1 << 16;

/// Batched AND on XOR-shared words (64 bit lanes per word).
pub(super) fn word_and(ctx: &mut PartyCtx, xs: &[u64], ys: &[u64]) -> Result<Vec<u64>> {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.len() > CHUNK {
        let mut out = Vec::with_capacity(xs.len());
        for (cx, cy) in xs.chunks(CHUNK).zip(ys.chunks(CHUNK)) {
            out.extend(word_and(ctx, cx, cy)?);
        }
        return Ok(out);
    }
    let n = xs.len();
    let triples = ctx.take_word(n)?;
    let mut masked = Vec::with_capacity(2 * n);
    for i in 0..n {
        masked.push(xs[i] ^ triples[i].a);
    }
    for i in 0..n {
        masked.push(ys[i] ^ triples[i].b);
    }
    let theirs = ctx.exchange(Tag::BitOpen, &masked)?;
    let p0 = ctx.is_p0();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = masked[i] ^ theirs[i];
        let e = masked[n + i] ^ theirs[n + i];
        let mut z = triples[i].c ^ (d & triples[i].b) ^ (e & triples[i].a);
        if p0 {
            z ^= d & e;
        }
        out.push(z);
    }
    Ok(out)
}

/// Borrow prefix of `v - r` per element: bit i of the result word is the
/// XOR-shared borrow out of position i. Six AND-rounds (Kogge-Stone).
pub(super) fn borrow_prefix(ctx: &mut PartyCtx, v: &[u64], r_bits: &[u64]) -> Result<Vec<u64>> {
    let n = v.len();
    let p0 = ctx.is_p0();
    // generate g = !v & r, propagate p = !(v XOR r); disjoint, so the
    // prefix combine is (g2 ^ p2&g1, p2&p1).
    let mut g: Vec<u64> = (0..n).map(|i| !v[i] & r_bits[i]).collect();
    let mut p: Vec<u64> = (0..n)
        .map(|i| if p0 { !(v[i] ^ r_bits[i]) } else { r_bits[i] })
        .collect();

    for level in 0..6 {
        let s = 1u32 << level;
        let last = level == 5;
        let low_mask = (1u64 << s) - 1;
        // Positions below the shift distance combine with the identity
        // (g=0, p=1); zeros shift in for g, P0 patches ones into p.
        let g_shift: Vec<u64> = g.iter().map(|w| w << s).collect();
        let p_shift: Vec<u64> = p
            .iter()
            .map(|w| if p0 { (w << s) | low_mask } else { w << s })
            .collect();

        if last {
            let t = word_and(ctx, &p, &g_shift)?;
            for i in 0..n {
                g[i] ^= t[i];
            }
        } else {
            // Both ANDs of the level ride one opening round.
            let mut lhs = p.clone();
            lhs.extend_from_slice(&p);
            let mut rhs = g_shift;
            rhs.extend_from_slice(&p_shift);
            let t = word_and(ctx, &lhs, &rhs)?;
            for i in 0..n {
                g[i] ^= t[i];
                p[i] = t[n + i];
            }
        }
    }
    Ok(g)
}

/// Convert XOR-shared single bits (0/1 per element) into additive shares of
/// the same bits, burning one dual bit each. One opening round, bit-packed.
pub(super) fn bits_to_arith(ctx: &mut PartyCtx, xor_bits: &[u64]) -> Result<Vec<u64>> {
    let n = xor_bits.len();
    let duals = ctx.take_dual_bits(n)?;
    let words = n.div_ceil(64);
    let mut packed = vec![0u64; words];
    for i in 0..n {
        let masked = (xor_bits[i] ^ duals[i].xor) & 1;
        packed[i / 64] |= masked << (i % 64);
    }
    let theirs = ctx.exchange(Tag::DaBitOpen, &packed)?;
    let p0 = ctx.is_p0();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let c = ((packed[i / 64] ^ theirs[i / 64]) >> (i % 64)) & 1;
        // bit = c + beta - 2*c*beta with public c.
        let arith = if c == 0 {
            duals[i].arith
        } else {
            let one = if p0 { 1u64 } else { 0 };
            one.wrapping_sub(duals[i].arith)
        };
        out.push(arith);
    }
    Ok(out)
}

/// Open `value + r` between the computing parties; returns the public sums
/// and the masks that blinded them.
pub(super) fn masked_open(
    ctx: &mut PartyCtx,
    values: &[u64],
    mask_arith: &[u64],
) -> Result<Vec<u64>> {
    let mine: Vec<u64> = values
        .iter()
        .zip(mask_arith)
        .map(|(z, r)| z.wrapping_add(*r))
        .collect();
    let theirs = ctx.exchange(Tag::MaskedOpen, &mine)?;
    Ok(mine
        .iter()
        .zip(&theirs)
        .map(|(a, b)| a.wrapping_add(*b))
        .collect())
}

#[inline]
fn bit_of(words: &[u64], idx: usize, pos: u32) -> u64 {
    (words[idx] >> pos) & 1
}

/// Element-wise `x >= y` as integer-scale shared bits. Exact whenever the
/// signed difference stays below 2^63 in magnitude (callers keep operands
/// within +/-2^61, comfortably inside). Ties yield 1.
pub fn compare(ctx: &mut PartyCtx, x: &SharedVector, y: &SharedVector) -> Result<SharedBits> {
    let d = x.sub(y);
    let n = d.len();
    let masks = ctx.take_dual_masks(n)?;
    let d_words: Vec<u64> = d.vals.iter().map(|r| r.0).collect();
    let arith: Vec<u64> = masks.iter().map(|m| m.arith).collect();
    let v = masked_open(ctx, &d_words, &arith)?;
    let r_bits: Vec<u64> = masks.iter().map(|m| m.bits).collect();
    let borrows = borrow_prefix(ctx, &v, &r_bits)?;
    let p0 = ctx.is_p0();
    // msb(d) = v_63 ^ r_63 ^ borrow_into_63; x >= y iff msb is 0.
    let ge_xor: Vec<u64> = (0..n)
        .map(|i| {
            let public = if p0 { (v[i] >> 63) & 1 ^ 1 } else { 0 };
            public ^ bit_of(&r_bits, i, 63) ^ bit_of(&borrows, i, 62)
        })
        .collect();
    let vals = bits_to_arith(ctx, &ge_xor)?;
    Ok(SharedBits {
        owner: x.owner,
        vals: vals.into_iter().map(Ring64).collect(),
    })
}

/// Element-wise exact equality as integer-scale shared bits.
pub fn equals(ctx: &mut PartyCtx, x: &SharedVector, y: &SharedVector) -> Result<SharedBits> {
    let d = x.sub(y);
    let n = d.len();
    let masks = ctx.take_dual_masks(n)?;
    let d_words: Vec<u64> = d.vals.iter().map(|r| r.0).collect();
    let arith: Vec<u64> = masks.iter().map(|m| m.arith).collect();
    let v = masked_open(ctx, &d_words, &arith)?;
    let p0 = ctx.is_p0();
    // x == y iff v == r: start from per-bit agreement words and AND-reduce.
    let mut t: Vec<u64> = (0..n)
        .map(|i| {
            if p0 {
                !(v[i] ^ masks[i].bits)
            } else {
                masks[i].bits
            }
        })
        .collect();
    for level in (0..6).rev() {
        let s = 1u32 << level;
        let shifted: Vec<u64> = t.iter().map(|w| w >> s).collect();
        t = word_and(ctx, &t, &shifted)?;
    }
    let eq_xor: Vec<u64> = t.iter().map(|w| w & 1).collect();
    let vals = bits_to_arith(ctx, &eq_xor)?;
    Ok(SharedBits {
        owner: x.owner,
        vals: vals.into_iter().map(Ring64).collect(),
    })
}

/// Rounding convention for `exact_trunc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Round {
    /// Round to nearest, half toward +infinity.
    Nearest,
    /// Arithmetic shift: floor toward -infinity. This is the "eliminate the
    /// fractional part" convention.
    Floor,
}

/// Exact arithmetic shift of shared values by `shift` bits. Deterministic:
/// the result is a pure function of the plaintext, never of the sharing.
///
/// Requires `1 <= shift <= 63` and `|value| < 2^62` at the input scale.
pub fn exact_trunc(ctx: &mut PartyCtx, z: &[u64], shift: u32, round: Round) -> Result<Vec<u64>> {
    assert!((1..=63).contains(&shift), "shift {shift} out of range");
    let n = z.len();
    let masks = ctx.take_shift_masks(shift, n)?;
    let p0 = ctx.is_p0();
    // Bias by 2^63 so the subtraction circuit can treat the value as
    // unsigned, plus the rounding half when rounding to nearest.
    let half = match round {
        Round::Nearest => 1u64 << (shift - 1),
        Round::Floor => 0,
    };
    let bias = half.wrapping_add(1u64 << 63);
    let zz: Vec<u64> = z
        .iter()
        .map(|w| if p0 { w.wrapping_add(bias) } else { *w })
        .collect();
    let arith: Vec<u64> = masks.iter().map(|m| m.arith).collect();
    let v = masked_open(ctx, &zz, &arith)?;
    let r_bits: Vec<u64> = masks.iter().map(|m| m.bits).collect();
    let borrows = borrow_prefix(ctx, &v, &r_bits)?;

    // floor(zz / 2^s) = (v >> s) - (r >> s) - borrow_into_s + wrap * 2^(64-s).
    let mut both_bits = Vec::with_capacity(2 * n);
    for i in 0..n {
        both_bits.push(bit_of(&borrows, i, shift - 1));
    }
    for i in 0..n {
        both_bits.push(bit_of(&borrows, i, 63));
    }
    let both_arith = bits_to_arith(ctx, &both_bits)?;

    let unbias = 1u64 << (63 - shift);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let b_s = both_arith[i];
        let wrap = both_arith[n + i];
        let mut share = 0u64
            .wrapping_sub(masks[i].shifted)
            .wrapping_sub(b_s)
            .wrapping_add(wrap << (64 - shift));
        if p0 {
            share = share.wrapping_add(v[i] >> shift).wrapping_sub(unbias);
        }
        out.push(share);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::testutil::*;
    use crate::party::run_session;
    use crate::sharing::reconstruct_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn compare_reals(xs: &[f64], ys: &[f64], seed: u64) -> Vec<u64> {
        let cfg = cfg_with(15, seed);
        let (x0, x1) = share_reals(&cfg, xs, seed + 1);
        let (y0, y1) = share_reals(&cfg, ys, seed + 2);
        let out = run_symmetric(&cfg, (vec![x0, y0], vec![x1, y1]), |ctx, mut v| {
            let y = v.pop().unwrap();
            let x = v.pop().unwrap();
            Ok(compare(ctx, &x, &y)?.as_vector())
        });
        out.iter().map(|r| r.0).collect()
    }

    #[test]
    fn compare_basic_and_tie() {
        assert_eq!(
            compare_reals(&[5.0, 3.0, 4.25], &[3.0, 5.0, 4.25], 200),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn compare_bit_exact_on_random_and_adjacent_pairs() {
        // 10^4 pairs, half random, half 1-ulp apart in both directions.
        let mut rng = ChaCha12Rng::seed_from_u64(201);
        let ulp = 2f64.powi(-15);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..10_000 {
            if i % 2 == 0 {
                xs.push((rng.random_range(-1_000_000i64..1_000_000) as f64) * ulp);
                ys.push((rng.random_range(-1_000_000i64..1_000_000) as f64) * ulp);
            } else {
                let base = (rng.random_range(-1_000_000i64..1_000_000) as f64) * ulp;
                if i % 4 == 1 {
                    xs.push(base);
                    ys.push(base + ulp);
                } else {
                    xs.push(base + ulp);
                    ys.push(base);
                }
            }
        }
        let got = compare_reals(&xs, &ys, 202);
        for i in 0..xs.len() {
            let want = (xs[i] >= ys[i]) as u64;
            assert_eq!(got[i], want, "x={} y={}", xs[i], ys[i]);
        }
    }

    #[test]
    fn equals_spots_the_median_position() {
        // l1 = [1..5] at fixed-point scale vs l2 = repeated 3.
        let cfg = cfg_with(15, 203);
        let l1: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        let l2 = vec![3.0; 5];
        let (x0, x1) = share_reals(&cfg, &l1, 204);
        let (y0, y1) = share_reals(&cfg, &l2, 205);
        let out = run_symmetric(&cfg, (vec![x0, y0], vec![x1, y1]), |ctx, mut v| {
            let y = v.pop().unwrap();
            let x = v.pop().unwrap();
            Ok(equals(ctx, &x, &y)?.as_vector())
        });
        let got: Vec<u64> = out.iter().map(|r| r.0).collect();
        assert_eq!(got, vec![0, 0, 1, 0, 0]);
    }

    #[test]
    fn equals_exact_on_random_unequal_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(206);
        let n = 10_000;
        let mut xs: Vec<f64> = Vec::with_capacity(n);
        let mut ys: Vec<f64> = Vec::with_capacity(n);
        let ulp = 2f64.powi(-15);
        for i in 0..n {
            let a = (rng.random_range(-1_000_000i64..1_000_000) as f64) * ulp;
            xs.push(a);
            if i % 10 == 0 {
                ys.push(a); // sprinkle exact ties
            } else {
                let mut b = (rng.random_range(-1_000_000i64..1_000_000) as f64) * ulp;
                if b == a {
                    b += ulp;
                }
                ys.push(b);
            }
        }
        let cfg = cfg_with(15, 207);
        let (x0, x1) = share_reals(&cfg, &xs, 208);
        let (y0, y1) = share_reals(&cfg, &ys, 209);
        let out = run_symmetric(&cfg, (vec![x0, y0], vec![x1, y1]), |ctx, mut v| {
            let y = v.pop().unwrap();
            let x = v.pop().unwrap();
            Ok(equals(ctx, &x, &y)?.as_vector())
        });
        for i in 0..n {
            assert_eq!(out[i].0, (xs[i] == ys[i]) as u64, "i={i}");
        }
    }

    #[test]
    fn exact_trunc_matches_plaintext_rounding() {
        let cfg = cfg_with(15, 210);
        let mut rng = ChaCha12Rng::seed_from_u64(211);
        for shift in [1u32, 7, 15, 26, 30, 37, 48] {
            let vals: Vec<i64> = (0..500)
                .map(|_| rng.random_range(-(1i64 << 55)..(1i64 << 55)))
                .collect();
            let rings: Vec<Ring64> = vals.iter().map(|v| Ring64(*v as u64)).collect();
            let (z0, z1) = share_rings(&rings, 212 + shift as u64);
            let (o0, o1, _) = run_session(
                &cfg,
                |ctx| {
                    let w: Vec<u64> = z0.vals.iter().map(|r| r.0).collect();
                    let t = exact_trunc(ctx, &w, shift, Round::Nearest)?;
                    Ok(SharedVector {
                        owner: z0.owner,
                        vals: t.into_iter().map(Ring64).collect(),
                    })
                },
                |ctx| {
                    let w: Vec<u64> = z1.vals.iter().map(|r| r.0).collect();
                    let t = exact_trunc(ctx, &w, shift, Round::Nearest)?;
                    Ok(SharedVector {
                        owner: z1.owner,
                        vals: t.into_iter().map(Ring64).collect(),
                    })
                },
            )
            .unwrap();
            let out = reconstruct_vector(&o0, &o1).unwrap();
            for (i, v) in vals.iter().enumerate() {
                // round-half-up: floor((v + 2^(s-1)) / 2^s)
                let expect = (v + (1i64 << (shift - 1))) >> shift;
                assert_eq!(
                    out[i].as_signed(),
                    expect,
                    "shift={shift} v={v}"
                );
            }
        }
    }

    #[test]
    fn floor_mode_eliminates_fractional_parts() {
        // 9/2 at fixed point is 4.5; eliminating the fraction gives 4.
        let cfg = cfg_with(15, 218);
        let nine_halves = Ring64(9u64 << 14); // 4.5 * 2^15
        let (z0, z1) = share_rings(&[nine_halves, Ring64((-9i64 << 14) as u64)], 219);
        let prog = |z: SharedVector| {
            move |ctx: &mut PartyCtx| {
                let w: Vec<u64> = z.vals.iter().map(|r| r.0).collect();
                let t = exact_trunc(ctx, &w, 15, Round::Floor)?;
                Ok(SharedVector {
                    owner: z.owner,
                    vals: t.into_iter().map(Ring64).collect(),
                })
            }
        };
        let (o0, o1, _) = run_session(&cfg, prog(z0), prog(z1)).unwrap();
        let out = reconstruct_vector(&o0, &o1).unwrap();
        assert_eq!(out[0].as_signed(), 4);
        assert_eq!(out[1].as_signed(), -5); // floor(-4.5)
    }

    #[test]
    fn trunc_then_scale_is_identity_on_integer_scale_shares() {
        // Values at integer scale times encode(1.0) = 2^f come back unchanged
        // after the truncation pairing.
        let cfg = cfg_with(15, 213);
        let ints = [3i64, -7, 0, 12345];
        let rings: Vec<Ring64> = ints
            .iter()
            .map(|v| Ring64(((*v as u64).wrapping_mul(1 << 15)) as u64))
            .collect();
        let (z0, z1) = share_rings(&rings, 214);
        let prog = |z: SharedVector| {
            move |ctx: &mut PartyCtx| {
                let w: Vec<u64> = z.vals.iter().map(|r| r.0).collect();
                let t = exact_trunc(ctx, &w, 15, Round::Nearest)?;
                Ok(SharedVector {
                    owner: z.owner,
                    vals: t.into_iter().map(Ring64).collect(),
                })
            }
        };
        let (o0, o1, _) = run_session(&cfg, prog(z0), prog(z1)).unwrap();
        let out = reconstruct_vector(&o0, &o1).unwrap();
        let got: Vec<i64> = out.iter().map(|r| r.as_signed()).collect();
        assert_eq!(got, ints.to_vec());
    }
}
