//! Secure building blocks composed by the imputation methods.
//!
//! Every gadget is data-independent: its round count and message sizes are a
//! function of shapes and session constants only. Message-tag sequences per
//! gadget (after an optional `RandomnessRequest`/`RandomnessDelivery` pair
//! per batch):
//!
//! - `mul_raw` / `bit_mul` / `multiplex`: `BeaverOpen`
//! - `mul_fx` / `exact_trunc`: `BeaverOpen`? then `MaskedOpen`, `BitOpen` x6,
//!   `DaBitOpen`
//! - `compare` / `equals`: `MaskedOpen`, `BitOpen` x6, `DaBitOpen`
//! - `matmul`: `BeaverOpen`, then the truncation sequence
//! - `divide`: the decomposition, normalization and iteration sequence
//!   spelled out in `divide.rs`
//! - `sort_desc`: per stage, one `compare` sequence plus one `BeaverOpen`

mod bits;
mod divide;
mod sort;

pub use bits::{compare, equals, exact_trunc, Round};
pub use divide::{divide, divide_by_scalar};
pub use sort::{sort_desc, sort_desc_many, SortLane, PAD_KEY};

use crate::error::{Error, Result};
use crate::fixedpoint::Ring64;
use crate::party::PartyCtx;
use crate::sharing::{SharedBits, SharedMatrix, SharedVector};
use crate::transport::Tag;

fn check_same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// Beaver multiplication on raw ring words: reconstructs to x*y mod 2^64 at
/// the combined scale of the inputs. No truncation.
pub(crate) fn mul_raw_words(ctx: &mut PartyCtx, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    check_same_len(x.len(), y.len(), "multiply operands")?;
    if x.len() > bits::CHUNK {
        let mut out = Vec::with_capacity(x.len());
        for (cx, cy) in x.chunks(bits::CHUNK).zip(y.chunks(bits::CHUNK)) {
            out.extend(mul_raw_words(ctx, cx, cy)?);
        }
        return Ok(out);
    }
    let n = x.len();
    let triples = ctx.take_ring(n)?;
    // One round: open e = x - a and f = y - b together.
    let mut masked = Vec::with_capacity(2 * n);
    for i in 0..n {
        masked.push(x[i].wrapping_sub(triples[i].a));
    }
    for i in 0..n {
        masked.push(y[i].wrapping_sub(triples[i].b));
    }
    let theirs = ctx.exchange(Tag::BeaverOpen, &masked)?;
    let p0 = ctx.is_p0();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let e = masked[i].wrapping_add(theirs[i]);
        let f = masked[n + i].wrapping_add(theirs[n + i]);
        let mut z = triples[i]
            .c
            .wrapping_add(e.wrapping_mul(triples[i].b))
            .wrapping_add(f.wrapping_mul(triples[i].a));
        if p0 {
            z = z.wrapping_add(e.wrapping_mul(f));
        }
        out.push(z);
    }
    Ok(out)
}

/// Element-wise fixed-point multiply: Beaver product at scale 2^2f, then an
/// exact truncation back to scale 2^f (round-to-nearest, deterministic).
pub fn mul_fx(ctx: &mut PartyCtx, x: &SharedVector, y: &SharedVector) -> Result<SharedVector> {
    let raw = mul_raw_words(
        ctx,
        &x.vals.iter().map(|r| r.0).collect::<Vec<_>>(),
        &y.vals.iter().map(|r| r.0).collect::<Vec<_>>(),
    )?;
    let trunced = exact_trunc(ctx, &raw, ctx.fx.frac_bits, Round::Nearest)?;
    Ok(SharedVector {
        owner: x.owner,
        vals: trunced.into_iter().map(Ring64).collect(),
    })
}

/// Multiply integer-scale 0/1 bits by fixed-point values. Exact: the product
/// needs no truncation, so present values pass through bit-identically.
pub fn bit_mul(ctx: &mut PartyCtx, bits: &SharedBits, x: &SharedVector) -> Result<SharedVector> {
    let raw = mul_raw_words(
        ctx,
        &bits.vals.iter().map(|r| r.0).collect::<Vec<_>>(),
        &x.vals.iter().map(|r| r.0).collect::<Vec<_>>(),
    )?;
    Ok(SharedVector {
        owner: x.owner,
        vals: raw.into_iter().map(Ring64).collect(),
    })
}

/// Oblivious select: reconstructs to `a` where the bit is 1, `b` where 0,
/// via `b + c*(a - b)` with a single truncation-free bit multiply.
pub fn multiplex(
    ctx: &mut PartyCtx,
    c: &SharedBits,
    a: &SharedVector,
    b: &SharedVector,
) -> Result<SharedVector> {
    check_same_len(c.len(), a.len(), "multiplex condition vs a")?;
    check_same_len(a.len(), b.len(), "multiplex a vs b")?;
    let delta = a.sub(b);
    let prod = bit_mul(ctx, c, &delta)?;
    Ok(b.add(&prod))
}

/// Multiply a shared vector by a public real, carrying `guard` extra
/// fractional bits through the constant so large sums divide cleanly
/// (used for means over public counts like `1/k`).
pub fn mul_public_real(
    ctx: &mut PartyCtx,
    x: &SharedVector,
    value: f64,
    guard: u32,
) -> Result<SharedVector> {
    let scale_bits = ctx.fx.frac_bits + guard;
    let c = (value * 2f64.powi(scale_bits as i32)).round() as i64 as u64;
    let raw: Vec<u64> = x.vals.iter().map(|r| r.0.wrapping_mul(c)).collect();
    let trunced = exact_trunc(ctx, &raw, scale_bits, Round::Nearest)?;
    Ok(SharedVector {
        owner: x.owner,
        vals: trunced.into_iter().map(Ring64).collect(),
    })
}

fn wrapping_matmul(a: &[u64], b: &[u64], r: usize, k: usize, c: usize) -> Vec<u64> {
    let mut out = vec![0u64; r * c];
    for i in 0..r {
        for t in 0..k {
            let av = a[i * k + t];
            if av == 0 {
                continue;
            }
            let row = &b[t * c..(t + 1) * c];
            let dst = &mut out[i * c..(i + 1) * c];
            for j in 0..c {
                dst[j] = dst[j].wrapping_add(av.wrapping_mul(row[j]));
            }
        }
    }
    out
}

/// Secure matrix product at scale 2^f. Inner products accumulate at scale
/// 2^2f and are truncated once per output entry, so every entry of the
/// plaintext product times 2^2f must stay below 2^62.
pub fn matmul(ctx: &mut PartyCtx, a: &SharedMatrix, b: &SharedMatrix) -> Result<SharedMatrix> {
    if a.cols != b.rows {
        return Err(Error::ShapeMismatch(format!(
            "matmul inner dims: {}x{} * {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (r, k, c) = (a.rows, a.cols, b.cols);
    let triple = ctx.take_mat((r, k, c))?;
    let mut masked = Vec::with_capacity(r * k + k * c);
    for i in 0..r * k {
        masked.push(a.vals[i].0.wrapping_sub(triple.a[i]));
    }
    for i in 0..k * c {
        masked.push(b.vals[i].0.wrapping_sub(triple.b[i]));
    }
    let theirs = ctx.exchange(Tag::BeaverOpen, &masked)?;
    let e: Vec<u64> = (0..r * k)
        .map(|i| masked[i].wrapping_add(theirs[i]))
        .collect();
    let f: Vec<u64> = (0..k * c)
        .map(|i| masked[r * k + i].wrapping_add(theirs[r * k + i]))
        .collect();

    // Z = C + E*[B] + [A]*F (+ E*F at P0), all at scale 2^2f.
    let mut z = triple.c.clone();
    let b_share: Vec<u64> = triple.b.clone();
    let a_share: Vec<u64> = triple.a.clone();
    for (dst, src) in z
        .iter_mut()
        .zip(wrapping_matmul(&e, &b_share, r, k, c))
    {
        *dst = dst.wrapping_add(src);
    }
    for (dst, src) in z.iter_mut().zip(wrapping_matmul(&a_share, &f, r, k, c)) {
        *dst = dst.wrapping_add(src);
    }
    if ctx.is_p0() {
        for (dst, src) in z.iter_mut().zip(wrapping_matmul(&e, &f, r, k, c)) {
            *dst = dst.wrapping_add(src);
        }
    }
    let trunced = exact_trunc(ctx, &z, ctx.fx.frac_bits, Round::Nearest)?;
    Ok(SharedMatrix {
        owner: a.owner,
        rows: r,
        cols: c,
        vals: trunced.into_iter().map(Ring64).collect(),
    })
}

#[cfg(test)]
pub(crate) mod testutil {
    //! Harness-side helpers: share plaintexts, run a symmetric two-party
    //! program in a full session, reconstruct the outputs.

    use super::*;
    use crate::fixedpoint::FxConfig;
    use crate::party::{run_session, SessionConfig};
    use crate::sharing::{reconstruct_vector, share_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    pub fn cfg_with(frac_bits: u32, seed: u64) -> SessionConfig {
        SessionConfig::in_proc(FxConfig::new(frac_bits).unwrap(), seed)
    }

    pub fn share_reals(
        cfg: &SessionConfig,
        xs: &[f64],
        seed: u64,
    ) -> (SharedVector, SharedVector) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let encoded: Vec<Ring64> = xs.iter().map(|x| cfg.fx.encode(*x).unwrap()).collect();
        share_vector(&encoded, &mut rng)
    }

    pub fn share_rings(
        xs: &[Ring64],
        seed: u64,
    ) -> (SharedVector, SharedVector) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        share_vector(xs, &mut rng)
    }

    /// Run the same program on both parties' input vectors and reconstruct.
    pub fn run_symmetric<F>(
        cfg: &SessionConfig,
        inputs: (Vec<SharedVector>, Vec<SharedVector>),
        program: F,
    ) -> Vec<Ring64>
    where
        F: Fn(&mut PartyCtx, Vec<SharedVector>) -> Result<SharedVector> + Send + Copy,
    {
        let (in0, in1) = inputs;
        let (o0, o1, _) = run_session(
            cfg,
            move |ctx| program(ctx, in0),
            move |ctx| program(ctx, in1),
        )
        .unwrap();
        reconstruct_vector(&o0, &o1).unwrap()
    }

    pub fn decode_all(fx: FxConfig, rs: &[Ring64]) -> Vec<f64> {
        rs.iter().map(|r| fx.decode(*r)).collect()
    }
}
