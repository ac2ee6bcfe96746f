//! Oblivious descending sort over a Batcher odd-even merge network.
//!
//! Compare-exchanges are data-independent: communication depends on the
//! input length only, never on values. Non-power-of-two inputs pad with a
//! public key of -2^62, below every legal data key, so pads sink to the tail
//! and drop off afterward. The network is not stable: equal keys may land in
//! either order, but both sides of the comparison tie toward "keep".
//!
//! Many lanes of identical length sort in lockstep: each network stage issues
//! one comparison batch and one multiplex batch across every lane at once.

use crate::error::{Error, Result};
use crate::fixedpoint::Ring64;
use crate::party::PartyCtx;
use crate::sharing::{SharedMatrix, SharedVector};
use crate::sortnet::{batcher_stages, pad_to_pow2};

use super::{compare, mul_raw_words};

/// Public pad key: -2^62 in the ring. Data keys must stay within +/-2^61 so
/// every compare in the network sees a difference below 2^63.
pub const PAD_KEY: Ring64 = Ring64(0xC000_0000_0000_0000);

/// One independent sort problem: a key vector plus payload columns whose
/// rows follow the keys' permutation.
pub struct SortLane {
    pub keys: Vec<Ring64>,
    pub payload: Vec<Vec<Ring64>>,
}

/// Sort every lane descending in lockstep through the shared network.
pub fn sort_desc_many(ctx: &mut PartyCtx, lanes: &mut [SortLane]) -> Result<()> {
    if lanes.is_empty() {
        return Ok(());
    }
    let n = lanes[0].keys.len();
    for lane in lanes.iter() {
        if lane.keys.len() != n {
            return Err(Error::ShapeMismatch("sort lanes of unequal length".into()));
        }
        for col in &lane.payload {
            if col.len() != n {
                return Err(Error::ShapeMismatch(
                    "sort payload length differs from key count".into(),
                ));
            }
        }
    }
    if n <= 1 {
        return Ok(());
    }

    let padded = pad_to_pow2(n);
    let p0 = ctx.is_p0();
    for lane in lanes.iter_mut() {
        lane.keys
            .resize(padded, if p0 { PAD_KEY } else { Ring64::ZERO });
        for col in &mut lane.payload {
            col.resize(padded, Ring64::ZERO);
        }
    }

    let owner = ctx.role;
    for stage in batcher_stages(padded) {
        // One comparison batch across all lanes.
        let mut lo_keys = Vec::with_capacity(stage.len() * lanes.len());
        let mut hi_keys = Vec::with_capacity(stage.len() * lanes.len());
        for lane in lanes.iter() {
            for &(lo, hi) in &stage {
                lo_keys.push(lane.keys[lo]);
                hi_keys.push(lane.keys[hi]);
            }
        }
        let keep = compare(
            ctx,
            &SharedVector {
                owner,
                vals: lo_keys,
            },
            &SharedVector {
                owner,
                vals: hi_keys,
            },
        )?;

        // One multiplex batch: keys first, then each payload column, all
        // driven by the same bits. new_lo = b*(lo-hi) + hi; new_hi follows
        // for free from lo + hi - new_lo.
        let cols = lanes[0].payload.len();
        let pairs = stage.len();
        let b = pairs * lanes.len();
        let mut bits = Vec::with_capacity(b * (1 + cols));
        let mut deltas = Vec::with_capacity(b * (1 + cols));
        for _ in 0..=cols {
            bits.extend(keep.vals.iter().map(|r| r.0));
        }
        for lane in lanes.iter() {
            for &(lo, hi) in &stage {
                deltas.push(lane.keys[lo].wrap_sub(lane.keys[hi]).0);
            }
        }
        for c in 0..cols {
            for lane in lanes.iter() {
                for &(lo, hi) in &stage {
                    deltas.push(lane.payload[c][lo].wrap_sub(lane.payload[c][hi]).0);
                }
            }
        }
        let prods = mul_raw_words(ctx, &bits, &deltas)?;

        for (li, lane) in lanes.iter_mut().enumerate() {
            for (pi, &(lo, hi)) in stage.iter().enumerate() {
                let idx = li * pairs + pi;
                let new_lo = Ring64(prods[idx]).wrap_add(lane.keys[hi]);
                let new_hi = lane.keys[lo].wrap_add(lane.keys[hi]).wrap_sub(new_lo);
                lane.keys[lo] = new_lo;
                lane.keys[hi] = new_hi;
            }
        }
        for c in 0..cols {
            for (li, lane) in lanes.iter_mut().enumerate() {
                for (pi, &(lo, hi)) in stage.iter().enumerate() {
                    let idx = (1 + c) * b + li * pairs + pi;
                    let new_lo = Ring64(prods[idx]).wrap_add(lane.payload[c][hi]);
                    let new_hi = lane.payload[c][lo]
                        .wrap_add(lane.payload[c][hi])
                        .wrap_sub(new_lo);
                    lane.payload[c][lo] = new_lo;
                    lane.payload[c][hi] = new_hi;
                }
            }
        }
    }

    for lane in lanes.iter_mut() {
        lane.keys.truncate(n);
        for col in &mut lane.payload {
            col.truncate(n);
        }
    }
    Ok(())
}

/// Sort one key vector descending, co-permuting the payload matrix rows by
/// the identical hidden permutation.
pub fn sort_desc(
    ctx: &mut PartyCtx,
    keys: &SharedVector,
    payload: &SharedMatrix,
) -> Result<(SharedVector, SharedMatrix)> {
    if payload.rows != keys.len() && !(payload.rows == 0 && payload.cols == 0) {
        return Err(Error::ShapeMismatch(format!(
            "payload rows {} vs key count {}",
            payload.rows,
            keys.len()
        )));
    }
    let mut lanes = vec![SortLane {
        keys: keys.vals.clone(),
        payload: (0..payload.cols).map(|c| payload.column(c).vals).collect(),
    }];
    sort_desc_many(ctx, &mut lanes)?;
    let lane = lanes.pop().unwrap();
    let mut out = SharedMatrix::zeros(payload.owner, payload.rows, payload.cols);
    for (c, col) in lane.payload.into_iter().enumerate() {
        out.set_column(
            c,
            &SharedVector {
                owner: payload.owner,
                vals: col,
            },
        );
    }
    Ok((
        SharedVector {
            owner: keys.owner,
            vals: lane.keys,
        },
        out,
    ))
}
