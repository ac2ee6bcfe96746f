//! Correlated randomness dealt by the helper.
//!
//! The helper shares one PRG seed with each computing party. On a request it
//! regenerates each party's locally-derivable parts from those seeds and
//! sends only the correction words that tie the correlation together, always
//! to P1. Every item is single-use: stores pop, never peek.
//!
//! Kinds:
//! - `RingTriple`: additive shares of (a, b, c = a*b) in `Z_2^64`; one secure
//!   ring multiplication each.
//! - `WordTriple`: XOR shares of (a, b, c = a AND b) on 64-bit words; 64
//!   bit-level AND gates each, consumed by the comparison/truncation circuits.
//! - `DualMask`: a uniform r shared both additively and bitwise; blinds one
//!   value for a masked opening.
//! - `ShiftMask`: a `DualMask` that also carries additive shares of `r >> s`;
//!   one exact truncation by `s` bits each.
//! - `DualBit`: a uniform bit shared both XOR-wise and additively; converts
//!   one XOR-shared bit into an arithmetic share.
//! - matrix triples: additive shares of (A, B, C = A*B) for one secure
//!   matrix product of a fixed shape.

use std::collections::{HashMap, VecDeque};

use rand::RngCore;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingTriple {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordTriple {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualMask {
    /// Additive share of r.
    pub arith: u64,
    /// XOR share of r's bits.
    pub bits: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftMask {
    pub arith: u64,
    pub bits: u64,
    /// Additive share of `r >> shift` (logical shift of the joint r).
    pub shifted: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualBit {
    /// XOR share of the bit, in the low bit of the word.
    pub xor: u64,
    /// Additive share of the same bit.
    pub arith: u64,
}

#[derive(Debug, Clone)]
pub struct MatTriple {
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub c: Vec<u64>,
}

/// A randomness request; both computing parties send the identical descriptor
/// and the helper checks they agree. Descriptors carry only public shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandRequest {
    Ring { count: u64 },
    Word { count: u64 },
    DualMask { count: u64 },
    ShiftMask { shift: u32, count: u64 },
    DualBit { count: u64 },
    Mat { rows: u64, inner: u64, cols: u64 },
}

impl RandRequest {
    pub fn encode(&self) -> Vec<u64> {
        match *self {
            RandRequest::Ring { count } => vec![1, count],
            RandRequest::Word { count } => vec![2, count],
            RandRequest::DualMask { count } => vec![3, count],
            RandRequest::ShiftMask { shift, count } => vec![4, shift as u64, count],
            RandRequest::DualBit { count } => vec![5, count],
            RandRequest::Mat { rows, inner, cols } => vec![6, rows, inner, cols],
        }
    }

    pub fn decode(words: &[u64]) -> Result<RandRequest> {
        let bad = || Error::Protocol(format!("malformed randomness request {words:?}"));
        match words.first() {
            Some(1) if words.len() == 2 => Ok(RandRequest::Ring { count: words[1] }),
            Some(2) if words.len() == 2 => Ok(RandRequest::Word { count: words[1] }),
            Some(3) if words.len() == 2 => Ok(RandRequest::DualMask { count: words[1] }),
            Some(4) if words.len() == 3 => Ok(RandRequest::ShiftMask {
                shift: words[1] as u32,
                count: words[2],
            }),
            Some(5) if words.len() == 2 => Ok(RandRequest::DualBit { count: words[1] }),
            Some(6) if words.len() == 4 => Ok(RandRequest::Mat {
                rows: words[1],
                inner: words[2],
                cols: words[3],
            }),
            _ => Err(bad()),
        }
    }
}

/// P0's items derive entirely from the seed it shares with the helper.
/// Draw order here must match `corrections` exactly.
pub fn draw_p0(prg: &mut impl RngCore, req: &RandRequest) -> StoreDelta {
    let mut delta = StoreDelta::default();
    match *req {
        RandRequest::Ring { count } => {
            for _ in 0..count {
                delta.ring.push(RingTriple {
                    a: prg.next_u64(),
                    b: prg.next_u64(),
                    c: prg.next_u64(),
                });
            }
        }
        RandRequest::Word { count } => {
            for _ in 0..count {
                delta.word.push(WordTriple {
                    a: prg.next_u64(),
                    b: prg.next_u64(),
                    c: prg.next_u64(),
                });
            }
        }
        RandRequest::DualMask { count } => {
            for _ in 0..count {
                delta.dual_masks.push(DualMask {
                    bits: prg.next_u64(),
                    arith: prg.next_u64(),
                });
            }
        }
        RandRequest::ShiftMask { shift, count } => {
            let items = (0..count)
                .map(|_| ShiftMask {
                    bits: prg.next_u64(),
                    arith: prg.next_u64(),
                    shifted: prg.next_u64(),
                })
                .collect();
            delta.shift_masks.push((shift, items));
        }
        RandRequest::DualBit { count } => {
            for _ in 0..count {
                delta.dual_bits.push(DualBit {
                    xor: prg.next_u64() & 1,
                    arith: prg.next_u64(),
                });
            }
        }
        RandRequest::Mat { rows, inner, cols } => {
            let (r, k, c) = (rows as usize, inner as usize, cols as usize);
            delta.mats.push(MatTriple {
                rows: r,
                inner: k,
                cols: c,
                a: (0..r * k).map(|_| prg.next_u64()).collect(),
                b: (0..k * c).map(|_| prg.next_u64()).collect(),
                c: (0..r * c).map(|_| prg.next_u64()).collect(),
            });
        }
    }
    delta
}

/// P1's seed-derived parts, before corrections are applied.
fn draw_p1_parts(prg: &mut impl RngCore, req: &RandRequest) -> StoreDelta {
    let mut delta = StoreDelta::default();
    match *req {
        RandRequest::Ring { count } => {
            for _ in 0..count {
                delta.ring.push(RingTriple {
                    a: prg.next_u64(),
                    b: prg.next_u64(),
                    c: 0,
                });
            }
        }
        RandRequest::Word { count } => {
            for _ in 0..count {
                delta.word.push(WordTriple {
                    a: prg.next_u64(),
                    b: prg.next_u64(),
                    c: 0,
                });
            }
        }
        RandRequest::DualMask { count } => {
            for _ in 0..count {
                delta.dual_masks.push(DualMask {
                    bits: prg.next_u64(),
                    arith: 0,
                });
            }
        }
        RandRequest::ShiftMask { shift, count } => {
            let items = (0..count)
                .map(|_| ShiftMask {
                    bits: prg.next_u64(),
                    arith: 0,
                    shifted: 0,
                })
                .collect();
            delta.shift_masks.push((shift, items));
        }
        RandRequest::DualBit { count } => {
            for _ in 0..count {
                delta.dual_bits.push(DualBit {
                    xor: prg.next_u64() & 1,
                    arith: 0,
                });
            }
        }
        RandRequest::Mat { rows, inner, cols } => {
            let (r, k, c) = (rows as usize, inner as usize, cols as usize);
            delta.mats.push(MatTriple {
                rows: r,
                inner: k,
                cols: c,
                a: (0..r * k).map(|_| prg.next_u64()).collect(),
                b: (0..k * c).map(|_| prg.next_u64()).collect(),
                c: vec![0; r * c],
            });
        }
    }
    delta
}

/// Apply the helper's correction words to P1's seed-derived parts.
pub fn draw_p1(
    prg: &mut impl RngCore,
    req: &RandRequest,
    corrections: &[u64],
) -> Result<StoreDelta> {
    let mut delta = draw_p1_parts(prg, req);
    let mut it = corrections.iter().copied();
    let mut next = || {
        it.next()
            .ok_or_else(|| Error::Protocol("short correction payload".into()))
    };
    match req {
        RandRequest::Ring { .. } => {
            for t in &mut delta.ring {
                t.c = next()?;
            }
        }
        RandRequest::Word { .. } => {
            for t in &mut delta.word {
                t.c = next()?;
            }
        }
        RandRequest::DualMask { .. } => {
            for m in &mut delta.dual_masks {
                m.arith = next()?;
            }
        }
        RandRequest::ShiftMask { .. } => {
            for (_, items) in &mut delta.shift_masks {
                for m in items {
                    m.arith = next()?;
                    m.shifted = next()?;
                }
            }
        }
        RandRequest::DualBit { .. } => {
            for b in &mut delta.dual_bits {
                b.arith = next()?;
            }
        }
        RandRequest::Mat { .. } => {
            for m in &mut delta.mats {
                for v in &mut m.c {
                    *v = next()?;
                }
            }
        }
    }
    if it.next().is_some() {
        return Err(Error::Protocol("oversized correction payload".into()));
    }
    Ok(delta)
}

/// Helper side: regenerate both parties' parts and emit P1's corrections.
pub fn corrections(
    prg0: &mut impl RngCore,
    prg1: &mut impl RngCore,
    req: &RandRequest,
) -> Vec<u64> {
    let p0 = draw_p0(prg0, req);
    let p1 = draw_p1_parts(prg1, req);
    let mut out = Vec::new();
    match req {
        RandRequest::Ring { .. } => {
            for (t0, t1) in p0.ring.iter().zip(&p1.ring) {
                let a = t0.a.wrapping_add(t1.a);
                let b = t0.b.wrapping_add(t1.b);
                out.push(a.wrapping_mul(b).wrapping_sub(t0.c));
            }
        }
        RandRequest::Word { .. } => {
            for (t0, t1) in p0.word.iter().zip(&p1.word) {
                let a = t0.a ^ t1.a;
                let b = t0.b ^ t1.b;
                out.push((a & b) ^ t0.c);
            }
        }
        RandRequest::DualMask { .. } => {
            for (m0, m1) in p0.dual_masks.iter().zip(&p1.dual_masks) {
                let r = m0.bits ^ m1.bits;
                out.push(r.wrapping_sub(m0.arith));
            }
        }
        RandRequest::ShiftMask { shift, .. } => {
            let items0 = &p0.shift_masks[0].1;
            let items1 = &p1.shift_masks[0].1;
            for (m0, m1) in items0.iter().zip(items1) {
                let r = m0.bits ^ m1.bits;
                out.push(r.wrapping_sub(m0.arith));
                out.push((r >> shift).wrapping_sub(m0.shifted));
            }
        }
        RandRequest::DualBit { .. } => {
            for (b0, b1) in p0.dual_bits.iter().zip(&p1.dual_bits) {
                let beta = b0.xor ^ b1.xor;
                out.push(beta.wrapping_sub(b0.arith));
            }
        }
        RandRequest::Mat { rows, inner, cols } => {
            let (r, k, c) = (*rows as usize, *inner as usize, *cols as usize);
            let m0 = &p0.mats[0];
            let m1 = &p1.mats[0];
            let a: Vec<u64> = m0.a.iter().zip(&m1.a).map(|(x, y)| x.wrapping_add(*y)).collect();
            let b: Vec<u64> = m0.b.iter().zip(&m1.b).map(|(x, y)| x.wrapping_add(*y)).collect();
            for i in 0..r {
                for j in 0..c {
                    let mut acc = 0u64;
                    for t in 0..k {
                        acc = acc.wrapping_add(a[i * k + t].wrapping_mul(b[t * c + j]));
                    }
                    out.push(acc.wrapping_sub(m0.c[i * c + j]));
                }
            }
        }
    }
    out
}

/// Items produced by one request, ready to merge into a party's store.
#[derive(Debug, Default)]
pub struct StoreDelta {
    pub ring: Vec<RingTriple>,
    pub word: Vec<WordTriple>,
    pub dual_masks: Vec<DualMask>,
    pub shift_masks: Vec<(u32, Vec<ShiftMask>)>,
    pub dual_bits: Vec<DualBit>,
    pub mats: Vec<MatTriple>,
}

/// One computing party's stock of unused correlated randomness.
#[derive(Debug, Default)]
pub struct RandomnessStore {
    ring: VecDeque<RingTriple>,
    word: VecDeque<WordTriple>,
    dual_masks: VecDeque<DualMask>,
    shift_masks: HashMap<u32, VecDeque<ShiftMask>>,
    dual_bits: VecDeque<DualBit>,
    mats: HashMap<(usize, usize, usize), VecDeque<MatTriple>>,
}

impl RandomnessStore {
    pub fn merge(&mut self, delta: StoreDelta) {
        self.ring.extend(delta.ring);
        self.word.extend(delta.word);
        self.dual_masks.extend(delta.dual_masks);
        for (shift, items) in delta.shift_masks {
            self.shift_masks.entry(shift).or_default().extend(items);
        }
        self.dual_bits.extend(delta.dual_bits);
        for m in delta.mats {
            self.mats
                .entry((m.rows, m.inner, m.cols))
                .or_default()
                .push_back(m);
        }
    }

    pub fn ring_available(&self) -> usize {
        self.ring.len()
    }

    pub fn word_available(&self) -> usize {
        self.word.len()
    }

    pub fn dual_mask_available(&self) -> usize {
        self.dual_masks.len()
    }

    pub fn shift_mask_available(&self, shift: u32) -> usize {
        self.shift_masks.get(&shift).map_or(0, |q| q.len())
    }

    pub fn dual_bit_available(&self) -> usize {
        self.dual_bits.len()
    }

    pub fn mat_available(&self, dims: (usize, usize, usize)) -> usize {
        self.mats.get(&dims).map_or(0, |q| q.len())
    }

    fn short(kind: &'static str, needed: usize, available: usize) -> Error {
        Error::RandomnessExhausted {
            kind,
            needed,
            available,
        }
    }

    pub fn take_ring(&mut self, n: usize) -> Result<Vec<RingTriple>> {
        if self.ring.len() < n {
            return Err(Self::short("ring triples", n, self.ring.len()));
        }
        Ok(self.ring.drain(..n).collect())
    }

    pub fn take_word(&mut self, n: usize) -> Result<Vec<WordTriple>> {
        if self.word.len() < n {
            return Err(Self::short("word triples", n, self.word.len()));
        }
        Ok(self.word.drain(..n).collect())
    }

    pub fn take_dual_masks(&mut self, n: usize) -> Result<Vec<DualMask>> {
        if self.dual_masks.len() < n {
            return Err(Self::short("dual masks", n, self.dual_masks.len()));
        }
        Ok(self.dual_masks.drain(..n).collect())
    }

    pub fn take_shift_masks(&mut self, shift: u32, n: usize) -> Result<Vec<ShiftMask>> {
        let q = self.shift_masks.entry(shift).or_default();
        if q.len() < n {
            return Err(Self::short("shift masks", n, q.len()));
        }
        Ok(q.drain(..n).collect())
    }

    pub fn take_dual_bits(&mut self, n: usize) -> Result<Vec<DualBit>> {
        if self.dual_bits.len() < n {
            return Err(Self::short("dual bits", n, self.dual_bits.len()));
        }
        Ok(self.dual_bits.drain(..n).collect())
    }

    pub fn take_mat(&mut self, dims: (usize, usize, usize)) -> Result<MatTriple> {
        self.mats
            .get_mut(&dims)
            .and_then(|q| q.pop_front())
            .ok_or(Self::short("matrix triples", 1, 0))
    }
}
