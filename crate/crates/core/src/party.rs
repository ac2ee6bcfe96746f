//! Party roles, session configuration, and the three-thread session runner.
//!
//! P0 and P1 execute the same protocol program symmetrically, each on its own
//! shares. The helper runs a serve loop that only deals correlated randomness;
//! it never receives a data share. One protocol thread per party, concurrent
//! parties, ordered typed links between each pair.

use std::thread;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::fixedpoint::{FxConfig, Ring64};
use crate::randomness::{
    corrections, draw_p0, draw_p1, MatTriple, RandRequest, RandomnessStore, RingTriple,
    ShiftMask, WordTriple,
};
use crate::randomness::{DualBit, DualMask};
use crate::sharing::SharedVector;
use crate::transport::{self, in_proc_pair, Link, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PartyId {
    P0,
    P1,
    Helper,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportKind {
    /// Channel-backed links inside one process; frames are byte-identical to
    /// the socket encoding.
    InProc,
    /// Real TCP sockets, one listener per pair; the lower-numbered party
    /// listens.
    Tcp {
        p0_p1: String,
        p0_helper: String,
        p1_helper: String,
    },
}

impl TransportKind {
    /// Loopback TCP endpoints on three consecutive ports.
    pub fn tcp_loopback(base_port: u16) -> TransportKind {
        TransportKind::Tcp {
            p0_p1: format!("127.0.0.1:{base_port}"),
            p0_helper: format!("127.0.0.1:{}", base_port + 1),
            p1_helper: format!("127.0.0.1:{}", base_port + 2),
        }
    }
}

/// Everything the three parties must agree on before the first round.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub fx: FxConfig,
    pub session_id: u64,
    /// Root of all per-party and dealer seeds; fixed seed + fixed transport
    /// order makes the whole transcript byte-identical across runs.
    pub master_seed: u64,
    pub transport: TransportKind,
    /// When true, gadgets that find the store short ask the helper for the
    /// remainder; when false they fail with a randomness-exhausted error.
    pub on_demand: bool,
    /// Record per-link message tag sequences for protocol audits.
    pub record_tags: bool,
}

impl SessionConfig {
    pub fn in_proc(fx: FxConfig, master_seed: u64) -> SessionConfig {
        SessionConfig {
            fx,
            session_id: master_seed ^ 0x5e55_1011,
            master_seed,
            transport: TransportKind::InProc,
            on_demand: true,
            record_tags: false,
        }
    }
}

struct SeedSet {
    p0_private: u64,
    p1_private: u64,
    dealer_p0: u64,
    dealer_p1: u64,
}

fn derive_seeds(master: u64) -> SeedSet {
    let mut root = ChaCha12Rng::seed_from_u64(master);
    SeedSet {
        p0_private: root.next_u64(),
        p1_private: root.next_u64(),
        dealer_p0: root.next_u64(),
        dealer_p1: root.next_u64(),
    }
}

/// One computing party's execution context: links, private randomness, the
/// dealer PRG shared with the helper, and the store of unused correlated
/// randomness.
pub struct PartyCtx {
    pub role: PartyId,
    pub fx: FxConfig,
    pub peer: Link,
    pub helper: Link,
    pub rng: ChaCha12Rng,
    dealer_prg: ChaCha12Rng,
    pub store: RandomnessStore,
    pub on_demand: bool,
}

impl PartyCtx {
    #[inline]
    pub fn is_p0(&self) -> bool {
        self.role == PartyId::P0
    }

    /// Ask the helper for one batch of correlated randomness and merge it
    /// into the store. Both parties must issue identical requests in the same
    /// order; the helper enforces agreement.
    pub fn provision(&mut self, req: &RandRequest) -> Result<()> {
        self.helper.send(Tag::RandomnessRequest, &req.encode())?;
        let delta = match self.role {
            PartyId::P0 => draw_p0(&mut self.dealer_prg, req),
            PartyId::P1 => {
                let corr = self.helper.recv_expect(Tag::RandomnessDelivery)?;
                draw_p1(&mut self.dealer_prg, req, &corr)?
            }
            PartyId::Helper => return Err(Error::Protocol("helper holds no store".into())),
        };
        self.store.merge(delta);
        Ok(())
    }

    fn top_up(&mut self, req: RandRequest, available: usize, needed: usize) -> Result<()> {
        if available >= needed {
            return Ok(());
        }
        if !self.on_demand {
            // Let the store surface the exhaustion error with exact counts.
            return Ok(());
        }
        self.provision(&req)
    }

    pub fn take_ring(&mut self, n: usize) -> Result<Vec<RingTriple>> {
        let have = self.store.ring_available();
        self.top_up(
            RandRequest::Ring {
                count: (n - have.min(n)) as u64,
            },
            have,
            n,
        )?;
        self.store.take_ring(n)
    }

    pub fn take_word(&mut self, n: usize) -> Result<Vec<WordTriple>> {
        let have = self.store.word_available();
        self.top_up(
            RandRequest::Word {
                count: (n - have.min(n)) as u64,
            },
            have,
            n,
        )?;
        self.store.take_word(n)
    }

    pub fn take_dual_masks(&mut self, n: usize) -> Result<Vec<DualMask>> {
        let have = self.store.dual_mask_available();
        self.top_up(
            RandRequest::DualMask {
                count: (n - have.min(n)) as u64,
            },
            have,
            n,
        )?;
        self.store.take_dual_masks(n)
    }

    pub fn take_shift_masks(&mut self, shift: u32, n: usize) -> Result<Vec<ShiftMask>> {
        let have = self.store.shift_mask_available(shift);
        self.top_up(
            RandRequest::ShiftMask {
                shift,
                count: (n - have.min(n)) as u64,
            },
            have,
            n,
        )?;
        self.store.take_shift_masks(shift, n)
    }

    pub fn take_dual_bits(&mut self, n: usize) -> Result<Vec<DualBit>> {
        let have = self.store.dual_bit_available();
        self.top_up(
            RandRequest::DualBit {
                count: (n - have.min(n)) as u64,
            },
            have,
            n,
        )?;
        self.store.take_dual_bits(n)
    }

    pub fn take_mat(&mut self, dims: (usize, usize, usize)) -> Result<MatTriple> {
        let have = self.store.mat_available(dims);
        self.top_up(
            RandRequest::Mat {
                rows: dims.0 as u64,
                inner: dims.1 as u64,
                cols: dims.2 as u64,
            },
            have,
            1,
        )?;
        self.store.take_mat(dims)
    }

    /// Symmetric exchange with the peer: send ours, receive theirs, same tag.
    pub(crate) fn exchange(&mut self, tag: Tag, words: &[u64]) -> Result<Vec<u64>> {
        self.peer.send(tag, words)?;
        let theirs = self.peer.recv_expect(tag)?;
        if theirs.len() != words.len() {
            return Err(Error::ShapeMismatch(format!(
                "peer sent {} words, expected {}",
                theirs.len(),
                words.len()
            )));
        }
        Ok(theirs)
    }

    /// Open a shared vector to both computing parties. Only blinded
    /// intermediates or designated outputs may be opened.
    pub fn open(&mut self, v: &SharedVector) -> Result<Vec<Ring64>> {
        let words: Vec<u64> = v.vals.iter().map(|r| r.0).collect();
        let theirs = self.exchange(Tag::OutputOpen, &words)?;
        Ok(words
            .iter()
            .zip(&theirs)
            .map(|(a, b)| Ring64(a.wrapping_add(*b)))
            .collect())
    }
}

/// The helper's serve loop: deal randomness until both parties say shutdown.
pub fn run_helper(mut p0: Link, mut p1: Link, seeds: (u64, u64)) -> Result<()> {
    let mut prg0 = ChaCha12Rng::seed_from_u64(seeds.0);
    let mut prg1 = ChaCha12Rng::seed_from_u64(seeds.1);
    loop {
        let (tag0, words0) = p0.recv()?;
        let (tag1, words1) = p1.recv()?;
        if (tag0, &words0) != (tag1, &words1) {
            return Err(Error::Protocol(format!(
                "computing parties disagree: {tag0:?} vs {tag1:?}"
            )));
        }
        match tag0 {
            Tag::Shutdown => return Ok(()),
            Tag::RandomnessRequest => {
                let req = RandRequest::decode(&words0)?;
                let corr = corrections(&mut prg0, &mut prg1, &req);
                p1.send(Tag::RandomnessDelivery, &corr)?;
            }
            other => {
                return Err(Error::Protocol(format!(
                    "helper received unexpected {other:?} frame"
                )))
            }
        }
    }
}

/// Byte counters and optional tag logs for one computing party.
#[derive(Debug, Clone, Default)]
pub struct PartyStats {
    pub to_peer_bytes: u64,
    pub to_helper_bytes: u64,
    pub from_peer_bytes: u64,
    pub from_helper_bytes: u64,
    pub peer_tags: Option<Vec<Tag>>,
    pub helper_tags: Option<Vec<Tag>>,
}

impl PartyStats {
    pub fn total_sent(&self) -> u64 {
        self.to_peer_bytes + self.to_helper_bytes
    }
}

#[derive(Debug, Clone, Default)]
pub struct SessionStats {
    pub p0: PartyStats,
    pub p1: PartyStats,
}

fn build_ctx(
    role: PartyId,
    cfg: &SessionConfig,
    mut peer: Link,
    mut helper: Link,
    seeds: &SeedSet,
) -> PartyCtx {
    if cfg.record_tags {
        peer.sent_tags = Some(Vec::new());
        helper.sent_tags = Some(Vec::new());
    }
    let (private, dealer) = match role {
        PartyId::P0 => (seeds.p0_private, seeds.dealer_p0),
        PartyId::P1 => (seeds.p1_private, seeds.dealer_p1),
        PartyId::Helper => unreachable!("helper has no party context"),
    };
    PartyCtx {
        role,
        fx: cfg.fx,
        peer,
        helper,
        rng: ChaCha12Rng::seed_from_u64(private),
        dealer_prg: ChaCha12Rng::seed_from_u64(dealer),
        store: RandomnessStore::default(),
        on_demand: cfg.on_demand,
    }
}

fn finish_party(mut ctx: PartyCtx) -> Result<PartyStats> {
    ctx.helper.send(Tag::Shutdown, &[])?;
    Ok(PartyStats {
        to_peer_bytes: ctx.peer.bytes_sent,
        to_helper_bytes: ctx.helper.bytes_sent,
        from_peer_bytes: ctx.peer.bytes_received,
        from_helper_bytes: ctx.helper.bytes_received,
        peer_tags: ctx.peer.sent_tags.take(),
        helper_tags: ctx.helper.sent_tags.take(),
    })
}

/// Run a full three-party session: P0 and P1 execute their programs in
/// parallel threads while the helper serves randomness. Returns both programs'
/// outputs (normally each party's output shares) plus transcript statistics.
pub fn run_session<T0, T1, F0, F1>(
    cfg: &SessionConfig,
    program_p0: F0,
    program_p1: F1,
) -> Result<(T0, T1, SessionStats)>
where
    T0: Send,
    T1: Send,
    F0: FnOnce(&mut PartyCtx) -> Result<T0> + Send,
    F1: FnOnce(&mut PartyCtx) -> Result<T1> + Send,
{
    let seeds = derive_seeds(cfg.master_seed);
    let sid = cfg.session_id;

    let (links_p0, links_p1, links_helper) = match &cfg.transport {
        TransportKind::InProc => {
            let (p0_peer, p1_peer) = in_proc_pair(sid);
            let (p0_helper, helper_p0) = in_proc_pair(sid);
            let (p1_helper, helper_p1) = in_proc_pair(sid);
            (
                (p0_peer, p0_helper),
                (p1_peer, p1_helper),
                (helper_p0, helper_p1),
            )
        }
        TransportKind::Tcp {
            p0_p1,
            p0_helper,
            p1_helper,
        } => {
            // Listeners come up in their own threads; dialers retry briefly.
            let (a1, a2, a3) = (p0_p1.clone(), p0_helper.clone(), p1_helper.clone());
            let accept_p0 = thread::spawn(move || -> Result<(Link, Link)> {
                let peer = transport::accept_n(&a1, 1, sid)?.remove(0);
                let helper = transport::accept_n(&a2, 1, sid)?.remove(0);
                Ok((peer, helper))
            });
            let accept_p1 = thread::spawn(move || -> Result<Link> {
                Ok(transport::accept_n(&a3, 1, sid)?.remove(0))
            });
            let p1_peer = transport::connect_retry(p0_p1, sid)?;
            let helper_p0 = transport::connect_retry(p0_helper, sid)?;
            let helper_p1 = transport::connect_retry(p1_helper, sid)?;
            let (p0_peer, p0_helper_link) = accept_p0
                .join()
                .map_err(|_| Error::Transport("accept thread panicked".into()))??;
            let p1_helper_link = accept_p1
                .join()
                .map_err(|_| Error::Transport("accept thread panicked".into()))??;
            (
                (p0_peer, p0_helper_link),
                (p1_peer, p1_helper_link),
                (helper_p0, helper_p1),
            )
        }
    };

    let (helper_p0, helper_p1) = links_helper;
    let dealer_seeds = (seeds.dealer_p0, seeds.dealer_p1);

    thread::scope(|scope| {
        let h_thread = scope.spawn(move || run_helper(helper_p0, helper_p1, dealer_seeds));
        let p0_thread = scope.spawn(|| -> Result<(T0, PartyStats)> {
            let (peer, helper) = links_p0;
            let mut ctx = build_ctx(PartyId::P0, cfg, peer, helper, &seeds);
            let out = program_p0(&mut ctx)?;
            Ok((out, finish_party(ctx)?))
        });
        let p1_thread = scope.spawn(|| -> Result<(T1, PartyStats)> {
            let (peer, helper) = links_p1;
            let mut ctx = build_ctx(PartyId::P1, cfg, peer, helper, &seeds);
            let out = program_p1(&mut ctx)?;
            Ok((out, finish_party(ctx)?))
        });

        let r0 = p0_thread
            .join()
            .map_err(|_| Error::Protocol("P0 thread panicked".into()))?;
        let r1 = p1_thread
            .join()
            .map_err(|_| Error::Protocol("P1 thread panicked".into()))?;
        let rh = h_thread
            .join()
            .map_err(|_| Error::Protocol("helper thread panicked".into()))?;
        // Party errors take precedence: a failed party tears its links down,
        // which the helper observes as a transport error.
        let (out0, stats0) = r0?;
        let (out1, stats1) = r1?;
        rh?;
        Ok((
            out0,
            out1,
            SessionStats {
                p0: stats0,
                p1: stats1,
            },
        ))
    })
}
