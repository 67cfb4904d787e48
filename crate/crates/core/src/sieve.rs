//! The combined sieve: mark composites in `M` regularly spaced intervals
//! `[m*K - X, m*K + X]` simultaneously.
//!
//! Two phases split the prime range at `small_mult * S` (S = 2X+1):
//!
//! - **Small primes** are likely to divide every interval, so each row is
//!   handled like a classic offset sieve — but `N mod p` costs one 64-bit
//!   multiply against the cached `K mod p` instead of a big-integer
//!   reduction.
//! - **Large primes** divide almost no interval. For each prime the solver
//!   walks exactly the rows `m` with `(m*K + X) mod p <= 2X`, so the cost is
//!   proportional to the number of factors found, not to the number of rows.
//!
//! Rows sharing a factor with `d` are skipped. The final grid is identical
//! regardless of parallelism: the large phase computes marks in fixed prime
//! chunks and applies them in `(p, m)` order.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modsolver::{self, SolveInstance};
use crate::numtheory::{self, DivisorSpec, PrimorialConfig, Reciprocal};

/// Interval geometry and prime budget for one sieve run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SieveParams {
    /// X: offsets in `[-X, X]` are sieved around each `N = m*K`.
    pub half_width: u64,
    /// Largest prime used to mark composites.
    pub p_limit: u64,
    /// Small/large split multiplier: primes `<= small_mult * (2X+1)` go
    /// through the per-row phase.
    pub small_mult: u64,
}

impl SieveParams {
    pub const DEFAULT_SMALL_MULT: u64 = 50;

    pub fn new(half_width: u64, p_limit: u64, small_mult: u64) -> Result<Self> {
        if half_width < 1 || half_width >= u32::MAX as u64 / 2 {
            return Err(Error::InvalidConfig(format!(
                "half width must be in [1, 2^31), got {half_width}"
            )));
        }
        if small_mult < 1 {
            return Err(Error::InvalidConfig("small_mult must be >= 1".into()));
        }
        if p_limit < 2 || p_limit >= 1 << 62 {
            return Err(Error::InvalidConfig(format!(
                "prime limit must be in [2, 2^62), got {p_limit}"
            )));
        }
        Ok(SieveParams {
            half_width,
            p_limit,
            small_mult,
        })
    }

    /// S = 2X + 1.
    #[inline]
    pub fn interval_len(&self) -> u64 {
        2 * self.half_width + 1
    }

    /// Primes up to this bound take the per-row path; the rest go through
    /// the solver. Clamped to `p_limit` when the limit is too small for a
    /// solver phase to exist.
    #[inline]
    pub fn small_prime_cutoff(&self) -> u64 {
        self.small_mult
            .saturating_mul(self.interval_len())
            .min(self.p_limit)
    }
}

/// Knobs that change how the sieve runs but not what a grid bit means —
/// except `strict_oracle`, which disables the shared-factor premark so the
/// grid matches the one-interval oracle bit for bit at any prime limit.
#[derive(Clone, Debug)]
pub struct SieveOptions {
    pub strict_oracle: bool,
    /// Refuse to run if the estimated allocation exceeds this many bytes.
    pub mem_budget: u64,
    /// Width of the prime ranges handed to large-phase workers.
    pub chunk_width: u64,
    /// Also return the large-phase factor events (verification scale only;
    /// production runs just count them).
    pub collect_events: bool,
}

impl Default for SieveOptions {
    fn default() -> Self {
        SieveOptions {
            strict_oracle: false,
            mem_budget: 4 << 30,
            chunk_width: 1 << 22,
            collect_events: false,
        }
    }
}

/// Fixed-width bit row; a set bit means "has a known factor".
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn new(len: usize) -> Self {
        Bitmap {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    pub(crate) fn from_words(words: Vec<u64>, len: usize) -> Self {
        debug_assert_eq!(words.len(), len.div_ceil(64));
        Bitmap { words, len }
    }

    /// All bits set (tail bits beyond `len` stay clear).
    pub fn all_marked(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if let Some(last) = words.last_mut() {
            let tail = len % 64;
            if tail != 0 {
                *last = (1u64 << tail) - 1;
            }
        }
        Bitmap { words, len }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        debug_assert!(idx < self.len);
        self.words[idx / 64] & (1 << (idx % 64)) != 0
    }

    #[inline]
    pub fn set(&mut self, idx: usize) {
        debug_assert!(idx < self.len);
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    #[inline]
    pub fn clear(&mut self, idx: usize) {
        debug_assert!(idx < self.len);
        self.words[idx / 64] &= !(1 << (idx % 64));
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_marked(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn survivors(&self) -> u64 {
        self.len as u64 - self.count_marked()
    }

    pub fn union_with(&mut self, other: &Bitmap) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Indices of unmarked bits, ascending.
    pub fn iter_unmarked(&self) -> impl Iterator<Item = usize> + '_ {
        let len = self.len;
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let mut clear = !word;
            if (w + 1) * 64 > len {
                let tail = len - w * 64;
                clear &= if tail == 64 { u64::MAX } else { (1u64 << tail) - 1 };
            }
            std::iter::from_fn(move || {
                if clear == 0 {
                    return None;
                }
                let bit = clear.trailing_zeros() as usize;
                clear &= clear - 1;
                Some(w * 64 + bit)
            })
        })
    }
}

impl std::fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitmap({} bits, {} marked)", self.len, self.count_marked())
    }
}

/// One large-prime hit: `prime` divides `m*K + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorEvent {
    pub prime: u64,
    pub m: u64,
    pub offset: i64,
}

const SKIPPED_ROW: u32 = u32::MAX;

/// Composite flags for every coprime row, one contiguous bitmap per row,
/// rows ascending in `m`.
#[derive(Clone)]
pub struct CompositeGrid {
    m_start: u64,
    half_width: u64,
    row_bits: usize,
    words_per_row: usize,
    m_values: Vec<u64>,
    row_of_m: Vec<u32>,
    bits: Vec<u64>,
}

impl CompositeGrid {
    pub fn new(cfg: &PrimorialConfig, params: &SieveParams) -> Result<Self> {
        let m_values = coprime_m_list(cfg.m_start, cfg.m_count, &cfg.divisor);
        if m_values.len() as u64 >= SKIPPED_ROW as u64 || cfg.m_count >= SKIPPED_ROW as u64 {
            return Err(Error::InvalidConfig("too many rows".into()));
        }
        let mut row_of_m = vec![SKIPPED_ROW; cfg.m_count as usize];
        for (idx, &m) in m_values.iter().enumerate() {
            row_of_m[(m - cfg.m_start) as usize] = idx as u32;
        }
        let row_bits = params.interval_len() as usize;
        let words_per_row = row_bits.div_ceil(64);
        let bits = vec![0u64; words_per_row * m_values.len()];
        Ok(CompositeGrid {
            m_start: cfg.m_start,
            half_width: params.half_width,
            row_bits,
            words_per_row,
            m_values,
            row_of_m,
            bits,
        })
    }

    pub fn rows(&self) -> usize {
        self.m_values.len()
    }

    pub fn m_values(&self) -> &[u64] {
        &self.m_values
    }

    pub fn row_bits(&self) -> usize {
        self.row_bits
    }

    pub fn half_width(&self) -> u64 {
        self.half_width
    }

    /// Dense row index for a coprime `m` in range, `None` otherwise.
    #[inline]
    pub fn row_index(&self, m: u64) -> Option<usize> {
        let rel = m.checked_sub(self.m_start)? as usize;
        match self.row_of_m.get(rel) {
            Some(&r) if r != SKIPPED_ROW => Some(r as usize),
            _ => None,
        }
    }

    #[inline]
    pub fn offset_to_index(&self, offset: i64) -> usize {
        (offset + self.half_width as i64) as usize
    }

    #[inline]
    pub fn index_to_offset(&self, idx: usize) -> i64 {
        idx as i64 - self.half_width as i64
    }

    #[inline]
    pub fn mark(&mut self, row: usize, idx: usize) {
        debug_assert!(idx < self.row_bits);
        self.bits[row * self.words_per_row + idx / 64] |= 1 << (idx % 64);
    }

    #[inline]
    pub fn is_marked(&self, row: usize, idx: usize) -> bool {
        debug_assert!(idx < self.row_bits);
        self.bits[row * self.words_per_row + idx / 64] & (1 << (idx % 64)) != 0
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub fn row_bitmap(&self, row: usize) -> Bitmap {
        Bitmap::from_words(self.row_words(row).to_vec(), self.row_bits)
    }

    /// Overwrite one row from a bitmap of the same width.
    pub fn set_row(&mut self, row: usize, bitmap: &Bitmap) {
        assert_eq!(bitmap.len, self.row_bits);
        let wpr = self.words_per_row;
        self.bits[row * wpr..(row + 1) * wpr].copy_from_slice(&bitmap.words);
    }

    pub fn survivors_in_row(&self, row: usize) -> u64 {
        self.row_bits as u64
            - self
                .row_words(row)
                .iter()
                .map(|w| w.count_ones() as u64)
                .sum::<u64>()
    }

    pub fn survivors_per_row(&self) -> Vec<u64> {
        (0..self.rows()).map(|r| self.survivors_in_row(r)).collect()
    }

    pub fn total_bits(&self) -> u64 {
        self.rows() as u64 * self.row_bits as u64
    }

    pub fn total_survivors(&self) -> u64 {
        (0..self.rows()).map(|r| self.survivors_in_row(r)).sum()
    }

    pub fn survivor_fraction(&self) -> f64 {
        self.total_survivors() as f64 / self.total_bits() as f64
    }
}

impl PartialEq for CompositeGrid {
    fn eq(&self, other: &Self) -> bool {
        self.m_values == other.m_values
            && self.row_bits == other.row_bits
            && self.bits == other.bits
    }
}

impl std::fmt::Debug for CompositeGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "CompositeGrid({} rows x {} bits, m_start={})",
            self.rows(),
            self.row_bits,
            self.m_start
        )
    }
}

/// The `m` in `[m_start, m_start + m_count)` with `gcd(m, d) = 1`, ascending.
pub fn coprime_m_list(m_start: u64, m_count: u64, d: &DivisorSpec) -> Vec<u64> {
    (m_start..m_start + m_count)
        .filter(|&m| d.is_coprime_with(m))
        .collect()
}

/// `|coprime_m_list(..)|` without materializing it: inclusion-exclusion over
/// the prime factors of `d`.
pub fn coprime_count(m_start: u64, m_count: u64, d: &DivisorSpec) -> u64 {
    let primes: Vec<u64> = d.factors().iter().map(|&(q, _)| q).collect();
    if primes.is_empty() {
        return m_count;
    }
    if primes.len() > 24 {
        return coprime_m_list(m_start, m_count, d).len() as u64;
    }
    let lo = (m_start - 1) as u128; // multiples counted over (lo, hi]
    let hi = (m_start + m_count - 1) as u128;
    let mut total: i128 = 0;
    for mask in 0u32..(1 << primes.len()) {
        let mut prod: u128 = 1;
        for (i, &q) in primes.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod = prod.saturating_mul(q as u128);
                if prod > hi {
                    break;
                }
            }
        }
        let count = (hi / prod - lo / prod) as i128;
        if mask.count_ones() % 2 == 0 {
            total += count;
        } else {
            total -= count;
        }
    }
    total as u64
}

/// Counters and timings for one sieve run.
#[derive(Clone, Debug, Default)]
pub struct SieveStats {
    /// Rows actually sieved (M_c).
    pub coprime_rows: u64,
    /// pi(cutoff): primes handled by the per-row phase.
    pub small_prime_count: u64,
    /// pi(p_limit) - pi(cutoff): primes handled through the solver.
    pub large_prime_count: u64,
    /// Large-phase composite hits actually marked. Distinct primes hitting
    /// the same bit count separately; skipped non-coprime rows do not count.
    pub factor_events: u64,
    /// Total solver evaluations in the large phase: one initial solve per
    /// prime plus one step per solution visited (coprime row or not).
    pub solver_calls: u64,
    /// Large-phase marks bucketed by decade of the prime
    /// (key = floor(log10 p)).
    pub events_per_decade: BTreeMap<u32, u64>,
    pub survivors_per_row: Vec<u64>,
    pub small_phase: Duration,
    pub large_phase: Duration,
}

/// Estimated allocation: `(total, grid, prime cache, row table)` in bytes.
pub fn memory_estimate(cfg: &PrimorialConfig, params: &SieveParams) -> (u64, u64, u64, u64) {
    let mut coprime_frac = 1.0f64;
    for &(q, _) in cfg.divisor.factors() {
        coprime_frac *= 1.0 - 1.0 / q as f64;
    }
    let rows = (cfg.m_count as f64 * coprime_frac).ceil() as u64 + 1;
    let grid = rows * params.interval_len().div_ceil(64) * 8;
    let cutoff = params.small_prime_cutoff();
    // ~p/ln p primes at 48 bytes per cached entry.
    let cache = (cutoff as f64 / (cutoff as f64).ln().max(1.0) * 48.0) as u64;
    let table = cfg.m_count * 4;
    (grid + cache + table, grid, cache, table)
}

#[inline]
fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    // p < 2^62 keeps a + b from overflowing
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

/// Row values as u64 when K is small enough for the whole m range; `None`
/// at production sizes. Used to avoid ever striking a prime itself in toy
/// configurations where `m*K + o` can equal the sieving prime.
fn row_values_if_small(cfg: &PrimorialConfig, m_values: &[u64]) -> Option<Vec<u64>> {
    if cfg.k_bits() > 64 {
        return None;
    }
    let k = cfg.k().to_u64()?;
    m_values.iter().map(|&m| m.checked_mul(k)).collect()
}

/// Mark every offset sharing a prime factor with K, identically in all rows.
/// Such offsets are composite regardless of the prime limit, so the default
/// sieve sets them up front and the small phase skips the primes dividing K.
pub fn premark_shared_factor_offsets(cfg: &PrimorialConfig, grid: &mut CompositeGrid) {
    let s = grid.row_bits;
    let x = grid.half_width;
    let mut mask = Bitmap::new(s);
    for q in numtheory::small_primes(cfg.top_prime) {
        if !cfg.divisor.is_coprime_with(q) {
            continue; // q | d, so q does not divide K
        }
        // q | m*K + o  <=>  q | o; index u = o + X.
        let mut u = (x % q) as usize;
        while u < s {
            mask.set(u);
            u += q as usize;
        }
    }
    // If K is itself a u64 prime, offset 0 of row m=1 would be the prime K;
    // leave the center bit to the phases, which know the actual row values.
    if cfg
        .k()
        .to_u64()
        .map(numtheory::is_prime_u64)
        .unwrap_or(false)
    {
        let center = x as usize;
        mask.words[center / 64] &= !(1 << (center % 64));
    }
    let wpr = grid.words_per_row;
    for row in 0..grid.rows() {
        for (w, &mw) in mask.words.iter().enumerate() {
            grid.bits[row * wpr + w] |= mw;
        }
    }
}

struct SmallPrime {
    prime: u64,
    k_mod: u64,
    x_mod: u64,
    recip: Reciprocal,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SmallPhaseReport {
    pub prime_count: u64,
    pub elapsed: Duration,
}

/// Mark all multiples of primes `<= small_mult*S` in every row, using one
/// cached `K mod p` per prime. When `skip_k_factors` is set, primes dividing
/// K are left to the premark (their pattern is the same in every row).
pub fn small_prime_phase(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    grid: &mut CompositeGrid,
    skip_k_factors: bool,
) -> SmallPhaseReport {
    let start = Instant::now();
    let cutoff = params.small_prime_cutoff();
    let primes: Vec<u64> = numtheory::primes_up_to(cutoff).collect();
    let prime_count = primes.len() as u64;
    let x = params.half_width;
    let cached: Vec<SmallPrime> = primes
        .into_par_iter()
        .map(|p| {
            let recip = Reciprocal::new(p);
            SmallPrime {
                prime: p,
                k_mod: cfg.k_mod_with(&recip),
                x_mod: x % p,
                recip,
            }
        })
        .collect();

    let s = grid.row_bits;
    let wpr = grid.words_per_row;
    let small_n = row_values_if_small(cfg, &grid.m_values);
    let bits = &mut grid.bits;
    let m_values = &grid.m_values;
    bits.par_chunks_mut(wpr)
        .zip(m_values.par_iter())
        .enumerate()
        .for_each(|(row, (words, &m))| {
            let n_small = small_n.as_ref().map(|v| v[row]);
            for sp in &cached {
                if skip_k_factors && sp.k_mod == 0 {
                    continue;
                }
                let p = sp.prime;
                // N mod p from the cached residue: one word multiply.
                let base = sp.recip.mul_mod(m % p, sp.k_mod);
                // o = -N (mod p)  <=>  index u = X - base (mod p)
                let mut u = modsolver::sub_mod(sp.x_mod, base, p) as usize;
                if let Some(n) = n_small {
                    // tiny N: never strike the prime p itself
                    let skip = (p + x).checked_sub(n).map(|v| v as usize);
                    while u < s {
                        if Some(u) != skip {
                            words[u / 64] |= 1 << (u % 64);
                        }
                        u += p as usize;
                    }
                } else {
                    while u < s {
                        words[u / 64] |= 1 << (u % 64);
                        u += p as usize;
                    }
                }
            }
        });

    SmallPhaseReport {
        prime_count,
        elapsed: start.elapsed(),
    }
}

/// Large-prime phase output, merged over all chunks.
#[derive(Debug, Default)]
pub struct LargePhaseReport {
    pub prime_count: u64,
    pub solver_calls: u64,
    pub factor_events: u64,
    pub events_per_decade: BTreeMap<u32, u64>,
    pub collected: Option<Vec<FactorEvent>>,
    pub elapsed: Duration,
}

struct ChunkOutput {
    marks: Vec<(u32, u32)>,
    events: Vec<FactorEvent>,
    solver_calls: u64,
    prime_count: u64,
    per_decade: Vec<(u32, u64)>,
}

fn bump_decade(per_decade: &mut Vec<(u32, u64)>, p: u64) {
    let d = p.ilog10();
    match per_decade.iter_mut().find(|(k, _)| *k == d) {
        Some((_, n)) => *n += 1,
        None => per_decade.push((d, 1)),
    }
}

/// Walk every prime in `(cutoff, p_limit]` through the solver and mark the
/// offsets it divides. Chunks of the prime range run in parallel; marks are
/// applied in `(p, m)` order afterwards, so the grid and any collected event
/// stream are independent of thread count.
pub fn large_prime_phase(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    grid: &mut CompositeGrid,
    opts: &SieveOptions,
) -> Result<LargePhaseReport> {
    let start = Instant::now();
    let cutoff = params.small_prime_cutoff();
    let mut report = LargePhaseReport {
        collected: opts.collect_events.then(Vec::new),
        ..LargePhaseReport::default()
    };
    if cutoff >= params.p_limit {
        return Ok(report);
    }

    let mut chunks: Vec<(u64, u64)> = Vec::new(); // inclusive prime ranges
    let mut lo = cutoff + 1;
    while lo <= params.p_limit {
        let hi = lo.saturating_add(opts.chunk_width - 1).min(params.p_limit);
        chunks.push((lo, hi));
        lo = hi + 1;
    }

    let small_n = row_values_if_small(cfg, &grid.m_values);
    let outputs: Vec<Result<ChunkOutput>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            sieve_prime_chunk(
                cfg,
                params,
                grid,
                small_n.as_deref(),
                lo,
                hi,
                opts.collect_events,
            )
        })
        .collect();

    for out in outputs {
        let out = out?;
        for &(row, idx) in &out.marks {
            grid.mark(row as usize, idx as usize);
        }
        report.factor_events += out.marks.len() as u64;
        report.solver_calls += out.solver_calls;
        report.prime_count += out.prime_count;
        for (decade, n) in out.per_decade {
            *report.events_per_decade.entry(decade).or_insert(0) += n;
        }
        if let Some(all) = report.collected.as_mut() {
            all.extend(out.events);
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

fn sieve_prime_chunk(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    grid: &CompositeGrid,
    small_n: Option<&[u64]>,
    lo: u64,
    hi: u64,
    collect: bool,
) -> Result<ChunkOutput> {
    let x = params.half_width;
    let two_x = 2 * x;
    let m_start = cfg.m_start;
    let m_end = cfg.m_end();

    let mut out = ChunkOutput {
        marks: Vec::new(),
        events: Vec::new(),
        solver_calls: 0,
        prime_count: 0,
        per_decade: Vec::new(),
    };

    for p in numtheory::primes_in(lo, hi) {
        out.prime_count += 1;
        let recip = Reciprocal::new(p);
        let k = cfg.k_mod_with(&recip);

        if k == 0 {
            // p divides K (the cutoff sat below the primorial top). Offset 0
            // of every row is a multiple of p, and p > 2X rules out others.
            let idx = grid.offset_to_index(0) as u32;
            for (row, &m) in grid.m_values().iter().enumerate() {
                if small_n.map(|v| v[row] == p).unwrap_or(false) {
                    continue; // the row value is the prime itself
                }
                out.marks.push((row as u32, idx));
                bump_decade(&mut out.per_decade, p);
                if collect {
                    out.events.push(FactorEvent {
                        prime: p,
                        m,
                        offset: 0,
                    });
                }
            }
            continue;
        }

        debug_assert!(two_x < p);
        let inst = SolveInstance {
            modulus: p,
            multiplier: k,
            lo: 0,
            hi: two_x,
        };
        // Track u(m) = (m*K + X) mod p; a hit is u <= 2X, at offset o = X - u.
        let t0 = add_mod(recip.mul_mod(m_start % p, k), x % p, p);
        let delta = modsolver::delta_into_range(&inst, t0)?;
        out.solver_calls += 1;
        let mut m = m_start + delta;
        let mut t = add_mod(t0, recip.mul_mod(delta % p, k), p);
        while m < m_end {
            if let Some(row) = grid.row_index(m) {
                let idx = (two_x - t) as u32;
                let offset = x as i64 - t as i64;
                let strikes_itself = small_n
                    .map(|v| offset as i128 == p as i128 - v[row] as i128)
                    .unwrap_or(false);
                if !strikes_itself {
                    out.marks.push((row as u32, idx));
                    bump_decade(&mut out.per_decade, p);
                    if collect {
                        out.events.push(FactorEvent {
                            prime: p,
                            m,
                            offset,
                        });
                    }
                    #[cfg(debug_assertions)]
                    if out.marks.len() % 4096 == 1 {
                        let val = if offset >= 0 {
                            cfg.n_value(m) + offset as u64
                        } else {
                            cfg.n_value(m) - (-offset) as u64
                        };
                        debug_assert_eq!(
                            numtheory::residue(&val, p),
                            0,
                            "factor event does not divide: p={p} m={m} offset={offset}"
                        );
                    }
                }
            }
            let step = modsolver::step_after_value(&inst, t)?;
            out.solver_calls += 1;
            m += step;
            t = add_mod(t, recip.mul_mod(step % p, k), p);
        }
    }
    Ok(out)
}

fn run(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    opts: &SieveOptions,
) -> Result<(CompositeGrid, SieveStats, Option<Vec<FactorEvent>>)> {
    let (required, grid_bytes, cache_bytes, table_bytes) = memory_estimate(cfg, params);
    if required > opts.mem_budget {
        return Err(Error::MemoryBudget {
            required,
            grid: grid_bytes,
            cache: cache_bytes,
            table: table_bytes,
            budget: opts.mem_budget,
        });
    }
    if cfg.m_end().checked_add(params.p_limit).is_none() {
        return Err(Error::InvalidConfig("m range + p_limit overflows".into()));
    }
    // The lowest sieved value must stay above 1.
    let min_n = cfg.n_value(cfg.m_start);
    if min_n <= BigUint::from(params.half_width + 1) {
        return Err(Error::InvalidConfig(format!(
            "first interval underflows: m_start*K = {min_n} <= X+1"
        )));
    }

    let mut grid = CompositeGrid::new(cfg, params)?;
    let mut stats = SieveStats {
        coprime_rows: grid.rows() as u64,
        ..SieveStats::default()
    };

    if !opts.strict_oracle {
        premark_shared_factor_offsets(cfg, &mut grid);
    }
    let small = small_prime_phase(cfg, params, &mut grid, !opts.strict_oracle);
    stats.small_prime_count = small.prime_count;
    stats.small_phase = small.elapsed;

    let large = large_prime_phase(cfg, params, &mut grid, opts)?;
    stats.large_prime_count = large.prime_count;
    stats.factor_events = large.factor_events;
    stats.solver_calls = large.solver_calls;
    stats.events_per_decade = large.events_per_decade;
    stats.large_phase = large.elapsed;

    stats.survivors_per_row = grid.survivors_per_row();
    Ok((grid, stats, large.collected))
}

/// Run the full combined sieve.
///
/// The resulting grid bit for `(m, o)` is set iff `m*K + o` has a prime
/// factor `<= p_limit` (plus, outside strict-oracle mode, any factor shared
/// with K). Deterministic regardless of the rayon pool in use.
pub fn sieve(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    opts: &SieveOptions,
) -> Result<(CompositeGrid, SieveStats)> {
    let (grid, stats, _) = run(cfg, params, opts)?;
    Ok((grid, stats))
}

/// [`sieve`] that also returns the large-phase factor events in `(p, m)`
/// order.
pub fn sieve_with_events(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    opts: &SieveOptions,
) -> Result<(CompositeGrid, SieveStats, Vec<FactorEvent>)> {
    let mut opts = opts.clone();
    opts.collect_events = true;
    let (grid, stats, events) = run(cfg, params, &opts)?;
    Ok((grid, stats, events.unwrap_or_default()))
}
