//! Prime generation, primorial construction, and single-word residues of
//! arbitrary-precision integers.
//!
//! Everything downstream leans on two primitives here:
//!
//! 1. [`PrimeStream`] — a segmented, odd-only sieve of Eratosthenes that
//!    streams primes in ascending order without materializing them. Segment
//!    size is tunable (default 2^20 odd entries) so memory stays bounded at
//!    large limits.
//! 2. [`Reciprocal`] — division of a multi-limb integer by an invariant u64
//!    using the Möller–Granlund precomputed-reciprocal scheme. One `K mod p`
//!    costs a handful of multiplies per 64-bit limb instead of a hardware
//!    128/64 division, which is what makes residue-heavy sieving competitive.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// Odd entries per sieve segment (1 MiB of candidate flags per segment).
pub const DEFAULT_SEGMENT_ODDS: usize = 1 << 20;

/// All primes `<= limit` via a plain odd-only sieve. Intended for base primes
/// and other small jobs; use [`primes_up_to`] for anything large.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let mut primes = vec![2];
    if limit < 3 {
        return primes;
    }
    // flag[i] represents 2i+3
    let n = ((limit - 3) / 2 + 1) as usize;
    let mut composite = vec![false; n];
    let mut i = 0usize;
    while {
        let p = 2 * i as u64 + 3;
        p * p <= limit
    } {
        if !composite[i] {
            let p = 2 * i as u64 + 3;
            let mut j = ((p * p) - 3) / 2;
            while (j as usize) < n {
                composite[j as usize] = true;
                j += p;
            }
        }
        i += 1;
    }
    primes.extend(
        composite
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| 2 * i as u64 + 3),
    );
    primes
}

/// Streaming segmented sieve over `[lo, hi]`.
pub struct PrimeStream {
    next_at: u64, // first odd value of the next segment
    hi: u64,      // inclusive
    base: Vec<u64>,
    buf: Vec<u64>,
    pos: usize,
    segment_odds: usize,
    pending_two: bool,
}

impl PrimeStream {
    fn new(lo: u64, hi: u64, segment_odds: usize) -> Self {
        assert!(segment_odds > 0);
        let lo = lo.max(2);
        let base = if hi >= 9 {
            small_primes(hi.isqrt())
                .into_iter()
                .filter(|&p| p != 2)
                .collect()
        } else {
            Vec::new()
        };
        let pending_two = lo <= 2 && hi >= 2;
        PrimeStream {
            next_at: lo.max(3) | 1,
            hi,
            base,
            buf: Vec::new(),
            pos: 0,
            segment_odds,
            pending_two,
        }
    }

    fn refill(&mut self) {
        let lo = self.next_at;
        let n = self
            .segment_odds
            .min(((self.hi - lo) / 2 + 1) as usize);
        let words = n.div_ceil(64);
        let mut composite = vec![0u64; words];
        let seg_end = lo + 2 * n as u64; // exclusive
        for &p in &self.base {
            if p * p >= seg_end {
                break;
            }
            let mut start = (p * p).max(lo.div_ceil(p) * p);
            if start % 2 == 0 {
                start += p;
            }
            if start >= seg_end {
                continue;
            }
            let mut idx = ((start - lo) / 2) as usize;
            while idx < n {
                composite[idx / 64] |= 1 << (idx % 64);
                idx += p as usize;
            }
        }
        self.buf.clear();
        self.pos = 0;
        for (w, &word) in composite.iter().enumerate() {
            let mut survivors = !word;
            if w == words - 1 && n % 64 != 0 {
                survivors &= (1u64 << (n % 64)) - 1;
            }
            while survivors != 0 {
                let bit = survivors.trailing_zeros() as usize;
                survivors &= survivors - 1;
                self.buf.push(lo + 2 * (w * 64 + bit) as u64);
            }
        }
        self.next_at = seg_end;
    }
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.pending_two {
            self.pending_two = false;
            return Some(2);
        }
        while self.pos >= self.buf.len() {
            if self.next_at > self.hi {
                return None;
            }
            self.refill();
        }
        let p = self.buf[self.pos];
        self.pos += 1;
        Some(p)
    }
}

/// Primes `<= limit`, ascending. `limit < 2` yields an empty stream.
pub fn primes_up_to(limit: u64) -> PrimeStream {
    PrimeStream::new(2, limit, DEFAULT_SEGMENT_ODDS)
}

/// Primes `<= limit` with an explicit segment size (odd entries per segment).
pub fn primes_up_to_segmented(limit: u64, segment_odds: usize) -> PrimeStream {
    PrimeStream::new(2, limit, segment_odds)
}

/// Primes in the inclusive range `[lo, hi]`, ascending.
pub fn primes_in(lo: u64, hi: u64) -> PrimeStream {
    PrimeStream::new(lo, hi, DEFAULT_SEGMENT_ODDS)
}

/// Exact prime count `pi(limit)`.
pub fn count_primes(limit: u64) -> u64 {
    primes_up_to(limit).count() as u64
}

/// Trial-division primality for machine-word integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = 11u64;
    // 2/3 wheel hops: 11, 13, 17, 19, 23, 25(skip-free cheap), ...
    let hops = [2u64, 4];
    let mut h = 0;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += hops[h];
        h ^= 1;
    }
    true
}

/// Prime factorization of a machine-word integer, `(prime, exponent)` pairs
/// in ascending prime order.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

// ---------------------------------------------------------------------------
// Division by an invariant u64 (Möller–Granlund).
// ---------------------------------------------------------------------------

/// Remainder of `(hi:lo) / d` for normalized `d` (top bit set), `hi < d`,
/// using the precomputed reciprocal `v = floor((2^128 - 1)/d) - 2^64`.
#[inline]
fn rem_2by1(hi: u64, lo: u64, d: u64, v: u64) -> u64 {
    debug_assert!(d >> 63 == 1 && hi < d);
    let q = (v as u128) * (hi as u128) + ((((hi + 1) as u128) << 64) | lo as u128);
    let q_hi = (q >> 64) as u64;
    let q_lo = q as u64;
    let mut r = lo.wrapping_sub(q_hi.wrapping_mul(d));
    if r > q_lo {
        r = r.wrapping_add(d);
    }
    if r >= d {
        r -= d;
    }
    r
}

/// Precomputed reciprocal of a u64 divisor, for repeated remainders.
#[derive(Clone, Copy, Debug)]
pub struct Reciprocal {
    divisor: u64,
    d_norm: u64,
    v: u64,
    shift: u32,
}

impl Reciprocal {
    pub fn new(divisor: u64) -> Self {
        assert!(divisor >= 1);
        let shift = divisor.leading_zeros();
        let d_norm = divisor << shift;
        let v = ((u128::MAX / d_norm as u128) - (1u128 << 64)) as u64;
        Reciprocal {
            divisor,
            d_norm,
            v,
            shift,
        }
    }

    #[inline]
    pub fn divisor(&self) -> u64 {
        self.divisor
    }

    /// Remainder of a little-endian limb vector modulo the divisor.
    #[inline]
    pub fn rem_limbs(&self, limbs: &[u64]) -> u64 {
        let s = self.shift;
        let mut r: u64;
        if s == 0 {
            r = 0;
            for &limb in limbs.iter().rev() {
                r = rem_2by1(r, limb, self.d_norm, self.v);
            }
        } else {
            let t = 64 - s;
            r = match limbs.last() {
                Some(&top) => top >> t,
                None => 0,
            };
            for i in (0..limbs.len()).rev() {
                let carry = if i > 0 { limbs[i - 1] >> t } else { 0 };
                r = rem_2by1(r, (limbs[i] << s) | carry, self.d_norm, self.v);
            }
        }
        r >> s
    }

    #[inline]
    pub fn rem_u128(&self, x: u128) -> u64 {
        self.rem_limbs(&[x as u64, (x >> 64) as u64])
    }

    /// `a * b mod divisor` through the reciprocal (no hardware division).
    #[inline]
    pub fn mul_mod(&self, a: u64, b: u64) -> u64 {
        self.rem_u128(a as u128 * b as u128)
    }
}

/// A big integer frozen as little-endian u64 limbs, ready for repeated
/// single-word remainders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limbs(Vec<u64>);

impl Limbs {
    pub fn new(n: &BigUint) -> Self {
        Limbs(n.to_u64_digits())
    }

    pub fn rem_u64(&self, d: u64) -> u64 {
        Reciprocal::new(d).rem_limbs(&self.0)
    }

    #[inline]
    pub fn rem_with(&self, r: &Reciprocal) -> u64 {
        r.rem_limbs(&self.0)
    }

    pub fn limbs(&self) -> &[u64] {
        &self.0
    }
}

/// `n mod d` in a machine word.
pub fn residue(n: &BigUint, d: u64) -> u64 {
    Limbs::new(n).rem_u64(d)
}

/// Natural log of a big integer (top 53 bits plus the binary exponent).
pub fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 53 {
        return (n.to_u64().expect("fits") as f64).ln();
    }
    let shift = bits - 53;
    let top = (n >> shift).to_u64().expect("53 bits");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

// ---------------------------------------------------------------------------
// Divisors and the primorial form K = P#/d.
// ---------------------------------------------------------------------------

/// Product of all primes `<= p`.
pub fn primorial(p: u64) -> BigUint {
    small_primes(p)
        .into_iter()
        .map(BigUint::from)
        .product::<BigUint>()
        .max(BigUint::one())
}

/// A divisor of a primorial, kept in factored form. Accepts `210`, `13#`,
/// or products like `13#*8009`; the factored spelling is canonical in files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorSpec {
    text: String,
    value: BigUint,
    factors: Vec<(u64, u32)>,
}

impl DivisorSpec {
    pub fn one() -> Self {
        DivisorSpec {
            text: "1".to_string(),
            value: BigUint::one(),
            factors: Vec::new(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::BadDivisor(s.to_string());
        let mut value = BigUint::one();
        let mut factors: Vec<(u64, u32)> = Vec::new();
        let mut terms = Vec::new();
        for raw in s.split('*') {
            let term = raw.trim();
            if term.is_empty() {
                return Err(bad());
            }
            if let Some(top) = term.strip_suffix('#') {
                let top: u64 = top.parse().map_err(|_| bad())?;
                if top < 2 {
                    return Err(bad());
                }
                for q in small_primes(top) {
                    value *= q;
                    merge_factor(&mut factors, q, 1);
                }
                terms.push(format!("{top}#"));
            } else {
                let n: u64 = term.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                for (q, e) in factor_u64(n) {
                    merge_factor(&mut factors, q, e);
                }
                value *= n;
                terms.push(n.to_string());
            }
        }
        if terms.is_empty() {
            return Err(bad());
        }
        factors.sort_unstable();
        Ok(DivisorSpec {
            text: terms.join("*"),
            value,
            factors,
        })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    /// `(prime, exponent)` pairs, ascending.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// True when `gcd(m, d) = 1`.
    #[inline]
    pub fn is_coprime_with(&self, m: u64) -> bool {
        self.factors.iter().all(|&(q, _)| m % q != 0)
    }
}

fn merge_factor(factors: &mut Vec<(u64, u32)>, q: u64, e: u32) {
    match factors.iter_mut().find(|(p, _)| *p == q) {
        Some((_, exp)) => *exp += e,
        None => factors.push((q, e)),
    }
}

impl std::fmt::Display for DivisorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

impl std::str::FromStr for DivisorSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DivisorSpec::parse(s)
    }
}

/// The number form `K = P#/d` together with the `m` range being searched.
/// Intervals are sieved around `N = m*K` for the `m` in
/// `[m_start, m_start + m_count)` that are coprime to `d`.
#[derive(Clone, Debug)]
pub struct PrimorialConfig {
    pub top_prime: u64,
    pub divisor: DivisorSpec,
    pub m_start: u64,
    pub m_count: u64,
    k: BigUint,
    k_limbs: Limbs,
    ln_k: f64,
}

impl PrimorialConfig {
    pub fn new(top_prime: u64, divisor: DivisorSpec, m_start: u64, m_count: u64) -> Result<Self> {
        if !is_prime_u64(top_prime) {
            return Err(Error::NotPrime(top_prime));
        }
        if m_start < 1 || m_count < 1 {
            return Err(Error::InvalidConfig(
                "m_start and m_count must be >= 1".into(),
            ));
        }
        if m_start.checked_add(m_count).is_none() {
            return Err(Error::InvalidConfig("m range overflows u64".into()));
        }
        for &(q, e) in divisor.factors() {
            if e > 1 || q > top_prime {
                return Err(Error::DivisorNotDividing {
                    prime: q,
                    exponent: e,
                });
            }
        }
        let mut k = BigUint::one();
        let mut ln_k = 0.0f64;
        for q in small_primes(top_prime) {
            if divisor.is_coprime_with(q) {
                k *= q;
                ln_k += (q as f64).ln();
            }
        }
        debug_assert_eq!(&k * divisor.value(), primorial(top_prime));
        let k_limbs = Limbs::new(&k);
        Ok(PrimorialConfig {
            top_prime,
            divisor,
            m_start,
            m_count,
            k,
            k_limbs,
            ln_k,
        })
    }

    pub fn k(&self) -> &BigUint {
        &self.k
    }

    /// `ln K` as the sum of the logs of K's prime factors. Double precision,
    /// which is all the estimate formulas consuming it need.
    pub fn ln_k(&self) -> f64 {
        self.ln_k
    }

    pub fn k_bits(&self) -> u64 {
        self.k.bits()
    }

    /// One exclusive past the last `m`.
    pub fn m_end(&self) -> u64 {
        self.m_start + self.m_count
    }

    /// `K mod p`.
    #[inline]
    pub fn k_mod(&self, p: u64) -> u64 {
        self.k_limbs.rem_u64(p)
    }

    /// `K mod p` through a caller-held reciprocal.
    #[inline]
    pub fn k_mod_with(&self, r: &Reciprocal) -> u64 {
        self.k_limbs.rem_with(r)
    }

    /// `N = m*K` exactly.
    pub fn n_value(&self, m: u64) -> BigUint {
        &self.k * m
    }

    /// `ln N = ln m + ln K`.
    pub fn ln_n(&self, m: u64) -> f64 {
        (m as f64).ln() + self.ln_k
    }

    /// True when `K = 1` (the divisor swallows the whole primorial).
    pub fn k_is_one(&self) -> bool {
        self.k.is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_primes_match_known_values() {
        assert_eq!(small_primes(1), Vec::<u64>::new());
        assert_eq!(small_primes(2), vec![2]);
        assert_eq!(small_primes(10), vec![2, 3, 5, 7]);
        assert_eq!(small_primes(30).len(), 10);
        assert_eq!(small_primes(10_000).len(), 1229);
    }

    #[test]
    fn stream_small_case() {
        let got: Vec<u64> = primes_up_to(10).collect();
        assert_eq!(got, vec![2, 3, 5, 7]);
        assert_eq!(primes_up_to(1).count(), 0);
        assert_eq!(primes_up_to(2).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn stream_counts() {
        assert_eq!(count_primes(100_000), 9_592);
        assert_eq!(count_primes(1_000_000), 78_498);
    }

    #[test]
    fn stream_matches_trial_division_up_to_1e5() {
        let streamed: Vec<u64> = primes_up_to(100_000).collect();
        let trial: Vec<u64> = (2..=100_000).filter(|&n| is_prime_u64(n)).collect();
        assert_eq!(streamed, trial);
    }

    #[test]
    fn stream_segment_size_is_irrelevant() {
        let a: Vec<u64> = primes_up_to(50_000).collect();
        for seg in [64usize, 333, 4096] {
            let b: Vec<u64> = primes_up_to_segmented(50_000, seg).collect();
            assert_eq!(a, b, "segment_odds={seg}");
        }
    }

    #[test]
    fn range_stream_is_a_suffix() {
        let all: Vec<u64> = primes_up_to(10_000).collect();
        let tail: Vec<u64> = primes_in(5_000, 10_000).collect();
        let expected: Vec<u64> = all.into_iter().filter(|&p| p >= 5_000).collect();
        assert_eq!(tail, expected);
    }

    #[test]
    #[ignore = "minutes of sieving; run with --ignored"]
    fn stream_count_1e10() {
        assert_eq!(count_primes(10_000_000_000), 455_052_511);
    }

    #[test]
    fn reciprocal_matches_hardware_division() {
        let cases: Vec<(u128, u64)> = vec![
            (0, 1),
            (u128::MAX, u64::MAX),
            (u128::MAX, 3),
            (12345678901234567890123456789, 1_000_003),
            ((1u128 << 127) + 12345, (1u64 << 63) + 9),
            (210, 11),
        ];
        for (x, d) in cases {
            let r = Reciprocal::new(d);
            assert_eq!(r.rem_u128(x) as u128, x % d as u128, "x={x} d={d}");
        }
    }

    proptest! {
        #[test]
        fn reciprocal_rem_u128_prop(x in any::<u128>(), d in 1u64..) {
            let r = Reciprocal::new(d);
            prop_assert_eq!(r.rem_u128(x) as u128, x % d as u128);
        }

        #[test]
        fn reciprocal_mul_mod_prop(a in any::<u64>(), b in any::<u64>(), d in 1u64..) {
            let r = Reciprocal::new(d);
            prop_assert_eq!(
                r.mul_mod(a, b) as u128,
                (a as u128 * b as u128) % d as u128
            );
        }
    }

    #[test]
    fn residue_small_cases() {
        assert_eq!(residue(&BigUint::from(210u32), 11), 1);
        assert_eq!(residue(&BigUint::from(0u32), 7), 0);
    }

    #[test]
    fn residue_k_odd_when_two_divides_d() {
        let cfg = PrimorialConfig::new(97, DivisorSpec::parse("210").unwrap(), 1, 1).unwrap();
        assert_eq!(cfg.k_mod(2), 1);
    }

    /// Independent oracle: K mod p as the product of (q mod p) over K's prime
    /// factors, reduced mod p.
    #[test]
    fn residue_matches_factor_product_oracle() {
        let cfg = PrimorialConfig::new(503, DivisorSpec::parse("210").unwrap(), 1, 1).unwrap();
        for p in [1_000_003u64, 17, 65_537, 4_294_967_311] {
            let mut acc: u64 = 1;
            for q in small_primes(503) {
                if cfg.divisor.is_coprime_with(q) {
                    acc = ((acc as u128 * (q % p) as u128) % p as u128) as u64;
                }
            }
            assert_eq!(cfg.k_mod(p), acc, "p={p}");
        }
    }

    #[test]
    fn primorial_form_small() {
        let cfg = PrimorialConfig::new(7, DivisorSpec::one(), 1, 1).unwrap();
        assert_eq!(cfg.k(), &BigUint::from(210u32));
    }

    #[test]
    fn primorial_form_bit_length() {
        // log2(8887#/13#) lands on 12,651 bits give or take one.
        let cfg = PrimorialConfig::new(8887, DivisorSpec::parse("13#").unwrap(), 1, 1).unwrap();
        let bits = cfg.k_bits();
        assert!((12_650..=12_652).contains(&bits), "bits={bits}");
        // ln K agrees with the exact bit count to a few parts in 1e10.
        let ln_from_bits = ln_big(cfg.k());
        assert!((cfg.ln_k() - ln_from_bits).abs() / ln_from_bits < 1e-9);
    }

    #[test]
    fn primorial_times_divisor_reconstructs() {
        for (p, d) in [(97u64, "7#"), (503, "210"), (53, "13#*47"), (13, "1")] {
            let d = DivisorSpec::parse(d).unwrap();
            let cfg = PrimorialConfig::new(p, d.clone(), 1, 1).unwrap();
            assert_eq!(cfg.k() * d.value(), primorial(p));
        }
    }

    #[test]
    fn divisor_rejections_name_the_prime_power() {
        // 121 = 11^2 cannot divide a primorial.
        let d = DivisorSpec::parse("121").unwrap();
        match PrimorialConfig::new(97, d, 1, 1) {
            Err(Error::DivisorNotDividing { prime: 11, exponent: 2 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        // 101 > 97 is not a factor of 97#.
        let d = DivisorSpec::parse("101").unwrap();
        match PrimorialConfig::new(97, d, 1, 1) {
            Err(Error::DivisorNotDividing { prime: 101, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn divisor_parse_forms() {
        let d = DivisorSpec::parse("13#*8009").unwrap();
        assert_eq!(d.to_string(), "13#*8009");
        assert_eq!(
            d.value(),
            &(primorial(13) * BigUint::from(8009u32))
        );
        assert!(d.factors().contains(&(8009, 1)));
        assert!(!d.is_coprime_with(8009 * 3));
        assert!(d.is_coprime_with(17));

        let plain = DivisorSpec::parse("30030").unwrap();
        assert_eq!(plain.value(), &primorial(13));

        assert!(DivisorSpec::parse("").is_err());
        assert!(DivisorSpec::parse("0").is_err());
        assert!(DivisorSpec::parse("x#").is_err());
        assert!(DivisorSpec::parse("5#*").is_err());
    }

    #[test]
    fn not_prime_top_is_rejected() {
        assert!(matches!(
            PrimorialConfig::new(91, DivisorSpec::one(), 1, 1),
            Err(Error::NotPrime(91))
        ));
    }

    #[test]
    fn ln_big_matches_f64_for_small_values() {
        for n in [2u64, 97, 1 << 40, u64::MAX] {
            let got = ln_big(&BigUint::from(n));
            let want = (n as f64).ln();
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "n={n}");
        }
    }

    proptest! {
        #[test]
        fn is_prime_u64_matches_small_primes(n in 0u64..100_000) {
            let primes = small_primes(100_000);
            prop_assert_eq!(is_prime_u64(n), primes.binary_search(&n).is_ok());
        }
    }
}
