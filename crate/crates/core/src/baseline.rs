//! The traditional one-interval-at-a-time sieve.
//!
//! Each row pays one big-integer reduction of `N = m*K` per prime, with no
//! residue caching across rows — deliberately, since this module is the
//! correctness oracle and the speedup yardstick for the combined sieve.
//! Rows are independent and run in parallel.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::Result;
use crate::numtheory::{self, Limbs, PrimorialConfig, Reciprocal};
use crate::sieve::{Bitmap, CompositeGrid, SieveParams};

/// Mark every value in `[start, start + len)` that has a prime factor from
/// `primes` smaller than itself. Bit `i` corresponds to `start + i`.
pub fn sieve_window_with(primes: &[u64], start: &BigUint, len: u64) -> Bitmap {
    let mut bits = Bitmap::new(len as usize);
    let limbs = Limbs::new(start);
    let start_small = start.to_u64();
    for &p in primes {
        let recip = Reciprocal::new(p);
        let r = limbs.rem_with(&recip);
        let mut i = if r == 0 { 0 } else { p - r };
        // Index holding the value p itself, which must not be struck
        // (possible only when the window starts at or below p).
        let skip = start_small.and_then(|s| p.checked_sub(s));
        while i < len {
            if Some(i) != skip {
                bits.set(i as usize);
            }
            i += p;
        }
    }
    bits
}

/// [`sieve_window_with`] generating its own prime list up to `p_limit`.
pub fn sieve_window(start: &BigUint, len: u64, p_limit: u64) -> Bitmap {
    let primes: Vec<u64> = numtheory::primes_up_to(p_limit).collect();
    sieve_window_with(&primes, start, len)
}

/// Sieve the single interval `[m*K - X, m*K + X]`; bit index `o + X`.
pub fn sieve_single_interval(cfg: &PrimorialConfig, m: u64, params: &SieveParams) -> Bitmap {
    let primes: Vec<u64> = numtheory::primes_up_to(params.p_limit).collect();
    sieve_single_interval_with(&primes, cfg, m, params)
}

fn sieve_single_interval_with(
    primes: &[u64],
    cfg: &PrimorialConfig,
    m: u64,
    params: &SieveParams,
) -> Bitmap {
    let n = cfg.n_value(m);
    let start = &n - params.half_width;
    sieve_window_with(primes, &start, params.interval_len())
}

/// Sieve every coprime row one interval at a time. Grid semantics are
/// identical to the combined sieve in strict-oracle mode.
pub fn sieve_all(cfg: &PrimorialConfig, params: &SieveParams) -> Result<CompositeGrid> {
    let mut grid = CompositeGrid::new(cfg, params)?;
    let primes: Vec<u64> = numtheory::primes_up_to(params.p_limit).collect();
    let rows: Vec<(usize, Bitmap)> = grid
        .m_values()
        .to_vec()
        .into_par_iter()
        .enumerate()
        .map(|(row, m)| (row, sieve_single_interval_with(&primes, cfg, m, params)))
        .collect();
    for (row, bitmap) in rows {
        grid.set_row(row, &bitmap);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::DivisorSpec;
    use crate::sieve::{self, SieveOptions};

    fn cfg(p: u64, d: &str, m_start: u64, m_count: u64) -> PrimorialConfig {
        PrimorialConfig::new(p, DivisorSpec::parse(d).unwrap(), m_start, m_count).unwrap()
    }

    #[test]
    fn hand_example_around_210() {
        // N = 210, X = 5, limit 10: 209 = 11*19 survives (no factor <= 10),
        // 212 = 4*53 is struck via 2, 211 survives.
        let c = cfg(7, "1", 1, 1);
        let params = SieveParams::new(5, 10, 1).unwrap();
        let row = sieve_single_interval(&c, 1, &params);
        let idx = |o: i64| (o + 5) as usize;
        assert!(!row.get(idx(-1)), "209 has no factor <= 10");
        assert!(row.get(idx(2)), "212 is even");
        assert!(!row.get(idx(1)), "211 is prime");
        assert!(row.get(idx(0)), "210 is even");
    }

    #[test]
    fn window_never_strikes_a_prime_itself() {
        // Window [2, 50) sieved with primes to 50: survivors must be exactly
        // the primes below 50.
        let primes: Vec<u64> = numtheory::small_primes(50);
        let bits = sieve_window_with(&primes, &BigUint::from(2u32), 48);
        let survivors: Vec<u64> = bits.iter_unmarked().map(|i| 2 + i as u64).collect();
        assert_eq!(survivors, primes);
    }

    #[test]
    fn single_row_matches_combined_row() {
        let c = cfg(97, "7#", 1, 30);
        let params = SieveParams::new(250, 20_000, 2).unwrap();
        let strict = SieveOptions {
            strict_oracle: true,
            ..SieveOptions::default()
        };
        let (grid, _) = sieve::sieve(&c, &params, &strict).unwrap();
        for (row, &m) in grid.m_values().iter().enumerate() {
            let oracle = sieve_single_interval(&c, m, &params);
            assert_eq!(
                grid.row_words(row),
                oracle.words(),
                "row m={m} differs from oracle"
            );
        }
    }

    #[test]
    fn sieve_all_equals_combined_grid() {
        let c = cfg(53, "7#", 2, 80);
        let params = SieveParams::new(150, 30_000, 1).unwrap();
        let strict = SieveOptions {
            strict_oracle: true,
            ..SieveOptions::default()
        };
        let combined = sieve::sieve(&c, &params, &strict).unwrap().0;
        let traditional = sieve_all(&c, &params).unwrap();
        assert_eq!(combined, traditional);
    }

    #[test]
    fn m_equals_one_grid_is_the_single_interval() {
        let c = cfg(97, "1", 1, 1);
        let params = SieveParams::new(100, 5_000, 1).unwrap();
        let grid = sieve_all(&c, &params).unwrap();
        assert_eq!(grid.rows(), 1);
        let row = sieve_single_interval(&c, 1, &params);
        assert_eq!(grid.row_words(0), row.words());
    }
}
