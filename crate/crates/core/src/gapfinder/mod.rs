//! Find the probable primes surrounding `N = m*K` and report the gap.
//!
//! A sieved row hands over its survivor bitmap; the scan walks outward from
//! the center testing survivors (low side first, then high), extending past
//! `[-X, X]` with freshly sieved windows of width X on the rare rows whose
//! surrounding prime lies outside the interval. Rows are independent work
//! items; callers parallelize across rows.

mod bpsw;

pub use bpsw::{is_probable_prime, is_probable_prime_u64};

use num_bigint::BigUint;

use crate::baseline;
use crate::error::{Error, Result};
use crate::numtheory::{ln_big, PrimorialConfig};
use crate::sieve::{Bitmap, SieveParams};

/// Gap / ln(endpoint): the size of a gap relative to the average gap nearby.
#[inline]
pub fn merit(gap: u64, ln_n: f64) -> f64 {
    gap as f64 / ln_n
}

#[derive(Clone, Copy, Debug)]
pub struct GapSearchOptions {
    /// Abandon a row after the low side when even `prev + X` cannot reach
    /// this merit (skips the expensive high-side testing on hopeless rows).
    pub min_merit: Option<f64>,
    /// Hard cap on |offset| per side, as a multiple of ln N. Exceeding it is
    /// reported as an error; with sane interval sizing it is unreachable.
    pub cap_mult: f64,
}

impl Default for GapSearchOptions {
    fn default() -> Self {
        GapSearchOptions {
            min_merit: None,
            cap_mult: 100.0,
        }
    }
}

/// Surrounding primes of one center value.
#[derive(Clone, Debug, PartialEq)]
pub struct GapResult {
    /// Row multiplier (0 for direct-mode searches around a literal n).
    pub m: u64,
    /// Offset of the previous probable prime, `<= 0` (0 when the center
    /// itself is a probable prime).
    pub prev_offset: i64,
    /// Offset of the next probable prime, `> prev_offset`.
    pub next_offset: i64,
    pub gap: u64,
    /// gap / ln(N + prev_offset), quoted to 3 decimals in reports.
    pub merit: f64,
    /// Primality tests spent on this row (both sides).
    pub prp_tests: u64,
    /// True when either side left the sieved interval.
    pub extended: bool,
}

/// Per-row outcome: a finished gap, or an early abandon under `min_merit`.
#[derive(Clone, Debug, PartialEq)]
pub enum RowOutcome {
    Gap(GapResult),
    BelowMeritTarget {
        m: u64,
        prev_offset: i64,
        prp_tests: u64,
    },
}

fn value_at(n: &BigUint, magnitude: u64, negative: bool) -> BigUint {
    if negative {
        n - magnitude
    } else {
        n + magnitude
    }
}

/// Walk one side outward from the center. Returns `(offset, tests, extended)`
/// for the first probable prime. `negative` selects the low side (which
/// includes offset 0).
fn scan_outward(
    n: &BigUint,
    row: &Bitmap,
    x: u64,
    p_limit: u64,
    cap: u64,
    m: u64,
    negative: bool,
) -> Result<(i64, u64, bool)> {
    let side = if negative { "low" } else { "high" };
    let cap_err = || Error::SearchCapExceeded { m, side, cap };
    let signed = |a: u64| if negative { -(a as i64) } else { a as i64 };
    let mut tests = 0u64;

    let first = if negative { 0 } else { 1 };
    for a in first..=x {
        let idx = if negative { x - a } else { x + a } as usize;
        if row.get(idx) {
            continue;
        }
        if a > cap {
            return Err(cap_err());
        }
        tests += 1;
        if is_probable_prime(&value_at(n, a, negative)) {
            return Ok((signed(a), tests, false));
        }
    }

    // The interval is exhausted: sieve fresh windows of width X further out.
    let width = x.max(1);
    for w in 1u64.. {
        let lo_a = x + (w - 1) * width + 1;
        let hi_a = x + w * width;
        if lo_a > cap {
            return Err(cap_err());
        }
        if negative && BigUint::from(hi_a + 1) >= *n {
            return Err(cap_err()); // cannot extend below 1
        }
        let window_start = if negative {
            n - hi_a
        } else {
            n + lo_a
        };
        let bits = baseline::sieve_window(&window_start, width, p_limit);
        for a in lo_a..=hi_a {
            let i = if negative { hi_a - a } else { a - lo_a } as usize;
            if bits.get(i) {
                continue;
            }
            if a > cap {
                return Err(cap_err());
            }
            tests += 1;
            if is_probable_prime(&value_at(n, a, negative)) {
                return Ok((signed(a), tests, true));
            }
        }
    }
    unreachable!("side scan loops until found or capped")
}

/// Find the surrounding probable primes of row `m` using its sieved bitmap.
pub fn find_surrounding(
    cfg: &PrimorialConfig,
    m: u64,
    row: &Bitmap,
    params: &SieveParams,
    opts: &GapSearchOptions,
) -> Result<RowOutcome> {
    if row.len() as u64 != params.interval_len() {
        return Err(Error::InvalidConfig(format!(
            "row bitmap has {} bits, interval needs {}",
            row.len(),
            params.interval_len()
        )));
    }
    let n = cfg.n_value(m);
    if n <= BigUint::from(params.half_width + 1) {
        return Err(Error::InvalidConfig("interval underflows below 1".into()));
    }
    let ln_n = cfg.ln_n(m);
    let cap = (opts.cap_mult * ln_n).ceil().max(2.0) as u64;
    let x = params.half_width;

    let (prev_offset, low_tests, low_ext) =
        scan_outward(&n, row, x, params.p_limit, cap, m, true)?;

    if let Some(target) = opts.min_merit {
        // Without extension the high side tops out at +X.
        let reachable = (prev_offset.unsigned_abs() + x) as f64;
        if reachable < target * ln_n {
            return Ok(RowOutcome::BelowMeritTarget {
                m,
                prev_offset,
                prp_tests: low_tests,
            });
        }
    }

    let (next_offset, high_tests, high_ext) =
        scan_outward(&n, row, x, params.p_limit, cap, m, false)?;

    let gap = (next_offset - prev_offset) as u64;
    let prev_value = &n - prev_offset.unsigned_abs();
    Ok(RowOutcome::Gap(GapResult {
        m,
        prev_offset,
        next_offset,
        gap,
        merit: merit(gap, ln_big(&prev_value)),
        prp_tests: low_tests + high_tests,
        extended: low_ext || high_ext,
    }))
}

/// Direct mode: surrounding probable primes of a literal `n >= 3`, no sieve.
/// Every candidate is tested (cheap trial division screens the bulk).
pub fn find_surrounding_direct(n: &BigUint) -> Result<GapResult> {
    if *n < BigUint::from(3u32) {
        return Err(Error::InvalidConfig(
            "direct search needs n >= 3".to_string(),
        ));
    }
    let ln_n = ln_big(n);
    let cap = (100.0 * ln_n).ceil().max(16.0) as u64;
    let mut tests = 0u64;

    let mut prev_offset = None;
    for a in 0..=cap {
        if BigUint::from(a + 1) >= *n {
            break;
        }
        tests += 1;
        if is_probable_prime(&(n - a)) {
            prev_offset = Some(-(a as i64));
            break;
        }
    }
    let prev_offset = prev_offset.ok_or(Error::SearchCapExceeded {
        m: 0,
        side: "low",
        cap,
    })?;

    let mut next_offset = None;
    for a in 1..=cap {
        tests += 1;
        if is_probable_prime(&(n + a)) {
            next_offset = Some(a as i64);
            break;
        }
    }
    let next_offset = next_offset.ok_or(Error::SearchCapExceeded {
        m: 0,
        side: "high",
        cap,
    })?;

    let gap = (next_offset - prev_offset) as u64;
    let prev_value = n - prev_offset.unsigned_abs();
    Ok(GapResult {
        m: 0,
        prev_offset,
        next_offset,
        gap,
        merit: merit(gap, ln_big(&prev_value)),
        prp_tests: tests,
        extended: false,
    })
}
