//! Sieve-limit and interval-size guidance, plus the operation-count cost
//! model comparing the combined sieve against the traditional one.
//!
//! The estimates all come from Mertens' theorems: the fraction of integers
//! with no factor below `P` is about `1/(ln(P) e^gamma)`, so the expected
//! number of primality tests to find a prime near `N` after sieving to
//! `P_limit` is `ln(N) / (ln(P_limit) e^gamma)`. The derivative of that
//! expectation prices one more second of sieving in avoided tests.

use crate::error::{Error, Result};
use crate::numtheory::{self, PrimorialConfig};
use crate::sieve::{coprime_count, SieveParams};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Meissel–Mertens constant.
pub const MEISSEL_MERTENS: f64 = 0.261_497_212_847_642_77;

/// Model constants. The two mathematical constants are fixed; the two cost
/// coefficients are host-dependent defaults meant to be overridden from
/// benchmark measurements.
#[derive(Clone, Copy, Debug)]
pub struct AdvisorConstants {
    pub euler_gamma: f64,
    pub meissel_mertens: f64,
    /// Cycles to solve one minimal-solution instance, per log2(P/S).
    pub c_eq: f64,
    /// Cycles per bit for a big-integer modulo.
    pub c_mod: f64,
}

impl Default for AdvisorConstants {
    fn default() -> Self {
        AdvisorConstants {
            euler_gamma: EULER_GAMMA,
            meissel_mertens: MEISSEL_MERTENS,
            c_eq: 30.0,
            c_mod: 1.0 / 16.0,
        }
    }
}

/// Fraction of integers with no prime factor `<= p_limit`:
/// `1 / (ln(p_limit) * e^gamma)`.
pub fn unsieved_fraction(p_limit: u64) -> f64 {
    debug_assert!(p_limit >= 3);
    1.0 / ((p_limit as f64).ln() * EULER_GAMMA.exp())
}

/// Expected primality tests to find one prime near `N` (per side) after
/// removing everything with a factor `<= p_limit`.
pub fn expected_prp_tests(ln_n: f64, p_limit: u64) -> f64 {
    debug_assert!(ln_n > 0.0);
    ln_n / ((p_limit as f64).ln() * EULER_GAMMA.exp())
}

/// Closed-form derivative of [`expected_prp_tests`] with respect to the
/// sieve limit: `-ln_n / (e^gamma * P * ln(P)^2)`.
pub fn expected_prp_tests_derivative(ln_n: f64, p_limit: u64) -> f64 {
    let p = p_limit as f64;
    -ln_n / (EULER_GAMMA.exp() * p * p.ln() * p.ln())
}

#[derive(Clone, Copy, Debug)]
pub struct StopAdvice {
    /// Primality tests avoided per additional second of sieving, across all
    /// M_c rows.
    pub marginal_tests_per_sec: f64,
    /// True when a second of sieving no longer saves a second of testing.
    pub stop: bool,
}

/// Continue-or-stop advice at the current sieve position.
///
/// `sieve_rate` is primes processed per second, `prp_seconds` the measured
/// cost of one primality test.
pub fn stop_advice(
    ln_n: f64,
    p_current: u64,
    sieve_rate: f64,
    prp_seconds: f64,
    m_c: u64,
) -> Result<StopAdvice> {
    if !(sieve_rate > 0.0) || !(prp_seconds > 0.0) {
        return Err(Error::InvalidConfig(
            "stop advice needs positive rates".to_string(),
        ));
    }
    let marginal =
        m_c as f64 * expected_prp_tests_derivative(ln_n, p_current).abs() * sieve_rate;
    Ok(StopAdvice {
        marginal_tests_per_sec: marginal,
        stop: marginal * prp_seconds < 1.0,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct IntervalCheck {
    /// Probability that one side of an interval contains no prime, from the
    /// observed survivor count: `(1 - 1/E)^survivors`.
    pub overflow_probability: f64,
    /// Set when the overflow probability exceeds 0.5%.
    pub warn_overflow: bool,
    /// Recommended band for X: `[6 ln N, 10 ln N]`.
    pub band: (f64, f64),
    pub x_in_band: bool,
}

/// Sanity-check the interval half-width against a small test sieve.
/// `survivors_per_side` is the observed survivor count on one side of the
/// test rows; zero survivors warns unconditionally.
pub fn interval_size_check(
    ln_n: f64,
    half_width: u64,
    p_limit: u64,
    survivors_per_side: u64,
) -> IntervalCheck {
    let e = expected_prp_tests(ln_n, p_limit);
    let overflow_probability = if survivors_per_side == 0 {
        1.0
    } else {
        (1.0 - 1.0 / e).powi(survivors_per_side as i32)
    };
    let band = (6.0 * ln_n, 10.0 * ln_n);
    IntervalCheck {
        overflow_probability,
        warn_overflow: overflow_probability > 0.005,
        band,
        x_in_band: (half_width as f64) >= band.0 && (half_width as f64) <= band.1,
    }
}

/// Prime-count value tagged with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimeCount {
    Exact(u64),
    /// Logarithmic-integral approximation; reports should carry an
    /// "(approx)" marker.
    Approx(u64),
}

impl PrimeCount {
    pub fn value(&self) -> u64 {
        match *self {
            PrimeCount::Exact(v) | PrimeCount::Approx(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PrimeCount::Exact(_))
    }
}

/// Known prime counts at round values (and at 4e9, which turns up in
/// density tables).
const PI_TABLE: &[(u64, u64)] = &[
    (10, 4),
    (100, 25),
    (1_000, 168),
    (10_000, 1_229),
    (100_000, 9_592),
    (1_000_000, 78_498),
    (10_000_000, 664_579),
    (100_000_000, 5_761_455),
    (1_000_000_000, 50_847_534),
    (4_000_000_000, 189_961_812),
    (10_000_000_000, 455_052_511),
    (100_000_000_000, 4_118_054_813),
    (1_000_000_000_000, 37_607_912_018),
    (10_000_000_000_000, 346_065_536_839),
];

/// Sieve-count threshold for exact answers off the table.
pub const PI_EXACT_SIEVE_LIMIT: u64 = 200_000_000;

/// `pi(x)`: table hit or direct sieve count when affordable, logarithmic
/// integral otherwise.
pub fn prime_pi(x: u64) -> PrimeCount {
    if let Ok(i) = PI_TABLE.binary_search_by_key(&x, |&(v, _)| v) {
        return PrimeCount::Exact(PI_TABLE[i].1);
    }
    if x <= PI_EXACT_SIEVE_LIMIT {
        return PrimeCount::Exact(numtheory::count_primes(x));
    }
    PrimeCount::Approx(logarithmic_integral(x as f64).round() as u64)
}

/// li(x) by its series: `gamma + ln ln x + sum (ln x)^k / (k * k!)`.
pub fn logarithmic_integral(x: f64) -> f64 {
    debug_assert!(x >= 2.0);
    let lnx = x.ln();
    let mut sum = EULER_GAMMA + lnx.ln();
    let mut term = 1.0f64; // (ln x)^k / k!
    for k in 1..200 {
        term *= lnx / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib < sum.abs() * 1e-14 {
            break;
        }
    }
    sum
}

/// Operation counts for one configuration, in comparable "cycle" units.
#[derive(Clone, Copy, Debug)]
pub struct CostBreakdown {
    /// `K mod p` for every prime up to the limit (paid once).
    pub k_mod_p_term: f64,
    /// Marking off all multiples across the coprime rows.
    pub marking_term: f64,
    /// Per-row word-sized `m*K mod p` for the small primes.
    pub small_prime_term: f64,
    /// Minimal-solution calls for the large primes.
    pub solver_term: f64,
    pub total_combined: f64,
    pub total_traditional: f64,
    pub speedup: f64,
    /// False when a prime count came from the li approximation.
    pub pi_exact: bool,
}

/// Raw inputs for [`cost_model_from`], decoupled from live configs so
/// published parameter sets can be priced directly.
#[derive(Clone, Copy, Debug)]
pub struct CostInputs {
    pub m_count: u64,
    pub coprime_rows: u64,
    pub interval_len: u64,
    pub cutoff: u64,
    pub p_limit: u64,
    pub log2_k: f64,
}

impl CostInputs {
    pub fn from_config(cfg: &PrimorialConfig, params: &SieveParams) -> Self {
        CostInputs {
            m_count: cfg.m_count,
            coprime_rows: coprime_count(cfg.m_start, cfg.m_count, &cfg.divisor),
            interval_len: params.interval_len(),
            cutoff: params.small_prime_cutoff(),
            p_limit: params.p_limit,
            log2_k: cfg.ln_k() / std::f64::consts::LN_2,
        }
    }
}

/// Price a configuration with the full cost display:
///
/// combined   = |P| log2(K) c_mod
///            + M_c S (lnln P + M_m)
///            + M_c |P_small|
///            + (M S (lnln P - lnln cutoff) + |P_large|) c_eq log2(P/S)
///
/// traditional = M_c (|P| log2(K) c_mod + S (lnln P + M_m))
pub fn cost_model_from(inputs: &CostInputs, constants: &AdvisorConstants) -> CostBreakdown {
    let lnln = |x: u64| (x as f64).ln().ln();
    let pi_limit = prime_pi(inputs.p_limit);
    let pi_small = prime_pi(inputs.cutoff);
    let p_all = pi_limit.value() as f64;
    let p_small = pi_small.value() as f64;
    let p_large = p_all - p_small;
    let m = inputs.m_count as f64;
    let m_c = inputs.coprime_rows as f64;
    let s = inputs.interval_len as f64;

    let k_mod_p_term = p_all * inputs.log2_k * constants.c_mod;
    let marking_term = m_c * s * (lnln(inputs.p_limit) + constants.meissel_mertens);
    let small_prime_term = m_c * p_small;
    let solver_calls = m * s * (lnln(inputs.p_limit) - lnln(inputs.cutoff)) + p_large;
    let solver_term =
        solver_calls * constants.c_eq * (inputs.p_limit as f64 / s).log2();

    let total_combined = k_mod_p_term + marking_term + small_prime_term + solver_term;
    let total_traditional = m_c
        * (p_all * inputs.log2_k * constants.c_mod
            + s * (lnln(inputs.p_limit) + constants.meissel_mertens));
    CostBreakdown {
        k_mod_p_term,
        marking_term,
        small_prime_term,
        solver_term,
        total_combined,
        total_traditional,
        speedup: total_traditional / total_combined,
        pi_exact: pi_limit.is_exact() && pi_small.is_exact(),
    }
}

/// [`cost_model_from`] for a live configuration.
pub fn cost_model(
    cfg: &PrimorialConfig,
    params: &SieveParams,
    constants: &AdvisorConstants,
) -> CostBreakdown {
    cost_model_from(&CostInputs::from_config(cfg, params), constants)
}
