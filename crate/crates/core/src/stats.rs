//! Verification instrumentation: the prime-division census, the
//! factor-count law, survivor-density comparisons, and CSV emission for
//! plots. Everything here is exact counting or a comparison of a measured
//! quantity against its Mertens-theorem prediction.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::advisor;
use crate::error::Result;
use crate::modsolver::{self, SolveInstance};
use crate::numtheory::{self, PrimorialConfig, Reciprocal};
use crate::sieve::{CompositeGrid, SieveParams, SieveStats};

/// Census result for one prime range `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CensusRange {
    pub lo: u64,
    pub hi: u64,
    pub total_primes: u64,
    pub dividing: u64,
}

impl CensusRange {
    pub fn fraction(&self) -> f64 {
        self.dividing as f64 / self.total_primes as f64
    }
}

/// For each range `(lo, hi]`, count the primes that divide at least one
/// value in `[m*K - X, m*K + X]`.
///
/// Primes up to S are checked by direct residue stepping; primes above S go
/// through the same solver machinery the large phase uses, which doubles as
/// a self-test of that path.
pub fn prime_division_census(
    cfg: &PrimorialConfig,
    m: u64,
    half_width: u64,
    ranges: &[(u64, u64)],
) -> Result<Vec<CensusRange>> {
    let s = 2 * half_width + 1;
    let two_x = 2 * half_width;
    ranges
        .iter()
        .map(|&(lo, hi)| {
            let mut chunks = Vec::new();
            let mut a = lo.max(1) + 1;
            while a <= hi {
                let b = a.saturating_add((1 << 22) - 1).min(hi);
                chunks.push((a, b));
                a = b + 1;
            }
            let partials: Vec<Result<(u64, u64)>> = chunks
                .par_iter()
                .map(|&(a, b)| {
                    let mut total = 0u64;
                    let mut dividing = 0u64;
                    for p in numtheory::primes_in(a, b) {
                        total += 1;
                        let recip = Reciprocal::new(p);
                        let k = cfg.k_mod_with(&recip);
                        let divides = if k == 0 {
                            true // p | K, so p | m*K + 0
                        } else {
                            let t0 = {
                                let base = recip.mul_mod(m % p, k);
                                let sum = base + half_width % p;
                                if sum >= p {
                                    sum - p
                                } else {
                                    sum
                                }
                            };
                            if p > s {
                                let inst = SolveInstance {
                                    modulus: p,
                                    multiplier: k,
                                    lo: 0,
                                    hi: two_x,
                                };
                                modsolver::delta_into_range(&inst, t0)? == 0
                            } else {
                                // window length >= p: some multiple always lands
                                t0 <= two_x
                            }
                        };
                        if divides {
                            dividing += 1;
                        }
                    }
                    Ok((total, dividing))
                })
                .collect();
            let mut total = 0;
            let mut dividing = 0;
            for part in partials {
                let (t, d) = part?;
                total += t;
                dividing += d;
            }
            Ok(CensusRange {
                lo,
                hi,
                total_primes: total,
                dividing,
            })
        })
        .collect()
}

/// Predicted number of large-phase solver calls:
/// `M * S * (lnln(p_limit) - lnln(cutoff)) + (pi(p_limit) - pi(cutoff))`.
pub fn factor_count_prediction(
    m_count: u64,
    interval_len: u64,
    p_limit: u64,
    cutoff: u64,
    large_prime_count: u64,
) -> f64 {
    let lnln = |x: u64| (x as f64).ln().ln();
    m_count as f64 * interval_len as f64 * (lnln(p_limit) - lnln(cutoff))
        + large_prime_count as f64
}

/// Relative error of the observed solver-call count against the prediction.
pub fn factor_count_check(stats: &SieveStats, cfg: &PrimorialConfig, params: &SieveParams) -> f64 {
    let predicted = factor_count_prediction(
        cfg.m_count,
        params.interval_len(),
        params.p_limit,
        params.small_prime_cutoff(),
        stats.large_prime_count,
    );
    (stats.solver_calls as f64 - predicted).abs() / predicted
}

/// Measured unsieved fraction of a grid.
pub fn survivor_fraction(grid: &CompositeGrid) -> f64 {
    grid.survivor_fraction()
}

/// One row of the density table: measured survivor fraction against the
/// Mertens-theorem value.
#[derive(Clone, Copy, Debug)]
pub struct DensityRow {
    pub p_limit: u64,
    pub theoretical: f64,
    pub measured: f64,
    pub rel_err: f64,
}

pub fn density_comparison(grid: &CompositeGrid, p_limit: u64) -> DensityRow {
    let measured = grid.survivor_fraction();
    let theoretical = advisor::unsieved_fraction(p_limit);
    DensityRow {
        p_limit,
        theoretical,
        measured,
        rel_err: (measured - theoretical).abs() / theoretical,
    }
}

/// One measured point of the combined-vs-traditional wall-time comparison.
#[derive(Clone, Copy, Debug)]
pub struct SpeedupPoint {
    pub coprime_rows: u64,
    pub combined_secs: f64,
    pub baseline_secs: f64,
    pub speedup: f64,
}

fn write_preamble<W: Write>(w: &mut W, kind: &str, config_echo: &str) -> io::Result<()> {
    writeln!(w, "# gapsieve {kind} report")?;
    for line in config_echo.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Density table CSV: `p_limit,theoretical,measured,rel_err`.
pub fn write_density_csv<W: Write>(
    w: &mut W,
    config_echo: &str,
    rows: &[DensityRow],
) -> io::Result<()> {
    write_preamble(w, "density", config_echo)?;
    writeln!(w, "p_limit,theoretical,measured,rel_err")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            r.p_limit, r.theoretical, r.measured, r.rel_err
        )?;
    }
    Ok(())
}

/// Census CSV: `range_lo,range_hi,primes,dividing,fraction`.
pub fn write_census_csv<W: Write>(
    w: &mut W,
    config_echo: &str,
    rows: &[CensusRange],
) -> io::Result<()> {
    write_preamble(w, "census", config_echo)?;
    writeln!(w, "range_lo,range_hi,primes,dividing,fraction")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.6}",
            r.lo,
            r.hi,
            r.total_primes,
            r.dividing,
            r.fraction()
        )?;
    }
    Ok(())
}

/// Speedup curve CSV: `m_c,combined_secs,baseline_secs,speedup`.
pub fn write_speedup_csv<W: Write>(
    w: &mut W,
    config_echo: &str,
    rows: &[SpeedupPoint],
) -> io::Result<()> {
    write_preamble(w, "speedup", config_echo)?;
    writeln!(w, "m_c,combined_secs,baseline_secs,speedup")?;
    for r in rows {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.3}",
            r.coprime_rows, r.combined_secs, r.baseline_secs, r.speedup
        )?;
    }
    Ok(())
}
