//! The sieved-candidate file format and per-row result lines.
//!
//! A candidate file is plain text so runs can be diffed and golden-tested:
//!
//! ```text
//! # gapsieve candidates v0.1.0
//! # p=97 d=7# mstart=1 mcount=500 x=2000 limit=1000000 cmult=50 strict=false
//! 1 : -3 +4 | -5 -11 -17 | 2 8 14 20
//! ...
//! ```
//!
//! One record per coprime `m`: the survivor counts per side, the low-side
//! survivors (negative offsets, ascending |o|), and the high-side survivors
//! (ascending; a surviving offset 0 leads the high list). Parsing a written
//! file reproduces the survivor sets exactly.
//!
//! Result lines from gap testing are one row each,
//! `m prev next gap merit tests status`, so output re-sorts deterministically
//! by `m` and interrupted runs can resume by skipping already-reported rows.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::gapfinder::RowOutcome;
use crate::numtheory::{DivisorSpec, PrimorialConfig};
use crate::sieve::{Bitmap, CompositeGrid, SieveParams};

/// Config echo carried at the top of every candidate file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateHeader {
    pub top_prime: u64,
    /// Canonical factored divisor spelling (e.g. `13#*8009`).
    pub divisor: String,
    pub m_start: u64,
    pub m_count: u64,
    pub half_width: u64,
    pub p_limit: u64,
    pub small_mult: u64,
    pub strict_oracle: bool,
    pub version: String,
}

impl CandidateHeader {
    pub fn new(
        cfg: &PrimorialConfig,
        params: &SieveParams,
        strict_oracle: bool,
        version: &str,
    ) -> Self {
        CandidateHeader {
            top_prime: cfg.top_prime,
            divisor: cfg.divisor.to_string(),
            m_start: cfg.m_start,
            m_count: cfg.m_count,
            half_width: params.half_width,
            p_limit: params.p_limit,
            small_mult: params.small_mult,
            strict_oracle,
            version: version.to_string(),
        }
    }

    /// Rebuild the sieve configuration this file was produced with.
    pub fn to_config(&self) -> Result<(PrimorialConfig, SieveParams)> {
        let d = DivisorSpec::parse(&self.divisor)?;
        let cfg = PrimorialConfig::new(self.top_prime, d, self.m_start, self.m_count)?;
        let params = SieveParams::new(self.half_width, self.p_limit, self.small_mult)?;
        Ok((cfg, params))
    }
}

/// Survivors of one row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateRecord {
    pub m: u64,
    /// Negative offsets, ascending |o|.
    pub low: Vec<i64>,
    /// Offsets >= 0, ascending.
    pub high: Vec<i64>,
}

impl CandidateRecord {
    pub fn from_grid_row(grid: &CompositeGrid, row: usize) -> Self {
        let mut low = Vec::new();
        let mut high = Vec::new();
        for idx in grid.row_bitmap(row).iter_unmarked() {
            let o = grid.index_to_offset(idx);
            if o < 0 {
                low.push(o);
            } else {
                high.push(o);
            }
        }
        low.reverse(); // ascending |o|
        CandidateRecord {
            m: grid.m_values()[row],
            low,
            high,
        }
    }

    /// Reconstruct the row bitmap: everything marked except the survivors.
    pub fn to_bitmap(&self, half_width: u64) -> Bitmap {
        let s = (2 * half_width + 1) as usize;
        let mut bits = Bitmap::all_marked(s);
        for &o in self.low.iter().chain(self.high.iter()) {
            let idx = o + half_width as i64;
            assert!(idx >= 0 && (idx as usize) < s, "offset {o} out of range");
            bits.clear(idx as usize);
        }
        bits
    }
}

fn format_record(rec: &CandidateRecord) -> String {
    let join = |v: &[i64]| {
        v.iter()
            .map(|o| o.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "{} : -{} +{} | {} | {}",
        rec.m,
        rec.low.len(),
        rec.high.len(),
        join(&rec.low),
        join(&rec.high)
    )
    .trim_end()
    .to_string()
}

/// Write a full candidate file: header plus one record per coprime row.
pub fn write_candidates<W: Write>(
    w: &mut W,
    header: &CandidateHeader,
    grid: &CompositeGrid,
) -> std::io::Result<()> {
    writeln!(w, "# gapsieve candidates v{}", header.version)?;
    writeln!(
        w,
        "# p={} d={} mstart={} mcount={} x={} limit={} cmult={} strict={}",
        header.top_prime,
        header.divisor,
        header.m_start,
        header.m_count,
        header.half_width,
        header.p_limit,
        header.small_mult,
        header.strict_oracle
    )?;
    for row in 0..grid.rows() {
        writeln!(w, "{}", format_record(&CandidateRecord::from_grid_row(grid, row)))?;
    }
    Ok(())
}

fn parse_header_fields(line: &str) -> Result<CandidateHeader> {
    let mut h = CandidateHeader {
        top_prime: 0,
        divisor: String::new(),
        m_start: 0,
        m_count: 0,
        half_width: 0,
        p_limit: 0,
        small_mult: SieveParams::DEFAULT_SMALL_MULT,
        strict_oracle: false,
        version: String::new(),
    };
    let body = line.trim_start_matches('#').trim();
    for pair in body.split_whitespace() {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field `{pair}`")))?;
        let int = || -> Result<u64> {
            value
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer in header: `{pair}`")))
        };
        match key {
            "p" => h.top_prime = int()?,
            "d" => h.divisor = value.to_string(),
            "mstart" => h.m_start = int()?,
            "mcount" => h.m_count = int()?,
            "x" => h.half_width = int()?,
            "limit" => h.p_limit = int()?,
            "cmult" => h.small_mult = int()?,
            "strict" => {
                h.strict_oracle = value
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad bool in header: `{pair}`")))?
            }
            _ => {} // unknown fields are fine
        }
    }
    if h.top_prime == 0 || h.m_count == 0 || h.half_width == 0 || h.p_limit == 0 {
        return Err(Error::Parse("incomplete candidate header".to_string()));
    }
    Ok(h)
}

fn parse_record(line: &str) -> Result<CandidateRecord> {
    let bad = || Error::Parse(format!("bad candidate record `{line}`"));
    let mut parts = line.splitn(3, '|');
    let head = parts.next().ok_or_else(bad)?.trim();
    let low_part = parts.next().ok_or_else(bad)?.trim();
    let high_part = parts.next().ok_or_else(bad)?.trim();

    let mut head_it = head.split_whitespace();
    let m: u64 = head_it
        .next()
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    if head_it.next() != Some(":") {
        return Err(bad());
    }
    let n_low: usize = head_it
        .next()
        .and_then(|t| t.strip_prefix('-'))
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;
    let n_high: usize = head_it
        .next()
        .and_then(|t| t.strip_prefix('+'))
        .ok_or_else(bad)?
        .parse()
        .map_err(|_| bad())?;

    let parse_list = |s: &str| -> Result<Vec<i64>> {
        s.split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| bad()))
            .collect()
    };
    let low = parse_list(low_part)?;
    let high = parse_list(high_part)?;
    if low.len() != n_low || high.len() != n_high {
        return Err(Error::Parse(format!(
            "record count mismatch for m={m}: -{n_low} +{n_high} vs {} and {}",
            low.len(),
            high.len()
        )));
    }
    Ok(CandidateRecord { m, low, high })
}

/// Read a candidate file back.
pub fn read_candidates<R: BufRead>(r: R) -> Result<(CandidateHeader, Vec<CandidateRecord>)> {
    let mut header: Option<CandidateHeader> = None;
    let mut records = Vec::new();
    let mut saw_magic = false;
    for line in r.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if rest.trim_start().starts_with("gapsieve candidates") {
                saw_magic = true;
            } else if rest.contains('=') && header.is_none() {
                header = Some(parse_header_fields(trimmed)?);
            }
            continue;
        }
        records.push(parse_record(trimmed)?);
    }
    if !saw_magic {
        return Err(Error::Parse(
            "not a gapsieve candidate file (missing magic comment)".to_string(),
        ));
    }
    let header = header.ok_or_else(|| Error::Parse("missing candidate header".to_string()))?;
    Ok((header, records))
}

/// One line per finished row: `m prev next gap merit tests status`.
/// Abandoned rows keep the column count with `-` placeholders.
pub fn format_row_outcome(outcome: &RowOutcome) -> String {
    match outcome {
        RowOutcome::Gap(g) => format!(
            "{} {} {} {} {:.3} {} {}",
            g.m,
            g.prev_offset,
            g.next_offset,
            g.gap,
            g.merit,
            g.prp_tests,
            if g.extended { "extended" } else { "ok" }
        ),
        RowOutcome::BelowMeritTarget {
            m,
            prev_offset,
            prp_tests,
        } => format!("{m} {prev_offset} - - - {prp_tests} abandoned"),
    }
}

/// The row id of a result line; `None` for comments and blanks. Resume logic
/// treats any listed row as done.
pub fn parse_result_row_m(line: &str) -> Option<u64> {
    let t = line.trim();
    if t.is_empty() || t.starts_with('#') {
        return None;
    }
    t.split_whitespace().next()?.parse().ok()
}
