//! Normalized upload/download latency: achievable values, lower bounds,
//! gaps and tradeoff curves, all in exact rational arithmetic.

use std::fmt::Write as _;

use serde::Serialize;

use crate::network::Mode;
use crate::rational::{self, int, q, Rational};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Achievable,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatencyPair {
    #[serde(with = "rational")]
    pub r: Rational,
    #[serde(with = "rational")]
    pub nult: Rational,
    #[serde(with = "rational")]
    pub ndlt: Rational,
    pub kind: BoundKind,
    pub mode: Mode,
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::param("M", "≥ 2"));
    }
    if n < 2 {
        return Err(Error::param("N", "≥ 2"));
    }
    Ok(())
}

fn check_binary(m: usize, n: usize, r: usize) -> Result<()> {
    check_dims(m, n)?;
    if !n.is_multiple_of(m) {
        return Err(Error::NotDivisible {
            what: "N / M",
            numerator: n as i64,
            denominator: m as i64,
        });
    }
    if r < 1 || r > m {
        return Err(Error::LoadOutOfRange {
            r: r.to_string(),
            max: m,
        });
    }
    Ok(())
}

fn check_real_load(m: usize, n: usize, r: &Rational) -> Result<()> {
    check_dims(m, n)?;
    if *r < int(1) || *r > int(m as i64) {
        return Err(Error::LoadOutOfRange {
            r: rational::format(r),
            max: m,
        });
    }
    Ok(())
}

fn mi(v: usize) -> Rational {
    int(v as i64)
}

/// `min{1 + N r / M, N}` for integer `r` and `M | N`.
pub fn nult_binary_achievable(m: usize, n: usize, r: usize) -> Result<Rational> {
    check_binary(m, n, r)?;
    Ok(rational::min(int(1) + q((n * r) as i64, m as i64), mi(n)))
}

/// `min{1 + N / M, N / r}` for integer `r` and `M | N`.
pub fn ndlt_binary_achievable(m: usize, n: usize, r: usize) -> Result<Rational> {
    check_binary(m, n, r)?;
    Ok(rational::min(
        int(1) + q(n as i64, m as i64),
        q(n as i64, r as i64),
    ))
}

/// `min{1 + N r / M, N}`; evaluated for any `r`, including values where
/// `N r` is not an integer.
pub fn nult_binary_lower(m: usize, n: usize, r: Rational) -> Rational {
    rational::min(int(1) + mi(n) * r / mi(m), mi(n))
}

/// `N / min{M, N}`, shared by both offloading modes.
pub fn ndlt_lower(m: usize, n: usize) -> Rational {
    q(n as i64, m.min(n) as i64)
}

fn nult_partial_integer(m: usize, n: usize, r: i64) -> Rational {
    q((n as i64 - 1) * r, m as i64) + int(1)
}

fn ndlt_partial_integer(m: usize, n: usize, r: i64) -> Rational {
    rational::max(q(n as i64 - r, m as i64) + int(1), int(1))
}

/// Time-shares between the neighbouring integer loads when `r` is fractional.
fn time_share(r: &Rational, at: impl Fn(i64) -> Rational) -> Rational {
    let lo = rational::floor(r);
    let hi = rational::ceil(r);
    if lo == hi {
        return at(lo);
    }
    let lambda = r - int(lo);
    lambda * at(hi) + (int(1) - lambda) * at(lo)
}

/// `(N - 1) r / M + 1`, time-shared for fractional `r`.
pub fn nult_partial_achievable(m: usize, n: usize, r: Rational) -> Result<Rational> {
    check_real_load(m, n, &r)?;
    Ok(time_share(&r, |k| nult_partial_integer(m, n, k)))
}

/// `max{(N - r) / M + 1, 1}`, time-shared for fractional `r`.
pub fn ndlt_partial_achievable(m: usize, n: usize, r: Rational) -> Result<Rational> {
    check_real_load(m, n, &r)?;
    Ok(time_share(&r, |k| ndlt_partial_integer(m, n, k)))
}

/// `max{N r / M, 1}`.
pub fn nult_partial_lower(m: usize, n: usize, r: Rational) -> Rational {
    rational::max(mi(n) * r / mi(m), int(1))
}

pub fn achievable(m: usize, n: usize, r: Rational, mode: Mode) -> Result<LatencyPair> {
    let (nult, ndlt) = match mode {
        Mode::Binary => {
            let ri = integer_load(&r)?;
            (
                nult_binary_achievable(m, n, ri)?,
                ndlt_binary_achievable(m, n, ri)?,
            )
        }
        Mode::Partial => (
            nult_partial_achievable(m, n, r)?,
            ndlt_partial_achievable(m, n, r)?,
        ),
    };
    Ok(LatencyPair {
        r,
        nult,
        ndlt,
        kind: BoundKind::Achievable,
        mode,
    })
}

pub fn lower_bound(m: usize, n: usize, r: Rational, mode: Mode) -> Result<LatencyPair> {
    check_real_load(m, n, &r)?;
    let nult = match mode {
        Mode::Binary => nult_binary_lower(m, n, r),
        Mode::Partial => nult_partial_lower(m, n, r),
    };
    Ok(LatencyPair {
        r,
        nult,
        ndlt: ndlt_lower(m, n),
        kind: BoundKind::LowerBound,
        mode,
    })
}

fn integer_load(r: &Rational) -> Result<usize> {
    if !r.is_integer() || *r.numer() < 1 {
        return Err(Error::Unsupported(format!(
            "binary offloading needs an integer load, got {}",
            rational::format(r)
        )));
    }
    Ok(*r.numer() as usize)
}

/// Multiplicative distance of the achievable scheme to the lower bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapReport {
    #[serde(with = "rational")]
    pub gap_u: Rational,
    #[serde(with = "rational")]
    pub gap_d: Rational,
}

pub fn gap_report(m: usize, n: usize, r: Rational, mode: Mode) -> Result<GapReport> {
    let ach = achievable(m, n, r, mode)?;
    let lb = lower_bound(m, n, r, mode)?;
    Ok(GapReport {
        gap_u: ach.nult / lb.nult,
        gap_d: ach.ndlt / lb.ndlt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Section {
    #[serde(rename = "constant-NDLT")]
    ConstantNdlt,
    #[serde(rename = "NULT-NDLT-tradeoff")]
    Tradeoff,
    #[serde(rename = "constant-NULT")]
    ConstantNult,
}

impl Section {
    pub fn label(self) -> &'static str {
        match self {
            Section::ConstantNdlt => "constant-NDLT",
            Section::Tradeoff => "NULT-NDLT-tradeoff",
            Section::ConstantNult => "constant-NULT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SectionSpan {
    #[serde(with = "rational")]
    pub from: Rational,
    #[serde(with = "rational")]
    pub to: Rational,
    pub label: Section,
}

/// A breakpoint of the achievable envelope, in the (NULT, NDLT) plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corner {
    #[serde(with = "rational")]
    pub r: Rational,
    #[serde(with = "rational")]
    pub nult: Rational,
    #[serde(with = "rational")]
    pub ndlt: Rational,
}

/// Binary-mode corners: `(1 + N^2/(M+N), 1 + N/M)` at `r = MN/(M+N)` and
/// `(N, N^2/(MN - M))` at `r = M - M/N`.
pub fn binary_corners(m: usize, n: usize) -> [Corner; 2] {
    let (mr, nr) = (mi(m), mi(n));
    [
        Corner {
            r: mr * nr / (mr + nr),
            nult: int(1) + nr * nr / (mr + nr),
            ndlt: int(1) + nr / mr,
        },
        Corner {
            r: mr - mr / nr,
            nult: nr,
            ndlt: nr * nr / (mr * nr - mr),
        },
    ]
}

pub fn section_spans(m: usize, n: usize, mode: Mode) -> Vec<SectionSpan> {
    let span = |from, to, label| SectionSpan { from, to, label };
    match mode {
        Mode::Binary => {
            let [c1, c2] = binary_corners(m, n);
            vec![
                span(int(1), c1.r, Section::ConstantNdlt),
                span(c1.r, c2.r, Section::Tradeoff),
                span(c2.r, mi(m), Section::ConstantNult),
            ]
        }
        Mode::Partial => {
            let knee = mi(m.min(n));
            let mut out = vec![span(int(1), knee, Section::Tradeoff)];
            if n < m {
                out.push(span(knee, mi(m), Section::ConstantNdlt));
            }
            out
        }
    }
}

/// Section a load falls in. Breakpoints belong to the earlier section,
/// except the constant-NULT onset, which belongs to the later one.
pub fn section_of(m: usize, n: usize, mode: Mode, r: &Rational) -> Section {
    match mode {
        Mode::Binary => {
            let [c1, c2] = binary_corners(m, n);
            if *r >= c2.r {
                Section::ConstantNult
            } else if *r <= c1.r {
                Section::ConstantNdlt
            } else {
                Section::Tradeoff
            }
        }
        Mode::Partial => {
            if *r <= mi(m.min(n)) {
                Section::Tradeoff
            } else {
                Section::ConstantNdlt
            }
        }
    }
}

/// One tabulated load of a tradeoff curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CurveRow {
    pub achievable: LatencyPair,
    pub lower: LatencyPair,
    pub gaps: GapReport,
    pub section: Section,
    pub corner: bool,
    /// Whether `N r` is an integer (the lower bound's assignment form).
    pub nr_integer: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TradeoffCurve {
    pub mode: Mode,
    #[serde(rename = "M")]
    pub edge_nodes: usize,
    #[serde(rename = "N")]
    pub users: usize,
    pub rows: Vec<CurveRow>,
    pub sections: Vec<SectionSpan>,
    pub corners: Vec<Corner>,
}

impl TradeoffCurve {
    pub fn points(&self) -> Vec<LatencyPair> {
        self.rows.iter().map(|r| r.achievable.clone()).collect()
    }

    pub const CSV_HEADER: &'static str = "mode,M,N,r,nult_ach,ndlt_ach,nult_lb,ndlt_lb,gap_u,gap_d,section,corner,nr_integer,r_f,nult_ach_f,ndlt_ach_f,nult_lb_f,ndlt_lb_f,gap_u_f,gap_d_f";

    /// Header line plus one row per load; LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        let f = |v: &Rational| format!("{:.12}", rational::to_f64(v));
        for row in &self.rows {
            let exact = [
                &row.achievable.r,
                &row.achievable.nult,
                &row.achievable.ndlt,
                &row.lower.nult,
                &row.lower.ndlt,
                &row.gaps.gap_u,
                &row.gaps.gap_d,
            ];
            let _ = write!(out, "{},{},{}", self.mode, self.edge_nodes, self.users);
            for v in exact {
                let _ = write!(out, ",{}", rational::format(v));
            }
            let _ = write!(
                out,
                ",{},{},{}",
                row.section.label(),
                row.corner,
                row.nr_integer
            );
            for v in exact {
                let _ = write!(out, ",{}", f(v));
            }
            out.push('\n');
        }
        out
    }
}

/// Tabulates the curve on `r = 1, 1 + 1/grid, ..., M` (partial mode) or on
/// the integer loads only (binary mode, which requires `M | N`).
pub fn tradeoff_curve(m: usize, n: usize, mode: Mode, grid: usize) -> Result<TradeoffCurve> {
    check_dims(m, n)?;
    let loads: Vec<Rational> = match mode {
        Mode::Binary => {
            check_binary(m, n, 1)?;
            (1..=m).map(mi).collect()
        }
        Mode::Partial => {
            let grid = grid.max(1);
            (0..=(m - 1) * grid)
                .map(|k| int(1) + q(k as i64, grid as i64))
                .collect()
        }
    };
    let corners: Vec<Corner> = match mode {
        Mode::Binary => binary_corners(m, n).to_vec(),
        Mode::Partial if n < m => {
            let r = mi(n);
            vec![Corner {
                r,
                nult: nult_partial_achievable(m, n, r)?,
                ndlt: int(1),
            }]
        }
        Mode::Partial => Vec::new(),
    };
    let mut rows = Vec::with_capacity(loads.len());
    for r in loads {
        rows.push(CurveRow {
            achievable: achievable(m, n, r, mode)?,
            lower: lower_bound(m, n, r, mode)?,
            gaps: gap_report(m, n, r, mode)?,
            section: section_of(m, n, mode, &r),
            corner: corners.iter().any(|c| c.r == r),
            nr_integer: (mi(n) * r).is_integer(),
        });
    }
    Ok(TradeoffCurve {
        mode,
        edge_nodes: m,
        users: n,
        rows,
        sections: section_spans(m, n, mode),
        corners,
    })
}
