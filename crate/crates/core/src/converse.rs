//! Converse assignment programs: closed-form optima and exhaustive oracles.
//!
//! The binary program minimizes `min{max_i a_i + 1, N}` over integer task
//! counts `a_i ∈ [0, N]` with `Σ a_i = N r`. The partial program minimizes
//! `max{max_i μ_i, 1}` over per-node loads `μ_i ∈ [0, N]` with the same sum,
//! and is equivalent to the split-ratio form via `γ_{j,i} = μ_i / N`.

use rayon::prelude::*;
use serde::Serialize;

use crate::rational::{self, int, q, Rational};
use crate::{Error, Result};

/// Candidate vectors an enumeration may visit before refusing.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Per-EN task counts `a_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssignmentVector {
    #[serde(with = "rational::vec")]
    pub a: Vec<Rational>,
}

impl AssignmentVector {
    pub fn is_feasible(&self, n: usize, r: Rational) -> bool {
        let cap = int(n as i64);
        self.a.iter().all(|x| *x >= int(0) && *x <= cap)
            && self.a.iter().sum::<Rational>() == int(n as i64) * r
    }
}

/// Split ratios `γ_{j,i}`, rows indexed by task and columns by EN.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitMatrix {
    #[serde(with = "rational::matrix")]
    pub gamma: Vec<Vec<Rational>>,
}

impl SplitMatrix {
    pub fn is_feasible(&self, r: Rational) -> bool {
        self.gamma.iter().all(|row| {
            row.iter().all(|g| *g >= int(0) && *g <= int(1)) && row.iter().sum::<Rational>() == r
        })
    }

    /// Per-EN load `μ_i = Σ_j γ_{j,i}`.
    pub fn mu(&self) -> Vec<Rational> {
        let m = self.gamma.first().map_or(0, Vec::len);
        (0..m)
            .map(|i| self.gamma.iter().map(|row| row[i]).sum())
            .collect()
    }

    pub fn objective(&self) -> Rational {
        p3_objective(&self.mu())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct P1Solution {
    pub a: AssignmentVector,
    #[serde(with = "rational")]
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct P3Solution {
    #[serde(with = "rational::vec")]
    pub mu: Vec<Rational>,
    /// Every entry of the optimal split matrix.
    #[serde(with = "rational")]
    pub gamma: Rational,
    #[serde(with = "rational")]
    pub value: Rational,
}

fn check(m: usize, n: usize, r: &Rational) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::param("M and N", "positive"));
    }
    if *r < int(1) || *r > int(m as i64) {
        return Err(Error::LoadOutOfRange {
            r: rational::format(r),
            max: m,
        });
    }
    Ok(())
}

pub fn p1_objective(a: &[Rational], n: usize) -> Rational {
    let peak = a.iter().copied().max().unwrap_or_else(|| int(0));
    rational::min(peak + int(1), int(n as i64))
}

pub fn p3_objective(mu: &[Rational]) -> Rational {
    let peak = mu.iter().copied().max().unwrap_or_else(|| int(0));
    rational::max(peak, int(1))
}

/// Real relaxation of the binary program: `a_i = N r / M`.
pub fn solve_p1_relaxed(m: usize, n: usize, r: Rational) -> Result<P1Solution> {
    check(m, n, &r)?;
    let a = vec![int(n as i64) * r / int(m as i64); m];
    let value = p1_objective(&a, n);
    Ok(P1Solution {
        a: AssignmentVector { a },
        value,
    })
}

/// `μ_i = N r / M`, `γ_{j,i} = r / M`.
pub fn solve_p3(m: usize, n: usize, r: Rational) -> Result<P3Solution> {
    check(m, n, &r)?;
    let mu = vec![int(n as i64) * r / int(m as i64); m];
    let value = p3_objective(&mu);
    Ok(P3Solution {
        mu,
        gamma: r / int(m as i64),
        value,
    })
}

/// The split matrix `γ_{j,i} = μ_i / N` built from per-EN loads.
pub fn split_from_mu(mu: &[Rational], n: usize) -> SplitMatrix {
    let row: Vec<Rational> = mu.iter().map(|x| x / int(n as i64)).collect();
    SplitMatrix {
        gamma: vec![row; n],
    }
}

/// Number of vectors in `[0, cap]^parts` summing to `total`.
pub fn count_compositions(parts: usize, total: usize, cap: usize) -> u128 {
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for _ in 0..parts {
        let mut next = vec![0u128; total + 1];
        for (t, slot) in next.iter_mut().enumerate() {
            let lo = t.saturating_sub(cap);
            *slot = ways[lo..=t].iter().sum();
        }
        ways = next;
    }
    ways[total]
}

/// Minimizes `key` over every vector in `[0, cap]^parts` summing to `total`.
/// Fans out over the first coordinate; the result does not depend on
/// scheduling because keys are totally ordered and ties are broken by the
/// vector itself.
pub fn enumerate_min<K, F>(
    parts: usize,
    total: usize,
    cap: usize,
    key: F,
) -> Result<(Vec<usize>, K)>
where
    K: Ord + Send,
    F: Fn(&[usize]) -> K + Sync,
{
    let candidates = count_compositions(parts, total, cap);
    if candidates > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            candidates,
            budget: ENUMERATION_BUDGET,
        });
    }
    if candidates == 0 {
        return Err(Error::Degenerate(format!(
            "no vector in [0, {cap}]^{parts} sums to {total}"
        )));
    }

    fn walk<K: Ord, F: Fn(&[usize]) -> K>(
        buf: &mut Vec<usize>,
        parts: usize,
        left: usize,
        cap: usize,
        key: &F,
        best: &mut Option<(K, Vec<usize>)>,
    ) {
        if buf.len() == parts - 1 {
            if left <= cap {
                buf.push(left);
                let k = key(buf);
                let better = match best {
                    None => true,
                    Some((bk, bv)) => (&k, &*buf) < (&*bk, &*bv),
                };
                if better {
                    *best = Some((k, buf.clone()));
                }
                buf.pop();
            }
            return;
        }
        let slots = parts - buf.len() - 1;
        // Remaining parts must be able to absorb what is left.
        let lo = left.saturating_sub(slots * cap);
        for v in lo..=cap.min(left) {
            buf.push(v);
            walk(buf, parts, left - v, cap, key, best);
            buf.pop();
        }
    }

    let best = (0..=cap.min(total))
        .into_par_iter()
        .filter_map(|first| {
            let mut buf = vec![first];
            let mut best = None;
            if parts == 1 {
                return (first == total).then(|| (key(&buf), buf));
            }
            walk(&mut buf, parts, total - first, cap, &key, &mut best);
            best
        })
        .min_by(|(ka, va), (kb, vb)| (ka, va).cmp(&(kb, vb)));
    let (k, v) = best.expect("candidate count was positive");
    Ok((v, k))
}

/// Exhaustive integer oracle for the binary program. Among optimal vectors
/// the one with the smallest peak (then lexicographically smallest) wins.
pub fn brute_force_p1(m: usize, n: usize, r: Rational) -> Result<P1Solution> {
    check(m, n, &r)?;
    let total = int(n as i64) * r;
    if !total.is_integer() {
        return Err(Error::NotDivisible {
            what: "N r",
            numerator: *total.numer(),
            denominator: *total.denom(),
        });
    }
    let total = *total.numer() as usize;
    let (a, _) = enumerate_min(m, total, n, |a| {
        let peak = *a.iter().max().unwrap();
        ((peak + 1).min(n), peak)
    })?;
    let a: Vec<Rational> = a.into_iter().map(|x| int(x as i64)).collect();
    let value = p1_objective(&a, n);
    Ok(P1Solution {
        a: AssignmentVector { a },
        value,
    })
}

/// Grid oracle for the partial program: enumerates `μ` in steps of `1/M`.
/// `N r M` must be an integer.
pub fn brute_force_p3(m: usize, n: usize, r: Rational) -> Result<P3Solution> {
    check(m, n, &r)?;
    let scale = m as i64;
    let units = int(n as i64) * r * int(scale);
    if !units.is_integer() {
        return Err(Error::NotDivisible {
            what: "N r M",
            numerator: *units.numer(),
            denominator: *units.denom(),
        });
    }
    let (v, _) = enumerate_min(m, *units.numer() as usize, n * m, |mu| {
        let peak = *mu.iter().max().unwrap();
        peak.max(m)
    })?;
    let mu: Vec<Rational> = v.into_iter().map(|x| q(x as i64, scale)).collect();
    let value = p3_objective(&mu);
    Ok(P3Solution {
        gamma: mu[0] / int(n as i64),
        mu,
        value,
    })
}
