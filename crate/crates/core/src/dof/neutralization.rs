use serde::Serialize;

use crate::assignment::circular_assignment;
use crate::{Error, Result};

/// Stream `x^p_j`: the `p`-th of the `r` streams carrying result `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stream {
    pub p: usize,
    pub j: usize,
    /// `(p - 1) N + j`.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamGroup {
    pub k: usize,
    pub streams: Vec<Stream>,
    /// ENs holding each stream's result; empty until a plan fills it in.
    pub holders: Vec<Vec<usize>>,
}

/// Splits the `N r` streams into `N` consecutive blocks of `r` by index.
pub fn neutralization_groups(n: usize, r: usize) -> Result<Vec<StreamGroup>> {
    if r < 2 {
        return Err(Error::param("r", "≥ 2 for neutralization"));
    }
    if n == 0 {
        return Err(Error::param("N", "positive"));
    }
    Ok((1..=n)
        .map(|k| {
            let streams = ((k - 1) * r + 1..=k * r)
                .map(|index| Stream {
                    p: (index - 1) / n + 1,
                    j: (index - 1) % n + 1,
                    index,
                })
                .collect();
            StreamGroup {
                k,
                streams,
                holders: Vec::new(),
            }
        })
        .collect())
}

/// Groups plus, for every stream, the `r` ENs that computed its result
/// under the circular assignment.
pub fn neutralization_plan(m: usize, n: usize, r: usize) -> Result<Vec<StreamGroup>> {
    let mut groups = neutralization_groups(n, r)?;
    let holders = circular_assignment(m, n, r)?.task_holders();
    for g in &mut groups {
        g.holders = g.streams.iter().map(|s| holders[s.j - 1].clone()).collect();
        if let Some(bad) = g.holders.iter().find(|h| h.len() != r) {
            return Err(Error::Degenerate(format!(
                "a stream in group {} is held by {} ENs, expected {r}",
                g.k,
                bad.len()
            )));
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_users_triple() {
        let g = neutralization_groups(4, 3).unwrap();
        let first: Vec<_> = g[0].streams.iter().map(|s| (s.p, s.j)).collect();
        assert_eq!(first, vec![(1, 1), (1, 2), (1, 3)]);
        let second: Vec<_> = g[1].streams.iter().map(|s| (s.p, s.j)).collect();
        assert_eq!(second, vec![(1, 4), (2, 1), (2, 2)]);
    }

    #[test]
    fn two_users_pair() {
        let g = neutralization_groups(2, 2).unwrap();
        let ids: Vec<Vec<_>> = g
            .iter()
            .map(|g| g.streams.iter().map(|s| (s.p, s.j)).collect())
            .collect();
        assert_eq!(ids, vec![vec![(1, 1), (1, 2)], vec![(2, 1), (2, 2)]]);
    }

    #[test]
    fn rejects_single_stream() {
        assert!(neutralization_groups(4, 1).is_err());
    }

    #[test]
    fn plan_holders_come_from_assignment() {
        let g = neutralization_plan(4, 4, 3).unwrap();
        assert_eq!(g[0].holders[0], vec![1, 2, 3]);
        assert_eq!(g[1].holders[0], vec![2, 3, 4]);
    }
}
