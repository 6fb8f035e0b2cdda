//! Task-to-node assignment schemes and the computation load they induce.

use itertools::Itertools;
use num_integer::binomial;
use serde::Serialize;

use crate::network::Mode;
use crate::rational::{self, int, q, Rational};
use crate::{Error, Result};

/// Largest subtask table `partial_assignment` will materialize.
pub const MAX_SUBTASKS: u64 = 10_000_000;

/// Whole-task replication: EN `i` runs every task in `per_en[i - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinaryAssignment {
    #[serde(rename = "M")]
    pub edge_nodes: usize,
    #[serde(rename = "N")]
    pub users: usize,
    pub r: usize,
    /// Tasks per EN, `N r / M`.
    pub tasks_per_en: usize,
    /// 1-based task indices, in assignment order.
    pub per_en: Vec<Vec<usize>>,
}

impl BinaryAssignment {
    /// ENs holding `task` (1-based), ascending.
    pub fn holders(&self, task: usize) -> Vec<usize> {
        self.per_en
            .iter()
            .enumerate()
            .filter(|(_, tasks)| tasks.contains(&task))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `holders` for every task, indexed by `task - 1`.
    pub fn task_holders(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.users];
        for (i, tasks) in self.per_en.iter().enumerate() {
            for &t in tasks {
                out[t - 1].push(i + 1);
            }
        }
        out
    }
}

/// Circular assignment: EN `i` gets tasks `((i-1)n + k) mod N + 1` for
/// `k = 0..n`, where `n = N r / M`.
pub fn circular_assignment(m: usize, n: usize, r: usize) -> Result<BinaryAssignment> {
    if m == 0 || n == 0 {
        return Err(Error::param("M and N", "positive"));
    }
    if r < 1 || r > m {
        return Err(Error::LoadOutOfRange {
            r: r.to_string(),
            max: m,
        });
    }
    if !(n * r).is_multiple_of(m) {
        return Err(Error::NotDivisible {
            what: "N r / M",
            numerator: (n * r) as i64,
            denominator: m as i64,
        });
    }
    let per = n * r / m;
    let per_en = (0..m)
        .map(|i| (0..per).map(|k| (i * per + k) % n + 1).collect())
        .collect();
    Ok(BinaryAssignment {
        edge_nodes: m,
        users: n,
        r,
        tasks_per_en: per,
        per_en,
    })
}

/// One piece `W_{j, Phi}` of a task, computed at every EN in `ens`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subtask {
    pub task: usize,
    pub ens: Vec<usize>,
    /// Size as a fraction of the task input size `L`; the output piece is
    /// the same fraction of `Ltilde`.
    #[serde(with = "crate::rational")]
    pub fraction: Rational,
}

/// Every task split into `C(M, r)` equal subtasks, one per `r`-subset of ENs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartialAssignment {
    #[serde(rename = "M")]
    pub edge_nodes: usize,
    #[serde(rename = "N")]
    pub users: usize,
    pub r: usize,
    pub subtasks_per_task: u64,
    /// Ordered by task, then by subset in lexicographic order.
    pub subtasks: Vec<Subtask>,
}

impl PartialAssignment {
    /// Input bits EN `en` receives, as a multiple of `L`.
    pub fn traffic(&self, en: usize) -> Rational {
        self.subtasks
            .iter()
            .filter(|s| s.ens.contains(&en))
            .map(|s| s.fraction)
            .sum()
    }

    pub fn subtasks_of(&self, task: usize) -> impl Iterator<Item = &Subtask> {
        self.subtasks.iter().filter(move |s| s.task == task)
    }
}

pub fn partial_assignment(m: usize, n: usize, r: usize) -> Result<PartialAssignment> {
    if m == 0 || n == 0 {
        return Err(Error::param("M and N", "positive"));
    }
    if r < 1 || r > m {
        return Err(Error::LoadOutOfRange {
            r: r.to_string(),
            max: m,
        });
    }
    let count = binomial(m as u64, r as u64);
    if count.saturating_mul(n as u64) > MAX_SUBTASKS {
        return Err(Error::BudgetExceeded {
            candidates: count as u128 * n as u128,
            budget: MAX_SUBTASKS as u128,
        });
    }
    let fraction = q(1, count as i64);
    let subsets: Vec<Vec<usize>> = (1..=m).combinations(r).collect();
    let subtasks = (1..=n)
        .flat_map(|task| {
            subsets.iter().map(move |ens| Subtask {
                task,
                ens: ens.clone(),
                fraction,
            })
        })
        .collect();
    Ok(PartialAssignment {
        edge_nodes: m,
        users: n,
        r,
        subtasks_per_task: count,
        subtasks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Assignment {
    Binary(BinaryAssignment),
    Partial(PartialAssignment),
}

impl Assignment {
    pub fn mode(&self) -> Mode {
        match self {
            Assignment::Binary(_) => Mode::Binary,
            Assignment::Partial(_) => Mode::Partial,
        }
    }

    /// `{mode, M, N, r, assignments: [{task, ens, ...}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Assignment::Binary(a) => {
                let rows: Vec<_> = a
                    .task_holders()
                    .into_iter()
                    .enumerate()
                    .map(|(t, ens)| json!({"task": t + 1, "ens": ens}))
                    .collect();
                json!({"mode": "binary", "M": a.edge_nodes, "N": a.users, "r": a.r, "assignments": rows})
            }
            Assignment::Partial(a) => {
                let rows: Vec<_> = a
                    .subtasks
                    .iter()
                    .map(|s| json!({"task": s.task, "ens": s.ens, "fraction": rational::format(&s.fraction)}))
                    .collect();
                json!({"mode": "partial", "M": a.edge_nodes, "N": a.users, "r": a.r, "assignments": rows})
            }
        }
    }
}

impl From<BinaryAssignment> for Assignment {
    fn from(a: BinaryAssignment) -> Self {
        Assignment::Binary(a)
    }
}

impl From<PartialAssignment> for Assignment {
    fn from(a: PartialAssignment) -> Self {
        Assignment::Partial(a)
    }
}

/// Total bits computed across all ENs divided by the `N L` input bits.
pub fn computation_load(assignment: &Assignment) -> Rational {
    match assignment {
        Assignment::Binary(a) => {
            let placed: usize = a.per_en.iter().map(Vec::len).sum();
            q(placed as i64, a.users as i64)
        }
        Assignment::Partial(a) => {
            let placed: Rational = a
                .subtasks
                .iter()
                .map(|s| s.fraction * int(s.ens.len() as i64))
                .sum();
            placed / int(a.users as i64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_node_triple_replication() {
        let a = circular_assignment(4, 4, 3).unwrap();
        assert_eq!(
            a.per_en,
            vec![vec![1, 2, 3], vec![4, 1, 2], vec![3, 4, 1], vec![2, 3, 4]]
        );
        assert_eq!(a.holders(1), vec![1, 2, 3]);
        assert_eq!(a.holders(4), vec![2, 3, 4]);
    }

    #[test]
    fn no_replication_is_identity() {
        let a = circular_assignment(4, 4, 1).unwrap();
        for (i, t) in a.per_en.iter().enumerate() {
            assert_eq!(t, &vec![i + 1]);
        }
    }

    #[test]
    fn rejects_bad_loads() {
        assert!(circular_assignment(4, 4, 0).is_err());
        assert!(circular_assignment(4, 4, 5).is_err());
        assert!(matches!(
            circular_assignment(4, 6, 1),
            Err(Error::NotDivisible { .. })
        ));
        assert!(partial_assignment(3, 3, 4).is_err());
    }

    #[test]
    fn partial_small_case() {
        let a = partial_assignment(3, 1, 2).unwrap();
        let sets: Vec<_> = a.subtasks.iter().map(|s| s.ens.clone()).collect();
        assert_eq!(sets, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert!(a.subtasks.iter().all(|s| s.fraction == q(1, 3)));
        assert_eq!(a.traffic(1), q(2, 3));
    }

    #[test]
    fn full_order_single_subtask() {
        let a = partial_assignment(4, 4, 4).unwrap();
        assert_eq!(a.subtasks_per_task, 1);
        assert!(a.subtasks.iter().all(|s| s.ens == vec![1, 2, 3, 4]));
    }

    #[test]
    fn loads() {
        assert_eq!(
            computation_load(&circular_assignment(4, 4, 3).unwrap().into()),
            int(3)
        );
        assert_eq!(
            computation_load(&partial_assignment(3, 3, 1).unwrap().into()),
            int(1)
        );
    }

    #[test]
    fn json_shape() {
        let v = Assignment::from(circular_assignment(2, 2, 1).unwrap()).to_json();
        assert_eq!(v["mode"], "binary");
        assert_eq!(v["assignments"][1]["ens"], serde_json::json!([2]));
        let v = Assignment::from(partial_assignment(2, 1, 1).unwrap()).to_json();
        assert_eq!(v["assignments"][0]["fraction"], "1/2");
    }
}
