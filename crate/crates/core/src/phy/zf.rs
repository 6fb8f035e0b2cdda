//! Cooperative zero-forcing from cofactor (determinant) precoders.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::assignment::circular_assignment;
use crate::{Error, Result};

/// The `k`-th of the `r` equal pieces of result `user`, and the ENs that
/// hold the full result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubResult {
    pub user: usize,
    pub k: usize,
    pub ens: Vec<usize>,
}

/// Partition of all `N r` sub-results into `N` time slots of `r` streams
/// with distinct destinations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZfGroupPlan {
    #[serde(rename = "M")]
    pub edge_nodes: usize,
    #[serde(rename = "N")]
    pub users: usize,
    pub r: usize,
    pub groups: Vec<Vec<SubResult>>,
}

/// Group `g` serves users `(r (g-1) + t) mod N + 1`, `t = 0..r`; a user's
/// sub-results are numbered in the order its groups come up.
pub fn build_zf_plan(m: usize, n: usize, r: usize) -> Result<ZfGroupPlan> {
    if r < 2 {
        return Err(Error::param("r", "≥ 2 for cooperative zero-forcing"));
    }
    if r > n {
        return Err(Error::param(
            "r",
            format!("≤ N = {n} so group users are distinct"),
        ));
    }
    let holders = circular_assignment(m, n, r)?.task_holders();
    let mut seen = vec![0usize; n];
    let groups = (0..n)
        .map(|g| {
            (0..r)
                .map(|t| {
                    let user = (r * g + t) % n + 1;
                    seen[user - 1] += 1;
                    SubResult {
                        user,
                        k: seen[user - 1],
                        ens: holders[user - 1].clone(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(ZfGroupPlan {
        edge_nodes: m,
        users: n,
        r,
        groups,
    })
}

fn submatrix(g: &DMatrix<Complex64>, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| g[(rows[a] - 1, cols[b] - 1)])
}

fn minor(m: &DMatrix<Complex64>, row: usize, col: usize) -> DMatrix<Complex64> {
    m.clone().remove_row(row).remove_column(col)
}

fn det(m: &DMatrix<Complex64>) -> Complex64 {
    if m.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    m.clone().determinant()
}

/// Signed cofactor `(-1)^{row+col} det(minor)`.
pub fn cofactor(m: &DMatrix<Complex64>, row: usize, col: usize) -> Complex64 {
    let c = det(&minor(m, row, col));
    if (row + col).is_multiple_of(2) {
        c
    } else {
        -c
    }
}

/// Transpose of the cofactor matrix, so `m * adjugate(m) = det(m) I`.
pub fn adjugate(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| cofactor(m, j, i))
}

/// Precoder of one stream: weights over the ENs in `ens`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPrecoder {
    pub ens: Vec<usize>,
    pub weights: Vec<Complex64>,
}

/// Cofactor precoders for one group, unnormalized. For stream `p` the
/// weights are the cofactors along row `p` of the channel from that
/// stream's ENs to the group's users, so every other user in the group
/// receives a determinant with a repeated row, i.e. zero.
pub fn zf_precoders(
    g: &DMatrix<Complex64>,
    plan: &ZfGroupPlan,
    group: usize,
) -> Result<Vec<StreamPrecoder>> {
    let members = plan
        .groups
        .get(group)
        .ok_or_else(|| Error::param("group", format!("< {}", plan.groups.len())))?;
    let users: Vec<usize> = members.iter().map(|s| s.user).collect();
    members
        .iter()
        .enumerate()
        .map(|(p, sub)| {
            let block = submatrix(g, &users, &sub.ens);
            let weights: Vec<Complex64> =
                (0..sub.ens.len()).map(|c| cofactor(&block, p, c)).collect();
            // Laplace expansion along row p gives the intended gain.
            let gain: Complex64 = (0..sub.ens.len()).map(|c| block[(p, c)] * weights[c]).sum();
            if gain.norm_sqr() == 0.0 {
                return Err(Error::Degenerate(format!(
                    "singular channel block in group {} stream {}",
                    group + 1,
                    p + 1
                )));
            }
            Ok(StreamPrecoder {
                ens: sub.ens.clone(),
                weights,
            })
        })
        .collect()
}

/// All groups' precoders, jointly scaled so their total power is `total_power`.
pub fn normalized_precoders(
    g: &DMatrix<Complex64>,
    plan: &ZfGroupPlan,
    total_power: f64,
) -> Result<Vec<Vec<StreamPrecoder>>> {
    let mut all = (0..plan.groups.len())
        .map(|k| zf_precoders(g, plan, k))
        .collect::<Result<Vec<_>>>()?;
    let energy: f64 = all
        .iter()
        .flatten()
        .flat_map(|s| s.weights.iter())
        .map(|w| w.norm_sqr())
        .sum();
    let scale = (total_power / energy).sqrt();
    for w in all.iter_mut().flatten().flat_map(|s| s.weights.iter_mut()) {
        *w *= scale;
    }
    Ok(all)
}

/// Total power of a precoder collection.
pub fn precoder_power(precoders: &[Vec<StreamPrecoder>]) -> f64 {
    precoders
        .iter()
        .flatten()
        .flat_map(|s| s.weights.iter())
        .map(|w| w.norm_sqr())
        .sum()
}

/// Amplitude of `stream` as received by `user`.
pub fn received(g: &DMatrix<Complex64>, stream: &StreamPrecoder, user: usize) -> Complex64 {
    stream
        .ens
        .iter()
        .zip(&stream.weights)
        .map(|(&i, w)| g[(user - 1, i - 1)] * w)
        .sum()
}

/// Worst interference-to-signal power ratio at unintended users of the
/// same group.
pub fn zf_residual(
    g: &DMatrix<Complex64>,
    plan: &ZfGroupPlan,
    precoders: &[Vec<StreamPrecoder>],
) -> f64 {
    let mut worst: f64 = 0.0;
    for (members, streams) in plan.groups.iter().zip(precoders) {
        for (p, stream) in streams.iter().enumerate() {
            let signal = received(g, stream, members[p].user).norm_sqr();
            for (q, other) in members.iter().enumerate() {
                if q != p {
                    worst = worst.max(received(g, stream, other.user).norm_sqr() / signal);
                }
            }
        }
    }
    worst
}

/// Per-user SNR of full channel inversion with adjugate precoders scaled to
/// `total_power`: `P |det G|^2 / ||adj G||_F^2 = P / ||G^{-1}||_F^2`.
pub fn full_zf_snr(g: &DMatrix<Complex64>, total_power: f64) -> Result<f64> {
    if g.nrows() != g.ncols() {
        return Err(Error::Unsupported(
            "full cooperative zero-forcing needs as many ENs as users".into(),
        ));
    }
    let adj = adjugate(g);
    let d = det(g);
    let energy: f64 = adj.iter().map(|x| x.norm_sqr()).sum();
    if d.norm_sqr() == 0.0 || energy == 0.0 {
        return Err(Error::Degenerate("singular downlink channel".into()));
    }
    Ok(total_power * d.norm_sqr() / energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::ChannelRealization;
    use crate::random::trial_rng;

    #[test]
    fn four_by_four_groups() {
        let plan = build_zf_plan(4, 4, 3).unwrap();
        let ids: Vec<Vec<(usize, usize)>> = plan
            .groups
            .iter()
            .map(|g| g.iter().map(|s| (s.user, s.k)).collect())
            .collect();
        assert_eq!(
            ids,
            vec![
                vec![(1, 1), (2, 1), (3, 1)],
                vec![(4, 1), (1, 2), (2, 2)],
                vec![(3, 2), (4, 2), (1, 3)],
                vec![(2, 3), (3, 3), (4, 3)],
            ]
        );
        assert_eq!(plan.groups[0][0].ens, vec![1, 2, 3]);
        assert_eq!(plan.groups[0][1].ens, vec![1, 2, 4]);
        assert_eq!(plan.groups[0][2].ens, vec![1, 3, 4]);
        assert_eq!(plan.groups[1][0].ens, vec![2, 3, 4]);
    }

    #[test]
    fn identity_block_gives_unit_precoders() {
        // Users 1..3 see ENs 1..3 through the identity; EN 4 is arbitrary.
        let mut g = DMatrix::from_element(4, 4, Complex64::new(0.3, -0.2));
        for i in 0..4 {
            for j in 0..3 {
                g[(i, j)] = Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
            }
        }
        let plan = ZfGroupPlan {
            edge_nodes: 4,
            users: 4,
            r: 3,
            groups: vec![(1..=3)
                .map(|u| SubResult {
                    user: u,
                    k: 1,
                    ens: vec![1, 2, 3],
                })
                .collect()],
        };
        let pre = zf_precoders(&g, &plan, 0).unwrap();
        for (p, stream) in pre.iter().enumerate() {
            for (c, v) in stream.weights.iter().enumerate() {
                let want = if c == p { 1.0 } else { 0.0 };
                assert_eq!(*v, Complex64::new(want, 0.0));
            }
            for q in 1..=3 {
                let rx = received(&g, stream, q);
                if q != p + 1 {
                    assert_eq!(rx, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn random_draw_nulls_interference() {
        let plan = build_zf_plan(4, 4, 3).unwrap();
        let ch = ChannelRealization::draw(4, 4, 1.0, &mut trial_rng(3, 0), 0);
        let pre = normalized_precoders(&ch.g, &plan, 4.0 * 10.0).unwrap();
        assert!(zf_residual(&ch.g, &plan, &pre) < 1e-9);
        assert!((precoder_power(&pre) - 40.0).abs() < 1e-9);
        assert_eq!(
            pre.iter().flatten().map(|s| s.weights.len()).sum::<usize>(),
            36
        );
    }

    #[test]
    fn adjugate_inverts() {
        let ch = ChannelRealization::draw(4, 4, 1.0, &mut trial_rng(4, 0), 0);
        let prod = &ch.g * adjugate(&ch.g);
        let d = det(&ch.g);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { d } else { Complex64::new(0.0, 0.0) };
                assert!((prod[(i, j)] - want).norm() < 1e-10);
            }
        }
        let inv = ch.g.clone().try_inverse().unwrap();
        let frob: f64 = inv.iter().map(|x| x.norm_sqr()).sum();
        let snr = full_zf_snr(&ch.g, 4.0).unwrap();
        assert!((snr - 4.0 / frob).abs() < 1e-9 * snr);
    }

    #[test]
    fn plan_rejects_bad_loads() {
        assert!(build_zf_plan(4, 4, 1).is_err());
        assert!(build_zf_plan(4, 2, 3).is_err());
    }
}
