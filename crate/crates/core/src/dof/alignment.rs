use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::monomial::ExponentSpace;
use super::{downlink_extension, uplink_extension, Direction, SymbolExtension, MAX_EXTENSION};
use crate::assignment::circular_assignment;
use crate::random::{trial_rng, uniform_weight, FadeLaw};
use crate::{Error, Result};

/// Relative singular-value threshold for the numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Diagonal symbol-extended channels for every `(a, b)` link: entry `l` of
/// link `(a, b)` is the fade during channel use `l`. Indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedChannel {
    pub first: usize,
    pub second: usize,
    pub u_s: usize,
    fades: Vec<Complex64>,
}

impl ExtendedChannel {
    pub fn draw<R: Rng + ?Sized>(
        first: usize,
        second: usize,
        u_s: usize,
        law: FadeLaw,
        rng: &mut R,
    ) -> Self {
        let fades = (0..first * second * u_s).map(|_| law.sample(rng)).collect();
        ExtendedChannel {
            first,
            second,
            u_s,
            fades,
        }
    }

    pub fn fade(&self, a: usize, b: usize, l: usize) -> Complex64 {
        self.fades[((a - 1) * self.second + (b - 1)) * self.u_s + l]
    }
}

/// Beamformers of one alignment scheme over a fixed channel draw.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    pub extension: SymbolExtension,
    pub edge_nodes: usize,
    pub users: usize,
    pub r: usize,
    /// Variable links of each target family (`V` uplink; `U_k` downlink).
    pub links: Vec<Vec<(usize, usize)>>,
    /// Transmit beamformers `V̄_j`, indexed by message `j - 1`.
    pub vbar: Vec<DMatrix<Complex64>>,
    /// Target family each message aligns into.
    pub family_of: Vec<usize>,
    /// Alignment targets: `[V]` uplink, `[U_1, ..., U_n]` downlink.
    pub targets: Vec<DMatrix<Complex64>>,
    /// Desired messages per receiver, in column order of the receive matrix.
    pub desired: Vec<Vec<usize>>,
    pub channel: ExtendedChannel,
}

/// `Π_g fade(link_g)^{α_g} · weight`, one column per exponent vector.
fn monomial_columns(
    channel: &ExtendedChannel,
    links: &[(usize, usize)],
    space: ExponentSpace,
    weight: &[Complex64],
) -> DMatrix<Complex64> {
    let u_s = channel.u_s;
    let top = space.base;
    // powers[g][l * top + e] = fade(link_g, l)^e
    let powers: Vec<Vec<Complex64>> = links
        .iter()
        .map(|&(a, b)| {
            let mut p = Vec::with_capacity(u_s * top);
            for l in 0..u_s {
                let f = channel.fade(a, b, l);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..top {
                    p.push(acc);
                    acc *= f;
                }
            }
            p
        })
        .collect();
    let mut out = DMatrix::zeros(u_s, space.len());
    for (c, alpha) in space.iter().enumerate() {
        for l in 0..u_s {
            let mut v = weight[l];
            for (g, &e) in alpha.iter().enumerate() {
                v *= powers[g][l * top + e];
            }
            out[(l, c)] = v;
        }
    }
    out
}

fn scale_rows(
    channel: &ExtendedChannel,
    a: usize,
    b: usize,
    m: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let mut out = m.clone();
    for l in 0..m.nrows() {
        let f = channel.fade(a, b, l);
        for c in 0..m.ncols() {
            out[(l, c)] *= f;
        }
    }
    out
}

fn usable_extension(ext: &SymbolExtension) -> Result<usize> {
    if ext.u_s > MAX_EXTENSION as u128 {
        return Err(Error::ExtensionTooLarge {
            u_s: ext.u_s,
            cap: MAX_EXTENSION,
        });
    }
    Ok(ext.u_s as usize)
}

/// Uplink alignment: users transmit, ENs receive. `channel` holds `h_{tq}`
/// indexed (EN `t`, user `q`) and must have `u_s` uses.
pub fn build_uplink_alignment(
    m: usize,
    n: usize,
    r: usize,
    s: usize,
    channel: &ExtendedChannel,
) -> Result<BeamformerSet> {
    let ext = uplink_extension(m, n, r, s)?;
    let u_s = usable_extension(&ext)?;
    check_channel(channel, m, n, u_s)?;
    let assignment = circular_assignment(m, n, r)?;

    // Links into an EN from users whose task it does not run.
    let links: Vec<(usize, usize)> = (1..=m)
        .flat_map(|t| {
            let own = &assignment.per_en[t - 1];
            (1..=n)
                .filter(move |q| !own.contains(q))
                .map(move |q| (t, q))
        })
        .collect();
    if links.len() != ext.gamma {
        return Err(Error::Degenerate(format!(
            "{} cross links but Γ = {}",
            links.len(),
            ext.gamma
        )));
    }
    let ones = vec![Complex64::new(1.0, 0.0); u_s];
    let vbar_j = monomial_columns(channel, &links, ExponentSpace::new(ext.gamma, s), &ones);
    let target = monomial_columns(channel, &links, ExponentSpace::new(ext.gamma, s + 1), &ones);
    Ok(BeamformerSet {
        extension: ext,
        edge_nodes: m,
        users: n,
        r,
        links: vec![links],
        vbar: vec![vbar_j; n],
        family_of: vec![0; n],
        targets: vec![target],
        desired: assignment.per_en.clone(),
        channel: channel.clone(),
    })
}

/// Downlink alignment for `r = 1`: EN `i` holds results `(i-1)n+1 ..= in`.
/// `channel` holds `g_{qt}` indexed (user `q`, EN `t`); `weights[k-1]` is the
/// random base vector `w_k`.
pub fn build_downlink_alignment(
    m: usize,
    n: usize,
    r: usize,
    s: usize,
    channel: &ExtendedChannel,
    weights: &[Vec<f64>],
) -> Result<BeamformerSet> {
    let ext = downlink_extension(m, n, r, s)?;
    let u_s = usable_extension(&ext)?;
    check_channel(channel, n, m, u_s)?;
    let per = ext.n;
    if weights.len() != per || weights.iter().any(|w| w.len() != u_s) {
        return Err(Error::param(
            "weights",
            format!("{per} vectors of length {u_s}"),
        ));
    }
    let mut links = Vec::with_capacity(per);
    let mut targets = Vec::with_capacity(per);
    let mut base = Vec::with_capacity(per);
    for (k, w) in (1..=per).zip(weights) {
        // Every link except each EN's link to the user of its k-th result.
        let fam: Vec<(usize, usize)> = (1..=n)
            .flat_map(|q| (1..=m).map(move |t| (q, t)))
            .filter(|&(q, t)| q != (t - 1) * per + k)
            .collect();
        if fam.len() != ext.gamma {
            return Err(Error::Degenerate(format!(
                "{} links in family {k} but Γ = {}",
                fam.len(),
                ext.gamma
            )));
        }
        let w: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        targets.push(monomial_columns(
            channel,
            &fam,
            ExponentSpace::new(ext.gamma, s + 1),
            &w,
        ));
        base.push(monomial_columns(
            channel,
            &fam,
            ExponentSpace::new(ext.gamma, s),
            &w,
        ));
        links.push(fam);
    }
    let family_of: Vec<usize> = (0..n).map(|j| j % per).collect();
    let vbar = family_of.iter().map(|&k| base[k].clone()).collect();
    Ok(BeamformerSet {
        extension: ext,
        edge_nodes: m,
        users: n,
        r,
        links,
        vbar,
        family_of,
        targets,
        desired: (1..=n).map(|j| vec![j]).collect(),
        channel: channel.clone(),
    })
}

fn check_channel(ch: &ExtendedChannel, first: usize, second: usize, u_s: usize) -> Result<()> {
    if (ch.first, ch.second, ch.u_s) != (first, second, u_s) {
        return Err(Error::param(
            "channel",
            format!("{first}x{second} links over {u_s} uses"),
        ));
    }
    Ok(())
}

/// Where each column of one interference term lands inside its target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Containment {
    pub receiver: usize,
    /// Transmitter (downlink) or user (uplink) sending the interference.
    pub transmitter: usize,
    pub message: usize,
    pub family: usize,
    /// Target column index for each beamformer column.
    pub columns: Vec<usize>,
}

impl BeamformerSet {
    pub fn direction(&self) -> Direction {
        self.extension.direction
    }

    pub fn receivers(&self) -> usize {
        match self.direction() {
            Direction::Uplink => self.edge_nodes,
            Direction::Downlink => self.users,
        }
    }

    /// Every interfering (receiver, transmitter, message) triple, with the
    /// channel link that carries it.
    fn interference_terms(&self) -> Vec<(usize, usize, usize, (usize, usize))> {
        let mut out = Vec::new();
        match self.direction() {
            Direction::Uplink => {
                for i in 1..=self.edge_nodes {
                    for j in 1..=self.users {
                        if !self.desired[i - 1].contains(&j) {
                            out.push((i, j, j, (i, j)));
                        }
                    }
                }
            }
            Direction::Downlink => {
                let per = self.extension.n;
                for j in 1..=self.users {
                    for i in 1..=self.edge_nodes {
                        for msg in (i - 1) * per + 1..=i * per {
                            if msg != j {
                                out.push((j, i, msg, (j, i)));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Checks alignment by exponent bookkeeping: multiplying a beamformer
    /// column with exponents `α` by the interfering link's channel gives
    /// exponents `α + e_link`, which must be a column of the target.
    pub fn containment(&self) -> Result<Vec<Containment>> {
        let s = self.extension.s;
        let gamma = self.extension.gamma;
        let source = ExponentSpace::new(gamma, s);
        let target = ExponentSpace::new(gamma, s + 1);
        let mut out = Vec::new();
        for (receiver, transmitter, message, link) in self.interference_terms() {
            let family = self.family_of[message - 1];
            let position = self.links[family]
                .iter()
                .position(|&x| x == link)
                .ok_or_else(|| {
                    Error::Degenerate(format!(
                        "link {link:?} into receiver {receiver} is not free in family {}",
                        family + 1
                    ))
                })?;
            let mut columns = Vec::with_capacity(source.len());
            for mut alpha in source.iter() {
                alpha[position] += 1;
                let idx = target.index(&alpha).ok_or_else(|| {
                    Error::Degenerate(format!("exponent {alpha:?} outside the target box"))
                })?;
                columns.push(idx);
            }
            out.push(Containment {
                receiver,
                transmitter,
                message,
                family: family + 1,
                columns,
            });
        }
        Ok(out)
    }

    /// Largest relative mismatch between an aligned interference column and
    /// the target column the bookkeeping maps it to.
    pub fn containment_residual(&self, c: &Containment) -> f64 {
        let (a, b) = match self.direction() {
            Direction::Uplink => (c.receiver, c.message),
            Direction::Downlink => (c.receiver, c.transmitter),
        };
        let seen = scale_rows(&self.channel, a, b, &self.vbar[c.message - 1]);
        let target = &self.targets[c.family - 1];
        let mut worst: f64 = 0.0;
        for (col, &t) in c.columns.iter().enumerate() {
            let diff = (seen.column(col) - target.column(t)).norm();
            worst = worst.max(diff / target.column(t).norm().max(f64::MIN_POSITIVE));
        }
        worst
    }

    /// `A_i` (uplink) or `Λ_j` (downlink) for 1-based receiver `receiver`.
    pub fn receive_matrix(&self, receiver: usize) -> DMatrix<Complex64> {
        let mut blocks: Vec<DMatrix<Complex64>> = Vec::new();
        match self.direction() {
            Direction::Uplink => {
                for &j in &self.desired[receiver - 1] {
                    blocks.push(scale_rows(&self.channel, receiver, j, &self.vbar[j - 1]));
                }
            }
            Direction::Downlink => {
                let owner = (receiver - 1) / self.extension.n + 1;
                blocks.push(scale_rows(
                    &self.channel,
                    receiver,
                    owner,
                    &self.vbar[receiver - 1],
                ));
            }
        }
        blocks.extend(self.targets.iter().cloned());
        let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
        let mut out = DMatrix::zeros(self.channel.u_s, cols);
        let mut at = 0;
        for b in blocks {
            out.columns_mut(at, b.ncols()).copy_from(&b);
            at += b.ncols();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub receiver: usize,
    pub rank: usize,
    pub u_s: usize,
    pub ok: bool,
    pub min_singular_value: f64,
    pub max_singular_value: f64,
}

pub fn verify_fullrank(scheme: &BeamformerSet, receiver: usize) -> Result<RankReport> {
    if receiver < 1 || receiver > scheme.receivers() {
        return Err(Error::param(
            "receiver",
            format!("in [1, {}]", scheme.receivers()),
        ));
    }
    let a = scheme.receive_matrix(receiver);
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let rank = sv.iter().filter(|&&x| x > RANK_TOLERANCE * max).count();
    Ok(RankReport {
        receiver,
        rank,
        u_s: scheme.channel.u_s,
        ok: rank == scheme.channel.u_s,
        min_singular_value: min,
        max_singular_value: max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTrialSummary {
    pub direction: Direction,
    #[serde(rename = "M")]
    pub edge_nodes: usize,
    #[serde(rename = "N")]
    pub users: usize,
    pub r: usize,
    pub s: usize,
    #[serde(rename = "Gamma")]
    pub gamma: usize,
    pub u_s: usize,
    pub trials: usize,
    /// Trials in which every receiver's matrix had full rank.
    pub full_rank_count: usize,
    pub min_singular_value: f64,
    /// Smallest `σ_min / σ_max` seen over all trials and receivers.
    pub min_relative_singular_value: f64,
    /// Interference terms whose alignment was verified symbolically.
    pub aligned_terms: usize,
    pub containment_ok: bool,
}

#[allow(clippy::too_many_arguments)]
fn build_trial(
    direction: Direction,
    m: usize,
    n: usize,
    r: usize,
    s: usize,
    u_s: usize,
    law: FadeLaw,
    seed: u64,
    trial: u64,
) -> Result<BeamformerSet> {
    let mut rng = trial_rng(seed, trial);
    match direction {
        Direction::Uplink => {
            let ch = ExtendedChannel::draw(m, n, u_s, law, &mut rng);
            build_uplink_alignment(m, n, r, s, &ch)
        }
        Direction::Downlink => {
            let ch = ExtendedChannel::draw(n, m, u_s, law, &mut rng);
            let weights: Vec<Vec<f64>> = (0..n / m)
                .map(|_| (0..u_s).map(|_| uniform_weight(&mut rng)).collect())
                .collect();
            build_downlink_alignment(m, n, r, s, &ch, &weights)
        }
    }
}

/// Builds the scheme over `trials` independent draws and checks every
/// receiver's matrix. Trial `t` uses the random stream `(seed, t)`.
#[allow(clippy::too_many_arguments)]
pub fn rank_trials(
    direction: Direction,
    m: usize,
    n: usize,
    r: usize,
    s: usize,
    trials: usize,
    seed: u64,
    law: FadeLaw,
) -> Result<RankTrialSummary> {
    let ext = match direction {
        Direction::Uplink => uplink_extension(m, n, r, s)?,
        Direction::Downlink => downlink_extension(m, n, r, s)?,
    };
    let u_s = usable_extension(&ext)?;
    if trials == 0 {
        return Err(Error::param("trials", "≥ 1"));
    }

    let reports: Vec<Result<(Vec<RankReport>, usize, bool)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let scheme = build_trial(direction, m, n, r, s, u_s, law, seed, t)?;
            let terms = scheme.containment()?;
            let exact = terms
                .iter()
                .all(|c| c.columns.len() == scheme.vbar[c.message - 1].ncols());
            let ranks = (1..=scheme.receivers())
                .map(|i| verify_fullrank(&scheme, i))
                .collect::<Result<Vec<_>>>()?;
            Ok((ranks, terms.len(), exact))
        })
        .collect();

    let mut full = 0;
    let mut min_sv = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    let mut aligned = 0;
    let mut containment_ok = true;
    for rep in reports {
        let (ranks, terms, exact) = rep?;
        if ranks.iter().all(|x| x.ok) {
            full += 1;
        }
        for x in &ranks {
            min_sv = min_sv.min(x.min_singular_value);
            min_rel = min_rel.min(x.min_singular_value / x.max_singular_value);
        }
        aligned = terms;
        containment_ok &= exact;
    }
    Ok(RankTrialSummary {
        direction,
        edge_nodes: m,
        users: n,
        r,
        s,
        gamma: ext.gamma,
        u_s,
        trials,
        full_rank_count: full,
        min_singular_value: min_sv,
        min_relative_singular_value: min_rel,
        aligned_terms: aligned,
        containment_ok,
    })
}
