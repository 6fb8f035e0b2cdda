//! Link-level Monte Carlo simulation of one offloading round: computing,
//! TDMA multicast upload and cooperative download.
//!
//! Rates are in bit/s (`log2`). Following the closed forms, each rate is
//! averaged over channel draws first and the data size is then divided by
//! the averaged rate. All loads and power levels share the same draws, so
//! times are exactly monotone in power.

mod channel;
pub mod zf;

pub use channel::ChannelRealization;
pub use zf::{build_zf_plan, zf_precoders, ZfGroupPlan};

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::circular_assignment;
use crate::network::{db_to_linear, linear_to_db, NetworkConfig};
use crate::random::{complex_gaussian, trial_rng};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Trials evaluated per parallel batch before their sums are folded in.
const BATCH: usize = 4096;

/// `L_bytes N c r / (f M)`: each EN processes `N r / M` tasks.
pub fn computing_time(cfg: &NetworkConfig, r: f64) -> f64 {
    cfg.input_bytes() * cfg.users as f64 * cfg.cycles_per_byte * r
        / (cfg.cpu_hz * cfg.edge_nodes as f64)
}

/// Download scheme used at a given load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum DownlinkScheme {
    /// Each result sent alone by its single holder on a `1/N` share.
    Tdma,
    /// `N` slots of `r` cofactor-precoded streams.
    GroupZf { plan: ZfGroupPlan },
    /// Every EN holds every result: adjugate precoding to all users at once.
    FullZf,
}

impl DownlinkScheme {
    pub fn name(&self) -> &'static str {
        match self {
            DownlinkScheme::Tdma => "tdma",
            DownlinkScheme::GroupZf { .. } => "group-zf",
            DownlinkScheme::FullZf => "full-zf",
        }
    }

    /// Pieces each result is cut into.
    pub fn pieces(&self) -> usize {
        match self {
            DownlinkScheme::GroupZf { plan } => plan.r,
            _ => 1,
        }
    }
}

pub fn downlink_scheme(m: usize, n: usize, r: usize) -> Result<DownlinkScheme> {
    circular_assignment(m, n, r)?;
    if r == 1 {
        Ok(DownlinkScheme::Tdma)
    } else if r == m && n == m {
        Ok(DownlinkScheme::FullZf)
    } else {
        Ok(DownlinkScheme::GroupZf {
            plan: build_zf_plan(m, n, r)?,
        })
    }
}

/// Per-draw quantities for one load: effective SNR per unit transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    /// `min_i |h_{i1}|^2` over user 1's multicast targets.
    pub uplink: f64,
    /// One entry per piece of user 1's result.
    pub downlink: Vec<f64>,
    /// Worst interference-to-signal ratio of the zero-forcing precoders.
    pub residual: f64,
}

/// Load-specific structure shared by every draw.
#[derive(Debug, Clone)]
pub struct LoadPlan {
    pub r: usize,
    pub targets: Vec<usize>,
    pub holder: usize,
    pub scheme: DownlinkScheme,
}

impl LoadPlan {
    pub fn new(m: usize, n: usize, r: usize) -> Result<Self> {
        let holders = circular_assignment(m, n, r)?.task_holders();
        Ok(LoadPlan {
            r,
            targets: holders[0].clone(),
            holder: holders[0][0],
            scheme: downlink_scheme(m, n, r)?,
        })
    }

    pub fn gains(&self, draw: &ChannelRealization) -> Result<LinkGains> {
        let uplink = self
            .targets
            .iter()
            .map(|&i| draw.uplink(i, 1).norm_sqr())
            .fold(f64::INFINITY, f64::min);
        let m = draw.h.nrows() as f64;
        let (downlink, residual) = match &self.scheme {
            DownlinkScheme::Tdma => (vec![draw.downlink(1, self.holder).norm_sqr()], 0.0),
            DownlinkScheme::FullZf => (vec![zf::full_zf_snr(&draw.g, m)?], 0.0),
            DownlinkScheme::GroupZf { plan } => {
                // Unit total power; the transmit power scales every SNR alike.
                let pre = zf::normalized_precoders(&draw.g, plan, m)?;
                let mut gains = vec![0.0; plan.r];
                for (members, streams) in plan.groups.iter().zip(&pre) {
                    for (sub, stream) in members.iter().zip(streams) {
                        if sub.user == 1 {
                            gains[sub.k - 1] = zf::received(&draw.g, stream, 1).norm_sqr();
                        }
                    }
                }
                (gains, zf::zf_residual(&draw.g, plan, &pre))
            }
        };
        Ok(LinkGains {
            uplink,
            downlink,
            residual,
        })
    }

    fn downlink_share(&self, n: usize) -> f64 {
        match self.scheme {
            DownlinkScheme::FullZf => 1.0,
            _ => 1.0 / n as f64,
        }
    }
}

/// Draws a realization, redrawing in the probability-zero event that a
/// zero-forcing block is singular.
fn draw_usable(
    cfg: &NetworkConfig,
    plans: &[LoadPlan],
    seed: u64,
    trial: u64,
) -> Result<(ChannelRealization, Vec<LinkGains>)> {
    let mut rng = trial_rng(seed, trial);
    for _ in 0..64 {
        let draw = ChannelRealization::draw(
            cfg.edge_nodes,
            cfg.users,
            cfg.rayleigh_sigma,
            &mut rng,
            trial,
        );
        match plans
            .iter()
            .map(|p| p.gains(&draw))
            .collect::<Result<Vec<_>>>()
        {
            Ok(g) => return Ok((draw, g)),
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Degenerate(format!(
        "trial {trial}: repeated singular draws"
    )))
}

fn rate(share: f64, bandwidth: f64, snr: f64) -> f64 {
    share * bandwidth * (1.0 + snr).log2()
}

/// `L / E[(1/N) B_u log2(1 + min_i |h_{i1}|^2 P_u)]` over `draws`.
pub fn uplink_time_multicast(
    draws: &[ChannelRealization],
    cfg: &NetworkConfig,
    r: usize,
) -> Result<f64> {
    let plan = LoadPlan::new(cfg.edge_nodes, cfg.users, r)?;
    let share = 1.0 / cfg.users as f64;
    let mut sum = 0.0;
    for d in draws {
        sum += rate(
            share,
            cfg.uplink_bandwidth_hz,
            plan.gains(d)?.uplink * cfg.uplink_power,
        );
    }
    Ok(cfg.input_bits / (sum / draws.len() as f64))
}

/// Download time of `output_bits` per user; with `r` pieces, the slowest
/// piece's `(output_bits / r) / E[rate]` decides.
pub fn downlink_time(
    draws: &[ChannelRealization],
    cfg: &NetworkConfig,
    r: usize,
    output_bits: f64,
) -> Result<f64> {
    let plan = LoadPlan::new(cfg.edge_nodes, cfg.users, r)?;
    let share = plan.downlink_share(cfg.users);
    let pieces = plan.scheme.pieces();
    let mut sums = vec![0.0; pieces];
    for d in draws {
        let g = plan.gains(d)?;
        for (s, x) in sums.iter_mut().zip(&g.downlink) {
            *s += rate(share, cfg.downlink_bandwidth_hz, x * cfg.downlink_power);
        }
    }
    Ok(sums
        .iter()
        .map(|s| (output_bits / pieces as f64) / (s / draws.len() as f64))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Sums in trial order: bit-identical output for any thread count.
    #[default]
    Sequential,
    /// Tree reduction across threads; equal up to rounding.
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub config: NetworkConfig,
    pub loads: Vec<usize>,
    /// Power levels applied to both directions. Empty: use the config's.
    pub power_db: Vec<f64>,
    /// Output-to-input size ratios. Empty: use the config's.
    pub ltilde_ratios: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub reduction: Reduction,
}

impl SimSpec {
    /// The four-node preset swept over r ∈ {1, 3, 4}, 10/20/30 dB and L̃ ∈ {3L, 4L}.
    pub fn four_node_sweep(trials: usize, seed: u64) -> Self {
        SimSpec {
            config: NetworkConfig::four_node_experiment(),
            loads: vec![1, 3, 4],
            power_db: vec![10.0, 20.0, 30.0],
            ltilde_ratios: vec![3.0, 4.0],
            trials,
            seed,
            reduction: Reduction::Sequential,
        }
    }

    fn power_levels(&self) -> Vec<(f64, f64)> {
        if self.power_db.is_empty() {
            vec![(
                linear_to_db(self.config.uplink_power),
                linear_to_db(self.config.downlink_power),
            )]
        } else {
            self.power_db.iter().map(|&p| (p, p)).collect()
        }
    }

    fn ratios(&self) -> Vec<f64> {
        if self.ltilde_ratios.is_empty() {
            vec![self.config.output_bits / self.config.input_bits]
        } else {
            self.ltilde_ratios.clone()
        }
    }
}

/// Running first and second moments of every rate sample.
#[derive(Debug, Clone, PartialEq)]
struct Moments {
    sum: Vec<f64>,
    sq: Vec<f64>,
    residual: f64,
}

impl Moments {
    fn zero(len: usize) -> Self {
        Moments {
            sum: vec![0.0; len],
            sq: vec![0.0; len],
            residual: 0.0,
        }
    }

    fn add_sample(&mut self, x: &[f64], residual: f64) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sq.iter_mut()).zip(x) {
            *s += v;
            *q += v * v;
        }
        self.residual = self.residual.max(residual);
    }

    fn merge(mut self, other: Moments) -> Moments {
        for (a, b) in self.sum.iter_mut().zip(other.sum) {
            *a += b;
        }
        for (a, b) in self.sq.iter_mut().zip(other.sq) {
            *a += b;
        }
        self.residual = self.residual.max(other.residual);
        self
    }
}

/// One (load, power, output size) entry of the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimCell {
    pub r: usize,
    pub uplink_power_db: f64,
    pub downlink_power_db: f64,
    pub ltilde_ratio: f64,
    pub computing_time: f64,
    pub upload_time: f64,
    pub upload_ci: f64,
    pub download_time: f64,
    pub download_ci: f64,
    pub total_time: f64,
    pub total_ci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadSummary {
    pub r: usize,
    pub scheme: &'static str,
    pub pieces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    #[serde(rename = "M")]
    pub edge_nodes: usize,
    #[serde(rename = "N")]
    pub users: usize,
    pub input_bits: f64,
    pub uplink_bandwidth_hz: f64,
    pub downlink_bandwidth_hz: f64,
    pub cpu_hz: f64,
    pub cycles_per_byte: f64,
    pub rayleigh_sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub reduction: Reduction,
    pub loads: Vec<LoadSummary>,
    pub cells: Vec<SimCell>,
    /// Worst zero-forcing interference-to-signal ratio over all draws.
    pub max_zf_residual: f64,
}

impl SimReport {
    pub fn cell(&self, r: usize, power_db: f64, ltilde_ratio: f64) -> Option<&SimCell> {
        self.cells
            .iter()
            .find(|c| c.r == r && c.downlink_power_db == power_db && c.ltilde_ratio == ltilde_ratio)
    }

    /// Relative drop of the total time going from load `from` to load `to`.
    pub fn reduction(
        &self,
        from: usize,
        to: usize,
        power_db: f64,
        ltilde_ratio: f64,
    ) -> Option<f64> {
        let a = self.cell(from, power_db, ltilde_ratio)?.total_time;
        let b = self.cell(to, power_db, ltilde_ratio)?.total_time;
        Some((a - b) / a)
    }

    pub const CSV_HEADER: &'static str = "r,pu_db,pd_db,ltilde_ratio,computing_time,upload_time,upload_ci,download_time,download_ci,total_time,total_ci";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
                c.r,
                c.uplink_power_db,
                c.downlink_power_db,
                c.ltilde_ratio,
                c.computing_time,
                c.upload_time,
                c.upload_ci,
                c.download_time,
                c.download_ci,
                c.total_time,
                c.total_ci
            ));
        }
        out
    }
}

/// `X / mean` and its delta-method 95% half-width.
fn time_from_rate(bits: f64, sum: f64, sq: f64, trials: usize) -> (f64, f64) {
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 {
        ((sq - sum * sum / t) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    let half = Z95 * (var / t).sqrt();
    (bits / mean, bits * half / (mean * mean))
}

/// Runs the experiment. Output depends only on `spec`; trial `t` draws
/// from the random stream `(seed, t)`.
pub fn run_monte_carlo(spec: &SimSpec) -> Result<SimReport> {
    let cfg = crate::network::validate_config(spec.config.clone())?;
    if spec.trials == 0 {
        return Err(Error::param("trials", "≥ 1"));
    }
    if spec.loads.is_empty() {
        return Err(Error::param("loads", "non-empty"));
    }
    let (m, n) = (cfg.edge_nodes, cfg.users);
    let plans = spec
        .loads
        .iter()
        .map(|&r| LoadPlan::new(m, n, r))
        .collect::<Result<Vec<_>>>()?;
    let powers = spec.power_levels();
    let ratios = spec.ratios();

    // Sample layout: for each load, for each power level, the uplink rate
    // followed by one downlink rate per piece.
    let stride: Vec<usize> = plans.iter().map(|p| 1 + p.scheme.pieces()).collect();
    let width: usize = stride.iter().sum::<usize>() * powers.len();
    let sample = |trial: u64| -> Result<(Vec<f64>, f64)> {
        let (_, gains) = draw_usable(&cfg, &plans, spec.seed, trial)?;
        let mut out = Vec::with_capacity(width);
        let mut residual: f64 = 0.0;
        for (plan, g) in plans.iter().zip(&gains) {
            residual = residual.max(g.residual);
            let share = plan.downlink_share(n);
            for &(pu, pd) in &powers {
                out.push(rate(
                    1.0 / n as f64,
                    cfg.uplink_bandwidth_hz,
                    g.uplink * db_to_linear(pu),
                ));
                for x in &g.downlink {
                    out.push(rate(share, cfg.downlink_bandwidth_hz, x * db_to_linear(pd)));
                }
            }
        }
        Ok((out, residual))
    };

    let total = spec.trials as u64;
    let moments = match spec.reduction {
        Reduction::Sequential => {
            let mut acc = Moments::zero(width);
            let mut start = 0u64;
            while start < total {
                let end = (start + BATCH as u64).min(total);
                let batch: Vec<(Vec<f64>, f64)> = (start..end)
                    .into_par_iter()
                    .map(sample)
                    .collect::<Result<_>>()?;
                for (x, res) in &batch {
                    acc.add_sample(x, *res);
                }
                start = end;
            }
            acc
        }
        Reduction::Parallel => (0..total)
            .into_par_iter()
            .try_fold(
                || Moments::zero(width),
                |mut acc, t| {
                    let (x, res) = sample(t)?;
                    acc.add_sample(&x, res);
                    Ok::<_, Error>(acc)
                },
            )
            .try_reduce(|| Moments::zero(width), |a, b| Ok(a.merge(b)))?,
    };

    let mut cells = Vec::new();
    let mut offset = 0;
    for (plan, &st) in plans.iter().zip(&stride) {
        let tc = computing_time(&cfg, plan.r as f64);
        let pieces = plan.scheme.pieces();
        for &(pu, pd) in &powers {
            let (tu, hu) = time_from_rate(
                cfg.input_bits,
                moments.sum[offset],
                moments.sq[offset],
                spec.trials,
            );
            for &ratio in &ratios {
                let piece_bits = ratio * cfg.input_bits / pieces as f64;
                let (td, hd) = (0..pieces)
                    .map(|k| {
                        let i = offset + 1 + k;
                        time_from_rate(piece_bits, moments.sum[i], moments.sq[i], spec.trials)
                    })
                    .fold((0.0, 0.0), |best, x| if x.0 > best.0 { x } else { best });
                cells.push(SimCell {
                    r: plan.r,
                    uplink_power_db: pu,
                    downlink_power_db: pd,
                    ltilde_ratio: ratio,
                    computing_time: tc,
                    upload_time: tu,
                    upload_ci: hu,
                    download_time: td,
                    download_ci: hd,
                    total_time: tc + tu + td,
                    total_ci: (hu * hu + hd * hd).sqrt(),
                });
            }
            offset += st;
        }
    }

    Ok(SimReport {
        edge_nodes: m,
        users: n,
        input_bits: cfg.input_bits,
        uplink_bandwidth_hz: cfg.uplink_bandwidth_hz,
        downlink_bandwidth_hz: cfg.downlink_bandwidth_hz,
        cpu_hz: cfg.cpu_hz,
        cycles_per_byte: cfg.cycles_per_byte,
        rayleigh_sigma: cfg.rayleigh_sigma,
        trials: spec.trials,
        seed: spec.seed,
        reduction: spec.reduction,
        loads: plans
            .iter()
            .map(|p| LoadSummary {
                r: p.r,
                scheme: p.scheme.name(),
                pieces: p.scheme.pieces(),
            })
            .collect(),
        cells,
        max_zf_residual: moments.residual,
    })
}

/// Monte Carlo estimate of `E[log2(1 + P |h|^2)]`, `h` unit-variance
/// complex Gaussian (so `|h|^2 ~ Exp(1)`).
pub fn mean_log2_rate(power: f64, trials: usize, seed: u64) -> f64 {
    let chunks = trials.div_ceil(BATCH);
    let partial: Vec<f64> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = trial_rng(seed, c);
            let len = BATCH.min(trials - c as usize * BATCH);
            (0..len)
                .map(|_| (1.0 + power * complex_gaussian(&mut rng, 1.0).norm_sqr()).log2())
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum::<f64>() / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::four_node_experiment()
    }

    #[test]
    fn computing_times() {
        let c = cfg();
        assert!((computing_time(&c, 1.0) - 0.0422).abs() < 1e-3);
        assert!((computing_time(&c, 3.0) - 0.1266).abs() < 1e-3);
        assert_eq!(computing_time(&c, 0.0), 0.0);
    }

    #[test]
    fn unit_uplink_case() {
        let c = NetworkConfig {
            edge_nodes: 1,
            users: 1,
            input_bits: 1.0,
            uplink_power: 1.0,
            uplink_bandwidth_hz: 1.0,
            ..cfg()
        };
        let plan = LoadPlan {
            r: 1,
            targets: vec![1],
            holder: 1,
            scheme: DownlinkScheme::Tdma,
        };
        let draw = ChannelRealization {
            h: nalgebra::DMatrix::from_element(1, 1, num_complex::Complex64::new(1.0, 0.0)),
            g: nalgebra::DMatrix::from_element(1, 1, num_complex::Complex64::new(1.0, 0.0)),
            id: 0,
        };
        let g = plan.gains(&draw).unwrap();
        let t = c.input_bits
            / rate(
                1.0 / c.users as f64,
                c.uplink_bandwidth_hz,
                g.uplink * c.uplink_power,
            );
        assert_eq!(t, 1.0);
    }

    #[test]
    fn schemes_by_load() {
        assert_eq!(downlink_scheme(4, 4, 1).unwrap(), DownlinkScheme::Tdma);
        assert_eq!(downlink_scheme(4, 4, 4).unwrap(), DownlinkScheme::FullZf);
        assert_eq!(downlink_scheme(4, 4, 3).unwrap().name(), "group-zf");
        assert_eq!(downlink_scheme(2, 4, 2).unwrap().name(), "group-zf");
    }

    #[test]
    fn report_is_deterministic_and_additive() {
        let spec = SimSpec::four_node_sweep(50, 11);
        let a = run_monte_carlo(&spec).unwrap();
        let b = run_monte_carlo(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 3 * 3 * 2);
        for c in &a.cells {
            assert_eq!(
                c.total_time,
                c.computing_time + c.upload_time + c.download_time
            );
        }
        assert!(a.max_zf_residual < 1e-9);
    }

    #[test]
    fn parallel_reduction_agrees() {
        let mut spec = SimSpec::four_node_sweep(300, 2);
        let seq = run_monte_carlo(&spec).unwrap();
        spec.reduction = Reduction::Parallel;
        let par = run_monte_carlo(&spec).unwrap();
        for (a, b) in seq.cells.iter().zip(&par.cells) {
            assert!((a.total_time - b.total_time).abs() < 1e-9 * a.total_time);
        }
    }

    #[test]
    fn free_functions_match_simulator() {
        let c = cfg();
        let mut rng = trial_rng(5, 0);
        let draws: Vec<_> = (0..200)
            .map(|i| ChannelRealization::draw(4, 4, 1.0, &mut rng, i))
            .collect();
        let tu = uplink_time_multicast(&draws, &c, 3).unwrap();
        let td = downlink_time(&draws, &c, 3, c.output_bits).unwrap();
        assert!(tu > 0.0 && td > 0.0);
        let td1 = downlink_time(&draws, &c, 1, c.output_bits).unwrap();
        let td4 = downlink_time(&draws, &c, 4, c.output_bits).unwrap();
        assert!(td4 < td1);
    }
}
