//! Network parameters, validation and the dimension adjustment rule.

use serde::{Deserialize, Serialize};

use crate::rational::{self, q, Rational};
use crate::{Error, Result};

/// How a task may be split across edge nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each task runs whole on every node it is assigned to.
    Binary,
    /// Tasks are cut into subtasks that run on distinct node subsets.
    Partial,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Binary => "binary",
            Mode::Partial => "partial",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" => Ok(Mode::Binary),
            "partial" => Ok(Mode::Partial),
            other => Err(Error::param(
                "mode",
                format!("one of binary|partial (got {other:?})"),
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// System parameters of an `M`-node, `N`-user edge network.
///
/// Sizes are in bits, powers are linear (noise power normalized to one),
/// bandwidths in Hz and CPU frequency in cycles per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub edge_nodes: usize,
    pub users: usize,
    pub input_bits: f64,
    pub output_bits: f64,
    pub uplink_power: f64,
    pub downlink_power: f64,
    pub uplink_bandwidth_hz: f64,
    pub downlink_bandwidth_hz: f64,
    pub cpu_hz: f64,
    pub cycles_per_byte: f64,
    pub mode: Mode,
    /// Scale parameter of the Rayleigh fading amplitude; `E|h|^2 = 2 sigma^2`.
    pub rayleigh_sigma: f64,
}

impl NetworkConfig {
    /// The four-node, four-user timing experiment: 512 KB inputs, 3x output,
    /// 10 dB, 10 MHz links, 4.1 GHz CPUs at 330 cycles per byte.
    pub fn four_node_experiment() -> Self {
        let input_bits = 512.0 * 1024.0 * 8.0;
        NetworkConfig {
            edge_nodes: 4,
            users: 4,
            input_bits,
            output_bits: 3.0 * input_bits,
            uplink_power: db_to_linear(10.0),
            downlink_power: db_to_linear(10.0),
            uplink_bandwidth_hz: 10e6,
            downlink_bandwidth_hz: 10e6,
            cpu_hz: 4.1e9,
            cycles_per_byte: 330.0,
            mode: Mode::Binary,
            rayleigh_sigma: 1.0,
        }
    }

    pub fn input_bytes(&self) -> f64 {
        self.input_bits / 8.0
    }
}

/// Returns the configuration unchanged when every invariant holds.
pub fn validate_config(cfg: NetworkConfig) -> Result<NetworkConfig> {
    if cfg.edge_nodes < 2 {
        return Err(Error::param("M", "≥ 2"));
    }
    if cfg.users < 2 {
        return Err(Error::param("N", "≥ 2"));
    }
    let positive = [
        ("L", cfg.input_bits),
        ("Ltilde", cfg.output_bits),
        ("Pu", cfg.uplink_power),
        ("Pd", cfg.downlink_power),
        ("Bu", cfg.uplink_bandwidth_hz),
        ("Bd", cfg.downlink_bandwidth_hz),
        ("f", cfg.cpu_hz),
        ("c", cfg.cycles_per_byte),
        ("rayleigh_sigma", cfg.rayleigh_sigma),
    ];
    for (name, value) in positive {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::param(name, "positive"));
        }
    }
    Ok(cfg)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Parses a data size such as `512KB`, `2 MB`, `4096` (bytes) or `100b`
/// (bits) and returns the size in bits. `K`, `M` and `G` are binary
/// multiples, so `512KB` is `512 * 1024 * 8` bits.
pub fn parse_size_bits(text: &str) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .parse()
        .map_err(|_| Error::Parse(format!("bad size {text:?}")))?;
    let unit = unit.trim();
    let bits = match unit {
        "b" | "bit" | "bits" => value,
        "" | "B" => value * 8.0,
        "KB" | "KiB" | "kB" => value * 1024.0 * 8.0,
        "MB" | "MiB" => value * 1024.0 * 1024.0 * 8.0,
        "GB" | "GiB" => value * 1024.0 * 1024.0 * 1024.0 * 8.0,
        _ => return Err(Error::Parse(format!("unknown size unit {unit:?}"))),
    };
    Ok(bits)
}

/// Effective dimensions after adding virtual users and idling nodes so that
/// the user count becomes a multiple of the node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustedDims {
    pub edge_nodes: usize,
    pub users: usize,
    /// Virtual users added.
    pub delta1: usize,
    /// Edge nodes deactivated.
    pub delta2: usize,
    /// `users / edge_nodes`.
    pub n1: usize,
}

/// Finds `(delta1, delta2)` with `(N + delta1) = n1 * (M - delta2)`.
///
/// Candidates are ranked by `|n1 - N/M|`, then `delta2`, then `delta1`, with
/// at least two nodes kept active. Because users can only be added and nodes
/// only removed, `n1` never falls below `N/M`; in practice the winner is
/// `n1 = ceil(N/M)` with no node deactivated.
pub fn adjust_dimensions(m: usize, n: usize) -> Result<AdjustedDims> {
    if m < 2 {
        return Err(Error::param("M", "≥ 2"));
    }
    if n < 2 {
        return Err(Error::param("N", "≥ 2"));
    }
    let ratio = q(n as i64, m as i64);
    let lo = rational::floor(&ratio).max(1) as usize;
    let hi = rational::ceil(&ratio) as usize + 1;

    let mut best: Option<(Rational, usize, usize, usize)> = None;
    for n1 in lo..=hi {
        for delta2 in 0..=(m - 2) {
            let active = m - delta2;
            let target = n1 * active;
            if target < n {
                continue;
            }
            let delta1 = target - n;
            let distance = rational::abs_diff(&rational::int(n1 as i64), &ratio);
            let key = (distance, delta2, delta1, n1);
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
    }
    // n1 = ceil(N/M) with delta2 = 0 is always feasible.
    let (_, delta2, delta1, n1) = best.expect("ceil(N/M) is always feasible");
    Ok(AdjustedDims {
        edge_nodes: m - delta2,
        users: n + delta1,
        delta1,
        delta2,
        n1,
    })
}

/// Flat key-value configuration document (TOML syntax).
///
/// Every key is optional; missing keys keep the defaults of the experiment
/// preset and command-line flags override whatever the file sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub mode: Option<Mode>,
    #[serde(rename = "L_bytes")]
    pub l_bytes: Option<SizeValue>,
    #[serde(rename = "Ltilde_ratio")]
    pub ltilde_ratio: Option<f64>,
    #[serde(rename = "Pu_dB")]
    pub pu_db: Option<f64>,
    #[serde(rename = "Pd_dB")]
    pub pd_db: Option<f64>,
    #[serde(rename = "Bu_Hz")]
    pub bu_hz: Option<f64>,
    #[serde(rename = "Bd_Hz")]
    pub bd_hz: Option<f64>,
    #[serde(rename = "f_Hz")]
    pub f_hz: Option<f64>,
    pub cycles_per_byte: Option<f64>,
    pub rayleigh_sigma: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

/// `L_bytes` may be a plain byte count or a size string like `"512KB"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SizeValue {
    Bytes(f64),
    Text(String),
}

impl SizeValue {
    pub fn bits(&self) -> Result<f64> {
        match self {
            SizeValue::Bytes(b) => Ok(b * 8.0),
            SizeValue::Text(t) => parse_size_bits(t),
        }
    }
}

impl FileConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Overlays the keys present in this document onto `base`.
    pub fn apply(&self, mut base: NetworkConfig) -> Result<NetworkConfig> {
        if let Some(m) = self.m {
            base.edge_nodes = m;
        }
        if let Some(n) = self.n {
            base.users = n;
        }
        if let Some(mode) = self.mode {
            base.mode = mode;
        }
        let ratio = base.output_bits / base.input_bits;
        if let Some(size) = &self.l_bytes {
            base.input_bits = size.bits()?;
        }
        base.output_bits = self.ltilde_ratio.unwrap_or(ratio) * base.input_bits;
        if let Some(db) = self.pu_db {
            base.uplink_power = db_to_linear(db);
        }
        if let Some(db) = self.pd_db {
            base.downlink_power = db_to_linear(db);
        }
        if let Some(v) = self.bu_hz {
            base.uplink_bandwidth_hz = v;
        }
        if let Some(v) = self.bd_hz {
            base.downlink_bandwidth_hz = v;
        }
        if let Some(v) = self.f_hz {
            base.cpu_hz = v;
        }
        if let Some(v) = self.cycles_per_byte {
            base.cycles_per_byte = v;
        }
        if let Some(v) = self.rayleigh_sigma {
            base.rayleigh_sigma = v;
        }
        Ok(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> NetworkConfig {
        NetworkConfig::four_node_experiment()
    }

    #[test]
    fn accepts_valid_config() {
        let cfg = base();
        assert_eq!(validate_config(cfg.clone()).unwrap(), cfg);
    }

    #[test]
    fn rejects_single_node() {
        let cfg = NetworkConfig {
            edge_nodes: 1,
            ..base()
        };
        let err = validate_config(cfg).unwrap_err();
        assert_eq!(err.to_string(), "M must be ≥ 2");
    }

    #[test]
    fn rejects_single_user() {
        let cfg = NetworkConfig { users: 1, ..base() };
        assert_eq!(
            validate_config(cfg).unwrap_err().to_string(),
            "N must be ≥ 2"
        );
    }

    #[test]
    fn rejects_zero_input() {
        let cfg = NetworkConfig {
            input_bits: 0.0,
            ..base()
        };
        assert_eq!(
            validate_config(cfg).unwrap_err().to_string(),
            "L must be positive"
        );
    }

    #[test]
    fn rejects_nan_power() {
        let cfg = NetworkConfig {
            downlink_power: f64::NAN,
            ..base()
        };
        assert!(validate_config(cfg).is_err());
    }

    #[test]
    fn rejects_unknown_mode() {
        assert!("hybrid".parse::<Mode>().is_err());
        assert_eq!("Partial".parse::<Mode>().unwrap(), Mode::Partial);
    }

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size_bits("512KB").unwrap(), 4_194_304.0);
        assert_eq!(parse_size_bits("1 MB").unwrap(), 8.0 * 1024.0 * 1024.0);
        assert_eq!(parse_size_bits("10").unwrap(), 80.0);
        assert_eq!(parse_size_bits("100b").unwrap(), 100.0);
        assert!(parse_size_bits("5 parsecs").is_err());
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-12);
        assert!((linear_to_db(1000.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn adjust_integer_ratios_untouched() {
        let a = adjust_dimensions(4, 4).unwrap();
        assert_eq!((a.delta1, a.delta2, a.n1), (0, 0, 1));
        let a = adjust_dimensions(4, 8).unwrap();
        assert_eq!((a.delta1, a.delta2, a.n1), (0, 0, 2));
    }

    #[test]
    fn adjust_rounds_up_when_needed() {
        // 5/4 rounds to 1, but 1 * (4 - d2) >= 5 has no solution.
        let a = adjust_dimensions(4, 5).unwrap();
        assert_eq!((a.n1, a.delta2, a.delta1), (2, 0, 3));
        assert_eq!((a.edge_nodes, a.users), (4, 8));

        let a = adjust_dimensions(4, 2).unwrap();
        assert_eq!((a.n1, a.delta2, a.delta1), (1, 0, 2));
    }

    #[test]
    fn adjust_rejects_bad_dims() {
        assert!(adjust_dimensions(1, 4).is_err());
        assert!(adjust_dimensions(4, 1).is_err());
    }

    #[test]
    fn file_config_overlay() {
        let doc = r#"
            M = 6
            N = 12
            mode = "partial"
            L_bytes = "1KB"
            Ltilde_ratio = 4.0
            Pu_dB = 20.0
            trials = 10
            seed = 3
        "#;
        let fc = FileConfig::from_toml_str(doc).unwrap();
        let cfg = fc.apply(base()).unwrap();
        assert_eq!(
            (cfg.edge_nodes, cfg.users, cfg.mode),
            (6, 12, Mode::Partial)
        );
        assert_eq!(cfg.input_bits, 8192.0);
        assert_eq!(cfg.output_bits, 4.0 * 8192.0);
        assert!((cfg.uplink_power - 100.0).abs() < 1e-9);
        assert_eq!(fc.trials, Some(10));

        let numeric = FileConfig::from_toml_str("L_bytes = 1024").unwrap();
        assert_eq!(numeric.apply(base()).unwrap().input_bits, 8192.0);
    }

    #[test]
    fn file_config_rejects_unknown_keys() {
        assert!(FileConfig::from_toml_str("colour = 3").is_err());
    }
}
