//! Per-receiver degrees of freedom, and finite-extension checks of the
//! alignment and neutralization schemes that achieve them.

mod alignment;
mod monomial;
mod neutralization;

pub use alignment::{
    build_downlink_alignment, build_uplink_alignment, rank_trials, verify_fullrank, BeamformerSet,
    Containment, ExtendedChannel, RankReport, RankTrialSummary, RANK_TOLERANCE,
};
pub use monomial::ExponentSpace;
pub use neutralization::{neutralization_groups, neutralization_plan, Stream, StreamGroup};

use serde::{Deserialize, Serialize};

use crate::rational::{self, int, q, Rational};
use crate::{Error, Result};

/// Largest extended dimension the constructions will materialize.
pub const MAX_EXTENSION: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uplink,
    Downlink,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Uplink => "uplink",
            Direction::Downlink => "downlink",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uplink" | "up" => Ok(Direction::Uplink),
            "downlink" | "down" => Ok(Direction::Downlink),
            other => Err(Error::param(
                "direction",
                format!("uplink or downlink (got {other:?})"),
            )),
        }
    }
}

fn check_circular(m: usize, n: usize, r: usize) -> Result<()> {
    if m < 2 || n < 2 {
        return Err(Error::param("M and N", "≥ 2"));
    }
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

/// `max{N r / (N r + M), r / M}`: alignment versus TDMA on the circular
/// interference-multicast uplink.
pub fn dof_uplink_circular(m: usize, n: usize, r: usize) -> Result<Rational> {
    check_circular(m, n, r)?;
    let nr = (n * r) as i64;
    Ok(rational::max(q(nr, nr + m as i64), q(r as i64, m as i64)))
}

/// `max{M / (N + M), r / N}`: alignment versus neutralization on the
/// circular cooperative downlink.
pub fn dof_downlink_circular(m: usize, n: usize, r: usize) -> Result<Rational> {
    check_circular(m, n, r)?;
    Ok(rational::max(
        q(m as i64, (n + m) as i64),
        q(r as i64, n as i64),
    ))
}

fn check_load(m: usize, n: usize, r: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::param("M and N", "positive"));
    }
    if r < 1 || r > m {
        return Err(Error::LoadOutOfRange {
            r: r.to_string(),
            max: m,
        });
    }
    Ok(())
}

/// `N r / (N r + M - r)` for the X-multicast uplink.
pub fn dof_x_multicast(m: usize, n: usize, r: usize) -> Result<Rational> {
    check_load(m, n, r)?;
    let nr = (n * r) as i64;
    Ok(q(nr, nr + m as i64 - r as i64))
}

/// `min{M / (M + N - r), 1}` for the cooperative X downlink.
pub fn dof_coop_x(m: usize, n: usize, r: usize) -> Result<Rational> {
    check_load(m, n, r)?;
    Ok(rational::min(
        q(m as i64, (m + n) as i64 - r as i64),
        int(1),
    ))
}

/// Dimensions of an `s`-parameter symbol extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymbolExtension {
    pub direction: Direction,
    pub s: usize,
    /// Number of channel links whose powers index the beamformers.
    #[serde(rename = "Gamma")]
    pub gamma: usize,
    /// Messages decoded per receiver (uplink) or held per transmitter
    /// (downlink).
    pub n: usize,
    pub u_s: u128,
}

impl SymbolExtension {
    /// Columns of each transmit beamformer, `s^Γ`.
    pub fn streams(&self) -> u128 {
        (self.s as u128).pow(self.gamma as u32)
    }

    /// Columns of each alignment target, `(s+1)^Γ`.
    pub fn target_dim(&self) -> u128 {
        (self.s as u128 + 1).pow(self.gamma as u32)
    }

    /// Fraction of the extended dimension carrying desired streams.
    pub fn ratio(&self) -> Result<Rational> {
        let desired = match self.direction {
            Direction::Uplink => self.n as u128 * self.streams(),
            Direction::Downlink => self.streams(),
        };
        to_rational(desired, self.u_s).ok_or(Error::ExtensionTooLarge {
            u_s: self.u_s,
            cap: i64::MAX as usize,
        })
    }

    /// The ratio's value as `s` grows without bound.
    pub fn limit(&self) -> Rational {
        let n = self.n as i64;
        match self.direction {
            Direction::Uplink => q(n, n + 1),
            Direction::Downlink => q(1, n + 1),
        }
    }
}

fn to_rational(num: u128, den: u128) -> Option<Rational> {
    // Reduce in u128 first so that large extensions still fit in i64.
    let g = num_integer::gcd(num, den);
    Some(q(
        i64::try_from(num / g).ok()?,
        i64::try_from(den / g).ok()?,
    ))
}

fn checked_pow(base: u128, exp: usize) -> Result<u128> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or(Error::ExtensionTooLarge {
            u_s: u128::MAX,
            cap: MAX_EXTENSION,
        })
}

/// Uplink extension: `Γ = M (N - n)`, `u_s = n s^Γ + (s+1)^Γ`, `n = N r / M`.
pub fn uplink_extension(m: usize, n: usize, r: usize, s: usize) -> Result<SymbolExtension> {
    check_circular(m, n, r)?;
    if s < 1 {
        return Err(Error::param("s", "≥ 1"));
    }
    let per = n * r / m;
    if per == n {
        return Err(Error::Degenerate(
            "every receiver wants every message (Γ = 0); TDMA is optimal".into(),
        ));
    }
    let gamma = m * (n - per);
    let u_s = (per as u128)
        .checked_mul(checked_pow(s as u128, gamma)?)
        .and_then(|a| a.checked_add(checked_pow(s as u128 + 1, gamma).ok()?))
        .ok_or(Error::ExtensionTooLarge {
            u_s: u128::MAX,
            cap: MAX_EXTENSION,
        })?;
    Ok(SymbolExtension {
        direction: Direction::Uplink,
        s,
        gamma,
        n: per,
        u_s,
    })
}

/// Downlink extension for `r = 1`: `Γ = M (N - 1)`, `u_s = s^Γ + n (s+1)^Γ`,
/// `n = N / M`.
pub fn downlink_extension(m: usize, n: usize, r: usize, s: usize) -> Result<SymbolExtension> {
    check_circular(m, n, r)?;
    if r != 1 {
        return Err(Error::Unsupported(
            "downlink alignment is constructed for r = 1; larger loads use neutralization".into(),
        ));
    }
    if s < 1 {
        return Err(Error::param("s", "≥ 1"));
    }
    let per = n / m;
    let gamma = m * (n - 1);
    let u_s = checked_pow(s as u128, gamma)?
        .checked_add(
            (per as u128)
                .checked_mul(checked_pow(s as u128 + 1, gamma)?)
                .ok_or(Error::ExtensionTooLarge {
                    u_s: u128::MAX,
                    cap: MAX_EXTENSION,
                })?,
        )
        .ok_or(Error::ExtensionTooLarge {
            u_s: u128::MAX,
            cap: MAX_EXTENSION,
        })?;
    Ok(SymbolExtension {
        direction: Direction::Downlink,
        s,
        gamma,
        n: per,
        u_s,
    })
}

pub fn extension(
    direction: Direction,
    m: usize,
    n: usize,
    r: usize,
    s: usize,
) -> Result<SymbolExtension> {
    match direction {
        Direction::Uplink => uplink_extension(m, n, r, s),
        Direction::Downlink => downlink_extension(m, n, r, s),
    }
}

/// Achieved per-receiver DoF at finite `s`: `n s^Γ / u_s` (uplink) or
/// `s^Γ / u_s` (downlink).
pub fn dof_ratio_at(
    s: usize,
    m: usize,
    n: usize,
    r: usize,
    direction: Direction,
) -> Result<Rational> {
    extension(direction, m, n, r, s)?.ratio()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uplink_formula() {
        assert_eq!(dof_uplink_circular(4, 4, 3).unwrap(), q(3, 4));
        // Nr/(Nr+M) = 4/8 beats r/M = 1/4; consistent with NULT = (Nr/M)/DoF = 2.
        assert_eq!(dof_uplink_circular(4, 4, 1).unwrap(), q(1, 2));
        assert_eq!(dof_uplink_circular(2, 2, 2).unwrap(), int(1));
        assert!(dof_uplink_circular(4, 6, 1).is_err());
    }

    #[test]
    fn downlink_formula() {
        assert_eq!(dof_downlink_circular(4, 4, 3).unwrap(), q(3, 4));
        assert_eq!(dof_downlink_circular(4, 4, 1).unwrap(), q(1, 2));
        assert_eq!(dof_downlink_circular(2, 4, 2).unwrap(), q(1, 2));
    }

    #[test]
    fn x_channel_formulas() {
        assert_eq!(dof_x_multicast(3, 3, 1).unwrap(), q(3, 5));
        assert_eq!(dof_coop_x(3, 3, 3).unwrap(), int(1));
        assert_eq!(dof_coop_x(4, 4, 2).unwrap(), q(2, 3));
    }

    #[test]
    fn extension_dimensions() {
        let e = uplink_extension(2, 2, 1, 1).unwrap();
        assert_eq!((e.gamma, e.u_s, e.streams(), e.target_dim()), (2, 5, 1, 4));
        assert_eq!(uplink_extension(2, 2, 1, 2).unwrap().u_s, 13);
        let e = uplink_extension(2, 4, 1, 1).unwrap();
        assert_eq!((e.n, e.gamma, e.u_s), (2, 4, 18));
        let e = uplink_extension(3, 3, 1, 1).unwrap();
        assert_eq!((e.gamma, e.u_s), (6, 65));
        assert!(matches!(
            uplink_extension(2, 2, 2, 1),
            Err(Error::Degenerate(_))
        ));
        assert_eq!(downlink_extension(2, 2, 1, 1).unwrap().u_s, 5);
        assert!(downlink_extension(2, 2, 2, 1).is_err());
    }

    #[test]
    fn finite_ratios() {
        assert_eq!(
            dof_ratio_at(1, 2, 2, 1, Direction::Uplink).unwrap(),
            q(1, 5)
        );
        assert_eq!(
            dof_ratio_at(1, 2, 2, 1, Direction::Downlink).unwrap(),
            q(1, 5)
        );
        let e = downlink_extension(2, 2, 1, 1).unwrap();
        assert_eq!(e.limit(), q(1, 2));
    }
}
