//! Fisher, sum-of-squares and Cauchy combinations of the mean and
//! covariance tests.
//!
//! Bare p-values are floored at [`P_FLOOR`] before any logarithm or
//! tangent. When the combination starts from the standardized statistics,
//! the normal tails are taken in log space and the complementary tail is
//! computed directly, so neither an underflowing `p` nor a `p` rounding to
//! 1 loses information.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::probdist::{
    cauchy_upper, cauchy_upper_quantile, chisq_ln_upper, chisq_upper, chisq_upper_quantile, normal_ln_sf,
    normal_sf, ChiSqDf,
};

/// Smallest p-value fed to `ln` or to the Cauchy transform.
pub const P_FLOOR: f64 = 1e-300;

/// Below this the Cauchy transform uses `1 / (pi p)` instead of the tangent.
const CAUCHY_SMALL_P: f64 = 1e-15;

/// A combined statistic and its null p-value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Combination {
    pub stat: f64,
    pub p_value: f64,
}

/// One component p-value with its complement and logarithm kept
/// separately accurate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentP {
    pub p: f64,
    pub ln_p: f64,
    /// `1 - p`.
    pub q: f64,
}

impl ComponentP {
    /// From a plain p-value.
    pub fn from_p(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(p));
        }
        Ok(Self {
            p,
            ln_p: p.max(P_FLOOR).ln(),
            q: 1.0 - p,
        })
    }

    /// Upper standard-normal tail of a standardized statistic. The logarithm
    /// is taken from the log-tail directly and is not floored, so it stays
    /// informative after `p` itself underflows.
    pub fn from_normal(z: f64) -> Self {
        Self {
            p: normal_sf(z),
            ln_p: normal_ln_sf(z),
            q: normal_sf(-z),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(p))
    }
}

/// `J = -2 ln p_m - 2 ln p_c`, referred to chi-squared with 4 degrees of
/// freedom.
pub fn fisher_combine(p_m: f64, p_c: f64) -> Result<Combination> {
    check_p(p_m)?;
    check_p(p_c)?;
    Ok(fisher_from_ln(p_m.max(P_FLOOR).ln(), p_c.max(P_FLOOR).ln()))
}

/// Fisher combination from log p-values.
pub fn fisher_from_ln(ln_p_m: f64, ln_p_c: f64) -> Combination {
    let stat = (-2.0 * ln_p_m - 2.0 * ln_p_c).max(0.0);
    Combination {
        stat,
        p_value: chisq_upper(stat, ChiSqDf::Four),
    }
}

/// `S = M_PE^2 + T_PE^2`, referred to chi-squared with 2 degrees of freedom.
pub fn chisq_sum_combine(m_pe: f64, t_pe: f64) -> Combination {
    let stat = m_pe * m_pe + t_pe * t_pe;
    Combination {
        stat,
        p_value: chisq_upper(stat, ChiSqDf::Two),
    }
}

/// `tan((0.5 - p) pi)` given `p` and `q = 1 - p`, evaluated as `cot(pi p)`
/// on whichever side is smaller.
pub fn cauchy_transform(p: f64, q: f64) -> f64 {
    fn cot_pi(p: f64) -> f64 {
        let p = p.max(P_FLOOR);
        if p < CAUCHY_SMALL_P {
            1.0 / (PI * p)
        } else {
            1.0 / (PI * p).tan()
        }
    }
    if p == q {
        0.0
    } else if p < q {
        cot_pi(p)
    } else {
        -cot_pi(q)
    }
}

/// `C = tan((0.5 - p_m) pi) / 2 + tan((0.5 - p_c) pi) / 2`, referred to the
/// standard Cauchy law.
pub fn cauchy_combine(p_m: f64, p_c: f64) -> Result<Combination> {
    Ok(cauchy_from_components(&ComponentP::from_p(p_m)?, &ComponentP::from_p(p_c)?))
}

pub fn cauchy_from_components(m: &ComponentP, c: &ComponentP) -> Combination {
    let stat = 0.5 * cauchy_transform(m.p, m.q) + 0.5 * cauchy_transform(c.p, c.q);
    Combination {
        stat,
        p_value: cauchy_upper(stat),
    }
}

/// Rejection cut-offs of the three combined tests at one level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CombinationQuantiles {
    pub alpha: f64,
    /// Upper-alpha chi-squared(4) quantile for `J`.
    pub q_alpha: f64,
    /// Upper-alpha chi-squared(2) quantile for `S`.
    pub c_alpha: f64,
    /// Upper-alpha standard Cauchy quantile for `C`.
    pub k_alpha: f64,
}

impl CombinationQuantiles {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            q_alpha: chisq_upper_quantile(alpha, ChiSqDf::Four)?,
            c_alpha: chisq_upper_quantile(alpha, ChiSqDf::Two)?,
            k_alpha: cauchy_upper_quantile(alpha)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CombinedReport {
    pub p_m: f64,
    pub p_c: f64,
    pub ln_p_m: f64,
    pub ln_p_c: f64,
    pub j_stat: f64,
    pub j_p_value: f64,
    pub j_ln_p_value: f64,
    pub j_reject: bool,
    pub s_stat: f64,
    pub s_p_value: f64,
    pub s_ln_p_value: f64,
    pub s_reject: bool,
    pub c_stat: f64,
    pub c_p_value: f64,
    pub c_reject: bool,
    pub quantiles: CombinationQuantiles,
    pub p_floor: f64,
}

impl CombinedReport {
    fn assemble(m: ComponentP, c: ComponentP, s: Combination, quantiles: CombinationQuantiles) -> Self {
        let j = fisher_from_ln(m.ln_p, c.ln_p);
        let cc = cauchy_from_components(&m, &c);
        Self {
            p_m: m.p,
            p_c: c.p,
            ln_p_m: m.ln_p,
            ln_p_c: c.ln_p,
            j_stat: j.stat,
            j_p_value: j.p_value,
            j_ln_p_value: chisq_ln_upper(j.stat, ChiSqDf::Four),
            j_reject: j.stat >= quantiles.q_alpha,
            s_stat: s.stat,
            s_p_value: s.p_value,
            s_ln_p_value: chisq_ln_upper(s.stat, ChiSqDf::Two),
            s_reject: s.stat >= quantiles.c_alpha,
            c_stat: cc.stat,
            c_p_value: cc.p_value,
            c_reject: cc.stat >= quantiles.k_alpha,
            quantiles,
            p_floor: P_FLOOR,
        }
    }

    /// All three combinations from the power-enhanced statistics.
    pub fn from_statistics(m_pe: f64, t_pe: f64, quantiles: CombinationQuantiles) -> Self {
        Self::assemble(
            ComponentP::from_normal(m_pe),
            ComponentP::from_normal(t_pe),
            chisq_sum_combine(m_pe, t_pe),
            quantiles,
        )
    }

    /// `J` and `C` from bare p-values. `S` needs the statistics themselves,
    /// which are recovered as upper-normal quantiles of the p-values.
    pub fn from_p_values(p_m: f64, p_c: f64, quantiles: CombinationQuantiles) -> Result<Self> {
        let m = ComponentP::from_p(p_m)?;
        let c = ComponentP::from_p(p_c)?;
        let z = |p: f64| -> Result<f64> {
            Ok(match p {
                p if p <= 0.0 => f64::INFINITY,
                p if p >= 1.0 => f64::NEG_INFINITY,
                p => crate::probdist::normal_upper_quantile(p)?,
            })
        };
        let s = chisq_sum_combine(z(p_m)?, z(p_c)?);
        Ok(Self::assemble(m, c, s, quantiles))
    }
}
