//! Quadratic-form mean test with its power-enhancement component.
//!
//! `M = sum_i M_i`, where each `M_i` is the unbiased estimator of
//! `(mu_1i - mu_2i)^2` built from within- and between-group cross
//! products. Using `sum_{u != v} x_u x_v = (sum x)^2 - sum x^2` it collapses
//! to `M_i = (xbar - ybar)^2 - s1^2 / n1 - s2^2 / n2`, which is evaluated in
//! centred form so shifting both samples leaves it unchanged.

use std::f64::consts::SQRT_2;

use crate::cov_test::{scan_pairs, TraceEstimates};
use crate::data::{column_moments, TwoSampleData};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::probdist::{normal_ln_sf, normal_sf};
use crate::threshold::Threshold;
use crate::VAR_FLOOR;

/// Coordinate-wise piece of the mean statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalMean {
    pub m_i: f64,
    pub nu_hat_i: f64,
    /// `sqrt(2) M_i nu_hat_i^{-1/2} + 1`; NaN for degenerate coordinates.
    pub standardized: f64,
}

impl MarginalMean {
    /// Both group variances are zero, so `nu_hat_i = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.nu_hat_i.is_nan() || self.nu_hat_i <= 0.0
    }

    /// `M_i nu_hat_i^{-1/2}`.
    pub fn ratio(&self) -> f64 {
        self.m_i / self.nu_hat_i.sqrt()
    }
}

/// `M_i` and `nu_hat_i` from the two samples of one coordinate. Needs at
/// least two observations per group.
pub fn marginal_mean(x: &[f64], y: &[f64]) -> MarginalMean {
    let (n1, n2) = (x.len(), y.len());
    let (_, _, mx, vx) = column_moments(x.iter().copied(), n1);
    let (_, _, my, vy) = column_moments(y.iter().copied(), n2);
    let (f1, f2) = (n1 as f64, n2 as f64);
    let d = mx - my;
    let m_i = d * d - vx / f1 - vy / f2;
    let nu_hat_i = 2.0 * vx * vx / (f1 * (f1 - 1.0)) + 2.0 * vy * vy / (f2 * (f2 - 1.0)) + 4.0 * vx * vy / (f1 * f2);
    let standardized = if nu_hat_i > 0.0 {
        SQRT_2 * m_i / nu_hat_i.sqrt() + 1.0
    } else {
        f64::NAN
    };
    MarginalMean {
        m_i,
        nu_hat_i,
        standardized,
    }
}

pub fn marginal_mean_stats(data: &TwoSampleData, exec: Exec) -> Vec<MarginalMean> {
    exec.map(data.p(), |i| marginal_mean(data.x_col(i), data.y_col(i)))
}

/// `sigma01_hat = sqrt(2A/(n1(n1-1)) + 2B/(n2(n2-1)) + 4C/(n1 n2))`, with the
/// radicand floored at [`VAR_FLOOR`].
pub fn sigma01_hat(traces: &TraceEstimates, n1: usize, n2: usize) -> Result<f64> {
    let TraceEstimates { a_n1, b_n2, c_n1n2 } = *traces;
    if a_n1 <= 0.0 && b_n2 <= 0.0 && c_n1n2 <= 0.0 {
        return Err(Error::Calibration(
            "all trace estimates are nonpositive; mean test cannot be standardised".into(),
        ));
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let v = 2.0 * a_n1 / (f1 * (f1 - 1.0)) + 2.0 * b_n2 / (f2 * (f2 - 1.0)) + 4.0 * c_n1n2 / (f1 * f2);
    Ok(v.max(VAR_FLOOR).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanEnhancement {
    pub j_m: f64,
    pub selected: Vec<usize>,
    pub delta: f64,
}

/// Screens coordinates at `delta` and sums the survivors into `J_m`.
pub fn screen_means(marginals: &[MarginalMean], delta: f64) -> MeanEnhancement {
    let mut j = 0.0;
    let mut selected = Vec::new();
    for (i, m) in marginals.iter().enumerate() {
        if !m.is_degenerate() && m.standardized > delta {
            j += m.ratio();
            selected.push(i);
        }
    }
    MeanEnhancement {
        j_m: (marginals.len() as f64).sqrt() * j,
        selected,
        delta,
    }
}

/// `J_m` with the threshold resolved from `threshold`, `p = marginals.len()`
/// and the pooled sample size `n`.
pub fn power_enhance_mean(marginals: &[MarginalMean], n: usize, threshold: Threshold) -> Result<MeanEnhancement> {
    let delta = threshold.for_mean(marginals.len(), n)?;
    Ok(screen_means(marginals, delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOptions {
    pub threshold: Threshold,
    pub exec: Exec,
}

impl Default for MeanOptions {
    fn default() -> Self {
        Self {
            threshold: Threshold::Practical,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MeanTestReport {
    pub m_raw: f64,
    pub sigma01_hat: f64,
    pub m_standardized: f64,
    pub j_m: f64,
    pub m_pe: f64,
    pub selected: Vec<usize>,
    pub p_value: f64,
    pub ln_p_value: f64,
    pub p_value_unenhanced: f64,
    pub threshold_used: f64,
    /// Coordinates with zero variance in both groups. They contribute to
    /// `m_raw` but are never screened into `j_m`.
    pub degenerate: Vec<usize>,
}

/// Mean test given trace estimates already computed by the covariance pass.
pub fn mean_test_with_traces(
    data: &TwoSampleData,
    traces: &TraceEstimates,
    opts: &MeanOptions,
) -> Result<MeanTestReport> {
    let (n1, n2) = (data.n1(), data.n2());
    let marginals = marginal_mean_stats(data, opts.exec);
    let pe = power_enhance_mean(&marginals, n1 + n2, opts.threshold)?;
    let sigma01_hat = sigma01_hat(traces, n1, n2)?;
    let m_raw: f64 = marginals.iter().map(|m| m.m_i).sum();
    let m_standardized = m_raw / sigma01_hat;
    let m_pe = m_standardized + pe.j_m;
    Ok(MeanTestReport {
        m_raw,
        sigma01_hat,
        m_standardized,
        j_m: pe.j_m,
        m_pe,
        selected: pe.selected,
        p_value: normal_sf(m_pe),
        ln_p_value: normal_ln_sf(m_pe),
        p_value_unenhanced: normal_sf(m_standardized),
        threshold_used: pe.delta,
        degenerate: marginals
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_degenerate())
            .map(|(i, _)| i)
            .collect(),
    })
}

pub fn mean_test(data: &TwoSampleData, opts: &MeanOptions) -> Result<MeanTestReport> {
    let traces = scan_pairs(data, None, opts.exec, true).traces;
    mean_test_with_traces(data, &traces, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn brute_m(x: &[f64], y: &[f64]) -> f64 {
        let (n1, n2) = (x.len() as f64, y.len() as f64);
        let mut xx = 0.0;
        for u in 0..x.len() {
            for v in 0..x.len() {
                if u != v {
                    xx += x[u] * x[v];
                }
            }
        }
        let mut yy = 0.0;
        for u in 0..y.len() {
            for v in 0..y.len() {
                if u != v {
                    yy += y[u] * y[v];
                }
            }
        }
        let xy: f64 = x.iter().flat_map(|a| y.iter().map(move |b| a * b)).sum();
        xx / (n1 * (n1 - 1.0)) + yy / (n2 * (n2 - 1.0)) - 2.0 * xy / (n1 * n2)
    }

    #[test]
    fn degenerate_zero_coordinate() {
        let m = marginal_mean(&[0.0; 4], &[0.0; 4]);
        assert_eq!(m.m_i, 0.0);
        assert_eq!(m.nu_hat_i, 0.0);
        assert!(m.is_degenerate());
    }

    #[test]
    fn two_observation_example() {
        let m = marginal_mean(&[1.0, 2.0], &[0.0, 4.0]);
        assert!((m.m_i - -4.0).abs() < 1e-15);
        assert!((brute_m(&[1.0, 2.0], &[0.0, 4.0]) - -4.0).abs() < 1e-15);
    }

    #[test]
    fn sigma01_cases() {
        let t = TraceEstimates { a_n1: 1.0, b_n2: 1.0, c_n1n2: 0.0 };
        assert!((sigma01_hat(&t, 2, 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let tt = 2.5;
        let n = 10.0;
        let t = TraceEstimates { a_n1: tt, b_n2: tt, c_n1n2: tt };
        let want = (4.0 * tt / (n * (n - 1.0)) + 4.0 * tt / (n * n)).sqrt();
        assert!((sigma01_hat(&t, 10, 10).unwrap() - want).abs() < 1e-15);
        let t = TraceEstimates { a_n1: 0.0, b_n2: -1.0, c_n1n2: 0.0 };
        assert!(matches!(sigma01_hat(&t, 10, 10), Err(Error::Calibration(_))));
    }

    fn mm(m_i: f64, nu: f64) -> MarginalMean {
        MarginalMean {
            m_i,
            nu_hat_i: nu,
            standardized: SQRT_2 * m_i / nu.sqrt() + 1.0,
        }
    }

    #[test]
    fn nothing_above_threshold() {
        let ms = vec![mm(0.1, 1.0), mm(-0.3, 2.0), mm(0.0, 1.0)];
        let pe = screen_means(&ms, 10.0);
        assert_eq!(pe.j_m, 0.0);
        assert!(pe.selected.is_empty());
    }

    #[test]
    fn single_exceedance() {
        let delta = 10.0;
        // standardized = delta + 1  <=>  ratio s = delta / sqrt(2)
        let s = delta / SQRT_2;
        let ms = vec![mm(0.0, 1.0), mm(s, 1.0), mm(0.2, 4.0), mm(0.0, 1.0)];
        let pe = screen_means(&ms, delta);
        assert_eq!(pe.selected, vec![1]);
        assert!((pe.j_m - 2.0 * s).abs() < 1e-12);
    }

    #[test]
    fn degenerate_coordinates_are_not_screened() {
        let ms = vec![MarginalMean { m_i: 5.0, nu_hat_i: 0.0, standardized: f64::NAN }, mm(0.0, 1.0)];
        let pe = screen_means(&ms, 2.0);
        assert!(pe.selected.is_empty());
    }

    #[test]
    fn report_records_degenerate_columns() {
        let x = Array2::from_shape_fn((8, 3), |(u, c)| if c == 1 { 2.0 } else { (u * (c + 1)) as f64 });
        let y = Array2::from_shape_fn((9, 3), |(u, c)| if c == 1 { 2.0 } else { ((u * 3 + c) % 5) as f64 });
        let data = TwoSampleData::new(x, y).unwrap();
        let r = mean_test(&data, &MeanOptions::default()).unwrap();
        assert_eq!(r.degenerate, vec![1]);
        assert_eq!(r.m_pe, r.m_standardized + r.j_m);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_enumeration(
            x in prop::collection::vec(-3f64..3.0, 4..12),
            y in prop::collection::vec(-3f64..3.0, 4..12),
        ) {
            let got = marginal_mean(&x, &y).m_i;
            let want = brute_m(&x, &y);
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        #[test]
        fn common_shift_is_invisible(
            x in prop::collection::vec(-3f64..3.0, 4..10),
            y in prop::collection::vec(-3f64..3.0, 4..10),
            shift in -1e3f64..1e3,
        ) {
            let a = marginal_mean(&x, &y);
            let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let b = marginal_mean(&xs, &ys);
            prop_assert!((a.m_i - b.m_i).abs() <= 1e-9);
        }

        #[test]
        fn scaling_keeps_standardized_values(
            x in prop::collection::vec(-3f64..3.0, 4..10),
            y in prop::collection::vec(-3f64..3.0, 4..10),
            c in 0.1f64..10.0,
        ) {
            let a = marginal_mean(&x, &y);
            let b = marginal_mean(
                &x.iter().map(|v| v * c).collect::<Vec<_>>(),
                &y.iter().map(|v| v * c).collect::<Vec<_>>(),
            );
            prop_assert!((b.m_i - a.m_i * c * c).abs() <= 1e-9 * (a.m_i.abs() * c * c).max(1e-9));
            prop_assert!((b.nu_hat_i - a.nu_hat_i * c.powi(4)).abs() <= 1e-9 * a.nu_hat_i * c.powi(4));
            prop_assert!((b.standardized - a.standardized).abs() <= 1e-9 * a.standardized.abs().max(1.0));
        }

        #[test]
        fn raising_delta_never_grows_selection(
            vals in prop::collection::vec((-1f64..4.0, 0.1f64..2.0), 1..40),
            d1 in 1.01f64..6.0,
            bump in 0f64..4.0,
        ) {
            let ms: Vec<MarginalMean> = vals.iter().map(|&(m, nu)| mm(m, nu)).collect();
            let lo = screen_means(&ms, d1);
            let hi = screen_means(&ms, d1 + bump);
            prop_assert!(hi.selected.iter().all(|i| lo.selected.contains(i)));
            prop_assert!(hi.j_m <= lo.j_m + 1e-12);
            prop_assert!(lo.j_m >= 0.0);
        }
    }
}
