//! Partial identification of the period-2 challenge effect.
//!
//! The period-1 challenge vaccine efficacy is point-identified as `1 - IR1`.
//! The period-2 effect is not: it depends on the unobservable probability
//! `p12` of a second exposure given a survived first exposure. For an assumed
//! `p12` the efficacy is bounded above by
//! `UB(p12) = 1 - r2_1 / (r2_0 + p12 * r1_0)` with `r_k_a` the arm-a period-k
//! incidence. Sweeping `p12` over a grid yields a sensitivity curve with a
//! one-sided upper confidence band.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::stats::{quantile_sorted, z_one_sided};
use crate::trial_data::{Arm, IndividualRecord, Mode, Outcome, Period, TrialSummary};
use crate::waning_test::incidence_ratio;

/// Bound at one grid point with its one-sided upper confidence limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub p12: f64,
    pub upper_bound: f64,
    pub ci_upper_onesided: f64,
    pub alpha: f64,
}

/// Options for the bound-curve confidence limits.
#[derive(Debug, Clone, Copy)]
pub struct BoundOptions {
    pub alpha: f64,
    /// Bootstrap resamples; used only when records are supplied.
    pub replicates: u32,
    pub seed: u64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            alpha: 0.05,
            replicates: 1000,
            seed: crate::DEFAULT_SEED,
        }
    }
}

/// Period-1 challenge vaccine efficacy, `1 - IR1`. May be negative.
pub fn ve1_challenge(summary: &TrialSummary) -> Result<f64> {
    Ok(1.0 - incidence_ratio(summary, Period::One)?)
}

fn check_p12(p12: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p12) || !p12.is_finite() {
        return Err(Error::DomainError(format!("p12 = {p12} outside [0, 1]")));
    }
    Ok(())
}

fn rate(summary: &TrialSummary, arm: Arm, period: Period) -> Result<f64> {
    if summary.events(arm, period) == 0 {
        return Err(Error::ZeroEvents {
            arm: arm.index() as u8,
            period: period.number(),
        });
    }
    Ok(summary.incidence(arm, period))
}

/// Upper bound on the period-2 challenge vaccine efficacy under an assumed
/// re-exposure probability `p12`; nondecreasing in `p12` and at `p12 = 1`
/// equal to `1 - r2_1 / (r1_0 + r2_0)`.
pub fn ve2_upper_bound(summary: &TrialSummary, p12: f64) -> Result<f64> {
    check_p12(p12)?;
    let r2_1 = rate(summary, Arm::Vaccine, Period::Two)?;
    let r2_0 = rate(summary, Arm::Placebo, Period::Two)?;
    let r1_0 = if p12 > 0.0 {
        rate(summary, Arm::Placebo, Period::One)?
    } else {
        0.0
    };
    Ok(1.0 - r2_1 / (r2_0 + p12 * r1_0))
}

/// Variance of `log(r)` for one incidence cell: binomial in count mode,
/// Poisson in person-time mode.
fn log_rate_variance(summary: &TrialSummary, arm: Arm, period: Period) -> f64 {
    let m = summary.events(arm, period) as f64;
    match summary.mode() {
        Mode::Count => (1.0 - m / summary.denominator(arm, period)) / m,
        Mode::PersonTime => 1.0 / m,
    }
}

/// Variance of one incidence proportion/rate.
fn rate_variance(summary: &TrialSummary, arm: Arm, period: Period) -> f64 {
    let r = summary.incidence(arm, period);
    let d = summary.denominator(arm, period);
    match summary.mode() {
        Mode::Count => r * (1.0 - r) / d,
        Mode::PersonTime => r / d,
    }
}

/// One-sided upper limit at level 1-alpha via the delta method on
/// `log(r2_1) - log(r2_0 + p12 * r1_0)`, treating the three incidence cells
/// as independent. Independence is conservative here: the two placebo cells
/// are negatively correlated, which can only widen the denominator variance.
fn delta_ci_upper(summary: &TrialSummary, p12: f64, alpha: f64) -> Result<f64> {
    let r2_1 = rate(summary, Arm::Vaccine, Period::Two)?;
    let r2_0 = rate(summary, Arm::Placebo, Period::Two)?;
    let r1_0 = if p12 > 0.0 {
        rate(summary, Arm::Placebo, Period::One)?
    } else {
        0.0
    };
    let denom = r2_0 + p12 * r1_0;
    let var_log_num = log_rate_variance(summary, Arm::Vaccine, Period::Two);
    let var_denom = rate_variance(summary, Arm::Placebo, Period::Two)
        + p12
            * p12
            * if p12 > 0.0 {
                rate_variance(summary, Arm::Placebo, Period::One)
            } else {
                0.0
            };
    let se = (var_log_num + var_denom / (denom * denom)).sqrt();
    let log_ratio = (r2_1 / denom).ln();
    Ok(1.0 - (log_ratio - z_one_sided(alpha) * se).exp())
}

#[derive(Debug, Clone, Copy, Default)]
struct CellCounts {
    n: [f64; 2],
    m: [[f64; 2]; 2],
}

impl CellCounts {
    fn bound(&self, p12: f64) -> Option<f64> {
        if self.n[0] == 0.0 || self.n[1] == 0.0 {
            return None;
        }
        let r2_1 = self.m[1][1] / self.n[1];
        let r2_0 = self.m[0][1] / self.n[0];
        let r1_0 = self.m[0][0] / self.n[0];
        if self.m[1][1] == 0.0 || self.m[0][1] == 0.0 || (p12 > 0.0 && self.m[0][0] == 0.0) {
            return None;
        }
        Some(1.0 - r2_1 / (r2_0 + p12 * r1_0))
    }

    fn add(&mut self, r: &IndividualRecord) {
        let a = r.arm.index();
        self.n[a] += 1.0;
        match r.outcome {
            Outcome::None => {}
            Outcome::Period1 => self.m[a][0] += 1.0,
            Outcome::Period2 => self.m[a][1] += 1.0,
        }
    }
}

/// Per-replicate redraw cap, matching the bootstrap test convention.
const MAX_REDRAWS: u32 = 100;

/// Bootstrap distribution of the bound at every grid point: one resample per
/// replicate, evaluated across the whole grid so the band is coherent.
fn bootstrap_ci_uppers(
    records: &[IndividualRecord],
    grid: &[f64],
    opts: &BoundOptions,
) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let needs_p1 = grid.iter().any(|&p| p > 0.0);
    let draws: Vec<(Option<Vec<f64>>, u32)> = (0..opts.replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream(opts.seed, &[rep]);
            let mut rejected = 0u32;
            for _ in 0..MAX_REDRAWS {
                let mut cells = CellCounts::default();
                for _ in 0..records.len() {
                    cells.add(&records[rng.random_range(0..records.len())]);
                }
                let usable = cells.n[0] > 0.0
                    && cells.n[1] > 0.0
                    && cells.m[1][1] > 0.0
                    && cells.m[0][1] > 0.0
                    && (!needs_p1 || cells.m[0][0] > 0.0);
                if usable {
                    let bounds = grid.iter().map(|&p| cells.bound(p).unwrap()).collect();
                    return (Some(bounds), rejected);
                }
                rejected += 1;
            }
            (None, rejected)
        })
        .collect();
    let total_rejected: u64 = draws.iter().map(|(_, r)| *r as u64).sum();
    if draws.iter().any(|(b, _)| b.is_none()) || total_rejected > opts.replicates as u64 {
        return Err(Error::DegenerateResampling(format!(
            "{total_rejected} resamples with empty bound cells"
        )));
    }
    let mut uppers = Vec::with_capacity(grid.len());
    for (j, _) in grid.iter().enumerate() {
        let mut col: Vec<f64> = draws.iter().map(|(b, _)| b.as_ref().unwrap()[j]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        uppers.push(quantile_sorted(&col, 1.0 - opts.alpha));
    }
    Ok(uppers)
}

/// Evaluates the bound curve over a sorted grid of `p12` values.
///
/// When `records` are given the one-sided band comes from the bootstrap
/// percentile at 1-alpha; otherwise from the delta method.
pub fn ve2_bound_curve(
    summary: &TrialSummary,
    grid: &[f64],
    opts: &BoundOptions,
    records: Option<&[IndividualRecord]>,
) -> Result<Vec<BoundResult>> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::DomainError(format!(
            "alpha = {} outside (0, 1)",
            opts.alpha
        )));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::DomainError(
            "p12 grid must be sorted ascending".into(),
        ));
    }
    for &p in grid {
        check_p12(p)?;
    }
    if records.is_some() && opts.replicates == 0 {
        return Err(Error::Precondition(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    let bounds: Vec<f64> = grid
        .iter()
        .map(|&p| ve2_upper_bound(summary, p))
        .collect::<Result<_>>()?;
    let uppers = match records {
        Some(recs) => bootstrap_ci_uppers(recs, grid, opts)?,
        None => grid
            .iter()
            .map(|&p| delta_ci_upper(summary, p, opts.alpha))
            .collect::<Result<_>>()?,
    };
    Ok(grid
        .iter()
        .zip(bounds)
        .zip(uppers)
        .map(|((&p12, upper_bound), ci_upper_onesided)| BoundResult {
            p12,
            upper_bound,
            ci_upper_onesided,
            alpha: opts.alpha,
        })
        .collect())
}

/// Serializes a bound curve as CSV with columns `p12,upper_bound,ci_upper`.
pub fn curve_to_csv(curve: &[BoundResult]) -> String {
    let mut out = String::from("p12,upper_bound,ci_upper\n");
    for r in curve {
        out.push_str(&format!(
            "{},{},{}\n",
            r.p12, r.upper_bound, r.ci_upper_onesided
        ));
    }
    out
}

/// Renders a bound curve as a single-panel SVG line chart.
pub fn curve_to_svg(curve: &[BoundResult]) -> String {
    let panel = crate::chart::Panel {
        title: "VE2 upper bound".into(),
        series: vec![
            crate::chart::Series {
                label: "bound".into(),
                points: curve.iter().map(|r| (r.p12, r.upper_bound)).collect(),
            },
            crate::chart::Series {
                label: "one-sided CI".into(),
                points: curve.iter().map(|r| (r.p12, r.ci_upper_onesided)).collect(),
            },
        ],
    };
    crate::chart::line_chart(&[panel], "p12", "upper bound on VE2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial_data::aggregate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn synthetic() -> TrialSummary {
        // r1_0 = 0.02, r2_0 = 0.01, r2_1 = 0.003
        TrialSummary::count(10_000, [200, 100], 10_000, [150, 30]).unwrap()
    }

    #[test]
    fn ve1_from_h_pylori() {
        let s = TrialSummary::person_time([(36, 1416.0), (14, 673.6)], [(10, 1403.6), (4, 670.7)])
            .unwrap();
        assert_relative_eq!(ve1_challenge(&s).unwrap(), 0.71978, epsilon = 1e-4);
    }

    #[test]
    fn ve1_can_be_negative() {
        let s = TrialSummary::count(100, [10, 5], 100, [20, 5]).unwrap();
        assert!(ve1_challenge(&s).unwrap() < 0.0);
    }

    #[test]
    fn bound_plug_in_values() {
        let s = synthetic();
        assert_relative_eq!(ve2_upper_bound(&s, 0.5).unwrap(), 0.85, epsilon = 1e-12);
        assert_relative_eq!(ve2_upper_bound(&s, 1.0).unwrap(), 0.90, epsilon = 1e-12);
        assert_relative_eq!(ve2_upper_bound(&s, 0.0).unwrap(), 0.70, epsilon = 1e-12);
    }

    #[test]
    fn bound_at_zero_is_one_minus_ir2() {
        let s = synthetic();
        let ir2 = incidence_ratio(&s, Period::Two).unwrap();
        assert_relative_eq!(
            ve2_upper_bound(&s, 0.0).unwrap(),
            1.0 - ir2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn p12_domain_enforced() {
        assert!(matches!(
            ve2_upper_bound(&synthetic(), 1.5),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            ve2_upper_bound(&synthetic(), -0.1),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn zero_cells_reported() {
        let s = TrialSummary::count(100, [10, 5], 100, [8, 0]).unwrap();
        assert!(matches!(
            ve2_upper_bound(&s, 0.5),
            Err(Error::ZeroEvents { arm: 1, period: 2 })
        ));
    }

    #[test]
    fn curve_matches_pointwise_bound() {
        let s = synthetic();
        let curve = ve2_bound_curve(&s, &[0.0, 0.5, 1.0], &BoundOptions::default(), None).unwrap();
        let values: Vec<f64> = curve.iter().map(|r| r.upper_bound).collect();
        assert_relative_eq!(values[0], 0.70, epsilon = 1e-12);
        assert_relative_eq!(values[1], 0.85, epsilon = 1e-12);
        assert_relative_eq!(values[2], 0.90, epsilon = 1e-12);
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        for r in &curve {
            assert!(r.ci_upper_onesided >= r.upper_bound);
        }
    }

    #[test]
    fn singleton_grid_equals_point_bound() {
        let s = synthetic();
        let curve = ve2_bound_curve(&s, &[1.0], &BoundOptions::default(), None).unwrap();
        assert_eq!(curve.len(), 1);
        assert_relative_eq!(
            curve[0].upper_bound,
            ve2_upper_bound(&s, 1.0).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn unsorted_grid_rejected() {
        assert!(matches!(
            ve2_bound_curve(&synthetic(), &[0.5, 0.2], &BoundOptions::default(), None),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn bootstrap_band_is_deterministic_and_covers_point() {
        use crate::strata_sim::{simulate_trial, Scenario, SimConfig, StratumDist};
        let cfg = SimConfig {
            n: 4000,
            p_treat: 0.5,
            dist: StratumDist::new(0.2, 0.6, 0.2, 0.0).unwrap(),
            p_e1: 0.5,
            p_e2: 0.5,
            w: 1.0,
            scenario: Scenario::HelpedToDoomed,
            confounding: None,
            seed: 31,
        };
        let records = simulate_trial(&cfg).unwrap();
        let s = aggregate(&records).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let opts = BoundOptions {
            replicates: 400,
            seed: 8,
            ..Default::default()
        };
        let a = ve2_bound_curve(&s, &grid, &opts, Some(&records)).unwrap();
        let b = ve2_bound_curve(&s, &grid, &opts, Some(&records)).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!(r.ci_upper_onesided >= r.upper_bound - 1e-9);
        }
    }

    #[test]
    fn csv_has_expected_header() {
        let s = synthetic();
        let curve = ve2_bound_curve(&s, &[0.0, 1.0], &BoundOptions::default(), None).unwrap();
        let csv = curve_to_csv(&curve);
        assert!(csv.starts_with("p12,upper_bound,ci_upper\n"));
        assert_eq!(csv.lines().count(), 3);
        let svg = curve_to_svg(&curve);
        assert!(svg.starts_with("<svg"));
    }

    fn summary_strategy() -> impl Strategy<Value = TrialSummary> {
        (1u64..500, 1u64..500, 1u64..500, 1u64..500).prop_map(|(m10, m20, m11, m21)| {
            let n0 = m10 + m20 + 100;
            let n1 = m11 + m21 + 100;
            TrialSummary::count(n0, [m10, m20], n1, [m11, m21]).unwrap()
        })
    }

    proptest! {
        #[test]
        fn bound_monotone_in_p12(s in summary_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ub_lo = ve2_upper_bound(&s, lo).unwrap();
            let ub_hi = ve2_upper_bound(&s, hi).unwrap();
            prop_assert!(ub_lo <= ub_hi + 1e-12);
        }

        #[test]
        fn endpoint_identity(s in summary_strategy()) {
            let ub = ve2_upper_bound(&s, 1.0).unwrap();
            let r2_1 = s.incidence(Arm::Vaccine, Period::Two);
            let r1_0 = s.incidence(Arm::Placebo, Period::One);
            let r2_0 = s.incidence(Arm::Placebo, Period::Two);
            let expected = 1.0 - r2_1 / (r1_0 + r2_0);
            prop_assert!((ub - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
    }
}
