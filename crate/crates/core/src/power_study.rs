//! Monte Carlo rejection-rate grids.
//!
//! Sweeps sample size, exposure probability and waning factor, simulating
//! trials and recording how often each test rejects at level alpha. Also runs
//! the hazard-ratio variant to demonstrate its level violation. Trial seeds
//! depend only on the cell coordinates and replicate index — never on the
//! method — so every method is evaluated on identical data, and rerunning one
//! cell in isolation reproduces its in-grid result.

use serde::{Deserialize, Serialize};

use crate::chart::{line_chart, Panel, Series};
use crate::error::{Error, Result};
use crate::rng::mix;
use crate::strata_sim::{simulate_trial, transition_rates, Scenario, SimConfig, StratumDist};
use crate::trial_data::aggregate;
use crate::waning_test::{
    bootstrap_ir_test, hr_ratio_test, ir_ratio_test, BootstrapOptions, DeltaMethod, Method,
};

fn default_replications() -> u32 {
    100
}
fn default_alpha() -> f64 {
    0.05
}
fn default_bootstrap_b() -> u32 {
    1000
}

/// Grid specification; accepted as JSON with these field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerGrid {
    pub n_values: Vec<u64>,
    pub exposure_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub methods: Vec<Method>,
    pub scenario: Scenario,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub base_seed: u64,
    /// Resamples per bootstrap analysis; ignored by the delta methods.
    #[serde(default = "default_bootstrap_b")]
    pub bootstrap_b: u32,
}

impl PowerGrid {
    fn validate(&self, needs_methods: bool) -> Result<()> {
        if self.n_values.is_empty() || self.exposure_values.is_empty() || self.w_values.is_empty() {
            return Err(Error::Precondition("grid lists must be nonempty".into()));
        }
        if needs_methods {
            if self.methods.is_empty() {
                return Err(Error::Precondition("method list must be nonempty".into()));
            }
            if self.methods.contains(&Method::HrBootstrap) {
                return Err(Error::Precondition(
                    "hr_bootstrap runs through the dedicated hazard-ratio grid".into(),
                ));
            }
        }
        if self.replications == 0 {
            return Err(Error::Precondition("replications must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::DomainError(format!(
                "alpha = {} outside (0, 1)",
                self.alpha
            )));
        }
        for &e in &self.exposure_values {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::DomainError(format!("exposure {e} outside [0, 1]")));
            }
        }
        for &n in &self.n_values {
            if n == 0 {
                return Err(Error::Precondition("n must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One grid cell's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub n: u64,
    pub exposure: f64,
    pub w: f64,
    pub method: Method,
    pub rejection_rate: f64,
    /// Replications entering the denominator (degenerate runs excluded).
    pub replications_used: u32,
    pub degenerate_runs: u32,
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::DirectDelta => "direct_delta",
        Method::ConservativeDelta => "conservative_delta",
        Method::Bootstrap => "bootstrap",
        Method::HrBootstrap => "hr_bootstrap",
    }
}

/// Trial seed for one replicate; method-independent by construction.
fn replicate_seed(base_seed: u64, n: u64, exposure: f64, w: f64, rep: u32) -> u64 {
    mix(base_seed, &[n, exposure.to_bits(), w.to_bits(), rep as u64])
}

enum Analysis {
    Rejected(bool),
    Degenerate,
}

fn analyze(
    records: &[crate::trial_data::IndividualRecord],
    method: Method,
    grid: &PowerGrid,
    analysis_seed: u64,
) -> Result<Analysis> {
    let delta = |dm: DeltaMethod| -> Result<Analysis> {
        let summary = aggregate(records)?;
        match ir_ratio_test(&summary, dm, grid.alpha) {
            Ok(r) => Ok(Analysis::Rejected(r.p_value.unwrap() <= grid.alpha)),
            Err(Error::ZeroEvents { .. }) => Ok(Analysis::Degenerate),
            Err(e) => Err(e),
        }
    };
    let boot = |hr: bool| -> Result<Analysis> {
        let opts = BootstrapOptions {
            replicates: grid.bootstrap_b,
            alpha: grid.alpha,
            seed: analysis_seed,
            stratified: false,
        };
        let run = if hr { hr_ratio_test } else { bootstrap_ir_test };
        match run(records, &opts) {
            Ok(r) => Ok(Analysis::Rejected(r.ci_low > 1.0 || r.ci_high < 1.0)),
            Err(Error::ZeroEvents { .. }) | Err(Error::DegenerateResampling(_)) => {
                Ok(Analysis::Degenerate)
            }
            Err(e) => Err(e),
        }
    };
    match method {
        Method::DirectDelta => delta(DeltaMethod::Direct),
        Method::ConservativeDelta => delta(DeltaMethod::Conservative),
        Method::Bootstrap => boot(false),
        Method::HrBootstrap => boot(true),
    }
}

fn run_grid(grid: &PowerGrid, dist: &StratumDist, methods: &[Method]) -> Result<Vec<PowerCell>> {
    // fail fast if any requested w is unreachable for this distribution
    for &w in &grid.w_values {
        transition_rates(dist, w, grid.scenario)?;
    }
    let mut cells = Vec::new();
    for &n in &grid.n_values {
        for &exposure in &grid.exposure_values {
            for &w in &grid.w_values {
                let mut rejections = vec![0u32; methods.len()];
                let mut used = vec![0u32; methods.len()];
                let mut degenerate = vec![0u32; methods.len()];
                for rep in 0..grid.replications {
                    let seed = replicate_seed(grid.base_seed, n, exposure, w, rep);
                    let cfg = SimConfig {
                        n,
                        p_treat: 0.5,
                        dist: *dist,
                        p_e1: exposure,
                        p_e2: exposure,
                        w,
                        scenario: grid.scenario,
                        confounding: None,
                        seed,
                    };
                    let records = simulate_trial(&cfg)?;
                    for (i, &method) in methods.iter().enumerate() {
                        match analyze(&records, method, grid, mix(seed, &[1]))? {
                            Analysis::Rejected(r) => {
                                used[i] += 1;
                                if r {
                                    rejections[i] += 1;
                                }
                            }
                            Analysis::Degenerate => degenerate[i] += 1,
                        }
                    }
                }
                for (i, &method) in methods.iter().enumerate() {
                    cells.push(PowerCell {
                        n,
                        exposure,
                        w,
                        method,
                        rejection_rate: if used[i] > 0 {
                            rejections[i] as f64 / used[i] as f64
                        } else {
                            0.0
                        },
                        replications_used: used[i],
                        degenerate_runs: degenerate[i],
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Rejection rates of the requested incidence-ratio tests over the grid.
pub fn run_power_grid(grid: &PowerGrid, dist: &StratumDist) -> Result<Vec<PowerCell>> {
    grid.validate(true)?;
    run_grid(grid, dist, &grid.methods)
}

/// Rejection rates of the hazard-ratio test over the grid; the grid's
/// `methods` list is ignored. Exists to demonstrate the test's level
/// violation, not to analyze real data.
pub fn run_hr_power_grid(grid: &PowerGrid, dist: &StratumDist) -> Result<Vec<PowerCell>> {
    grid.validate(false)?;
    run_grid(grid, dist, &[Method::HrBootstrap])
}

/// CSV table with columns `n,exposure,w,method,rejection_rate,reps,degenerate`.
pub fn emit_table(cells: &[PowerCell]) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = String::from("n,exposure,w,method,rejection_rate,reps,degenerate\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.n,
            c.exposure,
            c.w,
            method_name(c.method),
            c.rejection_rate,
            c.replications_used,
            c.degenerate_runs
        ));
    }
    Ok(out)
}

/// SVG: rejection rate vs n; one panel per (exposure, method), one line per w.
pub fn emit_plot(cells: &[PowerCell]) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut panel_keys: Vec<(u64, Method)> = Vec::new();
    for c in cells {
        let key = (c.exposure.to_bits(), c.method);
        if !panel_keys.contains(&key) {
            panel_keys.push(key);
        }
    }
    let mut panels = Vec::new();
    for (exp_bits, method) in panel_keys {
        let exposure = f64::from_bits(exp_bits);
        let mut ws: Vec<u64> = Vec::new();
        for c in cells {
            if c.exposure.to_bits() == exp_bits
                && c.method == method
                && !ws.contains(&c.w.to_bits())
            {
                ws.push(c.w.to_bits());
            }
        }
        let series = ws
            .into_iter()
            .map(|w_bits| {
                let mut points: Vec<(f64, f64)> = cells
                    .iter()
                    .filter(|c| {
                        c.exposure.to_bits() == exp_bits
                            && c.method == method
                            && c.w.to_bits() == w_bits
                    })
                    .map(|c| (c.n as f64, c.rejection_rate))
                    .collect();
                points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                Series {
                    label: format!("w={}", f64::from_bits(w_bits)),
                    points,
                }
            })
            .collect();
        panels.push(Panel {
            title: format!("exposure={exposure} {}", method_name(method)),
            series,
        });
    }
    Ok(line_chart(&panels, "n", "rejection rate"))
}
