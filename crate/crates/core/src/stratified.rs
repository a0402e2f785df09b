//! Covariate-stratified waning tests.
//!
//! Runs the incidence-ratio test within each stratum, adjusts the per-stratum
//! p-values for multiple testing, and offers a pooled marginal test obtained
//! by summing raw cells across strata. Pooling is only justified when the
//! incidence ratios are constant across strata; the pooled row carries that
//! caveat.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial_data::{Mode, TrialSummary};
use crate::waning_test::{ir_ratio_test, DeltaMethod, TestResult};

/// Ordered map from stratum label to its trial summary; all the same mode.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSummary {
    strata: IndexMap<String, TrialSummary>,
}

impl StratifiedSummary {
    pub fn new(strata: IndexMap<String, TrialSummary>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mode = strata.values().next().unwrap().mode();
        if strata.values().any(|s| s.mode() != mode) {
            return Err(Error::WrongMode(
                "all strata must share one denominator mode".into(),
            ));
        }
        Ok(StratifiedSummary { strata })
    }

    pub fn strata(&self) -> &IndexMap<String, TrialSummary> {
        &self.strata
    }

    pub fn mode(&self) -> Mode {
        self.strata.values().next().unwrap().mode()
    }

    /// Parses `{"strata": {"<label>": <summary>, ...}}`, preserving label order.
    pub fn parse_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            strata: IndexMap<String, serde_json::Value>,
        }
        let doc: Doc =
            serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))?;
        let mut strata = IndexMap::new();
        for (label, value) in doc.strata {
            let summary = TrialSummary::parse_json(&value.to_string())
                .map_err(|e| Error::MalformedInput(format!("stratum `{label}`: {e}")))?;
            strata.insert(label, summary);
        }
        StratifiedSummary::new(strata)
    }

    pub fn to_json(&self) -> String {
        let strata: IndexMap<&String, serde_json::Value> = self
            .strata
            .iter()
            .map(|(label, s)| (label, serde_json::from_str(&s.to_json()).unwrap()))
            .collect();
        serde_json::json!({ "strata": strata }).to_string()
    }
}

/// Per-stratum outcome: a full test result, or a marker for strata whose
/// cells cannot support the test (reported, never silently dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumTest {
    Result(TestResult),
    Degenerate(String),
}

/// Runs the delta-method test in every stratum. Strata with zero event cells
/// come back as [`StratumTest::Degenerate`] without failing the batch.
pub fn per_stratum_tests(
    stratified: &StratifiedSummary,
    method: DeltaMethod,
    alpha: f64,
) -> Result<IndexMap<String, StratumTest>> {
    let mut out = IndexMap::new();
    for (label, summary) in stratified.strata() {
        let test = match ir_ratio_test(summary, method, alpha) {
            Ok(r) => StratumTest::Result(r),
            Err(e @ Error::ZeroEvents { .. }) => StratumTest::Degenerate(e.to_string()),
            Err(e) => return Err(e),
        };
        out.insert(label.clone(), test);
    }
    Ok(out)
}

/// Multiple-testing adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMethod {
    BenjaminiHochberg,
    HochbergSimes,
}

/// Step-up adjusted p-values, returned in input order and capped at 1.
///
/// Benjamini-Hochberg scales the i-th smallest p by `m/i`; Hochberg-Simes
/// scales it by `m - i + 1`. Both then enforce monotonicity from the largest
/// p downwards.
pub fn adjust_pvalues(pvals: &[f64], method: AdjustMethod) -> Result<Vec<f64>> {
    for &p in pvals {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::DomainError(format!("p-value {p} outside [0, 1]")));
        }
    }
    let m = pvals.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].partial_cmp(&pvals[b]).unwrap());
    let mut adjusted_sorted: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(i, &idx)| {
            let factor = match method {
                AdjustMethod::BenjaminiHochberg => m as f64 / (i + 1) as f64,
                AdjustMethod::HochbergSimes => (m - i) as f64,
            };
            (pvals[idx] * factor).min(1.0)
        })
        .collect();
    for i in (0..m - 1).rev() {
        adjusted_sorted[i] = adjusted_sorted[i].min(adjusted_sorted[i + 1]);
    }
    let mut out = vec![0.0; m];
    for (i, &idx) in order.iter().enumerate() {
        out[idx] = adjusted_sorted[i];
    }
    Ok(out)
}

/// Marginal test on the cell-wise sum of all strata.
///
/// Valid as a test of no marginal waning only under constant incidence
/// ratios across strata; callers should surface that caveat.
pub fn pooled_test(
    stratified: &StratifiedSummary,
    method: DeltaMethod,
    alpha: f64,
) -> Result<TestResult> {
    let mut iter = stratified.strata().values();
    let mut pooled = *iter.next().unwrap();
    for s in iter {
        pooled = pooled.pooled_with(s)?;
    }
    ir_ratio_test(&pooled, method, alpha)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Full stratified report as CSV: one row per stratum with raw and adjusted
/// p-values, then a pooled row flagged with the constant-IR assumption.
pub fn stratified_report(
    stratified: &StratifiedSummary,
    method: DeltaMethod,
    alpha: f64,
    adjust: AdjustMethod,
) -> Result<String> {
    let tests = per_stratum_tests(stratified, method, alpha)?;
    let raw: Vec<f64> = tests
        .values()
        .filter_map(|t| match t {
            StratumTest::Result(r) => r.p_value,
            StratumTest::Degenerate(_) => None,
        })
        .collect();
    let mut adjusted = adjust_pvalues(&raw, adjust)?.into_iter();
    let mut out = String::from("stratum,estimate,ci_low,ci_high,p_value,p_adjusted,note\n");
    for (label, test) in &tests {
        match test {
            StratumTest::Result(r) => {
                out.push_str(&format!(
                    "{label},{},{},{},{},{},\n",
                    r.estimate,
                    r.ci_low,
                    r.ci_high,
                    opt(r.p_value),
                    opt(adjusted.next())
                ));
            }
            StratumTest::Degenerate(reason) => {
                out.push_str(&format!("{label},,,,,,degenerate: {reason}\n"));
            }
        }
    }
    let pooled = pooled_test(stratified, method, alpha)?;
    out.push_str(&format!(
        "pooled,{},{},{},{},,assumes constant incidence ratios across strata\n",
        pooled.estimate,
        pooled.ci_low,
        pooled.ci_high,
        opt(pooled.p_value)
    ));
    Ok(out)
}
