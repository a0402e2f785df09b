//! Principal-strata Monte Carlo generator for two-period trials.
//!
//! Each participant carries a latent response type (doomed, helped, harmed,
//! immune). Waning is introduced by degrading a calibrated fraction of the
//! helped and/or immune strata between the periods so the challenge incidence
//! ratio grows by a factor `w`; `w = 1` is the sharp null and freezes the
//! strata. Closed-form oracles for the challenge incidence ratio and the
//! hazard-ratio bias factor live here as well.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::trial_data::{Arm, IndividualRecord, Outcome};

/// Latent response type to exposure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stratum {
    /// Event regardless of treatment.
    Doomed,
    /// Event only without the vaccine.
    Helped,
    /// Event only with the vaccine.
    Harmed,
    /// Never an event.
    Immune,
}

/// Distribution over the four principal strata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StratumDistDoc", into = "StratumDistDoc")]
pub struct StratumDist {
    p_doomed: f64,
    p_helped: f64,
    p_harmed: f64,
    p_immune: f64,
}

#[derive(Serialize, Deserialize)]
struct StratumDistDoc {
    p_doomed: f64,
    p_helped: f64,
    p_harmed: f64,
    p_immune: f64,
}

impl TryFrom<StratumDistDoc> for StratumDist {
    type Error = Error;
    fn try_from(d: StratumDistDoc) -> Result<Self> {
        StratumDist::new(d.p_doomed, d.p_helped, d.p_harmed, d.p_immune)
    }
}

impl From<StratumDist> for StratumDistDoc {
    fn from(d: StratumDist) -> Self {
        StratumDistDoc {
            p_doomed: d.p_doomed,
            p_helped: d.p_helped,
            p_harmed: d.p_harmed,
            p_immune: d.p_immune,
        }
    }
}

impl StratumDist {
    /// Validates ranges and that the four probabilities sum to 1 (tolerance 1e-12).
    pub fn new(p_doomed: f64, p_helped: f64, p_harmed: f64, p_immune: f64) -> Result<Self> {
        for (name, p) in [
            ("p_doomed", p_doomed),
            ("p_helped", p_helped),
            ("p_harmed", p_harmed),
            ("p_immune", p_immune),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::DomainError(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let sum = p_doomed + p_helped + p_harmed + p_immune;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::DomainError(format!(
                "stratum probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(StratumDist {
            p_doomed,
            p_helped,
            p_harmed,
            p_immune,
        })
    }

    pub fn p_doomed(&self) -> f64 {
        self.p_doomed
    }
    pub fn p_helped(&self) -> f64 {
        self.p_helped
    }
    pub fn p_harmed(&self) -> f64 {
        self.p_harmed
    }
    pub fn p_immune(&self) -> f64 {
        self.p_immune
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Stratum {
        let u: f64 = rng.random();
        if u < self.p_doomed {
            Stratum::Doomed
        } else if u < self.p_doomed + self.p_helped {
            Stratum::Helped
        } else if u < self.p_doomed + self.p_helped + self.p_harmed {
            Stratum::Harmed
        } else {
            Stratum::Immune
        }
    }
}

/// Which strata degrade between the periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    HelpedToDoomed,
    ImmuneToHarmed,
    EqualMix,
}

/// Per-stratum degradation probabilities between the periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRates {
    pub w_star_helped: f64,
    pub w_star_immune: f64,
}

/// Exposure confounding: a latent binary trait splits the population into
/// exposure-seeking and exposure-averse halves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confounding {
    pub p_e_high: f64,
    pub p_e_low: f64,
}

fn default_p_treat() -> f64 {
    0.5
}

/// Full simulator configuration. Accepted as JSON with these field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: u64,
    #[serde(default = "default_p_treat")]
    pub p_treat: f64,
    pub dist: StratumDist,
    #[serde(default)]
    pub p_e1: f64,
    #[serde(default)]
    pub p_e2: f64,
    /// Waning factor; 1 is the sharp null.
    pub w: f64,
    pub scenario: Scenario,
    /// When set, `p_e1`/`p_e2` are ignored and both exposures are driven by
    /// the latent exposure-behavior trait.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confounding: Option<Confounding>,
    pub seed: u64,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Precondition("n must be positive".into()));
        }
        if !(self.p_treat > 0.0 && self.p_treat < 1.0) {
            return Err(Error::DomainError(format!(
                "p_treat = {} outside (0, 1)",
                self.p_treat
            )));
        }
        for (name, p) in [("p_e1", self.p_e1), ("p_e2", self.p_e2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::DomainError(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if let Some(c) = &self.confounding {
            for (name, p) in [("p_e_high", c.p_e_high), ("p_e_low", c.p_e_low)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::DomainError(format!("{name} = {p} outside [0, 1]")));
                }
            }
        }
        if self.w.is_nan() || self.w < 1.0 {
            return Err(Error::DomainError(format!("w = {} must be >= 1", self.w)));
        }
        Ok(())
    }
}

/// Solves the calibration equation
/// `w*_helped * p_helped + w*_immune * p_immune = (w - 1)(p_doomed + p_harmed)`
/// under the scenario's constraint.
///
/// `w = 1` always yields zero rates. A required rate above 1 is infeasible and
/// reported together with the largest attainable `w`.
pub fn transition_rates(dist: &StratumDist, w: f64, scenario: Scenario) -> Result<TransitionRates> {
    if w.is_nan() || w < 1.0 {
        return Err(Error::DomainError(format!("w = {w} must be >= 1")));
    }
    if w == 1.0 {
        return Ok(TransitionRates {
            w_star_helped: 0.0,
            w_star_immune: 0.0,
        });
    }
    let target = (w - 1.0) * (dist.p_doomed + dist.p_harmed);
    let rate_from = |mass: f64, name: &'static str| -> Result<f64> {
        if mass <= 0.0 {
            return Err(Error::ZeroStratum(name));
        }
        let rate = target / mass;
        if rate > 1.0 {
            return Err(Error::Infeasible {
                required: rate,
                max_w: 1.0 + mass / (dist.p_doomed + dist.p_harmed),
            });
        }
        Ok(rate)
    };
    match scenario {
        Scenario::HelpedToDoomed => Ok(TransitionRates {
            w_star_helped: rate_from(dist.p_helped, "helped")?,
            w_star_immune: 0.0,
        }),
        Scenario::ImmuneToHarmed => Ok(TransitionRates {
            w_star_helped: 0.0,
            w_star_immune: rate_from(dist.p_immune, "immune")?,
        }),
        Scenario::EqualMix => {
            let rate = rate_from(dist.p_helped + dist.p_immune, "helped+immune")?;
            Ok(TransitionRates {
                w_star_helped: rate,
                w_star_immune: rate,
            })
        }
    }
}

/// Challenge incidence ratio implied by a stratum distribution:
/// `(p_doomed + p_harmed) / (p_doomed + p_helped)`.
pub fn challenge_ir(dist: &StratumDist) -> Result<f64> {
    let denom = dist.p_doomed + dist.p_helped;
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator(
            "p_doomed + p_helped must be positive".into(),
        ));
    }
    Ok((dist.p_doomed + dist.p_harmed) / denom)
}

/// Multiplicative bias of the period-2 hazard ratio relative to the
/// period-1 hazard ratio under the sharp null:
/// `(S0 * p_e1 + 1 - p_e1) / (S1 * p_e1 + 1 - p_e1)` with
/// `S_a` the probability of surviving an exposed first period in arm `a`.
pub fn hr2_bias_factor(dist: &StratumDist, p_e1: f64) -> f64 {
    let s0 = 1.0 - (dist.p_doomed + dist.p_helped);
    let s1 = 1.0 - (dist.p_doomed + dist.p_harmed);
    (s0 * p_e1 + (1.0 - p_e1)) / (s1 * p_e1 + (1.0 - p_e1))
}

/// One simulated participant with its latent strata, for invariant checks.
#[derive(Debug, Clone, Copy)]
pub struct SimulatedIndividual {
    pub record: IndividualRecord,
    pub t1: Stratum,
    pub t2: Stratum,
}

fn event_on_exposure(arm: Arm, stratum: Stratum) -> bool {
    match stratum {
        Stratum::Doomed => true,
        Stratum::Helped => arm == Arm::Placebo,
        Stratum::Harmed => arm == Arm::Vaccine,
        Stratum::Immune => false,
    }
}

fn simulate_individual(config: &SimConfig, rates: &TransitionRates, i: u64) -> SimulatedIndividual {
    let mut rng = stream(config.seed, &[i]);
    let arm = if rng.random::<f64>() < config.p_treat {
        Arm::Vaccine
    } else {
        Arm::Placebo
    };
    let (pe1, pe2) = match &config.confounding {
        Some(c) => {
            let seeking = rng.random::<f64>() < 0.5;
            let p = if seeking { c.p_e_high } else { c.p_e_low };
            (p, p)
        }
        None => (config.p_e1, config.p_e2),
    };
    let t1 = config.dist.sample(&mut rng);
    let e1 = rng.random::<f64>() < pe1;
    let dy1 = e1 && event_on_exposure(arm, t1);
    // only degrading transitions; the placebo response never changes
    let u_t: f64 = rng.random();
    let t2 = match t1 {
        Stratum::Helped if u_t < rates.w_star_helped => Stratum::Doomed,
        Stratum::Immune if u_t < rates.w_star_immune => Stratum::Harmed,
        other => other,
    };
    let e2 = !dy1 && rng.random::<f64>() < pe2;
    let dy2 = e2 && event_on_exposure(arm, t2);
    let outcome = if dy1 {
        Outcome::Period1
    } else if dy2 {
        Outcome::Period2
    } else {
        Outcome::None
    };
    SimulatedIndividual {
        record: IndividualRecord { arm, outcome },
        t1,
        t2,
    }
}

/// Simulates a trial, keeping the latent strata of every participant.
///
/// Deterministic given the config seed: participant `i` draws from its own
/// RNG stream, so results are identical under any parallel schedule.
pub fn simulate_trial_detailed(config: &SimConfig) -> Result<Vec<SimulatedIndividual>> {
    config.validate()?;
    let rates = transition_rates(&config.dist, config.w, config.scenario)?;
    Ok((0..config.n)
        .into_par_iter()
        .map(|i| simulate_individual(config, &rates, i))
        .collect())
}

/// Simulates a trial and returns the observed records only.
pub fn simulate_trial(config: &SimConfig) -> Result<Vec<IndividualRecord>> {
    Ok(simulate_trial_detailed(config)?
        .into_iter()
        .map(|s| s.record)
        .collect())
}
