//! Data model for two-period, two-arm trials.
//!
//! A [`TrialSummary`] carries the per-arm, per-period event counts together
//! with their denominators, either the number randomized per arm (count mode)
//! or person-time at risk (person-time mode). It is the sufficient statistic
//! for every summary-data test in this crate. Individual-level data enters as
//! [`IndividualRecord`] rows and can be tallied into a count-mode summary.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator convention of a summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Count,
    PersonTime,
}

/// Trial arm: placebo (0) or vaccine (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Placebo,
    Vaccine,
}

impl Arm {
    pub fn index(self) -> usize {
        match self {
            Arm::Placebo => 0,
            Arm::Vaccine => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Arm::Placebo),
            1 => Ok(Arm::Vaccine),
            other => Err(Error::MalformedInput(format!(
                "arm must be 0 or 1, got {other}"
            ))),
        }
    }
}

/// Analysis period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Period {
    One,
    Two,
}

impl Period {
    pub fn index(self) -> usize {
        match self {
            Period::One => 0,
            Period::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

pub const PERIODS: [Period; 2] = [Period::One, Period::Two];
pub const ARMS: [Arm; 2] = [Arm::Placebo, Arm::Vaccine];

/// Outcome of one participant: no event, event in period 1, or event in period 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    None,
    Period1,
    Period2,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::None => 0,
            Outcome::Period1 => 1,
            Outcome::Period2 => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Outcome::None),
            1 => Ok(Outcome::Period1),
            2 => Ok(Outcome::Period2),
            other => Err(Error::MalformedInput(format!(
                "outcome must be 0, 1 or 2, got {other}"
            ))),
        }
    }
}

/// One participant: arm assignment and multivariate outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndividualRecord {
    pub arm: Arm,
    pub outcome: Outcome,
}

/// Validated two-period, two-arm event counts with denominators.
///
/// Immutable after construction; cheap to copy and safe to share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    mode: Mode,
    // indexed [arm][period]
    events: [[u64; 2]; 2],
    n: [u64; 2],
    pt: [[f64; 2]; 2],
}

impl TrialSummary {
    /// Count-mode summary: `n` randomized per arm, events per period.
    pub fn count(n0: u64, events0: [u64; 2], n1: u64, events1: [u64; 2]) -> Result<Self> {
        let s = TrialSummary {
            mode: Mode::Count,
            events: [events0, events1],
            n: [n0, n1],
            pt: [[0.0; 2]; 2],
        };
        s.validate()?;
        Ok(s)
    }

    /// Person-time summary: per arm, `(events, person_time)` for periods 1 and 2.
    pub fn person_time(arm0: [(u64, f64); 2], arm1: [(u64, f64); 2]) -> Result<Self> {
        let s = TrialSummary {
            mode: Mode::PersonTime,
            events: [[arm0[0].0, arm0[1].0], [arm1[0].0, arm1[1].0]],
            n: [0; 2],
            pt: [[arm0[0].1, arm0[1].1], [arm1[0].1, arm1[1].1]],
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        for arm in ARMS {
            let a = arm.index();
            match self.mode {
                Mode::Count => {
                    let total = self.events[a][0] + self.events[a][1];
                    if total > self.n[a] {
                        return Err(Error::InvalidCounts(format!(
                            "arm {a}: events_p1 + events_p2 = {total} exceeds n = {}",
                            self.n[a]
                        )));
                    }
                }
                Mode::PersonTime => {
                    for p in PERIODS {
                        let pt = self.pt[a][p.index()];
                        if !(pt.is_finite() && pt > 0.0) {
                            return Err(Error::InvalidCounts(format!(
                                "arm {a}, period {}: person_time must be positive, got {pt}",
                                p.number()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Event count in the given arm and period.
    pub fn events(&self, arm: Arm, period: Period) -> u64 {
        self.events[arm.index()][period.index()]
    }

    /// Number randomized to the arm (count mode only).
    pub fn n(&self, arm: Arm) -> Option<u64> {
        match self.mode {
            Mode::Count => Some(self.n[arm.index()]),
            Mode::PersonTime => None,
        }
    }

    /// Denominator of the arm/period cell: n in count mode, person-time otherwise.
    pub fn denominator(&self, arm: Arm, period: Period) -> f64 {
        match self.mode {
            Mode::Count => self.n[arm.index()] as f64,
            Mode::PersonTime => self.pt[arm.index()][period.index()],
        }
    }

    /// Incidence proportion (count mode) or rate (person-time mode) of a cell.
    pub fn incidence(&self, arm: Arm, period: Period) -> f64 {
        self.events(arm, period) as f64 / self.denominator(arm, period)
    }

    /// Returns a summary with all person-time denominators multiplied by `c`.
    pub fn scale_person_time(&self, c: f64) -> Result<Self> {
        if self.mode != Mode::PersonTime {
            return Err(Error::WrongMode(
                "scale_person_time requires person-time mode".into(),
            ));
        }
        let mut s = *self;
        for row in s.pt.iter_mut() {
            for v in row.iter_mut() {
                *v *= c;
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Pools two summaries of the same mode by summing all cells.
    pub fn pooled_with(&self, other: &Self) -> Result<Self> {
        if self.mode != other.mode {
            return Err(Error::WrongMode(
                "cannot pool summaries with different modes".into(),
            ));
        }
        let mut s = *self;
        for a in 0..2 {
            s.n[a] += other.n[a];
            for p in 0..2 {
                s.events[a][p] += other.events[a][p];
                s.pt[a][p] += other.pt[a][p];
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Parses the summary JSON document (see crate docs for the schema).
    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: SummaryDoc =
            serde_json::from_str(text).map_err(|e| Error::MalformedInput(e.to_string()))?;
        doc.try_into()
    }

    /// Serializes to the summary JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&SummaryDoc::from(self)).expect("summary serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&SummaryDoc::from(self)).expect("summary serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct PeriodDoc {
    events: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pt: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ArmDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    p1: PeriodDoc,
    p2: PeriodDoc,
}

#[derive(Serialize, Deserialize)]
struct SummaryDoc {
    mode: Mode,
    arm0: ArmDoc,
    arm1: ArmDoc,
}

impl TryFrom<SummaryDoc> for TrialSummary {
    type Error = Error;

    fn try_from(doc: SummaryDoc) -> Result<Self> {
        let arm_cells = |arm: &ArmDoc, label: &str| -> Result<[(u64, Option<f64>); 2]> {
            match doc.mode {
                Mode::Count => {
                    if arm.p1.pt.is_some() || arm.p2.pt.is_some() {
                        return Err(Error::MalformedInput(format!(
                            "{label}: `pt` is not allowed in count mode"
                        )));
                    }
                    if arm.n.is_none() {
                        return Err(Error::MalformedInput(format!(
                            "{label}: `n` is required in count mode"
                        )));
                    }
                }
                Mode::PersonTime => {
                    if arm.n.is_some() {
                        return Err(Error::MalformedInput(format!(
                            "{label}: `n` is not allowed in person_time mode"
                        )));
                    }
                    if arm.p1.pt.is_none() || arm.p2.pt.is_none() {
                        return Err(Error::MalformedInput(format!(
                            "{label}: `pt` is required in person_time mode"
                        )));
                    }
                }
            }
            Ok([(arm.p1.events, arm.p1.pt), (arm.p2.events, arm.p2.pt)])
        };
        let c0 = arm_cells(&doc.arm0, "arm0")?;
        let c1 = arm_cells(&doc.arm1, "arm1")?;
        match doc.mode {
            Mode::Count => TrialSummary::count(
                doc.arm0.n.unwrap(),
                [c0[0].0, c0[1].0],
                doc.arm1.n.unwrap(),
                [c1[0].0, c1[1].0],
            ),
            Mode::PersonTime => TrialSummary::person_time(
                [(c0[0].0, c0[0].1.unwrap()), (c0[1].0, c0[1].1.unwrap())],
                [(c1[0].0, c1[0].1.unwrap()), (c1[1].0, c1[1].1.unwrap())],
            ),
        }
    }
}

impl From<&TrialSummary> for SummaryDoc {
    fn from(s: &TrialSummary) -> Self {
        let arm = |a: Arm| ArmDoc {
            n: s.n(a),
            p1: PeriodDoc {
                events: s.events(a, Period::One),
                pt: match s.mode {
                    Mode::Count => None,
                    Mode::PersonTime => Some(s.pt[a.index()][0]),
                },
            },
            p2: PeriodDoc {
                events: s.events(a, Period::Two),
                pt: match s.mode {
                    Mode::Count => None,
                    Mode::PersonTime => Some(s.pt[a.index()][1]),
                },
            },
        };
        SummaryDoc {
            mode: s.mode,
            arm0: arm(Arm::Placebo),
            arm1: arm(Arm::Vaccine),
        }
    }
}

/// Tallies individual records into a count-mode summary.
///
/// Order-independent; each record contributes one unit to its arm's n and, if
/// it carries an event, to the matching period cell.
pub fn aggregate(records: &[IndividualRecord]) -> Result<TrialSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut n = [0u64; 2];
    let mut events = [[0u64; 2]; 2];
    for r in records {
        let a = r.arm.index();
        n[a] += 1;
        match r.outcome {
            Outcome::None => {}
            Outcome::Period1 => events[a][0] += 1,
            Outcome::Period2 => events[a][1] += 1,
        }
    }
    TrialSummary::count(n[0], events[0], n[1], events[1])
}

/// Reads individual records from CSV with header `arm,outcome`.
///
/// Unknown columns are ignored; column order is free.
pub fn read_records_csv<R: io::Read>(reader: R) -> Result<Vec<IndividualRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::MalformedInput(e.to_string()))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MalformedInput(format!("missing `{name}` column")))
    };
    let arm_col = col("arm")?;
    let outcome_col = col("outcome")?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::MalformedInput(e.to_string()))?;
        let parse = |idx: usize, name: &str| -> Result<u8> {
            row.get(idx)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::MalformedInput(format!("row {}: bad `{name}` value", i + 2)))
        };
        out.push(IndividualRecord {
            arm: Arm::from_u8(parse(arm_col, "arm")?)?,
            outcome: Outcome::from_u8(parse(outcome_col, "outcome")?)?,
        });
    }
    Ok(out)
}

/// Writes individual records as CSV with header `arm,outcome`.
pub fn write_records_csv<W: io::Write>(records: &[IndividualRecord], writer: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["arm", "outcome"])?;
    for r in records {
        w.write_record([
            (r.arm.index() as u8).to_string(),
            r.outcome.code().to_string(),
        ])?;
    }
    w.flush()
}
