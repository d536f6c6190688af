//! Pick rates, confusion matrices and derived rates over a study response
//! log. "Fake" is the positive class throughout.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::catalog::Generator;
use crate::study::{Answer, ResponseRow, TrialKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("undefined rate: {0}")]
    Undefined(String),
    #[error("response log is empty")]
    EmptyLog,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Record one judgment of an image whose truth is `is_fake`.
    pub fn add(&mut self, is_fake: bool, judged_fake: bool) {
        match (is_fake, judged_fake) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
        }
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Unrounded percentage, or an explicit marker when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Defined(f64),
    Undefined,
}

impl Rate {
    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            Rate::Undefined
        } else {
            Rate::Defined(100.0 * num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Defined(v) => Some(v),
            Rate::Undefined => None,
        }
    }
}

/// A percentage fixed to two decimals, stored as integer basis points so
/// complements are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Percent {
    BasisPoints(u32),
    Undefined,
}

impl Percent {
    /// `100 · num / den` rounded half-up to 0.01.
    pub fn ratio(num: u64, den: u64) -> Self {
        if den == 0 {
            return Percent::Undefined;
        }
        let bp = (20_000 * num as u128 + den as u128) / (2 * den as u128);
        Percent::BasisPoints(bp as u32)
    }

    /// `100 − self`.
    pub fn complement(self) -> Self {
        match self {
            Percent::BasisPoints(bp) => Percent::BasisPoints(10_000 - bp),
            Percent::Undefined => Percent::Undefined,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Percent::BasisPoints(bp) => Some(bp as f64 / 100.0),
            Percent::Undefined => None,
        }
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Percent::BasisPoints(bp) => f.pad(&format!("{}.{:02}", bp / 100, bp % 100)),
            Percent::Undefined => f.pad("undefined"),
        }
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.value() {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Percent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Marker(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) if (0.0..=100.0).contains(&v) => Ok(Percent::BasisPoints((v * 100.0).round() as u32)),
            Raw::Number(v) => Err(serde::de::Error::custom(format!("percentage {v} out of range"))),
            Raw::Marker(m) if m == "undefined" => Ok(Percent::Undefined),
            Raw::Marker(m) => Err(serde::de::Error::custom(format!("unknown rate marker {m:?}"))),
        }
    }
}

/// `(as_fake, as_real)`: the share of the generator's pair trials in which
/// the synthetic image was picked as the fake, and its complement.
pub fn pick_rate(log: &[ResponseRow], generator: Generator) -> Result<(f64, f64), MetricsError> {
    let (picked, total) = pick_counts(log, generator);
    match (Rate::ratio(picked, total), Rate::ratio(total - picked, total)) {
        (Rate::Defined(f), Rate::Defined(r)) => Ok((f, r)),
        _ => Err(MetricsError::Undefined(format!("no {generator} pair trials"))),
    }
}

fn pick_counts(log: &[ResponseRow], generator: Generator) -> (u64, u64) {
    let pairs = log
        .iter()
        .filter(|r| r.kind == TrialKind::Pair && r.generator == Some(generator));
    pairs.fold((0, 0), |(picked, total), r| (picked + r.correct as u64, total + 1))
}

fn add_row(m: &mut ConfusionMatrix, row: &ResponseRow, include_pairs: bool) {
    match row.kind {
        TrialKind::Single => m.add(row.truth == Answer::Fake, row.answer == Answer::Fake),
        // The chosen image is judged fake and the other real.
        TrialKind::Pair if include_pairs => {
            m.add(true, row.correct);
            m.add(false, !row.correct);
        }
        TrialKind::Pair => {}
    }
}

/// Matrix for one generator: its pair trials (optionally) and fake singles,
/// plus every real single as the negative class.
pub fn confusion(log: &[ResponseRow], generator: Generator, include_pairs: bool) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for row in log.iter().filter(|r| r.generator.is_none_or(|g| g == generator)) {
        add_row(&mut m, row, include_pairs);
    }
    m
}

/// Matrix over the whole log, each judgment counted once.
pub fn overall_confusion(log: &[ResponseRow], include_pairs: bool) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for row in log {
        add_row(&mut m, row, include_pairs);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub accuracy: Rate,
    pub precision: Rate,
    pub recall: Rate,
    /// Share of fakes judged real; `100 − recall`.
    pub miss_rate: Rate,
}

pub fn rates(m: &ConfusionMatrix) -> Rates {
    Rates {
        accuracy: Rate::ratio(m.tp + m.tn, m.total()),
        precision: Rate::ratio(m.tp, m.tp + m.fp),
        recall: Rate::ratio(m.tp, m.tp + m.fn_),
        miss_rate: Rate::ratio(m.fn_, m.tp + m.fn_),
    }
}

/// Each cell as a share of the matrix total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativeMatrix {
    pub tp: Percent,
    pub fp: Percent,
    pub tn: Percent,
    #[serde(rename = "fn")]
    pub fn_: Percent,
}

impl RelativeMatrix {
    pub fn of(m: &ConfusionMatrix) -> Self {
        let t = m.total();
        Self {
            tp: Percent::ratio(m.tp, t),
            fp: Percent::ratio(m.fp, t),
            tn: Percent::ratio(m.tn, t),
            fn_: Percent::ratio(m.fn_, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub confusion: ConfusionMatrix,
    pub relative: RelativeMatrix,
    pub accuracy: Percent,
    pub precision: Percent,
    pub recall: Percent,
    pub miss_rate: Percent,
}

impl MatrixReport {
    pub fn of(m: ConfusionMatrix) -> Self {
        let recall = Percent::ratio(m.tp, m.tp + m.fn_);
        Self {
            confusion: m,
            relative: RelativeMatrix::of(&m),
            accuracy: Percent::ratio(m.tp + m.tn, m.total()),
            precision: Percent::ratio(m.tp, m.tp + m.fp),
            recall,
            miss_rate: recall.complement(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodReport {
    pub generator: Generator,
    pub pair_trials: u64,
    pub pick_rate_as_fake: Percent,
    pub pick_rate_as_real: Percent,
    #[serde(flatten)]
    pub matrix: MatrixReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyReport {
    pub sessions: usize,
    pub responses: usize,
    pub include_pairs: bool,
    pub methods: Vec<MethodReport>,
    pub overall: MatrixReport,
}

pub fn study_report(log: &[ResponseRow], include_pairs: bool) -> Result<StudyReport, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let methods = Generator::ALL
        .iter()
        .map(|&g| {
            let (picked, total) = pick_counts(log, g);
            let as_fake = Percent::ratio(picked, total);
            MethodReport {
                generator: g,
                pair_trials: total,
                pick_rate_as_fake: as_fake,
                pick_rate_as_real: as_fake.complement(),
                matrix: MatrixReport::of(confusion(log, g, include_pairs)),
            }
        })
        .collect();
    let sessions: BTreeSet<&str> = log.iter().map(|r| r.session.as_str()).collect();
    Ok(StudyReport {
        sessions: sessions.len(),
        responses: log.len(),
        include_pairs,
        methods,
        overall: MatrixReport::of(overall_confusion(log, include_pairs)),
    })
}

impl StudyReport {
    /// Canonical JSON form, newline-terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} session(s), {} response(s), pair trials {} in confusion counts",
            self.sessions,
            self.responses,
            if self.include_pairs { "included" } else { "excluded" }
        );
        let _ = writeln!(
            out,
            "{:<8} {:>6} {:>10} {:>10} {:>5} {:>5} {:>5} {:>5} {:>9} {:>9} {:>9} {:>9}",
            "method",
            "pairs",
            "pick_fake",
            "pick_real",
            "tp",
            "fp",
            "tn",
            "fn",
            "accuracy",
            "precision",
            "recall",
            "miss"
        );
        let mut line = |name: &str, pairs: String, pf: String, pr: String, m: &MatrixReport| {
            let c = m.confusion;
            let _ = writeln!(
                out,
                "{name:<8} {pairs:>6} {pf:>10} {pr:>10} {:>5} {:>5} {:>5} {:>5} {:>9} {:>9} {:>9} {:>9}",
                c.tp, c.fp, c.tn, c.fn_, m.accuracy, m.precision, m.recall, m.miss_rate
            );
        };
        for m in &self.methods {
            line(
                m.generator.name(),
                m.pair_trials.to_string(),
                m.pick_rate_as_fake.to_string(),
                m.pick_rate_as_real.to_string(),
                &m.matrix,
            );
        }
        line("overall", "-".into(), "-".into(), "-".into(), &self.overall);
        out
    }

    /// Relative confusion matrices, one row per scope.
    pub fn relative_csv(&self) -> String {
        let mut out = String::from("scope,tp,fp,tn,fn\n");
        let rows = self
            .methods
            .iter()
            .map(|m| (m.generator.name(), &m.matrix.relative))
            .chain(std::iter::once(("overall", &self.overall.relative)));
        for (scope, r) in rows {
            let _ = writeln!(out, "{scope},{},{},{},{}", r.tp, r.fp, r.tn, r.fn_);
        }
        out
    }
}
