//! Study plans, scripted sessions, offline reports and exports.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use cellprobe::catalog::{load_manifest, Generator};
use cellprobe::metrics::{pick_rate, study_report, Percent, StudyReport};
use cellprobe::rng;
use cellprobe::study::{
    build_study, export_responses, read_responses_csv, write_responses_csv, Answer, ResponseRow, Session, StudyPlan,
    Trial,
};
use rand::Rng as _;

use crate::{read_json, write_file, CliError, Outcome, SimulateArgs};

pub fn new_plan(catalogs: &[PathBuf], seed: u64, out: &Path) -> Result<Outcome, CliError> {
    let mut entries = Vec::new();
    for dir in catalogs {
        entries.extend(load_manifest(dir).map_err(|e| CliError::input(dir, e))?);
    }
    let mut seen = HashSet::new();
    if let Some(dup) = entries.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(CliError::Validation(format!(
            "stimulus id {:?} appears in more than one catalog",
            dup.id
        )));
    }
    let plan = build_study(&entries, seed)?;
    let json = serde_json::to_string_pretty(&plan).expect("plan serialises") + "\n";
    write_file(out, json)?;
    Ok(Outcome::new(format!(
        "study {}: {} pair and {} single trials; plan {}",
        plan.id,
        plan.pair_trials.len(),
        plan.single_trials.len(),
        out.display()
    ))
    .with(out))
}

/// A scripted participant: the probability of each kind of correct call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Judge {
    pub detect_cgan: f64,
    pub detect_dm: f64,
    pub trust_real: f64,
}

impl Judge {
    fn validate(&self) -> Result<(), CliError> {
        for (name, p) in [
            ("detect-cgan", self.detect_cgan),
            ("detect-dm", self.detect_dm),
            ("trust-real", self.trust_real),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Validation(format!("--{name} {p} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    fn answer(&self, trial: Trial<'_>, rng: &mut rng::Rng) -> Answer {
        let p = match trial.generator() {
            Some(Generator::Cgan) => self.detect_cgan,
            Some(Generator::Dm) => self.detect_dm,
            None => self.trust_real,
        };
        let right = rng.random_bool(p);
        match (trial.truth(), right) {
            (truth, true) => truth,
            (Answer::Left, false) => Answer::Right,
            (Answer::Right, false) => Answer::Left,
            (Answer::Real, false) => Answer::Fake,
            (Answer::Fake, false) => Answer::Real,
        }
    }
}

/// `count` completed sessions `session-0001…`, answers drawn by `judge`.
/// Timestamps start at `t0` ms and advance 1 s per response.
pub fn simulate_sessions(plan: &StudyPlan, count: usize, seed: u64, judge: &Judge, t0: u64) -> Vec<Session> {
    let mut clock = t0;
    (1..=count)
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let mut session = Session::new(format!("session-{i:04}"), plan, format!("p{i:03}"), None, rng.random());
            session.start().expect("fresh session starts");
            while let Some(view) = session.next_trial(plan) {
                let trial = plan.trial(&view.trial).expect("view comes from plan");
                let answer = judge.answer(trial, &mut rng);
                clock += 1000;
                session
                    .record_response(plan, &view.trial, answer, clock)
                    .expect("answer fits its trial");
            }
            session
        })
        .collect()
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let judge = Judge {
        detect_cgan: args.detect_cgan,
        detect_dm: args.detect_dm,
        trust_real: args.trust_real,
    };
    judge.validate()?;
    if args.sessions == 0 {
        return Err(CliError::Validation("--sessions must be positive".into()));
    }
    let plan: StudyPlan = read_json(&args.plan)?;
    let sessions = simulate_sessions(&plan, args.sessions, args.seed, &judge, 1_700_000_000_000);
    let rows = export_responses(&plan, &sessions)?;
    let mut buf = Vec::new();
    write_responses_csv(&rows, &mut buf).expect("in-memory write");
    write_file(&args.out, buf)?;
    Ok(Outcome::new(format!(
        "{} session(s), {} response(s) written to {}",
        sessions.len(),
        rows.len(),
        args.out.display()
    ))
    .with(&args.out))
}

pub fn load_log(path: &Path) -> Result<Vec<ResponseRow>, CliError> {
    let file = File::open(path).map_err(|e| CliError::input(path, e))?;
    read_responses_csv(file).map_err(|e| CliError::input(path, e))
}

fn load_report(log: &Path, include_pairs: bool) -> Result<(Vec<ResponseRow>, StudyReport), CliError> {
    let rows = load_log(log)?;
    let report = study_report(&rows, include_pairs).map_err(|e| CliError::input(log, e))?;
    Ok((rows, report))
}

pub fn report(log: &Path, include_pairs: bool, out: Option<&Path>) -> Result<Outcome, CliError> {
    let (_, report) = load_report(log, include_pairs)?;
    let text = report.to_text();
    let mut outcome = Outcome::new(text.trim_end());
    if let Some(dir) = out {
        for (name, body) in [
            ("report.json", report.to_json()),
            ("report.txt", text.clone()),
            ("relative.csv", report.relative_csv()),
        ] {
            let path = dir.join(name);
            write_file(&path, body)?;
            outcome = outcome.with(path);
        }
    }
    Ok(outcome)
}

pub fn export_json(log: &Path, include_pairs: bool, out: &Path) -> Result<Outcome, CliError> {
    let (_, report) = load_report(log, include_pairs)?;
    write_file(out, report.to_json())?;
    Ok(Outcome::new(format!("report JSON written to {}", out.display())).with(out))
}

/// One row per figure: `scope,metric,value`, percentages to two decimals.
/// Raw pick rates keep full precision for plotting error bars.
pub fn plot_table(rows: &[ResponseRow], report: &StudyReport) -> String {
    let mut out = String::from("scope,metric,value\n");
    let mut put = |scope: &str, metric: &str, value: String| {
        let _ = writeln!(out, "{scope},{metric},{value}");
    };
    let pct = |p: Percent| p.to_string();
    for m in &report.methods {
        let scope = m.generator.name();
        put(scope, "pair_trials", m.pair_trials.to_string());
        put(scope, "pick_rate_as_fake", pct(m.pick_rate_as_fake));
        put(scope, "pick_rate_as_real", pct(m.pick_rate_as_real));
        if let Ok((fake, _)) = pick_rate(rows, m.generator) {
            put(scope, "pick_rate_as_fake_unrounded", fake.to_string());
        }
        matrix_rows(&mut put, scope, &m.matrix);
    }
    matrix_rows(&mut put, "overall", &report.overall);
    out
}

fn matrix_rows(put: &mut impl FnMut(&str, &str, String), scope: &str, m: &cellprobe::metrics::MatrixReport) {
    let c = m.confusion;
    for (metric, v) in [("tp", c.tp), ("fp", c.fp), ("tn", c.tn), ("fn", c.fn_)] {
        put(scope, metric, v.to_string());
    }
    let r = m.relative;
    for (metric, v) in [
        ("relative_tp", r.tp),
        ("relative_fp", r.fp),
        ("relative_tn", r.tn),
        ("relative_fn", r.fn_),
        ("accuracy", m.accuracy),
        ("precision", m.precision),
        ("recall", m.recall),
        ("miss_rate", m.miss_rate),
    ] {
        put(scope, metric, v.to_string());
    }
}

pub fn export_csv(log: &Path, include_pairs: bool, out: &Path) -> Result<Outcome, CliError> {
    let (rows, report) = load_report(log, include_pairs)?;
    write_file(out, plot_table(&rows, &report))?;
    Ok(Outcome::new(format!("plot table written to {}", out.display())).with(out))
}
