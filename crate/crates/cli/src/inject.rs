//! Probe-injected annotation tasks and the offline scoreboard.

use std::collections::HashSet;
use std::fs;

use cellprobe::catalog::load_manifest;
use cellprobe::inject::{
    leaderboard, plan_injection, score_annotation, Annotation, AnnotatorItem, AnnotatorManifest, AnnotatorScore,
    InjectionConfig, InjectionPlan, ScoringConstants,
};
use cellprobe::rng;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{read_json, read_toml, write_file, CliError, InjectPlanArgs, InjectScoreArgs, Outcome};

pub fn plan(args: &InjectPlanArgs) -> Result<Outcome, CliError> {
    let mut items: Vec<_> = load_manifest(&args.items)
        .map_err(|e| CliError::input(&args.items, e))?
        .into_iter()
        .filter(|e| e.provenance.is_real())
        .collect();
    if items.is_empty() {
        return Err(CliError::input(&args.items, "catalog holds no real images"));
    }
    if let Some(want) = args.real_items {
        if want == 0 || want > items.len() {
            return Err(CliError::input(
                &args.items,
                format!("--real-items {want} must lie in 1..={}", items.len()),
            ));
        }
        items.sort_by(|a, b| a.id.cmp(&b.id));
        items.shuffle(&mut rng::stream(args.seed, 1));
        items.truncate(want);
    }
    let pool: Vec<_> = load_manifest(&args.probes)
        .map_err(|e| CliError::input(&args.probes, e))?
        .into_iter()
        .filter(|e| e.class.is_some())
        .collect();
    let config = InjectionConfig {
        probe_fraction: args.fraction,
        tv_budget: args.tv_budget,
        ..InjectionConfig::default()
    };
    let mut plan = plan_injection(args.task.clone(), &items, &pool, &config, args.seed)?;

    // Annotators see opaque handles and copies of the images, so neither the
    // id nor the file name can reveal which items are probes.
    let mut rng = rng::stream(args.seed, 2);
    let mut handles = HashSet::new();
    let mut view = Vec::with_capacity(plan.items.len());
    for item in &mut plan.items {
        let handle = loop {
            let h = format!("item-{:016x}", rng.random::<u64>());
            if handles.insert(h.clone()) {
                break h;
            }
        };
        let src_dir = if item.is_probe { &args.probes } else { &args.items };
        let src = src_dir.join(&item.file);
        let file = format!("images/{handle}.ppm");
        let bytes = fs::read(&src).map_err(|e| CliError::input(&src, e))?;
        write_file(&args.out.join(&file), bytes)?;
        item.id = handle.clone();
        view.push(AnnotatorItem { id: handle, file });
    }
    let manifest = AnnotatorManifest {
        task: plan.task.clone(),
        items: view,
    };
    let plan_path = args.out.join("plan.json");
    let task_path = args.out.join("task.json");
    write_file(
        &plan_path,
        serde_json::to_string_pretty(&plan).expect("plan serialises") + "\n",
    )?;
    write_file(
        &task_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n",
    )?;
    Ok(Outcome::new(format!(
        "task {}: {} items, {} probes, longest probe gap {}",
        plan.task,
        plan.items.len(),
        plan.probe_count(),
        plan.longest_gap()
    ))
    .with(plan_path)
    .with(task_path))
}

/// Running standings plus the (annotator, task) pairs already counted, so a
/// submission cannot be scored twice.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scoreboard {
    scores: Vec<AnnotatorScore>,
    scored: Vec<(String, String)>,
}

pub fn score(args: &InjectScoreArgs) -> Result<Outcome, CliError> {
    let plan: InjectionPlan = read_json(&args.plan)?;
    let annotations: Vec<Annotation> = read_json(&args.annotations)?;
    let constants = match &args.scoring {
        Some(p) => read_toml::<ScoringConstants>(p)?,
        None => ScoringConstants::default(),
    };
    let mut board: Scoreboard = if args.scores.exists() {
        read_json(&args.scores)?
    } else {
        Scoreboard::default()
    };
    let key = (args.annotator.clone(), plan.task.clone());
    if board.scored.contains(&key) {
        return Err(CliError::Validation(format!(
            "{}: task {} was already scored for {}",
            args.scores.display(),
            plan.task,
            args.annotator
        )));
    }

    let idx = match board.scores.iter().position(|s| s.annotator == args.annotator) {
        Some(i) => i,
        None => {
            board.scores.push(AnnotatorScore::new(args.annotator.clone()));
            board.scores.len() - 1
        }
    };
    let delta = score_annotation(&plan, &annotations, &board.scores[idx], &constants)
        .map_err(|e| CliError::from(e).at(&args.annotations))?;
    board.scores[idx].apply(&delta, &constants);
    let standing = board.scores[idx].clone();
    board.scored.push(key);
    board.scores = leaderboard(&board.scores);
    write_file(
        &args.scores,
        serde_json::to_string_pretty(&board).expect("scoreboard serialises") + "\n",
    )?;

    Ok(Outcome::new(format!(
        "{}: +{} points ({}/{} probes correct, streak {}); total {}, reliability {:.4}",
        standing.annotator,
        delta.points,
        delta.probes_correct,
        delta.probes_seen,
        delta.streak,
        standing.high_score,
        standing.reliability
    ))
    .with(&args.scores))
}
