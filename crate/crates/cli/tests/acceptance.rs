//! Acceptance suite: one PASS/FAIL line per criterion, each with its pinned
//! tolerance and wall-clock limit. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cellprobe::catalog::{
    class_weights, oversample, oversample_indices, render_phantom, save_catalog, Generator, ImageRecord, ManifestEntry,
    Provenance,
};
use cellprobe::dataset::LabeledSet;
use cellprobe::diffusion::{
    forward_noise, reverse_sample, train_denoiser, DiffusionConfig, GaussianOracle, NoisePredictor, NoiseSchedule,
    ReverseVariance,
};
use cellprobe::gan::{generate, train, GanConfig, GanModel};
use cellprobe::inject::{plan_injection, total_variation, AnnotatorItem, InjectionConfig};
use cellprobe::metrics::{study_report, MatrixReport, Percent};
use cellprobe::nn::{grad_check, Activation, BceWithLogits, DenseNet, Tensor, DEFAULT_LEAKY_SLOPE};
use cellprobe::rng;
use cellprobe::study::{build_study, read_responses_csv, Answer, ResponseRow, TrialKind};
use cellprobe::CellClass;
use cellprobe_server::{serve, App, Catalog, ServerConfig};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

type Check = Result<String, String>;

/// Name, time limit in seconds, and the check itself.
type Criterion = (&'static str, u64, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n)
}

// ---------------------------------------------------------------- metrics

fn row(kind: TrialKind, generator: Option<Generator>, truth: Answer, answer: Answer) -> ResponseRow {
    ResponseRow {
        session: "s1".into(),
        participant: "p1".into(),
        trial: "t".into(),
        kind,
        generator,
        truth,
        answer,
        correct: truth == answer,
        timestamp: 0,
    }
}

/// Half-up basis points by quotient and remainder.
fn bp(num: u64, den: u64) -> Option<u64> {
    (den > 0).then(|| {
        let (q, r) = (10_000 * num / den, 10_000 * num % den);
        q + u64::from(2 * r >= den)
    })
}

fn as_bp(p: Percent) -> Option<u64> {
    match p {
        Percent::BasisPoints(b) => Some(u64::from(b)),
        Percent::Undefined => None,
    }
}

/// Every judged image as `(is_fake, judged_fake)`: one per single trial,
/// two per pair trial (the chosen image is judged fake).
fn judgments(rows: &[&ResponseRow], include_pairs: bool) -> Vec<(bool, bool)> {
    let mut out = Vec::new();
    for r in rows {
        match r.kind {
            TrialKind::Single => out.push((r.truth == Answer::Fake, r.answer == Answer::Fake)),
            TrialKind::Pair if include_pairs => {
                let picked_fake = r.answer == r.truth;
                out.push((true, picked_fake));
                out.push((false, !picked_fake));
            }
            TrialKind::Pair => {}
        }
    }
    out
}

fn check_matrix(scope: &str, got: &MatrixReport, judged: &[(bool, bool)]) -> Result<(), String> {
    let count = |f: bool, j: bool| judged.iter().filter(|&&x| x == (f, j)).count() as u64;
    let (tp, fp, tn, fn_) = (
        count(true, true),
        count(false, true),
        count(false, false),
        count(true, false),
    );
    let n = judged.len() as u64;
    let c = got.confusion;
    ensure((c.tp, c.fp, c.tn, c.fn_) == (tp, fp, tn, fn_), || {
        format!("{scope}: counts {c:?} vs oracle {:?}", (tp, fp, tn, fn_))
    })?;
    let want = [
        bp(tp + tn, n),
        bp(tp, tp + fp),
        bp(tp, tp + fn_),
        bp(fn_, tp + fn_),
        bp(tp, n),
        bp(fp, n),
        bp(tn, n),
        bp(fn_, n),
    ];
    let r = got.relative;
    let have = [
        got.accuracy,
        got.precision,
        got.recall,
        got.miss_rate,
        r.tp,
        r.fp,
        r.tn,
        r.fn_,
    ]
    .map(as_bp);
    ensure(have == want, || format!("{scope}: rates {have:?} vs oracle {want:?}"))
}

fn random_log(rng: &mut rng::Rng) -> Vec<ResponseRow> {
    let n = rng.random_range(1..=40);
    (0..n)
        .map(|_| {
            let g = *[Generator::Cgan, Generator::Dm].choose(rng).unwrap();
            if rng.random_bool(0.4) {
                let truth = if rng.random_bool(0.5) {
                    Answer::Left
                } else {
                    Answer::Right
                };
                let answer = if rng.random_bool(0.5) {
                    Answer::Left
                } else {
                    Answer::Right
                };
                row(TrialKind::Pair, Some(g), truth, answer)
            } else {
                let generator = if rng.random_bool(0.35) { None } else { Some(g) };
                let truth = if generator.is_some() {
                    Answer::Fake
                } else {
                    Answer::Real
                };
                let answer = if rng.random_bool(0.5) {
                    Answer::Fake
                } else {
                    Answer::Real
                };
                row(TrialKind::Single, generator, truth, answer)
            }
        })
        .collect()
}

fn metric_identities() -> Check {
    // DM detected 1197 of 2500 fakes.
    let mut log = vec![row(TrialKind::Single, Some(Generator::Dm), Answer::Fake, Answer::Fake); 1197];
    log.extend(vec![
        row(
            TrialKind::Single,
            Some(Generator::Dm),
            Answer::Fake,
            Answer::Real
        );
        1303
    ]);
    let report = study_report(&log, true).map_err(|e| e.to_string())?;
    let dm = report.methods.iter().find(|m| m.generator == Generator::Dm).unwrap();
    let (recall, miss) = (dm.matrix.recall.to_string(), dm.matrix.miss_rate.to_string());
    ensure(recall == "47.88" && miss == "52.12", || {
        format!("recall {recall}, miss {miss}")
    })?;

    let mut rng = rng::seeded(2024);
    let logs = 25;
    for i in 0..logs {
        let log = random_log(&mut rng);
        for include_pairs in [true, false] {
            let report = study_report(&log, include_pairs).map_err(|e| e.to_string())?;
            for m in &report.methods {
                let scoped: Vec<&ResponseRow> = log
                    .iter()
                    .filter(|r| r.generator.is_none_or(|g| g == m.generator))
                    .collect();
                check_matrix(
                    &format!("log {i} {}", m.generator),
                    &m.matrix,
                    &judgments(&scoped, include_pairs),
                )?;
                let pairs: Vec<_> = scoped.iter().filter(|r| r.kind == TrialKind::Pair).collect();
                let picked = pairs.iter().filter(|r| r.answer == r.truth).count() as u64;
                let want = bp(picked, pairs.len() as u64);
                ensure(as_bp(m.pick_rate_as_fake) == want, || format!("log {i}: pick rate"))?;
                ensure(as_bp(m.pick_rate_as_real) == want.map(|b| 10_000 - b), || {
                    format!("log {i}: pick as real")
                })?;
            }
            let all: Vec<&ResponseRow> = log.iter().collect();
            check_matrix(
                &format!("log {i} overall"),
                &report.overall,
                &judgments(&all, include_pairs),
            )?;
        }
    }
    Ok(format!(
        "recall {recall} / miss {miss}; {logs} random logs exact vs counting oracle"
    ))
}

// ---------------------------------------------------------------- study

fn study_catalog() -> Vec<ManifestEntry> {
    let entry = |id: String, provenance| ManifestEntry {
        file: format!("{id}.ppm"),
        id,
        class: Some(CellClass::Lymphocyte),
        provenance,
        split: None,
    };
    (0..40)
        .map(|i| {
            entry(
                format!("real-{i}"),
                if i % 3 == 0 {
                    Provenance::Real
                } else {
                    Provenance::Phantom
                },
            )
        })
        .chain((0..25).map(|i| entry(format!("cgan-{i}"), Provenance::Cgan)))
        .chain((0..25).map(|i| entry(format!("dm-{i}"), Provenance::Dm)))
        .collect()
}

fn study_protocol() -> Check {
    let catalog = study_catalog();
    let provenance: BTreeMap<&str, Provenance> = catalog.iter().map(|e| (e.id.as_str(), e.provenance)).collect();
    let (mut left, mut pairs) = (0usize, 0usize);
    for seed in 0..1000u64 {
        let plan = build_study(&catalog, seed).map_err(|e| e.to_string())?;
        let pairs_of = |g| plan.pair_trials.iter().filter(|p| p.generator == g).count();
        let singles_of = |g| plan.single_trials.iter().filter(|s| s.generator == g).count();
        let shape = (
            pairs_of(Generator::Cgan),
            pairs_of(Generator::Dm),
            singles_of(Some(Generator::Cgan)),
            singles_of(Some(Generator::Dm)),
            singles_of(None),
        );
        ensure(shape == (10, 10, 10, 10, 10), || {
            format!("seed {seed}: composition {shape:?}")
        })?;
        let stimuli = plan.stimuli();
        ensure(stimuli.iter().collect::<HashSet<_>>().len() == 70, || {
            format!("seed {seed}: stimulus reused")
        })?;
        for p in &plan.pair_trials {
            let (fake, real) = match p.fake_side {
                Answer::Left => (&p.left, &p.right),
                _ => (&p.right, &p.left),
            };
            ensure(
                provenance[fake.as_str()] == p.generator.provenance() && provenance[real.as_str()].is_real(),
                || format!("seed {seed}: pair {} mislabelled", p.id),
            )?;
            left += usize::from(p.fake_side == Answer::Left);
            pairs += 1;
        }
        for s in &plan.single_trials {
            let real = provenance[s.stimulus.as_str()].is_real();
            ensure(
                real == (s.truth == Answer::Real) && real == s.generator.is_none(),
                || format!("seed {seed}: single {} mislabelled", s.id),
            )?;
        }
    }
    let share = left as f64 / pairs as f64;
    ensure((share - 0.5).abs() <= 0.05, || {
        format!("fake on the left in {share:.4} of pairs")
    })?;
    Ok(format!(
        "1000 plans 10+10 pairs / 10+10+10 singles; fake-left share {share:.4} (50% ± 5%)"
    ))
}

// ---------------------------------------------------------------- nn

fn gradient_check() -> Check {
    let mut rng = rng::seeded(77);
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let input = rng.random_range(2..=6);
        let hidden = [(); 4].map(|_| rng.random_range(2..=8));
        let output = rng.random_range(1..=3);
        let batch = 3;
        let net = DenseNet::five_stage(input, hidden, output, DEFAULT_LEAKY_SLOPE, Activation::Identity, seed);
        let x: Vec<f64> = (0..batch * input).map(|_| StandardNormal.sample(&mut rng)).collect();
        let targets: Vec<f64> = (0..batch * output).map(|_| f64::from(rng.random_bool(0.5))).collect();
        let weights: Vec<f64> = (0..batch * output).map(|_| rng.random_range(0.5..2.0)).collect();
        let loss = BceWithLogits {
            targets: Tensor::matrix(batch, output, targets).unwrap(),
            weights: Tensor::matrix(batch, output, weights).unwrap(),
        };
        let report =
            grad_check(&net, &Tensor::matrix(batch, input, x).unwrap(), &loss, 1e-4).map_err(|e| e.to_string())?;
        worst = worst.max(report.max_relative_error);
        ensure(report.passed, || format!("net {seed}: {report:?}"))?;
    }
    Ok(format!(
        "100 five-stage LeakyReLU nets; max relative error {worst:.2e} (< 1e-4)"
    ))
}

// ---------------------------------------------------------------- diffusion

fn forward_marginal() -> Check {
    let s = NoiseSchedule::scaled_linear(100).map_err(|e| e.to_string())?;
    let mut rng = rng::seeded(5);
    let x0: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (xt, _) = forward_noise(&x0, s.steps(), &s, 6).map_err(|e| e.to_string())?;
    let (m, v) = moments(&xt);
    ensure(m.abs() <= 0.05 && (v - 1.0).abs() <= 0.05, || {
        format!("mean {m:.4}, var {v:.4}")
    })?;
    Ok(format!(
        "t = T, 10k draws: mean {m:.4}, var {v:.4} (0 ± 0.05, 1 ± 0.05)"
    ))
}

fn reverse_oracle() -> Check {
    let s = NoiseSchedule::scaled_linear(100).map_err(|e| e.to_string())?;
    let oracle = GaussianOracle::univariate(3.0, 0.25).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = reverse_sample(&oracle, &s, 0, 10_000, 11, ReverseVariance::Beta)
        .map_err(|e| e.to_string())?
        .into_iter()
        .flatten()
        .collect();
    let (m, v) = moments(&xs);
    ensure((m - 3.0).abs() <= 0.05 && (v - 0.25).abs() <= 0.05, || {
        format!("mean {m:.4}, var {v:.4}")
    })?;
    Ok(format!(
        "T = 100, 10k samples: mean {m:.4} (3 ± 0.05), var {v:.4} (0.25 ± 0.05)"
    ))
}

fn trained_denoiser() -> Check {
    let config = DiffusionConfig {
        epochs: 300,
        batch_size: 256,
        learning_rate: 1e-3,
        seed: 1,
        ..DiffusionConfig::toy(1, 1)
    };
    let schedule = config.schedule().map_err(|e| e.to_string())?;
    let data = LabeledSet::gaussian_mixture(&[vec![0.0]], 1.0, 4096, 1);
    let (denoiser, _) = train_denoiser(&data, &schedule, &config).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * f64::from(i)).collect();
    let (mut sq, mut n) = (0.0, 0);
    for t in [1, 5, 10, 25, 50, 75, 100] {
        let ab = schedule.alpha_bar(t).map_err(|e| e.to_string())?;
        let pred = denoiser
            .predict(&xs, xs.len(), t, 0, &schedule)
            .map_err(|e| e.to_string())?;
        for (x, p) in xs.iter().zip(pred) {
            // E[ε | x_t] for x0 ~ N(0, 1), where x_t ~ N(0, 1).
            sq += (p - x * (1.0 - ab).sqrt()).powi(2);
            n += 1;
        }
    }
    let mse = sq / f64::from(n);
    ensure(mse < 0.05, || format!("grid MSE {mse:.4}"))?;
    Ok(format!(
        "grid MSE vs analytic optimum {mse:.4} (< 0.05) over {n} points"
    ))
}

// ---------------------------------------------------------------- gan

fn cgan_conditioning() -> Check {
    let modes = [[-2.0, 0.0], [2.0, 0.0]];
    let data = LabeledSet::gaussian_mixture(&modes.map(|m| m.to_vec()), 0.3, 1000, 11);
    let config = GanConfig {
        seed: 11,
        ..GanConfig::toy()
    };
    let mut model = GanModel::new(&config).map_err(|e| e.to_string())?;
    let history = train(&mut model, &data, &config).map_err(|e| e.to_string())?;
    let (mut hits, mut total) = (0, 0);
    for class in 0..2 {
        for s in generate(&model, class, 1000, 12).map_err(|e| e.to_string())? {
            let d = |m: [f64; 2]| (s[0] - m[0]).powi(2) + (s[1] - m[1]).powi(2);
            hits += usize::from(d(modes[class]) < d(modes[1 - class]));
            total += 1;
        }
    }
    let acc = hits as f64 / f64::from(total);
    ensure(acc >= 0.9, || {
        format!("{:.2}% nearer the conditioned mode", 100.0 * acc)
    })?;
    Ok(format!(
        "{} steps; {:.2}% of {total} samples nearer the conditioned mode (>= 90%)",
        history.len(),
        100.0 * acc
    ))
}

// ---------------------------------------------------------------- balancing

fn balancing() -> Check {
    let counts = CellClass::ALL.map(CellClass::reference_count);
    let w = class_weights(&counts).map_err(|e| e.to_string())?;
    let mass: Vec<f64> = w.iter().zip(&counts).map(|(w, &n)| w * n as f64).collect();
    let total: f64 = mass.iter().sum();
    let dev = mass.iter().map(|m| (m / total - 1.0 / 7.0).abs()).fold(0.0, f64::max);
    ensure(dev <= 1e-12, || format!("weighted frequency deviates by {dev:e}"))?;

    let labels: Vec<usize> = (0..7).flat_map(|c| std::iter::repeat_n(c, 1 + 3 * c)).collect();
    let idx = oversample_indices(&labels, 7, 3).map_err(|e| e.to_string())?;
    let mut per = [0usize; 7];
    idx.iter().for_each(|&i| per[labels[i]] += 1);
    ensure(per.iter().all(|&c| c == 19), || format!("oversampled counts {per:?}"))?;
    let balanced: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    let again = oversample_indices(&balanced, 7, 4).map_err(|e| e.to_string())?;
    ensure(again == (0..balanced.len()).collect::<Vec<_>>(), || {
        "not idempotent on balanced labels".into()
    })?;

    let records: Vec<ImageRecord> = CellClass::ALL
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| (0..=i as u64 % 3).map(move |s| render_phantom(c, s)))
        .collect();
    let once = oversample(&records, &CellClass::ALL, 1).map_err(|e| e.to_string())?;
    let twice = oversample(&once, &CellClass::ALL, 2).map_err(|e| e.to_string())?;
    ensure(once == twice && once.len() == 21, || {
        "record oversampling not exact or not idempotent".into()
    })?;
    Ok(format!(
        "weighted class frequency deviation {dev:.1e} (<= 1e-12); oversampling exact and idempotent"
    ))
}

// ---------------------------------------------------------------- injection

fn injection() -> Check {
    let config = InjectionConfig::default();
    let pool: Vec<ManifestEntry> = CellClass::ALL
        .iter()
        .flat_map(|&c| {
            (0..100).map(move |i| ManifestEntry {
                id: format!("probe-{c}-{i}"),
                file: format!("probe-{c}-{i}.ppm"),
                class: Some(c),
                provenance: if i % 2 == 0 { Provenance::Cgan } else { Provenance::Dm },
                split: None,
            })
        })
        .collect();
    let (mut worst_tv, mut worst_gap) = (0.0f64, 0usize);
    for seed in 0..1000u64 {
        let r = 10 + (seed % 91) as usize;
        let reals: Vec<ManifestEntry> = (0..r)
            .map(|i| ManifestEntry {
                id: format!("item-{i}"),
                file: format!("item-{i}.ppm"),
                class: None,
                provenance: Provenance::Real,
                split: None,
            })
            .collect();
        let plan = plan_injection(format!("task-{seed}"), &reals, &pool, &config, seed).map_err(|e| e.to_string())?;
        let probes = plan.probe_count();
        let total = plan.items.len();
        ensure((probes as f64 - 0.5 * total as f64).abs() <= 1.0, || {
            format!("seed {seed}: {probes} probes in {total} items")
        })?;
        let gap = plan.longest_gap();
        ensure(gap <= plan.max_gap(), || {
            format!("seed {seed}: run of {gap} non-probes")
        })?;
        let tv = total_variation(&plan.probe_class_counts(), &config.prior);
        ensure(tv <= 0.1, || format!("seed {seed}: class-prior TV {tv:.4}"))?;
        worst_tv = worst_tv.max(tv);
        worst_gap = worst_gap.max(gap);

        let manifest = serde_json::to_value(plan.annotator_manifest()).map_err(|e| e.to_string())?;
        for item in manifest["items"].as_array().unwrap() {
            let keys: Vec<&String> = item.as_object().unwrap().keys().collect();
            ensure(keys == ["file", "id"], || {
                format!("seed {seed}: annotator item fields {keys:?}")
            })?;
        }
    }
    let leaked = json!({"id": "x", "file": "x.ppm", "is_probe": true});
    ensure(serde_json::from_value::<AnnotatorItem>(leaked).is_err(), || {
        "annotator schema accepts a probe flag".into()
    })?;
    Ok(format!(
        "1000 plans at 0.5: counts within ±1, longest gap {worst_gap} (<= 4), max TV {worst_tv:.4} (<= 0.1), \
         annotator items carry only id/file"
    ))
}

// ---------------------------------------------------------------- server / cli

fn write_catalog(dir: &Path) {
    let mut records = Vec::new();
    for (provenance, tag, n) in [
        (Provenance::Phantom, "phantom", 40),
        (Provenance::Cgan, "cgan", 28),
        (Provenance::Dm, "dm", 28),
    ] {
        for i in 0..n {
            let class = CellClass::ALL[i % 7];
            let px = render_phantom(class, 500 + i as u64).pixels;
            records.push(ImageRecord::new(format!("{tag}-{i:03}"), px, provenance, Some(class)).unwrap());
        }
    }
    save_catalog(dir, &records).unwrap();
}

async fn boot(root: &Path) -> (App, String, tokio::task::JoinHandle<()>) {
    let config = ServerConfig {
        data_dir: root.join("data"),
        catalog_dir: root.join("catalog"),
        snapshot_every: 40,
        ..ServerConfig::default()
    };
    let app = App::with_catalog(config.clone(), Catalog::load(config.catalog_dir.clone()).unwrap()).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let served = app.clone();
    let task = tokio::spawn(async move { serve(served, listener).await.unwrap() });
    (app, base, task)
}

async fn server_flow(root: &Path) -> Check {
    let err = |e: reqwest::Error| e.to_string();
    let client = reqwest::Client::new();
    let (app, base, task) = boot(root).await;
    let created: Value = client
        .post(format!("{base}/studies"))
        .json(&json!({"seed": 21}))
        .send()
        .await
        .map_err(err)?
        .json()
        .await
        .map_err(err)?;
    let study = created["study"].as_str().ok_or("no study id")?.to_string();
    for (i, participant) in ["p1", "p2", "p3"].iter().enumerate() {
        let started: Value = client
            .post(format!("{base}/studies/{study}/sessions"))
            .json(&json!({"participant": participant}))
            .send()
            .await
            .map_err(err)?
            .json()
            .await
            .map_err(err)?;
        let session = started["session"].as_str().ok_or("no session id")?.to_string();
        for k in 0.. {
            let next: Value = client
                .get(format!("{base}/sessions/{session}/next"))
                .send()
                .await
                .map_err(err)?
                .json()
                .await
                .map_err(err)?;
            if next["trial"].is_null() {
                break;
            }
            let flip = (k * 7 + i * 3) % 5 < 2;
            let answer = match (next["trial"]["kind"].as_str(), flip) {
                (Some("pair"), true) => "left",
                (Some("pair"), false) => "right",
                (_, true) => "fake",
                _ => "real",
            };
            let status = client
                .post(format!("{base}/sessions/{session}/responses"))
                .header("idempotency-key", format!("{session}-{k}"))
                .json(&json!({"trial": next["trial"]["id"], "answer": answer}))
                .send()
                .await
                .map_err(err)?
                .status();
            ensure(status.is_success(), || format!("response rejected with {status}"))?;
        }
    }
    let csv = client
        .get(format!("{base}/studies/{study}/export"))
        .send()
        .await
        .map_err(err)?
        .text()
        .await
        .map_err(err)?;
    let http_report = client
        .get(format!("{base}/studies/{study}/report"))
        .send()
        .await
        .map_err(err)?
        .text()
        .await
        .map_err(err)?;
    let rows = read_responses_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    ensure(rows.len() == 150, || format!("{} exported rows", rows.len()))?;

    let log = root.join("export.csv");
    std::fs::write(&log, &csv).map_err(|e| e.to_string())?;
    let out = root.join("cli-report");
    let status = Command::new(env!("CARGO_BIN_EXE_cellprobe"))
        .args(["study", "report", "--log"])
        .arg(&log)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        String::from_utf8_lossy(&status.stderr).into_owned()
    })?;
    let cli_report = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    ensure(cli_report == http_report, || "CLI and HTTP report JSON differ".into())?;

    let live = app.state();
    task.abort();
    let _ = task.await;
    drop(app);
    let (restarted, _, task) = boot(root).await;
    ensure(restarted.state() == live, || "restart did not reproduce state".into())?;
    task.abort();
    let log_only = cellprobe_server::store::replay_from(
        &root.join("data").join(cellprobe_server::store::LOG_FILE),
        cellprobe_server::State::new(live.scoring),
    )
    .map_err(|e| e.to_string())?;
    ensure(log_only == live, || "log replay did not reproduce state".into())?;
    Ok(format!(
        "3 sessions / {} responses: HTTP and CLI report byte-identical ({} bytes); snapshot and log replay match",
        rows.len(),
        cli_report.len()
    ))
}

fn server_cli_equivalence() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_catalog(&root.path().join("catalog"));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(server_flow(root.path()))
}

// ---------------------------------------------------------------- driver

fn main() {
    let criteria: [Criterion; 10] = [
        ("metric-identities", 1, metric_identities),
        ("study-protocol", 10, study_protocol),
        ("gradient-check", 60, gradient_check),
        ("diffusion-forward-marginal", 10, forward_marginal),
        ("diffusion-reverse-oracle", 60, reverse_oracle),
        ("trained-denoiser", 300, trained_denoiser),
        ("cgan-conditioning", 300, cgan_conditioning),
        ("balancing", 1, balancing),
        ("injection", 30, injection),
        ("server-cli-equivalence", 60, server_cli_equivalence),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > Duration::from_secs(limit) => Err(format!(
                "{detail}; took {:.2} s, limit {limit} s",
                elapsed.as_secs_f64()
            )),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {name:<28} {:>7.2} s / {limit} s  {detail}", elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name:<28} {:>7.2} s / {limit} s  {detail}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
