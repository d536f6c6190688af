use cellprobe::dataset::LabeledSet;
use cellprobe::gan::{generate, train, GanConfig, GanModel};

/// Share of class-conditioned samples that land nearer their own mode.
pub fn conditioning_accuracy(seed: u64) -> f64 {
    let modes = [vec![-2.0, 0.0], vec![2.0, 0.0]];
    let data = LabeledSet::gaussian_mixture(&modes, 0.3, 1000, seed);
    let config = GanConfig {
        seed,
        ..GanConfig::toy()
    };
    let mut model = GanModel::new(&config).unwrap();
    train(&mut model, &data, &config).unwrap();
    let mut hits = 0;
    let mut total = 0;
    for class in 0..2 {
        for s in generate(&model, class, 1000, seed + 1).unwrap() {
            let own = (s[0] - modes[class][0]).powi(2) + s[1].powi(2);
            let other = (s[0] - modes[1 - class][0]).powi(2) + s[1].powi(2);
            hits += (own < other) as usize;
            total += 1;
        }
    }
    hits as f64 / total as f64
}

#[test]
fn toy_run_is_about_two_thousand_steps_and_finite() {
    let data = LabeledSet::gaussian_mixture(&[vec![-2.0, 0.0], vec![2.0, 0.0]], 0.3, 1000, 5);
    let config = GanConfig {
        seed: 5,
        ..GanConfig::toy()
    };
    let mut model = GanModel::new(&config).unwrap();
    let history = train(&mut model, &data, &config).unwrap();
    assert_eq!(history.len(), 63 * 32);
    assert!(history
        .iter()
        .all(|l| l.discriminator.is_finite() && l.generator.is_finite()));
    assert!(model.generator.params_finite() && model.discriminator.params_finite());
    let mean_x = |class| {
        let s = generate(&model, class, 500, 9).unwrap();
        s.iter().map(|v| v[0]).sum::<f64>() / s.len() as f64
    };
    assert!(mean_x(1) - mean_x(0) >= 1.0);
}

#[test]
fn samples_follow_the_conditioned_mode() {
    let acc = conditioning_accuracy(11);
    println!("conditioning accuracy {acc}");
    assert!(acc >= 0.9, "{acc}");
}
