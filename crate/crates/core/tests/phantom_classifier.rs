//! A hand-crafted feature classifier must tell the phantom classes apart;
//! otherwise the phantoms would be useless as class-conditioned stand-ins.

use cellprobe::catalog::{render_phantom, Pixels, IMAGE_SIDE};
use cellprobe::CellClass;

const FEATURES: usize = 10;
const BACKGROUND: [f64; 3] = [232.0, 222.0, 236.0];

fn luminance(p: [u8; 3]) -> f64 {
    p.iter().map(|&c| c as f64).sum::<f64>() / 3.0
}

fn features(px: &Pixels) -> [f64; FEATURES] {
    let n = IMAGE_SIDE;
    let at = |x: usize, y: usize| px.rgb(x, y);
    let is_fg = |p: [u8; 3]| {
        p.iter()
            .zip(BACKGROUND)
            .map(|(&c, b)| (c as f64 - b).abs())
            .sum::<f64>()
            > 40.0
    };
    let is_dark = |p: [u8; 3]| luminance(p) < 110.0;

    let mut area = 0.0f64;
    let mut rgb = [0.0; 3];
    let mut dark = 0.0;
    let mut dark_lum = 0.0;
    let mut orange = 0.0;
    let mut edges = 0.0;
    let mut lum_sq = 0.0;
    let mut lum_sum = 0.0;
    for y in 0..n {
        for x in 0..n {
            let p = at(x, y);
            if !is_fg(p) {
                continue;
            }
            area += 1.0;
            for c in 0..3 {
                rgb[c] += p[c] as f64;
            }
            let l = luminance(p);
            lum_sum += l;
            lum_sq += l * l;
            if is_dark(p) {
                dark += 1.0;
                dark_lum += l;
            }
            if p[0] as f64 > p[1] as f64 + 50.0 && p[0] as f64 > p[2] as f64 + 50.0 {
                orange += 1.0;
            }
            if x + 1 < n && (luminance(at(x + 1, y)) - l).abs() > 35.0 {
                edges += 1.0;
            }
        }
    }
    let area_n = area.max(1.0);
    let lum_mean = lum_sum / area_n;

    // Dark connected components of at least four pixels.
    let mut seen = vec![false; n * n];
    let mut blobs = 0.0;
    for start in 0..n * n {
        if seen[start] || !is_dark(at(start % n, start / n)) {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % n, i / n);
            let neighbours = [
                (x > 0).then(|| i - 1),
                (x + 1 < n).then(|| i + 1),
                (y > 0).then(|| i - n),
                (y + 1 < n).then(|| i + n),
            ];
            for j in neighbours.into_iter().flatten() {
                if !seen[j] && is_dark(at(j % n, j / n)) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if size >= 4 {
            blobs += 1.0;
        }
    }

    [
        area / 100.0,
        rgb[0] / area_n,
        rgb[1] / area_n,
        rgb[2] / area_n,
        dark / area_n,
        blobs,
        edges / area_n,
        orange / area_n,
        (lum_sq / area_n - lum_mean * lum_mean).max(0.0).sqrt(),
        if dark > 0.0 { dark_lum / dark } else { 0.0 },
    ]
}

#[test]
fn nearest_centroid_separates_phantom_classes() {
    let per_class = 100;
    let train: Vec<Vec<[f64; FEATURES]>> = CellClass::ALL
        .iter()
        .map(|&c| (0..per_class).map(|s| features(&render_phantom(c, s).pixels)).collect())
        .collect();

    // Standardise with training statistics.
    let all: Vec<&[f64; FEATURES]> = train.iter().flatten().collect();
    let mut mean = [0.0; FEATURES];
    let mut std = [0.0; FEATURES];
    for f in 0..FEATURES {
        mean[f] = all.iter().map(|v| v[f]).sum::<f64>() / all.len() as f64;
        std[f] = (all.iter().map(|v| (v[f] - mean[f]).powi(2)).sum::<f64>() / all.len() as f64)
            .sqrt()
            .max(1e-9);
    }
    let z = |v: &[f64; FEATURES]| -> [f64; FEATURES] { std::array::from_fn(|f| (v[f] - mean[f]) / std[f]) };
    let centroids: Vec<[f64; FEATURES]> = train
        .iter()
        .map(|rows| std::array::from_fn(|f| rows.iter().map(|v| z(v)[f]).sum::<f64>() / rows.len() as f64))
        .collect();

    let classify = |v: &[f64; FEATURES]| {
        let zv = z(v);
        (0..centroids.len())
            .min_by(|&a, &b| {
                let d = |k: usize| centroids[k].iter().zip(&zv).map(|(c, x)| (c - x).powi(2)).sum::<f64>();
                d(a).total_cmp(&d(b))
            })
            .unwrap()
    };

    // Held-out phantoms.
    let mut correct = 0;
    let mut total = 0;
    for (k, &class) in CellClass::ALL.iter().enumerate() {
        for seed in 1000..1000 + per_class {
            total += 1;
            if classify(&features(&render_phantom(class, seed).pixels)) == k {
                correct += 1;
            }
        }
    }
    let accuracy = correct as f64 / total as f64;
    println!("held-out phantom accuracy {accuracy:.4}");
    assert!(accuracy >= 0.95, "{accuracy}");
}
