//! Parametric stand-in cell images.
//!
//! A phantom is first drawn as a [`PhantomSpec`] (cell outline, nuclei,
//! granules, vacuoles) and then rasterised onto a textured background. Both
//! steps are pure functions of `(class, seed)`.

use std::f64::consts::TAU;

use rand::Rng as _;

use super::{CellClass, ImageRecord, Pixels, Provenance, IMAGE_LEN, IMAGE_SIDE};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub x: f64,
    pub y: f64,
    pub rx: f64,
    pub ry: f64,
    /// Rotation of the `rx` axis in radians.
    pub angle: f64,
}

impl Blob {
    fn round(x: f64, y: f64, r: f64) -> Self {
        Self {
            x,
            y,
            rx: r,
            ry: r,
            angle: 0.0,
        }
    }

    fn contains(&self, px: f64, py: f64) -> bool {
        let (dx, dy) = (px - self.x, py - self.y);
        let (s, c) = self.angle.sin_cos();
        let u = (dx * c + dy * s) / self.rx;
        let v = (-dx * s + dy * c) / self.ry;
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub class: CellClass,
    pub center: (f64, f64),
    pub radius: f64,
    /// Outline wobble: `(amplitude, frequency, phase)` terms on the radius.
    pub wobble: Vec<(f64, f64, f64)>,
    pub cytoplasm: [f64; 3],
    pub nuclei: Vec<Blob>,
    pub nucleus_color: [f64; 3],
    pub granules: Vec<Blob>,
    pub granule_color: [f64; 3],
    /// Light inclusions: macrophage vacuoles, erythrocyte central pallor.
    pub vacuoles: Vec<Blob>,
    pub vacuole_color: [f64; 3],
    pub texture_seed: u64,
}

const BACKGROUND: [f64; 3] = [232.0, 222.0, 236.0];

fn jitter(rng: &mut rng::Rng, base: [f64; 3], amount: f64) -> [f64; 3] {
    base.map(|c| c + rng.random_range(-amount..=amount))
}

/// Point uniformly inside a disc of radius `r` around `(cx, cy)`.
fn in_disc(rng: &mut rng::Rng, cx: f64, cy: f64, r: f64) -> (f64, f64) {
    let rho = r * rng.random::<f64>().sqrt();
    let theta = rng.random_range(0.0..TAU);
    (cx + rho * theta.cos(), cy + rho * theta.sin())
}

fn speckle(rng: &mut rng::Rng, cx: f64, cy: f64, r: f64, n: usize, size: (f64, f64)) -> Vec<Blob> {
    (0..n)
        .map(|_| {
            let (x, y) = in_disc(rng, cx, cy, r);
            Blob::round(x, y, rng.random_range(size.0..size.1))
        })
        .collect()
}

/// Parametric description of the phantom for `(class, seed)`.
pub fn describe_phantom(class: CellClass, seed: u64) -> PhantomSpec {
    let mut rng = rng::stream(seed, class.index() as u64 + 1);
    let half = IMAGE_SIDE as f64 / 2.0;
    let center = (half + rng.random_range(-2.5..2.5), half + rng.random_range(-2.5..2.5));
    let (cx, cy) = center;
    let wobble = (0..2)
        .map(|k| {
            (
                rng.random_range(0.01..0.05),
                (3 + 2 * k) as f64,
                rng.random_range(0.0..TAU),
            )
        })
        .collect();

    let mut spec = PhantomSpec {
        class,
        center,
        radius: 0.0,
        wobble,
        cytoplasm: [0.0; 3],
        nuclei: Vec::new(),
        nucleus_color: [0.0; 3],
        granules: Vec::new(),
        granule_color: [0.0; 3],
        vacuoles: Vec::new(),
        vacuole_color: [238.0, 232.0, 242.0],
        texture_seed: rng.random(),
    };

    match class {
        CellClass::Neutrophil => {
            spec.radius = rng.random_range(12.0..14.5);
            spec.cytoplasm = jitter(&mut rng, [222.0, 188.0, 214.0], 5.0);
            spec.nucleus_color = jitter(&mut rng, [95.0, 40.0, 120.0], 6.0);
            // Segmented nucleus: 3-4 touching lobes along an arc.
            let lobes = rng.random_range(3..=4);
            let start = rng.random_range(0.0..TAU);
            let arc = 4.5;
            for k in 0..lobes {
                let theta = start + k as f64 * 1.1;
                spec.nuclei.push(Blob::round(
                    cx + arc * theta.cos(),
                    cy + arc * theta.sin(),
                    rng.random_range(2.8..3.6),
                ));
            }
        }
        CellClass::Multinuclear => {
            spec.radius = rng.random_range(22.0..26.0);
            spec.cytoplasm = jitter(&mut rng, [198.0, 178.0, 220.0], 5.0);
            spec.nucleus_color = jitter(&mut rng, [80.0, 40.0, 130.0], 6.0);
            let n = rng.random_range(3..=6);
            let start = rng.random_range(0.0..TAU);
            for k in 0..n {
                let theta = start + k as f64 * TAU / n as f64 + rng.random_range(-0.2..0.2);
                let rho = rng.random_range(9.0..12.0);
                let r = rng.random_range(4.5..6.0);
                spec.nuclei.push(Blob {
                    x: cx + rho * theta.cos(),
                    y: cy + rho * theta.sin(),
                    rx: r,
                    ry: r * rng.random_range(0.8..1.0),
                    angle: theta,
                });
            }
        }
        CellClass::Mast => {
            spec.radius = rng.random_range(13.0..16.0);
            spec.cytoplasm = jitter(&mut rng, [172.0, 124.0, 192.0], 5.0);
            spec.nucleus_color = jitter(&mut rng, [92.0, 42.0, 130.0], 5.0);
            spec.nuclei.push(Blob::round(
                cx + rng.random_range(-2.0..2.0),
                cy + rng.random_range(-2.0..2.0),
                rng.random_range(4.5..5.5),
            ));
            spec.granule_color = jitter(&mut rng, [62.0, 18.0, 96.0], 5.0);
            let n = rng.random_range(90..130);
            spec.granules = speckle(&mut rng, cx, cy, spec.radius - 1.5, n, (0.7, 1.3));
        }
        CellClass::Macrophage => {
            spec.radius = rng.random_range(18.0..22.0);
            spec.cytoplasm = jitter(&mut rng, [188.0, 184.0, 214.0], 5.0);
            spec.nucleus_color = jitter(&mut rng, [112.0, 72.0, 152.0], 6.0);
            let theta = rng.random_range(0.0..TAU);
            let off = spec.radius * 0.45;
            spec.nuclei.push(Blob {
                x: cx + off * theta.cos(),
                y: cy + off * theta.sin(),
                rx: rng.random_range(6.0..8.0),
                ry: rng.random_range(4.0..5.0),
                angle: theta + TAU / 4.0,
            });
            let n = rng.random_range(6..=12);
            spec.vacuoles = speckle(&mut rng, cx, cy, spec.radius - 3.0, n, (1.5, 3.0));
        }
        CellClass::Lymphocyte => {
            spec.radius = rng.random_range(8.0..10.0);
            spec.cytoplasm = jitter(&mut rng, [150.0, 170.0, 222.0], 5.0);
            spec.nucleus_color = jitter(&mut rng, [58.0, 30.0, 108.0], 5.0);
            spec.nuclei.push(Blob::round(
                cx + rng.random_range(-0.8..0.8),
                cy + rng.random_range(-0.8..0.8),
                spec.radius * rng.random_range(0.72..0.8),
            ));
        }
        CellClass::Erythrocyte => {
            spec.radius = rng.random_range(7.0..9.0);
            spec.cytoplasm = jitter(&mut rng, [224.0, 120.0, 110.0], 5.0);
            spec.vacuole_color = jitter(&mut rng, [240.0, 172.0, 162.0], 4.0);
            spec.vacuoles
                .push(Blob::round(cx, cy, spec.radius * rng.random_range(0.35..0.45)));
        }
        CellClass::Eosinophil => {
            spec.radius = rng.random_range(13.0..15.5);
            spec.cytoplasm = jitter(&mut rng, [236.0, 152.0, 122.0], 5.0);
            spec.nucleus_color = jitter(&mut rng, [100.0, 50.0, 122.0], 6.0);
            let theta = rng.random_range(0.0..TAU);
            for sign in [-1.0, 1.0] {
                spec.nuclei.push(Blob::round(
                    cx + sign * 3.8 * theta.cos(),
                    cy + sign * 3.8 * theta.sin(),
                    rng.random_range(3.2..4.0),
                ));
            }
            spec.granule_color = jitter(&mut rng, [214.0, 84.0, 56.0], 5.0);
            let n = rng.random_range(60..90);
            spec.granules = speckle(&mut rng, cx, cy, spec.radius - 1.5, n, (0.9, 1.6));
        }
    }
    spec
}

fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Rasterise a spec to 64×64 RGB.
pub fn rasterize(spec: &PhantomSpec) -> Pixels {
    let mut rng = rng::seeded(spec.texture_seed);
    // Low-frequency background shading.
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(1.5..4.0),
                rng.random_range(0.03..0.12),
                rng.random_range(0.03..0.12),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();

    let (cx, cy) = spec.center;
    let mut bytes = Vec::with_capacity(IMAGE_LEN);
    for y in 0..IMAGE_SIDE {
        for x in 0..IMAGE_SIDE {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let shade: f64 = waves
                .iter()
                .map(|&(a, fx, fy, ph)| a * (fx * px + fy * py + ph).sin())
                .sum();
            let (dx, dy) = (px - cx, py - cy);
            let theta = dy.atan2(dx);
            let edge = spec.radius
                * (1.0
                    + spec
                        .wobble
                        .iter()
                        .map(|&(a, f, ph)| a * (f * theta + ph).sin())
                        .sum::<f64>());
            let inside = (dx * dx + dy * dy).sqrt() <= edge;

            let base = if !inside {
                BACKGROUND.map(|c| c + shade)
            } else if spec.nuclei.iter().any(|b| b.contains(px, py)) {
                spec.nucleus_color
            } else if spec.granules.iter().any(|b| b.contains(px, py)) {
                spec.granule_color
            } else if spec.vacuoles.iter().any(|b| b.contains(px, py)) {
                spec.vacuole_color
            } else {
                spec.cytoplasm
            };
            for c in base {
                bytes.push(to_byte(c + rng.random_range(-5.0..=5.0)));
            }
        }
    }
    Pixels::new(bytes).expect("64x64x3 by construction")
}

/// Deterministic phantom record for `(class, seed)`.
pub fn render_phantom(class: CellClass, seed: u64) -> ImageRecord {
    let spec = describe_phantom(class, seed);
    ImageRecord::new(
        format!("phantom-{}-{seed}", class.name()),
        rasterize(&spec),
        Provenance::Phantom,
        Some(class),
    )
    .expect("phantom ids are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        for c in CellClass::ALL {
            assert_eq!(render_phantom(c, 11), render_phantom(c, 11));
        }
        assert_ne!(
            render_phantom(CellClass::Mast, 1).pixels,
            render_phantom(CellClass::Mast, 2).pixels
        );
    }

    #[test]
    fn nucleus_rules() {
        for seed in 0..50 {
            assert!(describe_phantom(CellClass::Erythrocyte, seed).nuclei.is_empty());
            assert!(describe_phantom(CellClass::Multinuclear, seed).nuclei.len() >= 3);
            assert_eq!(describe_phantom(CellClass::Lymphocyte, seed).nuclei.len(), 1);
            assert!(!describe_phantom(CellClass::Eosinophil, seed).granules.is_empty());
        }
    }

    #[test]
    fn cell_fits_in_frame() {
        for c in CellClass::ALL {
            for seed in 0..20 {
                let s = describe_phantom(c, seed);
                let reach = s.radius * 1.1;
                assert!(s.center.0 - reach > 0.0 && s.center.0 + reach < IMAGE_SIDE as f64);
            }
        }
    }
}
