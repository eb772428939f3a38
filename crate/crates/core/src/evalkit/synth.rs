//! Seeded synthetic signature corpus.
//!
//! Each genuine subject gets a random *style*: a few smooth strokes through
//! random control points, a pen radius and a per-stroke pressure wave that
//! modulates ink darkness and width. Genuine samples re-render the style
//! with small control-point noise plus a slight scale and shift. Forgers
//! trace a victim's style with larger noise and flat pressure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusSubject, Sample};
use crate::raster::{GrayImage, BACKGROUND};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub canvas_width: usize,
    pub canvas_height: usize,
    /// Control-point noise of genuine samples, as a fraction of canvas height.
    pub genuine_jitter: f64,
    /// Control-point noise of forgeries, as a fraction of canvas height.
    pub forgery_jitter: f64,
    /// Standard deviation of the per-sample scale factor around 1.
    pub scale_jitter: f64,
    /// Standard deviation of the per-sample shift, pixels.
    pub shift_jitter: f64,
    /// Fraction of pixels replaced by salt-and-pepper noise.
    pub noise_density: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            canvas_width: 640,
            canvas_height: 320,
            genuine_jitter: 0.012,
            forgery_jitter: 0.04,
            scale_jitter: 0.03,
            shift_jitter: 6.0,
            noise_density: 5e-4,
        }
    }
}

#[derive(Debug, Clone)]
struct Stroke {
    points: Vec<(f64, f64)>,
    radius: f64,
    phase: f64,
    freq: f64,
    amp: f64,
}

#[derive(Debug, Clone)]
struct Style {
    strokes: Vec<Stroke>,
    /// Intensity at full pressure.
    ink: f64,
}

enum Pressure {
    Natural { phase_noise: f64 },
    Flat(f64),
}

fn rng_for(seed: u64, subject: u32, stream: u64) -> ChaCha8Rng {
    let mut s = ChaCha8Rng::seed_from_u64(seed);
    s.set_stream(((subject as u64) << 20) ^ stream);
    s
}

fn random_style(rng: &mut ChaCha8Rng, w: f64, h: f64) -> Style {
    let n_strokes = rng.random_range(2..=5);
    let left = w * rng.random_range(0.05..0.15);
    let right = w * rng.random_range(0.75..0.95);
    let center = h * rng.random_range(0.38..0.62);
    let amp = h * rng.random_range(0.10..0.28);
    let span = (right - left) / n_strokes as f64;
    let strokes = (0..n_strokes)
        .map(|s| {
            let x0 = left + s as f64 * span;
            let len = span * rng.random_range(0.75..1.1);
            let k = rng.random_range(4..=8);
            let base = center + amp * rng.random_range(-0.3..0.3);
            let points = (0..k)
                .map(|i| {
                    let t = i as f64 / (k - 1) as f64;
                    let x = x0 + t * len + span * rng.random_range(-0.12..0.12);
                    let y = base + amp * rng.random_range(-1.0..1.0);
                    (x, y)
                })
                .collect();
            Stroke {
                points,
                radius: rng.random_range(2.0..3.5),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                freq: rng.random_range(0.5..2.0),
                amp: rng.random_range(0.3..0.45),
            }
        })
        .collect();
    Style {
        strokes,
        ink: rng.random_range(10.0..50.0),
    }
}

/// Catmull-Rom point on the segment `p1 -> p2` at parameter `t`.
fn catmull_rom(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let f = |a: f64, b: f64, c: f64, d: f64| {
        0.5 * (2.0 * b + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 + (-a + 3.0 * b - 3.0 * c + d) * t3)
    };
    (f(p0.0, p1.0, p2.0, p3.0), f(p0.1, p1.1, p2.1, p3.1))
}

fn stamp(img: &mut GrayImage, cx: f64, cy: f64, r: f64, value: u8) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let x0 = ((cx - r).floor() as isize).max(0);
    let x1 = ((cx + r).ceil() as isize).min(w - 1);
    let y0 = ((cy - r).floor() as isize).max(0);
    let y1 = ((cy + r).ceil() as isize).min(h - 1);
    let r2 = r * r;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r2 {
                let (ux, uy) = (x as usize, y as usize);
                if img.get(ux, uy) > value {
                    img.set(ux, uy, value);
                }
            }
        }
    }
}

fn render(style: &Style, rng: &mut ChaCha8Rng, cfg: &SynthConfig, jitter: f64, pressure: Pressure) -> GrayImage {
    let (w, h) = (cfg.canvas_width as f64, cfg.canvas_height as f64);
    let mut img = GrayImage::filled(cfg.canvas_width, cfg.canvas_height, BACKGROUND).expect("nonzero canvas");
    let point_noise = Normal::new(0.0, (jitter * h).max(1e-12)).expect("finite std");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let scale = 1.0 + cfg.scale_jitter * unit.sample(rng);
    let (dx, dy) = (cfg.shift_jitter * unit.sample(rng), cfg.shift_jitter * unit.sample(rng));
    let (cx, cy) = (w / 2.0, h / 2.0);

    for stroke in &style.strokes {
        let pts: Vec<(f64, f64)> = stroke
            .points
            .iter()
            .map(|&(x, y)| {
                let x = x + point_noise.sample(rng);
                let y = y + point_noise.sample(rng);
                (cx + (x - cx) * scale + dx, cy + (y - cy) * scale + dy)
            })
            .collect();
        let phase = match pressure {
            Pressure::Natural { phase_noise } => stroke.phase + phase_noise * unit.sample(rng),
            Pressure::Flat(_) => 0.0,
        };
        let n = pts.len();
        let segments = n - 1;
        for s in 0..segments {
            let p0 = pts[s.saturating_sub(1)];
            let (p1, p2) = (pts[s], pts[s + 1]);
            let p3 = pts[(s + 2).min(n - 1)];
            let chord = ((p2.0 - p1.0).powi(2) + (p2.1 - p1.1).powi(2)).sqrt();
            let steps = ((chord * 3.0).ceil() as usize).max(1);
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let (x, y) = catmull_rom(p0, p1, p2, p3, t);
                let along = (s as f64 + t) / segments as f64;
                let p = match pressure {
                    Pressure::Natural { .. } => {
                        (0.55 + stroke.amp * (std::f64::consts::TAU * stroke.freq * along + phase).sin()).clamp(0.15, 1.0)
                    }
                    Pressure::Flat(level) => level,
                };
                let value = 255.0 - (255.0 - style.ink) * (0.25 + 0.75 * p);
                stamp(&mut img, x, y, stroke.radius * (0.7 + 0.3 * p), value.round() as u8);
            }
        }
    }

    let specks = (cfg.noise_density * w * h).round() as usize;
    for _ in 0..specks {
        let x = rng.random_range(0..cfg.canvas_width);
        let y = rng.random_range(0..cfg.canvas_height);
        img.set(x, y, if rng.random_bool(0.5) { 0 } else { BACKGROUND });
    }
    img
}

/// [`synth_corpus_with`] at generator defaults.
pub fn synth_corpus(n_subjects: usize, n_samples: usize, n_forger_subjects: usize, seed: u64) -> Result<Corpus> {
    synth_corpus_with(n_subjects, n_samples, n_forger_subjects, seed, &SynthConfig::default())
}

/// Genuine subjects get ids `0..n_subjects`; forgers follow. Each forger
/// imitates one victim, drawn without replacement while victims remain.
pub fn synth_corpus_with(
    n_subjects: usize,
    n_samples: usize,
    n_forger_subjects: usize,
    seed: u64,
    cfg: &SynthConfig,
) -> Result<Corpus> {
    if cfg.canvas_width == 0 || cfg.canvas_height == 0 {
        return Err(crate::Error::Config("synthetic canvas must be at least 1x1".into()));
    }
    let (w, h) = (cfg.canvas_width as f64, cfg.canvas_height as f64);
    let styles: Vec<Style> = (0..n_subjects as u32)
        .map(|id| random_style(&mut rng_for(seed, id, 1), w, h))
        .collect();

    let mut subjects = Vec::with_capacity(n_subjects + n_forger_subjects);
    for (id, style) in styles.iter().enumerate() {
        let id = id as u32;
        let mut rng = rng_for(seed, id, 2);
        let samples = (0..n_samples as u32)
            .map(|sample_id| Sample {
                sample_id,
                raster: render(style, &mut rng, cfg, cfg.genuine_jitter, Pressure::Natural { phase_noise: 0.2 }),
            })
            .collect();
        subjects.push(CorpusSubject {
            subject_id: id,
            genuine: true,
            forged_victim: None,
            samples,
        });
    }

    if n_subjects > 0 {
        let mut victim_rng = rng_for(seed, u32::MAX, 3);
        let mut victims: Vec<u32> = Vec::with_capacity(n_forger_subjects);
        while victims.len() < n_forger_subjects {
            let mut round: Vec<u32> = (0..n_subjects as u32).collect();
            round.shuffle(&mut victim_rng);
            victims.extend(round.into_iter().take(n_forger_subjects - victims.len()));
        }
        for (f, &victim) in victims.iter().enumerate() {
            let id = (n_subjects + f) as u32;
            let mut rng = rng_for(seed, id, 4);
            let level = rng.random_range(0.45..0.7);
            let samples = (0..n_samples as u32)
                .map(|sample_id| Sample {
                    sample_id,
                    raster: render(&styles[victim as usize], &mut rng, cfg, cfg.forgery_jitter, Pressure::Flat(level)),
                })
                .collect();
            subjects.push(CorpusSubject {
                subject_id: id,
                genuine: false,
                forged_victim: Some(victim),
                samples,
            });
        }
    }
    Ok(Corpus { subjects })
}
