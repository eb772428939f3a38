//! Property and oracle checks shared by the integration tests and the
//! acceptance report. Each returns a one-line summary or the failures.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigfuse::evalkit::cmc;
use sigfuse::featex::{extract_features, extract_global, grid_partition, FEATURE_DIM};
use sigfuse::matchers::{
    euclidean_score, gaussian_empirical_score, mahalanobis_score, MatcherConfig, SubjectStats,
};
use sigfuse::raster::{
    binarize, extract_hpr, otsu_threshold, preprocess, thin, BinaryImage, GrayImage, ImageSet, PreprocessConfig,
};
use sigfuse::svmfuse::{fused_score, prune_dependent, train, Kernel, SvmModel, TrainConfig};

use crate::oracles;

pub type Check = Result<String, String>;

fn verdict(failures: Vec<String>, summary: String) -> Check {
    if failures.is_empty() {
        Ok(summary)
    } else {
        let shown: Vec<&str> = failures.iter().take(5).map(String::as_str).collect();
        Err(format!("{} failure(s): {}", failures.len(), shown.join("; ")))
    }
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let a = random_vec(rng, d * d, 1.0);
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            c[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>();
        }
        c[i * d + i] += d as f64 / 4.0;
    }
    c
}

/// Matcher scores against the straight-line formulas on random small cases.
pub fn matcher_formulas(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let (mut worst_ed, mut worst_md, mut worst_ge) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..cases {
        let d = rng.random_range(1..=8);
        let mean = random_vec(&mut rng, d, 3.0);
        let std: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..2.0)).collect();
        let mask: Vec<bool> = (0..d).map(|_| rng.random_bool(0.7)).collect();
        let cov = random_spd(&mut rng, d);
        let q: Vec<f64> = mean.iter().zip(&std).map(|(m, s)| m + s * rng.random_range(-4.0..4.0)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..2.0)).collect();
        let k = rng.random_range(1..=3u8);
        let stats = SubjectStats::from_parts(case as u32, mean.clone(), std.clone(), &cov, mask.clone())
            .map_err(|e| e.to_string())?;
        let cfg = MatcherConfig {
            k,
            weights: Some(w.clone()),
            ..Default::default()
        };
        let ed = euclidean_score(&q, &stats, &cfg).map_err(|e| e.to_string())?;
        let md = mahalanobis_score(&q, &stats).map_err(|e| e.to_string())?;
        let ge = gaussian_empirical_score(&q, &stats, &cfg).map_err(|e| e.to_string())?;
        let d_ed = (ed - oracles::euclidean(&q, &mean, &std, Some(&w))).abs();
        let d_md = (md - oracles::mahalanobis(&q, &mean, &cov)).abs();
        let d_ge = (ge - oracles::gaussian_count(&q, &mean, &std, &mask, k as f64)).abs();
        worst_ed = worst_ed.max(d_ed);
        worst_md = worst_md.max(d_md);
        worst_ge = worst_ge.max(d_ge);
        if d_ed > 1e-9 || d_md > 1e-9 || d_ge > 1e-9 {
            failures.push(format!("case {case}: |d| ed {d_ed:.2e} md {d_md:.2e} ge {d_ge:.2e}"));
        }
    }
    verdict(
        failures,
        format!("{cases} cases, max |d| ed {worst_ed:.1e} md {worst_md:.1e} ge {worst_ge:.1e}"),
    )
}

/// Mahalanobis distance under the identity equals plain L2.
pub fn mahalanobis_identity(cases: usize, d: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eye = vec![0.0; d * d];
    (0..d).for_each(|i| eye[i * d + i] = 1.0);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for case in 0..cases {
        let mean = random_vec(&mut rng, d, 5.0);
        let q = random_vec(&mut rng, d, 5.0);
        let stats = SubjectStats::from_parts(0, mean.clone(), vec![1.0; d], &eye, vec![true; d])
            .map_err(|e| e.to_string())?;
        let l2 = mean.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let delta = (mahalanobis_score(&q, &stats).map_err(|e| e.to_string())? - l2).abs();
        worst = worst.max(delta);
        if delta > 1e-12 {
            failures.push(format!("case {case}: |d| {delta:.2e}"));
        }
    }
    verdict(failures, format!("{cases} cases of dim {d}, max |d| {worst:.1e}"))
}

type KernelFn = Box<dyn Fn(&[f64], &[f64]) -> f64>;

fn kernel_fn(kernel: Kernel) -> KernelFn {
    match kernel {
        Kernel::Linear => Box::new(oracles::linear_kernel),
        Kernel::Rbf { gamma } => Box::new(oracles::rbf_kernel(gamma)),
    }
}

fn toy_set(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<i8>) {
    let points: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let mut labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    labels[0] = 1;
    labels[n - 1] = -1;
    (points, labels)
}

/// SMO against exhaustive active-set enumeration on toy sets of 2..=8
/// points, linear and rbf kernels.
pub fn smo_vs_bruteforce(sets_per_size: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let (mut worst_obj, mut worst_dec, mut worst_kkt) = (0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for n in 2..=8 {
        for set in 0..sets_per_size {
            let (points, labels) = toy_set(&mut rng, n);
            for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.5 }, Kernel::Rbf { gamma: 3.0 }] {
                for c in [1.0, 10.0] {
                    cases += 1;
                    let k = kernel_fn(kernel);
                    let cfg = TrainConfig {
                        kernel,
                        c_reg: c,
                        kkt_tol: 1e-10,
                        max_passes: 100_000,
                        ..Default::default()
                    };
                    let tag = format!("n={n} set={set} {kernel:?} C={c}");
                    let out = match train(&points, &labels, &cfg) {
                        Ok(o) => o,
                        Err(e) => {
                            failures.push(format!("{tag}: {e}"));
                            continue;
                        }
                    };
                    let Some(exact) = oracles::svm_dual_bruteforce(&points, &labels, c, &*k) else {
                        failures.push(format!("{tag}: oracle found no KKT point"));
                        continue;
                    };
                    let d_obj = (out.objective - exact.objective).abs();
                    worst_obj = worst_obj.max(d_obj);

                    // Kernel part is unique; the bias is unique unless no
                    // multiplier is free, in which case it lies in an interval.
                    let b = out.model.bias;
                    let bias_gap = (exact.bias_lo - b).max(b - exact.bias_hi).max(0.0);
                    let mut probes = points.clone();
                    probes.extend((0..20).map(|_| (0..3).map(|_| rng.random_range(-0.5..1.5)).collect()));
                    let mut d_dec = bias_gap;
                    for x in &probes {
                        let ours = fused_score(&out.model, x) - b;
                        let theirs = exact.kernel_part(x, &points, &labels, &*k);
                        d_dec = d_dec.max((ours - theirs).abs());
                    }
                    worst_dec = worst_dec.max(d_dec);
                    let kkt = oracles::kkt_residual(&points, &labels, &out.alphas, b, c, &*k);
                    worst_kkt = worst_kkt.max(kkt);
                    if d_obj > 1e-6 || d_dec > 1e-6 || kkt > 1e-3 || !out.converged {
                        failures.push(format!(
                            "{tag}: |d obj| {d_obj:.2e} |d f| {d_dec:.2e} kkt {kkt:.2e} converged {}",
                            out.converged
                        ));
                    }
                }
            }
        }
    }
    verdict(
        failures,
        format!("{cases} toy problems, max |d obj| {worst_obj:.1e}, max |d f| {worst_dec:.1e}, max kkt {worst_kkt:.1e}"),
    )
}

fn probe_grid(side: usize, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    let step = (hi - lo) / (side - 1) as f64;
    let mut g = Vec::with_capacity(side * side * side);
    for a in 0..side {
        for b in 0..side {
            for c in 0..side {
                g.push([lo + a as f64 * step, lo + b as f64 * step, lo + c as f64 * step]);
            }
        }
    }
    g
}

/// Trained model with one support vector split into redundant pieces: an
/// exact duplicate, or (linear kernel) the midpoint of two new points.
fn inject(model: &SvmModel, rng: &mut ChaCha8Rng, collinear: bool) -> SvmModel {
    let mut m = model.clone();
    let k = rng.random_range(0..m.sv_count());
    let (alpha, y) = (m.alphas[k], m.labels[k]);
    let sv = m.support_vectors[k].clone();
    if collinear {
        // x/2 + (x+v)/4 + (x-v)/4 = x, and x = ((x+v) + (x-v)) / 2.
        let v: Vec<f64> = (0..sv.len()).map(|_| rng.random_range(-0.3..0.3)).collect();
        m.alphas[k] = alpha / 2.0;
        for sign in [1.0, -1.0] {
            m.support_vectors.push(sv.iter().zip(&v).map(|(a, b)| a + sign * b).collect());
            m.alphas.push(alpha / 4.0);
            m.labels.push(y);
        }
    } else {
        m.alphas[k] = alpha / 2.0;
        m.support_vectors.push(sv);
        m.alphas.push(alpha / 2.0);
        m.labels.push(y);
    }
    m
}

/// Pruning removes injected duplicate or collinear support vectors without
/// moving the decision surface on a 10^3 grid.
pub fn prune_injected(models: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = probe_grid(10, -0.2, 1.2);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut built = 0;
    let mut attempt = 0;
    while built < models {
        attempt += 1;
        let n = rng.random_range(10..=30);
        let (points, labels) = toy_set(&mut rng, n);
        let collinear = attempt % 2 == 0;
        let kernel = if collinear { Kernel::Linear } else { Kernel::Rbf { gamma: 2.0 } };
        let cfg = TrainConfig {
            kernel,
            ..Default::default()
        };
        let Ok(out) = train(&points, &labels, &cfg) else { continue };
        if out.model.sv_count() == 0 {
            continue;
        }
        let base = prune_dependent(&out.model, &cfg);
        let injected = inject(&base, &mut rng, collinear);
        let pruned = prune_dependent(&injected, &cfg);
        built += 1;
        let shift = grid
            .iter()
            .map(|x| (fused_score(&pruned, x) - fused_score(&injected, x)).abs())
            .fold(0.0, f64::max);
        worst = worst.max(shift);
        if pruned.sv_count() >= injected.sv_count() || shift > 1e-6 {
            failures.push(format!(
                "model {built} ({kernel:?}): {} -> {} SVs, max shift {shift:.2e}",
                injected.sv_count(),
                pruned.sv_count()
            ));
        }
    }
    verdict(failures, format!("{models} injected models, all reduced, max |d f| {worst:.1e} on 1000 probes"))
}

/// Random grayscale raster: noisy light background with dark strokes and
/// blobs of varying intensity.
pub fn random_raster(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    let mut img = GrayImage::filled(w, h, 255).unwrap();
    for y in 0..h {
        for x in 0..w {
            img.set(x, y, rng.random_range(215..=255));
        }
    }
    for _ in 0..rng.random_range(1..6) {
        let ink: u8 = rng.random_range(0..120);
        let (mut x, mut y) = (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
        let r = rng.random_range(0.5..3.0f64);
        for _ in 0..rng.random_range(5..60) {
            x = (x + rng.random_range(-2.0..2.0)).clamp(0.0, (w - 1) as f64);
            y = (y + rng.random_range(-2.0..2.0)).clamp(0.0, (h - 1) as f64);
            let ri = r.ceil() as isize;
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    let (px, py) = (x as isize + dx, y as isize + dy);
                    if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h && ((dx * dx + dy * dy) as f64) <= r * r {
                        let v = ink.saturating_add(rng.random_range(0..40));
                        img.set(px as usize, py as usize, v);
                    }
                }
            }
        }
    }
    img
}

/// Thinning idempotence and shrinkage, HPR factor monotonicity and Otsu
/// against the exhaustive scan.
pub fn raster_properties(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..count {
        let (w, h) = (rng.random_range(8..90), rng.random_range(8..90));
        let img = random_raster(&mut rng, w, h);
        let mut hist = [0u64; 256];
        img.data().iter().for_each(|&v| hist[v as usize] += 1);
        if otsu_threshold(&hist) != oracles::otsu_exhaustive(&hist) {
            failures.push(format!("raster {i}: otsu {:?} vs {:?}", otsu_threshold(&hist), oracles::otsu_exhaustive(&hist)));
        }
        let binary = binarize(&img);
        let thinned = thin(&binary);
        if thin(&thinned) != thinned {
            failures.push(format!("raster {i}: thinning not idempotent"));
        }
        if !thinned.is_subset_of(&binary) || thinned.count() > binary.count() {
            failures.push(format!("raster {i}: thinning grew the foreground"));
        }
        let factors = [0.1, 0.25, 0.5, 0.75, 0.9];
        let hprs: Vec<BinaryImage> = factors
            .iter()
            .map(|&f| {
                let cfg = PreprocessConfig {
                    hpr_factor: f,
                    ..Default::default()
                };
                extract_hpr(&img, &binary, &cfg).unwrap()
            })
            .collect();
        for j in 1..hprs.len() {
            // factors[j] >= factors[j - 1] so the band can only shrink.
            if !hprs[j].is_subset_of(&hprs[j - 1]) {
                failures.push(format!("raster {i}: HPR({}) not inside HPR({})", factors[j], factors[j - 1]));
            }
        }
        if !hprs[0].is_subset_of(&binary) {
            failures.push(format!("raster {i}: HPR outside the foreground"));
        }
    }
    verdict(failures, format!("{count} rasters: thin idempotent and shrinking, HPR monotone, Otsu = exhaustive scan"))
}

fn identity_cfg(w: usize, h: usize) -> PreprocessConfig {
    PreprocessConfig {
        target_width: w,
        target_height: h,
        ..Default::default()
    }
}

/// Shift every pixel of `img` by `(dx, dy)` onto a white canvas.
fn shifted(img: &GrayImage, dx: usize, dy: usize) -> GrayImage {
    let mut out = GrayImage::filled(img.width(), img.height(), 255).unwrap();
    for y in 0..img.height() - dy {
        for x in 0..img.width() - dx {
            out.set(x + dx, y + dy, img.get(x, y));
        }
    }
    out
}

/// Feature length and finiteness, translation invariance of the size and
/// area features, and exact grid tiling.
pub fn feature_invariants(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let cfg = PreprocessConfig::default();

    // Length and finiteness, including degenerate inputs.
    let mut inputs = vec![
        GrayImage::filled(40, 20, 255).unwrap(),
        GrayImage::filled(40, 20, 0).unwrap(),
        GrayImage::filled(1, 1, 255).unwrap(),
        GrayImage::filled(3, 700, 17).unwrap(),
    ];
    for _ in 0..12 {
        let (w, h) = (rng.random_range(5..200), rng.random_range(5..120));
        inputs.push(random_raster(&mut rng, w, h));
    }
    for (i, img) in inputs.iter().enumerate() {
        match preprocess(img, &cfg).and_then(|s| extract_features(&s)) {
            Ok(f) if f.as_slice().len() == FEATURE_DIM && f.as_slice().iter().all(|v| v.is_finite()) => {}
            Ok(_) => failures.push(format!("input {i}: wrong length or non-finite value")),
            Err(e) => failures.push(format!("input {i}: {e}")),
        }
    }

    // Translation on an identity-sized canvas.
    let size_slots = [
        "width",
        "height",
        "aspect_ratio",
        "hproj_sum_binary",
        "hproj_sum_thinned",
        "vproj_sum_binary",
        "vproj_sum_thinned",
        "area_binary",
        "area_thinned",
        "area_hpr",
        "narea_binary",
        "narea_thinned",
        "narea_hpr",
    ];
    for t in 0..6 {
        let (w, h) = (160, 90);
        let mut base = GrayImage::filled(w, h, 255).unwrap();
        let content = random_raster(&mut rng, 90, 50);
        for y in 0..50 {
            for x in 0..90 {
                base.set(x + 5, y + 5, content.get(x, y));
            }
        }
        let (dx, dy) = (rng.random_range(0..50), rng.random_range(0..30));
        let a = extract_global(&preprocess(&base, &identity_cfg(w, h)).unwrap());
        let b = extract_global(&preprocess(&shifted(&base, dx, dy), &identity_cfg(w, h)).unwrap());
        let (fa, fb) = (a.to_array(), b.to_array());
        let names = sigfuse::featex::GLOBAL_FEATURE_NAMES;
        for name in size_slots {
            let j = names.iter().position(|n| *n == name).unwrap();
            if fa[j] != fb[j] {
                failures.push(format!("shift {t}: {name} {} vs {}", fa[j], fb[j]));
            }
        }
        let moved = ((b.cog_x - a.cog_x) - dx as f64).abs().max(((b.cog_y - a.cog_y) - dy as f64).abs());
        if a.area_binary > 0.0 && moved > 1e-9 {
            failures.push(format!(
                "shift {t}: cog moved by ({}, {}), expected ({dx}, {dy})",
                b.cog_x - a.cog_x,
                b.cog_y - a.cog_y
            ));
        }
    }

    // Grid tiling on every size 5..=64 in both axes.
    let mut tilings = 0;
    for w in 5..=64 {
        for h in 5..=64 {
            let data: Vec<bool> = (0..w * h).map(|i| (i * 7 + i / w) % 3 == 0).collect();
            let bin = BinaryImage::new(w, h, data.clone()).unwrap();
            let gray = GrayImage::new(w, h, data.iter().map(|&b| if b { 0 } else { 255 }).collect()).unwrap();
            let set = ImageSet::new(gray, bin.clone(), bin.clone(), bin).unwrap();
            let cells = grid_partition(&set).unwrap();
            tilings += 1;
            let mut rebuilt = vec![None; w * h];
            let mut y0 = 0;
            for r in 0..5 {
                let mut x0 = 0;
                let ch = cells[r * 5].height();
                for c in 0..5 {
                    let cell = &cells[r * 5 + c];
                    if cell.height() != ch || cell.width() == 0 || ch == 0 {
                        failures.push(format!("{w}x{h}: ragged cell ({r},{c})"));
                    }
                    for y in 0..cell.height() {
                        for x in 0..cell.width() {
                            if x0 + x < w && y0 + y < h {
                                let slot = &mut rebuilt[(y0 + y) * w + x0 + x];
                                if slot.is_some() {
                                    failures.push(format!("{w}x{h}: overlap at ({}, {})", x0 + x, y0 + y));
                                }
                                *slot = Some(cell.binary.get(x, y));
                            }
                        }
                    }
                    x0 += cell.width();
                }
                if x0 != w {
                    failures.push(format!("{w}x{h}: row {r} widths sum to {x0}"));
                }
                y0 += ch;
            }
            if y0 != h {
                failures.push(format!("{w}x{h}: heights sum to {y0}"));
            }
            if rebuilt.iter().zip(&data).any(|(r, &d)| *r != Some(d)) {
                failures.push(format!("{w}x{h}: cells do not reproduce the raster"));
            }
        }
    }
    verdict(
        failures,
        format!("{} inputs length {FEATURE_DIM} and finite, 6 shifts invariant, {tilings} grid sizes tile exactly", inputs.len()),
    )
}

/// CMC curves: the hand-checked case plus random rank lists against direct
/// counting.
pub fn cmc_properties(trials: usize, seed: u64) -> Check {
    let mut failures = Vec::new();
    let fixed = cmc(&[1, 1, 2], 2).map_err(|e| e.to_string())?;
    if fixed.probabilities != vec![2.0 / 3.0, 1.0] {
        failures.push(format!("[1,1,2] gave {:?}", fixed.probabilities));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let n = rng.random_range(1..60);
        let probes = rng.random_range(1..200);
        let ranks: Vec<usize> = (0..probes).map(|_| rng.random_range(1..=n)).collect();
        let curve = cmc(&ranks, n).map_err(|e| e.to_string())?;
        let p = &curve.probabilities;
        if p.len() != n || p.windows(2).any(|w| w[0] > w[1]) || *p.last().unwrap() != 1.0 {
            failures.push(format!("trial {t}: not a valid CMC curve"));
        }
        if *p != oracles::cmc_reference(&ranks, n) {
            failures.push(format!("trial {t}: differs from direct count"));
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            failures.push(format!("trial {t}: value outside [0, 1]"));
        }
    }
    verdict(failures, format!("[1,1,2] -> [2/3, 1]; {trials} random rank lists nondecreasing, end at 1.0"))
}
