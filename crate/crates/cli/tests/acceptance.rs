//! Acceptance checks 1-8, one PASS/FAIL line each.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use reid_core::cycle::{analyze_sequence, Extremum, ExtremumKind, Regulation};
use reid_core::eval::compute_cmc;
use reid_core::feature::fvec::{read_fvec, write_fvec};
use reid_core::feature::{pool, FeatureKey, Handcrafted, DEFAULT_KEEP};
use reid_core::metric::kissme::{fit_kissme, PairSet};
use reid_core::metric::{
    decode_model, encode_model, maha_dist, read_model, set_distance_avg, set_distance_min, write_model, Euclidean,
    FnDistance,
};
use reid_core::synth::{generate_synthetic, SynthSpec};
use reid_core::{
    run_evaluation, EvalConfig, FeatureVector, MahalanobisModel, PcaModel, PoolingMode, ReidModel, RngHandle,
    SamplingStrategy, SetMeasure,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn nearest_error(found: &[Extremum], e: &Extremum) -> Option<usize> {
    found
        .iter()
        .filter(|f| f.kind == e.kind)
        .map(|f| f.index.abs_diff(e.index))
        .min()
}

fn cycle_recovery() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for noise in [0.0, 0.1, 0.2] {
        let mut sequences = Vec::new();
        for (j, period) in [8usize, 12, 16, 24].into_iter().enumerate() {
            let out = generate_synthetic(&SynthSpec {
                identities: 13,
                frames: 64,
                period,
                noise,
                seed: 100 + j as u64,
                ..SynthSpec::default()
            })
            .map_err(|e| e.to_string())?;
            for seq in out.dataset.sequences().iter().take(25) {
                let truth = out
                    .truth
                    .iter()
                    .find(|t| t.camera == seq.camera_id() && t.person == seq.person_id())
                    .ok_or("sequence without ground truth")?;
                sequences.push((seq.clone(), truth.extrema.clone()));
            }
        }

        let start = Instant::now();
        let analysed: Vec<_> = sequences
            .iter()
            .map(|(seq, _)| analyze_sequence(seq, Regulation::default(), DEFAULT_KEEP))
            .collect();
        let secs = start.elapsed().as_secs_f64();

        let mut errors = Vec::new();
        let (mut truth_cycles, mut found_cycles) = (0usize, 0usize);
        for ((_, truth), result) in sequences.iter().zip(&analysed) {
            let (extrema, cycles) = match result {
                Ok((fep, cycles)) => (
                    reid_core::cycle::local_extrema(fep.regulated.as_deref().unwrap_or(&[])),
                    cycles.clone(),
                ),
                Err(_) => (Vec::new(), Vec::new()),
            };
            for e in truth {
                errors.push(nearest_error(&extrema, e).map_or(f64::INFINITY, |d| d as f64));
            }
            for w in truth.windows(2) {
                truth_cycles += 1;
                let (max, min) = match w[0].kind {
                    ExtremumKind::Max => (w[0].index, w[1].index),
                    ExtremumKind::Min => (w[1].index, w[0].index),
                };
                if cycles
                    .iter()
                    .any(|c| c.max_index.abs_diff(max) <= 1 && c.min_index.abs_diff(min) <= 1)
                {
                    found_cycles += 1;
                }
            }
        }
        let med = median(&mut errors);
        let found = found_cycles as f64 / truth_cycles as f64;
        ok &= med <= 1.0 && found >= 0.95 && secs < 5.0;
        details.push(format!(
            "noise {noise}: median error {med} frames, {:.1}% of {truth_cycles} cycles, {secs:.3} s",
            100.0 * found
        ));
    }
    check(ok, details.join("; "))
}

fn random_set(rng: &mut RngHandle, dim: usize) -> Vec<Vec<f64>> {
    let n = 1 + rng.below(6);
    (0..n).map(|_| (0..dim).map(|_| rng.uniform_in(-5.0, 5.0)).collect()).collect()
}

fn oracle(x: &[Vec<f64>], y: &[Vec<f64>], d: &dyn Fn(&[f64], &[f64]) -> f64) -> (f64, f64) {
    let mut all_min = f64::INFINITY;
    let mut row = 0.0;
    for a in x {
        let mut m = f64::INFINITY;
        for b in y {
            let v = d(a, b);
            m = m.min(v);
            all_min = all_min.min(v);
        }
        row += m;
    }
    let mut col = 0.0;
    for b in y {
        col += x.iter().map(|a| d(a, b)).fold(f64::INFINITY, f64::min);
    }
    (all_min, row / (2.0 * x.len() as f64) + col / (2.0 * y.len() as f64))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn set_distance_oracle() -> Outcome {
    let mut rng = RngHandle::new(2);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let dim = 2 + rng.below(7);
        let x = random_set(&mut rng, dim);
        let y = random_set(&mut rng, dim);
        let (want_min, want_avg, got_min, got_avg);
        if i % 2 == 0 {
            let plain = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            (want_min, want_avg) = oracle(&x, &y, &plain);
            got_min = set_distance_min(&x, &y, &Euclidean).map_err(|e| e.to_string())?;
            got_avg = set_distance_avg(&x, &y, &Euclidean).map_err(|e| e.to_string())?;
        } else {
            let w: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.1, 3.0)).collect();
            let weighted = |a: &[f64], b: &[f64]| {
                a.iter()
                    .zip(b)
                    .zip(&w)
                    .map(|((p, q), w)| w * (p - q).powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            (want_min, want_avg) = oracle(&x, &y, &weighted);
            let dist = FnDistance(weighted);
            got_min = set_distance_min(&x, &y, &dist).map_err(|e| e.to_string())?;
            got_avg = set_distance_avg(&x, &y, &dist).map_err(|e| e.to_string())?;
        }
        worst = worst.max(rel_err(got_min, want_min)).max(rel_err(got_avg, want_avg));
    }
    check(worst <= 1e-12, format!("1000 set pairs, worst relative error {worst:.2e}"))
}

fn pooling_laws() -> Outcome {
    let mut rng = RngHandle::new(3);
    let mut failures = Vec::new();
    for i in 0..1000 {
        let dim = 1 + rng.below(16);
        let n = 1 + rng.below(8);
        let feats: Vec<FeatureVector> = (0..n)
            .map(|_| FeatureVector::new((0..dim).map(|_| rng.uniform_in(-10.0, 10.0) as f32).collect()))
            .collect();
        let out = pool(&feats, PoolingMode::Max).map_err(|e| e.to_string())?;

        let mut shuffled = feats.clone();
        rng.shuffle(&mut shuffled);
        let permuted = pool(&shuffled, PoolingMode::Max).map_err(|e| e.to_string())? == out;

        let single = pool(&feats[..1], PoolingMode::Max).map_err(|e| e.to_string())? == feats[0].values();

        let dominance = (0..dim).all(|k| {
            let m = feats.iter().map(|f| f.values()[k]).fold(f32::NEG_INFINITY, f32::max);
            out[k] == m && feats.iter().all(|f| f.values()[k] <= out[k])
        });

        let mut raised = feats.clone();
        let (r, k) = (rng.below(n), rng.below(dim));
        let mut v = raised[r].values().to_vec();
        v[k] += rng.uniform_in(0.0, 5.0) as f32;
        raised[r] = FeatureVector::new(v);
        let after = pool(&raised, PoolingMode::Max).map_err(|e| e.to_string())?;
        let monotone = after.iter().zip(&out).all(|(a, b)| a >= b);

        if !(permuted && single && dominance && monotone) {
            failures.push(i);
        }
    }
    check(
        failures.is_empty(),
        format!("1000 instances, {} violations of permutation/identity/dominance/monotonicity", failures.len()),
    )
}

fn gaussian_pairs(n: usize, sigmas: &[f64], rng: &mut RngHandle) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..n)
        .map(|_| (sigmas.iter().map(|s| s * rng.normal()).collect(), vec![0.0; sigmas.len()]))
        .collect()
}

fn refs(v: &[(Vec<f64>, Vec<f64>)]) -> Vec<(&[f64], &[f64])> {
    v.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect()
}

/// Identities on a 2-D plane: the two camera views of one identity differ
/// only along axis 1, with difference variance 0.01; different identities
/// differ along both axes with variance 1.
fn two_axis_views(n: usize, rng: &mut RngHandle) -> Vec<(Vec<f64>, Vec<f64>)> {
    let half = 0.5f64.sqrt();
    let view = 0.005f64.sqrt();
    (0..n)
        .map(|_| {
            let (a, b) = (half * rng.normal(), half * rng.normal());
            (vec![a + view * rng.normal(), b], vec![a + view * rng.normal(), b])
        })
        .collect()
}

fn rank1(views: &[(Vec<f64>, Vec<f64>)], d: &dyn Fn(&[f64], &[f64]) -> f64) -> f64 {
    let hits = views
        .iter()
        .enumerate()
        .filter(|(i, (q, _))| {
            let best = views
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| d(q, &a.1).total_cmp(&d(q, &b.1)))
                .map(|(j, _)| j);
            best == Some(*i)
        })
        .count();
    hits as f64 / views.len() as f64
}

fn kissme_closed_form() -> Outcome {
    let mut rng = RngHandle::new(4);
    let (ss, sd) = (0.5, 2.0);
    let sim = gaussian_pairs(10_000, &[ss; 3], &mut rng);
    let dis = gaussian_pairs(10_000, &[sd; 3], &mut rng);
    let m = fit_kissme(&PairSet {
        similar: refs(&sim),
        dissimilar: refs(&dis),
    })
    .map_err(|e| e.to_string())?;
    let want = 1.0 / (ss * ss) - 1.0 / (sd * sd);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { want } else { 0.0 };
            worst = worst.max((m.entry(i, j) - target).abs() / want);
        }
    }

    let train = two_axis_views(2000, &mut rng);
    let mut similar = Vec::new();
    let mut dissimilar = Vec::new();
    for (i, (a, b)) in train.iter().enumerate() {
        similar.push((a.as_slice(), b.as_slice()));
        let (_, other) = &train[(i + 1 + rng.below(train.len() - 1)) % train.len()];
        dissimilar.push((a.as_slice(), other.as_slice()));
    }
    let learned = fit_kissme(&PairSet { similar, dissimilar }).map_err(|e| e.to_string())?;
    let test = two_axis_views(200, &mut rng);
    let euclid = rank1(&test, &|a, b| reid_core::metric::euclidean(a, b));
    let kiss = rank1(&test, &|a, b| maha_dist(&learned, a, b).unwrap());
    let gain = kiss - euclid;
    check(
        worst <= 0.05 && gain >= 0.10,
        format!(
            "isotropic worst entry error {:.2}%; 2-D rank-1 {:.3} vs Euclidean {:.3} (+{:.1} points)",
            100.0 * worst,
            kiss,
            euclid,
            100.0 * gain
        ),
    )
}

fn cmc_correctness(e2e: &[reid_core::TrialReport]) -> Outcome {
    let mut runs_ok = true;
    for report in e2e {
        for t in &report.trials {
            runs_ok &= t.cmc.is_monotone() && t.cmc.rates.last() == Some(&1.0);
        }
        runs_ok &= report.average.is_monotone() && (report.average.rates.last().unwrap() - 1.0).abs() < 1e-12;
    }

    let g = 25;
    let ids: Vec<String> = (0..g).map(|i| format!("g{i}")).collect();
    let mut rng = RngHandle::new(5);
    let mut lists = Vec::new();
    let mut truth = Vec::new();
    for q in 0..10_000 {
        let mut order = ids.clone();
        rng.shuffle(&mut order);
        lists.push(order);
        truth.push(ids[q % g].clone());
    }
    let cmc = compute_cmc(&lists, &truth);
    let worst = (1..=g)
        .map(|r| (cmc.rate_at(r) - r as f64 / g as f64).abs())
        .fold(0.0, f64::max);
    let random_ok = cmc.is_monotone() && cmc.rate_at(g) == 1.0 && worst <= 0.02;
    check(
        runs_ok && random_ok,
        format!(
            "{} evaluated curves monotone ending at 1: {runs_ok}; random ranking G={g}, 10^4 queries, max |rate - r/G| {worst:.4}",
            e2e.iter().map(|r| r.trials.len() + 1).sum::<usize>()
        ),
    )
}

fn end_to_end(reports: &mut Vec<reid_core::TrialReport>) -> Outcome {
    let start = Instant::now();
    let data = generate_synthetic(&SynthSpec {
        identities: 20,
        ..SynthSpec::default()
    })
    .map_err(|e| e.to_string())?
    .dataset;
    let base = EvalConfig::default();
    let run = |cfg: &EvalConfig| run_evaluation(&data, cfg, &Handcrafted).map_err(|e| e.to_string());
    let default = run(&base)?;
    let default_secs = start.elapsed().as_secs_f64();

    let k = base.strategy.frames().unwrap_or(4);
    let random_whole = run(&EvalConfig {
        strategy: SamplingStrategy::RandomWhole(k),
        ..base.clone()
    })?;
    let avg = run(&EvalConfig {
        pooling: PoolingMode::Average,
        ..base.clone()
    })?;
    let first = run(&EvalConfig {
        pooling: PoolingMode::FirstFrame,
        ..base.clone()
    })?;
    let dmin = run(&EvalConfig {
        measure: SetMeasure::Min,
        ..base.clone()
    })?;
    let total_secs = start.elapsed().as_secs_f64();

    let r = |x: &reid_core::TrialReport| x.rank1();
    let ok = r(&default) >= 0.90
        && r(&default) >= r(&random_whole)
        && r(&default) >= r(&avg)
        && r(&avg) >= r(&first)
        && r(&default) >= r(&dmin)
        && default_secs < 120.0;
    let detail = format!(
        "rank-1 {:.3} (representative, max, d_avg); random_whole {:.3}; avg {:.3}; first {:.3}; d_min {:.3}; default run {default_secs:.1} s, all five {total_secs:.1} s",
        r(&default),
        r(&random_whole),
        r(&avg),
        r(&first),
        r(&dmin)
    );
    reports.extend([default, random_whole, avg, first, dmin]);
    check(ok, detail)
}

fn reid(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_reid"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    reid(dir, &["synth", "--out", "data"])?;
    reid(dir, &["eval", "--data", "data", "--seed", "7", "--out", "first"])?;
    reid(dir, &["eval", "--data", "data", "--seed", "7", "--out", "second"])?;
    let a = fs::read(dir.join("first/cmc.csv")).map_err(|e| e.to_string())?;
    let b = fs::read(dir.join("second/cmc.csv")).map_err(|e| e.to_string())?;
    check(
        !a.is_empty() && a == b,
        format!("two `eval --seed 7` runs, cmc.csv {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    )
}

fn format_round_trips() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = RngHandle::new(8);

    let dim = 7;
    let specials = [0.0f32, -0.0, f32::MIN_POSITIVE, 1e-45, f32::MAX, -f32::MAX, 1.0 / 3.0];
    let mut rows: Vec<Vec<f32>> = (0..50)
        .map(|_| (0..dim).map(|_| f32::from_bits(rng.next_u64() as u32 & 0x7f7f_ffff)).collect())
        .collect();
    rows.push(specials.to_vec());
    let keys: Vec<FeatureKey> = (0..rows.len())
        .map(|i| FeatureKey::new(format!("p{i:03}"), if i % 2 == 0 { "cam1" } else { "cam2" }, i as u64 * 3))
        .collect();
    let table: Vec<(FeatureKey, &[f32])> = keys.iter().cloned().zip(rows.iter().map(Vec::as_slice)).collect();
    let path = tmp.path().join("rows.fvec");
    write_fvec(&path, dim, &table).map_err(|e| e.to_string())?;
    let (read_dim, read) = read_fvec(&path).map_err(|e| e.to_string())?;
    let fvec_ok = read_dim == dim
        && read.len() == rows.len()
        && read.iter().zip(&keys).zip(&rows).all(|(((k, v), key), row)| {
            k == key && v.iter().map(|x| x.to_bits()).eq(row.iter().map(|x| x.to_bits()))
        });

    let (p, d) = (3, 5);
    let mean: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let comps: Vec<f64> = (0..p * d).map(|_| rng.normal()).collect();
    let m: Vec<f64> = (0..p * p).map(|_| rng.normal()).collect();
    let model = ReidModel::new(
        PcaModel::from_parts(mean, comps, p).map_err(|e| e.to_string())?,
        MahalanobisModel::from_row_major(p, m).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mpath = tmp.path().join("model.rdm");
    write_model(&mpath, &model).map_err(|e| e.to_string())?;
    let back = read_model(&mpath).map_err(|e| e.to_string())?;
    let bits = |r: &ReidModel| -> Vec<u64> {
        r.pca
            .mean()
            .iter()
            .chain(r.pca.components())
            .chain(r.metric.matrix())
            .map(|v| v.to_bits())
            .collect()
    };
    let model_ok = bits(&back) == bits(&model);

    let bytes = encode_model(&model);
    let mut undetected = 0;
    for bit in 0..bytes.len() * 8 {
        let mut bad = bytes.clone();
        bad[bit / 8] ^= 1 << (bit % 8);
        if decode_model(&bad).is_ok() {
            undetected += 1;
        }
    }
    check(
        fvec_ok && model_ok && undetected == 0,
        format!(
            "FVEC {} rows bit-exact: {fvec_ok}; model bit-exact: {model_ok}; {} single-bit corruptions, {undetected} undetected",
            rows.len(),
            bytes.len() * 8
        ),
    )
}

fn main() -> ExitCode {
    let mut reports = Vec::new();
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "cycle recovery", cycle_recovery()),
        (2, "set distance oracle", set_distance_oracle()),
        (3, "max pooling laws", pooling_laws()),
        (4, "KISSME closed form", kissme_closed_form()),
    ];
    let e2e = end_to_end(&mut reports);
    results.push((5, "CMC correctness", cmc_correctness(&reports)));
    results.push((6, "end-to-end synthetic re-id", e2e));
    results.push((7, "eval determinism", determinism()));
    results.push((8, "format round-trips", format_round_trips()));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
