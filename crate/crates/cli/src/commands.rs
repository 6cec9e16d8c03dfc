use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use reid_core::cycle::{self, SamplingStrategy, WalkingCycle};
use reid_core::dataset::{load_sequence, save_dataset};
use reid_core::eval::{report_text, run_sweep, train_model, write_report_bundle, SweepAxis};
use reid_core::feature::fvec::{read_fvec, write_fvec};
use reid_core::feature::{pool as pool_features, FeatureKey, FeatureSource, Handcrafted};
use reid_core::metric::write_model;
use reid_core::rng::{derive_seed, label_tag, RngHandle};
use reid_core::synth::{generate_synthetic, truth_csv, SynthSpec};
use reid_core::{load_dataset, run_evaluation, Dataset, Extractor, FeatureVector, FrameSequence};

use crate::config::Settings;
use crate::error::CliError;
use crate::SynthArgs;

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e)),
        None => Ok(()),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    fs::write(path, body).map_err(|e| CliError::io(path.display(), e))
}

/// Writes to `--out` when given, else to stdout.
fn emit(settings: &Settings, body: &str) -> Result<(), CliError> {
    match &settings.out {
        Some(path) => write_file(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load(settings: &Settings) -> Result<Dataset, CliError> {
    Ok(load_dataset(settings.require_data()?)?)
}

fn load_one(settings: &Settings, seq: &str) -> Result<FrameSequence, CliError> {
    let (camera, person) = seq
        .split_once('/')
        .filter(|(c, p)| !c.is_empty() && !p.is_empty())
        .ok_or_else(|| CliError::Usage(format!("--seq expects <camera>/<person>, got {seq:?}")))?;
    let dir = settings.require_data()?.join(camera).join(person);
    Ok(load_sequence(&dir, camera, person)?)
}

enum Source {
    Handcrafted(Handcrafted),
    External(reid_core::feature::ExternalFeatures),
}

impl Source {
    fn open(settings: &Settings) -> Result<Self, CliError> {
        Ok(match &settings.features_file {
            Some(path) => Self::External(reid_core::feature::load_external_features(path)?),
            None => Self::Handcrafted(Handcrafted),
        })
    }

    fn get(&self) -> &dyn FeatureSource {
        match self {
            Self::Handcrafted(h) => h,
            Self::External(e) => e,
        }
    }
}

pub fn synth(settings: &Settings, args: &SynthArgs) -> Result<(), CliError> {
    let out = settings.require_out()?;
    let mut spec = SynthSpec {
        identities: args.identities,
        frames: args.length,
        period: args.period,
        width: args.width,
        height: args.height,
        noise: args.noise,
        occlusion: args.occlusion,
        ..SynthSpec::default()
    };
    if settings.seed_given {
        spec.seed = settings.eval.seed;
    }
    let generated = generate_synthetic(&spec)?;
    save_dataset(&generated.dataset, out)?;
    write_file(&out.join("truth.csv"), &truth_csv(&generated.truth))?;
    println!(
        "wrote {} sequences of {} frames to {}",
        generated.dataset.sequences().len(),
        spec.frames,
        out.display()
    );
    Ok(())
}

fn signal_csv(values: &[f64]) -> String {
    let mut s = String::from("frame_index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{i},{v}");
    }
    s
}

/// With `--out <dir>` writes `fep_raw.csv` and `fep_regulated.csv`;
/// otherwise prints the regulated profile.
pub fn fep(settings: &Settings, seq: &str) -> Result<(), CliError> {
    let sequence = load_one(settings, seq)?;
    let raw = cycle::compute_fep(&sequence).raw;
    let regulated = settings.eval.regulation.apply(&raw, settings.eval.keep)?;
    match &settings.out {
        Some(dir) => {
            write_file(&dir.join("fep_raw.csv"), &signal_csv(&raw))?;
            write_file(&dir.join("fep_regulated.csv"), &signal_csv(&regulated))?;
        }
        None => print!("{}", signal_csv(&regulated)),
    }
    Ok(())
}

pub fn cycles(settings: &Settings, seq: Option<&str>) -> Result<(), CliError> {
    let sequences = match seq {
        Some(s) => vec![load_one(settings, s)?],
        None => load(settings)?.sequences().to_vec(),
    };
    let mut s = String::from("camera,person,max_index,min_index\n");
    for sequence in &sequences {
        let found = cycle::analyze_sequence(sequence, settings.eval.regulation, settings.eval.keep);
        let cycles = match (found, seq) {
            (Ok((_, c)), _) => c,
            (Err(e), Some(_)) => return Err(e.into()),
            (Err(e), None) => {
                eprintln!("{}/{}: {}", sequence.camera_id(), sequence.person_id(), e.kind());
                continue;
            }
        };
        for c in cycles {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                sequence.camera_id(),
                sequence.person_id(),
                c.max_index,
                c.min_index
            );
        }
    }
    emit(settings, &s)
}

pub fn features(settings: &Settings) -> Result<(), CliError> {
    let dataset = load(settings)?;
    let out = settings.require_out()?;
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for seq in dataset.sequences() {
        for (i, frame) in seq.frames().iter().enumerate() {
            keys.push(FeatureKey::new(seq.person_id(), seq.camera_id(), i as u64));
            values.push(Handcrafted.extract(frame).into_values());
        }
    }
    let rows: Vec<(FeatureKey, &[f32])> = keys.into_iter().zip(values.iter().map(Vec::as_slice)).collect();
    ensure_parent(out)?;
    write_fvec(out, Extractor::dim(&Handcrafted), &rows)?;
    println!("wrote {} frame features to {}", rows.len(), out.display());
    Ok(())
}

fn read_cycles(path: &Path) -> Result<BTreeMap<(String, String), Vec<WalkingCycle>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut out: BTreeMap<(String, String), Vec<WalkingCycle>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::Pipeline {
            kind: "FormatError",
            message: format!("{} line {}: expected camera,person,max_index,min_index", path.display(), i + 1),
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let [camera, person, max, min] = f[..] else {
            return Err(bad());
        };
        let cycle = WalkingCycle {
            max_index: max.parse().map_err(|_| bad())?,
            min_index: min.parse().map_err(|_| bad())?,
        };
        out.entry((camera.to_string(), person.to_string())).or_default().push(cycle);
    }
    Ok(out)
}

/// Pools `--features-file` rows per frame group. Output rows are keyed by
/// group ordinal in place of the frame index.
pub fn pool(settings: &Settings, cycles_file: Option<&Path>) -> Result<(), CliError> {
    let input = settings
        .features_file
        .as_ref()
        .ok_or_else(|| CliError::Usage("--features-file is required".into()))?;
    let out = settings.require_out()?;
    let strategy = settings.eval.strategy;
    let (dim, rows) = read_fvec(input)?;
    let mut by_seq: BTreeMap<(String, String), BTreeMap<u64, FeatureVector>> = BTreeMap::new();
    for (key, v) in rows {
        by_seq
            .entry((key.camera, key.person))
            .or_default()
            .insert(key.index, FeatureVector::new(v));
    }
    let known_cycles = match (cycles_file, strategy.uses_cycles()) {
        (Some(path), _) => read_cycles(path)?,
        (None, true) => {
            let dataset = load(settings)?;
            let mut map = BTreeMap::new();
            for seq in dataset.sequences() {
                if let Ok((_, c)) = cycle::analyze_sequence(seq, settings.eval.regulation, settings.eval.keep) {
                    map.insert((seq.camera_id().to_string(), seq.person_id().to_string()), c);
                }
            }
            map
        }
        (None, false) => BTreeMap::new(),
    };

    let mut keys = Vec::new();
    let mut pooled = Vec::new();
    for ((camera, person), frames) in &by_seq {
        let frame_count = frames.keys().next_back().map_or(0, |&i| i as usize + 1);
        let cycles = known_cycles
            .get(&(camera.clone(), person.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let mut rng = RngHandle::new(derive_seed(settings.eval.seed, &[label_tag(camera), label_tag(person)]));
        let groups = match cycle::sample_frames(frame_count, cycles, strategy, &mut rng) {
            Err(cycle::CycleError::NoCycleFound) if strategy.uses_cycles() => {
                eprintln!("{camera}/{person}: no cycle, sampling random halves");
                let k = strategy.frames().unwrap_or(4);
                cycle::sample_frames(frame_count, &[], SamplingStrategy::RandomHalves(k), &mut rng)?
            }
            other => other?,
        };
        for (ordinal, group) in groups.iter().enumerate() {
            let feats = group
                .iter()
                .map(|&i| {
                    frames
                        .get(&(i as u64))
                        .cloned()
                        .ok_or_else(|| reid_core::FeatureError::MissingFeature {
                            person: person.clone(),
                            camera: camera.clone(),
                            frame: i as u64,
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            keys.push(FeatureKey::new(person.as_str(), camera.as_str(), ordinal as u64));
            pooled.push(pool_features(&feats, settings.eval.pooling)?);
        }
    }
    let rows: Vec<(FeatureKey, &[f32])> = keys.into_iter().zip(pooled.iter().map(Vec::as_slice)).collect();
    ensure_parent(out)?;
    write_fvec(out, dim, &rows)?;
    println!("wrote {} pooled descriptors to {}", rows.len(), out.display());
    Ok(())
}

pub fn train(settings: &Settings) -> Result<(), CliError> {
    let dataset = load(settings)?;
    let out = settings.require_out()?;
    let source = Source::open(settings)?;
    let trained = train_model(&dataset, &settings.eval, source.get())?;
    ensure_parent(out)?;
    write_model(out, &trained.model)?;
    println!(
        "trained on {} identities ({} descriptors, {} similar / {} dissimilar pairs): {} -> {} dims, wrote {}",
        trained.identities,
        trained.descriptors,
        trained.similar_pairs,
        trained.dissimilar_pairs,
        trained.model.pca.input_dim(),
        trained.model.pca.output_dim(),
        out.display()
    );
    Ok(())
}

pub fn eval(settings: &Settings) -> Result<(), CliError> {
    let dataset = load(settings)?;
    let source = Source::open(settings)?;
    let out = settings.out.clone().unwrap_or_else(|| "reid-report".into());
    let report = run_evaluation(&dataset, &settings.eval, source.get())?;
    write_report_bundle(&report, &out)?;
    print!("{}", report_text(&report));
    Ok(())
}

pub fn sweep(settings: &Settings, axis: &str, values: &[String]) -> Result<(), CliError> {
    let axis: SweepAxis = axis.parse().map_err(CliError::Usage)?;
    let dataset = load(settings)?;
    let source = Source::open(settings)?;
    let out = settings.out.clone().unwrap_or_else(|| "reid-sweep".into());
    let grid = run_sweep(&dataset, &settings.eval, axis, values, source.get())?;
    write_file(&out.join("sweep.csv"), &grid.to_csv())?;
    print!("{}", grid.to_table());
    Ok(())
}
