use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::defaults::{defaults_for, resolve_config, DEFAULTS, DEFAULTS_VERSION};
use super::{CrossvalArgs, PipelineArgs, PredictArgs, PrepareArgs, SynthArgs, TrainArgs};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, emit_report, stratified_holdout, AggregateReport, CrossValConfig};
use crate::landmark::{
    load_clip, save_clip, synth_generate, Clip, DatasetManifest, Label, ManifestEntry,
};
use crate::neuralnet::{
    load_model, predicted_label, save_model, train, AugmentMode, AugmentOptions, FeatureSpec,
    Model, ModelConfig, TrainOptions,
};
use crate::segmentation::{cut_clip, group_by_video, load_annotations, plan_spans};
use crate::seed::derive_path;

const CLIP_DIR: &str = "clips";
const MANIFEST_FILE: &str = "manifest.csv";

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub counts: BTreeMap<Label, usize>,
    /// `(video_id, reason)` for videos or clips left out.
    pub skipped: Vec<(String, String)>,
    pub manifest_path: PathBuf,
}

fn read_exclusions(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn landmark_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "jsonl") {
            if let Some(stem) = path.file_stem() {
                files.insert(stem.to_string_lossy().into_owned(), path);
            }
        }
    }
    Ok(files)
}

/// Plans and cuts clips for every video with a landmark file.
pub fn cmd_prepare(args: &PrepareArgs) -> Result<PrepareSummary> {
    let mut annotations = group_by_video(load_annotations(&args.annotations)?);
    let landmarks = landmark_files(&args.landmarks)?;
    let excluded = match &args.exclude {
        Some(path) => read_exclusions(path)?,
        None => BTreeSet::new(),
    };

    let videos: BTreeSet<String> = annotations
        .keys()
        .chain(landmarks.keys())
        .filter(|v| !excluded.contains(*v))
        .cloned()
        .collect();

    let clip_dir = args.out.join(CLIP_DIR);
    create_dir(&clip_dir)?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut videos_used = 0usize;

    for video in &videos {
        let Some(path) = landmarks.get(video) else {
            skipped.push((video.clone(), "missing landmark file".to_string()));
            continue;
        };
        let source = match load_clip(path) {
            Ok(clip) => clip,
            Err(e) => {
                skipped.push((video.clone(), e.to_string()));
                continue;
            }
        };
        let video_annotations = annotations.remove(video).unwrap_or_default();
        let plan = match plan_spans(video, &video_annotations, source.end_s) {
            Ok(plan) => plan,
            Err(e) => {
                skipped.push((video.clone(), e.to_string()));
                continue;
            }
        };
        videos_used += 1;
        let planned = plan
            .positives
            .iter()
            .map(|s| (Label::HandFlapping, *s))
            .enumerate()
            .chain(plan.controls.iter().map(|s| (Label::Control, *s)).enumerate());
        for (i, (label, span)) in planned {
            let clip_id = format!("{video}_{label}_{i:02}");
            let clip = match cut_clip(&source, span, label, &clip_id) {
                Ok(clip) => clip,
                Err(e) => {
                    skipped.push((video.clone(), format!("{clip_id}: {e}")));
                    continue;
                }
            };
            let rel = Path::new(CLIP_DIR).join(format!("{clip_id}.jsonl"));
            save_clip(&clip, args.out.join(&rel))?;
            entries.push(ManifestEntry {
                clip_id,
                label,
                path: rel,
            });
        }
    }

    let manifest = DatasetManifest::new(entries, &args.out)?;
    let manifest_path = args.out.join(MANIFEST_FILE);
    manifest.save(&manifest_path)?;

    let mut skip_report = String::from("video_id,reason\n");
    for (video, reason) in &skipped {
        skip_report.push_str(&format!("{video},\"{}\"\n", reason.replace('"', "'")));
    }
    let skip_path = args.out.join("skipped.csv");
    fs::write(&skip_path, skip_report).map_err(|e| Error::io(&skip_path, e))?;
    write_json(
        &args.out.join("prepare_config.json"),
        &json!({
            "command": "prepare",
            "annotations": args.annotations,
            "landmarks": args.landmarks,
            "exclude": args.exclude,
            "excluded_videos": excluded,
            "min_clip_s": crate::landmark::MIN_CLIP_DURATION_S,
            "max_clip_s": crate::segmentation::MAX_CLIP_DURATION_S,
        }),
    )?;

    let counts = manifest.counts();
    println!(
        "flap={} control={} videos={} skipped={}",
        counts.get(&Label::HandFlapping).unwrap_or(&0),
        counts.get(&Label::Control).unwrap_or(&0),
        videos_used,
        skipped.len()
    );
    if !videos.is_empty() && videos_used == 0 {
        return Err(Error::validation(format!(
            "all {} videos were skipped; see {}",
            videos.len(),
            skip_path.display()
        )));
    }
    Ok(PrepareSummary {
        counts,
        skipped,
        manifest_path,
    })
}

fn train_options(pipeline: &PipelineArgs) -> TrainOptions {
    TrainOptions {
        features: FeatureSpec::new(pipeline.features, pipeline.interpolate),
        augment: pipeline.augment.then_some(AugmentOptions {
            mode: if pipeline.augment_replace {
                AugmentMode::Replace
            } else {
                AugmentMode::Supplement
            },
            z_slack: pipeline.z_slack,
        }),
    }
}

fn config_echo(command: &str, pipeline: &PipelineArgs, config: &ModelConfig) -> serde_json::Value {
    json!({
        "command": command,
        "defaults_version": DEFAULTS_VERSION,
        "defaults_table": DEFAULTS,
        "representation_defaults": defaults_for(pipeline.features),
        "features": pipeline.features.name(),
        "interpolate": pipeline.interpolate,
        "augment": pipeline.augment,
        "augment_replace": pipeline.augment_replace,
        "z_slack": pipeline.z_slack,
        "seed": pipeline.seed,
        "validation_fraction": pipeline.val_fraction,
        "hidden_units": config.hidden_units,
        "learning_rate": config.learning_rate,
        "param_count": config.param_count(),
        "model": config,
    })
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must be in (0, 1), got {fraction}"
        )));
    }
    Ok(())
}

pub fn cmd_crossval(args: &CrossvalArgs) -> Result<AggregateReport> {
    check_fraction(args.pipeline.val_fraction)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let clips = manifest.load_clips()?;
    let model = resolve_config(args.pipeline.features, &args.hyper.overrides(), args.pipeline.seed);
    model.validate()?;

    let mut echo = config_echo("crossval", &args.pipeline, &model);
    echo["manifest"] = json!(args.manifest);
    echo["folds"] = json!(args.folds);
    echo["runs"] = json!(args.runs);
    echo["jobs"] = json!(args.jobs);
    create_dir(&args.out)?;
    write_json(&args.out.join(crate::evaluation::CONFIG_FILE), &echo)?;

    let config = CrossValConfig {
        model,
        train: train_options(&args.pipeline),
        folds: args.folds,
        runs: args.runs,
        seed: args.pipeline.seed,
        validation_fraction: args.pipeline.val_fraction,
        jobs: args.jobs,
    };
    let mut report = cross_validate(&config, &clips)?;
    echo["crossval"] = report.config.take();
    report.config = echo;
    emit_report(&report, &args.out)?;

    for s in &report.summary {
        println!("{:<9} {:.4} ± {:.4}", s.metric, s.mean, s.std);
    }
    Ok(report)
}

pub fn cmd_train(args: &TrainArgs) -> Result<Model> {
    check_fraction(args.pipeline.val_fraction)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let clips = manifest.load_clips()?;
    let config = resolve_config(args.pipeline.features, &args.hyper.overrides(), args.pipeline.seed);
    config.validate()?;

    let labels = manifest.labels();
    let all: Vec<usize> = (0..clips.len()).collect();
    let (train_idx, val_idx) = stratified_holdout(
        &labels,
        &all,
        args.pipeline.val_fraction,
        derive_path(args.pipeline.seed, &[1]),
    );
    let pick = |idx: &[usize]| -> Vec<Clip> { idx.iter().map(|&i| clips[i].clone()).collect() };
    let (model, history) = train(
        &config,
        &train_options(&args.pipeline),
        &pick(&train_idx),
        &pick(&val_idx),
    )?;
    save_model(&model, &args.out)?;

    let mut echo = config_echo("train", &args.pipeline, &config);
    echo["manifest"] = json!(args.manifest);
    echo["history"] = json!(history);
    let mut echo_path = args.out.clone().into_os_string();
    echo_path.push(".config.json");
    write_json(Path::new(&echo_path), &echo)?;

    let best = &history.epochs[history.best_epoch.max(1) - 1];
    println!(
        "best_epoch={} val_accuracy={} epochs={} model={}",
        history.best_epoch,
        best.val_accuracy,
        history.epochs.len(),
        args.out.display()
    );
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: Label,
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} label={}", self.probability, self.label)
    }
}

pub fn cmd_predict(args: &PredictArgs) -> Result<Prediction> {
    let model = load_model(&args.model)?;
    let stored = model.features;
    let selection = args
        .features
        .or(stored.map(|f| f.selection))
        .ok_or_else(|| {
            Error::InvalidArgument(
                "model file does not record its features; pass --features".into(),
            )
        })?;
    let interpolate = args
        .interpolate
        .or(stored.map(|f| f.interpolate))
        .unwrap_or(false);
    let clip = load_clip(&args.clip)?;
    let probability = model.predict(&clip, selection, interpolate)?;
    Ok(Prediction {
        probability,
        label: Label::from_target(predicted_label(probability)),
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<DatasetManifest> {
    if args.n_per_class < 5 {
        return Err(Error::InvalidArgument(format!(
            "--n-per-class must be at least 5 for 5-fold cross-validation, got {}",
            args.n_per_class
        )));
    }
    if args.frames == 0 || !(args.fps.is_finite() && args.fps > 0.0) {
        return Err(Error::InvalidArgument(
            "--frames must be positive and --fps a positive number".into(),
        ));
    }
    let clip_dir = args.out.join(CLIP_DIR);
    create_dir(&clip_dir)?;
    let mut entries = Vec::with_capacity(2 * args.n_per_class);
    for (tag, label) in [(0u64, Label::HandFlapping), (1, Label::Control)] {
        for i in 0..args.n_per_class {
            let seed = derive_path(args.seed, &[tag, i as u64]);
            let mut clip = synth_generate(label, args.frames, args.fps, seed);
            clip.clip_id = format!("synth_{label}_{i:04}");
            clip.source_video_id = clip.clip_id.clone();
            let rel = Path::new(CLIP_DIR).join(format!("{}.jsonl", clip.clip_id));
            save_clip(&clip, args.out.join(&rel))?;
            entries.push(ManifestEntry {
                clip_id: clip.clip_id,
                label,
                path: rel,
            });
        }
    }
    let manifest = DatasetManifest::new(entries, &args.out)?;
    manifest.save(args.out.join(MANIFEST_FILE))?;
    write_json(
        &args.out.join("synth_config.json"),
        &json!({
            "command": "synth",
            "n_per_class": args.n_per_class,
            "seed": args.seed,
            "frames": args.frames,
            "fps": args.fps,
        }),
    )?;
    println!(
        "wrote {} clips to {}",
        manifest.len(),
        args.out.join(MANIFEST_FILE).display()
    );
    Ok(manifest)
}
