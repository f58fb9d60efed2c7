use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lctid_core::cnn::{load_model, save_model};
use lctid_core::corpus::{load_manifest, read_wav, synth_corpus, SynthSpec};
use lctid_core::experiments::{
    combine_and_eval, evaluate, holdout, ife, rfe, rfe_round, Dataset, ExperimentConfig, ModelMeta,
    PipelineScorer, RankingTable, RunResult, TrainedModel,
};
use lctid_core::features::{parse_feature_set, FeatureConfig, FeatureExtractor};
use lctid_core::fsutil::write_atomic;
use lctid_core::{Error, FeatureId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{usage, FileConfig, Resolved};
use crate::plot::{contour_csv, contour_svg, Contour};

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

pub fn synth(out: &Path, n: usize, min_d: f64, max_d: f64, seed: u64) -> Result<()> {
    let spec = SynthSpec {
        n_utterances: n,
        min_duration_s: min_d,
        max_duration_s: max_d,
        ..SynthSpec::default()
    };
    let m = synth_corpus(&spec, out, seed)?;
    println!("wrote {} utterances to {} (seed {seed})", m.len(), out.display());
    Ok(())
}

pub fn extract(manifest: &Path, features: &str, out: &Path, config: Option<&Path>) -> Result<()> {
    let ids = parse_feature_set(features).map_err(|e| usage(e.to_string()))?;
    let cfg = match config {
        Some(p) => FileConfig::load(p)?.extraction.unwrap_or_default(),
        None => FeatureConfig::default(),
    };
    let m = load_manifest(manifest)?;
    let ex = FeatureExtractor::new(cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let results: Vec<_> = m
        .records()
        .par_iter()
        .map(|r| {
            let fm = ex.extract(&read_wav(&r.audio_path)?, &ids, &r.id)?;
            write_atomic(&out.join(format!("{}.csv", r.id)), fm.to_csv().as_bytes())?;
            Ok::<_, Error>(fm.num_frames())
        })
        .collect();
    let mut index = String::from("id\tdialect\tframes\tcsv\n");
    let mut failed = 0;
    for (r, res) in m.records().iter().zip(results) {
        match res {
            Ok(frames) => index.push_str(&format!("{}\t{}\t{frames}\t{}.csv\n", r.id, r.dialect, r.id)),
            Err(e) => {
                eprintln!("error: {}: {e}", r.id);
                failed += 1;
            }
        }
    }
    write(&out.join("index.tsv"), &index)?;
    if failed > 0 {
        bail!("{failed} of {} utterances failed", m.len());
    }
    println!("extracted {} utterances into {}", m.len(), out.display());
    Ok(())
}

pub fn plot(a: &Path, b: &Path, feature: &str, out: &Path) -> Result<()> {
    let id: FeatureId = feature.parse().map_err(|e: Error| usage(e.to_string()))?;
    let ex = FeatureExtractor::new(FeatureConfig::default())?;
    let label = |p: &Path| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (la, lb) = (label(a), label(b));
    let ma = ex.extract(&read_wav(a)?, &[id], &la)?;
    let mb = ex.extract(&read_wav(b)?, &[id], &lb)?;
    let ca = Contour { label: &la, values: ma.row(0) };
    let cb = Contour { label: &lb, values: mb.row(0) };
    let hop_s = ma.hop_ms / 1000.0;
    write(out, &contour_svg(id, hop_s, &ca, &cb))?;
    let csv = out.with_extension("csv");
    write(&csv, &contour_csv(hop_s, &ca, &cb))?;
    println!("wrote {} and {}", out.display(), csv.display());
    Ok(())
}

/// Metadata stored next to a model file as `<model>.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub features_spec: String,
    pub meta: ModelMeta,
    pub extraction: FeatureConfig,
    pub experiment: ExperimentConfig,
}

fn sidecar_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'a str,
    manifest: &'a Path,
    #[serde(flatten)]
    resolved: &'a Resolved,
}

fn load_dataset(manifest: &Path, r: &Resolved) -> Result<Dataset> {
    let m = load_manifest(manifest)?;
    Ok(Dataset::extract(&m, &r.features, &r.extraction)?)
}

pub fn train(manifest: &Path, out: &Path, r: &Resolved) -> Result<()> {
    let data = load_dataset(manifest, r)?;
    let (trained, result) = holdout(&data, &r.features, &r.experiment)?;
    let model_path = out.join("model.lct");
    save_model(&trained.model, &model_path)?;
    write_json(
        &sidecar_path(&model_path),
        &ModelSidecar {
            features_spec: r.features_spec.clone(),
            meta: trained.meta.clone(),
            extraction: r.extraction.clone(),
            experiment: r.experiment.clone(),
        },
    )?;
    write(&out.join("results.json"), &result.to_json()?)?;
    write_json(
        &out.join("run_config.json"),
        &RunConfig {
            command: "train",
            manifest,
            resolved: r,
        },
    )?;
    print_report(&result);
    println!("model written to {}", model_path.display());
    Ok(())
}

fn print_report(r: &RunResult) {
    for (k, f) in r.folds.iter().enumerate() {
        let c = &f.classes;
        println!(
            "fold {k}: acc {:.4}  LT P/R/F1 {:.4}/{:.4}/{:.4}  CT P/R/F1 {:.4}/{:.4}/{:.4}",
            f.accuracy, c[0].precision, c[0].recall, c[0].f1, c[1].precision, c[1].recall, c[1].f1
        );
    }
    println!("mean accuracy {:.4}", r.mean_accuracy);
}

pub fn eval(model_path: &Path, manifest: &Path, features: Option<&str>, out: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let side_path = sidecar_path(model_path);
    let side: ModelSidecar = serde_json::from_str(
        &std::fs::read_to_string(&side_path).with_context(|| format!("reading {}", side_path.display()))?,
    )
    .with_context(|| format!("parsing {}", side_path.display()))?;
    if model.input_channels != side.meta.features.len() {
        return Err(Error::ShapeMismatch(format!(
            "model takes {} channels but its metadata lists {}",
            model.input_channels,
            side.meta.features.len()
        ))
        .into());
    }
    if let Some(spec) = features {
        let want = parse_feature_set(spec).map_err(|e| usage(e.to_string()))?;
        if want != side.meta.features {
            return Err(Error::ShapeMismatch(format!(
                "feature set `{spec}` ({} channels) does not match the model's `{}` ({} channels)",
                want.len(),
                side.features_spec,
                side.meta.features.len()
            ))
            .into());
        }
    }
    let m = load_manifest(manifest)?;
    let data = Dataset::extract(&m, &side.meta.features, &side.extraction)?;
    let trained = TrainedModel { model, meta: side.meta };
    let idx: Vec<usize> = (0..data.len()).collect();
    let report = evaluate(&trained, &data, &idx)?;
    let result = RunResult {
        run_id: format!("eval-{}-seed{}", trained.model.arch, trained.model.seed),
        config: side.experiment,
        featureset: trained.meta.features.clone(),
        mean_accuracy: report.accuracy,
        folds: vec![report],
    };
    write(out, &result.to_json()?)?;
    print_report(&result);
    Ok(())
}

#[derive(Serialize)]
struct AblationResult<'a> {
    method: &'a str,
    featureset: &'a [FeatureId],
    config: &'a ExperimentConfig,
    rounds: &'a [RankingTable],
    gap_stats: Vec<Option<lctid_core::experiments::GapStats>>,
    runs: usize,
}

pub fn ablate(is_rfe: bool, manifest: &Path, out: &Path, keep: Option<usize>, r: &Resolved) -> Result<()> {
    let data = load_dataset(manifest, r)?;
    let scorer = PipelineScorer {
        data: &data,
        cfg: r.experiment.clone(),
    };
    let tables = if is_rfe {
        match keep {
            Some(k) => rfe(&r.features, k, &scorer)?,
            None => vec![rfe_round(&r.features, &scorer)?],
        }
    } else {
        if keep.is_some() {
            bail!(usage("--keep applies to --method rfe only"));
        }
        vec![ife(&r.features, &scorer)?]
    };
    let method = if is_rfe { "rfe" } else { "ife" };
    write(&out.join("ranking.csv"), &tables.last().ok_or_else(|| anyhow!("no ranking produced"))?.to_csv())?;
    if tables.len() > 1 {
        for (k, t) in tables.iter().enumerate() {
            write(&out.join(format!("ranking_round{}.csv", k + 1)), &t.to_csv())?;
        }
    }
    write_json(
        &out.join("results.json"),
        &AblationResult {
            method,
            featureset: &r.features,
            config: &r.experiment,
            rounds: &tables,
            gap_stats: tables.iter().map(RankingTable::gap_stats).collect(),
            runs: tables.iter().map(|t| t.runs).sum(),
        },
    )?;
    write_json(
        &out.join("run_config.json"),
        &RunConfig {
            command: if is_rfe { "ablate-rfe" } else { "ablate-ife" },
            manifest,
            resolved: r,
        },
    )?;
    let last = tables.last().unwrap();
    for row in &last.rows {
        println!("{:>3}  {:<8} {:.4}", row.rank, row.feature.to_string(), row.accuracy);
    }
    Ok(())
}

pub fn combine(manifest: &Path, base: &str, extra: &str, out: &Path, r: &Resolved) -> Result<()> {
    let base_ids = parse_feature_set(base).map_err(|e| usage(format!("base: {e}")))?;
    let extra_ids = parse_feature_set(extra).map_err(|e| usage(format!("extra: {e}")))?;
    if let Some(f) = base_ids.iter().find(|f| extra_ids.contains(f)) {
        bail!(usage(format!("feature {f} appears in both --base and --extra")));
    }
    let mut all = base_ids.clone();
    all.extend_from_slice(&extra_ids);
    let resolved = Resolved {
        features_spec: format!("{base}+{extra}"),
        features: all,
        ..r.clone()
    };
    let data = load_dataset(manifest, &resolved)?;
    let result = combine_and_eval(&base_ids, &extra_ids, &data, &resolved.experiment)?;
    write(&out.join("results.json"), &result.to_json()?)?;
    write_json(
        &out.join("run_config.json"),
        &RunConfig {
            command: "combine",
            manifest,
            resolved: &resolved,
        },
    )?;
    println!("{} channels: {}", result.featureset.len(), resolved.features_spec);
    print_report(&result);
    Ok(())
}
