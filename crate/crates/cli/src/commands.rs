//! Subcommand implementations. Every command resolves its settings from
//! flags, then the config file, then documented defaults; all file output is
//! deterministic for fixed inputs and seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use doe2vec::analysis::{classical_mds, latent_traversal, sweep as run_sweep, DEFAULT_KL_WEIGHTS, DEFAULT_LATENT_SIZES};
use doe2vec::classify::{
    benchmark_feature_matrix, run_task, FeatureSet, TaskProperty, TaskSpec,
};
use doe2vec::error::{Error, Result};
use doe2vec::persistence;
use doe2vec::randfunc::{evaluate, generate_counted, GeneratorConfig};
use doe2vec::retrieval::{build_archive, query_landscape, DoeDescriptor};
use doe2vec::sampling::{normalize_values, rescale, sobol_points, LandscapeVector};
use doe2vec::vae::{
    encode as encode_landscape, reconstruct as reconstruct_landscape, train as train_model,
    ModelKind, ModelWeights, TrainConfig,
};

use crate::config::{optional, parse_list, parse_range, required, setting, Config};
use crate::{
    ArchiveArgs, ClassifyArgs, CodecArgs, GenerateArgs, MdsArgs, NearestArgs, SweepArgs,
    TrainArgs, TraverseArgs,
};

/// Write to the given path, or to stdout when no path is set.
fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Broadcast a comma-separated bounds flag to `d` coordinates.
fn resolve_bounds(text: Option<String>, d: usize, default: f64) -> Result<Vec<f64>> {
    match text {
        None => Ok(vec![default; d]),
        Some(t) => {
            let list: Vec<f64> = parse_list(&t, "bound")?;
            if list.len() == 1 {
                Ok(vec![list[0]; d])
            } else if list.len() == d {
                Ok(list)
            } else {
                Err(Error::Configuration {
                    message: format!("expected 1 or {d} bounds, got {}", list.len()),
                })
            }
        }
    }
}

/// One raw objective value per line; `#` starts a comment.
fn read_query_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|_| Error::FormatError {
            message: format!("bad query value {line:?}"),
        })?);
    }
    Ok(values)
}

fn model_exponent(model: &ModelWeights) -> Result<usize> {
    let m = model.n.trailing_zeros() as usize;
    if 1usize << m != model.n {
        return Err(Error::Incompatibility {
            message: format!("model input size {} is not a power of two", model.n),
        });
    }
    Ok(m)
}

pub fn generate(args: &GenerateArgs, cfg: &Config) -> Result<()> {
    let count: usize = required(args.count, cfg, "count")?;
    let dim: usize = required(args.dim, cfg, "dim")?;
    let out: PathBuf = required(args.out.clone(), cfg, "out")?;
    let seed: u64 = setting(args.seed, cfg, "seed", 0)?;
    let m: usize = setting(args.m, cfg, "m", 8)?;
    let max_depth: usize = setting(args.max_depth, cfg, "max-depth", 12)?;
    if count == 0 {
        return Err(Error::InvalidArgument {
            context: "generate",
            message: "count must be at least 1".into(),
        });
    }

    let doe = sobol_points(m, dim)?;
    let lower = resolve_bounds(optional(args.lower.clone(), cfg, "lower")?, dim, 0.0)?;
    let upper = resolve_bounds(optional(args.upper.clone(), cfg, "upper")?, dim, 1.0)?;
    let unit = lower.iter().all(|&v| v == 0.0) && upper.iter().all(|&v| v == 1.0);
    let points = if unit { doe.as_slice().to_vec() } else { rescale(&doe, &lower, &upper)? };

    let results: Vec<(doe2vec::randfunc::FunctionExpr, usize, LandscapeVector)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut gen_cfg = GeneratorConfig::new(dim, seed.wrapping_add(i as u64));
            gen_cfg.max_depth = max_depth;
            let (expr, rejected) = generate_counted(&gen_cfg, &points)?;
            let raw = evaluate(&expr, &points, dim)?;
            let mut landscape = normalize_values(&raw)?;
            landscape.source_id = Some(format!("{i}"));
            Ok((expr, rejected, landscape))
        })
        .collect::<Result<_>>()?;

    let exprs: Vec<_> = results.iter().map(|(e, _, _)| e.clone()).collect();
    let rejected: usize = results.iter().map(|(_, r, _)| r).sum();
    let records: Vec<LandscapeVector> = results.into_iter().map(|(_, _, l)| l).collect();

    let suite_path = out.with_extension("suite");
    let data_path = out.with_extension("d2vd");
    persistence::write_suite(&suite_path, &exprs, dim)?;
    persistence::write_dataset(&data_path, &records, dim)?;
    println!("# generate count={count} dim={dim} m={m} seed={seed}");
    println!("rejected_functions {rejected}");
    Ok(())
}

pub fn train(args: &TrainArgs, cfg: &Config) -> Result<()> {
    let data: PathBuf = required(args.data.clone(), cfg, "data")?;
    let kind = ModelKind::from_str(&required::<String>(args.kind.clone(), cfg, "kind")?)?;
    let latent: usize = required(args.latent, cfg, "latent")?;
    let out: PathBuf = required(args.out.clone(), cfg, "out")?;
    let kl_weight: f64 = setting(args.kl_weight, cfg, "kl-weight", 0.001)?;

    let train_cfg = TrainConfig {
        kl_weight: match kind {
            ModelKind::Vae => kl_weight,
            ModelKind::Ae => 0.0,
        },
        lr: setting(args.lr, cfg, "lr", 1e-3)?,
        epochs: setting(args.epochs, cfg, "epochs", 100)?,
        batch_size: setting(args.batch, cfg, "batch", 32)?,
        seed: setting(args.seed, cfg, "seed", 0)?,
        validation_fraction: setting(args.val_fraction, cfg, "val-fraction", 0.1)?,
    };

    let (records, _) = persistence::read_dataset(&data)?;
    let model = train_model(&records, &train_cfg, kind, latent)?;
    persistence::write_model(&out, &model)?;

    println!("epoch,train_vae,train_mse,val_vae,val_mse,val_kl");
    for rec in &model.meta.history {
        println!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            rec.epoch, rec.train_vae, rec.train_mse, rec.val_vae, rec.val_mse, rec.val_kl
        );
    }
    Ok(())
}

pub fn encode(args: &CodecArgs, cfg: &Config) -> Result<()> {
    let model_path: PathBuf = required(args.model.clone(), cfg, "model")?;
    let data: PathBuf = required(args.data.clone(), cfg, "data")?;
    let model = persistence::read_model(&model_path)?;
    let (records, _) = persistence::read_dataset(&data)?;

    let mut out = String::from("id");
    for i in 0..model.ls {
        let _ = write!(out, ",z_{i}");
    }
    out.push('\n');
    for (i, record) in records.iter().enumerate() {
        let z = encode_landscape(&model, record)?;
        let _ = write!(out, "{i}");
        for v in z {
            let _ = write!(out, ",{v:.8e}");
        }
        out.push('\n');
    }
    emit(args.out.as_ref(), &out)
}

pub fn reconstruct(args: &CodecArgs, cfg: &Config) -> Result<()> {
    let model_path: PathBuf = required(args.model.clone(), cfg, "model")?;
    let data: PathBuf = required(args.data.clone(), cfg, "data")?;
    let model = persistence::read_model(&model_path)?;
    let (records, _) = persistence::read_dataset(&data)?;

    let mut out = String::from("id,mse");
    for i in 0..model.n {
        let _ = write!(out, ",xhat_{i}");
    }
    out.push('\n');
    for (i, record) in records.iter().enumerate() {
        let (xhat, mse) = reconstruct_landscape(&model, record)?;
        let _ = write!(out, "{i},{mse:.8e}");
        for v in xhat.values {
            let _ = write!(out, ",{v:.8e}");
        }
        out.push('\n');
    }
    emit(args.out.as_ref(), &out)
}

pub fn archive(args: &ArchiveArgs, cfg: &Config) -> Result<()> {
    let model_path: PathBuf = required(args.model.clone(), cfg, "model")?;
    let suite_path: PathBuf = required(args.suite.clone(), cfg, "suite")?;
    let out: PathBuf = required(args.out.clone(), cfg, "out")?;

    let model = persistence::read_model(&model_path)?;
    let (functions, d) = persistence::read_suite(&suite_path)?;
    let m = model_exponent(&model)?;
    let lower = resolve_bounds(optional(args.lower.clone(), cfg, "lower")?, d, 0.0)?;
    let upper = resolve_bounds(optional(args.upper.clone(), cfg, "upper")?, d, 1.0)?;
    let descriptor = DoeDescriptor { m, d, lower, upper };

    let (archive, skipped) = build_archive(&model, &functions, &descriptor)?;
    persistence::write_archive(&out, &archive)?;
    println!("# archive entries={} skipped={skipped}", archive.entries.len());
    println!("skipped_entries {skipped}");
    Ok(())
}

pub fn nearest(args: &NearestArgs, cfg: &Config) -> Result<()> {
    let model_path: PathBuf = required(args.model.clone(), cfg, "model")?;
    let archive_path: PathBuf = required(args.archive.clone(), cfg, "archive")?;
    let query_path: PathBuf = required(args.query.clone(), cfg, "query")?;
    let k: usize = setting(args.k, cfg, "k", 5)?;

    let model = persistence::read_model(&model_path)?;
    let archive = persistence::read_archive(&archive_path)?;
    let raw = read_query_values(&query_path)?;
    let hits = query_landscape(&model, &archive, &raw, k)?;
    for (rank, (idx, dist)) in hits.iter().enumerate() {
        println!("{},{:.8e},{}", rank + 1, dist, archive.entries[*idx].expr_text);
    }
    Ok(())
}

pub fn classify(args: &ClassifyArgs, cfg: &Config) -> Result<()> {
    let dim: usize = required(args.dim, cfg, "dim")?;
    let task_name: String = required(args.task.clone(), cfg, "task")?;
    let featureset_name: String = required(args.featureset.clone(), cfg, "featureset")?;
    let property = TaskProperty::from_str(&task_name)?;
    let featureset = FeatureSet::from_str(&featureset_name)?;
    let seeds_count: usize = setting(args.seeds, cfg, "seeds", 10)?;
    let base_seed: u64 = setting(args.seed, cfg, "seed", 0)?;
    let trees: usize = setting(args.trees, cfg, "trees", 100)?;

    let model = match optional(args.model.clone(), cfg, "model")? {
        Some(path) => Some(persistence::read_model(&path)?),
        None => None,
    };
    if featureset.needs_model() && model.is_none() {
        return Err(Error::Configuration {
            message: format!("featureset {featureset_name} needs --model"),
        });
    }
    let m: usize = match (args.m, model.as_ref()) {
        (Some(m), _) => m,
        (None, Some(mw)) => match cfg.get::<usize>("m")? {
            Some(m) => m,
            None => model_exponent(mw)?,
        },
        (None, None) => setting(None, cfg, "m", 6)?,
    };
    if let Some(mw) = model.as_ref() {
        if mw.n != (1 << m) {
            return Err(Error::Incompatibility {
                message: format!("model input size {} but design has {} points", mw.n, 1 << m),
            });
        }
    }

    let spec = TaskSpec::standard(dim, m, property, featureset);
    let seeds: Vec<u64> = (0..seeds_count).map(|i| base_seed.wrapping_add(i as u64)).collect();
    let report = run_task(&spec, model.as_ref(), trees, &seeds)?;

    let mut out = String::from("dim,task,featureset,seed,macro_f1\n");
    for (seed, f1) in &report.per_seed {
        let _ = writeln!(out, "{dim},{task_name},{featureset_name},{seed},{f1:.6}");
    }
    let _ = writeln!(out, "{dim},{task_name},{featureset_name},mean,{:.6}", report.mean);
    emit(args.out.as_ref(), &out)
}

pub fn sweep(args: &SweepArgs, cfg: &Config) -> Result<()> {
    let data: PathBuf = required(args.data.clone(), cfg, "data")?;
    let latent_sizes: Vec<usize> = match optional(args.latent_sizes.clone(), cfg, "latent-sizes")? {
        Some(t) => parse_list(&t, "latent size")?,
        None => DEFAULT_LATENT_SIZES.to_vec(),
    };
    let kl_weights: Vec<f64> = match optional(args.kl_weights.clone(), cfg, "kl-weights")? {
        Some(t) => parse_list(&t, "KL weight")?,
        None => DEFAULT_KL_WEIGHTS.to_vec(),
    };
    let train_cfg = TrainConfig {
        kl_weight: 0.0, // replaced per cell
        lr: setting(args.lr, cfg, "lr", 1e-3)?,
        epochs: setting(args.epochs, cfg, "epochs", 100)?,
        batch_size: setting(args.batch, cfg, "batch", 32)?,
        seed: setting(args.seed, cfg, "seed", 0)?,
        validation_fraction: setting(args.val_fraction, cfg, "val-fraction", 0.1)?,
    };

    let (records, _) = persistence::read_dataset(&data)?;
    let result = run_sweep(&latent_sizes, &kl_weights, &records, &train_cfg)?;

    let mut out = String::from("latent_size,kl_weight,loss_vae,loss_mse,loss_kl\n");
    for cell in &result.cells {
        let _ = writeln!(
            out,
            "{},{},{:.8e},{:.8e},{:.8e}",
            cell.latent_size, cell.kl_weight, cell.loss_vae, cell.loss_mse, cell.loss_kl
        );
    }
    emit(args.out.as_ref(), &out)
}

pub fn mds(args: &MdsArgs, cfg: &Config) -> Result<()> {
    let dim: usize = required(args.dim, cfg, "dim")?;
    let featureset_name: String =
        setting(args.featureset.clone(), cfg, "featureset", "vae".into())?;
    let featureset = FeatureSet::from_str(&featureset_name)?;
    let instances = parse_range(&setting(
        args.instances.clone(),
        cfg,
        "instances",
        "1..100".into(),
    )?)?;

    let model = match optional(args.model.clone(), cfg, "model")? {
        Some(path) => Some(persistence::read_model(&path)?),
        None => None,
    };
    let m: usize = match (args.m, model.as_ref()) {
        (Some(m), _) => m,
        (None, Some(mw)) => match cfg.get::<usize>("m")? {
            Some(m) => m,
            None => model_exponent(mw)?,
        },
        (None, None) => setting(None, cfg, "m", 6)?,
    };

    let (x, cols, cases, _) =
        benchmark_feature_matrix(dim, m, featureset, model.as_ref(), instances)?;
    let embedding = classical_mds(&x, cases.len(), cols)?;

    let mut out = String::from("id,label,mds_x,mds_y\n");
    for (row, (fid, inst)) in cases.iter().enumerate() {
        let _ = writeln!(
            out,
            "f{fid}_i{inst},{fid},{:.8e},{:.8e}",
            embedding.points[row * 2],
            embedding.points[row * 2 + 1]
        );
    }
    emit(args.out.as_ref(), &out)
}

pub fn traverse(args: &TraverseArgs, cfg: &Config) -> Result<()> {
    let model_path: PathBuf = required(args.model.clone(), cfg, "model")?;
    let model = persistence::read_model(&model_path)?;
    let delta_min: f64 = setting(args.delta_min, cfg, "delta-min", -1.0)?;
    let delta_max: f64 = setting(args.delta_max, cfg, "delta-max", 1.0)?;
    let delta_step: f64 = setting(args.delta_step, cfg, "delta-step", 0.25)?;
    if delta_step <= 0.0 || delta_max < delta_min {
        return Err(Error::InvalidArgument {
            context: "traverse",
            message: "need delta-step > 0 and delta-max >= delta-min".into(),
        });
    }

    let z0 = match optional(args.query.clone(), cfg, "query")? {
        Some(path) => {
            let raw = read_query_values(&path)?;
            encode_landscape(&model, &normalize_values(&raw)?)?
        }
        None => vec![0.0; model.ls],
    };

    let steps = ((delta_max - delta_min) / delta_step + 1e-9).floor() as usize + 1;
    let deltas: Vec<f64> = (0..steps).map(|i| delta_min + delta_step * i as f64).collect();
    let indices: Vec<usize> = match args.index.or(cfg.get::<usize>("index")?) {
        Some(i) => vec![i],
        None => (0..model.ls).collect(),
    };

    let mut out = String::from("index,delta");
    for i in 0..model.n {
        let _ = write!(out, ",v_{i}");
    }
    out.push('\n');
    for &index in &indices {
        let frames = latent_traversal(&model, &z0, index, &deltas)?;
        for (delta, frame) in deltas.iter().zip(frames) {
            let _ = write!(out, "{index},{delta}");
            for v in frame.values {
                let _ = write!(out, ",{v:.8e}");
            }
            out.push('\n');
        }
    }
    emit(args.out.as_ref(), &out)
}
