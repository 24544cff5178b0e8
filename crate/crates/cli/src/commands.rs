use std::path::Path;

use anyhow::{bail, Context, Result};

use ensemble_projection::analysis::{
    ensemble_noise_simulation, label_cooccurrence_curve, NoiseSimConfig,
};
use ensemble_projection::clustering::{cluster_features, ClusterConfig, DEFAULT_MAX_ITERS};
use ensemble_projection::dataset::{load_dataset, read_matrix, save_dataset, write_matrix};
use ensemble_projection::ensemble::{fit as fit_ensemble, load_model, project_all, save_model};
use ensemble_projection::evaluation::{evaluate, EvalConfig, ExperimentReport, FeatureKind};
use ensemble_projection::synth::{make_blobs, BlobSpec};
use ensemble_projection::{Dataset, EpParams, FeatureMatrix, Format, TrainOptions};

use crate::output::{ensure_dir, fmt4, print_table, write_csv, write_report};
use crate::{
    ClusterArgs, EvalArgs, FitArgs, InputArgs, Observe1Args, Observe2Args, ProjectArgs,
    SelfTaughtArgs, SslArgs, SynthArgs,
};

fn load(input: &InputArgs) -> Result<Dataset> {
    let mut d = load_dataset(&input.features, input.labels.as_deref(), input.format)
        .with_context(|| format!("loading {}", input.features.display()))?;
    if input.normalize {
        d.features = d.features.l2_normalized();
    }
    Ok(d)
}

fn load_labeled(input: &InputArgs) -> Result<Dataset> {
    if input.labels.is_none() {
        bail!("this command needs --labels");
    }
    load(input)
}

fn read_features(path: &Path, format: Format, normalize: bool) -> Result<FeatureMatrix> {
    let m = read_matrix(path, format).with_context(|| format!("loading {}", path.display()))?;
    Ok(if normalize { m.l2_normalized() } else { m })
}

/// Fits on `fit_on` and projects `target`.
fn projected(
    fit_on: &FeatureMatrix,
    target: &FeatureMatrix,
    params: &EpParams,
    normalize_ep: bool,
) -> Result<FeatureMatrix> {
    let model = fit_ensemble(fit_on, params).context("fitting the ensemble")?;
    let out = project_all(&model, target)?;
    Ok(if normalize_ep {
        out.l2_normalized()
    } else {
        out
    })
}

pub fn fit(a: &FitArgs, seed: u64) -> Result<()> {
    let d = load(&a.input)?;
    let params = a.ep.params(seed);
    let model = fit_ensemble(&d.features, &params)?;
    save_model(&model, &a.model).with_context(|| format!("writing {}", a.model.display()))?;
    println!(
        "fitted {} trials on {}x{}; projection width {}",
        params.n_trials,
        d.n_samples(),
        d.features.n_dims(),
        model.output_dims()
    );
    Ok(())
}

pub fn project(a: &ProjectArgs) -> Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let m = read_features(&a.input.features, a.input.format, a.input.normalize)?;
    let mut out = project_all(&model, &m)?;
    if a.normalize_ep {
        out = out.l2_normalized();
    }
    write_matrix(&out, &a.out, a.input.format)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "projected {}x{} -> {}x{}",
        m.n_samples(),
        m.n_dims(),
        out.n_samples(),
        out.n_dims()
    );
    Ok(())
}

fn eval_ladder(
    features: &FeatureMatrix,
    d: &Dataset,
    eval: &EvalArgs,
    ladder: &[usize],
    feature: FeatureKind,
    options: TrainOptions,
    seed: u64,
) -> Result<Vec<ExperimentReport>> {
    let (labels, n_classes) = d.require_labels()?;
    ladder
        .iter()
        .map(|&per_class| {
            let cfg = EvalConfig {
                runs: eval.runs,
                ..EvalConfig::new(per_class, eval.classifier(options), feature, seed)
            };
            evaluate(features, labels, n_classes, &cfg)
                .with_context(|| format!("evaluating with {per_class} labels per class"))
        })
        .collect()
}

fn emit_ladder<C: serde::Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    config: &C,
    params: &EpParams,
    reports: &[ExperimentReport],
) -> Result<()> {
    ensure_dir(out)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.per_class.to_string(),
                r.mean.to_string(),
                r.std.to_string(),
            ]
        })
        .collect();
    write_csv(&out.join("curve.csv"), &rows)?;
    write_report(out, command, seed, config, Some(params), &reports)?;
    let table: Vec<Vec<String>> = reports
        .iter()
        .map(|r| vec![r.per_class.to_string(), fmt4(r.mean), fmt4(r.std)])
        .collect();
    print_table(&["per_class", "precision", "std"], &table);
    Ok(())
}

pub fn ssl(a: &SslArgs, seed: u64) -> Result<()> {
    let d = load_labeled(&a.input)?;
    let params = a.ep.params(seed);
    let feature = FeatureKind::from(a.feature);
    let features = match feature {
        FeatureKind::Raw => d.features.clone(),
        FeatureKind::Ep => projected(&d.features, &d.features, &params, a.eval.normalize_ep)?,
    };
    let ladder = a.eval.ladder(a.ep.preset);
    let reports = eval_ladder(
        &features,
        &d,
        &a.eval,
        &ladder,
        feature,
        a.ep.train_options(),
        seed,
    )?;
    emit_ladder(&a.out, "ssl", seed, a, &params, &reports)
}

pub fn selftaught(a: &SelfTaughtArgs, seed: u64) -> Result<()> {
    let d = load_labeled(&a.input)?;
    let pool = read_features(&a.pool, a.input.format, a.input.normalize)?;
    if pool.n_dims() != d.features.n_dims() {
        bail!(
            "pool has {} dimensions but the target has {}",
            pool.n_dims(),
            d.features.n_dims()
        );
    }
    let params = a.ep.params(seed);
    let features = projected(&pool, &d.features, &params, a.eval.normalize_ep)?;
    let ladder = a.eval.ladder(a.ep.preset);
    let reports = eval_ladder(
        &features,
        &d,
        &a.eval,
        &ladder,
        FeatureKind::Ep,
        a.ep.train_options(),
        seed,
    )?;
    emit_ladder(&a.out, "selftaught", seed, a, &params, &reports)
}

pub fn cluster(a: &ClusterArgs, seed: u64) -> Result<()> {
    let d = load_labeled(&a.input)?;
    let (labels, n_classes) = d.require_labels()?;
    let params = a.ep.params(seed);
    let feature = FeatureKind::from(a.feature);
    let features = match feature {
        FeatureKind::Raw => d.features.clone(),
        FeatureKind::Ep => projected(&d.features, &d.features, &params, a.normalize_ep)?,
    };
    let cfg = ClusterConfig {
        feature,
        restarts: a.restarts,
        n_seeds: a.seeds,
        max_iters: DEFAULT_MAX_ITERS,
        seed,
    };
    let report = cluster_features(&features, labels, n_classes, &cfg)?;
    ensure_dir(&a.out)?;
    let per_seed: Vec<Vec<String>> = report
        .per_seed_purity
        .iter()
        .zip(&report.per_seed_inertia)
        .enumerate()
        .map(|(s, (p, i))| vec![s.to_string(), p.to_string(), i.to_string()])
        .collect();
    write_csv(&a.out.join("purity.csv"), &per_seed)?;
    let assignments: Vec<Vec<String>> = report
        .assignments
        .iter()
        .map(|c| vec![c.to_string()])
        .collect();
    write_csv(&a.out.join("assignments.csv"), &assignments)?;
    write_report(&a.out, "cluster", seed, a, Some(&params), &report)?;
    print_table(
        &["feature", "k", "purity", "std"],
        &[vec![
            feature.to_string(),
            n_classes.to_string(),
            fmt4(report.mean_purity),
            fmt4(report.std_purity),
        ]],
    );
    Ok(())
}

pub fn observe1(a: &Observe1Args, seed: u64) -> Result<()> {
    let d = load_labeled(&a.input)?;
    let k_max = a.k.min(d.n_samples().saturating_sub(1));
    let curve = label_cooccurrence_curve(&d, k_max, a.averaging.into())?;
    ensure_dir(&a.out)?;
    let rows: Vec<Vec<String>> = curve
        .p
        .iter()
        .enumerate()
        .map(|(i, p)| vec![(i + 1).to_string(), p.to_string()])
        .collect();
    write_csv(&a.out.join("curve.csv"), &rows)?;
    write_report(&a.out, "observe1", seed, a, None, &curve)?;
    let shown: Vec<Vec<String>> = [1, 2, 5, 10, 20, 50, 100, 200, 500]
        .into_iter()
        .filter(|&k| k <= k_max)
        .map(|k| vec![k.to_string(), fmt4(curve.p[k - 1])])
        .collect();
    print_table(&["rank", "same_class"], &shown);
    Ok(())
}

pub fn observe2(a: &Observe2Args, seed: u64) -> Result<()> {
    let d = load_labeled(&a.input)?;
    let classifier = match a.c_reg {
        Some(c) => TrainOptions::with_c_reg(c),
        None => TrainOptions::default(),
    };
    let curves = a
        .noise
        .iter()
        .map(|&rate| {
            let cfg = NoiseSimConfig {
                subsample_fraction: a.subsample,
                reassign: a.reassign.into(),
                classifier,
                ..NoiseSimConfig::new(rate, seed)
            };
            ensemble_noise_simulation(&d, &cfg, &a.t_grid)
                .with_context(|| format!("simulating noise rate {rate}"))
        })
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&a.out)?;
    let rows: Vec<Vec<String>> = curves
        .iter()
        .flat_map(|c| {
            c.points
                .iter()
                .map(move |(t, acc)| vec![c.noise_rate.to_string(), t.to_string(), acc.to_string()])
        })
        .collect();
    write_csv(&a.out.join("curve.csv"), &rows)?;
    write_report(&a.out, "observe2", seed, a, None, &curves)?;
    let header: Vec<String> = std::iter::once("noise".to_string())
        .chain(a.t_grid.iter().map(|t| format!("T={t}")))
        .collect();
    let table: Vec<Vec<String>> = curves
        .iter()
        .map(|c| {
            std::iter::once(c.noise_rate.to_string())
                .chain(c.points.iter().map(|&(_, acc)| fmt4(acc)))
                .collect()
        })
        .collect();
    print_table(
        &header.iter().map(String::as_str).collect::<Vec<_>>(),
        &table,
    );
    Ok(())
}

pub fn synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let spec = BlobSpec::new(
        a.classes,
        a.samples_per_class,
        a.dims,
        a.spread,
        a.std,
        seed,
    );
    let d = make_blobs(&spec)?;
    ensure_dir(&a.out)?;
    let ext = match a.format {
        Format::Csv => "csv",
        Format::Epb => "epb",
    };
    let features = a.out.join(format!("features.{ext}"));
    let labels = a.out.join("labels.txt");
    save_dataset(&d, &features, Some(&labels), a.format)?;
    write_report(&a.out, "synth", seed, a, None, &spec)?;
    println!(
        "wrote {} samples of {} dimensions in {} classes to {}",
        d.n_samples(),
        a.dims,
        a.classes,
        a.out.display()
    );
    Ok(())
}
