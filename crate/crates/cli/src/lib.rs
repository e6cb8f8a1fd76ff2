//! Command implementations behind the `dnip` binary.
//!
//! Each `cmd_*` function does the work for one subcommand and returns the
//! text destined for stdout; files named by flags are written as a side
//! effect. Nothing is written before all inputs have been read and checked.

pub mod args;
pub mod report;
pub mod sample;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use dnip::anneal::{anneal_restarts, rng_for_seed};
use dnip::baselines::{compare_methods, ComparisonReport};
use dnip::inference::true_class_values;
use dnip::synthetic::{realize_confusion, NEWS_TOPIC_CONFUSION};
use dnip::{
    anneal, generate_synthetic, load_dataset, AnnealOutcome, AnnealSchedule, Artifact, Config,
    DataFormat, Dataset, Provenance, Report, Scale, SyntheticSpec, Terms, WeightSelection,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::*;
use crate::report::{comparison_text, metrics_text, to_json, ClassNames};

/// Process exit code for an error: 2 for filesystem failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<dnip::Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

pub fn run(cli: &Cli) -> Result<String> {
    let (text, output) = match &cli.command {
        Command::Evaluate(a) => (cmd_evaluate(a)?, Some(&a.output)),
        Command::Optimize(a) => (cmd_optimize(a)?, Some(&a.output)),
        Command::Apply(a) => (cmd_apply(a)?, Some(&a.output)),
        Command::Ablate(a) => (cmd_ablate(a)?, Some(&a.output)),
        Command::Sweep(a) => (cmd_sweep(a)?, Some(&a.output)),
        Command::Compare(a) => (cmd_compare(a)?, Some(&a.output)),
        Command::Generate(a) => (cmd_generate(a)?, None),
        Command::Density(a) => (cmd_density(a)?, None),
    };
    match output.and_then(|o| o.output.as_ref()) {
        Some(path) => {
            write_file(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn load(path: &Path, input: &InputArgs) -> Result<Dataset> {
    let format = input
        .data_format
        .unwrap_or_else(|| DataFormat::from_path(path));
    load_dataset(path, format, input.renormalize)
        .with_context(|| format!("reading dataset {}", path.display()))
}

pub fn load_artifact(path: &Path) -> Result<Artifact> {
    Artifact::load(path).with_context(|| format!("reading artifact {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn check_classes(artifact: &Artifact, dataset: &Dataset) -> Result<()> {
    if artifact.num_classes() != dataset.num_classes() {
        return Err(dnip::Error::DimensionMismatch {
            expected: artifact.num_classes(),
            actual: dataset.num_classes(),
        })
        .context("artifact and dataset disagree on the number of classes");
    }
    Ok(())
}

fn render_metrics(report: &Report, input: &InputArgs, output: &OutputArgs) -> Result<String> {
    match output.format {
        ReportFormat::Json => to_json("dnip-metrics-report", report),
        ReportFormat::Text => Ok(metrics_text(
            report,
            &ClassNames::new(&input.class_names, report.num_classes)?,
        )),
    }
}

/// Metrics of `dataset`, reweighted by the artifact when one is given.
pub fn evaluate_report(dataset: &Dataset, artifact: Option<&Artifact>, mu: f64) -> Result<Report> {
    let coefs = match artifact {
        Some(a) => {
            check_classes(a, dataset)?;
            if a.provenance.dataset_fingerprint != dataset.fingerprint() {
                log::warn!("artifact was learned on a different dataset");
            }
            Some(a.coefficients.as_slice())
        }
        None => None,
    };
    Ok(Report::compute(dataset, coefs, mu)?)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<String> {
    let ds = load(&args.dataset, &args.input)?;
    let artifact = args.artifact.as_deref().map(load_artifact).transpose()?;
    let report = evaluate_report(&ds, artifact.as_ref(), args.mu)?;
    render_metrics(&report, &args.input, &args.output)
}

pub fn cmd_apply(args: &ApplyArgs) -> Result<String> {
    let ds = load(&args.dataset, &args.input)?;
    let artifact = load_artifact(&args.artifact)?;
    let report = evaluate_report(&ds, Some(&artifact), args.mu)?;
    render_metrics(&report, &args.input, &args.output)
}

fn checked_setup(
    objective: &ObjectiveArgs,
    schedule: &ScheduleArgs,
) -> Result<(Config, Scale, AnnealSchedule)> {
    let config = objective.config();
    config.validate()?;
    let scale = Scale::new(objective.k)?;
    let schedule = schedule.schedule();
    schedule.validate()?;
    Ok((config, scale, schedule))
}

/// Best of `restarts` runs with consecutive seeds starting at the schedule's.
pub fn optimize_artifact(
    dataset: &Dataset,
    config: &Config,
    scale: &Scale,
    schedule: &AnnealSchedule,
    restarts: u64,
    stamp_time: bool,
) -> Result<(Artifact, AnnealOutcome<f64>)> {
    anyhow::ensure!(
        restarts >= 1,
        dnip::Error::InvalidConfig("restarts must be at least 1".into())
    );
    let (seed, outcome) = if restarts == 1 {
        (schedule.seed, anneal(dataset, scale, config, schedule)?)
    } else {
        let seeds: Vec<u64> = (0..restarts)
            .map(|i| schedule.seed.wrapping_add(i))
            .collect();
        anneal_restarts(dataset, scale, config, schedule, &seeds)?
    };
    let timestamp_unix = stamp_time
        .then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .ok()
        })
        .flatten();
    let artifact = Artifact::new(
        scale.clone(),
        outcome.selection.clone(),
        *config,
        outcome.value.total,
        Provenance {
            seed,
            schedule: schedule.with_seed(seed),
            dataset_fingerprint: dataset.fingerprint(),
            num_samples: dataset.len(),
            timestamp_unix,
        },
    )?;
    Ok((artifact, outcome))
}

fn trace_path(args: &OptimizeArgs) -> PathBuf {
    args.trace
        .clone()
        .unwrap_or_else(|| args.out.with_extension("trace.jsonl"))
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    artifact: &'a Path,
    trace: &'a Path,
    selection: &'a WeightSelection,
    coefficients: &'a [f64],
    objective: dnip::Value,
    proposals: u64,
    before: &'a Report,
    after: &'a Report,
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<String> {
    let ds = load(&args.dataset, &args.input)?;
    let (config, scale, schedule) = checked_setup(&args.objective, &args.schedule)?;
    let (artifact, outcome) = optimize_artifact(
        &ds,
        &config,
        &scale,
        &schedule,
        args.restarts,
        args.stamp_time,
    )?;
    let before = Report::compute(&ds, None, config.mu)?;
    let after = Report::compute(&ds, Some(&artifact.coefficients), config.mu)?;

    let trace = trace_path(args);
    let mut trace_buf = Vec::new();
    outcome.trace.write_jsonl(&mut trace_buf)?;
    artifact
        .save(&args.out)
        .with_context(|| format!("writing artifact {}", args.out.display()))?;
    fs::write(&trace, trace_buf).with_context(|| format!("writing trace {}", trace.display()))?;

    match args.output.format {
        ReportFormat::Json => to_json(
            "dnip-optimize-report",
            OptimizeSummary {
                artifact: &args.out,
                trace: &trace,
                selection: &artifact.selection,
                coefficients: &artifact.coefficients,
                objective: outcome.value,
                proposals: outcome.trace.proposals,
                before: &before,
                after: &after,
            },
        ),
        ReportFormat::Text => {
            let names = ClassNames::new(&args.input.class_names, ds.num_classes())?;
            Ok(format!(
                "== optimization set, identity ==\n{}\n== optimization set, reweighted ==\n{}\n\
                 selection: {:?}\ncoefficients: {:?}\nobjective: {:.6} ({} proposals, seed {})\n\
                 artifact: {}\ntrace: {}\n",
                metrics_text(&before, &names),
                metrics_text(&after, &names),
                artifact.selection.indices(),
                artifact.coefficients,
                outcome.value.total,
                outcome.trace.proposals,
                artifact.provenance.seed,
                args.out.display(),
                trace.display(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub terms: String,
    pub selection: WeightSelection,
    pub objective: f64,
    pub accuracy: f64,
    pub cobias: f64,
    pub cobias_single: Option<f64>,
}

/// One row per objective-term combination, in the fixed order of
/// [`Terms::ALL`]. Runs are independent and share the schedule seed.
pub fn ablation_rows(
    optimization: &Dataset,
    test: &Dataset,
    base: &Config,
    scale: &Scale,
    schedule: &AnnealSchedule,
) -> Result<Vec<AblationRow>> {
    anyhow::ensure!(
        optimization.num_classes() == test.num_classes(),
        dnip::Error::DimensionMismatch {
            expected: optimization.num_classes(),
            actual: test.num_classes()
        }
    );
    Terms::ALL
        .par_iter()
        .map(|&terms| {
            let config = base.with_terms(terms);
            let out = anneal(optimization, scale, &config, schedule)?;
            let coefs = out.selection.coefficients(scale);
            let rep = Report::compute(test, Some(&coefs), config.mu)?;
            Ok(AblationRow {
                terms: terms.label().to_string(),
                selection: out.selection,
                objective: out.value.total,
                accuracy: rep.accuracy.overall,
                cobias: rep.accuracy.cobias,
                cobias_single: rep.accuracy.cobias_single,
            })
        })
        .collect()
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<String> {
    let opt = load(&args.optimization, &args.input)?;
    let test = load(&args.test, &args.input)?;
    let (_, scale, schedule) = checked_setup(&args.objective, &args.schedule)?;
    let rows = ablation_rows(&opt, &test, &args.objective.base(), &scale, &schedule)?;
    match args.output.format {
        ReportFormat::Json => to_json("dnip-ablation-report", serde_json::json!({ "rows": rows })),
        ReportFormat::Text => {
            let mut s = format!(
                "{:<12} {:>10} {:>10} {:>14}  selection\n",
                "terms", "accuracy", "COBias", "COBias_single"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:<12} {:>10.6} {:>10.6} {:>14}  {:?}\n",
                    r.terms,
                    r.accuracy,
                    r.cobias,
                    r.cobias_single.map_or("n/a".into(), |v| format!("{v:.6}")),
                    r.selection.indices()
                ));
            }
            Ok(s)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub size: usize,
    pub seed: u64,
    pub stratified: bool,
    pub selection: WeightSelection,
    pub accuracy: f64,
    pub cobias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub size: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_cobias: f64,
    pub std_cobias: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn sweep(
    optimization: &Dataset,
    test: &Dataset,
    sizes: &[usize],
    seeds: &[u64],
    config: &Config,
    scale: &Scale,
    schedule: &AnnealSchedule,
) -> Result<(Vec<SweepRow>, Vec<SweepRun>)> {
    anyhow::ensure!(
        !sizes.is_empty() && !seeds.is_empty(),
        dnip::Error::InvalidConfig("sweep needs at least one size and one seed".into())
    );
    anyhow::ensure!(
        optimization.num_classes() == test.num_classes(),
        dnip::Error::DimensionMismatch {
            expected: optimization.num_classes(),
            actual: test.num_classes()
        }
    );
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&size| seeds.iter().map(move |&seed| (size, seed)))
        .collect();
    let runs: Vec<SweepRun> = jobs
        .par_iter()
        .map(|&(size, seed)| -> Result<SweepRun> {
            let mut rng = rng_for_seed(seed);
            let (idx, stratified) = sample::subsample(optimization, size, &mut rng)?;
            if !stratified {
                log::warn!("size {size} cannot cover every class; using a simple random sample");
            }
            let sub = optimization.subset(&idx)?;
            let out = anneal(&sub, scale, config, &schedule.with_seed(seed))?;
            let rep = Report::compute(test, Some(&out.selection.coefficients(scale)), config.mu)?;
            Ok(SweepRun {
                size,
                seed,
                stratified,
                selection: out.selection,
                accuracy: rep.accuracy.overall,
                cobias: rep.accuracy.cobias,
            })
        })
        .collect::<Result<_>>()?;
    let rows = sizes
        .iter()
        .map(|&size| {
            let of: Vec<&SweepRun> = runs.iter().filter(|r| r.size == size).collect();
            let acc: Vec<f64> = of.iter().map(|r| r.accuracy).collect();
            let cob: Vec<f64> = of.iter().map(|r| r.cobias).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&acc);
            let (mean_cobias, std_cobias) = mean_std(&cob);
            SweepRow {
                size,
                mean_accuracy,
                std_accuracy,
                mean_cobias,
                std_cobias,
            }
        })
        .collect();
    Ok((rows, runs))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let opt = load(&args.optimization, &args.input)?;
    let test = load(&args.test, &args.input)?;
    let (config, scale, schedule) = checked_setup(&args.objective, &args.schedule)?;
    let (rows, runs) = sweep(
        &opt,
        &test,
        &args.sizes,
        &args.seeds,
        &config,
        &scale,
        &schedule,
    )?;
    match args.output.format {
        ReportFormat::Json => to_json(
            "dnip-sweep-report",
            serde_json::json!({ "rows": rows, "runs": runs }),
        ),
        ReportFormat::Text => {
            let mut s = format!(
                "{:>8} {:>10} {:>10} {:>10} {:>10}\n",
                "size", "acc mean", "acc std", "COBias", "COB std"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:>8} {:>10.6} {:>10.6} {:>10.6} {:>10.6}\n",
                    r.size, r.mean_accuracy, r.std_accuracy, r.mean_cobias, r.std_cobias
                ));
            }
            Ok(s)
        }
    }
}

pub fn comparison(args: &CompareArgs) -> Result<ComparisonReport<f64>> {
    let opt = load(&args.optimization, &args.input)?;
    let test = load(&args.test, &args.input)?;
    let (config, scale, schedule) = checked_setup(&args.objective, &args.schedule)?;
    Ok(compare_methods(&opt, &test, &scale, &config, &schedule)?)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String> {
    let report = comparison(args)?;
    match args.output.format {
        ReportFormat::Json => to_json("dnip-comparison-report", &report),
        ReportFormat::Text => Ok(comparison_text(&report)),
    }
}

pub fn generate(args: &GenerateArgs) -> Result<Dataset> {
    Ok(match args.preset {
        Preset::Random => generate_synthetic(&SyntheticSpec::random(
            args.classes,
            args.samples,
            args.concentration,
            args.seed,
        )?)?,
        Preset::NewsTopic => generate_synthetic(&SyntheticSpec::from_confusion_counts(
            &NEWS_TOPIC_CONFUSION,
            args.samples,
            args.concentration,
            args.seed,
        )?)?,
        Preset::NewsTopicExact => realize_confusion(&NEWS_TOPIC_CONFUSION)?,
    })
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<String> {
    let ds = generate(args)?;
    let format = args
        .data_format
        .unwrap_or_else(|| DataFormat::from_path(&args.out));
    ds.save(&args.out, format)
        .with_context(|| format!("writing dataset {}", args.out.display()))?;
    Ok(format!(
        "wrote {} samples over {} classes to {}\n",
        ds.len(),
        ds.num_classes(),
        args.out.display()
    ))
}

/// `class,value` CSV of every sample's true-class probability.
pub fn density_csv(
    dataset: &Dataset,
    artifact: Option<&Artifact>,
    raw: bool,
    names: &ClassNames,
) -> Result<String> {
    if let Some(a) = artifact {
        check_classes(a, dataset)?;
    }
    let coefs = artifact.map(|a| a.coefficients.as_slice());
    let mut s = String::from("class,value\n");
    for (y, v) in true_class_values(dataset, coefs, !raw)? {
        s.push_str(&format!("{},{v}\n", names.get(y)));
    }
    Ok(s)
}

pub fn cmd_density(args: &DensityArgs) -> Result<String> {
    let ds = load(&args.dataset, &args.input)?;
    let artifact = args.artifact.as_deref().map(load_artifact).transpose()?;
    let names = ClassNames::new(&args.input.class_names, ds.num_classes())?;
    let csv = density_csv(&ds, artifact.as_ref(), args.raw, &names)?;
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            Ok(format!("wrote {} rows to {}\n", ds.len(), path.display()))
        }
        None => Ok(csv),
    }
}
