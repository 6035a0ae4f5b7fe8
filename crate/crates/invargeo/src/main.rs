use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use invargeo::analysis::{analyze, CoverMethod};
use invargeo::atoms::canonical_atoms;
use invargeo::bounds::{ge_bound, GeBoundParams};
use invargeo::classifier::{
    empirical_ge, orbit_average, orbit_mean, predict, train, zero_one_error, TrainConfig,
};
use invargeo::covering::DEFAULT_NODE_BUDGET;
use invargeo::geometry::{PointSet, Signal};
use invargeo::manifest::DatasetManifest;
use invargeo::report::{AnalysisReport, CSV_HEADER};
use invargeo::transforms::{product_set, rotation_group, translation_group, TransformSet};

const EXIT_USAGE: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "invargeo", version, about = "Covering-number analysis for invariant classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupName {
    Translation,
    Rot90,
    Transrot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum InvariantMode {
    None,
    OrbitAverage,
}

#[derive(Subcommand)]
enum Command {
    /// Write the canonical 4-atom dataset manifest.
    GenAtoms {
        #[arg(long)]
        out: PathBuf,
    },
    /// Factorize a dataset under a transformation group and report covering
    /// numbers, conditions, and the ratio R.
    Analyze {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        group: GroupName,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        /// Comma-separated label filter, e.g. "0,1".
        #[arg(long)]
        subset: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the generalization-error bound.
    Bound {
        #[arg(long)]
        covering: usize,
        #[arg(long)]
        classes: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        margin: f64,
    },
    /// Train the linear classifier on a dataset split and report the
    /// empirical generalization gap.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        invariant: InvariantMode,
        #[arg(long, default_value_t = 0.0)]
        reg_invariance: f64,
        #[arg(long, value_enum)]
        group: Option<GroupName>,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        split: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // usage errors are exit 1 in this tool's contract, not clap's 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<invargeo::Error> for CliError {
    fn from(e: invargeo::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn run(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::GenAtoms { out } => {
            let atoms = canonical_atoms();
            let manifest = DatasetManifest::from_point_set(&atoms, 16, 16)?;
            write_atomic(&out, &manifest.to_json())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            dataset,
            group,
            epsilon,
            method,
            subset,
            out,
        } => cmd_analyze(&dataset, group, epsilon, method, subset.as_deref(), &out),
        Command::Bound {
            covering,
            classes,
            samples,
            delta,
            margin,
        } => {
            let params = GeBoundParams {
                n_classes: classes,
                m: samples,
                delta,
                margin,
            };
            let bound = ge_bound(&params, covering)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&bound).expect("bound serializes")
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            dataset,
            invariant,
            reg_invariance,
            group,
            epochs,
            seed,
            split,
            out,
        } => cmd_train(
            &dataset,
            invariant,
            reg_invariance,
            group,
            epochs,
            seed,
            split,
            out.as_deref(),
        ),
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    DatasetManifest::parse(&text).map_err(|e| CliError::Usage(e.to_string()))
}

fn build_group(name: GroupName, w: usize, h: usize) -> Result<TransformSet, CliError> {
    Ok(match name {
        GroupName::Translation => translation_group(w, h),
        GroupName::Rot90 => rotation_group(w, h)?,
        GroupName::Transrot => product_set(&rotation_group(w, h)?, &translation_group(w, h))?,
    })
}

fn group_label(name: GroupName) -> &'static str {
    match name {
        GroupName::Translation => "translation",
        GroupName::Rot90 => "rot90",
        GroupName::Transrot => "transrot",
    }
}

fn node_budget() -> Result<u64, CliError> {
    match std::env::var("INVARGEO_BUDGET") {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::Usage(format!("INVARGEO_BUDGET is not an integer: {v}"))),
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
    }
}

fn cmd_analyze(
    dataset: &Path,
    group: GroupName,
    epsilon: f64,
    method: Method,
    subset: Option<&str>,
    out: &Path,
) -> Result<ExitCode, CliError> {
    let manifest = load_manifest(dataset)?;
    let ps = manifest.to_point_set()?;
    let keep: Option<Vec<usize>> = subset
        .map(|s| {
            s.split(',')
                .map(|part| {
                    part.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Usage(format!("bad subset label: {part}")))
                })
                .collect()
        })
        .transpose()?;
    let labels = ps.labels().expect("manifest sets always carry labels");
    let points: Vec<Signal> = ps
        .iter()
        .zip(labels)
        .filter(|(_, l)| keep.as_ref().map(|k| k.contains(l)).unwrap_or(true))
        .map(|(p, _)| p.clone())
        .collect();
    if points.is_empty() {
        return Err(CliError::Usage("subset filter left no samples".into()));
    }
    let base = PointSet::deduplicated(points, 0.0)?;
    let ts = build_group(group, manifest.width, manifest.height)?;
    let cover_method = match method {
        Method::Exact => CoverMethod::Exact {
            budget: node_budget()?,
        },
        Method::Greedy => CoverMethod::Greedy,
    };
    let factorization = analyze(&ts, &base, epsilon, cover_method)?;
    let exhausted = matches!(method, Method::Exact)
        && !(factorization.n_base.certified_exact && factorization.n_product.certified_exact);
    let report = AnalysisReport::new(&dataset.display().to_string(), group_label(group), factorization);
    write_atomic(out, &report.to_json())?;
    let csv_path = out.with_extension("csv");
    write_atomic(&csv_path, &format!("{CSV_HEADER}\n{}\n", report.to_csv_row()))?;
    if exhausted {
        eprintln!("exact search exhausted its node budget; result is not certified");
        return Ok(ExitCode::from(EXIT_BUDGET));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TrainReport {
    invariant: String,
    seed: u64,
    epochs: usize,
    split: f64,
    reg_invariance: f64,
    train_size: usize,
    test_size: usize,
    train_accuracy: f64,
    test_accuracy: f64,
    empirical_ge: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    dataset: &Path,
    invariant: InvariantMode,
    reg_invariance: f64,
    group: Option<GroupName>,
    epochs: usize,
    seed: u64,
    split: f64,
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    if !(split > 0.0 && split < 1.0) {
        return Err(CliError::Usage(format!("split must be in (0, 1), got {split}")));
    }
    let manifest = load_manifest(dataset)?;
    let ps = manifest.to_point_set()?;
    if manifest.n_classes < 2 {
        return Err(CliError::Usage("dataset must have at least 2 classes".into()));
    }
    let ts = group
        .map(|g| build_group(g, manifest.width, manifest.height))
        .transpose()?;
    let needs_group = matches!(invariant, InvariantMode::OrbitAverage) || reg_invariance > 0.0;
    if needs_group && ts.is_none() {
        return Err(CliError::Usage(
            "--group is required with --invariant orbit-average or --reg-invariance > 0".into(),
        ));
    }

    let labels = ps.labels().expect("manifest sets carry labels").to_vec();
    let mut indices: Vec<usize> = (0..ps.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = ((ps.len() as f64) * split).floor().max(1.0) as usize;
    if n_train >= ps.len() {
        return Err(CliError::Usage("split leaves an empty test set".into()));
    }
    let subset = |idx: &[usize]| -> Result<PointSet, CliError> {
        Ok(PointSet::with_labels(
            idx.iter().map(|&i| ps.point(i).clone()).collect(),
            idx.iter().map(|&i| labels[i]).collect(),
        )?)
    };
    let train_set = subset(&indices[..n_train])?;
    let test_set = subset(&indices[n_train..])?;

    let cfg = TrainConfig {
        epochs,
        invariance_weight: reg_invariance,
        seed,
        ..TrainConfig::default()
    };

    let (train_err, test_err, gap) = match invariant {
        InvariantMode::None => {
            let model = train(&train_set, &cfg, ts.as_ref())?;
            let pf = |x: &Signal| predict(&model, x);
            (
                zero_one_error(pf, &train_set)?,
                zero_one_error(pf, &test_set)?,
                empirical_ge(pf, &train_set, &test_set)?,
            )
        }
        InvariantMode::OrbitAverage => {
            let g = ts.as_ref().expect("checked above");
            // training the score-averaged model is gradient descent on the
            // base weights with orbit-mean inputs
            let averaged = PointSet::with_labels(
                train_set
                    .iter()
                    .map(|x| orbit_mean(g, x))
                    .collect::<invargeo::Result<Vec<_>>>()?,
                train_set.labels().expect("labeled").to_vec(),
            )?;
            let model = train(&averaged, &cfg, None)?;
            let inv = orbit_average(&model, g)?;
            let pf = |x: &Signal| inv.predict(x);
            (
                zero_one_error(pf, &train_set)?,
                zero_one_error(pf, &test_set)?,
                empirical_ge(pf, &train_set, &test_set)?,
            )
        }
    };

    let report = TrainReport {
        invariant: match invariant {
            InvariantMode::None => "none".into(),
            InvariantMode::OrbitAverage => "orbit-average".into(),
        },
        seed,
        epochs,
        split,
        reg_invariance,
        train_size: train_set.len(),
        test_size: test_set.len(),
        train_accuracy: 1.0 - train_err,
        test_accuracy: 1.0 - test_err,
        empirical_ge: gap,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => write_atomic(path, &text)?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Writes via a temp file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
