//! Command-line driver: argument parsing, run directories and reports.
//!
//! Every command except `stats` writes into a fresh
//! `<out-dir>/<UTC timestamp>-<command>/` directory holding the resolved
//! configuration (`config.toml`) and its outputs, and prints
//! `run_dir=<path>` followed by `key=value` results on stdout.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use neuralcd::baselines::{train_irt, train_mf, train_mirt};
use neuralcd::checkpoint::{Checkpoint, Family, TrainedModel};
use neuralcd::dataset::{
    filter_students, load_dataset, load_id_maps, load_logs, load_qmatrix, split_per_student, write_id_maps, write_logs,
    write_qmatrix, Dataset, DatasetStats, IdMaps, QMatrix, ResponseLog,
};
use neuralcd::metrics::{doa_with, evaluate, DoaConvention};
use neuralcd::neuralcdm::{diagnose, train};
use neuralcd::qrefine::{load_candidates, train_plus, write_candidates, write_effective_q, CandidateSets};
use neuralcd::synth::{generate, inject_candidates, write_proficiency_matrix, SynthSpec};
use neuralcd::trainer::{History, TrainConfig};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const ID_MAP_FILE: &str = "id_map.csv";

#[derive(Debug, Parser)]
#[command(
    name = "neuralcd",
    version,
    about = "Neural cognitive diagnosis: train, evaluate and diagnose"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dataset summary statistics.
    Stats(StatsArgs),
    /// Split a dataset per student, train a model and evaluate it on the held-out logs.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a log file.
    Eval(EvalArgs),
    /// Export proficiency, knowledge difficulty and discrimination from a checkpoint.
    Diagnose(DiagnoseArgs),
    /// Train NeuralCDM+ and export the refined relevancy matrix.
    Refine(TrainArgs),
    /// Generate a synthetic dataset with known proficiencies.
    Synth(SynthArgs),
}

/// Error in the arguments that clap cannot catch on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 usage/validation, 3 data, 4 numeric failure.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<neuralcd::Error>() {
        Some(neuralcd::Error::Config(_)) => 2,
        Some(neuralcd::Error::NonFinite(_)) => 4,
        _ => 3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ModelArg {
    #[value(name = "neuralcdm")]
    #[serde(rename = "neuralcdm")]
    NeuralCdm,
    #[value(name = "neuralcdm+")]
    #[serde(rename = "neuralcdm+")]
    NeuralCdmPlus,
    #[value(name = "irt")]
    #[serde(rename = "irt")]
    Irt,
    #[value(name = "mirt")]
    #[serde(rename = "mirt")]
    Mirt,
    #[value(name = "mf")]
    #[serde(rename = "mf")]
    Mf,
}

impl From<ModelArg> for Family {
    fn from(m: ModelArg) -> Family {
        match m {
            ModelArg::NeuralCdm => Family::NeuralCdm,
            ModelArg::NeuralCdmPlus => Family::NeuralCdmPlus,
            ModelArg::Irt => Family::Irt,
            ModelArg::Mirt => Family::Mirt,
            ModelArg::Mf => Family::Mf,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionArg {
    /// Count only co-answered exercises whose scores differ.
    #[default]
    Decisive,
    /// Count every co-answered exercise.
    Strict,
}

impl From<ConventionArg> for DoaConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Decisive => DoaConvention::Decisive,
            ConventionArg::Strict => DoaConvention::Strict,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DataArgs {
    /// Response logs, `student_id,exercise_id,score`.
    #[arg(long)]
    pub logs: PathBuf,
    /// Q-matrix, `exercise_id,concept_id`.
    #[arg(long)]
    pub qmatrix: PathBuf,
    /// Drop students with fewer logs than this.
    #[arg(long, default_value_t = 0)]
    pub min_logs: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Candidate concepts, `exercise_id,concept_id,rank` (required for neuralcdm+).
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelArg::NeuralCdm)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.002)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Width of the first hidden layer.
    #[arg(long, default_value_t = 512)]
    pub h1: usize,
    /// Width of the second hidden layer.
    #[arg(long, default_value_t = 256)]
    pub h2: usize,
    /// Epochs without held-out improvement before stopping; 0 disables.
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    /// Fraction of training logs held out for model selection; 0 disables.
    #[arg(long, default_value_t = 0.1)]
    pub holdout_fraction: f64,
    /// Per-student fraction of logs used for training.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// Candidates kept per exercise.
    #[arg(long, default_value_t = neuralcd::qrefine::DEFAULT_TOP_K)]
    pub top_k: usize,
    /// MF latent dimension; defaults to the number of concepts.
    #[arg(long)]
    pub factors: Option<usize>,
    /// Also report DOA of the trained proficiency over all logs.
    #[arg(long)]
    pub doa: bool,
    #[arg(long, value_enum, default_value_t = ConventionArg::Decisive)]
    pub doa_convention: ConventionArg,
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

impl TrainArgs {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            h1: self.h1,
            h2: self.h2,
            early_stop_patience: self.patience,
            holdout_fraction: self.holdout_fraction,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Checkpoint file; `id_map.csv` must sit beside it.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Logs to evaluate, using the checkpoint's IDs.
    #[arg(long)]
    pub logs: PathBuf,
    /// Q-matrix for DOA; defaults to the one stored in a neuralcdm checkpoint.
    #[arg(long)]
    pub qmatrix: Option<PathBuf>,
    #[arg(long)]
    pub doa: bool,
    #[arg(long, value_enum, default_value_t = ConventionArg::Decisive)]
    pub doa_convention: ConventionArg,
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Comma-separated student IDs; all students when omitted.
    #[arg(long, value_delimiter = ',')]
    pub students: Vec<String>,
    /// Comma-separated exercise IDs; all exercises when omitted.
    #[arg(long, value_delimiter = ',')]
    pub exercises: Vec<String>,
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub students: usize,
    #[arg(long, default_value_t = 100)]
    pub exercises: usize,
    #[arg(long, default_value_t = 8)]
    pub concepts: usize,
    #[arg(long, default_value_t = 1)]
    pub min_concepts: usize,
    #[arg(long, default_value_t = 3)]
    pub max_concepts: usize,
    #[arg(long, default_value_t = 1.0)]
    pub disc_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub disc_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub guess: f64,
    #[arg(long, default_value_t = 0.0)]
    pub slip: f64,
    /// Fraction of exercises each student answers.
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    /// Probability of dropping each Q-matrix label (writes a corrupted Q-matrix and candidates).
    #[arg(long, default_value_t = 0.0)]
    pub drop_rate: f64,
    /// Random unlabelled candidates added per exercise.
    #[arg(long, default_value_t = 0)]
    pub spurious: usize,
    #[arg(long, default_value = "runs")]
    pub out_dir: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            n_students: self.students,
            n_exercises: self.exercises,
            n_concepts: self.concepts,
            concepts_per_exercise: (self.min_concepts, self.max_concepts),
            disc_range: (self.disc_min, self.disc_max),
            guess: self.guess,
            slip: self.slip,
            density: self.density,
            scale: SynthSpec::default().scale,
            seed: self.seed,
        }
    }
}

#[derive(Serialize)]
struct RecordedConfig<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    #[serde(flatten)]
    args: &'a T,
}

/// Creates `<base>/<timestamp>-<command>`, adding a numeric suffix when
/// that name is taken.
pub fn create_run_dir(base: &Path, command: &str) -> anyhow::Result<PathBuf> {
    let now = time::OffsetDateTime::now_utc();
    let stamp = format!(
        "{:04}{:02}{:02}T{:02}{:02}{:02}Z",
        now.year(),
        u8::from(now.month()),
        now.day(),
        now.hour(),
        now.minute(),
        now.second()
    );
    fs::create_dir_all(base).with_context(|| format!("creating {}", base.display()))?;
    for attempt in 1.. {
        let name = if attempt == 1 {
            format!("{stamp}-{command}")
        } else {
            format!("{stamp}-{command}-{attempt}")
        };
        let dir = base.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

fn write_config<T: Serialize>(dir: &Path, command: &str, args: &T) -> anyhow::Result<()> {
    let record = RecordedConfig {
        command,
        version: env!("CARGO_PKG_VERSION"),
        args,
    };
    fs::write(dir.join("config.toml"), toml::to_string(&record)?)?;
    Ok(())
}

fn create<P: AsRef<Path>>(path: P) -> anyhow::Result<BufWriter<File>> {
    let path = path.as_ref();
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn run(cli: Cli) -> anyhow::Result<String> {
    match cli.command {
        Command::Stats(args) => cmd_stats(&args),
        Command::Train(args) => cmd_train(&args, "train"),
        Command::Refine(mut args) => {
            if args.model != ModelArg::NeuralCdmPlus {
                args.model = ModelArg::NeuralCdmPlus;
            }
            cmd_train(&args, "refine")
        }
        Command::Eval(args) => cmd_eval(&args),
        Command::Diagnose(args) => cmd_diagnose(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn load_filtered(data: &DataArgs) -> anyhow::Result<Dataset> {
    let ds = load_dataset(&data.logs, &data.qmatrix)
        .with_context(|| format!("loading {} and {}", data.logs.display(), data.qmatrix.display()))?;
    Ok(if data.min_logs > 0 {
        filter_students(&ds, data.min_logs)
    } else {
        ds
    })
}

pub fn cmd_stats(args: &StatsArgs) -> anyhow::Result<String> {
    let ds = load_filtered(&args.data)?;
    let stats = DatasetStats::compute(&ds);
    Ok(format!("{stats}\n{}", stats.key_values()))
}

fn fit(
    family: Family,
    args: &TrainArgs,
    split: &neuralcd::dataset::SplitDataset,
    q: &QMatrix,
    cand: Option<&CandidateSets>,
) -> anyhow::Result<(TrainedModel, History)> {
    let cfg = args.train_config();
    Ok(match family {
        Family::NeuralCdm => {
            let (params, h) = train(split, q, &cfg)?;
            (
                TrainedModel::NeuralCdm {
                    params,
                    q: q.to_dense(),
                },
                h,
            )
        }
        Family::NeuralCdmPlus => {
            let cand = cand.expect("candidates checked before training");
            let (params, refined, h) = train_plus(split, q, cand, &cfg)?;
            (TrainedModel::NeuralCdmPlus { params, refined }, h)
        }
        Family::Irt => {
            let (p, h) = train_irt(split, &cfg)?;
            (TrainedModel::Irt(p), h)
        }
        Family::Mirt => {
            let (p, h) = train_mirt(split, q, &cfg)?;
            (TrainedModel::Mirt(p), h)
        }
        Family::Mf => {
            let (p, h) = train_mf(split, args.factors.unwrap_or(q.n_concepts()), &cfg)?;
            (TrainedModel::Mf(p), h)
        }
    })
}

fn doa_unsupported(family: Family) -> anyhow::Error {
    usage(format!(
        "DOA needs concept-aligned proficiency, but {family} has no concept-aligned factors"
    ))
}

pub fn cmd_train(args: &TrainArgs, command: &str) -> anyhow::Result<String> {
    let family = Family::from(args.model);
    if family == Family::NeuralCdmPlus && args.candidates.is_none() {
        return Err(usage("--model neuralcdm+ requires --candidates"));
    }
    if args.doa && !family.has_concept_proficiency() {
        return Err(doa_unsupported(family));
    }
    args.train_config().validate()?;

    let ds = load_filtered(&args.data)?;
    let cand = match &args.candidates {
        Some(path) => {
            Some(load_candidates(path, &ds.ids, args.top_k).with_context(|| format!("loading {}", path.display()))?)
        }
        None => None,
    };
    let split = split_per_student(&ds, args.train_fraction, args.seed)?;
    let (model, history) = fit(family, args, &split, &ds.q, cand.as_ref())?;

    let dir = create_run_dir(&args.out_dir, command)?;
    write_config(&dir, command, args)?;
    model.to_checkpoint().save(dir.join(CHECKPOINT_FILE))?;
    write_id_maps(create(dir.join(ID_MAP_FILE))?, &ds.ids)?;
    fs::write(dir.join("history.csv"), history.to_csv())?;
    write_logs(create(dir.join("train_logs.csv"))?, &split.train, &ds.ids)?;
    write_logs(create(dir.join("test_logs.csv"))?, &split.test, &ds.ids)?;
    write_qmatrix(create(dir.join("qmatrix.csv"))?, &ds.q, &ds.ids)?;
    if let TrainedModel::NeuralCdmPlus { refined, .. } = &model {
        write_effective_q(create(dir.join("refined_q.csv"))?, refined, &ds.ids)?;
    }

    let mut report = format!(
        "model={family}\nepochs_run={}\nbest_epoch={}\n",
        history.epochs.len(),
        history.best_epoch
    );
    let preds = model.predict(&split.test)?;
    let labels: Vec<f64> = split.test.iter().map(|l| l.score).collect();
    report.push_str(&evaluate(&preds, &labels)?.key_values());
    if args.doa {
        let prof = model.proficiency().expect("checked concept-aligned family");
        let d = doa_with(&prof, &ds.logs, &ds.q, args.doa_convention.into())?;
        report.push_str(&format!("doa={:.6}\n", d.mean));
    }
    fs::write(dir.join("eval.txt"), &report)?;
    Ok(format!("run_dir={}\n{report}", dir.display()))
}

fn checkpoint_ids(checkpoint: &Path) -> anyhow::Result<IdMaps> {
    let path = checkpoint.parent().unwrap_or(Path::new(".")).join(ID_MAP_FILE);
    load_id_maps(&path).with_context(|| format!("reading ID map {}", path.display()))
}

fn load_model(checkpoint: &Path) -> anyhow::Result<(TrainedModel, IdMaps)> {
    let model = Checkpoint::load(checkpoint)
        .and_then(TrainedModel::from_checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let ids = checkpoint_ids(checkpoint)?;
    if ids.students.len() != model.n_students() || ids.exercises.len() != model.n_exercises() {
        bail!(neuralcd::Error::Data(format!(
            "ID map lists {} students and {} exercises, checkpoint has {} and {}",
            ids.students.len(),
            ids.exercises.len(),
            model.n_students(),
            model.n_exercises()
        )));
    }
    Ok((model, ids))
}

fn unknown_ids(kind: &str, before: usize, after: &neuralcd::dataset::IdMap) -> anyhow::Result<()> {
    if after.len() > before {
        let unknown: Vec<&str> = after.names()[before..].iter().take(5).map(String::as_str).collect();
        bail!(neuralcd::Error::Data(format!(
            "{} {kind} id(s) unknown to the checkpoint, e.g. {}",
            after.len() - before,
            unknown.join(", ")
        )));
    }
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<String> {
    let (model, mut ids) = load_model(&args.checkpoint)?;
    let family = model.family();
    if args.doa && !family.has_concept_proficiency() {
        return Err(doa_unsupported(family));
    }
    let (n_students, n_exercises) = (ids.students.len(), ids.exercises.len());
    let logs: Vec<ResponseLog> =
        load_logs(&args.logs, &mut ids).with_context(|| format!("loading {}", args.logs.display()))?;
    unknown_ids("student", n_students, &ids.students)?;
    unknown_ids("exercise", n_exercises, &ids.exercises)?;

    let preds = model.predict(&logs)?;
    let labels: Vec<f64> = logs.iter().map(|l| l.score).collect();
    let mut report = format!("model={family}\n{}", evaluate(&preds, &labels)?.key_values());
    if args.doa {
        let q = match (&args.qmatrix, &model) {
            (Some(path), _) => {
                let n_concepts = ids.concepts.len();
                let q = load_qmatrix(path, &mut ids, &logs)?;
                unknown_ids("concept", n_concepts, &ids.concepts)?;
                q
            }
            (None, TrainedModel::NeuralCdm { q, .. }) => dense_to_q(q)?,
            (None, _) => return Err(usage("DOA for this checkpoint needs --qmatrix")),
        };
        let prof = model.proficiency().expect("checked concept-aligned family");
        let d = doa_with(&prof, &logs, &q, args.doa_convention.into())?;
        report.push_str(&format!("doa={:.6}\n", d.mean));
    }

    let dir = create_run_dir(&args.out_dir, "eval")?;
    write_config(&dir, "eval", args)?;
    fs::write(dir.join("eval.txt"), &report)?;
    Ok(format!("run_dir={}\n{report}", dir.display()))
}

fn dense_to_q(q: &neuralcd::numeric::Matrix) -> anyhow::Result<QMatrix> {
    let pairs = (0..q.rows()).flat_map(|e| (0..q.cols()).filter(move |&k| q.get(e, k) != 0.0).map(move |k| (e, k)));
    Ok(QMatrix::from_pairs(q.rows(), q.cols(), pairs)?)
}

fn resolve(kind: &str, map: &neuralcd::dataset::IdMap, requested: &[String]) -> anyhow::Result<Vec<usize>> {
    if requested.is_empty() {
        return Ok((0..map.len()).collect());
    }
    requested
        .iter()
        .map(|name| {
            map.get(name).ok_or_else(|| {
                let names = map.names();
                let range = match (names.first(), names.last()) {
                    (Some(first), Some(last)) => format!("{} {kind}s, {first} .. {last}", names.len()),
                    _ => format!("no {kind}s"),
                };
                usage(format!("unknown {kind} id `{name}`; the checkpoint knows {range}"))
            })
        })
        .collect()
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> anyhow::Result<String> {
    let (model, ids) = load_model(&args.checkpoint)?;
    let Some(params) = model.neural_params() else {
        return Err(usage(format!(
            "diagnose needs a neuralcdm or neuralcdm+ checkpoint, got {}",
            model.family()
        )));
    };
    let students = resolve("student", &ids.students, &args.students)?;
    let exercises = resolve("exercise", &ids.exercises, &args.exercises)?;
    let report = diagnose(params);

    let dir = create_run_dir(&args.out_dir, "diagnose")?;
    write_config(&dir, "diagnose", args)?;
    report.write_proficiency(create(dir.join("proficiency.csv"))?, &ids, &students)?;
    report.write_knowledge_difficulty(create(dir.join("knowledge_difficulty.csv"))?, &ids, &exercises)?;
    report.write_discrimination(create(dir.join("discrimination.csv"))?, &ids, &exercises)?;
    Ok(format!(
        "run_dir={}\nstudents={}\nexercises={}\nconcepts={}\n",
        dir.display(),
        students.len(),
        exercises.len(),
        params.n_concepts()
    ))
}

pub fn cmd_synth(args: &SynthArgs) -> anyhow::Result<String> {
    let data = generate(&args.spec())?;
    let (observed, cand) = inject_candidates(&data.dataset.q, args.drop_rate, args.spurious, args.seed)?;
    let ds = &data.dataset;

    let dir = create_run_dir(&args.out_dir, "synth")?;
    write_config(&dir, "synth", args)?;
    write_logs(create(dir.join("logs.csv"))?, &ds.logs, &ds.ids)?;
    write_qmatrix(create(dir.join("qmatrix.csv"))?, &ds.q, &ds.ids)?;
    write_proficiency_matrix(
        create(dir.join("true_proficiency.csv"))?,
        &ds.ids,
        &data.true_proficiency,
    )?;
    let corrupted = args.drop_rate > 0.0 || args.spurious > 0;
    if corrupted {
        write_qmatrix(create(dir.join("observed_qmatrix.csv"))?, &observed, &ds.ids)?;
        write_candidates(create(dir.join("candidates.csv"))?, &cand, &ds.ids)?;
    }
    let rate = ds.logs.iter().map(|l| l.score).sum::<f64>() / ds.logs.len() as f64;
    Ok(format!(
        "run_dir={}\nn_students={}\nn_exercises={}\nn_concepts={}\nn_logs={}\ncorrect_rate={rate:.6}\n",
        dir.display(),
        ds.n_students(),
        ds.n_exercises(),
        ds.n_concepts(),
        ds.logs.len()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let cases = [
            (anyhow::Error::from(UsageError("x".into())), 2),
            (neuralcd::Error::Config("x".into()).into(), 2),
            (neuralcd::Error::Data("x".into()).into(), 3),
            (neuralcd::Error::NonFinite("x".into()).into(), 4),
            (
                anyhow::Error::from(neuralcd::Error::NonFinite("x".into())).context("training"),
                4,
            ),
        ];
        for (err, code) in cases {
            assert_eq!(exit_code(&err), code, "{err:#}");
        }
    }

    #[test]
    fn run_dirs_never_collide() {
        let tmp = tempfile::tempdir().unwrap();
        let a = create_run_dir(tmp.path(), "train").unwrap();
        let b = create_run_dir(tmp.path(), "train").unwrap();
        assert_ne!(a, b);
        assert!(a.file_name().unwrap().to_str().unwrap().ends_with("-train"));
    }

    #[test]
    fn cli_parses_every_documented_flag() {
        let cli = Cli::try_parse_from([
            "neuralcd",
            "train",
            "--logs",
            "l.csv",
            "--qmatrix",
            "q.csv",
            "--candidates",
            "c.csv",
            "--model",
            "neuralcdm+",
            "--seed",
            "3",
            "--epochs",
            "2",
            "--lr",
            "0.01",
            "--batch-size",
            "8",
            "--out-dir",
            "o",
            "--min-logs",
            "15",
            "--train-fraction",
            "0.7",
            "--doa",
        ])
        .unwrap();
        let Command::Train(args) = cli.command else { panic!() };
        assert_eq!(args.model, ModelArg::NeuralCdmPlus);
        assert_eq!(args.data.min_logs, 15);
        assert!(args.doa);
        let cfg = args.train_config();
        assert_eq!((cfg.seed, cfg.epochs, cfg.batch_size), (3, 2, 8));
        assert!(
            Cli::try_parse_from(["neuralcd", "train", "--logs", "l", "--qmatrix", "q", "--model", "dina"]).is_err()
        );
    }

    #[test]
    fn config_records_resolved_values() {
        let cli = Cli::try_parse_from(["neuralcd", "synth", "--seed", "4"]).unwrap();
        let Command::Synth(args) = cli.command else { panic!() };
        let tmp = tempfile::tempdir().unwrap();
        write_config(tmp.path(), "synth", &args).unwrap();
        let text = fs::read_to_string(tmp.path().join("config.toml")).unwrap();
        assert!(text.contains("command = \"synth\""));
        assert!(text.contains("seed = 4"));
        assert!(text.contains("students = 200"));
    }
}
