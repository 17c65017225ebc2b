//! `comte` command line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use comte::classifier::{BuiltinModel, LogisticTrainer};
use comte::metrics;
use comte::search::{Explainer, SearchConfig, SearchMethod, SearchOutcome};
use comte::synthetic::{self, GeneratorSpec};
use comte::{Classifier, Dataset, DistractorIndex, Explanation, ExternalClassifier, MultivariateSample, NormalizationParams};

#[derive(Parser)]
#[command(name = "comte", version, about = "Counterfactual explanations for multivariate time-series classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-metric min/max normalization on a training set.
    Normalize {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an L1-regularized logistic regression on the 11 per-metric features.
    TrainLogistic(TrainArgs),
    /// Explain one sample.
    Explain(ExplainArgs),
    /// Evaluate explanations.
    #[command(subcommand)]
    Evaluate(Evaluate),
    /// Write the substituted series of an explanation as CSV.
    PlotData {
        #[arg(long)]
        explanation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset from a generator spec (JSON).
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// Normalization parameters applied before feature extraction.
    #[arg(long)]
    params: Option<PathBuf>,
    /// L1 penalty.
    #[arg(long, default_value_t = 0.01)]
    l1: f64,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long, default_value_t = 0.5)]
    learning_rate: f64,
    /// Label of the positive class; defaults to the second label in sorted order.
    #[arg(long)]
    positive_class: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Data and classifier shared by the commands that run a classifier.
#[derive(Args)]
struct ModelArgs {
    /// Training set; also the pool of distractors.
    #[arg(long)]
    train: PathBuf,
    /// Normalization parameters; fitted on the training set when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// `builtin:<model-file>` or `exec:<command>`.
    #[arg(long)]
    classifier: String,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Greedy)]
    method: MethodArg,
    #[arg(long, default_value_t = 3)]
    distractors: usize,
    #[arg(long, default_value_t = 0.95)]
    tau: f64,
    #[arg(long, default_value_t = 3)]
    delta: usize,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, env = "COMTE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 50)]
    max_attempts: usize,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Greedy,
    Hillclimb,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            tau: self.tau,
            delta: self.delta,
            lambda: self.lambda,
            num_distractors: self.distractors,
            rng_seed: self.seed,
            num_restarts: self.restarts,
            max_attempts: self.max_attempts,
            max_iters: self.max_iters,
            method: match self.method {
                MethodArg::Greedy => SearchMethod::Greedy,
                MethodArg::Hillclimb => SearchMethod::HillClimb,
            },
        }
    }
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// File holding the sample; defaults to the training set.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    sample: String,
    #[arg(long)]
    target_class: String,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Evaluate {
    /// Precision and recall against the metrics a logistic model uses.
    Faithfulness {
        #[arg(long)]
        explanation: PathBuf,
        /// Logistic model file (`builtin` format).
        #[arg(long)]
        model: PathBuf,
        /// Keep only the first `n` explanation metrics, to compare methods at
        /// equal explanation size.
        #[arg(long)]
        truncate_to: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Number of substituted time series.
    Comprehensibility {
        #[arg(long)]
        explanation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local Lipschitz constant of an explainer over the k nearest training samples.
    Robustness {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        sample: String,
        #[arg(long)]
        target_class: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Use the random baseline, sized like the sample's own explanation.
        #[arg(long)]
        random_baseline: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fraction of a (true, predicted) cohort an explanation flips.
    Generalizability {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        explanation: PathBuf,
        /// Samples to draw the cohort from; defaults to the training set.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        true_class: String,
        #[arg(long)]
        predicted_class: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.downcast_ref::<comte::Error>().map_or("error", comte::Error::code);
            report_error(code, &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}

fn report_error(code: &str, message: &str) {
    let body = json!({"error": {"code": code, "message": message.trim_end()}});
    let _ = writeln!(std::io::stderr(), "{body}");
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Normalize { train, out } => {
            let train = read_dataset(&train)?;
            let params = NormalizationParams::fit(train.samples())?;
            write_json(Some(&out), &params)
        }
        Command::TrainLogistic(args) => train_logistic(args),
        Command::Explain(args) => {
            let ctx = Workspace::load(&args.model)?;
            let x = ctx.sample(args.test.as_deref(), &args.sample)?;
            let outcome = ctx.explainer(args.search.config())?.explain(&x, &args.target_class)?;
            write_json(args.out.as_deref(), &outcome)
        }
        Command::Evaluate(e) => evaluate(e),
        Command::PlotData { explanation, out } => {
            let csv = read_explanation(&explanation)?.plot_csv();
            write_text(out.as_deref(), &csv)
        }
        Command::Generate { spec, out, manifest } => {
            let spec: GeneratorSpec = read_json(&spec)?;
            let (dataset, m) = synthetic::generate(&spec)?;
            dataset.write(&out).with_context(|| format!("writing {}", out.display()))?;
            match manifest {
                Some(path) => write_json(Some(&path), &m),
                None => Ok(()),
            }
        }
    }
}

fn train_logistic(args: TrainArgs) -> anyhow::Result<()> {
    let train = read_dataset(&args.train)?;
    let samples = match &args.params {
        Some(p) => read_json::<NormalizationParams>(p)?.apply_all(train.samples())?,
        None => train.samples().to_vec(),
    };
    let positive = match args.positive_class {
        Some(c) => c,
        None => {
            let mut labels = train.labels();
            labels.sort_unstable();
            labels
                .get(1)
                .ok_or(comte::Error::SingleClass(labels.first().map_or_else(String::new, |s| s.to_string())))?
                .to_string()
        }
    };
    let trainer = LogisticTrainer {
        l1: args.l1,
        steps: args.steps,
        learning_rate: args.learning_rate,
    };
    let model = trainer.fit_samples(&samples, &positive)?;
    let used: Vec<&str> = model
        .used_metrics()
        .into_iter()
        .map(|j| train.schema().name(j))
        .collect();
    let summary = json!({
        "nonzero_features": model.nonzero_features().len(),
        "used_metrics": used,
        "class_names": model.class_names(),
    });
    write_json(Some(&args.out), &BuiltinModel::Logistic(model))?;
    println!("{summary}");
    Ok(())
}

fn evaluate(e: Evaluate) -> anyhow::Result<()> {
    match e {
        Evaluate::Faithfulness {
            explanation,
            model,
            truncate_to,
            out,
        } => {
            let mut explanation = read_explanation(&explanation)?;
            if let Some(n) = truncate_to {
                explanation.mask = metrics::truncate_mask(&explanation.mask, n);
                explanation.substituted_metrics.truncate(n);
            }
            let model = match read_json::<BuiltinModel>(&model)? {
                BuiltinModel::Logistic(m) => m,
                _ => bail!("faithfulness needs a logistic model"),
            };
            write_json(out.as_deref(), &metrics::faithfulness(&explanation, &model)?)
        }
        Evaluate::Comprehensibility { explanation, out } => {
            let explanation = read_explanation(&explanation)?;
            write_json(
                out.as_deref(),
                &json!({"comprehensibility": metrics::comprehensibility(&explanation)}),
            )
        }
        Evaluate::Robustness {
            model,
            test,
            sample,
            target_class,
            k,
            random_baseline,
            search,
            out,
        } => {
            let ctx = Workspace::load(&model)?;
            let x = ctx.sample(test.as_deref(), &sample)?;
            let explainer = ctx.explainer(search.config())?;
            let neighbors = ctx
                .train_index
                .nearest(&x, k + 1)?
                .into_iter()
                .map(|n| n.sample)
                .filter(|s| s.sample_id() != x.sample_id())
                .take(k);
            let report = if random_baseline {
                let size = explainer.explain(&x, &target_class)?.explanation.size();
                let mut rng = search.config().rng(0);
                let m = x.num_metrics();
                metrics::lipschitz_robustness(&x, |_| Ok(metrics::random_mask(m, size, &mut rng)), neighbors)?
            } else {
                metrics::lipschitz_robustness(
                    &x,
                    |s| Ok(explainer.explain(s, &target_class)?.explanation.mask),
                    neighbors,
                )?
            };
            write_json(out.as_deref(), &report)
        }
        Evaluate::Generalizability {
            model,
            explanation,
            test,
            true_class,
            predicted_class,
            out,
        } => {
            let ctx = Workspace::load(&model)?;
            let explanation = read_explanation(&explanation)?;
            let pool = match test {
                Some(path) => ctx.params.apply_all(read_dataset(&path)?.samples())?,
                None => ctx.train.clone(),
            };
            let cohort = metrics::cohort(&pool, ctx.classifier.as_ref(), &true_class, &predicted_class)?;
            let report = metrics::generalizability(
                &explanation,
                cohort,
                ctx.classifier.as_ref(),
                &explanation.target_class,
                |id| ctx.train.iter().find(|s| s.sample_id() == id),
            )?;
            write_json(out.as_deref(), &report)
        }
    }
}

/// Normalized training data, classifier and distractor index.
struct Workspace {
    params: NormalizationParams,
    train: Vec<MultivariateSample>,
    train_index: comte::distractor::SampleIndex,
    classifier: Box<dyn Classifier>,
    index: DistractorIndex,
}

impl Workspace {
    fn load(args: &ModelArgs) -> anyhow::Result<Self> {
        let dataset = read_dataset(&args.train)?;
        let params = match &args.params {
            Some(p) => read_json(p)?,
            None => NormalizationParams::fit(dataset.samples())?,
        };
        let train = params.apply_all(dataset.samples())?;
        let classifier = load_classifier(&args.classifier, dataset.schema().clone())?;
        let index = DistractorIndex::build(&train, classifier.as_ref())?;
        Ok(Self {
            params,
            train_index: comte::distractor::SampleIndex::new(train.clone()),
            train,
            classifier,
            index,
        })
    }

    /// The normalized sample `id`, from `test` or the training set.
    fn sample(&self, test: Option<&Path>, id: &str) -> anyhow::Result<MultivariateSample> {
        match test {
            Some(path) => {
                let dataset = read_dataset(path)?;
                let raw = dataset
                    .find(id)
                    .ok_or_else(|| comte::Error::MissingSample(id.to_string()))?;
                Ok(self.params.apply(raw)?)
            }
            None => Ok(self
                .train
                .iter()
                .find(|s| s.sample_id() == id)
                .ok_or_else(|| comte::Error::MissingSample(id.to_string()))?
                .clone()),
        }
    }

    fn explainer(&self, config: SearchConfig) -> anyhow::Result<Explainer<'_>> {
        Ok(Explainer::new(self.classifier.as_ref(), &self.index, config)?.with_normalization(&self.params))
    }
}

fn load_classifier(spec: &str, schema: std::sync::Arc<comte::MetricSchema>) -> anyhow::Result<Box<dyn Classifier>> {
    if let Some(path) = spec.strip_prefix("builtin:") {
        let model: BuiltinModel = read_json(Path::new(path))?;
        Ok(Box::new(model))
    } else if let Some(command) = spec.strip_prefix("exec:") {
        let external = ExternalClassifier::spawn(command, schema).map_err(comte::Error::from)?;
        Ok(Box::new(external))
    } else {
        Err(anyhow!(comte::Error::InvalidConfig(format!(
            "classifier must be builtin:<model-file> or exec:<command>, got {spec:?}"
        ))))
    }
}

fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    Dataset::read(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(comte::Error::from)
        .with_context(|| format!("parsing {}", path.display()))
}

/// Accepts either a bare explanation or the full `explain` output.
fn read_explanation(path: &Path) -> anyhow::Result<Explanation> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("explanation").is_some() {
        let outcome: SearchOutcome = serde_json::from_value(value).map_err(comte::Error::from)?;
        Ok(outcome.explanation)
    } else {
        Ok(serde_json::from_value(value).map_err(comte::Error::from)?)
    }
}

fn write_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(out, &text)
}

fn write_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
