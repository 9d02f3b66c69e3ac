use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use igtmt::config::{read_text, BackendKind, CorpusFormat, CorpusSource, MetricName, RunConfig};
use igtmt::goldens;
use igtmt::report::{emit_report, render_report, write_run, ReportFormat};
use igtmt::runner::{ablate_nshot, run_experiment, RunResult, SignificanceRow, DEFAULT_NSHOT_GRID};
use igtmt::RunError;
use igtmt_core::igt::validate_entry;
use igtmt_core::metrics::bootstrap::{paired_bootstrap, BootstrapConfig, Metric};
use igtmt_core::metrics::{bleu, chrf_pp, BleuConfig, ChrfConfig};
use igtmt_core::prompt::{Direction, Strategy};
use igtmt_llm::{external_score, EndpointConfig, ForbiddenTransport, Transport, UreqTransport};

#[derive(Parser)]
#[command(name = "igtmt", version, about = "Gloss-augmented LLM translation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus for malformed entries.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        format: CorpusFormat,
        /// Language code, for formats that do not carry one.
        #[arg(long)]
        language: Option<String>,
        /// Target-side file for the parallel format.
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Run one experiment and write its result and CSV report.
    Run(RunArgs),
    /// Score a hypothesis file against a reference file.
    Score {
        #[arg(long)]
        hyps: PathBuf,
        #[arg(long)]
        refs: PathBuf,
        /// bleu, chrf++ or external.
        #[arg(long)]
        metric: MetricName,
        #[arg(long)]
        sources: Option<PathBuf>,
        /// Scoring service for the external metric.
        #[arg(long)]
        scorer_url: Option<String>,
        #[arg(long)]
        scorer_api_key_env: Option<String>,
    },
    /// Sweep the number of support examples.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated support sizes.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        ns: Option<Vec<usize>>,
    },
    /// Paired bootstrap significance test between two hypothesis files.
    Sigtest {
        #[arg(long)]
        hyps_a: PathBuf,
        #[arg(long)]
        hyps_b: PathBuf,
        #[arg(long)]
        refs: PathBuf,
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Summarise run results.
    Report {
        /// Run result JSON files.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        format: ReportFormat,
        /// Write report.<ext> here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare or rewrite the checked-in golden files.
    Goldens {
        #[arg(long, conflicts_with = "bless", required_unless_present = "bless")]
        check: bool,
        #[arg(long)]
        bless: bool,
        #[arg(long, default_value = "fixtures")]
        fixtures: PathBuf,
        /// Re-record the replay cache from the scripted stub before blessing.
        #[arg(long, requires = "bless")]
        regenerate_cache: bool,
    },
}

/// Config file plus per-key overrides.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    n_support: Option<usize>,
    #[arg(long)]
    direction: Option<Direction>,
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Chat completions URL.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<MetricName>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    dictionary: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, RunError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(v) = self.strategy {
            cfg.strategy = v;
        }
        if let Some(v) = self.n_support {
            cfg.n_support = v;
        }
        if let Some(v) = self.direction {
            cfg.direction = v;
        }
        if let Some(v) = &self.model_id {
            cfg.model_id = v.clone();
        }
        if let Some(v) = self.backend {
            cfg.backend = v;
        }
        if let Some(url) = &self.endpoint {
            let key = cfg.endpoint.as_ref().and_then(|e| e.api_key_env.clone());
            cfg.endpoint = Some(EndpointConfig {
                url: url.clone(),
                api_key_env: key,
            });
        }
        if let Some(v) = self.concurrency {
            cfg.concurrency = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = v.clone();
        }
        if let Some(v) = &self.metrics {
            cfg.metrics = v.clone();
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = &self.dictionary {
            cfg.dictionary = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(m) => Failure::Usage(format!("config: {m}")),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn transport_for(backend: BackendKind) -> Arc<dyn Transport> {
    match backend {
        BackendKind::Live => Arc::new(UreqTransport::default()),
        BackendKind::Replay => Arc::new(ForbiddenTransport),
    }
}

fn lines(path: &Path) -> Result<Vec<String>, Failure> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn same_length(a: (&Path, &[String]), b: (&Path, &[String])) -> Result<(), Failure> {
    if a.1.len() == b.1.len() {
        return Ok(());
    }
    Err(Failure::Usage(format!(
        "{} has {} lines but {} has {} lines",
        a.0.display(),
        a.1.len(),
        b.0.display(),
        b.1.len()
    )))
}

fn print_scores(result: &RunResult) {
    for s in &result.scores {
        println!("{}\t{:?}", s.metric_name, s.corpus_score);
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate {
            corpus,
            format,
            language,
            target,
        } => {
            let mut src = CorpusSource::new(corpus, format);
            src.language = language;
            src.target_path = target;
            let loaded = src.load()?;
            let mut errors = 0;
            let mut warnings = loaded.warnings.len();
            for w in &loaded.warnings {
                eprintln!("line {}: warning: {}", w.line, w.message);
            }
            for (i, entry) in loaded.corpus.entries.iter().enumerate() {
                let report = validate_entry(entry);
                for f in &report.findings {
                    eprintln!("entry {i}: {:?} {}: {}", f.severity, f.code, f.message);
                }
                errors += report.errors();
                warnings += report.warnings();
            }
            println!("{} entries, {errors} errors, {warnings} warnings", loaded.corpus.len());
            if errors > 0 {
                return Err(Failure::Run(format!("{errors} invalid entries")));
            }
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            let outcome = run_experiment(&cfg, transport_for(cfg.backend));
            let result = match outcome {
                Ok(r) => r,
                Err(RunError::TooManyFailures {
                    failed,
                    total,
                    first_error,
                    result,
                }) => {
                    write_run(&result, &cfg.output_dir)?;
                    return Err(Failure::Run(format!(
                        "{failed} of {total} entries failed; first error: {first_error}"
                    )));
                }
                Err(e) => return Err(e.into()),
            };
            let (json, _) = write_run(&result, &cfg.output_dir)?;
            eprintln!("wrote {}", json.display());
            print_scores(&result);
        }
        Command::Score {
            hyps,
            refs,
            metric,
            sources,
            scorer_url,
            scorer_api_key_env,
        } => {
            let h = lines(&hyps)?;
            let r = lines(&refs)?;
            same_length((&hyps, &h), (&refs, &r))?;
            let report = match metric {
                MetricName::Bleu => bleu(&h, &r, &BleuConfig::default()).map_err(RunError::from)?,
                MetricName::ChrfPP => chrf_pp(&h, &r, &ChrfConfig::default()).map_err(RunError::from)?,
                MetricName::External => {
                    let url = scorer_url.ok_or_else(|| Failure::Usage("external metric needs --scorer-url".into()))?;
                    let src = match &sources {
                        Some(p) => {
                            let s = lines(p)?;
                            same_length((p, &s), (&refs, &r))?;
                            s
                        }
                        None => vec![String::new(); r.len()],
                    };
                    let ep = EndpointConfig {
                        url,
                        api_key_env: scorer_api_key_env,
                    };
                    external_score(
                        &as_strs(&h),
                        &as_strs(&r),
                        &as_strs(&src),
                        &ep,
                        &UreqTransport::default(),
                    )
                    .map_err(RunError::from)?
                }
                other => {
                    return Err(Failure::Usage(format!(
                        "{} needs gloss files; use it through `run`",
                        other.name()
                    )))
                }
            };
            println!("{:?}", report.corpus_score);
        }
        Command::Ablate { run, ns } => {
            let cfg = run.config()?;
            let ns = ns.unwrap_or_else(|| DEFAULT_NSHOT_GRID.to_vec());
            let results = ablate_nshot(&cfg, &ns, transport_for(cfg.backend))?;
            if results.is_empty() {
                return Ok(());
            }
            let dir = cfg.output_dir.join("nshot");
            for (n, r) in &results {
                write_run(r, &dir.join(format!("n{n}")))?;
            }
            let all: Vec<RunResult> = results.into_iter().map(|(_, r)| r).collect();
            emit_report(&all, ReportFormat::Markdown, &dir)?;
            print!("{}", render_report(&all, ReportFormat::Markdown)?);
        }
        Command::Sigtest {
            hyps_a,
            hyps_b,
            refs,
            metric,
            seed,
            resamples,
            alpha,
        } => {
            let a = lines(&hyps_a)?;
            let b = lines(&hyps_b)?;
            let r = lines(&refs)?;
            same_length((&hyps_a, &a), (&refs, &r))?;
            same_length((&hyps_b, &b), (&refs, &r))?;
            let cfg = BootstrapConfig { resamples, seed, alpha };
            let res = paired_bootstrap(&a, &b, &r, metric, &cfg).map_err(RunError::from)?;
            let row = SignificanceRow {
                metric: metric.name().to_string(),
                score_a: res.score_a,
                score_b: res.score_b,
                p_value: res.p_value,
                significant: res.significant,
            };
            println!("{}", serde_json::to_string(&row).expect("row serializes"));
        }
        Command::Report { inputs, format, out } => {
            let mut results = Vec::new();
            for p in &inputs {
                let r: RunResult = serde_json::from_str(&read_text(p)?)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                results.push(r);
            }
            match out {
                Some(dir) => {
                    let path = emit_report(&results, format, &dir)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{}", render_report(&results, format)?),
            }
        }
        Command::Goldens {
            check,
            fixtures,
            regenerate_cache,
            ..
        } => {
            if check {
                let stale = goldens::check(&fixtures)?;
                for p in &stale {
                    eprintln!("stale: {}", p.display());
                }
                if !stale.is_empty() {
                    return Err(Failure::Run(format!("{} golden files differ", stale.len())));
                }
                eprintln!("goldens up to date");
            } else {
                if regenerate_cache {
                    let calls = goldens::regenerate_cache(&fixtures)?;
                    eprintln!("recorded {calls} completions");
                }
                for p in goldens::bless(&fixtures)? {
                    eprintln!("updated {}", p.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
