//! Argument definitions and dispatch.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use afortiori::annotation::AnnotationService;
use afortiori::augment::AugmentationStrategy;
use afortiori::clock::SystemClock;
use afortiori::corpus::SamplingParams;
use clap::{Args, Parser, Subcommand};

use crate::artifact::usage_err;
use crate::commands::{self, AugmentArgs, CampaignArgs};
use crate::config::{ProviderKind, RunConfig, RunTask};
use crate::error::{fail, Classify, ExitKind};
use crate::{eval, server};

/// Shared secret for new campaigns; never taken from a flag.
pub const TOKEN_ENV: &str = "AFORTIORI_CAMPAIGN_TOKEN";

#[derive(Debug, Parser)]
#[command(name = "afortiori", version, about = "Interpret, augment and evaluate \"let alone\" arguments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a delimited corpus into canonical JSON lines.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to the input path with a `.jsonl` extension.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the sentence type by logic category grid.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Draw the stratified evaluation set.
    SampleEvalset {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 5)]
        per_combo: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the interpretation or identification pipeline over a corpus.
    Run(RunArgs),
    /// Generate new arguments from the AF analyses of a run.
    Augment(AugmentCmd),
    /// Score predictions or human judgments.
    Eval {
        #[command(subcommand)]
        metric: EvalCmd,
    },
    /// Serve the annotation API and UI.
    Serve {
        /// Directory holding `<id>.campaign.json` files and their stores.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Built annotator UI to serve at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Print stored evaluation reports.
    Report {
        #[arg(long = "eval", required = true)]
        evals: Vec<PathBuf>,
        /// Refuse reports that did not score this run.
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Manage annotation campaigns.
    Campaign {
        #[command(subcommand)]
        action: CampaignCmd,
    },
}

/// Provider flags shared by `run` and `augment`; they override the config file.
#[derive(Debug, Args)]
pub struct Overrides {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub provider: Option<ProviderKind>,
    /// Mock script (JSON).
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub model: Option<String>,
    /// Prompt asset directory.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.provider {
            cfg.provider.kind = v;
        }
        if let Some(v) = &self.script {
            cfg.provider.script = Some(v.clone());
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = Some(v.clone());
        }
        if let Some(v) = self.concurrency {
            cfg.concurrency = v;
        }
        if let Some(v) = self.temperature {
            cfg.params.temperature = v;
        }
        if let Some(v) = &self.model {
            cfg.params.model_name = v.clone();
        }
        if let Some(v) = &self.prompts {
            cfg.prompts = Some(v.clone());
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Overrides,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// with-info or without-info.
    #[arg(long)]
    pub regime: Option<String>,
    /// gated or forced.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_enum)]
    pub task: Option<RunTask>,
    /// Identification without demonstrations.
    #[arg(long)]
    pub no_examples: bool,
    /// Run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentCmd {
    #[command(flatten)]
    pub common: Overrides,
    /// Interpretation run directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Corpus of the run; defaults to the path recorded in its manifest.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// similar-semantic or novel.
    #[arg(long)]
    pub strategy: String,
    /// Maximum number of generations.
    #[arg(long)]
    pub quota: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the original records plus the new ones here.
    #[arg(long)]
    pub merged: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// AF / NAF identification metrics.
    Identify(EvalArgs),
    /// Correlate and remnant similarity.
    Spans {
        #[command(flatten)]
        args: EvalArgs,
        /// hashed or openai.
        #[arg(long, default_value = "hashed")]
        embedder: String,
    },
    /// Per-class sentence type and logic category metrics.
    Classes(EvalArgs),
    /// Predicted property vocabulary.
    Properties {
        #[command(flatten)]
        args: EvalArgs,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Grammar errors in generated text.
    Grammar {
        /// Results or augmented JSON-lines files.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long = "label")]
        labels: Vec<String>,
        /// Field holding the text.
        #[arg(long, default_value = "text")]
        field: String,
        /// LanguageTool server; the check is skipped when unset.
        #[arg(long, env = "LANGUAGETOOL_URL")]
        languagetool: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Human judgment aggregates for one or two campaigns.
    Judgments {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long = "campaign", required = true)]
        campaigns: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold corpus.
    #[arg(long)]
    pub gold: PathBuf,
    /// Run directory or results file; repeat for several columns.
    #[arg(long = "pred", required = true)]
    pub preds: Vec<PathBuf>,
    /// Column label per prediction, in order.
    #[arg(long = "label")]
    pub labels: Vec<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CampaignCmd {
    /// Build a campaign from an evaluation set and an interpretation run.
    Create {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        evalset: PathBuf,
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Annotator ids, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        annotators: Vec<String>,
    },
}

fn run_config(a: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = a.common.apply()?;
    if let Some(v) = &a.corpus {
        cfg.corpus = Some(v.clone());
    }
    if let Some(v) = &a.regime {
        cfg.regime = v.clone();
    }
    if let Some(v) = &a.mode {
        cfg.mode = v.clone();
    }
    if let Some(v) = a.task {
        cfg.task = v;
    }
    if a.no_examples {
        cfg.with_examples = false;
    }
    if let Some(v) = &a.output {
        cfg.output_dir = Some(v.clone());
    }
    Ok(cfg)
}

/// Runs one command and returns what it prints on success.
pub fn execute(cli: Cli) -> anyhow::Result<String> {
    match cli.command {
        Command::Ingest { input, output } => commands::ingest(&input, output),
        Command::Stats { corpus, json } => commands::stats(&corpus, json),
        Command::SampleEvalset {
            corpus,
            seed,
            per_class,
            per_combo,
            output,
        } => commands::sample_evalset(
            &corpus,
            seed,
            SamplingParams {
                per_class_quota: per_class,
                per_combo_target: per_combo,
            },
            &output,
        ),
        Command::Run(a) => commands::run(&run_config(&a)?),
        Command::Augment(a) => {
            let mut config = a.common.apply()?;
            if let Some(q) = a.quota {
                config.quota.max_generations = q;
            }
            if config.concurrency == 0 {
                return Err(usage_err("concurrency must be at least 1"));
            }
            config.params.validate().usage()?;
            let strategy: AugmentationStrategy = a.strategy.parse().usage()?;
            commands::augment(&AugmentArgs {
                run: a.run,
                corpus: a.corpus,
                strategy,
                output: a.output,
                merged: a.merged,
                config,
            })
        }
        Command::Eval { metric } => {
            let (report, output) = match metric {
                EvalCmd::Identify(a) => (eval::identify(&a.gold, &a.preds, &a.labels)?, a.output),
                EvalCmd::Spans { args: a, embedder } => {
                    (eval::spans(&a.gold, &a.preds, &a.labels, &embedder)?, a.output)
                }
                EvalCmd::Classes(a) => (eval::classes(&a.gold, &a.preds, &a.labels)?, a.output),
                EvalCmd::Properties { args: a, top_k } => {
                    (eval::properties(&a.gold, &a.preds, &a.labels, top_k)?, a.output)
                }
                EvalCmd::Grammar {
                    inputs,
                    labels,
                    field,
                    languagetool,
                    output,
                } => (eval::grammar(&inputs, &labels, &field, languagetool.as_deref())?, output),
                EvalCmd::Judgments { dir, campaigns, output } => (eval::judgments(&dir, &campaigns)?, output),
            };
            eval::emit(&report, output.as_deref())
        }
        Command::Serve { dir, addr, static_dir } => {
            let svc = AnnotationService::load_dir(&dir, Arc::new(SystemClock)).data()?;
            log::info!("{} campaigns loaded from {}", svc.campaign_ids().len(), dir.display());
            let app = server::router(Arc::new(svc), static_dir);
            let rt = tokio::runtime::Runtime::new().data()?;
            rt.block_on(server::serve(app, addr))
                .map_err(|e| fail(ExitKind::Data, format!("{addr}: {e}")))?;
            Ok(String::new())
        }
        Command::Report { evals, run } => eval::print_reports(&evals, run.as_deref()),
        Command::Campaign {
            action:
                CampaignCmd::Create {
                    dir,
                    id,
                    evalset,
                    run,
                    corpus,
                    annotators,
                },
        } => commands::campaign_create(&CampaignArgs {
            dir,
            id,
            evalset,
            run,
            corpus,
            roster: annotators,
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
        }),
    }
}
