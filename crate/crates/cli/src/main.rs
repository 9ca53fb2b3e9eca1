//! `policybench`: extract, segment, classify and score privacy policies.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 when a
//! model provider fails.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use policybench_core::backends::BackendError;
use policybench_core::{Error, SegmentKind};

use commands::{ClassifyArgs, RunArgs, Session};
use config::Config;

#[derive(Debug, Parser)]
#[command(name = "policybench", version, about = "Zero-shot privacy-policy classification benchmark")]
struct Cli {
    /// TOML file with backend profiles and defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Refuse live backends; only the mock backend and cached responses are used.
    #[arg(long, global = true)]
    offline: bool,
    /// Response cache directory.
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract main policy text from HTML files.
    Extract {
        /// An HTML file or a directory of them.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Class/id substrings marking boilerplate (replaces the default list).
        #[arg(long = "deny", value_name = "TERM")]
        deny: Vec<String>,
    },
    /// Split extracted text into sentence or paragraph segments.
    Segment {
        /// A .txt file or a directory of them.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "paragraph", value_parser = parse_mode)]
        mode: SegmentKind,
        /// Keep every list item as its own segment.
        #[arg(long)]
        no_merge_lists: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the instruction prefix, or dump full prompts for a segment file.
    Prompt {
        #[arg(long)]
        taxonomy: String,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        segments: Option<PathBuf>,
        /// Where to write the prompt JSONL (stdout if omitted).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Ask a backend to label every segment.
    Classify {
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        taxonomy: String,
        #[arg(long)]
        template: Option<PathBuf>,
        /// Backend profile name.
        #[arg(long, default_value = "mock")]
        backend: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Score predictions against gold labels.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        taxonomy: String,
        /// flexible-multi or strict-single (default: the taxonomy's).
        #[arg(long)]
        policy: Option<String>,
        /// Leave unparsable answers out of scoring instead of counting them wrong.
        #[arg(long)]
        exclude_unparsable: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render an evaluation report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Published result set to diff against, e.g. gpt4-opp115.
        #[arg(long)]
        compare: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole pipeline on a directory of HTML policies.
    Run {
        #[arg(long)]
        html: PathBuf,
        /// Segment file with gold labels; without it the run stops after classification.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        taxonomy: String,
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, default_value = "mock")]
        backend: String,
        /// Segmentation mode (default: sentence for ppgdpr, paragraph otherwise).
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SegmentKind>,
        #[arg(long)]
        no_merge_lists: bool,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        exclude_unparsable: bool,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        compare: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<SegmentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(error: &anyhow::Error) -> u8 {
    let backend = error.chain().any(|cause| {
        cause.downcast_ref::<BackendError>().is_some_and(BackendError::is_provider_failure)
            || cause.downcast_ref::<Error>().is_some_and(Error::is_backend)
    });
    if backend {
        2
    } else {
        1
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let session = Session::new(config, cli.offline, cli.cache_dir);
    match cli.command {
        Command::Extract { input, out, deny } => commands::cmd_extract(&input, &out, &deny),
        Command::Segment {
            input,
            mode,
            no_merge_lists,
            out,
        } => commands::cmd_segment(&input, mode, !no_merge_lists, &out),
        Command::Prompt {
            taxonomy,
            template,
            segments,
            dump,
        } => commands::cmd_prompt(&taxonomy, template.as_deref(), segments.as_deref(), dump.as_deref()),
        Command::Classify {
            segments,
            taxonomy,
            template,
            backend,
            out,
            manifest,
        } => commands::cmd_classify(
            &session,
            ClassifyArgs {
                segments: &segments,
                taxonomy: &taxonomy,
                template: template.as_deref(),
                backend: &backend,
                out: &out,
                manifest: manifest.as_deref(),
            },
        ),
        Command::Evaluate {
            predictions,
            segments,
            taxonomy,
            policy,
            exclude_unparsable,
            out,
        } => commands::cmd_evaluate(&predictions, &segments, &taxonomy, policy.as_deref(), exclude_unparsable, &out),
        Command::Report {
            input,
            format,
            compare,
            out,
        } => commands::cmd_report(&input, &format, compare.as_deref(), out.as_deref()),
        Command::Run {
            html,
            gold,
            taxonomy,
            template,
            backend,
            mode,
            no_merge_lists,
            policy,
            exclude_unparsable,
            format,
            compare,
            out,
        } => commands::cmd_run(
            &session,
            RunArgs {
                html: &html,
                gold: gold.as_deref(),
                taxonomy: &taxonomy,
                template: template.as_deref(),
                backend: &backend,
                mode,
                merge_lists: !no_merge_lists,
                policy: policy.as_deref(),
                exclude_unparsable,
                format: &format,
                compare: compare.as_deref(),
                out: &out,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
