use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mupuppet::corpus::{run_corpus, Summary, Verdict};
use mupuppet::json::facts_from_str;
use mupuppet::trace::TraceWriter;
use mupuppet::Job;
use mupuppet_core::{Limits, Settings};

const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "mupuppet", version, about = "Compile Puppet manifests to catalogs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Pretty,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a manifest for one node.
    Compile {
        manifest: PathBuf,
        #[arg(long)]
        node: String,
        /// JSON object of facts, bound as top-scope variables.
        #[arg(long)]
        facts: Option<PathBuf>,
        /// Write the catalog here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one JSON record per evaluation step here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = Limits::default().max_steps)]
        max_steps: u64,
        /// Do not detect inheritance cycles; let them run into the step limit.
        #[arg(long)]
        paper_divergence: bool,
        /// Comma-separated built-in resource types, replacing the default set.
        #[arg(long, value_delimiter = ',')]
        builtin_types: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run a directory of conformance cases.
    Test {
        dir: PathBuf,
        /// Also list passing cases.
        #[arg(long, short)]
        verbose: bool,
    },
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}: {e}", path.display());
    ExitCode::from(EXIT_IO)
}

fn compile(
    manifest: &Path,
    node: &str,
    facts: Option<&Path>,
    out: Option<&Path>,
    trace: Option<&Path>,
    settings: Settings,
    format: Format,
) -> ExitCode {
    let source = match fs::read_to_string(manifest) {
        Ok(s) => s,
        Err(e) => return io_error(manifest, e),
    };
    let facts = match facts {
        Some(path) => match fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|s| {
            facts_from_str(&s).map_err(|e| e.to_string())
        }) {
            Ok(f) => f,
            Err(e) => return io_error(path, e),
        },
        None => Vec::new(),
    };
    let job = Job {
        source: &source,
        node,
        facts: &facts,
        settings: &settings,
    };
    let result = match trace {
        Some(path) => {
            let file = match File::create(path) {
                Ok(f) => f,
                Err(e) => return io_error(path, e),
            };
            let mut writer = TraceWriter::new(BufWriter::new(file));
            let mut failed: Option<io::Error> = None;
            let result = job.run_observed(|r, cfg| {
                if failed.is_none() {
                    failed = writer.record(r, cfg).err();
                }
            });
            if let Some(e) = failed.or_else(|| writer.finish().err()) {
                return io_error(path, e);
            }
            result
        }
        None => job.run(),
    };
    let doc = match result {
        Ok(doc) => doc,
        Err(failure) => {
            eprintln!("{}", failure.diagnostic(&manifest.display().to_string()));
            return ExitCode::from(failure.exit_code() as u8);
        }
    };
    let text = match format {
        Format::Json => doc.to_json_string(),
        Format::Pretty => doc.to_pretty_string(),
    };
    let written = match out {
        Some(path) => fs::write(path, &text).map_err(|e| (path.to_path_buf(), e)),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| (PathBuf::from("<stdout>"), e)),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err((path, e)) => io_error(&path, e),
    }
}

fn test(dir: &Path, verbose: bool) -> ExitCode {
    let reports = match run_corpus(dir, &Settings::default()) {
        Ok(r) => r,
        Err(e) => return io_error(dir, e),
    };
    for r in &reports {
        match &r.verdict {
            Verdict::Pass if verbose => println!("PASS  {}", r.name),
            Verdict::Pass => {}
            Verdict::Fail(why) => println!("FAIL  {}: {why}", r.name),
            Verdict::HarnessError(why) => println!("ERROR {}: {why}", r.name),
        }
    }
    let s = Summary::of(&reports);
    println!(
        "{} passed, {} failed, {} malformed ({} cases)",
        s.passed,
        s.failed,
        s.harness_errors,
        reports.len()
    );
    if s.all_passed() {
        ExitCode::SUCCESS
    } else if s.failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::from(EXIT_IO)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match cli.command {
        Command::Compile {
            manifest,
            node,
            facts,
            out,
            trace,
            max_steps,
            paper_divergence,
            builtin_types,
            format,
        } => {
            let mut settings = Settings {
                detect_cycles: !paper_divergence,
                limits: Limits {
                    max_steps,
                    ..Limits::default()
                },
                ..Settings::default()
            };
            if let Some(types) = builtin_types {
                settings.builtin_types = types.into_iter().map(|t| t.trim().to_string()).collect();
            }
            compile(
                &manifest,
                &node,
                facts.as_deref(),
                out.as_deref(),
                trace.as_deref(),
                settings,
                format,
            )
        }
        Command::Test { dir, verbose } => test(&dir, verbose),
    }
}
