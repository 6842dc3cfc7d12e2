use std::io::Read;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use marginalia_core::llm::{
    read_fixtures, write_fixtures, ConfigError, FixtureError, OpenAiCompatProvider, RecordingProvider,
};
use marginalia_core::prompts::{builtin_prompts, ExportedPrompt, PromptError, PromptSet, RenderSettings};
use marginalia_core::{Document, MockProvider, Provider, ProviderConfig, ViewEngine};

use crate::report::{build_report, resolve_prompts, Report, UnknownPrompt};

/// Run revision prompts over every paragraph of a plain-text document.
///
/// The real provider reads MARGINALIA_API_KEY, MARGINALIA_ENDPOINT and
/// MARGINALIA_MODEL from the environment.
#[derive(Debug, Parser)]
#[command(name = "marginalia", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a report of views for every paragraph × prompt.
    Report {
        #[command(flatten)]
        common: Common,
        /// Use the offline mock provider.
        #[arg(long)]
        mock: bool,
        /// Fixture file replayed by the mock provider.
        #[arg(long, requires = "mock")]
        fixtures: Option<PathBuf>,
    },
    /// Run against the real provider and save its responses as fixtures.
    Record {
        #[command(flatten)]
        common: Common,
        /// Where to write the fixture file.
        #[arg(long)]
        fixtures: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Plain-text document, or `-` for stdin.
    pub file: String,
    /// Comma-separated prompt ids. Defaults to every prompt in the set.
    #[arg(long, value_delimiter = ',')]
    pub prompts: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Context budget in characters.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Exported prompt set to use instead of the builtin prompts.
    #[arg(long)]
    pub prompt_set: Option<PathBuf>,
    /// Paragraphs generated concurrently with the real provider.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Markdown,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    UnknownPrompt(#[from] UnknownPrompt),
    #[error("reading {path}: {source}")]
    Input { path: String, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("prompt set {path}: {message}")]
    PromptSet { path: String, message: String },
    #[error("provider configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fixtures(#[from] FixtureError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

pub struct Outcome {
    pub report: Report,
    pub rendered: String,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.has_errors() {
            1
        } else {
            0
        }
    }
}

fn read_input(file: &str) -> Result<String, CliError> {
    let io_err = |source| CliError::Input {
        path: file.to_string(),
        source,
    };
    if file == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(io_err)?;
        Ok(text)
    } else {
        std::fs::read_to_string(file).map_err(io_err)
    }
}

fn prompt_set(path: Option<&PathBuf>) -> Result<PromptSet, CliError> {
    let Some(path) = path else {
        return Ok(builtin_prompts());
    };
    let err = |message: String| CliError::PromptSet {
        path: path.display().to_string(),
        message,
    };
    let bytes = std::fs::read(path).map_err(|e| err(e.to_string()))?;
    let entries: Vec<ExportedPrompt> = serde_json::from_slice(&bytes).map_err(|e| err(e.to_string()))?;
    PromptSet::import(entries).map_err(|e: PromptError| err(e.to_string()))
}

fn budget(common: &Common) -> usize {
    common
        .budget
        .unwrap_or_else(|| ProviderConfig::default().context_budget_chars)
}

enum Mode {
    Mock(Option<PathBuf>),
    Real,
    Record(PathBuf),
}

/// Executes a parsed command and returns the rendered report. Nothing is
/// written to stdout; the caller decides where output goes.
pub async fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (common, mode) = match cli.command {
        Command::Report { common, mock: true, fixtures } => (common, Mode::Mock(fixtures)),
        Command::Report { common, .. } => (common, Mode::Real),
        Command::Record { common, fixtures } => (common, Mode::Record(fixtures)),
    };

    let set = prompt_set(common.prompt_set.as_ref())?;
    let ids: Vec<String> = if common.prompts.is_empty() {
        set.list().iter().map(|t| t.id.clone()).collect()
    } else {
        common.prompts.clone()
    };
    let templates = resolve_prompts(&set, &ids)?;
    let text = read_input(&common.file)?;

    let mut recorder = None;
    let (provider, parallelism): (Arc<dyn Provider>, usize) = match &mode {
        Mode::Mock(fixtures) => {
            let mut mock = MockProvider::new().budget(budget(&common));
            if let Some(path) = fixtures {
                mock = mock.fixtures(read_fixtures(path)?);
            }
            (Arc::new(mock), 1)
        }
        Mode::Real => (real_provider(&common)?, common.jobs),
        Mode::Record(_) => {
            let r = Arc::new(RecordingProvider::new(real_provider(&common)?));
            recorder = Some(r.clone());
            (r, common.jobs)
        }
    };

    let settings = RenderSettings {
        context_budget_chars: budget(&common),
        ..RenderSettings::default()
    };
    let engine = ViewEngine::new(provider, settings);
    let doc = Document::new(common.file.clone(), text);
    let report = build_report(&engine, &doc, &templates, parallelism).await;

    if let (Some(recorder), Mode::Record(path)) = (recorder, &mode) {
        write_fixtures(path, &recorder.fixtures())?;
    }
    let rendered = match common.format {
        Format::Json => report.to_json(),
        Format::Markdown => report.to_markdown(),
    };
    if let Some(path) = &common.output {
        std::fs::write(path, &rendered).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(Outcome { report, rendered })
}

fn real_provider(common: &Common) -> Result<Arc<OpenAiCompatProvider>, CliError> {
    let mut config = ProviderConfig::from_env();
    config.context_budget_chars = budget(common);
    Ok(Arc::new(OpenAiCompatProvider::new(config)?))
}
