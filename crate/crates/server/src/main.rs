use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::Parser;
use marginalia_core::llm::{read_fixtures, OpenAiCompatProvider};
use marginalia_core::prompts::RenderSettings;
use marginalia_core::{MockProvider, Provider, ProviderConfig};
use marginalia_server::{router, AppState, ServerConfig, DEFAULT_MAX_DOCUMENT_BYTES};

/// Serve sessions, prompts and streaming views over HTTP.
///
/// The real provider reads MARGINALIA_API_KEY, MARGINALIA_ENDPOINT and
/// MARGINALIA_MODEL from the environment.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "MARGINALIA_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Use the offline mock provider.
    #[arg(long, env = "MARGINALIA_MOCK")]
    mock: bool,
    /// Fixture file replayed by the mock provider.
    #[arg(long, requires = "mock")]
    fixtures: Option<PathBuf>,
    /// Context budget in characters.
    #[arg(long, env = "MARGINALIA_BUDGET")]
    budget: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_DOCUMENT_BYTES)]
    max_document_bytes: usize,
    #[arg(long, default_value_t = 300)]
    debounce_ms: u64,
    /// Load sessions from this file on start and write them back on shutdown.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

fn provider(args: &Args) -> anyhow::Result<Arc<dyn Provider>> {
    if args.mock {
        let mut mock = MockProvider::new();
        if let Some(path) = &args.fixtures {
            let fixtures = read_fixtures(path).with_context(|| format!("reading {}", path.display()))?;
            mock = mock.fixtures(fixtures);
        }
        if let Some(budget) = args.budget {
            mock = mock.budget(budget);
        }
        return Ok(Arc::new(mock));
    }
    let mut config = ProviderConfig::from_env();
    if let Some(budget) = args.budget {
        config.context_budget_chars = budget;
    }
    Ok(Arc::new(OpenAiCompatProvider::new(config)?))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .init();
    let args = Args::parse();

    let mut settings = RenderSettings::default();
    if let Some(budget) = args.budget {
        settings.context_budget_chars = budget;
    }
    let config = ServerConfig {
        max_document_bytes: args.max_document_bytes,
        debounce: Duration::from_millis(args.debounce_ms),
    };
    let state = AppState::new(provider(&args)?, settings, config);

    if let Some(path) = args.snapshot.as_ref().filter(|p| p.exists()) {
        let n = state.store.load(path).with_context(|| format!("loading {}", path.display()))?;
        tracing::info!(sessions = n, "restored snapshot");
    }

    let listener = tokio::net::TcpListener::bind(args.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, mock = args.mock, "listening");
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;

    if let Some(path) = &args.snapshot {
        state.store.save(path).with_context(|| format!("writing {}", path.display()))?;
        tracing::info!(sessions = state.store.len(), path = %path.display(), "saved snapshot");
    }
    Ok(())
}
