use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;

use evatrap_service::{router, spawn_reaper, AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "evatrap-service", version, about = "Interactive trap session service")]
struct Cli {
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1:8787")]
    bind: SocketAddr,
    /// Directory against which relative field folders are resolved.
    #[arg(long, default_value = ".")]
    base_dir: PathBuf,
    /// Front-end assets served under /ui.
    #[arg(long, default_value = "ui/dist")]
    ui_dir: PathBuf,
    /// Seconds of inactivity after which a session is dropped.
    #[arg(long, default_value_t = 3600)]
    idle_timeout: u64,
    /// Worker threads used for precomputation and updates.
    #[arg(long)]
    threads: Option<usize>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let state = AppState::new(ServiceConfig {
        base_dir: cli.base_dir,
        ui_dir: cli.ui_dir,
        idle_timeout: Duration::from_secs(cli.idle_timeout.max(1)),
        threads: cli.threads,
    });
    spawn_reaper(state.clone());
    let listener = tokio::net::TcpListener::bind(cli.bind).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
