use std::path::PathBuf;
use std::process::ExitCode;

use cellprobe_server::{serve, App, ServerConfig};

fn usage() -> ExitCode {
    eprintln!("usage: cellprobe-server [--config <file.toml>]");
    ExitCode::from(1)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt().with_target(false).init();

    let mut args = std::env::args().skip(1);
    let mut config_path: Option<PathBuf> = None;
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--config" | "-c" => match args.next() {
                Some(p) => config_path = Some(p.into()),
                None => return usage(),
            },
            "--help" | "-h" => {
                println!("usage: cellprobe-server [--config <file.toml>]");
                println!("environment overrides: CELLPROBE_LISTEN, CELLPROBE_DATA_DIR, CELLPROBE_CATALOG_DIR,");
                println!(
                    "  CELLPROBE_SNAPSHOT_EVERY, CELLPROBE_BASE_POINTS, CELLPROBE_STREAK_STEP, CELLPROBE_STREAK_CAP"
                );
                return ExitCode::SUCCESS;
            }
            _ => return usage(),
        }
    }

    let config = match ServerConfig::load(config_path.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let app = match App::open(config.clone()) {
        Ok(app) => app,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let listener = match tokio::net::TcpListener::bind(&config.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {}: {e}", config.listen);
            return ExitCode::from(2);
        }
    };
    tracing::info!(addr = %config.listen, "listening");
    match serve(app, listener).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
