use clap::Parser;

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = twosys_server::cli::Cli::parse();
    if let Err(e) = twosys_server::cli::run(cli).await {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
