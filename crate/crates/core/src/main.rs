use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = hardy_bell::cli::Cli::parse();
    std::process::exit(hardy_bell::cli::run(cli));
}
