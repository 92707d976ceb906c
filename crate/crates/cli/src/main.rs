use clap::Parser;

fn main() {
    env_logger::init();
    std::process::exit(s2p_cli::run(s2p_cli::Cli::parse()));
}
