use clap::Parser;
use tweedie_boost_cli::config::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = tweedie_boost_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
