use clap::Parser;
use surecov_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(err) = surecov_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
