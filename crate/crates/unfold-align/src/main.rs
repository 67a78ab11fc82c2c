use clap::Parser;
use unfold_align::cli;

fn main() {
    let code = cli::run(cli::Cli::parse());
    std::process::exit(code);
}
