use clap::Parser;

fn main() {
    let cli = fluidq::cli::Cli::parse();
    std::process::exit(fluidq::cli::run(cli));
}
