use clap::Parser;

fn main() {
    std::process::exit(rotorpca::cli::run(rotorpca::cli::Cli::parse()));
}
