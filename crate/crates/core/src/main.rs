use clap::Parser;

fn main() {
    let cli = moment_lab::cli::Cli::parse();
    std::process::exit(moment_lab::cli::run(cli));
}
