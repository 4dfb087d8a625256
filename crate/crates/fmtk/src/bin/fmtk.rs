use clap::Parser;

fn main() {
    let cli = fmtk::cli::Cli::parse();
    std::process::exit(fmtk::cli::run(cli));
}
