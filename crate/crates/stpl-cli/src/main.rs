use clap::Parser;

fn main() {
    let cli = stpl_cli::args::Cli::parse();
    std::process::exit(stpl_cli::execute(cli));
}
