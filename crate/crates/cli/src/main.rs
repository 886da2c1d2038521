use clap::Parser;

fn main() {
    let cli = qwloc_cli::Cli::parse();
    std::process::exit(qwloc_cli::run(&cli));
}
