use clap::Parser;

fn main() {
    let cli = spindisk::cli::Cli::parse();
    if let Err(e) = spindisk::cli::run(cli) {
        eprintln!("{}", e.line());
        std::process::exit(2);
    }
}
