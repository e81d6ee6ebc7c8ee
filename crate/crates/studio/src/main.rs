use clap::Parser;

fn main() {
    let cli = chartquiz_studio::cli::Cli::parse();
    if let Err(e) = chartquiz_studio::cli::run(cli) {
        eprintln!("error [{}]: {e}", e.code());
        std::process::exit(1);
    }
}
