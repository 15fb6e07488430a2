use clap::Parser;

fn main() {
    let cli = dlab_cli::Cli::parse();
    if let Err(e) = dlab_cli::init_threads() {
        eprintln!("error: {e:#}");
        std::process::exit(dlab_cli::EXIT_USAGE);
    }
    std::process::exit(dlab_cli::main_with(&cli));
}
