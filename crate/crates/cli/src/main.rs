use clap::Parser;

fn main() {
    let cli = lwcnn_cli::Cli::parse();
    if let Err(e) = lwcnn_cli::commands::run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
