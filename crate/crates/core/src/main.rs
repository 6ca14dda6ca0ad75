use clap::Parser;

fn main() {
    let cli = ndfwm::cli::Cli::parse();
    std::process::exit(ndfwm::cli::run(&cli));
}
