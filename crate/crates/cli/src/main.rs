use clap::Parser;

fn main() {
    let cli = densman_cli::Cli::parse();
    let code = densman_cli::run_cli(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
