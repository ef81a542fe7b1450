use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = mdmsc_cli::Cli::parse();
    match mdmsc_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("mdmsc: {}: {e}", cat.label());
            ExitCode::from(cat.exit_code())
        }
    }
}
