use std::process::ExitCode;

use corrwork::{parse_config, run_experiment, write_csv, CliError};

fn run() -> corrwork::Result<()> {
    let cfg = parse_config(std::env::args_os().skip(1), None)?;
    log::info!("running {} with {:?}", cfg.experiment, cfg);
    let ds = run_experiment(&cfg)?;
    write_csv(&ds, &cfg.output_path)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Info(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("corrwork: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
