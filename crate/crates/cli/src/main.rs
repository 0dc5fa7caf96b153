use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    ExitCode::from(workload_forecast_cli::run_cli(std::env::args_os()) as u8)
}
