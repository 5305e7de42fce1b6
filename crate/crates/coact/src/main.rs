use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(coact::cli::run(std::env::args_os()))
}
