use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(harmorph::cli::run(std::env::args_os()))
}
