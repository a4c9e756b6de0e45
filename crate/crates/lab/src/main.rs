use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dyadic_lab::cli::main_with(
        std::env::args_os(),
        &mut std::io::stdout(),
    ))
}
