use std::process::ExitCode;

fn main() -> ExitCode {
    hsdisp::cli::main_with_args(std::env::args_os())
}
