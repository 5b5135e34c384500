use std::process::ExitCode;

fn main() -> ExitCode {
    expprec::cli::main_with_args(std::env::args_os())
}
