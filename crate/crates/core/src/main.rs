use std::process::ExitCode;

fn main() -> ExitCode {
    irs_relay::cli::main_with_args(std::env::args_os())
}
