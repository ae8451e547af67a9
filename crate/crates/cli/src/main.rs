use std::process::ExitCode;

fn main() -> ExitCode {
    ramdp_cli::run_cli(std::env::args_os())
}
