use std::process::ExitCode;

fn main() -> ExitCode {
    hexcross_cli::run(std::env::args_os(), &mut std::io::stdout().lock())
}
