use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(posauction::cli::main(std::env::args_os()))
}
