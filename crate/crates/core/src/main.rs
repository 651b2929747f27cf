use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    // unlocked handles: worker threads may log to stderr while a command runs
    let code = blockcov::cli::run(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
