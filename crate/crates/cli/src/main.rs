use std::io::{IsTerminal, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let level = match dacex_cli::log_level(std::env::var("DACEX_LOG").ok().as_deref()) {
        Ok(l) => l,
        Err(msg) => {
            eprintln!("dacex: {msg}");
            return ExitCode::from(dacex_cli::EXIT_USAGE as u8);
        }
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr());
    let code = dacex_cli::run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    ExitCode::from(code as u8)
}
