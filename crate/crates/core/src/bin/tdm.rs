use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    // Unlocked handles: worker threads may also write to stderr.
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let code = tdm_core::cli::run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    ExitCode::from(code as u8)
}
