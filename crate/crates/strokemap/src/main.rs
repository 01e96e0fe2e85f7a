use std::process::ExitCode;

fn main() -> ExitCode {
    match std::panic::catch_unwind(|| strokemap::cli::run(std::env::args_os())) {
        Ok(code) => ExitCode::from(code),
        Err(_) => {
            eprintln!("unexpected internal error");
            ExitCode::from(1)
        }
    }
}
