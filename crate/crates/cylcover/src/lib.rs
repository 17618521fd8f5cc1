//! Std side of the cylinder cover toolkit: configuration, a rayon
//! [`Executor`](cylcover_core::Executor), CSV/JSON formats and the
//! `cylcover` command-line driver.

pub mod config;
mod error;
pub mod exec;
pub mod io;
pub mod run;

pub use config::{parse_config, Config};
pub use error::CliError;
pub use exec::RayonExecutor;
pub use run::{execute, RunOutput};

/// Parses, runs and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let result = parse_config(args).and_then(|cfg| execute(&cfg));
    match result {
        Ok(out) => {
            println!("{}", out.stdout);
            match out.failure {
                Some(msg) => {
                    let e = CliError::Verification(msg);
                    eprintln!("{e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(CliError::Help(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
