//! Command-line front end for the fractal-pressure estimators.
//!
//! The binary is a thin shell over [`entry`]; tests drive the same function
//! in-process and the subprocess path through the compiled binary.

pub mod args;
pub mod report;
pub mod run;
pub mod svg;
pub mod sweep;
pub mod system;

use std::ffi::OsString;

/// Full CLI lifecycle for one argv (program name excluded): parse, maybe
/// explain, run, and return the process exit code.
pub fn entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    use clap::Parser;

    let mut argv: Vec<OsString> = vec!["fractal-pressure".into()];
    argv.extend(args.into_iter().map(Into::into));
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let (cfg, explain) = match args::from_cli(&cli) {
        Ok(pair) => pair,
        Err(err) => {
            eprintln!("error: {err}");
            return 2;
        }
    };
    if explain {
        println!("{}", cfg.to_args().join(" "));
        return 0;
    }
    run::execute(&cfg)
}
