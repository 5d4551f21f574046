//! `bestow-examples list-iterator ...` is shorthand for
//! `bestow examples list-iterator ...`.

use std::ffi::OsString;
use std::io;

fn main() {
    let mut args = std::env::args_os();
    let program = args.next().unwrap_or_else(|| OsString::from("bestow-examples"));
    let argv = [program, OsString::from("examples")].into_iter().chain(args);
    let code = bestow_cli::run_args(argv, &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
