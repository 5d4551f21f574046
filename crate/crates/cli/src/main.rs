use std::io;

fn main() {
    let code = bestow_cli::run_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
