use std::io;
use std::process::ExitCode;

use vfog::cli::{parse_args, parse_error_code, run};

fn main() -> ExitCode {
    let code = match parse_args(std::env::args_os()) {
        Ok(cli) => run(cli, &mut io::stdout().lock(), &mut io::stderr().lock()),
        Err(e) => {
            let _ = e.print();
            parse_error_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
