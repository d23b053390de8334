use std::process::ExitCode;

fn main() -> ExitCode {
    resdac::cli::main()
}
