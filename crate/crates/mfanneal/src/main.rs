use std::process::ExitCode;

fn main() -> ExitCode {
    mfanneal::cli::main_entry()
}
