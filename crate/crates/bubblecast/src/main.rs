use std::process::ExitCode;

fn main() -> ExitCode {
    bubblecast::cli::main()
}
