use std::process::ExitCode;

fn main() -> ExitCode {
    lyaplab_cli::run()
}
