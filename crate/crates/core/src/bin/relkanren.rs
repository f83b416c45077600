use std::io;
use std::process::ExitCode;

use relkanren::cli::{run_cli, MAX_STEPS_ENV};

fn main() -> ExitCode {
    let env_budget = std::env::var(MAX_STEPS_ENV).ok();
    let code = run_cli(
        std::env::args_os(),
        env_budget.as_deref(),
        &mut io::stdin().lock(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
