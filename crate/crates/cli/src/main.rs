use std::ffi::OsString;

fn main() {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let env_seed = std::env::var(eqboost_cli::config::SEED_ENV).ok();
    let code = eqboost_cli::run(
        &argv,
        env_seed.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
