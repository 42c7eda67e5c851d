use std::path::{Path, PathBuf};
use std::process::ExitCode;

use pqlap::cli::{run_command, COMMANDS};
use pqlap::config::RunConfig;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 3 {
        eprintln!("usage: pqlap <{}> <config-file>", COMMANDS.join("|"));
        return ExitCode::from(64);
    }
    let command = args[1].as_str();
    if !COMMANDS.contains(&command) {
        eprintln!("unknown command `{command}`; expected one of {}", COMMANDS.join(", "));
        return ExitCode::from(64);
    }
    let (cfg, raw) = match RunConfig::load(Path::new(&args[2])) {
        Ok(ok) => ok,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(65);
        }
    };
    let out_dir = PathBuf::from(&cfg.output_dir);
    match run_command(command, &cfg, &raw, &out_dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
