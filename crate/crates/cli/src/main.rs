use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use summlab_cli::{run, Config, KINDS};

#[derive(Parser, Debug)]
#[command(name = "summlab", version, about = "Run a summability-lab experiment")]
struct Args {
    /// Experiment kind.
    kind: String,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration entry; may be repeated, later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("summlab: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let result = Config::parse(&args.kind, args.seed, &text, &args.set).and_then(|cfg| run(&cfg, &args.out, args.threads));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("summlab: {e}");
            if e.exit_code() == 2 && !KINDS.contains(&args.kind.as_str()) {
                eprintln!("kinds: {}", KINDS.join(", "));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
