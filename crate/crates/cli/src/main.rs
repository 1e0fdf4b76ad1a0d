mod args;
mod commands;
mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use transart::Error;

use crate::args::Cli;
use crate::run::Run;

enum Failure {
    Usage(clap::Error),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Parses `argv`, folding in a `--config` file when one is named.
fn parse(argv: Vec<OsString>) -> Result<(Cli, Option<(PathBuf, Vec<u8>)>), Failure> {
    let Some(path) = config::config_path(&argv).map(PathBuf::from) else {
        return Cli::try_parse_from(argv).map(|c| (c, None)).map_err(Failure::Usage);
    };
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::arg(format!("{} is not UTF-8", path.display())))?;
    let entries = config::parse(&text)?;
    let argv = config::merge(argv, &Cli::command(), &entries, &path)?;
    let cli = Cli::try_parse_from(argv).map_err(Failure::Usage)?;
    Ok((cli, Some((path, bytes))))
}

fn execute(cli: Cli, config_file: Option<(PathBuf, Vec<u8>)>) -> Result<(), Error> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::arg("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::arg(format!("cannot start worker pool: {e}")))?;
    }
    let config = serde_json::json!({
        "workers": rayon::current_num_threads(),
        "config_file": config_file.as_ref().map(|(p, _)| p.display().to_string()),
        "args": cli.command.config_json(),
    });
    let mut run = Run::new(cli.command.name(), config);
    if let Some((path, _)) = &config_file {
        run.read(path)?;
    }
    let primary = commands::execute(&cli.command, &mut run)?;
    run.commit(primary.as_deref())
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let outcome = parse(argv).and_then(|(cli, config)| execute(cli, config).map_err(Failure::Run));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Run(e)) => {
            eprintln!("transart: {e}");
            ExitCode::from(if e.is_environmental() { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(args: &[&str]) -> Vec<OsString> {
        std::iter::once("transart").chain(args.iter().copied()).map(OsString::from).collect()
    }

    #[test]
    fn grammar_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn config_fills_flags_but_command_line_wins() {
        let entries = config::parse("max-tokens = 100\nsrc-lang = en\ntgt-lang = fi\nworkers = 2\np0 = 0.1\n").unwrap();
        let merged = config::merge(
            argv(&["filter", "--tsv", "x.tsv", "--max-tokens", "7"]),
            &Cli::command(),
            &entries,
            "c.cfg".as_ref(),
        )
        .unwrap();
        let cli = Cli::try_parse_from(merged).unwrap();
        let args::Command::Filter(f) = cli.command else { panic!() };
        assert_eq!(f.max_tokens, 7);
        assert_eq!(f.src_lang.as_str(), "en");
        assert_eq!(cli.workers, Some(2));

        let unknown = config::parse("max-tokenz = 1\n").unwrap();
        assert!(config::merge(argv(&["filter"]), &Cli::command(), &unknown, "c.cfg".as_ref()).is_err());
    }

    #[test]
    fn config_sets_boolean_flags() {
        let entries = config::parse("fixed-tension = true\n").unwrap();
        let merged = config::merge(
            argv(&["align", "train", "--tsv", "x", "--forward", "m.tsv"]),
            &Cli::command(),
            &entries,
            "c.cfg".as_ref(),
        )
        .unwrap();
        let cli = Cli::try_parse_from(merged).unwrap();
        let args::Command::Align(args::AlignCommand::Train(t)) = cli.command else { panic!() };
        assert!(t.fixed_tension);
    }
}
