use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use robba::pipeline::{run, PipelineDoc, Task};
use robba::selfcheck::selfcheck;

/// Runs a pipeline document and writes its verification report.
#[derive(Parser, Debug)]
#[command(name = "robba", version)]
struct Args {
    /// Task to run, replacing the document's own: factor, reduce, unitroot or verify.
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,

    /// Pipeline document; `-` reads standard input.
    #[arg(long, value_name = "PATH", required_unless_present = "selfcheck")]
    input: Option<PathBuf>,

    /// Report destination; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Seed for generated inputs, replacing `options.seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Run the bundled fixture corpus and smoke suite.
    #[arg(long, conflicts_with_all = ["task", "input", "seed"])]
    selfcheck: bool,
}

fn parse_task(s: &str) -> Result<Task, String> {
    s.parse().map_err(|e: robba::Error| e.to_string())
}

fn read_input(path: &Path) -> io::Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        fs::read_to_string(path)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn execute(args: &Args) -> Result<bool, String> {
    let start = Instant::now();
    let (text, passed) = if args.selfcheck {
        let report = selfcheck();
        (report.to_json(), report.passed())
    } else {
        let path = args.input.as_deref().expect("required unless --selfcheck");
        let source = read_input(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let doc = PipelineDoc::parse_with(&source, args.task, args.seed).map_err(|e| format!("{}: {e}", path.display()))?;
        let report = run(&doc);
        for (name, t) in &report.timings {
            eprintln!("time {name}: {:.3} ms", t.as_secs_f64() * 1e3);
        }
        (report.to_json(), report.passed())
    };
    write_output(args.out.as_deref(), &text).map_err(|e| format!("writing report: {e}"))?;
    eprintln!("time total: {:.3} ms", start.elapsed().as_secs_f64() * 1e3);
    eprintln!("status: {}", if passed { "pass" } else { "fail" });
    Ok(passed)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("robba: {e}");
            ExitCode::FAILURE
        }
    }
}
