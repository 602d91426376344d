use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use upn_core::codegen::Strategy;
use upn_core::compression::{compress_with, CompressOrder};
use upn_core::harness::{golden_diff, sweep, GoldenDiff, SweepReport};
use upn_core::machines::{u22, u22_as_listed, u7, Program};
use upn_core::petri::{
    export_incidence, load_net, save_net, Delimiter, Net, NetDocument, RunStatus,
    DEFAULT_STEP_LIMIT,
};

#[derive(Parser)]
#[command(
    name = "upn",
    version,
    about = "Compile register machines to Petri nets with inhibitor arcs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Csv,
}

impl From<Format> for Delimiter {
    fn from(f: Format) -> Delimiter {
        match f {
            Format::Tsv => Delimiter::Tab,
            Format::Csv => Delimiter::Comma,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile a machine and write its incidence table and sidecar.
    Build {
        /// u22, u22-listed, u7, or a program file. Defaults to the
        /// strategy's reference machine.
        #[arg(long)]
        machine: Option<String>,
        #[arg(long)]
        strategy: Strategy,
        /// Drop states unreachable from the initial state first.
        #[arg(long)]
        prune_unreachable: bool,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a net on the given inputs until it deadlocks.
    Run {
        net: PathBuf,
        /// Comma-separated tokens for the input places.
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<u64>,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        limit: u64,
        /// Print every fired transition.
        #[arg(long)]
        trace: bool,
    },
    /// Print places, transitions, inhibitor arcs and maximal degree.
    Metrics { net: PathBuf },
    /// Write a net (table or JSON document) as an incidence table.
    Export {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read an incidence table (and its sidecar) into a JSON document.
    Import {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove compressible states from a machine's flow graph.
    Compress {
        #[arg(long)]
        machine: String,
        /// Print one line per attempted merge.
        #[arg(long)]
        log: bool,
        /// fewest-exits, ascending, or seed:N
        #[arg(long, default_value = "fewest-exits", value_parser = parse_order)]
        order: CompressOrder,
        /// Write the compressed flow graph here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Co-simulate compiled nets against their machines on an input grid.
    Verify {
        /// A strategy name or `all`.
        #[arg(long, default_value = "all")]
        strategy: String,
        /// Compile every strategy from this machine instead of the
        /// reference machines.
        #[arg(long)]
        machine: Option<String>,
        /// `K` or `AxB`: inputs (a, b) with a < A and b < B.
        #[arg(long, default_value = "6x6", value_parser = parse_grid)]
        grid: (u64, u64),
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
        /// Directory holding n1, n2 and n3 tables to diff against.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Human-readable summary instead of JSON.
        #[arg(long)]
        pretty: bool,
    },
}

fn parse_order(s: &str) -> Result<CompressOrder, String> {
    match s {
        "fewest-exits" => Ok(CompressOrder::FewestExits),
        "ascending" => Ok(CompressOrder::Ascending),
        _ => s
            .strip_prefix("seed:")
            .and_then(|n| n.parse().ok())
            .map(CompressOrder::Seeded)
            .ok_or_else(|| format!("expected fewest-exits, ascending or seed:N, got `{s}`")),
    }
}

fn parse_grid(s: &str) -> Result<(u64, u64), String> {
    let bad = || format!("expected K or AxB, got `{s}`");
    match s.split_once('x') {
        Some((a, b)) => Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?)),
        None => s.parse().map(|k| (k, k)).map_err(|_| bad()),
    }
}

fn load_program(name: &str) -> Result<Program> {
    Ok(match name {
        "u22" => Program::Register(u22()),
        "u22-listed" => Program::Register(u22_as_listed()),
        "u7" => Program::Flow(u7()),
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            Program::parse(&text).with_context(|| format!("parsing {path}"))?
        }
    })
}

fn read_net(path: &Path) -> Result<Net> {
    load_net(path).with_context(|| format!("loading {}", path.display()))
}

fn emit(buf: &mut String, text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            buf.push_str(text);
            Ok(())
        }
    }
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Deadlock => "deadlock",
        RunStatus::StepLimitExceeded => "step-limit",
        RunStatus::NondeterminismDetected => "nondeterministic",
    }
}

fn build(
    buf: &mut String,
    machine: Option<&str>,
    strategy: Strategy,
    prune: bool,
    format: Format,
    out: &Path,
) -> Result<()> {
    let mut program = match machine {
        Some(m) => load_program(m)?,
        None => strategy.reference_program(),
    };
    if prune {
        match &program {
            Program::Register(m) => program = Program::Register(m.prune_unreachable()),
            Program::Flow(_) => bail!("--prune-unreachable applies to register machines only"),
        }
    }
    let compiled = strategy.compile(&program)?;
    save_net(&compiled.net, out, format.into())?;
    writeln!(buf, "{}", compiled.net.metrics())?;
    Ok(())
}

fn run(buf: &mut String, path: &Path, inputs: &[u64], limit: u64, trace: bool) -> Result<()> {
    let net = read_net(path)?;
    let m0 = net.input_marking(inputs)?;
    let r = net.run_to_deadlock(&m0, limit, trace);
    if let Some(fired) = &r.trace {
        for t in fired {
            writeln!(buf, "{}", net.transitions()[t.index()].name())?;
        }
    }
    let output = net
        .output_place()
        .map_or("none".to_string(), |p| r.final_marking.get(p).to_string());
    writeln!(
        buf,
        "output={output} status={} steps={}",
        status_name(r.status),
        r.steps
    )?;
    writeln!(buf, "marking={}", net.format_marking(&r.final_marking))?;
    Ok(())
}

fn compress(
    buf: &mut String,
    machine: &str,
    log: bool,
    order: CompressOrder,
    out: Option<&Path>,
) -> Result<()> {
    let g = load_program(machine)?.to_flowgraph();
    let c = compress_with(&g, order);
    writeln!(
        buf,
        "states {} -> {}",
        g.state_count(),
        c.graph.state_count()
    )?;
    writeln!(buf, "arcs {} -> {}", g.arcs().len(), c.graph.arcs().len())?;
    writeln!(buf, "removed {}", c.removed.join(" "))?;
    if log {
        for r in &c.log {
            writeln!(buf, "{r}")?;
        }
    }
    if let Some(p) = out {
        emit(buf, &c.graph.to_string(), Some(p))?;
    }
    Ok(())
}

/// Golden table name for the strategies that have one.
fn golden_name(s: Strategy) -> Option<&'static str> {
    match s {
        Strategy::Direct => Some("n1"),
        Strategy::Compressed => Some("n2"),
        Strategy::Binary => Some("n3"),
        _ => None,
    }
}

fn find_golden(dir: &Path, name: &str) -> Option<PathBuf> {
    ["tsv", "csv", "json"]
        .iter()
        .map(|ext| dir.join(format!("{name}.{ext}")))
        .find(|p| p.exists())
}

fn verify(
    buf: &mut String,
    strategy: &str,
    machine: Option<&str>,
    (a, b): (u64, u64),
    limit: u64,
    golden: Option<&Path>,
    pretty: bool,
) -> Result<bool> {
    let strategies: Vec<Strategy> = match strategy {
        "all" => Strategy::ALL.to_vec(),
        s => vec![s.parse()?],
    };
    let program = machine.map(load_program).transpose()?;
    let inputs: Vec<Vec<u64>> = (0..a)
        .flat_map(|x| (0..b).map(move |y| vec![x, y]))
        .collect();
    let report = sweep(&strategies, program.as_ref(), &inputs, limit)?;
    let mut diffs: Vec<(Strategy, String, GoldenDiff)> = Vec::new();
    if let Some(dir) = golden {
        for &s in &strategies {
            let Some(name) = golden_name(s) else { continue };
            let Some(path) = find_golden(dir, name) else {
                continue;
            };
            let net = match &program {
                Some(p) => s.compile(p)?.net,
                None => s.reference().net,
            };
            diffs.push((s, name.to_string(), golden_diff(&net, &read_net(&path)?)));
        }
    }
    let ok = report.all_passed() && diffs.iter().all(|(_, _, d)| d.is_empty());
    if pretty {
        buf.push_str(&pretty_report(&report, &diffs));
    } else {
        let golden: Vec<serde_json::Value> = diffs
            .iter()
            .map(|(s, name, d)| serde_json::json!({ "strategy": s, "golden": name, "diff": d }))
            .collect();
        let doc = serde_json::json!({ "passed": ok, "report": report, "golden": golden });
        writeln!(buf, "{}", serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(ok)
}

fn pretty_report(report: &SweepReport, diffs: &[(Strategy, String, GoldenDiff)]) -> String {
    let mut out = report.summary();
    for (s, name, d) in diffs {
        let _ = writeln!(out, "golden {name} vs {s}:");
        for line in d.to_string().lines() {
            let _ = writeln!(out, "  {line}");
        }
    }
    out
}

/// Runs one command, collecting its standard output. Returns false when
/// `verify` finds a failure.
fn dispatch(command: Command, buf: &mut String) -> Result<bool> {
    match command {
        Command::Build {
            machine,
            strategy,
            prune_unreachable,
            format,
            out,
        } => build(
            buf,
            machine.as_deref(),
            strategy,
            prune_unreachable,
            format,
            &out,
        )?,
        Command::Run {
            net,
            inputs,
            limit,
            trace,
        } => run(buf, &net, &inputs, limit, trace)?,
        Command::Metrics { net } => writeln!(buf, "{}", read_net(&net)?.metrics())?,
        Command::Export { file, format, out } => {
            let net = read_net(&file)?;
            emit(buf, &export_incidence(&net, format.into()), out.as_deref())?
        }
        Command::Import { file, out } => {
            let net = read_net(&file)?;
            emit(
                buf,
                &(NetDocument::of(&net).to_json() + "\n"),
                out.as_deref(),
            )?
        }
        Command::Compress {
            machine,
            log,
            order,
            out,
        } => compress(buf, &machine, log, order, out.as_deref())?,
        Command::Verify {
            strategy,
            machine,
            grid,
            limit,
            golden,
            pretty,
        } => {
            return verify(
                buf,
                &strategy,
                machine.as_deref(),
                grid,
                limit,
                golden.as_deref(),
                pretty,
            )
        }
    }
    Ok(true)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let mut buf = String::new();
    let ok = dispatch(cli.command, &mut buf)?;
    match io::stdout().lock().write_all(buf.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
