//! Command-line front end: `check`, `run`, `explore`, `desugar`, and the
//! runtime examples.
//!
//! Exit codes: 0 success, 1 diagnostics (parse, desugar or type errors),
//! 2 a failed check or counterexample.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use bestow_core::eval::{RunError, Schedule, DEFAULT_FUEL};
use bestow_core::explore::{check_preservation, check_progress, check_race_freedom, explore, Bound};
use bestow_core::surface::{self, print_type};
use bestow_core::syntax::Expr;
use bestow_core::text::{parse_expr, parse_heap};
use bestow_core::wf::wf_heap;
use bestow_core::{typecheck, Evaluator, Heap, QueueOrder, SchedulerChoice, TypeEnv};
use bestow_runtime::list::{self, Mode};
use bestow_runtime::trace::Origin;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "bestow", version, about = "Typecheck, run and explore programs of the bestow calculus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Typecheck a program and print its type (or check a heap's well-formedness).
    Check(Input),
    /// Run a program to completion under a scheduler.
    Run(RunArgs),
    /// Explore every interleaving up to a bound and check the soundness properties.
    Explore(ExploreArgs),
    /// Print the elaborated core term.
    Desugar(Input),
    /// Runtime examples.
    #[command(subcommand)]
    Examples(ExampleCommand),
}

#[derive(Args, Debug)]
pub struct Input {
    pub file: PathBuf,
    /// Input syntax; by default `.core` is a core term, `.heap` a heap,
    /// anything else surface syntax.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Surface,
    Core,
    Heap,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    pub fuel: usize,
    /// Write the evaluation trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Enqueue new messages at the front of the receiver's queue.
    #[arg(long)]
    pub lifo_queue: bool,
    /// Always take the first enabled choice instead of a random one.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct ExploreArgs {
    #[command(flatten)]
    pub input: Input,
    /// Maximum number of distinct states.
    #[arg(long, default_value_t = 50_000)]
    pub bound: usize,
    /// Maximum scheduling depth.
    #[arg(long, default_value_t = 64)]
    pub depth: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "progress,preservation,races")]
    pub check: Vec<Check>,
    /// Write the explored state space as JSON.
    #[arg(long)]
    pub emit: Option<PathBuf>,
    #[arg(long)]
    pub lifo_queue: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Progress,
    Preservation,
    Races,
}

#[derive(Subcommand, Debug)]
pub enum ExampleCommand {
    /// Iterate a list held by an actor and report node hops.
    ListIterator(ListArgs),
}

#[derive(Args, Debug)]
pub struct ListArgs {
    #[arg(long, default_value_t = 1)]
    pub clients: usize,
    #[arg(long, default_value_t = 100)]
    pub elements: usize,
    #[arg(long, value_enum, default_value = "bestowed-iterator")]
    pub mode: ModeArg,
    /// Also write the owner trace, one event per line.
    #[arg(long)]
    pub trace_dump: Option<PathBuf>,
    /// Leave the owner trace out of the JSON report.
    #[arg(long)]
    pub no_trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Get,
    BestowedIterator,
    AtomicPairs,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Get => Mode::Get,
            ModeArg::BestowedIterator => Mode::BestowedIterator,
            ModeArg::AtomicPairs => Mode::AtomicPairs,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_DIAGNOSTICS } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            code
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Check(input) => check(&input, out, err),
        Command::Run(args) => run(&args, out, err),
        Command::Explore(args) => explore_cmd(&args, out, err),
        Command::Desugar(input) => desugar(&input, out, err),
        Command::Examples(ExampleCommand::ListIterator(args)) => list_iterator(&args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DIAGNOSTICS
        }
    }
}

enum Program {
    Closed(Expr),
    Heap(Heap),
}

impl Program {
    fn heap(&self) -> Heap {
        match self {
            Program::Closed(e) => Heap::inject(e.clone()),
            Program::Heap(h) => h.clone(),
        }
    }
}

fn format_of(input: &Input) -> Format {
    input.format.unwrap_or_else(|| match input.file.extension().and_then(|e| e.to_str()) {
        Some("core") => Format::Core,
        Some("heap") => Format::Heap,
        _ => Format::Surface,
    })
}

/// Reads and elaborates the input; `Err(code)` after reporting diagnostics.
fn load(input: &Input, err: &mut dyn Write) -> anyhow::Result<Result<Program, i32>> {
    let path = &input.file;
    let src = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(match format_of(input) {
        Format::Surface => match surface::parse(&src) {
            Err(diags) => {
                for d in diags {
                    writeln!(err, "{}:{d}", path.display())?;
                }
                Err(EXIT_DIAGNOSTICS)
            }
            Ok(p) => match surface::elaborate(&p) {
                Ok(elab) => Ok(Program::Closed(elab.expr)),
                Err(e) => {
                    writeln!(err, "{}: error: {e}", path.display())?;
                    Err(EXIT_DIAGNOSTICS)
                }
            },
        },
        Format::Core => match parse_expr(&src) {
            Ok(e) => Ok(Program::Closed(e)),
            Err(e) => {
                writeln!(err, "{}: error: {e}", path.display())?;
                Err(EXIT_DIAGNOSTICS)
            }
        },
        Format::Heap => match parse_heap(&src) {
            Ok(h) => Ok(Program::Heap(h)),
            Err(e) => {
                writeln!(err, "{}: error: {e}", path.display())?;
                Err(EXIT_DIAGNOSTICS)
            }
        },
    })
}

/// Typechecks a closed program, reporting the error if any.
fn typechecks(program: &Program, path: &Path, err: &mut dyn Write) -> anyhow::Result<bool> {
    if let Program::Closed(e) = program {
        if let Err(te) = typecheck(&TypeEnv::new(), e) {
            writeln!(err, "{}: error: {te}", path.display())?;
            return Ok(false);
        }
    }
    Ok(true)
}

fn check(input: &Input, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let program = match load(input, err)? {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    match &program {
        Program::Closed(e) => match typecheck(&TypeEnv::new(), e) {
            Ok(ty) => {
                writeln!(out, "{}", print_type(&ty))?;
                Ok(EXIT_OK)
            }
            Err(te) => {
                writeln!(err, "{}: error: {te}", input.file.display())?;
                Ok(EXIT_DIAGNOSTICS)
            }
        },
        Program::Heap(h) => {
            let report = wf_heap(h);
            if report.ok() {
                writeln!(out, "well-formed")?;
                return Ok(EXIT_OK);
            }
            for v in &report.violations {
                writeln!(err, "{}: {v}", input.file.display())?;
            }
            Ok(EXIT_DIAGNOSTICS)
        }
    }
}

fn run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let program = match load(&args.input, err)? {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    if !typechecks(&program, &args.input.file, err)? {
        return Ok(EXIT_DIAGNOSTICS);
    }
    let order = if args.lifo_queue { QueueOrder::Lifo } else { QueueOrder::Fifo };
    let ev = Evaluator::new(order);
    let heap = program.heap();
    let result = if args.sequential {
        ev.run_with(heap, args.fuel, |_, _| Some(0))
    } else {
        ev.run(heap, &Schedule::Seeded(args.seed), args.fuel)
    };
    let (run, code) = match result {
        Ok(run) => (run, EXIT_OK),
        Err(RunError::FuelExhausted(run)) => {
            writeln!(err, "fuel exhausted after {} steps", run.trace.len())?;
            (*run, EXIT_CHECK_FAILED)
        }
        Err(RunError::Stuck(run)) => {
            writeln!(err, "stuck after {} steps: no choice enabled and the heap is not terminal", run.trace.len())?;
            (*run, EXIT_CHECK_FAILED)
        }
        Err(RunError::Step(e)) => {
            writeln!(err, "step failed: {e}")?;
            return Ok(EXIT_CHECK_FAILED);
        }
    };
    if let Some(path) = &args.trace {
        let mut f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        for ev in run.trace.events() {
            writeln!(f, "{}", serde_json::to_string(ev)?)?;
        }
    }
    writeln!(out, "steps: {}", run.trace.len())?;
    writeln!(out, "terminal: {}", run.terminal)?;
    writeln!(out, "{}", run.heap)?;
    Ok(code)
}

fn path_text(path: &[SchedulerChoice]) -> String {
    if path.is_empty() {
        return "(initial state)".into();
    }
    path.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn explore_cmd(args: &ExploreArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let program = match load(&args.input, err)? {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    if !typechecks(&program, &args.input.file, err)? {
        return Ok(EXIT_DIAGNOSTICS);
    }
    let heap = program.heap();
    let initial_wf = wf_heap(&heap);
    if !initial_wf.ok() {
        writeln!(err, "warning: initial heap is not well-formed")?;
        for v in &initial_wf.violations {
            writeln!(err, "  {v}")?;
        }
    }
    let order = if args.lifo_queue { QueueOrder::Lifo } else { QueueOrder::Fifo };
    let space = explore(&heap, &Evaluator::new(order), Bound { max_states: args.bound, max_depth: args.depth });
    writeln!(out, "states: {}", space.len())?;
    writeln!(out, "edges: {}", space.edges().len())?;
    writeln!(out, "truncated: {}", space.truncated())?;
    let mut failed = false;
    for check in &args.check {
        match check {
            Check::Progress => match check_progress(&space) {
                Ok(()) => writeln!(out, "progress: ok")?,
                Err(v) => {
                    failed = true;
                    writeln!(out, "progress: FAILED at state {}", v.state)?;
                    writeln!(out, "  path: {}", path_text(&v.path))?;
                    writeln!(out, "  heap: {}", v.heap)?;
                }
            },
            Check::Preservation => match check_preservation(&space) {
                Ok(()) => writeln!(out, "preservation: ok")?,
                Err(v) => {
                    failed = true;
                    writeln!(out, "preservation: FAILED on edge {} -> {} ({})", v.edge.from, v.edge.to, v.edge.choice)?;
                    writeln!(out, "  path: {}", path_text(&v.path))?;
                    for viol in &v.report.violations {
                        writeln!(out, "  {viol}")?;
                    }
                }
            },
            Check::Races => match check_race_freedom(&space) {
                Ok(()) => writeln!(out, "races: ok")?,
                Err(w) => {
                    failed = true;
                    writeln!(
                        out,
                        "races: FAILED at state {}: actors {} and {} both mutate location {}",
                        w.state, w.actors.0 .0, w.actors.1 .0, w.location.0
                    )?;
                    writeln!(out, "  path: {}", path_text(&w.path))?;
                    writeln!(out, "  heap: {}", w.heap)?;
                }
            },
        }
    }
    if failed {
        writeln!(out, "note: states are canonical, so locations and actor ids may be renumbered")?;
    }
    if let Some(path) = &args.emit {
        let f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        serde_json::to_writer_pretty(f, &space.dump())?;
    }
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}

fn desugar(input: &Input, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match load(input, err)? {
        Ok(Program::Closed(e)) => writeln!(out, "{e}")?,
        Ok(Program::Heap(h)) => writeln!(out, "{h}")?,
        Err(code) => return Ok(code),
    }
    Ok(EXIT_OK)
}

fn list_iterator(args: &ListArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let mode: Mode = args.mode.into();
    let report = list::run(args.clients, args.elements, mode)?;
    let ok = report.in_order
        && report.pairs_adjacent
        && report.off_owner_accesses == 0
        && report.hops_per_client.iter().all(|h| *h == report.expected_hops_per_client);
    if let Some(path) = &args.trace_dump {
        let mut f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        for e in &report.trace {
            writeln!(f, "{e}")?;
        }
    }
    let mut value = json!({
        "mode": mode.name(),
        "clients": report.clients,
        "elements": report.elements,
        "hops": report.hops,
        "hops_per_client": report.hops_per_client,
        "expected_hops_per_client": report.expected_hops_per_client,
        "owner_turns": report.owner_turns,
        "relayed_messages": report.relayed_messages,
        "in_order": report.in_order,
        "pairs_adjacent": report.pairs_adjacent,
        "off_owner_accesses": report.off_owner_accesses,
        "owner_trace_len": report.trace.len(),
    });
    if !args.no_trace {
        let trace: Vec<_> = report
            .trace
            .iter()
            .map(|e| {
                let origin = match &e.origin {
                    Origin::Actor(a) => json!({ "actor": a.0 }),
                    Origin::Thread(t) => json!({ "thread": &**t }),
                };
                json!({ "seq": e.seq, "turn": e.turn, "origin": origin, "event": e.kind.to_string() })
            })
            .collect();
        value["owner_trace"] = json!(trace);
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
