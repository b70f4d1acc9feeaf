// SPDX-License-Identifier: Apache-2.0

//! `intentd` command line. Intent commands and benchmarks run against an
//! in-process core; `serve` exposes that core over REST.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage or validation error,
//! 3 when an add command left intents FAILED or hit the store capacity.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use intentd_bench::config::{parse_bench_type, BenchmarkConfig, Interface, Profile, ResetMode};
use intentd_bench::{analyze, emit_report, Harness};
use intentd_core::intent::{IntentError, ValidationError};
use intentd_core::net::{default_topology, load_topology};
use intentd_core::timing::{timed_add, TimedResult};
use intentd_core::{ConnectPoint, Controller, ControllerConfig, IntentId, IntentRequest, Topology};
use intentd_rest::{IntentResponseDocument, RestClient};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "intentd", version, about = "Miniature intent-based SDN controller")]
pub struct Cli {
    /// Topology file; the bundled five-switch chain when unset.
    #[arg(long, global = true, env = "INTENTD_TOPOLOGY", value_name = "FILE")]
    pub topology: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct AddOptions {
    /// Number of copies of the intent to submit.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long)]
    pub priority: Option<u16>,
    #[arg(long, value_enum, default_value_t)]
    pub output: OutputFormat,
    /// Live-intent capacity of the in-process store; unbounded when unset.
    #[arg(long)]
    pub capacity: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Install a point-to-point intent.
    AddPointToPointIntent {
        ingress: String,
        egress: String,
        #[command(flatten)]
        opts: AddOptions,
    },
    /// Install a single-to-multi-point intent: INGRESS EGRESS...
    AddSingleToMultiPointIntent {
        ingress: String,
        #[arg(required = true)]
        egresses: Vec<String>,
        #[command(flatten)]
        opts: AddOptions,
    },
    /// Install a multi-to-single-point intent: INGRESS... EGRESS
    AddMultiToSinglePointIntent {
        #[arg(num_args = 2.., required = true, value_name = "INGRESS... EGRESS")]
        points: Vec<String>,
        #[command(flatten)]
        opts: AddOptions,
    },
    /// Install a host-to-host intent between two host ids.
    AddHostToHostIntent {
        one: String,
        two: String,
        #[command(flatten)]
        opts: AddOptions,
    },
    /// List intents.
    Intents {
        #[arg(long, value_enum, default_value_t)]
        output: OutputFormat,
        /// Query a running server instead of the in-process core.
        #[arg(long, value_name = "HOST:PORT")]
        endpoint: Option<String>,
    },
    /// Withdraw an installed intent.
    Withdraw {
        id: String,
        /// Withdraw on a running server instead of the in-process core.
        #[arg(long, value_name = "HOST:PORT")]
        endpoint: Option<String>,
    },
    /// Run the benchmark harness and write its report.
    Bench(BenchArgs),
    /// Serve the REST interface.
    Serve {
        #[arg(long, default_value = intentd_rest::DEFAULT_LISTEN)]
        listen: SocketAddr,
        #[arg(long)]
        capacity: Option<usize>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
    /// Comma-separated: P2P, S2M, M2S or full type names.
    #[arg(long, value_delimiter = ',', value_parser = parse_bench_type)]
    pub types: Option<Vec<intentd_core::IntentType>>,
    /// Comma-separated: CLI, REST.
    #[arg(long, value_delimiter = ',', value_parser = parse_interface)]
    pub interfaces: Option<Vec<Interface>>,
    #[arg(long, value_delimiter = ',')]
    pub workloads: Option<Vec<usize>>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Discarded runs before each cell's timed iterations.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Saturation runs per type; 0 skips them.
    #[arg(long)]
    pub saturation: Option<usize>,
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long, value_name = "HOST:PORT")]
    pub rest_endpoint: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Add a `ci_plot_scale` column holding ci95_ms times N.
    #[arg(long, value_name = "N")]
    pub plot_scale: Option<f64>,
    #[arg(long, value_parser = parse_reset_mode)]
    pub reset_mode: Option<ResetMode>,
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse()
}

fn parse_interface(s: &str) -> Result<Interface, String> {
    s.parse()
}

fn parse_reset_mode(s: &str) -> Result<ResetMode, String> {
    s.parse()
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        Self::Usage(e.to_string())
    }
}

pub fn load_cli_topology(path: Option<&PathBuf>) -> Result<Topology, CliError> {
    match path {
        None => Ok(default_topology()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read topology {}: {e}", path.display())))?;
            load_topology(&text).map_err(|e| CliError::Usage(format!("topology {}: {e}", path.display())))
        }
    }
}

/// A parsed add-* command.
#[derive(Debug, Clone, PartialEq)]
pub struct AddCommand {
    pub request: IntentRequest,
    pub count: usize,
    pub output: OutputFormat,
}

fn point(s: &str) -> Result<ConnectPoint, CliError> {
    s.parse()
        .map_err(|e| CliError::Usage(format!("connect point `{s}`: {e}")))
}

fn points(items: &[String]) -> Result<Vec<ConnectPoint>, CliError> {
    items.iter().map(|s| point(s)).collect()
}

fn distinct(list: Vec<ConnectPoint>, what: &str) -> Result<Vec<ConnectPoint>, CliError> {
    let mut seen = std::collections::BTreeSet::new();
    for p in &list {
        if !seen.insert(*p) {
            return Err(CliError::Usage(format!("{what}: {p} given twice")));
        }
    }
    Ok(list)
}

impl AddCommand {
    fn parse(command: &Command) -> Result<Option<(Self, Option<usize>)>, CliError> {
        let (request, opts) = match command {
            Command::AddPointToPointIntent { ingress, egress, opts } => {
                (IntentRequest::point_to_point(point(ingress)?, point(egress)?), opts)
            }
            Command::AddSingleToMultiPointIntent { ingress, egresses, opts } => (
                IntentRequest::single_to_multi(point(ingress)?, distinct(points(egresses)?, "egresses")?),
                opts,
            ),
            Command::AddMultiToSinglePointIntent { points: all, opts } => {
                let (egress, ingresses) = all.split_last().expect("clap enforces two points");
                (
                    IntentRequest::multi_to_single(distinct(points(ingresses)?, "ingresses")?, point(egress)?),
                    opts,
                )
            }
            Command::AddHostToHostIntent { one, two, opts } => {
                (IntentRequest::host_to_host(one.clone(), two.clone()), opts)
            }
            _ => return Ok(None),
        };
        let request = match opts.priority {
            Some(p) => request.with_priority(p),
            None => request,
        };
        let count = usize::try_from(opts.count).map_err(|_| CliError::Usage("--count too large".into()))?;
        Ok(Some((
            Self {
                request,
                count,
                output: opts.output,
            },
            opts.capacity,
        )))
    }
}

/// An in-process core that several commands can share.
#[derive(Debug, Clone)]
pub struct Session {
    controller: Arc<Controller>,
}

impl Session {
    pub fn new(topology: Topology, capacity: Option<usize>) -> Self {
        Self {
            controller: Arc::new(Controller::new(
                Arc::new(topology),
                ControllerConfig {
                    intent_capacity: capacity,
                    ..Default::default()
                },
            )),
        }
    }

    pub fn controller(&self) -> &Arc<Controller> {
        &self.controller
    }

    /// Run one command line against this session's core. Options that
    /// shape a new core (`--topology`, `--capacity`) are ignored here.
    pub fn run<I, T>(&self, args: I) -> Outcome
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        capture(|out, err| match Cli::try_parse_from(args) {
            Ok(cli) => execute(cli, Some(self), out, err),
            Err(e) => clap_exit(e, out, err),
        })
    }
}

/// Submit `count` copies of the command's intent; the request is validated
/// before the clock starts.
pub fn run_add_command(cmd: &AddCommand, session: &Session) -> Result<TimedResult, CliError> {
    Ok(timed_add(&session.controller, &cmd.request, cmd.count)?)
}

pub fn add_exit_code(result: &TimedResult) -> i32 {
    if result.failed > 0 || result.capacity_exhausted {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}

pub fn format_timed(result: &TimedResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(result).expect("serializes") + "\n",
        OutputFormat::Csv => format!(
            "submitted,installed,failed,elapsed_ms,capacity_exhausted\n{},{},{},{},{}\n",
            result.submitted, result.installed, result.failed, result.elapsed_ms, result.capacity_exhausted
        ),
        OutputFormat::Table => {
            let mut s = format!(
                "{:<10} {:<10} {:<7} {:>12}\n{:<10} {:<10} {:<7} {:>12.3}\n",
                "submitted", "installed", "failed", "elapsed_ms", result.submitted, result.installed, result.failed, result.elapsed_ms
            );
            if result.capacity_exhausted {
                s.push_str("stopped early: intent store is full\n");
            }
            s
        }
    }
}

/// Render an intent listing.
pub fn format_intents(intents: &[IntentResponseDocument], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(intents).expect("serializes") + "\n",
        OutputFormat::Csv => {
            let mut s = String::from("id,type,state,rule_count\n");
            for i in intents {
                let _ = writeln!(s, "{},{},{},{}", i.id, i.intent_type, i.state, i.rule_count);
            }
            s
        }
        OutputFormat::Table => {
            let mut s = format!("{:<8} {:<20} {:<10} {:>10}\n", "id", "type", "state", "rule_count");
            for i in intents {
                let _ = writeln!(s, "{:<8} {:<20} {:<10} {:>10}", i.id, i.intent_type.as_str(), i.state.as_str(), i.rule_count);
            }
            s
        }
    }
}

pub fn run_query_command(format: OutputFormat, session: &Session) -> String {
    let docs: Vec<_> = session.controller.list().iter().map(IntentResponseDocument::from).collect();
    format_intents(&docs, format)
}

fn remote(endpoint: &str) -> Result<RestClient, CliError> {
    RestClient::new(endpoint).map_err(|e| CliError::Runtime(e.to_string()))
}

fn withdraw(id: &str, endpoint: Option<&str>, session: &Session) -> Result<String, CliError> {
    if let Some(endpoint) = endpoint {
        remote(endpoint)?
            .withdraw(id)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        return Ok(format!("withdrew intent {id}\n"));
    }
    let parsed: IntentId = id
        .parse()
        .map_err(|_| CliError::Usage(format!("intent id `{id}` is not a decimal number")))?;
    match session.controller.withdraw(parsed) {
        Ok(rules) => Ok(format!("withdrew intent {id} ({rules} rules removed)\n")),
        Err(e @ IntentError::NotFound(_)) => Err(CliError::Usage(e.to_string())),
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn bench_config(args: &BenchArgs, topology: Option<&PathBuf>) -> Result<BenchmarkConfig, CliError> {
    let usage = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());
    let mut cfg = BenchmarkConfig::profile(args.profile.unwrap_or(Profile::Desk));
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| usage(&e))?;
        if args.profile.is_some() {
            // an explicit --profile outranks the file's
            if let Some(map) = value.as_object_mut() {
                map.remove("profile");
            }
        }
        cfg = BenchmarkConfig::from_json(&value.to_string(), &cfg).map_err(|e| usage(&e))?;
    }
    if let Some(v) = &args.types {
        cfg.intent_types = v.clone();
    }
    if let Some(v) = &args.interfaces {
        cfg.interfaces = v.clone();
    }
    if let Some(v) = &args.workloads {
        cfg.workloads = v.clone();
    }
    if let Some(v) = args.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = args.warmup {
        cfg.warmup_iterations = v;
    }
    if let Some(v) = args.saturation {
        cfg.saturation_iterations = v;
    }
    if let Some(v) = args.capacity {
        cfg.capacity = v;
    }
    if let Some(v) = &args.rest_endpoint {
        cfg.rest_endpoint = Some(v.clone());
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = args.plot_scale {
        cfg.plot_scale = Some(v);
    }
    if let Some(v) = args.reset_mode {
        cfg.reset_mode = v;
    }
    if let Some(t) = topology {
        cfg.topology = Some(t.clone());
    }
    cfg.validate().map_err(|e| usage(&e))?;
    Ok(cfg)
}

fn bench(args: &BenchArgs, topology: Option<&PathBuf>, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = bench_config(args, topology)?;
    let runtime = |e: &dyn std::fmt::Display| CliError::Runtime(e.to_string());
    let mut harness = Harness::new(cfg.clone()).map_err(|e| runtime(&e))?;
    let results = harness.run().map_err(|e| runtime(&e))?;
    let files = emit_report(&results, &cfg, &cfg.output_dir).map_err(|e| runtime(&e))?;
    let report = analyze(&results).map_err(|e| runtime(&e))?;

    let mut text = format!(
        "{:<20} {:<5} {:>8} {:>4} {:>12} {:>10} {:>10}\n",
        "intent_type", "iface", "workload", "n", "mean_ms", "stddev_ms", "ci95_ms"
    );
    for c in &report.summaries {
        let _ = writeln!(
            text,
            "{:<20} {:<5} {:>8} {:>4} {:>12.3} {:>10.3} {:>10.3}",
            c.intent_type.as_str(),
            c.interface.as_str(),
            c.workload,
            c.stats.n,
            c.stats.mean_ms,
            c.stats.stddev_ms,
            c.stats.ci95_ms
        );
    }
    for f in &report.fits {
        let _ = writeln!(
            text,
            "fit {} {}: {:.5} ms/intent, r^2 {:.5}",
            f.intent_type, f.interface, f.fit.slope, f.fit.r_squared
        );
    }
    if let Some(r) = report.mean_ratio() {
        let _ = writeln!(text, "mean REST/CLI ratio: {r:.3}");
    }
    for s in &report.saturation {
        let _ = writeln!(
            text,
            "saturation {}: mean {:.1} intents in {:.3} ms over {} runs",
            s.intent_type, s.mean_max_intents, s.mean_elapsed_ms, s.runs
        );
    }
    let degraded = results.samples.iter().filter(|s| s.is_degraded()).count();
    if degraded > 0 {
        let _ = writeln!(text, "degraded samples (failed > 0): {degraded}");
    }
    let _ = writeln!(text, "report written to {}", cfg.output_dir.display());
    for f in files {
        let _ = writeln!(text, "  {}", f.display());
    }
    out.write_all(text.as_bytes()).map_err(|e| runtime(&e))
}

fn serve(listen: SocketAddr, session: &Session, err: &mut dyn Write) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let controller = session.controller.clone();
    let _ = writeln!(err, "serving REST on http://{listen} (Ctrl-C to stop)");
    runtime
        .block_on(async move {
            let listener = tokio::net::TcpListener::bind(listen).await?;
            intentd_rest::serve(listener, controller, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
        })
        .map_err(|e| CliError::Runtime(format!("{listen}: {e}")))
}

fn dispatch(cli: &Cli, session: &Session, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let write = |out: &mut dyn Write, s: String| out.write_all(s.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()));
    if let Some((cmd, _)) = AddCommand::parse(&cli.command)? {
        let result = run_add_command(&cmd, session)?;
        write(out, format_timed(&result, cmd.output))?;
        return Ok(add_exit_code(&result));
    }
    match &cli.command {
        Command::Intents { output, endpoint } => {
            let text = match endpoint {
                Some(e) => format_intents(&remote(e)?.list().map_err(|e| CliError::Runtime(e.to_string()))?, *output),
                None => run_query_command(*output, session),
            };
            write(out, text)?;
        }
        Command::Withdraw { id, endpoint } => write(out, withdraw(id, endpoint.as_deref(), session)?)?,
        Command::Bench(args) => bench(args, cli.topology.as_ref(), out)?,
        Command::Serve { listen, .. } => serve(*listen, session, err)?,
        _ => unreachable!("add commands handled above"),
    }
    Ok(EXIT_OK)
}

fn core_capacity(command: &Command) -> Option<usize> {
    match command {
        Command::AddPointToPointIntent { opts, .. }
        | Command::AddSingleToMultiPointIntent { opts, .. }
        | Command::AddMultiToSinglePointIntent { opts, .. }
        | Command::AddHostToHostIntent { opts, .. } => opts.capacity,
        Command::Serve { capacity, .. } => *capacity,
        _ => None,
    }
}

/// Run a parsed command line; builds a fresh core unless `session` is given.
pub fn execute(cli: Cli, session: Option<&Session>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let owned;
    let session = match session {
        Some(s) => s,
        None => {
            // bench builds its own cores from its config
            let topology = if matches!(cli.command, Command::Bench(_)) {
                Ok(default_topology())
            } else {
                load_cli_topology(cli.topology.as_ref())
            };
            match topology {
                Ok(t) => {
                    owned = Session::new(t, core_capacity(&cli.command));
                    &owned
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return e.exit_code();
                }
            }
        }
    };
    match dispatch(&cli, session, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn clap_exit(e: clap::Error, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = e.render().to_string();
    if e.use_stderr() {
        let _ = err.write_all(text.as_bytes());
        EXIT_USAGE
    } else {
        let _ = out.write_all(text.as_bytes());
        EXIT_OK
    }
}

/// Parse and run, writing to the given streams. Returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, None, out, err),
        Err(e) => clap_exit(e, out, err),
    }
}

/// Captured result of one command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn capture(f: impl FnOnce(&mut dyn Write, &mut dyn Write) -> i32) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = f(&mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8_lossy(&out).into_owned(),
        stderr: String::from_utf8_lossy(&err).into_owned(),
    }
}

/// Run one command line on a fresh core and capture its output.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    capture(|out, err| main_with(args, out, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_multi_to_single_order() {
        let cli = Cli::try_parse_from([
            "intentd",
            "add-multi-to-single-point-intent",
            "of:0000000000000001/1",
            "of:0000000000000002/3",
            "of:0000000000000005/2",
        ])
        .unwrap();
        let (cmd, _) = AddCommand::parse(&cli.command).unwrap().unwrap();
        assert_eq!(
            cmd.request.kind.egress_points().into_iter().next().unwrap().to_string(),
            "of:0000000000000005/2"
        );
        assert_eq!(cmd.request.kind.ingress_points().len(), 2);
    }

    #[test]
    fn count_must_be_positive() {
        assert!(Cli::try_parse_from(["intentd", "add-host-to-host-intent", "h1", "h2", "--count", "0"]).is_err());
    }

    #[test]
    fn exit_code_for_results() {
        let mut r = TimedResult {
            submitted: 2,
            installed: 2,
            failed: 0,
            elapsed_ms: 1.0,
            capacity_exhausted: false,
        };
        assert_eq!(add_exit_code(&r), EXIT_OK);
        r.failed = 1;
        assert_eq!(add_exit_code(&r), EXIT_PARTIAL);
        r.failed = 0;
        r.capacity_exhausted = true;
        assert_eq!(add_exit_code(&r), EXIT_PARTIAL);
    }
}
