use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chamberline::gateway::{self, ServeConfig, DEFAULT_PORT, PORT_ENV};
use chamberline::sim::{self, load_scenario, report_counts, report_table, SimConfig};
use chamberline::uart::{UartConfig, UartError};
use chamberline::vitals::{synth_ppg, PpgParams, DEFAULT_PULSE_FS_HZ, DEFAULT_VREF_MV};

#[derive(Parser)]
#[command(name = "chamberline", version, about = "Patient-queue and vitals kiosk simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print the metrics report.
    Run(RunArgs),
    /// UBRR, actual baud and error for oscillator/baud combinations.
    UartCalc(UartCalcArgs),
    /// Print a synthetic pulse waveform as CSV.
    SynthPpg(SynthArgs),
    /// Live session over newline-delimited JSON on TCP.
    Serve(ServeArgs),
}

/// Accepts plain integers and `k`/`M` suffixes, e.g. `8M` or `9600`.
fn parse_hz(s: &str) -> Result<u32, String> {
    let (digits, scale) = match s.strip_suffix(['M', 'm']) {
        Some(d) => (d, 1_000_000.0),
        None => match s.strip_suffix(['k', 'K']) {
            Some(d) => (d, 1_000.0),
            None => (s, 1.0),
        },
    };
    let v: f64 = digits.parse().map_err(|_| format!("not a frequency: {s:?}"))?;
    let hz = (v * scale).round();
    if hz >= 1.0 && hz <= f64::from(u32::MAX) {
        Ok(hz as u32)
    } else {
        Err(format!("frequency out of range: {s:?}"))
    }
}

#[derive(Args)]
struct LinkArgs {
    /// Oscillator frequency in Hz.
    #[arg(long, value_parser = parse_hz, default_value = "8000000")]
    fosc: u32,
    #[arg(long, value_parser = parse_hz, default_value = "9600")]
    baud: u32,
    /// Double-speed UART mode.
    #[arg(long)]
    u2x: bool,
}

#[derive(Args)]
struct RunArgs {
    file: String,
    #[command(flatten)]
    link: LinkArgs,
    /// ADC reference in millivolts.
    #[arg(long, default_value_t = DEFAULT_VREF_MV)]
    vref: u32,
    #[arg(long, default_value_t = chamberline::queue::DEFAULT_CAPACITY)]
    capacity: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print the report as one JSON object.
    #[arg(long)]
    json: bool,
    /// Exit with status 2 if any metric misses its target.
    #[arg(long)]
    assert: bool,
    /// Print the event log before the report.
    #[arg(long)]
    log: bool,
}

#[derive(Args)]
struct UartCalcArgs {
    #[arg(long, value_parser = parse_hz, required = true, num_args = 1..)]
    fosc: Vec<u32>,
    #[arg(long, value_parser = parse_hz, required = true, num_args = 1..)]
    baud: Vec<u32>,
    #[arg(long)]
    u2x: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(20..=250))]
    bpm: u32,
    #[arg(long, default_value_t = 10_000)]
    duration_ms: u64,
    #[arg(long, default_value_t = DEFAULT_PULSE_FS_HZ, value_parser = clap::value_parser!(u32).range(50..=1000))]
    fs: u32,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ServeArgs {
    /// TCP port; the CHAMBERLINE_PORT environment variable takes precedence.
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[command(flatten)]
    link: LinkArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Start with the virtual clock paused.
    #[arg(long)]
    paused: bool,
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let text = match fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.file);
            return ExitCode::from(1);
        }
    };
    let scenario = match load_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.file);
            return ExitCode::from(1);
        }
    };
    let config = SimConfig {
        f_osc_hz: args.link.fosc,
        baud: args.link.baud,
        u2x: args.link.u2x,
        vref_mv: args.vref,
        capacity: args.capacity,
        seed: args.seed,
        ..SimConfig::default()
    };
    let outcome = match sim::run(&scenario, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if args.log {
        print!("{}", outcome.log_text());
    }
    if args.json {
        println!("{}", outcome.report.to_json());
    } else {
        print!("{}", report_table(&outcome.report));
        println!("{}", report_counts(&outcome.report));
    }
    let violations = outcome.report.violations();
    if args.assert && !violations.is_empty() {
        for v in violations {
            eprintln!("violation: {v}");
        }
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn cmd_uart_calc(args: UartCalcArgs) -> ExitCode {
    println!(
        "{:>10} {:>8} {:>3} {:>5} {:>12} {:>8} {:>6}",
        "f_osc_hz", "baud", "u2x", "ubrr", "actual_baud", "error%", "usable"
    );
    let u2x = if args.u2x { "on" } else { "off" };
    for &f in &args.fosc {
        for &b in &args.baud {
            match UartConfig::new(f, b, args.u2x) {
                Ok(c) => println!(
                    "{:>10} {:>8} {:>3} {:>5} {:>12.1} {:>+8.2} {:>6}",
                    f,
                    b,
                    u2x,
                    c.ubrr,
                    c.actual_baud(),
                    c.error_pct(),
                    if c.usable() { "yes" } else { "no" }
                ),
                Err(UartError::BaudUnreachable { .. }) => {
                    println!("{f:>10} {b:>8} {u2x:>3} {:>5} {:>12} {:>8} {:>6}", "-", "unreachable", "-", "no")
                }
            }
        }
    }
    ExitCode::SUCCESS
}

fn cmd_synth(args: SynthArgs) -> ExitCode {
    println!("t_ms,value");
    let params = PpgParams::new(args.bpm, args.duration_ms, args.fs, args.noise, args.seed);
    for s in synth_ppg(params) {
        println!("{},{}", s.t_ms, s.value);
    }
    ExitCode::SUCCESS
}

fn cmd_serve(args: ServeArgs) -> ExitCode {
    let port = match std::env::var(PORT_ENV) {
        Ok(v) => match v.parse::<u16>() {
            Ok(p) => p,
            Err(_) => {
                eprintln!("error: {PORT_ENV}={v:?} is not a port");
                return ExitCode::from(1);
            }
        },
        Err(_) => args.port,
    };
    let config = ServeConfig {
        sim: SimConfig {
            f_osc_hz: args.link.fosc,
            baud: args.link.baud,
            u2x: args.link.u2x,
            seed: args.seed,
            ..SimConfig::default()
        },
        start_paused: args.paused,
        ..ServeConfig::default()
    };
    let server = match gateway::Server::bind(("127.0.0.1", port), config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Ok(addr) = server.local_addr() {
        eprintln!("listening on {addr}");
    }
    match server.run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::UartCalc(a) => cmd_uart_calc(a),
        Command::SynthPpg(a) => cmd_synth(a),
        Command::Serve(a) => cmd_serve(a),
    }
}
