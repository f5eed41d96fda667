use choreo_cli::commands::{
    cmd_compile, cmd_place, cmd_simulate, cmd_validate, load_config, CliError, InputPaths, EXIT_FAILED, EXIT_OK,
};
use choreo_cli::server::{serve, ServeOptions};
use choreo_core::sim::ChannelJitter;
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

/// Compile, replay and preview robot tour timelines.
///
/// Exit status: 0 success, 1 a check failed, 2 an input is missing or
/// unreadable.
#[derive(Parser)]
#[command(name = "choreo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a library directory and print a JSON report.
    Validate {
        library: PathBuf,
    },
    /// Compile a tour into narration, visuals and gestures timeline files.
    Compile {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        tour: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Directory of per-device scene files named `<device_id>.json`.
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Variant label to emit instead of the tour's or the first one.
        #[arg(long)]
        variant: Option<String>,
        /// Also write the JSON summary here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a compiled timeline on a virtual clock and verify the trace.
    Simulate {
        /// Directory holding the three timeline files.
        #[arg(long)]
        timeline: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dispatch jitter bound for every channel, ms.
        #[arg(long)]
        jitter_ms: Option<u64>,
        /// Tolerance, ms.
        #[arg(long)]
        epsilon: Option<u64>,
        /// Trace output file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve where a projection lands in a scene.
    Place {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the local preview service.
    Serve {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        tour: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenes: Option<PathBuf>,
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Directory for the overrides file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8750)]
        port: u16,
        /// Built UI bundle to serve at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
}

fn print_json<T: Serialize>(value: &T) {
    use std::io::Write;
    let body = serde_json::to_string_pretty(value).expect("output serializes");
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{body}");
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { library } => {
            let (code, report) = cmd_validate(&library);
            print_json(&report);
            Ok(code)
        }
        Command::Compile {
            library,
            tour,
            config,
            out,
            scenes,
            variant,
            report,
        } => {
            let paths = InputPaths {
                library: &library,
                tour: &tour,
                config: config.as_deref(),
                scenes: scenes.as_deref(),
            };
            let compilation = cmd_compile(&paths, &out, variant.as_deref())?;
            let summary = compilation.summary();
            eprintln!(
                "tour {} ({}): {:.1} s total",
                summary.tour_id,
                summary.variant,
                summary.total_ms as f64 / 1000.0
            );
            for d in &summary.devices {
                eprintln!("  {:<20} {:>7.1} s", d.device_id, d.duration_ms as f64 / 1000.0);
            }
            for w in &compilation.coverage {
                eprintln!("warning: {w}");
            }
            for w in summary.duration_warnings.iter().chain(&summary.align_warnings) {
                eprintln!("warning: {w}");
            }
            for n in &summary.placement_notes {
                eprintln!("note: {}: {}", n.event_id, n.message);
            }
            if let Some(path) = report {
                let mut body = serde_json::to_string_pretty(&summary).expect("summary serializes");
                body.push('\n');
                std::fs::write(&path, body).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            }
            print_json(&summary);
            Ok(EXIT_OK)
        }
        Command::Simulate {
            timeline,
            config,
            seed,
            jitter_ms,
            epsilon,
            out,
        } => {
            let mut sim = load_config(config.as_deref())?.sim;
            if let Some(s) = seed {
                sim.seed = s;
            }
            if let Some(j) = jitter_ms {
                sim.jitter_ms = ChannelJitter::uniform(j);
            }
            if let Some(e) = epsilon {
                sim.epsilon_ms = e;
            }
            let outcome = cmd_simulate(&timeline, &sim, out.as_deref())?;
            print_json(&outcome.report);
            Ok(if outcome.report.is_clean() { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Place { scene, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let result = cmd_place(&scene, &cfg, out.as_deref())?;
            print_json(&result);
            Ok(EXIT_OK)
        }
        Command::Serve {
            library,
            tour,
            config,
            scenes,
            scene,
            out,
            port,
            ui,
        } => {
            let opts = ServeOptions {
                library,
                tour,
                config,
                scenes,
                scene,
                out_dir: out,
                ui_dir: ui,
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::failed(e.to_string()))?;
            rt.block_on(serve(opts, port))?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
