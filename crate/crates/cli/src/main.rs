use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use glider_tve::bench::{noop_csv, run_bench, BenchOptions};
use glider_tve::engine::EngineConfig;
use glider_tve::grid::build_grid;
use glider_tve::mission::{parse_mission, run_mission, ExecutionMode, MissionConfig, MissionError};
use glider_tve::profiles::generate_dive_profiles;
use glider_tve::report::{field_csv, path_to_csv, path_to_xml, path_trace_csv, profiles_csv};
use glider_tve::search::SearchError;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const EXIT_NO_PATH: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "glider-tve",
    version,
    about = "Time-varying-environment path planner for underwater gliders"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan a path and write path.xml, path.csv and trace.csv
    Plan {
        #[command(flatten)]
        mission: MissionArg,
        #[command(flatten)]
        mode: ModeArgs,
        /// Worker count for parallel runs (defaults to the mission's engine setting)
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Time serial and parallel planning over a list of worker counts
    Bench {
        #[command(flatten)]
        mission: MissionArg,
        /// Worker counts, e.g. `1,2,4` or `1-24`
        #[arg(long, value_parser = parse_worker_list, default_value = "1-24")]
        workers: WorkerList,
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        /// Also time bare pool startup/teardown for each count
        #[arg(long)]
        noop: bool,
        /// Write bench.csv here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time worker pool startup and teardown without any planning
    Noop {
        #[arg(long, value_parser = parse_worker_list, default_value = "1-24")]
        workers: WorkerList,
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        /// Poll interval of sleeping workers
        #[arg(long, default_value_t = 100)]
        sleep_poll_ms: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the current field on the mission lattice
    Field {
        #[command(flatten)]
        mission: MissionArg,
        /// Comma-separated sample times
        #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
        times: Vec<f64>,
        /// Comma-separated sample depths (m)
        #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
        depths: Vec<f64>,
        /// Sample this many uniformly random points in the mission box instead of the lattice
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the generated dive profiles
    Profiles {
        #[command(flatten)]
        mission: MissionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct MissionArg {
    /// Mission XML file
    #[arg(long)]
    mission: PathBuf,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct ModeArgs {
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    parallel: bool,
}

impl ModeArgs {
    fn resolve(&self, config: &MissionConfig) -> ExecutionMode {
        if self.serial {
            ExecutionMode::Serial
        } else if self.parallel {
            ExecutionMode::Parallel
        } else {
            config.mode
        }
    }
}

#[derive(Debug, Clone)]
struct WorkerList(Vec<usize>);

fn parse_worker_list(raw: &str) -> Result<WorkerList, String> {
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let count = |s: &str| -> Result<usize, String> {
            match s.trim().parse::<usize>() {
                Ok(0) => Err("worker counts must be at least 1".into()),
                Ok(n) => Ok(n),
                Err(_) => Err(format!("`{s}` is not a worker count")),
            }
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (count(lo)?, count(hi)?);
                if lo > hi {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(lo..=hi);
            }
            None => out.push(count(part)?),
        }
    }
    if out.is_empty() {
        return Err("no worker counts given".into());
    }
    Ok(WorkerList(out))
}

/// Error plus the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: e.to_string(),
        }
    }
}

impl From<MissionError> for Failure {
    fn from(e: MissionError) -> Self {
        let code = match &e {
            MissionError::Config(_) | MissionError::Grid(_) => EXIT_CONFIG,
            MissionError::Search(SearchError::NoPath) => EXIT_NO_PATH,
            MissionError::Search(_) | MissionError::Engine(_) => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(arg: &MissionArg) -> Result<MissionConfig, Failure> {
    parse_mission(&arg.mission).map_err(|e| Failure::config(format!("{}: {e}", arg.mission.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::runtime(format!("writing {}: {e}", path.display())))
}

/// Writes to `dir/name` when an output directory is given, else stdout.
fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("creating {}: {e}", dir.display())))?;
            write_file(&dir.join(name), contents)
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Plan {
            mission,
            mode,
            workers,
            out,
        } => {
            let config = load(&mission)?;
            let mode = mode.resolve(&config);
            let run = run_mission(&config, mode, workers)?;
            fs::create_dir_all(&out).map_err(|e| Failure::runtime(format!("creating {}: {e}", out.display())))?;
            write_file(&out.join("path.xml"), &path_to_xml(&run.path))?;
            write_file(&out.join("path.csv"), &path_to_csv(&run.path))?;
            write_file(
                &out.join("trace.csv"),
                &path_trace_csv(&run.path, &run.mission.graph, &run.mission.model),
            )?;
            eprintln!(
                "{} plan: {} legs, arrival {:.6}, {} nodes settled, {} edge evaluations, search {:.1} ms",
                mode.name(),
                run.path.legs.len(),
                run.path.arrival,
                run.stats.settled,
                run.stats.edge_evaluations,
                run.search.as_secs_f64() * 1e3
            );
            Ok(())
        }
        Command::Bench {
            mission,
            workers,
            repeat,
            noop,
            out,
        } => {
            let config = load(&mission)?;
            let report = run_bench(
                &config,
                &BenchOptions {
                    workers: workers.0,
                    repeat,
                    include_noop: noop,
                },
            )?;
            emit(out.as_deref(), "bench.csv", &report.to_csv())
        }
        Command::Noop {
            workers,
            repeat,
            sleep_poll_ms,
            out,
        } => {
            let interval = Duration::from_millis(sleep_poll_ms);
            EngineConfig {
                n_workers: 1,
                sleep_poll_interval: interval,
            }
            .validate()
            .map_err(Failure::config)?;
            let csv = noop_csv(&workers.0, interval, repeat).map_err(Failure::runtime)?;
            emit(out.as_deref(), "noop.csv", &csv)
        }
        Command::Field {
            mission,
            times,
            depths,
            random,
            seed,
            out,
        } => {
            let config = load(&mission)?;
            let points: Vec<[f64; 2]> = match random {
                Some(n) => {
                    let g = &config.grid;
                    let mut rng = StdRng::seed_from_u64(seed);
                    (0..n)
                        .map(|_| [rng.gen_range(g.x_min..=g.x_max), rng.gen_range(g.y_min..=g.y_max)])
                        .collect()
                }
                None => build_grid(&config.grid)
                    .map_err(Failure::config)?
                    .nodes()
                    .iter()
                    .map(|n| [n.x, n.y])
                    .collect(),
            };
            let csv = field_csv(&config.env, &points, &times, &depths).map_err(Failure::config)?;
            emit(out.as_deref(), "field.csv", &csv)
        }
        Command::Profiles { mission, out } => {
            let config = load(&mission)?;
            let profiles = generate_dive_profiles(&config.profiles).map_err(Failure::config)?;
            emit(out.as_deref(), "profiles.csv", &profiles_csv(&profiles))
        }
    }
}

fn main() -> ExitCode {
    // usage errors share the config-error code so that 2 always means no path
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
