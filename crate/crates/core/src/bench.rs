//! Benchmark harness: serial vs parallel planning over a sweep of worker
//! counts, plus pool-only (NOOP) overhead runs and synthetic round-structure
//! sweeps.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::engine::{noop_run, EngineConfig, EngineError, SleepJob, WorkerPool};
use crate::mission::{run_mission, ExecutionMode, MissionConfig, MissionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Serial,
    Parallel,
    Noop,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Serial => "S-TVE",
            Variant::Parallel => "P-TVE",
            Variant::Noop => "NOOP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub variant: Variant,
    pub n_workers: usize,
    pub total_ms: f64,
    /// Absent for NOOP rows.
    pub search_ms: Option<f64>,
    /// Serial search time over this row's search time.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,n_workers,total_ms,search_ms,speedup\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.variant.label(),
                r.n_workers,
                r.total_ms,
                opt(r.search_ms),
                opt(r.speedup)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub workers: Vec<usize>,
    /// Runs per measurement; the median is reported.
    pub repeat: usize,
    /// Include pool-only rows for every worker count.
    pub include_noop: bool,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn measure(
    config: &MissionConfig,
    mode: ExecutionMode,
    workers: Option<usize>,
    repeat: usize,
) -> Result<(f64, f64), MissionError> {
    let mut totals = Vec::with_capacity(repeat);
    let mut searches = Vec::with_capacity(repeat);
    for _ in 0..repeat.max(1) {
        let run = run_mission(config, mode, workers)?;
        totals.push(ms(run.total));
        searches.push(ms(run.search));
    }
    Ok((median(&mut totals), median(&mut searches)))
}

/// One S-TVE row, then a P-TVE row (and optionally a NOOP row) per worker
/// count in the order given.
pub fn run_bench(config: &MissionConfig, options: &BenchOptions) -> Result<BenchReport, MissionError> {
    let (serial_total, serial_search) = measure(config, ExecutionMode::Serial, None, options.repeat)?;
    let mut rows = vec![BenchRow {
        variant: Variant::Serial,
        n_workers: 1,
        total_ms: serial_total,
        search_ms: Some(serial_search),
        speedup: Some(1.0),
    }];
    for &n in &options.workers {
        let (total, search) = measure(config, ExecutionMode::Parallel, Some(n), options.repeat)?;
        rows.push(BenchRow {
            variant: Variant::Parallel,
            n_workers: n,
            total_ms: total,
            search_ms: Some(search),
            speedup: Some(serial_search / search),
        });
        if options.include_noop {
            let cfg = EngineConfig {
                n_workers: n,
                ..config.engine
            };
            let mut totals = Vec::with_capacity(options.repeat);
            for _ in 0..options.repeat.max(1) {
                let r = noop_run(cfg)?;
                totals.push(ms(r.startup + r.teardown));
            }
            rows.push(BenchRow {
                variant: Variant::Noop,
                n_workers: n,
                total_ms: median(&mut totals),
                search_ms: None,
                speedup: None,
            });
        }
    }
    Ok(BenchReport { rows })
}

/// `n_workers,phase,wall_ms` rows for pool startup and teardown.
pub fn noop_csv(workers: &[usize], sleep_poll_interval: Duration, repeat: usize) -> Result<String, EngineError> {
    let mut out = String::from("n_workers,phase,wall_ms\n");
    for &n in workers {
        let mut startup = Vec::new();
        let mut teardown = Vec::new();
        for _ in 0..repeat.max(1) {
            let r = noop_run(EngineConfig {
                n_workers: n,
                sleep_poll_interval,
            })?;
            startup.push(ms(r.startup));
            teardown.push(ms(r.teardown));
        }
        let _ = writeln!(out, "{n},startup,{}", median(&mut startup));
        let _ = writeln!(out, "{n},teardown,{}", median(&mut teardown));
    }
    Ok(out)
}

/// Wall time of delegating `n_tasks` jobs of `task_duration` each to a
/// freshly started, awake pool of `n_workers`. Pool startup is excluded.
pub fn synthetic_delegate_time(
    n_tasks: usize,
    n_workers: usize,
    task_duration: Duration,
) -> Result<Duration, EngineError> {
    let mut pool = WorkerPool::<SleepJob>::start(EngineConfig::new(n_workers))?;
    pool.handshake()?;
    let started = Instant::now();
    pool.delegate(vec![SleepJob(task_duration); n_tasks])?;
    let elapsed = started.elapsed();
    pool.shutdown();
    Ok(elapsed)
}
