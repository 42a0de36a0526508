//! Master/worker task pool with barrier-synchronised delegation rounds and
//! sleep-mode workers.
//!
//! Each worker owns an ordered channel from the master and shares a reply
//! channel back to it. All messages are values; workers hold no state shared
//! with the master. An AWAKE worker blocks on its channel. An ASLEEP worker
//! polls it with `sleep_poll_interval` between checks, so anything sent to
//! it is picked up with up to one interval of extra latency.
//!
//! [`WorkerPool::delegate`] dispatches tasks in rounds of at most
//! `n_workers` and waits for the whole round before sending the next one.

use std::panic::{self, AssertUnwindSafe};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cost::{traverse_edge, IntegrationParams, ProfileEvaluator, Traversal, VehicleParams};
use crate::grid::Segment;
use crate::ocean::FlowEnvironment;
use crate::profiles::DiveProfile;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to spawn worker {worker}: {source}")]
    Spawn {
        worker: usize,
        #[source]
        source: std::io::Error,
    },

    #[error("workers failed to return results for tasks {missing:?}")]
    WorkerFailed { missing: Vec<usize> },

    #[error("no tasks to delegate")]
    EmptyBatch,
}

/// A unit of work the pool can run.
pub trait Job: Send + 'static {
    type Output: Send + 'static;

    fn run(self) -> Self::Output;
}

/// Self-contained request to fly one edge with one dive profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Task {
    pub id: usize,
    pub segment: Segment,
    pub departure: f64,
    pub profile: DiveProfile,
    pub env: FlowEnvironment,
    pub vehicle: VehicleParams,
    pub integration: IntegrationParams,
}

impl Task {
    pub fn evaluate(&self) -> Traversal {
        traverse_edge(
            &self.segment,
            self.departure,
            &self.profile,
            &self.env,
            &self.vehicle,
            &self.integration,
        )
    }
}

impl Job for Task {
    type Output = Traversal;

    fn run(self) -> Traversal {
        self.evaluate()
    }
}

/// Synthetic job that just sleeps; used for overhead and round-structure
/// measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SleepJob(pub Duration);

impl Job for SleepJob {
    type Output = ();

    fn run(self) {
        if !self.0.is_zero() {
            thread::sleep(self.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskResult<O> {
    pub task_id: usize,
    pub output: O,
    pub worker: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub n_workers: usize,
    pub sleep_poll_interval: Duration,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            n_workers: 20,
            sleep_poll_interval: Duration::from_millis(100),
        }
    }
}

impl EngineConfig {
    pub fn new(n_workers: usize) -> Self {
        Self {
            n_workers,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n_workers == 0 {
            return Err(EngineError::InvalidConfig("n_workers must be >= 1".into()));
        }
        if self.sleep_poll_interval.is_zero() {
            return Err(EngineError::InvalidConfig("sleep_poll_interval must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkerState {
    Asleep,
    Awake,
    Busy,
}

/// Number of delegation rounds for `n_tasks` spread over `n_workers`.
pub fn rounds_required(n_tasks: usize, n_workers: usize) -> usize {
    assert!(n_workers > 0, "rounds_required needs at least one worker");
    n_tasks.div_ceil(n_workers)
}

/// Task count of each delegation round.
pub fn round_sizes(n_tasks: usize, n_workers: usize) -> Vec<usize> {
    let rounds = rounds_required(n_tasks, n_workers);
    (0..rounds).map(|r| (n_tasks - r * n_workers).min(n_workers)).collect()
}

enum Command<J> {
    Run { task_id: usize, job: J },
    Sleep,
    Wake,
    Ping,
    Shutdown,
}

enum Reply<O> {
    Done {
        worker: usize,
        task_id: usize,
        output: Option<O>,
        elapsed: Duration,
    },
    Pong {
        worker: usize,
    },
}

pub struct WorkerPool<J: Job> {
    config: EngineConfig,
    senders: Vec<Sender<Command<J>>>,
    replies: Receiver<Reply<J::Output>>,
    handles: Vec<JoinHandle<()>>,
    states: Vec<WorkerState>,
}

impl<J: Job> std::fmt::Debug for WorkerPool<J> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool")
            .field("config", &self.config)
            .field("states", &self.states)
            .finish()
    }
}

impl<J: Job> WorkerPool<J> {
    /// Spawns `n_workers` workers, all AWAKE.
    pub fn start(config: EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let (reply_tx, replies) = mpsc::channel();
        let mut senders = Vec::with_capacity(config.n_workers);
        let mut handles = Vec::with_capacity(config.n_workers);
        for worker in 0..config.n_workers {
            let (tx, rx) = mpsc::channel();
            let reply_tx = reply_tx.clone();
            let interval = config.sleep_poll_interval;
            let handle = thread::Builder::new()
                .name(format!("tve-worker-{worker}"))
                .spawn(move || worker_loop(worker, rx, reply_tx, interval))
                .map_err(|source| EngineError::Spawn { worker, source })?;
            senders.push(tx);
            handles.push(handle);
        }
        Ok(Self {
            config,
            senders,
            replies,
            handles,
            states: vec![WorkerState::Awake; config.n_workers],
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn n_workers(&self) -> usize {
        self.senders.len()
    }

    /// Master-side view of every worker's state.
    pub fn states(&self) -> &[WorkerState] {
        &self.states
    }

    pub fn count_in(&self, state: WorkerState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Sends every idle worker to sleep.
    pub fn sleep_all(&mut self) {
        for (worker, tx) in self.senders.iter().enumerate() {
            if self.states[worker] != WorkerState::Busy && tx.send(Command::Sleep).is_ok() {
                self.states[worker] = WorkerState::Asleep;
            }
        }
    }

    /// Wakes the lowest-numbered sleeping workers until `min(k, n_workers)`
    /// are AWAKE. Returns how many were woken.
    pub fn wake(&mut self, k: usize) -> usize {
        let target = k.min(self.n_workers());
        let mut awake = self.count_in(WorkerState::Awake);
        let mut woken = 0;
        for (worker, tx) in self.senders.iter().enumerate() {
            if awake >= target {
                break;
            }
            if self.states[worker] == WorkerState::Asleep && tx.send(Command::Wake).is_ok() {
                self.states[worker] = WorkerState::Awake;
                awake += 1;
                woken += 1;
            }
        }
        woken
    }

    /// Round trip to every worker; returns once all have answered.
    pub fn handshake(&mut self) -> Result<(), EngineError> {
        let mut pending = vec![false; self.n_workers()];
        for (worker, tx) in self.senders.iter().enumerate() {
            pending[worker] = tx.send(Command::Ping).is_ok();
        }
        let mut outstanding = pending.iter().filter(|&&p| p).count();
        while outstanding > 0 {
            match self.replies.recv() {
                Ok(Reply::Pong { worker }) if pending[worker] => {
                    pending[worker] = false;
                    outstanding -= 1;
                }
                Ok(_) => {}
                Err(_) => break,
            }
        }
        Ok(())
    }

    /// Runs `jobs` in barrier-synchronised rounds. Task ids are the job
    /// positions; results come back ordered by id.
    pub fn delegate(&mut self, jobs: Vec<J>) -> Result<Vec<TaskResult<J::Output>>, EngineError> {
        if jobs.is_empty() {
            return Err(EngineError::EmptyBatch);
        }
        let n_tasks = jobs.len();
        let width = self.n_workers();
        let mut slots: Vec<Option<TaskResult<J::Output>>> = (0..n_tasks).map(|_| None).collect();
        let mut failed = Vec::new();
        let mut jobs = jobs.into_iter().enumerate().peekable();

        while jobs.peek().is_some() {
            let mut in_flight = 0;
            let mut previous = Vec::with_capacity(width);
            for worker in 0..width {
                let Some((task_id, job)) = jobs.next() else { break };
                previous.push((worker, self.states[worker]));
                if self.senders[worker].send(Command::Run { task_id, job }).is_ok() {
                    self.states[worker] = WorkerState::Busy;
                    in_flight += 1;
                } else {
                    failed.push(task_id);
                }
            }
            while in_flight > 0 {
                match self.replies.recv() {
                    Ok(Reply::Done {
                        worker,
                        task_id,
                        output,
                        elapsed,
                    }) => {
                        in_flight -= 1;
                        match output {
                            Some(output) => {
                                slots[task_id] = Some(TaskResult {
                                    task_id,
                                    output,
                                    worker,
                                    elapsed,
                                })
                            }
                            None => failed.push(task_id),
                        }
                    }
                    Ok(Reply::Pong { .. }) => {}
                    Err(_) => break,
                }
            }
            for (worker, state) in previous {
                self.states[worker] = state;
            }
        }

        if slots.iter().any(Option::is_none) {
            let mut missing: Vec<usize> = slots
                .iter()
                .enumerate()
                .filter_map(|(id, s)| s.is_none().then_some(id))
                .collect();
            missing.extend(failed);
            missing.sort_unstable();
            missing.dedup();
            return Err(EngineError::WorkerFailed { missing });
        }
        Ok(slots.into_iter().flatten().collect())
    }

    /// Stops and joins all workers.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        for tx in &self.senders {
            let _ = tx.send(Command::Shutdown);
        }
        for handle in self.handles.drain(..) {
            let _ = handle.join();
        }
        self.senders.clear();
    }
}

impl<J: Job> Drop for WorkerPool<J> {
    fn drop(&mut self) {
        self.stop();
    }
}

fn worker_loop<J: Job>(
    worker: usize,
    commands: Receiver<Command<J>>,
    replies: Sender<Reply<J::Output>>,
    sleep_interval: Duration,
) {
    let mut asleep = false;
    loop {
        let command = if asleep {
            match commands.try_recv() {
                Ok(c) => c,
                Err(TryRecvError::Empty) => {
                    thread::sleep(sleep_interval);
                    continue;
                }
                Err(TryRecvError::Disconnected) => return,
            }
        } else {
            match commands.recv() {
                Ok(c) => c,
                Err(_) => return,
            }
        };

        match command {
            Command::Run { task_id, job } => {
                let started = Instant::now();
                let output = panic::catch_unwind(AssertUnwindSafe(|| job.run())).ok();
                let reply = Reply::Done {
                    worker,
                    task_id,
                    output,
                    elapsed: started.elapsed(),
                };
                if replies.send(reply).is_err() {
                    return;
                }
            }
            Command::Sleep => asleep = true,
            Command::Wake => asleep = false,
            Command::Ping => {
                if replies.send(Reply::Pong { worker }).is_err() {
                    return;
                }
            }
            Command::Shutdown => return,
        }
    }
}

impl ProfileEvaluator for WorkerPool<Task> {
    fn evaluate(&mut self, tasks: Vec<Task>) -> Result<Vec<Traversal>, EngineError> {
        Ok(self.delegate(tasks)?.into_iter().map(|r| r.output).collect())
    }
}

/// Startup and teardown timings of a pool that does no work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoopReport {
    pub n_workers: usize,
    pub startup: Duration,
    pub teardown: Duration,
}

/// Starts a pool, waits for every worker to answer a handshake, then shuts
/// it down.
pub fn noop_run(config: EngineConfig) -> Result<NoopReport, EngineError> {
    let started = Instant::now();
    let mut pool = WorkerPool::<SleepJob>::start(config)?;
    pool.handshake()?;
    let startup = started.elapsed();
    let stopping = Instant::now();
    pool.shutdown();
    Ok(NoopReport {
        n_workers: config.n_workers,
        startup,
        teardown: stopping.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Square(u64);

    impl Job for Square {
        type Output = u64;

        fn run(self) -> u64 {
            self.0 * self.0
        }
    }

    struct MaybePanic(bool);

    impl Job for MaybePanic {
        type Output = ();

        fn run(self) {
            if self.0 {
                panic!("injected failure");
            }
        }
    }

    #[test]
    fn rounds_match_ceil_division() {
        assert_eq!(rounds_required(20, 5), 4);
        assert_eq!(rounds_required(20, 6), 4);
        assert_eq!(rounds_required(20, 7), 3);
        assert_eq!(rounds_required(20, 10), 2);
        assert_eq!(rounds_required(20, 20), 1);
        assert_eq!(rounds_required(20, 47), 1);
        assert_eq!(round_sizes(20, 7), vec![7, 7, 6]);
        assert_eq!(round_sizes(20, 6), vec![6, 6, 6, 2]);
        for n in 1..30 {
            assert_eq!(rounds_required(n, n), 1);
        }
    }

    #[test]
    fn start_pool_sizes() {
        let pool = WorkerPool::<SleepJob>::start(EngineConfig::new(1)).unwrap();
        assert_eq!(pool.n_workers(), 1);
        let pool = WorkerPool::<SleepJob>::start(EngineConfig::new(47)).unwrap();
        assert_eq!(pool.n_workers(), 47);
        assert_eq!(pool.count_in(WorkerState::Awake), 47);
        assert!(matches!(
            WorkerPool::<SleepJob>::start(EngineConfig::new(0)),
            Err(EngineError::InvalidConfig(_))
        ));
    }

    #[test]
    fn sleep_and_wake_counts() {
        let mut pool = WorkerPool::<SleepJob>::start(EngineConfig {
            n_workers: 47,
            sleep_poll_interval: Duration::from_millis(5),
        })
        .unwrap();
        pool.sleep_all();
        assert_eq!(pool.count_in(WorkerState::Asleep), 47);
        assert_eq!(pool.wake(0), 0);
        assert_eq!(pool.count_in(WorkerState::Asleep), 47);
        assert_eq!(pool.wake(20), 20);
        assert_eq!(pool.count_in(WorkerState::Awake), 20);
        assert_eq!(pool.count_in(WorkerState::Asleep), 27);
        assert!(pool.states()[..20].iter().all(|&s| s == WorkerState::Awake));
        assert_eq!(pool.wake(100), 27);
        assert_eq!(pool.count_in(WorkerState::Awake), 47);
        // asleep workers still answer
        pool.sleep_all();
        pool.handshake().unwrap();
    }

    #[test]
    fn results_ordered_by_task_id() {
        let mut pool = WorkerPool::start(EngineConfig::new(3)).unwrap();
        let results = pool.delegate((0..10).map(Square).collect()).unwrap();
        assert_eq!(results.len(), 10);
        for (i, r) in results.iter().enumerate() {
            assert_eq!(r.task_id, i);
            assert_eq!(r.output, (i * i) as u64);
            // round-robin within a round
            assert_eq!(r.worker, i % 3);
        }
        assert_eq!(pool.count_in(WorkerState::Awake), 3);
        assert!(matches!(pool.delegate(Vec::new()), Err(EngineError::EmptyBatch)));
    }

    #[test]
    fn failed_task_is_reported() {
        let mut pool = WorkerPool::start(EngineConfig::new(2)).unwrap();
        let jobs = vec![MaybePanic(false), MaybePanic(true), MaybePanic(false), MaybePanic(true)];
        let prev = panic::take_hook();
        panic::set_hook(Box::new(|_| {}));
        let r = pool.delegate(jobs);
        panic::set_hook(prev);
        match r {
            Err(EngineError::WorkerFailed { missing }) => assert_eq!(missing, vec![1, 3]),
            other => panic!("unexpected {other:?}"),
        }
        // pool keeps working afterwards
        assert_eq!(pool.delegate(vec![MaybePanic(false)]).unwrap().len(), 1);
    }

    #[test]
    fn asleep_worker_latency_is_bounded_by_interval() {
        let interval = Duration::from_millis(40);
        let mut pool = WorkerPool::<SleepJob>::start(EngineConfig {
            n_workers: 1,
            sleep_poll_interval: interval,
        })
        .unwrap();
        pool.sleep_all();
        thread::sleep(Duration::from_millis(10));
        let t = Instant::now();
        pool.delegate(vec![SleepJob(Duration::ZERO)]).unwrap();
        let asleep_latency = t.elapsed();
        assert!(
            asleep_latency <= interval + Duration::from_millis(60),
            "{asleep_latency:?}"
        );

        pool.wake(1);
        thread::sleep(interval * 2);
        let t = Instant::now();
        pool.delegate(vec![SleepJob(Duration::ZERO)]).unwrap();
        let awake_latency = t.elapsed();
        assert!(awake_latency < interval, "{awake_latency:?}");
    }

    #[test]
    fn noop_run_reports() {
        let r = noop_run(EngineConfig::new(4)).unwrap();
        assert_eq!(r.n_workers, 4);
        assert!(noop_run(EngineConfig::new(0)).is_err());
    }
}
