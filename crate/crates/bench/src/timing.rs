use std::fmt;

/// CPU time consumed by this process so far, in seconds.
pub fn cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec and the clock id is a
    // constant supported on every target this crate builds for.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "process CPU clock unavailable");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Resolution of the process CPU clock, in seconds.
pub fn cpu_resolution() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: as in `cpu_seconds`.
    let rc = unsafe { libc::clock_getres(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc == 0 {
        ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
    } else {
        1e-6
    }
}

/// Runs `f` and returns its result with the CPU seconds it took.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = cpu_seconds();
    let out = f();
    (out, cpu_seconds() - start)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    ReadRaw,
    WriteCache,
    ReadCache,
    Prepare,
    Eval,
    Collect,
    Total,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::ReadRaw => "read_raw",
            Phase::WriteCache => "write_cache",
            Phase::ReadCache => "read_cache",
            Phase::Prepare => "prepare",
            Phase::Eval => "eval",
            Phase::Collect => "collect",
            Phase::Total => "total",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mean CPU time of one phase over several runs.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingRecord {
    pub benchmark: String,
    pub variant: String,
    pub size_param: u64,
    pub phase: Phase,
    pub cpu_seconds_mean: f64,
    pub runs: usize,
    pub result_size: u64,
    pub seed: u64,
    /// Timing slack, in seconds, within which the phase means of one run set
    /// sum to at most the total.
    pub noise_bound: f64,
}

/// Accumulates per-phase samples over repeated runs of one benchmark
/// configuration.
#[derive(Clone, Debug)]
pub struct PhaseTimer {
    benchmark: String,
    variant: String,
    size_param: u64,
    seed: u64,
    samples: Vec<(Phase, f64)>,
    runs: usize,
}

impl PhaseTimer {
    pub fn new(benchmark: &str, variant: &str, size_param: u64, seed: u64) -> PhaseTimer {
        PhaseTimer {
            benchmark: benchmark.to_owned(),
            variant: variant.to_owned(),
            size_param,
            seed,
            samples: Vec::new(),
            runs: 0,
        }
    }

    pub fn add(&mut self, phase: Phase, seconds: f64) {
        self.samples.push((phase, seconds));
    }

    pub fn finish_run(&mut self) {
        self.runs += 1;
    }

    /// One record per phase seen, in phase order.
    pub fn records(&self, result_size: u64) -> Vec<TimingRecord> {
        let runs = self.runs.max(1);
        let mut phases: Vec<Phase> = self.samples.iter().map(|&(p, _)| p).collect();
        phases.sort();
        phases.dedup();
        let noise_bound = cpu_resolution() * 2.0 * (phases.len() as f64 + 1.0);
        phases
            .into_iter()
            .map(|phase| {
                let sum: f64 = self.samples.iter().filter(|&&(p, _)| p == phase).map(|&(_, s)| s).sum();
                TimingRecord {
                    benchmark: self.benchmark.clone(),
                    variant: self.variant.clone(),
                    size_param: self.size_param,
                    phase,
                    cpu_seconds_mean: sum / runs as f64,
                    runs,
                    result_size,
                    seed: self.seed,
                    noise_bound,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_advances_under_work() {
        let (sum, secs) = timed(|| (0..2_000_000u64).map(|x| x.wrapping_mul(x) % 7).sum::<u64>());
        assert!(sum > 0);
        assert!(secs > 0.0);
    }

    #[test]
    fn records_average_over_runs() {
        let mut t = PhaseTimer::new("tc", "tc", 10, 1);
        for s in [1.0, 3.0] {
            t.add(Phase::Eval, s);
            t.add(Phase::Total, s + 1.0);
            t.finish_run();
        }
        let recs = t.records(5);
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].phase, recs[0].cpu_seconds_mean, recs[0].runs), (Phase::Eval, 2.0, 2));
        assert_eq!((recs[1].phase, recs[1].cpu_seconds_mean), (Phase::Total, 3.0));
    }
}
