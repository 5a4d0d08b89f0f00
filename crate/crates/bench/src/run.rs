//! Benchmark runners. Each repeats a configuration, times its phases in
//! process CPU time and returns per-phase means with the computed result.

use std::collections::BTreeSet;
use std::path::Path;

use setrules_analysis::{run_pa, AnalysisReport, PaVariant};
use setrules_core::{infer, loops, parse_rules, rulesets, Binding, Constant, Relation};
use setrules_rbac::{AdminOp, Outcome, RbacState, Variant};

use crate::cache::{is_cache_file, load_facts};
use crate::gen::RbacWorkload;
use crate::timing::{timed, Phase, PhaseTimer, TimingRecord};
use crate::BenchError;

/// Ways of computing the transitive closure of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TcVariant {
    Tc,
    /// Recursive rule body reversed.
    TcRev,
    WhileSome,
    WhileRescan,
}

impl TcVariant {
    pub const ALL: [TcVariant; 4] = [TcVariant::Tc, TcVariant::TcRev, TcVariant::WhileSome, TcVariant::WhileRescan];

    pub fn name(self) -> &'static str {
        match self {
            TcVariant::Tc => "tc",
            TcVariant::TcRev => "tcrev",
            TcVariant::WhileSome => "whilesome",
            TcVariant::WhileRescan => "whilerescan",
        }
    }

    pub fn from_name(name: &str) -> Option<TcVariant> {
        TcVariant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(name))
    }
}

/// The closure of `edges` by `variant`, named `path`.
pub fn closure(variant: TcVariant, edges: &Relation) -> Result<Relation, BenchError> {
    let rules = match variant {
        TcVariant::Tc => rulesets::TRANS,
        TcVariant::TcRev => rulesets::TRANS_REV,
        TcVariant::WhileSome => return Ok(loops::while_some(edges)),
        TcVariant::WhileRescan => return Ok(loops::while_rescan(edges)),
    };
    let rs = parse_rules(rules)?;
    Ok(infer(&rs, &Binding::new().bind("edge", edges), &["path"])?.remove(0))
}

#[derive(Clone, Debug)]
pub struct TcRun {
    pub records: Vec<TimingRecord>,
    /// Closure pairs in canonical order.
    pub result: Vec<(Constant, Constant)>,
}

/// Times `repeats` closure computations of `edges`. Phases: `prepare`
/// (rule parsing and input binding), `eval`, `collect` (sorted pair list)
/// and `total`.
pub fn run_tc_benchmark(
    variant: TcVariant,
    edges: &Relation,
    size_param: u64,
    seed: u64,
    repeats: usize,
) -> Result<TcRun, BenchError> {
    let mut timer = PhaseTimer::new("tc", variant.name(), size_param, seed);
    let mut result = Vec::new();
    for _ in 0..repeats.max(1) {
        let (out, total) = timed(|| -> Result<_, BenchError> {
            let (prepared, t_prep) = timed(|| -> Result<_, BenchError> {
                let rules = match variant {
                    TcVariant::Tc => Some(parse_rules(rulesets::TRANS)?),
                    TcVariant::TcRev => Some(parse_rules(rulesets::TRANS_REV)?),
                    _ => None,
                };
                Ok(rules)
            });
            let rules = prepared?;
            let (path, t_eval) = timed(|| -> Result<Relation, BenchError> {
                Ok(match (&rules, variant) {
                    (Some(rs), _) => infer(rs, &Binding::new().bind("edge", edges), &["path"])?.remove(0),
                    (None, TcVariant::WhileSome) => loops::while_some(edges),
                    (None, _) => loops::while_rescan(edges),
                })
            });
            let path = path?;
            let (pairs, t_collect) = timed(|| {
                let mut pairs: Vec<(Constant, Constant)> = path.pairs().collect();
                pairs.sort_unstable();
                pairs
            });
            Ok((pairs, [(Phase::Prepare, t_prep), (Phase::Eval, t_eval), (Phase::Collect, t_collect)]))
        });
        let (pairs, phases) = out?;
        for (phase, secs) in phases {
            timer.add(phase, secs);
        }
        timer.add(Phase::Total, total);
        timer.finish_run();
        result = pairs;
    }
    Ok(TcRun {
        records: timer.records(result.len() as u64),
        result,
    })
}

#[derive(Clone, Debug)]
pub struct RbacRun {
    pub records: Vec<TimingRecord>,
    /// The answer to every query op, in workload order.
    pub answers: Vec<BTreeSet<Constant>>,
}

/// Runs the workload `repeats` times on fresh states. Phases: `prepare`
/// (loading the initial state), `eval` (time spent answering queries),
/// `collect` (gathering answers) and `total` (the whole workload, updates
/// included).
pub fn run_rbac_benchmark(
    variant: Variant,
    workload: &RbacWorkload,
    seed: u64,
    repeats: usize,
) -> Result<RbacRun, BenchError> {
    let n_queries = workload
        .ops
        .iter()
        .filter(|op| matches!(op, AdminOp::QueryAuthorizedUsers(_)))
        .count();
    let mut timer = PhaseTimer::new("rbac", variant.name(), n_queries as u64, seed);
    let mut answers = Vec::new();
    for _ in 0..repeats.max(1) {
        let mut t_eval = 0.0;
        let mut t_collect = 0.0;
        let mut t_prep = 0.0;
        let mut run_answers = Vec::with_capacity(n_queries);
        let (done, total) = timed(|| -> Result<(), BenchError> {
            let (state, secs) = timed(|| RbacState::with_content(variant, &workload.initial));
            t_prep = secs;
            let mut state = state?;
            for &op in &workload.ops {
                match op {
                    AdminOp::QueryAuthorizedUsers(role) => {
                        let (users, secs) = timed(|| state.authorized_users(role));
                        t_eval += secs;
                        let (_, secs) = timed(|| run_answers.push(users));
                        t_collect += secs;
                    }
                    _ => {
                        state.apply(op)?;
                    }
                }
            }
            Ok(())
        });
        done?;
        timer.add(Phase::Prepare, t_prep);
        timer.add(Phase::Eval, t_eval);
        timer.add(Phase::Collect, t_collect);
        timer.add(Phase::Total, total);
        timer.finish_run();
        answers = run_answers.into_iter().collect::<Result<_, _>>()?;
    }
    Ok(RbacRun {
        records: timer.records(answers.len() as u64),
        answers,
    })
}

/// Runs every variant on the same workload and checks that all answer every
/// query identically.
pub fn compare_rbac_variants(
    variants: &[Variant],
    workload: &RbacWorkload,
    seed: u64,
    repeats: usize,
) -> Result<Vec<RbacRun>, BenchError> {
    let runs = variants
        .iter()
        .map(|&v| run_rbac_benchmark(v, workload, seed, repeats))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(first) = runs.first() {
        for (v, run) in variants.iter().zip(&runs) {
            if run.answers != first.answers {
                return Err(BenchError::Invariant(format!(
                    "{} answers differ from {}",
                    v.name(),
                    variants[0].name()
                )));
            }
        }
    }
    Ok(runs)
}

/// The answers a state gives, applied op by op, without timing.
pub fn replay(variant: Variant, workload: &RbacWorkload) -> Result<Vec<BTreeSet<Constant>>, BenchError> {
    let mut state = RbacState::with_content(variant, &workload.initial)?;
    let mut answers = Vec::new();
    for &op in &workload.ops {
        if let Outcome::Users(users) = state.apply(op)? {
            answers.push(users);
        }
    }
    Ok(answers)
}

#[derive(Clone, Debug)]
pub struct PaRun {
    pub records: Vec<TimingRecord>,
    pub report: AnalysisReport,
}

/// Times reading the fact file (raw or cached), the analysis and rendering
/// of the report row.
pub fn run_pa_benchmark(fact_file: &Path, variant: PaVariant, repeats: usize) -> Result<PaRun, BenchError> {
    let mut timer = PhaseTimer::new("pa", variant.name(), 0, 0);
    let mut last = None;
    let mut facts = 0;
    let read_phase = if is_cache_file(fact_file)? { Phase::ReadCache } else { Phase::ReadRaw };
    for _ in 0..repeats.max(1) {
        let (out, total) = timed(|| -> Result<_, BenchError> {
            let (db, t_read) = timed(|| load_facts(fact_file));
            let db = db?;
            let (report, t_eval) = timed(|| run_pa(&db, variant));
            let report = report?;
            let (_, t_collect) = timed(|| report.csv_row());
            Ok((db.fact_count(), report, [(read_phase, t_read), (Phase::Eval, t_eval), (Phase::Collect, t_collect)]))
        });
        let (n, report, phases) = out?;
        for (phase, secs) in phases {
            timer.add(phase, secs);
        }
        timer.add(Phase::Total, total);
        timer.finish_run();
        facts = n as u64;
        last = Some(report);
    }
    let report = last.expect("at least one run");
    let mut records = timer.records(report.num_defined as u64);
    for r in &mut records {
        r.size_param = facts;
    }
    Ok(PaRun { records, report })
}
