//! Bottom-up evaluation.
//!
//! Rules are compiled to left-to-right join plans over the literals in the
//! order they are written. Each positive literal is matched either by a scan
//! (nothing bound), a membership probe (everything bound) or a hash index on
//! its bound positions, built on demand and extended as the relation grows.
//! Derived relations are evaluated stratum by stratum with semi-naive
//! iteration: after the first round, a rule is re-fired once per recursive
//! body literal with that literal restricted to the tuples new in the
//! previous round.

mod naive;

pub use naive::eval_naive;

use std::collections::BTreeMap;

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::relation::{Database, Relation, TupleSet};
use crate::stratify::stratify;
use crate::syntax::{RuleSet, Term};
use crate::value::{Constant, Tuple};

type Key = SmallVec<[Constant; 4]>;
type IndexMap = FxHashMap<Key, Vec<u32>>;

/// Well-founded model: facts that are true, and facts that are neither true
/// nor false. Everything else is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WfResult {
    pub true_facts: Database,
    pub undefined_facts: Database,
}

impl WfResult {
    pub fn is_two_valued(&self) -> bool {
        self.undefined_facts.relations().all(Relation::is_empty)
    }
}

/// Least model of `rs` over `db`, restricted to the derived predicates.
/// Base predicates missing from `db` are empty. `db` is not modified.
pub fn eval_stratified(db: &Database, rs: &RuleSet) -> Result<Database> {
    let bases = bases_from_db(db, rs);
    eval_stratified_with(&bases, rs)
}

/// Well-founded model of `rs` over `db` by the alternating fixpoint. Does not
/// require `rs` to be stratifiable.
pub fn eval_well_founded(db: &Database, rs: &RuleSet) -> Result<WfResult> {
    let bases = bases_from_db(db, rs);
    eval_well_founded_with(&bases, rs)
}

pub(crate) fn bases_from_db<'a>(db: &'a Database, rs: &RuleSet) -> BTreeMap<&'a str, &'a Relation> {
    rs.base_preds()
        .iter()
        .filter_map(|name| db.get(name).map(|r| (r.name(), r)))
        .collect()
}

pub(crate) fn eval_stratified_with(bases: &BTreeMap<&str, &Relation>, rs: &RuleSet) -> Result<Database> {
    let strat = stratify(rs)?;
    let mut engine = Engine::new(bases, rs)?;
    for stratum in strat.strata() {
        let preds: FxHashSet<usize> = stratum.iter().map(|p| engine.pred_id[p.as_str()]).collect();
        engine.run_stratum(&preds, None);
    }
    Ok(engine.into_database(rs))
}

pub(crate) fn eval_well_founded_with(bases: &BTreeMap<&str, &Relation>, rs: &RuleSet) -> Result<WfResult> {
    let mut engine = Engine::new(bases, rs)?;
    let derived: FxHashSet<usize> = rs.derived_preds().iter().map(|p| engine.pred_id[p.as_str()]).collect();
    let n = engine.rels.len();

    // gamma(I): least model with negative literals read against I.
    let gamma = |engine: &mut Engine, interp: &[TupleSet]| -> Vec<TupleSet> {
        engine.reset_derived();
        engine.run_stratum(&derived, Some(interp));
        engine.snapshot_derived()
    };

    let mut under: Vec<TupleSet> = vec![TupleSet::default(); n];
    let mut over;
    loop {
        over = gamma(&mut engine, &under);
        let next = gamma(&mut engine, &over);
        let grown = next.iter().zip(&under).any(|(a, b)| a.len() != b.len());
        under = next;
        if !grown {
            break;
        }
    }
    // `over` is gamma(under) for the final underestimate.
    let mut true_facts = Database::new();
    let mut undefined_facts = Database::new();
    for name in rs.derived_preds() {
        let id = engine.pred_id[name.as_str()];
        let arity = engine.rels[id].arity;
        let t = std::mem::take(&mut under[id]);
        let u: TupleSet = over[id].iter().filter(|x| !t.contains(*x)).cloned().collect();
        true_facts.insert_relation(Relation::from_set(name.clone(), arity, t));
        undefined_facts.insert_relation(Relation::from_set(name.clone(), arity, u));
    }
    Ok(WfResult {
        true_facts,
        undefined_facts,
    })
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Const(Constant),
}

#[derive(Debug)]
struct Step {
    pred: usize,
    negated: bool,
    arity: usize,
    /// Positions whose value is known before this literal is matched.
    key_cols: Vec<usize>,
    key_src: Vec<Slot>,
    /// First occurrences of variables in this literal.
    binds: Vec<(usize, usize)>,
    /// Later occurrences within this literal of a variable bound by it.
    checks: Vec<(usize, usize)>,
}

impl Step {
    fn fully_bound(&self) -> bool {
        self.key_cols.len() == self.arity
    }
}

#[derive(Debug)]
struct Plan {
    head_pred: usize,
    head: Vec<Slot>,
    steps: Vec<Step>,
    nvars: usize,
}

/// Positive literals keep their written order. A negated literal is checked
/// as soon as all of its variables are bound, which is at its written
/// position unless it precedes the positive literals that bind it.
fn literal_order(rule: &crate::syntax::Rule) -> Vec<&crate::syntax::Literal> {
    let mut bound: FxHashSet<&str> = FxHashSet::default();
    let mut waiting: Vec<&crate::syntax::Literal> = Vec::new();
    let mut order = Vec::with_capacity(rule.body.len());
    let release = |bound: &FxHashSet<&str>, waiting: &mut Vec<_>, order: &mut Vec<_>| {
        waiting.retain(|l: &&crate::syntax::Literal| {
            let ready = l.vars().all(|v| bound.contains(v));
            if ready {
                order.push(*l);
            }
            !ready
        });
    };
    for lit in &rule.body {
        if lit.negated {
            waiting.push(lit);
        } else {
            order.push(lit);
            bound.extend(lit.vars());
        }
        release(&bound, &mut waiting, &mut order);
    }
    debug_assert!(waiting.is_empty(), "safe rules bind every negated variable");
    order
}

fn compile(rule: &crate::syntax::Rule, pred_id: &FxHashMap<&str, usize>) -> Plan {
    let mut vars: FxHashMap<&str, usize> = FxHashMap::default();
    let mut steps = Vec::with_capacity(rule.body.len());
    for lit in literal_order(rule) {
        let mut step = Step {
            pred: pred_id[lit.predicate.as_str()],
            negated: lit.negated,
            arity: lit.arity(),
            key_cols: Vec::new(),
            key_src: Vec::new(),
            binds: Vec::new(),
            checks: Vec::new(),
        };
        let mut local: FxHashMap<&str, usize> = FxHashMap::default();
        for (col, term) in lit.args.iter().enumerate() {
            match term {
                Term::Const(c) => {
                    step.key_cols.push(col);
                    step.key_src.push(Slot::Const(*c));
                }
                Term::Wildcard => {}
                Term::Var(v) => {
                    if let Some(&slot) = vars.get(v.as_str()) {
                        step.key_cols.push(col);
                        step.key_src.push(Slot::Var(slot));
                    } else if let Some(&slot) = local.get(v.as_str()) {
                        step.checks.push((col, slot));
                    } else {
                        // Negated literals are safe, so all their variables
                        // are already bound.
                        let slot = vars.len() + local.len();
                        local.insert(v, slot);
                        step.binds.push((col, slot));
                    }
                }
            }
        }
        vars.extend(local);
        steps.push(step);
    }
    let head = rule
        .head
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => Slot::Var(vars[v.as_str()]),
            Term::Const(c) => Slot::Const(*c),
            Term::Wildcard => unreachable!("rule safety rejects wildcard heads"),
        })
        .collect();
    Plan {
        head_pred: pred_id[rule.head.predicate.as_str()],
        head,
        steps,
        nvars: vars.len(),
    }
}

enum Tuples<'a> {
    Borrowed(&'a TupleSet),
    Owned(TupleSet),
}

impl Tuples<'_> {
    fn set(&self) -> &TupleSet {
        match self {
            Tuples::Borrowed(s) => s,
            Tuples::Owned(s) => s,
        }
    }
}

struct Index {
    map: IndexMap,
    upto: usize,
}

struct EvalRel<'a> {
    arity: usize,
    derived: bool,
    tuples: Tuples<'a>,
    indexes: FxHashMap<Vec<usize>, Index>,
}

impl EvalRel<'_> {
    fn set(&self) -> &TupleSet {
        self.tuples.set()
    }

    fn ensure_index(&mut self, cols: &[usize]) {
        let set = match &self.tuples {
            Tuples::Borrowed(s) => *s,
            Tuples::Owned(s) => s,
        };
        let index = self.indexes.entry(cols.to_vec()).or_insert_with(|| Index {
            map: IndexMap::default(),
            upto: 0,
        });
        for pos in index.upto..set.len() {
            let t = &set[pos];
            let key: Key = cols.iter().map(|&c| t[c]).collect();
            index.map.entry(key).or_default().push(pos as u32);
        }
        index.upto = set.len();
    }
}

/// Which tuples of a literal's relation a plan variant reads.
#[derive(Clone, Copy)]
struct Window {
    lo: usize,
    hi: usize,
    delta: bool,
}

struct Engine<'a> {
    pred_id: FxHashMap<&'a str, usize>,
    rels: Vec<EvalRel<'a>>,
    plans: Vec<Plan>,
}

impl<'a> Engine<'a> {
    fn new(bases: &BTreeMap<&str, &'a Relation>, rs: &'a RuleSet) -> Result<Engine<'a>> {
        let mut pred_id = FxHashMap::default();
        let mut rels = Vec::new();
        for name in rs.base_preds().iter().chain(rs.derived_preds()) {
            let arity = rs.arity(name).expect("validated rule set has arity for every predicate");
            let derived = rs.is_derived(name);
            let tuples = match bases.get(name.as_str()) {
                Some(rel) if !derived => {
                    if rel.arity() != arity {
                        return Err(Error::ArityConflict {
                            predicate: name.clone(),
                            expected: arity,
                            found: rel.arity(),
                        });
                    }
                    Tuples::Borrowed(rel.tuple_set())
                }
                _ => Tuples::Owned(TupleSet::default()),
            };
            pred_id.insert(name.as_str(), rels.len());
            rels.push(EvalRel {
                arity,
                derived,
                tuples,
                indexes: FxHashMap::default(),
            });
        }
        let plans = rs.rules().iter().map(|r| compile(r, &pred_id)).collect();
        Ok(Engine { pred_id, rels, plans })
    }

    fn reset_derived(&mut self) {
        for rel in &mut self.rels {
            if rel.derived {
                rel.tuples = Tuples::Owned(TupleSet::default());
                rel.indexes.clear();
            }
        }
    }

    fn snapshot_derived(&self) -> Vec<TupleSet> {
        self.rels
            .iter()
            .map(|r| if r.derived { r.set().clone() } else { TupleSet::default() })
            .collect()
    }

    fn into_database(self, rs: &RuleSet) -> Database {
        let mut rels: Vec<Option<EvalRel>> = self.rels.into_iter().map(Some).collect();
        let mut db = Database::new();
        for name in rs.derived_preds() {
            let rel = rels[self.pred_id[name.as_str()]].take().expect("each predicate once");
            let set = match rel.tuples {
                Tuples::Owned(s) => s,
                Tuples::Borrowed(s) => s.clone(),
            };
            db.insert_relation(Relation::from_set(name.clone(), rel.arity, set));
        }
        db
    }

    /// Runs the rules whose heads are in `preds` to fixpoint. With `interp`,
    /// negative literals on derived predicates are read against it instead
    /// of the current state.
    fn run_stratum(&mut self, preds: &FxHashSet<usize>, interp: Option<&[TupleSet]>) {
        let plan_ids: Vec<usize> = (0..self.plans.len())
            .filter(|&i| preds.contains(&self.plans[i].head_pred))
            .collect();
        let n = self.rels.len();
        let mut lo = vec![0usize; n];
        let mut hi: Vec<usize> = self.rels.iter().map(|r| r.set().len()).collect();
        let mut first = true;
        loop {
            // (plan, delta step) pairs to fire this round.
            let mut variants: Vec<(usize, Option<usize>)> = Vec::new();
            for &pi in &plan_ids {
                if first {
                    variants.push((pi, None));
                } else {
                    for (si, step) in self.plans[pi].steps.iter().enumerate() {
                        if !step.negated && preds.contains(&step.pred) && lo[step.pred] < hi[step.pred] {
                            variants.push((pi, Some(si)));
                        }
                    }
                }
            }
            if variants.is_empty() {
                break;
            }
            let delta_indexes = self.prepare_indexes(&variants, &lo, &hi);
            let mut pending: FxHashMap<usize, TupleSet> = FxHashMap::default();
            for &(pi, delta_step) in &variants {
                let plan = &self.plans[pi];
                let ctx = JoinCtx {
                    rels: &self.rels,
                    plan,
                    delta_step,
                    lo: &lo,
                    hi: &hi,
                    delta_indexes: &delta_indexes,
                    interp,
                };
                let out = pending.entry(plan.head_pred).or_default();
                let mut binding: Vec<Constant> = vec![Constant::Int(0); plan.nvars];
                ctx.join(0, &mut binding, out);
            }
            let mut grew = false;
            for (pred, new) in pending {
                let Tuples::Owned(set) = &mut self.rels[pred].tuples else {
                    unreachable!("heads are derived predicates")
                };
                for t in new {
                    grew |= set.insert(t);
                }
            }
            for p in 0..n {
                lo[p] = hi[p];
                hi[p] = self.rels[p].set().len();
            }
            first = false;
            if !grew {
                break;
            }
        }
    }

    /// Brings full-relation indexes up to date and builds the indexes over
    /// the current delta windows needed by `variants`.
    fn prepare_indexes(
        &mut self,
        variants: &[(usize, Option<usize>)],
        lo: &[usize],
        hi: &[usize],
    ) -> FxHashMap<(usize, Vec<usize>), IndexMap> {
        let mut full_needed: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut delta_needed: Vec<(usize, Vec<usize>)> = Vec::new();
        for &(pi, delta_step) in variants {
            for (si, step) in self.plans[pi].steps.iter().enumerate() {
                if step.negated || step.key_cols.is_empty() || step.fully_bound() {
                    continue;
                }
                let need = (step.pred, step.key_cols.clone());
                if delta_step == Some(si) {
                    delta_needed.push(need);
                } else {
                    full_needed.push(need);
                }
            }
        }
        for (pred, cols) in full_needed {
            self.rels[pred].ensure_index(&cols);
        }
        let mut delta = FxHashMap::default();
        for (pred, cols) in delta_needed {
            delta.entry((pred, cols)).or_insert_with_key(|(pred, cols)| {
                let set = self.rels[*pred].set();
                let mut map = IndexMap::default();
                for pos in lo[*pred]..hi[*pred] {
                    let t = &set[pos];
                    let key: Key = cols.iter().map(|&c| t[c]).collect();
                    map.entry(key).or_default().push(pos as u32);
                }
                map
            });
        }
        delta
    }
}

struct JoinCtx<'e, 'a> {
    rels: &'e [EvalRel<'a>],
    plan: &'e Plan,
    delta_step: Option<usize>,
    lo: &'e [usize],
    hi: &'e [usize],
    delta_indexes: &'e FxHashMap<(usize, Vec<usize>), IndexMap>,
    interp: Option<&'e [TupleSet]>,
}

impl JoinCtx<'_, '_> {
    fn join(&self, k: usize, binding: &mut [Constant], out: &mut TupleSet) {
        let Some(step) = self.plan.steps.get(k) else {
            let head: Tuple = self
                .plan
                .head
                .iter()
                .map(|s| resolve(*s, binding))
                .collect();
            if !self.rels[self.plan.head_pred].set().contains(&head) {
                out.insert(head);
            }
            return;
        };
        let key: Key = step.key_src.iter().map(|s| resolve(*s, binding)).collect();
        if step.negated {
            if !self.negation_holds(step, &key) {
                return;
            }
            self.join(k + 1, binding, out);
            return;
        }
        let rel = &self.rels[step.pred];
        let set = rel.set();
        let window = if self.delta_step == Some(k) {
            Window {
                lo: self.lo[step.pred],
                hi: self.hi[step.pred],
                delta: true,
            }
        } else {
            Window {
                lo: 0,
                hi: self.hi[step.pred],
                delta: false,
            }
        };
        if step.fully_bound() {
            // Every position is fixed: key_cols is 0..arity in order.
            if let Some(pos) = set.get_index_of(&key[..]) {
                if pos >= window.lo && pos < window.hi {
                    self.join(k + 1, binding, out);
                }
            }
            return;
        }
        if step.key_cols.is_empty() {
            for pos in window.lo..window.hi {
                if self.bind(step, &set[pos], binding) {
                    self.join(k + 1, binding, out);
                }
            }
            return;
        }
        let positions = if window.delta {
            self.delta_indexes
                .get(&(step.pred, step.key_cols.clone()))
                .and_then(|m| m.get(&key[..]))
        } else {
            rel.indexes.get(&step.key_cols).and_then(|ix| ix.map.get(&key[..]))
        };
        if let Some(positions) = positions {
            for &pos in positions {
                let pos = pos as usize;
                if pos >= window.hi {
                    break;
                }
                if self.bind(step, &set[pos], binding) {
                    self.join(k + 1, binding, out);
                }
            }
        }
    }

    fn bind(&self, step: &Step, tuple: &Tuple, binding: &mut [Constant]) -> bool {
        for &(col, slot) in &step.binds {
            binding[slot] = tuple[col];
        }
        step.checks.iter().all(|&(col, slot)| tuple[col] == binding[slot])
    }

    fn negation_holds(&self, step: &Step, key: &Key) -> bool {
        let rel = &self.rels[step.pred];
        let set = match self.interp {
            Some(interp) if rel.derived => &interp[step.pred],
            _ => rel.set(),
        };
        if step.fully_bound() {
            !set.contains(&key[..])
        } else {
            !set
                .iter()
                .any(|t| step.key_cols.iter().zip(key.iter()).all(|(&c, v)| t[c] == *v))
        }
    }
}

#[inline]
fn resolve(slot: Slot, binding: &[Constant]) -> Constant {
    match slot {
        Slot::Var(i) => binding[i],
        Slot::Const(c) => c,
    }
}
