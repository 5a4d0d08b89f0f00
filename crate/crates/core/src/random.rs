//! Seeded random programs and databases for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::relation::{Database, Relation};
use crate::syntax::{Literal, Rule, RuleSet, Term};
use crate::value::{Constant, Tuple};

#[derive(Clone, Copy, Debug)]
pub struct ProgramShape {
    /// Base plus derived predicates.
    pub max_preds: usize,
    pub max_rules: usize,
    pub max_constants: usize,
    pub max_body: usize,
    pub max_facts: usize,
    /// Allow negated body literals.
    pub negation: bool,
    /// Restrict negation so the program is stratifiable.
    pub stratified: bool,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            max_preds: 4,
            max_rules: 6,
            max_constants: 8,
            max_body: 3,
            max_facts: 12,
            negation: true,
            stratified: true,
        }
    }
}

/// A random rule set and a database for its base predicates.
///
/// Derived predicates are numbered; positive literals may refer to derived
/// predicates with the same or a lower number (so recursion happens). With
/// `stratified`, negated literals refer only to strictly lower ones or to
/// base predicates; otherwise to any predicate.
pub fn random_program<R: Rng>(rng: &mut R, shape: &ProgramShape) -> (RuleSet, Database) {
    let total = rng.gen_range(2..=shape.max_preds.max(2));
    let n_base = rng.gen_range(1..total);
    let n_derived = total - n_base;
    let base: Vec<(String, usize)> = (0..n_base).map(|i| (format!("b{i}"), rng.gen_range(1..=2))).collect();
    let derived: Vec<(String, usize)> = (0..n_derived).map(|i| (format!("d{i}"), rng.gen_range(1..=2))).collect();
    let n_consts = rng.gen_range(1..=shape.max_constants.max(1));
    let constant = |rng: &mut R| Constant::Int(rng.gen_range(0..n_consts as i64));

    let n_rules = rng.gen_range(n_derived..=shape.max_rules.max(n_derived));
    let mut rules = Vec::with_capacity(n_rules);
    for r in 0..n_rules {
        // Every derived predicate gets at least one rule.
        let head_idx = if r < n_derived { r } else { rng.gen_range(0..n_derived) };
        let positive_choices: Vec<&(String, usize)> = base.iter().chain(&derived[..=head_idx]).collect();
        let negative_choices: Vec<&(String, usize)> = if shape.stratified {
            base.iter().chain(&derived[..head_idx]).collect()
        } else {
            base.iter().chain(&derived).collect()
        };

        let mut vars: Vec<String> = Vec::new();
        let mut body = Vec::new();
        let n_body = rng.gen_range(1..=shape.max_body.max(1));
        for b in 0..n_body {
            let negate = b > 0 && shape.negation && !vars.is_empty() && rng.gen_bool(0.3);
            let (pred, arity) = if negate {
                *negative_choices.choose(rng).expect("base predicates exist")
            } else {
                *positive_choices.choose(rng).expect("base predicates exist")
            };
            let mut args = Vec::with_capacity(*arity);
            for _ in 0..*arity {
                let roll = rng.gen_range(0..10);
                let term = if roll == 0 {
                    Term::Const(constant(rng))
                } else if negate || (roll < 6 && !vars.is_empty()) {
                    if vars.is_empty() {
                        Term::Const(constant(rng))
                    } else {
                        Term::Var(vars.choose(rng).unwrap().clone())
                    }
                } else {
                    let v = format!("V{}", vars.len());
                    vars.push(v.clone());
                    Term::Var(v)
                };
                args.push(term);
            }
            let lit = Literal::new(pred, args);
            body.push(if negate { lit.negate() } else { lit });
        }
        let (hpred, harity) = &derived[head_idx];
        let head_args = (0..*harity)
            .map(|_| {
                if vars.is_empty() || rng.gen_range(0..8) == 0 {
                    Term::Const(constant(rng))
                } else {
                    Term::Var(vars.choose(rng).unwrap().clone())
                }
            })
            .collect();
        rules.push(Rule::new(Literal::new(hpred, head_args), body));
    }
    let rs = RuleSet::new("random", rules).expect("generated rules are safe and arity-consistent");

    let mut db = Database::new();
    for (name, arity) in &base {
        let n = rng.gen_range(0..=shape.max_facts);
        let tuples: Vec<Tuple> = (0..n).map(|_| (0..*arity).map(|_| constant(rng)).collect()).collect();
        let mut rel = Relation::new(name.clone(), *arity);
        for t in tuples {
            rel.insert(t).expect("arity matches");
        }
        db.insert_relation(rel);
    }
    (rs, db)
}

/// `m` distinct random directed edges over vertices `0..n`, no self-loops.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, m: usize) -> Relation {
    let n = n.max(1) as i64;
    let cap = (n * (n - 1)) as usize;
    let m = m.min(cap);
    let mut rel = Relation::new("edge", 2);
    while rel.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            rel.insert(Tuple::pair(a, b)).expect("binary");
        }
    }
    rel
}
