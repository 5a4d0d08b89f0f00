//! Naive evaluation, kept as a differential-testing oracle.
//!
//! Deliberately shares nothing with the planned evaluator beyond
//! stratification: each round re-derives everything from scratch by
//! enumerating substitutions over full relations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::relation::{Database, Relation};
use crate::stratify::stratify;
use crate::syntax::{Literal, Rule, RuleSet, Term};
use crate::value::{Constant, Tuple};

type Subst<'r> = HashMap<&'r str, Constant>;

/// Same contract as [`super::eval_stratified`], computed by naive iteration.
pub fn eval_naive(db: &Database, rs: &RuleSet) -> Result<Database> {
    let strat = stratify(rs)?;
    let mut facts: BTreeMap<String, BTreeSet<Vec<Constant>>> = BTreeMap::new();
    for name in rs.base_preds() {
        let expected = rs.arity(name).unwrap_or(0);
        let tuples = match db.get(name) {
            Some(rel) if rel.arity() != expected => {
                return Err(Error::ArityConflict {
                    predicate: name.clone(),
                    expected,
                    found: rel.arity(),
                })
            }
            Some(rel) => rel.iter().map(|t| t.to_vec()).collect(),
            None => BTreeSet::new(),
        };
        facts.insert(name.clone(), tuples);
    }
    for name in rs.derived_preds() {
        facts.insert(name.clone(), BTreeSet::new());
    }
    for stratum in strat.strata() {
        let rules: Vec<&Rule> = rs
            .rules()
            .iter()
            .filter(|r| stratum.contains(&r.head.predicate))
            .collect();
        loop {
            let mut derived: Vec<(String, Vec<Constant>)> = Vec::new();
            for rule in &rules {
                let mut substs = vec![Subst::new()];
                for lit in &rule.body {
                    substs = extend(&substs, lit, &facts[&lit.predicate]);
                }
                for s in substs {
                    let head = rule.head.args.iter().map(|t| value(t, &s)).collect();
                    derived.push((rule.head.predicate.clone(), head));
                }
            }
            let mut changed = false;
            for (pred, t) in derived {
                changed |= facts.get_mut(&pred).expect("derived predicate").insert(t);
            }
            if !changed {
                break;
            }
        }
    }
    let mut out = Database::new();
    for name in rs.derived_preds() {
        let arity = rs.arity(name).unwrap_or(0);
        let tuples = facts.remove(name).unwrap_or_default().into_iter().map(Tuple::new);
        out.insert_relation(Relation::from_tuples(name.clone(), arity, tuples)?);
    }
    Ok(out)
}

fn value(t: &Term, s: &Subst) -> Constant {
    match t {
        Term::Const(c) => *c,
        Term::Var(v) => s[v.as_str()],
        Term::Wildcard => unreachable!("wildcards never reach rule heads"),
    }
}

fn matches<'r>(lit: &'r Literal, tuple: &[Constant], s: &Subst<'r>) -> Option<Subst<'r>> {
    let mut s = s.clone();
    for (term, &c) in lit.args.iter().zip(tuple) {
        match term {
            Term::Wildcard => {}
            Term::Const(k) => {
                if *k != c {
                    return None;
                }
            }
            Term::Var(v) => match s.get(v.as_str()) {
                Some(&bound) if bound != c => return None,
                Some(_) => {}
                None => {
                    s.insert(v, c);
                }
            },
        }
    }
    Some(s)
}

fn extend<'r>(substs: &[Subst<'r>], lit: &'r Literal, rel: &BTreeSet<Vec<Constant>>) -> Vec<Subst<'r>> {
    let mut out = Vec::new();
    for s in substs {
        if lit.negated {
            if !rel.iter().any(|t| matches(lit, t, s).is_some()) {
                out.push(s.clone());
            }
        } else {
            out.extend(rel.iter().filter_map(|t| matches(lit, t, s)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_rules;

    #[test]
    fn single_edge() {
        let rs = parse_rules("path(x,y) if edge(x,y)\npath(x,y) if edge(x,z), path(z,y)").unwrap();
        let mut db = Database::new();
        db.insert_relation(Relation::from_pairs("edge", [("a", "b")]));
        let out = eval_naive(&db, &rs).unwrap();
        assert_eq!(out.get("path").unwrap(), &Relation::from_pairs("", [("a", "b")]));
    }

    #[test]
    fn same_generation_siblings() {
        let rs = parse_rules(
            "sg(X,Y) :- par(X,P), par(Y,P).\nsg(X,Y) :- par(X,P), sg(P,Q), par(Y,Q).",
        )
        .unwrap();
        let mut db = Database::new();
        db.insert_relation(Relation::from_pairs("par", [("c1", "p"), ("c2", "p")]));
        let out = eval_naive(&db, &rs).unwrap();
        let sg = out.get("sg").unwrap();
        assert!(sg.contains(&[Constant::sym("c1"), Constant::sym("c2")]));
        assert!(sg.contains(&[Constant::sym("c2"), Constant::sym("c1")]));
    }

    #[test]
    fn rejects_unstratifiable() {
        let rs = parse_rules("win(X) :- move(X,Y), not win(Y).").unwrap();
        assert!(matches!(eval_naive(&Database::new(), &rs), Err(Error::NotStratifiable { .. })));
    }
}
