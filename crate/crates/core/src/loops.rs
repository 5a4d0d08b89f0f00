//! Transitive closure by explicit while loops instead of rules: the two
//! baselines the rule engine is measured against.

use indexmap::IndexSet;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::relation::Relation;
use crate::value::Constant;

type Pair = (Constant, Constant);

fn successors(edges: &Relation) -> FxHashMap<Constant, Vec<Constant>> {
    let mut succ: FxHashMap<Constant, Vec<Constant>> = FxHashMap::default();
    for (a, b) in edges.pairs() {
        succ.entry(a).or_default().push(b);
    }
    succ
}

/// Closure by rescanning: every iteration recomputes the whole set of
/// one-step extensions `{(x,y) : (x,z) in T, (z,y) in E} - T` and moves one
/// of them into `T`.
pub fn while_rescan(edges: &Relation) -> Relation {
    let succ = successors(edges);
    let mut closure: FxHashSet<Pair> = edges.pairs().collect();
    let extensions = |closure: &FxHashSet<Pair>| -> Vec<Pair> {
        let mut w: FxHashSet<Pair> = FxHashSet::default();
        for &(x, z) in closure {
            if let Some(ys) = succ.get(&z) {
                for &y in ys {
                    if !closure.contains(&(x, y)) {
                        w.insert((x, y));
                    }
                }
            }
        }
        w.into_iter().collect()
    };
    let mut pending = extensions(&closure);
    while let Some(p) = pending.pop() {
        closure.insert(p);
        pending = extensions(&closure);
    }
    Relation::from_pairs("path", closure)
}

/// Closure by witness search: every iteration looks for some `(x,z)` in `T`
/// and `(z,y)` in `E` with `(x,y)` not in `T`, scanning from the start, and
/// adds that one pair.
pub fn while_some(edges: &Relation) -> Relation {
    let succ = successors(edges);
    let mut closure: IndexSet<Pair> = edges.pairs().collect();
    'search: loop {
        for i in 0..closure.len() {
            let (x, z) = closure[i];
            if let Some(ys) = succ.get(&z) {
                for &y in ys {
                    if !closure.contains(&(x, y)) {
                        closure.insert((x, y));
                        continue 'search;
                    }
                }
            }
        }
        break;
    }
    Relation::from_pairs("path", closure)
}
