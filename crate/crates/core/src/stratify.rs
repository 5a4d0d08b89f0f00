//! Predicate dependency graph and stratification.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::syntax::RuleSet;

/// Ordered partition of the derived predicates into strata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    strata: Vec<Vec<String>>,
    level: BTreeMap<String, usize>,
}

impl Stratification {
    pub fn strata(&self) -> &[Vec<String>] {
        &self.strata
    }

    pub fn level(&self, predicate: &str) -> Option<usize> {
        self.level.get(predicate).copied()
    }
}

/// Dependency edges `head -> body predicate`, restricted to derived
/// predicates, with a flag for negated occurrences.
struct DepGraph<'a> {
    nodes: Vec<&'a str>,
    index: BTreeMap<&'a str, usize>,
    edges: Vec<Vec<(usize, bool)>>,
}

impl<'a> DepGraph<'a> {
    fn new(rs: &'a RuleSet) -> DepGraph<'a> {
        let nodes: Vec<&str> = rs.derived_preds().iter().map(String::as_str).collect();
        let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut edge_sets: Vec<BTreeSet<(usize, bool)>> = vec![BTreeSet::new(); nodes.len()];
        for rule in rs.rules() {
            let h = index[rule.head.predicate.as_str()];
            for lit in &rule.body {
                if let Some(&b) = index.get(lit.predicate.as_str()) {
                    edge_sets[h].insert((b, lit.negated));
                }
            }
        }
        DepGraph {
            nodes,
            index,
            edges: edge_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Strongly connected components in reverse topological order
    /// (dependencies before dependents).
    fn components(&self) -> Vec<Vec<usize>> {
        struct Tarjan<'g> {
            edges: &'g [Vec<(usize, bool)>],
            counter: usize,
            index: Vec<Option<usize>>,
            low: Vec<usize>,
            stack: Vec<usize>,
            on_stack: Vec<bool>,
            out: Vec<Vec<usize>>,
        }
        impl Tarjan<'_> {
            fn visit(&mut self, v: usize) {
                self.index[v] = Some(self.counter);
                self.low[v] = self.counter;
                self.counter += 1;
                self.stack.push(v);
                self.on_stack[v] = true;
                for &(w, _) in &self.edges[v] {
                    match self.index[w] {
                        None => {
                            self.visit(w);
                            self.low[v] = self.low[v].min(self.low[w]);
                        }
                        Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                        Some(_) => {}
                    }
                }
                if Some(self.low[v]) == self.index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = self.stack.pop() {
                        self.on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    self.out.push(comp);
                }
            }
        }
        let n = self.nodes.len();
        let mut t = Tarjan {
            edges: &self.edges,
            counter: 0,
            index: vec![None; n],
            low: vec![0; n],
            stack: Vec::new(),
            on_stack: vec![false; n],
            out: Vec::new(),
        };
        for v in 0..n {
            if t.index[v].is_none() {
                t.visit(v);
            }
        }
        t.out
    }

    /// Shortest dependency path from `from` to `to` staying inside `within`.
    fn path(&self, from: usize, to: usize, within: &BTreeSet<usize>) -> Vec<usize> {
        let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([from]);
        let mut seen = BTreeSet::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &(w, _) in &self.edges[v] {
                if within.contains(&w) && seen.insert(w) {
                    prev.insert(w, v);
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[&cur];
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Assigns each derived predicate a stratum such that positive dependencies
/// stay at or below and negative dependencies lie strictly below. Fails with
/// one dependency cycle through a negation when no such assignment exists.
pub fn stratify(rs: &RuleSet) -> Result<Stratification> {
    let graph = DepGraph::new(rs);
    let components = graph.components();
    let mut comp_of = vec![0; graph.nodes.len()];
    for (ci, comp) in components.iter().enumerate() {
        for &v in comp {
            comp_of[v] = ci;
        }
    }
    let mut comp_level = vec![0usize; components.len()];
    for (ci, comp) in components.iter().enumerate() {
        let members: BTreeSet<usize> = comp.iter().copied().collect();
        let mut level = 0;
        for &v in comp {
            for &(w, negated) in &graph.edges[v] {
                if comp_of[w] == ci {
                    if negated {
                        let mut cycle = vec![v];
                        cycle.extend(graph.path(w, v, &members));
                        return Err(Error::NotStratifiable {
                            cycle: cycle.into_iter().map(|i| graph.nodes[i].to_owned()).collect(),
                        });
                    }
                } else {
                    level = level.max(comp_level[comp_of[w]] + usize::from(negated));
                }
            }
        }
        comp_level[ci] = level;
    }
    let height = comp_level.iter().copied().max().map_or(0, |m| m + 1);
    let mut strata = vec![Vec::new(); height];
    let mut level = BTreeMap::new();
    for (v, name) in graph.nodes.iter().enumerate() {
        let l = comp_level[comp_of[v]];
        strata[l].push((*name).to_owned());
        level.insert((*name).to_owned(), l);
    }
    debug_assert!(graph.index.len() == level.len());
    Ok(Stratification { strata, level })
}
