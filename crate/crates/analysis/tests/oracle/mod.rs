//! Brute-force reference for the class-hierarchy report, computed straight
//! from the facts with explicit graphs and no rule evaluation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use setrules_core::{Constant, Database};

#[derive(Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub defined: BTreeSet<Constant>,
    pub extending: BTreeSet<(Constant, Constant)>,
    pub roots: BTreeSet<Constant>,
    /// `None` when a root reaches a cycle.
    pub max_height: Option<u64>,
    pub roots_max_height: Option<BTreeSet<Constant>>,
    pub desc: BTreeSet<(Constant, Constant)>,
    pub max_desc: u64,
    pub roots_max_desc: BTreeSet<Constant>,
}

pub fn oracle(fb: &Database) -> OracleReport {
    let mut members: BTreeMap<Constant, Vec<Constant>> = BTreeMap::new();
    if let Some(rel) = fb.get("Member") {
        for t in rel.iter() {
            members.entry(t[0]).or_default().push(t[1]);
        }
    }
    let mut name_of: BTreeMap<Constant, Vec<Constant>> = BTreeMap::new();
    if let Some(rel) = fb.get("Name") {
        for t in rel.iter() {
            name_of.entry(t[0]).or_default().push(t[1]);
        }
    }
    let mut defined = BTreeSet::new();
    let mut extending = BTreeSet::new();
    if let Some(rel) = fb.get("ClassDef") {
        for t in rel.iter() {
            defined.insert(t[1]);
            for elem in members.get(&t[2]).into_iter().flatten() {
                for &b in name_of.get(elem).into_iter().flatten() {
                    extending.insert((t[1], b));
                }
            }
        }
    }

    let mut roots = BTreeSet::new();
    for &(_, b) in &extending {
        let mut extends_something = false;
        for &(c, _) in &extending {
            if c == b {
                extends_something = true;
            }
        }
        if !extends_something {
            roots.insert(b);
        }
    }

    let mut subs: BTreeMap<Constant, BTreeSet<Constant>> = BTreeMap::new();
    for &(c, b) in &extending {
        subs.entry(b).or_default().insert(c);
    }
    let reach = |r: Constant| -> BTreeSet<Constant> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([r]);
        while let Some(x) = queue.pop_front() {
            for &y in subs.get(&x).into_iter().flatten() {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen
    };

    // Longest downward path by relaxation. Cycles elsewhere never settle but
    // cannot feed a class below a root unless that root reaches the cycle.
    let nodes: BTreeSet<Constant> = extending.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut height: BTreeMap<Constant, u64> = nodes.iter().map(|&n| (n, 0)).collect();
    for _ in 0..=nodes.len() {
        let mut changed = false;
        for &(c, b) in &extending {
            let candidate = height[&c] + 1;
            if candidate > height[&b] {
                height.insert(b, candidate);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let cyclic_below_root = roots.iter().any(|&r| {
        let below = reach(r);
        below.iter().any(|&x| reach(x).contains(&x))
    });
    let (max_height, roots_max_height) = if cyclic_below_root {
        (None, None)
    } else {
        let max = roots.iter().map(|r| height[r]).max().unwrap_or(0);
        let arg = roots.iter().copied().filter(|r| height[r] == max).collect();
        (Some(max), Some(arg))
    };

    let mut desc = BTreeSet::new();
    let mut counts = BTreeMap::new();
    for &r in &roots {
        let below = reach(r);
        counts.insert(r, below.len() as u64);
        for c in below {
            desc.insert((c, r));
        }
    }
    let max_desc = counts.values().copied().max().unwrap_or(0);
    let roots_max_desc = counts.iter().filter(|&(_, &n)| n == max_desc).map(|(&r, _)| r).collect();
    OracleReport {
        defined,
        extending,
        roots,
        max_height,
        roots_max_height,
        desc,
        max_desc,
        roots_max_desc,
    }
}
