//! Seeded data generators: random graphs for transitive closure and RBAC
//! states with administrative workloads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use indexmap::IndexSet;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setrules_core::{Constant, Relation, Tuple};
use setrules_rbac::{parse_ops, write_ops, AdminOp, OpKind, RbacContent};

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TcGenConfig {
    pub vertices: u64,
    pub edges: u64,
    pub cyclic: bool,
    pub seed: u64,
}

/// `cfg.edges` distinct edges over vertices `0..cfg.vertices`, without
/// self-loops, drawn uniformly without replacement. Acyclic graphs only
/// contain `(u, v)` where `u` precedes `v` in a random vertex ranking.
pub fn gen_tc_graph(cfg: &TcGenConfig) -> Result<Relation, BenchError> {
    let n = cfg.vertices;
    let pairs = if cfg.cyclic {
        n * n.saturating_sub(1)
    } else {
        n * n.saturating_sub(1) / 2
    };
    if cfg.edges > pairs {
        return Err(BenchError::Infeasible(format!(
            "{} edges requested but only {pairs} are allowed over {n} vertices",
            cfg.edges
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rank: Vec<i64> = (0..n as i64).collect();
    if !cfg.cyclic {
        rank.shuffle(&mut rng);
    }
    let sample = index::sample(&mut rng, pairs as usize, cfg.edges as usize);
    let mut rel = Relation::new("edge", 2);
    for i in sample.into_iter() {
        let i = i as u64;
        let (u, v) = if cfg.cyclic {
            let (u, r) = (i / (n - 1), i % (n - 1));
            (u as i64, if r < u { r as i64 } else { r as i64 + 1 })
        } else {
            let (a, b) = triangular(i, n);
            (rank[a as usize], rank[b as usize])
        };
        rel.insert(Tuple::pair(u, v)).expect("binary");
    }
    Ok(rel)
}

/// The `i`-th pair `(a, b)` with `a < b < n` in row-major order.
fn triangular(mut i: u64, n: u64) -> (u64, u64) {
    let mut a = 0;
    while i >= n - 1 - a {
        i -= n - 1 - a;
        a += 1;
    }
    (a, a + 1 + i)
}

/// How many of each update the workload performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpdateCounts {
    pub add_user: usize,
    pub delete_user: usize,
    pub add_role: usize,
    pub delete_role: usize,
    pub assign_ur: usize,
    pub deassign_ur: usize,
    pub add_rh: usize,
    pub delete_rh: usize,
}

impl UpdateCounts {
    /// 230 updates.
    pub const STANDARD: UpdateCounts = UpdateCounts {
        add_user: 50,
        delete_user: 50,
        add_role: 5,
        delete_role: 5,
        assign_ur: 55,
        deassign_ur: 55,
        add_rh: 5,
        delete_rh: 5,
    };

    /// 23 updates, for the tenfold smaller configuration.
    pub const TENTH: UpdateCounts = UpdateCounts {
        add_user: 5,
        delete_user: 5,
        add_role: 1,
        delete_role: 0,
        assign_ur: 5,
        deassign_ur: 5,
        add_rh: 1,
        delete_rh: 1,
    };

    pub fn total(&self) -> usize {
        self.kinds().iter().map(|&(_, n)| n).sum()
    }

    fn kinds(&self) -> [(OpKind, usize); 8] {
        [
            (OpKind::AddUser, self.add_user),
            (OpKind::DeleteUser, self.delete_user),
            (OpKind::AddRole, self.add_role),
            (OpKind::DeleteRole, self.delete_role),
            (OpKind::AssignUR, self.assign_ur),
            (OpKind::DeassignUR, self.deassign_ur),
            (OpKind::AddInheritance, self.add_rh),
            (OpKind::DeleteInheritance, self.delete_rh),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RbacWorkloadConfig {
    pub users: usize,
    pub roles: usize,
    pub ur_size: usize,
    pub rh_size: usize,
    pub rh_height: usize,
    pub max_roles_per_user: usize,
    pub n_queries: usize,
    pub updates: UpdateCounts,
    pub seed: u64,
}

impl Default for RbacWorkloadConfig {
    fn default() -> Self {
        RbacWorkloadConfig {
            users: 5000,
            roles: 500,
            ur_size: 5000,
            rh_size: 550,
            rh_height: 5,
            max_roles_per_user: 10,
            n_queries: 500,
            updates: UpdateCounts::STANDARD,
            seed: 0,
        }
    }
}

impl RbacWorkloadConfig {
    /// The default configuration shrunk tenfold.
    pub fn small() -> RbacWorkloadConfig {
        RbacWorkloadConfig {
            users: 500,
            roles: 50,
            ur_size: 500,
            rh_size: 55,
            n_queries: 50,
            updates: UpdateCounts::TENTH,
            ..RbacWorkloadConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RbacWorkload {
    pub initial: RbacContent,
    pub ops: Vec<AdminOp>,
}

impl RbacWorkload {
    /// Writes `initial.facts` and `ops.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), BenchError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("initial.facts"), self.initial.to_facts())?;
        fs::write(dir.join("ops.txt"), write_ops(&self.ops))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<RbacWorkload, BenchError> {
        let initial = RbacContent::from_facts(&fs::read_to_string(dir.join("initial.facts"))?)?;
        let ops = parse_ops(&fs::read_to_string(dir.join("ops.txt"))?)?;
        Ok(RbacWorkload { initial, ops })
    }

    /// The same workload keeping only its first `n` queries. Queries do not
    /// change the state, so every update sees the same state as before.
    pub fn with_queries(&self, n: usize) -> RbacWorkload {
        let mut seen = 0;
        let ops = self
            .ops
            .iter()
            .filter(|op| {
                if matches!(op, AdminOp::QueryAuthorizedUsers(_)) {
                    seen += 1;
                    seen <= n
                } else {
                    true
                }
            })
            .copied()
            .collect();
        RbacWorkload {
            initial: self.initial.clone(),
            ops,
        }
    }
}

fn user(i: usize) -> Constant {
    Constant::sym(&format!("u{i}"))
}

fn role(i: usize) -> Constant {
    Constant::sym(&format!("r{i}"))
}

/// Mutable picture of the state while choosing op payloads.
struct Sim {
    users: IndexSet<Constant>,
    roles: IndexSet<Constant>,
    ur: IndexSet<(Constant, Constant)>,
    rh: IndexSet<(Constant, Constant)>,
    held: BTreeMap<Constant, usize>,
    next_user: usize,
    next_role: usize,
}

impl Sim {
    fn reaches(&self, from: Constant, to: Constant) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            if seen.insert(x) {
                stack.extend(self.rh.iter().filter(|(a, _)| *a == x).map(|&(_, d)| d));
            }
        }
        false
    }

    fn delete_user(&mut self, u: Constant) {
        self.users.shift_remove(&u);
        self.ur.retain(|&(x, _)| x != u);
        self.held.remove(&u);
    }

    fn delete_role(&mut self, r: Constant) {
        self.roles.shift_remove(&r);
        let dropped: Vec<Constant> = self.ur.iter().filter(|&&(_, x)| x == r).map(|&(u, _)| u).collect();
        for u in dropped {
            *self.held.get_mut(&u).expect("holder tracked") -= 1;
        }
        self.ur.retain(|&(_, x)| x != r);
        self.rh.retain(|&(a, d)| a != r && d != r);
    }
}

const RESAMPLE_LIMIT: usize = 10_000;

fn pick<T: Copy, R: Rng>(rng: &mut R, set: &IndexSet<T>) -> Option<T> {
    (!set.is_empty()).then(|| set[rng.gen_range(0..set.len())])
}

/// An initial RBAC state and a shuffled sequence of updates and queries.
///
/// Roles are spread over `rh_height + 1` levels with one forced chain
/// through all of them; hierarchy edges only go from a lower to a higher
/// level, so the longest chain has exactly `rh_height` edges. Every op in
/// the sequence is valid in the state reached by the ops before it; an
/// infeasible payload is resampled, keeping the op counts exact.
pub fn gen_rbac_workload(cfg: &RbacWorkloadConfig) -> Result<RbacWorkload, BenchError> {
    let infeasible = |m: String| Err(BenchError::Infeasible(m));
    if cfg.rh_height > 0 && cfg.roles < cfg.rh_height + 1 {
        return infeasible(format!("{} roles cannot form a chain of height {}", cfg.roles, cfg.rh_height));
    }
    if cfg.rh_size < cfg.rh_height {
        return infeasible(format!("RH size {} is below height {}", cfg.rh_size, cfg.rh_height));
    }
    if cfg.ur_size > cfg.users * cfg.max_roles_per_user.min(cfg.roles) {
        return infeasible(format!("UR size {} exceeds what the limits allow", cfg.ur_size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Role hierarchy.
    let levels = cfg.rh_height + 1;
    let mut order: Vec<usize> = (0..cfg.roles).collect();
    order.shuffle(&mut rng);
    let mut level = vec![0usize; cfg.roles];
    for (i, &r) in order.iter().enumerate() {
        level[r] = if i < levels { i } else { rng.gen_range(0..levels) };
    }
    let mut per_level = vec![0usize; levels];
    for &l in &level {
        per_level[l] += 1;
    }
    let capacity: usize = (0..levels)
        .map(|i| per_level[i] * per_level[i + 1..].iter().sum::<usize>())
        .sum();
    if cfg.rh_size > capacity {
        return infeasible(format!("RH size {} exceeds {capacity} level-respecting pairs", cfg.rh_size));
    }
    let mut rh: BTreeSet<(Constant, Constant)> = BTreeSet::new();
    if cfg.rh_height > 0 {
        for w in order[..levels].windows(2) {
            rh.insert((role(w[0]), role(w[1])));
        }
    }
    while rh.len() < cfg.rh_size {
        let (a, d) = (rng.gen_range(0..cfg.roles), rng.gen_range(0..cfg.roles));
        if level[a] < level[d] {
            rh.insert((role(a), role(d)));
        }
    }

    // User-role assignment.
    let mut ur: BTreeSet<(Constant, Constant)> = BTreeSet::new();
    let mut held = vec![0usize; cfg.users];
    while ur.len() < cfg.ur_size {
        let (u, r) = (rng.gen_range(0..cfg.users), rng.gen_range(0..cfg.roles));
        if held[u] < cfg.max_roles_per_user && ur.insert((user(u), role(r))) {
            held[u] += 1;
        }
    }

    let initial = RbacContent {
        users: (0..cfg.users).map(user).collect(),
        roles: (0..cfg.roles).map(role).collect(),
        ur,
        rh,
    };

    // Op kinds, shuffled, then payloads chosen against a simulated state.
    let mut kinds: Vec<OpKind> = cfg
        .updates
        .kinds()
        .into_iter()
        .flat_map(|(k, n)| std::iter::repeat_n(k, n))
        .chain(std::iter::repeat_n(OpKind::QueryAuthorizedUsers, cfg.n_queries))
        .collect();
    kinds.shuffle(&mut rng);

    let mut sim = Sim {
        users: initial.users.iter().copied().collect(),
        roles: initial.roles.iter().copied().collect(),
        ur: initial.ur.iter().copied().collect(),
        rh: initial.rh.iter().copied().collect(),
        held: held.iter().enumerate().map(|(u, &n)| (user(u), n)).collect(),
        next_user: cfg.users,
        next_role: cfg.roles,
    };
    let mut ops = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let op = choose_payload(kind, &mut sim, &mut rng, cfg.max_roles_per_user)
            .ok_or_else(|| BenchError::Infeasible(format!("no valid payload for {}", kind.name())))?;
        ops.push(op);
    }
    Ok(RbacWorkload { initial, ops })
}

fn choose_payload<R: Rng>(kind: OpKind, sim: &mut Sim, rng: &mut R, max_roles: usize) -> Option<AdminOp> {
    Some(match kind {
        OpKind::AddUser => {
            let u = user(sim.next_user);
            sim.next_user += 1;
            sim.users.insert(u);
            sim.held.insert(u, 0);
            AdminOp::AddUser(u)
        }
        OpKind::AddRole => {
            let r = role(sim.next_role);
            sim.next_role += 1;
            sim.roles.insert(r);
            AdminOp::AddRole(r)
        }
        OpKind::DeleteUser => {
            let u = pick(rng, &sim.users)?;
            sim.delete_user(u);
            AdminOp::DeleteUser(u)
        }
        OpKind::DeleteRole => {
            let r = pick(rng, &sim.roles)?;
            sim.delete_role(r);
            AdminOp::DeleteRole(r)
        }
        OpKind::AssignUR => {
            let (u, r) = (0..RESAMPLE_LIMIT).find_map(|_| {
                let (u, r) = (pick(rng, &sim.users)?, pick(rng, &sim.roles)?);
                (sim.held[&u] < max_roles && !sim.ur.contains(&(u, r))).then_some((u, r))
            })?;
            sim.ur.insert((u, r));
            *sim.held.get_mut(&u).expect("user tracked") += 1;
            AdminOp::AssignUR(u, r)
        }
        OpKind::DeassignUR => {
            let (u, r) = pick(rng, &sim.ur)?;
            sim.ur.shift_remove(&(u, r));
            *sim.held.get_mut(&u).expect("user tracked") -= 1;
            AdminOp::DeassignUR(u, r)
        }
        OpKind::AddInheritance => {
            let (a, d) = (0..RESAMPLE_LIMIT).find_map(|_| {
                let (a, d) = (pick(rng, &sim.roles)?, pick(rng, &sim.roles)?);
                (a != d && !sim.rh.contains(&(a, d)) && !sim.reaches(d, a)).then_some((a, d))
            })?;
            sim.rh.insert((a, d));
            AdminOp::AddInheritance(a, d)
        }
        OpKind::DeleteInheritance => {
            let (a, d) = pick(rng, &sim.rh)?;
            sim.rh.shift_remove(&(a, d));
            AdminOp::DeleteInheritance(a, d)
        }
        OpKind::QueryAuthorizedUsers => AdminOp::QueryAuthorizedUsers(pick(rng, &sim.roles)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_enumerates_all_pairs() {
        let n = 6;
        let pairs: Vec<(u64, u64)> = (0..n * (n - 1) / 2).map(|i| triangular(i, n)).collect();
        let expected: Vec<(u64, u64)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        assert_eq!(pairs, expected);
    }

    #[test]
    fn tiny_cyclic_graph_saturates() {
        let g = gen_tc_graph(&TcGenConfig {
            vertices: 3,
            edges: 6,
            cyclic: true,
            seed: 1,
        })
        .unwrap();
        assert_eq!(g.len(), 6);
        assert!(g.pairs().all(|(a, b)| a != b));
    }

    #[test]
    fn too_many_edges_is_infeasible() {
        let cfg = TcGenConfig {
            vertices: 3,
            edges: 4,
            cyclic: false,
            seed: 1,
        };
        assert!(matches!(gen_tc_graph(&cfg), Err(BenchError::Infeasible(_))));
    }

    #[test]
    fn op_totals() {
        let cfg = RbacWorkloadConfig::small();
        assert_eq!(UpdateCounts::STANDARD.total(), 230);
        assert_eq!(UpdateCounts::TENTH.total(), 23);
        let w = gen_rbac_workload(&cfg).unwrap();
        assert_eq!(w.ops.len(), 73);
        let fewer = w.with_queries(20);
        assert_eq!(fewer.ops.len(), 43);
        let updates = |w: &RbacWorkload| -> Vec<AdminOp> {
            w.ops.iter().filter(|op| !matches!(op, AdminOp::QueryAuthorizedUsers(_))).copied().collect()
        };
        assert_eq!(updates(&fewer), updates(&w));
    }
}
