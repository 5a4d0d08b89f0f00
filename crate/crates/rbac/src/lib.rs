//! Core and hierarchical role-based access control.
//!
//! An [`RbacState`] holds the sets `USERS`, `ROLES`, `UR` (user, role) and
//! `RH` (ascendant, descendant). The reflexive-transitive role hierarchy
//! `transRH` that `AuthorizedUsers` needs is computed by one of five
//! strategies ([`Variant`]); they all yield the same relation.

mod op;

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use setrules_core::{
    infer, loops, parse_facts, parse_rules, rulesets, write_facts, BaseChange, Binding, BindingId, Constant, Database,
    MaintainedStore, Relation, RuleSet, Tuple,
};

pub use op::{parse_ops, write_ops, AdminOp, OpKind};

pub const USERS: &str = "USERS";
pub const ROLES: &str = "ROLES";
pub const UR: &str = "UR";
pub const RH: &str = "RH";
pub const TRANS_RH: &str = "transRH";

#[derive(Debug, thiserror::Error)]
pub enum RbacError {
    #[error("unknown {kind} {id}")]
    UnknownId { kind: &'static str, id: Constant },
    #[error("inheritance {ascendant} -> {descendant} would create a hierarchy cycle")]
    CycleRejected { ascendant: Constant, descendant: Constant },
    #[error("malformed operation: {0}")]
    BadOp(String),
    #[error("malformed state: {0}")]
    BadState(String),
    #[error(transparent)]
    Engine(#[from] setrules_core::Error),
}

pub type Result<T, E = RbacError> = std::result::Result<T, E>;

/// How `transRH` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    /// Maintained by a registered rule set, re-derived when `RH` or `ROLES`
    /// change.
    NonLocal,
    /// Inferred per query with the reflexive rule inside the rule set.
    AllLocal,
    /// Inferred per query by plain closure, reflexive pairs added after.
    Union,
    /// Witness-search loop, reflexive pairs added after.
    WhileSome,
    /// Rescanning loop, reflexive pairs added after.
    WhileRescan,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::NonLocal,
        Variant::AllLocal,
        Variant::Union,
        Variant::WhileSome,
        Variant::WhileRescan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::NonLocal => "nonlocal",
            Variant::AllLocal => "alllocal",
            Variant::Union => "union",
            Variant::WhileSome => "whilesome",
            Variant::WhileRescan => "whilerescan",
        }
    }

    pub fn from_name(name: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name().eq_ignore_ascii_case(name))
    }
}

/// Plain contents of an RBAC state, as generated or loaded from facts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RbacContent {
    pub users: BTreeSet<Constant>,
    pub roles: BTreeSet<Constant>,
    pub ur: BTreeSet<(Constant, Constant)>,
    pub rh: BTreeSet<(Constant, Constant)>,
}

impl RbacContent {
    pub fn to_database(&self) -> Database {
        let mut db = Database::new();
        db.insert_relation(Relation::from_values(USERS, self.users.iter().copied()));
        db.insert_relation(Relation::from_values(ROLES, self.roles.iter().copied()));
        db.insert_relation(Relation::from_pairs(UR, self.ur.iter().copied()));
        db.insert_relation(Relation::from_pairs(RH, self.rh.iter().copied()));
        db
    }

    pub fn from_database(db: &Database) -> Result<RbacContent> {
        let rel = |name: &str, arity: usize| -> Result<Option<&Relation>> {
            match db.get(name) {
                Some(r) if r.arity() != arity => Err(RbacError::BadState(format!("{name} must have arity {arity}"))),
                r => Ok(r),
            }
        };
        let values = |r: Option<&Relation>| r.into_iter().flat_map(|r| r.iter().map(|t| t[0])).collect();
        let pairs = |r: Option<&Relation>| r.into_iter().flat_map(Relation::pairs).collect();
        Ok(RbacContent {
            users: values(rel(USERS, 1)?),
            roles: values(rel(ROLES, 1)?),
            ur: pairs(rel(UR, 2)?),
            rh: pairs(rel(RH, 2)?),
        })
    }

    /// Fact-file text with relations `USERS/1`, `ROLES/1`, `UR/2`, `RH/2`.
    pub fn to_facts(&self) -> String {
        write_facts(&self.to_database())
    }

    pub fn from_facts(text: &str) -> Result<RbacContent> {
        RbacContent::from_database(&parse_facts(text)?)
    }
}

/// Result of applying one [`AdminOp`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// An update; `true` if any set changed.
    Updated(bool),
    /// The users authorized for the queried role.
    Users(BTreeSet<Constant>),
}

pub struct RbacState {
    variant: Variant,
    store: MaintainedStore,
    binding: Option<BindingId>,
    trans: RuleSet,
    trans_role: RuleSet,
}

impl RbacState {
    /// An empty state. The non-local variant registers the `transRH` rules.
    pub fn setup(variant: Variant) -> RbacState {
        let mut db = Database::new();
        for (name, arity) in [(USERS, 1), (ROLES, 1), (UR, 2), (RH, 2)] {
            db.insert_relation(Relation::new(name, arity));
        }
        let mut store = MaintainedStore::new(db);
        let binding = (variant == Variant::NonLocal).then(|| {
            let rs = parse_rules(rulesets::TRANS_RH).expect("built-in rules parse");
            let same = |names: &[&str]| names.iter().map(|n| (n.to_string(), n.to_string())).collect();
            store
                .register(rs, same(&[RH, ROLES]), same(&[TRANS_RH]))
                .expect("fresh store has no conflicting bindings")
        });
        RbacState {
            variant,
            store,
            binding,
            trans: parse_rules(rulesets::TRANS).expect("built-in rules parse"),
            trans_role: parse_rules(rulesets::TRANS_ROLE).expect("built-in rules parse"),
        }
    }

    /// A state holding `content`, which must be referentially intact with an
    /// acyclic `RH`. Loaded as one batch.
    pub fn with_content(variant: Variant, content: &RbacContent) -> Result<RbacState> {
        if let Some(&(u, r)) = content
            .ur
            .iter()
            .find(|(u, r)| !content.users.contains(u) || !content.roles.contains(r))
        {
            return Err(RbacError::BadState(format!("UR pair ({u},{r}) references a missing id")));
        }
        if let Some(&(a, d)) = content
            .rh
            .iter()
            .find(|(a, d)| !content.roles.contains(a) || !content.roles.contains(d))
        {
            return Err(RbacError::BadState(format!("RH pair ({a},{d}) references a missing role")));
        }
        if has_cycle(&content.rh) {
            return Err(RbacError::BadState("RH is cyclic".into()));
        }
        let mut state = RbacState::setup(variant);
        let unit = |s: &BTreeSet<Constant>| s.iter().map(|&c| Tuple::unit(c)).collect();
        let pair = |s: &BTreeSet<(Constant, Constant)>| s.iter().map(|&(a, b)| Tuple::pair(a, b)).collect();
        state.store.update_batch(vec![
            change(USERS, unit(&content.users), vec![]),
            change(ROLES, unit(&content.roles), vec![]),
            change(UR, pair(&content.ur), vec![]),
            change(RH, pair(&content.rh), vec![]),
        ])?;
        Ok(state)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    fn rel(&self, name: &str) -> &Relation {
        self.store.db().get(name).expect("state relations always exist")
    }

    pub fn users(&self) -> &Relation {
        self.rel(USERS)
    }

    pub fn roles(&self) -> &Relation {
        self.rel(ROLES)
    }

    pub fn ur(&self) -> &Relation {
        self.rel(UR)
    }

    pub fn rh(&self) -> &Relation {
        self.rel(RH)
    }

    pub fn content(&self) -> RbacContent {
        RbacContent::from_database(self.store.db()).expect("state relations have fixed arities")
    }

    /// Number of `transRH` re-derivations performed by maintenance so far.
    pub fn derivations(&self) -> u64 {
        self.store.derivations()
    }

    fn require(&self, kind: &'static str, rel: &str, id: Constant) -> Result<()> {
        if self.rel(rel).contains(&[id]) {
            Ok(())
        } else {
            Err(RbacError::UnknownId { kind, id })
        }
    }

    /// True iff `from` reaches `to` by one or more `RH` steps.
    fn reaches(&self, from: Constant, to: Constant) -> bool {
        let mut succ: BTreeMap<Constant, Vec<Constant>> = BTreeMap::new();
        for (a, d) in self.rh().pairs() {
            succ.entry(a).or_default().push(d);
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            for &y in succ.get(&x).map(Vec::as_slice).unwrap_or_default() {
                if y == to {
                    return true;
                }
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        false
    }

    pub fn apply(&mut self, op: AdminOp) -> Result<Outcome> {
        let changes = match op {
            AdminOp::QueryAuthorizedUsers(role) => return self.authorized_users(role).map(Outcome::Users),
            AdminOp::AddUser(u) => vec![change(USERS, vec![Tuple::unit(u)], vec![])],
            AdminOp::AddRole(r) => vec![change(ROLES, vec![Tuple::unit(r)], vec![])],
            AdminOp::DeleteUser(u) => {
                self.require("user", USERS, u)?;
                let held = self.ur().iter().filter(|t| t[0] == u).cloned().collect();
                vec![change(UR, vec![], held), change(USERS, vec![], vec![Tuple::unit(u)])]
            }
            AdminOp::DeleteRole(r) => {
                self.require("role", ROLES, r)?;
                let held = self.ur().iter().filter(|t| t[1] == r).cloned().collect();
                let links = self.rh().iter().filter(|t| t[0] == r || t[1] == r).cloned().collect();
                vec![
                    change(UR, vec![], held),
                    change(RH, vec![], links),
                    change(ROLES, vec![], vec![Tuple::unit(r)]),
                ]
            }
            AdminOp::AssignUR(u, r) => {
                self.require("user", USERS, u)?;
                self.require("role", ROLES, r)?;
                vec![change(UR, vec![Tuple::pair(u, r)], vec![])]
            }
            AdminOp::DeassignUR(u, r) => {
                self.require("user", USERS, u)?;
                self.require("role", ROLES, r)?;
                vec![change(UR, vec![], vec![Tuple::pair(u, r)])]
            }
            AdminOp::AddInheritance(a, d) => {
                self.require("role", ROLES, a)?;
                self.require("role", ROLES, d)?;
                if a == d || self.reaches(d, a) {
                    return Err(RbacError::CycleRejected {
                        ascendant: a,
                        descendant: d,
                    });
                }
                vec![change(RH, vec![Tuple::pair(a, d)], vec![])]
            }
            AdminOp::DeleteInheritance(a, d) => {
                self.require("role", ROLES, a)?;
                self.require("role", ROLES, d)?;
                vec![change(RH, vec![], vec![Tuple::pair(a, d)])]
            }
        };
        Ok(Outcome::Updated(self.store.update_batch(changes)?))
    }

    /// `{u : (u, role) in UR}`.
    pub fn assigned_users(&self, role: Constant) -> Result<BTreeSet<Constant>> {
        self.require("role", ROLES, role)?;
        Ok(self.ur().iter().filter(|t| t[1] == role).map(|t| t[0]).collect())
    }

    /// The reflexive-transitive role hierarchy, computed by this state's
    /// variant.
    pub fn trans_rh(&mut self) -> Result<Cow<'_, Relation>> {
        let with_reflexive = |closure: Relation, roles: &Relation| {
            let mut out = closure.with_name(TRANS_RH);
            for r in roles.iter() {
                out.insert(Tuple::pair(r[0], r[0])).expect("binary");
            }
            out
        };
        Ok(match self.variant {
            Variant::NonLocal => {
                let id = self.binding.expect("non-local states register a binding");
                Cow::Borrowed(self.store.read_derived(id, TRANS_RH)?)
            }
            Variant::AllLocal => {
                let binding = Binding::new().bind("edge", self.rh()).bind("role", self.roles());
                Cow::Owned(infer(&self.trans_role, &binding, &["path"])?.remove(0).with_name(TRANS_RH))
            }
            Variant::Union => {
                let closure = infer(&self.trans, &Binding::new().bind("edge", self.rh()), &["path"])?.remove(0);
                Cow::Owned(with_reflexive(closure, self.roles()))
            }
            Variant::WhileSome => Cow::Owned(with_reflexive(loops::while_some(self.rh()), self.roles())),
            Variant::WhileRescan => Cow::Owned(with_reflexive(loops::while_rescan(self.rh()), self.roles())),
        })
    }

    /// Users holding some role that reaches `role` in `transRH`. The
    /// hierarchy is computed once per call.
    pub fn authorized_users(&mut self, role: Constant) -> Result<BTreeSet<Constant>> {
        self.require("role", ROLES, role)?;
        let owned;
        let trans: &Relation = match self.binding {
            Some(id) => {
                self.store.read_derived(id, TRANS_RH)?;
                self.rel(TRANS_RH)
            }
            None => {
                owned = self.trans_rh()?.into_owned();
                &owned
            }
        };
        Ok(self
            .ur()
            .iter()
            .filter(|t| trans.contains(&[t[1], role]))
            .map(|t| t[0])
            .collect())
    }

    /// Checks the referential-integrity invariants and, for the non-local
    /// variant, that the maintained hierarchy equals a fresh computation.
    pub fn check_invariants(&mut self) -> Result<(), String> {
        let content = self.content();
        for (u, r) in &content.ur {
            if !content.users.contains(u) || !content.roles.contains(r) {
                return Err(format!("UR pair ({u},{r}) dangles"));
            }
        }
        for (a, d) in &content.rh {
            if !content.roles.contains(a) || !content.roles.contains(d) {
                return Err(format!("RH pair ({a},{d}) dangles"));
            }
        }
        if self.variant == Variant::NonLocal {
            let maintained = self.trans_rh().map_err(|e| e.to_string())?.into_owned();
            let fresh = reference_trans_rh(&content);
            if maintained != fresh {
                return Err("maintained transRH differs from a fresh closure".into());
            }
        }
        Ok(())
    }
}

fn change(relation: &str, add: Vec<Tuple>, remove: Vec<Tuple>) -> BaseChange {
    BaseChange {
        relation: relation.to_owned(),
        add,
        remove,
    }
}

/// Reflexive-transitive closure of `RH` over `ROLES` by repeated squaring of
/// reachability sets, independent of the rule engine.
pub fn reference_trans_rh(content: &RbacContent) -> Relation {
    let mut reach: BTreeMap<Constant, BTreeSet<Constant>> =
        content.roles.iter().map(|&r| (r, BTreeSet::from([r]))).collect();
    for &(a, d) in &content.rh {
        reach.entry(a).or_default().insert(d);
    }
    loop {
        let mut grew = false;
        let snapshot = reach.clone();
        for set in reach.values_mut() {
            let extra: Vec<Constant> = set
                .iter()
                .flat_map(|m| snapshot.get(m).into_iter().flatten().copied())
                .collect();
            for e in extra {
                grew |= set.insert(e);
            }
        }
        if !grew {
            break;
        }
    }
    Relation::from_pairs(TRANS_RH, reach.into_iter().flat_map(|(a, ds)| ds.into_iter().map(move |d| (a, d))))
}

fn has_cycle(rh: &BTreeSet<(Constant, Constant)>) -> bool {
    let mut indegree: BTreeMap<Constant, usize> = BTreeMap::new();
    let mut succ: BTreeMap<Constant, Vec<Constant>> = BTreeMap::new();
    for &(a, d) in rh {
        indegree.entry(a).or_default();
        *indegree.entry(d).or_default() += 1;
        succ.entry(a).or_default().push(d);
    }
    let mut ready: Vec<Constant> = indegree.iter().filter(|(_, &n)| n == 0).map(|(&c, _)| c).collect();
    let mut removed = 0;
    while let Some(c) = ready.pop() {
        removed += 1;
        for d in succ.get(&c).into_iter().flatten() {
            let n = indegree.get_mut(d).expect("every endpoint has an entry");
            *n -= 1;
            if *n == 0 {
                ready.push(*d);
            }
        }
    }
    removed < indegree.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Constant {
        Constant::sym(x)
    }

    #[test]
    fn cycle_detection() {
        assert!(!has_cycle(&BTreeSet::from([(s("a"), s("b")), (s("b"), s("c"))])));
        assert!(has_cycle(&BTreeSet::from([(s("a"), s("b")), (s("b"), s("a"))])));
        assert!(has_cycle(&BTreeSet::from([(s("a"), s("a"))])));
    }

    #[test]
    fn reference_closure_is_reflexive_on_roles() {
        let content = RbacContent {
            roles: BTreeSet::from([s("r1"), s("r2"), s("r3")]),
            rh: BTreeSet::from([(s("r1"), s("r2")), (s("r2"), s("r3"))]),
            ..RbacContent::default()
        };
        let expected = Relation::from_pairs(
            "",
            [("r1", "r2"), ("r2", "r3"), ("r1", "r3"), ("r1", "r1"), ("r2", "r2"), ("r3", "r3")],
        );
        assert_eq!(reference_trans_rh(&content), expected);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::from_name(v.name()), Some(v));
        }
    }
}
