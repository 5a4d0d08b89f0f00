//! Explicit inference with per-call bindings, and rule sets whose derived
//! relations are kept up to date as the base relations they read change.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::eval::{eval_stratified_with, eval_well_founded_with};
use crate::relation::{Database, Relation};
use crate::stratify::stratify;
use crate::syntax::RuleSet;
use crate::value::Tuple;

/// Base predicate name to the relation it stands for in one `infer` call.
#[derive(Clone, Debug, Default)]
pub struct Binding<'a> {
    map: BTreeMap<String, &'a Relation>,
}

impl<'a> Binding<'a> {
    pub fn new() -> Binding<'a> {
        Binding::default()
    }

    pub fn bind(mut self, predicate: &str, relation: &'a Relation) -> Binding<'a> {
        self.map.insert(predicate.to_owned(), relation);
        self
    }

    pub fn get(&self, predicate: &str) -> Option<&'a Relation> {
        self.map.get(predicate).copied()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InferMode {
    #[default]
    Stratified,
    WellFounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inferred {
    /// Extension of each query, in query order. Under well-founded mode these
    /// are the true facts.
    pub results: Vec<Relation>,
    /// Undefined facts per query; always empty relations in stratified mode.
    pub undefined: Vec<Relation>,
}

/// Evaluates `rs` over exactly the bound relations (unbound base predicates
/// are empty) and returns the full extension of each query predicate.
pub fn infer(rs: &RuleSet, binding: &Binding<'_>, queries: &[&str]) -> Result<Vec<Relation>> {
    Ok(infer_with(rs, binding, queries, InferMode::Stratified)?.results)
}

pub fn infer_with(rs: &RuleSet, binding: &Binding<'_>, queries: &[&str], mode: InferMode) -> Result<Inferred> {
    for q in queries {
        if !rs.is_derived(q) {
            return Err(Error::UnknownQuery((*q).to_owned()));
        }
    }
    let mut bases = BTreeMap::new();
    for (name, rel) in &binding.map {
        if !rs.is_base(name) {
            return Err(Error::UnknownBase(name.clone()));
        }
        let expected = rs.arity(name).unwrap_or(0);
        if rel.arity() != expected {
            return Err(Error::ArityConflict {
                predicate: name.clone(),
                expected,
                found: rel.arity(),
            });
        }
        bases.insert(name.as_str(), *rel);
    }
    let (mut true_db, mut undef_db) = match mode {
        InferMode::Stratified => (eval_stratified_with(&bases, rs)?, Database::new()),
        InferMode::WellFounded => {
            let wf = eval_well_founded_with(&bases, rs)?;
            (wf.true_facts, wf.undefined_facts)
        }
    };
    let take = |db: &mut Database, q: &str| {
        db.remove_relation(q)
            .unwrap_or_else(|| Relation::new(q, rs.arity(q).unwrap_or(0)))
            .with_name(q)
    };
    let mut results: Vec<Relation> = Vec::with_capacity(queries.len());
    let mut undefined: Vec<Relation> = Vec::with_capacity(queries.len());
    for (i, q) in queries.iter().enumerate() {
        // A repeated query reuses the relation taken the first time.
        if let Some(first) = queries[..i].iter().position(|p| p == q) {
            results.push(results[first].clone());
            undefined.push(undefined[first].clone());
        } else {
            results.push(take(&mut true_db, q));
            undefined.push(take(&mut undef_db, q));
        }
    }
    Ok(Inferred { results, undefined })
}

/// When re-derivation happens after a base update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Maintenance {
    /// Re-derive as part of the update.
    #[default]
    Eager,
    /// Mark dirty; re-derive on the next read.
    Lazy,
}

/// A rule set registered against relations of a [`MaintainedStore`].
#[derive(Clone, Debug)]
pub struct MaintainedBinding {
    pub ruleset: RuleSet,
    /// Base predicate to store relation name.
    pub base_map: BTreeMap<String, String>,
    /// Derived predicate to store relation name.
    pub derived_map: BTreeMap<String, String>,
    pub dirty: bool,
}

impl MaintainedBinding {
    fn reads(&self, relation: &str) -> bool {
        self.base_map.values().any(|r| r == relation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BindingId(usize);

/// One grouped base update.
#[derive(Clone, Debug)]
pub struct BaseChange {
    pub relation: String,
    pub add: Vec<Tuple>,
    pub remove: Vec<Tuple>,
}

/// A database together with the maintained bindings over it.
///
/// Relations claimed as derived by a binding can only be written by
/// re-derivation. In eager mode, every derived relation equals a fresh
/// evaluation over the current base relations whenever control returns to
/// the caller.
#[derive(Clone, Debug, Default)]
pub struct MaintainedStore {
    db: Database,
    bindings: Vec<MaintainedBinding>,
    claimed: BTreeMap<String, BindingId>,
    mode: Maintenance,
    derivations: u64,
}

impl MaintainedStore {
    pub fn new(db: Database) -> MaintainedStore {
        MaintainedStore {
            db,
            ..Default::default()
        }
    }

    pub fn with_mode(db: Database, mode: Maintenance) -> MaintainedStore {
        MaintainedStore {
            db,
            mode,
            ..Default::default()
        }
    }

    pub fn mode(&self) -> Maintenance {
        self.mode
    }

    /// The underlying database. In lazy mode derived relations may be stale;
    /// use [`MaintainedStore::read_derived`] for those.
    pub fn db(&self) -> &Database {
        &self.db
    }

    pub fn binding(&self, id: BindingId) -> &MaintainedBinding {
        &self.bindings[id.0]
    }

    /// Number of re-derivations performed so far.
    pub fn derivations(&self) -> u64 {
        self.derivations
    }

    pub fn is_derived(&self, relation: &str) -> bool {
        self.claimed.contains_key(relation)
    }

    /// Registers `rs` with its base predicates read from, and its mapped
    /// derived predicates written to, the named store relations. Missing base
    /// relations are created empty. Performs the initial derivation.
    pub fn register(
        &mut self,
        rs: RuleSet,
        base_map: BTreeMap<String, String>,
        derived_map: BTreeMap<String, String>,
    ) -> Result<BindingId> {
        stratify(&rs)?;
        for (pred, target) in &base_map {
            if !rs.is_base(pred) {
                return Err(Error::UnknownBase(pred.clone()));
            }
            if self.claimed.contains_key(target) || derived_map.values().any(|d| d == target) {
                return Err(Error::DerivedConflict(target.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for (pred, target) in &derived_map {
            if !rs.is_derived(pred) {
                return Err(Error::UnknownQuery(pred.clone()));
            }
            let read_elsewhere = self.bindings.iter().any(|b| b.reads(target));
            if self.claimed.contains_key(target) || read_elsewhere || !seen.insert(target) {
                return Err(Error::DerivedConflict(target.clone()));
            }
        }
        for (pred, target) in &base_map {
            self.db.ensure(target, rs.arity(pred).unwrap_or(0))?;
        }
        let id = BindingId(self.bindings.len());
        for target in derived_map.values() {
            self.claimed.insert(target.clone(), id);
        }
        self.bindings.push(MaintainedBinding {
            ruleset: rs,
            base_map,
            derived_map,
            dirty: true,
        });
        if let Err(e) = self.rederive(id) {
            self.bindings.pop();
            self.claimed.retain(|_, b| *b != id);
            return Err(e);
        }
        Ok(id)
    }

    /// Applies a set update to a base relation of binding `id`.
    pub fn update_base(&mut self, id: BindingId, relation: &str, add: Vec<Tuple>, remove: Vec<Tuple>) -> Result<bool> {
        if self.claimed.contains_key(relation) {
            return Err(Error::DerivedWriteForbidden(relation.to_owned()));
        }
        if !self.bindings[id.0].reads(relation) {
            return Err(Error::UnknownRelation(relation.to_owned()));
        }
        self.update(relation, add, remove)
    }

    /// Applies a set update to any non-derived relation, re-deriving every
    /// binding that reads it. Returns whether the relation changed; an
    /// update that changes nothing triggers no re-derivation.
    pub fn update(&mut self, relation: &str, add: Vec<Tuple>, remove: Vec<Tuple>) -> Result<bool> {
        self.update_batch(vec![BaseChange {
            relation: relation.to_owned(),
            add,
            remove,
        }])
    }

    /// Applies several base changes, then re-derives each affected binding
    /// once.
    pub fn update_batch(&mut self, changes: Vec<BaseChange>) -> Result<bool> {
        for c in &changes {
            if self.claimed.contains_key(&c.relation) {
                return Err(Error::DerivedWriteForbidden(c.relation.clone()));
            }
            if let Some(t) = c.add.iter().chain(&c.remove).next() {
                let arity = t.arity();
                if let Some(bad) = c.add.iter().chain(&c.remove).find(|t| t.arity() != arity) {
                    return Err(Error::ArityConflict {
                        predicate: c.relation.clone(),
                        expected: arity,
                        found: bad.arity(),
                    });
                }
                if let Some(rel) = self.db.get(&c.relation) {
                    if rel.arity() != arity {
                        return Err(Error::ArityConflict {
                            predicate: c.relation.clone(),
                            expected: rel.arity(),
                            found: arity,
                        });
                    }
                }
            }
        }
        let mut touched = BTreeSet::new();
        for c in changes {
            let added = self.db.assert_facts(&c.relation, c.add)?;
            let removed = self.db.retract_facts(&c.relation, c.remove)?;
            if added + removed > 0 {
                touched.insert(c.relation);
            }
        }
        let affected: Vec<BindingId> = (0..self.bindings.len())
            .map(BindingId)
            .filter(|id| touched.iter().any(|r| self.bindings[id.0].reads(r)))
            .collect();
        for id in affected {
            self.bindings[id.0].dirty = true;
            if self.mode == Maintenance::Eager {
                self.rederive(id)?;
            }
        }
        Ok(!touched.is_empty())
    }

    pub fn assert_facts(&mut self, relation: &str, tuples: Vec<Tuple>) -> Result<bool> {
        self.update(relation, tuples, Vec::new())
    }

    pub fn retract_facts(&mut self, relation: &str, tuples: Vec<Tuple>) -> Result<bool> {
        self.update(relation, Vec::new(), tuples)
    }

    /// The maintained extension of derived predicate `predicate` of binding
    /// `id`. Evaluates only if the binding is dirty.
    pub fn read_derived(&mut self, id: BindingId, predicate: &str) -> Result<&Relation> {
        let target = self.bindings[id.0]
            .derived_map
            .get(predicate)
            .cloned()
            .ok_or_else(|| Error::UnknownRelation(predicate.to_owned()))?;
        if self.bindings[id.0].dirty {
            self.rederive(id)?;
        }
        Ok(self.db.get(&target).expect("derived relations are stored on derivation"))
    }

    /// Reads any relation, refreshing it first if it is a dirty derived one.
    pub fn read(&mut self, relation: &str) -> Result<&Relation> {
        if let Some(&id) = self.claimed.get(relation) {
            if self.bindings[id.0].dirty {
                self.rederive(id)?;
            }
        }
        self.db
            .get(relation)
            .ok_or_else(|| Error::UnknownRelation(relation.to_owned()))
    }

    fn rederive(&mut self, id: BindingId) -> Result<()> {
        let b = &self.bindings[id.0];
        let bases: BTreeMap<&str, &Relation> = b
            .base_map
            .iter()
            .filter_map(|(pred, target)| self.db.get(target).map(|r| (pred.as_str(), r)))
            .collect();
        let mut out = eval_stratified_with(&bases, &b.ruleset)?;
        let writes: Vec<Relation> = b
            .derived_map
            .iter()
            .map(|(pred, target)| out.remove_relation(pred).expect("derived predicate evaluated").with_name(target.clone()))
            .collect();
        for rel in writes {
            self.db.insert_relation(rel);
        }
        self.bindings[id.0].dirty = false;
        self.derivations += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval_stratified;
    use crate::parse::parse_rules;
    use crate::value::Constant;

    const TRANS: &str = "path(x,y) if edge(x,y)\npath(x,y) if edge(x,z), path(z,y)";
    const TRANS_ROLE: &str = "path(x,y) if edge(x,y)\npath(x,y) if edge(x,z), path(z,y)\npath(x,x) if role(x)";
    const TRANS_RH: &str =
        "transRH(x,y) if RH(x,y)\ntransRH(x,y) if RH(x,z), transRH(z,y)\ntransRH(x,x) if ROLES(x)";

    fn maps(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| ((*a).to_owned(), (*b).to_owned())).collect()
    }

    #[test]
    fn infer_single_pair() {
        let rs = parse_rules(TRANS).unwrap();
        let edge = Relation::from_pairs("RH", [("r1", "r2")]);
        let out = infer(&rs, &Binding::new().bind("edge", &edge), &["path"]).unwrap();
        assert_eq!(out[0], Relation::from_pairs("", [("r1", "r2")]));
        assert_eq!(out[0].name(), "path");
    }

    #[test]
    fn infer_chain_closure() {
        let rs = parse_rules(TRANS).unwrap();
        let edge = Relation::from_pairs("RH", [("r1", "r2"), ("r2", "r3")]);
        let out = infer(&rs, &Binding::new().bind("edge", &edge), &["path"]).unwrap();
        assert_eq!(out[0], Relation::from_pairs("", [("r1", "r2"), ("r2", "r3"), ("r1", "r3")]));
    }

    #[test]
    fn infer_reflexive_role() {
        let rs = parse_rules(TRANS_ROLE).unwrap();
        let roles = Relation::from_values("ROLES", ["r1"]);
        let edge = Relation::new("RH", 2);
        let out = infer(&rs, &Binding::new().bind("edge", &edge).bind("role", &roles), &["path"]).unwrap();
        assert_eq!(out[0], Relation::from_pairs("", [("r1", "r1")]));
    }

    #[test]
    fn infer_rejects_bad_queries_and_bindings() {
        let rs = parse_rules(TRANS).unwrap();
        let edge = Relation::from_pairs("e", [(1, 2)]);
        assert_eq!(
            infer(&rs, &Binding::new(), &["edge"]).unwrap_err(),
            Error::UnknownQuery("edge".into())
        );
        let unary = Relation::from_values("e", [1]);
        assert!(matches!(
            infer(&rs, &Binding::new().bind("edge", &unary), &["path"]),
            Err(Error::ArityConflict { .. })
        ));
        assert!(matches!(
            infer(&rs, &Binding::new().bind("path", &edge), &["path"]),
            Err(Error::UnknownBase(_))
        ));
    }

    #[test]
    fn infer_well_founded_mode_reports_undefined() {
        let rs = parse_rules("win(X) :- move(X,Y), not win(Y).").unwrap();
        let mv = Relation::from_pairs("move", [("a", "b"), ("b", "a"), ("c", "d")]);
        let out = infer_with(&rs, &Binding::new().bind("move", &mv), &["win"], InferMode::WellFounded).unwrap();
        assert_eq!(out.results[0], Relation::from_values("", ["c"]));
        assert_eq!(out.undefined[0], Relation::from_values("", ["a", "b"]));
        assert!(matches!(
            infer(&rs, &Binding::new().bind("move", &mv), &["win"]),
            Err(Error::NotStratifiable { .. })
        ));
    }

    fn rbac_store() -> (MaintainedStore, BindingId) {
        let mut store = MaintainedStore::new(Database::new());
        let id = store
            .register(
                parse_rules(TRANS_RH).unwrap(),
                maps(&[("RH", "RH"), ("ROLES", "ROLES")]),
                maps(&[("transRH", "transRH")]),
            )
            .unwrap();
        (store, id)
    }

    #[test]
    fn register_on_empty_bases() {
        let (mut store, id) = rbac_store();
        assert!(store.read_derived(id, "transRH").unwrap().is_empty());
    }

    #[test]
    fn register_derives_closure_and_reflexive_pairs() {
        let mut db = Database::new();
        db.insert_relation(Relation::from_pairs("RH", [("r1", "r2")]));
        db.insert_relation(Relation::from_values("ROLES", ["r1", "r2"]));
        let mut store = MaintainedStore::new(db);
        let id = store
            .register(
                parse_rules(TRANS_RH).unwrap(),
                maps(&[("RH", "RH"), ("ROLES", "ROLES")]),
                maps(&[("transRH", "transRH")]),
            )
            .unwrap();
        assert_eq!(
            store.read_derived(id, "transRH").unwrap(),
            &Relation::from_pairs("", [("r1", "r2"), ("r1", "r1"), ("r2", "r2")])
        );

        // Adding (r2,r3) with r3 a role extends the closure.
        store.update_base(id, "ROLES", vec![Tuple::unit("r3")], vec![]).unwrap();
        store.update_base(id, "RH", vec![Tuple::pair("r2", "r3")], vec![]).unwrap();
        let t = store.read_derived(id, "transRH").unwrap();
        for (a, b) in [("r2", "r3"), ("r1", "r3"), ("r3", "r3")] {
            assert!(t.contains(&[Constant::sym(a), Constant::sym(b)]), "{a},{b}");
        }
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn removing_only_edge_leaves_reflexive_pairs() {
        let (mut store, id) = rbac_store();
        store.assert_facts("ROLES", vec![Tuple::unit("r1"), Tuple::unit("r2")]).unwrap();
        store.assert_facts("RH", vec![Tuple::pair("r1", "r2")]).unwrap();
        store.retract_facts("RH", vec![Tuple::pair("r1", "r2")]).unwrap();
        assert_eq!(
            store.read_derived(id, "transRH").unwrap(),
            &Relation::from_pairs("", [("r1", "r1"), ("r2", "r2")])
        );
    }

    #[test]
    fn derived_relations_are_write_protected() {
        let (mut store, id) = rbac_store();
        assert_eq!(
            store.update_base(id, "transRH", vec![Tuple::pair("a", "b")], vec![]),
            Err(Error::DerivedWriteForbidden("transRH".into()))
        );
        assert_eq!(
            store.assert_facts("transRH", vec![Tuple::pair("a", "b")]),
            Err(Error::DerivedWriteForbidden("transRH".into()))
        );
    }

    #[test]
    fn second_claim_on_derived_relation_conflicts() {
        let (mut store, _) = rbac_store();
        let err = store
            .register(
                parse_rules(TRANS_RH).unwrap(),
                maps(&[("RH", "RH2"), ("ROLES", "ROLES")]),
                maps(&[("transRH", "transRH")]),
            )
            .unwrap_err();
        assert_eq!(err, Error::DerivedConflict("transRH".into()));
    }

    #[test]
    fn noop_update_skips_rederivation() {
        let (mut store, id) = rbac_store();
        store.assert_facts("ROLES", vec![Tuple::unit("r1")]).unwrap();
        let n = store.derivations();
        assert!(!store.assert_facts("ROLES", vec![Tuple::unit("r1")]).unwrap());
        assert!(!store.retract_facts("RH", vec![Tuple::pair("x", "y")]).unwrap());
        assert_eq!(store.derivations(), n);
        // Unrelated relations do not trigger either.
        store.assert_facts("USERS", vec![Tuple::unit("u1")]).unwrap();
        assert_eq!(store.derivations(), n);
        assert!(!store.binding(id).dirty);
    }

    #[test]
    fn batch_update_derives_once() {
        let (mut store, id) = rbac_store();
        let n = store.derivations();
        store
            .update_batch(vec![
                BaseChange {
                    relation: "ROLES".into(),
                    add: vec![Tuple::unit("a"), Tuple::unit("b")],
                    remove: vec![],
                },
                BaseChange {
                    relation: "RH".into(),
                    add: vec![Tuple::pair("a", "b")],
                    remove: vec![],
                },
            ])
            .unwrap();
        assert_eq!(store.derivations(), n + 1);
        assert_eq!(store.read_derived(id, "transRH").unwrap().len(), 3);
    }

    #[test]
    fn lazy_mode_derives_on_read() {
        let mut store = MaintainedStore::with_mode(Database::new(), Maintenance::Lazy);
        let id = store
            .register(
                parse_rules(TRANS).unwrap(),
                maps(&[("edge", "E")]),
                maps(&[("path", "P")]),
            )
            .unwrap();
        let n = store.derivations();
        store.assert_facts("E", vec![Tuple::pair(1, 2)]).unwrap();
        store.assert_facts("E", vec![Tuple::pair(2, 3)]).unwrap();
        assert_eq!(store.derivations(), n);
        assert!(store.binding(id).dirty);
        assert_eq!(store.read("P").unwrap().len(), 3);
        assert_eq!(store.derivations(), n + 1);
        let _ = store.read_derived(id, "path").unwrap();
        assert_eq!(store.derivations(), n + 1);
    }

    #[test]
    fn maintained_equals_fresh_evaluation() {
        let (mut store, id) = rbac_store();
        store.assert_facts("ROLES", (0..5).map(Tuple::unit).collect()).unwrap();
        store.assert_facts("RH", vec![Tuple::pair(0, 1), Tuple::pair(1, 2), Tuple::pair(3, 4)]).unwrap();
        let fresh = eval_stratified(store.db(), &parse_rules(TRANS_RH).unwrap()).unwrap();
        assert_eq!(store.read_derived(id, "transRH").unwrap(), fresh.get("transRH").unwrap());
    }
}
