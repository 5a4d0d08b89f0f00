//! Set-valued relations and the database that names them.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::BuildHasherDefault;

use indexmap::IndexSet;
use rustc_hash::FxHasher;

use crate::error::{Error, Result};
use crate::value::{Constant, Tuple};

pub(crate) type TupleSet = IndexSet<Tuple, BuildHasherDefault<FxHasher>>;

/// A named set of tuples of one arity.
#[derive(Clone)]
pub struct Relation {
    name: String,
    arity: usize,
    tuples: TupleSet,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize) -> Relation {
        Relation {
            name: name.into(),
            arity,
            tuples: TupleSet::default(),
        }
    }

    /// Builds a relation from tuples, checking every tuple has `arity` items.
    pub fn from_tuples(
        name: impl Into<String>,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Relation> {
        let mut rel = Relation::new(name, arity);
        for t in tuples {
            rel.insert(t)?;
        }
        Ok(rel)
    }

    /// Binary relation from pairs.
    pub fn from_pairs<A, B>(name: impl Into<String>, pairs: impl IntoIterator<Item = (A, B)>) -> Relation
    where
        A: Into<Constant>,
        B: Into<Constant>,
    {
        let mut rel = Relation::new(name, 2);
        for (a, b) in pairs {
            rel.tuples.insert(Tuple::pair(a, b));
        }
        rel
    }

    /// Unary relation from values.
    pub fn from_values<A: Into<Constant>>(name: impl Into<String>, values: impl IntoIterator<Item = A>) -> Relation {
        let mut rel = Relation::new(name, 1);
        for a in values {
            rel.tuples.insert(Tuple::unit(a));
        }
        rel
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, items: &[Constant]) -> bool {
        self.tuples.contains(items)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> + '_ {
        self.tuples.iter()
    }

    /// Inserts a tuple; returns whether it was new.
    pub fn insert(&mut self, tuple: Tuple) -> Result<bool> {
        self.check_arity(tuple.arity())?;
        Ok(self.tuples.insert(tuple))
    }

    /// Removes a tuple; returns whether it was present.
    pub fn remove(&mut self, items: &[Constant]) -> bool {
        self.tuples.swap_remove(items)
    }

    pub fn clear(&mut self) {
        self.tuples.clear();
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Relation {
        self.name = name.into();
        self
    }

    /// Tuples in canonical (sorted) order.
    pub fn sorted(&self) -> Vec<Tuple> {
        let mut v: Vec<Tuple> = self.tuples.iter().cloned().collect();
        v.sort_unstable();
        v
    }

    /// Set of pairs, for binary relations.
    pub fn pairs(&self) -> impl Iterator<Item = (Constant, Constant)> + '_ {
        self.tuples.iter().filter(|t| t.arity() == 2).map(|t| (t[0], t[1]))
    }

    /// True iff every tuple of `self` is in `other`.
    pub fn is_subset(&self, other: &Relation) -> bool {
        self.tuples.iter().all(|t| other.tuples.contains(t))
    }

    pub(crate) fn tuple_set(&self) -> &TupleSet {
        &self.tuples
    }

    pub(crate) fn from_set(name: String, arity: usize, tuples: TupleSet) -> Relation {
        Relation { name, arity, tuples }
    }

    fn check_arity(&self, found: usize) -> Result<()> {
        if found != self.arity {
            return Err(Error::ArityConflict {
                predicate: self.name.clone(),
                expected: self.arity,
                found,
            });
        }
        Ok(())
    }
}

/// Set equality on contents and arity; the name is ignored.
impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.tuples == other.tuples
    }
}

impl Eq for Relation {}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ", self.name, self.arity)?;
        f.debug_set().entries(self.sorted()).finish()
    }
}

/// Relations keyed by name. A name is bound to exactly one arity.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.relations.keys().map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> + '_ {
        self.relations.values()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Total number of tuples over all relations.
    pub fn fact_count(&self) -> usize {
        self.relations.values().map(Relation::len).sum()
    }

    /// Adds or replaces a relation under its own name.
    pub fn insert_relation(&mut self, relation: Relation) -> Option<Relation> {
        self.relations.insert(relation.name.clone(), relation)
    }

    pub fn remove_relation(&mut self, name: &str) -> Option<Relation> {
        self.relations.remove(name)
    }

    /// Returns the named relation, creating it empty with `arity` if absent.
    pub fn ensure(&mut self, name: &str, arity: usize) -> Result<&mut Relation> {
        let rel = self
            .relations
            .entry(name.to_owned())
            .or_insert_with(|| Relation::new(name, arity));
        rel.check_arity(arity)?;
        Ok(rel)
    }

    /// Set union into the named relation. Tuples must share one arity,
    /// matching the relation's arity if it exists. Returns the number of
    /// tuples that were new.
    pub fn assert_facts(&mut self, name: &str, tuples: impl IntoIterator<Item = Tuple>) -> Result<usize> {
        let tuples: Vec<Tuple> = tuples.into_iter().collect();
        let Some(first) = tuples.first() else {
            return Ok(0);
        };
        let arity = first.arity();
        if let Some(bad) = tuples.iter().find(|t| t.arity() != arity) {
            return Err(Error::ArityConflict {
                predicate: name.to_owned(),
                expected: arity,
                found: bad.arity(),
            });
        }
        if let Some(existing) = self.relations.get(name) {
            existing.check_arity(arity)?;
        }
        let rel = self.ensure(name, arity)?;
        let mut added = 0;
        for t in tuples {
            if rel.insert(t)? {
                added += 1;
            }
        }
        Ok(added)
    }

    /// Set difference on the named relation. Absent tuples and absent
    /// relations are no-ops. Returns the number of tuples removed.
    pub fn retract_facts(&mut self, name: &str, tuples: impl IntoIterator<Item = Tuple>) -> Result<usize> {
        let Some(rel) = self.relations.get_mut(name) else {
            return Ok(0);
        };
        let mut removed = 0;
        for t in tuples {
            rel.check_arity(t.arity())?;
            if rel.remove(&t) {
                removed += 1;
            }
        }
        Ok(removed)
    }
}

impl fmt::Debug for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.relations.values()).finish()
    }
}
