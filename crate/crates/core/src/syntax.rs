//! Rule syntax tree and rule-set validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::value::Constant;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Constant),
    /// `_`: matches anything, binds nothing.
    Wildcard,
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_owned())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Constant> for Term {
    fn from(c: Constant) -> Self {
        Term::Const(c)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Wildcard => f.write_str("_"),
            Term::Const(Constant::Int(i)) => write!(f, "{i}"),
            Term::Const(Constant::Sym(s)) => {
                write!(f, "'{}'", s.as_str().replace('\\', "\\\\").replace('\'', "\\'"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    pub fn new(predicate: &str, args: Vec<Term>) -> Literal {
        Literal {
            predicate: predicate.to_owned(),
            args,
            negated: false,
        }
    }

    pub fn negate(mut self) -> Literal {
        self.negated = true;
        self
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> + '_ {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}(", self.predicate)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// `head if body`. A rule with an empty body and a ground head is a fact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Literal,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Literal, body: Vec<Literal>) -> Rule {
        Rule { head, body }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn positive_body(&self) -> impl Iterator<Item = &Literal> + '_ {
        self.body.iter().filter(|l| !l.negated)
    }

    pub fn negative_body(&self) -> impl Iterator<Item = &Literal> + '_ {
        self.body.iter().filter(|l| l.negated)
    }

    /// Range restriction and negation safety.
    pub fn check_safety(&self) -> Result<()> {
        let bound: BTreeSet<&str> = self.positive_body().flat_map(Literal::vars).collect();
        let unsafe_var = |var: &str| Error::UnsafeRule {
            rule: self.to_string(),
            variable: var.to_owned(),
        };
        if self.head.negated {
            return Err(Error::UnsafeRule {
                rule: self.to_string(),
                variable: "<negated head>".into(),
            });
        }
        for term in &self.head.args {
            match term {
                Term::Var(v) if !bound.contains(v.as_str()) => return Err(unsafe_var(v)),
                Term::Wildcard => return Err(unsafe_var("_")),
                _ => {}
            }
        }
        for lit in self.negative_body() {
            if let Some(v) = lit.vars().find(|v| !bound.contains(v)) {
                return Err(unsafe_var(v));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " if " } else { ", " })?;
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

/// A validated, named set of rules.
///
/// Derived predicates are those in some head; base predicates appear only in
/// bodies. Every predicate has a single arity across the set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    name: String,
    rules: Vec<Rule>,
    base_preds: BTreeSet<String>,
    derived_preds: BTreeSet<String>,
    arities: BTreeMap<String, usize>,
}

impl RuleSet {
    pub fn new(name: impl Into<String>, rules: Vec<Rule>) -> Result<RuleSet> {
        let mut arities: BTreeMap<String, usize> = BTreeMap::new();
        let mut derived_preds = BTreeSet::new();
        let mut mentioned = BTreeSet::new();
        for rule in &rules {
            rule.check_safety()?;
            for lit in std::iter::once(&rule.head).chain(&rule.body) {
                match arities.get(&lit.predicate) {
                    Some(&expected) if expected != lit.arity() => {
                        return Err(Error::ArityConflict {
                            predicate: lit.predicate.clone(),
                            expected,
                            found: lit.arity(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        arities.insert(lit.predicate.clone(), lit.arity());
                    }
                }
                mentioned.insert(lit.predicate.clone());
            }
            derived_preds.insert(rule.head.predicate.clone());
        }
        let base_preds = mentioned.difference(&derived_preds).cloned().collect();
        Ok(RuleSet {
            name: name.into(),
            rules,
            base_preds,
            derived_preds,
            arities,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn base_preds(&self) -> &BTreeSet<String> {
        &self.base_preds
    }

    pub fn derived_preds(&self) -> &BTreeSet<String> {
        &self.derived_preds
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.arities.get(predicate).copied()
    }

    pub fn is_derived(&self, predicate: &str) -> bool {
        self.derived_preds.contains(predicate)
    }

    pub fn is_base(&self, predicate: &str) -> bool {
        self.base_preds.contains(predicate)
    }

    /// True iff no body literal is negated.
    pub fn is_positive(&self) -> bool {
        self.rules.iter().all(|r| r.negative_body().next().is_none())
    }

    /// Same rule set with its rules replaced; revalidates.
    pub fn with_rules(&self, rules: Vec<Rule>) -> Result<RuleSet> {
        RuleSet::new(self.name.clone(), rules)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rules {}:", self.name)?;
        for r in &self.rules {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(p: &str, vars: &[&str]) -> Literal {
        Literal::new(p, vars.iter().map(|v| Term::var(v)).collect())
    }

    #[test]
    fn base_and_derived_partition() {
        let rs = RuleSet::new(
            "trans",
            vec![
                Rule::new(lit("path", &["x", "y"]), vec![lit("edge", &["x", "y"])]),
                Rule::new(
                    lit("path", &["x", "y"]),
                    vec![lit("edge", &["x", "z"]), lit("path", &["z", "y"])],
                ),
            ],
        )
        .unwrap();
        assert_eq!(rs.derived_preds().iter().collect::<Vec<_>>(), ["path"]);
        assert_eq!(rs.base_preds().iter().collect::<Vec<_>>(), ["edge"]);
        assert!(rs.base_preds().is_disjoint(rs.derived_preds()));
    }

    #[test]
    fn head_variable_must_be_bound() {
        let r = Rule::new(lit("p", &["x", "y"]), vec![lit("q", &["x"])]);
        assert!(matches!(r.check_safety(), Err(Error::UnsafeRule { variable, .. }) if variable == "y"));
    }

    #[test]
    fn negated_variable_must_be_bound() {
        let r = Rule::new(lit("p", &["x"]), vec![lit("q", &["x"]), lit("r", &["x", "z"]).negate()]);
        assert!(matches!(r.check_safety(), Err(Error::UnsafeRule { variable, .. }) if variable == "z"));
    }
}
