//! Translating function symbols away.
//!
//! A functor argument `f(t1, ..., tk)` of an atom is replaced in place by the
//! constant `'f'` followed by `t1, ..., tk`, widening the predicate by `k`
//! positions: `isa(prov(Y,X), provi)` becomes `isa('prov', Y, X, provi)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::parse::{lower_rules, parse_raw, RawAtom, RawRule, RawTerm};
use crate::syntax::RuleSet;
use crate::value::Constant;

/// Parses rule text that may use non-nested function symbols as predicate
/// arguments and returns the flattened, validated rule set. Functor-free text
/// yields the same rule set as [`crate::parse_rules`].
pub fn flatten_function_symbols(text: &str) -> Result<RuleSet> {
    let (name, raw) = parse_raw(text)?;
    let mut functor_arity = BTreeMap::new();
    let flat = raw
        .into_iter()
        .map(|r| {
            Ok(RawRule {
                head: flatten_atom(r.head, &mut functor_arity)?,
                body: r
                    .body
                    .into_iter()
                    .map(|a| flatten_atom(a, &mut functor_arity))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RuleSet::new(name.unwrap_or_else(|| "rules".into()), lower_rules(flat)?)
}

fn flatten_atom(atom: RawAtom, functor_arity: &mut BTreeMap<String, usize>) -> Result<RawAtom> {
    let mut args = Vec::with_capacity(atom.args.len());
    for arg in atom.args {
        match arg {
            RawTerm::Term(t) => args.push(RawTerm::Term(t)),
            RawTerm::Functor(name, inner, _, _) => {
                if let Some(nested) = inner.iter().find_map(|t| match t {
                    RawTerm::Functor(n, ..) => Some(n.clone()),
                    RawTerm::Term(_) => None,
                }) {
                    return Err(Error::NestedFunctor {
                        functor: format!("{name}({nested}(..))"),
                    });
                }
                match functor_arity.get(&name) {
                    Some(&expected) if expected != inner.len() => {
                        return Err(Error::FunctorArity {
                            functor: name,
                            expected,
                            found: inner.len(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        functor_arity.insert(name.clone(), inner.len());
                    }
                }
                args.push(RawTerm::Term(crate::syntax::Term::Const(Constant::sym(&name))));
                args.extend(inner);
            }
        }
    }
    Ok(RawAtom { args, ..atom })
}
