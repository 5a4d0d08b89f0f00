use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("predicate `{predicate}` used with arity {found}, previously {expected}")]
    ArityConflict {
        predicate: String,
        expected: usize,
        found: usize,
    },

    #[error("unsafe rule `{rule}`: variable `{variable}` is not bound by a positive body literal")]
    UnsafeRule { rule: String, variable: String },

    #[error("rule set is not stratifiable: negation in cycle {}", cycle.join(" -> "))]
    NotStratifiable { cycle: Vec<String> },

    #[error("nested function symbol `{functor}` is not supported")]
    NestedFunctor { functor: String },

    #[error("function symbol `{functor}` used with arity {found}, previously {expected}")]
    FunctorArity {
        functor: String,
        expected: usize,
        found: usize,
    },

    #[error("`{0}` is not a derived predicate of the rule set")]
    UnknownQuery(String),

    #[error("`{0}` is not a base predicate of the rule set")]
    UnknownBase(String),

    #[error("relation `{0}` is already maintained by another binding")]
    DerivedConflict(String),

    #[error("relation `{0}` is derived and can only be updated by inference")]
    DerivedWriteForbidden(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
}
