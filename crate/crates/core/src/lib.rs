//! An embedded Datalog engine.
//!
//! Predicates are set-valued: a [`Database`] maps names to [`Relation`]s and
//! rule sets ([`RuleSet`]) derive new relations from them. Evaluation is
//! bottom-up and semi-naive ([`eval_stratified`]), with a naive oracle
//! ([`eval_naive`]) and a well-founded evaluator for programs whose negation
//! is not stratifiable ([`eval_well_founded`]).
//!
//! [`infer`] evaluates a rule set over an explicit per-call [`Binding`];
//! [`MaintainedStore`] keeps derived relations current as their base
//! relations are updated.

mod error;
mod eval;
mod flatten;
mod infer;
pub mod loops;
mod parse;
pub mod random;
mod relation;
mod stratify;
mod syntax;
mod value;

pub use error::{Error, Result};
pub use eval::{eval_naive, eval_stratified, eval_well_founded, WfResult};
pub use flatten::flatten_function_symbols;
pub use infer::{
    infer, infer_with, BaseChange, Binding, BindingId, InferMode, Inferred, MaintainedBinding, MaintainedStore,
    Maintenance,
};
pub use parse::{parse_facts, parse_facts_into, parse_rules, parse_rules_named, write_facts, Surface};
pub use relation::{Database, Relation};
pub use stratify::{stratify, Stratification};
pub use syntax::{Literal, Rule, RuleSet, Term};
pub use value::{Constant, Symbol, Tuple};

/// Rule sets used throughout the benchmarks, in line syntax.
pub mod rulesets {
    /// Transitive closure of `edge`.
    pub const TRANS: &str = "\
rules trans_rs:
  path(x,y) if edge(x,y)
  path(x,y) if edge(x,z), path(z,y)
";

    /// Transitive closure with the recursive rule's body reversed.
    pub const TRANS_REV: &str = "\
rules trans_rev_rs:
  path(x,y) if edge(x,y)
  path(x,y) if path(x,z), edge(z,y)
";

    /// Closure plus reflexive pairs for every `role`.
    pub const TRANS_ROLE: &str = "\
rules trans_role_rs:
  path(x,y) if edge(x,y)
  path(x,y) if edge(x,z), path(z,y)
  path(x,x) if role(x)
";

    /// Role hierarchy closure maintained over `RH` and `ROLES`.
    pub const TRANS_RH: &str = "\
rules transRH_rs:
  transRH(x,y) if RH(x,y)
  transRH(x,y) if RH(x,z), transRH(z,y)
  transRH(x,x) if ROLES(x)
";

    /// [`TRANS_RH`] without its first rule, which the other two subsume
    /// whenever every `RH` descendant is in `ROLES`.
    pub const TRANS_RH_SHORT: &str = "\
rules transRH_short_rs:
  transRH(x,y) if RH(x,z), transRH(z,y)
  transRH(x,x) if ROLES(x)
";

    /// Same generation over `par(child, parent)`.
    pub const SG: &str = "\
sg(X,Y) :- par(X,P), par(Y,P).
sg(X,Y) :- par(X,P), sg(P,Q), par(Y,Q).
";

    /// Pairs related by ancestry, which are therefore not same-generation
    /// candidates of interest.
    pub const NONSG: &str = "\
anc(X,Y) :- par(X,Y).
anc(X,Y) :- par(X,Z), anc(Z,Y).
nonsg(X,Y) :- anc(X,Y).
nonsg(X,Y) :- anc(Y,X).
";

    /// Same generation minus ancestry, by stratified negation.
    pub const MODSG: &str = "\
sg(X,Y) :- par(X,P), par(Y,P).
sg(X,Y) :- par(X,P), sg(P,Q), par(Y,Q).
anc(X,Y) :- par(X,Y).
anc(X,Y) :- par(X,Z), anc(Z,Y).
nonsg(X,Y) :- anc(X,Y).
nonsg(X,Y) :- anc(Y,X).
sg2(X,Y) :- sg(X,Y), not nonsg(X,Y).
";

    /// The win-not-win game.
    pub const WIN: &str = "win(X) :- move(X,Y), not win(Y).\n";
}
