//! Class-hierarchy analysis over AST fact bases.
//!
//! The analysis runs in four parts: class definitions and the extension
//! relation are extracted by rules ([`extract_class_relation`]), counted
//! ([`compute_statistics`]), measured by a memoized recursive height function
//! ([`height_analysis`]), and finally the descendants of every root class
//! are inferred by recursive rules and counted ([`desc_analysis`]).
//! [`run_pa`] composes the four parts into an [`AnalysisReport`].

mod report;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use setrules_core::{infer, parse_rules, Binding, Constant, Database, Relation, RuleSet};

pub use report::{AnalysisReport, CSV_COLUMNS};

pub const CLASS_EXTENDS_RS: &str = "\
rules class_extends_rs:
  defined(c) if ClassDef(_,c,_, _,_,_)
  extending(c,b) if ClassDef(_,c,baselist, _,_,_),
                    Member(baselist,base,_), Name(base,b,_)
";

pub const DESC_RS: &str = "\
rules desc_rs:
  desc(c,r) if roots(r), extending(c,r)
  desc(c,r) if desc(b,r), extending(c,b)
";

/// [`DESC_RS`] with the recursive rule's two hypotheses reversed.
pub const DESC_OPT_RS: &str = "\
rules desc_opt_rs:
  desc(c,r) if roots(r), extending(c,r)
  desc(c,r) if extending(c,b), desc(b,r)
";

pub type Pair = (Constant, Constant);

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("average over zero defined classes")]
    EmptyAnalysis,
    #[error("class hierarchy is cyclic: {}", cycle.join(" -> "))]
    CyclicHierarchy { cycle: Vec<String> },
    #[error(transparent)]
    Engine(#[from] setrules_core::Error),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PaVariant {
    Pa,
    /// Descendant rules with the recursive body reversed.
    PaOpt,
}

impl PaVariant {
    pub fn name(self) -> &'static str {
        match self {
            PaVariant::Pa => "pa",
            PaVariant::PaOpt => "paopt",
        }
    }

    pub fn from_name(name: &str) -> Option<PaVariant> {
        [PaVariant::Pa, PaVariant::PaOpt]
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(name))
    }

    fn rules(self) -> RuleSet {
        parse_rules(match self {
            PaVariant::Pa => DESC_RS,
            PaVariant::PaOpt => DESC_OPT_RS,
        })
        .expect("built-in rules parse")
    }
}

fn relation_of(fb: &Database, name: &str, arity: usize) -> Relation {
    fb.get(name).cloned().unwrap_or_else(|| Relation::new(name, arity))
}

/// Defined class names and `(subclass, base)` name pairs, by the class
/// extension rules. Relations other than `ClassDef`, `Member` and `Name`
/// are ignored.
pub fn extract_class_relation(fb: &Database) -> Result<(BTreeSet<Constant>, BTreeSet<Pair>)> {
    let rs = parse_rules(CLASS_EXTENDS_RS).expect("built-in rules parse");
    let class_def = relation_of(fb, "ClassDef", 6);
    let member = relation_of(fb, "Member", 3);
    let name = relation_of(fb, "Name", 3);
    let binding = Binding::new()
        .bind("ClassDef", &class_def)
        .bind("Member", &member)
        .bind("Name", &name);
    let out = infer(&rs, &binding, &["defined", "extending"])?;
    let defined = out[0].iter().map(|t| t[0]).collect();
    let extending = out[1].pairs().collect();
    Ok((defined, extending))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statistics {
    pub num_defined: usize,
    pub num_extending: usize,
    /// Absent when no class is defined.
    pub avg_extending: Option<Ratio<u64>>,
    pub roots: BTreeSet<Constant>,
}

/// `num_extending / num_defined` as an exact fraction.
pub fn avg_extending(num_extending: usize, num_defined: usize) -> Result<Ratio<u64>> {
    if num_defined == 0 {
        return Err(AnalysisError::EmptyAnalysis);
    }
    Ok(Ratio::new(num_extending as u64, num_defined as u64))
}

/// Classes that some class extends but that extend nothing themselves.
pub fn roots(extending: &BTreeSet<Pair>) -> BTreeSet<Constant> {
    let subclasses: BTreeSet<Constant> = extending.iter().map(|&(c, _)| c).collect();
    extending
        .iter()
        .map(|&(_, b)| b)
        .filter(|b| !subclasses.contains(b))
        .collect()
}

pub fn compute_statistics(defined: &BTreeSet<Constant>, extending: &BTreeSet<Pair>) -> Statistics {
    Statistics {
        num_defined: defined.len(),
        num_extending: extending.len(),
        avg_extending: avg_extending(extending.len(), defined.len()).ok(),
        roots: roots(extending),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightResult {
    pub max_height: u64,
    pub roots_max_height: BTreeSet<Constant>,
    /// Number of times a height was computed rather than read from the cache.
    pub evaluations: u64,
}

struct Heights<'a> {
    subclasses: &'a BTreeMap<Constant, Vec<Constant>>,
    memo: Option<BTreeMap<Constant, u64>>,
    path: Vec<Constant>,
    evaluations: u64,
}

impl Heights<'_> {
    fn height(&mut self, c: Constant) -> Result<u64> {
        if let Some(&h) = self.memo.as_ref().and_then(|m| m.get(&c)) {
            return Ok(h);
        }
        if let Some(start) = self.path.iter().position(|&p| p == c) {
            let mut cycle: Vec<String> = self.path[start..].iter().map(ToString::to_string).collect();
            cycle.push(c.to_string());
            return Err(AnalysisError::CyclicHierarchy { cycle });
        }
        self.evaluations += 1;
        self.path.push(c);
        let mut h = 0;
        let subs = self.subclasses.get(&c).map(Vec::as_slice).unwrap_or_default();
        for &d in subs {
            h = h.max(1 + self.height(d)?);
        }
        self.path.pop();
        if let Some(memo) = &mut self.memo {
            memo.insert(c, h);
        }
        Ok(h)
    }
}

fn subclass_map(extending: &BTreeSet<Pair>) -> BTreeMap<Constant, Vec<Constant>> {
    let mut subs: BTreeMap<Constant, Vec<Constant>> = BTreeMap::new();
    for &(c, b) in extending {
        subs.entry(b).or_default().push(c);
    }
    subs
}

/// Maximum height over `roots` with memoized heights.
pub fn height_analysis(extending: &BTreeSet<Pair>, roots: &BTreeSet<Constant>) -> Result<HeightResult> {
    height_analysis_with(extending, roots, true)
}

/// As [`height_analysis`], optionally without the cache (exponential on
/// shared subclasses).
pub fn height_analysis_with(
    extending: &BTreeSet<Pair>,
    roots: &BTreeSet<Constant>,
    memoize: bool,
) -> Result<HeightResult> {
    let subclasses = subclass_map(extending);
    let mut heights = Heights {
        subclasses: &subclasses,
        memo: memoize.then(BTreeMap::new),
        path: Vec::new(),
        evaluations: 0,
    };
    let per_root = roots
        .iter()
        .map(|&r| Ok((r, heights.height(r)?)))
        .collect::<Result<Vec<_>>>()?;
    let (max_height, roots_max_height) = argmax(&per_root);
    Ok(HeightResult {
        max_height,
        roots_max_height,
        evaluations: heights.evaluations,
    })
}

/// Maximum value and the keys attaining it; 0 and no keys when empty.
fn argmax(values: &[(Constant, u64)]) -> (u64, BTreeSet<Constant>) {
    let max = values.iter().map(|&(_, v)| v).max().unwrap_or(0);
    let keys = values.iter().filter(|&&(_, v)| v == max).map(|&(k, _)| k).collect();
    (max, keys)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DescResult {
    /// `(class, root)`: `class` descends from `root`.
    pub desc: BTreeSet<Pair>,
    pub max_desc: u64,
    pub roots_max_desc: BTreeSet<Constant>,
}

/// Descendants of each root by the descendant rules, then the roots with
/// the most descendants.
pub fn desc_analysis(extending: &BTreeSet<Pair>, roots: &BTreeSet<Constant>, variant: PaVariant) -> Result<DescResult> {
    let ext = Relation::from_pairs("extending", extending.iter().copied());
    let root_rel = Relation::from_values("roots", roots.iter().copied());
    let binding = Binding::new().bind("extending", &ext).bind("roots", &root_rel);
    let desc: BTreeSet<Pair> = infer(&variant.rules(), &binding, &["desc"])?[0].pairs().collect();

    // One counting pass fills the cache for every root.
    let mut num_desc: BTreeMap<Constant, u64> = roots.iter().map(|&r| (r, 0)).collect();
    for (_, r) in &desc {
        *num_desc.entry(*r).or_default() += 1;
    }
    let per_root: Vec<(Constant, u64)> = num_desc.into_iter().collect();
    let (max_desc, roots_max_desc) = argmax(&per_root);
    Ok(DescResult {
        desc,
        max_desc,
        roots_max_desc,
    })
}

/// All four parts over one fact base.
pub fn run_pa(fb: &Database, variant: PaVariant) -> Result<AnalysisReport> {
    let (defined, extending) = extract_class_relation(fb)?;
    let stats = compute_statistics(&defined, &extending);
    let height = height_analysis(&extending, &stats.roots)?;
    let desc = desc_analysis(&extending, &stats.roots, variant)?;
    Ok(AnalysisReport {
        num_defined: stats.num_defined,
        num_extending: stats.num_extending,
        avg_extending: stats.avg_extending,
        defined,
        extending,
        roots: stats.roots,
        max_height: height.max_height,
        roots_max_height: height.roots_max_height,
        desc: desc.desc,
        max_desc: desc.max_desc,
        roots_max_desc: desc.roots_max_desc,
    })
}
