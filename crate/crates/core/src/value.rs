//! Constants, interned symbols and tuples.
//!
//! Symbols are interned process-wide: the interner hands out `&'static str`
//! handles, so equality and hashing work on the pointer while ordering falls
//! back to the text. Interned text is never freed.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Deref;
use std::sync::{Mutex, OnceLock};

use rustc_hash::FxHashSet;
use smallvec::SmallVec;

fn interner() -> &'static Mutex<FxHashSet<&'static str>> {
    static INTERNER: OnceLock<Mutex<FxHashSet<&'static str>>> = OnceLock::new();
    INTERNER.get_or_init(Default::default)
}

/// An interned symbol. Two symbols are equal iff their text is equal.
#[derive(Clone, Copy)]
pub struct Symbol(&'static str);

impl Symbol {
    pub fn intern(text: &str) -> Symbol {
        let mut table = interner().lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&existing) = table.get(text) {
            return Symbol(existing);
        }
        let leaked: &'static str = Box::leak(text.to_owned().into_boxed_str());
        table.insert(leaked);
        Symbol(leaked)
    }

    pub fn as_str(&self) -> &'static str {
        self.0
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0, other.0)
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.0.as_ptr() as usize).hash(state);
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.0.cmp(other.0)
        }
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// A ground value: an integer or an interned symbol.
///
/// Integers sort before symbols; symbols sort by text.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Int(i64),
    Sym(Symbol),
}

impl Constant {
    pub fn sym(text: &str) -> Constant {
        Constant::Sym(Symbol::intern(text))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Constant::Int(i) => Some(*i),
            Constant::Sym(_) => None,
        }
    }

    pub fn as_sym(&self) -> Option<Symbol> {
        match self {
            Constant::Sym(s) => Some(*s),
            Constant::Int(_) => None,
        }
    }
}

impl From<i64> for Constant {
    fn from(v: i64) -> Self {
        Constant::Int(v)
    }
}

impl From<&str> for Constant {
    fn from(v: &str) -> Self {
        Constant::sym(v)
    }
}

impl From<Symbol> for Constant {
    fn from(v: Symbol) -> Self {
        Constant::Sym(v)
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(i) => write!(f, "{i}"),
            Constant::Sym(s) => write!(f, "{s:?}"),
        }
    }
}

/// Renders the constant in fact-file syntax: integers bare, symbols bare when
/// they read back as symbols, single-quoted otherwise.
impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(i) => write!(f, "{i}"),
            Constant::Sym(s) => {
                let text = s.as_str();
                if is_bare_symbol(text) {
                    f.write_str(text)
                } else {
                    f.write_str("'")?;
                    for ch in text.chars() {
                        match ch {
                            '\'' => f.write_str("\\'")?,
                            '\\' => f.write_str("\\\\")?,
                            '\n' => f.write_str("\\n")?,
                            '\t' => f.write_str("\\t")?,
                            c => write!(f, "{c}")?,
                        }
                    }
                    f.write_str("'")
                }
            }
        }
    }
}

pub(crate) fn is_bare_symbol(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    if matches!(text, "not" | "if" | "rules") {
        return false;
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A fixed-arity row of constants.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Tuple(SmallVec<[Constant; 3]>);

impl Tuple {
    pub fn new(items: impl IntoIterator<Item = Constant>) -> Tuple {
        Tuple(items.into_iter().collect())
    }

    pub fn from_slice(items: &[Constant]) -> Tuple {
        Tuple(SmallVec::from_slice(items))
    }

    pub fn pair(a: impl Into<Constant>, b: impl Into<Constant>) -> Tuple {
        Tuple(smallvec::smallvec![a.into(), b.into()])
    }

    pub fn unit(a: impl Into<Constant>) -> Tuple {
        Tuple(smallvec::smallvec![a.into()])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn items(&self) -> &[Constant] {
        &self.0
    }
}

impl Deref for Tuple {
    type Target = [Constant];

    fn deref(&self) -> &[Constant] {
        &self.0
    }
}

// Hash as the slice so that `Borrow<[Constant]>` lookups agree.
impl Hash for Tuple {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.as_slice().hash(state)
    }
}

impl Borrow<[Constant]> for Tuple {
    fn borrow(&self) -> &[Constant] {
        &self.0
    }
}

impl FromIterator<Constant> for Tuple {
    fn from_iter<I: IntoIterator<Item = Constant>>(iter: I) -> Self {
        Tuple(iter.into_iter().collect())
    }
}

impl fmt::Debug for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:?}")?;
        }
        write!(f, ")")
    }
}
