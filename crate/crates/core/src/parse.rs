//! Rule and fact parsers.
//!
//! Two rule surfaces are accepted and auto-detected:
//!
//! * line style: `path(x,y) if edge(x,z), path(z,y)`, one rule per line, an
//!   optional `rules NAME:` header, `#` comments. A rule continues onto the
//!   next line after a trailing comma. Bare identifiers in argument position
//!   are variables; constants are integers or single-quoted strings.
//! * clause style: `path(X,Y) :- edge(X,Z), path(Z,Y).` with `%` comments.
//!   Variables start with an uppercase letter or `_`; lowercase identifiers,
//!   integers and single-quoted strings are constants. Negation is `not` or
//!   `\+`.
//!
//! A source is clause style iff it contains `:-` or a `.` terminator.

use crate::error::{Error, Result};
use crate::relation::Database;
use crate::syntax::{Literal, Rule, RuleSet, Term};
use crate::value::{Constant, Tuple};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Dot,
    ColonDash,
    Colon,
    NotOp,
    Newline,
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut line = 1;
    let mut line_start = 0;
    while let Some(&(pos, c)) = chars.peek() {
        let column = pos - line_start + 1;
        let mut push = |tok| out.push(Token { tok, line, column });
        match c {
            '\n' => {
                chars.next();
                push(Tok::Newline);
                line += 1;
                line_start = pos + 1;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' | '%' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                push(Tok::LParen);
            }
            ')' => {
                chars.next();
                push(Tok::RParen);
            }
            ',' => {
                chars.next();
                push(Tok::Comma);
            }
            '.' => {
                chars.next();
                push(Tok::Dot);
            }
            ':' => {
                chars.next();
                if matches!(chars.peek(), Some(&(_, '-'))) {
                    chars.next();
                    push(Tok::ColonDash);
                } else {
                    push(Tok::Colon);
                }
            }
            '\\' => {
                chars.next();
                match chars.next() {
                    Some((_, '+')) => push(Tok::NotOp),
                    _ => return Err(syntax(line, column, "expected `\\+`")),
                }
            }
            '\'' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None | Some((_, '\n')) => {
                            return Err(syntax(line, column, "unterminated quoted string"))
                        }
                        Some((_, '\'')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, 'n')) => s.push('\n'),
                            Some((_, 't')) => s.push('\t'),
                            Some((_, c)) if c != '\n' => s.push(c),
                            _ => return Err(syntax(line, column, "bad escape in quoted string")),
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
                push(Tok::Str(s));
            }
            c if c.is_ascii_digit() || c == '-' => {
                let start = pos;
                chars.next();
                let mut end = pos + c.len_utf8();
                while let Some(&(p, d)) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    end = p + 1;
                    chars.next();
                }
                let lexeme = &text[start..end];
                let value = lexeme
                    .parse::<i64>()
                    .map_err(|_| syntax(line, column, format!("bad integer `{lexeme}`")))?;
                push(Tok::Int(value));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = pos;
                let mut end = pos;
                while let Some(&(p, d)) = chars.peek() {
                    if !(d.is_ascii_alphanumeric() || d == '_') {
                        break;
                    }
                    end = p + 1;
                    chars.next();
                }
                push(Tok::Ident(text[start..end].to_owned()));
            }
            other => return Err(syntax(line, column, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: text.len() - line_start + 1,
    });
    Ok(out)
}

/// Argument term before function symbols are flattened away.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum RawTerm {
    Term(Term),
    Functor(String, Vec<RawTerm>, usize, usize),
}

#[derive(Clone, Debug)]
pub(crate) struct RawAtom {
    pub predicate: String,
    pub args: Vec<RawTerm>,
    pub negated: bool,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct RawRule {
    pub head: RawAtom,
    pub body: Vec<RawAtom>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Surface {
    Line,
    Clause,
}

pub(crate) fn detect_surface(tokens: &[Token]) -> Surface {
    if tokens
        .iter()
        .any(|t| matches!(t.tok, Tok::ColonDash | Tok::Dot))
    {
        Surface::Clause
    } else {
        Surface::Line
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    surface: Surface,
    depth: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &Token {
        let mut i = self.pos;
        // Inside parentheses and in clause style, newlines are insignificant.
        if self.depth > 0 || self.surface == Surface::Clause {
            while self.tokens[i].tok == Tok::Newline {
                i += 1;
            }
        }
        &self.tokens[i]
    }

    fn next(&mut self) -> Token {
        if self.depth > 0 || self.surface == Surface::Clause {
            self.skip_newlines();
        }
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while self.tokens[self.pos].tok == Tok::Newline {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(syntax(t.line, t.column, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    fn atom(&mut self) -> Result<RawAtom> {
        let t = self.next();
        let Tok::Ident(name) = t.tok else {
            return Err(syntax(t.line, t.column, format!("expected predicate, found {}", describe(&t.tok))));
        };
        let mut args = Vec::new();
        if self.peek().tok == Tok::LParen {
            self.next();
            self.depth += 1;
            if self.peek().tok != Tok::RParen {
                loop {
                    args.push(self.term()?);
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            self.depth -= 1;
        }
        Ok(RawAtom {
            predicate: name,
            args,
            negated: false,
            line: t.line,
            column: t.column,
        })
    }

    fn term(&mut self) -> Result<RawTerm> {
        let t = self.next();
        match t.tok {
            Tok::Int(i) => Ok(RawTerm::Term(Term::Const(Constant::Int(i)))),
            Tok::Str(s) => Ok(RawTerm::Term(Term::Const(Constant::sym(&s)))),
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    self.next();
                    let mut args = Vec::new();
                    loop {
                        args.push(self.term()?);
                        if self.peek().tok == Tok::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(RawTerm::Functor(name, args, t.line, t.column));
                }
                if name == "_" {
                    return Ok(RawTerm::Term(Term::Wildcard));
                }
                let is_var = match self.surface {
                    Surface::Line => true,
                    Surface::Clause => name.starts_with(|c: char| c.is_ascii_uppercase() || c == '_'),
                };
                Ok(RawTerm::Term(if is_var {
                    Term::Var(name)
                } else {
                    Term::Const(Constant::sym(&name))
                }))
            }
            other => Err(syntax(t.line, t.column, format!("expected term, found {}", describe(&other)))),
        }
    }

    fn body_literal(&mut self) -> Result<RawAtom> {
        let negated = match &self.peek().tok {
            Tok::NotOp => {
                self.next();
                true
            }
            // `not` followed by another identifier is negation; `not(...)` is
            // an ordinary predicate named `not`.
            Tok::Ident(kw) if kw == "not" => {
                let after = self.tokens[self.pos + 1..]
                    .iter()
                    .find(|t| t.tok != Tok::Newline)
                    .map(|t| &t.tok);
                if matches!(after, Some(Tok::Ident(_))) {
                    self.next();
                    true
                } else {
                    false
                }
            }
            _ => false,
        };
        let mut atom = self.atom()?;
        atom.negated = negated;
        Ok(atom)
    }

    fn body(&mut self) -> Result<Vec<RawAtom>> {
        let mut body = vec![self.body_literal()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            // A trailing comma continues the rule onto the next line.
            self.skip_newlines();
            body.push(self.body_literal()?);
        }
        Ok(body)
    }

    fn parse_line_style(&mut self) -> Result<(Option<String>, Vec<RawRule>)> {
        let mut name = None;
        let mut rules = Vec::new();
        loop {
            self.skip_newlines();
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(kw)
                    if kw == "rules"
                        && matches!(self.tokens.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Ident(_))) =>
                {
                    self.next();
                    let Tok::Ident(n) = self.next().tok else { unreachable!() };
                    self.expect(Tok::Colon, "`:` after rule set name")?;
                    if name.is_some() {
                        return Err(syntax(t.line, t.column, "more than one `rules` header"));
                    }
                    name = Some(n);
                }
                _ => {
                    let head = self.atom()?;
                    let body = match &self.peek().tok {
                        Tok::Ident(kw) if kw == "if" => {
                            self.next();
                            self.body()?
                        }
                        _ => Vec::new(),
                    };
                    rules.push(RawRule { head, body });
                }
            }
            let t = self.next();
            if !matches!(t.tok, Tok::Newline | Tok::Eof) {
                return Err(syntax(t.line, t.column, format!("expected end of line, found {}", describe(&t.tok))));
            }
        }
        Ok((name, rules))
    }

    fn parse_clause_style(&mut self) -> Result<Vec<RawRule>> {
        let mut rules = Vec::new();
        while self.peek().tok != Tok::Eof {
            let head = self.atom()?;
            let body = if self.peek().tok == Tok::ColonDash {
                self.next();
                self.body()?
            } else {
                Vec::new()
            };
            self.expect(Tok::Dot, "`.`")?;
            rules.push(RawRule { head, body });
        }
        Ok(rules)
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Str(s) => format!("'{s}'"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::ColonDash => "`:-`".into(),
        Tok::Colon => "`:`".into(),
        Tok::NotOp => "`\\+`".into(),
        Tok::Newline => "end of line".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses rule text in either surface into raw rules that may still carry
/// function symbols.
pub(crate) fn parse_raw(text: &str) -> Result<(Option<String>, Vec<RawRule>)> {
    let tokens = tokenize(text)?;
    let surface = detect_surface(&tokens);
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        surface,
        depth: 0,
    };
    match surface {
        Surface::Line => p.parse_line_style(),
        Surface::Clause => Ok((None, p.parse_clause_style()?)),
    }
}

pub(crate) fn lower_atom(atom: RawAtom) -> Result<Literal> {
    let args = atom
        .args
        .into_iter()
        .map(|a| match a {
            RawTerm::Term(t) => Ok(t),
            RawTerm::Functor(name, _, line, column) => Err(syntax(
                line,
                column,
                format!("function symbol `{name}` in a plain rule set; flatten it first"),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Literal {
        predicate: atom.predicate,
        args,
        negated: atom.negated,
    })
}

pub(crate) fn lower_rules(rules: Vec<RawRule>) -> Result<Vec<Rule>> {
    rules
        .into_iter()
        .map(|r| {
            Ok(Rule::new(
                lower_atom(r.head)?,
                r.body.into_iter().map(lower_atom).collect::<Result<_>>()?,
            ))
        })
        .collect()
}

/// Parses and validates a rule set. The name comes from a `rules NAME:`
/// header when present, otherwise `"rules"`.
pub fn parse_rules(text: &str) -> Result<RuleSet> {
    let (name, raw) = parse_raw(text)?;
    RuleSet::new(name.unwrap_or_else(|| "rules".into()), lower_rules(raw)?)
}

/// Like [`parse_rules`] but with an explicit rule-set name.
pub fn parse_rules_named(name: &str, text: &str) -> Result<RuleSet> {
    let (_, raw) = parse_raw(text)?;
    RuleSet::new(name, lower_rules(raw)?)
}

/// Parses a fact file: one ground `pred(arg, ..., arg).` per line.
pub fn parse_facts(text: &str) -> Result<Database> {
    let mut db = Database::new();
    parse_facts_into(text, &mut db)?;
    Ok(db)
}

pub fn parse_facts_into(text: &str, db: &mut Database) -> Result<()> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        surface: Surface::Clause,
        depth: 0,
    };
    while p.peek().tok != Tok::Eof {
        let atom = p.atom()?;
        p.expect(Tok::Dot, "`.` after fact")?;
        let (line, column) = (atom.line, atom.column);
        let mut items = Vec::with_capacity(atom.args.len());
        for a in atom.args {
            match a {
                RawTerm::Term(Term::Const(c)) => items.push(c),
                _ => return Err(syntax(line, column, "facts must be ground (no variables or function symbols)")),
            }
        }
        let tuple = Tuple::new(items);
        db.ensure(&atom.predicate, tuple.arity())
            .and_then(|rel| rel.insert(tuple))
            .map_err(|e| match e {
                Error::ArityConflict { predicate, expected, found } => syntax(
                    line,
                    column,
                    format!("`{predicate}` has arity {found} here but {expected} earlier"),
                ),
                other => other,
            })?;
    }
    Ok(())
}

/// Renders a database in fact-file syntax, relations by name and tuples in
/// canonical order.
pub fn write_facts(db: &Database) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for rel in db.relations() {
        for t in rel.sorted() {
            out.push_str(rel.name());
            if t.arity() > 0 {
                out.push('(');
                for (i, c) in t.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "{c}");
                }
                out.push(')');
            }
            out.push_str(".\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_style_transitive_closure() {
        let rs = parse_rules("path(x,y) if edge(x,y)\npath(x,y) if edge(x,z), path(z,y)").unwrap();
        assert_eq!(rs.derived_preds().iter().collect::<Vec<_>>(), ["path"]);
        assert_eq!(rs.base_preds().iter().collect::<Vec<_>>(), ["edge"]);
        assert_eq!(rs.rules().len(), 2);
        assert_eq!(rs.rules()[1].body[0].predicate, "edge");
        assert_eq!(rs.rules()[1].body[1].predicate, "path");
    }

    #[test]
    fn header_comments_and_continuation() {
        let text = "\
  rules class_extends_rs:   # header
    defined(c) if ClassDef(_,c,_, _,_,_)
    extending(c,b) if ClassDef(_,c,baselist, _,_,_),
                      Member(baselist,base,_), Name(base,b,_)
";
        let rs = parse_rules(text).unwrap();
        assert_eq!(rs.name(), "class_extends_rs");
        assert_eq!(rs.rules().len(), 2);
        assert_eq!(rs.rules()[1].body.len(), 3);
        assert_eq!(rs.arity("ClassDef"), Some(6));
    }

    #[test]
    fn clause_style_with_negation_and_constants() {
        let rs = parse_rules("sg2(X,Y) :- sg(X,Y), not nonsg(X,Y).\nq(a, 'B c', 3) :- r(a).\nr(a).").unwrap();
        let r0 = &rs.rules()[0];
        assert!(r0.body[1].negated);
        assert_eq!(r0.body[0].args[0], Term::var("X"));
        let r1 = &rs.rules()[1];
        assert_eq!(r1.head.args[0], Term::Const(Constant::sym("a")));
        assert_eq!(r1.head.args[1], Term::Const(Constant::sym("B c")));
        assert_eq!(r1.head.args[2], Term::Const(Constant::Int(3)));
        assert!(rs.rules()[2].is_fact());
    }

    #[test]
    fn prolog_negation_operator() {
        let rs = parse_rules("p(X) :- q(X), \\+ r(X).").unwrap();
        assert!(rs.rules()[0].body[1].negated);
    }

    #[test]
    fn arity_conflict_detected() {
        let err = parse_rules("p(x) if q(x)\np(x,y) if r(x,y)").unwrap_err();
        assert!(matches!(err, Error::ArityConflict { ref predicate, .. } if predicate == "p"));
    }

    #[test]
    fn unbound_negation_is_unsafe() {
        let err = parse_rules("p(x) if not q(x)").unwrap_err();
        assert!(matches!(err, Error::UnsafeRule { .. }));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_rules("p(x) if q(x\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }), "{err:?}");
        let err = parse_rules("p(x) if q(x) r(x)").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, column: 14, .. }), "{err:?}");
    }

    #[test]
    fn functor_rejected_without_flattening() {
        let err = parse_rules("isa(prov(Y,X), provi) :- p(X, Y).").unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn facts_parse_and_render() {
        let db = parse_facts("% comment\nedge(1,2).\nedge(2,3). % trailing\nname(n1, 'A', load).\nflag.\n").unwrap();
        assert_eq!(db.get("edge").unwrap().len(), 2);
        assert_eq!(db.get("flag").unwrap().arity(), 0);
        let text = write_facts(&db);
        assert_eq!(parse_facts(&text).unwrap(), db);
    }

    #[test]
    fn facts_must_be_ground() {
        assert!(matches!(parse_facts("edge(X,2)."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_facts("edge(1,2).\nedge(1)."), Err(Error::Syntax { line: 2, .. })));
        assert!(matches!(parse_facts("edge(1,2)"), Err(Error::Syntax { .. })));
    }
}
