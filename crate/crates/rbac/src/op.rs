use std::fmt;
use std::str::FromStr;

use setrules_core::Constant;

use crate::RbacError;

/// One administrative operation or query against an RBAC state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AdminOp {
    AddUser(Constant),
    DeleteUser(Constant),
    AddRole(Constant),
    DeleteRole(Constant),
    /// `(user, role)`.
    AssignUR(Constant, Constant),
    DeassignUR(Constant, Constant),
    /// `(ascendant, descendant)`.
    AddInheritance(Constant, Constant),
    DeleteInheritance(Constant, Constant),
    QueryAuthorizedUsers(Constant),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    AddUser,
    DeleteUser,
    AddRole,
    DeleteRole,
    AssignUR,
    DeassignUR,
    AddInheritance,
    DeleteInheritance,
    QueryAuthorizedUsers,
}

impl OpKind {
    pub const ALL: [OpKind; 9] = [
        OpKind::AddUser,
        OpKind::DeleteUser,
        OpKind::AddRole,
        OpKind::DeleteRole,
        OpKind::AssignUR,
        OpKind::DeassignUR,
        OpKind::AddInheritance,
        OpKind::DeleteInheritance,
        OpKind::QueryAuthorizedUsers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::AddUser => "AddUser",
            OpKind::DeleteUser => "DeleteUser",
            OpKind::AddRole => "AddRole",
            OpKind::DeleteRole => "DeleteRole",
            OpKind::AssignUR => "AssignUR",
            OpKind::DeassignUR => "DeassignUR",
            OpKind::AddInheritance => "AddInheritance",
            OpKind::DeleteInheritance => "DeleteInheritance",
            OpKind::QueryAuthorizedUsers => "QueryAuthorizedUsers",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            OpKind::AssignUR | OpKind::DeassignUR | OpKind::AddInheritance | OpKind::DeleteInheritance => 2,
            _ => 1,
        }
    }

    pub fn is_update(self) -> bool {
        self != OpKind::QueryAuthorizedUsers
    }
}

impl AdminOp {
    pub fn kind(&self) -> OpKind {
        match self {
            AdminOp::AddUser(_) => OpKind::AddUser,
            AdminOp::DeleteUser(_) => OpKind::DeleteUser,
            AdminOp::AddRole(_) => OpKind::AddRole,
            AdminOp::DeleteRole(_) => OpKind::DeleteRole,
            AdminOp::AssignUR(..) => OpKind::AssignUR,
            AdminOp::DeassignUR(..) => OpKind::DeassignUR,
            AdminOp::AddInheritance(..) => OpKind::AddInheritance,
            AdminOp::DeleteInheritance(..) => OpKind::DeleteInheritance,
            AdminOp::QueryAuthorizedUsers(_) => OpKind::QueryAuthorizedUsers,
        }
    }

    /// Builds an op from its kind and payload ids; `None` if the payload
    /// length does not match the kind.
    pub fn from_parts(kind: OpKind, ids: &[Constant]) -> Option<AdminOp> {
        if ids.len() != kind.arity() {
            return None;
        }
        Some(match kind {
            OpKind::AddUser => AdminOp::AddUser(ids[0]),
            OpKind::DeleteUser => AdminOp::DeleteUser(ids[0]),
            OpKind::AddRole => AdminOp::AddRole(ids[0]),
            OpKind::DeleteRole => AdminOp::DeleteRole(ids[0]),
            OpKind::AssignUR => AdminOp::AssignUR(ids[0], ids[1]),
            OpKind::DeassignUR => AdminOp::DeassignUR(ids[0], ids[1]),
            OpKind::AddInheritance => AdminOp::AddInheritance(ids[0], ids[1]),
            OpKind::DeleteInheritance => AdminOp::DeleteInheritance(ids[0], ids[1]),
            OpKind::QueryAuthorizedUsers => AdminOp::QueryAuthorizedUsers(ids[0]),
        })
    }

    pub fn ids(&self) -> Vec<Constant> {
        match *self {
            AdminOp::AddUser(a)
            | AdminOp::DeleteUser(a)
            | AdminOp::AddRole(a)
            | AdminOp::DeleteRole(a)
            | AdminOp::QueryAuthorizedUsers(a) => vec![a],
            AdminOp::AssignUR(a, b)
            | AdminOp::DeassignUR(a, b)
            | AdminOp::AddInheritance(a, b)
            | AdminOp::DeleteInheritance(a, b) => vec![a, b],
        }
    }
}

/// `Kind id id`, ids rendered like fact-file constants.
impl fmt::Display for AdminOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())?;
        for id in self.ids() {
            write!(f, " {id}")?;
        }
        Ok(())
    }
}

fn parse_id(token: &str) -> Constant {
    match token.parse::<i64>() {
        Ok(i) => Constant::Int(i),
        Err(_) => {
            let unquoted = token
                .strip_prefix('\'')
                .and_then(|t| t.strip_suffix('\''))
                .map(|t| t.replace("\\'", "'").replace("\\\\", "\\"));
            Constant::sym(unquoted.as_deref().unwrap_or(token))
        }
    }
}

impl FromStr for AdminOp {
    type Err = RbacError;

    fn from_str(line: &str) -> Result<AdminOp, RbacError> {
        let mut tokens = line.split_whitespace();
        let bad = || RbacError::BadOp(line.to_owned());
        let kind_name = tokens.next().ok_or_else(bad)?;
        let kind = OpKind::ALL
            .into_iter()
            .find(|k| k.name() == kind_name)
            .ok_or_else(bad)?;
        let ids: Vec<Constant> = tokens.map(parse_id).collect();
        AdminOp::from_parts(kind, &ids).ok_or_else(bad)
    }
}

/// Parses one op per line; blank lines and `#` comments are skipped.
pub fn parse_ops(text: &str) -> Result<Vec<AdminOp>, RbacError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

pub fn write_ops(ops: &[AdminOp]) -> String {
    ops.iter().map(|op| format!("{op}\n")).collect()
}
