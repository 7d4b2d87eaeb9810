//! Concrete grammar, AST and structural queries for the three formula layers:
//! the team layer (NNF first-order logic with dependency atoms), the FOC layer
//! (full first-order logic with counting quantifiers), and the Σ¹₁ layer
//! (existential second-order prefix over an FOC body).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A first-order variable symbol. Equality is by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Variable(pub String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A purely relational vocabulary: relation symbol name -> arity (>= 1).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    relations: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, arity: usize) -> Self {
        self.add(name, arity).expect("invalid relation");
        self
    }

    pub fn add(&mut self, name: &str, arity: usize) -> Result<(), SyntaxError> {
        if arity == 0 {
            return Err(SyntaxError::ZeroArity(name.to_string()));
        }
        if self.relations.contains_key(name) {
            return Err(SyntaxError::DuplicateRelation(name.to_string()));
        }
        self.relations.insert(name.to_string(), arity);
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, usize)> {
        self.relations.iter().map(|(n, a)| (n.as_str(), *a))
    }

    pub fn restrict_to(&self, names: &BTreeSet<String>) -> Vocabulary {
        Vocabulary {
            relations: self
                .relations
                .iter()
                .filter(|(n, _)| names.contains(*n))
                .map(|(n, a)| (n.clone(), *a))
                .collect(),
        }
    }
}

/// Signature of a generalized atom: a name and a type (i_1, ..., i_n) of
/// positive tuple lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomSignature {
    pub name: String,
    pub ty: Vec<usize>,
}

impl AtomSignature {
    pub fn new(name: impl Into<String>, ty: Vec<usize>) -> Self {
        let sig = AtomSignature { name: name.into(), ty };
        assert!(!sig.ty.is_empty() && sig.ty.iter().all(|&i| i >= 1));
        sig
    }
}

/// The built-in dependency atoms of the team layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BuiltinAtom {
    /// `dep(x_1,...,x_n,y)`: the last variable is determined by the others.
    /// `dep(y)` (written `const(y)`) means `y` is constant on the team.
    Dep { args: Vec<Variable> },
    /// `inc(x_1,...,x_n; y_1,...,y_n)`: tuple inclusion.
    Inc { left: Vec<Variable>, right: Vec<Variable> },
    /// `exc(x_1,...,x_n; y_1,...,y_n)`: tuple exclusion.
    Exc { left: Vec<Variable>, right: Vec<Variable> },
    /// `ind(z...; x...; y...)`: conditional independence x ⊥_z y.
    Ind { cond: Vec<Variable>, left: Vec<Variable>, right: Vec<Variable> },
}

impl BuiltinAtom {
    pub fn variables(&self) -> BTreeSet<Variable> {
        match self {
            BuiltinAtom::Dep { args } => args.iter().cloned().collect(),
            BuiltinAtom::Inc { left, right } | BuiltinAtom::Exc { left, right } => {
                left.iter().chain(right).cloned().collect()
            }
            BuiltinAtom::Ind { cond, left, right } => {
                cond.iter().chain(left).chain(right).cloned().collect()
            }
        }
    }
}

/// Formula AST shared by all layers; layer validity is checked separately.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    RelLit { rel: String, args: Vec<Variable>, positive: bool },
    EqLit { left: Variable, right: Variable, positive: bool },
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(Variable, Box<Formula>),
    Forall(Variable, Box<Formula>),
    /// `E>=min x. body` (FOC layer).
    CountExists { min: u32, var: Variable, body: Box<Formula> },
    Builtin(BuiltinAtom),
    /// `@name(t_1; ...; t_n)` application of a registered generalized atom.
    AtomApp { name: String, tuples: Vec<Vec<Variable>> },
    /// `SOE R:a. body` (Σ¹₁ layer).
    SoExists { rel: String, arity: usize, body: Box<Formula> },
    /// `!body` (FOC layer).
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }
    pub fn exists(v: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(Variable::new(v), Box::new(body))
    }
    pub fn forall(v: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(Variable::new(v), Box::new(body))
    }
    pub fn count_exists(min: u32, v: impl Into<String>, body: Formula) -> Formula {
        Formula::CountExists { min, var: Variable::new(v), body: Box::new(body) }
    }
    /// `E<=max x. body` as the sugar `!E>=max+1 x. body`.
    pub fn count_at_most(max: u32, v: impl Into<String>, body: Formula) -> Formula {
        Formula::not(Formula::count_exists(max + 1, v, body))
    }
    pub fn rel(name: &str, vars: &[&str]) -> Formula {
        Formula::RelLit {
            rel: name.to_string(),
            args: vars.iter().map(|v| Variable::new(*v)).collect(),
            positive: true,
        }
    }
    pub fn neg_rel(name: &str, vars: &[&str]) -> Formula {
        Formula::RelLit {
            rel: name.to_string(),
            args: vars.iter().map(|v| Variable::new(*v)).collect(),
            positive: false,
        }
    }
    pub fn eq(a: &str, b: &str) -> Formula {
        Formula::EqLit { left: Variable::new(a), right: Variable::new(b), positive: true }
    }
    pub fn neq(a: &str, b: &str) -> Formula {
        Formula::EqLit { left: Variable::new(a), right: Variable::new(b), positive: false }
    }

    /// Conjunction of a nonempty list; a single element is returned as-is.
    /// The empty list becomes the tautological literal `x=x`.
    pub fn big_and(mut items: Vec<Formula>) -> Formula {
        if items.is_empty() {
            return Formula::eq("x", "x");
        }
        let first = items.remove(0);
        items.into_iter().fold(first, Formula::and)
    }

    /// Disjunction of a list; empty becomes the contradictory literal `x!=x`.
    pub fn big_or(mut items: Vec<Formula>) -> Formula {
        if items.is_empty() {
            return Formula::neq("x", "x");
        }
        let first = items.remove(0);
        items.into_iter().fold(first, Formula::or)
    }

    /// All relation symbols occurring in literals (not SO-bound counts).
    pub fn relation_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::RelLit { rel, .. } = f {
                out.insert(rel.clone());
            }
        });
        out
    }

    /// All variable names occurring anywhere (bound or free).
    pub fn all_variables(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::RelLit { args, .. } => out.extend(args.iter().cloned()),
            Formula::EqLit { left, right, .. } => {
                out.insert(left.clone());
                out.insert(right.clone());
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                out.insert(v.clone());
            }
            Formula::CountExists { var, .. } => {
                out.insert(var.clone());
            }
            Formula::Builtin(b) => out.extend(b.variables()),
            Formula::AtomApp { tuples, .. } => {
                out.extend(tuples.iter().flatten().cloned());
            }
            _ => {}
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::Not(b) => b.walk(f),
            Formula::CountExists { body, .. } | Formula::SoExists { body, .. } => body.walk(f),
            _ => {}
        }
    }
}

/// Formula layer selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Team,
    Foc,
    Sigma11,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("syntax error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("unknown generalized atom `{0}`")]
    UnknownAtom(String),
    #[error("relation `{rel}` has arity {expected}, got {got} arguments")]
    ArityMismatch { rel: String, expected: usize, got: usize },
    #[error("atom `{name}` of type {ty:?} applied to mismatching tuples")]
    AtomTypeMismatch { name: String, ty: Vec<usize> },
    #[error("node `{0}` is not allowed in the {1} layer")]
    LayerViolation(String, String),
    #[error("inclusion/exclusion atom tuple lengths differ: {0} vs {1}")]
    IncExcLength(usize, usize),
    #[error("relation `{0}` must have arity >= 1")]
    ZeroArity(String),
    #[error("duplicate relation symbol `{0}`")]
    DuplicateRelation(String),
    #[error("relation symbol `{0}` uses the reserved `_` prefix")]
    ReservedName(String),
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u32),
    LParen,
    RParen,
    Comma,
    Semi,
    Dot,
    Colon,
    Amp,
    Pipe,
    Tilde,
    Bang,
    At,
    Eq,
    Neq,
    Arrow,
    DArrow,
    Ge,
    Le,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '(' => toks.push((Tok::LParen, start)),
            ')' => toks.push((Tok::RParen, start)),
            ',' => toks.push((Tok::Comma, start)),
            ';' => toks.push((Tok::Semi, start)),
            '.' => toks.push((Tok::Dot, start)),
            ':' => toks.push((Tok::Colon, start)),
            '&' => toks.push((Tok::Amp, start)),
            '|' => toks.push((Tok::Pipe, start)),
            '~' => toks.push((Tok::Tilde, start)),
            '@' => toks.push((Tok::At, start)),
            '=' => toks.push((Tok::Eq, start)),
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Neq, start));
                    i += 1;
                } else {
                    toks.push((Tok::Bang, start));
                }
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((Tok::Arrow, start));
                    i += 1;
                } else {
                    return Err(SyntaxError::Parse { pos: start, msg: "expected `->`".into() });
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') {
                    toks.push((Tok::DArrow, start));
                    i += 2;
                } else if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Le, start));
                    i += 1;
                } else {
                    return Err(SyntaxError::Parse { pos: start, msg: "expected `<->` or `<=`".into() });
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push((Tok::Ge, start));
                    i += 1;
                } else {
                    return Err(SyntaxError::Parse { pos: start, msg: "expected `>=`".into() });
                }
            }
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let n: u32 = text[i..j].parse().map_err(|_| SyntaxError::Parse {
                    pos: start,
                    msg: "number out of range".into(),
                })?;
                toks.push((Tok::Num(n), start));
                i = j;
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() {
                    let d = bytes[j] as char;
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        j += 1;
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(text[i..j].to_string()), start));
                i = j;
                continue;
            }
            _ => {
                return Err(SyntaxError::Parse {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
        i += 1;
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vocab: &'a Vocabulary,
    atoms: &'a BTreeMap<String, AtomSignature>,
    text_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.text_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError::Parse { pos: self.here(), msg: msg.into() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.implication()?;
        if self.peek() == Some(&Tok::DArrow) {
            self.bump();
            let rhs = self.formula()?;
            Ok(Formula::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn implication(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.implication()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    /// A quantifier body extends as far to the right as possible.
    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "E" && self.peek2() != Some(&Tok::LParen) => {
                self.bump();
                match self.peek() {
                    Some(Tok::Ge) => {
                        self.bump();
                        let n = self.number()?;
                        let v = self.ident("variable")?;
                        self.expect(Tok::Dot, "`.` after quantifier")?;
                        Ok(Formula::count_exists(n, v, self.formula()?))
                    }
                    Some(Tok::Le) => {
                        self.bump();
                        let n = self.number()?;
                        let v = self.ident("variable")?;
                        self.expect(Tok::Dot, "`.` after quantifier")?;
                        Ok(Formula::count_at_most(n, v, self.formula()?))
                    }
                    _ => {
                        let v = self.ident("variable")?;
                        self.expect(Tok::Dot, "`.` after quantifier")?;
                        Ok(Formula::exists(v, self.formula()?))
                    }
                }
            }
            Some(Tok::Ident(s)) if s == "A" && self.peek2() != Some(&Tok::LParen) => {
                self.bump();
                let v = self.ident("variable")?;
                self.expect(Tok::Dot, "`.` after quantifier")?;
                Ok(Formula::forall(v, self.formula()?))
            }
            Some(Tok::Ident(s)) if s == "SOE" => {
                self.bump();
                let rel = self.ident("relation variable")?;
                self.expect(Tok::Colon, "`:` after SOE relation")?;
                let arity = self.number()? as usize;
                if arity == 0 {
                    return Err(self.err("SOE arity must be >= 1"));
                }
                self.expect(Tok::Dot, "`.` after SOE binder")?;
                Ok(Formula::SoExists { rel, arity, body: Box::new(self.formula()?) })
            }
            _ => self.primary(),
        }
    }

    fn number(&mut self) -> Result<u32, SyntaxError> {
        match self.bump() {
            Some(Tok::Num(n)) => Ok(n),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a number"))
            }
        }
    }

    fn var_list(&mut self) -> Result<Vec<Variable>, SyntaxError> {
        // possibly empty, terminated by `;` or `)`
        let mut vars = Vec::new();
        if matches!(self.peek(), Some(Tok::Semi) | Some(Tok::RParen)) {
            return Ok(vars);
        }
        loop {
            vars.push(Variable::new(self.ident("variable")?));
            if self.peek() == Some(&Tok::Comma) {
                self.bump();
            } else {
                break;
            }
        }
        Ok(vars)
    }

    fn primary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Tilde) => {
                self.bump();
                let rel = self.ident("relation symbol")?;
                let args = self.paren_vars()?;
                self.check_rel(&rel, &args)?;
                Ok(Formula::RelLit { rel, args, positive: false })
            }
            Some(Tok::At) => {
                self.bump();
                let name = self.ident("atom name")?;
                self.expect(Tok::LParen, "`(`")?;
                let mut tuples = vec![self.var_list()?];
                while self.peek() == Some(&Tok::Semi) {
                    self.bump();
                    tuples.push(self.var_list()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                let sig = self
                    .atoms
                    .get(&name)
                    .ok_or_else(|| SyntaxError::UnknownAtom(name.clone()))?;
                if sig.ty.len() != tuples.len()
                    || sig.ty.iter().zip(&tuples).any(|(i, t)| *i != t.len())
                {
                    return Err(SyntaxError::AtomTypeMismatch {
                        name: name.clone(),
                        ty: sig.ty.clone(),
                    });
                }
                Ok(Formula::AtomApp { name, tuples })
            }
            Some(Tok::Ident(name)) => {
                match name.as_str() {
                    "dep" | "const" => {
                        self.bump();
                        let args = self.paren_vars()?;
                        if args.is_empty() {
                            return Err(self.err("dep/const needs at least one variable"));
                        }
                        if name == "const" && args.len() != 1 {
                            return Err(self.err("const takes exactly one variable"));
                        }
                        Ok(Formula::Builtin(BuiltinAtom::Dep { args }))
                    }
                    "inc" | "exc" => {
                        self.bump();
                        self.expect(Tok::LParen, "`(`")?;
                        let left = self.var_list()?;
                        self.expect(Tok::Semi, "`;`")?;
                        let right = self.var_list()?;
                        self.expect(Tok::RParen, "`)`")?;
                        if left.len() != right.len() {
                            return Err(SyntaxError::IncExcLength(left.len(), right.len()));
                        }
                        if left.is_empty() {
                            return Err(self.err("inc/exc tuples must be nonempty"));
                        }
                        if name == "inc" {
                            Ok(Formula::Builtin(BuiltinAtom::Inc { left, right }))
                        } else {
                            Ok(Formula::Builtin(BuiltinAtom::Exc { left, right }))
                        }
                    }
                    "ind" => {
                        self.bump();
                        self.expect(Tok::LParen, "`(`")?;
                        let cond = self.var_list()?;
                        self.expect(Tok::Semi, "`;`")?;
                        let left = self.var_list()?;
                        self.expect(Tok::Semi, "`;`")?;
                        let right = self.var_list()?;
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(Formula::Builtin(BuiltinAtom::Ind { cond, left, right }))
                    }
                    _ => {
                        // relation literal or equality literal
                        if self.peek2() == Some(&Tok::LParen) {
                            self.bump();
                            let args = self.paren_vars()?;
                            self.check_rel(&name, &args)?;
                            Ok(Formula::RelLit { rel: name, args, positive: true })
                        } else {
                            let left = Variable::new(self.ident("variable")?);
                            match self.bump() {
                                Some(Tok::Eq) => {
                                    let right = Variable::new(self.ident("variable")?);
                                    Ok(Formula::EqLit { left, right, positive: true })
                                }
                                Some(Tok::Neq) => {
                                    let right = Variable::new(self.ident("variable")?);
                                    Ok(Formula::EqLit { left, right, positive: false })
                                }
                                _ => {
                                    self.pos -= 1;
                                    Err(self.err("expected `=` or `!=`"))
                                }
                            }
                        }
                    }
                }
            }
            _ => Err(self.err("expected a formula")),
        }
    }

    fn paren_vars(&mut self) -> Result<Vec<Variable>, SyntaxError> {
        self.expect(Tok::LParen, "`(`")?;
        let vars = self.var_list()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(vars)
    }

    fn check_rel(&self, rel: &str, args: &[Variable]) -> Result<(), SyntaxError> {
        match self.vocab.arity(rel) {
            None => Err(SyntaxError::UnknownRelation(rel.to_string())),
            Some(a) if a != args.len() => Err(SyntaxError::ArityMismatch {
                rel: rel.to_string(),
                expected: a,
                got: args.len(),
            }),
            _ => Ok(()),
        }
    }
}

/// Parses `text` against `vocab` and the declared generalized atoms, then
/// validates the result for `layer`.
///
/// SOE-bound relation variables extend the vocabulary inside their scope, so
/// they do not need to be declared.
pub fn parse_formula(
    text: &str,
    vocab: &Vocabulary,
    layer: Layer,
    atoms: &BTreeMap<String, AtomSignature>,
) -> Result<Formula, SyntaxError> {
    // SOE binders introduce relation symbols mid-formula; collect them with a
    // pre-scan so literal arity checks can see them.
    let toks = lex(text)?;
    let mut extended = vocab.clone();
    let mut i = 0;
    while i + 3 < toks.len() {
        if let (Tok::Ident(kw), Tok::Ident(rel), Tok::Colon, Tok::Num(n)) =
            (&toks[i].0, &toks[i + 1].0, &toks[i + 2].0, &toks[i + 3].0)
        {
            if kw == "SOE" && !extended.contains(rel) {
                extended.add(rel, *n as usize)?;
            }
        }
        i += 1;
    }
    let mut p = Parser { toks, pos: 0, vocab: &extended, atoms, text_len: text.len() };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after formula"));
    }
    validate_layer(&f, layer)?;
    Ok(f)
}

/// Checks the layer discipline of the spec: team-layer formulas are NNF with
/// no counting/negation/SO nodes; FOC-layer formulas have no team atoms or SO
/// binders; Σ¹₁-layer formulas are an SOE prefix over an FOC body.
pub fn validate_layer(f: &Formula, layer: Layer) -> Result<(), SyntaxError> {
    fn bad(node: &str, layer: &str) -> Result<(), SyntaxError> {
        Err(SyntaxError::LayerViolation(node.to_string(), layer.to_string()))
    }
    match layer {
        Layer::Team => match f {
            Formula::RelLit { .. } | Formula::EqLit { .. } | Formula::Builtin(_) => Ok(()),
            Formula::AtomApp { .. } => Ok(()),
            Formula::And(a, b) | Formula::Or(a, b) => {
                validate_layer(a, layer)?;
                validate_layer(b, layer)
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => validate_layer(b, layer),
            Formula::Not(_) => bad("!", "team"),
            Formula::CountExists { .. } => bad("E>=i", "team"),
            Formula::SoExists { .. } => bad("SOE", "team"),
            Formula::Implies(..) => bad("->", "team"),
            Formula::Iff(..) => bad("<->", "team"),
        },
        Layer::Foc => match f {
            Formula::RelLit { .. } | Formula::EqLit { .. } => Ok(()),
            Formula::Builtin(_) => bad("builtin atom", "FOC"),
            Formula::AtomApp { .. } => bad("generalized atom", "FOC"),
            Formula::SoExists { .. } => bad("SOE", "FOC"),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Iff(a, b) => {
                validate_layer(a, layer)?;
                validate_layer(b, layer)
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::Not(b) => {
                validate_layer(b, layer)
            }
            Formula::CountExists { body, .. } => validate_layer(body, layer),
        },
        Layer::Sigma11 => {
            let mut g = f;
            while let Formula::SoExists { body, .. } = g {
                g = body;
            }
            validate_layer(g, Layer::Foc)
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering

/// Renders a formula in the concrete grammar. `parse_formula` of the result
/// returns the identical AST.
pub fn render_formula(f: &Formula) -> String {
    let mut s = String::new();
    render(f, &mut s);
    s
}

fn render_vars(vars: &[Variable], out: &mut String) {
    for (i, v) in vars.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&v.0);
    }
}

/// Binary-operand positions need parentheses around prefix forms, whose
/// bodies would otherwise swallow the rest of the operator chain.
fn render_operand(f: &Formula, out: &mut String) {
    match f {
        Formula::Exists(..)
        | Formula::Forall(..)
        | Formula::CountExists { .. }
        | Formula::SoExists { .. }
        | Formula::Not(_) => {
            out.push('(');
            render(f, out);
            out.push(')');
        }
        _ => render(f, out),
    }
}

fn render(f: &Formula, out: &mut String) {
    match f {
        Formula::RelLit { rel, args, positive } => {
            if !positive {
                out.push('~');
            }
            out.push_str(rel);
            out.push('(');
            render_vars(args, out);
            out.push(')');
        }
        Formula::EqLit { left, right, positive } => {
            out.push_str(&left.0);
            out.push_str(if *positive { "=" } else { "!=" });
            out.push_str(&right.0);
        }
        Formula::And(a, b) => {
            out.push('(');
            render_operand(a, out);
            out.push_str(" & ");
            render_operand(b, out);
            out.push(')');
        }
        Formula::Or(a, b) => {
            out.push('(');
            render_operand(a, out);
            out.push_str(" | ");
            render_operand(b, out);
            out.push(')');
        }
        Formula::Implies(a, b) => {
            out.push('(');
            render_operand(a, out);
            out.push_str(" -> ");
            render_operand(b, out);
            out.push(')');
        }
        Formula::Iff(a, b) => {
            out.push('(');
            render_operand(a, out);
            out.push_str(" <-> ");
            render_operand(b, out);
            out.push(')');
        }
        Formula::Exists(v, b) => {
            out.push_str("E ");
            out.push_str(&v.0);
            out.push_str(". ");
            render(b, out);
        }
        Formula::Forall(v, b) => {
            out.push_str("A ");
            out.push_str(&v.0);
            out.push_str(". ");
            render(b, out);
        }
        Formula::CountExists { min, var, body } => {
            out.push_str(&format!("E>={} {}. ", min, var.0));
            render(body, out);
        }
        Formula::Not(b) => {
            out.push('!');
            render(b, out);
        }
        Formula::SoExists { rel, arity, body } => {
            out.push_str(&format!("SOE {rel}:{arity}. "));
            render(body, out);
        }
        Formula::Builtin(b) => match b {
            BuiltinAtom::Dep { args } => {
                out.push_str("dep(");
                render_vars(args, out);
                out.push(')');
            }
            BuiltinAtom::Inc { left, right } => {
                out.push_str("inc(");
                render_vars(left, out);
                out.push_str("; ");
                render_vars(right, out);
                out.push(')');
            }
            BuiltinAtom::Exc { left, right } => {
                out.push_str("exc(");
                render_vars(left, out);
                out.push_str("; ");
                render_vars(right, out);
                out.push(')');
            }
            BuiltinAtom::Ind { cond, left, right } => {
                out.push_str("ind(");
                render_vars(cond, out);
                out.push_str("; ");
                render_vars(left, out);
                out.push_str("; ");
                render_vars(right, out);
                out.push(')');
            }
        },
        Formula::AtomApp { name, tuples } => {
            out.push('@');
            out.push_str(name);
            out.push('(');
            for (i, t) in tuples.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                render_vars(t, out);
            }
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------------
// Structural queries

/// The standard first-order free-variable set. Atom applications contribute
/// every variable occurring in their tuples.
pub fn free_variables(f: &Formula) -> BTreeSet<Variable> {
    match f {
        Formula::RelLit { args, .. } => args.iter().cloned().collect(),
        Formula::EqLit { left, right, .. } => {
            [left.clone(), right.clone()].into_iter().collect()
        }
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => {
            let mut s = free_variables(a);
            s.extend(free_variables(b));
            s
        }
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            let mut s = free_variables(b);
            s.remove(v);
            s
        }
        Formula::CountExists { var, body, .. } => {
            let mut s = free_variables(body);
            s.remove(var);
            s
        }
        Formula::Not(b) => free_variables(b),
        Formula::SoExists { body, .. } => free_variables(body),
        Formula::Builtin(b) => b.variables(),
        Formula::AtomApp { tuples, .. } => tuples.iter().flatten().cloned().collect(),
    }
}

/// Result of `prefix_class`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixClass {
    /// An ∃-block of `existential` quantifier occurrences followed by a
    /// ∀-block of `universal` occurrences over a quantifier-free matrix.
    ExistsForall { existential: usize, universal: usize },
    NotEA,
}

/// Classifies a team-layer sentence syntactically. Quantifier occurrences are
/// counted, not distinct names, so shadowed prefixes count every binder.
pub fn prefix_class(f: &Formula) -> PrefixClass {
    let mut g = f;
    let mut existential = 0;
    while let Formula::Exists(_, b) = g {
        existential += 1;
        g = b;
    }
    let mut universal = 0;
    while let Formula::Forall(_, b) = g {
        universal += 1;
        g = b;
    }
    if quantifier_free(g) {
        PrefixClass::ExistsForall { existential, universal }
    } else {
        PrefixClass::NotEA
    }
}

fn quantifier_free(f: &Formula) -> bool {
    match f {
        Formula::RelLit { .. }
        | Formula::EqLit { .. }
        | Formula::Builtin(_)
        | Formula::AtomApp { .. } => true,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            quantifier_free(a) && quantifier_free(b)
        }
        Formula::Not(b) => quantifier_free(b),
        Formula::Exists(..)
        | Formula::Forall(..)
        | Formula::CountExists { .. }
        | Formula::SoExists { .. } => false,
    }
}

/// True iff at most two distinct variable names occur in `f`.
pub fn is_two_variable(f: &Formula) -> bool {
    f.all_variables().len() <= 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new().with("R", 2).with("P", 1).with("S", 1).with("H", 2)
    }

    fn no_atoms() -> BTreeMap<String, AtomSignature> {
        BTreeMap::new()
    }

    fn parse_team(text: &str) -> Formula {
        parse_formula(text, &vocab(), Layer::Team, &no_atoms()).unwrap()
    }

    #[test]
    fn parses_equality_literal() {
        assert_eq!(parse_team("x=y"), Formula::eq("x", "y"));
        assert_eq!(parse_team("x!=y"), Formula::neq("x", "y"));
    }

    #[test]
    fn parses_dep_atom() {
        assert_eq!(
            parse_team("dep(x,y)"),
            Formula::Builtin(BuiltinAtom::Dep {
                args: vec![Variable::new("x"), Variable::new("y")]
            })
        );
        // const(x) is sugar for dep(x)
        assert_eq!(parse_team("const(x)"), parse_team("dep(x)"));
    }

    #[test]
    fn missing_quantifier_body_is_an_error() {
        let err = parse_formula("E x", &vocab(), Layer::Team, &no_atoms());
        assert!(matches!(err, Err(SyntaxError::Parse { .. })));
    }

    #[test]
    fn unknown_symbol_and_arity_errors() {
        assert!(matches!(
            parse_formula("Q(x)", &vocab(), Layer::Team, &no_atoms()),
            Err(SyntaxError::UnknownRelation(_))
        ));
        assert!(matches!(
            parse_formula("R(x)", &vocab(), Layer::Team, &no_atoms()),
            Err(SyntaxError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn team_layer_rejects_negation() {
        assert!(matches!(
            parse_formula("!R(x,y)", &vocab(), Layer::Team, &no_atoms()),
            Err(SyntaxError::LayerViolation(..))
        ));
    }

    #[test]
    fn foc_layer_sugar() {
        let f = parse_formula("E<=1 x. P(x)", &vocab(), Layer::Foc, &no_atoms()).unwrap();
        assert_eq!(f, Formula::not(Formula::count_exists(2, "x", Formula::rel("P", &["x"]))));
    }

    #[test]
    fn sigma11_prefix() {
        let f =
            parse_formula("SOE T:2. A x. E y. T(x,y)", &vocab(), Layer::Sigma11, &no_atoms())
                .unwrap();
        assert!(matches!(f, Formula::SoExists { arity: 2, .. }));
    }

    #[test]
    fn free_variables_examples() {
        let f = parse_team("dep(x,y)");
        let fv: Vec<_> = free_variables(&f).into_iter().map(|v| v.0).collect();
        assert_eq!(fv, vec!["x", "y"]);

        let f = parse_team("E x. R(x,y)");
        let fv: Vec<_> = free_variables(&f).into_iter().map(|v| v.0).collect();
        assert_eq!(fv, vec!["y"]);

        let f = parse_team("x=x & A y. S(y)");
        let fv: Vec<_> = free_variables(&f).into_iter().map(|v| v.0).collect();
        assert_eq!(fv, vec!["x"]);
    }

    #[test]
    fn prefix_class_examples() {
        let f = parse_team("E x. E y. A x. R(x,y)");
        assert_eq!(f.clone(), f);
        assert_eq!(prefix_class(&f), PrefixClass::ExistsForall { existential: 2, universal: 1 });

        let f = parse_team("A x. R(x,x)");
        assert_eq!(prefix_class(&f), PrefixClass::ExistsForall { existential: 0, universal: 1 });

        let f = parse_team("E x. (P(x) | A y. S(y))");
        assert_eq!(prefix_class(&f), PrefixClass::NotEA);
    }

    #[test]
    fn two_variable_examples() {
        assert!(is_two_variable(&parse_team("A x. E y. H(x,y)")));
        assert!(!is_two_variable(&parse_team("dep(x,y,z)")));
        assert!(is_two_variable(&parse_team("E x. x=x")));
    }

    #[test]
    fn render_round_trip_spot_checks() {
        for text in [
            "(R(x,y) & (x=y | ~P(x)))",
            "A x. E y. (H(x,y) & dep(x,y))",
            "inc(x,y; y,x)",
            "ind(; x; y)",
            "E x. (const(x) | exc(x,y; y,x))",
        ] {
            let f = parse_team(text);
            let rendered = render_formula(&f);
            assert_eq!(parse_team(&rendered), f, "round trip failed for {text}");
        }
    }
}
