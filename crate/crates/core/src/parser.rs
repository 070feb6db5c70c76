//! Recursive-descent parser for manifest source text.
//!
//! Precedence, loosest first: selector `?`, `or`, `and`, comparisons,
//! `+ -`, `* / %`, prefix `!`, postfix indexing. Binary operators are left
//! associative. A lowercase bare word in expression position is a string
//! literal; a capitalized word may only head a resource reference.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::lexer::{tokenize, Tok, Token};
use crate::syntax::{
    Attr, BinOp, Case, CaseArm, ClassName, Expr, ExprKind, Key, Manifest, ManifestKind, NodeSpec,
    Param, Pos, SelectorArm, Stmt, StmtKind,
};

/// Maximum nesting of blocks and parenthesised expressions.
pub const MAX_NESTING: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub pos: Pos,
    /// What the parser was looking for.
    pub expected: String,
    /// The offending lexeme, or `end of input`.
    pub found: String,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, expected: impl Into<String>, found: impl Into<String>) -> ParseError {
        ParseError {
            pos,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}, found {}", self.pos, self.expected, self.found)
    }
}

/// Words that never parse as bare-word strings.
const RESERVED: &[&str] = &[
    "and", "case", "class", "default", "define", "else", "elsif", "false", "function", "if",
    "import", "in", "include", "inherits", "node", "or", "true", "undef", "unless", "fail",
    "attr", "private", "type", "application", "consumes", "produces", "site",
];

pub fn parse_manifest(src: &str) -> Result<Manifest, ParseError> {
    let mut p = Parser::new(src)?;
    let mut items = Vec::new();
    while !p.at(&Tok::Eof) {
        items.push(p.manifest_item()?);
        p.eat(&Tok::Semi);
    }
    Ok(Manifest::sequence(items))
}

pub fn parse_expression(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect(&Tok::Eof, "end of input")?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    depth: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(src)?,
            at: 0,
            depth: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let found = match self.peek() {
            Tok::Unsupported(s) => format!("`{s}` (not supported)"),
            t => t.to_string(),
        };
        Err(ParseError::new(self.pos(), expected, found))
    }

    fn expect(&mut self, t: &Tok, expected: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(expected)
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.at_word(w) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("`{w}`"))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return self.error(format!("nesting depth at most {MAX_NESTING}"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn reject_unsupported_word(&self) -> PResult<()> {
        if let Tok::Word(w) = self.peek() {
            let msg = match w.as_str() {
                "undef" => "`undef` is not supported",
                "elsif" => "`elsif` is not supported",
                "function" => "function definitions are not supported",
                "import" => "`import` is not supported",
                "in" => "the `in` operator is not supported",
                _ => return Ok(()),
            };
            return self.error(msg);
        }
        Ok(())
    }

    /// Name of a class: a bare word, or a quoted string in declarations.
    fn class_name(&mut self, allow_string: bool) -> PResult<ClassName> {
        match self.peek().clone() {
            Tok::Word(w) if !RESERVED.contains(&w.as_str()) => {
                self.bump();
                Ok(ClassName::new(w))
            }
            Tok::Str(s) if allow_string && is_class_name(&s) => {
                self.bump();
                Ok(ClassName::new(s))
            }
            _ => self.error("a class name"),
        }
    }

    fn manifest_item(&mut self) -> PResult<Manifest> {
        let pos = self.pos();
        if self.at_word("node") {
            self.bump();
            let spec = self.node_spec()?;
            let body = self.block()?;
            return Ok(Manifest::new(ManifestKind::Node { spec, body }, pos));
        }
        if self.at_word("define") {
            self.bump();
            let name = match self.peek().clone() {
                Tok::Word(w) if !RESERVED.contains(&w.as_str()) => {
                    self.bump();
                    w
                }
                _ => return self.error("a defined resource type name"),
            };
            let params = if self.at(&Tok::LParen) {
                self.params()?
            } else {
                Vec::new()
            };
            let body = self.block()?;
            return Ok(Manifest::new(ManifestKind::Define { name, params, body }, pos));
        }
        if self.at_word("class") && !matches!(self.peek_nth(1), Tok::LBrace) {
            self.bump();
            let name = self.class_name(false)?;
            let params = if self.at(&Tok::LParen) {
                Some(self.params()?)
            } else {
                None
            };
            let parent = if self.at_word("inherits") {
                self.bump();
                Some(self.class_name(false)?)
            } else {
                None
            };
            let body = self.block()?;
            return Ok(Manifest::new(
                ManifestKind::Class {
                    name,
                    params,
                    parent,
                    body,
                },
                pos,
            ));
        }
        Ok(Manifest::new(ManifestKind::Stmt(self.stmt()?), pos))
    }

    fn node_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Word(w) if !RESERVED.contains(&w.as_str()) => {
                self.bump();
                Ok(w)
            }
            Tok::Slash => self.error("a node name (regular expression node specifiers are not supported)"),
            _ => self.error("a node name"),
        }
    }

    fn node_spec(&mut self) -> PResult<NodeSpec> {
        if self.at_word("default") {
            self.bump();
            return Ok(NodeSpec::Default);
        }
        let first = self.node_name()?;
        if !self.at(&Tok::Comma) {
            return Ok(NodeSpec::Name(first));
        }
        let mut names = alloc::vec![first];
        while self.eat(&Tok::Comma) {
            names.push(self.node_name()?);
        }
        Ok(NodeSpec::List(names))
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(&Tok::LParen, "`(`")?;
        let mut params: Vec<Param> = Vec::new();
        while !self.at(&Tok::RParen) {
            let pos = self.pos();
            let name = match self.peek().clone() {
                Tok::Var(v) if !v.contains("::") => {
                    self.bump();
                    v
                }
                Tok::Type(_) => return self.error("a parameter (type annotations are not supported)"),
                _ => return self.error("a parameter `$name`"),
            };
            if params.iter().any(|p| p.name == name) {
                return Err(ParseError::new(pos, "distinct parameter names", format!("duplicate `${name}`")));
            }
            let default = if self.eat(&Tok::Assign) {
                Some(self.expr()?)
            } else {
                None
            };
            params.push(Param { name, default });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RParen, "`,` or `)`")?;
        Ok(params)
    }

    /// `{ stmt* }`; an empty block is `skip`.
    fn block(&mut self) -> PResult<Stmt> {
        self.enter()?;
        self.expect(&Tok::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return self.error("`}`");
            }
            if self.at_word("node") || self.at_word("define") {
                return self.error("a statement (definitions are only allowed at top level)");
            }
            if self.at_word("class") && !matches!(self.peek_nth(1), Tok::LBrace) {
                return self.error("a statement (nested class definitions are not supported)");
            }
            stmts.push(self.stmt()?);
            self.eat(&Tok::Semi);
        }
        self.bump();
        self.leave();
        Ok(Stmt::sequence(stmts))
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        self.reject_unsupported_word()?;
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Var(name) if matches!(self.peek_nth(1), Tok::Assign) => {
                if name.contains("::") {
                    return self.error("an unqualified variable (assignment only binds in the current scope)");
                }
                self.bump();
                self.bump();
                StmtKind::Assign {
                    name,
                    value: self.expr()?,
                }
            }
            Tok::Word(w) => match w.as_str() {
                "if" => {
                    self.bump();
                    let cond = self.expr()?;
                    let then = Box::new(self.block()?);
                    let otherwise = if self.at_word("else") {
                        self.bump();
                        Box::new(self.block()?)
                    } else {
                        self.reject_unsupported_word()?;
                        Box::new(Stmt::skip())
                    };
                    StmtKind::If {
                        cond,
                        then,
                        otherwise,
                    }
                }
                "unless" => {
                    self.bump();
                    let cond = self.expr()?;
                    StmtKind::Unless {
                        cond,
                        body: Box::new(self.block()?),
                    }
                }
                "case" => self.case_stmt()?,
                "include" => {
                    self.bump();
                    let mut classes = alloc::vec![Stmt::new(StmtKind::Include(self.class_name(true)?), pos)];
                    while self.eat(&Tok::Comma) {
                        let pos = self.pos();
                        classes.push(Stmt::new(StmtKind::Include(self.class_name(true)?), pos));
                    }
                    return Ok(Stmt::sequence(classes));
                }
                "fail" => {
                    self.bump();
                    self.expect(&Tok::LParen, "`(`")?;
                    let e = self.expr()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    StmtKind::Fail(e)
                }
                "class" => {
                    self.bump();
                    self.expect(&Tok::LBrace, "`{`")?;
                    let class = self.class_name(true)?;
                    self.expect(&Tok::Colon, "`:`")?;
                    let attrs = self.attrs()?;
                    StmtKind::ClassDecl { class, attrs }
                }
                _ if matches!(self.peek_nth(1), Tok::LBrace) && !RESERVED.contains(&w.as_str()) => {
                    self.bump();
                    self.bump();
                    if self.at(&Tok::RBrace) {
                        return self.error("a resource title");
                    }
                    let title = self.expr()?;
                    self.expect(&Tok::Colon, "`:` after the resource title")?;
                    let attrs = self.attrs()?;
                    StmtKind::Resource { head: w, title, attrs }
                }
                _ if !RESERVED.contains(&w.as_str())
                    && match self.peek_nth(1) {
                        Tok::Word(next) => !RESERVED.contains(&next.as_str()),
                        Tok::Str(_) | Tok::Var(_) | Tok::Type(_) | Tok::Int(_) => true,
                        _ => false,
                    } =>
                {
                    return self.error("a statement (function calls are not supported)");
                }
                _ => StmtKind::Expr(self.expr()?),
            },
            Tok::Type(_) if matches!(self.peek_nth(1), Tok::LBrace) => {
                return self.error("a statement (resource defaults are not supported)");
            }
            Tok::Unsupported("@") => return self.error("a statement (virtual resources are not supported)"),
            _ => StmtKind::Expr(self.expr()?),
        };
        if let StmtKind::Expr(Expr { kind: ExprKind::ResourceRef { .. }, .. }) = kind {
            if self.at(&Tok::LBrace) {
                return self.error("end of statement (resource overrides are not supported)");
            }
        }
        if let Tok::Unsupported(_) = self.peek() {
            return self.error("end of statement");
        }
        Ok(Stmt::new(kind, pos))
    }

    /// Attribute list up to and including the closing `}` of a resource
    /// body; names must be distinct.
    fn attrs(&mut self) -> PResult<Vec<Attr>> {
        let mut attrs: Vec<Attr> = Vec::new();
        loop {
            if self.eat(&Tok::RBrace) {
                return Ok(attrs);
            }
            let pos = self.pos();
            let name = match self.peek().clone() {
                Tok::Word(w) if !w.contains("::") => {
                    self.bump();
                    w
                }
                Tok::Star => return self.error("an attribute name (`* =>` is not supported)"),
                _ => return self.error("an attribute name or `}`"),
            };
            if attrs.iter().any(|a| a.name == name) {
                return Err(ParseError::new(pos, "distinct attribute names", format!("duplicate `{name}`")));
            }
            self.expect(&Tok::FatArrow, "`=>`")?;
            let value = self.expr()?;
            attrs.push(Attr { name, value });
            if self.eat(&Tok::Comma) {
                continue;
            }
            if self.eat(&Tok::Semi) {
                if !self.at(&Tok::RBrace) {
                    return self.error("`}` (multiple resource bodies are not supported)");
                }
                continue;
            }
            if !self.at(&Tok::RBrace) {
                return self.error("`,` or `}`");
            }
        }
    }

    fn case_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_word("case")?;
        let scrutinee = self.expr()?;
        self.enter()?;
        self.expect(&Tok::LBrace, "`{`")?;
        let mut arms = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let case = self.case_label()?;
            if self.at(&Tok::Comma) {
                return self.error("`:` (multiple values per case arm are not supported)");
            }
            self.expect(&Tok::Colon, "`:`")?;
            let body = self.block()?;
            arms.push(CaseArm { case, body });
        }
        self.leave();
        Ok(StmtKind::Case { scrutinee, arms })
    }

    fn case_label(&mut self) -> PResult<Case> {
        if self.at_word("default") {
            self.bump();
            Ok(Case::Default)
        } else {
            Ok(Case::Expr(self.expr()?))
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let mut e = self.binary(1)?;
        while self.at(&Tok::Question) {
            let pos = e.pos;
            self.bump();
            self.expect(&Tok::LBrace, "`{`")?;
            let mut arms = Vec::new();
            while !self.at(&Tok::RBrace) {
                let case = self.case_label()?;
                self.expect(&Tok::FatArrow, "`=>`")?;
                let value = self.expr()?;
                arms.push(SelectorArm { case, value });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RBrace, "`,` or `}`")?;
            e = Expr::new(
                ExprKind::Selector {
                    scrutinee: Box::new(e),
                    arms,
                },
                pos,
            );
        }
        self.leave();
        Ok(e)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Gt => BinOp::Gt,
            Tok::Le => BinOp::Le,
            Tok::Ge => BinOp::Ge,
            Tok::Word(w) if w == "and" => BinOp::And,
            Tok::Word(w) if w == "or" => BinOp::Or,
            _ => return None,
        })
    }

    /// Precedence climbing over left-associative binary operators.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            self.enter()?;
            let rhs = self.binary(prec + 1)?;
            self.leave();
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat(&Tok::Bang) {
            self.enter()?;
            let e = self.unary()?;
            self.leave();
            return Ok(Expr::new(ExprKind::Not(Box::new(e)), pos));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at(&Tok::LBracket) {
            let pos = e.pos;
            self.bump();
            let index = self.expr()?;
            if self.at(&Tok::Comma) {
                return self.error("`]` (slices are not supported)");
            }
            self.expect(&Tok::RBracket, "`]`")?;
            e = Expr::new(
                ExprKind::Index {
                    target: Box::new(e),
                    index: Box::new(index),
                },
                pos,
            );
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        self.reject_unsupported_word()?;
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                ExprKind::Int(i)
            }
            Tok::Minus => {
                self.bump();
                match self.peek() {
                    Tok::Int(i) => {
                        let i = -*i;
                        self.bump();
                        ExprKind::Int(i)
                    }
                    Tok::IntMin => {
                        self.bump();
                        ExprKind::Int(i64::MIN)
                    }
                    _ => return self.error("an integer after unary `-`"),
                }
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Str(s)
            }
            Tok::Var(v) => {
                self.bump();
                variable(&v)
            }
            Tok::Word(w) => match w.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Bool(w == "true")
                }
                "fail" => return self.error("an expression (`fail` is only allowed as a statement)"),
                _ if RESERVED.contains(&w.as_str()) => return self.error("an expression"),
                _ if matches!(self.peek_nth(1), Tok::LParen) => {
                    return self.error("an expression (function calls are not supported)")
                }
                _ => {
                    self.bump();
                    ExprKind::Str(w)
                }
            },
            Tok::Type(t) => {
                self.bump();
                if !self.at(&Tok::LBracket) {
                    return Err(ParseError::new(
                        pos,
                        "`[` after a resource type (type values are not supported)",
                        format!("`{t}`"),
                    ));
                }
                self.bump();
                let title = self.expr()?;
                if self.at(&Tok::Comma) {
                    return self.error("`]` (multiple resource titles are not supported)");
                }
                self.expect(&Tok::RBracket, "`]`")?;
                ExprKind::ResourceRef {
                    type_name: t.to_lowercase(),
                    title: Box::new(title),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                return Ok(e);
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                while !self.at(&Tok::RBracket) {
                    items.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RBracket, "`,` or `]`")?;
                ExprKind::Array(items)
            }
            Tok::LBrace => {
                self.bump();
                let mut entries = Vec::new();
                while !self.at(&Tok::RBrace) {
                    let key = self.hash_key()?;
                    self.expect(&Tok::FatArrow, "`=>`")?;
                    entries.push((key, self.expr()?));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RBrace, "`,` or `}`")?;
                ExprKind::Hash(entries)
            }
            Tok::Slash => return self.error("an expression (regular expressions are not supported)"),
            _ => return self.error("an expression"),
        };
        Ok(Expr::new(kind, pos))
    }

    fn hash_key(&mut self) -> PResult<Key> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Key::Int(i))
            }
            Tok::Minus => match self.peek_nth(1).clone() {
                Tok::Int(i) => {
                    self.bump();
                    self.bump();
                    Ok(Key::Int(-i))
                }
                Tok::IntMin => {
                    self.bump();
                    self.bump();
                    Ok(Key::Int(i64::MIN))
                }
                _ => self.error("a hash key (integer or string)"),
            },
            Tok::Str(s) => {
                self.bump();
                Ok(Key::Str(s))
            }
            Tok::Word(w) if !RESERVED.contains(&w.as_str()) => {
                self.bump();
                Ok(Key::Str(w))
            }
            _ => self.error("a hash key (integer or string)"),
        }
    }
}

fn is_class_name(s: &str) -> bool {
    !s.is_empty()
        && s.split("::").all(|seg| {
            seg.chars().next().is_some_and(|c| c.is_ascii_lowercase() || c == '_')
                && seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

/// Splits the text of a variable token into its syntactic form.
fn variable(v: &str) -> ExprKind {
    let (absolute, rest) = match v.strip_prefix("::") {
        Some(rest) => (true, rest),
        None => (false, v),
    };
    match rest.rsplit_once("::") {
        Some((class, name)) => ExprKind::ClassVar {
            class: ClassName::new(class),
            name: name.to_owned(),
        },
        None if absolute => ExprKind::TopVar(rest.to_owned()),
        None => ExprKind::Var(rest.to_owned()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(src: &str) -> Expr {
        parse_expression(src).unwrap_or_else(|err| panic!("{src}: {err}"))
    }

    #[test]
    fn precedence() {
        assert_eq!(
            e("1 + 2 * 3"),
            Expr::binary(
                BinOp::Add,
                Expr::int(1),
                Expr::binary(BinOp::Mul, Expr::int(2), Expr::int(3))
            )
        );
        assert_eq!(e("1 - 2 - 3"), e("(1 - 2) - 3"));
        assert_eq!(e("!true and false"), e("(!true) and false"));
    }

    #[test]
    fn variables() {
        assert_eq!(
            e("$::ssh::params::sshd_package").kind,
            ExprKind::ClassVar {
                class: ClassName::new("ssh::params"),
                name: "sshd_package".into()
            }
        );
        assert_eq!(e("$a::b::x"), e("$::a::b::x"));
        assert_eq!(e("$::x").kind, ExprKind::TopVar("x".into()));
        assert_eq!(e("$x").kind, ExprKind::Var("x".into()));
    }

    #[test]
    fn resource_reference_and_index() {
        let r = e("File['foo.txt']['owner']");
        let ExprKind::Index { target, index } = r.kind else {
            panic!()
        };
        assert_eq!(*index, Expr::str("owner"));
        assert_eq!(
            target.kind,
            ExprKind::ResourceRef {
                type_name: "file".into(),
                title: Box::new(Expr::str("foo.txt"))
            }
        );
    }

    #[test]
    fn bare_words_are_strings() {
        assert_eq!(e("installed"), Expr::str("installed"));
        assert_eq!(e("-5"), Expr::int(-5));
        assert_eq!(e("-9223372036854775808"), Expr::int(i64::MIN));
    }

    #[test]
    fn malformed_assignment_points_at_brace() {
        let err = parse_manifest("class a { $x = }").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (1, 16));
        assert_eq!(err.found, "`}`");
    }

    #[test]
    fn empty_blocks_are_skip() {
        let m = parse_manifest("if true { } else { }").unwrap();
        let ManifestKind::Stmt(s) = m.kind else {
            panic!()
        };
        let StmtKind::If { then, otherwise, .. } = s.kind else {
            panic!()
        };
        assert!(then.is_skip() && otherwise.is_skip());
    }

    #[test]
    fn rejects_out_of_scope_constructs() {
        for src in [
            "node /web/ { }",
            "$x = \"a ${y}\"",
            "class a { class b { } }",
            "$x = undef",
            "if true { } elsif false { } else { }",
            "File <| |>",
            "file { 'a': } -> file { 'b': }",
            "define d (String $x) { }",
            "class a { define d { } }",
            "$x = [1][0, 1]",
            "$x = fail('no')",
            "@file { 'a': }",
            "$x = $y =~ /a/",
            "File { mode => 1 }",
            "class a (Integer $x) { }",
            "notice('x')",
            "File['a'] { mode => 1 }",
            "contain a",
            "require a",
        ] {
            assert!(parse_manifest(src).is_err(), "{src}");
        }
    }

    #[test]
    fn duplicates_rejected() {
        assert!(parse_manifest("file { 'a': owner => 1, owner => 2 }").is_err());
        assert!(parse_manifest("define d ($x, $x) { }").is_err());
    }

    #[test]
    fn nesting_limit() {
        let deep = "(".repeat(1000) + "1" + &")".repeat(1000);
        assert!(parse_expression(&deep).is_err());
        let ok = "(".repeat(50) + "1" + &")".repeat(50);
        assert_eq!(parse_expression(&ok).unwrap(), Expr::int(1));
    }
}
