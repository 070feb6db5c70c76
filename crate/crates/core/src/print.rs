//! Source rendering of syntax trees.
//!
//! Output of a parsed tree re-parses to an equal tree. The internal forms
//! render as `scope α { .. }` and `skip`, which the parser rejects.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::syntax::{
    Case, Expr, ExprKind, Key, Manifest, ManifestKind, NodeSpec, Param, Stmt, StmtKind,
};

const INDENT: &str = "  ";
/// Binding strength of postfix indexing and of atoms.
const PREC_UNARY: u8 = 6;
const PREC_POSTFIX: u8 = 7;

pub fn write_string_literal(out: &mut impl Write, s: &str) -> fmt::Result {
    out.write_char('\'')?;
    for c in s.chars() {
        match c {
            '\\' => out.write_str("\\\\")?,
            '\'' => out.write_str("\\'")?,
            '\n' => out.write_str("\\n")?,
            '\t' => out.write_str("\\t")?,
            c => out.write_char(c)?,
        }
    }
    out.write_char('\'')
}

fn write_key(out: &mut impl Write, k: &Key) -> fmt::Result {
    match k {
        Key::Int(i) => write!(out, "{i}"),
        Key::Str(s) => write_string_literal(out, s),
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Selector { .. } => 0,
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Not(_) => PREC_UNARY,
        _ => PREC_POSTFIX + 1,
    }
}

/// Writes `e`, parenthesised if it binds looser than `ctx`.
fn write_expr(out: &mut impl Write, e: &Expr, ctx: u8) -> fmt::Result {
    let parens = expr_prec(e) < ctx;
    if parens {
        out.write_char('(')?;
    }
    match &e.kind {
        ExprKind::Int(i) => write!(out, "{i}")?,
        ExprKind::Str(s) => write_string_literal(out, s)?,
        ExprKind::Bool(b) => write!(out, "{b}")?,
        ExprKind::Var(x) => write!(out, "${x}")?,
        ExprKind::TopVar(x) => write!(out, "$::{x}")?,
        ExprKind::ClassVar { class, name } => write!(out, "$::{class}::{name}")?,
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            write_expr(out, lhs, p)?;
            write!(out, " {} ", op.symbol())?;
            write_expr(out, rhs, p + 1)?;
        }
        ExprKind::Not(inner) => {
            out.write_char('!')?;
            write_expr(out, inner, PREC_UNARY)?;
        }
        ExprKind::Array(items) => {
            out.write_char('[')?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_expr(out, item, 0)?;
            }
            out.write_char(']')?;
        }
        ExprKind::Hash(entries) => {
            out.write_char('{')?;
            for (i, (k, v)) in entries.iter().enumerate() {
                out.write_str(if i > 0 { ", " } else { " " })?;
                write_key(out, k)?;
                out.write_str(" => ")?;
                write_expr(out, v, 0)?;
            }
            out.write_str(if entries.is_empty() { "}" } else { " }" })?;
        }
        ExprKind::Index { target, index } => {
            write_expr(out, target, PREC_POSTFIX)?;
            out.write_char('[')?;
            write_expr(out, index, 0)?;
            out.write_char(']')?;
        }
        ExprKind::ResourceRef { type_name, title } => {
            write_type_name(out, type_name)?;
            out.write_char('[')?;
            write_expr(out, title, 0)?;
            out.write_char(']')?;
        }
        ExprKind::Selector { scrutinee, arms } => {
            write_expr(out, scrutinee, 0)?;
            out.write_str(" ? {")?;
            for (i, arm) in arms.iter().enumerate() {
                out.write_str(if i > 0 { ", " } else { " " })?;
                write_case(out, &arm.case)?;
                out.write_str(" => ")?;
                write_expr(out, &arm.value, 0)?;
            }
            out.write_str(if arms.is_empty() { "}" } else { " }" })?;
        }
    }
    if parens {
        out.write_char(')')?;
    }
    Ok(())
}

/// `file` -> `File`, `foo::bar` -> `Foo::Bar`.
fn write_type_name(out: &mut impl Write, t: &str) -> fmt::Result {
    for (i, seg) in t.split("::").enumerate() {
        if i > 0 {
            out.write_str("::")?;
        }
        let mut chars = seg.chars();
        if let Some(c) = chars.next() {
            out.write_char(c.to_ascii_uppercase())?;
            out.write_str(chars.as_str())?;
        }
    }
    Ok(())
}

fn write_case(out: &mut impl Write, c: &Case) -> fmt::Result {
    match c {
        Case::Default => out.write_str("default"),
        Case::Expr(e) => write_expr(out, e, 0),
    }
}

struct Printer<'a, W> {
    out: &'a mut W,
    level: usize,
}

impl<W: Write> Printer<'_, W> {
    fn indent(&mut self) -> fmt::Result {
        for _ in 0..self.level {
            self.out.write_str(INDENT)?;
        }
        Ok(())
    }

    /// Renders a list of statements or manifest items, one per line, adding
    /// a `;` where the next item would otherwise continue the previous
    /// expression (e.g. a line starting with `(` or `[`).
    fn lines(&mut self, rendered: Vec<(String, bool)>) -> fmt::Result {
        let n = rendered.len();
        for i in 0..n {
            let (text, ends_in_expr) = &rendered[i];
            self.indent()?;
            self.out.write_str(text)?;
            let next_continues = rendered
                .get(i + 1)
                .is_some_and(|(t, _)| t.starts_with(['(', '[', '-']));
            if *ends_in_expr && next_continues {
                self.out.write_char(';')?;
            }
            self.out.write_char('\n')?;
        }
        Ok(())
    }

    /// `{ .. }` body of a source block; `skip` renders as an empty block.
    fn block(&mut self, s: &Stmt) -> fmt::Result {
        if s.is_skip() {
            return self.out.write_str("{ }");
        }
        self.out.write_str("{\n")?;
        self.level += 1;
        let rendered = stmt_items(s)
            .into_iter()
            .map(|s| self.render_stmt(s))
            .collect::<Result<Vec<_>, _>>()?;
        self.lines(rendered)?;
        self.level -= 1;
        self.indent()?;
        self.out.write_char('}')
    }

    /// Renders one non-sequence statement at the current level (without
    /// leading indentation). The flag tells whether it ends in an
    /// expression.
    fn render_stmt(&mut self, s: &Stmt) -> Result<(String, bool), fmt::Error> {
        let mut buf = String::new();
        let mut p = Printer {
            out: &mut buf,
            level: self.level,
        };
        let ends_in_expr = p.stmt(s)?;
        Ok((buf, ends_in_expr))
    }

    fn stmt(&mut self, s: &Stmt) -> Result<bool, fmt::Error> {
        match &s.kind {
            StmtKind::Expr(e) => {
                write_expr(self.out, e, 0)?;
                return Ok(true);
            }
            StmtKind::Assign { name, value } => {
                write!(self.out, "${name} = ")?;
                write_expr(self.out, value, 0)?;
                return Ok(true);
            }
            StmtKind::Seq(..) => {
                // Left-nested sequences only arise during evaluation.
                self.block(s)?;
            }
            StmtKind::Unless { cond, body } => {
                self.out.write_str("unless ")?;
                write_expr(self.out, cond, 0)?;
                self.out.write_char(' ')?;
                self.block(body)?;
            }
            StmtKind::If {
                cond,
                then,
                otherwise,
            } => {
                self.out.write_str("if ")?;
                write_expr(self.out, cond, 0)?;
                self.out.write_char(' ')?;
                self.block(then)?;
                if !otherwise.is_skip() {
                    self.out.write_str(" else ")?;
                    self.block(otherwise)?;
                }
            }
            StmtKind::Case { scrutinee, arms } => {
                self.out.write_str("case ")?;
                write_expr(self.out, scrutinee, 0)?;
                self.out.write_str(" {\n")?;
                self.level += 1;
                for arm in arms {
                    self.indent()?;
                    write_case(self.out, &arm.case)?;
                    self.out.write_str(": ")?;
                    self.block(&arm.body)?;
                    self.out.write_char('\n')?;
                }
                self.level -= 1;
                self.indent()?;
                self.out.write_char('}')?;
            }
            StmtKind::Resource { head, title, attrs } => {
                write!(self.out, "{head} {{ ")?;
                write_expr(self.out, title, 0)?;
                self.out.write_char(':')?;
                self.attrs(attrs)?;
            }
            StmtKind::ClassDecl { class, attrs } => {
                write!(self.out, "class {{ {class}:")?;
                self.attrs(attrs)?;
            }
            StmtKind::Include(a) => write!(self.out, "include {a}")?,
            StmtKind::Fail(e) => {
                self.out.write_str("fail(")?;
                write_expr(self.out, e, 0)?;
                self.out.write_char(')')?;
            }
            StmtKind::Scope(scope, body) => {
                write!(self.out, "scope {scope} ")?;
                if body.is_skip() {
                    self.out.write_str("{ skip }")?;
                } else {
                    self.block(body)?;
                }
            }
            StmtKind::Skip => self.out.write_str("skip")?,
        }
        Ok(false)
    }

    fn attrs(&mut self, attrs: &[crate::syntax::Attr]) -> fmt::Result {
        if attrs.is_empty() {
            return self.out.write_str(" }");
        }
        self.out.write_char('\n')?;
        self.level += 1;
        for (i, a) in attrs.iter().enumerate() {
            self.indent()?;
            write!(self.out, "{} => ", a.name)?;
            write_expr(self.out, &a.value, 0)?;
            self.out.write_str(if i + 1 < attrs.len() { ",\n" } else { "\n" })?;
        }
        self.level -= 1;
        self.indent()?;
        self.out.write_char('}')
    }

    fn params(&mut self, params: &[Param]) -> fmt::Result {
        self.out.write_char('(')?;
        for (i, p) in params.iter().enumerate() {
            if i > 0 {
                self.out.write_str(", ")?;
            }
            write!(self.out, "${}", p.name)?;
            if let Some(d) = &p.default {
                self.out.write_str(" = ")?;
                write_expr(self.out, d, 0)?;
            }
        }
        self.out.write_char(')')
    }

    fn manifest_item(&mut self, m: &Manifest) -> Result<(String, bool), fmt::Error> {
        let mut buf = String::new();
        let mut p = Printer {
            out: &mut buf,
            level: self.level,
        };
        let ends_in_expr = match &m.kind {
            ManifestKind::Stmt(s) => {
                if s.is_skip() {
                    p.out.write_str("skip")?;
                    false
                } else {
                    let items = stmt_items(s);
                    if items.len() == 1 {
                        p.stmt(items[0])?
                    } else {
                        p.block(s)?;
                        false
                    }
                }
            }
            ManifestKind::Seq(..) => {
                p.out.write_str("{\n")?;
                p.level += 1;
                let rendered = manifest_items(m)
                    .into_iter()
                    .map(|m| p.manifest_item(m))
                    .collect::<Result<Vec<_>, _>>()?;
                p.lines(rendered)?;
                p.level -= 1;
                p.indent()?;
                p.out.write_char('}')?;
                false
            }
            ManifestKind::Node { spec, body } => {
                p.out.write_str("node ")?;
                match spec {
                    NodeSpec::Default => p.out.write_str("default")?,
                    NodeSpec::Name(n) => write_string_literal(p.out, n)?,
                    NodeSpec::List(names) => {
                        for (i, n) in names.iter().enumerate() {
                            if i > 0 {
                                p.out.write_str(", ")?;
                            }
                            write_string_literal(p.out, n)?;
                        }
                    }
                }
                p.out.write_char(' ')?;
                p.block(body)?;
                false
            }
            ManifestKind::Define { name, params, body } => {
                write!(p.out, "define {name} ")?;
                p.params(params)?;
                p.out.write_char(' ')?;
                p.block(body)?;
                false
            }
            ManifestKind::Class {
                name,
                params,
                parent,
                body,
            } => {
                write!(p.out, "class {name} ")?;
                if let Some(params) = params {
                    p.params(params)?;
                    p.out.write_char(' ')?;
                }
                if let Some(parent) = parent {
                    write!(p.out, "inherits {parent} ")?;
                }
                p.block(body)?;
                false
            }
        };
        Ok((buf, ends_in_expr))
    }
}

/// Right spine of a statement sequence. Left-nested sequences stay intact.
fn stmt_items(s: &Stmt) -> Vec<&Stmt> {
    let mut out = Vec::new();
    let mut cur = s;
    while let StmtKind::Seq(a, b) = &cur.kind {
        out.push(&**a);
        cur = b;
    }
    out.push(cur);
    out
}

fn manifest_items(m: &Manifest) -> Vec<&Manifest> {
    m.items()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, 0)
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer { out: f, level: 0 };
        let items = stmt_items(self);
        if items.len() == 1 {
            p.stmt(self)?;
            return Ok(());
        }
        let rendered = items
            .into_iter()
            .map(|s| p.render_stmt(s))
            .collect::<Result<Vec<_>, _>>()?;
        // Drop the final newline so single- and multi-line output agree.
        let mut buf = String::new();
        Printer {
            out: &mut buf,
            level: 0,
        }
        .lines(rendered)?;
        f.write_str(buf.trim_end_matches('\n'))
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_skip() {
            return Ok(());
        }
        let mut buf = String::new();
        let mut p = Printer {
            out: &mut buf,
            level: 0,
        };
        let rendered = self
            .items()
            .into_iter()
            .map(|m| p.manifest_item(m))
            .collect::<Result<Vec<_>, _>>()?;
        p.lines(rendered)?;
        f.write_str(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Scope;
    use crate::parser::{parse_expression, parse_manifest};
    use crate::syntax::Pos;
    use alloc::boxed::Box;
    use alloc::string::ToString;

    fn round_trip(src: &str) {
        let m = parse_manifest(src).unwrap();
        let printed = m.to_string();
        let again = parse_manifest(&printed).unwrap_or_else(|e| panic!("{printed}\n{e}"));
        assert_eq!(m, again, "{printed}");
    }

    #[test]
    fn assignment_round_trip() {
        let m = parse_manifest("$x = 1").unwrap();
        assert_eq!(m.to_string(), "$x = 1\n");
    }

    #[test]
    fn internal_forms() {
        let s = Stmt::new(StmtKind::Scope(Scope::Node, Box::default()), Pos::default());
        assert_eq!(s.to_string(), "scope ::nd { skip }");
        assert!(parse_manifest(&s.to_string()).is_err());
    }

    #[test]
    fn expressions_keep_structure() {
        for src in [
            "(1 + 2) * 3",
            "1 - (2 - 3)",
            "!(true and false)",
            "(1 ? { default => 2 })[0]",
            "($x ? { 1 => 2 }) + 1",
            "-5 - -5",
            "File['a']['owner']",
            "{ 'a' => [1, { 2 => 'x' }], -3 => 'y' }",
            "'it\\'s'",
            "$::a::b::c == $::d",
            "1 < 2 == true",
        ] {
            let e = parse_expression(src).unwrap();
            let again = parse_expression(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn manifests_round_trip() {
        round_trip(
            "class ssh::params {
               case $::osfamily {
                 'Debian': { $sshd_package = 'ssh' }
                 default: { fail('no') }
               }
             }
             class ssh ($p = $::ssh::params::sshd_package) inherits ssh::params {
               package { $p: ensure => installed }
             }
             node 'a', 'b' { include ssh }
             node default { }
             define d ($x, $y = 2) { file { $title: mode => $x } }
             class e () { }",
        );
        round_trip("$x = 1;\n[1, 2]\n$y = 2; (3);\n-4");
        round_trip("if true { } else { $x = 1 }\nunless false { }\nclass { c: a => 1 }");
    }
}
