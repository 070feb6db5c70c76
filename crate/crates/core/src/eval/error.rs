use alloc::string::String;
use core::fmt;

use crate::env::Scope;
use crate::syntax::Pos;

macro_rules! kinds {
    ($($(#[$doc:meta])* $kind:ident => $slug:literal,)*) => {
        /// Why a compilation stopped before reaching `skip`.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum ErrorKind {
            $($(#[$doc])* $kind,)*
        }

        impl ErrorKind {
            pub const ALL: &'static [ErrorKind] = &[$(ErrorKind::$kind,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(ErrorKind::$kind => stringify!($kind),)*
                }
            }

            /// Kebab-case name, as used in `expect-error.txt` files.
            pub fn slug(self) -> &'static str {
                match self {
                    $(ErrorKind::$kind => $slug,)*
                }
            }
        }
    };
}

kinds! {
    UndefinedVariable => "undefined-variable",
    DuplicateVariable => "duplicate-variable",
    DuplicateResource => "duplicate-resource",
    /// Class, defined type or resource-reference type with no definition.
    UndefinedDefinition => "undefined-definition",
    /// A class or defined type defined twice.
    DuplicateDefinition => "duplicate-definition",
    ClassAlreadyDeclared => "class-already-declared",
    MissingParameter => "missing-parameter",
    UnknownParameter => "unknown-parameter",
    TypeMismatch => "type-mismatch",
    DivisionByZero => "division-by-zero",
    SelectorNoMatch => "selector-no-match",
    BadDereference => "bad-dereference",
    InheritanceCycle => "inheritance-cycle",
    StepLimitExceeded => "step-limit-exceeded",
    /// Raised by `fail(..)`.
    Failure => "failure",
    /// No rule applies but no other kind describes why. Indicates a bug.
    InternalStuck => "internal-stuck",
}

impl ErrorKind {
    /// Accepts both `DuplicateResource` and `duplicate-resource`.
    pub fn parse(s: &str) -> Option<ErrorKind> {
        let s = s.trim();
        ErrorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s || k.slug() == s)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompileError {
    pub kind: ErrorKind,
    pub pos: Pos,
    /// Ambient scope where evaluation got stuck; `None` at manifest level.
    pub scope: Option<Scope>,
    pub message: String,
}

impl CompileError {
    pub fn new(kind: ErrorKind, pos: Pos, scope: Option<&Scope>, message: impl Into<String>) -> CompileError {
        CompileError {
            kind,
            pos,
            scope: scope.cloned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.kind, self.pos)?;
        if let Some(scope) = &self.scope {
            write!(f, ": in scope {scope}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_parse() {
        for k in ErrorKind::ALL {
            assert_eq!(ErrorKind::parse(k.slug()), Some(*k));
            assert_eq!(ErrorKind::parse(k.name()), Some(*k));
        }
        assert_eq!(ErrorKind::parse("parse-error"), None);
    }
}
