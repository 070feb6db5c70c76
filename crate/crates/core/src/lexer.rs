use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::parser::ParseError;
use crate::syntax::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Int(i64),
    /// Magnitude that only fits as the operand of a leading `-`.
    IntMin,
    Str(String),
    /// Text after `$`, e.g. `x`, `::x`, `a::b::x`.
    Var(String),
    /// Lowercase name, possibly `::`-qualified; includes keywords.
    Word(String),
    /// Capitalized name such as `File`.
    Type(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    FatArrow,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Gt,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    Question,
    /// Lexically valid Puppet that is outside the language subset, such as
    /// `->`, `<|` or `=~`. Kept as a token so the parser reports it where it
    /// occurs.
    Unsupported(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Int(i) => return write!(f, "`{i}`"),
            Tok::IntMin => "`9223372036854775808`",
            Tok::Str(s) => return write!(f, "string {s:?}"),
            Tok::Var(v) => return write!(f, "`${v}`"),
            Tok::Word(w) => return write!(f, "`{w}`"),
            Tok::Type(t) => return write!(f, "`{t}`"),
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::Semi => "`;`",
            Tok::FatArrow => "`=>`",
            Tok::Assign => "`=`",
            Tok::EqEq => "`==`",
            Tok::NotEq => "`!=`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::Le => "`<=`",
            Tok::Ge => "`>=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Percent => "`%`",
            Tok::Bang => "`!`",
            Tok::Question => "`?`",
            Tok::Unsupported(s) => return write!(f, "`{s}`"),
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Lexer<'a> {
    src: &'a str,
    at: usize,
    line: u32,
    col: u32,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src,
        at: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia()?;
        let pos = lx.pos();
        let Some(c) = lx.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = lx.token(c, pos)?;
        out.push(Token { tok, pos });
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.at..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.at..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    let pos = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => return Err(ParseError::new(pos, "unterminated comment", "`/*`")),
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    /// A `::`-separated name whose first segment starts at the cursor.
    fn qualified_name(&mut self) -> String {
        let mut name = String::new();
        loop {
            while let Some(c) = self.peek().filter(|c| is_ident_char(*c)) {
                name.push(c);
                self.bump();
            }
            let continues = self.peek() == Some(':')
                && self.peek_at(1) == Some(':')
                && self.peek_at(2).is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
            if !continues {
                return name;
            }
            self.bump();
            self.bump();
            name.push_str("::");
        }
    }

    fn token(&mut self, c: char, pos: Pos) -> Result<Tok, ParseError> {
        if c.is_ascii_digit() {
            return self.number(pos);
        }
        if c.is_ascii_lowercase() || c == '_' {
            return Ok(Tok::Word(self.qualified_name()));
        }
        if c.is_ascii_uppercase() {
            return Ok(Tok::Type(self.qualified_name()));
        }
        if c == '\'' || c == '"' {
            return self.string(c, pos);
        }
        if c == '$' {
            self.bump();
            let mut name = String::new();
            if self.peek() == Some(':') && self.peek_at(1) == Some(':') {
                self.bump();
                self.bump();
                name.push_str("::");
            }
            if !self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                return Err(ParseError::new(pos, "expected a variable name after `$`", "`$`"));
            }
            name.push_str(&self.qualified_name());
            return Ok(Tok::Var(name));
        }
        self.bump();
        let next = self.peek();
        let two = |lx: &mut Self, t: Tok| {
            lx.bump();
            Ok(t)
        };
        match (c, next) {
            ('=', Some('>')) => two(self, Tok::FatArrow),
            ('=', Some('=')) => two(self, Tok::EqEq),
            ('=', Some('~')) => two(self, Tok::Unsupported("=~")),
            ('=', _) => Ok(Tok::Assign),
            ('!', Some('=')) => two(self, Tok::NotEq),
            ('!', Some('~')) => two(self, Tok::Unsupported("!~")),
            ('!', _) => Ok(Tok::Bang),
            ('<', Some('=')) => two(self, Tok::Le),
            ('<', Some('|')) => two(self, Tok::Unsupported("<|")),
            ('<', Some('<')) => two(self, Tok::Unsupported("<<")),
            ('<', Some('-')) => two(self, Tok::Unsupported("<-")),
            ('<', Some('~')) => two(self, Tok::Unsupported("<~")),
            ('<', _) => Ok(Tok::Lt),
            ('>', Some('=')) => two(self, Tok::Ge),
            ('>', Some('>')) => two(self, Tok::Unsupported(">>")),
            ('>', _) => Ok(Tok::Gt),
            ('-', Some('>')) => two(self, Tok::Unsupported("->")),
            ('-', _) => Ok(Tok::Minus),
            ('~', Some('>')) => two(self, Tok::Unsupported("~>")),
            ('|', Some('>')) => two(self, Tok::Unsupported("|>")),
            ('|', _) => Ok(Tok::Unsupported("|")),
            ('@', _) => Ok(Tok::Unsupported("@")),
            ('{', _) => Ok(Tok::LBrace),
            ('}', _) => Ok(Tok::RBrace),
            ('(', _) => Ok(Tok::LParen),
            (')', _) => Ok(Tok::RParen),
            ('[', _) => Ok(Tok::LBracket),
            (']', _) => Ok(Tok::RBracket),
            (',', _) => Ok(Tok::Comma),
            (':', _) => Ok(Tok::Colon),
            (';', _) => Ok(Tok::Semi),
            ('+', _) => Ok(Tok::Plus),
            ('*', _) => Ok(Tok::Star),
            ('/', _) => Ok(Tok::Slash),
            ('%', _) => Ok(Tok::Percent),
            ('?', _) => Ok(Tok::Question),
            _ => Err(ParseError::new(pos, "unexpected character", alloc::format!("{c:?}"))),
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let start = self.at;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek().is_some_and(|c| is_ident_char(c) || c == '.') {
            while self.peek().is_some_and(|c| is_ident_char(c) || c == '.') {
                self.bump();
            }
            return Err(ParseError::new(
                pos,
                "malformed number (only decimal integers are supported)",
                alloc::format!("`{}`", &self.src[start..self.at]),
            ));
        }
        let digits = &self.src[start..self.at];
        match digits.parse::<i64>() {
            Ok(i) => Ok(Tok::Int(i)),
            Err(_) if digits.trim_start_matches('0') == "9223372036854775808" => Ok(Tok::IntMin),
            Err(_) => Err(ParseError::new(pos, "integer literal out of range", alloc::format!("`{digits}`"))),
        }
    }

    fn string(&mut self, quote: char, pos: Pos) -> Result<Tok, ParseError> {
        self.bump();
        let mut s = String::new();
        loop {
            let at = self.pos();
            match self.bump() {
                None => return Err(ParseError::new(pos, "unterminated string", "end of input")),
                Some(c) if c == quote => return Ok(Tok::Str(s)),
                Some('\\') => {
                    let escaped = match self.bump() {
                        Some('\\') => '\\',
                        Some('\'') => '\'',
                        Some('"') => '"',
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('$') if quote == '"' => '$',
                        Some(other) => {
                            return Err(ParseError::new(
                                at,
                                "unsupported escape sequence",
                                alloc::format!("`\\{other}`"),
                            ))
                        }
                        None => return Err(ParseError::new(pos, "unterminated string", "end of input")),
                    };
                    s.push(escaped);
                }
                Some('$') if quote == '"' => {
                    return Err(ParseError::new(
                        at,
                        "string interpolation is not supported (escape `$` as `\\$`)",
                        "`$`",
                    ))
                }
                Some(c) => s.push(c),
            }
        }
    }
}
