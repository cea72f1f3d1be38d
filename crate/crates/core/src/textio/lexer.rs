use std::fmt;

use super::TextError;

/// 1-based line and column of a token.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    DotDot,
    Colon,
    ColonDash,
    Bang,
    NotEq,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::DotDot => f.write_str("`..`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::ColonDash => f.write_str("`:-`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::NotEq => f.write_str("`!=`"),
            Tok::Star => f.write_str("`*`"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '#' || c == '\''
}

/// Splits `text` into tokens. `%` starts a comment running to the end of the line.
pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, SourceSpan)>, TextError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = SourceSpan { line, column: col };
        let advance = |n: usize, col: &mut usize, i: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut col, &mut i);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            ',' => (Tok::Comma, 1),
            '*' => (Tok::Star, 1),
            '.' if next == Some('.') => (Tok::DotDot, 2),
            '.' => (Tok::Dot, 1),
            ':' if next == Some('-') => (Tok::ColonDash, 2),
            ':' => (Tok::Colon, 1),
            '!' if next == Some('=') => (Tok::NotEq, 2),
            '!' => (Tok::Bang, 1),
            '-' if next.is_some_and(|d| d.is_ascii_digit()) => {
                return Err(TextError::syntax(span, "negative values are not allowed"));
            }
            d if d.is_ascii_digit() => {
                let start = i;
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[start..j].iter().collect();
                let n = digits
                    .parse::<u64>()
                    .map_err(|_| TextError::syntax(span, format!("number `{digits}` is too large")))?;
                if j < chars.len() && is_ident_start(chars[j]) {
                    return Err(TextError::syntax(span, "identifiers cannot start with a digit"));
                }
                (Tok::Number(n), j - start)
            }
            s if is_ident_start(s) => {
                let start = i;
                let mut j = i;
                while j < chars.len() && is_ident_continue(chars[j]) {
                    j += 1;
                }
                (Tok::Ident(chars[start..j].iter().collect()), j - start)
            }
            other => {
                return Err(TextError::syntax(span, format!("unexpected character `{other}`")));
            }
        };
        out.push((tok, span));
        advance(len, &mut col, &mut i);
    }
    Ok(out)
}

/// Cursor over a token stream.
pub(crate) struct Tokens {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    end: SourceSpan,
}

impl Tokens {
    pub(crate) fn new(text: &str) -> Result<Self, TextError> {
        let toks = tokenize(text)?;
        let lines = text.split('\n').count().max(1);
        let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Ok(Tokens {
            toks,
            pos: 0,
            end: SourceSpan {
                line: lines,
                column: last_col,
            },
        })
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    pub(crate) fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    pub(crate) fn span(&self) -> SourceSpan {
        self.toks.get(self.pos).map_or(self.end, |(_, s)| *s)
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: &Tok) -> Result<(), TextError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    pub(crate) fn ident(&mut self, what: &str) -> Result<String, TextError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    pub(crate) fn number(&mut self) -> Result<u64, TextError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("a data value")),
        }
    }

    pub(crate) fn unexpected(&self, expected: &str) -> TextError {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of input".to_string(),
        };
        TextError::syntax(self.span(), format!("expected {expected}, found {found}"))
    }
}
