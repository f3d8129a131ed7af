//! S-expression reader shared by the DSL front end and the model parser.
//!
//! Supports `;` line comments, `(`/`)` and `[`/`]` as interchangeable
//! brackets, `'x` as `(quote x)`, `#t`/`#f`, `#:keywords`, strings,
//! integers and floats.

use std::fmt;

use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Sym(String),
    Keyword(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(Atom, Span),
    List(Vec<SExpr>, Span),
}

impl SExpr {
    pub fn span(&self) -> Span {
        match self {
            SExpr::Atom(_, s) | SExpr::List(_, s) => *s,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            SExpr::Atom(Atom::Sym(s), _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a, _) => match a {
                Atom::Bool(true) => write!(f, "#t"),
                Atom::Bool(false) => write!(f, "#f"),
                Atom::Int(i) => write!(f, "{i}"),
                Atom::Float(x) => write!(f, "{}", format_float(*x)),
                Atom::Str(s) => write!(f, "{s:?}"),
                Atom::Sym(s) => write!(f, "{s}"),
                Atom::Keyword(k) => write!(f, "#:{k}"),
            },
            SExpr::List(items, _) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Formats a float so that it reads back as a float with identical bits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() && x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x:?}")
    }
}

struct Reader<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Reader<'a> {
    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else if c & 0xC0 != 0x80 {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == b';' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_ascii_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<SExpr> {
        self.skip_ws();
        let start = self.span();
        match self.peek() {
            None => Err(Error::syntax(start, "unexpected end of input")),
            Some(b'(') | Some(b'[') => {
                let open = self.bump().unwrap();
                let close = if open == b'(' { b')' } else { b']' };
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(Error::syntax(
                                self.span(),
                                format!("unexpected end of input: `{}` opened at {start} is never closed", open as char),
                            ))
                        }
                        Some(c) if c == close => {
                            self.bump();
                            return Ok(SExpr::List(items, start));
                        }
                        Some(c @ (b')' | b']')) => {
                            return Err(Error::syntax(
                                self.span(),
                                format!("mismatched `{}` for `{}` opened at {start}", c as char, open as char),
                            ))
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(c @ (b')' | b']')) => Err(Error::syntax(start, format!("unexpected `{}`", c as char))),
            Some(b'\'') => {
                self.bump();
                let quoted = self.read()?;
                Ok(SExpr::List(
                    vec![SExpr::Atom(Atom::Sym("quote".into()), start), quoted],
                    start,
                ))
            }
            Some(b'"') => self.read_string(start),
            Some(_) => self.read_atom(start),
        }
    }

    fn read_string(&mut self, start: Span) -> Result<SExpr> {
        self.bump();
        let mut out = String::new();
        loop {
            let c = match self.peek() {
                None => return Err(Error::syntax(start, "unterminated string literal")),
                Some(_) => {
                    // Decode one UTF-8 char from the underlying text.
                    let ch = self.text[self.pos..].chars().next().unwrap();
                    for _ in 0..ch.len_utf8() {
                        self.bump();
                    }
                    ch
                }
            };
            match c {
                '"' => return Ok(SExpr::Atom(Atom::Str(out), start)),
                '\\' => {
                    let esc = self.bump().ok_or_else(|| Error::syntax(start, "unterminated string literal"))?;
                    out.push(match esc {
                        b'n' => '\n',
                        b't' => '\t',
                        b'"' => '"',
                        b'\\' => '\\',
                        other => {
                            return Err(Error::syntax(self.span(), format!("unknown escape `\\{}`", other as char)))
                        }
                    });
                }
                c => out.push(c),
            }
        }
    }

    fn read_atom(&mut self, start: Span) -> Result<SExpr> {
        let begin = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || matches!(c, b'(' | b')' | b'[' | b']' | b'"' | b';' | b'\'') {
                break;
            }
            self.bump();
        }
        let tok = &self.text[begin..self.pos];
        let atom = match tok {
            "#t" | "#true" => Atom::Bool(true),
            "#f" | "#false" => Atom::Bool(false),
            _ if tok.starts_with("#:") => Atom::Keyword(tok[2..].to_string()),
            _ if tok.starts_with('#') => {
                return Err(Error::syntax(start, format!("unknown token `{tok}`")));
            }
            _ => parse_number(tok).unwrap_or_else(|| Atom::Sym(tok.to_string())),
        };
        Ok(SExpr::Atom(atom, start))
    }
}

fn parse_number(tok: &str) -> Option<Atom> {
    let first = tok.as_bytes()[0];
    let numeric_start = first.is_ascii_digit()
        || ((first == b'-' || first == b'+' || first == b'.') && tok.len() > 1 && {
            let rest = tok[1..].as_bytes()[0];
            rest.is_ascii_digit() || (rest == b'.' && tok.len() > 2)
        });
    if !numeric_start {
        return None;
    }
    if let Ok(i) = tok.parse::<i64>() {
        return Some(Atom::Int(i));
    }
    tok.parse::<f64>().ok().map(Atom::Float)
}

/// Reads every top-level datum in `text`.
pub fn read_all(text: &str) -> Result<Vec<SExpr>> {
    let mut r = Reader {
        src: text.as_bytes(),
        text,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_atoms() {
        let v = read_all("(+ 2 3.5) ; comment\n[a #t \"s\" #:kw -4]").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].to_string(), "(+ 2 3.5)");
        assert_eq!(v[1].to_string(), "(a #t \"s\" #:kw -4)");
        assert_eq!(v[1].span(), Span::new(2, 1));
    }

    #[test]
    fn quote_expands() {
        let v = read_all("'((0.95 0.94) (0.29 0.001))").unwrap();
        assert_eq!(v[0].to_string(), "(quote ((0.95 0.94) (0.29 0.001)))");
    }

    #[test]
    fn unbalanced_reports_position() {
        let err = read_all("(static").unwrap_err();
        match err {
            Error::Syntax { span, msg } => {
                assert_eq!(span, Span::new(1, 8));
                assert!(msg.contains("opened at 1:1"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(read_all("(a ]").is_err());
        assert!(read_all(")").is_err());
    }

    #[test]
    fn symbols_that_look_numeric() {
        let v = read_all("- + -x 1e3 .5").unwrap();
        let atoms: Vec<_> = v
            .iter()
            .map(|s| match s {
                SExpr::Atom(a, _) => a.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            atoms,
            vec![
                Atom::Sym("-".into()),
                Atom::Sym("+".into()),
                Atom::Sym("-x".into()),
                Atom::Float(1000.0),
                Atom::Float(0.5)
            ]
        );
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0, 0.001, 1e-300, 0.3 - 0.1, 12345.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}
