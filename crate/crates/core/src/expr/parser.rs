//! Recursive-descent parser for the problem-definition expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-u^2` is `-(u^2)`, while the
//! exponent itself may carry a sign: `u^-2`. An exponent that is a literal
//! integer becomes [`Node::PowI`], any other literal becomes [`Node::PowF`].
//! The only built-in constant is `pi`; callers may supply more.

use std::fmt;

use super::ast::{Expression, Func, Node};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },
    InvalidVariables(String),
}

/// Parse failure; `offset` is a byte offset into the source text.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at offset {}: {msg}", self.offset),
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{name}` at offset {}", self.offset)
            }
            ParseErrorKind::Arity {
                function,
                expected,
                found,
            } => write!(
                f,
                "`{function}` takes {expected} argument(s), found {found} at offset {}",
                self.offset
            ),
            ParseErrorKind::InvalidVariables(msg) => write!(f, "invalid variable list: {msg}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| ParseError {
                offset: start,
                kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::Syntax(format!("number `{text}` overflows")),
                });
            }
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        if "+-*/^(),".contains(ch) {
            self.pos += 1;
            return Ok((Tok::Sym(ch), start));
        }
        Err(ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    variables: &'a [String],
    constants: &'a [(String, f64)],
}

fn syntax(offset: usize, msg: impl Into<String>) -> ParseError {
    ParseError {
        offset,
        kind: ParseErrorKind::Syntax(msg.into()),
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(syntax(self.at, format!("expected `{c}`, found {}", describe(&self.tok))))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.bump()?;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump()?;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.bump()?;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.bump()?;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.tok {
            Tok::Sym('-') => {
                self.bump()?;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Sym('+') => {
                self.bump()?;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let exponent = self.unary()?;
        let literal = match &exponent {
            Node::Const(c) => Some(*c),
            Node::Neg(inner) => match **inner {
                Node::Const(c) => Some(-c),
                _ => None,
            },
            _ => None,
        };
        Ok(match literal {
            Some(c) if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 => {
                Node::PowI(Box::new(base), c as i32)
            }
            Some(c) => Node::PowF(Box::new(base), c),
            None => Node::Pow(Box::new(base), Box::new(exponent)),
        })
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let at = self.at;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Const(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if self.tok == Tok::Sym('(') {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError {
                            offset: at,
                            kind: ParseErrorKind::UnknownIdentifier(name),
                        });
                    };
                    self.bump()?;
                    if self.tok == Tok::Sym(')') {
                        return Err(ParseError {
                            offset: at,
                            kind: ParseErrorKind::Arity {
                                function: name,
                                expected: 1,
                                found: 0,
                            },
                        });
                    }
                    let arg = self.expr()?;
                    let mut found = 1;
                    while self.tok == Tok::Sym(',') {
                        self.bump()?;
                        self.expr()?;
                        found += 1;
                    }
                    self.expect(')')?;
                    if found != 1 {
                        return Err(ParseError {
                            offset: at,
                            kind: ParseErrorKind::Arity {
                                function: name,
                                expected: 1,
                                found,
                            },
                        });
                    }
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                if let Some(i) = self.variables.iter().position(|v| *v == name) {
                    Ok(Node::Var(i))
                } else if let Some((_, c)) = self.constants.iter().find(|(n, _)| *n == name) {
                    Ok(Node::Const(*c))
                } else if name == "pi" {
                    Ok(Node::Const(std::f64::consts::PI))
                } else {
                    Err(ParseError {
                        offset: at,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    })
                }
            }
            other => Err(syntax(at, format!("unexpected {}", describe(&other)))),
        }
    }
}

/// Parses `text` as an expression over `variables` (in coordinate order).
pub fn parse<S: AsRef<str>>(text: &str, variables: &[S]) -> Result<Expression, ParseError> {
    parse_with_constants(text, variables, &[])
}

/// Like [`parse`], with named numeric constants substituted at parse time.
/// Variables shadow constants of the same name.
pub fn parse_with_constants<S: AsRef<str>>(
    text: &str,
    variables: &[S],
    constants: &[(String, f64)],
) -> Result<Expression, ParseError> {
    let names: Vec<String> = variables.iter().map(|s| s.as_ref().to_string()).collect();
    if names.is_empty() {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::InvalidVariables("no variables declared".into()),
        });
    }
    for (i, name) in names.iter().enumerate() {
        let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid || Func::from_name(name).is_some() || name == "pi" {
            return Err(ParseError {
                offset: 0,
                kind: ParseErrorKind::InvalidVariables(format!("`{name}` is not a usable name")),
            });
        }
        if names[..i].contains(name) {
            return Err(ParseError {
                offset: 0,
                kind: ParseErrorKind::InvalidVariables(format!("`{name}` declared twice")),
            });
        }
    }
    let mut parser = Parser {
        lexer: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        at: 0,
        variables: &names,
        constants,
    };
    parser.bump()?;
    let root = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(syntax(parser.at, format!("unexpected {}", describe(&parser.tok))));
    }
    Ok(Expression::from_node(root, names))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> [&'static str; 2] {
        ["x", "y"]
    }

    #[test]
    fn named_constants() {
        let c = vec![("eps".to_string(), 0.5), ("x".to_string(), 9.0)];
        let e = parse_with_constants("eps*x + y", &xy(), &c).unwrap();
        assert_eq!(e.eval(&[2.0, 1.0]).unwrap(), 2.0);
        assert!(parse_with_constants("delta*x", &xy(), &c).is_err());
    }

    #[test]
    fn tanh_at_origin() {
        let e = parse("tanh(x+2*y)", &xy()).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((e.eval(&[1.0, 0.0]).unwrap() - 0.76159416).abs() < 1e-8);
    }

    #[test]
    fn atanh_difference() {
        let e = parse("atanh(u) - 2*atanh(v)", &["u", "v"]).unwrap();
        assert_eq!(e.eval(&[0.5, 0.0]).unwrap(), 0.5f64.atanh());
    }

    #[test]
    fn malformed_input_reports_offset() {
        let err = parse("x+*y", &xy()).unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn unknown_identifier_and_arity() {
        let err = parse("x + z", &xy()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("z".into()));
        assert_eq!(err.offset, 4);
        let err = parse("tanh(x, y)", &xy()).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { found: 2, .. }));
        let err = parse("foo(x)", &xy()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x^2", &xy()).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]).unwrap(), -9.0);
        let e = parse("2^3^2", &xy()).unwrap();
        assert!((e.eval(&[0.0, 0.0]).unwrap() - 512.0).abs() < 1e-9);
        let e = parse("x - y - 1", &xy()).unwrap();
        assert_eq!(e.eval(&[5.0, 1.0]).unwrap(), 3.0);
        let e = parse("x / y / 2", &xy()).unwrap();
        assert_eq!(e.eval(&[8.0, 2.0]).unwrap(), 2.0);
        let e = parse("x^-2", &xy()).unwrap();
        assert!(matches!(e.root(), Node::PowI(_, -2)));
        let e = parse("x^1.5", &xy()).unwrap();
        assert!(matches!(e.root(), Node::PowF(_, c) if *c == 1.5));
        let e = parse("x^y", &xy()).unwrap();
        assert!(matches!(e.root(), Node::Pow(..)));
    }

    #[test]
    fn cube_and_domain_errors() {
        let e = parse("u^3", &["u"]).unwrap();
        assert_eq!(e.eval(&[2.0]).unwrap(), 8.0);
        let e = parse("atanh(u)", &["u"]).unwrap();
        let err = e.eval(&[1.0]).unwrap_err();
        match err {
            crate::expr::EvalError::Domain { subexpression, .. } => assert_eq!(subexpression, "atanh(u)"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("log(u)", &["u"]).unwrap().eval(&[0.0]).is_err());
        assert!(parse("sqrt(u)", &["u"]).unwrap().eval(&[-1.0]).is_err());
        assert!(parse("1/u", &["u"]).unwrap().eval(&[0.0]).is_err());
        assert!(parse("u^0.5", &["u"]).unwrap().eval(&[-1.0]).is_err());
    }

    #[test]
    fn variable_list_is_validated() {
        assert!(parse::<&str>("1", &[]).is_err());
        assert!(parse("x", &["x", "x"]).is_err());
        assert!(parse("x", &["tanh"]).is_err());
    }

    #[test]
    fn printer_round_trip_examples() {
        for text in [
            "-x^2 + y*(x - y)",
            "x - (y - 1)",
            "(x^2)^3",
            "x^-2 / (1 - x^2)",
            "atanh(1 - 2*x)*y^1.5",
            "2^(x + y)",
            "-(x + y)",
            "x*-y",
            "exp(-x^2 - 2*y^2)",
        ] {
            let e = parse(text, &xy()).unwrap();
            let printed = e.to_string();
            let again = parse(&printed, &xy()).unwrap();
            assert_eq!(e, again, "{text} -> {printed}");
        }
    }
}
