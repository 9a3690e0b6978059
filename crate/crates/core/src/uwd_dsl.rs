//! Relational text syntax for wiring diagrams.
//!
//! ```text
//! # three boxes, ten ports, five junctions
//! uwd epi(S, I, Iv, R, V) {
//!   sir(S, I, R)
//!   viv(V, Iv, R)
//!   cross(S, I, Iv, V)
//! }
//! ```
//!
//! Head variables are the outer ports. Every distinct variable is a
//! junction, and each body item `box(v, ...)` is a box whose ports are wired
//! to the named junctions. Items are separated by `;` or newlines, `#` starts
//! a line comment, and whitespace is otherwise insignificant.
//!
//! Junctions are numbered by first occurrence (head first, then body). A
//! body item `junction A, B, ...` declares junctions up front: declared
//! junctions come first, in declaration order, followed by the rest in
//! first-occurrence order. The printer emits such a line only when the
//! natural order would not reproduce the diagram, for instance when a
//! junction is wired to nothing.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::compose::{Junction, Uwd, UwdBox};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrintError {
    #[error("name '{0}' is not an identifier and cannot be printed")]
    NotAnIdentifier(String),
    #[error("junction index {0} out of range")]
    JunctionOutOfRange(usize),
}

/// A parsed source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UwdDocument {
    pub name: String,
    pub uwd: Uwd,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Newline,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semi => f.write_str("';'"),
            Tok::Newline => f.write_str("end of line"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '\n' => Some(Tok::Newline),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            if tok == Tok::Newline {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            out.push(Spanned {
                tok,
                line: l0,
                col: c0,
            });
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
        } else if c.is_whitespace() {
            chars.next();
            col += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut id = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    id.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            out.push(Spanned {
                tok: Tok::Ident(id),
                line: l0,
                col: c0,
            });
        } else {
            return Err(ParseError {
                line,
                col,
                message: format!("unexpected character '{}'", c.escape_debug()),
            });
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

struct RawBox {
    name: String,
    ports: Vec<String>,
    line: usize,
    col: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn peek_tok(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while *self.peek_tok() == Tok::Newline {
            self.bump();
        }
    }

    fn error(&self, what: &str) -> ParseError {
        let t = self.peek();
        ParseError {
            line: t.line,
            col: t.col,
            message: format!("expected {what}, found {}", t.tok),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, ParseError> {
        self.skip_newlines();
        if *self.peek_tok() == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        self.skip_newlines();
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            _ => Err(self.error("identifier")),
        }
    }

    /// `( v, ... )` with the opening paren already consumed.
    fn var_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut vars = Vec::new();
        self.skip_newlines();
        if *self.peek_tok() == Tok::RParen {
            self.bump();
            return Ok(vars);
        }
        loop {
            vars.push(self.ident()?.0);
            self.skip_newlines();
            match self.peek_tok() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(vars);
                }
                _ => return Err(self.error("',' or ')'")),
            }
        }
    }
}

pub fn parse_uwd(src: &str) -> Result<UwdDocument, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let (kw, line, col) = p.ident()?;
    if kw != "uwd" {
        return Err(ParseError {
            line,
            col,
            message: format!("expected 'uwd', found identifier '{kw}'"),
        });
    }
    let (name, _, _) = p.ident()?;
    p.expect(Tok::LParen)?;
    let head = p.var_list()?;
    p.expect(Tok::LBrace)?;

    let mut boxes: Vec<RawBox> = Vec::new();
    let mut declared: Vec<String> = Vec::new();
    loop {
        while matches!(p.peek_tok(), Tok::Newline | Tok::Semi) {
            p.bump();
        }
        if *p.peek_tok() == Tok::RBrace {
            p.bump();
            break;
        }
        let (item, line, col) = p.ident()?;
        let is_decl = item == "junction" && matches!(p.peek_tok(), Tok::Ident(_));
        if is_decl {
            loop {
                let (j, l, c) = p.ident()?;
                if declared.contains(&j) {
                    return Err(ParseError {
                        line: l,
                        col: c,
                        message: format!("junction '{j}' declared twice"),
                    });
                }
                declared.push(j);
                if *p.peek_tok() == Tok::Comma {
                    p.bump();
                } else {
                    break;
                }
            }
        } else {
            if *p.peek_tok() != Tok::LParen {
                return Err(p.error("'('"));
            }
            p.bump();
            let ports = p.var_list()?;
            boxes.push(RawBox {
                name: item,
                ports,
                line,
                col,
            });
        }
        match p.peek_tok() {
            Tok::Newline | Tok::Semi | Tok::RBrace => {}
            _ => return Err(p.error("';', end of line, or '}'")),
        }
    }
    p.skip_newlines();
    if *p.peek_tok() != Tok::Eof {
        return Err(p.error("end of input"));
    }

    let mut seen = HashSet::new();
    for b in &boxes {
        if !seen.insert(b.name.as_str()) {
            return Err(ParseError {
                line: b.line,
                col: b.col,
                message: format!("duplicate box name '{}'", b.name),
            });
        }
    }

    let mut junctions: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let all = declared
        .iter()
        .chain(&head)
        .chain(boxes.iter().flat_map(|b| b.ports.iter()));
    for v in all {
        if !index.contains_key(v) {
            index.insert(v.clone(), junctions.len());
            junctions.push(v.clone());
        }
    }

    let wired: HashSet<&str> = boxes
        .iter()
        .flat_map(|b| b.ports.iter().map(String::as_str))
        .collect();
    let mut warnings = Vec::new();
    let mut warned = HashSet::new();
    for v in head.iter().chain(&declared) {
        if !wired.contains(v.as_str()) && warned.insert(v.as_str()) {
            warnings.push(format!("junction '{v}' is not wired to any box"));
        }
    }

    let uwd = Uwd {
        outer_ports: head.iter().map(|v| index[v]).collect(),
        junctions: junctions
            .into_iter()
            .map(|name| Junction { name })
            .collect(),
        boxes: boxes
            .into_iter()
            .map(|b| UwdBox {
                ports: b.ports.iter().map(|v| index[v]).collect(),
                name: b.name,
            })
            .collect(),
    };
    Ok(UwdDocument {
        name,
        uwd,
        warnings,
    })
}

pub fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Canonical text under the name `anon`.
pub fn print_uwd(u: &Uwd) -> Result<String, PrintError> {
    print_named_uwd("anon", u)
}

pub fn print_named_uwd(name: &str, u: &Uwd) -> Result<String, PrintError> {
    let names = std::iter::once(name)
        .chain(u.junctions.iter().map(|j| j.name.as_str()))
        .chain(u.boxes.iter().map(|b| b.name.as_str()));
    for n in names {
        if !is_identifier(n) {
            return Err(PrintError::NotAnIdentifier(n.to_string()));
        }
    }
    let jname = |j: usize| {
        u.junctions
            .get(j)
            .map(|x| x.name.as_str())
            .ok_or(PrintError::JunctionOutOfRange(j))
    };
    let list = |ids: &[usize]| -> Result<String, PrintError> {
        Ok(ids
            .iter()
            .map(|&j| jname(j))
            .collect::<Result<Vec<_>, _>>()?
            .join(", "))
    };

    let mut natural = Vec::new();
    let mut seen = vec![false; u.junctions.len()];
    for &j in u
        .outer_ports
        .iter()
        .chain(u.boxes.iter().flat_map(|b| b.ports.iter()))
    {
        jname(j)?;
        if !seen[j] {
            seen[j] = true;
            natural.push(j);
        }
    }
    let needs_decl = natural != (0..u.junctions.len()).collect::<Vec<_>>();

    let mut out = format!("uwd {name}({}) {{", list(&u.outer_ports)?);
    if u.boxes.is_empty() && !needs_decl {
        out.push('}');
        return Ok(out);
    }
    out.push('\n');
    if needs_decl {
        let all: Vec<usize> = (0..u.junctions.len()).collect();
        out.push_str(&format!("  junction {};\n", list(&all)?));
    }
    for b in &u.boxes {
        out.push_str(&format!("  {}({});\n", b.name, list(&b.ports)?));
    }
    out.push('}');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::EPI_UWD;

    #[test]
    fn parses_vaccination_diagram() {
        let d = parse_uwd(EPI_UWD).unwrap();
        assert_eq!(d.name, "epi");
        assert_eq!(d.uwd.boxes.len(), 3);
        assert_eq!(d.uwd.port_count(), 10);
        assert_eq!(d.uwd.junctions.len(), 5);
        assert_eq!(d.uwd.outer_ports, [0, 1, 2, 3, 4]);
        assert_eq!(d.uwd.boxes[1].ports, [4, 2, 3]);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn parses_empty() {
        let d = parse_uwd("uwd empty(){}").unwrap();
        assert_eq!(d.uwd, Uwd::default());
    }

    #[test]
    fn parses_malaria() {
        let d = parse_uwd("uwd malaria(IH,IV){ host(IH); vector(IV); bloodmeal(IH,IV) }").unwrap();
        assert_eq!(d.uwd.boxes.len(), 3);
        assert_eq!(d.uwd.port_count(), 4);
        let names: Vec<_> = d.uwd.junctions.iter().map(|j| j.name.as_str()).collect();
        assert_eq!(names, ["IH", "IV"]);
    }

    #[test]
    fn newlines_and_comments() {
        let src = "# header\nuwd f(A,\n  B) {\n  x(A) # first\n\n  y(A, B)\n}\n";
        let d = parse_uwd(src).unwrap();
        assert_eq!(d.uwd.boxes.len(), 2);
    }

    #[test]
    fn located_errors() {
        let e = parse_uwd("uwd f(A) {\n  x(A) y(A)\n}").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        let e = parse_uwd("uwd f(A) { x(A); x(A) }").unwrap_err();
        assert!(e.message.contains("duplicate box"));
        assert_eq!(e.col, 18);
        let e = parse_uwd("uwd f(A) { x(A$) }").unwrap_err();
        assert!(e.message.contains("unexpected character"));
        let e = parse_uwd("wud f() {}").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        assert!(parse_uwd("uwd f() {} trailing").is_err());
    }

    #[test]
    fn unused_head_variable_warns() {
        let d = parse_uwd("uwd f(A, B) { x(A) }").unwrap();
        assert_eq!(d.warnings.len(), 1);
        assert!(d.warnings[0].contains("'B'"));
    }

    #[test]
    fn prints_vaccination_diagram() {
        let d = parse_uwd(EPI_UWD).unwrap();
        let s = print_named_uwd("epi", &d.uwd).unwrap();
        assert_eq!(
            s,
            "uwd epi(S, I, Iv, R, V) {\n  sir(S, I, R);\n  viv(V, Iv, R);\n  cross(S, I, Iv, V);\n}"
        );
        assert_eq!(parse_uwd(&s).unwrap().uwd, d.uwd);
    }

    #[test]
    fn prints_empty() {
        assert_eq!(print_uwd(&Uwd::default()).unwrap(), "uwd anon() {}");
    }

    #[test]
    fn unwired_junction_gets_declaration() {
        let u = Uwd {
            outer_ports: vec![],
            junctions: vec![Junction { name: "J".into() }],
            boxes: vec![],
        };
        let s = print_uwd(&u).unwrap();
        assert_eq!(s, "uwd anon() {\n  junction J;\n}");
        let back = parse_uwd(&s).unwrap();
        assert_eq!(back.uwd, u);
        assert_eq!(back.warnings.len(), 1);
    }

    #[test]
    fn out_of_order_junctions_roundtrip() {
        let u = Uwd {
            outer_ports: vec![1],
            junctions: vec![Junction { name: "A".into() }, Junction { name: "B".into() }],
            boxes: vec![UwdBox {
                name: "junction".into(),
                ports: vec![0, 1],
            }],
        };
        let s = print_uwd(&u).unwrap();
        assert!(s.contains("junction A, B;"));
        assert_eq!(parse_uwd(&s).unwrap().uwd, u);
    }

    #[test]
    fn non_identifier_names_are_rejected() {
        let u = Uwd {
            outer_ports: vec![],
            junctions: vec![Junction { name: "a b".into() }],
            boxes: vec![],
        };
        assert_eq!(
            print_uwd(&u),
            Err(PrintError::NotAnIdentifier("a b".into()))
        );
    }
}
