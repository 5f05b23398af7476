//! S-expression text form of formulas.
//!
//! ```text
//! (true) (false) (= x y) (theta (a1 a2) b) (rel R x y) (colour 2 x)
//! (not f) (and f ...) (or f ...) (implies f g) (iff f g)
//! (exists (x y) f) (forall (x) f) (def xi x y)
//! ```

use super::{Formula, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(s: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                    i += 1;
                }
                out.push((start, Tok::Atom(&s[start..i])));
            }
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let offset = self.toks.get(self.pos).map_or(self.end, |t| t.0);
        Err(Error::Parse { offset, msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn expect_open(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected '('"),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected ')'"),
        }
    }

    fn atom(&mut self) -> Result<&'a str> {
        match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = *a;
                self.pos += 1;
                Ok(a)
            }
            _ => self.err("expected a name"),
        }
    }

    fn atoms_until_close(&mut self) -> Result<Vec<Var>> {
        let mut out = Vec::new();
        while let Some(Tok::Atom(a)) = self.peek() {
            out.push(a.to_string());
            self.pos += 1;
        }
        self.expect_close()?;
        Ok(out)
    }

    fn var_list(&mut self) -> Result<Vec<Var>> {
        self.expect_open()?;
        self.atoms_until_close()
    }

    fn formulas_until_close(&mut self) -> Result<Vec<Formula>> {
        let mut out = Vec::new();
        while let Some(Tok::Open) = self.peek() {
            out.push(self.formula()?);
        }
        self.expect_close()?;
        Ok(out)
    }

    fn formula(&mut self) -> Result<Formula> {
        self.expect_open()?;
        let head = self.atom()?;
        let f = match head {
            "true" => {
                self.expect_close()?;
                Formula::True
            }
            "false" => {
                self.expect_close()?;
                Formula::False
            }
            "=" => {
                let x = self.atom()?.to_string();
                let y = self.atom()?.to_string();
                self.expect_close()?;
                Formula::Eq(x, y)
            }
            "theta" => {
                let args = self.var_list()?;
                let p = self.atom()?.to_string();
                self.expect_close()?;
                Formula::Theta(args, p)
            }
            "rel" => {
                let name = self.atom()?.to_string();
                Formula::Rel(name, self.atoms_until_close()?)
            }
            "def" => {
                let name = self.atom()?.to_string();
                Formula::Def(name, self.atoms_until_close()?)
            }
            "colour" => {
                let c = self.atom()?;
                let c = match c.parse() {
                    Ok(c) => c,
                    Err(_) => return self.err(format!("bad colour {c}")),
                };
                let x = self.atom()?.to_string();
                self.expect_close()?;
                Formula::Colour(c, x)
            }
            "not" => {
                let f = self.formula()?;
                self.expect_close()?;
                Formula::not(f)
            }
            "and" => Formula::And(self.formulas_until_close()?),
            "or" => Formula::Or(self.formulas_until_close()?),
            "implies" | "iff" => {
                let a = self.formula()?;
                let b = self.formula()?;
                self.expect_close()?;
                if head == "implies" {
                    Formula::implies(a, b)
                } else {
                    Formula::iff(a, b)
                }
            }
            "exists" | "forall" => {
                let vs = self.var_list()?;
                let f = Box::new(self.formula()?);
                self.expect_close()?;
                if head == "exists" {
                    Formula::Exists(vs, f)
                } else {
                    Formula::Forall(vs, f)
                }
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown form {other}"));
            }
        };
        Ok(f)
    }
}

pub fn parse(s: &str) -> Result<Formula> {
    let mut p = Parser { toks: lex(s), pos: 0, end: s.len() };
    let f = p.formula()?;
    if p.next().is_some() {
        p.pos -= 1;
        return p.err("trailing input");
    }
    Ok(f)
}

fn write_list(out: &mut String, vs: &[Var]) {
    out.push('(');
    out.push_str(&vs.join(" "));
    out.push(')');
}

fn write(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("(true)"),
        Formula::False => out.push_str("(false)"),
        Formula::Eq(x, y) => {
            out.push_str("(= ");
            out.push_str(x);
            out.push(' ');
            out.push_str(y);
            out.push(')');
        }
        Formula::Theta(args, p) => {
            out.push_str("(theta ");
            write_list(out, args);
            out.push(' ');
            out.push_str(p);
            out.push(')');
        }
        Formula::Rel(name, args) | Formula::Def(name, args) => {
            out.push_str(if matches!(f, Formula::Rel(..)) { "(rel " } else { "(def " });
            out.push_str(name);
            for a in args {
                out.push(' ');
                out.push_str(a);
            }
            out.push(')');
        }
        Formula::Colour(c, x) => {
            out.push_str(&format!("(colour {c} {x})"));
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write(g, out);
            out.push(')');
        }
        Formula::And(fs) | Formula::Or(fs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in fs {
                out.push(' ');
                write(g, out);
            }
            out.push(')');
        }
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            out.push_str(if matches!(f, Formula::Implies(..)) { "(implies " } else { "(iff " });
            write(a, out);
            out.push(' ');
            write(b, out);
            out.push(')');
        }
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            out.push_str(if matches!(f, Formula::Exists(..)) { "(exists " } else { "(forall " });
            write_list(out, vs);
            out.push(' ');
            write(g, out);
            out.push(')');
        }
    }
}

pub fn print(f: &Formula) -> String {
    let mut out = String::new();
    write(f, &mut out);
    out
}

const WIDTH: usize = 88;

pub fn pretty(f: &Formula, indent: usize, out: &mut String) {
    let flat = print(f);
    let pad = " ".repeat(indent);
    if flat.len() + indent <= WIDTH {
        out.push_str(&pad);
        out.push_str(&flat);
        out.push('\n');
        return;
    }
    let (head, kids): (String, Vec<&Formula>) = match f {
        Formula::Not(g) => ("(not".into(), vec![g]),
        Formula::And(fs) => ("(and".into(), fs.iter().collect()),
        Formula::Or(fs) => ("(or".into(), fs.iter().collect()),
        Formula::Implies(a, b) => ("(implies".into(), vec![a, b]),
        Formula::Iff(a, b) => ("(iff".into(), vec![a, b]),
        Formula::Exists(vs, g) => (format!("(exists ({})", vs.join(" ")), vec![g]),
        Formula::Forall(vs, g) => (format!("(forall ({})", vs.join(" ")), vec![g]),
        _ => {
            out.push_str(&pad);
            out.push_str(&flat);
            out.push('\n');
            return;
        }
    };
    out.push_str(&pad);
    out.push_str(&head);
    out.push('\n');
    for k in kids {
        pretty(k, indent + 2, out);
    }
    out.push_str(&pad);
    out.push_str(")\n");
}
