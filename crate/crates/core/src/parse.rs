//! S-expression syntax for formulas.
//!
//! ```text
//! formula ::= (atom NAME term*) | (not formula) | (and formula+) | (or formula+)
//!           | (And (IDXVAR+) formula) | (Or (IDXVAR+) formula)
//!           | (exists (VAR+) formula) | (forall (VAR+) formula)
//!           | (implies formula formula) | (iff formula formula)
//! ```
//!
//! Indexed atoms are written `NAME_IDX` or `NAME_IDX,IDX` where each `IDX`
//! is an index variable or a natural-number literal. `implies` and `iff`
//! are sugar, desugared to not/or/and during parsing.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Atom, Formula, IndexExpr, IndexFamily, RelName, Signature, Term};

/// A parse error with the byte offset where it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at byte {}: {}", self.position, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    LParen(usize),
    RParen(usize),
    Symbol(usize, String),
}

impl Token {
    pub(crate) fn pos(&self) -> usize {
        match self {
            Token::LParen(p) | Token::RParen(p) | Token::Symbol(p, _) => *p,
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            tokens.push(Token::LParen(i));
            i += 1;
        } else if c == ')' {
            tokens.push(Token::RParen(i));
            i += 1;
        } else if c == ';' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else {
            let start = i;
            while i < bytes.len() {
                let d = bytes[i] as char;
                if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                    break;
                }
                i += 1;
            }
            tokens.push(Token::Symbol(start, text[start..i].to_string()));
        }
    }
    Ok(tokens)
}

pub(crate) struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    sig: &'a Signature,
    end: usize,
    index_vars: Vec<String>,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &str, sig: &'a Signature) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        Ok(Parser { tokens, pos: 0, sig, end: text.len(), index_vars: Vec::new() })
    }

    pub(crate) fn err<T>(
        &self,
        position: usize,
        message: impl Into<String>,
    ) -> Result<T, ParseError> {
        Err(ParseError { position, message: message.into() })
    }

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    /// The head symbol of the next parenthesized form, without consuming.
    pub(crate) fn peek_head(&self) -> Option<&str> {
        match (self.tokens.get(self.pos), self.tokens.get(self.pos + 1)) {
            (Some(Token::LParen(_)), Some(Token::Symbol(_, s))) => Some(s.as_str()),
            _ => None,
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub(crate) fn position(&self) -> usize {
        self.peek().map(|t| t.pos()).unwrap_or(self.end)
    }

    pub(crate) fn next(&mut self) -> Result<Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err(self.end, "unexpected end of input"),
        }
    }

    pub(crate) fn expect_lparen(&mut self) -> Result<usize, ParseError> {
        match self.next()? {
            Token::LParen(p) => Ok(p),
            t => self.err(t.pos(), "expected `(`"),
        }
    }

    pub(crate) fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.next()? {
            Token::RParen(_) => Ok(()),
            t => self.err(t.pos(), "expected `)`"),
        }
    }

    pub(crate) fn expect_symbol(&mut self) -> Result<(usize, String), ParseError> {
        match self.next()? {
            Token::Symbol(p, s) => Ok((p, s)),
            t => self.err(t.pos(), "expected a symbol"),
        }
    }

    pub(crate) fn push_index_var(&mut self, var: &str) {
        self.index_vars.push(var.to_string());
    }

    pub(crate) fn pop_index_var(&mut self) {
        self.index_vars.pop();
    }

    pub(crate) fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        self.expect_lparen()?;
        let (hpos, head) = self.expect_symbol()?;
        let f = match head.as_str() {
            "atom" => self.parse_atom(hpos)?,
            "not" => {
                let inner = self.parse_formula()?;
                Formula::Not(Box::new(inner))
            }
            "and" | "or" => {
                let mut members = Vec::new();
                while !matches!(self.peek(), Some(Token::RParen(_)) | None) {
                    members.push(self.parse_formula()?);
                }
                if head == "and" {
                    Formula::And(members)
                } else {
                    Formula::Or(members)
                }
            }
            "And" | "Or" => {
                let fam = self.parse_index_binder(hpos)?;
                let template = self.parse_formula()?;
                for v in fam.iter().rev() {
                    let found = self.index_vars.pop();
                    debug_assert_eq!(found.as_deref(), Some(v.as_str()));
                }
                let family = match fam.len() {
                    1 => IndexFamily::NatIndexed { var: fam[0].clone(), template: Box::new(template) },
                    2 => IndexFamily::NatPairIndexed {
                        var1: fam[0].clone(),
                        var2: fam[1].clone(),
                        template: Box::new(template),
                    },
                    n => {
                        return self.err(
                            hpos,
                            format!("index binder takes 1 or 2 variables, got {n}"),
                        )
                    }
                };
                if head == "And" {
                    Formula::InfAnd(family)
                } else {
                    Formula::InfOr(family)
                }
            }
            "exists" | "forall" => {
                let vars = self.parse_var_block()?;
                let body = self.parse_formula()?;
                if head == "exists" {
                    Formula::Exists(vars, Box::new(body))
                } else {
                    Formula::Forall(vars, Box::new(body))
                }
            }
            "implies" => {
                let a = self.parse_formula()?;
                let b = self.parse_formula()?;
                Formula::Or(vec![Formula::Not(Box::new(a)), b])
            }
            "iff" => {
                let a = self.parse_formula()?;
                let b = self.parse_formula()?;
                Formula::And(vec![
                    Formula::Or(vec![Formula::Not(Box::new(a.clone())), b.clone()]),
                    Formula::Or(vec![Formula::Not(Box::new(b)), a]),
                ])
            }
            other => return self.err(hpos, format!("unknown form `{other}`")),
        };
        self.expect_rparen()?;
        Ok(f)
    }

    fn parse_index_binder(&mut self, hpos: usize) -> Result<Vec<String>, ParseError> {
        self.expect_lparen()?;
        let mut vars = Vec::new();
        loop {
            match self.next()? {
                Token::RParen(_) => break,
                Token::Symbol(p, s) => {
                    if self.index_vars.iter().any(|v| *v == s) || vars.contains(&s) {
                        return self.err(p, format!("index variable `{s}` already bound"));
                    }
                    vars.push(s);
                }
                t => return self.err(t.pos(), "expected an index variable"),
            }
        }
        if vars.is_empty() {
            return self.err(hpos, "index binder must bind at least one variable");
        }
        for v in &vars {
            self.index_vars.push(v.clone());
        }
        Ok(vars)
    }

    fn parse_var_block(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect_lparen()?;
        let mut vars = Vec::new();
        loop {
            match self.next()? {
                Token::RParen(_) => break,
                Token::Symbol(p, s) => {
                    if vars.contains(&s) {
                        return self.err(p, format!("variable `{s}` repeated in block"));
                    }
                    vars.push(s);
                }
                t => return self.err(t.pos(), "expected a variable"),
            }
        }
        if vars.is_empty() {
            let p = self.peek().map(|t| t.pos()).unwrap_or(self.end);
            return self.err(p, "quantifier block must bind at least one variable");
        }
        Ok(vars)
    }

    fn parse_atom(&mut self, hpos: usize) -> Result<Formula, ParseError> {
        let (npos, name) = match self.next()? {
            Token::Symbol(p, s) => (p, s),
            t => return self.err(t.pos(), "expected a relation name")?,
        };
        let rel = self.resolve_relation(npos, &name)?;
        let mut args = Vec::new();
        loop {
            match self.peek() {
                Some(Token::RParen(_)) => break,
                Some(Token::Symbol(..)) => {
                    let (_, s) = self.expect_symbol()?;
                    if self.sig.has_constant(&s) {
                        args.push(Term::Const(s));
                    } else {
                        args.push(Term::Var(s));
                    }
                }
                Some(t) => return self.err(t.pos(), "expected a term"),
                None => return self.err(self.end, "unexpected end of input"),
            }
        }
        let _ = hpos;
        Ok(Formula::Atomic(Atom { rel, args }))
    }

    fn resolve_relation(&self, pos: usize, name: &str) -> Result<RelName, ParseError> {
        if let Some((base, index_part)) = name.split_once('_') {
            if self.sig.indexed_family(base).is_some() {
                let mut indices = Vec::new();
                for piece in index_part.split(',') {
                    if piece.is_empty() {
                        return self.err(pos, format!("malformed index in `{name}`"));
                    }
                    if piece.bytes().all(|b| b.is_ascii_digit()) {
                        let value: u64 = piece.parse().map_err(|_| ParseError {
                            position: pos,
                            message: format!("index literal out of range in `{name}`"),
                        })?;
                        indices.push(IndexExpr::Lit(value));
                    } else {
                        if !self.index_vars.iter().any(|v| v == piece) {
                            return self.err(pos, format!("unbound index variable `{piece}`"));
                        }
                        indices.push(IndexExpr::Var(piece.to_string()));
                    }
                }
                let (index_arity, _) = self.sig.indexed_family(base).unwrap();
                if indices.len() != index_arity {
                    return self.err(
                        pos,
                        format!(
                            "family `{base}` expects {index_arity} index(es), got {}",
                            indices.len()
                        ),
                    );
                }
                return Ok(RelName::Indexed { base: base.to_string(), indices });
            }
        }
        if self.sig.relation_arity(name).is_some() {
            Ok(RelName::Plain(name.to_string()))
        } else {
            self.err(pos, format!("unknown relation `{name}`"))
        }
    }
}

/// Parses a formula from its textual form against a signature. The result
/// round-trips with [`render_formula`] up to whitespace.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let mut parser = Parser::new(text, sig)?;
    let f = parser.parse_formula()?;
    if let Some(t) = parser.peek() {
        return Err(ParseError {
            position: t.pos(),
            message: "trailing input after formula".to_string(),
        });
    }
    // Arity checking against the signature is wellformed's job; the parser
    // only resolves names and index binders.
    Ok(f)
}

/// Renders a formula back to its textual form.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

pub(crate) fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Atomic(a) => {
            out.push_str("(atom ");
            write_rel(&a.rel, out);
            for t in &a.args {
                out.push(' ');
                out.push_str(t.name());
            }
            out.push(')');
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(g, out);
            out.push(')');
        }
        Formula::And(fs) | Formula::Or(fs) => {
            out.push('(');
            out.push_str(if matches!(f, Formula::And(_)) { "and" } else { "or" });
            for g in fs {
                out.push(' ');
                write_formula(g, out);
            }
            out.push(')');
        }
        Formula::InfAnd(fam) | Formula::InfOr(fam) => {
            let conjunctive = matches!(f, Formula::InfAnd(_));
            match fam {
                // Finite lists have no binder syntax; render as the finite
                // connective, which is semantically identical.
                IndexFamily::FiniteList(fs) => {
                    out.push('(');
                    out.push_str(if conjunctive { "and" } else { "or" });
                    for g in fs {
                        out.push(' ');
                        write_formula(g, out);
                    }
                    out.push(')');
                }
                IndexFamily::NatIndexed { var, template } => {
                    out.push('(');
                    out.push_str(if conjunctive { "And" } else { "Or" });
                    out.push_str(" (");
                    out.push_str(var);
                    out.push_str(") ");
                    write_formula(template, out);
                    out.push(')');
                }
                IndexFamily::NatPairIndexed { var1, var2, template } => {
                    out.push('(');
                    out.push_str(if conjunctive { "And" } else { "Or" });
                    out.push_str(" (");
                    out.push_str(var1);
                    out.push(' ');
                    out.push_str(var2);
                    out.push_str(") ");
                    write_formula(template, out);
                    out.push(')');
                }
            }
        }
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            out.push('(');
            out.push_str(if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" });
            out.push_str(" (");
            out.push_str(&vs.join(" "));
            out.push_str(") ");
            write_formula(g, out);
            out.push(')');
        }
    }
}

fn write_rel(rel: &RelName, out: &mut String) {
    match rel {
        RelName::Plain(n) => out.push_str(n),
        RelName::Indexed { base, indices } => {
            out.push_str(base);
            out.push('_');
            let mut first = true;
            for ix in indices {
                if !first {
                    out.push(',');
                }
                first = false;
                match ix {
                    IndexExpr::Var(v) => out.push_str(v),
                    IndexExpr::Lit(n) => out.push_str(&n.to_string()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{blocks_signature, psi_blocks, PSI_BLOCKS_SRC};
    use crate::formula::{Atom, IndexExpr, RelName, Term};
    use crate::testutil::test_sig;
    use alloc::boxed::Box;

    #[test]
    fn parses_single_atom() {
        let f = parse_formula("(atom Q x)", &test_sig()).unwrap();
        assert_eq!(f, Formula::plain_atom("Q", &["x"]));
    }

    #[test]
    fn parses_block_sentence() {
        let expected = Formula::forall(
            &["x"],
            Formula::Or(vec![
                Formula::not(Formula::plain_atom("Q", &["x"])),
                Formula::exists(
                    &["y"],
                    Formula::And(vec![
                        Formula::plain_atom("R", &["x", "y"]),
                        Formula::inf_and_nat(
                            "n",
                            Formula::not(Formula::Atomic(Atom {
                                rel: RelName::Indexed {
                                    base: "P".into(),
                                    indices: vec![IndexExpr::Var("n".into())],
                                },
                                args: vec![Term::Var("y".into())],
                            })),
                        ),
                    ]),
                ),
            ]),
        );
        assert_eq!(parse_formula(PSI_BLOCKS_SRC, &blocks_signature()).unwrap(), expected);
    }

    #[test]
    fn reports_unbalanced_form_at_end_of_input() {
        let err = parse_formula("(atom R x", &test_sig()).unwrap_err();
        assert_eq!(err.position, "(atom R x".len());
    }

    #[test]
    fn implies_desugars() {
        let f = parse_formula("(implies (atom Q x) (atom Q y))", &test_sig()).unwrap();
        assert_eq!(
            f,
            Formula::Or(vec![
                Formula::not(Formula::plain_atom("Q", &["x"])),
                Formula::plain_atom("Q", &["y"]),
            ])
        );
    }

    #[test]
    fn rejects_unbound_index_variable() {
        let err = parse_formula("(atom P_n y)", &test_sig()).unwrap_err();
        assert!(err.message.contains("unbound index variable"));
    }

    #[test]
    fn rejects_shadowed_index_variable() {
        let err = parse_formula("(And (n) (Or (n) (atom P_n y)))", &test_sig()).unwrap_err();
        assert!(err.message.contains("already bound"));
    }

    #[test]
    fn rejects_unknown_relation() {
        let err = parse_formula("(atom Z x)", &test_sig()).unwrap_err();
        assert!(err.message.contains("unknown relation"));
    }

    #[test]
    fn round_trips_block_sentence() {
        let f = psi_blocks();
        assert_eq!(parse_formula(&render_formula(&f), &blocks_signature()).unwrap(), f);
    }

    #[test]
    fn parses_pair_indexed_atoms() {
        let f = parse_formula("(And (i j) (atom W_i,j x))", &test_sig()).unwrap();
        assert_eq!(
            f,
            Formula::InfAnd(crate::formula::IndexFamily::NatPairIndexed {
                var1: "i".into(),
                var2: "j".into(),
                template: Box::new(Formula::Atomic(Atom {
                    rel: RelName::Indexed {
                        base: "W".into(),
                        indices: vec![
                            IndexExpr::Var("i".into()),
                            IndexExpr::Var("j".into()),
                        ],
                    },
                    args: vec![Term::Var("x".into())],
                })),
            })
        );
        assert_eq!(parse_formula(&render_formula(&f), &test_sig()).unwrap(), f);
    }

    #[test]
    fn index_literals_parse() {
        let f = parse_formula("(atom P_3 y)", &test_sig()).unwrap();
        assert_eq!(
            f,
            Formula::Atomic(Atom {
                rel: RelName::Indexed { base: "P".into(), indices: vec![IndexExpr::Lit(3)] },
                args: vec![Term::Var("y".into())],
            })
        );
    }
}
