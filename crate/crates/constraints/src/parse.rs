//! Recursive-descent parser for constraint files and for expressions
//! embedded in other grammars (the migration DSL reuses it for conditions).
//!
//! Precedence, loosest to tightest: implies (right-assoc), or, and, not.
//! A quantifier body extends as far to the right as possible.

use evolvekit_core::{Literal, Metamodel};

use crate::ast::{CmpOp, Coll, ConstraintDef, Expr, Term};
use crate::error::ConstraintError;
use crate::lex::{Lexer, TokKind, Token};
use crate::typecheck::{check_expr, TypeEnv};

pub(crate) struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    pub fn new(toks: &'t [Token], pos: usize) -> Self {
        Parser { toks, pos }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.toks[self.pos.min(self.toks.len() - 1)];
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn err<T>(&self, msg: impl Into<String>) -> Result<T, ConstraintError> {
        let t = self.peek();
        Err(ConstraintError::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    pub fn expect(&mut self, kind: TokKind, what: &str) -> Result<Token, ConstraintError> {
        if self.peek().kind == kind {
            Ok(self.bump().clone())
        } else {
            let t = self.peek().clone();
            Err(ConstraintError::Parse {
                line: t.line,
                col: t.col,
                msg: format!("expected {what}, found `{}`", display(&t)),
            })
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), ConstraintError> {
        if self.peek().is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found `{}`", display(self.peek())))
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek().is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<String, ConstraintError> {
        Ok(self.expect(TokKind::Ident, what)?.text)
    }

    pub fn parse_expr(&mut self) -> Result<Expr, ConstraintError> {
        self.parse_implies()
    }

    fn parse_implies(&mut self) -> Result<Expr, ConstraintError> {
        let lhs = self.parse_or()?;
        if self.eat_kw("implies") {
            let rhs = self.parse_implies()?;
            return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Expr, ConstraintError> {
        let mut lhs = self.parse_and()?;
        while self.eat_kw("or") {
            let rhs = self.parse_and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Expr, ConstraintError> {
        let mut lhs = self.parse_unary()?;
        while self.eat_kw("and") {
            let rhs = self.parse_unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ConstraintError> {
        if self.eat_kw("not") {
            let inner = self.parse_unary()?;
            return Ok(Expr::Not(Box::new(inner)));
        }
        for (kw, forall) in [("forall", true), ("exists", false)] {
            if self.peek().is_kw(kw) {
                self.bump();
                let var = self.ident("a variable name")?;
                self.expect_kw("in")?;
                let coll = self.parse_coll()?;
                self.expect(TokKind::Dot, "`.` before the quantifier body")?;
                let body = Box::new(self.parse_expr()?);
                return Ok(if forall {
                    Expr::Forall { var, coll, body }
                } else {
                    Expr::Exists { var, coll, body }
                });
            }
        }
        if self.peek().kind == TokKind::LParen {
            self.bump();
            let inner = self.parse_expr()?;
            self.expect(TokKind::RParen, "`)`")?;
            return Ok(inner);
        }
        self.parse_atom()
    }

    fn parse_atom(&mut self) -> Result<Expr, ConstraintError> {
        if self.peek().is_kw("size") {
            self.bump();
            self.expect(TokKind::LParen, "`(` after size")?;
            let coll = self.parse_coll()?;
            self.expect(TokKind::RParen, "`)` after size collection")?;
            let op = self.parse_cmp()?;
            let int = self.expect(TokKind::Int, "an integer")?;
            let value = int.text.parse::<i64>().map_err(|_| ConstraintError::Parse {
                line: int.line,
                col: int.col,
                msg: format!("integer `{}` out of range", int.text),
            })?;
            return Ok(Expr::SizeCompare { coll, op, value });
        }
        if self.peek().is_kw("true") || self.peek().is_kw("false") {
            // A bare boolean only counts as an atom when no comparison follows.
            if !is_cmp(self.toks[self.pos + 1].kind) {
                let b = self.bump().text == "true";
                return Ok(Expr::BoolLit(b));
            }
        }
        let left = self.parse_term()?;
        let op = self.parse_cmp()?;
        let right = self.parse_term()?;
        Ok(Expr::Compare { left, op, right })
    }

    fn parse_cmp(&mut self) -> Result<CmpOp, ConstraintError> {
        let op = match self.peek().kind {
            TokKind::Eq => CmpOp::Eq,
            TokKind::Ne => CmpOp::Ne,
            TokKind::Lt => CmpOp::Lt,
            TokKind::Le => CmpOp::Le,
            TokKind::Gt => CmpOp::Gt,
            TokKind::Ge => CmpOp::Ge,
            _ => return self.err(format!("expected a comparison, found `{}`", display(self.peek()))),
        };
        self.bump();
        Ok(op)
    }

    pub fn parse_term(&mut self) -> Result<Term, ConstraintError> {
        match self.peek().kind {
            TokKind::Str => Ok(Term::Lit(Literal::Str(self.bump().text.clone()))),
            TokKind::Int => {
                let t = self.bump().clone();
                let v = t.text.parse::<i64>().map_err(|_| ConstraintError::Parse {
                    line: t.line,
                    col: t.col,
                    msg: format!("integer `{}` out of range", t.text),
                })?;
                Ok(Term::Lit(Literal::Int(v)))
            }
            TokKind::Float => {
                let t = self.bump().clone();
                let v = t.text.parse::<f64>().map_err(|_| ConstraintError::Parse {
                    line: t.line,
                    col: t.col,
                    msg: format!("float `{}` out of range", t.text),
                })?;
                Ok(Term::Lit(Literal::Float(v)))
            }
            TokKind::Ident if self.peek().is_kw("true") => {
                self.bump();
                Ok(Term::Lit(Literal::Bool(true)))
            }
            TokKind::Ident if self.peek().is_kw("false") => {
                self.bump();
                Ok(Term::Lit(Literal::Bool(false)))
            }
            TokKind::Ident => {
                let var = self.bump().text.clone();
                if self.peek().kind == TokKind::Dot {
                    self.bump();
                    let attr = self.ident("an attribute name")?;
                    Ok(Term::Attr { var, attr })
                } else {
                    Ok(Term::Var(var))
                }
            }
            _ => self.err(format!("expected a term, found `{}`", display(self.peek()))),
        }
    }

    fn parse_coll(&mut self) -> Result<Coll, ConstraintError> {
        if self.peek().is_kw("all") {
            self.bump();
            self.expect(TokKind::LParen, "`(` after all")?;
            let class = self.ident("a class name")?;
            self.expect(TokKind::RParen, "`)` after class name")?;
            return Ok(Coll::All(class));
        }
        let var = self.ident("a variable name")?;
        self.expect(TokKind::Dot, "`.` after variable")?;
        let second = self.ident("a role name or `linked`")?;
        if second == "linked" && self.peek().kind == TokKind::LParen {
            self.bump();
            let assoc = self.ident("an association name")?;
            self.expect(TokKind::Comma, "`,`")?;
            let role = self.ident("an end role name")?;
            self.expect(TokKind::RParen, "`)`")?;
            Ok(Coll::Linked { var, assoc, role })
        } else {
            Ok(Coll::Children { var, role: second })
        }
    }
}

fn is_cmp(kind: TokKind) -> bool {
    matches!(
        kind,
        TokKind::Eq | TokKind::Ne | TokKind::Lt | TokKind::Le | TokKind::Gt | TokKind::Ge
    )
}

fn display(t: &Token) -> String {
    if t.kind == TokKind::Eof {
        "<end of file>".to_string()
    } else {
        t.text.clone()
    }
}

/// Parses a constraint file and type-checks every constraint against the
/// metamodel named in the file header, which must be the supplied one.
pub fn parse_constraints(
    text: &str,
    mm: &Metamodel,
) -> Result<Vec<ConstraintDef>, ConstraintError> {
    let toks = Lexer::tokenize(text)?;
    let mut p = Parser::new(&toks, 0);
    p.expect_kw("metamodel")?;
    let mm_name = p.ident("a metamodel name")?;
    if mm_name != mm.name {
        return Err(ConstraintError::Type {
            line: 1,
            col: 1,
            msg: format!("constraint file targets metamodel `{mm_name}`, got `{}`", mm.name),
        });
    }

    let mut out: Vec<ConstraintDef> = Vec::new();
    while p.peek().kind != TokKind::Eof {
        let kw = p.peek().clone();
        p.expect_kw("constraint")?;
        let name = p.ident("a constraint name")?;
        if out.iter().any(|c| c.name == name) {
            return Err(ConstraintError::Type {
                line: kw.line,
                col: kw.col,
                msg: format!("constraint `{name}` defined twice"),
            });
        }
        let description = p.expect(TokKind::Str, "a description string")?.text;
        p.expect_kw("phase")?;
        let phase = p.ident("a phase name")?;
        p.expect(TokKind::Colon, "`:`")?;
        let body = p.parse_expr()?;
        let env = TypeEnv::new(mm);
        check_expr(&body, &env).map_err(|e| match e {
            ConstraintError::Type { line, col, msg } => ConstraintError::Type {
                line,
                col,
                msg: format!("in constraint `{name}`: {msg}"),
            },
            other => other,
        })?;
        out.push(ConstraintDef { name, description, phase, body });
    }
    Ok(out)
}

/// Parses one expression starting at `start` inside a foreign token stream,
/// returning the expression and the index of the first unconsumed token.
/// Used by grammars that embed constraint expressions.
pub fn parse_expr_embedded(
    toks: &[Token],
    start: usize,
) -> Result<(Expr, usize), ConstraintError> {
    let mut p = Parser::new(toks, start);
    let e = p.parse_expr()?;
    Ok((e, p.pos()))
}
