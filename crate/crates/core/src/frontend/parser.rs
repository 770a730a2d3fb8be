// SPDX-License-Identifier: Apache-2.0

use super::lexer::{lex, Tok, Token};
use super::*;
use crate::expr::{BinaryOp, UnaryOp};

const KEYWORDS: &[&str] = &[
    "module", "input", "output", "reg", "wire", "inst", "comb", "seq", "if", "else", "for", "in",
];

/// Parse and validate a mini-HDL source file.
///
/// `file` is recorded verbatim (with forward slashes) in every
/// [`SourceLoc`].
pub fn parse(source_text: &str, file: &str) -> Result<SourceProgram, FrontendError> {
    let file = normalize_path(file);
    let toks = lex(source_text, &file)?;
    let mut p = Parser {
        toks,
        pos: 0,
        file: &file,
    };
    let mut modules = Vec::new();
    while p.peek() != &Tok::Eof {
        modules.push(p.module()?);
    }
    let top = pick_top(&modules).ok_or_else(|| FrontendError::Invalid {
        loc: SourceLoc::new(file.as_str(), 1, 1),
        message: "no top-level module".into(),
    })?;
    let program = SourceProgram { modules, top };
    super::validate::validate(&program)?;
    Ok(program)
}

/// The last module that no other module instantiates.
fn pick_top(modules: &[ModuleDef]) -> Option<String> {
    modules
        .iter()
        .rev()
        .find(|m| {
            !modules
                .iter()
                .any(|o| o.instances.iter().any(|i| i.module == m.name))
        })
        .or(modules.last())
        .map(|m| m.name.clone())
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn loc(&self) -> SourceLoc {
        let t = &self.toks[self.pos];
        SourceLoc::new(self.file, t.line, t.column)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, FrontendError> {
        Err(FrontendError::Syntax {
            loc: self.loc(),
            message: message.into(),
        })
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.is_kw(kw) {
            self.advance();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn number(&mut self) -> Result<u64, FrontendError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(v)
            }
            other => self.err(format!("expected number, found {}", describe(&other))),
        }
    }

    /// `a` or `a.b.c`
    fn dotted_name(&mut self) -> Result<String, FrontendError> {
        let mut name = self.ident()?;
        while self.is_sym(".") {
            self.advance();
            name.push('.');
            name.push_str(&self.ident()?);
        }
        Ok(name)
    }

    fn small_number(&mut self, what: &str) -> Result<u32, FrontendError> {
        let loc = self.loc();
        let v = self.number()?;
        u32::try_from(v).map_err(|_| FrontendError::Syntax {
            loc,
            message: format!("{what} out of range"),
        })
    }

    fn shape(&mut self) -> Result<(u32, Option<u32>), FrontendError> {
        self.expect_sym(":")?;
        let width = self.small_number("width")?;
        let len = if self.eat_sym("[") {
            let n = self.small_number("array length")?;
            self.expect_sym("]")?;
            Some(n)
        } else {
            None
        };
        Ok((width, len))
    }

    fn module(&mut self) -> Result<ModuleDef, FrontendError> {
        let loc = self.loc();
        self.expect_kw("module")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut m = ModuleDef {
            name,
            ports: vec![],
            registers: vec![],
            wires: vec![],
            instances: vec![],
            comb_blocks: vec![],
            seq_blocks: vec![],
            loc,
        };
        while !self.eat_sym("}") {
            let loc = self.loc();
            let kw = match self.peek() {
                Tok::Ident(k) => k.clone(),
                Tok::Eof => return self.err("unexpected end of file inside module"),
                other => return self.err(format!("expected declaration, found {}", describe(other))),
            };
            match kw.as_str() {
                "input" | "output" => {
                    self.advance();
                    let name = self.dotted_name()?;
                    let (width, len) = self.shape()?;
                    self.expect_sym(";")?;
                    m.ports.push(Port {
                        name,
                        dir: if kw == "input" {
                            Direction::In
                        } else {
                            Direction::Out
                        },
                        width,
                        len,
                        loc,
                    });
                }
                "reg" => {
                    self.advance();
                    let name = self.dotted_name()?;
                    let (width, len) = self.shape()?;
                    self.expect_sym("@")?;
                    let clock = self.ident()?;
                    let reset = if self.eat_sym("=") {
                        Some(self.number()?)
                    } else {
                        None
                    };
                    self.expect_sym(";")?;
                    m.registers.push(Register {
                        name,
                        width,
                        len,
                        clock,
                        reset,
                        loc,
                    });
                }
                "wire" => {
                    self.advance();
                    let name = self.dotted_name()?;
                    let (width, len) = self.shape()?;
                    self.expect_sym(";")?;
                    m.wires.push(Wire {
                        name,
                        width,
                        len,
                        loc,
                    });
                }
                "inst" => {
                    self.advance();
                    let name = self.ident()?;
                    self.expect_sym(":")?;
                    let module = self.ident()?;
                    self.expect_sym("(")?;
                    let mut bindings = Vec::new();
                    if !self.eat_sym(")") {
                        loop {
                            let loc = self.loc();
                            let port = self.dotted_name()?;
                            let index = if self.eat_sym("[") {
                                let i = self.small_number("index")?;
                                self.expect_sym("]")?;
                                Some(i)
                            } else {
                                None
                            };
                            self.expect_sym("=")?;
                            let value = self.expr()?;
                            bindings.push(PortBinding {
                                port,
                                index,
                                value,
                                loc,
                            });
                            if self.eat_sym(")") {
                                break;
                            }
                            self.expect_sym(",")?;
                        }
                    }
                    self.expect_sym(";")?;
                    m.instances.push(Instance {
                        name,
                        module,
                        bindings,
                        loc,
                    });
                }
                "comb" => {
                    self.advance();
                    let body = self.block()?;
                    m.comb_blocks.push(Block {
                        clock: None,
                        body,
                        loc,
                    });
                }
                "seq" => {
                    self.advance();
                    let clock = self.ident()?;
                    let body = self.block()?;
                    m.seq_blocks.push(Block {
                        clock: Some(clock),
                        body,
                        loc,
                    });
                }
                other => return self.err(format!("expected declaration, found `{other}`")),
            }
        }
        Ok(m)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            if self.peek() == &Tok::Eof {
                return self.err("unexpected end of file inside block");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        if self.is_kw("if") {
            return self.if_stmt();
        }
        if self.is_kw("for") {
            self.advance();
            let var = self.ident()?;
            self.expect_kw("in")?;
            let start = self.expr()?;
            self.expect_sym("..")?;
            let end = self.expr()?;
            let body = self.block()?;
            return Ok(Stmt {
                loc,
                kind: StmtKind::For {
                    var,
                    start,
                    end,
                    body,
                },
            });
        }
        if self.is_sym("{") {
            let body = self.block()?;
            return Ok(Stmt {
                loc,
                kind: StmtKind::Block(body),
            });
        }
        let name = self.dotted_name()?;
        let index = if self.eat_sym("[") {
            let e = self.expr()?;
            self.expect_sym("]")?;
            Some(e)
        } else {
            None
        };
        self.expect_sym("=")?;
        let value = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt {
            loc,
            kind: StmtKind::Assign {
                target: LValue { name, index },
                value,
            },
        })
    }

    fn if_stmt(&mut self) -> Result<Stmt, FrontendError> {
        let loc = self.loc();
        self.expect_kw("if")?;
        let cond = self.expr()?;
        let then_body = self.block()?;
        let else_body = if self.is_kw("else") {
            self.advance();
            if self.is_kw("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            vec![]
        };
        Ok(Stmt {
            loc,
            kind: StmtKind::If {
                cond,
                then_body,
                else_body,
            },
        })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let cond = self.binary(1)?;
        if self.eat_sym("?") {
            let a = self.expr()?;
            self.expect_sym(":")?;
            let b = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(a), Box::new(b)));
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(s) => match BinaryOp::from_symbol(s) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            self.advance();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let op = match self.peek() {
            Tok::Sym("~") => Some(UnaryOp::Not),
            Tok::Sym("!") => Some(UnaryOp::LogicalNot),
            Tok::Sym("-") => Some(UnaryOp::Neg),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            return Ok(Expr::Unary(op, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(Expr::Lit(v))
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let name = self.dotted_name()?;
                let index = if self.eat_sym("[") {
                    let e = self.expr()?;
                    self.expect_sym("]")?;
                    Some(Box::new(e))
                } else {
                    None
                };
                Ok(Expr::Var { name, index })
            }
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(v) => format!("`{v}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of file".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SUM: &str = "module top {
  input clk: 1;
  input data: 8[2];
  output sum: 8;
  comb {
    sum = 0;
    for i in 0..2 {
      if data[i] % 2 {
        sum = sum + data[i];
      }
    }
  }
}
";

    fn find_assign(stmts: &[Stmt], out: &mut Vec<SourceLoc>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Assign { .. } => out.push(s.loc.clone()),
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    find_assign(then_body, out);
                    find_assign(else_body, out);
                }
                StmtKind::For { body, .. } | StmtKind::Block(body) => find_assign(body, out),
            }
        }
    }

    #[test]
    fn parses_accumulator_fixture() {
        let p = parse(SUM, "sum.mh").unwrap();
        assert_eq!(p.top, "top");
        let m = p.top_module();
        assert_eq!(m.ports.len(), 3);
        assert_eq!(m.ports[1].len, Some(2));
        let mut locs = vec![];
        find_assign(&m.comb_blocks[0].body, &mut locs);
        assert_eq!(locs, vec![SourceLoc::new("sum.mh", 6, 5), SourceLoc::new("sum.mh", 9, 9)]);
    }

    #[test]
    fn empty_module() {
        let p = parse("module m { }", "e.mh").unwrap();
        assert_eq!(p.top_module().statement_count(), 0);
    }

    #[test]
    fn non_constant_loop_bound() {
        let src = "module m { input n: 4; output y: 4; comb { y = 0; for i in 0..n { y = y + 1; } } }";
        let err = parse(src, "m.mh").unwrap_err();
        assert!(matches!(err, FrontendError::NonConstantLoopBound { .. }), "{err}");
    }

    #[test]
    fn syntax_error_location() {
        let err = parse("module m {\n  output y: 4;\n  comb { y = ; }\n}", "dir\\m.mh").unwrap_err();
        assert!(matches!(err, FrontendError::Syntax { .. }));
        assert_eq!(err.loc(), &SourceLoc::new("dir/m.mh", 3, 14));
        assert_eq!(err.to_string().split(':').next(), Some("dir/m.mh"));
    }

    #[test]
    fn duplicate_and_unknown_module() {
        let err = parse("module a {} module a {}", "x.mh").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateName { .. }));
        let err = parse("module a { inst u: nope(); }", "x.mh").unwrap_err();
        assert!(matches!(err, FrontendError::UnknownModule { .. }));
    }

    #[test]
    fn combinational_cycle_in_block() {
        let src = "module m { output y: 4; wire t: 4; comb { t = y; y = 1; } }";
        let err = parse(src, "c.mh").unwrap_err();
        assert!(matches!(err, FrontendError::CombinationalCycle { .. }), "{err}");
    }

    #[test]
    fn else_if_chain() {
        let src = "module m { input a: 2; output y: 2; comb { y = 0; if a == 1 { y = 1; } else if a == 2 { y = 2; } else { y = 3; } } }";
        let p = parse(src, "e.mh").unwrap();
        match &p.top_module().comb_blocks[0].body[1].kind {
            StmtKind::If { else_body, .. } => {
                assert!(matches!(else_body[0].kind, StmtKind::If { .. }))
            }
            other => panic!("{other:?}"),
        }
    }
}
