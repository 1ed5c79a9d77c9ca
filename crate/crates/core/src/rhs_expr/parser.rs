use super::lexer::{tokenize, Spanned, Tok};
use super::{BinOp, Expr, ExprContext, Func, Node, ParseError, Var};

const MAX_DEPTH: usize = 200;

pub(super) fn parse(src: &str, context: ExprContext) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        context,
        depth: 0,
    };
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    context: ExprContext,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            found: self.peek().describe(),
            expected,
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::TooDeep {
                offset: self.offset(),
            });
        }
        Ok(())
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            _ => Err(self.error(vec!["+", "-", "*", "/", "^", "end of input"])),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let (_, offset) = self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs, offset);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            let (_, offset) = self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs, offset);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Tok::Minus = self.peek() {
            self.enter()?;
            let (_, offset) = self.bump();
            let operand = self.unary()?;
            self.depth -= 1;
            return Ok(Expr {
                node: Node::Neg(Box::new(operand)),
                offset,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Tok::Caret = self.peek() {
            self.enter()?;
            let (_, offset) = self.bump();
            let exponent = self.unary()?;
            self.depth -= 1;
            return Ok(binary(BinOp::Pow, base, exponent, offset));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr {
                    node: Node::Num(v),
                    offset,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                match self.peek() {
                    Tok::RParen => {
                        self.bump();
                        Ok(inner)
                    }
                    _ => Err(self.error(vec!["+", "-", "*", "/", "^", ")"])),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    return self.call(func, offset);
                }
                let node = self.identifier(&name, offset)?;
                Ok(Expr { node, offset })
            }
            _ => Err(self.error(vec!["number", "identifier", "(", "-"])),
        }
    }

    fn call(&mut self, func: Func, offset: usize) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
            }
            _ => return Err(self.error(vec!["("])),
        }
        let mut args = vec![self.expr()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                    args.push(self.expr()?);
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                _ => return Err(self.error(vec![",", ")", "+", "-", "*", "/", "^"])),
            }
        }
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                offset,
                function: func.name(),
                expected: func.arity(),
                found: args.len(),
            });
        }
        Ok(Expr {
            node: Node::Call(func, args),
            offset,
        })
    }

    fn identifier(&self, name: &str, offset: usize) -> Result<Node, ParseError> {
        let unknown = || ParseError::UnknownIdentifier {
            offset,
            name: name.to_string(),
        };
        match name {
            "t" => return Ok(Node::Var(Var::T)),
            "pi" => return Ok(Node::Pi),
            _ => {}
        }
        if !self.context.allow_xy {
            return Err(unknown());
        }
        let dim = self.context.dim;
        let (kind, index) = name.split_at(1);
        let index = match index {
            "" if dim == 1 => 1,
            "" => return Err(unknown()),
            digits if digits.bytes().all(|b| b.is_ascii_digit()) && !digits.starts_with('0') => {
                digits.parse::<usize>().map_err(|_| unknown())?
            }
            _ => return Err(unknown()),
        };
        if index == 0 || index > dim {
            return Err(unknown());
        }
        match kind {
            "x" => Ok(Node::Var(Var::X(index - 1))),
            "y" => Ok(Node::Var(Var::Y(index - 1))),
            _ => Err(unknown()),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr, offset: usize) -> Expr {
    Expr {
        node: Node::Binary(op, Box::new(lhs), Box::new(rhs)),
        offset,
    }
}
