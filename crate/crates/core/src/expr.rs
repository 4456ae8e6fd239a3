//! Coefficient expressions: a recursive-descent parser over `+ − * / ^`,
//! parentheses, the variables `x y t rho theta r`, the functions
//! `sin cos exp sqrt abs re im conj`, the imaginary unit `i` and numeric literals.
//!
//! [`Expr`]'s `Display` parenthesizes every compound node, so printing and
//! reparsing returns the same tree.

use std::fmt;

use crate::error::{DcError, Result};
use crate::periodic::{C64, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
    Rho,
    Theta,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Re,
    Im,
    Conj,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Nonnegative finite literal; signs are [`Expr::Neg`] nodes.
    Num(f64),
    I,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Var {
    pub const ALL: [Var; 6] = [Var::X, Var::Y, Var::T, Var::Rho, Var::Theta, Var::R];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
            Var::Rho => "rho",
            Var::Theta => "theta",
            Var::R => "r",
        }
    }
}

impl Func {
    pub const ALL: [Func; 8] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs, Func::Re, Func::Im, Func::Conj];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Re => "re",
            Func::Im => "im",
            Func::Conj => "conj",
        }
    }

    fn apply(self, z: C64) -> C64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Exp => z.exp(),
            Func::Sqrt => z.sqrt(),
            Func::Abs => C64::new(z.norm(), 0.0),
            Func::Re => C64::new(z.re, 0.0),
            Func::Im => C64::new(z.im, 0.0),
            Func::Conj => z.conj(),
        }
    }
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Variable values. Plane and cylinder constructors keep `(x, y)` and `(r, t)` consistent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vars {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub rho: f64,
    pub theta: f64,
    pub r: f64,
}

impl Vars {
    pub fn plane(x: f64, y: f64) -> Self {
        let rho = x.hypot(y);
        let theta = y.atan2(x);
        Self { x, y, t: theta, rho, theta, r: rho }
    }

    pub fn cylinder(r: f64, t: f64) -> Self {
        Self { x: r * t.cos(), y: r * t.sin(), t, rho: r, theta: t, r }
    }

    fn get(&self, v: Var) -> f64 {
        match v {
            Var::X => self.x,
            Var::Y => self.y,
            Var::T => self.t,
            Var::Rho => self.rho,
            Var::Theta => self.theta,
            Var::R => self.r,
        }
    }
}

fn pow(base: C64, exp: C64) -> C64 {
    if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= 64.0 {
        return base.powi(exp.re as i32);
    }
    if base.im == 0.0 && base.re >= 0.0 && exp.im == 0.0 {
        return C64::new(base.re.powf(exp.re), 0.0);
    }
    if base == C64::new(0.0, 0.0) {
        return C64::new(0.0, 0.0);
    }
    base.powc(exp)
}

impl Expr {
    pub fn eval(&self, v: &Vars) -> C64 {
        match self {
            Expr::Num(x) => C64::new(*x, 0.0),
            Expr::I => I,
            Expr::Var(x) => C64::new(v.get(*x), 0.0),
            Expr::Neg(e) => -e.eval(v),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(v), b.eval(v));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(v)),
        }
    }

    /// Whether the variable occurs anywhere in the tree.
    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Var(x) => *x == var,
            Expr::Num(_) | Expr::I => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::I => write!(f, "i"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a}{}{b})", op.symbol()),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let x: f64 = text
                .parse()
                .map_err(|_| DcError::InvalidInput(format!("{l0}:{c0}: malformed number '{text}'")))?;
            col += i - start;
            out.push((Tok::Num(x), l0, c0));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), l0, c0));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ => return Err(DcError::InvalidInput(format!("{l0}:{c0}: unexpected character '{c}'"))),
        };
        out.push((tok, l0, c0));
        col += 1;
        i += 1;
    }
    out.push((Tok::End, line, col));
    Ok(out)
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (usize, usize) {
        (self.toks[self.pos].1, self.toks[self.pos].2)
    }

    fn error(&self, msg: impl fmt::Display) -> DcError {
        let (l, c) = self.here();
        DcError::InvalidInput(format!("{l}:{c}: {msg}"))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn close(&mut self) -> Result<()> {
        if *self.peek() != Tok::RParen {
            return Err(self.error("expected ')'"));
        }
        self.bump();
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    /// `^` binds tighter than unary minus on its left and is right-associative.
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (l, c) = self.here();
        match self.bump() {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::LParen => {
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "i" {
                    return Ok(Expr::I);
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                if let Some(v) = Var::ALL.iter().find(|v| v.name() == name) {
                    return Ok(Expr::Var(*v));
                }
                if let Some(f) = Func::ALL.iter().find(|f| f.name() == name) {
                    if self.bump() != Tok::LParen {
                        return Err(DcError::InvalidInput(format!("{l}:{c}: function '{name}' needs an argument in parentheses")));
                    }
                    let e = self.expr()?;
                    self.close()?;
                    return Ok(Expr::Call(*f, Box::new(e)));
                }
                Err(DcError::InvalidInput(format!("{l}:{c}: unknown identifier '{name}'")))
            }
            Tok::End => Err(DcError::InvalidInput(format!("{l}:{c}: unexpected end of input"))),
            t => Err(DcError::InvalidInput(format!("{l}:{c}: unexpected {t:?}"))),
        }
    }
}

/// Parses `src`; errors carry `line:column`.
pub fn parse_expression(src: &str) -> Result<Expr> {
    let mut lx = Lexer { toks: lex(src)?, pos: 0 };
    let e = lx.expr()?;
    if *lx.peek() != Tok::End {
        return Err(lx.error(format!("unexpected {:?} after expression", lx.peek())));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let e = parse_expression("x^2+y^2").unwrap();
        assert_eq!(e.eval(&Vars::plane(1.0, 2.0)), C64::new(5.0, 0.0));
        let c = parse_expression("i*0.5*exp(i*2*t)").unwrap();
        for t in [0.0, 0.3, 2.0] {
            let expect = I * 0.5 * C64::from_polar(1.0, 2.0 * t);
            assert!((c.eval(&Vars::cylinder(1.0, t)) - expect).norm() < 1e-15);
        }
        let a12 = parse_expression("3*x*y").unwrap();
        assert_eq!(a12.eval(&Vars::plane(2.0, -1.5)), C64::new(-9.0, 0.0));
    }

    #[test]
    fn precedence() {
        let v = Vars::plane(2.0, 3.0);
        let ev = |s: &str| parse_expression(s).unwrap().eval(&v).re;
        assert_eq!(ev("-x^2"), -4.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("x-y-1"), -2.0);
        assert_eq!(ev("x/y*3"), 2.0);
        assert_eq!(ev("2*-y"), -6.0);
        assert_eq!(ev("x^-1"), 0.5);
        assert_eq!(ev("1.5e1 + 2E-1"), 15.2);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expression("x +\n  foo(2)").unwrap_err().to_string();
        assert!(e.contains("2:3") && e.contains("foo"), "{e}");
        let e = parse_expression("(x + 1").unwrap_err().to_string();
        assert!(e.contains("1:7"), "{e}");
        assert!(parse_expression("x y").is_err());
        assert!(parse_expression("sin x").is_err());
        assert!(parse_expression("3 $").is_err());
        assert!(parse_expression("").is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Expr::Num),
            (0u32..1000).prop_map(|n| Expr::Num(n as f64)),
            Just(Expr::I),
            prop::sample::select(Var::ALL.to_vec()).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]),
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (prop::sample::select(Func::ALL.to_vec()), inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse_expression(&printed).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_string(), printed);
        }

        #[test]
        fn evaluation_is_deterministic(e in arb_expr(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let v = Vars::plane(x, y);
            let (a, b) = (e.eval(&v), e.eval(&v));
            prop_assert!(a == b || (a.re.is_nan() || a.im.is_nan()));
        }
    }
}
