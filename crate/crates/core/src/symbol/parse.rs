//! Recursive-descent parser and printer for symbol expressions.
//!
//! ```text
//! compare := sum (("<" | "<=" | "==" | ">" | ">=") sum)?
//! sum     := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?
//! atom    := number | var | func "(" args ")" | "(" compare ")"
//! var     := "norm_x" | "norm_xi" | "bracket_xi"
//!          | "digit" "(" "x" "," int ")" | "re_char" "(" int ["/" int] "," "x" ")"
//! func    := "exp" | "log" | "sin" | "cos" | "abs" | "min" | "max" | "if"
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2` is `-(2^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    NormX,
    NormXi,
    BracketXi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    Num(f64),
    Var(Var),
    /// `digit(x, j)`
    Digit(u32),
    /// `re_char(num/den, x)`
    ReChar { num: u64, den: u64 },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Compare(CmpOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

/// A node with its source location. Equality ignores locations.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Num(a), Num(b)) => a.to_bits() == b.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Digit(a), Digit(b)) => a == b,
            (ReChar { num: a, den: b }, ReChar { num: c, den: d }) => a == c && b == d,
            (Neg(a), Neg(b)) => a == b,
            (Binary(o1, a1, b1), Binary(o2, a2, b2)) => o1 == o2 && a1 == a2 && b1 == b2,
            (Compare(o1, a1, b1), Compare(o2, a2, b2)) => o1 == o2 && a1 == a2 && b1 == b2,
            (Call(f1, a1), Call(f2, a2)) => f1 == f2 && a1 == a2,
            (If(c1, a1, b1), If(c2, a2, b2)) => c1 == c2 && a1 == a2 && b1 == b2,
            _ => false,
        }
    }
}

impl Expr {
    fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Num(_) | ExprKind::Var(_) | ExprKind::Digit(_) | ExprKind::ReChar { .. } => {
                vec![]
            }
            ExprKind::Neg(a) => vec![a],
            ExprKind::Binary(_, a, b) | ExprKind::Compare(_, a, b) => vec![a, b],
            ExprKind::Call(_, args) => args.iter().collect(),
            ExprKind::If(c, a, b) => vec![c, a, b],
        }
    }

    /// First node satisfying `pred`, depth first.
    pub fn find(&self, pred: &impl Fn(&Expr) -> bool) -> Option<&Expr> {
        if pred(self) {
            return Some(self);
        }
        self.children().into_iter().find_map(|c| c.find(pred))
    }
}

fn is_x_node(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Var(Var::NormX) | ExprKind::Digit(_) | ExprKind::ReChar { .. }
    )
}

fn is_xi_node(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Var(Var::NormXi | Var::BracketXi))
}

/// A parsed symbol expression together with its source text.
#[derive(Clone, Debug)]
pub struct SymbolExpr {
    pub root: Expr,
    pub source: String,
}

impl PartialEq for SymbolExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl SymbolExpr {
    pub fn depends_on_x(&self) -> bool {
        self.root.find(&is_x_node).is_some()
    }

    pub fn depends_on_xi(&self) -> bool {
        self.root.find(&is_xi_node).is_some()
    }

    /// First node that reads the frequency variable, if any.
    pub fn first_xi_node(&self) -> Option<&Expr> {
        self.root.find(&is_xi_node)
    }

    pub fn uses_norm_x(&self) -> bool {
        self.root
            .find(&|e| matches!(e.kind, ExprKind::Var(Var::NormX)))
            .is_some()
    }
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => {
                if *v < 0.0 {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            ExprKind::Var(Var::NormX) => f.write_str("norm_x"),
            ExprKind::Var(Var::NormXi) => f.write_str("norm_xi"),
            ExprKind::Var(Var::BracketXi) => f.write_str("bracket_xi"),
            ExprKind::Digit(j) => write!(f, "digit(x, {j})"),
            ExprKind::ReChar { num, den } => write!(f, "re_char({num}/{den}, x)"),
            ExprKind::Neg(a) => write!(f, "(-{a})"),
            ExprKind::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            ExprKind::Compare(op, a, b) => {
                let sym = match op {
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Eq => "==",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                write!(f, "({a} {sym} {b})")
            }
            ExprKind::Call(func, args) => {
                let parts: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "{}({})", func.name(), parts.join(", "))
            }
            ExprKind::If(c, a, b) => write!(f, "if({c}, {a}, {b})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Int(u64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(v) => format!("integer {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("{other:?}"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn span(&self) -> Span {
        Span {
            offset: self.pos,
            line: self.line,
            col: self.col,
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Span)>> {
        let mut out = Vec::new();
        loop {
            while self.peek_char().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let span = self.span();
            let Some(c) = self.peek_char() else {
                out.push((Tok::Eof, span));
                return Ok(out);
            };
            let tok = match c {
                '0'..='9' | '.' => self.number(span)?,
                'a'..='z' | 'A'..='Z' | '_' => {
                    let start = self.pos;
                    while self
                        .peek_char()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                    {
                        self.bump();
                    }
                    Tok::Ident(self.src[start..self.pos].to_string())
                }
                _ => {
                    self.bump();
                    match c {
                        '+' => Tok::Plus,
                        '-' | '−' => Tok::Minus,
                        '*' => Tok::Star,
                        '/' => Tok::Slash,
                        '^' => Tok::Caret,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '≤' => Tok::Cmp(CmpOp::Le),
                        '≥' => Tok::Cmp(CmpOp::Ge),
                        '<' | '>' => {
                            let eq = self.peek_char() == Some('=');
                            if eq {
                                self.bump();
                            }
                            Tok::Cmp(match (c, eq) {
                                ('<', false) => CmpOp::Lt,
                                ('<', true) => CmpOp::Le,
                                ('>', false) => CmpOp::Gt,
                                _ => CmpOp::Ge,
                            })
                        }
                        '=' if self.peek_char() == Some('=') => {
                            self.bump();
                            Tok::Cmp(CmpOp::Eq)
                        }
                        _ => {
                            return Err(Error::Syntax {
                                line: span.line,
                                col: span.col,
                                expected: format!("a token, found `{c}`"),
                            })
                        }
                    }
                }
            };
            out.push((tok, span));
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok> {
        let start = self.pos;
        let mut is_int = true;
        while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek_char() == Some('.') {
            is_int = false;
            self.bump();
            while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            let save = (self.pos, self.line, self.col);
            self.bump();
            if matches!(self.peek_char(), Some('+' | '-')) {
                self.bump();
            }
            if self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                is_int = false;
                while self.peek_char().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            } else {
                (self.pos, self.line, self.col) = save;
            }
        }
        let text = &self.src[start..self.pos];
        let bad = || Error::Syntax {
            line: span.line,
            col: span.col,
            expected: format!("a number, found `{text}`"),
        };
        if is_int {
            text.parse::<u64>().map(Tok::Int).map_err(|_| bad())
        } else {
            text.parse::<f64>().map(Tok::Num).map_err(|_| bad())
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        let span = self.span();
        Err(Error::Syntax {
            line: span.line,
            col: span.col,
            expected: format!("{expected}, found {}", self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.fail(what)
        }
    }

    fn compare(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        if let Tok::Cmp(op) = *self.peek() {
            let span = self.span();
            self.advance();
            let rhs = self.sum()?;
            return Ok(Expr::new(
                ExprKind::Compare(op, Box::new(lhs), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.span();
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let span = self.span();
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            let span = self.span();
            self.advance();
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            let span = self.span();
            self.advance();
            let exp = self.unary()?;
            return Ok(Expr::new(
                ExprKind::Binary(BinOp::Pow, Box::new(base), Box::new(exp)),
                span,
            ));
        }
        Ok(base)
    }

    fn int(&mut self, what: &str) -> Result<u64> {
        match *self.peek() {
            Tok::Int(v) => {
                self.advance();
                Ok(v)
            }
            _ => self.fail(what),
        }
    }

    fn expect_x(&mut self) -> Result<()> {
        match self.peek() {
            Tok::Ident(s) if s == "x" => {
                self.advance();
                Ok(())
            }
            _ => self.fail("`x`"),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Num(v), span))
            }
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Num(v as f64), span))
            }
            Tok::LParen => {
                self.advance();
                let e = self.compare()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.advance();
                self.named(&name, span)
            }
            _ => self.fail("a number, variable, function or `(`"),
        }
    }

    fn named(&mut self, name: &str, span: Span) -> Result<Expr> {
        let kind = match name {
            "norm_x" => return Ok(Expr::new(ExprKind::Var(Var::NormX), span)),
            "norm_xi" => return Ok(Expr::new(ExprKind::Var(Var::NormXi), span)),
            "bracket_xi" => return Ok(Expr::new(ExprKind::Var(Var::BracketXi), span)),
            "digit" => {
                self.expect(Tok::LParen, "`(`")?;
                self.expect_x()?;
                self.expect(Tok::Comma, "`,`")?;
                let j = self.int("a digit index")?;
                self.expect(Tok::RParen, "`)`")?;
                ExprKind::Digit(u32::try_from(j).map_err(|_| Error::Syntax {
                    line: span.line,
                    col: span.col,
                    expected: "a digit index below 2^32".into(),
                })?)
            }
            "re_char" => {
                self.expect(Tok::LParen, "`(`")?;
                let num = self.int("an integer numerator")?;
                let den = if *self.peek() == Tok::Slash {
                    self.advance();
                    self.int("an integer denominator")?
                } else {
                    1
                };
                if den == 0 {
                    return Err(Error::Syntax {
                        line: span.line,
                        col: span.col,
                        expected: "a non-zero denominator".into(),
                    });
                }
                self.expect(Tok::Comma, "`,`")?;
                self.expect_x()?;
                self.expect(Tok::RParen, "`)`")?;
                ExprKind::ReChar { num, den }
            }
            "if" => {
                let args = self.args(3)?;
                let mut it = args.into_iter();
                let (c, a, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                ExprKind::If(Box::new(c), Box::new(a), Box::new(b))
            }
            _ => {
                let func = match name {
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "abs" => Func::Abs,
                    "min" => Func::Min,
                    "max" => Func::Max,
                    _ => {
                        return Err(Error::Syntax {
                            line: span.line,
                            col: span.col,
                            expected: format!("a variable or function, found `{name}`"),
                        })
                    }
                };
                ExprKind::Call(func, self.args(func.arity())?)
            }
        };
        Ok(Expr::new(kind, span))
    }

    fn args(&mut self, count: usize) -> Result<Vec<Expr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i > 0 {
                self.expect(Tok::Comma, &format!("`,` ({count} arguments)"))?;
            }
            out.push(self.compare()?);
        }
        self.expect(Tok::RParen, &format!("`)` after {count} arguments"))?;
        Ok(out)
    }
}

/// Parses a symbol expression; errors carry the line and column.
pub fn parse_symbol(text: &str) -> Result<SymbolExpr> {
    let toks = Lexer {
        src: text,
        pos: 0,
        line: 1,
        col: 1,
    }
    .tokenize()?;
    let mut parser = Parser { toks, pos: 0 };
    let root = parser.compare()?;
    if *parser.peek() != Tok::Eof {
        return parser.fail("end of input");
    }
    Ok(SymbolExpr {
        root,
        source: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(v: f64) -> Expr {
        Expr::new(ExprKind::Num(v), Span::default())
    }

    fn var(v: Var) -> Expr {
        Expr::new(ExprKind::Var(v), Span::default())
    }

    fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Binary(op, Box::new(a), Box::new(b)), Span::default())
    }

    #[test]
    fn parses_examples() {
        let e = parse_symbol("bracket_xi^(-1)").unwrap();
        let neg1 = Expr::new(ExprKind::Neg(Box::new(num(1.0))), Span::default());
        assert_eq!(e.root, bin(BinOp::Pow, var(Var::BracketXi), neg1));

        let e = parse_symbol("norm_xi^2 + norm_x").unwrap();
        assert_eq!(
            e.root,
            bin(BinOp::Add, bin(BinOp::Pow, var(Var::NormXi), num(2.0)), var(Var::NormX))
        );

        let e = parse_symbol("if(norm_xi <= 2, 1, 0)").unwrap();
        let cond = Expr::new(
            ExprKind::Compare(CmpOp::Le, Box::new(var(Var::NormXi)), Box::new(num(2.0))),
            Span::default(),
        );
        assert_eq!(
            e.root,
            Expr::new(
                ExprKind::If(Box::new(cond), Box::new(num(1.0)), Box::new(num(0.0))),
                Span::default()
            )
        );
    }

    #[test]
    fn precedence() {
        // ^ over unary minus over * over +
        let e = parse_symbol("-2^2").unwrap();
        assert_eq!(e.to_string(), "(-(2 ^ 2))");
        let e = parse_symbol("1 + 2 * 3 ^ 2 ^ 2").unwrap();
        assert_eq!(e.to_string(), "(1 + (2 * (3 ^ (2 ^ 2))))");
        let e = parse_symbol("2^-1").unwrap();
        assert_eq!(e.to_string(), "(2 ^ (-1))");
        let e = parse_symbol("1 - 2 - 3 < 4 * 5 / 6").unwrap();
        assert_eq!(e.to_string(), "(((1 - 2) - 3) < ((4 * 5) / 6))");
    }

    #[test]
    fn special_atoms() {
        let e = parse_symbol("re_char(1/2, x) * digit(x, 3)").unwrap();
        assert_eq!(e.to_string(), "(re_char(1/2, x) * digit(x, 3))");
        assert!(e.depends_on_x());
        assert!(!e.depends_on_xi());
        let e = parse_symbol("max(norm_xi, 1) ≤ 4").unwrap();
        assert!(e.depends_on_xi());
        assert!(parse_symbol("1.5e-3 + .25").is_ok());
    }

    #[test]
    fn syntax_errors_are_positioned() {
        match parse_symbol("1 +\n  * 2") {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("{other:?}"),
        }
        match parse_symbol("foo(1)") {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (1, 1)),
            other => panic!("{other:?}"),
        }
        assert!(parse_symbol("min(1)").is_err());
        assert!(parse_symbol("(1 + 2").is_err());
        assert!(parse_symbol("1 2").is_err());
        assert!(parse_symbol("re_char(1/0, x)").is_err());
        assert!(parse_symbol("digit(y, 1)").is_err());
        assert!(parse_symbol("").is_err());
        assert!(parse_symbol("1 $ 2").is_err());
    }

    #[test]
    fn printer_round_trip() {
        for text in [
            "bracket_xi^(-1)",
            "norm_xi^2 + norm_x",
            "if(norm_xi <= 2, 1, 0)",
            "-exp(-norm_x) * cos(0.1 * bracket_xi) / (1 + abs(-3))",
            "min(max(1, 2), log(3)) == sin(4)",
            "re_char(3/8, x) + digit(x, 0) ^ 2 ^ -1",
        ] {
            let once = parse_symbol(text).unwrap();
            let twice = parse_symbol(&once.to_string()).unwrap();
            assert_eq!(once, twice, "{text}");
        }
    }
}
