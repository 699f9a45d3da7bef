//! Recursive-descent parser for `.litmus` files.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    BinOp, Expectation, Expr, Instruction, LitmusError, LitmusTest, LoadOrder, Postcondition, StoreOrder, Thread,
    ValidationError, ValidationKind, Value,
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Assign,
    AssignRel,
    AssignAcq,
    Semi,
    Comma,
    Colon,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eq,
    And,
    Or,
    Tilde,
    Plus,
    Minus,
    Star,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Assign => ":=",
            Tok::AssignRel => ":=rel",
            Tok::AssignAcq => ":=acq",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Eq => "=",
            Tok::And => "/\\",
            Tok::Or => "\\/",
            Tok::Tilde => "~",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek_byte(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek_byte(0) {
            self.pos += 1;
            if c == b'\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_byte(0) {
                Some(c) if c.is_ascii_whitespace() => self.bump(),
                Some(b'/') if self.peek_byte(1) == Some(b'/') => {
                    while !matches!(self.peek_byte(0), None | Some(b'\n')) {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn syntax(&self, line: usize, col: usize, expected: impl Into<String>) -> LitmusError {
        LitmusError::Syntax {
            line,
            col,
            expected: expected.into(),
        }
    }

    /// A maximal run of non-whitespace characters, used for test names such
    /// as `MP+rel/acq`.
    fn raw_word(&mut self) -> Result<Spanned, LitmusError> {
        self.skip_trivia();
        let (line, col, start) = (self.line, self.col, self.pos);
        while matches!(self.peek_byte(0), Some(c) if !c.is_ascii_whitespace()) {
            self.bump();
        }
        if start == self.pos {
            return Err(self.syntax(line, col, "test name"));
        }
        let word = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        Ok(Spanned {
            tok: Tok::Ident(word),
            line,
            col,
        })
    }

    fn next(&mut self) -> Result<Spanned, LitmusError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek_byte(0) else {
            return Ok(Spanned {
                tok: Tok::Eof,
                line,
                col,
            });
        };
        let tok = if is_ident_start(c) {
            let start = self.pos;
            while matches!(self.peek_byte(0), Some(c) if is_ident_char(c)) {
                self.bump();
            }
            Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else if c.is_ascii_digit() {
            let start = self.pos;
            while matches!(self.peek_byte(0), Some(c) if c.is_ascii_digit()) {
                self.bump();
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
            let n = digits
                .parse::<u64>()
                .map_err(|_| self.syntax(line, col, "integer literal within 64 bits"))?;
            Tok::Int(n)
        } else {
            let two = (c, self.peek_byte(1));
            let (tok, len) = match two {
                (b':', Some(b'=')) => {
                    let suffix = |s: &[u8]| {
                        self.src[self.pos + 2..].starts_with(s)
                            && !matches!(self.src.get(self.pos + 5), Some(&c) if is_ident_char(c))
                    };
                    if suffix(b"rel") {
                        (Tok::AssignRel, 5)
                    } else if suffix(b"acq") {
                        (Tok::AssignAcq, 5)
                    } else {
                        (Tok::Assign, 2)
                    }
                }
                (b'/', Some(b'\\')) => (Tok::And, 2),
                (b'\\', Some(b'/')) => (Tok::Or, 2),
                (b':', _) => (Tok::Colon, 1),
                (b';', _) => (Tok::Semi, 1),
                (b',', _) => (Tok::Comma, 1),
                (b'{', _) => (Tok::LBrace, 1),
                (b'}', _) => (Tok::RBrace, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b'=', _) => (Tok::Eq, 1),
                (b'~', _) => (Tok::Tilde, 1),
                (b'+', _) => (Tok::Plus, 1),
                (b'-', _) => (Tok::Minus, 1),
                (b'*', _) => (Tok::Star, 1),
                _ => return Err(self.syntax(line, col, "a token")),
            };
            for _ in 0..len {
                self.bump();
            }
            tok
        };
        Ok(Spanned { tok, line, col })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Spanned>,
    init: BTreeMap<String, Value>,
}

const LOOP_KEYWORDS: [&str; 4] = ["while", "for", "loop", "goto"];

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&Spanned, LitmusError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().expect("peeked token"))
    }

    fn next(&mut self) -> Result<Spanned, LitmusError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn error_at(&self, at: &Spanned, expected: impl Into<String>) -> LitmusError {
        LitmusError::Syntax {
            line: at.line,
            col: at.col,
            expected: format!("{} (found {})", expected.into(), at.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, LitmusError> {
        let t = self.next()?;
        if t.tok == tok {
            Ok(t)
        } else {
            Err(self.error_at(&t, format!("`{}`", tok.text())))
        }
    }

    fn eat(&mut self, tok: &Tok) -> Result<bool, LitmusError> {
        if &self.peek()?.tok == tok {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn peek_keyword(&mut self, kw: &str) -> Result<bool, LitmusError> {
        Ok(matches!(&self.peek()?.tok, Tok::Ident(s) if s == kw))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), LitmusError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            _ => Err(self.error_at(&t, format!("`{kw}`"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LitmusError> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok(s),
            _ => Err(self.error_at(&t, what)),
        }
    }

    fn int_literal(&mut self) -> Result<Value, LitmusError> {
        let negative = self.eat(&Tok::Minus)?;
        let t = self.next()?;
        let Tok::Int(n) = t.tok else {
            return Err(self.error_at(&t, "integer"));
        };
        signed(n, negative).ok_or_else(|| self.error_at(&t, "integer within 64 bits"))
    }

    fn parse_file(&mut self) -> Result<LitmusTest, LitmusError> {
        self.keyword("test")?;
        let name = match self.lexer.raw_word()?.tok {
            Tok::Ident(s) => s,
            _ => unreachable!("raw_word yields identifiers"),
        };
        if self.peek_keyword("init")? {
            self.next()?;
            self.parse_init()?;
        }
        let mut threads = Vec::new();
        while self.peek_keyword("thread")? {
            self.next()?;
            let tname = self.ident("thread name")?;
            self.expect(Tok::LBrace)?;
            let body = self.parse_block()?;
            self.expect(Tok::RBrace)?;
            threads.push(Thread { name: tname, body });
        }
        self.keyword("exists")?;
        self.expect(Tok::LParen)?;
        let post = self.parse_or()?;
        self.expect(Tok::RParen)?;
        let expectations = if self.peek_keyword("expect")? {
            self.next()?;
            Some(self.parse_expect()?)
        } else {
            None
        };
        let t = self.next()?;
        if t.tok != Tok::Eof {
            return Err(self.error_at(&t, "end of input"));
        }
        Ok(LitmusTest {
            name,
            init: std::mem::take(&mut self.init),
            threads,
            post,
            expectations,
        })
    }

    fn parse_init(&mut self) -> Result<(), LitmusError> {
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace)? {
            let at = self.peek()?.clone();
            let var = self.ident("shared variable name")?;
            self.expect(Tok::Eq)?;
            let v = self.int_literal()?;
            if self.init.insert(var, v).is_some() {
                return Err(self.error_at(&at, "a variable not already initialised"));
            }
            if !self.eat(&Tok::Semi)? && self.peek()?.tok != Tok::RBrace {
                let t = self.next()?;
                return Err(self.error_at(&t, "`;` or `}`"));
            }
        }
        Ok(())
    }

    fn parse_expect(&mut self) -> Result<BTreeMap<String, Expectation>, LitmusError> {
        let mut out = BTreeMap::new();
        self.expect(Tok::LBrace)?;
        while !self.eat(&Tok::RBrace)? {
            let model = self.ident("model name")?;
            self.expect(Tok::Colon)?;
            let t = self.next()?;
            let e = match &t.tok {
                Tok::Ident(s) if s == "yes" => Expectation::Reachable,
                Tok::Ident(s) if s == "no" => Expectation::Unreachable,
                _ => return Err(self.error_at(&t, "`yes` or `no`")),
            };
            out.insert(model, e);
            if !self.eat(&Tok::Semi)? && self.peek()?.tok != Tok::RBrace {
                let t = self.next()?;
                return Err(self.error_at(&t, "`;` or `}`"));
            }
        }
        Ok(out)
    }

    /// Instructions up to (not including) the closing brace. `;` separates
    /// instructions and is optional after a braced block.
    fn parse_block(&mut self) -> Result<Vec<Instruction>, LitmusError> {
        let mut out = Vec::new();
        loop {
            if self.peek()?.tok == Tok::RBrace {
                return Ok(out);
            }
            let ins = self.parse_instruction()?;
            let braced = matches!(ins, Instruction::Branch { .. });
            out.push(ins);
            if !self.eat(&Tok::Semi)? && !braced && self.peek()?.tok != Tok::RBrace {
                let t = self.next()?;
                return Err(self.error_at(&t, "`;` or `}`"));
            }
        }
    }

    fn parse_instruction(&mut self) -> Result<Instruction, LitmusError> {
        let head = self.next()?;
        let Tok::Ident(word) = head.tok.clone() else {
            return Err(self.error_at(&head, "an instruction"));
        };
        if LOOP_KEYWORDS.contains(&word.as_str()) {
            if word == "while" {
                // parse the whole construct so the error names the construct, not its body
                self.expect(Tok::LParen)?;
                self.parse_expr()?;
                if self.eat(&Tok::Eq)? {
                    self.int_literal()?;
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                self.parse_block()?;
                self.expect(Tok::RBrace)?;
            }
            return Err(ValidationError::new(
                ValidationKind::LoopDetected,
                format!("`{word}` at {}:{} introduces a loop", head.line, head.col),
            )
            .into());
        }
        match word.as_str() {
            "fence" => return Ok(Instruction::Fence),
            "if" => return self.parse_branch(),
            _ => {}
        }
        let op = self.next()?;
        match op.tok {
            Tok::Assign => self.parse_assignment(word),
            Tok::AssignRel => {
                if !self.init.contains_key(&word) {
                    return Err(undeclared(&word, "release store target"));
                }
                let expr = self.parse_expr()?;
                self.reject_shared(&expr)?;
                Ok(Instruction::Store {
                    loc: word,
                    expr,
                    order: StoreOrder::Release,
                })
            }
            Tok::AssignAcq => {
                let loc = self.ident("shared variable")?;
                if !self.init.contains_key(&loc) {
                    return Err(undeclared(&loc, "acquire load source"));
                }
                if self.init.contains_key(&word) {
                    return Err(undeclared(&word, "register (it is a shared variable)"));
                }
                let deps = self.parse_deps()?;
                Ok(Instruction::Load {
                    reg: word,
                    loc,
                    order: LoadOrder::Acquire,
                    deps,
                })
            }
            _ => Err(self.error_at(&op, "`:=`, `:=rel` or `:=acq`")),
        }
    }

    fn parse_assignment(&mut self, lhs: String) -> Result<Instruction, LitmusError> {
        let lhs_shared = self.init.contains_key(&lhs);
        if self.peek_keyword("SWAP")? {
            self.next()?;
            if lhs_shared {
                return Err(undeclared(&lhs, "register (it is a shared variable)"));
            }
            self.expect(Tok::LParen)?;
            let loc = self.ident("shared variable")?;
            if !self.init.contains_key(&loc) {
                return Err(undeclared(&loc, "SWAP location"));
            }
            self.expect(Tok::Comma)?;
            let expr = self.parse_expr()?;
            self.reject_shared(&expr)?;
            self.expect(Tok::RParen)?;
            return Ok(Instruction::Swap { reg: lhs, loc, expr });
        }
        let expr = self.parse_expr()?;
        if let Expr::Reg(src) = &expr {
            if self.init.contains_key(src) && !lhs_shared {
                let loc = src.clone();
                let deps = self.parse_deps()?;
                return Ok(Instruction::Load {
                    reg: lhs,
                    loc,
                    order: LoadOrder::Plain,
                    deps,
                });
            }
        }
        self.reject_shared(&expr)?;
        if lhs_shared {
            Ok(Instruction::Store {
                loc: lhs,
                expr,
                order: StoreOrder::Plain,
            })
        } else {
            Ok(Instruction::Assign { reg: lhs, expr })
        }
    }

    fn parse_deps(&mut self) -> Result<BTreeSet<String>, LitmusError> {
        let mut deps = BTreeSet::new();
        if self.peek_keyword("dep")? {
            self.next()?;
            loop {
                let at = self.peek()?.clone();
                let r = self.ident("dependency register")?;
                if self.init.contains_key(&r) {
                    return Err(ValidationError::new(
                        ValidationKind::BadDep,
                        format!("dependency on shared variable `{r}` at {}:{}", at.line, at.col),
                    )
                    .into());
                }
                deps.insert(r);
                if !self.eat(&Tok::Comma)? {
                    break;
                }
            }
        }
        Ok(deps)
    }

    fn parse_branch(&mut self) -> Result<Instruction, LitmusError> {
        self.expect(Tok::LParen)?;
        let cond = self.parse_expr()?;
        self.reject_shared(&cond)?;
        self.expect(Tok::Eq)?;
        let equals = self.int_literal()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let then_block = self.parse_block()?;
        self.expect(Tok::RBrace)?;
        let else_block = if self.peek_keyword("else")? {
            self.next()?;
            self.expect(Tok::LBrace)?;
            let b = self.parse_block()?;
            self.expect(Tok::RBrace)?;
            b
        } else {
            Vec::new()
        };
        Ok(Instruction::Branch {
            cond,
            equals,
            then_block,
            else_block,
        })
    }

    fn reject_shared(&self, expr: &Expr) -> Result<(), LitmusError> {
        match expr.registers().into_iter().find(|r| self.init.contains_key(*r)) {
            Some(x) => Err(ValidationError::new(
                ValidationKind::SharedInExpression,
                format!("shared variable `{x}` used inside an expression"),
            )
            .into()),
            None => Ok(()),
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, LitmusError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek()?.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.parse_term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn parse_term(&mut self) -> Result<Expr, LitmusError> {
        let mut lhs = self.parse_unary()?;
        while self.eat(&Tok::Star)? {
            let rhs = self.parse_unary()?;
            lhs = Expr::bin(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, LitmusError> {
        let t = self.next()?;
        match t.tok {
            Tok::Minus => {
                if let Tok::Int(n) = self.peek()?.tok {
                    let at = self.next()?;
                    return signed(n, true)
                        .map(Expr::Const)
                        .ok_or_else(|| self.error_at(&at, "integer within 64 bits"));
                }
                Ok(Expr::Neg(Box::new(self.parse_unary()?)))
            }
            Tok::Int(n) => signed(n, false)
                .map(Expr::Const)
                .ok_or_else(|| self.error_at(&t, "integer within 64 bits")),
            Tok::Ident(name) => Ok(Expr::Reg(name)),
            Tok::LParen => {
                let e = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.error_at(&t, "an expression")),
        }
    }

    fn parse_or(&mut self) -> Result<Postcondition, LitmusError> {
        let mut lhs = self.parse_and()?;
        while self.eat(&Tok::Or)? {
            let rhs = self.parse_and()?;
            lhs = Postcondition::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Postcondition, LitmusError> {
        let mut lhs = self.parse_prop_unary()?;
        while self.eat(&Tok::And)? {
            let rhs = self.parse_prop_unary()?;
            lhs = Postcondition::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_prop_unary(&mut self) -> Result<Postcondition, LitmusError> {
        let t = self.next()?;
        match t.tok {
            Tok::Tilde => Ok(Postcondition::negate(self.parse_prop_unary()?)),
            Tok::LParen => {
                let p = self.parse_or()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(s) if s == "true" => Ok(Postcondition::True),
            Tok::Ident(s) if s == "false" => Ok(Postcondition::False),
            Tok::Ident(name) => {
                self.expect(Tok::Eq)?;
                let value = self.int_literal()?;
                Ok(Postcondition::Atom { name, value })
            }
            _ => Err(self.error_at(&t, "a postcondition atom")),
        }
    }
}

fn signed(n: u64, negative: bool) -> Option<Value> {
    if negative {
        if n == 1u64 << 63 {
            Some(Value::MIN)
        } else {
            i64::try_from(n).ok().map(|v| -v)
        }
    } else {
        i64::try_from(n).ok()
    }
}

fn undeclared(name: &str, role: &str) -> LitmusError {
    ValidationError::new(
        ValidationKind::UndeclaredVar,
        format!("`{name}` is not valid as {role}"),
    )
    .into()
}

/// Parses and validates a litmus test.
pub fn parse_litmus(text: &str) -> Result<LitmusTest, LitmusError> {
    let mut parser = Parser {
        lexer: Lexer::new(text),
        peeked: None,
        init: BTreeMap::new(),
    };
    let test = parser.parse_file()?;
    test.validate()?;
    Ok(test)
}
