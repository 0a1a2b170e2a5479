//! OpenQASM 2.0 subset parser and emitter.
//!
//! Supports the header, `include` (ignored), a single `qreg`, an optional
//! `creg`, the gate set of [`GateKind`], `measure`, and `barrier` (parsed and
//! dropped). Angle expressions allow numeric literals, `pi`, unary minus,
//! parentheses, and the binary operators `+ - * /` with usual precedence.
//!
//! The parser is a hand-written recursive-descent LL(1) over a token stream;
//! every failure is a [`ParseError`] with 1-based line and column. The
//! emitter prints angles with Rust's shortest round-trip `f64` formatting, so
//! `parse(emit(c))` reproduces `c` with bit-exact angles. Noise markers are
//! emitted as `// noise ...` comment lines (a human-readable sidecar form);
//! comments are skipped by the lexer, so re-parsing yields the noise-free
//! circuit.

use crate::circuit::{CircuitIR, CircuitOp, GateKind, GateOp};
use std::fmt::Write as _;
use thiserror::Error;

/// Parse failure with 1-based source position.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, col {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(x) => format!("number `{x}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            // Skip whitespace and `//` comments.
            loop {
                match self.peek() {
                    Some(c) if c.is_whitespace() => {
                        self.bump();
                    }
                    Some('/') => {
                        // Look ahead for a second slash without consuming on
                        // failure: clone the iterator state cheaply.
                        let mut ahead = self.chars.clone();
                        ahead.next();
                        if ahead.peek() == Some(&'/') {
                            while let Some(c) = self.bump() {
                                if c == '\n' {
                                    break;
                                }
                            }
                        } else {
                            break;
                        }
                    }
                    _ => break,
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match c {
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '[' => {
                    self.bump();
                    Tok::LBracket
                }
                ']' => {
                    self.bump();
                    Tok::RBracket
                }
                '{' => {
                    self.bump();
                    Tok::LBrace
                }
                '}' => {
                    self.bump();
                    Tok::RBrace
                }
                ';' => {
                    self.bump();
                    Tok::Semi
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '+' => {
                    self.bump();
                    Tok::Plus
                }
                '*' => {
                    self.bump();
                    Tok::Star
                }
                '/' => {
                    self.bump();
                    Tok::Slash
                }
                '-' => {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        Tok::Arrow
                    } else {
                        Tok::Minus
                    }
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some('"') => break,
                            Some('\n') | None => {
                                return Err(ParseError::new(line, col, "unterminated string"))
                            }
                            Some(ch) => s.push(ch),
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let mut s = String::new();
                    while let Some(ch) = self.peek() {
                        if ch.is_ascii_digit() || ch == '.' {
                            s.push(ch);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    // Optional exponent part.
                    if matches!(self.peek(), Some('e') | Some('E')) {
                        let mut ahead = self.chars.clone();
                        ahead.next();
                        let next = ahead.peek().copied();
                        let has_digit_after_sign = match next {
                            Some('+') | Some('-') => {
                                let mut ahead2 = ahead.clone();
                                ahead2.next();
                                matches!(ahead2.peek(), Some(d) if d.is_ascii_digit())
                            }
                            Some(d) => d.is_ascii_digit(),
                            None => false,
                        };
                        if has_digit_after_sign {
                            s.push(self.bump().expect("peeked"));
                            if matches!(self.peek(), Some('+') | Some('-')) {
                                s.push(self.bump().expect("peeked"));
                            }
                            while let Some(d) = self.peek() {
                                if d.is_ascii_digit() {
                                    s.push(d);
                                    self.bump();
                                } else {
                                    break;
                                }
                            }
                        }
                    }
                    let value: f64 = s.parse().map_err(|_| {
                        ParseError::new(line, col, format!("invalid number literal `{s}`"))
                    })?;
                    Tok::Number(value)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some(ch) = self.peek() {
                        if ch.is_ascii_alphanumeric() || ch == '_' {
                            s.push(ch);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            out.push(Token { tok, line, col });
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
    circuit: CircuitIR,
}

impl Parser {
    fn cur(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.cur().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.cur().line, self.cur().col, message)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        if self.cur().tok == want {
            Ok(self.advance())
        } else {
            Err(self.err_here(format!(
                "expected {what}, found {}",
                self.cur().tok.describe()
            )))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, usize, usize), ParseError> {
        match self.cur().tok.clone() {
            Tok::Ident(s) => {
                let t = self.advance();
                Ok((s, t.line, t.col))
            }
            other => Err(self.err_here(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn expect_nat(&mut self, what: &str) -> Result<usize, ParseError> {
        match self.cur().tok {
            Tok::Number(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => {
                self.advance();
                Ok(x as usize)
            }
            _ => Err(self.err_here(format!(
                "expected {what} (non-negative integer), found {}",
                self.cur().tok.describe()
            ))),
        }
    }

    fn parse_program(&mut self) -> Result<(), ParseError> {
        // Header: OPENQASM 2.0 ;
        let (kw, line, col) = self.expect_ident("`OPENQASM` header")?;
        if kw != "OPENQASM" {
            return Err(ParseError::new(
                line,
                col,
                format!("expected `OPENQASM` header, found identifier `{kw}`"),
            ));
        }
        match self.cur().tok {
            Tok::Number(v) if v == 2.0 => {
                self.advance();
            }
            _ => {
                return Err(self.err_here(format!(
                    "unsupported OPENQASM version (only 2.0), found {}",
                    self.cur().tok.describe()
                )))
            }
        }
        self.expect(Tok::Semi, "`;` after version")?;

        while self.cur().tok != Tok::Eof {
            self.parse_statement()?;
        }
        Ok(())
    }

    fn parse_statement(&mut self) -> Result<(), ParseError> {
        let (name, line, col) = match self.cur().tok.clone() {
            Tok::Ident(s) => {
                let t = self.advance();
                (s, t.line, t.col)
            }
            other => {
                return Err(self.err_here(format!(
                    "expected a statement, found {}",
                    other.describe()
                )))
            }
        };
        match name.as_str() {
            "include" => {
                match self.cur().tok {
                    Tok::Str(_) => {
                        self.advance();
                    }
                    _ => return Err(self.err_here("expected file name string after `include`")),
                }
                self.expect(Tok::Semi, "`;` after include")?;
                Ok(())
            }
            "qreg" => {
                if self.qreg.is_some() {
                    return Err(ParseError::new(
                        line,
                        col,
                        "multiple qreg declarations are not supported",
                    ));
                }
                let (reg, _, _) = self.expect_ident("quantum register name")?;
                self.expect(Tok::LBracket, "`[`")?;
                let size = self.expect_nat("register size")?;
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Semi, "`;`")?;
                if size == 0 {
                    return Err(ParseError::new(line, col, "qreg size must be at least 1"));
                }
                self.qreg = Some((reg, size));
                self.circuit.n_qubits = size;
                Ok(())
            }
            "creg" => {
                if self.creg.is_some() {
                    return Err(ParseError::new(
                        line,
                        col,
                        "multiple creg declarations are not supported",
                    ));
                }
                let (reg, _, _) = self.expect_ident("classical register name")?;
                self.expect(Tok::LBracket, "`[`")?;
                let size = self.expect_nat("register size")?;
                self.expect(Tok::RBracket, "`]`")?;
                self.expect(Tok::Semi, "`;`")?;
                self.creg = Some((reg, size));
                Ok(())
            }
            "barrier" => {
                // Parse operand list and drop it.
                loop {
                    self.parse_qubit_ref()?;
                    if self.cur().tok == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Semi, "`;` after barrier")?;
                Ok(())
            }
            "measure" => {
                let (qubits, _) = self.parse_qubit_ref()?;
                self.expect(Tok::Arrow, "`->` in measure")?;
                let (creg_name, cline, ccol) = self.expect_ident("classical register")?;
                let Some((declared, csize)) = self.creg.clone() else {
                    return Err(ParseError::new(
                        cline,
                        ccol,
                        "measure requires a creg declaration",
                    ));
                };
                if creg_name != declared {
                    return Err(ParseError::new(
                        cline,
                        ccol,
                        format!("unknown classical register `{creg_name}`"),
                    ));
                }
                if self.cur().tok == Tok::LBracket {
                    self.advance();
                    let bit = self.expect_nat("classical bit index")?;
                    self.expect(Tok::RBracket, "`]`")?;
                    if bit >= csize {
                        return Err(ParseError::new(
                            cline,
                            ccol,
                            format!("classical bit index {bit} out of range for creg[{csize}]"),
                        ));
                    }
                }
                self.expect(Tok::Semi, "`;` after measure")?;
                for q in qubits {
                    if !self.circuit.measured_qubits.contains(&q) {
                        self.circuit.measured_qubits.push(q);
                    }
                }
                Ok(())
            }
            "gate" | "opaque" | "if" | "reset" => Err(ParseError::new(
                line,
                col,
                format!("`{name}` statements are not supported in this subset"),
            )),
            _ => self.parse_gate_statement(name, line, col),
        }
    }

    /// Parse `reg` or `reg[i]`; returns the addressed qubit indices (all of
    /// them for a bare register) and whether it was indexed.
    fn parse_qubit_ref(&mut self) -> Result<(Vec<usize>, bool), ParseError> {
        let (reg, line, col) = self.expect_ident("qubit operand")?;
        let Some((qname, qsize)) = self.qreg.clone() else {
            return Err(ParseError::new(
                line,
                col,
                "qubit operand before any qreg declaration",
            ));
        };
        if reg != qname {
            return Err(ParseError::new(
                line,
                col,
                format!("unknown register `{reg}`"),
            ));
        }
        if self.cur().tok == Tok::LBracket {
            self.advance();
            let idx = self.expect_nat("qubit index")?;
            self.expect(Tok::RBracket, "`]`")?;
            if idx >= qsize {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("qubit index {idx} out of range for qreg[{qsize}]"),
                ));
            }
            Ok((vec![idx], true))
        } else {
            Ok((((0..qsize).collect()), false))
        }
    }

    fn parse_gate_statement(
        &mut self,
        name: String,
        line: usize,
        col: usize,
    ) -> Result<(), ParseError> {
        let Some(kind) = GateKind::from_name(&name) else {
            return Err(ParseError::new(
                line,
                col,
                format!("unknown gate `{name}`"),
            ));
        };
        let mut params = Vec::new();
        if self.cur().tok == Tok::LParen {
            self.advance();
            if self.cur().tok != Tok::RParen {
                loop {
                    params.push(self.parse_expr()?);
                    if self.cur().tok == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)` after gate parameters")?;
        }
        if params.len() != kind.n_params() {
            return Err(ParseError::new(
                line,
                col,
                format!(
                    "gate `{name}` expects {} parameter(s), got {}",
                    kind.n_params(),
                    params.len()
                ),
            ));
        }
        let mut operands: Vec<(Vec<usize>, bool)> = Vec::new();
        loop {
            operands.push(self.parse_qubit_ref()?);
            if self.cur().tok == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        self.expect(Tok::Semi, "`;` after gate statement")?;
        if operands.len() != kind.arity() {
            return Err(ParseError::new(
                line,
                col,
                format!(
                    "gate `{name}` expects {} operand(s), got {}",
                    kind.arity(),
                    operands.len()
                ),
            ));
        }
        match kind.arity() {
            1 => {
                let (qubits, indexed) = &operands[0];
                if *indexed {
                    self.circuit
                        .push_gate(GateOp::new(kind, vec![qubits[0]], params));
                } else {
                    // Whole-register broadcast: one gate per qubit.
                    for &q in qubits {
                        self.circuit
                            .push_gate(GateOp::new(kind, vec![q], params.clone()));
                    }
                }
                Ok(())
            }
            2 => {
                let (a, ai) = &operands[0];
                let (b, bi) = &operands[1];
                if !ai || !bi {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("gate `{name}` requires indexed operands"),
                    ));
                }
                if a[0] == b[0] {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("gate `{name}` operands must be distinct qubits"),
                    ));
                }
                self.circuit
                    .push_gate(GateOp::new(kind, vec![a[0], b[0]], params));
                Ok(())
            }
            _ => unreachable!("gate arity is 1 or 2"),
        }
    }

    // Expression grammar:
    //   expr   := term (('+'|'-') term)*
    //   term   := factor (('*'|'/') factor)*
    //   factor := '-' factor | primary
    //   primary:= number | 'pi' | '(' expr ')'
    fn parse_expr(&mut self) -> Result<f64, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.cur().tok {
                Tok::Plus => {
                    self.advance();
                    acc += self.parse_term()?;
                }
                Tok::Minus => {
                    self.advance();
                    acc -= self.parse_term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<f64, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.cur().tok {
                Tok::Star => {
                    self.advance();
                    acc *= self.parse_factor()?;
                }
                Tok::Slash => {
                    self.advance();
                    let d = self.parse_factor()?;
                    acc /= d;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<f64, ParseError> {
        match self.cur().tok.clone() {
            Tok::Minus => {
                self.advance();
                Ok(-self.parse_factor()?)
            }
            Tok::Number(x) => {
                self.advance();
                Ok(x)
            }
            Tok::Ident(s) if s == "pi" => {
                self.advance();
                Ok(std::f64::consts::PI)
            }
            Tok::LParen => {
                self.advance();
                let v = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            other => Err(self.err_here(format!(
                "expected an angle expression, found {}",
                other.describe()
            ))),
        }
    }
}

/// Parse OpenQASM 2.0 source into a circuit.
///
/// The returned circuit has passed [`CircuitIR::validate`]. Any lexical or
/// syntactic problem yields a [`ParseError`] with 1-based position info;
/// the parser never panics on arbitrary input.
pub fn parse_qasm(src: &str) -> Result<CircuitIR, ParseError> {
    let tokens = Lexer::new(src).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        qreg: None,
        creg: None,
        circuit: CircuitIR::empty(0),
    };
    parser.parse_program()?;
    if parser.qreg.is_none() {
        return Err(ParseError::new(1, 1, "program declares no qreg"));
    }
    parser
        .circuit
        .validate()
        .map_err(|e| ParseError::new(1, 1, format!("invalid circuit: {e}")))?;
    Ok(parser.circuit)
}

/// Emit a circuit as OpenQASM 2.0 text.
///
/// Angles are printed with Rust's shortest round-trip `f64` formatting, so
/// parsing the output reproduces every angle bit-exactly. Noise markers are
/// written as `// noise kind(p) q[i];` comment lines (ignored on re-parse).
/// A `creg` and `measure` statements are emitted iff the circuit declares
/// measured qubits.
pub fn emit_qasm(circuit: &CircuitIR) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits);
    if !circuit.measured_qubits.is_empty() {
        let _ = writeln!(out, "creg c[{}];", circuit.measured_qubits.len());
    }
    for op in &circuit.ops {
        match op {
            CircuitOp::Gate(g) => {
                out.push_str(g.kind.name());
                if !g.params.is_empty() {
                    out.push('(');
                    for (i, p) in g.params.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        let _ = write!(out, "{p}");
                    }
                    out.push(')');
                }
                out.push(' ');
                for (i, q) in g.qubits.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    let _ = write!(out, "q[{q}]");
                }
                out.push_str(";\n");
            }
            CircuitOp::Noise(n) => {
                let _ = writeln!(out, "// noise {}({}) q[{}];", n.kind.name(), n.p, n.qubit);
            }
        }
    }
    for (bit, q) in circuit.measured_qubits.iter().enumerate() {
        let _ = writeln!(out, "measure q[{q}] -> c[{bit}];");
    }
    out
}
