//! Line-oriented model file parser.
//!
//! ```text
//! # comment
//! species m1 = 0.5
//! param c11 = 3
//! volume = 100
//! output m1 m2
//! reaction prod_m1: -> m1 @ c11 / (1 + p2^2)
//! reaction dimer: 2 A -> B @ k * A^2
//! ```

use std::collections::HashMap;

use super::expr::Expr;
use super::network::{NetworkParts, Reaction, ReactionNetwork};
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Arrow,
    Colon,
    At,
    Eq,
    Empty,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            '@' => Some(Tok::At),
            '=' => Some(Tok::Eq),
            '∅' => Some(Tok::Empty),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, col });
            i += 1;
            continue;
        }
        if c == '-' {
            if chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Arrow, col });
                i += 2;
            } else {
                out.push(Token { tok: Tok::Minus, col });
                i += 1;
            }
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
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                line: line_no,
                col,
                msg: format!("invalid number `{text}`"),
            })?;
            out.push(Token { tok: Tok::Num(v), col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        return Err(ParseError::Syntax { line: line_no, col, msg: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Symbol {
    Species(usize),
    Param(usize),
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line: usize, eol_col: usize) -> Self {
        Cursor { toks, pos: 0, line, eol_col }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.eol_col, |t| t.col)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    /// Signed numeric literal.
    fn number(&mut self) -> Result<f64, ParseError> {
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.next() {
            Some(Tok::Num(v)) => Ok(if neg { -*v } else { *v }),
            _ => {
                self.pos -= 1;
                Err(self.err("expected number"))
            }
        }
    }
}

struct ExprParser<'a, 'b> {
    cur: &'b mut Cursor<'a>,
    symbols: &'b HashMap<String, Symbol>,
}

impl ExprParser<'_, '_> {
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.cur.peek() {
                Some(Tok::Plus) => {
                    self.cur.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.cur.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.cur.peek() {
                Some(Tok::Star) => {
                    self.cur.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.cur.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.cur.peek() == Some(&Tok::Minus) {
            self.cur.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.cur.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.cur.pos += 1;
        let col = self.cur.col();
        let exponent = self.unary()?;
        if exponent.depends_on_species() || contains_param(&exponent) {
            return Err(ParseError::Syntax {
                line: self.cur.line,
                col,
                msg: "exponent must be a numeric constant".into(),
            });
        }
        let e = exponent.eval(&[], &[]).map_err(|err| ParseError::Syntax {
            line: self.cur.line,
            col,
            msg: format!("invalid exponent: {err}"),
        })?;
        Ok(Expr::Pow(Box::new(base), e))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let col = self.cur.col();
        match self.cur.next().cloned() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.cur.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "sqrt" && self.cur.peek() == Some(&Tok::LParen) => {
                self.cur.pos += 1;
                let e = self.expr()?;
                self.cur.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Sqrt(Box::new(e)))
            }
            Some(Tok::Ident(name)) => match self.symbols.get(&name) {
                Some(Symbol::Species(i)) => Ok(Expr::Species(*i)),
                Some(Symbol::Param(i)) => Ok(Expr::Param(*i)),
                None => Err(ParseError::UnknownSymbol { line: self.cur.line, col, name }),
            },
            _ => {
                self.cur.pos -= 1;
                Err(self.cur.err("expected expression"))
            }
        }
    }
}

fn contains_param(e: &Expr) -> bool {
    match e {
        Expr::Param(_) => true,
        Expr::Num(_) | Expr::Species(_) => false,
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sqrt(a) => contains_param(a),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            contains_param(a) || contains_param(b)
        }
    }
}

/// Parses a model file into a validated network.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let toks = lex(raw, i + 1)?;
        if !toks.is_empty() {
            lines.push((i + 1, raw.chars().count() + 1, toks));
        }
    }

    // Declarations first so reactions may reference symbols declared later.
    let mut parts = NetworkParts::default();
    let mut symbols: HashMap<String, Symbol> = HashMap::new();
    let mut output_names: Vec<(usize, usize, String)> = Vec::new();
    let mut reaction_lines = Vec::new();
    for (line, eol, toks) in &lines {
        let mut cur = Cursor::new(toks, *line, *eol);
        let keyword = cur.ident("a declaration keyword")?;
        match keyword.as_str() {
            "species" | "param" => {
                let col = cur.col();
                let name = cur.ident("a name")?;
                cur.expect(Tok::Eq, "`=`")?;
                let value = cur.number()?;
                cur.finish()?;
                if name == "sqrt" {
                    return Err(ParseError::Syntax { line: *line, col, msg: "`sqrt` is reserved".into() });
                }
                if symbols.contains_key(&name) {
                    return Err(ParseError::Duplicate { line: *line, name });
                }
                if keyword == "species" {
                    symbols.insert(name.clone(), Symbol::Species(parts.species.len()));
                    parts.species.push((name, value));
                } else {
                    symbols.insert(name.clone(), Symbol::Param(parts.params.len()));
                    parts.params.push((name, value));
                }
            }
            "volume" => {
                cur.expect(Tok::Eq, "`=`")?;
                let v = cur.number()?;
                cur.finish()?;
                if parts.volume.is_some() {
                    return Err(ParseError::Duplicate { line: *line, name: "volume".into() });
                }
                parts.volume = Some(v);
            }
            "output" => {
                while !cur.at_end() {
                    let col = cur.col();
                    output_names.push((*line, col, cur.ident("a species name")?));
                }
            }
            "reaction" => reaction_lines.push((*line, *eol, toks)),
            other => {
                return Err(ParseError::Syntax {
                    line: *line,
                    col: toks[0].col,
                    msg: format!("unknown declaration `{other}`"),
                })
            }
        }
    }

    for (line, col, name) in output_names {
        match symbols.get(&name) {
            Some(Symbol::Species(i)) => parts.outputs.push(*i),
            _ => return Err(ParseError::UnknownSymbol { line, col, name }),
        }
    }

    for (line, eol, toks) in reaction_lines {
        let mut cur = Cursor::new(toks, line, eol);
        cur.pos = 1;
        let name = cur.ident("a reaction name")?;
        cur.expect(Tok::Colon, "`:`")?;
        let reactants = parse_side(&mut cur, &symbols, Tok::Arrow)?;
        cur.expect(Tok::Arrow, "`->`")?;
        let products = parse_side(&mut cur, &symbols, Tok::At)?;
        cur.expect(Tok::At, "`@` followed by a rate expression")?;
        let rate = ExprParser { cur: &mut cur, symbols: &symbols }.expr()?;
        cur.finish()?;
        parts.reactions.push(Reaction { name, reactants, products, rate });
    }

    ReactionNetwork::new(parts).map_err(ParseError::from)
}

fn parse_side(
    cur: &mut Cursor<'_>,
    symbols: &HashMap<String, Symbol>,
    terminator: Tok,
) -> Result<Vec<(usize, u32)>, ParseError> {
    let mut terms: Vec<(usize, u32)> = Vec::new();
    if cur.peek() == Some(&terminator) {
        return Ok(terms);
    }
    if cur.peek() == Some(&Tok::Empty) {
        cur.pos += 1;
        return Ok(terms);
    }
    if cur.peek() == Some(&Tok::Num(0.0)) {
        let save = cur.pos;
        cur.pos += 1;
        if cur.peek() == Some(&terminator) {
            return Ok(terms);
        }
        cur.pos = save;
    }
    loop {
        let coef = match cur.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                if v < 1.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                    return Err(cur.err("stoichiometric coefficient must be a positive integer"));
                }
                cur.pos += 1;
                v as u32
            }
            _ => 1,
        };
        let col = cur.col();
        let name = cur.ident("a species name")?;
        let idx = match symbols.get(&name) {
            Some(Symbol::Species(i)) => *i,
            _ => return Err(ParseError::UnknownSymbol { line: cur.line, col, name }),
        };
        match terms.iter_mut().find(|t| t.0 == idx) {
            Some(t) => t.1 += coef,
            None => terms.push((idx, coef)),
        }
        if cur.peek() == Some(&Tok::Plus) {
            cur.pos += 1;
        } else {
            return Ok(terms);
        }
    }
}
