//! Text grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := rational ('*' atom)*
//! atom   := 't^' affine | 't' | ident | atom '^' int
//! affine := rational ('+' rational '*' 'alpha')?
//! ```
//!
//! The parser also accepts a leading sign, atoms without a rational prefix,
//! decimals, and a parenthesised exponent such as `t^(-1-2*alpha)`, which is
//! the form the printer emits.

use super::{Exponent, Expr, Monomial, Param, Symbol, Q64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character `{0}` at byte {1}")]
    BadChar(char, usize),
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected token `{0}`")]
    Unexpected(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),
    #[error("exponent out of range")]
    Range,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>, ParseError> {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => (out.push(Tok::Plus), i += 1).1,
            '-' => (out.push(Tok::Minus), i += 1).1,
            '*' => (out.push(Tok::Star), i += 1).1,
            '/' => (out.push(Tok::Slash), i += 1).1,
            '^' => (out.push(Tok::Caret), i += 1).1,
            '(' => (out.push(Tok::LParen), i += 1).1,
            ')' => (out.push(Tok::RParen), i += 1).1,
            '0'..='9' | '.' => {
                let st = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                out.push(Tok::Num(decimal(&s[st..i]).ok_or(ParseError::BadChar(c, st))?));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let st = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                out.push(Tok::Ident(s[st..i].to_string()));
            }
            _ => return Err(ParseError::BadChar(c, i)),
        }
    }
    Ok(out)
}

fn decimal(s: &str) -> Option<BigRational> {
    let (ip, fp) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if fp.contains('.') || (ip.is_empty() && fp.is_empty()) {
        return None;
    }
    let digits = format!("{ip}{fp}");
    let n: BigInt = digits.parse().ok()?;
    let d = BigInt::from(10u32).pow(fp.len() as u32);
    Some(BigRational::new(n, d))
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.pos + off)
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let t = self.toks.get(self.pos).cloned().ok_or(ParseError::Eof)?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.peek().map_or(ParseError::Eof, |x| ParseError::Unexpected(format!("{x:?}"))))
        }
    }

    fn rational(&mut self) -> Result<BigRational, ParseError> {
        match self.next()? {
            Tok::Num(n) => {
                if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    match self.next()? {
                        Tok::Num(d) if !d.is_zero() => Ok(n / d),
                        t => Err(ParseError::Unexpected(format!("{t:?}"))),
                    }
                } else {
                    Ok(n)
                }
            }
            t => Err(ParseError::Unexpected(format!("{t:?}"))),
        }
    }

    fn signed_rational(&mut self) -> Result<BigRational, ParseError> {
        let neg = if self.eat(&Tok::Minus) {
            true
        } else {
            self.eat(&Tok::Plus);
            false
        };
        let r = self.rational()?;
        Ok(if neg { -r } else { r })
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let r = self.signed_rational()?;
        if !r.is_integer() {
            return Err(ParseError::Range);
        }
        r.to_integer().to_i64().ok_or(ParseError::Range)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = Expr::zero();
        let mut neg = self.eat(&Tok::Minus);
        if !neg {
            self.eat(&Tok::Plus);
        }
        loop {
            let t = self.term()?;
            if neg {
                acc -= &t;
            } else {
                acc += &t;
            }
            match self.peek() {
                Some(Tok::Plus) => neg = false,
                Some(Tok::Minus) => neg = true,
                None | Some(Tok::RParen) => return Ok(acc),
                Some(t) => return Err(ParseError::Unexpected(format!("{t:?}"))),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        while self.eat(&Tok::Star) {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().ok_or(ParseError::Eof)? {
            Tok::Num(_) => Ok(Expr::constant(self.rational()?)),
            Tok::Ident(_) => self.atom(),
            Tok::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                self.power_suffix(e)
            }
            t => Err(ParseError::Unexpected(format!("{t:?}"))),
        }
    }

    fn power_suffix(&mut self, mut e: Expr) -> Result<Expr, ParseError> {
        while self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let n = self.int()?;
            let n = u32::try_from(n).map_err(|_| ParseError::Range)?;
            e = e.pow(n);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let name = match self.next()? {
            Tok::Ident(s) => s,
            t => return Err(ParseError::Unexpected(format!("{t:?}"))),
        };
        if name == "t" {
            let mut e = Exponent::int(1);
            if self.eat(&Tok::Caret) {
                e = self.affine()?;
            }
            return Ok(Expr::t_pow(e));
        }
        let sym = ident_symbol(&name)?;
        let mut pw: u32 = 1;
        while self.eat(&Tok::Caret) {
            let n = u32::try_from(self.int()?).map_err(|_| ParseError::Range)?;
            pw *= n;
        }
        Ok(Expr::term(BigRational::one(), Exponent::zero(), Monomial::symbol(sym, pw)))
    }

    fn affine(&mut self) -> Result<Exponent, ParseError> {
        if self.eat(&Tok::LParen) {
            // Any signed sum of rationals and rational*alpha items.
            let (mut p, mut q) = (BigRational::zero(), BigRational::zero());
            let mut first = true;
            loop {
                let mut neg = false;
                let mut signed = false;
                loop {
                    if self.eat(&Tok::Minus) {
                        neg = !neg;
                    } else if !self.eat(&Tok::Plus) {
                        break;
                    }
                    signed = true;
                }
                if !signed && !first {
                    break;
                }
                first = false;
                let (c, is_alpha) = match self.peek() {
                    Some(Tok::Ident(s)) if s == "alpha" => {
                        self.pos += 1;
                        (BigRational::one(), true)
                    }
                    _ => {
                        let c = self.rational()?;
                        if self.peek() == Some(&Tok::Star) {
                            self.pos += 1;
                            match self.next()? {
                                Tok::Ident(s) if s == "alpha" => (c, true),
                                t => return Err(ParseError::Unexpected(format!("{t:?}"))),
                            }
                        } else {
                            (c, false)
                        }
                    }
                };
                let c = if neg { -c } else { c };
                if is_alpha {
                    q += c;
                } else {
                    p += c;
                }
            }
            self.expect(&Tok::RParen)?;
            return Ok(Exponent::new(to_q64(&p)?, to_q64(&q)?));
        }
        let p = self.signed_rational()?;
        let mut q = BigRational::zero();
        // Greedy `+ rational * alpha` continuation.
        if self.peek() == Some(&Tok::Plus) && self.alpha_tail_ahead() {
            self.pos += 1;
            q = self.signed_rational()?;
            self.expect(&Tok::Star)?;
            self.pos += 1;
        }
        Ok(Exponent::new(to_q64(&p)?, to_q64(&q)?))
    }

    fn alpha_tail_ahead(&self) -> bool {
        let mut off = 1;
        if matches!(self.peek_at(off), Some(Tok::Minus) | Some(Tok::Plus)) {
            off += 1;
        }
        if !matches!(self.peek_at(off), Some(Tok::Num(_))) {
            return false;
        }
        off += 1;
        if self.peek_at(off) == Some(&Tok::Slash) {
            off += 2;
        }
        self.peek_at(off) == Some(&Tok::Star)
            && matches!(self.peek_at(off + 1), Some(Tok::Ident(s)) if s == "alpha")
    }
}

fn to_q64(r: &BigRational) -> Result<Q64, ParseError> {
    Ok(Q64::new(
        r.numer().to_i64().ok_or(ParseError::Range)?,
        r.denom().to_i64().ok_or(ParseError::Range)?,
    ))
}

fn ident_symbol(name: &str) -> Result<Symbol, ParseError> {
    if let Some(p) = Param::from_name(name) {
        return Ok(Symbol::Param(p));
    }
    if let Some(n) = name.strip_prefix("gamma") {
        if let Ok(n) = n.parse::<u32>() {
            if n >= 1 {
                return Ok(Symbol::GammaDeriv(n));
            }
        }
    }
    Err(ParseError::UnknownIdent(name.to_string()))
}

pub(super) fn parse_expr(s: &str) -> Result<Expr, ParseError> {
    let mut p = P { toks: lex(s)?, pos: 0 };
    if p.toks.is_empty() {
        return Err(ParseError::Eof);
    }
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Unexpected(format!("{:?}", p.toks[p.pos])));
    }
    Ok(e)
}
