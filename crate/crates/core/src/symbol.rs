//! Real polynomial phase-space symbols `H(p,q) = Σ c_{mn} p^m q^n`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{MetriqError, Result};

pub const MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PolySymbol {
    /// `(m, n) → c_{mn}`; zero coefficients are never stored.
    coeffs: BTreeMap<(u32, u32), f64>,
}

impl PolySymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::zero().with_term(c, 0, 0).expect("degree 0")
    }

    /// `½(p² + q²)`.
    pub fn harmonic() -> Self {
        Self::zero()
            .with_term(0.5, 2, 0)
            .and_then(|s| s.with_term(0.5, 0, 2))
            .expect("degree 2")
    }

    /// Adds `c·p^m·q^n`.
    pub fn with_term(mut self, c: f64, m: u32, n: u32) -> Result<Self> {
        if m + n > MAX_DEGREE {
            return Err(MetriqError::Capacity(format!(
                "monomial p^{m} q^{n} exceeds degree {MAX_DEGREE}"
            )));
        }
        if !c.is_finite() {
            return Err(MetriqError::InvalidParameter {
                name: "symbol",
                reason: format!("non-finite coefficient {c}"),
            });
        }
        let entry = self.coeffs.entry((m, n)).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&(m, n));
        }
        Ok(self)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.coeffs.iter().map(|(&(m, n), &c)| (m, n, c))
    }

    pub fn coeff(&self, m: u32, n: u32) -> f64 {
        self.coeffs.get(&(m, n)).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|&(m, n)| m + n).max().unwrap_or(0)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (m, n, c) in self.terms() {
            out = out.with_term(s * c, m, n).expect("degree preserved");
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, n, c) in other.terms() {
            out = out.with_term(c, m, n).expect("degree bounded by operands");
        }
        out
    }

    pub fn eval(&self, p: f64, q: f64) -> f64 {
        self.terms()
            .map(|(m, n, c)| c * p.powi(m as i32) * q.powi(n as i32))
            .sum()
    }

    /// `∂H/∂p`.
    pub fn d_dp(&self, p: f64, q: f64) -> f64 {
        self.terms()
            .filter(|&(m, _, _)| m > 0)
            .map(|(m, n, c)| c * m as f64 * p.powi(m as i32 - 1) * q.powi(n as i32))
            .sum()
    }

    /// `∂H/∂q`.
    pub fn d_dq(&self, p: f64, q: f64) -> f64 {
        self.terms()
            .filter(|&(_, n, _)| n > 0)
            .map(|(m, n, c)| c * n as f64 * p.powi(m as i32) * q.powi(n as i32 - 1))
            .sum()
    }

    /// Dense Horner form for hot loops.
    pub fn compile(&self) -> CompiledSymbol {
        let deg = self.degree() as usize;
        let mut rows = vec![vec![0.0; deg + 1]; deg + 1];
        for (m, n, c) in self.terms() {
            rows[m as usize][n as usize] = c;
        }
        for r in &mut rows {
            while r.last() == Some(&0.0) {
                r.pop();
            }
        }
        while rows.last().is_some_and(|r| r.is_empty()) {
            rows.pop();
        }
        CompiledSymbol { rows }
    }
}

/// `H(p,q) = Σ_m p^m (Σ_n c_{mn} q^n)`, evaluated by nested Horner.
#[derive(Debug, Clone)]
pub struct CompiledSymbol {
    rows: Vec<Vec<f64>>,
}

impl CompiledSymbol {
    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn eval(&self, p: f64, q: f64) -> f64 {
        let mut acc = 0.0;
        for row in self.rows.iter().rev() {
            let mut inner = 0.0;
            for &c in row.iter().rev() {
                inner = inner * q + c;
            }
            acc = acc * p + inner;
        }
        acc
    }
}

impl fmt::Display for PolySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, n, c)) in self.terms().enumerate() {
            let mag = c.abs();
            match (k, c < 0.0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{mag:?}")?;
            if m > 0 {
                write!(f, "*p^{m}")?;
            }
            if n > 0 {
                write!(f, "*q^{n}")?;
            }
        }
        Ok(())
    }
}

impl From<PolySymbol> for String {
    fn from(s: PolySymbol) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for PolySymbol {
    type Error = MetriqError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for PolySymbol {
    type Err = MetriqError;

    /// Parses `c*p^m*q^n` monomials joined by `+`/`-`, e.g.
    /// `0.5*p^2 + 0.5*q^2 + 0.1*q^4`. Factors may appear in any order and
    /// repeat (`p*p*q`); a bare number is a constant term.
    fn from_str(s: &str) -> Result<Self> {
        Parser::new(s).parse()
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            src: s.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(MetriqError::SymbolParse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<PolySymbol> {
        let mut sym = PolySymbol::zero();
        let mut first = true;
        loop {
            let sign = match self.peek() {
                None if first => return self.err("empty symbol"),
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    1.0
                }
                Some(b'-') => {
                    self.pos += 1;
                    -1.0
                }
                Some(_) if first => 1.0,
                Some(c) => return self.err(format!("expected '+' or '-', found '{}'", c as char)),
            };
            first = false;
            let (c, m, n) = self.term()?;
            sym = sym.with_term(sign * c, m, n)?;
        }
        Ok(sym)
    }

    fn term(&mut self) -> Result<(f64, u32, u32)> {
        let (mut c, mut m, mut n) = (1.0, 0u32, 0u32);
        loop {
            match self.peek() {
                Some(b'p') | Some(b'q') => {
                    let var = self.src[self.pos];
                    self.pos += 1;
                    let k = if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.exponent()?
                    } else {
                        1
                    };
                    if var == b'p' {
                        m += k;
                    } else {
                        n += k;
                    }
                }
                Some(ch) if ch.is_ascii_digit() || ch == b'.' => c *= self.number()?,
                Some(ch) => return self.err(format!("unexpected '{}'", ch as char)),
                None => return self.err("dangling operator"),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if m + n > MAX_DEGREE {
            return self.err(format!("degree {} exceeds {MAX_DEGREE}", m + n));
        }
        Ok((c, m, n))
    }

    fn exponent(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<u32>() {
            Ok(k) => Ok(k),
            Err(_) => self.err("expected a non-negative integer exponent"),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        let text = std::str::from_utf8(&bytes[start..i]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err(format!("malformed number '{text}'"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_anharmonic_oscillator() {
        let s: PolySymbol = "0.5*p^2 + 0.5*q^2 + 0.1*q^4".parse().unwrap();
        assert_eq!(s.coeff(2, 0), 0.5);
        assert_eq!(s.coeff(0, 2), 0.5);
        assert_eq!(s.coeff(0, 4), 0.1);
        assert_eq!(s.degree(), 4);
        assert!((s.eval(1.0, 2.0) - (0.5 + 2.0 + 1.6)).abs() < 1e-14);
    }

    #[test]
    fn parses_edge_forms() {
        assert!("0".parse::<PolySymbol>().unwrap().is_zero());
        let s: PolySymbol = "-p*q + 1e-3*q^2 - 2".parse().unwrap();
        assert_eq!(s.coeff(1, 1), -1.0);
        assert_eq!(s.coeff(0, 2), 1e-3);
        assert_eq!(s.coeff(0, 0), -2.0);
        let s: PolySymbol = "q*p^2*q".parse().unwrap();
        assert_eq!(s.coeff(2, 2), 1.0);
        let s: PolySymbol = "p".parse().unwrap();
        assert_eq!(s.coeff(1, 0), 1.0);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "p +", "x^2", "p^", "2 p", "q^9", "1.2.3*p"] {
            assert!(bad.parse::<PolySymbol>().is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn derivatives_match_definition() {
        let s: PolySymbol = "0.3*p^3*q - 2*q^2 + p".parse().unwrap();
        let (p, q) = (0.7, -1.3);
        assert!((s.d_dp(p, q) - (0.9 * p * p * q + 1.0)).abs() < 1e-14);
        assert!((s.d_dq(p, q) - (0.3 * p.powi(3) - 4.0 * q)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn display_round_trips(cs in proptest::collection::vec((-5.0f64..5.0, 0u32..4, 0u32..4), 0..6)) {
            let mut s = PolySymbol::zero();
            for (c, m, n) in cs {
                s = s.with_term(c, m, n).unwrap();
            }
            let back: PolySymbol = s.to_string().parse().unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn compiled_agrees(cs in proptest::collection::vec((-5.0f64..5.0, 0u32..5, 0u32..4), 0..6),
                           p in -3.0f64..3.0, q in -3.0f64..3.0) {
            let mut s = PolySymbol::zero();
            for (c, m, n) in cs {
                s = s.with_term(c, m, n).unwrap();
            }
            let direct = s.eval(p, q);
            let fast = s.compile().eval(p, q);
            prop_assert!((direct - fast).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }
}
