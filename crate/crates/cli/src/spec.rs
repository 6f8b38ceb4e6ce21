//! Hand-rolled parsers for the little polynomial languages accepted on the
//! command line: g-function specs over `theta` / `zeta` / `conj(zeta)`,
//! estimator literals over `a` / `adag` / `b` / `bdag`, and complex number
//! literals for grid points.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use qbhatt::bhatt::GFunction;
use qbhatt::poly::NormalOrderedPoly;
use qbhatt::Error;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(input: &str) -> Result<Vec<Token>, Error> {
    let mut out = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // Scientific notation: 1e-3, 2.5e4.
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
                let value: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
                if i < chars.len() && chars[i] == 'i' {
                    i += 1;
                    out.push(Token::Imag(value));
                } else {
                    out.push(Token::Num(value));
                }
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if word == "i" {
                    out.push(Token::Imag(1.0));
                } else {
                    out.push(Token::Ident(word));
                }
            }
            other => {
                return Err(Error::Parse(format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(out)
}

/// Commutative polynomial in theta (exponent `t`) or zeta / conj(zeta)
/// (exponents `m`, `n`); a spec may use theta or the zeta pair, not both.
#[derive(Debug, Clone, PartialEq)]
struct GPoly {
    terms: BTreeMap<(u32, u32, u32), C64>,
}

impl GPoly {
    fn constant(c: C64) -> Self {
        let mut terms = BTreeMap::new();
        if c != C64::new(0.0, 0.0) {
            terms.insert((0, 0, 0), c);
        }
        Self { terms }
    }

    fn variable(t: u32, m: u32, n: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((t, m, n), C64::new(1.0, 0.0));
        Self { terms }
    }

    fn add_scaled(mut self, other: &Self, scale: f64) -> Self {
        for (&k, &v) in &other.terms {
            let e = self.terms.entry(k).or_insert_with(|| C64::new(0.0, 0.0));
            *e += v * scale;
        }
        self.terms.retain(|_, v| v.norm() > 0.0);
        self
    }

    fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<(u32, u32, u32), C64> = BTreeMap::new();
        for (&(t1, m1, n1), &c1) in &self.terms {
            for (&(t2, m2, n2), &c2) in &other.terms {
                let e = terms
                    .entry((t1 + t2, m1 + m2, n1 + n2))
                    .or_insert_with(|| C64::new(0.0, 0.0));
                *e += c1 * c2;
            }
        }
        terms.retain(|_, v| v.norm() > 0.0);
        Self { terms }
    }

    fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(C64::new(1.0, 0.0));
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }
}

struct Parser<'a, V> {
    tokens: &'a [Token],
    pos: usize,
    atom: &'a dyn Fn(&str) -> Result<V, Error>,
}

trait PolyOps: Sized + Clone {
    fn from_const(c: C64) -> Self;
    fn padd(&self, other: &Self, scale: f64) -> Self;
    fn pmul(&self, other: &Self) -> Self;
    fn ppow(&self, e: u32) -> Self;
}

impl PolyOps for GPoly {
    fn from_const(c: C64) -> Self {
        GPoly::constant(c)
    }
    fn padd(&self, other: &Self, scale: f64) -> Self {
        self.clone().add_scaled(other, scale)
    }
    fn pmul(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn ppow(&self, e: u32) -> Self {
        self.pow(e)
    }
}

impl PolyOps for NormalOrderedPoly {
    fn from_const(c: C64) -> Self {
        NormalOrderedPoly::constant(c)
    }
    fn padd(&self, other: &Self, scale: f64) -> Self {
        self.add(&other.scale(C64::new(scale, 0.0)))
    }
    fn pmul(&self, other: &Self) -> Self {
        self.multiply(other)
    }
    fn ppow(&self, e: u32) -> Self {
        self.pow(e)
    }
}

impl<'a, V: PolyOps> Parser<'a, V> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<V, Error> {
        let mut sign = 1.0;
        while matches!(self.peek(), Some(Token::Plus) | Some(Token::Minus)) {
            if let Some(Token::Minus) = self.bump() {
                sign = -sign;
            }
        }
        let first = self.term()?;
        let mut acc = V::from_const(C64::new(0.0, 0.0)).padd(&first, sign);
        while let Some(tok) = self.peek() {
            let sign = match tok {
                Token::Plus => 1.0,
                Token::Minus => -1.0,
                _ => break,
            };
            self.bump();
            let t = self.term()?;
            acc = acc.padd(&t, sign);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<V, Error> {
        let mut acc = self.factor()?;
        while matches!(self.peek(), Some(Token::Star)) {
            self.bump();
            let f = self.factor()?;
            acc = acc.pmul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<V, Error> {
        let base = self.atom_expr()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.bump();
            match self.bump() {
                Some(Token::Num(n)) if n >= 0.0 && n.fract() == 0.0 => Ok(base.ppow(n as u32)),
                other => Err(Error::Parse(format!(
                    "exponent must be a non-negative integer, got {other:?}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom_expr(&mut self) -> Result<V, Error> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(V::from_const(C64::new(v, 0.0))),
            Some(Token::Imag(v)) => Ok(V::from_const(C64::new(0.0, v))),
            Some(Token::Minus) => {
                let inner = self.atom_expr()?;
                Ok(V::from_const(C64::new(0.0, 0.0)).padd(&inner, -1.0))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::Parse("missing `)`".into())),
                }
            }
            Some(Token::Ident(name)) => {
                if name == "conj" {
                    let ok = matches!(self.bump(), Some(Token::LParen))
                        && matches!(self.bump(), Some(Token::Ident(ref w)) if w == "zeta")
                        && matches!(self.bump(), Some(Token::RParen));
                    if !ok {
                        return Err(Error::Parse("conj only accepts `conj(zeta)`".into()));
                    }
                    (self.atom)("conj(zeta)")
                } else {
                    (self.atom)(&name)
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

fn parse_with<V: PolyOps>(
    input: &str,
    atom: &dyn Fn(&str) -> Result<V, Error>,
) -> Result<V, Error> {
    let tokens = lex(input)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        atom,
    };
    let v = p.expr()?;
    if p.pos != tokens.len() {
        return Err(Error::Parse(format!(
            "trailing input at token {}",
            p.pos + 1
        )));
    }
    Ok(v)
}

/// Parsed g spec, not yet committed to the real or complex representation.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedG {
    /// Polynomial in theta, coefficient per power.
    Real(Vec<f64>),
    /// Coefficients over zeta^m conj(zeta)^n.
    Complex(BTreeMap<(u32, u32), C64>),
    /// No variables at all; usable as either kind.
    Constant(C64),
}

impl ParsedG {
    pub fn into_real(self) -> Result<GFunction, Error> {
        match self {
            ParsedG::Real(v) => Ok(GFunction::real(v)),
            ParsedG::Constant(c) => {
                if c.im.abs() > 1e-12 {
                    return Err(Error::Parse("real g has an imaginary constant".into()));
                }
                Ok(GFunction::real(vec![c.re]))
            }
            ParsedG::Complex(_) => Err(Error::Parse(
                "this command needs a real g (polynomial in theta)".into(),
            )),
        }
    }

    pub fn into_complex(self) -> Result<GFunction, Error> {
        match self {
            ParsedG::Complex(m) => Ok(GFunction::complex(m)),
            ParsedG::Constant(c) => Ok(GFunction::complex([((0, 0), c)])),
            ParsedG::Real(_) => Err(Error::Parse(
                "this command needs a complex g (polynomial in zeta, conj(zeta))".into(),
            )),
        }
    }

    pub fn is_real_kind(&self) -> bool {
        matches!(self, ParsedG::Real(_))
    }

    pub fn is_complex_kind(&self) -> bool {
        matches!(self, ParsedG::Complex(_))
    }
}

/// Parse a g-function spec such as `theta^2`, `2*zeta - 0.5i*conj(zeta)^2`,
/// or `zeta*conj(zeta)`.
pub fn parse_g(input: &str) -> Result<ParsedG, Error> {
    let atom = |name: &str| -> Result<GPoly, Error> {
        match name {
            "theta" => Ok(GPoly::variable(1, 0, 0)),
            "zeta" => Ok(GPoly::variable(0, 1, 0)),
            "conj(zeta)" => Ok(GPoly::variable(0, 0, 1)),
            other => Err(Error::Parse(format!(
                "unknown symbol `{other}` (expected theta, zeta, conj(zeta))"
            ))),
        }
    };
    let poly = parse_with(input, &atom)?;
    let uses_theta = poly.terms.keys().any(|&(t, _, _)| t > 0);
    let uses_zeta = poly.terms.keys().any(|&(_, m, n)| m > 0 || n > 0);
    if uses_theta && uses_zeta {
        return Err(Error::Parse(
            "g may use either theta or zeta/conj(zeta), not both".into(),
        ));
    }
    if uses_theta {
        let deg = poly.terms.keys().map(|&(t, _, _)| t).max().unwrap_or(0);
        let mut coeffs = vec![0.0; deg as usize + 1];
        for (&(t, _, _), &c) in &poly.terms {
            if c.im.abs() > 1e-12 {
                return Err(Error::Parse(format!(
                    "coefficient of theta^{t} must be real, got {c}"
                )));
            }
            coeffs[t as usize] = c.re;
        }
        Ok(ParsedG::Real(coeffs))
    } else if uses_zeta {
        let map = poly
            .terms
            .iter()
            .map(|(&(_, m, n), &c)| ((m, n), c))
            .collect();
        Ok(ParsedG::Complex(map))
    } else {
        let c = poly
            .terms
            .get(&(0, 0, 0))
            .copied()
            .unwrap_or(C64::new(0.0, 0.0));
        Ok(ParsedG::Constant(c))
    }
}

/// Parse an estimator literal such as `adag*a` or `0.5*(a + adag)^2 - 1`.
pub fn parse_estimator(input: &str) -> Result<NormalOrderedPoly, Error> {
    let atom = |name: &str| -> Result<NormalOrderedPoly, Error> {
        match name {
            "a" => Ok(NormalOrderedPoly::a()),
            "adag" => Ok(NormalOrderedPoly::a_dag()),
            "b" => Ok(NormalOrderedPoly::b()),
            "bdag" => Ok(NormalOrderedPoly::b_dag()),
            other => Err(Error::Parse(format!(
                "unknown operator `{other}` (expected a, adag, b, bdag)"
            ))),
        }
    };
    parse_with(input, &atom)
}

/// Parse one grid entry: `0.3`, `-0.1+0.4i`, `0.5i`, ...
pub fn parse_complex(input: &str) -> Result<C64, Error> {
    let atom = |name: &str| -> Result<GPoly, Error> {
        Err(Error::Parse(format!(
            "grid entries must be numeric, found `{name}`"
        )))
    };
    let poly: GPoly = parse_with(input.trim(), &atom)?;
    Ok(poly
        .terms
        .get(&(0, 0, 0))
        .copied()
        .unwrap_or(C64::new(0.0, 0.0)))
}

/// Parse a comma-separated grid.
pub fn parse_grid(input: &str) -> Result<Vec<C64>, Error> {
    let entries: Vec<C64> = input
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_complex)
        .collect::<Result<_, _>>()?;
    if entries.is_empty() {
        return Err(Error::Parse("grid is empty".into()));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn real_spec() {
        match parse_g("theta^2 - 2*theta + 1").unwrap() {
            ParsedG::Real(v) => assert_eq!(v, vec![1.0, -2.0, 1.0]),
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn complex_spec_with_imag_coeff() {
        match parse_g("zeta*conj(zeta) + 0.5i*zeta^2").unwrap() {
            ParsedG::Complex(m) => {
                assert_eq!(m[&(1, 1)], c(1.0, 0.0));
                assert_eq!(m[&(2, 0)], c(0.0, 0.5));
            }
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn constant_spec() {
        assert_eq!(parse_g("1").unwrap(), ParsedG::Constant(c(1.0, 0.0)));
        assert_eq!(parse_g("2 - 2").unwrap(), ParsedG::Constant(c(0.0, 0.0)));
    }

    #[test]
    fn mixed_variables_rejected() {
        assert!(parse_g("theta*zeta").is_err());
    }

    #[test]
    fn garbage_rejected() {
        assert!(parse_g("theta^^2").is_err());
        assert!(parse_g("frob").is_err());
        assert!(parse_g("").is_err());
        assert!(parse_g("theta +").is_err());
    }

    #[test]
    fn estimator_literal() {
        let p = parse_estimator("adag*a - 1").unwrap();
        assert_eq!(p.terms()[&(1, 1, 0, 0)], c(1.0, 0.0));
        assert_eq!(p.terms()[&(0, 0, 0, 0)], c(-2.0, 0.0));
    }

    #[test]
    fn estimator_square_expands() {
        let p = parse_estimator("(a + adag)^2").unwrap();
        assert_eq!(p.terms()[&(1, 1, 0, 0)], c(2.0, 0.0));
        assert_eq!(p.terms()[&(0, 0, 0, 0)], c(-1.0, 0.0));
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.3").unwrap(), c(0.3, 0.0));
        assert_eq!(parse_complex("0.3+0.2i").unwrap(), c(0.3, 0.2));
        assert_eq!(parse_complex("-0.1-0.4i").unwrap(), c(-0.1, -0.4));
        assert_eq!(parse_complex("0.5i").unwrap(), c(0.0, 0.5));
        assert_eq!(
            parse_grid("0, 0.3, 0.3+0.2i").unwrap(),
            vec![c(0.0, 0.0), c(0.3, 0.0), c(0.3, 0.2)]
        );
    }
}
