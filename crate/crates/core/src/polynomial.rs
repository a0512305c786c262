//! Exact bivariate integer polynomials `P(t1, t2)`.
//!
//! Coefficients are arbitrary-precision integers: phase computations need the
//! exact value of `P(t)` for `|t|` up to `2^20` and degree up to ~10, which
//! overflows any machine word. Terms are kept in a canonical sorted map so
//! rendering and iteration order are deterministic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// A single term `c * t1^m1 * t2^m2`. Stored coefficients are never zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub exponent: (u32, u32),
    pub coefficient: BigInt,
}

/// Sparse exact polynomial in `Z[t1, t2]`.
///
/// The term map is keyed by exponent pair; canonical order for rendering is
/// lexicographic on `(m1, m2)` descending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<(u32, u32), BigInt>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("non-integer coefficient at position {pos}")]
    NonIntegerCoefficient { pos: usize },
    #[error("negative exponent at position {pos}")]
    NegativeExponent { pos: usize },
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Builds a polynomial from `(m1, m2, c)` triples, merging duplicates.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), BigInt)>,
    {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exponent: (u32, u32), coefficient: BigInt) {
        if coefficient.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponent).or_insert_with(BigInt::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&exponent);
        }
    }

    /// Terms in canonical order: lexicographic on `(m1, m2)` descending.
    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().rev().map(|(&exponent, c)| Monomial {
            exponent,
            coefficient: c.clone(),
        })
    }

    /// The support `Λ(P)`: exponent pairs with nonzero coefficient,
    /// ascending lexicographic order.
    pub fn support(&self) -> Vec<(u32, u32)> {
        self.terms.keys().copied().collect()
    }

    pub fn coefficient(&self, exponent: (u32, u32)) -> BigInt {
        self.terms.get(&exponent).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Max degree in `t1` (0 for the zero polynomial).
    pub fn deg_t1(&self) -> u32 {
        self.terms.keys().map(|e| e.0).max().unwrap_or(0)
    }

    pub fn deg_t2(&self) -> u32 {
        self.terms.keys().map(|e| e.1).max().unwrap_or(0)
    }

    /// Parses the grammar
    /// `expr := ['-'] term (('+'|'-') term)*; term := factor ('*' factor)*;
    /// factor := INT | VAR('^'INT)?; VAR := 't1'|'t2'`.
    ///
    /// Like terms are merged and zero terms dropped, so the result is
    /// canonical. The leading '-' is accepted so rendered polynomials with a
    /// negative leading coefficient round-trip.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::new(text).parse()
    }

    /// Canonical text form; `parse(render(p)) == p`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, t) in self.terms().enumerate() {
            let neg = t.coefficient.is_negative();
            let mag = t.coefficient.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || t.exponent == (0, 0) {
                factors.push(mag.to_string());
            }
            for (var, m) in [("t1", t.exponent.0), ("t2", t.exponent.1)] {
                if m == 1 {
                    factors.push(var.to_string());
                } else if m > 1 {
                    factors.push(format!("{var}^{m}"));
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }

    /// Exact evaluation at an integer point.
    pub fn eval_exact(&self, t: (i64, i64)) -> BigInt {
        let t1 = BigInt::from(t.0);
        let t2 = BigInt::from(t.1);
        // Horner in t1 over the t2-coefficient polynomials.
        let mut acc = BigInt::zero();
        let mut last_m1: Option<u32> = None;
        for m in self.terms() {
            let (m1, m2) = m.exponent;
            if let Some(prev) = last_m1 {
                for _ in m1..prev {
                    acc *= &t1;
                }
            }
            acc += m.coefficient * t2.pow(m2);
            last_m1 = Some(m1);
        }
        if let Some(m1) = last_m1 {
            for _ in 0..m1 {
                acc *= &t1;
            }
        }
        acc
    }

    /// `P(t) mod q` in `[0, q)`, computed in modular arithmetic throughout.
    pub fn eval_mod(&self, t: (i64, i64), q: u64) -> u64 {
        assert!(q >= 1, "modulus must be positive");
        if q == 1 {
            return 0;
        }
        let t1 = t.0.rem_euclid(q as i64) as u64;
        let t2 = t.1.rem_euclid(q as i64) as u64;
        let mut acc: u64 = 0;
        let mut last_m1: Option<u32> = None;
        for m in self.terms() {
            let (m1, m2) = m.exponent;
            if let Some(prev) = last_m1 {
                for _ in m1..prev {
                    acc = mul_mod(acc, t1, q);
                }
            }
            let c = reduce_bigint(&m.coefficient, q);
            acc = (acc + mul_mod(c, pow_mod(t2, m2, q), q)) % q;
            last_m1 = Some(m1);
        }
        if let Some(m1) = last_m1 {
            for _ in 0..m1 {
                acc = mul_mod(acc, t1, q);
            }
        }
        acc
    }

    /// Substitutes `t2 -> t2 + r` exactly (binomial expansion).
    pub fn shift_t2(&self, r: i64) -> Polynomial {
        let r = BigInt::from(r);
        let mut out = Polynomial::zero();
        for m in self.terms() {
            let (m1, n) = m.exponent;
            // (t2 + r)^n = sum_k C(n,k) r^(n-k) t2^k
            let mut binom = BigInt::one();
            for k in 0..=n {
                out.add_term((m1, k), &m.coefficient * &binom * r.pow(n - k));
                if k < n {
                    binom = binom * (n - k) / (k + 1);
                }
            }
        }
        out
    }

    /// `P(t1, t2+r) - P(t1, t2)`, the second-variable difference operator.
    pub fn difference_t2(&self, r: i64) -> Polynomial {
        let mut out = self.shift_t2(r);
        for (e, c) in &self.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }

    /// The coefficient polynomial `R_{m1}(t2)` of `t1^{m1}`, as `(m2, c)` pairs.
    pub fn t1_coefficient_rows(&self) -> Vec<(u32, Vec<(u32, BigInt)>)> {
        let mut rows: BTreeMap<u32, Vec<(u32, BigInt)>> = BTreeMap::new();
        for (&(m1, m2), c) in &self.terms {
            rows.entry(m1).or_default().push((m2, c.clone()));
        }
        rows.into_iter().collect()
    }

    /// The scale constant `C(P)`: the ceiling of ten times the sum of all
    /// ordered coefficient-magnitude ratios, combined with the dyadic
    /// threshold `2^p` covering the largest positive integer `t2*` at which
    /// `P(t1, t2*)` vanishes identically. Returns 10 at minimum.
    pub fn coefficient_ratio_constant(&self) -> BigInt {
        assert!(!self.is_zero(), "C(P) is defined for nonzero P");
        let mut ratio_sum = BigRational::zero();
        for a in self.terms.values() {
            for b in self.terms.values() {
                ratio_sum += BigRational::new(a.abs(), b.abs());
            }
        }
        let scaled = ratio_sum * BigInt::from(10);
        let ratio_term = scaled.ceil().to_integer();
        let pow_term = match self.largest_annihilating_t2() {
            Some(t2s) => {
                // smallest power of two >= t2*
                let bits = t2s.bits();
                let is_pow2 = (&t2s & (&t2s - BigInt::one())).is_zero();
                let p = if is_pow2 { bits - 1 } else { bits };
                BigInt::one() << p
            }
            None => BigInt::one(),
        };
        ratio_term.max(pow_term)
    }

    /// Largest `t2* > 0` with `P(t1, t2*) = 0` for all `t1`, i.e. a common
    /// integer root of every `R_{m1}`. Uses a polynomial gcd of the rows and
    /// then integer root extraction; root candidates beyond the trial-division
    /// window (1e7) of the trailing coefficient are not searched.
    pub fn largest_annihilating_t2(&self) -> Option<BigInt> {
        let rows = self.t1_coefficient_rows();
        let mut g: Option<Vec<BigInt>> = None;
        for (_, row) in &rows {
            let dense = dense_univariate(row);
            g = Some(match g {
                None => dense,
                Some(prev) => poly_gcd(prev, dense),
            });
        }
        let g = g?;
        if g.len() <= 1 {
            return None; // constant: no roots
        }
        positive_integer_roots(&g).into_iter().max()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub(crate) fn reduce_bigint(c: &BigInt, q: u64) -> u64 {
    let r = c.mod_floor(&BigInt::from(q));
    r.to_u64().expect("mod_floor result fits in u64")
}

pub(crate) fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u32, q: u64) -> u64 {
    let mut acc = 1 % q;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, q);
        }
        b = mul_mod(b, b, q);
        e >>= 1;
    }
    acc
}

fn dense_univariate(row: &[(u32, BigInt)]) -> Vec<BigInt> {
    let deg = row.iter().map(|(m, _)| *m).max().unwrap_or(0) as usize;
    let mut out = vec![BigInt::zero(); deg + 1];
    for (m, c) in row {
        out[*m as usize] = c.clone();
    }
    out
}

fn trim(mut p: Vec<BigInt>) -> Vec<BigInt> {
    while p.len() > 1 && p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
    p
}

fn content(p: &[BigInt]) -> BigInt {
    let mut g = BigInt::zero();
    for c in p {
        g = g.gcd(c);
    }
    if g.is_zero() {
        BigInt::one()
    } else {
        g
    }
}

/// Primitive gcd over Z via pseudo-remainder sequence. Only degrees <= ~10
/// reach this, so the naive sequence is fine.
fn poly_gcd(a: Vec<BigInt>, b: Vec<BigInt>) -> Vec<BigInt> {
    let mut a = trim(a);
    let mut b = trim(b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.len() == 1 && b[0].is_zero() {
            let c = content(&a);
            for v in &mut a {
                *v /= &c;
            }
            return a;
        }
        let r = pseudo_rem(&a, &b);
        a = b;
        b = trim(r);
        let c = content(&b);
        if !c.is_one() && !(b.len() == 1 && b[0].is_zero()) {
            for v in &mut b {
                *v /= &c;
            }
        }
    }
}

fn pseudo_rem(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r: Vec<BigInt> = a.to_vec();
    let db = b.len() - 1;
    let lb = b.last().unwrap().clone();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let lr = r.last().unwrap().clone();
        for v in &mut r {
            *v *= &lb;
        }
        for k in 0..=db {
            let idx = dr - db + k;
            let sub = &lr * &b[k];
            r[idx] -= sub;
        }
        r = trim(r);
        if dr == db {
            break;
        }
    }
    if r.len() > db {
        // degree did not drop; remainder is zero polynomial
        return vec![BigInt::zero()];
    }
    r
}

fn eval_univariate(p: &[BigInt], x: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Positive integer roots of a dense univariate polynomial. Candidates are
/// divisors of the trailing nonzero coefficient found by trial division.
fn positive_integer_roots(p: &[BigInt]) -> Vec<BigInt> {
    let mut low = 0usize;
    while low < p.len() && p[low].is_zero() {
        low += 1;
    }
    if low >= p.len() {
        return Vec::new();
    }
    let trailing = p[low].abs();
    let mut candidates = divisors_trial(&trailing, 10_000_000);
    candidates.sort();
    candidates.dedup();
    candidates
        .into_iter()
        .filter(|d| d > &BigInt::zero() && eval_univariate(p, d).is_zero())
        .collect()
}

fn divisors_trial(n: &BigInt, limit: u64) -> Vec<BigInt> {
    let mut divs = vec![BigInt::one()];
    let mut rest = n.clone();
    let mut p = 2u64;
    while BigInt::from(p) * BigInt::from(p) <= rest && p <= limit {
        let bp = BigInt::from(p);
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            let mut extra: Vec<BigInt> = divs.iter().map(|d| d * &bp).collect();
            divs.append(&mut extra);
            divs.sort();
            divs.dedup();
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > BigInt::one() {
        let mut extra: Vec<BigInt> = divs.iter().map(|d| d * &rest).collect();
        divs.append(&mut extra);
    }
    divs.sort();
    divs.dedup();
    divs
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn parse(mut self) -> Result<Polynomial, ParseError> {
        let mut poly = Polynomial::zero();
        self.skip_ws();
        let mut sign = if self.eat(b'-') {
            -1
        } else {
            self.eat(b'+');
            1
        };
        loop {
            let (exp, coeff) = self.term()?;
            poly.add_term(exp, coeff * sign);
            self.skip_ws();
            if self.pos >= self.bytes.len() {
                return Ok(poly);
            }
            sign = match self.bytes[self.pos] {
                b'+' => 1,
                b'-' => -1,
                b'.' => {
                    return Err(ParseError::NonIntegerCoefficient { pos: self.pos });
                }
                c => {
                    return Err(ParseError::Syntax {
                        pos: self.pos,
                        msg: format!("expected '+' or '-', found {:?}", c as char),
                    });
                }
            };
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<((u32, u32), BigInt), ParseError> {
        let mut exp = (0u32, 0u32);
        let mut coeff = BigInt::one();
        loop {
            self.factor(&mut exp, &mut coeff)?;
            self.skip_ws();
            if !self.eat(b'*') {
                return Ok((exp, coeff));
            }
        }
    }

    fn factor(&mut self, exp: &mut (u32, u32), coeff: &mut BigInt) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Err(ParseError::Syntax {
                pos: self.pos,
                msg: "expected factor, found end of input".into(),
            });
        }
        match self.bytes[self.pos] {
            b'0'..=b'9' => {
                let n = self.integer()?;
                if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
                    return Err(ParseError::NonIntegerCoefficient { pos: self.pos });
                }
                *coeff *= n;
                Ok(())
            }
            b't' => {
                let var = self.variable()?;
                let e = if self.eat(b'^') {
                    self.exponent()?
                } else {
                    1
                };
                if var == 1 {
                    exp.0 = exp.0.checked_add(e).ok_or(ParseError::Syntax {
                        pos: self.pos,
                        msg: "exponent overflow".into(),
                    })?;
                } else {
                    exp.1 = exp.1.checked_add(e).ok_or(ParseError::Syntax {
                        pos: self.pos,
                        msg: "exponent overflow".into(),
                    })?;
                }
                Ok(())
            }
            c => Err(ParseError::Syntax {
                pos: self.pos,
                msg: format!("expected factor, found {:?}", c as char),
            }),
        }
    }

    fn variable(&mut self) -> Result<u8, ParseError> {
        let start = self.pos;
        self.pos += 1; // consume 't'
        match self.bytes.get(self.pos) {
            Some(b'1') => {
                self.pos += 1;
                Ok(1)
            }
            Some(b'2') => {
                self.pos += 1;
                Ok(2)
            }
            _ => Err(ParseError::Syntax {
                pos: start,
                msg: "expected variable 't1' or 't2'".into(),
            }),
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        s.parse::<BigInt>().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: "invalid integer literal".into(),
        })
    }

    fn exponent(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'-' {
            return Err(ParseError::NegativeExponent { pos: self.pos });
        }
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_digit() {
            return Err(ParseError::Syntax {
                pos: self.pos,
                msg: "expected exponent".into(),
            });
        }
        let n = self.integer()?;
        n.to_u32().ok_or(ParseError::Syntax {
            pos: self.pos,
            msg: "exponent too large".into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.pos < self.bytes.len() && self.bytes[self.pos] == c {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}
