//! Exact coefficient arithmetic.
//!
//! Two modes are supported and never mixed:
//!
//! * **generic** — rational functions in the formal variable `v = q^{1/2}`
//!   over the rationals, kept as a canonically reduced fraction of Laurent
//!   polynomials. Quantum-integer denominators never vanish here.
//! * **root(N)** — the cyclotomic field `Q(ζ_N)` with `v = ζ_N`, an element
//!   being a vector of rationals of length `φ(N)` reduced modulo the N-th
//!   cyclotomic polynomial.
//!
//! All comparisons are exact; there is no floating point anywhere.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary-precision rational, the base ring of every coefficient.
pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("inexact division: quotient is not a Laurent polynomial")]
    InexactDivision,
    #[error("operands have different scalar modes")]
    ModeMismatch,
    #[error("denominator vanishes at the chosen root of unity")]
    PoleAtRoot,
    #[error("malformed scalar data: {0}")]
    Malformed(String),
}

pub(crate) fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

// ---------------------------------------------------------------------------
// Dense polynomials over the rationals
// ---------------------------------------------------------------------------

/// Dense polynomial over `Rat`, used for cyclotomic polynomials and as the
/// numerator/denominator store of generic-mode scalars. The coefficient of
/// `x^i` sits at index `i`; no trailing zeros are kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn zero() -> Self {
        RatPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        RatPoly { coeffs: vec![Rat::one()] }
    }

    pub fn x() -> Self {
        RatPoly { coeffs: vec![Rat::zero(), Rat::one()] }
    }

    pub fn constant(c: Rat) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn from_int_coeffs(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    fn leading(&self) -> &Rat {
        self.coeffs.last().expect("leading coefficient of zero polynomial")
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) + other.coeff(i));
        }
        Self::from_coeffs(out)
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) - other.coeff(i));
        }
        Self::from_coeffs(out)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self::from_coeffs(out)
    }

    pub fn scale(&self, c: &Rat) -> RatPoly {
        if c.is_zero() {
            return Self::zero();
        }
        RatPoly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Multiply by `x^k`.
    pub fn shift_up(&self, k: usize) -> RatPoly {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Rat::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        RatPoly { coeffs }
    }

    /// Euclidean division; panics if `divisor` is zero.
    pub fn divrem(&self, divisor: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let dd = divisor.degree().unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() < dd + 1 {
            return (Self::zero(), self.clone());
        }
        let mut quot = vec![Rat::zero(); rem.len() - dd];
        let lead = divisor.leading().clone();
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let f = &rem[i] / &lead;
            quot[i - dd] = f.clone();
            rem[i] = Rat::zero();
            for (j, c) in divisor.coeffs.iter().enumerate().take(dd) {
                rem[i - dd + j] -= &f * c;
            }
        }
        (Self::from_coeffs(quot), Self::from_coeffs(rem))
    }

    /// Exact quotient; panics if the division leaves a remainder.
    fn exact_div(&self, divisor: &RatPoly) -> RatPoly {
        let (q, r) = self.divrem(divisor);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    pub fn monic(&self) -> RatPoly {
        if self.is_zero() {
            return Self::zero();
        }
        let lead = self.leading().clone();
        self.scale(&(Rat::one() / lead))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Extended gcd: returns `(g, s, t)` with `s*self + t*other = g`, `g` monic.
    pub fn xgcd(&self, other: &RatPoly) -> (RatPoly, RatPoly, RatPoly) {
        let mut r0 = self.clone();
        let mut r1 = other.clone();
        let (mut s0, mut s1) = (RatPoly::one(), RatPoly::zero());
        let (mut t0, mut t1) = (RatPoly::zero(), RatPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            r0 = std::mem::replace(&mut r1, r);
            let s = s0.sub(&q.mul(&s1));
            s0 = std::mem::replace(&mut s1, s);
            let t = t0.sub(&q.mul(&t1));
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let lead = r0.leading().clone();
        let inv = Rat::one() / lead;
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    pub fn eval_rat(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Cyclotomic polynomials
// ---------------------------------------------------------------------------

fn divisors(n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    for d in 1..=n {
        if n % d == 0 {
            out.push(d);
        }
    }
    out
}

/// Euler totient by trial factorization.
pub fn euler_phi(n: u32) -> u32 {
    let mut n = n;
    let mut phi = n;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            phi = phi / p * (p - 1);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        phi = phi / n * (n - 1);
    }
    phi
}

fn cyclo_cache() -> &'static RwLock<HashMap<u32, Arc<RatPoly>>> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<RatPoly>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cyclotomic_cached(n: u32) -> Arc<RatPoly> {
    if let Some(p) = cyclo_cache().read().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by the product of Phi_d over proper divisors d of n.
    let poly = if n == 1 {
        RatPoly::from_int_coeffs(&[-1, 1])
    } else {
        let mut xn1 = vec![Rat::zero(); n as usize + 1];
        xn1[0] = -Rat::one();
        xn1[n as usize] = Rat::one();
        let mut acc = RatPoly::from_coeffs(xn1);
        for d in divisors(n) {
            if d < n {
                acc = acc.exact_div(&cyclotomic_cached(d));
            }
        }
        acc
    };
    let arc = Arc::new(poly);
    // Concurrent insertions of the same key compute equal values.
    cyclo_cache().write().unwrap().entry(n).or_insert_with(|| arc.clone());
    arc
}

/// The N-th cyclotomic polynomial `Φ_N`. Requires `n ≥ 1`.
pub fn cyclotomic_polynomial(n: u32) -> RatPoly {
    assert!(n >= 1, "cyclotomic polynomial requires N >= 1");
    (*cyclotomic_cached(n)).clone()
}

// ---------------------------------------------------------------------------
// Root-of-unity field data
// ---------------------------------------------------------------------------

/// Shared per-N data for arithmetic in `Q(ζ_N)`.
#[derive(Debug)]
pub struct RootData {
    order: u32,
    phi: usize,
    /// Reduction of `x^phi` modulo `Φ_N`.
    xphi: Vec<Rat>,
    /// Reductions of `x^{phi+j}` modulo `Φ_N`, for `j = 0 .. phi-1`.
    pow: Vec<Vec<Rat>>,
}

impl RootData {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn phi(&self) -> usize {
        self.phi
    }
}

fn root_cache() -> &'static RwLock<HashMap<u32, Arc<RootData>>> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<RootData>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

pub(crate) fn root_data(n: u32) -> Arc<RootData> {
    assert!(n >= 1, "root of unity order must be >= 1");
    if let Some(d) = root_cache().read().unwrap().get(&n) {
        return d.clone();
    }
    let modulus = cyclotomic_cached(n);
    let phi = modulus.degree().unwrap();
    let mut pow: Vec<Vec<Rat>> = Vec::with_capacity(phi.saturating_sub(1));
    // x^{phi} = -(lower-degree part of Phi); higher powers by shifting.
    let xphi: Vec<Rat> = (0..phi).map(|i| -modulus.coeff(i)).collect();
    let mut cur = xphi.clone();
    for _ in 0..phi.saturating_sub(1) {
        pow.push(cur.clone());
        // multiply by x and reduce
        let top = cur[phi - 1].clone();
        let mut next = vec![Rat::zero(); phi];
        for i in (1..phi).rev() {
            next[i] = cur[i - 1].clone();
        }
        if !top.is_zero() {
            for (i, item) in next.iter_mut().enumerate() {
                *item += &top * -modulus.coeff(i);
            }
        }
        cur = next;
    }
    let arc = Arc::new(RootData { order: n, phi, xphi, pow });
    root_cache().write().unwrap().entry(n).or_insert_with(|| arc.clone());
    arc
}

// ---------------------------------------------------------------------------
// Scalar mode
// ---------------------------------------------------------------------------

/// The arithmetic environment of a scalar: formal variable or fixed root.
#[derive(Clone, Debug)]
pub enum Mode {
    Generic,
    Root(Arc<RootData>),
}

impl Mode {
    pub fn root(n: u32) -> Mode {
        Mode::Root(root_data(n))
    }

    pub fn is_root(&self) -> bool {
        matches!(self, Mode::Root(_))
    }

    /// Order N of `v` in root mode.
    pub fn order(&self) -> Option<u32> {
        match self {
            Mode::Generic => None,
            Mode::Root(d) => Some(d.order),
        }
    }
}

impl PartialEq for Mode {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Mode::Generic, Mode::Generic) => true,
            (Mode::Root(a), Mode::Root(b)) => a.order == b.order,
            _ => false,
        }
    }
}

impl Eq for Mode {}

// ---------------------------------------------------------------------------
// CycScalar
// ---------------------------------------------------------------------------

/// An exact coefficient: a reduced rational function of `v` in generic mode,
/// or an element of `Q(ζ_N)` in root mode.
#[derive(Clone)]
pub struct CycScalar {
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    /// `v^shift * num(v) / den(v)`; invariants: if `num` is zero then
    /// `shift = 0` and `den = 1`; otherwise `num` has nonzero constant term,
    /// `den` is monic with nonzero constant term and `gcd(num, den) = 1`.
    Generic { shift: i64, num: RatPoly, den: RatPoly },
    /// Coefficient vector of length `φ(N)` in the power basis of `ζ_N`.
    Root { data: Arc<RootData>, coeffs: Vec<Rat> },
}

impl PartialEq for CycScalar {
    fn eq(&self, other: &Self) -> bool {
        match (&self.repr, &other.repr) {
            (
                Repr::Generic { shift: s1, num: n1, den: d1 },
                Repr::Generic { shift: s2, num: n2, den: d2 },
            ) => s1 == s2 && n1 == n2 && d1 == d2,
            (Repr::Root { data: a, coeffs: c1 }, Repr::Root { data: b, coeffs: c2 }) => {
                a.order == b.order && c1 == c2
            }
            _ => false,
        }
    }
}

impl Eq for CycScalar {}

fn generic_canonical(shift: i64, num: RatPoly, den: RatPoly) -> CycScalar {
    assert!(!den.is_zero(), "zero denominator");
    if num.is_zero() {
        return CycScalar {
            repr: Repr::Generic { shift: 0, num: RatPoly::zero(), den: RatPoly::one() },
        };
    }
    let low = num.coeffs().iter().position(|c| !c.is_zero()).unwrap();
    let num = RatPoly::from_coeffs(num.coeffs()[low..].to_vec());
    let shift = shift + low as i64;
    let g = num.gcd(&den);
    let (num, den) = if g.degree() == Some(0) {
        (num, den)
    } else {
        (num.exact_div(&g), den.exact_div(&g))
    };
    let lead = den.leading().clone();
    let (num, den) = if lead.is_one() {
        (num, den)
    } else {
        let inv = Rat::one() / lead;
        (num.scale(&inv), den.scale(&inv))
    };
    CycScalar { repr: Repr::Generic { shift, num, den } }
}

fn root_mul_x(data: &Arc<RootData>, c: &[Rat]) -> Vec<Rat> {
    let phi = data.phi;
    let mut out = vec![Rat::zero(); phi];
    for i in (1..phi).rev() {
        out[i] = c[i - 1].clone();
    }
    let top = &c[phi - 1];
    if !top.is_zero() {
        for (i, r) in data.xphi.iter().enumerate() {
            if !r.is_zero() {
                out[i] += top * r;
            }
        }
    }
    out
}

fn root_mul_coeffs(data: &Arc<RootData>, a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let phi = data.phi;
    let mut prod = vec![Rat::zero(); 2 * phi - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                prod[i + j] += x * y;
            }
        }
    }
    let mut out: Vec<Rat> = prod[..phi].to_vec();
    for j in 0..phi.saturating_sub(1) {
        let c = &prod[phi + j];
        if c.is_zero() {
            continue;
        }
        for (i, r) in data.pow[j].iter().enumerate() {
            if !r.is_zero() {
                out[i] += c * r;
            }
        }
    }
    out
}

impl CycScalar {
    pub fn zero(mode: &Mode) -> CycScalar {
        match mode {
            Mode::Generic => generic_canonical(0, RatPoly::zero(), RatPoly::one()),
            Mode::Root(d) => CycScalar {
                repr: Repr::Root { data: d.clone(), coeffs: vec![Rat::zero(); d.phi] },
            },
        }
    }

    pub fn one(mode: &Mode) -> CycScalar {
        Self::from_rational(mode, Rat::one())
    }

    pub fn from_rational(mode: &Mode, r: Rat) -> CycScalar {
        match mode {
            Mode::Generic => generic_canonical(0, RatPoly::constant(r), RatPoly::one()),
            Mode::Root(d) => {
                let mut coeffs = vec![Rat::zero(); d.phi];
                coeffs[0] = r;
                CycScalar { repr: Repr::Root { data: d.clone(), coeffs } }
            }
        }
    }

    pub fn from_integer(mode: &Mode, n: i64) -> CycScalar {
        Self::from_rational(mode, rat_int(n))
    }

    /// `v^e`, where `v = q^{1/2}`.
    pub fn v_power(mode: &Mode, e: i64) -> CycScalar {
        match mode {
            Mode::Generic => generic_canonical(e, RatPoly::one(), RatPoly::one()),
            Mode::Root(d) => {
                let n = d.order as i64;
                let e = e.rem_euclid(n) as usize;
                let phi = d.phi;
                let mut coeffs = vec![Rat::zero(); phi];
                if e < phi {
                    coeffs[e] = Rat::one();
                } else {
                    coeffs[phi - 1] = Rat::one();
                    for _ in 0..(e - (phi - 1)) {
                        coeffs = root_mul_x(d, &coeffs);
                    }
                }
                CycScalar { repr: Repr::Root { data: d.clone(), coeffs } }
            }
        }
    }

    /// `q^e = v^{2e}`.
    pub fn q_power(mode: &Mode, e: i64) -> CycScalar {
        Self::v_power(mode, 2 * e)
    }

    pub fn mode(&self) -> Mode {
        match &self.repr {
            Repr::Generic { .. } => Mode::Generic,
            Repr::Root { data, .. } => Mode::Root(data.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Generic { num, .. } => num.is_zero(),
            Repr::Root { coeffs, .. } => coeffs.iter().all(|c| c.is_zero()),
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.repr {
            Repr::Generic { shift, num, den } => {
                *shift == 0 && num == &RatPoly::one() && den == &RatPoly::one()
            }
            Repr::Root { coeffs, .. } => {
                coeffs[0].is_one() && coeffs[1..].iter().all(|c| c.is_zero())
            }
        }
    }

    /// True in generic mode when the denominator is trivial.
    pub fn is_laurent(&self) -> bool {
        match &self.repr {
            Repr::Generic { den, .. } => den == &RatPoly::one(),
            Repr::Root { .. } => true,
        }
    }

    pub fn checked_add(&self, other: &CycScalar) -> Result<CycScalar, ScalarError> {
        match (&self.repr, &other.repr) {
            (
                Repr::Generic { shift: s1, num: n1, den: d1 },
                Repr::Generic { shift: s2, num: n2, den: d2 },
            ) => {
                if self.is_zero() {
                    return Ok(other.clone());
                }
                if other.is_zero() {
                    return Ok(self.clone());
                }
                let s = (*s1).min(*s2);
                let a = n1.mul(d2).shift_up((s1 - s) as usize);
                let b = n2.mul(d1).shift_up((s2 - s) as usize);
                Ok(generic_canonical(s, a.add(&b), d1.mul(d2)))
            }
            (Repr::Root { data: a, coeffs: c1 }, Repr::Root { data: b, coeffs: c2 }) => {
                if a.order != b.order {
                    return Err(ScalarError::ModeMismatch);
                }
                let coeffs = c1.iter().zip(c2).map(|(x, y)| x + y).collect();
                Ok(CycScalar { repr: Repr::Root { data: a.clone(), coeffs } })
            }
            _ => Err(ScalarError::ModeMismatch),
        }
    }

    pub fn checked_sub(&self, other: &CycScalar) -> Result<CycScalar, ScalarError> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &CycScalar) -> Result<CycScalar, ScalarError> {
        match (&self.repr, &other.repr) {
            (
                Repr::Generic { shift: s1, num: n1, den: d1 },
                Repr::Generic { shift: s2, num: n2, den: d2 },
            ) => Ok(generic_canonical(s1 + s2, n1.mul(n2), d1.mul(d2))),
            (Repr::Root { data: a, coeffs: c1 }, Repr::Root { data: b, coeffs: c2 }) => {
                if a.order != b.order {
                    return Err(ScalarError::ModeMismatch);
                }
                Ok(CycScalar {
                    repr: Repr::Root { data: a.clone(), coeffs: root_mul_coeffs(a, c1, c2) },
                })
            }
            _ => Err(ScalarError::ModeMismatch),
        }
    }

    pub fn inv(&self) -> Result<CycScalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        match &self.repr {
            Repr::Generic { shift, num, den } => {
                Ok(generic_canonical(-shift, den.clone(), num.clone()))
            }
            Repr::Root { data, coeffs } => {
                let poly = RatPoly::from_coeffs(coeffs.clone());
                let modulus = cyclotomic_cached(data.order);
                let (g, s, _) = poly.xgcd(&modulus);
                debug_assert_eq!(g.degree(), Some(0), "cyclotomic polynomial is irreducible");
                let inv = s.scale(&(Rat::one() / g.coeff(0)));
                let (_, r) = inv.divrem(&modulus);
                let mut out = vec![Rat::zero(); data.phi];
                for (i, c) in r.coeffs().iter().enumerate() {
                    out[i] = c.clone();
                }
                Ok(CycScalar { repr: Repr::Root { data: data.clone(), coeffs: out } })
            }
        }
    }

    /// Field division.
    pub fn checked_div(&self, other: &CycScalar) -> Result<CycScalar, ScalarError> {
        if self.mode() != other.mode() {
            return Err(ScalarError::ModeMismatch);
        }
        self.checked_mul(&other.inv()?)
    }

    /// Division that insists the generic-mode quotient is a Laurent
    /// polynomial; in root mode it behaves like [`checked_div`](Self::checked_div).
    pub fn exact_div(&self, other: &CycScalar) -> Result<CycScalar, ScalarError> {
        let q = self.checked_div(other)?;
        if !q.is_laurent() {
            return Err(ScalarError::InexactDivision);
        }
        Ok(q)
    }

    pub fn neg(&self) -> CycScalar {
        match &self.repr {
            Repr::Generic { shift, num, den } => CycScalar {
                repr: Repr::Generic { shift: *shift, num: num.neg(), den: den.clone() },
            },
            Repr::Root { data, coeffs } => CycScalar {
                repr: Repr::Root {
                    data: data.clone(),
                    coeffs: coeffs.iter().map(|c| -c).collect(),
                },
            },
        }
    }

    /// Integer power; negative exponents require an invertible scalar.
    pub fn pow(&self, e: i64) -> Result<CycScalar, ScalarError> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = CycScalar::one(&self.mode());
        for _ in 0..e.unsigned_abs() {
            acc = acc.checked_mul(&base)?;
        }
        Ok(acc)
    }

    /// Evaluate a generic scalar at `v = ζ_N`.
    pub fn specialize(&self, ctx: &RootContext) -> Result<CycScalar, ScalarError> {
        match &self.repr {
            Repr::Root { data, .. } => {
                if data.order == ctx.order() {
                    Ok(self.clone())
                } else {
                    Err(ScalarError::ModeMismatch)
                }
            }
            Repr::Generic { shift, num, den } => {
                let mode = ctx.mode();
                let v = CycScalar::v_power(&mode, 1);
                let eval = |p: &RatPoly| -> Result<CycScalar, ScalarError> {
                    let mut acc = CycScalar::zero(&mode);
                    for c in p.coeffs().iter().rev() {
                        acc = acc.checked_mul(&v)?;
                        acc = acc.checked_add(&CycScalar::from_rational(&mode, c.clone()))?;
                    }
                    Ok(acc)
                };
                let num_v = eval(num)?;
                let den_v = eval(den)?;
                if den_v.is_zero() {
                    return Err(ScalarError::PoleAtRoot);
                }
                let vs = CycScalar::v_power(&mode, shift.rem_euclid(ctx.order() as i64));
                num_v.checked_div(&den_v)?.checked_mul(&vs)
            }
        }
    }

    /// Root-mode coefficient vector in the power basis of `ζ_N`.
    pub fn root_coeffs(&self) -> Option<&[Rat]> {
        match &self.repr {
            Repr::Root { coeffs, .. } => Some(coeffs),
            Repr::Generic { .. } => None,
        }
    }

    /// Exact rational value, when the scalar is a constant.
    pub fn as_rational(&self) -> Option<Rat> {
        match &self.repr {
            Repr::Generic { shift, num, den } => {
                if num.is_zero() {
                    return Some(Rat::zero());
                }
                if *shift == 0 && num.degree() == Some(0) && den == &RatPoly::one() {
                    Some(num.coeff(0))
                } else {
                    None
                }
            }
            Repr::Root { coeffs, .. } => {
                if coeffs[1..].iter().all(|c| c.is_zero()) {
                    Some(coeffs[0].clone())
                } else {
                    None
                }
            }
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait<&CycScalar> for &CycScalar {
            type Output = CycScalar;
            fn $method(self, rhs: &CycScalar) -> CycScalar {
                self.$checked(rhs).expect("scalar mode mismatch")
            }
        }
    };
}

scalar_binop!(Add, add, checked_add);
scalar_binop!(Sub, sub, checked_sub);
scalar_binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &CycScalar {
    type Output = CycScalar;
    fn neg(self) -> CycScalar {
        CycScalar::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Root context
// ---------------------------------------------------------------------------

/// The root-of-unity environment: `v = ζ_N`, `q = v²`, the minimal `n` with
/// `q^n ∈ {±1}`, and the sign data `t^{1/2} = v^{n²}`, `t = q^{n²}`.
#[derive(Clone, Debug)]
pub struct RootContext {
    data: Arc<RootData>,
    n: u32,
    v: CycScalar,
    q: CycScalar,
    t_half: CycScalar,
    t: CycScalar,
    t_sign: i8,
}

impl RootContext {
    /// Order N of `v = ζ_N`.
    pub fn order(&self) -> u32 {
        self.data.order
    }

    /// The smallest positive integer with `q^n ∈ {+1, -1}`.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mode(&self) -> Mode {
        Mode::Root(self.data.clone())
    }

    pub fn v(&self) -> &CycScalar {
        &self.v
    }

    pub fn q(&self) -> &CycScalar {
        &self.q
    }

    pub fn t_half(&self) -> &CycScalar {
        &self.t_half
    }

    pub fn t(&self) -> &CycScalar {
        &self.t
    }

    /// `t` as a sign, `+1` or `-1`.
    pub fn t_sign(&self) -> i8 {
        self.t_sign
    }
}

/// Build the root context for `v = ζ_N`.
pub fn derive_root_context(order: u32) -> RootContext {
    assert!(order >= 1, "order must be >= 1");
    let data = root_data(order);
    let mode = Mode::Root(data.clone());
    let v = CycScalar::v_power(&mode, 1);
    let q = CycScalar::q_power(&mode, 1);
    let one = CycScalar::one(&mode);
    let minus_one = one.neg();
    let mut pow = one.clone();
    let mut n = 0u32;
    for m in 1..=order {
        pow = pow.checked_mul(&q).unwrap();
        if pow == one || pow == minus_one {
            n = m;
            break;
        }
    }
    assert!(n > 0, "q has finite order dividing N");
    let n_sq = (n as i64) * (n as i64);
    let t_half = CycScalar::v_power(&mode, n_sq);
    let t = t_half.checked_mul(&t_half).unwrap();
    let t_sign = if t == one {
        1
    } else {
        assert!(t == minus_one, "t must be a sign");
        -1
    };
    // (-1)^{n-1} q^n = t
    let qn = q.pow(n as i64).unwrap();
    let lhs = if n % 2 == 0 { qn.neg() } else { qn };
    assert!(lhs == t, "sign relation between q^n and t violated");
    RootContext { data, n, v, q, t_half, t, t_sign }
}

// ---------------------------------------------------------------------------
// Serialization and display
// ---------------------------------------------------------------------------

impl Serialize for CycScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match &self.repr {
            Repr::Root { data, coeffs } => {
                let mut st = serializer.serialize_struct("CycScalar", 2)?;
                st.serialize_field("N", &data.order)?;
                let strs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                st.serialize_field("coeffs", &strs)?;
                st.end()
            }
            Repr::Generic { shift, num, den } => {
                let mut st = serializer.serialize_struct("CycScalar", 2)?;
                let num_pairs: Vec<(i64, String)> = num
                    .coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (shift + i as i64, c.to_string()))
                    .collect();
                let den_pairs: Vec<(i64, String)> = den
                    .coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .map(|(i, c)| (i as i64, c.to_string()))
                    .collect();
                st.serialize_field("num", &num_pairs)?;
                st.serialize_field("den", &den_pairs)?;
                st.end()
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScalarJson {
    Root {
        #[serde(rename = "N")]
        n: u32,
        coeffs: Vec<String>,
    },
    Generic {
        num: Vec<(i64, String)>,
        den: Vec<(i64, String)>,
    },
}

impl<'de> Deserialize<'de> for CycScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parse = |s: &str| Rat::from_str(s).map_err(|e| D::Error::custom(e.to_string()));
        match ScalarJson::deserialize(deserializer)? {
            ScalarJson::Root { n, coeffs } => {
                let data = root_data(n);
                if coeffs.len() != data.phi {
                    return Err(D::Error::custom(format!(
                        "expected {} coefficients for N={}",
                        data.phi, n
                    )));
                }
                let coeffs = coeffs.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
                Ok(CycScalar { repr: Repr::Root { data, coeffs } })
            }
            ScalarJson::Generic { num, den } => {
                let mode = Mode::Generic;
                let mut acc = CycScalar::zero(&mode);
                for (e, c) in num {
                    let t = CycScalar::from_rational(&mode, parse(&c)?)
                        .checked_mul(&CycScalar::v_power(&mode, e))
                        .unwrap();
                    acc = acc.checked_add(&t).unwrap();
                }
                let mut d = CycScalar::zero(&mode);
                for (e, c) in den {
                    let t = CycScalar::from_rational(&mode, parse(&c)?)
                        .checked_mul(&CycScalar::v_power(&mode, e))
                        .unwrap();
                    d = d.checked_add(&t).unwrap();
                }
                acc.checked_div(&d).map_err(|e| D::Error::custom(e.to_string()))
            }
        }
    }
}

fn fmt_term(
    f: &mut fmt::Formatter<'_>,
    first: &mut bool,
    c: &Rat,
    var: &str,
    e: i64,
) -> fmt::Result {
    let neg = c.is_negative();
    let mag = if neg { -c } else { c.clone() };
    if *first {
        if neg {
            write!(f, "-")?;
        }
        *first = false;
    } else if neg {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    if e == 0 {
        write!(f, "{}", mag)
    } else {
        if !mag.is_one() {
            write!(f, "{}*", mag)?;
        }
        if e == 1 {
            write!(f, "{}", var)
        } else {
            write!(f, "{}^{}", var, e)
        }
    }
}

fn fmt_poly(f: &mut fmt::Formatter<'_>, p: &RatPoly, var: &str, shift: i64) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    let mut first = true;
    for (i, c) in p.coeffs().iter().enumerate() {
        if !c.is_zero() {
            fmt_term(f, &mut first, c, var, shift + i as i64)?;
        }
    }
    Ok(())
}

impl fmt::Display for CycScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Generic { shift, num, den } => {
                if den == &RatPoly::one() {
                    fmt_poly(f, num, "v", *shift)
                } else {
                    write!(f, "(")?;
                    fmt_poly(f, num, "v", *shift)?;
                    write!(f, ")/(")?;
                    fmt_poly(f, den, "v", 0)?;
                    write!(f, ")")
                }
            }
            Repr::Root { coeffs, .. } => {
                let p = RatPoly::from_coeffs(coeffs.clone());
                fmt_poly(f, &p, "z", 0)
            }
        }
    }
}

impl fmt::Debug for CycScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Generic { .. } => write!(f, "CycScalar({})", self),
            Repr::Root { data, .. } => write!(f, "CycScalar[N={}]({})", data.order, self),
        }
    }
}
