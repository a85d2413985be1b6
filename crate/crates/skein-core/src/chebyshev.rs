//! Quantum integers, quantum factorials, and the two Chebyshev-type
//! polynomial families `T_k` (first kind, `T_0 = 2`) and `S_k` (second kind,
//! `S_0 = 1`), both obeying `X_k = x·X_{k-1} - X_{k-2}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::scalar::{CycScalar, Mode};

/// Sparse polynomial in `x` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: BTreeMap<u32, i64>,
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly { coeffs: BTreeMap::new() }
    }

    pub fn constant(c: i64) -> Self {
        let mut p = Self::zero();
        p.set(0, c);
        p
    }

    pub fn x() -> Self {
        Self::monomial(1, 1)
    }

    pub fn monomial(degree: u32, c: i64) -> Self {
        let mut p = Self::zero();
        p.set(degree, c);
        p
    }

    pub fn from_pairs(pairs: &[(u32, i64)]) -> Self {
        let mut p = Self::zero();
        for &(d, c) in pairs {
            p.set(d, p.coeff(d) + c);
        }
        p
    }

    fn set(&mut self, degree: u32, c: i64) {
        if c == 0 {
            self.coeffs.remove(&degree);
        } else {
            self.coeffs.insert(degree, c);
        }
    }

    pub fn coeff(&self, degree: u32) -> i64 {
        self.coeffs.get(&degree).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    /// Iterate `(degree, coefficient)` pairs in ascending degree.
    pub fn terms(&self) -> impl Iterator<Item = (u32, i64)> + '_ {
        self.coeffs.iter().map(|(&d, &c)| (d, c))
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        let mut out = self.clone();
        for (d, c) in other.terms() {
            out.set(d, out.coeff(d) + c);
        }
        out
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let mut out = self.clone();
        for (d, c) in other.terms() {
            out.set(d, out.coeff(d) - c);
        }
        out
    }

    pub fn scale(&self, c: i64) -> IntPoly {
        if c == 0 {
            return Self::zero();
        }
        IntPoly { coeffs: self.coeffs.iter().map(|(&d, &a)| (d, a * c)).collect() }
    }

    /// Multiply by `x`.
    pub fn mul_x(&self) -> IntPoly {
        IntPoly { coeffs: self.coeffs.iter().map(|(&d, &a)| (d + 1, a)).collect() }
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (d, c) in self.coeffs.iter().rev() {
            let mag = c.abs();
            if first {
                if *c < 0 {
                    write!(f, "-")?;
                }
                first = false;
            } else if *c < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match (d, mag) {
                (0, m) => write!(f, "{}", m)?,
                (1, 1) => write!(f, "x")?,
                (1, m) => write!(f, "{}x", m)?,
                (d, 1) => write!(f, "x^{}", d)?,
                (d, m) => write!(f, "{}x^{}", m, d)?,
            }
        }
        Ok(())
    }
}

impl Serialize for IntPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        map.serialize_entry("coeffs", &self.coeffs)?;
        map.end()
    }
}

/// The quantum integer `[k] = q^{k-1} + q^{k-3} + ... + q^{1-k}`, `[0] = 0`.
pub fn quantum_integer(k: u32, mode: &Mode) -> CycScalar {
    let mut acc = CycScalar::zero(mode);
    let k = k as i64;
    let mut e = k - 1;
    while e >= 1 - k {
        acc = acc.checked_add(&CycScalar::q_power(mode, e)).unwrap();
        e -= 2;
    }
    acc
}

/// The quantum factorial `[k]! = [k][k-1]...[1]`, with `[0]! = 1`.
pub fn quantum_factorial(k: u32, mode: &Mode) -> CycScalar {
    let mut acc = CycScalar::one(mode);
    for j in 1..=k {
        acc = acc.checked_mul(&quantum_integer(j, mode)).unwrap();
    }
    acc
}

fn cheb_cache(first_kind: bool) -> &'static RwLock<Vec<IntPoly>> {
    static T: OnceLock<RwLock<Vec<IntPoly>>> = OnceLock::new();
    static S: OnceLock<RwLock<Vec<IntPoly>>> = OnceLock::new();
    let cell = if first_kind { &T } else { &S };
    cell.get_or_init(|| {
        let x0 = if first_kind { IntPoly::constant(2) } else { IntPoly::constant(1) };
        RwLock::new(vec![x0, IntPoly::x()])
    })
}

fn chebyshev(k: u32, first_kind: bool) -> IntPoly {
    let cache = cheb_cache(first_kind);
    {
        let table = cache.read().unwrap();
        if let Some(p) = table.get(k as usize) {
            return p.clone();
        }
    }
    let mut table = cache.write().unwrap();
    while table.len() <= k as usize {
        let next = table[table.len() - 1].mul_x().sub(&table[table.len() - 2]);
        table.push(next);
    }
    table[k as usize].clone()
}

/// First-kind polynomial: `T_0 = 2`, `T_1 = x`, `T_k = x T_{k-1} - T_{k-2}`.
pub fn chebyshev_t(k: u32) -> IntPoly {
    chebyshev(k, true)
}

/// Second-kind polynomial: `S_0 = 1`, `S_1 = x`, `S_k = x S_{k-1} - S_{k-2}`.
pub fn chebyshev_s(k: u32) -> IntPoly {
    chebyshev(k, false)
}

/// Horner evaluation of an integer polynomial at a scalar.
pub fn evaluate_poly(p: &IntPoly, at: &CycScalar) -> CycScalar {
    let mode = at.mode();
    let mut acc = CycScalar::zero(&mode);
    let mut prev_degree: Option<u32> = None;
    for (d, c) in p.coeffs.iter().rev() {
        let gap = prev_degree.map_or(0, |pd| pd - d);
        for _ in 0..gap {
            acc = acc.checked_mul(at).unwrap();
        }
        acc = acc.checked_add(&CycScalar::from_integer(&mode, *c)).unwrap();
        prev_degree = Some(*d);
    }
    if let Some(d) = prev_degree {
        for _ in 0..d {
            acc = acc.checked_mul(at).unwrap();
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::derive_root_context;

    #[test]
    fn quantum_integer_basics() {
        let g = Mode::Generic;
        assert!(quantum_integer(0, &g).is_zero());
        // [2] = q + q^{-1}
        let q = CycScalar::q_power(&g, 1);
        let qinv = CycScalar::q_power(&g, -1);
        assert_eq!(quantum_integer(2, &g), q.checked_add(&qinv).unwrap());
        // [n] = 0 at a root
        for order in [8u32, 12, 20] {
            let ctx = derive_root_context(order);
            assert!(quantum_integer(ctx.n(), &ctx.mode()).is_zero(), "N = {}", order);
            for j in 1..ctx.n() {
                assert!(!quantum_integer(j, &ctx.mode()).is_zero());
            }
        }
    }

    #[test]
    fn quantum_factorial_basics() {
        let g = Mode::Generic;
        assert!(quantum_factorial(0, &g).is_one());
        assert_eq!(quantum_factorial(2, &g), quantum_integer(2, &g));
        let ctx = derive_root_context(12);
        assert!(quantum_factorial(ctx.n(), &ctx.mode()).is_zero());
    }

    #[test]
    fn chebyshev_initial_and_small() {
        assert_eq!(chebyshev_t(0), IntPoly::constant(2));
        assert_eq!(chebyshev_t(1), IntPoly::x());
        assert_eq!(chebyshev_t(2), IntPoly::from_pairs(&[(2, 1), (0, -2)]));
        assert_eq!(chebyshev_t(3), IntPoly::from_pairs(&[(3, 1), (1, -3)]));
        assert_eq!(chebyshev_s(0), IntPoly::constant(1));
        assert_eq!(chebyshev_s(2), IntPoly::from_pairs(&[(2, 1), (0, -1)]));
    }

    #[test]
    fn t_from_s_identity() {
        // T_k = x S_{k-1} - 2 S_{k-2}
        for k in 2..=20 {
            let lhs = chebyshev_t(k);
            let rhs = chebyshev_s(k - 1).mul_x().sub(&chebyshev_s(k - 2).scale(2));
            assert_eq!(lhs, rhs, "k = {}", k);
        }
    }

    #[test]
    fn defining_property_generic() {
        let g = Mode::Generic;
        let q = CycScalar::q_power(&g, 1);
        let qq = q.checked_add(&CycScalar::q_power(&g, -1)).unwrap();
        for k in 0..=12u32 {
            let tk = evaluate_poly(&chebyshev_t(k), &qq);
            let expect = CycScalar::q_power(&g, k as i64)
                .checked_add(&CycScalar::q_power(&g, -(k as i64)))
                .unwrap();
            assert_eq!(tk, expect, "T_{}(q + q^-1)", k);
            let sk = evaluate_poly(&chebyshev_s(k), &qq);
            assert_eq!(sk, quantum_integer(k + 1, &g), "S_{}(q + q^-1)", k);
        }
    }

    #[test]
    fn evaluate_examples() {
        let g = Mode::Generic;
        let zero = CycScalar::zero(&g);
        assert_eq!(
            evaluate_poly(&chebyshev_t(2), &zero),
            CycScalar::from_integer(&g, -2)
        );
        // T_n(-q - q^{-1}) = -t - t^{-1} at each root
        for order in [2u32, 8, 12, 16, 20, 24] {
            let ctx = derive_root_context(order);
            let mode = ctx.mode();
            let minus_delta = quantum_integer(2, &mode).neg();
            let got = evaluate_poly(&chebyshev_t(ctx.n()), &minus_delta);
            let t_inv = ctx.t().inv().unwrap();
            let expect = ctx.t().checked_add(&t_inv).unwrap().neg();
            assert_eq!(got, expect, "N = {}", order);
        }
    }

    #[test]
    fn intpoly_json_shape() {
        let p = IntPoly::from_pairs(&[(2, 1), (0, -2)]);
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"coeffs":{"0":-2,"2":1}}"#);
    }
}
