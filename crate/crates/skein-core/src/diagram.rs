//! The crossing-free core of the Temperley-Lieb category: planar matchings,
//! linear combinations of them, composition with exact loop evaluation,
//! tensor product, partial trace, annulus closure, and cabling.
//!
//! Boundary convention: a `(k, l)` diagram has its `k` bottom points indexed
//! `0..k` left to right and its `l` top points indexed `k..k+l` left to
//! right. Planarity is checked in the cyclic order bottom-left → bottom-right
//! → top-right → top-left.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chebyshev::{quantum_integer, IntPoly};
use crate::scalar::{CycScalar, Mode, RootContext};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("signature mismatch: expected {expected:?}, got {got:?}")]
    SignatureMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("index {index} out of range for {what}")]
    IndexOutOfRange { index: usize, what: &'static str },
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
}

/// One strand endpoint; diagrams at our scale stay far below this width.
pub type Point = u16;

// ---------------------------------------------------------------------------
// Planar matchings
// ---------------------------------------------------------------------------

/// A crossingless perfect matching of `k` bottom and `l` top boundary points:
/// a basis diagram of `TL_{k,l}`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanarMatching {
    bottom: Point,
    pairing: Vec<Point>,
}

impl PlanarMatching {
    pub fn new(k: usize, l: usize, pairing: Vec<Point>) -> Result<Self, DiagramError> {
        if pairing.len() != k + l {
            return Err(DiagramError::InvalidMatching(format!(
                "pairing length {} does not match k + l = {}",
                pairing.len(),
                k + l
            )));
        }
        if (k + l) % 2 != 0 {
            return Err(DiagramError::InvalidMatching("odd number of boundary points".into()));
        }
        let total = k + l;
        for (i, &j) in pairing.iter().enumerate() {
            let j = j as usize;
            if j >= total {
                return Err(DiagramError::InvalidMatching(format!("point {} out of range", j)));
            }
            if j == i {
                return Err(DiagramError::InvalidMatching(format!("fixed point at {}", i)));
            }
            if pairing[j] as usize != i {
                return Err(DiagramError::InvalidMatching(format!(
                    "pairing is not an involution at {}",
                    i
                )));
            }
        }
        let m = PlanarMatching { bottom: k as Point, pairing };
        if !m.is_noncrossing() {
            return Err(DiagramError::InvalidMatching("chords cross".into()));
        }
        Ok(m)
    }

    fn from_parts_unchecked(k: usize, pairing: Vec<Point>) -> Self {
        let m = PlanarMatching { bottom: k as Point, pairing };
        debug_assert!(m.is_noncrossing(), "glued matching must stay planar");
        m
    }

    pub fn source(&self) -> usize {
        self.bottom as usize
    }

    pub fn target(&self) -> usize {
        self.pairing.len() - self.bottom as usize
    }

    pub fn pairing(&self) -> &[Point] {
        &self.pairing
    }

    pub fn partner(&self, p: usize) -> usize {
        self.pairing[p] as usize
    }

    /// Position of point `p` in the cyclic boundary order.
    fn cyc_pos(&self, p: usize) -> usize {
        let k = self.bottom as usize;
        let total = self.pairing.len();
        if p < k {
            p
        } else {
            k + (total - 1 - p)
        }
    }

    fn is_noncrossing(&self) -> bool {
        let total = self.pairing.len();
        let mut by_pos = vec![0usize; total];
        for p in 0..total {
            by_pos[self.cyc_pos(p)] = p;
        }
        // stack check in cyclic order: a closing endpoint must match the top
        let mut stack: Vec<usize> = Vec::new();
        for &p in &by_pos {
            let q = self.partner(p);
            if stack.last() == Some(&q) {
                stack.pop();
            } else {
                stack.push(p);
            }
        }
        stack.is_empty()
    }

    pub fn identity(k: usize) -> Self {
        let pairing = (0..2 * k)
            .map(|i| if i < k { (i + k) as Point } else { (i - k) as Point })
            .collect();
        PlanarMatching { bottom: k as Point, pairing }
    }

    pub fn is_identity(&self) -> bool {
        let k = self.bottom as usize;
        if self.target() != k {
            return false;
        }
        (0..k).all(|i| self.partner(i) == i + k)
    }

    /// Replace every strand by `c` parallel copies (blackboard framing):
    /// a chord becomes `c` nested chords between the corresponding blocks.
    pub fn cable(&self, c: usize) -> Self {
        assert!(c >= 1, "cable multiplicity must be positive");
        let k = self.bottom as usize;
        let total = self.pairing.len();
        let (ck, ctotal) = (k * c, total * c);
        let from_cyc = |pos: usize| -> usize {
            if pos < ck {
                pos
            } else {
                ck + (ctotal - 1 - pos)
            }
        };
        let mut pairing = vec![0 as Point; ctotal];
        for a in 0..total {
            let b = self.partner(a);
            if a > b {
                continue;
            }
            let (pa, pb) = (self.cyc_pos(a), self.cyc_pos(b));
            for s in 0..c {
                let x = from_cyc(pa * c + s);
                let y = from_cyc(pb * c + (c - 1 - s));
                pairing[x] = y as Point;
                pairing[y] = x as Point;
            }
        }
        Self::from_parts_unchecked(ck, pairing)
    }

    /// Top-bottom flip; an involution on basis diagrams.
    pub fn transpose(&self) -> Self {
        let k = self.bottom as usize;
        let l = self.target();
        let map = |p: usize| -> usize {
            if p < k {
                l + p
            } else {
                p - k
            }
        };
        let mut pairing = vec![0 as Point; self.pairing.len()];
        for p in 0..self.pairing.len() {
            pairing[map(p)] = map(self.partner(p)) as Point;
        }
        Self::from_parts_unchecked(l, pairing)
    }
}

impl fmt::Debug for PlanarMatching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PM({}->{}; {:?})", self.source(), self.target(), self.pairing)
    }
}

impl Serialize for PlanarMatching {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.pairing.serialize(s)
    }
}

/// Enumerate every planar matching of signature `(k, l)`.
pub fn enumerate_matchings(k: usize, l: usize) -> Vec<PlanarMatching> {
    if (k + l) % 2 != 0 {
        return Vec::new();
    }
    let total = k + l;
    // boundary points in cyclic order
    let mut seq: Vec<usize> = (0..k).collect();
    seq.extend((k..total).rev());

    fn go(seq: &[usize]) -> Vec<Vec<(usize, usize)>> {
        if seq.is_empty() {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for j in (1..seq.len()).step_by(2) {
            let inside = go(&seq[1..j]);
            let outside = go(&seq[j + 1..]);
            for ins in &inside {
                for outs in &outside {
                    let mut chords = vec![(seq[0], seq[j])];
                    chords.extend(ins.iter().copied());
                    chords.extend(outs.iter().copied());
                    out.push(chords);
                }
            }
        }
        out
    }

    go(&seq)
        .into_iter()
        .map(|chords| {
            let mut pairing = vec![0 as Point; total];
            for (a, b) in chords {
                pairing[a] = b as Point;
                pairing[b] = a as Point;
            }
            PlanarMatching::from_parts_unchecked(k, pairing)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Evaluation context
// ---------------------------------------------------------------------------

/// Scalar mode plus the value of a contractible loop. The loop value is
/// `-(q + q^{-1})` for the standard contexts; projector construction at the
/// sign parameter `t` substitutes a rational loop value instead.
#[derive(Clone, Debug)]
pub struct EvalCtx {
    mode: Mode,
    delta: CycScalar,
}

impl EvalCtx {
    pub fn generic() -> Self {
        let mode = Mode::Generic;
        let delta = quantum_integer(2, &mode).neg();
        EvalCtx { mode, delta }
    }

    pub fn root(ctx: &RootContext) -> Self {
        let mode = ctx.mode();
        let delta = quantum_integer(2, &mode).neg();
        EvalCtx { mode, delta }
    }

    pub fn with_loop_value(mode: Mode, delta: CycScalar) -> Self {
        EvalCtx { mode, delta }
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn loop_value(&self) -> &CycScalar {
        &self.delta
    }

    pub fn one(&self) -> CycScalar {
        CycScalar::one(&self.mode)
    }

    pub fn zero(&self) -> CycScalar {
        CycScalar::zero(&self.mode)
    }
}

// ---------------------------------------------------------------------------
// TL morphisms
// ---------------------------------------------------------------------------

/// A finite linear combination of planar matchings with a common signature.
/// Zero coefficients are never stored, so equality is exact term equality.
#[derive(Clone, PartialEq, Eq)]
pub struct TLMorphism {
    source: usize,
    target: usize,
    terms: BTreeMap<PlanarMatching, CycScalar>,
}

impl TLMorphism {
    pub fn zero(source: usize, target: usize) -> Self {
        TLMorphism { source, target, terms: BTreeMap::new() }
    }

    pub fn from_matching(m: PlanarMatching, coeff: CycScalar) -> Self {
        let mut out = Self::zero(m.source(), m.target());
        out.add_term(m, coeff);
        out
    }

    pub fn identity(k: usize, ctx: &EvalCtx) -> Self {
        Self::from_matching(PlanarMatching::identity(k), ctx.one())
    }

    /// Join bottom points `i, i+1`; signature `k -> k-2`.
    pub fn cap(k: usize, i: usize, ctx: &EvalCtx) -> Result<Self, DiagramError> {
        if k < 2 || i > k - 2 {
            return Err(DiagramError::IndexOutOfRange { index: i, what: "cap position" });
        }
        let mut pairing = vec![0 as Point; 2 * k - 2];
        pairing[i] = (i + 1) as Point;
        pairing[i + 1] = i as Point;
        let mut top = k;
        for b in (0..k).filter(|&b| b != i && b != i + 1) {
            pairing[b] = top as Point;
            pairing[top] = b as Point;
            top += 1;
        }
        Ok(Self::from_matching(PlanarMatching::from_parts_unchecked(k, pairing), ctx.one()))
    }

    /// Insert an adjacent pair at top position `i`; signature `k-2 -> k`.
    pub fn cup(k: usize, i: usize, ctx: &EvalCtx) -> Result<Self, DiagramError> {
        Ok(Self::cap(k, i, ctx)?.transpose())
    }

    /// The hook `e(k, i) = cap(k, i)` then `cup(k, i)`; an idempotent up to
    /// the loop scalar.
    pub fn e_element(k: usize, i: usize, ctx: &EvalCtx) -> Result<Self, DiagramError> {
        Self::cap(k, i, ctx)?.compose(&Self::cup(k, i, ctx)?, ctx)
    }

    /// `r` nested arcs on `2r` top points; signature `0 -> 2r`.
    pub fn nested_cups(r: usize, ctx: &EvalCtx) -> Self {
        let mut pairing = vec![0 as Point; 2 * r];
        for s in 0..r {
            pairing[s] = (2 * r - 1 - s) as Point;
            pairing[2 * r - 1 - s] = s as Point;
        }
        Self::from_matching(PlanarMatching::from_parts_unchecked(0, pairing), ctx.one())
    }

    /// `r` nested arcs on `2r` bottom points; signature `2r -> 0`.
    pub fn nested_caps(r: usize, ctx: &EvalCtx) -> Self {
        Self::nested_cups(r, ctx).transpose()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PlanarMatching, &CycScalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &PlanarMatching) -> Option<&CycScalar> {
        self.terms.get(m)
    }

    /// Coefficient of the identity diagram, if present.
    pub fn identity_coefficient(&self) -> Option<&CycScalar> {
        if self.source != self.target {
            return None;
        }
        self.terms.get(&PlanarMatching::identity(self.source))
    }

    fn add_term(&mut self, m: PlanarMatching, coeff: CycScalar) {
        debug_assert_eq!((m.source(), m.target()), (self.source, self.target));
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().checked_add(&coeff).expect("scalar mode mismatch");
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &TLMorphism) -> Result<TLMorphism, DiagramError> {
        if (self.source, self.target) != (other.source, other.target) {
            return Err(DiagramError::SignatureMismatch {
                expected: (self.source, self.target),
                got: (other.source, other.target),
            });
        }
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TLMorphism) -> Result<TLMorphism, DiagramError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TLMorphism {
        TLMorphism {
            source: self.source,
            target: self.target,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &CycScalar) -> TLMorphism {
        if c.is_zero() {
            return Self::zero(self.source, self.target);
        }
        let mut out = Self::zero(self.source, self.target);
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a.checked_mul(c).expect("scalar mode mismatch"));
        }
        out
    }

    /// Stack `other` on top of `self`, gluing `self`'s targets to `other`'s
    /// sources and evaluating every closed loop at the context's loop value.
    pub fn compose(&self, other: &TLMorphism, ctx: &EvalCtx) -> Result<TLMorphism, DiagramError> {
        if self.target != other.source {
            return Err(DiagramError::SignatureMismatch {
                expected: (self.target, self.target),
                got: (other.source, other.source),
            });
        }
        let (k, mid, m) = (self.source, self.target, other.target);
        let mut out = TLMorphism::zero(k, m);
        let mut gluer = Gluer::new(k, mid, m);
        let mut delta_pows: Vec<CycScalar> = vec![ctx.one()];
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let (pairing, loops) = gluer.glue(m1, m2);
                while delta_pows.len() <= loops {
                    let next = delta_pows
                        .last()
                        .unwrap()
                        .checked_mul(ctx.loop_value())
                        .expect("scalar mode mismatch");
                    delta_pows.push(next);
                }
                let mut coeff = c1.checked_mul(c2).expect("scalar mode mismatch");
                if loops > 0 {
                    coeff = coeff.checked_mul(&delta_pows[loops]).unwrap();
                }
                out.add_term(PlanarMatching::from_parts_unchecked(k, pairing), coeff);
            }
        }
        Ok(out)
    }

    /// Horizontal juxtaposition, `other` to the right of `self`.
    pub fn tensor(&self, other: &TLMorphism) -> TLMorphism {
        let (k1, l1) = (self.source, self.target);
        let (k2, l2) = (other.source, other.target);
        let (k, l) = (k1 + k2, l1 + l2);
        let map1 = |p: usize| -> usize {
            if p < k1 {
                p
            } else {
                k + (p - k1)
            }
        };
        let map2 = |p: usize| -> usize {
            if p < k2 {
                k1 + p
            } else {
                k + l1 + (p - k2)
            }
        };
        let mut out = TLMorphism::zero(k, l);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut pairing = vec![0 as Point; k + l];
                for p in 0..k1 + l1 {
                    pairing[map1(p)] = map1(m1.partner(p)) as Point;
                }
                for p in 0..k2 + l2 {
                    pairing[map2(p)] = map2(m2.partner(p)) as Point;
                }
                out.add_term(
                    PlanarMatching::from_parts_unchecked(k, pairing),
                    c1.checked_mul(c2).expect("scalar mode mismatch"),
                );
            }
        }
        out
    }

    /// Close the `r` rightmost top points back to the `r` rightmost bottom
    /// points around the right side of the rectangle.
    pub fn partial_trace_right(&self, r: usize, ctx: &EvalCtx) -> Result<TLMorphism, DiagramError> {
        let (k, l) = (self.source, self.target);
        if r > k.min(l) {
            return Err(DiagramError::IndexOutOfRange { index: r, what: "trace strand count" });
        }
        let (k2, l2) = (k - r, l - r);
        let mut out = TLMorphism::zero(k2, l2);
        let mut delta_pows: Vec<CycScalar> = vec![ctx.one()];
        // glue edge j (0-based in 0..r) joins bottom k2+j with top k+l2+j
        let glued = |p: usize| -> Option<usize> {
            if p >= k2 && p < k {
                Some(p - k2)
            } else if p >= k + l2 {
                Some(p - (k + l2))
            } else {
                None
            }
        };
        let hop = |p: usize| -> usize {
            if p < k {
                k + l2 + (p - k2)
            } else {
                k2 + (p - (k + l2))
            }
        };
        let mut visited = vec![false; r];
        for (m, c) in &self.terms {
            visited.iter_mut().for_each(|v| *v = false);
            let mut pairing = vec![0 as Point; k2 + l2];
            for start in (0..k2).chain(k..k + l2) {
                let mut cur = start;
                loop {
                    let p = m.partner(cur);
                    match glued(p) {
                        Some(j) => {
                            visited[j] = true;
                            cur = hop(p);
                        }
                        None => {
                            let a = if start < k2 { start } else { k2 + (start - k) };
                            let b = if p < k2 { p } else { k2 + (p - k) };
                            pairing[a] = b as Point;
                            pairing[b] = a as Point;
                            break;
                        }
                    }
                }
            }
            let mut loops = 0usize;
            for j0 in 0..r {
                if visited[j0] {
                    continue;
                }
                visited[j0] = true;
                loops += 1;
                let mut cur = k2 + j0;
                loop {
                    let p = m.partner(cur);
                    let j = glued(p).expect("interior cycle stays on glued strands");
                    if j == j0 {
                        break;
                    }
                    visited[j] = true;
                    cur = hop(p);
                }
            }
            while delta_pows.len() <= loops {
                let next = delta_pows.last().unwrap().checked_mul(ctx.loop_value()).unwrap();
                delta_pows.push(next);
            }
            let coeff = c.checked_mul(&delta_pows[loops]).unwrap();
            out.add_term(PlanarMatching::from_parts_unchecked(k2, pairing), coeff);
        }
        Ok(out)
    }

    /// Close every strand around an annulus: top `k+i` joins bottom `i`
    /// through the complement of the rectangle. Contractible loops evaluate
    /// to the loop value; core-parallel loops become the variable of the
    /// returned polynomial. A cycle is core-parallel exactly when its net
    /// signed number of closure-arc traversals is nonzero.
    pub fn annulus_closure(&self, ctx: &EvalCtx) -> Result<ScalarPoly, DiagramError> {
        let k = self.source;
        if self.target != k {
            return Err(DiagramError::SignatureMismatch {
                expected: (k, k),
                got: (self.source, self.target),
            });
        }
        let mut out = ScalarPoly::zero();
        let mut visited = vec![false; k];
        for (m, c) in &self.terms {
            visited.iter_mut().for_each(|v| *v = false);
            let mut contractible = 0usize;
            let mut core = 0u32;
            for j0 in 0..k {
                if visited[j0] {
                    continue;
                }
                visited[j0] = true;
                // enter at bottom j0, having just crossed closure arc j0 downward
                let mut wind: i64 = 1;
                let mut cur = j0;
                loop {
                    let p = m.partner(cur);
                    let (arc, dir, next) = if p < k { (p, -1, k + p) } else { (p - k, 1, p - k) };
                    if arc == j0 {
                        break;
                    }
                    visited[arc] = true;
                    wind += dir;
                    cur = next;
                }
                if wind == 0 {
                    contractible += 1;
                } else {
                    debug_assert_eq!(wind.abs(), 1, "embedded cycles wind at most once");
                    core += 1;
                }
            }
            let mut coeff = c.clone();
            for _ in 0..contractible {
                coeff = coeff.checked_mul(ctx.loop_value()).unwrap();
            }
            out.add_term(core, coeff);
        }
        Ok(out)
    }

    /// Replace every strand by `c` parallel copies.
    pub fn cable(&self, c: usize) -> TLMorphism {
        assert!(c >= 1, "cable multiplicity must be positive");
        let mut out = TLMorphism::zero(self.source * c, self.target * c);
        for (m, coeff) in &self.terms {
            out.add_term(m.cable(c), coeff.clone());
        }
        out
    }

    /// Top-bottom flip of every term.
    pub fn transpose(&self) -> TLMorphism {
        let mut out = TLMorphism::zero(self.target, self.source);
        for (m, c) in &self.terms {
            out.add_term(m.transpose(), c.clone());
        }
        out
    }

    /// Evaluate every generic coefficient at `v = ζ_N`. Fails if any reduced
    /// denominator vanishes at the root.
    pub fn specialize(&self, ctx: &RootContext) -> Result<TLMorphism, crate::scalar::ScalarError> {
        let mut out = TLMorphism::zero(self.source, self.target);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.specialize(ctx)?);
        }
        Ok(out)
    }
}

impl fmt::Debug for TLMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TLMorphism({}->{}; {} terms)", self.source, self.target, self.terms.len())
    }
}

impl fmt::Display for TLMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}) {:?}", c, m.pairing())?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    pairing: Vec<Point>,
    coeff: CycScalar,
}

#[derive(Serialize, Deserialize)]
struct MorphismJson {
    source: usize,
    target: usize,
    terms: Vec<TermJson>,
}

impl Serialize for TLMorphism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| TermJson { pairing: m.pairing().to_vec(), coeff: c.clone() })
            .collect();
        MorphismJson { source: self.source, target: self.target, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TLMorphism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MorphismJson::deserialize(d)?;
        let mut out = TLMorphism::zero(raw.source, raw.target);
        for t in raw.terms {
            let m = PlanarMatching::new(raw.source, raw.target, t.pairing)
                .map_err(|e| D::Error::custom(e.to_string()))?;
            out.add_term(m, t.coeff);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Gluing engine
// ---------------------------------------------------------------------------

/// Reusable buffers for gluing one matching on top of another.
struct Gluer {
    k: usize,
    mid: usize,
    visited: Vec<bool>,
}

impl Gluer {
    fn new(k: usize, mid: usize, _m: usize) -> Self {
        Gluer { k, mid, visited: vec![false; mid] }
    }

    /// Returns the glued pairing and the number of closed loops.
    fn glue(&mut self, lower: &PlanarMatching, upper: &PlanarMatching) -> (Vec<Point>, usize) {
        let k = self.k;
        let mid = self.mid;
        let m = upper.target();
        self.visited.iter_mut().for_each(|v| *v = false);
        let mut pairing = vec![Point::MAX; k + m];
        for start in 0..k + m {
            if pairing[start] != Point::MAX {
                continue;
            }
            // walk alternating pairing edges and interface hops
            let (mut on_lower, mut cur) = if start < k { (true, start) } else { (false, mid + (start - k)) };
            let end;
            loop {
                if on_lower {
                    let p = lower.partner(cur);
                    if p >= k {
                        self.visited[p - k] = true;
                        on_lower = false;
                        cur = p - k;
                    } else {
                        end = p;
                        break;
                    }
                } else {
                    let p = upper.partner(cur);
                    if p < mid {
                        self.visited[p] = true;
                        on_lower = true;
                        cur = k + p;
                    } else {
                        end = k + (p - mid);
                        break;
                    }
                }
            }
            pairing[start] = end as Point;
            pairing[end] = start as Point;
        }
        let mut loops = 0;
        for i0 in 0..mid {
            if self.visited[i0] {
                continue;
            }
            self.visited[i0] = true;
            loops += 1;
            // Alternate lower chord / glue / upper chord / glue, starting just
            // below glue edge i0; stop when about to re-traverse glue i0.
            let mut i = i0;
            loop {
                let p = lower.partner(k + i);
                debug_assert!(p >= k, "interior cycle cannot reach the boundary");
                let j = p - k;
                if j == i0 {
                    break;
                }
                self.visited[j] = true;
                let p2 = upper.partner(j);
                debug_assert!(p2 < mid, "interior cycle cannot reach the boundary");
                if p2 == i0 {
                    break;
                }
                self.visited[p2] = true;
                i = p2;
            }
        }
        (pairing, loops)
    }
}

// ---------------------------------------------------------------------------
// Closure polynomials
// ---------------------------------------------------------------------------

/// Polynomial in the annulus-core variable `x` with scalar coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScalarPoly {
    terms: BTreeMap<u32, CycScalar>,
}

impl ScalarPoly {
    pub fn zero() -> Self {
        ScalarPoly { terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, degree: u32, coeff: CycScalar) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(degree) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().checked_add(&coeff).expect("scalar mode mismatch");
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn coefficient(&self, degree: u32) -> Option<&CycScalar> {
        self.terms.get(&degree)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &CycScalar)> {
        self.terms.iter().map(|(&d, c)| (d, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lift an integer polynomial into scalar coefficients.
    pub fn from_int_poly(p: &IntPoly, mode: &Mode) -> Self {
        let mut out = Self::zero();
        for (d, c) in p.terms() {
            out.add_term(d, CycScalar::from_integer(mode, c));
        }
        out
    }
}

impl fmt::Display for ScalarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (d, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match d {
                0 => write!(f, "({})", c)?,
                1 => write!(f, "({})*x", c)?,
                _ => write!(f, "({})*x^{}", c, d)?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::derive_root_context;

    fn ctx() -> EvalCtx {
        EvalCtx::generic()
    }

    fn delta(c: &EvalCtx) -> CycScalar {
        c.loop_value().clone()
    }

    #[test]
    fn matching_validation() {
        assert!(PlanarMatching::new(2, 2, vec![2, 3, 0, 1]).is_ok());
        // crossing chords rejected
        assert!(PlanarMatching::new(2, 2, vec![3, 2, 1, 0]).is_err());
        // fixed point rejected
        assert!(PlanarMatching::new(1, 1, vec![0, 1]).is_err());
        // non-involution rejected
        assert!(PlanarMatching::new(2, 2, vec![1, 2, 3, 0]).is_err());
    }

    #[test]
    fn identity_laws() {
        let c = ctx();
        let id2 = TLMorphism::identity(2, &c);
        let e = TLMorphism::e_element(2, 0, &c).unwrap();
        assert_eq!(id2.compose(&e, &c).unwrap(), e);
        assert_eq!(e.compose(&id2, &c).unwrap(), e);
        let id0 = TLMorphism::identity(0, &c);
        assert_eq!(id0.num_terms(), 1);
    }

    #[test]
    fn cup_then_cap_makes_a_loop() {
        let c = ctx();
        let cup = TLMorphism::cup(2, 0, &c).unwrap();
        let cap = TLMorphism::cap(2, 0, &c).unwrap();
        let closed = cup.compose(&cap, &c).unwrap();
        assert_eq!(closed, TLMorphism::identity(0, &c).scale(&delta(&c)));
        // the opposite order is the hook element on two strands
        let e = cap.compose(&cup, &c).unwrap();
        assert_eq!(e, TLMorphism::e_element(2, 0, &c).unwrap());
    }

    #[test]
    fn hook_squares_to_loop_times_hook() {
        let c = ctx();
        for (k, i) in [(2usize, 0usize), (3, 0), (3, 1), (4, 1)] {
            let e = TLMorphism::e_element(k, i, &c).unwrap();
            let ee = e.compose(&e, &c).unwrap();
            assert_eq!(ee, e.scale(&delta(&c)), "k={} i={}", k, i);
        }
    }

    #[test]
    fn composition_associative_on_random_morphisms() {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let c = ctx();
        let mode = Mode::Generic;
        let random_morphism = |rng: &mut rand_chacha::ChaCha8Rng, k: usize, l: usize| {
            let basis = enumerate_matchings(k, l);
            let mut out = TLMorphism::zero(k, l);
            for _ in 0..2 {
                let m = basis.choose(rng).unwrap().clone();
                let coeff = CycScalar::from_integer(&mode, rng.gen_range(-3..=3i64));
                let coeff =
                    coeff.checked_mul(&CycScalar::v_power(&mode, rng.gen_range(-2..=2))).unwrap();
                out.add_term(m, coeff);
            }
            out
        };
        for _ in 0..100 {
            let f = random_morphism(&mut rng, 3, 3);
            let g = random_morphism(&mut rng, 3, 1);
            let h = random_morphism(&mut rng, 1, 3);
            let lhs = f.compose(&g, &c).unwrap().compose(&h, &c).unwrap();
            let rhs = f.compose(&g.compose(&h, &c).unwrap(), &c).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn tensor_interchange_law() {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let c = ctx();
        let pick = |rng: &mut rand_chacha::ChaCha8Rng, k: usize, l: usize| {
            let basis = enumerate_matchings(k, l);
            TLMorphism::from_matching(basis.choose(rng).unwrap().clone(), CycScalar::one(&Mode::Generic))
        };
        for _ in 0..50 {
            let f = pick(&mut rng, 2, 2);
            let g = pick(&mut rng, 1, 3);
            let f2 = pick(&mut rng, 2, 2);
            let g2 = pick(&mut rng, 3, 1);
            // (f ; f2) tensor (g ; g2) = (f tensor g) ; (f2 tensor g2)
            let lhs = f.compose(&f2, &c).unwrap().tensor(&g.compose(&g2, &c).unwrap());
            let rhs = f.tensor(&g).compose(&f2.tensor(&g2), &c).unwrap();
            assert_eq!(lhs, rhs);
        }
        let id1 = TLMorphism::identity(1, &c);
        assert_eq!(id1.tensor(&id1), TLMorphism::identity(2, &c));
        let f = pick(&mut rng, 2, 2);
        assert_eq!(f.tensor(&TLMorphism::identity(0, &c)), f);
    }

    #[test]
    fn partial_trace_examples() {
        let c = ctx();
        let id1 = TLMorphism::identity(1, &c);
        let traced = id1.partial_trace_right(1, &c).unwrap();
        assert_eq!(traced, TLMorphism::identity(0, &c).scale(&delta(&c)));

        let e = TLMorphism::e_element(2, 0, &c).unwrap();
        let traced = e.partial_trace_right(2, &c).unwrap();
        assert_eq!(traced, TLMorphism::identity(0, &c).scale(&delta(&c)));

        // tracing one strand of the hook leaves the single-strand identity
        let traced = e.partial_trace_right(1, &c).unwrap();
        assert_eq!(traced, TLMorphism::identity(1, &c));
    }

    #[test]
    fn partial_trace_matches_cup_cap_construction() {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let c = ctx();
        for _ in 0..60 {
            let k = 3;
            let basis = enumerate_matchings(k, k);
            let f = TLMorphism::from_matching(
                basis.choose(&mut rng).unwrap().clone(),
                CycScalar::one(&Mode::Generic),
            );
            for r in 0..=k {
                // independent route: tensor with nested cups, compose, cap off
                let cups = TLMorphism::nested_cups(r, &c);
                let caps = TLMorphism::nested_caps(r, &c);
                let lhs = f.partial_trace_right(r, &c).unwrap();
                let widened = TLMorphism::identity(k - r, &c).tensor(&cups);
                let rhs = widened
                    .compose(&f.tensor(&TLMorphism::identity(r, &c)), &c)
                    .unwrap()
                    .compose(&TLMorphism::identity(k - r, &c).tensor(&caps), &c)
                    .unwrap();
                assert_eq!(lhs, rhs, "r = {}", r);
            }
        }
    }

    #[test]
    fn annulus_closure_examples() {
        let c = ctx();
        let id1 = TLMorphism::identity(1, &c);
        let poly = id1.annulus_closure(&c).unwrap();
        let mut expect = ScalarPoly::zero();
        expect.add_term(1, c.one());
        assert_eq!(poly, expect);

        // closing the hook gives a single contractible loop
        let e = TLMorphism::e_element(2, 0, &c).unwrap();
        let poly = e.annulus_closure(&c).unwrap();
        let mut expect = ScalarPoly::zero();
        expect.add_term(0, delta(&c));
        assert_eq!(poly, expect);

        let id2 = TLMorphism::identity(2, &c);
        let poly = id2.annulus_closure(&c).unwrap();
        let mut expect = ScalarPoly::zero();
        expect.add_term(2, c.one());
        assert_eq!(poly, expect);
    }

    #[test]
    fn catalan_counts() {
        let catalan = [1usize, 1, 2, 5, 14, 42, 132, 429, 1430];
        for k in 0..=8usize {
            assert_eq!(enumerate_matchings(k, k).len(), catalan[k], "k = {}", k);
        }
        assert_eq!(enumerate_matchings(2, 0).len(), 1);
        assert_eq!(enumerate_matchings(1, 3).len(), 2);
        assert_eq!(enumerate_matchings(1, 2).len(), 0);
    }

    #[test]
    fn cable_examples() {
        let c = ctx();
        let id1 = TLMorphism::identity(1, &c);
        assert_eq!(id1.cable(3), TLMorphism::identity(3, &c));

        let cap = TLMorphism::cap(2, 0, &c).unwrap();
        let doubled = cap.cable(2);
        let nested = TLMorphism::nested_caps(2, &c);
        assert_eq!(doubled, nested);

        let e = TLMorphism::e_element(2, 0, &c).unwrap();
        let e2 = e.cable(2);
        let sq = e2.compose(&e2, &c).unwrap();
        let d2 = delta(&c).checked_mul(&delta(&c)).unwrap();
        assert_eq!(sq, e2.scale(&d2));
    }

    #[test]
    fn cable_functorial() {
        // Cabling commutes with composition of diagrams; each loop that the
        // uncabled composition evaluates at the loop value turns into c
        // nested loops after cabling, so the two routes differ by the factor
        // delta^{loops * (c - 1)}.
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let c = ctx();
        let one = CycScalar::one(&Mode::Generic);
        for _ in 0..40 {
            let basis_a = enumerate_matchings(2, 4);
            let basis_b = enumerate_matchings(4, 2);
            let f = TLMorphism::from_matching(basis_a.choose(&mut rng).unwrap().clone(), one.clone());
            let g = TLMorphism::from_matching(basis_b.choose(&mut rng).unwrap().clone(), one.clone());
            let composite = f.compose(&g, &c).unwrap();
            let (m, coeff) = composite.terms().next().unwrap();
            let mut loops = 0;
            let mut probe = one.clone();
            while &probe != coeff {
                probe = probe.checked_mul(&delta(&c)).unwrap();
                loops += 1;
                assert!(loops < 8, "coefficient must be a loop-value power");
            }
            for cbl in 1..=3usize {
                let lhs = TLMorphism::from_matching(m.cable(cbl), one.clone());
                let rhs = f.cable(cbl).compose(&g.cable(cbl), &c).unwrap();
                let scale = delta(&c).pow((loops * cbl) as i64).unwrap();
                assert_eq!(lhs.scale(&scale), rhs, "c = {}", cbl);
                if loops == 0 {
                    // loop-free compositions cable strictly functorially
                    assert_eq!(composite.cable(cbl), rhs);
                }
            }
        }
    }

    #[test]
    fn transpose_involution() {
        let c = ctx();
        let cup = TLMorphism::cup(4, 1, &c).unwrap();
        assert_eq!(cup.transpose().transpose(), cup);
        assert_eq!(cup.transpose().source(), cup.target());
    }

    #[test]
    fn root_mode_loop_value() {
        // at N = 8 the loop value -(q + q^{-1}) is zero
        let rc = derive_root_context(8);
        let c = EvalCtx::root(&rc);
        assert!(c.loop_value().is_zero());
        let cup = TLMorphism::cup(2, 0, &c).unwrap();
        let cap = TLMorphism::cap(2, 0, &c).unwrap();
        let closed = cup.compose(&cap, &c).unwrap();
        assert!(closed.is_zero());
    }

    #[test]
    fn morphism_json_roundtrip() {
        let c = ctx();
        let e = TLMorphism::e_element(3, 0, &c).unwrap();
        let json = serde_json::to_string(&e).unwrap();
        let back: TLMorphism = serde_json::from_str(&json).unwrap();
        assert_eq!(back, e);
    }
}
