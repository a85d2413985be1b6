//! Jones-Wenzl-type elements: the generic recursion, the root-of-unity
//! element on `2n-1` strands, thick (cabled) projectors built at the sign
//! parameter `t`, and the tower on `n-1+kn` strands assembled from both.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::chebyshev::quantum_integer;
use crate::diagram::{DiagramError, EvalCtx, TLMorphism};
use crate::scalar::{rat_int, CycScalar, Rat, RootContext};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProjectorError {
    #[error("quantum integer [{0}] vanishes")]
    QuantumIntegerVanishes(u32),
    #[error("thick element undefined: [{0}]_t vanishes")]
    ThickJwNotDefined(u32),
    #[error("operation requires a root-of-unity context")]
    RootModeRequired,
    #[error("no projector on {strands} strands at this root: [{vanishing}] = 0")]
    NotConstructible { strands: usize, vanishing: u32 },
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// Cache key for the projector table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Ordinary projector on `k` strands.
    Jw(usize),
    /// The root-of-unity element on `2n-1` strands.
    Jw2n1,
    /// Thick element: the `k`-strand projector at parameter `t`, each strand
    /// an `n`-cable.
    ThickJw(usize),
    /// The projector on `n-1+kn` strands.
    JwHat(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Jw(k) => write!(f, "jw({})", k),
            Label::Jw2n1 => write!(f, "jw2n1"),
            Label::ThickJw(k) => write!(f, "tjw({})", k),
            Label::JwHat(k) => write!(f, "jwhat({})", k),
        }
    }
}

/// Constructs and memoizes projectors for one arithmetic context. Values are
/// immutable once built, so concurrent construction of the same label is
/// idempotent.
pub struct ProjectorTable {
    eval: EvalCtx,
    root: Option<RootContext>,
    cache: RwLock<HashMap<Label, Arc<TLMorphism>>>,
}

impl ProjectorTable {
    pub fn generic() -> Self {
        ProjectorTable { eval: EvalCtx::generic(), root: None, cache: RwLock::new(HashMap::new()) }
    }

    pub fn root(ctx: RootContext) -> Self {
        ProjectorTable {
            eval: EvalCtx::root(&ctx),
            root: Some(ctx),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn eval_ctx(&self) -> &EvalCtx {
        &self.eval
    }

    pub fn root_ctx(&self) -> Option<&RootContext> {
        self.root.as_ref()
    }

    fn lookup(&self, label: Label) -> Option<Arc<TLMorphism>> {
        self.cache.read().unwrap().get(&label).cloned()
    }

    fn store(&self, label: Label, m: TLMorphism) -> Arc<TLMorphism> {
        let arc = Arc::new(m);
        self.cache
            .write()
            .unwrap()
            .entry(label)
            .or_insert_with(|| arc.clone())
            .clone()
    }

    fn require_root(&self) -> Result<&RootContext, ProjectorError> {
        self.root.as_ref().ok_or(ProjectorError::RootModeRequired)
    }

    /// The projector on `k` strands by the two-term recursion. In root mode
    /// this requires `[j] != 0` for all `2 <= j <= k`, i.e. `k <= n-1`.
    pub fn jones_wenzl(&self, k: usize) -> Result<Arc<TLMorphism>, ProjectorError> {
        if let Some(m) = self.lookup(Label::Jw(k)) {
            return Ok(m);
        }
        let mode = self.eval.mode().clone();
        let qint = |j: u32| quantum_integer(j, &mode);
        let m = self.jw_recursion_tower(k, &self.eval, &qint, |j| {
            ProjectorError::QuantumIntegerVanishes(j)
        })?;
        Ok(self.store(Label::Jw(k), m))
    }

    /// Builds the recursion tower up to `k` under the given quantum-integer
    /// assignment, caching intermediate ordinary projectors only when the
    /// assignment is the ambient one (signalled by `cache_as_jw`).
    fn jw_recursion_tower(
        &self,
        k: usize,
        ctx: &EvalCtx,
        qint: &dyn Fn(u32) -> CycScalar,
        vanish: impl Fn(u32) -> ProjectorError,
    ) -> Result<TLMorphism, ProjectorError> {
        let mut prev = TLMorphism::identity(k.min(1), ctx);
        if k <= 1 {
            return Ok(prev);
        }
        for j in 2..=k {
            let denom = qint(j as u32);
            if denom.is_zero() {
                return Err(vanish(j as u32));
            }
            let coeff = qint(j as u32 - 1).checked_div(&denom).expect("nonzero denominator");
            let wide = prev.tensor(&TLMorphism::identity(1, ctx));
            let hook_mid = TLMorphism::identity(j - 2, ctx)
                .tensor(&TLMorphism::e_element(2, 0, ctx)?);
            let hook = wide.compose(&hook_mid, ctx)?.compose(&wide, ctx)?;
            prev = wide.add(&hook.scale(&coeff))?;
        }
        Ok(prev)
    }

    /// The signed-sum element on `2n-1` strands, assembled from two copies of
    /// the projector on `n-1` strands per wedge diagram.
    pub fn jw_2n_minus_1(&self) -> Result<Arc<TLMorphism>, ProjectorError> {
        if let Some(m) = self.lookup(Label::Jw2n1) {
            return Ok(m);
        }
        let (head, wedges) = self.jw2n1_wedges()?;
        let mut acc = head;
        let mut sign = -1i64;
        for (a, a_flip) in &wedges {
            let signed = if sign < 0 { a.neg().sub(a_flip)? } else { a.add(a_flip)? };
            acc = acc.add(&signed)?;
            sign = -sign;
        }
        Ok(self.store(Label::Jw2n1, acc))
    }

    /// The pieces of the `2n-1` element: the double-projector term `A_0` and
    /// the wedge pairs `(A_k, A_k')`, `k = 1 .. n-1`, before signs.
    pub fn jw2n1_wedges(
        &self,
    ) -> Result<(TLMorphism, Vec<(TLMorphism, TLMorphism)>), ProjectorError> {
        let rc = self.require_root()?;
        let n = rc.n() as usize;
        let ctx = &self.eval;
        if n == 1 {
            return Ok((TLMorphism::identity(1, ctx), Vec::new()));
        }
        let jw = self.jones_wenzl(n - 1)?;
        let head = jw.tensor(&TLMorphism::identity(1, ctx)).tensor(&jw);
        let mut wedges = Vec::new();
        for k in 1..n {
            let a = self.wedge(n, k, &jw)?;
            let a_flip = a.transpose();
            wedges.push((a, a_flip));
        }
        Ok((head, wedges))
    }

    /// The wedge `A_k` on `2n-1` strands: lower-right projector, a nested cap
    /// block, the mirrored cup block, and the upper-left projector, with one
    /// strand running diagonally between the turnbacks.
    fn wedge(&self, n: usize, k: usize, jw: &TLMorphism) -> Result<TLMorphism, ProjectorError> {
        let ctx = &self.eval;
        let lower = TLMorphism::identity(n, ctx).tensor(jw);
        let caps = TLMorphism::identity(n - k, ctx)
            .tensor(&TLMorphism::nested_caps(k, ctx))
            .tensor(&TLMorphism::identity(n - 1 - k, ctx));
        let cups = TLMorphism::identity(n - 1 - k, ctx)
            .tensor(&TLMorphism::nested_cups(k, ctx))
            .tensor(&TLMorphism::identity(n - k, ctx));
        let upper = jw.tensor(&TLMorphism::identity(n, ctx));
        Ok(lower.compose(&caps, ctx)?.compose(&cups, ctx)?.compose(&upper, ctx)?)
    }

    /// The quantum integer at the sign `t`, as a rational.
    pub fn quantum_integer_at_t(&self, j: u32) -> Result<Rat, ProjectorError> {
        let rc = self.require_root()?;
        let t = rc.t_sign() as i64;
        let mut val = 0i64;
        let mut e = j as i64 - 1;
        while e >= 1 - j as i64 {
            val += if t == 1 || e.rem_euclid(2) == 0 { 1 } else { -1 };
            e -= 2;
        }
        Ok(rat_int(val))
    }

    /// The projector on `k` strands computed at the scalar parameter `t`,
    /// with every strand replaced by an `n`-cable.
    pub fn thick_jw(&self, k: usize) -> Result<Arc<TLMorphism>, ProjectorError> {
        if let Some(m) = self.lookup(Label::ThickJw(k)) {
            return Ok(m);
        }
        let rc = self.require_root()?;
        let n = rc.n() as usize;
        let mode = self.eval.mode().clone();
        let t = rc.t_sign() as i64;
        // loop value of the t-parameter theory: -(t + t^{-1}) = -2t
        let tctx = EvalCtx::with_loop_value(mode.clone(), CycScalar::from_integer(&mode, -2 * t));
        let qint_t = {
            let table = self;
            move |j: u32| -> CycScalar {
                let r = table.quantum_integer_at_t(j).expect("root mode checked");
                CycScalar::from_rational(&mode, r)
            }
        };
        let thin = self.jw_recursion_tower(k, &tctx, &qint_t, ProjectorError::ThickJwNotDefined)?;
        let thick = thin.cable(n);
        Ok(self.store(Label::ThickJw(k), thick))
    }

    /// The projector on `n-1+kn` strands: base cases are the `n-1` projector
    /// and the `2n-1` element; the step stacks two copies of the previous
    /// level, the thick element, and two `2n-1` boxes.
    pub fn jw_hat(&self, k: usize) -> Result<Arc<TLMorphism>, ProjectorError> {
        if let Some(m) = self.lookup(Label::JwHat(k)) {
            return Ok(m);
        }
        let rc = self.require_root()?;
        let n = rc.n() as usize;
        let m = match k {
            0 => (*self.jones_wenzl(n - 1)?).clone(),
            1 => (*self.jw_2n_minus_1()?).clone(),
            _ => {
                let ctx = &self.eval;
                let a = (k - 1) * n;
                let prev = self.jw_hat(k - 1)?;
                let corner = self.jw_2n_minus_1()?;
                let thick = self.thick_jw(k)?;
                let pad_corner = TLMorphism::identity(a, ctx).tensor(&corner);
                let pad_prev = prev.tensor(&TLMorphism::identity(n, ctx));
                let pad_thick = TLMorphism::identity(n - 1, ctx).tensor(&thick);
                pad_corner
                    .compose(&pad_prev, ctx)?
                    .compose(&pad_thick, ctx)?
                    .compose(&pad_prev, ctx)?
                    .compose(&pad_corner, ctx)?
            }
        };
        Ok(self.store(Label::JwHat(k), m))
    }

    /// Resolve a named projector. `Jw(k)` dispatches to the recursion when
    /// `[j] != 0` for `j <= k`, to the `2n-1` formula when `k = 2n-1`, to the
    /// hat tower when `k = n-1+jn`, and reports the vanishing quantum integer
    /// otherwise.
    pub fn projector(&self, label: Label) -> Result<Arc<TLMorphism>, ProjectorError> {
        match label {
            Label::Jw2n1 => self.jw_2n_minus_1(),
            Label::ThickJw(k) => self.thick_jw(k),
            Label::JwHat(k) => self.jw_hat(k),
            Label::Jw(k) => match &self.root {
                None => self.jones_wenzl(k),
                Some(rc) => {
                    let n = rc.n() as usize;
                    if k < n {
                        self.jones_wenzl(k)
                    } else if k == 2 * n - 1 {
                        self.jw_2n_minus_1()
                    } else if k >= n - 1 && (k - (n - 1)) % n == 0 {
                        self.jw_hat((k - (n - 1)) / n)
                    } else {
                        Err(ProjectorError::NotConstructible { strands: k, vanishing: rc.n() })
                    }
                }
            },
        }
    }
}

/// Axiom check report: identity coefficient and per-position cap kills.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub square: bool,
    pub identity_coefficient_is_one: bool,
    /// Positions `(side, i)` where a single adjacent cap does not kill the
    /// element; side is "top" or "bottom".
    pub cap_failures: Vec<(&'static str, usize)>,
}

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.square && self.identity_coefficient_is_one && self.cap_failures.is_empty()
    }
}

/// Check the two defining properties: coefficient of the identity diagram is
/// one, and every single adjacent cap (top or bottom, each position) kills
/// the element.
pub fn verify_jw_axioms(f: &TLMorphism, ctx: &EvalCtx) -> AxiomReport {
    let k = f.source();
    let square = f.target() == k;
    let identity_coefficient_is_one =
        square && f.identity_coefficient().map_or(false, |c| c.is_one());
    let mut cap_failures = Vec::new();
    if square && k >= 2 {
        for i in 0..=k - 2 {
            let cap = TLMorphism::cap(k, i, ctx).expect("valid cap position");
            if !f.compose(&cap, ctx).expect("signatures match").is_zero() {
                cap_failures.push(("top", i));
            }
            let cup = TLMorphism::cup(k, i, ctx).expect("valid cup position");
            if !cup.compose(f, ctx).expect("signatures match").is_zero() {
                cap_failures.push(("bottom", i));
            }
        }
    }
    AxiomReport { square, identity_coefficient_is_one, cap_failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::quantum_integer;
    use crate::scalar::{derive_root_context, Mode};

    #[test]
    fn jw_small_generic() {
        let table = ProjectorTable::generic();
        let ctx = table.eval_ctx();
        assert_eq!(*table.jones_wenzl(1).unwrap(), TLMorphism::identity(1, ctx));
        // jw(2) = id + (1/[2]) e
        let jw2 = table.jones_wenzl(2).unwrap();
        let e = TLMorphism::e_element(2, 0, ctx).unwrap();
        let inv2 = quantum_integer(2, &Mode::Generic).inv().unwrap();
        let expect = TLMorphism::identity(2, ctx).add(&e.scale(&inv2)).unwrap();
        assert_eq!(*jw2, expect);
    }

    #[test]
    fn jw_axioms_generic() {
        let table = ProjectorTable::generic();
        for k in 1..=5 {
            let jw = table.jones_wenzl(k).unwrap();
            let report = verify_jw_axioms(&jw, table.eval_ctx());
            assert!(report.pass(), "k = {}: {:?}", k, report);
            // idempotent
            let sq = jw.compose(&jw, table.eval_ctx()).unwrap();
            assert_eq!(sq, *jw, "k = {}", k);
        }
        // the bare identity on 2 strands is cappable
        let id2 = TLMorphism::identity(2, table.eval_ctx());
        assert!(!verify_jw_axioms(&id2, table.eval_ctx()).pass());
        let id1 = TLMorphism::identity(1, table.eval_ctx());
        assert!(verify_jw_axioms(&id1, table.eval_ctx()).pass());
    }

    #[test]
    fn jw_vanishing_at_root() {
        let table = ProjectorTable::root(derive_root_context(8));
        assert!(table.jones_wenzl(1).is_ok());
        assert_eq!(
            table.jones_wenzl(2).unwrap_err(),
            ProjectorError::QuantumIntegerVanishes(2)
        );
        let table = ProjectorTable::root(derive_root_context(12));
        assert!(table.jones_wenzl(2).is_ok());
        assert_eq!(
            table.jones_wenzl(3).unwrap_err(),
            ProjectorError::QuantumIntegerVanishes(3)
        );
    }

    #[test]
    fn jw_2n1_axioms_at_8_and_12() {
        for order in [8u32, 12] {
            let table = ProjectorTable::root(derive_root_context(order));
            let jw = table.jw_2n_minus_1().unwrap();
            let n = table.root_ctx().unwrap().n() as usize;
            assert_eq!(jw.source(), 2 * n - 1);
            let report = verify_jw_axioms(&jw, table.eval_ctx());
            assert!(report.pass(), "N = {}: {:?}", order, report);
            let sq = jw.compose(&jw, table.eval_ctx()).unwrap();
            assert_eq!(sq, *jw, "N = {}", order);
        }
    }

    #[test]
    fn jw_2n1_degenerate_n1() {
        let table = ProjectorTable::root(derive_root_context(2));
        let jw = table.jw_2n_minus_1().unwrap();
        assert_eq!(*jw, TLMorphism::identity(1, table.eval_ctx()));
    }

    #[test]
    fn jw_2n1_matches_specialized_generic() {
        // clear-denominator route: the reduced generic coefficients of the
        // projector on 2n-1 strands specialize cleanly at the root and agree
        // with the wedge-sum construction.
        let generic = ProjectorTable::generic();
        for order in [8u32, 12] {
            let rc = derive_root_context(order);
            let n = rc.n() as usize;
            let table = ProjectorTable::root(rc.clone());
            let from_generic = generic
                .jones_wenzl(2 * n - 1)
                .unwrap()
                .specialize(&rc)
                .expect("reduced denominators avoid the root");
            assert_eq!(from_generic, *table.jw_2n_minus_1().unwrap(), "N = {}", order);
        }
    }

    #[test]
    fn trace_ratio_generic() {
        let table = ProjectorTable::generic();
        let ctx = table.eval_ctx();
        let g = Mode::Generic;
        for m in 2..=5usize {
            let jw = table.jones_wenzl(m).unwrap();
            let traced = jw.partial_trace_right(1, ctx).unwrap();
            let ratio = quantum_integer(m as u32 + 1, &g)
                .checked_div(&quantum_integer(m as u32, &g))
                .unwrap()
                .neg();
            let expect = table.jones_wenzl(m - 1).unwrap().scale(&ratio);
            assert_eq!(traced, expect, "m = {}", m);
        }
    }

    #[test]
    fn absorption_small() {
        let table = ProjectorTable::generic();
        let ctx = table.eval_ctx();
        let jw3 = table.jones_wenzl(3).unwrap();
        for b in 1..=3usize {
            for left in 0..=(3 - b) {
                let jwb = table.jones_wenzl(b).unwrap();
                let padded = TLMorphism::identity(left, ctx)
                    .tensor(&jwb)
                    .tensor(&TLMorphism::identity(3 - b - left, ctx));
                assert_eq!(padded.compose(&jw3, ctx).unwrap(), *jw3, "b={} left={}", b, left);
                assert_eq!(jw3.compose(&padded, ctx).unwrap(), *jw3, "b={} left={}", b, left);
            }
        }
    }

    #[test]
    fn thick_jw_examples() {
        // k = 1 is the n-cabled single strand
        let table = ProjectorTable::root(derive_root_context(8));
        let ctx = table.eval_ctx();
        assert_eq!(*table.thick_jw(1).unwrap(), TLMorphism::identity(2, ctx));
        // k = 2 at t = 1: id + (1/2) e, doubled
        let thick = table.thick_jw(2).unwrap();
        let e2 = TLMorphism::e_element(2, 0, ctx).unwrap().cable(2);
        let half = CycScalar::from_rational(ctx.mode(), Rat::new(1.into(), 2.into()));
        let expect = TLMorphism::identity(4, ctx).add(&e2.scale(&half)).unwrap();
        assert_eq!(*thick, expect);
        // t = -1: [2]_t = -2, never zero
        let table = ProjectorTable::root(derive_root_context(12));
        assert_eq!(table.quantum_integer_at_t(2).unwrap(), rat_int(-2));
        assert_eq!(table.quantum_integer_at_t(3).unwrap(), rat_int(3));
        assert!(table.thick_jw(2).is_ok());
    }

    #[test]
    fn jw_hat_base_and_axioms() {
        let table = ProjectorTable::root(derive_root_context(8));
        assert_eq!(table.jw_hat(1).unwrap(), table.jw_2n_minus_1().unwrap());
        let hat2 = table.jw_hat(2).unwrap();
        assert_eq!(hat2.source(), 5);
        let report = verify_jw_axioms(&hat2, table.eval_ctx());
        assert!(report.pass(), "{:?}", report);
        let sq = hat2.compose(&hat2, table.eval_ctx()).unwrap();
        assert_eq!(sq, *hat2);
    }

    #[test]
    fn projector_dispatch() {
        let table = ProjectorTable::root(derive_root_context(8));
        // n = 2: widths 1 (= n-1), 3 (= 2n-1), 5 (= n-1+2n), ... exist
        assert!(table.projector(Label::Jw(1)).is_ok());
        assert!(table.projector(Label::Jw(3)).is_ok());
        assert!(table.projector(Label::Jw(5)).is_ok());
        let err = table.projector(Label::Jw(2)).unwrap_err();
        assert_eq!(err, ProjectorError::NotConstructible { strands: 2, vanishing: 2 });
        let err = table.projector(Label::Jw(4)).unwrap_err();
        assert_eq!(err, ProjectorError::NotConstructible { strands: 4, vanishing: 2 });
    }

    #[test]
    fn perturbed_element_fails_axioms() {
        let table = ProjectorTable::root(derive_root_context(8));
        let ctx = table.eval_ctx();
        let jw = table.jw_2n_minus_1().unwrap();
        let one = ctx.one();
        for (m, _) in jw.terms() {
            let bump = TLMorphism::from_matching(m.clone(), one.clone());
            let perturbed = jw.add(&bump).unwrap();
            assert!(
                !verify_jw_axioms(&perturbed, ctx).pass(),
                "perturbing {:?} must break an axiom",
                m
            );
        }
    }
}
