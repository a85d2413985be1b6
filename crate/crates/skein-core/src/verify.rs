//! The identity suite: one check per skein identity, each producing a
//! structured pass/fail report with the difference morphism as witness on
//! failure. Every comparison is exact equality of planar morphisms; nothing
//! passes by tolerance.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::chebyshev::{chebyshev_s, chebyshev_t, quantum_integer};
use crate::diagram::TLMorphism;
use crate::projectors::{verify_jw_axioms, Label, ProjectorError, ProjectorTable};
use crate::scalar::{CycScalar, Mode};
use crate::tangle::{encircle, TangleError, TangleWord};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skipped(String),
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail)
    }
}

/// Nonzero terms of the difference morphism, capped for readability.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Witness {
    pub total_terms: usize,
    pub terms: Vec<(Vec<u16>, String)>,
}

/// Result of a single identity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub outcome: Outcome,
    pub witness: Option<Witness>,
    pub millis: u128,
}

impl Serialize for CheckReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("CheckReport", 5)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("params", &self.params)?;
        match &self.outcome {
            Outcome::Pass => st.serialize_field("status", "pass")?,
            Outcome::Fail => st.serialize_field("status", "fail")?,
            Outcome::Skipped(reason) => {
                st.serialize_field("status", &format!("skipped: {}", reason))?
            }
        }
        st.serialize_field("witness", &self.witness)?;
        st.serialize_field("millis", &self.millis)?;
        st.end()
    }
}

struct Checker {
    name: &'static str,
    params: BTreeMap<String, String>,
    start: Instant,
}

impl Checker {
    fn new(name: &'static str, table: &ProjectorTable, params: &[(&str, String)]) -> Checker {
        let mut map = BTreeMap::new();
        if let Some(rc) = table.root_ctx() {
            map.insert("N".to_string(), rc.order().to_string());
            map.insert("n".to_string(), rc.n().to_string());
        }
        for (k, v) in params {
            map.insert((*k).to_string(), v.clone());
        }
        Checker { name, params: map, start: Instant::now() }
    }

    fn finish(self, outcome: Outcome, witness: Option<Witness>) -> CheckReport {
        CheckReport {
            name: self.name.to_string(),
            params: self.params,
            outcome,
            witness,
            millis: self.start.elapsed().as_millis(),
        }
    }

    fn pass(self) -> CheckReport {
        self.finish(Outcome::Pass, None)
    }

    fn skipped(self, reason: impl Into<String>) -> CheckReport {
        self.finish(Outcome::Skipped(reason.into()), None)
    }

    /// Pass iff the two sides agree exactly; on failure the difference's
    /// nonzero terms become the witness.
    fn equal(self, lhs: &TLMorphism, rhs: &TLMorphism) -> CheckReport {
        match lhs.sub(rhs) {
            Ok(diff) if diff.is_zero() => self.pass(),
            Ok(diff) => {
                let witness = witness_of(&diff);
                self.finish(Outcome::Fail, Some(witness))
            }
            Err(e) => {
                let witness = Witness { total_terms: 0, terms: vec![(Vec::new(), e.to_string())] };
                self.finish(Outcome::Fail, Some(witness))
            }
        }
    }
}

fn witness_of(diff: &TLMorphism) -> Witness {
    let total_terms = diff.num_terms();
    let terms = diff
        .terms()
        .take(16)
        .map(|(m, c)| (m.pairing().to_vec(), c.to_string()))
        .collect();
    Witness { total_terms, terms }
}

fn qratio(mode: &Mode, num: u32, den: u32) -> CycScalar {
    quantum_integer(num, mode)
        .checked_div(&quantum_integer(den, mode))
        .expect("nonvanishing quantum integer denominator")
}

/// Close the rightmost `r` strands of `x` around `m` transverse strands:
/// the return arc passes under the bundle on the way out and over on the way
/// back (swapped when `mirror` is set).
pub fn close_right_around(
    x: &TLMorphism,
    r: usize,
    m: usize,
    mirror: bool,
    table: &ProjectorTable,
) -> Result<TLMorphism, TangleError> {
    let ctx = table.eval_ctx();
    let w = x.source();
    let lead = w - r;
    let mut lower = TangleWord::new(lead + m);
    for s in 0..r {
        lower.cup(lead + m + s);
    }
    for pass in 0..m {
        lower.block_cross(lead + m - 1 - pass, 1, r, !mirror);
    }
    let lower_m = lower.resolve(table)?;
    let mid = x.tensor(&TLMorphism::identity(m + r, ctx));
    let mut upper = TangleWord::new(lead + r + m + r);
    upper.block_cross(lead, r, m, !mirror);
    for s in (0..r).rev() {
        upper.cap(lead + m + s);
    }
    let upper_m = upper.resolve(table)?;
    Ok(lower_m.compose(&mid, ctx)?.compose(&upper_m, ctx)?)
}

/// Close one `n`-cable of `f` (its rightmost `n` strands) through an
/// absorbing box on `2n-1` strands: the cable's ends feed opposite sides of
/// the box and the box's spare `n-1` strands close around it.
pub fn close_cable_through_box(
    f: &TLMorphism,
    table: &ProjectorTable,
) -> Result<TLMorphism, TangleError> {
    let ctx = table.eval_ctx();
    let rc = table.root_ctx().ok_or(ProjectorError::RootModeRequired)?;
    let n = rc.n() as usize;
    let w = f.source();
    let corner = table.jw_2n_minus_1()?;
    let widened = f.tensor(&TLMorphism::identity(n - 1, ctx));
    let boxed = widened.compose(
        &TLMorphism::identity(w - n, ctx).tensor(&corner),
        ctx,
    )?;
    Ok(boxed.partial_trace_right(2 * n - 1, ctx)?)
}

/// Projector axiom check (identity coefficient, full uncappability,
/// idempotence) as a suite report.
pub fn check_axioms(table: &ProjectorTable, label: Label) -> CheckReport {
    let checker = Checker::new("axioms", table, &[("label", label.to_string())]);
    let jw = match table.projector(label) {
        Ok(m) => m,
        Err(e) => return checker.skipped(e.to_string()),
    };
    let ctx = table.eval_ctx();
    let report = verify_jw_axioms(&jw, ctx);
    if !report.pass() {
        return checker.finish(Outcome::Fail, None);
    }
    let sq = match jw.compose(&jw, ctx) {
        Ok(m) => m,
        Err(_) => return checker.finish(Outcome::Fail, None),
    };
    checker.equal(&sq, &jw)
}

/// Second local identity: a projector on `n-1` strands beside a projector on
/// `M` strands equals the `2n-1` element braced between two `M` boxes along
/// its rightmost `n` strands.
pub fn check_steinberg_second(table: &ProjectorTable, m_box: usize) -> CheckReport {
    let checker = Checker::new("steinberg_second", table, &[("M", m_box.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let n = rc.n() as usize;
    if m_box < n {
        return checker.skipped(format!("box size {} below n = {}", m_box, n));
    }
    let ctx = table.eval_ctx();
    let jw_m = match table.projector(Label::Jw(m_box)) {
        Ok(m) => m,
        Err(e) => return checker.skipped(e.to_string()),
    };
    let jw_small = table.jones_wenzl(n - 1).expect("below the vanishing threshold");
    let corner = table.jw_2n_minus_1().expect("always constructible");
    let lhs = jw_small.tensor(&jw_m);
    let brace = TLMorphism::identity(n - 1, ctx).tensor(&jw_m);
    let middle = corner.tensor(&TLMorphism::identity(m_box - n, ctx));
    let rhs = brace
        .compose(&middle, ctx)
        .and_then(|m| m.compose(&brace, ctx));
    match rhs {
        Ok(rhs) => checker.equal(&lhs, &rhs),
        Err(_) => checker.finish(Outcome::Fail, None),
    }
}

/// First local identity: a projector on `n-1` strands beside a `T_n`-threaded
/// loop around `m` strands equals the partial closure of the `2n-1` element
/// around those strands.
pub fn check_steinberg_first(table: &ProjectorTable, m: usize, mirror: bool) -> CheckReport {
    let checker = Checker::new(
        "steinberg_first",
        table,
        &[("m", m.to_string()), ("mirror", mirror.to_string())],
    );
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let n = rc.n() as usize;
    let jw_small = table.jones_wenzl(n - 1).expect("below the vanishing threshold");
    let corner = table.jw_2n_minus_1().expect("always constructible");
    let tn = chebyshev_t(n as u32);
    let run = || -> Result<(TLMorphism, TLMorphism), TangleError> {
        let lhs = jw_small.tensor(&encircle(m, &tn, table, mirror)?);
        let rhs = close_right_around(&corner, n, m, mirror, table)?;
        Ok((lhs, rhs))
    };
    match run() {
        Ok((lhs, rhs)) => checker.equal(&lhs, &rhs),
        Err(e) => checker.skipped(e.to_string()),
    }
}

/// Crossing of two `n`-cables between doubled `M`-boxes equals
/// `t^{1/2}` times the straight cables plus `t^{-1/2}` times the turnback.
pub fn check_ncross(table: &ProjectorTable, m_box: usize) -> CheckReport {
    let checker = Checker::new("ncross", table, &[("M", m_box.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let n = rc.n() as usize;
    if m_box < n {
        return checker.skipped(format!("box size {} below n = {}", m_box, n));
    }
    let ctx = table.eval_ctx();
    let jw_m = match table.projector(Label::Jw(m_box)) {
        Ok(m) => m,
        Err(e) => return checker.skipped(e.to_string()),
    };
    let run = || -> Result<(TLMorphism, TLMorphism), TangleError> {
        let b = jw_m.tensor(&jw_m);
        let mut xw = TangleWord::new(2 * m_box);
        xw.block_cross(m_box - n, n, n, true);
        let x = xw.resolve(table)?;
        let lhs = b.compose(&x, ctx)?.compose(&b, ctx)?;

        let caps = TLMorphism::nested_caps(n, ctx);
        let cups = TLMorphism::nested_cups(n, ctx);
        let turnback = TLMorphism::identity(m_box - n, ctx)
            .tensor(&caps.compose(&cups, ctx)?)
            .tensor(&TLMorphism::identity(m_box - n, ctx));
        let t_half = rc.t_half().clone();
        let t_half_inv = t_half.inv().expect("sign is invertible");
        let rhs = b.scale(&t_half).add(
            &b.compose(&turnback, ctx)?.compose(&b, ctx)?.scale(&t_half_inv),
        )?;
        Ok((lhs, rhs))
    };
    match run() {
        Ok((lhs, rhs)) => checker.equal(&lhs, &rhs),
        Err(e) => checker.skipped(e.to_string()),
    }
}

/// The threaded unknot evaluates to `-t - t^{-1}`.
pub fn check_frobenius_loop(table: &ProjectorTable) -> CheckReport {
    let checker = Checker::new("frobenius_loop", table, &[]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let ctx = table.eval_ctx();
    let tn = chebyshev_t(rc.n());
    let got = match encircle(0, &tn, table, false) {
        Ok(m) => m,
        Err(e) => return checker.skipped(e.to_string()),
    };
    let value = rc.t().checked_add(&rc.t().inv().unwrap()).unwrap().neg();
    let expect = TLMorphism::identity(0, ctx).scale(&value);
    checker.equal(&got, &expect)
}

fn clasp_word(m: usize, site: ClaspSite) -> TangleWord {
    let mut w = TangleWord::new(m);
    // first loop, left open until its partner dips through
    w.cup(m);
    w.mark(m, 0);
    for i in (0..m).rev() {
        w.cross(i, true);
    }
    for i in 0..m {
        w.cross(i, true);
    }
    // second loop's lower arc dips under the first loop's legs
    w.cup(m + 2);
    w.mark(m + 2, 1);
    match site {
        ClaspSite::Crossing => w.cross(m + 1, true),
        ClaspSite::Vertical => {}
        ClaspSite::Horizontal => {
            w.cap(m + 1);
            w.cup(m + 1);
        }
    }
    w.cross(m, true);
    for i in (0..m).rev() {
        w.cross(i, true);
    }
    // close the first loop, then the second
    w.cap(m + 1);
    for i in 0..m {
        w.cross(i, true);
    }
    w.cap(m);
    w
}

#[derive(Clone, Copy)]
enum ClaspSite {
    Crossing,
    Vertical,
    Horizontal,
}

/// The threading map respects the crossing relation of the sign-parameter
/// theory: on a clasp of two loops around a projector-cabled bundle,
/// resolving one crossing at `t`-weights commutes with threading every
/// component by `T_n`. The middle reduction is the `ncross` identity, whose
/// difference is asserted to vanish as part of this check.
pub fn check_frobenius_crossing(table: &ProjectorTable, m_box: usize) -> CheckReport {
    let checker = Checker::new("frobenius_crossing", table, &[("M", m_box.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let ncross = check_ncross(table, m_box);
    if ncross.outcome.is_fail() {
        return checker.finish(Outcome::Fail, ncross.witness);
    }
    let n = rc.n() as usize;
    let ctx = table.eval_ctx();
    let tn = chebyshev_t(n as u32);
    let run = || -> Result<(TLMorphism, TLMorphism), TangleError> {
        let bundle = n - 1;
        let sandwich = |x: &TLMorphism| -> Result<TLMorphism, TangleError> {
            let jw = table.jones_wenzl(bundle)?;
            Ok(jw.compose(x, ctx)?.compose(&jw, ctx)?)
        };
        let thread = |site: ClaspSite| -> Result<TLMorphism, TangleError> {
            clasp_word(bundle, site).thread_all_closed(&tn, 1, table)
        };
        let lhs = sandwich(&thread(ClaspSite::Crossing)?)?;
        let vertical = sandwich(&thread(ClaspSite::Vertical)?)?;
        let horizontal = sandwich(&thread(ClaspSite::Horizontal)?)?;
        let t_half = rc.t_half().clone();
        let rhs = vertical
            .scale(&t_half)
            .add(&horizontal.scale(&t_half.inv().expect("sign is invertible")))?;
        Ok((lhs, rhs))
    };
    match run() {
        Ok((lhs, rhs)) => checker.equal(&lhs, &rhs),
        Err(e) => checker.skipped(e.to_string()),
    }
}

/// The `n-1` projector beside the thick element equals the hat projector,
/// after closing each of the `k` cable pairs through its own absorbing box;
/// the unclosed sides also absorb into the hat projector.
pub fn check_other_steinberg(table: &ProjectorTable, k: usize) -> CheckReport {
    let checker = Checker::new("other_steinberg", table, &[("k", k.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let n = rc.n() as usize;
    let thick = match table.thick_jw(k) {
        Ok(m) => m,
        Err(e) => return checker.skipped(e.to_string()),
    };
    let ctx = table.eval_ctx();
    let run = || -> Result<Option<Witness>, TangleError> {
        let jw_small = table.jones_wenzl(n - 1)?;
        let lhs = jw_small.tensor(&thick);
        let hat = table.jw_hat(k)?;
        // absorption on the unclosed objects
        let a1 = hat.compose(&lhs, ctx)?;
        let a2 = lhs.compose(&hat, ctx)?;
        if a1 != *hat || a2 != *hat {
            let diff = a1.sub(&hat)?;
            let w = if diff.is_zero() { a2.sub(&hat)? } else { diff };
            return Ok(Some(witness_of(&w)));
        }
        // close every cable pair through its own absorbing box
        let mut closed_lhs = lhs;
        let mut closed_rhs = (*hat).clone();
        for _ in 0..k {
            closed_lhs = close_cable_through_box(&closed_lhs, table)?;
            closed_rhs = close_cable_through_box(&closed_rhs, table)?;
        }
        let diff = closed_lhs.sub(&closed_rhs)?;
        Ok(if diff.is_zero() { None } else { Some(witness_of(&diff)) })
    };
    match run() {
        Ok(None) => checker.pass(),
        Ok(Some(w)) => checker.finish(Outcome::Fail, Some(w)),
        Err(e) => checker.skipped(e.to_string()),
    }
}

/// Closing one cable of the hat projector on `k-1` scales the next one down
/// by `-[k]_t / [k-1]_t`.
pub fn check_green_trace(table: &ProjectorTable, k: usize) -> CheckReport {
    let checker = Checker::new("green_trace", table, &[("k", k.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    if k < 2 {
        return checker.skipped("requires k >= 2");
    }
    let n = rc.n() as usize;
    let ctx = table.eval_ctx();
    let run = || -> Result<(TLMorphism, TLMorphism), TangleError> {
        let upper = table.jw_hat(k - 1)?;
        let lhs = upper.partial_trace_right(n, ctx)?;
        let num = table.quantum_integer_at_t(k as u32)?;
        let den = table.quantum_integer_at_t(k as u32 - 1)?;
        let ratio = CycScalar::from_rational(ctx.mode(), -num / den);
        let rhs = table.jw_hat(k - 2)?.scale(&ratio);
        Ok((lhs, rhs))
    };
    match run() {
        Ok((lhs, rhs)) => checker.equal(&lhs, &rhs),
        Err(e) => checker.skipped(e.to_string()),
    }
}

struct WedgeClosureData {
    closures: Vec<TLMorphism>,
    head: TLMorphism,
    anchor: TLMorphism,
    head_expect: TLMorphism,
}

fn wedge_closures(
    table: &ProjectorTable,
    m_dot: usize,
) -> Result<WedgeClosureData, TangleError> {
    let rc = table.root_ctx().ok_or(ProjectorError::RootModeRequired)?;
    let n = rc.n() as usize;
    let (head_raw, wedges) = table.jw2n1_wedges()?;
    let jw = table.jones_wenzl(n - 1)?;
    let closures = wedges
        .iter()
        .map(|(a_j, _)| close_right_around(a_j, n, m_dot, false, table))
        .collect::<Result<Vec<_>, _>>()?;
    let head = close_right_around(&head_raw, n, m_dot, false, table)?;
    let anchor = if n >= 2 {
        jw.tensor(&encircle(m_dot, &chebyshev_s(n as u32 - 2), table, false)?)
    } else {
        TLMorphism::zero(m_dot, m_dot)
    };
    let xs = chebyshev_s(n as u32 - 1).mul_x();
    let head_expect = jw.tensor(&encircle(m_dot, &xs, table, false)?);
    Ok(WedgeClosureData { closures, head, anchor, head_expect })
}

/// One-term reductions of the wedge closures around `m` strands: the double
/// projector closes to the `x S_{n-1}`-threaded loop, and the chain of wedge
/// closures terminates in `cl(A_{n-1}) = ([1]/[n-1]) X_{n-2}` when solved at
/// the standard coefficients.
pub fn check_triangle(table: &ProjectorTable, m_dot: usize) -> CheckReport {
    let checker = Checker::new("triangle", table, &[("m", m_dot.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let n = rc.n() as usize;
    let mode = table.eval_ctx().mode().clone();
    let run = || -> Result<Option<Witness>, TangleError> {
        let data = wedge_closures(table, m_dot)?;
        let head_diff = data.head.sub(&data.head_expect)?;
        if !head_diff.is_zero() {
            return Ok(Some(witness_of(&head_diff)));
        }
        if n >= 2 {
            // solve the chain forward, then check the terminal equation
            let mut x = data.anchor.clone();
            for m in 0..n - 2 {
                let a = qratio(&mode, (n - m - 1) as u32, n as u32 - 1);
                let b = qratio(&mode, (n - m - 2) as u32, n as u32 - 1);
                x = data.closures[m]
                    .sub(&x.scale(&a))?
                    .scale(&b.inv().expect("nonzero below the vanishing threshold"));
            }
            let terminal = x.scale(&qratio(&mode, 1, n as u32 - 1));
            let diff = data.closures[n - 2].sub(&terminal)?;
            if !diff.is_zero() {
                return Ok(Some(witness_of(&diff)));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(None) => checker.pass(),
        Ok(Some(w)) => checker.finish(Outcome::Fail, Some(w)),
        Err(e) => checker.skipped(e.to_string()),
    }
}

/// Two-term telescoping of the wedge closures: each chain step uses the
/// coefficient pair `([n-m-1]/[n-1], [n-m-2]/[n-1])` and the alternating sum
/// collapses onto the `S_{n-2}`-threaded anchor.
pub fn check_telescoping(table: &ProjectorTable, m_dot: usize) -> CheckReport {
    let checker = Checker::new("telescoping", table, &[("m", m_dot.to_string())]);
    let rc = match table.root_ctx() {
        Some(rc) => rc,
        None => return checker.skipped("root context required"),
    };
    let n = rc.n() as usize;
    let mode = table.eval_ctx().mode().clone();
    let run = || -> Result<Option<Witness>, TangleError> {
        let data = wedge_closures(table, m_dot)?;
        // per-step: cl(A_{m+1}) = a_m X_m + b_m X_{m+1}, X solved forward
        let mut x = data.anchor.clone();
        for m in 0..n.saturating_sub(1) {
            let a = qratio(&mode, (n - m - 1) as u32, n as u32 - 1);
            let b = qratio(&mode, (n - m - 2) as u32, n as u32 - 1);
            if m == n - 2 {
                // last step: the second coefficient vanishes
                let diff = data.closures[m].sub(&x.scale(&a))?;
                if !diff.is_zero() {
                    return Ok(Some(witness_of(&diff)));
                }
            } else {
                x = data.closures[m]
                    .sub(&x.scale(&a))?
                    .scale(&b.inv().expect("nonzero below the vanishing threshold"));
            }
        }
        // collapse of the alternating sum onto the anchor
        let w = data.anchor.source();
        let mut acc = TLMorphism::zero(w, w);
        let mut negative = true;
        for c in &data.closures {
            acc = if negative { acc.sub(c)? } else { acc.add(c)? };
            negative = !negative;
        }
        let diff = acc.add(&data.anchor)?;
        Ok(if diff.is_zero() { None } else { Some(witness_of(&diff)) })
    };
    match run() {
        Ok(None) => checker.pass(),
        Ok(Some(w)) => checker.finish(Outcome::Fail, Some(w)),
        Err(e) => checker.skipped(e.to_string()),
    }
}

/// Suite configuration: which roots, parameter ranges, box sizes, and an
/// optional wall-clock budget after which remaining checks are skipped.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub roots: Vec<u32>,
    pub m_max: usize,
    pub k_max: usize,
    /// Context box sizes for the braced identities; `2n-1` when empty.
    pub box_sizes: Vec<usize>,
    pub budget: Option<Duration>,
    /// Run only checks with this name; `None` or `"all"` runs everything.
    pub only: Option<String>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            roots: vec![8, 12],
            m_max: 3,
            k_max: 3,
            box_sizes: Vec::new(),
            budget: None,
            only: None,
        }
    }
}

/// Run the whole suite in dependency order (projector axioms first), with a
/// deterministic report ordering. Individual checks may be skipped with a
/// reason; exceeding the budget skips the remainder.
pub fn run_suite(config: &SuiteConfig) -> Vec<CheckReport> {
    let start = Instant::now();
    let mut reports = Vec::new();
    let wants = |name: &str| match &config.only {
        None => true,
        Some(s) => s == "all" || s == name,
    };
    for &order in &config.roots {
        let rc = crate::scalar::derive_root_context(order);
        let n = rc.n() as usize;
        let table = ProjectorTable::root(rc);
        let boxes: Vec<usize> = if config.box_sizes.is_empty() {
            vec![2 * n - 1]
        } else {
            config.box_sizes.clone()
        };
        let mut jobs: Vec<Box<dyn FnOnce(&ProjectorTable) -> CheckReport>> = Vec::new();
        if wants("axioms") {
            for k in 1..n {
                jobs.push(Box::new(move |t| check_axioms(t, Label::Jw(k))));
            }
            jobs.push(Box::new(|t| check_axioms(t, Label::Jw2n1)));
            for k in 2..=config.k_max {
                jobs.push(Box::new(move |t| check_axioms(t, Label::JwHat(k))));
            }
        }
        if wants("triangle") {
            for m in 0..=config.m_max {
                jobs.push(Box::new(move |t| check_triangle(t, m)));
            }
        }
        if wants("telescoping") {
            for m in 0..=config.m_max {
                jobs.push(Box::new(move |t| check_telescoping(t, m)));
            }
        }
        if wants("steinberg_second") {
            for &m_box in &boxes {
                jobs.push(Box::new(move |t| check_steinberg_second(t, m_box)));
            }
        }
        if wants("steinberg_first") {
            for m in 0..=config.m_max {
                for mirror in [false, true] {
                    jobs.push(Box::new(move |t| check_steinberg_first(t, m, mirror)));
                }
            }
        }
        if wants("ncross") {
            for &m_box in &boxes {
                jobs.push(Box::new(move |t| check_ncross(t, m_box)));
            }
        }
        if wants("frobenius_loop") {
            jobs.push(Box::new(|t| check_frobenius_loop(t)));
        }
        if wants("frobenius_crossing") {
            for &m_box in &boxes {
                jobs.push(Box::new(move |t| check_frobenius_crossing(t, m_box)));
            }
        }
        if wants("green_trace") {
            for k in 2..=config.k_max {
                jobs.push(Box::new(move |t| check_green_trace(t, k)));
            }
        }
        if wants("other_steinberg") {
            for k in 1..=config.k_max {
                jobs.push(Box::new(move |t| check_other_steinberg(t, k)));
            }
        }
        for job in jobs {
            if let Some(budget) = config.budget {
                if start.elapsed() > budget {
                    // record the skip with the root context attached
                    let checker = Checker::new("skipped", &table, &[]);
                    reports.push(checker.skipped("time budget exhausted"));
                    continue;
                }
            }
            reports.push(job(&table));
        }
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::derive_root_context;

    fn table(order: u32) -> ProjectorTable {
        ProjectorTable::root(derive_root_context(order))
    }

    #[test]
    fn steinberg_second_examples() {
        let t8 = table(8);
        assert!(check_steinberg_second(&t8, 3).outcome.is_pass());
        let t12 = table(12);
        assert!(check_steinberg_second(&t12, 5).outcome.is_pass());
        let t2 = table(2);
        assert!(check_steinberg_second(&t2, 1).outcome.is_pass());
    }

    #[test]
    fn steinberg_first_small() {
        let t8 = table(8);
        for m in 0..=2 {
            for mirror in [false, true] {
                let r = check_steinberg_first(&t8, m, mirror);
                assert!(r.outcome.is_pass(), "m={} mirror={}: {:?}", m, mirror, r.outcome);
            }
        }
    }

    #[test]
    fn ncross_small() {
        let t8 = table(8);
        let r = check_ncross(&t8, 3);
        assert!(r.outcome.is_pass(), "{:?}", r);
        // n = 1 reduces to the bracket relation braced by identities
        let t2 = table(2);
        assert!(check_ncross(&t2, 1).outcome.is_pass());
    }

    #[test]
    fn frobenius_loop_all_small_roots() {
        for order in 1..=16u32 {
            let t = table(order);
            let r = check_frobenius_loop(&t);
            assert!(r.outcome.is_pass(), "N = {}: {:?}", order, r.outcome);
        }
    }

    #[test]
    fn frobenius_crossing_small() {
        let t2 = table(2);
        assert!(check_frobenius_crossing(&t2, 1).outcome.is_pass());
        let t8 = table(8);
        let r = check_frobenius_crossing(&t8, 3);
        assert!(r.outcome.is_pass(), "{:?}", r.outcome);
    }

    #[test]
    fn green_trace_examples() {
        let t8 = table(8);
        let r = check_green_trace(&t8, 2);
        assert!(r.outcome.is_pass(), "{:?}", r.outcome);
        let t12 = table(12);
        let r = check_green_trace(&t12, 2);
        assert!(r.outcome.is_pass(), "{:?}", r.outcome);
    }

    #[test]
    fn other_steinberg_k1() {
        let t8 = table(8);
        let r = check_other_steinberg(&t8, 1);
        assert!(r.outcome.is_pass(), "{:?}", r.outcome);
    }

    #[test]
    fn wedge_lemmas_small() {
        for order in [8u32, 12] {
            let t = table(order);
            for m in 0..=1 {
                assert!(check_triangle(&t, m).outcome.is_pass(), "triangle N={} m={}", order, m);
                assert!(
                    check_telescoping(&t, m).outcome.is_pass(),
                    "telescoping N={} m={}",
                    order,
                    m
                );
            }
        }
    }

    #[test]
    fn degenerate_tower_passes() {
        // n = 1: every check degenerates to a bracket identity
        let cfg = SuiteConfig {
            roots: vec![2],
            m_max: 1,
            k_max: 2,
            box_sizes: Vec::new(),
            budget: None,
            only: None,
        };
        let reports = run_suite(&cfg);
        assert!(!reports.is_empty());
        for r in &reports {
            assert!(!r.outcome.is_fail(), "{} {:?} failed", r.name, r.params);
        }
    }

    #[test]
    fn report_json_shape() {
        let t8 = table(8);
        let r = check_frobenius_loop(&t8);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["name"], "frobenius_loop");
        assert_eq!(json["status"], "pass");
        assert_eq!(json["params"]["N"], "8");
    }

    #[test]
    fn failure_produces_witness() {
        let t8 = table(8);
        let ctx = t8.eval_ctx();
        let checker = Checker::new("probe", &t8, &[]);
        let id = TLMorphism::identity(2, ctx);
        let e = TLMorphism::e_element(2, 0, ctx).unwrap();
        let r = checker.equal(&id, &e);
        assert!(r.outcome.is_fail());
        let w = r.witness.unwrap();
        assert!(w.total_terms > 0);
    }
}
