//! Expression trees over tangle atoms and their elaboration into planar
//! morphisms. Green subtrees stand for Frobenius-colored strands: a green
//! closed component is threaded by `T_n`, a green arc becomes an `n`-cable,
//! and every green arc must terminate on a projector box.

use crate::chebyshev::{chebyshev_s, chebyshev_t, quantum_factorial, quantum_integer, IntPoly};
use crate::diagram::TLMorphism;
use crate::projectors::{Label, ProjectorError, ProjectorTable};
use crate::scalar::{CycScalar, Rat};
use crate::tangle::{Slice, TangleError, TangleWord};

/// Polynomial argument of a threading operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolySpec {
    Poly(IntPoly),
    /// First-kind Chebyshev `T_n`.
    T(u32),
    /// Second-kind Chebyshev `S_n`.
    S(u32),
}

impl PolySpec {
    pub fn to_poly(&self) -> IntPoly {
        match self {
            PolySpec::Poly(p) => p.clone(),
            PolySpec::T(n) => chebyshev_t(*n),
            PolySpec::S(n) => chebyshev_s(*n),
        }
    }
}

/// Scalar literal in an expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScalarExpr {
    Rational(Rat),
    /// `q^(e/2)`, i.e. `v^e`.
    QHalfPower(i64),
    /// Quantum integer `[k]`.
    QuantumInt(u32),
    /// Quantum factorial `[k]!`.
    QuantumFact(u32),
    Product(Box<ScalarExpr>, Box<ScalarExpr>),
}

impl ScalarExpr {
    pub fn eval(&self, table: &ProjectorTable) -> CycScalar {
        let mode = table.eval_ctx().mode();
        match self {
            ScalarExpr::Rational(r) => CycScalar::from_rational(mode, r.clone()),
            ScalarExpr::QHalfPower(e) => CycScalar::v_power(mode, *e),
            ScalarExpr::QuantumInt(k) => quantum_integer(*k, mode),
            ScalarExpr::QuantumFact(k) => quantum_factorial(*k, mode),
            ScalarExpr::Product(a, b) => {
                a.eval(table).checked_mul(&b.eval(table)).expect("same mode")
            }
        }
    }
}

/// Abstract syntax of a tangle expression. Composition reads bottom-to-top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SkeinExpr {
    Id(usize),
    /// `cup(k, i)`: signature `k-2 -> k`.
    Cup(usize, usize),
    /// `cap(k, i)`: signature `k -> k-2`.
    Cap(usize, usize),
    Over(usize, usize),
    Under(usize, usize),
    E(usize, usize),
    Jw(usize),
    Jw2n1,
    JwHat(usize),
    ThickJw(usize),
    Cable(Box<SkeinExpr>, usize),
    Encircle(usize, PolySpec),
    Compose(Box<SkeinExpr>, Box<SkeinExpr>),
    Tensor(Box<SkeinExpr>, Box<SkeinExpr>),
    Add(Box<SkeinExpr>, Box<SkeinExpr>),
    Sub(Box<SkeinExpr>, Box<SkeinExpr>),
    Scale(ScalarExpr, Box<SkeinExpr>),
    /// Frobenius-colored subtree: closed components are threaded by `T_n`,
    /// open strands become `n`-cables; built programmatically.
    Green(Box<SkeinExpr>),
    /// A contractible green loop.
    GreenLoop,
}

impl SkeinExpr {
    pub fn compose(self, top: SkeinExpr) -> SkeinExpr {
        SkeinExpr::Compose(Box::new(self), Box::new(top))
    }

    pub fn tensor(self, right: SkeinExpr) -> SkeinExpr {
        SkeinExpr::Tensor(Box::new(self), Box::new(right))
    }

    pub fn green(self) -> SkeinExpr {
        SkeinExpr::Green(Box::new(self))
    }
}

struct Elab {
    m: TLMorphism,
    bottom_green: Vec<bool>,
    top_green: Vec<bool>,
    bottom_absorb: Vec<bool>,
    top_absorb: Vec<bool>,
}

impl Elab {
    fn plain(m: TLMorphism) -> Elab {
        let (s, t) = (m.source(), m.target());
        Elab {
            m,
            bottom_green: vec![false; s],
            top_green: vec![false; t],
            bottom_absorb: vec![false; s],
            top_absorb: vec![false; t],
        }
    }

    fn absorbing(m: TLMorphism, green: bool) -> Elab {
        let (s, t) = (m.source(), m.target());
        Elab {
            m,
            bottom_green: vec![green; s],
            top_green: vec![green; t],
            bottom_absorb: vec![true; s],
            top_absorb: vec![true; t],
        }
    }

    fn green(m: TLMorphism) -> Elab {
        let (s, t) = (m.source(), m.target());
        Elab {
            m,
            bottom_green: vec![true; s],
            top_green: vec![true; t],
            bottom_absorb: vec![false; s],
            top_absorb: vec![false; t],
        }
    }
}

/// Evaluate an expression to a planar morphism.
pub fn elaborate(expr: &SkeinExpr, table: &ProjectorTable) -> Result<TLMorphism, TangleError> {
    let e = elab(expr, table)?;
    if e.bottom_green.iter().chain(&e.top_green).any(|&g| g) {
        return Err(TangleError::DanglingGreenEnd);
    }
    Ok(e.m)
}

/// Evaluate an expression containing green subtrees; every green strand must
/// end on a projector box.
pub fn expand_green(expr: &SkeinExpr, table: &ProjectorTable) -> Result<TLMorphism, TangleError> {
    elaborate(expr, table)
}

fn elab(expr: &SkeinExpr, table: &ProjectorTable) -> Result<Elab, TangleError> {
    let ctx = table.eval_ctx();
    Ok(match expr {
        SkeinExpr::Id(k) => Elab::plain(TLMorphism::identity(*k, ctx)),
        SkeinExpr::Cup(k, i) => Elab::plain(TLMorphism::cup(*k, *i, ctx)?),
        SkeinExpr::Cap(k, i) => Elab::plain(TLMorphism::cap(*k, *i, ctx)?),
        SkeinExpr::Over(k, i) => Elab::plain(super::crossing_morphism(*k, *i, true, ctx)?),
        SkeinExpr::Under(k, i) => Elab::plain(super::crossing_morphism(*k, *i, false, ctx)?),
        SkeinExpr::E(k, i) => Elab::plain(TLMorphism::e_element(*k, *i, ctx)?),
        SkeinExpr::Jw(k) => Elab::absorbing((*table.projector(Label::Jw(*k))?).clone(), false),
        SkeinExpr::Jw2n1 => Elab::absorbing((*table.projector(Label::Jw2n1)?).clone(), false),
        SkeinExpr::JwHat(k) => {
            Elab::absorbing((*table.projector(Label::JwHat(*k))?).clone(), false)
        }
        SkeinExpr::ThickJw(k) => {
            // thick boundary strands are green cables by definition
            Elab::absorbing((*table.projector(Label::ThickJw(*k))?).clone(), true)
        }
        SkeinExpr::Cable(inner, c) => {
            let e = elab(inner, table)?;
            if e.bottom_green.iter().chain(&e.top_green).any(|&g| g) {
                return Err(TangleError::DanglingGreenEnd);
            }
            Elab::plain(e.m.cable(*c))
        }
        SkeinExpr::Encircle(m, poly) => {
            Elab::plain(super::encircle(*m, &poly.to_poly(), table, false)?)
        }
        SkeinExpr::GreenLoop => {
            let mut unknot = TangleWord::new(0);
            unknot.cup(0);
            unknot.cap(0);
            Elab::plain(green_expand_word(&unknot, table)?)
        }
        SkeinExpr::Green(inner) => {
            let word = word_of(inner, table)?;
            Elab::green(green_expand_word(&word, table)?)
        }
        SkeinExpr::Compose(bottom, top) => {
            let a = elab(bottom, table)?;
            let b = elab(top, table)?;
            if a.m.target() != b.m.source() {
                return Err(TangleError::Signature {
                    expected: a.m.target(),
                    got: b.m.source(),
                });
            }
            for p in 0..a.m.target() {
                let a_needs = a.top_green[p] && !(b.bottom_absorb[p] || b.bottom_green[p]);
                let b_needs = b.bottom_green[p] && !(a.top_absorb[p] || a.top_green[p]);
                if a_needs || b_needs {
                    return Err(TangleError::DanglingGreenEnd);
                }
            }
            Elab {
                m: a.m.compose(&b.m, ctx)?,
                bottom_green: a.bottom_green,
                top_green: b.top_green,
                bottom_absorb: a.bottom_absorb,
                top_absorb: b.top_absorb,
            }
        }
        SkeinExpr::Tensor(left, right) => {
            let a = elab(left, table)?;
            let b = elab(right, table)?;
            let cat = |x: &[bool], y: &[bool]| x.iter().chain(y).copied().collect::<Vec<_>>();
            Elab {
                m: a.m.tensor(&b.m),
                bottom_green: cat(&a.bottom_green, &b.bottom_green),
                top_green: cat(&a.top_green, &b.top_green),
                bottom_absorb: cat(&a.bottom_absorb, &b.bottom_absorb),
                top_absorb: cat(&a.top_absorb, &b.top_absorb),
            }
        }
        SkeinExpr::Add(x, y) | SkeinExpr::Sub(x, y) => {
            let a = elab(x, table)?;
            let b = elab(y, table)?;
            if (a.m.source(), a.m.target()) != (b.m.source(), b.m.target()) {
                return Err(TangleError::Signature {
                    expected: a.m.source(),
                    got: b.m.source(),
                });
            }
            let or = |x: &[bool], y: &[bool]| {
                x.iter().zip(y).map(|(&u, &v)| u || v).collect::<Vec<_>>()
            };
            let and = |x: &[bool], y: &[bool]| {
                x.iter().zip(y).map(|(&u, &v)| u && v).collect::<Vec<_>>()
            };
            let m = if matches!(expr, SkeinExpr::Add(_, _)) {
                a.m.add(&b.m)?
            } else {
                a.m.sub(&b.m)?
            };
            Elab {
                m,
                bottom_green: or(&a.bottom_green, &b.bottom_green),
                top_green: or(&a.top_green, &b.top_green),
                bottom_absorb: and(&a.bottom_absorb, &b.bottom_absorb),
                top_absorb: and(&a.top_absorb, &b.top_absorb),
            }
        }
        SkeinExpr::Scale(s, inner) => {
            let e = elab(inner, table)?;
            Elab { m: e.m.scale(&s.eval(table)), ..e }
        }
    })
}

/// Expand a box-free tangle word under the green convention: every closed
/// component is threaded by `T_n`, every open strand becomes an `n`-cable.
pub(super) fn green_expand_word(
    word: &TangleWord,
    table: &ProjectorTable,
) -> Result<TLMorphism, TangleError> {
    let n = table
        .root_ctx()
        .ok_or(ProjectorError::RootModeRequired)?
        .n() as usize;
    let tn = chebyshev_t(n as u32);
    word.thread_all_closed(&tn, n, table)
}

/// A pure-tangle expression rendered as a word; projector atoms and sums are
/// rejected (a green region is a single tangle).
fn word_of(expr: &SkeinExpr, table: &ProjectorTable) -> Result<TangleWord, TangleError> {
    Ok(match expr {
        SkeinExpr::Id(k) => TangleWord::new(*k),
        SkeinExpr::Cup(k, i) => {
            let mut w = TangleWord::new(*k - 2);
            w.cup(*i);
            w
        }
        SkeinExpr::Cap(k, i) => {
            let mut w = TangleWord::new(*k);
            w.cap(*i);
            w
        }
        SkeinExpr::Over(k, i) => {
            let mut w = TangleWord::new(*k);
            w.cross(*i, true);
            w
        }
        SkeinExpr::Under(k, i) => {
            let mut w = TangleWord::new(*k);
            w.cross(*i, false);
            w
        }
        SkeinExpr::E(k, i) => {
            let mut w = TangleWord::new(*k);
            w.cap(*i);
            w.cup(*i);
            w
        }
        SkeinExpr::Compose(a, b) => {
            let mut w = word_of(a, table)?;
            w.stack(&word_of(b, table)?, table)?;
            w
        }
        SkeinExpr::Tensor(a, b) => {
            let wa = word_of(a, table)?;
            let wb = word_of(b, table)?;
            let out_a = wa.output_width(table)?;
            let mut w = TangleWord::new(wa.input_width() + wb.input_width());
            for s in wa.slices() {
                w.push(s.clone());
            }
            for s in wb.slices() {
                w.push(shift_slice(s, out_a));
            }
            w
        }
        _ => {
            return Err(TangleError::MalformedWord(
                "green regions must be plain tangles".into(),
            ))
        }
    })
}

fn shift_slice(s: &Slice, offset: usize) -> Slice {
    match *s {
        Slice::Cup { pos } => Slice::Cup { pos: pos + offset },
        Slice::Cap { pos } => Slice::Cap { pos: pos + offset },
        Slice::Cross { pos, over } => Slice::Cross { pos: pos + offset, over },
        Slice::Box { pos, label } => Slice::Box { pos: pos + offset, label },
        Slice::Mark { pos, id } => Slice::Mark { pos: pos + offset, id },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::EvalCtx;
    use crate::scalar::derive_root_context;

    fn table8() -> ProjectorTable {
        ProjectorTable::root(derive_root_context(8))
    }

    #[test]
    fn green_strand_between_boxes_absorbs() {
        // jw2n1 ; (id(n-1) @ green(id(1))) ; jw2n1 = jw2n1
        let table = table8();
        let n = 2usize;
        let expr = SkeinExpr::Jw2n1
            .compose(SkeinExpr::Id(n - 1).tensor(SkeinExpr::Id(1).green()))
            .compose(SkeinExpr::Jw2n1);
        let got = expand_green(&expr, &table).unwrap();
        assert_eq!(got, *table.jw_2n_minus_1().unwrap());
    }

    #[test]
    fn green_loop_is_frobenius_loop_value() {
        for order in [8u32, 12] {
            let rc = derive_root_context(order);
            let table = ProjectorTable::root(rc.clone());
            let got = expand_green(&SkeinExpr::GreenLoop, &table).unwrap();
            let expect_scalar = rc.t().checked_add(&rc.t().inv().unwrap()).unwrap().neg();
            let ctx = EvalCtx::root(&rc);
            assert_eq!(got, TLMorphism::identity(0, &ctx).scale(&expect_scalar), "N={}", order);
        }
    }

    #[test]
    fn dangling_green_is_rejected() {
        let table = table8();
        let expr = SkeinExpr::Id(1).green();
        assert_eq!(expand_green(&expr, &table), Err(TangleError::DanglingGreenEnd));
        // composing into a non-absorbing identity is still dangling
        let expr = SkeinExpr::Id(1).green().compose(SkeinExpr::Id(2));
        assert_eq!(expand_green(&expr, &table), Err(TangleError::DanglingGreenEnd));
    }

    #[test]
    fn green_crossing_into_boxes_is_cabled_crossing() {
        // two green strands crossing, all four ends on projector boxes,
        // equals the resolved n-cable block crossing in the same sandwich
        let table = table8();
        let n = 2usize;
        let m_box = 2 * n - 1; // the 2n-1 box caps the cable plus n-1 side strands
        let boxes = SkeinExpr::Jw2n1.tensor(SkeinExpr::Jw2n1);
        let middle = SkeinExpr::Id(n - 1)
            .tensor(SkeinExpr::Over(2, 0).green())
            .tensor(SkeinExpr::Id(n - 1));
        let expr = boxes.clone().compose(middle).compose(boxes.clone());
        let got = expand_green(&expr, &table).unwrap();

        let ctx = table.eval_ctx();
        let jw = table.jw_2n_minus_1().unwrap();
        let sandwich = jw.tensor(&jw);
        let mut cross = TangleWord::new(2 * m_box);
        cross.block_cross(m_box - n, n, n, true);
        let mid = cross.resolve(&table).unwrap();
        let expect = sandwich.compose(&mid, ctx).unwrap().compose(&sandwich, ctx).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn scalar_literals_evaluate() {
        let table = ProjectorTable::generic();
        let two = ScalarExpr::QuantumInt(2).eval(&table);
        assert_eq!(two, quantum_integer(2, table.eval_ctx().mode()));
        let vfive = ScalarExpr::QHalfPower(5).eval(&table);
        assert_eq!(vfive, CycScalar::v_power(table.eval_ctx().mode(), 5));
    }
}
