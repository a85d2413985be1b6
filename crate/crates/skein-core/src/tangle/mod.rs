//! Tangles with crossings: slice words, Kauffman-bracket resolution into
//! planar morphisms, closed-component tracking, per-component cabling, and
//! polynomial threading.
//!
//! A word reads bottom-to-top. Crossings resolve by the bracket relation
//! (over = `q^{1/2}` vertical + `q^{-1/2}` horizontal); named projector boxes
//! resolve through a [`ProjectorTable`].

mod expr;
mod parser;

pub use expr::{elaborate, expand_green, PolySpec, ScalarExpr, SkeinExpr};
pub use parser::parse;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::chebyshev::IntPoly;
use crate::diagram::{DiagramError, EvalCtx, TLMorphism};
use crate::projectors::{Label, ProjectorError, ProjectorTable};
use crate::scalar::CycScalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TangleError {
    #[error("malformed word: {0}")]
    MalformedWord(String),
    #[error("box not constructible: {0}")]
    BoxNotConstructible(#[from] ProjectorError),
    #[error("component {0} is not a closed component")]
    NotAClosedComponent(u32),
    #[error("cannot cable a component through a projector box")]
    ThreadThroughBox,
    #[error("green strand does not terminate at a projector")]
    DanglingGreenEnd,
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("signature mismatch in expression: expected width {expected}, got {got}")]
    Signature { expected: usize, got: usize },
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// One elementary layer of a tangle word, acting at a strand position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slice {
    /// Insert an adjacent pair of strands at `pos`; width `w -> w+2`.
    Cup { pos: usize },
    /// Join the strands at `pos, pos+1`; width `w -> w-2`.
    Cap { pos: usize },
    /// Strands at `pos, pos+1` cross; `over` means the strand at `pos`
    /// passes over its right neighbour as they swap.
    Cross { pos: usize, over: bool },
    /// A named projector occupying positions `pos ..` by its own width.
    Box { pos: usize, label: Label },
    /// Annotation naming the component of the strand at `pos`.
    Mark { pos: usize, id: u32 },
}

/// Identifier of a tangle component (the least segment index in its class).
pub type ComponentId = u32;

/// A bottom-to-top tangle word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TangleWord {
    input: usize,
    slices: Vec<Slice>,
}

impl TangleWord {
    pub fn new(input: usize) -> Self {
        TangleWord { input, slices: Vec::new() }
    }

    pub fn input_width(&self) -> usize {
        self.input
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn push(&mut self, s: Slice) {
        self.slices.push(s);
    }

    pub fn cup(&mut self, pos: usize) {
        self.push(Slice::Cup { pos });
    }

    pub fn cap(&mut self, pos: usize) {
        self.push(Slice::Cap { pos });
    }

    pub fn cross(&mut self, pos: usize, over: bool) {
        self.push(Slice::Cross { pos, over });
    }

    pub fn boxed(&mut self, pos: usize, label: Label) {
        self.push(Slice::Box { pos, label });
    }

    pub fn mark(&mut self, pos: usize, id: u32) {
        self.push(Slice::Mark { pos, id });
    }

    /// Append `other` on top; widths must match.
    pub fn stack(&mut self, other: &TangleWord, table: &ProjectorTable) -> Result<(), TangleError> {
        let w = self.output_width(table)?;
        if w != other.input {
            return Err(TangleError::Signature { expected: w, got: other.input });
        }
        self.slices.extend(other.slices.iter().cloned());
        Ok(())
    }

    /// All `a*b` crossings of the block `[pos, pos+a)` over/under the block
    /// `[pos+a, pos+a+b)`; the left block passes over iff `left_over`.
    pub fn block_cross(&mut self, pos: usize, a: usize, b: usize, left_over: bool) {
        for i in (0..a).rev() {
            for j in 0..b {
                self.cross(pos + i + j, left_over);
            }
        }
    }

    fn box_width(label: Label, table: &ProjectorTable) -> Result<usize, TangleError> {
        let n = || -> Result<usize, TangleError> {
            Ok(table.root_ctx().ok_or(ProjectorError::RootModeRequired)?.n() as usize)
        };
        Ok(match label {
            Label::Jw(k) => k,
            Label::Jw2n1 => 2 * n()? - 1,
            Label::ThickJw(k) => k * n()?,
            Label::JwHat(k) => n()? - 1 + k * n()?,
        })
    }

    /// Width profile before each slice plus the final width; errors on
    /// position underflow or overflow.
    pub fn widths(&self, table: &ProjectorTable) -> Result<Vec<usize>, TangleError> {
        let mut w = self.input;
        let mut out = vec![w];
        for (idx, s) in self.slices.iter().enumerate() {
            let bad = |msg: &str| {
                Err(TangleError::MalformedWord(format!("slice {}: {} (width {})", idx, msg, w)))
            };
            match *s {
                Slice::Cup { pos } => {
                    if pos > w {
                        return bad("cup position exceeds width");
                    }
                    w += 2;
                }
                Slice::Cap { pos } => {
                    if w < 2 || pos > w - 2 {
                        return bad("cap position exceeds width");
                    }
                    w -= 2;
                }
                Slice::Cross { pos, .. } => {
                    if w < 2 || pos > w - 2 {
                        return bad("crossing position exceeds width");
                    }
                }
                Slice::Box { pos, label } => {
                    let size = Self::box_width(label, table)?;
                    if pos + size > w {
                        return bad("box exceeds width");
                    }
                }
                Slice::Mark { pos, .. } => {
                    if pos >= w {
                        return bad("mark position exceeds width");
                    }
                }
            }
            out.push(w);
        }
        Ok(out)
    }

    pub fn output_width(&self, table: &ProjectorTable) -> Result<usize, TangleError> {
        Ok(*self.widths(table)?.last().unwrap())
    }

    /// Resolve to a planar morphism: crossings expand by the bracket
    /// relation, boxes by the projector table, slices compose in order.
    pub fn resolve(&self, table: &ProjectorTable) -> Result<TLMorphism, TangleError> {
        let ctx = table.eval_ctx();
        self.widths(table)?;
        let mut acc = TLMorphism::identity(self.input, ctx);
        let mut w = self.input;
        for s in &self.slices {
            let layer = match *s {
                Slice::Cup { pos } => {
                    w += 2;
                    TLMorphism::cup(w, pos, ctx)?
                }
                Slice::Cap { pos } => {
                    let m = TLMorphism::cap(w, pos, ctx)?;
                    w -= 2;
                    m
                }
                Slice::Cross { pos, over } => crossing_morphism(w, pos, over, ctx)?,
                Slice::Box { pos, label } => {
                    let jw = table.projector(label)?;
                    let right = w - pos - jw.source();
                    TLMorphism::identity(pos, ctx)
                        .tensor(&jw)
                        .tensor(&TLMorphism::identity(right, ctx))
                }
                Slice::Mark { .. } => continue,
            };
            acc = acc.compose(&layer, ctx)?;
        }
        Ok(acc)
    }

    fn trace_components(&self, table: &ProjectorTable) -> Result<Components, TangleError> {
        self.widths(table)?;
        let mut uf = UnionFind::new();
        let mut open: Vec<bool> = Vec::new();
        let mut segs: Vec<u32> = Vec::new();
        let fresh = |uf: &mut UnionFind, open: &mut Vec<bool>, is_open: bool| -> u32 {
            let id = uf.fresh();
            open.push(is_open);
            id
        };
        for _ in 0..self.input {
            let id = fresh(&mut uf, &mut open, true);
            segs.push(id);
        }
        let mut marks = BTreeMap::new();
        let mut slice_segs: Vec<Vec<u32>> = Vec::with_capacity(self.slices.len());
        for s in &self.slices {
            match *s {
                Slice::Cup { pos } => {
                    let a = fresh(&mut uf, &mut open, false);
                    let b = fresh(&mut uf, &mut open, false);
                    uf.union(a, b);
                    segs.insert(pos, b);
                    segs.insert(pos, a);
                    slice_segs.push(vec![a]);
                }
                Slice::Cap { pos } => {
                    let (a, b) = (segs[pos], segs[pos + 1]);
                    uf.union(a, b);
                    segs.remove(pos);
                    segs.remove(pos);
                    slice_segs.push(vec![a]);
                }
                Slice::Cross { pos, .. } => {
                    let touched = vec![segs[pos], segs[pos + 1]];
                    segs.swap(pos, pos + 1);
                    slice_segs.push(touched);
                }
                Slice::Box { pos, label } => {
                    let size = Self::box_width(label, table)?;
                    let mut touched = Vec::with_capacity(size);
                    for p in pos..pos + size {
                        open[uf.find(segs[p]) as usize] = true;
                        touched.push(segs[p]);
                        let id = fresh(&mut uf, &mut open, true);
                        segs[p] = id;
                    }
                    slice_segs.push(touched);
                }
                Slice::Mark { pos, id } => {
                    marks.insert(id, segs[pos]);
                    slice_segs.push(vec![segs[pos]]);
                }
            }
        }
        for &s in &segs {
            open[uf.find(s) as usize] = true;
        }
        // canonical component id: least member of the class
        let count = uf.len();
        let mut least: Vec<u32> = (0..count as u32).collect();
        let mut class_open = vec![false; count];
        for s in 0..count as u32 {
            let r = uf.find(s) as usize;
            if s < least[r] {
                least[r] = s;
            }
            if open[s as usize] {
                class_open[r] = true;
            }
        }
        Ok(Components { uf, least, class_open, marks, slice_segs })
    }

    /// Ids of the closed components (no boundary endpoints, no box contact),
    /// in deterministic order.
    pub fn closed_components(&self, table: &ProjectorTable) -> Result<Vec<ComponentId>, TangleError> {
        let mut comps = self.trace_components(table)?;
        let mut out = Vec::new();
        for s in 0..comps.uf.len() as u32 {
            let r = comps.uf.find(s);
            if comps.least[r as usize] == s && !comps.class_open[r as usize] {
                out.push(s);
            }
        }
        Ok(out)
    }

    /// Component named by a `Mark` slice.
    pub fn marked_component(
        &self,
        mark: u32,
        table: &ProjectorTable,
    ) -> Result<ComponentId, TangleError> {
        let mut comps = self.trace_components(table)?;
        let seg = *comps
            .marks
            .get(&mark)
            .ok_or_else(|| TangleError::MalformedWord(format!("no mark {}", mark)))?;
        let r = comps.uf.find(seg);
        Ok(comps.least[r as usize])
    }

    /// Replace each listed closed component by the given number of parallel
    /// copies (0 deletes it); open strands are multiplied by `open_mult`.
    /// Crossings become blocks of crossings, turnbacks nest.
    pub fn cable_components(
        &self,
        mults: &BTreeMap<ComponentId, usize>,
        open_mult: usize,
        table: &ProjectorTable,
    ) -> Result<TangleWord, TangleError> {
        let mut comps = self.trace_components(table)?;
        for (&id, _) in mults.iter() {
            let r = comps.uf.find(id) as usize;
            if comps.least[r] != id {
                return Err(TangleError::NotAClosedComponent(id));
            }
            if comps.class_open[r] {
                return Err(TangleError::NotAClosedComponent(id));
            }
        }
        let mult_of = |comps: &mut Components, seg: u32| -> usize {
            let r = comps.uf.find(seg) as usize;
            if comps.class_open[r] {
                open_mult
            } else {
                *mults.get(&comps.least[r]).unwrap_or(&1)
            }
        };
        // replay the word tracking per-position multiplicities; boundary
        // strands are open, so they carry open_mult (segments 0..input are
        // the bottom boundary by construction)
        let mut cur: Vec<usize> =
            (0..self.input as u32).map(|s| mult_of(&mut comps, s)).collect();
        let mut out = TangleWord::new(cur.iter().sum());
        let offset = |cur: &[usize], pos: usize| -> usize { cur[..pos].iter().sum() };
        for (idx, s) in self.slices.iter().enumerate() {
            match *s {
                Slice::Cup { pos } => {
                    let seg = comps.slice_segs[idx][0];
                    let c = mult_of(&mut comps, seg);
                    let p = offset(&cur, pos);
                    for sft in 0..c {
                        out.cup(p + sft);
                    }
                    cur.insert(pos, c);
                    cur.insert(pos, c);
                }
                Slice::Cap { pos } => {
                    let c = cur[pos];
                    debug_assert_eq!(c, cur[pos + 1], "capped strands share a component");
                    let p = offset(&cur, pos);
                    for sft in (0..c).rev() {
                        out.cap(p + sft);
                    }
                    cur.remove(pos);
                    cur.remove(pos);
                }
                Slice::Cross { pos, over } => {
                    let (a, b) = (cur[pos], cur[pos + 1]);
                    let p = offset(&cur, pos);
                    if a > 0 && b > 0 {
                        out.block_cross(p, a, b, over);
                    }
                    cur.swap(pos, pos + 1);
                }
                Slice::Box { pos, label } => {
                    let size = Self::box_width(label, table)?;
                    for p in pos..pos + size {
                        if cur[p] != 1 {
                            return Err(TangleError::ThreadThroughBox);
                        }
                    }
                    out.boxed(offset(&cur, pos), label);
                    // strands above the box belong to fresh open segments
                    for p in pos..pos + size {
                        cur[p] = 1;
                    }
                }
                Slice::Mark { .. } => {}
            }
        }
        Ok(out)
    }

    /// Thread the polynomial along one closed component: the sum over
    /// monomials `a_c x^c` of the word with that component cabled `c`-fold.
    pub fn thread(
        &self,
        component: ComponentId,
        poly: &IntPoly,
        table: &ProjectorTable,
    ) -> Result<TLMorphism, TangleError> {
        self.thread_many(&[component], poly, 1, table)
    }

    /// Thread the polynomial along every closed component simultaneously
    /// (one factor per component); open strands get `open_mult` copies.
    pub fn thread_all_closed(
        &self,
        poly: &IntPoly,
        open_mult: usize,
        table: &ProjectorTable,
    ) -> Result<TLMorphism, TangleError> {
        let comps = self.closed_components(table)?;
        self.thread_many(&comps, poly, open_mult, table)
    }

    fn thread_many(
        &self,
        comps: &[ComponentId],
        poly: &IntPoly,
        open_mult: usize,
        table: &ProjectorTable,
    ) -> Result<TLMorphism, TangleError> {
        let ctx = table.eval_ctx();
        let monomials: Vec<(u32, i64)> = poly.terms().collect();
        let mut result: Option<TLMorphism> = None;
        let mut assignment = vec![0usize; comps.len()];
        loop {
            let mut mults = BTreeMap::new();
            let mut coeff = 1i64;
            for (slot, &comp) in comps.iter().enumerate() {
                let (deg, a) = monomials[assignment[slot]];
                mults.insert(comp, deg as usize);
                coeff *= a;
            }
            let cabled = self.cable_components(&mults, open_mult, table)?;
            let resolved = cabled.resolve(table)?;
            let scaled = resolved.scale(&CycScalar::from_integer(ctx.mode(), coeff));
            result = Some(match result {
                None => scaled,
                Some(acc) => acc.add(&scaled)?,
            });
            // next assignment in the product of monomial choices
            let mut slot = 0;
            loop {
                if slot == comps.len() {
                    return Ok(result.unwrap());
                }
                assignment[slot] += 1;
                if assignment[slot] < monomials.len() {
                    break;
                }
                assignment[slot] = 0;
                slot += 1;
            }
        }
    }
}

/// A single crossing as a two-term planar morphism: the over strand at `pos`
/// contributes `q^{1/2}` times the vertical smoothing plus `q^{-1/2}` times
/// the horizontal one; under swaps the exponents.
pub fn crossing_morphism(
    width: usize,
    pos: usize,
    over: bool,
    ctx: &EvalCtx,
) -> Result<TLMorphism, DiagramError> {
    let mode = ctx.mode();
    let (va, vb) = if over { (1, -1) } else { (-1, 1) };
    let vertical = TLMorphism::identity(width, ctx).scale(&CycScalar::v_power(mode, va));
    let horizontal = TLMorphism::e_element(width, pos, ctx)?.scale(&CycScalar::v_power(mode, vb));
    vertical.add(&horizontal)
}

/// Word for a closed loop encircling `m` vertical strands: the lower arc
/// passes under them, the upper arc over (swapped when `mirror` is set).
/// The loop is marked as component 0.
pub fn encircle_word(m: usize, mirror: bool) -> TangleWord {
    let mut w = TangleWord::new(m);
    w.cup(m);
    w.mark(m, 0);
    // left cup leg slides under the bundle to position 0
    for i in (0..m).rev() {
        w.cross(i, !mirror);
    }
    // then back over the bundle
    for i in 0..m {
        w.cross(i, !mirror);
    }
    w.cap(m);
    w
}

/// The loop around `m` strands threaded by a polynomial.
pub fn encircle(
    m: usize,
    poly: &IntPoly,
    table: &ProjectorTable,
    mirror: bool,
) -> Result<TLMorphism, TangleError> {
    let word = encircle_word(m, mirror);
    let comp = word.marked_component(0, table)?;
    word.thread(comp, poly, table)
}

struct Components {
    uf: UnionFind,
    least: Vec<u32>,
    class_open: Vec<bool>,
    marks: BTreeMap<u32, u32>,
    slice_segs: Vec<Vec<u32>>,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: Vec::new() }
    }

    fn fresh(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}
