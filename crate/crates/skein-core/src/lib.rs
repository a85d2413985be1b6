//! Exact computation engine for the Temperley-Lieb category at roots of
//! unity: planar diagram arithmetic, Kauffman-bracket tangle resolution,
//! Jones-Wenzl projectors (including the root-of-unity elements on `2n-1`
//! and `n-1+kn` strands and thick projectors on cabled strands), and a
//! machine-checked suite of skein identities relating them.
//!
//! Everything is computed over exact coefficients: Laurent-polynomial
//! fractions of `v = q^{1/2}` in generic mode, or the cyclotomic field
//! `Q(ζ_N)` in root mode. No check ever passes by tolerance.

pub mod chebyshev;
pub mod diagram;
pub mod projectors;
pub mod scalar;
pub mod tangle;
pub mod verify;

pub use chebyshev::{chebyshev_s, chebyshev_t, evaluate_poly, quantum_factorial, quantum_integer, IntPoly};
pub use diagram::{enumerate_matchings, DiagramError, EvalCtx, PlanarMatching, ScalarPoly, TLMorphism};
pub use projectors::{verify_jw_axioms, AxiomReport, Label, ProjectorError, ProjectorTable};
pub use tangle::{elaborate, encircle, expand_green, parse, SkeinExpr, Slice, TangleError, TangleWord};
pub use verify::{run_suite, CheckReport, Outcome, SuiteConfig};
pub use scalar::{cyclotomic_polynomial, derive_root_context, CycScalar, Mode, Rat, RatPoly, RootContext, ScalarError};
