//! Words, the shuffle algebra and the Itô lift.
//!
//! Word literals use digits for X-letters, `a..s` for W-letters and `t` for
//! the time letter, so `"0a00"` is `0 γ 0 0` with `γ` the first W-letter.

mod decompose;
mod lift;
mod polynomial;
pub mod verify;
mod word;

pub use decompose::{
    decompose_to_generators, generator_kind, is_generator, Decomposer, GeneratorKind,
    GeneratorPolynomial, Monomial,
};
pub use lift::{evaluate_generator, itolift_binomial, LiftEvaluator, LiftSample};
pub use polynomial::{
    coproduct, deconcatenate, shuffle, tensor_shuffle, TensorPolynomial, WordPolynomial,
};
pub use word::{w, Alphabet, Coeff, HurstWeight, Letter, Word, WEIGHT_TOL};
