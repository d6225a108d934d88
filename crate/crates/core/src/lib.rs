//! Substitutions on finite alphabets, their return words and proper conjugates,
//! and the self-affine domain exchange with its torus factor.

pub mod check;
pub mod dsl;
pub mod error;
pub mod exchange;
pub mod matrix;
pub mod morphism;
pub mod poly;
pub mod presets;
pub mod pipeline;
pub mod properize;
pub mod returns;
pub mod spectral;
pub mod substitution;
pub mod tower;
pub mod verify;
pub mod word;

pub use error::{Error, Result};
pub use matrix::IntMatrix;
pub use morphism::Morphism;
pub use substitution::{Aperiodicity, Substitution};
pub use word::{Alphabet, Letter, Word};
pub use returns::ReturnSystem;
pub use check::Check;
pub use properize::{properize, Properization};
