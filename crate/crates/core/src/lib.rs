pub mod boxes;
pub mod corpus;
pub mod error;
pub mod ring;
pub mod sequences;
pub mod stabilization;

pub use error::{Error, Result};
pub mod linear;
pub mod properties;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/sequences.md")]
    mod sequences {}
    #[doc = include_str!("../../../book/src/rings.md")]
    mod rings {}
    #[doc = include_str!("../../../book/src/linear.md")]
    mod linear {}
    #[doc = include_str!("../../../book/src/approx.md")]
    mod approx {}
    #[doc = include_str!("../../../book/src/boxes.md")]
    mod boxes {}
    #[doc = include_str!("../../../book/src/counterexamples.md")]
    mod counterexamples {}
}
