//! Numerical analysis of wave fronts and their singularities.

pub mod expr;
pub mod front;
pub mod gallery;
pub mod gb;
pub mod hyper;
pub mod jet;
pub mod singular;
pub mod zigzag;

/// Chapters of the book, compiled here so their examples run as doc-tests.
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/fronts.md")]
    pub mod fronts {}
    #[doc = include_str!("../../../book/src/singular-curves.md")]
    pub mod singular_curves {}
    #[doc = include_str!("../../../book/src/gauss-bonnet.md")]
    pub mod gauss_bonnet {}
    #[doc = include_str!("../../../book/src/zigzag.md")]
    pub mod zigzag {}
    #[doc = include_str!("../../../book/src/hypersurfaces.md")]
    pub mod hypersurfaces {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
