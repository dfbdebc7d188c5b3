pub mod cases;
pub mod error;
pub mod geomctl;
pub mod matlin;
pub mod netgraph;
pub mod plot;
pub mod poly;
pub mod sim;
pub mod synthesis;

pub use error::{DuioError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/subspaces.md")]
    mod subspaces {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/platoon.md")]
    mod platoon {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
