//! Prism models: local hidden-variable models in which a particle may be
//! defective ("no show") in some directions.
//!
//! The crate builds and checks such models exactly, evaluates the
//! Clauser–Horne expression on full and coincidence-selected ensembles,
//! compares defectiveness rates with experimental figures, simulates the
//! experiment (trial by trial and as time-tagged streams) and searches for
//! models with the highest detection efficiency by linear programming.
//!
//! ```
//! use prismlab::{bell, canonical, rational::ratio};
//!
//! let model = canonical::canonical_2x2_model();
//! let settings = bell::ChSettings::default();
//! assert_eq!(bell::ch_selected(&model, &settings).unwrap(), ratio(1, 8));
//! assert_eq!(bell::ch_full(&model, &settings).unwrap(), ratio(-3, 16));
//! ```

pub mod bell;
pub mod canonical;
pub mod counts;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lp;
pub mod model;
pub mod montecarlo;
pub mod quantum;
pub mod rates;
pub mod rational;
pub mod timetag;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{AngleKey, Direction, ExperimentGeometry, Wing};
pub use model::{Block, EventQuery, Outcome, PrismModel, ResponseFunction, Spin};
pub use rational::Rational;

// The guide's snippets run as doctests, one module per chapter so a failure
// points at its chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/prism-models.md")]
    mod prism_models {}
    #[doc = include_str!("../../../book/src/canonical-model.md")]
    mod canonical_model {}
    #[doc = include_str!("../../../book/src/clauser-horne.md")]
    mod clauser_horne {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/time-tags.md")]
    mod time_tags {}
    #[doc = include_str!("../../../book/src/lp-search.md")]
    mod lp_search {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
