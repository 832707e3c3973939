//! Exact computation and Monte Carlo simulation for the complete feedback
//! card guessing game under the greedy strategy.
//!
//! A deck holds `n` card types with multiplicities `m_1..m_n`. Cards are
//! revealed one at a time from the top; before each reveal the player
//! guesses a type with the largest remaining multiplicity. The crate
//! computes the law of the number of correct guesses exactly for small
//! decks, relates it to tie statistics read from the bottom of the deck,
//! and runs seeded, parallel experiments for large decks.
//!
//! Exact routines are generic over the scalar: use `f64` for speed and
//! [`Rational`] for exact arithmetic.

pub mod cli;
pub mod deck;
pub mod error;
pub mod exact;
pub mod harness;
pub mod pmf;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod ties;

pub use deck::{Arrangement, Deck, GameTrace, Step, TieRule};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use scalar::{Real, Weight};
pub use ties::TieCounts;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

/// Score distribution in double precision.
pub type ScorePmf = pmf::Pmf<f64>;
/// Score distribution in exact arithmetic.
pub type ExactScorePmf = pmf::Pmf<Rational>;
pub type ConditionalMoments = exact::ConditionalMoments<f64>;
