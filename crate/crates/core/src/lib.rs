//! Mean-one wealth distributions ordered by what fair gambling can reach.
//!
//! A distribution of wealth across a population, normalized to mean one, is
//! summarized by its Lorenz curve. One distribution can be turned into
//! another by a sequence of fair bets exactly when its Lorenz curve lies
//! above the other's everywhere; gambling never raises a Lorenz curve. This
//! crate makes the whole story executable:
//!
//! - [`distribution`] and [`lorenz`]: finite distributions, their Lorenz
//!   curves, Gini coefficients, and the dominance order.
//! - [`lattice`]: the order is a lattice; meet and join are computed as
//!   curve operations (greatest convex minorant of the pointwise min,
//!   pointwise max) and mapped back to distributions.
//! - [`synth`]: a constructive converse. When dominance holds,
//!   [`synth::synthesize`] builds an explicit fair transition kernel, stage
//!   by stage, and [`synth::verify_kernel`] checks fairness and the target
//!   marginal. Gamble plans (trees of fair binary bets) live here too.
//! - [`simulate`]: chain diagnostics. Push a distribution through kernels,
//!   check that Lorenz curves only fall and Gini only rises, measure the
//!   gap to the degenerate limit, and Monte Carlo a plan's leaf law.
//! - [`efficiency`]: how much betting volume reaching an extreme
//!   distribution costs, the closed-form optimum, ladder plans achieving
//!   it, dyadic and randomized-stake constructions, and a grid check of the
//!   Bellman inequality for the optimal-volume function.
//! - [`jsonio`]: stack-safe JSON readers and writers for all of the above.
//!
//! Numeric comparisons run through [`Tolerances`]; every `*_with` function
//! takes one explicitly and the plain version uses defaults.

pub mod config;
pub mod distribution;
pub mod efficiency;
pub mod jsonio;
pub mod lattice;
pub mod lorenz;
pub mod simulate;
pub mod synth;

pub use config::Tolerances;
pub use distribution::{DiscreteDistribution, DistError};
pub use lorenz::{LorenzCurve, LorenzError};
