//! Two-level decision sets as interpretable classifiers and as explanations
//! of black boxes, searched under desired/prohibited feature policies, plus
//! an audit that flags explanations that look acceptable while the black box
//! they describe is not.
//!
//! A typical pipeline loads and discretizes a table ([`data`], [`mining`]),
//! mines candidate conjunctions, runs a [`optimizer::Search`] against ground
//! truth or black-box predictions, and [`audit::audit`]s the result.
//! [`experiment::run_experiment`] wires all of it together.

pub mod audit;
pub mod cover;
pub mod data;
pub mod error;
pub mod experiment;
pub mod measures;
pub mod mining;
pub mod model;
pub mod optimizer;
pub mod policy;
pub mod synth;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/data.md")]
mod book_data {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/decision-sets.md")]
mod book_decision_sets {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/objective.md")]
mod book_objective {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/search.md")]
mod book_search {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/auditing.md")]
mod book_auditing {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
