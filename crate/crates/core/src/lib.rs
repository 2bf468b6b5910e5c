//! Authoring and inference engine for single-fault Bayesian-network
//! troubleshooters.
//!
//! Domain experts describe an error condition as a tree of causes, the
//! actions that repair them and the questions that help tell them apart,
//! each with probabilities elicited in whichever direction is natural to
//! them. [`compiler`] turns such a model into a naive-Bayes network around a
//! single cause indicator, and [`engine`] runs troubleshooting sessions on it.

pub mod compiler;
pub mod elicitation;
pub mod engine;
pub mod librarian;
pub mod model;
pub mod persistence;
pub mod samples;
