//! fmtk: a finite model theory workbench.
//!
//! The library combines three layers:
//!
//! - a miniature set-theoretic universe of hereditarily finite sets
//!   ([`hf`]): cumulative levels, transitive collapse, and truth of
//!   ∈-formulas relativized to transitive models;
//! - finite many-sorted model theory ([`logic`], [`formula`], [`semantics`]):
//!   structures, reducts, an extended logic with the Härtig (equicardinality)
//!   and well-foundedness quantifiers plus full second-order quantifiers, and
//!   brute-force model search;
//! - the bridge between the two ([`projection`], [`constructions`]):
//!   projective classes with size-bounded witnesses, definably bounding
//!   functions, and a registry of classical constructions checked
//!   exhaustively against independent oracles at small scale.

pub mod constructions;
pub mod formula;
pub mod hf;
pub mod logic;
pub mod projection;
pub mod semantics;
pub mod textio;

pub mod cli;
