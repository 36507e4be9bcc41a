//! Type class law verification for a small first-order functional language.
//!
//! The pipeline parses `.lhc` programs ([`frontend`]), checks them against
//! explicit signatures ([`typecheck`]), instantiates every class law at every
//! instance ([`instantiate`]), lowers each obligation to a TIP problem
//! ([`tipcore`]) and tries to prove or refute it ([`prover`]).

pub mod cli;
pub mod diagnostic;
pub mod eval;
pub mod frontend;
pub mod instantiate;
pub mod prover;
pub mod syntax;
pub mod tipcore;
pub mod typecheck;
