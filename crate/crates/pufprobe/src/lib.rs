//! PUF-based hardware authentication for intelligent electronic devices.
//!
//! The crate covers the full pipeline: a behavioral simulation of the IED and
//! probe hardware (`hwmodel`), bit-exact signature encoding (`sigcore`), the
//! two-phase probe/verifier authentication protocol (`probe`, `verifier`,
//! `wire`), and the signature quality metrics used to evaluate it
//! (`metrics`).

pub mod sigcore;
