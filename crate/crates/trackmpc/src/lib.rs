//! Tracking MPC for constrained linear systems whose references are
//! generated by a linear exosystem.
//!
//! The crate splits into an offline and an online half. Offline,
//! [`synthesis`] turns a validated [`model`] into a [`synthesis::ControllerDesign`]:
//! regulator equations, Lyapunov terminal cost, exosystem-invariant cost
//! weights, and a finitely determined terminal set. Online, [`mpc`] builds
//! and solves the per-step artificial-reference QP and [`sim`] closes the
//! loop. [`cli`] wraps the pipeline behind a command-line tool with
//! file-based configs, design artifacts, CSV logs, and SVG plots.

pub mod cli;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod mpc;
pub mod par;
pub mod sim;
pub mod solver;
pub mod synthesis;
