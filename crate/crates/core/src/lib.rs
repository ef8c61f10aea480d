//! Numerical laboratory for energy forms on infinite weighted graphs,
//! realized on finite truncations with explicit tail rules.
//!
//! The crate computes graph energy forms and Laplacians, Green's functions
//! on exhaustions, Royden-type decompositions into a vanishing-at-infinity
//! part and a harmonic part, harmonic measures and trace maps on star
//! graphs with finite harmonic boundary, the Dirichlet-to-Neumann boundary
//! form, composed forms built from boundary data, and the approximating /
//! main / killing part machinery for Dirichlet forms.

pub mod approx;
pub mod contraction;
pub mod energy;
pub mod error;
pub mod forms;
pub mod function;
pub mod graph;
pub mod graphspec;
pub mod scenario;
pub mod solve;
pub mod star;

mod exhaustion;

pub use approx::{alpha_sweep, approximating_form, main_and_killing, q_phi, ramp_cutoffs};
pub use contraction::{apply_contraction, NormalContraction};
pub use energy::{energy, energy_bilinear, green_formula_residual};
pub use error::{Error, Result};
pub use exhaustion::{
    dirichlet_solve, greens_function, harmquadrat_residual, is_certified_transient,
    royden_decompose, royden_decompose_with, Exhaustion, ExhaustionSolvers, GreenApprox,
    RoydenSplit, TransienceVerdict,
};
pub use forms::{
    compose_form, decomposition_residuals, eval_neumann, markov_check, order_check, trace_form,
    ComposedForm, CustomForm, NeumannForm, QuadraticForm,
};
pub use function::{Tail, VertexFunction};
pub use graph::{lattice_graph, path_graph, star_graph, GraphFamily, Vertex, WeightedGraph};
pub use graphspec::{build_graph, build_star, GraphSpec};
pub use scenario::{counterexample_form, run_scenario, Report, Scenario, ScenarioName};
pub use star::{
    harmonic_extension, harmonic_measure, qdn_matrix, trace, BoundaryForm, BoundaryFunction,
    HarmonicMeasure, StarGraph, StarMeasure, WeightFamily,
};
