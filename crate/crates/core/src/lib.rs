//! Linear viscoelastic materials as Bernstein functions and Lévy processes.
//!
//! The crate represents a scalar material by its impulse response
//! `f(t) = L + K t + ∫ (1 − e^{−t x}) ν(dx)`, i.e. by the triple of an
//! instantaneous compliance `L`, a fluid drift `K` and a Lévy measure `ν`.
//! The same triple is the law of a subordinator started at `L` with drift
//! `K` and jump measure `ν`, which makes the material ↔ process
//! correspondence a field-for-field bijection.
//!
//! On top of that representation the crate provides:
//!
//! * exact and numeric conjugation (creep ↔ relaxation duality, the pair
//!   whose impulse responses convolve to `t²/2`),
//! * rheological composition (series, parallel, functional composition),
//! * compilation of quadratic thermodynamic forms `(W, D)` into
//!   impulse-response matrices through the generalized eigenproblem,
//! * Monte Carlo validation by simulating the associated processes.

pub mod bernstein;
pub mod conjugation;
pub mod error;
pub mod finite_network;
pub mod levy_sim;
pub mod materials;
pub mod numerics;

pub use bernstein::{
    bernstein_grid_check, compose, Atom, BernsteinRep, LevyMeasure, Material, StableComponent,
};
pub use conjugation::{
    conjugate, conjugate_exact, conjugate_stable, delta_mass, matrix_relaxation_numeric,
    relaxation_curve_numeric, relaxation_rep, stieltjes_of, verify_conjugation, MatrixRelaxation,
    PowerTail, RelaxationRep, StieltjesRep,
};
pub use error::{Error, Result};
pub use finite_network::{
    generalized_eigen, material_from_quadratic_forms, verify_evolution, GeneralizedEigen,
    MatrixMaterial, QuadraticFormPair,
};
pub use levy_sim::{
    estimate_material_from_paths, material_from_characteristics, material_from_subordinator,
    mc_laplace_check, sample_pais_ensemble, sample_pais_path, sample_path,
    subordinator_from_material, MaterialEstimate, McCheck, PaisCharacteristics, PaisPath, Path,
    QvMode, SubordinatorSpec,
};
pub use materials::{
    dashpot, kelvin_voigt, maxwell, parallel, prony, respond_creep, respond_relaxation, series,
    spring, stable_material, LoadHistory, Ramp, RelaxationResponse, Step,
};
pub use numerics::TimeGrid;
