//! Compositional compartmental modeling.
//!
//! Epidemiological models are built as whole-grain Petri nets, glued
//! together along undirected wiring diagrams, stratified by pullbacks over a
//! type net, and then simulated, calibrated and probed for sensitivity
//! through their mass-action semantics.
//!
//! ```
//! use opetri_core::{fixtures, oapply, is_isomorphic};
//!
//! let composite = oapply(&fixtures::epi_uwd(), &fixtures::epi_binding()).unwrap();
//! assert_eq!(composite.net.species.len(), 5);
//! assert!(is_isomorphic(&composite.net, &fixtures::sviivr()).unwrap().is_some());
//! ```

pub mod analyze;
pub mod compose;
pub mod dot;
pub mod dynamics;
pub mod fixtures;
pub mod gluing;
pub mod iso;
pub mod morphism;
pub mod petri;
pub mod solve;
pub mod stratify;
pub mod uwd_dsl;

pub use analyze::{
    calibrate, outcome, sensitivity, sensitivity_heatmap, AnalyzeError, Dataset, FitResult,
    FitSpec, FreeParam, OutcomeSpec,
};
pub use compose::{
    oapply, oapply_typed, validate_uwd, Binding, ComposeError, Junction, OpenPetriNet,
    TypedOpenPetriNet, Uwd, UwdBox,
};
pub use dot::{to_dot, DotOptions};
pub use dynamics::{
    compose_dynamics, instantiate, mass_action, ode_to_dde, petri_to_open_dynamics, DynamicsError,
    History, OpenDynamics, VectorField,
};
pub use iso::{is_isomorphic, IsoError};
pub use morphism::{validate_morphism, PetriMorphism, TypedPetriNet};
pub use petri::{
    conserves_population, validate_net, InputArc, OutputArc, PetriNet, Species, Transition,
    Violation,
};
pub use solve::{simulate, solve_dde, solve_ode, Method, SolveConfig, SolveError, Trajectory};
pub use stratify::{pullback, StratifiedNet, StratifyError};
pub use uwd_dsl::{parse_uwd, print_uwd, ParseError, UwdDocument};
