//! Per-mode finite element forms, generalized eigenproblems for the Korn
//! constant, the first-and-a-half constant, and buckling loads.

mod buckling;
mod export;
mod forms;
mod korn;
mod stress;

pub use buckling::{buckling_quotient, critical_load, BucklingOutcome, CriticalLoad, ModeLoad};
pub use export::{read_triplets, write_eigenpairs_csv, write_triplets};
pub use forms::{
    assemble, assemble_buckling, assemble_free, dof_index, interpolate_full, BucklingForms, DofMap, FormMatrices,
    Grid, NullDirection, P, Q, W,
};
pub use korn::{
    korn15_constant, korn15_mode, korn15_ratio, korn_constant, korn_constant_converged, korn_constant_fixed,
    korn_constant_on_ladder, min_rayleigh, refinement_ladder, ConvergedKorn, GridLevel, Korn15Mode, Korn15Options,
    Korn15Result, KornResult, ModeValue, RayleighMin, DEFAULT_MODE_CUTOFF, GRID_TOL, MAX_MODE_CUTOFF,
};
pub use stress::{ElasticityTensor, StressField};
