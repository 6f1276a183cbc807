//! Particle-based Monte Carlo solver.

pub mod pbs;

pub use pbs::{
    apply_degradation, block_rng, pbs_field, run_ensemble, run_pbs, run_realization, run_step_pair,
    step_particle, FieldSpec, ParticleEnsemble, PbsConfig, PbsOutput, RealizationOutput, StepPair,
    Stepper, BLOCK_SIZE,
};
