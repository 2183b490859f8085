//! Exact generators of the type process on `K^I` and of the backward
//! process on its reachable states, semigroups by uniformization, and the
//! exact checks built from them.

mod chains;
mod duality;
mod generator;

pub use chains::{
    all_canonical_starts, build_bp_generator, build_bp_generator_capped, build_type_generator,
    build_type_generator_capped, decode_config, encode_config, BpChain, TypeChain, DEFAULT_BP_CAP, DEFAULT_TYPE_CAP,
};
pub use duality::{
    check_duality, compute_h, compute_ht, duality_reports_csv, product_law, DualityReport, DualitySetup, HTable,
    POSITIVITY_FLOOR,
};
pub use generator::{expm_apply, expm_apply_left, GeneratorMatrix};
