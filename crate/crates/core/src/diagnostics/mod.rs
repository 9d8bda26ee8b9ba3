//! Cutoff functionals, lemma checks on sweeps in `R`, the slab lower bound,
//! and scattering residuals.

pub mod cutoff;
pub mod data;
pub mod fit;
pub mod functionals;
pub mod scattering;
pub mod slab;

pub use cutoff::{
    cutoff_value, eta_bump, eta_jet, lemma_psi_check, CutoffJet, CutoffSpec, PsiSampleGrid,
};
pub use data::{ikeda_inui_data, ikeda_inui_member, weighted_norm_growth};
pub use fit::{fit_slope, relative_spread, SlopeFit};
pub use functionals::{
    capped_tail_fraction, functional_i, lemma1_bound, lemma2_bound, FunctionalI, Lemma1, Lemma2,
    SweepRecord,
};
pub use scattering::{
    cauchy_differences, cauchy_table, dyadic_pairs, scattering_residual, wouldbe_state,
    CauchyEntry, ResidualMode, ResidualPoint, ScatteringResidual,
};
pub use slab::{
    profile_ball_mass, select_r0, slab_constant, slab_decomposition, slab_exponent, slab_interval,
    slab_mass, slab_prediction, R0Policy, SlabTerms,
};
