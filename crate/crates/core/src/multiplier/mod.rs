//! The I-method symbol algebra: `m_{N,s}`, the I-operator, the multipliers
//! `α`, `M_{k+2}`, `σ_{k+2}`, `σ̃_{k+2}`, `M_{2k+2}`, the non-resonance sets
//! and sampling sweeps over the associated bounds.

pub mod dmvt;
pub mod resonance;
pub mod sweep;
pub mod symbol;

pub use dmvt::{dmvt_ratio, dmvt_sweep, DmvtSweep};
pub use resonance::{
    alpha, alpha_integer, classify, m_2k2, m_k2, sigma_k2, sigma_tilde, InnerMultiplier,
    OmegaMembership,
};
pub use sweep::{bound_sweep, multi_sweep, Lemma, Sampler, SweepDomain, SweepReport};
pub use symbol::{i_apply, m_value, norm_comparison, MultiplierParams, NormComparison};
