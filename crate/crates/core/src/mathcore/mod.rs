//! Numerical building blocks shared by every estimator.

pub mod circular;
pub mod quadrature;
pub mod special;

pub use circular::{
    rician_phase_log_pdf, rician_phase_pdf, von_mises_log_pdf, wrap_2pi, wrap_pi,
    wrapped_gaussian_entropy, wrapped_gaussian_pdf, WrappedGaussian,
};
pub use quadrature::Quadrature;
pub use special::{
    bessel_ratios, digamma, erf, erfc, erfcx, log_bessel_i, log_bessel_i0, log_gamma,
    upper_incomplete_gamma, EULER_GAMMA,
};

/// Nats to bits.
pub fn to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
