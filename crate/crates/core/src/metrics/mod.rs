//! Measurements on a graph and the model's closed-form predictions.

mod diameter;
mod histogram;
mod powerlaw;
mod theory;

pub use diameter::{
    diameter_approx, diameter_bounded, diameter_exact, diameter_exact_with_limit, DiameterMethod,
    DiameterReport, DEFAULT_EXACT_LIMIT,
};
pub use histogram::{degree_histogram, DegreeHistogram};
pub use powerlaw::{fit_power_law, FitMethod, PowerLawFit};
pub use theory::{
    expected_route, iterate_lemma1_recursion, no_engine_exponent, theoretical_degree_fraction,
    worst_case_diameter, RouteExpectation, DEFAULT_D_MAX,
};
