//! Closed-form quantities of the growth model.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;

/// Distance charged to a pair of nodes with no route between them.
pub const DEFAULT_D_MAX: f64 = 100.0;

/// Exponent of the user-degree power law without the search engine,
/// `-2 - c_u β / (c_t (1 - β))`. Negative by convention.
pub fn no_engine_exponent(c_u: usize, c_t: usize, beta: f64) -> f64 {
    -2.0 - ratio(c_u, c_t, beta)
}

fn ratio(c_u: usize, c_t: usize, beta: f64) -> f64 {
    (c_u as f64 * beta) / (c_t as f64 * (1.0 - beta))
}

/// Limit of `EN_t^i / t`, the expected number of users with degree `i` per
/// step.
///
/// For `i == c_u`:
/// `(β - p u c_t)(c_u β + c_t (1-β)) / (c_u β + c_t (1-β) + (1-β) c_u c_t)`.
///
/// For `i > c_u` only the shape is known, and this returns
/// `i^(-2-r) + p u c_t (r + 1) Σ_{k=c_t}^{i} k^(-3-r)` with
/// `r = c_u β / (c_t (1-β))`. The two cases live on different scales;
/// treat the result as an overlay curve.
///
/// `u_term` is the multiplier `u` of the search term.
pub fn theoretical_degree_fraction(i: usize, config: &EvolutionConfig, u_term: f64) -> Result<f64> {
    let (c_u, c_t, beta, p) = (config.c_u, config.c_t, config.beta, config.p_search);
    if i < c_u {
        return Err(Error::Domain(format!("degree {i} is below c_u = {c_u}")));
    }
    let (cu, ct) = (c_u as f64, c_t as f64);
    let search = p * u_term * ct;
    if i == c_u {
        let inflow = cu * beta + ct * (1.0 - beta);
        return Ok((beta - search) * inflow / (inflow + (1.0 - beta) * cu * ct));
    }
    let r = ratio(c_u, c_t, beta);
    let tail: f64 = (c_t..=i).map(|k| (k as f64).powf(-3.0 - r)).sum();
    Ok((i as f64).powf(-2.0 - r) + search * (r + 1.0) * tail)
}

/// Expected total route length with and without the search engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteExpectation {
    pub e0: u64,
    pub n: u64,
    pub u: u64,
    pub d_max: f64,
    pub value_with_engine: f64,
    pub value_without_engine: f64,
    /// `value_without_engine - value_with_engine`, computed exactly before
    /// rounding.
    pub engine_saving: f64,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn int(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Evaluate the expected route length in exact rational arithmetic.
///
/// With `growth = c_u β + c_t (1-β)`:
///
/// * with engine: `E0 + D_max (n(n-1)/2 - E0) - (D_max - 1)(growth + p u c_t)`
/// * without:     `E0 + D_max (n(n-1)/2 - E0) - (D_max - 1) growth`
pub fn expected_route(e0: u64, n: u64, u: u64, d_max: f64, config: &EvolutionConfig) -> Result<RouteExpectation> {
    if !(d_max > 1.0 && d_max.is_finite()) {
        return Err(Error::Domain(format!("d_max must be finite and > 1, got {d_max}")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 nodes, got {n}")));
    }
    for (name, v) in [("beta", config.beta), ("p_search", config.p_search)] {
        if !v.is_finite() {
            return Err(Error::Domain(format!("{name} is not finite")));
        }
    }
    let one = int(1);
    let beta = exact(config.beta);
    let growth = int(config.c_u as u64) * &beta + int(config.c_t as u64) * (&one - &beta);
    let search = exact(config.p_search) * int(u) * int(config.c_t as u64);
    let d = exact(d_max);
    let pairs = int(n) * int(n - 1) / int(2);
    let base = int(e0) + &d * (pairs - int(e0));
    let without = &base - (&d - &one) * &growth;
    let with = &base - (&d - &one) * (&growth + &search);
    let saving = &without - &with;
    let f = |x: &BigRational| if x.is_zero() { 0.0 } else { x.to_f64().unwrap_or(f64::NAN) };
    Ok(RouteExpectation {
        e0,
        n,
        u,
        d_max,
        value_with_engine: f(&with),
        value_without_engine: f(&without),
        engine_saving: f(&saving),
    })
}

/// Worst-case diameter bound: `u + 1` without the engine, `u - p u + 1`
/// with it.
pub fn worst_case_diameter(u: u64, p_t: f64, with_engine: bool) -> f64 {
    let u = u as f64;
    if with_engine {
        u - p_t * u + 1.0
    } else {
        u + 1.0
    }
}

/// Iterate `a_{t+1} = (1 - b_t / t) a_t + c_t` from `a_{t0} = a0` up to
/// `a_horizon` and return `a_horizon / horizon`.
///
/// Fails when some `b_t <= -1` or `b_t / t > 1` on the way.
pub fn iterate_lemma1_recursion(
    b: impl Fn(u64) -> f64,
    c: impl Fn(u64) -> f64,
    t0: u64,
    a0: f64,
    horizon: u64,
) -> Result<f64> {
    if t0 < 1 || horizon <= t0 {
        return Err(Error::Domain(format!("need horizon > t0 >= 1, got t0 = {t0}, horizon = {horizon}")));
    }
    let mut a = a0;
    for t in t0..horizon {
        let bt = b(t);
        let tf = t as f64;
        if !(bt > -1.0) || bt / tf > 1.0 {
            return Err(Error::Domain(format!("b_{t} = {bt} leaves the convergent regime")));
        }
        a = (1.0 - bt / tf) * a + c(t);
    }
    Ok(a / horizon as f64)
}
