//! Standard normal helpers and the truncated-Gaussian correction functions
//! used by the two-player TrueSkill update.
//!
//! Ratios of the form `pdf / cdf` are evaluated through the Mills ratio so
//! that they stay finite deep in the tails, where `cdf` itself underflows.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc_inv;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Quantile of the standard normal, `p` in (0, 1).
pub fn inverse_cdf(p: f64) -> f64 {
    // statrs gives about 1e-11; one Halley step against the libm cdf brings
    // it to rounding level.
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let r = (cdf(x) - p) / pdf(x);
    x - r / (1.0 + 0.5 * x * r)
}

/// Mills ratio `(1 - cdf(x)) / pdf(x)`.
pub fn mills_ratio(x: f64) -> f64 {
    if x < 5.0 {
        cdf(-x) / pdf(x)
    } else {
        // continued fraction 1/(x + 1/(x + 2/(x + 3/(x + ...)))), evaluated
        // bottom-up; 60 terms is far past convergence for x >= 5
        let mut tail = x;
        for k in (1..=60).rev() {
            tail = x + k as f64 / tail;
        }
        1.0 / tail
    }
}

/// Additive mean correction for a win with margin: `pdf(x) / cdf(x)`, `x = t - eps`.
pub fn v_win(t: f64, eps: f64) -> f64 {
    1.0 / mills_ratio(-(t - eps))
}

/// Multiplicative variance correction for a win: `v (v + x)`.
pub fn w_win(t: f64, eps: f64) -> f64 {
    let x = t - eps;
    let v = v_win(t, eps);
    v * (v + x)
}

/// Mean correction for a draw within `[-eps, eps]`.
pub fn v_draw(t: f64, eps: f64) -> f64 {
    let (numer, denom, _) = draw_terms(t.abs(), eps);
    let v = numer / denom;
    if t < 0.0 {
        -v
    } else {
        v
    }
}

/// Variance correction for a draw.
pub fn w_draw(t: f64, eps: f64) -> f64 {
    let (numer, denom, weighted) = draw_terms(t.abs(), eps);
    let v = numer / denom;
    v * v + weighted / denom
}

/// Returns `(pdf(b) - pdf(a), cdf(a) - cdf(b), a pdf(a) - b pdf(b))` for
/// `a = eps - t`, `b = -eps - t`, all divided by `pdf(a)` when `a` is in the
/// lower tail so that nothing underflows.
fn draw_terms(t: f64, eps: f64) -> (f64, f64, f64) {
    let a = eps - t;
    let b = -eps - t;
    if a > 0.0 {
        let (pa, pb) = (pdf(a), pdf(b));
        (pb - pa, cdf(a) - cdf(b), a * pa - b * pb)
    } else {
        // pdf(b) / pdf(a) = exp(-2 eps t); cdf(y) / pdf(y) = mills_ratio(-y)
        let r = (-2.0 * eps * t).exp();
        let denom = mills_ratio(-a) - r * mills_ratio(-b);
        (r - 1.0, denom, a - b * r)
    }
}
