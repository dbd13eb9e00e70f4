//! Floating-point helpers on top of `libm`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Upper standard normal quantile: the `z` with `P(N(0,1) > z) = tail`,
/// by bisection on `erfc`. `tail` must lie in `(0, 1/2]`.
pub fn normal_upper_quantile(tail: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * erfc(mid / core::f64::consts::SQRT_2) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Heat-bath probabilities for local field `s`, returned as `(P(+1), P(-1))`.
///
/// The smaller of the two is evaluated directly as `e / (1 + e)` with
/// `e = exp(-2|s|) <= 1`, and the larger as its complement, so the pair sums
/// to exactly 1.0 and `heat_bath(-s)` is the mirror image of `heat_bath(s)`.
#[inline]
pub fn heat_bath(s: f64) -> (f64, f64) {
    let e = exp(-2.0 * s.abs());
    let small = e / (1.0 + e);
    let large = 1.0 - small;
    if s >= 0.0 {
        (large, small)
    } else {
        (small, large)
    }
}

/// `ln P(spin | field s)` for spin in {-1, +1}, i.e. `-ln(1 + exp(-2 spin s))`.
#[inline]
pub fn ln_heat_bath(spin: i8, s: f64) -> f64 {
    let x = -2.0 * f64::from(spin) * s;
    // softplus(x) = max(x, 0) + ln(1 + e^{-|x|})
    let softplus = if x > 0.0 { x } else { 0.0 } + ln1p(exp(-x.abs()));
    -softplus
}
