//! Second-order univariate kernels and their product composition.
//!
//! All three families are nonnegative, symmetric, integrate to one and have a
//! finite second moment:
//!
//! | family       | k(u)                    | support  | ∫u²k(u)du |
//! |--------------|-------------------------|----------|-----------|
//! | uniform      | 1/2                     | [-1, 1]  | 1/3       |
//! | gaussian     | exp(-u²/2)/√(2π)        | ℝ        | 1         |
//! | epanechnikov | (3/4)(1 - u²)           | [-1, 1]  | 1/5       |
//!
//! Compact families return exactly zero outside their support, so an
//! estimator whose weights all vanish can report the point as undefined.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelFamily {
    #[default]
    Uniform,
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::Uniform,
        KernelFamily::Gaussian,
        KernelFamily::Epanechnikov,
    ];

    /// Kernel value without input validation. Used on hot paths where `u` is
    /// known to be finite.
    #[inline]
    pub fn weight(self, u: f64) -> f64 {
        match self {
            KernelFamily::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the support in standardized units, `None` for unbounded kernels.
    pub fn support_radius(self) -> Option<f64> {
        match self {
            KernelFamily::Uniform | KernelFamily::Epanechnikov => Some(1.0),
            KernelFamily::Gaussian => None,
        }
    }

    pub fn is_compact(self) -> bool {
        self.support_radius().is_some()
    }

    /// Analytic second moment ∫u²k(u)du.
    pub fn second_moment(self) -> f64 {
        match self {
            KernelFamily::Uniform => 1.0 / 3.0,
            KernelFamily::Gaussian => 1.0,
            KernelFamily::Epanechnikov => 0.2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Uniform => "uniform",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Epanechnikov => "epanechnikov",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(KernelFamily::Uniform),
            "gaussian" => Ok(KernelFamily::Gaussian),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            other => Err(Error::invalid(format!(
                "unknown kernel family '{other}' (expected uniform, gaussian or epanechnikov)"
            ))),
        }
    }
}

/// Evaluates `k(u)` for the given family.
pub fn eval_kernel(family: KernelFamily, u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::invalid(format!("kernel argument must be finite, got {u}")));
    }
    Ok(family.weight(u))
}

/// Product kernel ∏ⱼ k((x_iⱼ − xⱼ)/hⱼ).
pub fn product_kernel(family: KernelFamily, x_i: &[f64], x: &[f64], h: &[f64]) -> Result<f64> {
    if x_i.len() != x.len() || x.len() != h.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: x_i has {}, x has {}, h has {}",
            x_i.len(),
            x.len(),
            h.len()
        )));
    }
    if x_i.is_empty() {
        return Err(Error::invalid("product kernel needs at least one dimension"));
    }
    let mut w = 1.0;
    for ((&a, &b), &hj) in x_i.iter().zip(x).zip(h) {
        if !(hj.is_finite() && hj > 0.0) {
            return Err(Error::invalid(format!(
                "bandwidth must be positive and finite, got {hj}"
            )));
        }
        let u = (a - b) / hj;
        if !u.is_finite() {
            return Err(Error::invalid("non-finite coordinate in product kernel"));
        }
        w *= family.weight(u);
    }
    Ok(w)
}

/// Product kernel without validation; `x_i`, `x` and `h` must share a length.
#[inline]
pub(crate) fn product_weight(family: KernelFamily, x_i: &[f64], x: &[f64], h: &[f64]) -> f64 {
    let mut w = 1.0;
    for j in 0..h.len() {
        w *= family.weight((x_i[j] - x[j]) / h[j]);
        if w == 0.0 {
            return 0.0;
        }
    }
    w
}

/// Domain bandwidths `h_1..h_q` plus the range bandwidth `h_{q+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandwidths {
    pub domain: Vec<f64>,
    pub range: f64,
}

impl Bandwidths {
    pub fn new(domain: Vec<f64>, range: f64) -> Result<Self> {
        validate_domain(&domain)?;
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::invalid(format!(
                "range bandwidth must be positive and finite, got {range}"
            )));
        }
        Ok(Bandwidths { domain, range })
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }
}

pub(crate) fn validate_domain(h: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(Error::invalid("at least one domain bandwidth is required"));
    }
    if let Some(bad) = h.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::invalid(format!(
            "domain bandwidths must be positive and finite, got {bad}"
        )));
    }
    Ok(())
}
