//! Data-driven and rule-based bandwidth choices.
//!
//! Selectors search a grid of candidate domain bandwidths. For `q > 1` the grid
//! is searched along its diagonal: candidate `k` uses the `k`-th value of every
//! dimension's grid. Ties resolve to the smaller candidate.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::DesignIndex;
use crate::kernels::{validate_domain, KernelFamily};

/// Squared-error stand-in for a leave-one-out point with no neighbours.
pub const LOO_UNDEFINED_PENALTY: f64 = 1e12;

pub const DEFAULT_GRID_POINTS: usize = 25;

/// Candidate bandwidths, one strictly increasing list per dimension, all of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid {
    per_dim: Vec<Vec<f64>>,
}

impl BandwidthGrid {
    pub fn new(per_dim: Vec<Vec<f64>>) -> Result<Self> {
        let len = per_dim.first().map(Vec::len).unwrap_or(0);
        if len == 0 {
            return Err(Error::invalid("bandwidth grid is empty"));
        }
        for g in &per_dim {
            if g.len() != len {
                return Err(Error::invalid("every dimension's grid must have the same length"));
            }
            validate_domain(g)?;
            if g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("bandwidth grids must be strictly increasing"));
            }
        }
        Ok(BandwidthGrid { per_dim })
    }

    /// A one-dimensional grid.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        BandwidthGrid::new(vec![values])
    }

    /// Geometric grid spanning `[range(x_j)/n, range(x_j)]` in every dimension.
    pub fn geometric_default(data: &Dataset, points: usize) -> Result<Self> {
        let n = data.len() as f64;
        let per_dim = (0..data.dim())
            .map(|j| {
                let col = data.x().column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = hi - lo;
                if span <= 0.0 {
                    return Err(Error::invalid(format!("regressor x_{} is constant", j + 1)));
                }
                Ok(geometric(span / n, span, points))
            })
            .collect::<Result<Vec<_>>>()?;
        BandwidthGrid::new(per_dim)
    }

    pub fn dim(&self) -> usize {
        self.per_dim.len()
    }

    pub fn len(&self) -> usize {
        self.per_dim[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn candidate(&self, k: usize) -> Vec<f64> {
        self.per_dim.iter().map(|g| g[k]).collect()
    }

    pub fn candidates(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|k| self.candidate(k))
    }
}

/// `points` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|k| lo * (ratio * k as f64).exp()).collect();
    g[points - 1] = hi;
    g
}

fn check_grid(data: &Dataset, grid: &BandwidthGrid) -> Result<()> {
    if grid.dim() != data.dim() {
        return Err(Error::invalid(format!(
            "grid is {}-dimensional, regressors are {}-dimensional",
            grid.dim(),
            data.dim()
        )));
    }
    Ok(())
}

/// Leave-one-out least-squares cross-validation score for every grid candidate.
pub fn lscv_scores(data: &Dataset, kernel: KernelFamily, grid: &BandwidthGrid) -> Result<Vec<LscvScore>> {
    check_grid(data, grid)?;
    let index = DesignIndex::new(data);
    let y = data.y();
    let n = data.len() as f64;
    Ok(grid
        .candidates()
        .map(|h| {
            let pass = index.lc_self(kernel, &h);
            let mut undefined = 0;
            let mut sse = 0.0;
            for (yi, loo) in y.iter().zip(&pass.loo) {
                if loo.is_nan() {
                    undefined += 1;
                    sse += LOO_UNDEFINED_PENALTY;
                } else {
                    sse += (yi - loo) * (yi - loo);
                }
            }
            LscvScore {
                bandwidth: h,
                cv: sse / n,
                undefined,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LscvScore {
    pub bandwidth: Vec<f64>,
    pub cv: f64,
    /// Leave-one-out points with an empty window.
    pub undefined: usize,
}

/// Grid point minimising `CV(h) = (1/n) Σ (Yᵢ − ĝ₋ᵢ(Xᵢ))²`.
pub fn select_lscv(data: &Dataset, kernel: KernelFamily, grid: &BandwidthGrid) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::invalid("least-squares cross-validation needs n >= 3"));
    }
    best_lscv(&lscv_scores(data, kernel, grid)?, data.len())
}

fn best_lscv(scores: &[LscvScore], n: usize) -> Result<Vec<f64>> {
    let mut best: Option<&LscvScore> = None;
    for s in scores.iter().filter(|s| s.undefined < n) {
        if best.is_none_or(|b| s.cv < b.cv) {
            best = Some(s);
        }
    }
    best.map(|s| s.bandwidth.clone())
        .ok_or_else(|| Error::SelectionFailure("every leave-one-out point is undefined at every grid bandwidth".into()))
}

/// Pilot used inside anisotropic cross-validation.
#[derive(Debug, Clone, Copy)]
pub enum CvPilot<'a> {
    /// Values at the data points that do not depend on `Y` (e.g. the truth).
    Fixed(&'a [f64]),
    /// LC pilot at these bandwidths, refitted without each held-out observation.
    LeaveOneOutLc(&'a [f64]),
}

/// Leave-one-out cross-validation scores for the anisotropic smoother. With
/// [`CvPilot::LeaveOneOutLc`] the held-out response is removed from the pilot
/// too, so it cannot influence its own prediction through the range kernel.
pub fn lscv_scores_alc(
    data: &Dataset,
    kernel: KernelFamily,
    range_kernel: KernelFamily,
    grid: &BandwidthGrid,
    pilot: CvPilot<'_>,
    h_range: f64,
) -> Result<Vec<LscvScore>> {
    check_grid(data, grid)?;
    if !(h_range.is_finite() && h_range > 0.0) {
        return Err(Error::invalid(format!(
            "range bandwidth must be positive, got {h_range}"
        )));
    }
    let (values, pilot_h): (&[f64], Option<&[f64]>) = match pilot {
        CvPilot::Fixed(v) => {
            if v.len() != data.len() {
                return Err(Error::invalid(format!(
                    "pilot has {} values for {} observations",
                    v.len(),
                    data.len()
                )));
            }
            (v, None)
        }
        CvPilot::LeaveOneOutLc(hp) => {
            validate_domain(hp)?;
            if hp.len() != data.dim() {
                return Err(Error::invalid("pilot bandwidth dimension mismatch"));
            }
            (&[], Some(hp))
        }
    };
    let index = DesignIndex::new(data);
    let y = data.y();
    let n = data.len() as f64;
    Ok(grid
        .candidates()
        .map(|h| {
            let loo = index.alc_loo(values, pilot_h, kernel, range_kernel, &h, h_range);
            let mut undefined = 0;
            let mut sse = 0.0;
            for (yi, l) in y.iter().zip(&loo) {
                if l.is_nan() {
                    undefined += 1;
                    sse += LOO_UNDEFINED_PENALTY;
                } else {
                    sse += (yi - l) * (yi - l);
                }
            }
            LscvScore {
                bandwidth: h,
                cv: sse / n,
                undefined,
            }
        })
        .collect())
}

/// Grid point minimising the anisotropic leave-one-out score.
pub fn select_lscv_alc(
    data: &Dataset,
    kernel: KernelFamily,
    range_kernel: KernelFamily,
    grid: &BandwidthGrid,
    pilot: CvPilot<'_>,
    h_range: f64,
) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::invalid("least-squares cross-validation needs n >= 3"));
    }
    best_lscv(
        &lscv_scores_alc(data, kernel, range_kernel, grid, pilot, h_range)?,
        data.len(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AiccScore {
    pub bandwidth: Vec<f64>,
    /// `None` when `tr(H) + 2 >= n`.
    pub aicc: Option<f64>,
    pub trace: f64,
    pub sigma2: f64,
}

/// Improved-AIC score for every grid candidate.
pub fn aicc_scores(data: &Dataset, kernel: KernelFamily, grid: &BandwidthGrid) -> Result<Vec<AiccScore>> {
    check_grid(data, grid)?;
    let index = DesignIndex::new(data);
    let y = data.y();
    let n = data.len() as f64;
    Ok(grid
        .candidates()
        .map(|h| {
            let pass = index.lc_self(kernel, &h);
            let trace: f64 = pass.diag.iter().sum();
            let sigma2 = y
                .iter()
                .zip(&pass.fitted)
                .map(|(yi, fi)| (yi - fi) * (yi - fi))
                .sum::<f64>()
                / n;
            AiccScore {
                aicc: aicc_value(sigma2, trace, n),
                bandwidth: h,
                trace,
                sigma2,
            }
        })
        .collect())
}

/// `ln σ̂² + (1 + tr/n) / (1 − (tr + 2)/n)`, undefined when `tr + 2 >= n`.
pub fn aicc_value(sigma2: f64, trace: f64, n: f64) -> Option<f64> {
    if trace + 2.0 >= n {
        return None;
    }
    Some(sigma2.ln() + (1.0 + trace / n) / (1.0 - (trace + 2.0) / n))
}

/// Grid point minimising AIC_c for the local constant smoother.
pub fn select_aicc(data: &Dataset, kernel: KernelFamily, grid: &BandwidthGrid) -> Result<Vec<f64>> {
    if data.len() < 5 {
        return Err(Error::invalid("AIC_c selection needs n >= 5"));
    }
    best_aicc(&aicc_scores(data, kernel, grid)?)
}

fn best_aicc(scores: &[AiccScore]) -> Result<Vec<f64>> {
    let mut best: Option<(f64, &AiccScore)> = None;
    for s in scores {
        if let Some(v) = s.aicc {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, s));
            }
        }
    }
    best.map(|(_, s)| s.bandwidth.clone())
        .ok_or_else(|| Error::SelectionFailure("tr(H) + 2 >= n at every grid bandwidth".into()))
}

/// AIC_c scores for the anisotropic smoother with the pilot values at the
/// data points held fixed, so the fit is linear in `Y`. A candidate that
/// leaves any observation undefined gets no score.
pub fn aicc_scores_alc(
    data: &Dataset,
    kernel: KernelFamily,
    range_kernel: KernelFamily,
    grid: &BandwidthGrid,
    pilot_at_data: &[f64],
    h_range: f64,
) -> Result<Vec<AiccScore>> {
    check_grid(data, grid)?;
    if pilot_at_data.len() != data.len() {
        return Err(Error::invalid(format!(
            "pilot has {} values for {} observations",
            pilot_at_data.len(),
            data.len()
        )));
    }
    if !(h_range.is_finite() && h_range > 0.0) {
        return Err(Error::invalid(format!(
            "range bandwidth must be positive, got {h_range}"
        )));
    }
    let index = DesignIndex::new(data);
    let y = data.y();
    let n = data.len() as f64;
    Ok(grid
        .candidates()
        .map(|h| {
            let (fitted, diag) = index.alc_self(pilot_at_data, kernel, range_kernel, &h, h_range);
            let trace: f64 = diag.iter().sum();
            let sigma2 = y.iter().zip(&fitted).map(|(yi, fi)| (yi - fi) * (yi - fi)).sum::<f64>() / n;
            AiccScore {
                aicc: if trace.is_nan() {
                    None
                } else {
                    aicc_value(sigma2, trace, n)
                },
                bandwidth: h,
                trace,
                sigma2,
            }
        })
        .collect())
}

/// Grid point minimising AIC_c for the anisotropic smoother with a fixed pilot.
pub fn select_aicc_alc(
    data: &Dataset,
    kernel: KernelFamily,
    range_kernel: KernelFamily,
    grid: &BandwidthGrid,
    pilot_at_data: &[f64],
    h_range: f64,
) -> Result<Vec<f64>> {
    if data.len() < 5 {
        return Err(Error::invalid("AIC_c selection needs n >= 5"));
    }
    best_aicc(&aicc_scores_alc(
        data,
        kernel,
        range_kernel,
        grid,
        pilot_at_data,
        h_range,
    )?)
}

/// Which convergence rate a rate rule targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateExponent {
    /// `h ∝ n^(−1/(q+2))`, the anisotropic MSE-optimal order.
    #[default]
    Anisotropic,
    /// `h ∝ n^(−1/(q+4))`, the isotropic local constant order.
    Isotropic,
}

impl RateExponent {
    pub fn exponent(self, q: usize) -> f64 {
        match self {
            RateExponent::Anisotropic => -1.0 / (q as f64 + 2.0),
            RateExponent::Isotropic => -1.0 / (q as f64 + 4.0),
        }
    }
}

/// `h_j = c · n_j^exponent` with `n_j` the number of distinct design values along dimension `j`.
pub fn rate_rule(data: &Dataset, c: f64, exponent: RateExponent) -> Result<Vec<f64>> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("rate-rule constant must be positive, got {c}")));
    }
    let q = data.dim();
    Ok((0..q)
        .map(|j| {
            let mut col = data.x().column(j);
            col.sort_by(f64::total_cmp);
            col.dedup();
            c * (col.len() as f64).powf(exponent.exponent(q))
        })
        .collect())
}

/// Componentwise `h_pilot × inflation`.
pub fn scale_for_alc(h_pilot: &[f64], inflation: f64) -> Result<Vec<f64>> {
    validate_domain(h_pilot)?;
    if !(inflation.is_finite() && inflation >= 1.0) {
        return Err(Error::invalid(format!("inflation must be >= 1, got {inflation}")));
    }
    Ok(h_pilot.iter().map(|h| h * inflation).collect())
}

/// `multiplier ×` sample standard deviation of the pilot values, or `multiplier`
/// when the pilot is constant.
pub fn default_range_bandwidth(pilot_values: &[f64], multiplier: f64) -> Result<f64> {
    if pilot_values.len() < 2 {
        return Err(Error::invalid("range bandwidth needs at least two pilot values"));
    }
    if pilot_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("pilot values must be finite"));
    }
    if !(multiplier.is_finite() && multiplier > 0.0) {
        return Err(Error::invalid(format!("multiplier must be positive, got {multiplier}")));
    }
    let sd = sample_sd(pilot_values);
    Ok(if sd > 0.0 { multiplier * sd } else { multiplier })
}

pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// How the (pilot / local constant) domain bandwidth is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainMethod {
    Aicc,
    Lscv,
    Fixed(Vec<f64>),
    RateRule { c: f64, exponent: RateExponent },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeRule {
    Multiplier(f64),
    Fixed(f64),
}

/// Complete bandwidth recipe for an LC / ALC experiment. The resolved domain
/// bandwidth is used for the LC fit; anisotropic fits use it times `inflation`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthPlan {
    pub method: DomainMethod,
    pub range_rule: RangeRule,
    /// `None` means the default geometric grid.
    pub grid: Option<BandwidthGrid>,
    pub inflation: f64,
}

impl Default for BandwidthPlan {
    fn default() -> Self {
        BandwidthPlan {
            method: DomainMethod::Aicc,
            range_rule: RangeRule::Multiplier(1.0),
            grid: None,
            inflation: 1.0,
        }
    }
}

impl BandwidthPlan {
    /// The isotropic bandwidth for `data`.
    pub fn resolve_domain(&self, data: &Dataset, kernel: KernelFamily) -> Result<Vec<f64>> {
        let grid = || match &self.grid {
            Some(g) => Ok(g.clone()),
            None => BandwidthGrid::geometric_default(data, DEFAULT_GRID_POINTS),
        };
        let h = match &self.method {
            DomainMethod::Aicc => select_aicc(data, kernel, &grid()?)?,
            DomainMethod::Lscv => select_lscv(data, kernel, &grid()?)?,
            DomainMethod::Fixed(h) => h.clone(),
            DomainMethod::RateRule { c, exponent } => rate_rule(data, *c, *exponent)?,
        };
        validate_domain(&h)?;
        if h.len() != data.dim() {
            return Err(Error::invalid(format!(
                "{} bandwidths for {}-dimensional regressors",
                h.len(),
                data.dim()
            )));
        }
        Ok(h)
    }

    pub fn range_bandwidth(&self) -> crate::estimators::RangeBandwidth {
        match self.range_rule {
            RangeRule::Multiplier(m) => crate::estimators::RangeBandwidth::PilotSd { multiplier: m },
            RangeRule::Fixed(v) => crate::estimators::RangeBandwidth::Fixed(v),
        }
    }
}
