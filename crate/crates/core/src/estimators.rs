//! Local constant (Nadaraya–Watson) and anisotropic local constant estimators.
//!
//! The anisotropic estimator multiplies the product domain kernel by a range
//! kernel on differences of pilot values, so observations on the far side of
//! a jump in the regression function receive little or no weight:
//!
//! ```text
//! ĝ(x) = Σ Yᵢ K((Xᵢ−x)/h) k((g̃(Xᵢ)−g̃(x))/h_r) / Σ K((Xᵢ−x)/h) k((g̃(Xᵢ)−g̃(x))/h_r)
//! ```
//!
//! Weighted averages are accumulated about the midrange of `y` and clamped to
//! `[min y, max y]`, so constant data reproduces exactly and rounding can never
//! push an estimate outside the convex hull of the outcomes.

use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bandwidth::default_range_bandwidth;
use crate::data::{fmt_f64, Dataset, Points};
use crate::error::{Error, Result};
use crate::kernels::{product_weight, validate_domain, Bandwidths, KernelFamily};

/// Default ratio of pilot to anisotropic domain bandwidth when none is given.
pub const DEFAULT_PILOT_RATIO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Isotropic local constant.
    Lc,
    /// Anisotropic local constant with a range kernel on pilot values.
    Alc,
}

/// Regression function used only as a simulation oracle pilot.
pub type OracleFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PilotPolicy {
    /// Isotropic local constant pilot. `None` uses `DEFAULT_PILOT_RATIO` times the
    /// anisotropic domain bandwidths. With `enforce_rate`, explicit pilot
    /// bandwidths must be strictly smaller than the anisotropic ones.
    IsotropicLc {
        bandwidths: Option<Vec<f64>>,
        enforce_rate: bool,
    },
    /// The true regression function (ALCT).
    Oracle(OracleFn),
    /// Precomputed pilot values at the data points and at the targets.
    Supplied { at_data: Vec<f64>, at_targets: Vec<f64> },
}

impl PilotPolicy {
    pub fn isotropic() -> Self {
        PilotPolicy::IsotropicLc {
            bandwidths: None,
            enforce_rate: true,
        }
    }

    pub fn oracle(g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        PilotPolicy::Oracle(Arc::new(g))
    }
}

impl std::fmt::Debug for PilotPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PilotPolicy::IsotropicLc {
                bandwidths,
                enforce_rate,
            } => f
                .debug_struct("IsotropicLc")
                .field("bandwidths", bandwidths)
                .field("enforce_rate", enforce_rate)
                .finish(),
            PilotPolicy::Oracle(_) => f.write_str("Oracle(..)"),
            PilotPolicy::Supplied { at_data, at_targets } => f
                .debug_struct("Supplied")
                .field("at_data", &at_data.len())
                .field("at_targets", &at_targets.len())
                .finish(),
        }
    }
}

/// How the range bandwidth `h_{q+1}` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeBandwidth {
    Fixed(f64),
    /// `multiplier ×` sample SD of the initial pilot at the data points.
    PilotSd {
        multiplier: f64,
    },
}

#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub kernel: KernelFamily,
    pub range_kernel: KernelFamily,
    pub domain: Vec<f64>,
    pub range: RangeBandwidth,
    pub pilot: PilotPolicy,
    /// Number of anisotropic passes `d ≥ 1`; ignored for LC.
    pub iterations: usize,
}

impl EstimatorSpec {
    pub fn lc(kernel: KernelFamily, domain: Vec<f64>) -> Self {
        EstimatorSpec {
            kind: EstimatorKind::Lc,
            kernel,
            range_kernel: kernel,
            domain,
            range: RangeBandwidth::Fixed(1.0),
            pilot: PilotPolicy::isotropic(),
            iterations: 1,
        }
    }

    pub fn alc(kernel: KernelFamily, domain: Vec<f64>, range: RangeBandwidth, pilot: PilotPolicy) -> Self {
        EstimatorSpec {
            kind: EstimatorKind::Alc,
            kernel,
            range_kernel: kernel,
            domain,
            range,
            pilot,
            iterations: 1,
        }
    }

    pub fn with_iterations(mut self, d: usize) -> Self {
        self.iterations = d;
        self
    }

    pub fn with_range_kernel(mut self, k: KernelFamily) -> Self {
        self.range_kernel = k;
        self
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        validate_domain(&self.domain)?;
        if self.domain.len() != q {
            return Err(Error::invalid(format!(
                "{} domain bandwidths for {q}-dimensional regressors",
                self.domain.len()
            )));
        }
        if self.kind == EstimatorKind::Lc {
            return Ok(());
        }
        if self.iterations == 0 {
            return Err(Error::invalid("anisotropic fits need at least one iteration"));
        }
        match self.range {
            RangeBandwidth::Fixed(h) if !(h.is_finite() && h > 0.0) => {
                return Err(Error::invalid(format!("range bandwidth must be positive, got {h}")))
            }
            RangeBandwidth::PilotSd { multiplier } if !(multiplier.is_finite() && multiplier > 0.0) => {
                return Err(Error::invalid(format!(
                    "range bandwidth multiplier must be positive, got {multiplier}"
                )))
            }
            _ => {}
        }
        if let PilotPolicy::IsotropicLc {
            bandwidths: Some(hp),
            enforce_rate,
        } = &self.pilot
        {
            validate_domain(hp)?;
            if hp.len() != q {
                return Err(Error::invalid("pilot bandwidth dimension mismatch"));
            }
            if *enforce_rate && hp.iter().zip(&self.domain).any(|(p, h)| p >= h) {
                return Err(Error::invalid(
                    "pilot bandwidths must be strictly smaller than the anisotropic domain bandwidths",
                ));
            }
        }
        Ok(())
    }
}

/// Estimates at a set of targets. Undefined targets (all weights zero) hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    targets: Points,
    estimates: Vec<f64>,
    undefined: Vec<bool>,
    range_bandwidth: Option<f64>,
}

impl FitResult {
    fn from_estimates(targets: Points, estimates: Vec<f64>) -> Self {
        let undefined = estimates.iter().map(|v| v.is_nan()).collect();
        FitResult {
            targets,
            estimates,
            undefined,
            range_bandwidth: None,
        }
    }

    pub fn targets(&self) -> &Points {
        &self.targets
    }

    /// Raw estimates, `NaN` where undefined.
    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn undefined_mask(&self) -> &[bool] {
        &self.undefined
    }

    pub fn estimate(&self, i: usize) -> Option<f64> {
        (!self.undefined[i]).then(|| self.estimates[i])
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn undefined_count(&self) -> usize {
        self.undefined.iter().filter(|u| **u).count()
    }

    /// Range bandwidth actually used, for anisotropic fits.
    pub fn range_bandwidth(&self) -> Option<f64> {
        self.range_bandwidth
    }

    /// Replaces each undefined estimate by the estimate at the nearest defined
    /// target (Euclidean distance, ties to the lower index). The mask keeps
    /// recording which values were imputed.
    pub fn fill_nearest(&self) -> Vec<f64> {
        let defined: Vec<usize> = (0..self.len()).filter(|&i| !self.undefined[i]).collect();
        let mut out = self.estimates.clone();
        if defined.is_empty() {
            return out;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            if !self.undefined[i] {
                continue;
            }
            let t = self.targets.row(i);
            let mut best = (f64::INFINITY, defined[0]);
            for &k in &defined {
                let d2: f64 = t.iter().zip(self.targets.row(k)).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < best.0 {
                    best = (d2, k);
                }
            }
            *slot = self.estimates[best.1];
        }
        out
    }

    /// CSV with header `x_1..x_q,ghat,undefined`.
    pub fn write_csv<W: Write>(&self, w: W, values: Option<&[f64]>) -> Result<()> {
        let values = values.unwrap_or(&self.estimates);
        let mut wtr = csv::Writer::from_writer(w);
        let q = self.targets.dim();
        let mut header: Vec<String> = (1..=q).map(|j| format!("x_{j}")).collect();
        header.push("ghat".into());
        header.push("undefined".into());
        wtr.write_record(&header)?;
        for (i, row) in self.targets.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            rec.push(if values[i].is_nan() {
                String::new()
            } else {
                fmt_f64(values[i])
            });
            rec.push(if self.undefined[i] { "1".into() } else { "0".into() });
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn save(&self, path: &Path, values: Option<&[f64]>) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f), values)
    }
}

/// Design points sorted on their first coordinate so compact kernels only
/// visit a window of candidates.
pub(crate) struct DesignIndex<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    first: Vec<f64>,
    /// Second coordinate in sorted order (empty when `q == 1`).
    second: Vec<f64>,
    /// End of the run of equal first coordinates containing each position.
    run_end: Vec<usize>,
    y_ref: f64,
    y_lo: f64,
    y_hi: f64,
}

struct Sums {
    num: f64,
    den: f64,
}

impl<'a> DesignIndex<'a> {
    pub(crate) fn new(data: &'a Dataset) -> Self {
        let x = data.x();
        let q = data.dim();
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (x.row(a), x.row(b));
            let key = ra[0].total_cmp(&rb[0]);
            if q > 1 {
                key.then(ra[1].total_cmp(&rb[1]))
            } else {
                key
            }
        });
        let first: Vec<f64> = order.iter().map(|&i| x.row(i)[0]).collect();
        let second = if q > 1 {
            order.iter().map(|&i| x.row(i)[1]).collect()
        } else {
            Vec::new()
        };
        let mut run_end = vec![0; first.len()];
        let mut end = first.len();
        for p in (0..first.len()).rev() {
            if p + 1 < first.len() && first[p] != first[p + 1] {
                end = p + 1;
            }
            run_end[p] = end;
        }
        let (y_lo, y_hi) = data.y_bounds();
        DesignIndex {
            data,
            order,
            first,
            second,
            run_end,
            y_ref: 0.5 * (y_lo + y_hi),
            y_lo,
            y_hi,
        }
    }

    /// Sorted positions whose first coordinate can carry nonzero weight.
    fn window(&self, t0: f64, h0: f64, kernel: KernelFamily) -> Range<usize> {
        match kernel.support_radius() {
            None => 0..self.order.len(),
            Some(r) => {
                // Slightly widened; the kernel itself makes the exact cut.
                let reach = r * h0 * (1.0 + 1e-9);
                let lo = self.first.partition_point(|&v| v < t0 - reach);
                let hi = self.first.partition_point(|&v| v <= t0 + reach);
                lo..hi
            }
        }
    }

    /// Calls `visit` with every observation index that can carry weight at `t`.
    /// Long runs of a shared first coordinate (gridded designs) are narrowed by
    /// binary search on the second coordinate.
    #[inline]
    fn for_candidates(&self, t: &[f64], h: &[f64], kernel: KernelFamily, mut visit: impl FnMut(usize)) {
        let window = self.window(t[0], h[0], kernel);
        let Some(r) = kernel.support_radius().filter(|_| !self.second.is_empty()) else {
            for p in window {
                visit(self.order[p]);
            }
            return;
        };
        let reach = r * h[1] * (1.0 + 1e-9);
        let mut p = window.start;
        while p < window.end {
            let end = self.run_end[p].min(window.end);
            if end - p > 16 {
                let run = &self.second[p..end];
                let lo = p + run.partition_point(|&v| v < t[1] - reach);
                let hi = p + run.partition_point(|&v| v <= t[1] + reach);
                for k in lo..hi {
                    visit(self.order[k]);
                }
            } else {
                for k in p..end {
                    visit(self.order[k]);
                }
            }
            p = end;
        }
    }

    fn finish(&self, s: &Sums) -> f64 {
        if s.den > 0.0 {
            (self.y_ref + s.num / s.den).clamp(self.y_lo, self.y_hi)
        } else {
            f64::NAN
        }
    }

    /// Kernel sums at `t`, optionally leaving out observation `skip`.
    fn lc_sums(&self, t: &[f64], kernel: KernelFamily, h: &[f64], skip: Option<usize>) -> Sums {
        let x = self.data.x();
        let y = self.data.y();
        let mut s = Sums { num: 0.0, den: 0.0 };
        self.for_candidates(t, h, kernel, |j| {
            if Some(j) == skip {
                return;
            }
            let w = product_weight(kernel, x.row(j), t, h);
            if w > 0.0 {
                s.num += w * (y[j] - self.y_ref);
                s.den += w;
            }
        });
        s
    }

    #[allow(clippy::too_many_arguments)]
    fn alc_sums(
        &self,
        t: &[f64],
        pilot_t: f64,
        pilot: &[f64],
        kernel: KernelFamily,
        range_kernel: KernelFamily,
        h: &[f64],
        h_range: f64,
    ) -> Sums {
        let x = self.data.x();
        let y = self.data.y();
        let mut s = Sums { num: 0.0, den: 0.0 };
        self.for_candidates(t, h, kernel, |j| {
            let pj = pilot[j];
            if !pj.is_finite() {
                return;
            }
            let wd = product_weight(kernel, x.row(j), t, h);
            if wd == 0.0 {
                return;
            }
            let w = wd * range_kernel.weight((pj - pilot_t) / h_range);
            if w > 0.0 {
                s.num += w * (y[j] - self.y_ref);
                s.den += w;
            }
        });
        s
    }

    pub(crate) fn lc(&self, targets: &Points, kernel: KernelFamily, h: &[f64]) -> Vec<f64> {
        (0..targets.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|i| self.finish(&self.lc_sums(targets.row(i), kernel, h, None)))
            .collect()
    }

    /// LC pass over the design itself: fitted values, smoother-matrix diagonal
    /// and leave-one-out estimates (`NaN` when the held-out window is empty).
    pub(crate) fn lc_self(&self, kernel: KernelFamily, h: &[f64]) -> SelfFit {
        let x = self.data.x();
        let y = self.data.y();
        let w0 = product_weight(kernel, x.row(0), x.row(0), h);
        let rows: Vec<(f64, f64, f64)> = (0..self.data.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                let s = self.lc_sums(x.row(i), kernel, h, Some(i));
                let loo = self.finish(&s);
                let full = Sums {
                    num: s.num + w0 * (y[i] - self.y_ref),
                    den: s.den + w0,
                };
                (self.finish(&full), w0 / full.den, loo)
            })
            .collect();
        let mut out = SelfFit {
            fitted: Vec::with_capacity(rows.len()),
            diag: Vec::with_capacity(rows.len()),
            loo: Vec::with_capacity(rows.len()),
        };
        for (f, d, l) in rows {
            out.fitted.push(f);
            out.diag.push(d);
            out.loo.push(l);
        }
        out
    }

    /// Anisotropic pass over the design with a fixed pilot: fitted values and
    /// smoother-matrix diagonal (`NaN` fitted value where undefined).
    pub(crate) fn alc_self(
        &self,
        pilot: &[f64],
        kernel: KernelFamily,
        range_kernel: KernelFamily,
        h: &[f64],
        h_range: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let x = self.data.x();
        let w0 = product_weight(kernel, x.row(0), x.row(0), h) * range_kernel.weight(0.0);
        (0..self.data.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                if !pilot[i].is_finite() {
                    return (f64::NAN, f64::NAN);
                }
                let s = self.alc_sums(x.row(i), pilot[i], pilot, kernel, range_kernel, h, h_range);
                (self.finish(&s), w0 / s.den)
            })
            .unzip()
    }

    /// Leave-one-out anisotropic estimates at the design points. With
    /// `pilot_h`, the pilot is the LC fit at those bandwidths with the held-out
    /// observation removed as well; otherwise `pilot` is used as given.
    pub(crate) fn alc_loo(
        &self,
        pilot: &[f64],
        pilot_h: Option<&[f64]>,
        kernel: KernelFamily,
        range_kernel: KernelFamily,
        h: &[f64],
        h_range: f64,
    ) -> Vec<f64> {
        let x = self.data.x();
        let y = self.data.y();
        let n = self.data.len();
        let full: Vec<(f64, f64)> = match pilot_h {
            Some(hp) => (0..n)
                .into_par_iter()
                .with_min_len(64)
                .map(|j| {
                    let s = self.lc_sums(x.row(j), kernel, hp, None);
                    (s.num, s.den)
                })
                .collect(),
            None => Vec::new(),
        };
        let pilot_without = |i: usize, j: usize| -> f64 {
            let hp = pilot_h.expect("downdating needs pilot bandwidths");
            let w = product_weight(kernel, x.row(i), x.row(j), hp);
            let (num, den) = full[j];
            let s = Sums {
                num: num - w * (y[i] - self.y_ref),
                den: den - w,
            };
            if s.den > 1e-12 * den {
                self.finish(&s)
            } else {
                f64::NAN
            }
        };
        (0..n)
            .into_par_iter()
            .with_min_len(16)
            .map(|i| {
                let pi = if pilot_h.is_some() {
                    pilot_without(i, i)
                } else {
                    pilot[i]
                };
                if !pi.is_finite() {
                    return f64::NAN;
                }
                let t = x.row(i);
                let mut s = Sums { num: 0.0, den: 0.0 };
                self.for_candidates(t, h, kernel, |j| {
                    if j == i {
                        return;
                    }
                    let wd = product_weight(kernel, x.row(j), t, h);
                    if wd == 0.0 {
                        return;
                    }
                    let pj = if pilot_h.is_some() {
                        pilot_without(i, j)
                    } else {
                        pilot[j]
                    };
                    if !pj.is_finite() {
                        return;
                    }
                    let w = wd * range_kernel.weight((pj - pi) / h_range);
                    if w > 0.0 {
                        s.num += w * (y[j] - self.y_ref);
                        s.den += w;
                    }
                });
                self.finish(&s)
            })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn alc(
        &self,
        targets: &Points,
        pilot_targets: &[f64],
        pilot_data: &[f64],
        kernel: KernelFamily,
        range_kernel: KernelFamily,
        h: &[f64],
        h_range: f64,
    ) -> Vec<f64> {
        (0..targets.len())
            .into_par_iter()
            .with_min_len(64)
            .map(|i| {
                let pt = pilot_targets[i];
                if !pt.is_finite() {
                    return f64::NAN;
                }
                let s = self.alc_sums(targets.row(i), pt, pilot_data, kernel, range_kernel, h, h_range);
                self.finish(&s)
            })
            .collect()
    }
}

pub(crate) struct SelfFit {
    pub fitted: Vec<f64>,
    pub diag: Vec<f64>,
    pub loo: Vec<f64>,
}

fn check_targets(data: &Dataset, targets: &Points) -> Result<()> {
    if targets.dim() != data.dim() {
        return Err(Error::invalid(format!(
            "targets are {}-dimensional but regressors are {}-dimensional",
            targets.dim(),
            data.dim()
        )));
    }
    Ok(())
}

fn warn_if_all_undefined(fit: &FitResult) {
    if !fit.is_empty() && fit.undefined_count() == fit.len() {
        log::warn!("every target is undefined: no observation carries weight at any target");
    }
}

/// Isotropic local constant fit at `targets`.
pub fn lc_fit(data: &Dataset, targets: &Points, kernel: KernelFamily, h: &[f64]) -> Result<FitResult> {
    check_targets(data, targets)?;
    validate_domain(h)?;
    if h.len() != data.dim() {
        return Err(Error::invalid("domain bandwidth dimension mismatch"));
    }
    let index = DesignIndex::new(data);
    let fit = FitResult::from_estimates(targets.clone(), index.lc(targets, kernel, h));
    warn_if_all_undefined(&fit);
    Ok(fit)
}

/// One anisotropic pass with explicit pilot values at the data points and targets.
/// Non-finite pilot values exclude that observation (data) or leave the target
/// undefined (targets).
#[allow(clippy::too_many_arguments)]
pub fn alc_fit(
    data: &Dataset,
    targets: &Points,
    kernel: KernelFamily,
    range_kernel: KernelFamily,
    bandwidths: &Bandwidths,
    pilot_at_data: &[f64],
    pilot_at_targets: &[f64],
) -> Result<FitResult> {
    check_targets(data, targets)?;
    Bandwidths::new(bandwidths.domain.clone(), bandwidths.range)?;
    if bandwidths.dim() != data.dim() {
        return Err(Error::invalid("domain bandwidth dimension mismatch"));
    }
    if pilot_at_data.len() != data.len() {
        return Err(Error::invalid(format!(
            "pilot has {} values for {} observations",
            pilot_at_data.len(),
            data.len()
        )));
    }
    if pilot_at_targets.len() != targets.len() {
        return Err(Error::invalid(format!(
            "pilot has {} values for {} targets",
            pilot_at_targets.len(),
            targets.len()
        )));
    }
    let index = DesignIndex::new(data);
    let est = index.alc(
        targets,
        pilot_at_targets,
        pilot_at_data,
        kernel,
        range_kernel,
        &bandwidths.domain,
        bandwidths.range,
    );
    let mut fit = FitResult::from_estimates(targets.clone(), est);
    fit.range_bandwidth = Some(bandwidths.range);
    warn_if_all_undefined(&fit);
    Ok(fit)
}

fn eval_oracle(g: &OracleFn, pts: &Points) -> Result<Vec<f64>> {
    pts.rows()
        .map(|r| {
            let v = g(r);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::invalid(format!("oracle returned non-finite value at {r:?}")))
            }
        })
        .collect()
}

/// Full estimation pipeline: LC directly, or pilot → `d` anisotropic passes,
/// each pass using the previous one (at data points and targets) as its pilot.
pub fn fit(data: &Dataset, targets: &Points, spec: &EstimatorSpec) -> Result<FitResult> {
    check_targets(data, targets)?;
    spec.validate(data.dim())?;
    let index = DesignIndex::new(data);
    let h = &spec.domain;
    if spec.kind == EstimatorKind::Lc {
        let fit = FitResult::from_estimates(targets.clone(), index.lc(targets, spec.kernel, h));
        warn_if_all_undefined(&fit);
        return Ok(fit);
    }

    let same_targets = targets == data.x();
    let (mut pilot_data, mut pilot_targets) = match &spec.pilot {
        PilotPolicy::IsotropicLc { bandwidths, .. } => {
            let hp: Vec<f64> = match bandwidths {
                Some(hp) => hp.clone(),
                None => h.iter().map(|v| v * DEFAULT_PILOT_RATIO).collect(),
            };
            let at_data = index.lc(data.x(), spec.kernel, &hp);
            let at_targets = if same_targets {
                at_data.clone()
            } else {
                index.lc(targets, spec.kernel, &hp)
            };
            (at_data, at_targets)
        }
        PilotPolicy::Oracle(g) => (eval_oracle(g, data.x())?, eval_oracle(g, targets)?),
        PilotPolicy::Supplied { at_data, at_targets } => {
            if at_data.len() != data.len() || at_targets.len() != targets.len() {
                return Err(Error::invalid("supplied pilot length mismatch"));
            }
            if at_data.iter().chain(at_targets).any(|v| !v.is_finite()) {
                return Err(Error::invalid("supplied pilot values must be finite"));
            }
            (at_data.clone(), at_targets.clone())
        }
    };

    let h_range = match spec.range {
        RangeBandwidth::Fixed(v) => v,
        RangeBandwidth::PilotSd { multiplier } => {
            let finite: Vec<f64> = pilot_data.iter().copied().filter(|v| v.is_finite()).collect();
            if finite.len() < 2 {
                return Err(Error::invalid("pilot is undefined at almost every observation"));
            }
            default_range_bandwidth(&finite, multiplier)?
        }
    };

    let mut estimates = Vec::new();
    for round in 1..=spec.iterations {
        estimates = index.alc(
            targets,
            &pilot_targets,
            &pilot_data,
            spec.kernel,
            spec.range_kernel,
            h,
            h_range,
        );
        if round < spec.iterations {
            let next_data = if same_targets {
                estimates.clone()
            } else {
                index.alc(
                    data.x(),
                    &pilot_data,
                    &pilot_data,
                    spec.kernel,
                    spec.range_kernel,
                    h,
                    h_range,
                )
            };
            pilot_targets = std::mem::take(&mut estimates);
            pilot_data = next_data;
        }
    }
    let mut fit = FitResult::from_estimates(targets.clone(), estimates);
    fit.range_bandwidth = Some(h_range);
    warn_if_all_undefined(&fit);
    Ok(fit)
}
