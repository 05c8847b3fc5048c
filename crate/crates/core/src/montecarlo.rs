//! Monte Carlo comparison of LC, ALC and ALCT on the one-dimensional processes,
//! and empirical convergence-rate slopes.
//!
//! Each replicate: draw a dataset, choose the isotropic bandwidth `h` with the
//! configured plan, then fit
//! - LC at `h`;
//! - ALC with the LC fit at `h` as pilot;
//! - ALCT with the true regression function as pilot.
//!
//! See [`AlcSelection`] for how the anisotropic domain bandwidths are chosen.
//!
//! Replicate `r` of cell `(n, σ)` draws from a stream derived from
//! `(base_seed, n, σ, r)`, so results do not depend on scheduling.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bandwidth::{
    default_range_bandwidth, scale_for_alc, select_aicc_alc, select_lscv_alc, BandwidthGrid, BandwidthPlan, CvPilot,
    DomainMethod, RangeRule, RateExponent, DEFAULT_GRID_POINTS,
};
use crate::data::{fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{fit, lc_fit, EstimatorKind, EstimatorSpec, PilotPolicy, RangeBandwidth};
use crate::kernels::KernelFamily;
use crate::simulation::{derive_seed, mese, simulate_dataset, Dgp, DgpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum McEstimator {
    Lc,
    Alc,
    Alct,
}

impl McEstimator {
    pub const ALL: [McEstimator; 3] = [McEstimator::Lc, McEstimator::Alc, McEstimator::Alct];

    pub fn name(self) -> &'static str {
        match self {
            McEstimator::Lc => "LC",
            McEstimator::Alc => "ALC",
            McEstimator::Alct => "ALCT",
        }
    }
}

impl fmt::Display for McEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for McEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lc" => Ok(McEstimator::Lc),
            "alc" => Ok(McEstimator::Alc),
            "alct" => Ok(McEstimator::Alct),
            other => Err(Error::invalid(format!("unknown estimator '{other}' (lc, alc, alct)"))),
        }
    }
}

/// How the anisotropic fits get their domain bandwidth. In every mode the ALC
/// pilot is the LC fit at the selected isotropic `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlcSelection {
    /// Each anisotropic fit searches the plan's grid itself. ALCT, whose
    /// smoother is linear in `Y`, uses the plan's criterion. The ALC fit is not
    /// linear in `Y` (its pilot is), so it uses leave-one-out cross-validation
    /// with the held-out point removed from the pilot as well, over grid
    /// bandwidths strictly larger than `h`. Plans without a grid criterion fall
    /// back to `Scaled`.
    #[default]
    Selected,
    /// ALC and ALCT both use `h × inflation`.
    Scaled,
}

impl fmt::Display for AlcSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlcSelection::Selected => "selected",
            AlcSelection::Scaled => "scaled",
        })
    }
}

impl FromStr for AlcSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selected" => Ok(AlcSelection::Selected),
            "scaled" => Ok(AlcSelection::Scaled),
            other => Err(Error::invalid(format!("unknown anisotropic selection '{other}'"))),
        }
    }
}

/// Settings shared by every estimator in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub kernel: KernelFamily,
    pub range_kernel: KernelFamily,
    pub plan: BandwidthPlan,
    pub alc_selection: AlcSelection,
    pub iterations: usize,
}

/// Range bandwidth multiplier used by the Monte Carlo defaults.
pub const DEFAULT_RANGE_MULTIPLIER: f64 = 0.5;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kernel: KernelFamily::Uniform,
            range_kernel: KernelFamily::Uniform,
            plan: BandwidthPlan {
                range_rule: RangeRule::Multiplier(DEFAULT_RANGE_MULTIPLIER),
                ..BandwidthPlan::default()
            },
            alc_selection: AlcSelection::default(),
            iterations: 1,
        }
    }
}

impl PipelineConfig {
    /// Estimator spec for `est` on `data`, given the selected isotropic bandwidth
    /// `h`. ALCT needs the true process.
    pub fn spec_for(&self, est: McEstimator, truth: Option<Dgp>, data: &Dataset, h: &[f64]) -> Result<EstimatorSpec> {
        if est == McEstimator::Lc {
            return Ok(EstimatorSpec::lc(self.kernel, h.to_vec()));
        }
        let oracle = est == McEstimator::Alct;
        let dgp = match truth {
            Some(d) => d,
            None if oracle => return Err(Error::invalid("ALCT needs the true regression function")),
            None => Dgp::Constant { value: 0.0 },
        };
        if oracle && dgp.dim() != data.dim() {
            return Err(Error::invalid("true process and data differ in dimension"));
        }
        let pilot = if oracle {
            PilotPolicy::oracle(move |x| dgp.value(x))
        } else {
            PilotPolicy::IsotropicLc {
                bandwidths: Some(h.to_vec()),
                enforce_rate: self.plan.inflation > 1.0,
            }
        };
        let mut spec = EstimatorSpec {
            kind: EstimatorKind::Alc,
            kernel: self.kernel,
            range_kernel: self.range_kernel,
            domain: scale_for_alc(h, self.plan.inflation)?,
            range: self.plan.range_bandwidth(),
            pilot,
            iterations: self.iterations,
        };
        let criterion = match self.plan.method {
            DomainMethod::Aicc | DomainMethod::Lscv if self.alc_selection == AlcSelection::Selected => {
                &self.plan.method
            }
            _ => return Ok(spec),
        };

        let pilot_at_data: Vec<f64> = if oracle {
            data.x().rows().map(|r| dgp.value(r)).collect()
        } else {
            lc_fit(data, data.x(), self.kernel, h)?.estimates().to_vec()
        };
        let h_range = match self.plan.range_rule {
            RangeRule::Fixed(v) => v,
            RangeRule::Multiplier(m) => {
                let finite: Vec<f64> = pilot_at_data.iter().copied().filter(|v| v.is_finite()).collect();
                default_range_bandwidth(&finite, m)?
            }
        };
        let grid = match &self.plan.grid {
            Some(g) => g.clone(),
            None => BandwidthGrid::geometric_default(data, DEFAULT_GRID_POINTS)?,
        };
        spec.domain = if oracle {
            match criterion {
                DomainMethod::Aicc => {
                    select_aicc_alc(data, self.kernel, self.range_kernel, &grid, &pilot_at_data, h_range)?
                }
                _ => select_lscv_alc(
                    data,
                    self.kernel,
                    self.range_kernel,
                    &grid,
                    CvPilot::Fixed(&pilot_at_data),
                    h_range,
                )?,
            }
        } else {
            let eligible: Vec<Vec<f64>> = grid
                .candidates()
                .filter(|c| c.iter().zip(h).all(|(a, b)| a > b))
                .collect();
            if eligible.is_empty() {
                return Err(Error::SelectionFailure(
                    "no grid bandwidth exceeds the pilot bandwidth".into(),
                ));
            }
            let grid = BandwidthGrid::new((0..h.len()).map(|d| eligible.iter().map(|c| c[d]).collect()).collect())?;
            select_lscv_alc(
                data,
                self.kernel,
                self.range_kernel,
                &grid,
                CvPilot::LeaveOneOutLc(h),
                h_range,
            )?
        };
        if let PilotPolicy::IsotropicLc { enforce_rate, .. } = &mut spec.pilot {
            *enforce_rate = true;
        }
        spec.range = RangeBandwidth::Fixed(h_range);
        Ok(spec)
    }

    /// MESE of each estimator on one dataset. A failure shared by every
    /// estimator (selecting `h`) is an error; a failure of one estimator alone
    /// is reported as `NaN` in its slot.
    pub fn score(&self, dgp: Dgp, data: &Dataset, estimators: &[McEstimator]) -> Result<Vec<f64>> {
        let h = self.plan.resolve_domain(data, self.kernel)?;
        let truth: Vec<f64> = data.x().rows().map(|r| dgp.value(r)).collect();
        Ok(estimators
            .iter()
            .map(|&est| {
                let one = || {
                    let spec = self.spec_for(est, Some(dgp), data, &h)?;
                    let f = fit(data, data.x(), &spec)?;
                    mese(&truth, f.estimates(), f.undefined_mask())
                };
                one().unwrap_or_else(|e| {
                    log::warn!("{est} failed: {e}");
                    f64::NAN
                })
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub dgp: Dgp,
    pub ns: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub replicates: usize,
    pub estimators: Vec<McEstimator>,
    pub base_seed: u64,
    pub pipeline: PipelineConfig,
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.dgp.dim() != 1 {
            return Err(Error::invalid("Monte Carlo tables use the one-dimensional processes"));
        }
        if self.ns.is_empty() || self.sigmas.is_empty() || self.estimators.is_empty() {
            return Err(Error::invalid("ns, sigmas and estimators must be non-empty"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("at least one replicate is required"));
        }
        if self.ns.iter().any(|&n| n < 5) {
            return Err(Error::invalid("sample sizes must be at least 5"));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("sigmas must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub sigma: f64,
    pub n: usize,
    pub estimator: McEstimator,
    pub mean_mese: f64,
    pub sd_mese: f64,
    /// Replicates excluded because estimation failed.
    pub failures: usize,
    /// Per-replicate MESE in replicate order (`NaN` for failures).
    pub replicate_mese: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McTable {
    pub rows: Vec<McRow>,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Runs every `(σ, n)` cell. Work is spread over the current rayon pool; the
/// table is identical for any pool size.
pub fn run_monte_carlo(cfg: &McConfig) -> Result<McTable> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &sigma in &cfg.sigmas {
        for &n in &cfg.ns {
            for r in 0..cfg.replicates {
                jobs.push((sigma, n, r));
            }
        }
    }
    let outcomes: Vec<Option<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(sigma, n, r)| {
            let seed = derive_seed(cfg.base_seed, &[n as u64, sigma.to_bits(), r as u64]);
            let data = simulate_dataset(&DgpSpec {
                dgp: cfg.dgp,
                n,
                sigma,
                seed,
            })
            .ok()?;
            match cfg.pipeline.score(cfg.dgp, &data, &cfg.estimators) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("replicate {r} of (sigma={sigma}, n={n}) failed: {e}");
                    None
                }
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut chunks = outcomes.chunks(cfg.replicates);
    for &sigma in &cfg.sigmas {
        for &n in &cfg.ns {
            let cell = chunks.next().expect("one chunk per cell");
            for (k, &est) in cfg.estimators.iter().enumerate() {
                let replicate_mese: Vec<f64> = cell.iter().map(|o| o.as_ref().map_or(f64::NAN, |v| v[k])).collect();
                let ok: Vec<f64> = replicate_mese.iter().copied().filter(|v| !v.is_nan()).collect();
                let (mean_mese, sd_mese) = mean_sd(&ok);
                rows.push(McRow {
                    sigma,
                    n,
                    estimator: est,
                    mean_mese,
                    sd_mese,
                    failures: replicate_mese.len() - ok.len(),
                    replicate_mese,
                });
            }
        }
    }
    Ok(McTable { rows })
}

impl McTable {
    pub fn get(&self, sigma: f64, n: usize, est: McEstimator) -> Option<&McRow> {
        self.rows
            .iter()
            .find(|r| r.sigma == sigma && r.n == n && r.estimator == est)
    }

    /// Long-format CSV: `sigma,n,estimator,mean_mese,sd_mese,failures`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["sigma", "n", "estimator", "mean_mese", "sd_mese", "failures"])?;
        for r in &self.rows {
            wtr.write_record([
                fmt_f64(r.sigma),
                r.n.to_string(),
                r.estimator.to_string(),
                fmt_f64(r.mean_mese),
                fmt_f64(r.sd_mese),
                r.failures.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Per-replicate MESEs: `sigma,n,estimator,replicate,mese`.
    pub fn write_replicates_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["sigma", "n", "estimator", "replicate", "mese"])?;
        for r in &self.rows {
            for (i, m) in r.replicate_mese.iter().enumerate() {
                wtr.write_record([
                    fmt_f64(r.sigma),
                    r.n.to_string(),
                    r.estimator.to_string(),
                    i.to_string(),
                    if m.is_nan() { String::new() } else { fmt_f64(*m) },
                ])?;
            }
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    /// Wide layout as CSV: one row per σ, one `<estimator>_n<n>` column per
    /// cell, holding means or standard deviations.
    pub fn write_wide_csv<W: Write>(&self, w: W, sd: bool) -> Result<()> {
        let sigmas = self.distinct(|r| r.sigma);
        let ns = self.distinct(|r| r.n);
        let ests = self.distinct(|r| r.estimator);
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["sigma".to_string()];
        for n in &ns {
            for e in &ests {
                header.push(format!("{e}_n{n}"));
            }
        }
        wtr.write_record(&header)?;
        for &sigma in &sigmas {
            let mut rec = vec![fmt_f64(sigma)];
            for &n in &ns {
                for &e in &ests {
                    rec.push(match self.get(sigma, n, e) {
                        Some(r) => fmt_f64(if sd { r.sd_mese } else { r.mean_mese }),
                        None => String::new(),
                    });
                }
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    fn distinct<T: PartialEq + Copy>(&self, f: impl Fn(&McRow) -> T) -> Vec<T> {
        let mut out = Vec::new();
        for r in &self.rows {
            let v = f(r);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Wide table with one row per σ and an `(n, estimator)` column block,
    /// showing either means or standard deviations.
    pub fn render(&self, sd: bool) -> String {
        let sigmas = self.distinct(|r| r.sigma);
        let ns = self.distinct(|r| r.n);
        let ests = self.distinct(|r| r.estimator);
        let width = 10;
        let mut out = String::new();
        let _ = write!(out, "{:>6} |", "");
        for n in &ns {
            let block = format!("n={n}");
            let _ = write!(out, "{:^w$}|", block, w = ests.len() * (width + 1));
        }
        out.push('\n');
        let _ = write!(out, "{:>6} |", "sigma");
        for _ in &ns {
            for e in &ests {
                let _ = write!(out, "{:>width$} ", e.name());
            }
            out.push('|');
        }
        out.push('\n');
        for s in &sigmas {
            let _ = write!(out, "{:>6} |", fmt_f64(*s));
            for n in &ns {
                for e in &ests {
                    let v = self.get(*s, *n, *e).map(|r| if sd { r.sd_mese } else { r.mean_mese });
                    let cell = v.map_or("-".to_string(), |v| format!("{v:.5}"));
                    let _ = write!(out, "{cell:>width$} ");
                }
                out.push('|');
            }
            out.push('\n');
        }
        out
    }
}

/// Convergence-rate experiment: fixed rate-rule bandwidths, mean MESE per `n`,
/// and the least-squares slope of `ln mean MESE` on `ln n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub dgp: Dgp,
    pub estimator: McEstimator,
    pub kernel: KernelFamily,
    pub c: f64,
    pub exponent: RateExponent,
    pub range_multiplier: f64,
    pub sigma: f64,
    pub replicates: usize,
    pub ns: Vec<usize>,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub slope: f64,
    pub intercept: f64,
    /// `(n, mean MESE)` per sample size.
    pub per_n: Vec<(usize, f64)>,
}

pub fn rate_check(cfg: &RateConfig) -> Result<RateReport> {
    if cfg.ns.len() < 3 {
        return Err(Error::invalid("rate check needs at least three sample sizes"));
    }
    let lo = *cfg.ns.iter().min().unwrap();
    let hi = *cfg.ns.iter().max().unwrap();
    if lo < 5 || (hi as f64) < 10.0 * lo as f64 {
        return Err(Error::invalid("sample sizes must span at least one decade"));
    }
    if cfg.replicates == 0 {
        return Err(Error::invalid("at least one replicate is required"));
    }
    let mc = McConfig {
        dgp: cfg.dgp,
        ns: cfg.ns.clone(),
        sigmas: vec![cfg.sigma],
        replicates: cfg.replicates,
        estimators: vec![cfg.estimator],
        base_seed: cfg.base_seed,
        pipeline: PipelineConfig {
            kernel: cfg.kernel,
            range_kernel: cfg.kernel,
            plan: BandwidthPlan {
                method: DomainMethod::RateRule {
                    c: cfg.c,
                    exponent: cfg.exponent,
                },
                range_rule: crate::bandwidth::RangeRule::Multiplier(cfg.range_multiplier),
                grid: None,
                inflation: 1.0,
            },
            alc_selection: AlcSelection::Scaled,
            iterations: 1,
        },
    };
    let table = run_monte_carlo(&mc)?;
    let per_n: Vec<(usize, f64)> = table.rows.iter().map(|r| (r.n, r.mean_mese)).collect();
    if per_n.iter().any(|(_, m)| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::invalid(
            "a cell has zero or undefined mean MESE; slope is not defined",
        ));
    }
    let xs: Vec<f64> = per_n.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = per_n.iter().map(|(_, m)| m.ln()).collect();
    let (slope, intercept) = least_squares_line(&xs, &ys);
    Ok(RateReport {
        slope,
        intercept,
        per_n,
    })
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
