//! Value parsers and option groups shared by several subcommands.

use std::fmt;
use std::str::FromStr;

use anisosmooth::bandwidth::{BandwidthPlan, DomainMethod, RangeRule, RateExponent};
use anisosmooth::montecarlo::AlcSelection;
use anisosmooth::KernelFamily;
use clap::{Args, ValueEnum};

/// `auto-aicc`, `auto-lscv`, or explicit comma-separated bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthArg {
    AutoAicc,
    AutoLscv,
    Values(Vec<f64>),
}

impl FromStr for BandwidthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto-aicc" => Ok(BandwidthArg::AutoAicc),
            "auto-lscv" => Ok(BandwidthArg::AutoLscv),
            _ => {
                let v = parse_list::<f64>(s)?;
                if v.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                    return Err(format!("bandwidths must be positive: '{s}'"));
                }
                Ok(BandwidthArg::Values(v))
            }
        }
    }
}

impl fmt::Display for BandwidthArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthArg::AutoAicc => f.write_str("auto-aicc"),
            BandwidthArg::AutoLscv => f.write_str("auto-lscv"),
            BandwidthArg::Values(v) => f.write_str(&join(v)),
        }
    }
}

/// `auto`, `auto:<multiplier>`, or a fixed range bandwidth. Plain `auto` uses
/// the command's default multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeArg {
    Auto(Option<f64>),
    Fixed(f64),
}

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let positive = |v: &str| -> Result<f64, String> {
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
                _ => Err(format!("expected a positive number, got '{v}'")),
            }
        };
        if s == "auto" {
            Ok(RangeArg::Auto(None))
        } else if let Some(m) = s.strip_prefix("auto:") {
            Ok(RangeArg::Auto(Some(positive(m)?)))
        } else {
            Ok(RangeArg::Fixed(positive(s)?))
        }
    }
}

impl fmt::Display for RangeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeArg::Auto(None) => f.write_str("auto"),
            RangeArg::Auto(Some(m)) => write!(f, "auto:{m}"),
            RangeArg::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl RangeArg {
    pub fn rule(self, default_multiplier: f64) -> RangeRule {
        match self {
            RangeArg::Auto(m) => RangeRule::Multiplier(m.unwrap_or(default_multiplier)),
            RangeArg::Fixed(v) => RangeRule::Fixed(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    Uniform,
    Gaussian,
    Epanechnikov,
}

impl From<Kernel> for KernelFamily {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Uniform => KernelFamily::Uniform,
            Kernel::Gaussian => KernelFamily::Gaussian,
            Kernel::Epanechnikov => KernelFamily::Epanechnikov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Exponent {
    Anisotropic,
    Isotropic,
}

impl From<Exponent> for RateExponent {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Anisotropic => RateExponent::Anisotropic,
            Exponent::Isotropic => RateExponent::Isotropic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    Selected,
    Scaled,
}

impl From<Selection> for AlcSelection {
    fn from(s: Selection) -> Self {
        match s {
            Selection::Selected => AlcSelection::Selected,
            Selection::Scaled => AlcSelection::Scaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fill {
    Nearest,
}

/// Kernel and bandwidth flags.
#[derive(Debug, Clone, Args)]
pub struct SmoothingOpts {
    /// Domain kernel.
    #[arg(long, value_enum, default_value_t = Kernel::Uniform)]
    pub kernel: Kernel,

    /// Range kernel (anisotropic fits).
    #[arg(long, value_enum, default_value_t = Kernel::Uniform)]
    pub range_kernel: Kernel,

    /// Domain bandwidth: auto-aicc, auto-lscv, or comma-separated values (one per dimension, or one for all).
    #[arg(long, default_value = "auto-aicc")]
    pub bandwidth: BandwidthArg,

    /// Use h = c · n^(-exponent) instead of --bandwidth.
    #[arg(long, value_name = "C")]
    pub rate_rule: Option<f64>,

    /// Exponent of the rate rule: 1/(q+2) (anisotropic) or 1/(q+4) (isotropic).
    #[arg(long, value_enum, default_value_t = Exponent::Anisotropic)]
    pub rate_exponent: Exponent,

    /// Range bandwidth: auto[:multiplier] (multiplier × SD of the pilot) or a value.
    #[arg(long, default_value = "auto")]
    pub range_bandwidth: RangeArg,

    /// Anisotropic domain bandwidth = selected bandwidth × this factor (scaled selection).
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_inflation: f64,

    /// Number of anisotropic passes.
    #[arg(long, default_value_t = 1)]
    pub iterations: usize,
}

impl SmoothingOpts {
    /// Bandwidth plan; `dim` broadcasts a single explicit bandwidth.
    pub fn plan(&self, dim: usize, default_multiplier: f64) -> Result<BandwidthPlan, String> {
        if !(self.bandwidth_inflation.is_finite() && self.bandwidth_inflation >= 1.0) {
            return Err(format!(
                "--bandwidth-inflation must be at least 1, got {}",
                self.bandwidth_inflation
            ));
        }
        let method = match (self.rate_rule, &self.bandwidth) {
            (Some(c), BandwidthArg::AutoAicc) => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(format!("--rate-rule must be positive, got {c}"));
                }
                DomainMethod::RateRule {
                    c,
                    exponent: self.rate_exponent.into(),
                }
            }
            (Some(_), _) => return Err("--rate-rule cannot be combined with --bandwidth".into()),
            (None, BandwidthArg::AutoAicc) => DomainMethod::Aicc,
            (None, BandwidthArg::AutoLscv) => DomainMethod::Lscv,
            (None, BandwidthArg::Values(v)) => DomainMethod::Fixed(broadcast(v, dim)?),
        };
        Ok(BandwidthPlan {
            method,
            range_rule: self.range_bandwidth.rule(default_multiplier),
            grid: None,
            inflation: self.bandwidth_inflation,
        })
    }

    pub fn record(&self, out: &mut Vec<(String, String)>) {
        push(out, "kernel", name(self.kernel));
        push(out, "range-kernel", name(self.range_kernel));
        if let Some(c) = self.rate_rule {
            push(out, "rate-rule", c);
            push(out, "rate-exponent", name(self.rate_exponent));
        } else {
            push(out, "bandwidth", &self.bandwidth);
        }
        push(out, "range-bandwidth", self.range_bandwidth);
        push(out, "bandwidth-inflation", self.bandwidth_inflation);
        push(out, "iterations", self.iterations);
    }
}

/// Comma-separated list flag.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(List)
    }
}

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0))
    }
}

pub fn broadcast(v: &[f64], dim: usize) -> Result<Vec<f64>, String> {
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v.to_vec()),
        n => Err(format!("{n} bandwidths given for {dim}-dimensional regressors")),
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    let v: Result<Vec<T>, _> = s.split(',').map(|p| p.trim().parse::<T>()).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("expected a comma-separated list, got '{s}'")),
    }
}

pub fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}

pub fn push(out: &mut Vec<(String, String)>, key: &str, value: impl fmt::Display) {
    out.push((key.to_string(), value.to_string()));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_values() {
        assert_eq!("auto-aicc".parse::<BandwidthArg>().unwrap(), BandwidthArg::AutoAicc);
        assert_eq!(
            "0.1,0.2".parse::<BandwidthArg>().unwrap(),
            BandwidthArg::Values(vec![0.1, 0.2])
        );
        assert!("0".parse::<BandwidthArg>().is_err());
        assert!("auto".parse::<BandwidthArg>().is_err());
    }

    #[test]
    fn range_values() {
        assert_eq!("auto".parse::<RangeArg>().unwrap(), RangeArg::Auto(None));
        assert_eq!("auto:5".parse::<RangeArg>().unwrap(), RangeArg::Auto(Some(5.0)));
        assert_eq!(
            "auto".parse::<RangeArg>().unwrap().rule(0.5),
            RangeRule::Multiplier(0.5)
        );
        assert_eq!("1e9".parse::<RangeArg>().unwrap(), RangeArg::Fixed(1e9));
        assert!("auto:-1".parse::<RangeArg>().is_err());
        for s in ["auto", "auto:0.25", "3"] {
            assert_eq!(s.parse::<RangeArg>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("400, 800").unwrap(), vec![400, 800]);
        assert_eq!("0.1,2".parse::<List<f64>>().unwrap().to_string(), "0.1,2");
        assert!(parse_list::<usize>("400,x").is_err());
        assert_eq!(broadcast(&[2.0], 2).unwrap(), vec![2.0, 2.0]);
        assert!(broadcast(&[1.0, 2.0, 3.0], 2).is_err());
    }
}
