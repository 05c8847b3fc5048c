//! Data-generating processes and simulated datasets.
//!
//! One-dimensional designs are `X_i = 3(i−1)/(n−1)`, i = 1..n, on `[0, 3]`.
//! The two-dimensional fire process is a disc of burning pixels growing
//! linearly in time on an 80×80 pixel grid.
//!
//! Noise is drawn from a ChaCha8 stream seeded through SplitMix64 finalisation
//! of the run's identifiers; normal variates use the ziggurat sampler from
//! `rand_distr::StandardNormal`. Both are platform independent, so a seed
//! reproduces the same data everywhere.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{Dataset, Points};
use crate::error::{Error, Result};

pub const DOMAIN_1D: (f64, f64) = (0.0, 3.0);
pub const DEFAULT_JUMP: f64 = 3.0;

/// Disc-shaped fire front: `inside` within radius `r(t)` of `origin`, `outside` elsewhere,
/// with `r(t) = r_max · t / frames`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireSpec {
    pub width: usize,
    pub height: usize,
    pub origin: [f64; 2],
    pub r_max: f64,
    pub frames: u32,
    pub inside: f64,
    pub outside: f64,
}

impl Default for FireSpec {
    fn default() -> Self {
        FireSpec {
            width: 80,
            height: 80,
            origin: [40.0, 40.0],
            r_max: 40.0,
            frames: 70,
            inside: 80.0,
            outside: 130.0,
        }
    }
}

impl FireSpec {
    /// Noise SD used with the fire process (variance 20).
    pub fn default_sigma() -> f64 {
        20f64.sqrt()
    }

    pub fn radius(&self, frame: u32) -> f64 {
        self.r_max * frame as f64 / self.frames as f64
    }

    pub fn value(&self, frame: u32, x1: f64, x2: f64) -> f64 {
        let r = self.radius(frame);
        let d2 = (x1 - self.origin[0]).powi(2) + (x2 - self.origin[1]).powi(2);
        if d2 < r * r {
            self.inside
        } else {
            self.outside
        }
    }

    /// Signed distance of a pixel centre from the fire front at `frame`.
    pub fn boundary_distance(&self, frame: u32, x1: f64, x2: f64) -> f64 {
        ((x1 - self.origin[0]).powi(2) + (x2 - self.origin[1]).powi(2)).sqrt() - self.radius(frame)
    }

    fn validate(&self, frame: u32) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::invalid("fire grid must be at least 2×2"));
        }
        if self.frames == 0 || frame > self.frames {
            return Err(Error::invalid(format!("frame {frame} outside 0..={}", self.frames)));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::invalid("fire r_max must be positive"));
        }
        Ok(())
    }

    pub fn truth_grid(&self, frame: u32) -> Vec<f64> {
        Points::pixel_grid(self.width, self.height)
            .rows()
            .map(|r| self.value(frame, r[0], r[1]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    /// 1 on [0,1], 7 on (1,2], 3 on (2,3].
    PiecewiseConstant,
    /// 50[(x/3)² − (x/3)³].
    Continuous,
    /// `Continuous` plus `jump` on (1.5, 3].
    ContinuousJump { jump: f64 },
    /// Flat regression function.
    Constant { value: f64 },
    /// One frame of the simulated fire.
    Fire2D { fire: FireSpec, frame: u32 },
}

impl Dgp {
    pub fn dim(&self) -> usize {
        match self {
            Dgp::Fire2D { .. } => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dgp::PiecewiseConstant => "piecewise",
            Dgp::Continuous => "continuous",
            Dgp::ContinuousJump { .. } => "continuous-jump",
            Dgp::Constant { .. } => "constant",
            Dgp::Fire2D { .. } => "fire2d",
        }
    }

    /// Unchecked evaluation for points already known to lie in the domain.
    pub fn value(&self, x: &[f64]) -> f64 {
        let smooth = |x: f64| {
            let u = x / 3.0;
            50.0 * (u * u - u * u * u)
        };
        match *self {
            Dgp::PiecewiseConstant => {
                let x = x[0];
                if x <= 1.0 {
                    1.0
                } else if x <= 2.0 {
                    7.0
                } else {
                    3.0
                }
            }
            Dgp::Continuous => smooth(x[0]),
            Dgp::ContinuousJump { jump } => smooth(x[0]) + if x[0] > 1.5 { jump } else { 0.0 },
            Dgp::Constant { value } => value,
            Dgp::Fire2D { fire, frame } => fire.value(frame, x[0], x[1]),
        }
    }
}

impl fmt::Display for Dgp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dgp::ContinuousJump { jump } => write!(f, "continuous-jump:{jump}"),
            Dgp::Constant { value } => write!(f, "constant:{value}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Dgp {
    type Err = Error;

    /// `piecewise`, `continuous`, `continuous-jump[:J]`, `constant[:c]` or `fire2d`.
    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>, default: f64| -> Result<f64> {
            match a {
                None => Ok(default),
                Some(a) => a
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::invalid(format!("bad DGP parameter '{a}'"))),
            }
        };
        let dgp = match head {
            "piecewise" => Dgp::PiecewiseConstant,
            "continuous" => Dgp::Continuous,
            "continuous-jump" => Dgp::ContinuousJump {
                jump: num(arg, DEFAULT_JUMP)?,
            },
            "constant" => Dgp::Constant { value: num(arg, 0.0)? },
            "fire2d" => Dgp::Fire2D {
                fire: FireSpec::default(),
                frame: 35,
            },
            other => return Err(Error::invalid(format!("unknown DGP '{other}'"))),
        };
        if arg.is_some() && matches!(dgp, Dgp::PiecewiseConstant | Dgp::Continuous | Dgp::Fire2D { .. }) {
            return Err(Error::invalid(format!("DGP '{head}' takes no parameter")));
        }
        Ok(dgp)
    }
}

/// Regression function value with a domain check.
pub fn dgp_eval(dgp: &Dgp, x: &[f64]) -> Result<f64> {
    if x.len() != dgp.dim() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{} expects a finite {}-vector",
            dgp.name(),
            dgp.dim()
        )));
    }
    match dgp {
        Dgp::Fire2D { fire, frame } => {
            fire.validate(*frame)?;
            let inside = |v: f64, len: usize| (0.0..=(len - 1) as f64).contains(&v);
            if !inside(x[0], fire.width) || !inside(x[1], fire.height) {
                return Err(Error::invalid(format!(
                    "({}, {}) lies outside the pixel grid",
                    x[0], x[1]
                )));
            }
        }
        _ => {
            if x[0] < DOMAIN_1D.0 || x[0] > DOMAIN_1D.1 {
                return Err(Error::invalid(format!("x = {} outside [0, 3]", x[0])));
            }
        }
    }
    Ok(dgp.value(x))
}

/// Evenly spaced design on `[0, 3]` including both endpoints.
pub fn design_1d(n: usize) -> Vec<f64> {
    let (a, b) = DOMAIN_1D;
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Parameters of one simulated dataset. `n` is ignored for the fire process,
/// which uses its pixel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpSpec {
    pub dgp: Dgp,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed derived from a base seed and a sequence of stream identifiers.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(base), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn add_noise(truth: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = noise_rng(seed);
    truth
        .iter()
        .map(|g| {
            let z: f64 = StandardNormal.sample(&mut rng);
            g + sigma * z
        })
        .collect()
}

/// Draws `Y_i = g(X_i) + ε_i`, `ε_i ~ N(0, σ²)`.
pub fn simulate_dataset(spec: &DgpSpec) -> Result<Dataset> {
    if !(spec.sigma.is_finite() && spec.sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma must be nonnegative, got {}", spec.sigma)));
    }
    let x = match spec.dgp {
        Dgp::Fire2D { fire, frame } => {
            fire.validate(frame)?;
            Points::pixel_grid(fire.width, fire.height)
        }
        _ => {
            if spec.n < 2 {
                return Err(Error::invalid("simulated datasets need n >= 2"));
            }
            Points::from_1d(&design_1d(spec.n))?
        }
    };
    let truth: Vec<f64> = x.rows().map(|r| spec.dgp.value(r)).collect();
    let y = add_noise(&truth, spec.sigma, spec.seed);
    Dataset::new(x, y)
}

/// Every frame `1..=frames` of a fire simulation; frame `j` uses its own stream.
pub fn simulate_fire_video(fire: &FireSpec, sigma: f64, seed: u64) -> Result<Vec<Dataset>> {
    (1..=fire.frames)
        .map(|frame| {
            simulate_dataset(&DgpSpec {
                dgp: Dgp::Fire2D { fire: *fire, frame },
                n: fire.width * fire.height,
                sigma,
                seed: derive_seed(seed, &[frame as u64]),
            })
        })
        .collect()
}

/// Mean of squared errors over the defined points.
pub fn mese(truth: &[f64], estimates: &[f64], undefined: &[bool]) -> Result<f64> {
    if truth.len() != estimates.len() || truth.len() != undefined.len() {
        return Err(Error::invalid("truth, estimates and mask must have equal lengths"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((g, e), u) in truth.iter().zip(estimates).zip(undefined) {
        if !u {
            sum += (g - e) * (g - e);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::invalid("no defined estimates to score"));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dgp_values() {
        assert_eq!(dgp_eval(&Dgp::PiecewiseConstant, &[1.5]).unwrap(), 7.0);
        assert_eq!(dgp_eval(&Dgp::PiecewiseConstant, &[1.0]).unwrap(), 1.0);
        assert_eq!(dgp_eval(&Dgp::PiecewiseConstant, &[2.0]).unwrap(), 7.0);
        assert_eq!(dgp_eval(&Dgp::PiecewiseConstant, &[2.5]).unwrap(), 3.0);
        assert!((dgp_eval(&Dgp::Continuous, &[1.5]).unwrap() - 6.25).abs() < 1e-12);
        let j = Dgp::ContinuousJump { jump: 3.0 };
        assert!((dgp_eval(&j, &[1.5]).unwrap() - 6.25).abs() < 1e-12);
        assert!((dgp_eval(&j, &[1.5000001]).unwrap() - 9.25).abs() < 1e-5);
        assert!(dgp_eval(&Dgp::Continuous, &[3.5]).is_err());
        assert!(dgp_eval(&Dgp::Continuous, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn fire_values() {
        let fire = FireSpec {
            r_max: 40.0,
            ..FireSpec::default()
        };
        // frame 35 of 70 gives r = 20
        let dgp = Dgp::Fire2D { fire, frame: 35 };
        assert_eq!(fire.radius(35), 20.0);
        assert_eq!(dgp_eval(&dgp, &[40.0, 40.0]).unwrap(), 80.0);
        assert_eq!(dgp_eval(&dgp, &[0.0, 0.0]).unwrap(), 130.0);
        assert!(dgp_eval(&dgp, &[80.0, 0.0]).is_err());
    }

    #[test]
    fn dgp_parsing() {
        assert_eq!("piecewise".parse::<Dgp>().unwrap(), Dgp::PiecewiseConstant);
        assert_eq!(
            "continuous-jump".parse::<Dgp>().unwrap(),
            Dgp::ContinuousJump { jump: DEFAULT_JUMP }
        );
        assert_eq!(
            "continuous-jump:2.5".parse::<Dgp>().unwrap(),
            Dgp::ContinuousJump { jump: 2.5 }
        );
        assert!("piecewise:3".parse::<Dgp>().is_err());
        assert!("sawtooth".parse::<Dgp>().is_err());
        for s in ["piecewise", "continuous", "continuous-jump:3", "constant:1.5"] {
            assert_eq!(s.parse::<Dgp>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn zero_noise_reproduces_truth() {
        let d = simulate_dataset(&DgpSpec {
            dgp: Dgp::Continuous,
            n: 101,
            sigma: 0.0,
            seed: 3,
        })
        .unwrap();
        for (x, y) in d.x().rows().zip(d.y()) {
            assert_eq!(*y, Dgp::Continuous.value(x));
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let spec = DgpSpec {
            dgp: Dgp::PiecewiseConstant,
            n: 400,
            sigma: 0.5,
            seed: 7,
        };
        assert_eq!(simulate_dataset(&spec).unwrap(), simulate_dataset(&spec).unwrap());
        let other = simulate_dataset(&DgpSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(simulate_dataset(&spec).unwrap(), other);
    }

    #[test]
    fn design_spacing() {
        let xs = design_1d(400);
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[399], 3.0);
        for w in xs.windows(2) {
            assert!((w[1] - w[0] - 3.0 / 399.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_moments() {
        let d = simulate_dataset(&DgpSpec {
            dgp: Dgp::Constant { value: 0.0 },
            n: 20_000,
            sigma: 2.0,
            seed: 11,
        })
        .unwrap();
        let n = d.len() as f64;
        let mean = d.y().iter().sum::<f64>() / n;
        let var = d.y().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var - 4.0).abs() < 0.15, "{var}");
    }

    #[test]
    fn fire_video_frames() {
        let fire = FireSpec {
            width: 10,
            height: 8,
            frames: 5,
            origin: [5.0, 4.0],
            r_max: 4.0,
            ..FireSpec::default()
        };
        let frames = simulate_fire_video(&fire, 1.0, 1).unwrap();
        assert_eq!(frames.len(), 5);
        assert!(frames.iter().all(|f| f.len() == 80 && f.dim() == 2));
        assert_ne!(frames[0].y(), frames[1].y());
    }

    #[test]
    fn mese_examples() {
        assert_eq!(mese(&[1.0, 2.0], &[1.0, 2.0], &[false, false]).unwrap(), 0.0);
        assert_eq!(mese(&[0.0, 0.0], &[1.0, 3.0], &[false, false]).unwrap(), 5.0);
        assert_eq!(mese(&[0.0, 0.0], &[1.0, f64::NAN], &[false, true]).unwrap(), 1.0);
        assert!(mese(&[0.0], &[f64::NAN], &[true]).is_err());
        assert!(mese(&[0.0], &[0.0, 1.0], &[false]).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[400, 5]);
        assert_ne!(a, derive_seed(1, &[400, 6]));
        assert_ne!(a, derive_seed(2, &[400, 5]));
        assert_ne!(derive_seed(1, &[400, 5]), derive_seed(1, &[5, 400]));
        assert_eq!(a, derive_seed(1, &[400, 5]));
    }
}
