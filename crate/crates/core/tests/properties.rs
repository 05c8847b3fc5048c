use anisosmooth::estimators::{EstimatorSpec, PilotPolicy, RangeBandwidth};
use anisosmooth::{fit, lc_fit, Dataset, KernelFamily, Points};
use proptest::prelude::*;

fn family(i: usize) -> KernelFamily {
    KernelFamily::ALL[i % 3]
}

#[derive(Debug, Clone)]
struct Case {
    xs: Vec<f64>,
    ys: Vec<f64>,
    targets: Vec<f64>,
    h: f64,
    h_range: f64,
    kernel: usize,
    range_kernel: usize,
}

fn case() -> impl Strategy<Value = Case> {
    (5usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(-0.2f64..1.2, 1..20),
            0.03f64..0.5,
            0.1f64..5.0,
            0usize..3,
            0usize..3,
        )
            .prop_map(|(xs, ys, targets, h, h_range, kernel, range_kernel)| Case {
                xs,
                ys,
                targets,
                h,
                h_range,
                kernel,
                range_kernel,
            })
    })
}

impl Case {
    fn data(&self) -> Dataset {
        Dataset::from_1d(&self.xs, &self.ys).unwrap()
    }

    fn targets(&self) -> Points {
        Points::from_1d(&self.targets).unwrap()
    }

    /// LC, ALC with an LC pilot, ALC with a pilot function, under the outcome
    /// map `y ↦ a + b·y` and regressor scale `s`.
    fn specs(&self, a: f64, b: f64, s: f64) -> Vec<EstimatorSpec> {
        let k = family(self.kernel);
        let rk = family(self.range_kernel);
        let oracle = move |x: &[f64]| a + b * (3.0 * (x[0] / s * 5.0).sin());
        vec![
            EstimatorSpec::lc(k, vec![self.h * s]),
            EstimatorSpec::alc(
                k,
                vec![self.h * s],
                RangeBandwidth::Fixed(self.h_range * b),
                PilotPolicy::IsotropicLc {
                    bandwidths: Some(vec![0.7 * self.h * s]),
                    enforce_rate: true,
                },
            )
            .with_range_kernel(rk),
            EstimatorSpec::alc(
                k,
                vec![self.h * s],
                RangeBandwidth::Fixed(self.h_range * b),
                PilotPolicy::oracle(oracle),
            )
            .with_range_kernel(rk),
        ]
    }
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn shift_equivariance(c in case(), shift in -50.0f64..50.0) {
        let data = c.data();
        let shifted = data.with_y(c.ys.iter().map(|y| y + shift).collect()).unwrap();
        for (s0, s1) in c.specs(0.0, 1.0, 1.0).iter().zip(c.specs(shift, 1.0, 1.0).iter()) {
            let base = fit(&data, &c.targets(), s0).unwrap();
            let moved = fit(&shifted, &c.targets(), s1).unwrap();
            for (u, v) in base.estimates().iter().zip(moved.estimates()) {
                prop_assert!(close(u + shift, *v), "{u} + {shift} vs {v}");
            }
        }
    }

    #[test]
    fn scale_equivariance(c in case(), s in 0.1f64..10.0, b in 0.1f64..10.0) {
        let data = c.data();
        let xs: Vec<f64> = c.xs.iter().map(|x| x * s).collect();
        let ys: Vec<f64> = c.ys.iter().map(|y| y * b).collect();
        let scaled = Dataset::from_1d(&xs, &ys).unwrap();
        let targets: Vec<f64> = c.targets.iter().map(|t| t * s).collect();
        let targets = Points::from_1d(&targets).unwrap();
        for (s0, s1) in c.specs(0.0, 1.0, 1.0).iter().zip(c.specs(0.0, b, s).iter()) {
            let base = fit(&data, &c.targets(), s0).unwrap();
            let moved = fit(&scaled, &targets, s1).unwrap();
            for (u, v) in base.estimates().iter().zip(moved.estimates()) {
                prop_assert!(close(u * b, *v), "{u} · {b} vs {v}");
            }
        }
    }

    #[test]
    fn estimates_stay_within_the_outcome_range(c in case()) {
        let data = c.data();
        let (lo, hi) = data.y_bounds();
        for spec in c.specs(0.0, 1.0, 1.0) {
            let f = fit(&data, &c.targets(), &spec).unwrap();
            for v in f.estimates().iter().filter(|v| !v.is_nan()) {
                prop_assert!(*v >= lo && *v <= hi, "{v} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn wide_gaussian_range_kernel_reduces_to_lc(c in case()) {
        let data = c.data();
        let k = family(c.kernel);
        let spec = EstimatorSpec::alc(
            k,
            vec![c.h],
            RangeBandwidth::Fixed(1e9),
            PilotPolicy::IsotropicLc { bandwidths: Some(vec![c.h]), enforce_rate: false },
        )
        .with_range_kernel(KernelFamily::Gaussian);
        let alc = fit(&data, &c.targets(), &spec).unwrap();
        let lc = lc_fit(&data, &c.targets(), k, &[c.h]).unwrap();
        for (u, v) in alc.estimates().iter().zip(lc.estimates()) {
            prop_assert!((u.is_nan() && v.is_nan()) || (u - v).abs() <= 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn constant_outcomes_are_reproduced(c in case(), level in -20.0f64..20.0) {
        let data = c.data().with_y(vec![level; c.xs.len()]).unwrap();
        for spec in c.specs(level, 1.0, 1.0) {
            let f = fit(&data, &c.targets(), &spec).unwrap();
            for v in f.estimates().iter().filter(|v| !v.is_nan()) {
                prop_assert_eq!(*v, level);
            }
        }
    }
}
