//! Empirical distribution tools.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Standard Gumbel CDF `exp(-e^{-z})`.
pub fn gumbel_cdf(z: f64) -> f64 {
    libm::exp(-libm::exp(-z))
}

/// Sorted sample.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ecdf {
    values: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("sample", "empty sample"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::usage("sample", "NaN in sample"));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(Ecdf { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of the sample `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Linear-interpolation quantile, `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = libm::floor(h) as usize;
        let hi = (lo + 1).min(n - 1);
        self.values[lo] + (h - lo as f64) * (self.values[hi] - self.values[lo])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }
}

/// `sup_x |F_n(x) - F(x)|` for a continuous `F`.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &Ecdf, cdf: F) -> f64 {
    let n = sample.len() as f64;
    sample
        .values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).abs().max((f - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &Ecdf, b: &Ecdf) -> f64 {
    let (x, y) = (a.values(), b.values());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        worst = worst.max((i as f64 / n - j as f64 / m).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Purpose, StreamKey};
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn gumbel_values() {
        assert_abs_diff_eq!(gumbel_cdf(0.0), libm::exp(-1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(gumbel_cdf(-libm::log(libm::log(2.0))), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(-libm::log(libm::log(2.0)), 0.366513, epsilon = 1e-6);
        assert_eq!(gumbel_cdf(50.0), 1.0);
        assert_eq!(gumbel_cdf(-50.0), 0.0);
    }

    #[test]
    fn singleton_at_median() {
        let e = Ecdf::new(vec![-libm::log(libm::log(2.0))]).unwrap();
        assert_abs_diff_eq!(ks_distance(&e, gumbel_cdf), 0.5, epsilon = 1e-12);
        assert!(Ecdf::new(vec![]).is_err());
    }

    fn gumbel_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = StreamKey::new(seed, Purpose::Test, 0).rng();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>();
                -libm::log(-libm::log(u.max(1e-300)))
            })
            .collect()
    }

    #[test]
    fn own_sample_small_distance() {
        let e = Ecdf::new(gumbel_sample(10_000, 1)).unwrap();
        assert!(ks_distance(&e, gumbel_cdf) < 0.02);
    }

    #[test]
    fn shifted_sample_gross_mismatch() {
        let e = Ecdf::new(gumbel_sample(10_000, 2).into_iter().map(|x| x + 10.0).collect()).unwrap();
        assert!(ks_distance(&e, gumbel_cdf) > 0.9);
    }

    #[test]
    fn ecdf_and_quantiles() {
        let e = Ecdf::new(vec![3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(e.eval(2.0), 0.5);
        assert_eq!(e.eval(0.0), 0.0);
        assert_eq!(e.quantile(0.0), 1.0);
        assert_eq!(e.quantile(1.0), 4.0);
        assert_eq!(e.quantile(0.5), 2.5);
    }

    #[test]
    fn two_sample() {
        let a = Ecdf::new(vec![1.0, 2.0, 3.0]).unwrap();
        let b = Ecdf::new(vec![4.0, 5.0]).unwrap();
        assert_eq!(ks_two_sample(&a, &b), 1.0);
        assert_eq!(ks_two_sample(&a, &a), 0.0);
    }

    proptest! {
        #[test]
        fn ks_in_unit_interval(v in proptest::collection::vec(-20.0f64..20.0, 1..50)) {
            let e = Ecdf::new(v).unwrap();
            let k = ks_distance(&e, gumbel_cdf);
            prop_assert!((0.0..=1.0).contains(&k));
        }

        #[test]
        fn ks_invariant_under_monotone_map(v in proptest::collection::vec(-5.0f64..5.0, 1..50)) {
            let e = Ecdf::new(v.clone()).unwrap();
            let k = ks_distance(&e, gumbel_cdf);
            // x ↦ e^x applied to the sample, with the cdf pulled back.
            let g = Ecdf::new(v.iter().map(|x| libm::exp(*x)).collect()).unwrap();
            let kg = ks_distance(&g, |y| gumbel_cdf(libm::log(y)));
            prop_assert!((k - kg).abs() < 1e-12);
        }
    }
}
