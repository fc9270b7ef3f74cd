//! Small numerical helpers shared by the estimators and the test oracles.

/// Neumaier-compensated accumulator.
///
/// Sums of ~10⁷ terms stay reproducible to well below 1e-12 relative,
/// independent of the order in which terms arrive.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(mut self, other: CompensatedSum) -> Self {
        self.add(other.sum);
        self.add(other.comp);
        self
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Mean and population (1/n) variance, two-pass.
pub fn mean_var_population(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = sum(values.iter().copied()) / n;
    let var = sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
    (mean, var)
}

/// Mean and unbiased (1/(n-1)) sample variance, two-pass.
pub fn mean_var_sample(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = sum(values.iter().copied()) / n;
    let var = sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, var)
}

/// Sample moments with the standard errors of the mean and of the variance.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Moments {
        let n = values.len();
        let nf = n as f64;
        let (mean, variance) = mean_var_sample(values);
        let m4 = sum(values.iter().map(|v| (v - mean).powi(4))) / nf;
        Moments {
            n,
            mean,
            variance,
            se_mean: (variance / nf).sqrt(),
            se_variance: ((m4 - variance * variance).max(0.0) / nf).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut values = vec![1e16, 1.0, -1e16];
        values.extend(std::iter::repeat_n(0.1, 10));
        assert!((sum(values.iter().copied()) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn order_insensitive() {
        let values: Vec<f64> = (0..100_000)
            .map(|i| ((i * 7919) % 1000) as f64 * 1.1e-3)
            .collect();
        let mut rev = values.clone();
        rev.reverse();
        let a = sum(values.iter().copied());
        let b = sum(rev.iter().copied());
        assert!(((a - b) / a).abs() < 1e-15);
    }

    #[test]
    fn moments_small() {
        let (m, v) = mean_var_population(&[0.0, 2.0]);
        assert_eq!((m, v), (1.0, 1.0));
        let (m, v) = mean_var_sample(&[0.04, 0.06]);
        assert!((m - 0.05).abs() < 1e-15);
        assert!((v - 2e-4).abs() < 1e-15);
    }
}
