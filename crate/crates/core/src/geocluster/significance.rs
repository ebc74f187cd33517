use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Result of Welch's unequal-variance two-sample t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchTest {
    pub n1: usize,
    pub n2: usize,
    pub mean1: f64,
    pub mean2: f64,
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

impl WelchTest {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t-test. `None` when either sample has fewer than two values.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (m1, v1) = mean_var(a);
    let (m2, v2) = mean_var(b);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let se2 = v1 / n1 + v2 / n2;
    let (t, df, p) = if se2 == 0.0 {
        // both samples constant: identical means are indistinguishable,
        // different means are separated with certainty
        if m1 == m2 {
            (0.0, n1 + n2 - 2.0, 1.0)
        } else {
            (f64::INFINITY.copysign(m1 - m2), n1 + n2 - 2.0, 0.0)
        }
    } else {
        let t = (m1 - m2) / se2.sqrt();
        let df = se2 * se2 / ((v1 / n1).powi(2) / (n1 - 1.0) + (v2 / n2).powi(2) / (n2 - 1.0));
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
        (t, df, p)
    };
    Some(WelchTest {
        n1: a.len(),
        n2: b.len(),
        mean1: m1,
        mean2: m2,
        t,
        df,
        p_value: p,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    #[test]
    fn reference_value() {
        // a = [1..5], b = [2,4,6,8,10]: t = -1.8974, df = 5.8824,
        // two-sided p ≈ 0.1075 (standard Welch arithmetic)
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
        assert!((r.t + 1.897_366_596).abs() < 1e-6);
        assert!((r.df - 5.882_352_941).abs() < 1e-6);
        assert!((r.p_value - 0.1075).abs() < 1e-3, "{}", r.p_value);
    }

    #[test]
    fn too_few_samples() {
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn constant_samples() {
        assert_eq!(welch_t_test(&[1.0, 1.0], &[1.0, 1.0]).unwrap().p_value, 1.0);
        assert_eq!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]).unwrap().p_value, 0.0);
    }

    #[test]
    fn separated_blocks_reject() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let intra = Normal::new(0.8, 0.01).unwrap();
        let inter = Normal::new(0.2, 0.01).unwrap();
        let a: Vec<f64> = (0..10).map(|_| intra.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10).map(|_| inter.sample(&mut rng)).collect();
        assert!(welch_t_test(&a, &b).unwrap().rejects_at(0.01));
    }

    #[test]
    fn null_rejection_rate_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2013);
        let dist = Normal::new(0.5, 0.1).unwrap();
        let reps = 1000;
        let rejected = (0..reps)
            .filter(|_| {
                let a: Vec<f64> = (0..50).map(|_| dist.sample(&mut rng)).collect();
                let b: Vec<f64> = (0..50).map(|_| dist.sample(&mut rng)).collect();
                welch_t_test(&a, &b).unwrap().rejects_at(0.01)
            })
            .count();
        let rate = rejected as f64 / reps as f64;
        assert!(rate <= 0.02, "null rejection rate {rate}");
    }
}
