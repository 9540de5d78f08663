//! Special functions and small statistics helpers.

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

// Poisson terms below this fraction of the peak term are dropped.
const POISSON_CUTOFF: f64 = 1e-17;

/// Normalised Poisson(lambda) probabilities over the window of non-negligible
/// mass, starting at `lo`.
struct PoissonWindow {
    lo: usize,
    pmf: Vec<f64>,
}

impl PoissonWindow {
    fn new(lambda: f64) -> Self {
        if lambda <= 0.0 {
            return Self { lo: 0, pmf: vec![1.0] };
        }
        // Terms relative to the one at the mode; the ratio recurrences are
        // monotone on each side of it, so there is no underflow to guard.
        let mode = lambda.floor() as usize;
        let mut left = Vec::new();
        let (mut k, mut v) = (mode, 1.0f64);
        while k > 0 {
            v *= k as f64 / lambda;
            k -= 1;
            if v < POISSON_CUTOFF {
                k += 1;
                break;
            }
            left.push(v);
        }
        let lo = k;
        let mut pmf: Vec<f64> = left.into_iter().rev().collect();
        pmf.push(1.0);
        let (mut k, mut v) = (mode, 1.0f64);
        loop {
            v *= lambda / (k + 1) as f64;
            k += 1;
            if v < POISSON_CUTOFF {
                break;
            }
            pmf.push(v);
        }
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= total);
        Self { lo, pmf }
    }

    fn hi(&self) -> usize {
        self.lo + self.pmf.len()
    }
}

/// First-order Marcum Q-function `Q_1(a, b)`.
///
/// Uses the Poisson-mixture series
/// `Q_1(a, b) = sum_k e^{-a^2/2} (a^2/2)^k / k! * Q(k + 1, b^2/2)` where the
/// regularised upper incomplete gamma `Q(k + 1, x)` is the Poisson(x) CDF
/// at `k`. Equivalently `Q_1 = P(N_b <= N_a)` for independent Poisson
/// variables with means `b^2/2` and `a^2/2`. Both sums are truncated where
/// the Poisson weights fall below `1e-17` of their peak.
///
/// Negative or non-finite inputs yield NaN.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return f64::NAN;
    }
    if b == 0.0 {
        return 1.0;
    }
    let pa = PoissonWindow::new(0.5 * a * a);
    let pb = PoissonWindow::new(0.5 * b * b);

    // CDF of N_b on its window.
    let mut cdf = Vec::with_capacity(pb.pmf.len());
    let mut acc = 0.0;
    for p in &pb.pmf {
        acc += p;
        cdf.push(acc);
    }
    let cdf_at = |k: usize| -> f64 {
        if k < pb.lo {
            0.0
        } else if k >= pb.hi() {
            1.0
        } else {
            cdf[k - pb.lo]
        }
    };

    let q: f64 = pa.pmf.iter().enumerate().map(|(i, p)| p * cdf_at(pa.lo + i)).sum();
    q.clamp(0.0, 1.0)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}
