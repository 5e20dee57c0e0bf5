//! Binomial probabilities with log-space coefficients, so rows stay finite
//! well past the point where `C(n, k)` overflows a double.

/// `ln k!` for `k = 0..=max`.
#[derive(Clone, Debug)]
pub(crate) struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub(crate) fn up_to(max: u32) -> Self {
        let mut table = Vec::with_capacity(max as usize + 1);
        let mut acc = 0.0;
        table.push(acc);
        for i in 1..=max {
            acc += (i as f64).ln();
            table.push(acc);
        }
        LnFactorials(table)
    }

    pub(crate) fn ln_choose(&self, n: u32, k: u32) -> f64 {
        debug_assert!(k <= n);
        let t = &self.0;
        t[n as usize] - t[k as usize] - t[(n - k) as usize]
    }

    /// `P(X = k)` for `X ~ Bin(n, p)`.
    pub(crate) fn pmf(&self, k: u32, n: u32, p: f64) -> f64 {
        if k > n {
            return 0.0;
        }
        // Exact endpoints avoid ln(0).
        if p <= 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if p >= 1.0 {
            return if k == n { 1.0 } else { 0.0 };
        }
        let ln = self.ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
        ln.exp()
    }

    /// The whole row `P(X = 0..=n)`.
    pub(crate) fn row(&self, n: u32, p: f64) -> Vec<f64> {
        (0..=n).map(|k| self.pmf(k, n, p)).collect()
    }

    pub(crate) fn tail(&self, threshold: u32, trials: u32, p: f64) -> f64 {
        if threshold == 0 {
            return 1.0;
        }
        if threshold > trials {
            return 0.0;
        }
        let sum: f64 = (threshold..=trials).map(|x| self.pmf(x, trials, p)).sum();
        sum.min(1.0)
    }
}

pub fn binomial_pmf(k: u32, n: u32, p: f64) -> f64 {
    check_probability(p);
    LnFactorials::up_to(n).pmf(k, n, p)
}

/// `P(X >= threshold)` for `X ~ Bin(trials, p)`: the chance that at least
/// `threshold` of `trials` independent messages get through.
pub fn binomial_tail(threshold: u32, trials: u32, p: f64) -> f64 {
    check_probability(p);
    LnFactorials::up_to(trials).tail(threshold, trials, p)
}

pub(crate) fn check_probability(p: f64) {
    assert!((0.0..=1.0).contains(&p), "probability {p} outside [0,1]");
}
