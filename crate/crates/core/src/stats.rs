//! Small statistical helpers: Wilson intervals, least squares, quantiles,
//! and a two-sample Kolmogorov-Smirnov statistic.

use crate::scalar::Scalar;

/// Wilson score interval for a binomial proportion.
///
/// Returns `(lo, hi)` at confidence `z` standard normal quantiles
/// (z = 1.96 for 95%).
pub fn wilson_interval<S: Scalar>(hits: usize, total: usize, z: S) -> (S, S) {
    assert!(total > 0, "wilson interval needs total > 0");
    let n = S::of_usize(total);
    let p = S::of_usize(hits) / n;
    let z2 = z * z;
    let denom = S::one() + z2 / n;
    let center = (p + z2 / (S::of(2.0) * n)) / denom;
    let half = z * (p * (S::one() - p) / n + z2 / (S::of(4.0) * n * n)).sqrt() / denom;
    ((center - half).max(S::zero()), (center + half).min(S::one()))
}

/// Ordinary least squares y = a + b x. Returns `(intercept, slope)`.
pub fn linear_fit<S: Scalar>(xs: &[S], ys: &[S]) -> (S, S) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = S::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<S>() / n;
    let my = ys.iter().copied().sum::<S>() / n;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Quantile by linear interpolation on a sorted copy; `q` in [0, 1].
pub fn quantile<S: Scalar>(values: &[S], q: S) -> S {
    assert!(!values.is_empty());
    let mut v: Vec<S> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in quantile input"));
    let pos = q * S::of_usize(v.len() - 1);
    let lo = pos.floor().as_f64() as usize;
    let hi = pos.ceil().as_f64() as usize;
    let frac = pos - pos.floor();
    v[lo] + (v[hi] - v[lo]) * frac
}

pub fn median<S: Scalar>(values: &[S]) -> S {
    quantile(values, S::of(0.5))
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
pub fn ks_two_sample<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs: Vec<S> = a.to_vec();
    let mut ys: Vec<S> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("no NaN"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("no NaN"));
    let (na, nb) = (S::of_usize(xs.len()), S::of_usize(ys.len()));
    let mut i = 0;
    let mut j = 0;
    let mut d = S::zero();
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        let diff = (S::of_usize(i) / na - S::of_usize(j) / nb).abs();
        d = d.max(diff);
    }
    d
}

/// Critical value of the two-sample KS statistic at significance `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = ((2.0 / alpha).ln() / 2.0).sqrt();
    c * (((n + m) as f64) / ((n * m) as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.25 * x).collect();
        let (a, b) = linear_fit(&xs, &ys);
        assert_relative_eq!(a, 3.0, epsilon = 1e-12);
        assert_relative_eq!(b, -0.25, epsilon = 1e-12);
    }

    #[test]
    fn wilson_contains_p_for_fair_counts() {
        let (lo, hi) = wilson_interval(500, 1000, 1.96_f64);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(hi - lo < 0.07);
    }

    #[test]
    fn ks_detects_shift() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let b: Vec<f64> = (0..1000).map(|i| 0.3 + i as f64 / 1000.0).collect();
        assert!(ks_two_sample(&a, &b) > 0.25);
        let d_same = ks_two_sample(&a, &a);
        assert!(d_same < 1e-12);
    }
}
