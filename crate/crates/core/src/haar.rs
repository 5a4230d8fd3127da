//! Random phase-space points and the cusp-tail estimator.
//!
//! For n = 2 the sampler is exact: Iwasawa coordinates are drawn from the
//! hyperbolic area measure y^-2 dx dy on the standard fundamental domain
//! (Re uniform, Im by inverse CDF, rejection below the unit circle) and the
//! frame angle uniformly, which together realize the normalized Haar
//! measure on SL(2,R)/SL(2,Z). For n = 3 the sampler is generic but not
//! Haar: normalized Gaussian matrices, good enough for almost-everywhere
//! statements.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::CoreError;
use crate::group::GroupElement;
use crate::lattice::LatticePoint;
use crate::matrix::SquareMatrix;
use crate::rng::{rng_from_seed, Rng};
use crate::scalar::Scalar;
use crate::stats::{linear_fit, wilson_interval};

/// Draw a Haar-distributed point of SL(2,R)/SL(2,Z) from an explicit RNG.
pub fn sample_modular_with<S: Scalar>(rng: &mut Rng) -> LatticePoint<S> {
    let sqrt3_half = 3.0_f64.sqrt() / 2.0;
    let (x, y) = loop {
        let x: f64 = rng.gen::<f64>() - 0.5;
        // inverse CDF of y^-2 restricted to [sqrt(3)/2, inf)
        let u: f64 = rng.gen();
        let y = sqrt3_half / (1.0 - u);
        if x * x + y * y >= 1.0 {
            break (x, y);
        }
    };
    let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    point_from_iwasawa(S::of(x), S::of(y), S::of(theta))
}

/// Haar sample, deterministic in the seed.
pub fn sample_modular<S: Scalar>(seed: u64) -> LatticePoint<S> {
    sample_modular_with(&mut rng_from_seed(seed))
}

/// The representative with projection x + iy and frame angle theta.
pub fn point_from_iwasawa<S: Scalar>(x: S, y: S, theta: S) -> LatticePoint<S> {
    let sq = y.sqrt();
    let base = SquareMatrix::from_rows(&[
        vec![sq, S::zero()],
        vec![x / sq, S::one() / sq],
    ]);
    let rot = GroupElement::rotation2(theta);
    let g = rot.mul(&GroupElement::project_unimodular(base).expect("det 1 by construction"));
    LatticePoint::new(g)
}

/// Generic (not Haar) point of SL(3,R)/SL(3,Z): independent standard-normal
/// entries rescaled to determinant 1.
pub fn sample_generic<S: Scalar>(seed: u64, n: usize) -> Result<LatticePoint<S>, CoreError> {
    if n != 3 {
        return Err(CoreError::InvalidInput("sample_generic is for n = 3".into()));
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let m = SquareMatrix::from_fn(3, |_, _| S::of(rng.sample::<f64, _>(StandardNormal)));
        if m.det().abs() > S::of(1e-6) {
            return Ok(LatticePoint::new(GroupElement::project_unimodular(m)?));
        }
    }
}

/// Empirical cusp-tail measure and its fitted exponent.
#[derive(Debug, Clone)]
pub struct TailEstimate<S> {
    pub thresholds: Vec<S>,
    pub hits: Vec<usize>,
    pub total: usize,
    pub empirical_prob: Vec<S>,
    /// Wilson 95% interval per threshold.
    pub ci: Vec<(S, S)>,
    /// Minus the fitted slope of log prob against the threshold.
    pub fitted_k: S,
    /// Wilson half-width at the largest fitted threshold.
    pub ci_halfwidth: S,
}

/// Estimate mu(D > t) over Haar samples for each threshold and fit the tail
/// exponent. Thresholds must be increasing and lie in [2, 12]; the largest
/// one needs at least 100 hits or the estimate is refused.
pub fn tail_measure<S: Scalar>(
    samples: usize,
    thresholds: &[S],
    seed: u64,
) -> Result<TailEstimate<S>, CoreError> {
    if samples < 100_000 {
        return Err(CoreError::InvalidInput("tail_measure needs >= 1e5 samples".into()));
    }
    if thresholds.is_empty() {
        return Err(CoreError::InvalidInput("need at least one threshold".into()));
    }
    for w in thresholds.windows(2) {
        if !(w[0] < w[1]) {
            return Err(CoreError::InvalidInput("thresholds must be increasing".into()));
        }
    }
    if thresholds[0] < S::of(2.0) || *thresholds.last().expect("non-empty") > S::of(12.0) {
        return Err(CoreError::InvalidInput("thresholds must lie in [2, 12]".into()));
    }
    let mut hits = vec![0usize; thresholds.len()];
    for i in 0..samples {
        let x: LatticePoint<S> = sample_modular(crate::rng::derive_seed(seed, i as u64));
        let d = x.cusp_depth()?;
        for (k, &t) in thresholds.iter().enumerate() {
            if d > t {
                hits[k] += 1;
            }
        }
    }
    summarize_tail(thresholds, &hits, samples)
}

/// Assemble a `TailEstimate` from raw hit counts.
pub fn summarize_tail<S: Scalar>(
    thresholds: &[S],
    hits: &[usize],
    total: usize,
) -> Result<TailEstimate<S>, CoreError> {
    let last_hits = *hits.last().expect("non-empty");
    if last_hits < 100 {
        return Err(CoreError::InsufficientHits { hits: last_hits, required: 100 });
    }
    let z = S::of(1.96);
    let probs: Vec<S> = hits.iter().map(|&h| S::of_usize(h) / S::of_usize(total)).collect();
    let ci: Vec<(S, S)> = hits.iter().map(|&h| wilson_interval(h, total, z)).collect();
    // fit over thresholds with at least 100 hits (all of them, given the
    // guard above, but kept for partial data paths)
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut last_fit_idx = 0;
    for (k, (&h, &t)) in hits.iter().zip(thresholds).enumerate() {
        if h >= 100 {
            xs.push(t);
            ys.push(probs[k].ln());
            last_fit_idx = k;
        }
    }
    let (_, slope) = linear_fit(&xs, &ys);
    let halfwidth = {
        let (lo, hi) = ci[last_fit_idx];
        (hi - lo) * S::of(0.5)
    };
    Ok(TailEstimate {
        thresholds: thresholds.to_vec(),
        hits: hits.to_vec(),
        total,
        empirical_prob: probs,
        ci,
        fitted_k: -slope,
        ci_halfwidth: halfwidth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{exp_one_param, OneParamSubgroup};
    use crate::stats::{ks_critical, ks_two_sample};

    #[test]
    fn modular_sampler_is_deterministic() {
        let a: LatticePoint<f64> = sample_modular(7);
        let b: LatticePoint<f64> = sample_modular(7);
        assert_eq!(a.rep().matrix(), b.rep().matrix());
        let c: LatticePoint<f64> = sample_modular(8);
        assert_ne!(a.rep().matrix(), c.rep().matrix());
    }

    #[test]
    fn cusp_area_above_two() {
        // mu(Im z > 2) = (3/pi) * 1/2
        let n = 200_000;
        let mut count = 0usize;
        for i in 0..n {
            let x: LatticePoint<f64> = sample_modular(crate::rng::derive_seed(11, i as u64));
            let z = x.reduce().unwrap().project_h2();
            // the reduced representative of a deep point has small Im; use
            // the fundamental-domain representative instead
            let zf = z.reduce_to_fundamental_domain();
            if zf.im > 2.0 {
                count += 1;
            }
        }
        let p = count as f64 / n as f64;
        let expect = 3.0 / std::f64::consts::PI / 2.0;
        let sigma = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (p - expect).abs() < 3.0 * sigma + 1e-9,
            "p = {p}, expected {expect} +- {sigma}"
        );
    }

    #[test]
    fn minkowski_bound_holds() {
        let bound = (2.0 / 3.0_f64.sqrt()).sqrt() + 1e-9;
        for i in 0..20_000 {
            let x: LatticePoint<f64> = sample_modular(crate::rng::derive_seed(5, i));
            let (_, a1) = x.shortest_vector().unwrap();
            assert!(a1 <= bound, "alpha1 = {a1} exceeds Minkowski bound");
        }
    }

    #[test]
    fn generic_3d_sampler_properties() {
        let x: LatticePoint<f64> = sample_generic(3, 3).unwrap();
        assert!((x.rep().det() - 1.0).abs() < 1e-9);
        let y: LatticePoint<f64> = sample_generic(4, 3).unwrap();
        assert_ne!(x.rep().matrix(), y.rep().matrix());
        // median depth over a small ensemble is finite and modest
        let mut depths: Vec<f64> = (0..2000)
            .map(|i| {
                sample_generic::<f64>(crate::rng::derive_seed(9, i), 3)
                    .unwrap()
                    .cusp_depth()
                    .unwrap()
            })
            .collect();
        depths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = depths[depths.len() / 2];
        assert!(median < 6.0, "median depth {median}");
    }

    #[test]
    fn tail_exponent_near_one() {
        let thresholds: Vec<f64> = vec![3.0, 4.0, 5.0, 6.0];
        let est = tail_measure(150_000, &thresholds, 42).unwrap();
        assert!((est.fitted_k - 1.0).abs() < 0.15, "k = {}", est.fitted_k);
        for w in est.empirical_prob.windows(2) {
            assert!(w[0] >= w[1], "tail probabilities must be nonincreasing");
        }
    }

    #[test]
    fn haar_invariance_under_horocycle() {
        // D(h_0.37 x) must match D(x) in distribution
        let n = 30_000;
        let h = exp_one_param(&OneParamSubgroup::horocycle(), 0.37_f64).unwrap();
        let mut d0 = Vec::with_capacity(n);
        let mut d1 = Vec::with_capacity(n);
        for i in 0..n {
            let x: LatticePoint<f64> = sample_modular(crate::rng::derive_seed(23, i as u64));
            d0.push(x.cusp_depth().unwrap());
            d1.push(x.apply(&h).cusp_depth().unwrap());
        }
        let stat = ks_two_sample(&d0, &d1);
        let crit = ks_critical(0.01, n, n);
        assert!(stat < crit, "KS {stat} >= critical {crit}");
    }
}
