//! Cross-module invariants: coset independence of the observables, metric
//! consistency between the cusp-depth proxy and hyperbolic geometry, the
//! tail sandwich, and the two halves of the expanding-box growth law.

use cusplab_core::flows::{
    beta_t, horocycle_max_depth, horocycle_running_max_at, near_divergent_point, omega_minus,
    orbit_series, BoxSpec,
};
use cusplab_core::group::{exp_one_param, kak, symmetric_distance, GroupElement, OneParamSubgroup};
use cusplab_core::haar::{sample_modular, tail_measure};
use cusplab_core::lattice::{hyperbolic_distance, LatticePoint, UpperHalfPoint};
use cusplab_core::matrix::SquareMatrix;
use cusplab_core::rng::{derive_seed, rng_from_seed};
use cusplab_core::stats::{ks_critical, ks_two_sample, linear_fit, median};
use rand::Rng;

fn random_unimodular(rng: &mut cusplab_core::rng::Rng, n: usize) -> GroupElement<f64> {
    loop {
        let m = SquareMatrix::from_fn(n, |_, _| rng.gen::<f64>() * 20.0 - 10.0);
        let det = m.det();
        if det.abs() < 0.5 {
            continue;
        }
        let m = if n == 2 && det < 0.0 {
            // swap columns to make the determinant positive
            SquareMatrix::from_fn(2, |i, j| m.at(i, 1 - j))
        } else {
            m
        };
        if let Ok(g) = GroupElement::project_unimodular(m) {
            return g;
        }
    }
}

/// Random element of SL(n,Z) as a product of elementary shears, all entries
/// of magnitude at most `cap`.
fn random_integer_unimodular(rng: &mut cusplab_core::rng::Rng, n: usize, cap: f64) -> SquareMatrix<f64> {
    let mut g = SquareMatrix::identity(n);
    for _ in 0..40 {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n);
        while j == i {
            j = rng.gen_range(0..n);
        }
        let k = rng.gen_range(-3i64..=3) as f64;
        if k == 0.0 {
            continue;
        }
        // column op: col_j += k col_i
        let mut next = g;
        for r in 0..n {
            next.set(r, j, g.at(r, j) + k * g.at(r, i));
        }
        if next.max_abs() > cap {
            break;
        }
        g = next;
    }
    g
}

#[test]
fn kak_reconstruction_on_random_matrices() {
    // 1e5 random matrices with entries in [-10, 10] projected to det 1
    for (n, count) in [(2usize, 60_000usize), (3, 40_000)] {
        let mut rng = rng_from_seed(1000 + n as u64);
        for _ in 0..count {
            let g = random_unimodular(&mut rng, n);
            let kd = kak(&g);
            let r = kd.reconstruct();
            let scale = g.matrix().max_abs().max(1.0);
            for i in 0..n {
                for j in 0..n {
                    let diff = (r.matrix().at(i, j) - g.matrix().at(i, j)).abs();
                    assert!(
                        diff <= 1e-9 * scale.max(1.0),
                        "n={n} entry ({i},{j}) differs by {diff}"
                    );
                }
            }
            let sv = kd.singular_values();
            let prod: f64 = sv.iter().product();
            assert!((prod - 1.0).abs() < 1e-9, "singular product {prod}");
            for w in sv.windows(2) {
                assert!(w[0] >= w[1] - 1e-9, "singular values not sorted: {sv:?}");
            }
        }
    }
}

#[test]
fn distance_symmetry_and_triangle() {
    let mut rng = rng_from_seed(2024);
    for _ in 0..20_000 {
        let g = random_unimodular(&mut rng, 2);
        let h = random_unimodular(&mut rng, 2);
        let dg = symmetric_distance(&g);
        assert!((dg - symmetric_distance(&g.inverse())).abs() < 1e-9);
        let dgh = symmetric_distance(&g.mul(&h));
        assert!(dgh <= dg + symmetric_distance(&h) + 1e-8, "triangle violated");
    }
    let mut rng = rng_from_seed(2025);
    for _ in 0..5_000 {
        let g = random_unimodular(&mut rng, 3);
        let dg = symmetric_distance(&g);
        assert!((dg - symmetric_distance(&g.inverse())).abs() < 1e-8 * dg.max(1.0));
        let h = random_unimodular(&mut rng, 3);
        let dgh = symmetric_distance(&g.mul(&h));
        assert!(dgh <= dg + symmetric_distance(&h) + 1e-8);
    }
}

#[test]
fn observables_are_coset_functions() {
    // alpha1, cusp depth, and the projected point mod Gamma do not depend
    // on the representative
    let mut rng = rng_from_seed(31);
    for trial in 0..10_000 {
        let n = if trial % 4 == 0 { 3 } else { 2 };
        let x = if n == 2 {
            sample_modular::<f64>(derive_seed(31, trial))
        } else {
            cusplab_core::haar::sample_generic(derive_seed(32, trial), 3).unwrap()
        };
        let gamma = random_integer_unimodular(&mut rng, n, 50.0);
        let y = x.right_multiply(&gamma);
        let (_, a1x) = x.shortest_vector().unwrap();
        let (_, a1y) = y.shortest_vector().unwrap();
        assert!(
            (a1x - a1y).abs() <= 1e-6 * a1x.max(1e-12),
            "alpha1 changed under coset move: {a1x} vs {a1y}"
        );
        if n == 2 {
            let zx = x.project_h2().reduce_to_fundamental_domain();
            let zy = y.project_h2().reduce_to_fundamental_domain();
            // skip points too close to the fundamental-domain boundary,
            // where the representative is ambiguous
            let interior = zx.re.abs() < 0.499
                && (zx.re * zx.re + zx.im * zx.im) > 1.001
                && zx.im < 1e6;
            if interior {
                assert!(
                    (zx.re - zy.re).abs() < 1e-6 && (zx.im - zy.im).abs() < 1e-6 * zx.im,
                    "projection moved: ({}, {}) vs ({}, {})",
                    zx.re,
                    zx.im,
                    zy.re,
                    zy.im
                );
            }
        }
    }
}

#[test]
fn minkowski_bound_on_haar_ensemble() {
    let bound = (2.0 / 3.0_f64.sqrt()).sqrt() + 1e-9;
    for i in 0..100_000u64 {
        let x = sample_modular::<f64>(derive_seed(77, i));
        let (_, a1) = x.shortest_vector().unwrap();
        assert!(a1 <= bound);
    }
}

#[test]
fn depth_tracks_left_multiplication() {
    // D(gx) <= D(x) + c_n d(g) + 2 with c_2 = 1 and c_3 = 2/sqrt(3)
    let mut rng = rng_from_seed(555);
    for trial in 0..4_000u64 {
        let n = if trial % 2 == 0 { 2 } else { 3 };
        let x = if n == 2 {
            sample_modular::<f64>(derive_seed(56, trial))
        } else {
            cusplab_core::haar::sample_generic(derive_seed(57, trial), 3).unwrap()
        };
        let g = random_unimodular(&mut rng, n);
        let dx = x.cusp_depth().unwrap();
        let dgx = x.apply(&g).cusp_depth().unwrap();
        let factor = if n == 2 { 1.0 } else { 2.0 / 3.0_f64.sqrt() };
        let bound = dx + factor * symmetric_distance(&g) + 2.0;
        assert!(dgx <= bound, "n={n}: D(gx)={dgx} > {bound}");
    }
}

#[test]
fn cusp_depth_is_coarsely_isometric_to_hyperbolic_distance() {
    // for deep points, |D(x) - d_quotient(p(x), i)| <= 2
    let mut deep = 0usize;
    let mut i = 0u64;
    while deep < 10_000 {
        let x = sample_modular::<f64>(derive_seed(91, i));
        i += 1;
        let d = x.cusp_depth().unwrap();
        if d < 4.0 {
            continue;
        }
        deep += 1;
        let z = x.project_h2();
        let dist = z.distance_to_basepoint_mod_gamma();
        assert!(
            (d - dist).abs() <= 2.0,
            "depth {d} vs quotient distance {dist} at sample {i}"
        );
    }
}

#[test]
fn haar_invariance_ks_at_full_size() {
    let n = 100_000;
    let h = exp_one_param(&OneParamSubgroup::horocycle(), 0.37_f64).unwrap();
    let mut d0 = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    for i in 0..n {
        let x = sample_modular::<f64>(derive_seed(23, i as u64));
        d0.push(x.cusp_depth().unwrap());
        d1.push(x.apply(&h).cusp_depth().unwrap());
    }
    let stat = ks_two_sample(&d0, &d1);
    assert!(stat < ks_critical(0.01, n, n), "KS statistic {stat}");
}

#[test]
fn tail_sandwich_is_stable_across_seeds() {
    // C1 e^-t <= mu(D > t) <= C2 e^-t on [3, 8] with stable constants
    let thresholds: Vec<f64> = (3..=8).map(|t| t as f64).collect();
    let mut c1s = Vec::new();
    let mut c2s = Vec::new();
    for seed in [1u64, 2, 3] {
        let est = tail_measure(1_000_000, &thresholds, seed).unwrap();
        let cs: Vec<f64> = est
            .empirical_prob
            .iter()
            .zip(&thresholds)
            .map(|(&p, &t)| p * t.exp())
            .collect();
        c1s.push(cs.iter().copied().fold(f64::INFINITY, f64::min));
        c2s.push(cs.iter().copied().fold(0.0, f64::max));
    }
    for cs in [&c1s, &c2s] {
        let mean: f64 = cs.iter().sum::<f64>() / cs.len() as f64;
        for &c in cs.iter() {
            assert!((c / mean - 1.0).abs() < 0.2, "constant {c} vs mean {mean}");
        }
    }
    // halving the sample size roughly sqrt(2)-inflates the interval
    let small = tail_measure(500_000, &thresholds, 1).unwrap();
    let big = tail_measure(1_000_000, &thresholds, 1).unwrap();
    let ratio = big.ci_halfwidth / small.ci_halfwidth;
    assert!((0.6..0.8).contains(&ratio), "ci ratio {ratio}");
}

#[test]
fn beta_upper_bound_law() {
    // beta_t <= (nu + omega + 0.1) log t + C with a bounded per-point C,
    // nu = 1 for the standard horocycle box; 100 Haar points, t up to 1e6
    let grid: Vec<f64> = (2..=12).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    let sub = OneParamSubgroup::geodesic(2);
    let mut worst_c = f64::NEG_INFINITY;
    for i in 0..100u64 {
        let x = sample_modular::<f64>(derive_seed(4242, i));
        let d0 = x.cusp_depth().unwrap();
        let omega = omega_minus(&x, &sub, 1e4).unwrap();
        let maxima = horocycle_running_max_at(&x, &grid).unwrap();
        let slope = 1.0 + omega + 0.1;
        for (&t, &m) in grid.iter().zip(&maxima) {
            let beta = (m - d0).max(0.0);
            let c = beta - slope * t.ln();
            worst_c = worst_c.max(c);
        }
    }
    assert!(worst_c <= 10.0, "upper-bound constant blew up: {worst_c}");
}

#[test]
fn beta_lower_bound_mechanism() {
    // points with non-divergent reversed flow admit certified excursions:
    // rotate a lattice vector onto the contracting line at a_{-t} x, flow
    // back, and the two-sided horocycle sweep must reach the certified depth
    let sub = OneParamSubgroup::geodesic(2);
    let mut checked = 0;
    for i in 0..12u64 {
        let x = sample_modular::<f64>(derive_seed(999, i));
        for &t_n in &[8.0_f64, 10.0, 12.0] {
            let back = exp_one_param(&sub, -t_n).unwrap();
            let xb = x.apply(&back);
            if xb.cusp_depth().unwrap() >= 5.0 {
                continue; // want a return to the thick part
            }
            let y = match near_divergent_point(&xb, 0.3, &sub) {
                Ok(y) => y,
                Err(_) => continue,
            };
            let fwd = exp_one_param(&sub, t_n).unwrap();
            let certified = y.apply(&fwd).cusp_depth().unwrap();
            // the excursion lives at |u| <= e^{t_n}; sweep both directions
            let s_max = t_n.exp();
            let m_fwd = horocycle_max_depth(&x, s_max).unwrap();
            let m_rev =
                horocycle_max_depth(&cusplab_core::flows::horocycle_reflect(&x), s_max).unwrap();
            let m = m_fwd.max(m_rev);
            assert!(
                m >= certified - 1.5,
                "point {i}, t={t_n}: sweep max {m} below certified {certified}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 10, "too few certifiable cases: {checked}");
}

#[test]
fn beta_matches_event_scan_at_moderate_horizon() {
    let spec = BoxSpec::standard_horocycle();
    let grid = [100.0_f64, 1_000.0, 10_000.0];
    for i in 0..10u64 {
        let x = sample_modular::<f64>(derive_seed(808, i));
        let d0 = x.cusp_depth().unwrap();
        let series = beta_t(&x, &spec, &grid).unwrap();
        let events = horocycle_running_max_at(&x, &grid).unwrap();
        for ((&b, &m), &t) in series.depths().iter().zip(&events).zip(&grid) {
            let via_events = (m - d0).max(0.0);
            // both sides may sit at the event floor for shallow windows
            if b.max(via_events) >= 4.5 {
                assert!(
                    (b - via_events).abs() < 0.25,
                    "point {i}, t={t}: walk {b} vs events {via_events}"
                );
            }
        }
    }
}

#[test]
fn projection_translate_distance_example() {
    // the h_s translate of the basepoint sits at arccosh(1 + s^2/2), and
    // the ratio to 2 log s tends to 1
    for &s in &[10.0_f64, 100.0, 1000.0] {
        let h = exp_one_param(&OneParamSubgroup::horocycle(), s).unwrap();
        let z = LatticePoint::new(h).project_h2();
        let d = hyperbolic_distance(&z, &UpperHalfPoint::basepoint());
        assert!((d - (1.0 + s * s / 2.0).acosh()).abs() < 1e-9);
        assert!((d / (2.0 * s.ln()) - 1.0).abs() < 0.25 / s.ln());
    }
}

#[test]
fn oracle_and_simulation_agree_on_sample_family() {
    // small-scale version of the full acceptance cross-validation
    let s_max = 20_000.0_f64;
    let mut rng = rng_from_seed(616);
    for _ in 0..6 {
        let alpha: f64 = 0.05 + 0.9 * rng.gen::<f64>();
        let x = cusplab_core::diophantine::lattice_family(alpha).unwrap();
        let cf = cusplab_core::diophantine::cf_expand(alpha, 40).unwrap();
        let preds = cusplab_core::diophantine::predict_excursions(&cf, s_max);
        let fwd = orbit_series(&x, &OneParamSubgroup::horocycle(), s_max, 0.5).unwrap();
        let rev =
            orbit_series(&x, &OneParamSubgroup::horocycle().reversed(), s_max, 0.5).unwrap();
        for p in preds {
            let series = if p.time_reversed { &rev } else { &fwd };
            let mut best = (0.0_f64, f64::NEG_INFINITY);
            for (&t, &d) in series.times().iter().zip(series.depths()) {
                if (t - p.s_star).abs() <= 1.25 && d > best.1 {
                    best = (t, d);
                }
            }
            assert!(
                (best.0 - p.s_star).abs() <= 1.0,
                "alpha {alpha}: peak at {} vs predicted {}",
                best.0,
                p.s_star
            );
            assert!(
                (best.1 - p.depth).abs() <= 0.7,
                "alpha {alpha}: depth {} vs predicted {}",
                best.1,
                p.depth
            );
        }
    }
}

#[test]
fn haar_stream_mean_tracks_reciprocal_law() {
    // ensemble mean of 1{D(h_n x) > log n} tracks (3/pi)/n within a factor 2
    let n_max = 2_000usize;
    let ensemble = 4_000usize;
    let mut sums = vec![0usize; n_max];
    for e in 0..ensemble {
        let x = sample_modular::<f64>(derive_seed(37, e as u64));
        let series =
            orbit_series(&x, &OneParamSubgroup::horocycle(), n_max as f64, 1.0).unwrap();
        for (&t, &d) in series.times().iter().zip(series.depths()) {
            let n = t.round() as usize;
            if n >= 2 && n <= n_max && (t - n as f64).abs() < 1e-9 && d > (n as f64).ln() {
                sums[n - 1] += 1;
            }
        }
    }
    // aggregate in dyadic buckets for stable comparisons
    let c = 3.0 / std::f64::consts::PI;
    for (lo, hi) in [(64usize, 128usize), (256, 512), (1024, 2048)] {
        let mut emp = 0.0;
        let mut expect = 0.0;
        for n in lo..hi.min(n_max) {
            emp += sums[n - 1] as f64 / ensemble as f64;
            expect += c / n as f64;
        }
        let ratio = emp / expect;
        assert!(
            (0.5..2.0).contains(&ratio),
            "bucket [{lo},{hi}): empirical/expected = {ratio}"
        );
    }
}

#[test]
fn divergence_slope_never_exceeds_drift() {
    // any point: slope <= nu + 0.02
    for i in 0..10u64 {
        let x = sample_modular::<f64>(derive_seed(303, i));
        let slope =
            cusplab_core::flows::divergence_rate(&x, &OneParamSubgroup::geodesic(2), 60.0)
                .unwrap();
        assert!(slope <= 1.02, "slope {slope}");
    }
}

#[test]
fn liouville_prediction_consistency_with_cf_machinery() {
    // the exact rational expansion of the Liouville number has the
    // truncations among its convergents
    let alpha = cusplab_core::diophantine::liouville_alpha(4).unwrap();
    let cf = cusplab_core::diophantine::cf_expand_rational::<f64>(&alpha).unwrap();
    use num_bigint::BigInt;
    // truncations with at least two terms kept approximate well enough to
    // appear among the convergents (the single-term one does not)
    let q_targets = [BigInt::from(100u64), BigInt::from(10u64).pow(6)];
    for target in &q_targets {
        assert!(
            cf.convergents().iter().any(|c| &c.q == target),
            "missing convergent with q = {target}"
        );
    }
}

#[test]
fn running_max_slope_of_haar_points_is_logarithmic() {
    // single-point sanity for the horocycle log law at 1e6
    let horizons = [1e5_f64, 1e6];
    let mut slopes = Vec::new();
    for i in 0..20u64 {
        let x = sample_modular::<f64>(derive_seed(2718, i));
        let m = horocycle_running_max_at(&x, &horizons).unwrap();
        slopes.push(m[1] / horizons[1].ln());
    }
    let med = median(&slopes);
    assert!((0.7..1.4).contains(&med), "median slope {med}");
}

#[test]
fn beta_slope_fit_is_logarithmic() {
    // direct use of the beta_t operation on a short grid
    let spec = BoxSpec::standard_horocycle();
    let grid: Vec<f64> = vec![1e2, 1e3, 1e4, 1e5];
    let mut slopes = Vec::new();
    for i in 0..8u64 {
        let x = sample_modular::<f64>(derive_seed(5050, i));
        let series = beta_t(&x, &spec, &grid).unwrap();
        let xs: Vec<f64> = grid.iter().map(|t| t.ln()).collect();
        let (_, slope) = linear_fit(&xs, series.depths());
        slopes.push(slope);
    }
    let med = median(&slopes);
    assert!((0.6..1.5).contains(&med), "median beta slope {med}");
}
