//! Orbit computation and the dynamical observables: excursion series,
//! running maxima, the expanding-box supremum beta_t, the reversed-flow
//! escape rate, divergence-rate fits, and the construction of
//! near-divergent points.
//!
//! Long orbits are walked incrementally: the representative is re-reduced
//! after every step, so entry magnitudes stay proportional to the current
//! excursion depth instead of compounding. The exponential of the step is
//! computed once per walk.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_integer::Integer;

use crate::error::CoreError;
use crate::group::{exp_one_param, GroupElement, LieAlgebraKind, OneParamSubgroup};
use crate::lattice::{lattice_points_in_box, LatticePoint};
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// Time resolution of local-maximum refinement.
const REFINE_RESOLUTION: f64 = 1e-3;
/// A grid local maximum must exceed both neighbors by this much to trigger
/// refinement.
const REFINE_TRIGGER: f64 = 0.5;
/// Peaks shallower than this are invisible to the event-based horocycle
/// scan; the depth floor of its output.
const EVENT_DEPTH_FLOOR: f64 = 4.0;

/// Sampled (time, cusp-depth) sequence along an orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionSeries<S> {
    times: Vec<S>,
    depths: Vec<S>,
    refined: bool,
}

impl<S: Scalar> ExcursionSeries<S> {
    /// Build from parallel vectors; times must be strictly increasing and
    /// depths nonnegative.
    pub fn new(times: Vec<S>, depths: Vec<S>, refined: bool) -> Self {
        assert_eq!(times.len(), depths.len(), "times and depths must align");
        for w in times.windows(2) {
            assert!(w[0] < w[1], "times must be strictly increasing");
        }
        assert!(depths.iter().all(|d| *d >= S::zero()), "depths must be >= 0");
        Self { times, depths, refined }
    }

    #[inline]
    pub fn times(&self) -> &[S] {
        &self.times
    }

    #[inline]
    pub fn depths(&self) -> &[S] {
        &self.depths
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn was_refined(&self) -> bool {
        self.refined
    }

    /// Largest depth together with the time where it is attained.
    pub fn peak(&self) -> Option<(S, S)> {
        let mut best: Option<(S, S)> = None;
        for (&t, &d) in self.times.iter().zip(&self.depths) {
            if best.map_or(true, |(_, bd)| d > bd) {
                best = Some((t, d));
            }
        }
        best
    }
}

/// Running maximum M(t) = max_{t' <= t} depth(t'); same time grid.
pub fn running_max<S: Scalar>(series: &ExcursionSeries<S>) -> ExcursionSeries<S> {
    let mut acc = S::zero();
    let mut depths = Vec::with_capacity(series.len());
    for &d in series.depths() {
        acc = acc.max(d);
        depths.push(acc);
    }
    ExcursionSeries {
        times: series.times.clone(),
        depths,
        refined: series.refined,
    }
}

/// A product-of-intervals box inside the expanding horospherical subgroup of
/// a diagonal one-parameter subgroup.
#[derive(Debug, Clone)]
pub struct BoxSpec<S> {
    subgroup: OneParamSubgroup<S>,
    /// (matrix position, interval) per horospherical coordinate.
    coords: Vec<((usize, usize), (S, S))>,
}

impl<S: Scalar> BoxSpec<S> {
    /// Box given by one interval per horospherical coordinate of `subgroup`
    /// (entries (i,j) with z_i > z_j, in row-major order).
    pub fn new(subgroup: OneParamSubgroup<S>, intervals: &[(S, S)]) -> Result<Self, CoreError> {
        if subgroup.generator().kind() != LieAlgebraKind::Diagonal {
            return Err(CoreError::InvalidInput(
                "expanding boxes need a diagonal subgroup".into(),
            ));
        }
        let positions = horospherical_positions(&subgroup);
        if positions.is_empty() {
            return Err(CoreError::InvalidInput(
                "subgroup has no expanding horospherical directions".into(),
            ));
        }
        if positions.len() != intervals.len() {
            return Err(CoreError::InvalidInput(format!(
                "expected {} intervals, got {}",
                positions.len(),
                intervals.len()
            )));
        }
        for &(lo, hi) in intervals {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(CoreError::InvalidInput(
                    "box intervals must be bounded, non-empty".into(),
                ));
            }
        }
        Ok(Self {
            subgroup,
            coords: positions.into_iter().zip(intervals.iter().copied()).collect(),
        })
    }

    /// The standard n = 2 horocycle box B = { h_s : s in (0, 1) }, so that
    /// B_t = { h_s : s in (0, t) }.
    pub fn standard_horocycle() -> Self {
        Self::new(OneParamSubgroup::geodesic(2), &[(S::zero(), S::one())])
            .expect("standard box is valid")
    }

    #[inline]
    pub fn subgroup(&self) -> &OneParamSubgroup<S> {
        &self.subgroup
    }

    #[inline]
    pub fn coords(&self) -> &[((usize, usize), (S, S))] {
        &self.coords
    }

    /// Expansion exponent z_i - z_j of each coordinate under conjugation by
    /// a_{log t}.
    fn exponents(&self) -> Vec<S> {
        let z = self.subgroup.generator().matrix();
        self.coords
            .iter()
            .map(|&((i, j), _)| z.at(i, i) - z.at(j, j))
            .collect()
    }

    /// Whether the box is a single interval (0, b) for n = 2: the nested
    /// case with a fast incremental implementation.
    fn nested_horocycle_bound(&self) -> Option<S> {
        if self.subgroup.dim() == 2 && self.coords.len() == 1 {
            let (lo, hi) = self.coords[0].1;
            if lo == S::zero() {
                return Some(hi);
            }
        }
        None
    }
}

/// Matrix positions (i, j) of the expanding horospherical subgroup of a
/// diagonal one-parameter subgroup: entries with z_i > z_j.
pub fn horospherical_positions<S: Scalar>(sub: &OneParamSubgroup<S>) -> Vec<(usize, usize)> {
    let n = sub.dim();
    let z = sub.generator().matrix();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && z.at(i, i) > z.at(j, j) + S::of(1e-12) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Cusp depth of an already-reduced point, using the cheap exact path.
fn depth_of_reduced<S: Scalar>(x: &LatticePoint<S>) -> S {
    let m = x.rep().matrix();
    let alpha1 = if m.dim() == 2 {
        // first column of a Gauss-reduced basis realizes the minimum
        (m.at(0, 0) * m.at(0, 0) + m.at(1, 0) * m.at(1, 0)).sqrt()
    } else {
        x.shortest_vector().expect("reduced point").1
    };
    (-S::of(2.0) * alpha1.ln()).max(S::zero())
}

/// Incremental depth walk along exp(t z) x for t in (0, t_max], emitting
/// (time, depth) samples through `on_sample`. Samples arrive in time order
/// except for refinement events, which may precede the current time by at
/// most one step. Returns whether any refinement ran.
fn walk_depths<S: Scalar, F: FnMut(S, S)>(
    x: &LatticePoint<S>,
    sub: &OneParamSubgroup<S>,
    t_max: S,
    step: S,
    refine: bool,
    mut on_sample: F,
) -> Result<bool, CoreError> {
    let step_g = exp_one_param(sub, step)?;
    let mut state = x.reduce()?;
    let mut t = S::zero();
    let mut refined = false;

    // rolling window: depth two steps back, (time, depth) one step back;
    // `state` always holds the reduced point at the latest sampled time
    let d_start = depth_of_reduced(&state);
    on_sample(t, d_start);
    let mut prev: (S, S) = (t, d_start);
    let mut prev2_depth: Option<S> = None;

    let steps = (t_max / step).ceil().as_f64() as u64;
    for _ in 0..steps {
        let next_state = state.apply(&step_g).reduce()?;
        let t_next = t + step;
        let d_next = depth_of_reduced(&next_state);

        if refine {
            if let Some(d0) = prev2_depth {
                let (_, d1) = prev;
                if d1 > d0 + S::of(REFINE_TRIGGER) && d1 > d_next + S::of(REFINE_TRIGGER) {
                    // `state` sits exactly at the candidate peak time
                    let (tr, dr) = refine_peak(&state, sub, t, step)?;
                    refined = true;
                    on_sample(tr, dr);
                }
            }
        }

        on_sample(t_next, d_next);
        prev2_depth = Some(prev.1);
        prev = (t_next, d_next);
        state = next_state;
        t = t_next;
    }
    Ok(refined)
}

/// Hill-climb the depth around a grid local maximum down to time resolution
/// 1e-3. `base` is the reduced state at time `t_center`.
fn refine_peak<S: Scalar>(
    base: &LatticePoint<S>,
    sub: &OneParamSubgroup<S>,
    t_center: S,
    step: S,
) -> Result<(S, S), CoreError> {
    let eval = |dt: S| -> Result<S, CoreError> {
        let g = exp_one_param(sub, dt)?;
        Ok(depth_of_reduced(&base.apply(&g).reduce()?))
    };
    let mut best_dt = S::zero();
    let mut best = eval(S::zero())?;
    let mut h = step;
    let mut evals = 0;
    while h > S::of(REFINE_RESOLUTION) && evals < 400 {
        let left = eval(best_dt - h)?;
        let right = eval(best_dt + h)?;
        evals += 2;
        if left > best && left >= right {
            best = left;
            best_dt = best_dt - h;
        } else if right > best {
            best = right;
            best_dt = best_dt + h;
        } else {
            h = h * S::of(0.5);
        }
    }
    Ok((t_center + best_dt, best))
}

/// Depths of exp(t z) x on a coarse grid over [0, t_max], with adaptive
/// refinement around pronounced local maxima.
pub fn orbit_series<S: Scalar>(
    x: &LatticePoint<S>,
    sub: &OneParamSubgroup<S>,
    t_max: S,
    coarse_step: S,
) -> Result<ExcursionSeries<S>, CoreError> {
    if !(t_max > S::zero()) {
        return Err(CoreError::InvalidInput("t_max must be positive".into()));
    }
    if !(coarse_step > S::zero() && coarse_step <= S::one()) {
        return Err(CoreError::InvalidInput("coarse_step must lie in (0, 1]".into()));
    }
    let mut events: Vec<(S, S)> = Vec::new();
    let refined = walk_depths(x, sub, t_max, coarse_step, true, |t, d| {
        events.push((t, d));
    })?;
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
    events.dedup_by(|a, b| {
        if (a.0 - b.0).abs() < S::of(1e-12) {
            b.1 = b.1.max(a.1);
            true
        } else {
            false
        }
    });
    let (times, depths): (Vec<S>, Vec<S>) = events.into_iter().unzip();
    Ok(ExcursionSeries::new(times, depths, refined))
}

/// Min-heap entry ordered by time.
struct TimedEvent<S>(S, S);

impl<S: Scalar> PartialEq for TimedEvent<S> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}
impl<S: Scalar> Eq for TimedEvent<S> {}
impl<S: Scalar> PartialOrd for TimedEvent<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for TimedEvent<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want earliest-first
        other.0.partial_cmp(&self.0).expect("finite event times")
    }
}

/// beta_t(x) = sup over the expanded box B_t of the cusp depth of b x,
/// reported relative to the depth of x (clipped at zero), for each t in
/// `t_grid`.
///
/// Sampling uses the conjugated grid of the base box with spacing <= 1/2 in
/// expanded coordinates plus local refinement, so the additive depth error
/// is bounded by log 2.
pub fn beta_t<S: Scalar>(
    x: &LatticePoint<S>,
    spec: &BoxSpec<S>,
    t_grid: &[S],
) -> Result<ExcursionSeries<S>, CoreError> {
    if t_grid.is_empty() {
        return Err(CoreError::InvalidInput("t_grid must be non-empty".into()));
    }
    for w in t_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(CoreError::InvalidInput("t_grid must be increasing".into()));
        }
    }
    if !(t_grid[0] > S::one()) {
        return Err(CoreError::InvalidInput("t_grid values must exceed 1".into()));
    }
    let d0 = x.cusp_depth()?;
    if let Some(bound) = spec.nested_horocycle_bound() {
        let exponent = spec.exponents()[0];
        return beta_nested_horocycle(x, bound, exponent, t_grid, d0);
    }
    beta_general(x, spec, t_grid, d0)
}

/// Nested case B = (0, b): one incremental sweep, windows closed in order.
fn beta_nested_horocycle<S: Scalar>(
    x: &LatticePoint<S>,
    bound: S,
    exponent: S,
    t_grid: &[S],
    d0: S,
) -> Result<ExcursionSeries<S>, CoreError> {
    let horocycle = OneParamSubgroup::horocycle();
    let step = S::of(0.5);
    let bounds: Vec<S> = t_grid.iter().map(|&t| bound * t.powf(exponent)).collect();
    let u_max = *bounds.last().expect("non-empty grid");

    let mut heap: BinaryHeap<TimedEvent<S>> = BinaryHeap::new();
    let mut run_max = S::zero();
    let mut next_bound = 0usize;
    let mut betas: Vec<S> = Vec::with_capacity(bounds.len());
    let commit = |tau: S, d: S, run_max: &mut S, next_bound: &mut usize, betas: &mut Vec<S>| {
        while *next_bound < bounds.len() && bounds[*next_bound] < tau {
            betas.push((*run_max - d0).max(S::zero()));
            *next_bound += 1;
        }
        *run_max = (*run_max).max(d);
    };

    let lag = step * S::of(3.0);
    let refined = walk_depths(x, &horocycle, u_max, step, true, |t, d| {
        heap.push(TimedEvent(t, d));
        // pop everything certainly final
        while let Some(top) = heap.peek() {
            if top.0 <= t - lag {
                let TimedEvent(tau, depth) = heap.pop().expect("peeked");
                commit(tau, depth, &mut run_max, &mut next_bound, &mut betas);
            } else {
                break;
            }
        }
    })?;
    while let Some(TimedEvent(tau, depth)) = heap.pop() {
        commit(tau, depth, &mut run_max, &mut next_bound, &mut betas);
    }
    while next_bound < bounds.len() {
        betas.push((run_max - d0).max(S::zero()));
        next_bound += 1;
    }
    Ok(ExcursionSeries::new(t_grid.to_vec(), betas, refined))
}

/// General product box: fresh grid enumeration per requested t.
fn beta_general<S: Scalar>(
    x: &LatticePoint<S>,
    spec: &BoxSpec<S>,
    t_grid: &[S],
    d0: S,
) -> Result<ExcursionSeries<S>, CoreError> {
    let n = x.dim();
    let exps = spec.exponents();
    let xr = x.reduce()?;
    let mut betas = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        // expanded intervals and per-coordinate grids with spacing <= 1/2
        let mut grids: Vec<Vec<S>> = Vec::new();
        let mut total: usize = 1;
        for (k, &((_, _), (lo, hi))) in spec.coords.iter().enumerate() {
            let scale = t.powf(exps[k]);
            let (a, b) = (lo * scale, hi * scale);
            let len = b - a;
            let count = (len / S::of(0.5)).ceil().as_f64() as usize + 1;
            total = total.saturating_mul(count);
            if total > 50_000_000 {
                return Err(CoreError::InvalidInput(
                    "expanded box too large to sample at spacing 1/2".into(),
                ));
            }
            let step = len / S::of_usize(count - 1).max(S::one());
            grids.push((0..count).map(|i| a + step * S::of_usize(i)).collect());
        }
        let eval = |coords: &[S]| -> Result<S, CoreError> {
            let mut h = SquareMatrix::identity(n);
            for (k, &((i, j), _)) in spec.coords.iter().enumerate() {
                h.set(i, j, coords[k]);
            }
            let g = GroupElement::project_unimodular(h)?;
            xr.apply(&g).reduce().map(|p| depth_of_reduced(&p))
        };
        // full grid scan
        let mut idx = vec![0usize; grids.len()];
        let mut best = S::neg_infinity();
        let mut best_coords: Vec<S> = grids.iter().map(|g| g[0]).collect();
        'grid: loop {
            let coords: Vec<S> = idx.iter().zip(&grids).map(|(&i, g)| g[i]).collect();
            let d = eval(&coords)?;
            if d > best {
                best = d;
                best_coords = coords;
            }
            for k in 0..idx.len() {
                idx[k] += 1;
                if idx[k] < grids[k].len() {
                    continue 'grid;
                }
                idx[k] = 0;
            }
            break;
        }
        // coordinate-descent refinement around the best sample
        let mut h = S::of(0.25);
        while h > S::of(REFINE_RESOLUTION) {
            let mut improved = false;
            for k in 0..best_coords.len() {
                for dir in [-S::one(), S::one()] {
                    let mut c = best_coords.clone();
                    c[k] = c[k] + dir * h;
                    let d = eval(&c)?;
                    if d > best {
                        best = d;
                        best_coords = c;
                        improved = true;
                    }
                }
            }
            if !improved {
                h = h * S::of(0.5);
            }
        }
        betas.push((best - d0).max(S::zero()));
    }
    Ok(ExcursionSeries::new(t_grid.to_vec(), betas, true))
}

/// Finite-horizon estimate of the reversed-flow escape rate
/// omega^-(x) = limsup D(exp(-t z) x) / t.
///
/// The estimate takes the maximum of D(exp(-t z) x)/t over the dyadic times
/// in the last two octaves below T (the tail of the dyadic ladder), which
/// converges to 0 for Haar-typical points and to the drift rate for points
/// with a lattice vector on the expanding line.
pub fn omega_minus<S: Scalar>(
    x: &LatticePoint<S>,
    sub: &OneParamSubgroup<S>,
    horizon: S,
) -> Result<S, CoreError> {
    if !(horizon >= S::of(100.0)) {
        return Err(CoreError::InvalidInput("omega_minus needs T >= 100".into()));
    }
    let k_top = horizon.log2().floor().as_f64() as i32;
    let targets = [S::of(2.0).powi(k_top - 1), S::of(2.0).powi(k_top)];
    let reversed = sub.reversed();
    let mut best = S::zero();
    let step = S::of(0.5);
    walk_depths(x, &reversed, targets[1], step, false, |t, d| {
        for &target in &targets {
            if (t - target).abs() < step * S::of(0.25) {
                best = best.max(d / target);
            }
        }
    })?;
    Ok(best)
}

/// Least-squares slope of D(exp(t z) x) against t over the window
/// [T/2, T]; the finite-horizon divergence rate.
pub fn divergence_rate<S: Scalar>(
    x: &LatticePoint<S>,
    sub: &OneParamSubgroup<S>,
    horizon: S,
) -> Result<S, CoreError> {
    if sub.generator().kind() != LieAlgebraKind::Diagonal {
        return Err(CoreError::InvalidInput(
            "divergence rate is defined for diagonal subgroups".into(),
        ));
    }
    if !(horizon >= S::of(50.0)) {
        return Err(CoreError::InvalidInput("divergence_rate needs T >= 50".into()));
    }
    let step = S::of(0.5);
    let mut ts = Vec::new();
    let mut ds = Vec::new();
    let half = horizon * S::of(0.5);
    walk_depths(x, sub, horizon, step, false, |t, d| {
        if t >= half {
            ts.push(t);
            ds.push(d);
        }
    })?;
    let (_, slope) = crate::stats::linear_fit(&ts, &ds);
    Ok(slope)
}

/// Rotate a primitive lattice vector of x onto the contracting eigenline of
/// the diagonal flow, yielding y = g x with symmetric_distance(g) < eps and
/// D(exp(t z) y) >= nu t - C for all t > 0.
///
/// The vector is searched among primitive vectors of norm at most 2/eps
/// within angle eps/2 of the line; if none exists the caller should retry
/// with a larger bound (signalled as `NoAlignedVector`).
pub fn near_divergent_point<S: Scalar>(
    x: &LatticePoint<S>,
    eps: S,
    sub: &OneParamSubgroup<S>,
) -> Result<LatticePoint<S>, CoreError> {
    if x.dim() != 2 {
        return Err(CoreError::InvalidInput("near_divergent_point needs n = 2".into()));
    }
    if sub.generator().kind() != LieAlgebraKind::Diagonal {
        return Err(CoreError::InvalidInput("flow must be diagonal".into()));
    }
    if !(eps > S::zero() && eps < S::of(0.5)) {
        return Err(CoreError::InvalidInput("eps must lie in (0, 0.5)".into()));
    }
    let z = sub.generator().matrix();
    // contracting axis: the coordinate with the smaller eigenvalue
    let contracting_is_second = z.at(1, 1) < z.at(0, 0);
    if (z.at(0, 0) - z.at(1, 1)).abs() < S::of(1e-12) {
        return Err(CoreError::InvalidInput("flow has no contracting direction".into()));
    }
    let target_angle = if contracting_is_second {
        S::PI() * S::of(0.5)
    } else {
        S::zero()
    };

    let xr = x.reduce()?;
    let bound = S::of(2.0) / eps;
    let half_angle = eps * S::of(0.5);
    let mut best: Option<(S, S)> = None; // (norm2, rotation needed)
    for (m, n, v) in lattice_points_in_box(xr.rep().matrix(), bound, bound) {
        let norm2 = v[0] * v[0] + v[1] * v[1];
        if norm2 > bound * bound || m.gcd(&n) != 1 {
            continue;
        }
        let theta = v[1].atan2(v[0]);
        // angle of the line through v, in [0, pi)
        let mut line = theta;
        while line < S::zero() {
            line = line + S::PI();
        }
        while line >= S::PI() {
            line = line - S::PI();
        }
        let mut delta = target_angle - line;
        if delta > S::PI() * S::of(0.5) {
            delta = delta - S::PI();
        }
        if delta < -S::PI() * S::of(0.5) {
            delta = delta + S::PI();
        }
        if delta.abs() <= half_angle && best.map_or(true, |(bn, _)| norm2 < bn) {
            best = Some((norm2, delta));
        }
    }
    let (_, delta) = best.ok_or(CoreError::NoAlignedVector {
        max_angle: half_angle.as_f64(),
        norm_bound: bound.as_f64(),
    })?;
    let g = GroupElement::rotation2(delta);
    Ok(xr.apply(&g))
}

// ---------------------------------------------------------------------------
// Event-based horocycle observables (n = 2)
// ---------------------------------------------------------------------------

/// A predicted cusp excursion of the horocycle orbit: peak time and peak
/// depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorocycleEvent<S> {
    pub time: S,
    pub depth: S,
}

/// All excursions of s -> D(h_s x) on (0, s_max] with peak depth >= 4,
/// sorted by time, computed from the lattice vectors directly.
///
/// A vector v contributes the excursion time s* = -v_x / v_y and peak depth
/// 2 log(1/|v_y|); this costs area/covolume enumeration work instead of a
/// dense time sweep, so horizons of 1e7 and beyond stay cheap.
pub fn horocycle_excursion_events<S: Scalar>(
    x: &LatticePoint<S>,
    s_max: S,
) -> Result<Vec<HorocycleEvent<S>>, CoreError> {
    let xr = x.reduce()?;
    let basis = xr.rep().matrix();
    let vy_max = S::of((-EVENT_DEPTH_FLOOR / 2.0).exp());
    let mut events = Vec::new();
    for (_, _, v) in lattice_points_in_box(basis, (s_max + S::one()) * vy_max, vy_max) {
        let (vx, vy) = (v[0], v[1]);
        if vy == S::zero() {
            continue;
        }
        let s_star = -vx / vy;
        if s_star > S::zero() && s_star <= s_max {
            events.push(HorocycleEvent {
                time: s_star,
                depth: -S::of(2.0) * vy.abs().ln(),
            });
        }
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
    // +/- v give the same event; drop duplicates
    events.dedup_by(|a, b| (a.time - b.time).abs() < S::of(1e-9) && (a.depth - b.depth).abs() < S::of(1e-9));
    Ok(events)
}

/// M(s) = sup_{0 < u <= s} D(h_u x) at each of the given increasing
/// horizons, via the event scan. Depths below the event floor (4) are
/// reported as max(D(x), partial information); exact whenever the result is
/// at least 4.
pub fn horocycle_running_max_at<S: Scalar>(
    x: &LatticePoint<S>,
    horizons: &[S],
) -> Result<Vec<S>, CoreError> {
    for w in horizons.windows(2) {
        if !(w[0] < w[1]) {
            return Err(CoreError::InvalidInput("horizons must be increasing".into()));
        }
    }
    let &s_max = horizons.last().ok_or_else(|| {
        CoreError::InvalidInput("need at least one horizon".into())
    })?;
    if !(s_max > S::zero()) {
        return Err(CoreError::InvalidInput("horizons must be positive".into()));
    }
    let d0 = x.cusp_depth()?;
    let events = horocycle_excursion_events(x, s_max)?;
    // suffix maxima of peak depths, for the flank search
    let mut suffix_max = vec![S::neg_infinity(); events.len() + 1];
    for (i, e) in events.iter().enumerate().rev() {
        suffix_max[i] = suffix_max[i + 1].max(e.depth);
    }

    let mut out = Vec::with_capacity(horizons.len());
    let mut run = d0;
    let mut next_event = 0usize;
    for &s in horizons {
        while next_event < events.len() && events[next_event].time <= s {
            run = run.max(events[next_event].depth);
            next_event += 1;
        }
        // rising flanks of events beyond the horizon
        let mut best = run;
        let mut i = next_event;
        while i < events.len() {
            let gap = events[i].time - s;
            // even the deepest remaining peak cannot beat `best` from here on
            if suffix_max[i] - (S::one() + gap * gap).ln() <= best {
                break;
            }
            let flank = events[i].depth - (S::one() + gap * gap).ln();
            best = best.max(flank);
            i += 1;
        }
        out.push(best);
    }
    Ok(out)
}

/// Largest horocycle depth up to `s_max`: M(s_max) through the event scan.
pub fn horocycle_max_depth<S: Scalar>(x: &LatticePoint<S>, s_max: S) -> Result<S, CoreError> {
    Ok(horocycle_running_max_at(x, &[s_max])?[0])
}

/// The point whose forward horocycle orbit mirrors the reversed orbit of x:
/// D(h_u reflect(x)) = D(h_{-u} x) for all u.
///
/// Conjugating by diag(1, -1) reverses the shear; negating one basis column
/// restores determinant +1 without changing the lattice.
pub fn horocycle_reflect<S: Scalar>(x: &LatticePoint<S>) -> LatticePoint<S> {
    let m = x.rep().matrix();
    let reflected = SquareMatrix::from_rows(&[
        vec![m.at(0, 0), -m.at(0, 1)],
        vec![-m.at(1, 0), m.at(1, 1)],
    ]);
    LatticePoint::new(
        GroupElement::project_unimodular(reflected).expect("reflection keeps det 1"),
    )
}
