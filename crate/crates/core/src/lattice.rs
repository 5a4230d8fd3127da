//! The phase space SL(n,R)/SL(n,Z): unimodular lattices kept in reduced
//! form, the shortest-vector observable and the cusp-depth function built on
//! it, and exact hyperbolic geometry for n = 2.
//!
//! A point is a coset representative; reduction replaces it by rep * gamma
//! with gamma an integer matrix of determinant +1, so all observables are
//! coset functions. Cusp depth is D = max(0, 2 log(1/alpha1)) where alpha1
//! is the shortest-vector length; with the crate's metric normalization this
//! tracks the distance to the basepoint up to a bounded error.

use crate::error::CoreError;
use crate::group::GroupElement;
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// Lovasz parameter for the n = 3 reduction.
const LLL_DELTA: f64 = 0.99;

/// A unimodular lattice: coset representative plus a reduction flag.
#[derive(Debug, Clone, Copy)]
pub struct LatticePoint<S> {
    rep: GroupElement<S>,
    reduced: bool,
}

impl<S: Scalar> LatticePoint<S> {
    pub fn new(rep: GroupElement<S>) -> Self {
        Self { rep, reduced: false }
    }

    pub fn standard(n: usize) -> Self {
        Self { rep: GroupElement::identity(n), reduced: true }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    #[inline]
    pub fn rep(&self) -> &GroupElement<S> {
        &self.rep
    }

    #[inline]
    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Left action x -> g x. The result is no longer marked reduced.
    pub fn apply(&self, g: &GroupElement<S>) -> Self {
        Self { rep: g.mul(&self.rep), reduced: false }
    }

    /// Replace the representative by rep * gamma (same coset).
    pub fn right_multiply(&self, gamma: &SquareMatrix<S>) -> Self {
        Self {
            rep: GroupElement::project_unimodular(self.rep.matrix().mul(gamma))
                .expect("integer right factor keeps det 1"),
            reduced: false,
        }
    }

    /// Reduce the representative: Gauss for n = 2, LLL (delta = 0.99) for
    /// n = 3. Signals precision loss if the determinant drifted beyond 1e-6
    /// before renormalization.
    pub fn reduce(&self) -> Result<Self, CoreError> {
        if self.reduced {
            return Ok(*self);
        }
        let det = self.rep.matrix().det();
        if !det.is_finite() || (det - S::one()).abs() > S::of(1e-6) {
            return Err(CoreError::PrecisionLoss { det: det.as_f64() });
        }
        let renormalized = GroupElement::project_unimodular(*self.rep.matrix())?;
        let mat = match self.dim() {
            2 => gauss_reduce(renormalized.matrix()).0,
            _ => lll_reduce(renormalized.matrix(), S::of(LLL_DELTA)),
        };
        Ok(Self {
            rep: GroupElement::project_unimodular(mat)?,
            reduced: true,
        })
    }

    /// A nonzero lattice vector of minimal Euclidean norm, with its norm.
    pub fn shortest_vector(&self) -> Result<(Vec<S>, S), CoreError> {
        let reduced = self.reduce()?;
        let m = reduced.rep.matrix();
        Ok(match self.dim() {
            2 => shortest_vector_2(m),
            _ => shortest_vector_3(m),
        })
    }

    /// Cusp depth D = max(0, 2 log(1/alpha1)).
    pub fn cusp_depth(&self) -> Result<S, CoreError> {
        let (_, alpha1) = self.shortest_vector()?;
        Ok((-S::of(2.0) * alpha1.ln()).max(S::zero()))
    }

    /// Project to the upper half-plane (n = 2 only), right-coset convention:
    /// the image of g is fixed by rotations on the left and moves by integer
    /// Moebius maps when the representative changes within its coset.
    pub fn project_h2(&self) -> UpperHalfPoint<S> {
        assert_eq!(self.dim(), 2, "project_h2 is defined for n = 2");
        let g = self.rep.matrix();
        let (a, b, c, d) = (g.at(0, 0), g.at(0, 1), g.at(1, 0), g.at(1, 1));
        let denom = b * b + d * d;
        let re = (a * b + c * d) / denom;
        let im = S::one() / denom;
        let mut angle = c.atan2(a);
        if angle < S::zero() {
            angle = angle + S::of(2.0) * S::PI();
        }
        UpperHalfPoint { re, im, frame_angle: angle }
    }
}

/// A point of the upper half-plane together with a frame direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPoint<S> {
    pub re: S,
    pub im: S,
    pub frame_angle: S,
}

impl<S: Scalar> UpperHalfPoint<S> {
    pub fn new(re: S, im: S, frame_angle: S) -> Self {
        assert!(im > S::zero(), "upper half-plane needs Im z > 0");
        Self { re, im, frame_angle }
    }

    pub fn basepoint() -> Self {
        Self { re: S::zero(), im: S::one(), frame_angle: S::zero() }
    }

    /// Translate into the standard fundamental domain of SL(2,Z)
    /// (|Re z| <= 1/2, |z| >= 1).
    pub fn reduce_to_fundamental_domain(&self) -> Self {
        let mut re = self.re;
        let mut im = self.im;
        for _ in 0..10_000 {
            re = re - re.round();
            let norm2 = re * re + im * im;
            if norm2 >= S::one() - S::of(1e-15) {
                break;
            }
            // z -> -1/z
            re = -re / norm2;
            im = im / norm2;
        }
        Self { re, im, frame_angle: self.frame_angle }
    }

    /// Distance to the basepoint i in the quotient surface, computed through
    /// the fundamental-domain representative.
    pub fn distance_to_basepoint_mod_gamma(&self) -> S {
        let f = self.reduce_to_fundamental_domain();
        hyperbolic_distance(&f, &UpperHalfPoint::basepoint())
    }
}

/// Curvature -1 distance: arccosh(1 + |z1-z2|^2 / (2 Im z1 Im z2)).
pub fn hyperbolic_distance<S: Scalar>(z1: &UpperHalfPoint<S>, z2: &UpperHalfPoint<S>) -> S {
    let dx = z1.re - z2.re;
    let dy = z1.im - z2.im;
    let arg = S::one() + (dx * dx + dy * dy) / (S::of(2.0) * z1.im * z2.im);
    arg.max(S::one()).acosh()
}

fn col_norm2<S: Scalar>(m: &SquareMatrix<S>, j: usize) -> S {
    (0..m.dim()).map(|i| m.at(i, j) * m.at(i, j)).sum()
}

fn col_dot<S: Scalar>(m: &SquareMatrix<S>, j: usize, k: usize) -> S {
    (0..m.dim()).map(|i| m.at(i, j) * m.at(i, k)).sum()
}

/// Lagrange-Gauss reduction of a 2-column basis, using only determinant +1
/// column operations. Also returns the integer transform U with
/// reduced = input * U.
pub fn gauss_reduce<S: Scalar>(m: &SquareMatrix<S>) -> (SquareMatrix<S>, [[i64; 2]; 2]) {
    let mut b = *m;
    let mut u = [[1i64, 0], [0, 1]];
    for _ in 0..10_000 {
        if col_norm2(&b, 0) > col_norm2(&b, 1) {
            // (b1, b2) <- (b2, -b1), det +1
            let c0 = b.col(0);
            let c1 = b.col(1);
            b.set_col(0, &c1);
            b.set_col(1, &[-c0[0], -c0[1]]);
            u = [[u[0][1], -u[0][0]], [u[1][1], -u[1][0]]];
        }
        let mu = (col_dot(&b, 0, 1) / col_norm2(&b, 0)).round();
        if mu == S::zero() && col_norm2(&b, 0) <= col_norm2(&b, 1) {
            break;
        }
        let mu_i = mu.as_f64() as i64;
        let c0 = b.col(0);
        let c1 = b.col(1);
        b.set_col(1, &[c1[0] - mu * c0[0], c1[1] - mu * c0[1]]);
        u[0][1] -= mu_i * u[0][0];
        u[1][1] -= mu_i * u[1][0];
    }
    (b, u)
}

fn is_gauss_reduced<S: Scalar>(m: &SquareMatrix<S>) -> bool {
    let n0 = col_norm2(m, 0);
    let n1 = col_norm2(m, 1);
    let dot = col_dot(m, 0, 1).abs();
    n0 <= n1 * (S::one() + S::of(1e-9)) && dot <= n0 * S::of(0.5) * (S::one() + S::of(1e-9))
}

/// LLL reduction of a 3-column basis with determinant +1 column operations.
pub fn lll_reduce<S: Scalar>(m: &SquareMatrix<S>, delta: S) -> SquareMatrix<S> {
    let n = m.dim();
    let mut b = *m;
    let mut k = 1usize;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        // size-reduce b_k against b_{k-1}, ..., b_0
        for j in (0..k).rev() {
            let (_, mu) = gram_schmidt(&b);
            let q = mu[k][j].round();
            if q != S::zero() {
                let cj = b.col(j);
                let ck = b.col(k);
                let new: Vec<S> = (0..n).map(|i| ck[i] - q * cj[i]).collect();
                b.set_col(k, &new);
            }
        }
        let (norm2, mu) = gram_schmidt(&b);
        if norm2[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norm2[k - 1] {
            k += 1;
        } else {
            // (b_{k-1}, b_k) <- (b_k, -b_{k-1}), det +1
            let ck1 = b.col(k - 1);
            let ck = b.col(k);
            b.set_col(k - 1, &ck);
            let neg: Vec<S> = ck1.iter().map(|&x| -x).collect();
            b.set_col(k, &neg);
            k = k.max(2) - 1;
        }
    }
    b
}

/// Gram-Schmidt squared norms and mu coefficients for the columns.
fn gram_schmidt<S: Scalar>(b: &SquareMatrix<S>) -> (Vec<S>, Vec<Vec<S>>) {
    let n = b.dim();
    let mut bstar: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut norm2 = vec![S::zero(); n];
    let mut mu = vec![vec![S::zero(); n]; n];
    for j in 0..n {
        let mut v = b.col(j);
        for i in 0..j {
            let dot: S = (0..n).map(|r| b.at(r, j) * bstar[i][r]).sum();
            mu[j][i] = dot / norm2[i];
            for r in 0..n {
                v[r] = v[r] - mu[j][i] * bstar[i][r];
            }
        }
        norm2[j] = v.iter().map(|&x| x * x).sum();
        bstar.push(v);
    }
    (norm2, mu)
}

fn is_lll_reduced<S: Scalar>(m: &SquareMatrix<S>, delta: S) -> bool {
    let n = m.dim();
    let (norm2, mu) = gram_schmidt(m);
    for j in 0..n {
        for i in 0..j {
            if mu[j][i].abs() > S::of(0.5) + S::of(1e-9) {
                return false;
            }
        }
    }
    for k in 1..n {
        let lhs = norm2[k];
        let rhs = (delta - mu[k][k - 1] * mu[k][k - 1]) * norm2[k - 1];
        if lhs < rhs * (S::one() - S::of(1e-9)) {
            return false;
        }
    }
    true
}

/// Whether the representative satisfies the reduced invariant of its
/// dimension.
pub fn is_reduced_basis<S: Scalar>(m: &SquareMatrix<S>) -> bool {
    match m.dim() {
        2 => is_gauss_reduced(m),
        _ => is_lll_reduced(m, S::of(LLL_DELTA)),
    }
}

/// Exact shortest vector of a Gauss-reduced 2-column basis by a small
/// exhaustive enumeration around the reduced basis.
fn shortest_vector_2<S: Scalar>(m: &SquareMatrix<S>) -> (Vec<S>, S) {
    let mut best = m.col(0);
    let mut best2 = col_norm2(m, 0);
    for c1 in -2i64..=2 {
        for c2 in -2i64..=2 {
            if c1 == 0 && c2 == 0 {
                continue;
            }
            let (f1, f2) = (S::of(c1 as f64), S::of(c2 as f64));
            let v = [
                f1 * m.at(0, 0) + f2 * m.at(0, 1),
                f1 * m.at(1, 0) + f2 * m.at(1, 1),
            ];
            let n2 = v[0] * v[0] + v[1] * v[1];
            if n2 < best2 {
                best2 = n2;
                best = v.to_vec();
            }
        }
    }
    (best, best2.sqrt())
}

/// Exact shortest vector of an LLL-reduced 3-column basis by Fincke-Pohst
/// enumeration with Gram-Schmidt coefficient bounds.
fn shortest_vector_3<S: Scalar>(m: &SquareMatrix<S>) -> (Vec<S>, S) {
    let (norm2, mu) = gram_schmidt(m);
    let mut best2 = (0..3).map(|j| col_norm2(m, j)).fold(S::infinity(), |a, b| a.min(b));
    let mut best = m.col(0);
    if col_norm2(m, 1) < col_norm2(m, 0) {
        best = m.col(1);
    }
    if col_norm2(m, 2) < col_norm2(m, 0).min(col_norm2(m, 1)) {
        best = m.col(2);
    }

    let bound3 = (best2 / norm2[2]).sqrt().as_f64().floor() as i64;
    for c3 in -bound3..=bound3 {
        let f3 = S::of(c3 as f64);
        let used3 = f3 * f3 * norm2[2];
        if used3 > best2 {
            continue;
        }
        let center2 = -mu[2][1] * f3;
        let radius2 = ((best2 - used3) / norm2[1]).sqrt();
        let lo2 = (center2 - radius2).ceil().as_f64() as i64;
        let hi2 = (center2 + radius2).floor().as_f64() as i64;
        for c2 in lo2..=hi2 {
            let f2 = S::of(c2 as f64);
            let t2 = f2 + mu[2][1] * f3;
            let used2 = used3 + t2 * t2 * norm2[1];
            if used2 > best2 {
                continue;
            }
            let center1 = -(mu[1][0] * f2 + mu[2][0] * f3);
            let radius1 = ((best2 - used2) / norm2[0]).sqrt();
            let lo1 = (center1 - radius1).ceil().as_f64() as i64;
            let hi1 = (center1 + radius1).floor().as_f64() as i64;
            for c1 in lo1..=hi1 {
                if c1 == 0 && c2 == 0 && c3 == 0 {
                    continue;
                }
                let f1 = S::of(c1 as f64);
                let v: Vec<S> = (0..3)
                    .map(|i| f1 * m.at(i, 0) + f2 * m.at(i, 1) + f3 * m.at(i, 2))
                    .collect();
                let n2 = v.iter().map(|&x| x * x).sum::<S>();
                if n2 > S::zero() && n2 < best2 {
                    best2 = n2;
                    best = v;
                }
            }
        }
    }
    (best, best2.sqrt())
}

/// Coset representative of the shear lattice [[1, p/q],[0,1]] Z^2 carrying
/// the divergent vector exactly.
///
/// The lattice contains (0, q), which lies on the contracting line of the
/// geodesic flow; the representative is chosen (by an exact integer change
/// of basis plus a time shift t0) so that this vector is the first column
/// of an already-reduced basis with its zero coordinate stored exactly.
/// Floating point preserves an exact zero under the flow but can never
/// recreate one, so this is the only representative class whose divergence
/// stays trackable to depths ~100; slopes are unaffected by the time shift.
pub fn divergent_rational_lattice_2<S: Scalar>(p: i64, q: i64) -> LatticePoint<S> {
    assert!(q >= 1, "denominator must be positive");
    // d = (-p)^{-1} mod q, centered; solves -p d - q c = 1
    let d_raw = mod_inverse(-p.rem_euclid(q), q);
    let mut d = d_raw.rem_euclid(q);
    if 2 * d > q {
        d -= q;
    }
    let t0 = (2.0 * (q as f64).ln()).ceil() + 1.0;
    let contract = S::of((-t0 / 2.0).exp());
    let expand = S::of((t0 / 2.0).exp());
    let col1 = [S::zero(), S::of(q as f64) * contract];
    let col2 = [-expand / S::of(q as f64), S::of(d as f64) * contract];
    let m = SquareMatrix::from_rows(&[vec![col1[0], col2[0]], vec![col1[1], col2[1]]]);
    LatticePoint::new(GroupElement::project_unimodular(m).expect("det 1 by construction"))
}

fn mod_inverse(a: i64, q: i64) -> i64 {
    if q == 1 {
        return 0;
    }
    // extended Euclid
    let (mut old_r, mut r) = (a.rem_euclid(q), q);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    assert_eq!(old_r, 1, "arguments must be coprime");
    old_s.rem_euclid(q)
}

/// Rational lattice in SL(3,R)/SL(3,Z) with a vector exactly on the
/// contracting axis of diag(e^t, 1, e^{-t}): the first basis column is
/// (0, 0, c) with c = cu/cv <= 1; the remaining rational entries are free.
pub fn divergent_rational_lattice_3<S: Scalar>(
    cu: i64,
    cv: i64,
    shear: (i64, i64),
    r1: (i64, i64),
    r2: (i64, i64),
) -> LatticePoint<S> {
    assert!(cu >= 1 && cv >= cu, "need 0 < c = cu/cv <= 1");
    let c = S::of(cu as f64) / S::of(cv as f64);
    let frac = |(a, b): (i64, i64)| S::of(a as f64) / S::of(b as f64);
    let m = SquareMatrix::from_rows(&[
        vec![S::zero(), S::one(), frac(shear)],
        vec![S::zero(), S::zero(), S::one() / c],
        vec![c, frac(r1), frac(r2)],
    ]);
    LatticePoint::new(GroupElement::project_unimodular(m).expect("det 1 by construction"))
}

/// All lattice vectors m*col0 + n*col1 of a 2-column basis lying in the box
/// |v_x| <= wx, |v_y| <= wy, reported as (m, n, v). The zero vector is
/// omitted.
///
/// Cost is proportional to the box area over the covolume, independently of
/// how thin the box is.
pub fn lattice_points_in_box<S: Scalar>(
    basis: &SquareMatrix<S>,
    wx: S,
    wy: S,
) -> Vec<(i64, i64, [S; 2])> {
    assert_eq!(basis.dim(), 2);
    // rescale rows so the box becomes the unit square
    let t = SquareMatrix::from_rows(&[
        vec![basis.at(0, 0) / wx, basis.at(0, 1) / wx],
        vec![basis.at(1, 0) / wy, basis.at(1, 1) / wy],
    ]);
    let (red, u) = gauss_reduce(&t);
    // ||c1 r1 + c2 r2||_2 <= sqrt(2) inside the unit square
    let (norm2, mu) = gram_schmidt(&red);
    let r2 = S::of(2.0);
    let bound2 = (r2 / norm2[1]).sqrt().as_f64().floor() as i64;
    let mut out = Vec::new();
    for c2 in -bound2..=bound2 {
        let f2 = S::of(c2 as f64);
        let used = f2 * f2 * norm2[1];
        if used > r2 {
            continue;
        }
        let center = -mu[1][0] * f2;
        let radius = ((r2 - used) / norm2[0]).sqrt();
        let lo = (center - radius).ceil().as_f64() as i64;
        let hi = (center + radius).floor().as_f64() as i64;
        for c1 in lo..=hi {
            if c1 == 0 && c2 == 0 {
                continue;
            }
            let vx = S::of(c1 as f64) * red.at(0, 0) + f2 * red.at(0, 1);
            let vy = S::of(c1 as f64) * red.at(1, 0) + f2 * red.at(1, 1);
            if vx.abs() <= S::one() && vy.abs() <= S::one() {
                // map reduced coefficients back to the original basis
                let m = u[0][0] * c1 + u[0][1] * c2;
                let n = u[1][0] * c1 + u[1][1] * c2;
                out.push((m, n, [vx * wx, vy * wy]));
            }
        }
    }
    out
}
