//! Exact small-matrix Lie theory for SL(n,R), n = 2 or 3: one-parameter
//! subgroups with closed-form exponentials, the Cartan (KAK) decomposition,
//! the symmetric-space distance at the basepoint, and linear drift rates.
//!
//! The distance is normalized so that SL(2,R) projects onto the curvature -1
//! hyperbolic plane: the standard geodesic subgroup then has drift exactly 1
//! and the cusp-tail exponent is 1, so the slopes of the logarithm laws
//! appear with no extra constants.

use crate::error::CoreError;
use crate::matrix::{jacobi_symmetric_eigen, SquareMatrix};
use crate::scalar::Scalar;

/// Largest entry magnitude tolerated before signalling overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// An element of SL(n,R): an n-by-n matrix of determinant 1 (within 1e-9).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement<S> {
    mat: SquareMatrix<S>,
}

impl<S: Scalar> GroupElement<S> {
    /// Wrap a matrix, checking the determinant invariant.
    pub fn new(mat: SquareMatrix<S>) -> Result<Self, CoreError> {
        let det = mat.det();
        if (det - S::one()).abs() > S::of(1e-9) {
            return Err(CoreError::InvalidInput(format!(
                "determinant {} is not 1 within 1e-9",
                det.as_f64()
            )));
        }
        Ok(Self { mat })
    }

    /// Wrap a matrix after rescaling it to determinant exactly 1.
    ///
    /// For n = 2 the determinant must be positive; for n = 3 the signed cube
    /// root handles both signs.
    pub fn project_unimodular(mat: SquareMatrix<S>) -> Result<Self, CoreError> {
        let det = mat.det();
        if !det.is_finite() || det.abs() < S::of(1e-100) {
            return Err(CoreError::InvalidInput(format!(
                "matrix is numerically singular (det = {})",
                det.as_f64()
            )));
        }
        let scale = match mat.dim() {
            2 => {
                if det <= S::zero() {
                    return Err(CoreError::InvalidInput(
                        "negative determinant cannot be scaled into SL(2)".into(),
                    ));
                }
                det.sqrt()
            }
            _ => det.signum() * det.abs().cbrt(),
        };
        Ok(Self { mat: mat.scale(S::one() / scale) })
    }

    pub fn identity(n: usize) -> Self {
        Self { mat: SquareMatrix::identity(n) }
    }

    /// Wrap without checking the invariant; for results whose determinant
    /// is 1 by construction.
    pub(crate) fn new_unchecked(mat: SquareMatrix<S>) -> Self {
        Self { mat }
    }

    /// Rotation by `angle`, n = 2.
    pub fn rotation2(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            mat: SquareMatrix::from_rows(&[vec![c, -s], vec![s, c]]),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &SquareMatrix<S> {
        &self.mat
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self { mat: self.mat.mul(&rhs.mat) }
    }

    pub fn inverse(&self) -> Self {
        Self { mat: self.mat.inverse() }
    }

    pub fn transpose(&self) -> Self {
        Self { mat: self.mat.transpose() }
    }

    pub fn det(&self) -> S {
        self.mat.det()
    }
}

/// Structural kind of a Lie-algebra element; each kind has a closed-form
/// exponential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieAlgebraKind {
    Diagonal,
    UpperUnipotent,
    LowerUnipotent,
    Rotation,
    Generic,
}

/// Traceless n-by-n matrix tagged with its structural kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieAlgebraElement<S> {
    mat: SquareMatrix<S>,
    kind: LieAlgebraKind,
}

impl<S: Scalar> LieAlgebraElement<S> {
    fn check_traceless(mat: &SquareMatrix<S>) -> Result<(), CoreError> {
        if mat.trace().abs() > S::of(1e-12) {
            return Err(CoreError::InvalidInput(format!(
                "trace {} is not 0 within 1e-12",
                mat.trace().as_f64()
            )));
        }
        Ok(())
    }

    /// Diagonal generator with the given diagonal (must sum to 0).
    pub fn diagonal(entries: &[S]) -> Result<Self, CoreError> {
        let n = entries.len();
        let mut mat = SquareMatrix::zero(n);
        for (i, &e) in entries.iter().enumerate() {
            mat.set(i, i, e);
        }
        Self::check_traceless(&mat)?;
        Ok(Self { mat, kind: LieAlgebraKind::Diagonal })
    }

    /// Strictly upper-triangular generator. For n = 2 pass `[e12]`, for
    /// n = 3 pass `[e12, e13, e23]`.
    pub fn upper_unipotent(n: usize, entries: &[S]) -> Self {
        let mut mat = SquareMatrix::zero(n);
        match n {
            2 => mat.set(0, 1, entries[0]),
            _ => {
                mat.set(0, 1, entries[0]);
                mat.set(0, 2, entries[1]);
                mat.set(1, 2, entries[2]);
            }
        }
        Self { mat, kind: LieAlgebraKind::UpperUnipotent }
    }

    /// Strictly lower-triangular generator, mirrored layout of
    /// [`Self::upper_unipotent`].
    pub fn lower_unipotent(n: usize, entries: &[S]) -> Self {
        let mut mat = SquareMatrix::zero(n);
        match n {
            2 => mat.set(1, 0, entries[0]),
            _ => {
                mat.set(1, 0, entries[0]);
                mat.set(2, 0, entries[1]);
                mat.set(2, 1, entries[2]);
            }
        }
        Self { mat, kind: LieAlgebraKind::LowerUnipotent }
    }

    /// Skew-symmetric generator: `rotation(&[w])` for n = 2,
    /// `rotation(&[w1, w2, w3])` (axis vector) for n = 3.
    pub fn rotation(params: &[S]) -> Self {
        let mat = match params.len() {
            1 => {
                let w = params[0];
                SquareMatrix::from_rows(&[vec![S::zero(), -w], vec![w, S::zero()]])
            }
            _ => {
                let (w1, w2, w3) = (params[0], params[1], params[2]);
                SquareMatrix::from_rows(&[
                    vec![S::zero(), -w3, w2],
                    vec![w3, S::zero(), -w1],
                    vec![-w2, w1, S::zero()],
                ])
            }
        };
        Self { mat, kind: LieAlgebraKind::Rotation }
    }

    /// Arbitrary traceless generator; exponentiated numerically.
    pub fn generic(mat: SquareMatrix<S>) -> Result<Self, CoreError> {
        Self::check_traceless(&mat)?;
        Ok(Self { mat, kind: LieAlgebraKind::Generic })
    }

    #[inline]
    pub fn kind(&self) -> LieAlgebraKind {
        self.kind
    }

    #[inline]
    pub fn matrix(&self) -> &SquareMatrix<S> {
        &self.mat
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }
}

/// One-parameter subgroup t -> exp(t z), with the drift rate cached when it
/// has a closed form.
#[derive(Debug, Clone, Copy)]
pub struct OneParamSubgroup<S> {
    generator: LieAlgebraElement<S>,
    drift: Option<S>,
}

impl<S: Scalar> OneParamSubgroup<S> {
    pub fn new(generator: LieAlgebraElement<S>) -> Self {
        let drift = match generator.kind() {
            LieAlgebraKind::Diagonal => {
                let n = generator.dim();
                let sum: S = (0..n)
                    .map(|i| generator.matrix().at(i, i).powi(2))
                    .sum();
                Some((S::of(2.0) * sum).sqrt())
            }
            LieAlgebraKind::UpperUnipotent
            | LieAlgebraKind::LowerUnipotent
            | LieAlgebraKind::Rotation => Some(S::zero()),
            LieAlgebraKind::Generic => None,
        };
        Self { generator, drift }
    }

    #[inline]
    pub fn generator(&self) -> &LieAlgebraElement<S> {
        &self.generator
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    /// Cached drift rate, if the generator kind has a closed form.
    #[inline]
    pub fn cached_drift(&self) -> Option<S> {
        self.drift
    }

    /// Subgroup with the negated generator (time reversal).
    pub fn reversed(&self) -> Self {
        let mat = self.generator.matrix().scale(-S::one());
        let generator = LieAlgebraElement { mat, kind: self.generator.kind };
        Self { generator, drift: self.drift }
    }

    /// The geodesic subgroup: diag(1/2, -1/2) for n = 2 (unit drift),
    /// diag(1, 0, -1) for n = 3 (drift 2).
    pub fn geodesic(n: usize) -> Self {
        let gen = match n {
            2 => LieAlgebraElement::diagonal(&[S::of(0.5), S::of(-0.5)]).expect("traceless"),
            _ => LieAlgebraElement::diagonal(&[S::one(), S::zero(), -S::one()]).expect("traceless"),
        };
        Self::new(gen)
    }

    /// The standard horocycle subgroup h_s (n = 2).
    pub fn horocycle() -> Self {
        Self::new(LieAlgebraElement::upper_unipotent(2, &[S::one()]))
    }

    /// One-parameter unipotent subgroup of SL(3) through the embedded
    /// SL(2) block: exp(t E12).
    pub fn unipotent_embedded3() -> Self {
        Self::new(LieAlgebraElement::upper_unipotent(
            3,
            &[S::one(), S::zero(), S::zero()],
        ))
    }
}

fn check_overflow<S: Scalar>(mat: &SquareMatrix<S>) -> Result<(), CoreError> {
    let m = mat.max_abs();
    if !mat.is_finite() || m > S::of(OVERFLOW_LIMIT) {
        return Err(CoreError::Overflow { magnitude: m.as_f64() });
    }
    Ok(())
}

/// exp(t z) for the subgroup's generator z, by the closed form of its kind.
///
/// Diagonal: entrywise exponential. Unipotent: the polynomial (the series
/// terminates at degree 2 for n <= 3). Rotation: sine/cosine (Rodrigues for
/// n = 3). Generic: scaling and squaring to 1e-12.
pub fn exp_one_param<S: Scalar>(
    sub: &OneParamSubgroup<S>,
    t: S,
) -> Result<GroupElement<S>, CoreError> {
    if !t.is_finite() {
        return Err(CoreError::InvalidInput("flow time must be finite".into()));
    }
    let z = sub.generator();
    let n = z.dim();
    let mat = match z.kind() {
        LieAlgebraKind::Diagonal => {
            let mut m = SquareMatrix::zero(n);
            for i in 0..n {
                m.set(i, i, (t * z.matrix().at(i, i)).exp());
            }
            m
        }
        LieAlgebraKind::UpperUnipotent | LieAlgebraKind::LowerUnipotent => {
            let nmat = z.matrix().scale(t);
            let mut m = SquareMatrix::identity(n).add(&nmat);
            if n == 3 {
                m = m.add(&nmat.mul(&nmat).scale(S::of(0.5)));
            }
            m
        }
        LieAlgebraKind::Rotation => rotation_exp(z.matrix(), t),
        LieAlgebraKind::Generic => generic_exp(&z.matrix().scale(t))?,
    };
    check_overflow(&mat)?;
    // det of exp(tz) is 1 in exact arithmetic. Renormalize only when the
    // measured deviation exceeds the evaluation noise of the determinant
    // itself (~eps * entry^2); rescaling by a noisy determinant would
    // degrade an exponential that is already accurate.
    let det = mat.det();
    let noise = S::epsilon() * S::of(8.0) * mat.max_abs().powi(2).max(S::one());
    if (det - S::one()).abs() <= noise {
        Ok(GroupElement::new_unchecked(mat))
    } else {
        GroupElement::project_unimodular(mat)
    }
}

fn rotation_exp<S: Scalar>(z: &SquareMatrix<S>, t: S) -> SquareMatrix<S> {
    let n = z.dim();
    if n == 2 {
        let w = z.at(1, 0);
        let (s, c) = (t * w).sin_cos();
        return SquareMatrix::from_rows(&[vec![c, -s], vec![s, c]]);
    }
    // Rodrigues: exp(tK) = I + sin(t|w|)/|w| K + (1-cos(t|w|))/|w|^2 K^2
    let (w1, w2, w3) = (z.at(2, 1), z.at(0, 2), z.at(1, 0));
    let norm = (w1 * w1 + w2 * w2 + w3 * w3).sqrt();
    if norm == S::zero() {
        return SquareMatrix::identity(3);
    }
    let (s, c) = (t * norm).sin_cos();
    let k = *z;
    let k2 = k.mul(&k);
    SquareMatrix::identity(3)
        .add(&k.scale(s / norm))
        .add(&k2.scale((S::one() - c) / (norm * norm)))
}

/// Numerical exponential for a generic traceless matrix: closed form for
/// n = 2 (any traceless 2x2 satisfies M^2 = (a^2 + bc) I), scaling and
/// squaring for n = 3.
fn generic_exp<S: Scalar>(m: &SquareMatrix<S>) -> Result<SquareMatrix<S>, CoreError> {
    let norm = m.frobenius_norm();
    if !norm.is_finite() {
        return Err(CoreError::Overflow { magnitude: norm.as_f64() });
    }
    if m.dim() == 2 {
        // traceless 2x2: M^2 = mu^2 I with mu^2 = a^2 + bc
        let (a, b, c) = (m.at(0, 0), m.at(0, 1), m.at(1, 0));
        let mu2 = a * a + b * c;
        let scale2 = norm * norm;
        if mu2 < -S::of(1e-12) * scale2 {
            // elliptic: cos/sin closed form, entries stay order one
            let nu = (-mu2).sqrt();
            return Ok(SquareMatrix::identity(2)
                .scale(nu.cos())
                .add(&m.scale(nu.sin() / nu)));
        }
        if mu2 > S::of(1e-4) * scale2 {
            // hyperbolic with well-separated eigenvalues: diagonalize so the
            // small entries are never formed by cancellation
            let mu = mu2.sqrt();
            let pick = |x: S, y: S, p: S, q: S| {
                if x * x + y * y >= p * p + q * q {
                    [x, y]
                } else {
                    [p, q]
                }
            };
            let vp = pick(b, mu - a, mu + a, c);
            let vm = pick(b, -mu - a, a - mu, c);
            let det_v = vp[0] * vm[1] - vp[1] * vm[0];
            let (ep, em) = (mu.exp(), (-mu).exp());
            let entry = |i: usize, j: usize| {
                // (V diag(ep, em) V^{-1})_{ij}; V^{-1} = adj(V)/det
                let wp = [vm[1] / det_v, -vm[0] / det_v];
                let wm = [-vp[1] / det_v, vp[0] / det_v];
                ep * vp[i] * wp[j] + em * vm[i] * wm[j]
            };
            return Ok(SquareMatrix::from_fn(2, entry));
        }
        // near-defective: fall through to scaling and squaring
    }
    let mut squarings = 0u32;
    let mut scaled = *m;
    if norm > S::of(0.125) {
        squarings = (norm / S::of(0.125)).log2().ceil().as_f64() as u32 + 1;
        let factor = S::of(0.5).powi(squarings as i32);
        scaled = m.scale(factor);
    }
    let n = m.dim();
    let mut acc = SquareMatrix::identity(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=40 {
        term = term.mul(&scaled).scale(S::one() / S::of_usize(k));
        acc = acc.add(&term);
        if term.max_abs() <= acc.max_abs() * S::epsilon() {
            break;
        }
    }
    for _ in 0..squarings {
        acc = acc.mul(&acc);
        check_overflow(&acc)?;
    }
    Ok(acc)
}

/// Cartan decomposition g = k1 a k2 with k1, k2 in SO(n) and a diagonal
/// with nonincreasing positive diagonal of product 1.
#[derive(Debug, Clone)]
pub struct KakDecomposition<S> {
    pub k1: GroupElement<S>,
    pub a: GroupElement<S>,
    pub k2: GroupElement<S>,
}

impl<S: Scalar> KakDecomposition<S> {
    /// The singular values, largest first.
    pub fn singular_values(&self) -> Vec<S> {
        (0..self.a.dim()).map(|i| self.a.matrix().at(i, i)).collect()
    }

    pub fn reconstruct(&self) -> GroupElement<S> {
        self.k1.mul(&self.a).mul(&self.k2)
    }
}

/// Cartan (KAK) decomposition via the spectral decomposition of g^T g.
///
/// The smallest singular value is recovered from the determinant relation
/// rather than from its (possibly unresolved) eigenvalue, and the matching
/// column of k1 is completed by orthogonality, so the decomposition stays
/// accurate for strongly stretched inputs.
pub fn kak<S: Scalar>(g: &GroupElement<S>) -> KakDecomposition<S> {
    let n = g.dim();
    let gram = g.matrix().transpose().mul(g.matrix());
    let (vals, vecs) = jacobi_symmetric_eigen(&gram);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).expect("finite eigenvalues"));

    let mut v = SquareMatrix::zero(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        v.set_col(new_col, &vecs.col(old_col));
    }
    // Jacobi keeps det(V) = +1; an odd sorting permutation flips it.
    if permutation_is_odd(&order) {
        let flipped: Vec<S> = v.col(n - 1).iter().map(|&x| -x).collect();
        v.set_col(n - 1, &flipped);
    }

    let mut sigma: Vec<S> = order.iter().map(|&i| vals[i].max(S::zero()).sqrt()).collect();
    // pin the product to 1 through the smallest value
    let leading: S = sigma[..n - 1].iter().fold(S::one(), |a, &b| a * b);
    sigma[n - 1] = S::one() / leading;

    // u_i = g v_i / sigma_i for the well-conditioned columns
    let mut u = SquareMatrix::zero(n);
    for j in 0..n - 1 {
        let gv = g.matrix().mul_vec(&v.col(j));
        let col: Vec<S> = gv.iter().map(|&x| x / sigma[j]).collect();
        u.set_col(j, &col);
    }
    if n == 2 {
        let c0 = u.col(0);
        u.set_col(1, &[-c0[1], c0[0]]);
    } else {
        let (a, b) = (u.col(0), u.col(1));
        u.set_col(
            2,
            &[
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ],
        );
    }

    let mut a_mat = SquareMatrix::zero(n);
    for i in 0..n {
        a_mat.set(i, i, sigma[i]);
    }
    KakDecomposition {
        k1: GroupElement { mat: u },
        a: GroupElement { mat: a_mat },
        k2: GroupElement { mat: v.transpose() },
    }
}

fn permutation_is_odd(perm: &[usize]) -> bool {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

/// Distance from the identity coset in the symmetric space K\G:
/// sqrt(2) times the l2-norm of the log singular values.
///
/// For n = 2 this equals the curvature -1 hyperbolic distance between i and
/// the projection of g, so the geodesic subgroup has unit speed. Entries of
/// any magnitude are handled by pre-scaling, so the function is total on
/// finite input.
pub fn symmetric_distance<S: Scalar>(g: &GroupElement<S>) -> S {
    let n = g.dim();
    let scale = g.matrix().max_abs().max(S::one());
    let gs = g.matrix().scale(S::one() / scale);
    if n == 2 {
        // largest eigenvalue of the scaled Gram matrix, closed form
        let t = gs.frobenius_norm().powi(2);
        let d = gs.det();
        let disc = (t * t - S::of(4.0) * d * d).max(S::zero());
        let lam = (t + disc.sqrt()) * S::of(0.5);
        let log_sigma1 = S::of(0.5) * lam.ln() + scale.ln();
        // log sigma2 = -log sigma1
        return S::of(2.0) * log_sigma1.abs();
    }
    // n = 3: sigma1 from g, sigma3 from the adjugate (inverse up to det),
    // sigma2 from the determinant relation.
    let lam1 = lambda_max(&gs.transpose().mul(&gs));
    let log_sigma1 = S::of(0.5) * lam1.ln() + scale.ln();
    let adj = adjugate_scaled(&gs);
    let adj_scale = adj.max_abs().max(S::of(1e-100));
    let adj_s = adj.scale(S::one() / adj_scale);
    let lam_adj = lambda_max(&adj_s.transpose().mul(&adj_s));
    // adj(g/scale) = adj(g)/scale^2 and sigma_max(adj(g)) = 1/sigma3(g)
    let log_inv_sigma3 = S::of(0.5) * lam_adj.ln() + adj_scale.ln() + S::of(2.0) * scale.ln();
    let log_sigma3 = -log_inv_sigma3;
    let log_sigma2 = -log_sigma1 - log_sigma3;
    let sum = log_sigma1 * log_sigma1 + log_sigma2 * log_sigma2 + log_sigma3 * log_sigma3;
    (S::of(2.0) * sum).sqrt()
}

fn lambda_max<S: Scalar>(sym: &SquareMatrix<S>) -> S {
    let (vals, _) = jacobi_symmetric_eigen(sym);
    vals.into_iter().fold(S::zero(), |a, b| a.max(b))
}

/// Adjugate of a 3x3 matrix (inverse times determinant).
fn adjugate_scaled<S: Scalar>(m: &SquareMatrix<S>) -> SquareMatrix<S> {
    let c = |i: usize, j: usize| -> S {
        let r = [(i + 1) % 3, (i + 2) % 3];
        let s = [(j + 1) % 3, (j + 2) % 3];
        m.at(r[0], s[0]) * m.at(r[1], s[1]) - m.at(r[0], s[1]) * m.at(r[1], s[0])
    };
    SquareMatrix::from_fn(3, |i, j| c(j, i))
}

/// Linear escape rate of exp(t z) into the symmetric space.
///
/// Closed form for diagonal generators (sqrt(2) times the l2-norm of the
/// diagonal), zero for unipotent and rotation kinds, and a Richardson
/// estimate at t = 100 / t = 200 for generic kinds.
pub fn drift_rate<S: Scalar>(sub: &OneParamSubgroup<S>) -> Result<S, CoreError> {
    if let Some(nu) = sub.cached_drift() {
        return Ok(nu);
    }
    let d100 = symmetric_distance(&exp_one_param(sub, S::of(100.0))?) / S::of(100.0);
    let d200 = symmetric_distance(&exp_one_param(sub, S::of(200.0))?) / S::of(200.0);
    let denom = d200.abs().max(S::of(1e-30));
    if ((d200 - d100) / denom).abs() > S::of(1e-3) {
        return Err(CoreError::NonConvergence {
            first: d100.as_f64(),
            second: d200.as_f64(),
        });
    }
    // Richardson: cancel the O(1/t) term
    Ok(S::of(2.0) * d200 - d100)
}
