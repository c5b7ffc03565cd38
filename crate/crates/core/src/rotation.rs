//! Haar rotations on SO(dim), the complex structure J and the pushforward
//! identities for `O ↦ OᵀAO y`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
pub use crate::stats::sphere_coordinate_cdf;
use crate::stats::ks_test;

/// A reproducible random substream: ChaCha20 keyed by `seed`, on stream
/// `stream_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// The `k`-th child stream. Children of distinct parents or indices get
    /// distinct stream ids under the same key.
    pub fn child(&self, k: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix64(splitmix64(self.stream_id) ^ k),
        }
    }
}

/// An element of SO(dim), orthogonality and orientation checked once at
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix<T: Real> {
    matrix: DMatrix<T>,
}

fn orthogonality_tol<T: Real>(dim: usize) -> T {
    T::tol(1e-12, 8.0 * dim as f64)
}

fn orthogonality_defect<T: Real>(m: &DMatrix<T>) -> T {
    (m.tr_mul(m) - DMatrix::identity(m.ncols(), m.ncols())).amax()
}

impl<T: Real> RotationMatrix<T> {
    /// Checks `‖OᵀO − I‖_max` and `det O = +1`.
    pub fn from_matrix(m: DMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        let defect = orthogonality_defect(&m);
        if defect > orthogonality_tol::<T>(m.nrows()) {
            return Err(Error::NotOrthogonal(defect.as_f64()));
        }
        if m.clone().determinant() < T::zero() {
            return Err(Error::InvalidParameter("determinant is -1".into()));
        }
        Ok(RotationMatrix { matrix: m })
    }

    pub fn identity(dim: usize) -> Self {
        RotationMatrix {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_inner(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn transpose(&self) -> Self {
        RotationMatrix {
            matrix: self.matrix.transpose(),
        }
    }

    /// Rotation by `theta` in the plane of coordinates `i` and `j`.
    pub fn plane(dim: usize, i: usize, j: usize, theta: T) -> Self {
        let mut m = DMatrix::identity(dim, dim);
        let (s, c) = theta.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(j, i)] = s;
        m[(i, j)] = -s;
        RotationMatrix { matrix: m }
    }
}

impl<T: Real> std::ops::Mul for &RotationMatrix<T> {
    type Output = RotationMatrix<T>;

    fn mul(self, rhs: &RotationMatrix<T>) -> RotationMatrix<T> {
        RotationMatrix {
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

fn require_even(dim: usize) -> Result<()> {
    if dim % 2 == 1 {
        Err(Error::OddDimension(dim))
    } else if dim == 0 {
        Err(Error::DimensionTooSmall { dim, min: 2 })
    } else {
        Ok(())
    }
}

/// `J(x, y) = (−y, x)` in the `(x_1..x_n, y_1..y_n)` ordering.
pub fn standard_j<T: Real>(dim: usize) -> Result<DMatrix<T>> {
    require_even(dim)?;
    let n = dim / 2;
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..n {
        j[(n + i, i)] = T::one();
        j[(i, n + i)] = -T::one();
    }
    Ok(j)
}

/// `J·m` without a matrix product: row `x_i` becomes `−row y_i`, row `y_i`
/// becomes `row x_i`.
pub fn apply_j<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows() / 2;
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| if r < n { -m[(r + n, c)] } else { m[(r - n, c)] })
}

/// `J·v` for a vector.
pub fn apply_j_vec<T: Real>(v: &DVector<T>) -> DVector<T> {
    let n = v.len() / 2;
    DVector::from_fn(v.len(), |r, _| if r < n { -v[r + n] } else { v[r - n] })
}

/// `J(O) = OᵀJO`, kept exactly antisymmetric.
pub fn j_of<T: Real>(o: &RotationMatrix<T>) -> DMatrix<T> {
    let m = o.matrix.tr_mul(&apply_j(&o.matrix));
    (&m - m.transpose()) * T::lit(0.5)
}

/// `OᵀAO`.
pub fn conjugate<T: Real>(a: &DMatrix<T>, o: &RotationMatrix<T>) -> Result<DMatrix<T>> {
    if a.nrows() != o.dim() || a.ncols() != o.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0}", o.dim()),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(o.matrix.tr_mul(&(a * &o.matrix)))
}

fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<T> {
    // Column-major fill keeps the draw order independent of the scalar type.
    DMatrix::from_fn(rows, cols, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// Orthonormal `dim × k` frame distributed as the first `k` columns of a Haar
/// rotation (QR of a Gaussian matrix with the R-diagonal sign fix).
pub fn haar_frame<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Result<DMatrix<T>> {
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!("frame of {k} columns in dimension {dim}")));
    }
    loop {
        let g = gaussian_matrix::<T, R>(rng, dim, k);
        let qr = g.qr();
        let r = qr.r();
        let tiny = T::default_epsilon() * T::lit(dim as f64);
        if (0..k).any(|j| r[(j, j)].abs() <= tiny) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..k {
            if r[(j, j)] < T::zero() {
                q.column_mut(j).neg_mut();
            }
        }
        return Ok(q);
    }
}

/// A Haar-distributed element of SO(dim).
pub fn haar_rotation<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<RotationMatrix<T>> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim, min: 2 });
    }
    loop {
        let mut q = haar_frame::<T, R>(rng, dim, dim)?;
        if q.clone().determinant() < T::zero() {
            q.column_mut(dim - 1).neg_mut();
        }
        if orthogonality_defect(&q) <= orthogonality_tol::<T>(dim) {
            return Ok(RotationMatrix { matrix: q });
        }
    }
}

/// Observed and predicted `(t, r)` for `z = OᵀAOy`, `v = Oy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop21Record {
    pub t_obs: f64,
    pub r_obs: f64,
    pub t_pred: f64,
    pub r_pred: f64,
}

impl Prop21Record {
    pub fn max_defect(&self) -> f64 {
        (self.t_obs - self.t_pred).abs().max((self.r_obs - self.r_pred).abs())
    }
}

fn require_unit<T: Real>(y: &DVector<T>) -> Result<()> {
    let n = y.norm();
    if (n - T::one()).abs() > T::tol(1e-9, 16.0) {
        return Err(Error::NotUnit(n.as_f64()));
    }
    Ok(())
}

pub fn prop21_identities<T: Real>(a: &DMatrix<T>, y: &DVector<T>, o: &RotationMatrix<T>) -> Result<Prop21Record> {
    require_unit(y)?;
    if y.len() != o.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("vector of length {}", o.dim()),
            found: y.len().to_string(),
        });
    }
    let z = conjugate(a, o)? * y;
    let t_obs = z.dot(y);
    let r_obs = (&z - y * t_obs).norm();
    let v = &o.matrix * y;
    let av = a * &v;
    let t_pred = av.dot(&v);
    let r_pred = (av.norm_squared() - t_pred * t_pred).max(T::zero()).sqrt();
    Ok(Prop21Record {
        t_obs: t_obs.as_f64(),
        r_obs: r_obs.as_f64(),
        t_pred: t_pred.as_f64(),
        r_pred: r_pred.as_f64(),
    })
}

/// Outcome of the `OᵀJOy` uniformity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityReport {
    pub ks_statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
    /// Largest `|⟨z, y⟩|` seen.
    pub max_tangency: f64,
    /// Largest `||z| − 1|` seen.
    pub max_norm_defect: f64,
}

const PUSHFORWARD_TOL: f64 = 1e-10;

/// Per-sample support check for the `J` pushforward: `z ⟂ y` and `|z| = 1`.
pub fn check_pushforward_sample(z: &DVector<f64>, y: &DVector<f64>) -> Result<(f64, f64)> {
    let tangency = z.dot(y).abs();
    let norm_defect = (z.norm() - 1.0).abs();
    if tangency > PUSHFORWARD_TOL || norm_defect > PUSHFORWARD_TOL {
        return Err(Error::IdentityViolation(format!(
            "|⟨z,y⟩| = {tangency:e}, ||z|-1| = {norm_defect:e}"
        )));
    }
    Ok((tangency, norm_defect))
}

/// A fixed unit vector orthogonal to `y`: the coordinate axis least aligned
/// with `y`, with its `y` component removed.
pub fn fixed_orthogonal(y: &DVector<f64>) -> DVector<f64> {
    let k = y.iter().enumerate().fold(0, |best, (i, v)| if v.abs() < y[best].abs() { i } else { best });
    let mut w = DVector::zeros(y.len());
    w[k] = 1.0;
    w.axpy(-y[k], y, 1.0);
    w.normalize()
}

/// Draws `n` samples `z = OᵀJOy` and tests one coordinate of `z` inside `y⊥`
/// against the uniform law on the unit sphere of `y⊥`.
pub fn pushforward_uniformity_test(stream: &RngStream, dim: usize, y: &DVector<f64>, n: usize) -> Result<UniformityReport> {
    require_even(dim)?;
    if dim < 4 {
        return Err(Error::DimensionTooSmall { dim, min: 4 });
    }
    if n < 100 {
        return Err(Error::InsufficientSamples { needed: 100, got: n });
    }
    require_unit(y)?;
    let w = fixed_orthogonal(y);
    let mut rng = stream.rng();
    let mut coords = Vec::with_capacity(n);
    let (mut max_tangency, mut max_norm_defect) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let o = haar_rotation::<f64, _>(&mut rng, dim)?;
        let z = j_of(&o) * y;
        let (t, d) = check_pushforward_sample(&z, y)?;
        max_tangency = max_tangency.max(t);
        max_norm_defect = max_norm_defect.max(d);
        coords.push(z.dot(&w));
    }
    let m = dim - 1;
    let ks = ks_test(&mut coords, |s| sphere_coordinate_cdf(m, s.clamp(-1.0, 1.0)).unwrap_or(f64::NAN));
    Ok(UniformityReport {
        ks_statistic: ks.statistic,
        p_value: ks.p_value,
        n_samples: n,
        max_tangency,
        max_norm_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use proptest::prelude::{any, prop_assert, proptest};

    #[test]
    fn j_in_dimension_two() {
        assert_eq!(standard_j::<f64>(2).unwrap(), dmatrix![0.0, -1.0; 1.0, 0.0]);
        assert_eq!(standard_j::<f64>(3), Err(Error::OddDimension(3)));
    }

    #[test]
    fn j_squares_to_minus_identity() {
        let j = standard_j::<f64>(4).unwrap();
        assert_eq!(&j * &j, -DMatrix::<f64>::identity(4, 4));
        assert_eq!(j.transpose() * &j, DMatrix::<f64>::identity(4, 4));
        assert_eq!(apply_j(&DMatrix::<f64>::identity(4, 4)), j);
    }

    #[test]
    fn j_is_antisymmetric_isometry() {
        let j = standard_j::<f64>(8).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..100 {
            let x = DVector::from_fn(8, |_, _| rng.sample::<f64, _>(StandardNormal));
            assert!((&j * &x).dot(&x).abs() <= 1e-14 * x.norm_squared());
            assert!(((&j * &x).norm() - x.norm()).abs() <= 1e-14 * x.norm());
            assert_eq!(apply_j_vec(&x), &j * &x);
        }
    }

    #[test]
    fn haar_samples_are_rotations() {
        let mut rng = RngStream::new(2, 0).rng();
        for _ in 0..1000 {
            let o = haar_rotation::<f64, _>(&mut rng, 16).unwrap();
            assert!(orthogonality_defect(o.matrix()) <= 1e-12);
            assert!((o.matrix().clone().determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn haar_entry_mean_vanishes() {
        let mut rng = RngStream::new(3, 0).rng();
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| haar_rotation::<f64, _>(&mut rng, 6).unwrap().matrix()[(0, 0)]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn left_translation_preserves_entry_moments() {
        let mut rng = RngStream::new(4, 0).rng();
        let u = haar_rotation::<f64, _>(&mut rng, 6).unwrap();
        let n = 10_000;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let o = haar_rotation::<f64, _>(&mut rng, 6).unwrap();
            a.push(o.matrix()[(1, 2)]);
            b.push((&u * &o).matrix()[(1, 2)]);
        }
        for power in [1, 2] {
            let ma: Vec<f64> = a.iter().map(|x| x.powi(power)).collect();
            let mb: Vec<f64> = b.iter().map(|x| x.powi(power)).collect();
            let (m1, s1) = mean_se(&ma);
            let (m2, s2) = mean_se(&mb);
            assert!((m1 - m2).abs() < 4.0 * (s1 * s1 + s2 * s2).sqrt(), "moment {power}");
        }
    }

    fn mean_se(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn first_column_is_uniform_on_sphere() {
        let mut rng = RngStream::new(5, 0).rng();
        let mut xs: Vec<f64> = (0..5000).map(|_| haar_rotation::<f64, _>(&mut rng, 16).unwrap().matrix()[(0, 0)]).collect();
        let ks = ks_test(&mut xs, |s| sphere_coordinate_cdf(16, s).unwrap());
        assert!(ks.p_value >= 0.01, "{ks:?}");
    }

    #[test]
    fn conjugation_examples() {
        let mut rng = RngStream::new(6, 0).rng();
        let o = haar_rotation::<f64, _>(&mut rng, 8).unwrap();
        let id = DMatrix::<f64>::identity(8, 8);
        assert!((conjugate(&id, &o).unwrap() - &id).amax() < 1e-12);
        let j = standard_j::<f64>(8).unwrap();
        let c = conjugate(&j, &o).unwrap();
        assert!((&c + c.transpose()).amax() < 1e-10);
        assert!((&c * &c + &id).amax() < 1e-10);
        assert!((j_of(&o) - &c).amax() < 1e-12);
        // rotation inside the (x_1, y_1) plane commutes with J
        let p = RotationMatrix::plane(8, 0, 4, 0.7);
        assert!((conjugate(&j, &p).unwrap() - &j).amax() < 1e-12);
        assert!(conjugate(&DMatrix::<f64>::identity(4, 4), &o).is_err());
    }

    #[test]
    fn prop21_special_cases() {
        let mut rng = RngStream::new(7, 0).rng();
        let j = standard_j::<f64>(8).unwrap();
        let id = DMatrix::<f64>::identity(8, 8);
        for _ in 0..20 {
            let o = haar_rotation::<f64, _>(&mut rng, 8).unwrap();
            let y = DVector::from_fn(8, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            let rec = prop21_identities(&j, &y, &o).unwrap();
            assert!(rec.t_obs.abs() < 1e-12 && (rec.r_obs - 1.0).abs() < 1e-12);
            let rec = prop21_identities(&id, &y, &o).unwrap();
            assert!((rec.t_obs - 1.0).abs() < 1e-12 && rec.r_obs < 1e-7);
        }
        let y = DVector::from_element(8, 1.0);
        assert!(matches!(
            prop21_identities(&j, &y, &RotationMatrix::identity(8)),
            Err(Error::NotUnit(_))
        ));
    }

    #[test]
    fn prop21_random_symmetric() {
        let mut rng = RngStream::new(8, 0).rng();
        for _ in 0..100 {
            let g = gaussian_matrix::<f64, _>(&mut rng, 8, 8);
            let a = &g + g.transpose();
            let o = haar_rotation::<f64, _>(&mut rng, 8).unwrap();
            let y = DVector::from_fn(8, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            let rec = prop21_identities(&a, &y, &o).unwrap();
            assert!((rec.t_obs - rec.t_pred).abs() <= 1e-10);
            assert!((rec.r_obs - rec.r_pred).abs() <= 1e-9);
        }
    }

    #[test]
    fn pushforward_is_uniform() {
        let y = DVector::from_fn(16, |i, _| if i == 3 { 1.0 } else { 0.0 });
        let rep = pushforward_uniformity_test(&RngStream::new(2024, 0), 16, &y, 5000).unwrap();
        assert!(rep.p_value >= 0.01, "{rep:?}");
        assert!(rep.max_tangency <= 1e-10 && rep.max_norm_defect <= 1e-10);
    }

    #[test]
    fn pushforward_in_dimension_four_is_flat() {
        // the coordinate law on S² is uniform on [-1, 1]
        let y = DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0]);
        let rep = pushforward_uniformity_test(&RngStream::new(9, 0), 4, &y, 2000).unwrap();
        assert!(rep.p_value >= 0.01, "{rep:?}");
        let w = fixed_orthogonal(&y);
        let mut rng = RngStream::new(9, 0).rng();
        let mut xs: Vec<f64> = (0..2000)
            .map(|_| (j_of(&haar_rotation::<f64, _>(&mut rng, 4).unwrap()) * &y).dot(&w))
            .collect();
        let flat = ks_test(&mut xs, |s| (1.0 + s.clamp(-1.0, 1.0)) / 2.0);
        assert!(flat.p_value >= 0.01);
    }

    #[test]
    fn whole_sphere_samples_fail_the_support_check() {
        let mut rng = RngStream::new(10, 0).rng();
        let y = DVector::from_fn(8, |i, _| if i == 0 { 1.0 } else { 0.0 });
        for _ in 0..100 {
            let z = DVector::from_fn(8, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            assert!(matches!(check_pushforward_sample(&z, &y), Err(Error::IdentityViolation(_))));
        }
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let s = RngStream::new(42, 7);
        let a: Vec<u64> = (0..4).map({
            let mut r = s.rng();
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = s.rng();
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
        let c: u64 = s.child(0).rng().random();
        let d: u64 = s.child(1).rng().random();
        assert_ne!(c, d);
        assert_ne!(c, a[0]);
    }

    #[test]
    fn f32_rotations() {
        let mut rng = RngStream::new(11, 0).rng();
        let o = haar_rotation::<f32, _>(&mut rng, 8).unwrap();
        assert!(orthogonality_defect(o.matrix()) <= 1e-5);
    }

    proptest! {
        #[test]
        fn from_matrix_accepts_haar_output(seed in any::<u64>(), half in 1usize..6) {
            let dim = 2 * half;
            let o = haar_rotation::<f64, _>(&mut RngStream::new(seed, 0).rng(), dim).unwrap();
            prop_assert!(RotationMatrix::from_matrix(o.matrix().clone()).is_ok());
            let mut flipped = o.into_inner();
            flipped.column_mut(0).neg_mut();
            prop_assert!(RotationMatrix::from_matrix(flipped).is_err());
        }

        #[test]
        fn j_of_is_antisymmetric_complex_structure(seed in any::<u64>(), half in 2usize..6) {
            let dim = 2 * half;
            let o = haar_rotation::<f64, _>(&mut RngStream::new(seed, 1).rng(), dim).unwrap();
            let m = j_of(&o);
            prop_assert!((&m + m.transpose()).amax() == 0.0);
            prop_assert!((&m * &m + DMatrix::<f64>::identity(dim, dim)).amax() < 1e-10);
        }
    }
}
