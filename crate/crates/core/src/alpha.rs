//! `α(K) = sup_{x,y ∈ K°} ⟨Jx, y⟩`, its rotated version `α(OK)` (the same
//! supremum with `J(O) = OᵀJO`), the capacity sandwich and exact ellipsoid
//! capacities.
//!
//! [`AlphaPlan`] inspects the polar body once and picks a route:
//!
//! * K° = cross-polytope (K a box): `max r_i r_j |M_ij|`.
//! * K° with an explicit vertex list: scan of vertex pairs with `M v_i` cached.
//! * K° = box (K a cross-polytope): Gray-code walk over sign vectors, exact up
//!   to [`AlphaOptions::max_sign_dim`].
//! * K an ellipsoid `{xᵀAx <= 1}`: top singular value of `A^{1/2} M A^{1/2}`.
//! * K° a hull of balls on coordinate blocks (K a product of balls): the
//!   extreme points lie on the block spheres, so the supremum is the largest
//!   `ρ_k ρ_l ‖M_{lk}‖` over block pairs.
//! * anything else: multi-start alternating maximisation, a lower bound.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::body::{Block, ConvexBody, Shape, VertexSet};
use crate::error::{Error, Result};
use crate::geom::{circumradius, contact_point};
use crate::rotation::{j_of, standard_j, RngStream, RotationMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlphaMethod {
    VertexExact,
    Spectral,
    AlternatingLowerBound,
}

impl AlphaMethod {
    pub fn is_exact(self) -> bool {
        self != AlphaMethod::AlternatingLowerBound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaResult<T: Real> {
    pub value: T,
    pub method: AlphaMethod,
    /// Maximising pair `(x*, y*)` in K°.
    pub certificate: Option<(DVector<T>, DVector<T>)>,
    /// Zero for exact routes; unset for lower bounds.
    pub gap_bound: Option<T>,
    /// False when an alternating start hit the iteration cap.
    pub converged: bool,
}

impl<T: Real> AlphaResult<T> {
    pub fn certified(&self) -> bool {
        self.method.is_exact()
    }

    fn exact(value: T, method: AlphaMethod, x: DVector<T>, y: DVector<T>) -> Self {
        AlphaResult {
            value,
            method,
            certificate: Some((x, y)),
            gap_bound: Some(T::zero()),
            converged: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaOptions {
    /// Random alternating starts per dimension.
    pub starts_per_dim: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Largest dimension for which sign vectors of a box K° are enumerated.
    pub max_sign_dim: usize,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions {
            starts_per_dim: 8,
            max_iters: 500,
            rel_tol: 1e-10,
            max_sign_dim: 20,
        }
    }
}

#[derive(Debug, Clone)]
enum Route<T: Real> {
    Cross(DVector<T>),
    Vertices(Vec<DVector<T>>),
    Signs(DVector<T>),
    Ellipsoid(DMatrix<T>),
    BallHull(Vec<Block<T>>),
    Alternating,
}

/// Per-body precomputation for repeated α evaluations.
#[derive(Debug, Clone)]
pub struct AlphaPlan<T: Real> {
    dim: usize,
    /// K° with an outer rotation peeled off.
    polar: Shape<T>,
    /// The peeled rotation `R` (K° = R·polar).
    frame: Option<DMatrix<T>>,
    route: Route<T>,
    /// Contact point of K° in the peeled frame; seeds alternating runs.
    seed_point: Option<DVector<T>>,
    opts: AlphaOptions,
}

fn sqrt_spd<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let eig = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(T::zero()).sqrt()));
    let s = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    (&s + s.transpose()) * T::lit(0.5)
}

impl<T: Real> AlphaPlan<T> {
    pub fn new(body: &ConvexBody<T>, opts: AlphaOptions) -> Result<Self> {
        Self::build(body, opts, false)
    }

    /// A plan that always uses alternating maximisation (cross-checks).
    pub fn alternating(body: &ConvexBody<T>, opts: AlphaOptions) -> Result<Self> {
        Self::build(body, opts, true)
    }

    fn build(body: &ConvexBody<T>, opts: AlphaOptions, force_alternating: bool) -> Result<Self> {
        let dim = body.dim();
        if dim % 2 == 1 {
            return Err(Error::OddDimension(dim));
        }
        if dim < 4 {
            return Err(Error::DimensionTooSmall { dim, min: 4 });
        }
        let (polar, frame) = match body.polar().shape().clone() {
            Shape::Rotated { inner, rotation } => (*inner, Some(rotation)),
            other => (other, None),
        };
        let route = if force_alternating {
            Route::Alternating
        } else {
            match &polar {
                Shape::Cross { radii } => Route::Cross(radii.clone()),
                Shape::VPolytope { vertices } => Route::Vertices(vertices.clone()),
                Shape::Box { half_widths } if dim <= opts.max_sign_dim => Route::Signs(half_widths.clone()),
                Shape::Ellipsoid { inverse, .. } => Route::Ellipsoid(sqrt_spd(inverse)),
                Shape::BallHull { blocks } => Route::BallHull(blocks.clone()),
                _ => Route::Alternating,
            }
        };
        let seed_point = match route {
            Route::Alternating => contact_point(body).ok().map(|c| match &frame {
                Some(r) => r.tr_mul(&c.v),
                None => c.v,
            }),
            _ => None,
        };
        Ok(AlphaPlan {
            dim,
            polar,
            frame,
            route,
            seed_point,
            opts,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The method [`AlphaPlan::evaluate`] will report.
    pub fn method(&self) -> AlphaMethod {
        match self.route {
            Route::Cross(_) | Route::Vertices(_) | Route::Signs(_) => AlphaMethod::VertexExact,
            Route::Ellipsoid(_) | Route::BallHull(_) => AlphaMethod::Spectral,
            Route::Alternating => AlphaMethod::AlternatingLowerBound,
        }
    }

    /// `α(OK)`, or `α(K)` without a rotation. `rng` only feeds alternating starts.
    pub fn evaluate<R: Rng + ?Sized>(&self, rotation: Option<&RotationMatrix<T>>, rng: &mut R) -> Result<AlphaResult<T>> {
        let m = match rotation {
            Some(o) if o.dim() != self.dim => {
                return Err(Error::ShapeMismatch {
                    expected: format!("{0}x{0} rotation", self.dim),
                    found: format!("{0}x{0}", o.dim()),
                })
            }
            Some(o) => j_of(o),
            None => standard_j(self.dim)?,
        };
        Ok(self.sup_bilinear(&m, rng))
    }

    /// `sup_{x,y ∈ K°} ⟨Mx, y⟩` for an arbitrary square `M`.
    pub fn sup_bilinear<R: Rng + ?Sized>(&self, m: &DMatrix<T>, rng: &mut R) -> AlphaResult<T> {
        let local = match &self.frame {
            Some(r) => r.tr_mul(&(m * r)),
            None => m.clone(),
        };
        let mut res = match &self.route {
            Route::Cross(r) => cross_route(&local, r),
            Route::Vertices(v) => {
                let (value, x, y) = vertex_pair_scan(&local, v.iter().cloned());
                AlphaResult::exact(value, AlphaMethod::VertexExact, x, y)
            }
            Route::Signs(w) => sign_route(&local, w),
            Route::Ellipsoid(s) => ellipsoid_route(&local, s),
            Route::BallHull(blocks) => ball_hull_route(&local, blocks, self.dim),
            Route::Alternating => self.run_alternating(&local, rng),
        };
        if let Some(r) = &self.frame {
            res.certificate = res.certificate.map(|(x, y)| (r * x, r * y));
        }
        res
    }

    fn run_alternating<R: Rng + ?Sized>(&self, m: &DMatrix<T>, rng: &mut R) -> AlphaResult<T> {
        let dim = self.dim;
        let mt = m.transpose();
        let mut starts: Vec<DVector<T>> = Vec::with_capacity(dim * (self.opts.starts_per_dim + 1) + 1);
        starts.extend(self.seed_point.iter().cloned());
        for i in 0..dim {
            let mut e = DVector::zeros(dim);
            e[i] = T::one();
            starts.push(e);
        }
        for _ in 0..self.opts.starts_per_dim * dim {
            starts.push(DVector::from_fn(dim, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal))));
        }
        let tol = T::tol(self.opts.rel_tol, 16.0);
        let mut best: Option<(T, DVector<T>, DVector<T>)> = None;
        let mut converged = true;
        for s in starts {
            let g = self.polar.gauge(&s);
            if g <= T::zero() {
                continue;
            }
            let mut x = s / g;
            let mut y = self.polar.support_point(&(m * &x));
            let mut val = (m * &x).dot(&y);
            let mut done = false;
            for _ in 0..self.opts.max_iters {
                x = self.polar.support_point(&(&mt * &y));
                let mx = m * &x;
                y = self.polar.support_point(&mx);
                let next = mx.dot(&y);
                let gain = next - val;
                val = next;
                if gain <= tol * val.abs() {
                    done = true;
                    break;
                }
            }
            converged &= done;
            if best.as_ref().is_none_or(|(b, _, _)| val > *b) {
                best = Some((val, x, y));
            }
        }
        let (value, x, y) = best.expect("at least the coordinate starts are admissible");
        AlphaResult {
            value,
            method: AlphaMethod::AlternatingLowerBound,
            certificate: Some((x, y)),
            gap_bound: None,
            converged,
        }
    }
}

fn cross_route<T: Real>(m: &DMatrix<T>, r: &DVector<T>) -> AlphaResult<T> {
    let d = r.len();
    let (mut bi, mut bj, mut best) = (0, 0, -T::one());
    for j in 0..d {
        for i in 0..d {
            let v = r[i] * r[j] * m[(i, j)].abs();
            if v > best {
                (bi, bj, best) = (i, j, v);
            }
        }
    }
    let mut x = DVector::zeros(d);
    let mut y = DVector::zeros(d);
    x[bj] = r[bj];
    y[bi] = if m[(bi, bj)] < T::zero() { -r[bi] } else { r[bi] };
    AlphaResult::exact(best, AlphaMethod::VertexExact, x, y)
}

/// `max_{i,j} ⟨M v_i, v_j⟩` over a vertex list with `M v_i` cached.
pub fn vertex_pair_scan<T: Real>(m: &DMatrix<T>, vertices: impl Iterator<Item = DVector<T>>) -> (T, DVector<T>, DVector<T>) {
    let vs: Vec<DVector<T>> = vertices.collect();
    let images: Vec<DVector<T>> = vs.iter().map(|v| m * v).collect();
    let (mut bi, mut bj, mut best) = (0, 0, T::zero() - T::max_value().unwrap_or_else(T::one));
    for (i, w) in images.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            let s = w.dot(v);
            if s > best {
                (bi, bj, best) = (i, j, s);
            }
        }
    }
    (best, vs[bi].clone(), vs[bj].clone())
}

/// Bilinear supremum over a vertex set, whatever its representation.
pub fn bilinear_sup_vertices<T: Real>(m: &DMatrix<T>, vertices: &VertexSet<T>) -> T {
    vertex_pair_scan(m, vertices.iter()).0
}

fn sign_route<T: Real>(m: &DMatrix<T>, w: &DVector<T>) -> AlphaResult<T> {
    let d = w.len();
    let n = DMatrix::from_fn(d, d, |i, j| w[i] * m[(i, j)] * w[j]);
    let mut sigma = vec![T::one(); d];
    let mut u: DVector<T> = n.column_sum();
    let l1 = |u: &DVector<T>| u.iter().fold(T::zero(), |a, b| a + b.abs());
    let mut best = l1(&u);
    let mut best_sigma = sigma.clone();
    let mut best_u = u.clone();
    // σ_0 stays +1: the objective is even in σ.
    let steps: u64 = 1u64 << (d - 1);
    for g in 1..steps {
        let k = g.trailing_zeros() as usize + 1;
        let two = T::lit(2.0);
        u.axpy(-two * sigma[k], &n.column(k), T::one());
        sigma[k] = -sigma[k];
        let v = l1(&u);
        if v > best {
            best = v;
            best_sigma.clone_from(&sigma);
            best_u.clone_from(&u);
        }
    }
    let x = DVector::from_fn(d, |i, _| w[i] * best_sigma[i]);
    let y = DVector::from_fn(d, |i, _| if best_u[i] < T::zero() { -w[i] } else { w[i] });
    AlphaResult::exact(best, AlphaMethod::VertexExact, x, y)
}

/// Index and value of the largest singular value, with its singular pair.
fn top_singular<T: Real>(a: DMatrix<T>) -> (T, DVector<T>, DVector<T>) {
    let svd = a.svd(true, true);
    let k = svd.singular_values.imax();
    let u = svd.u.expect("requested").column(k).into_owned();
    let v = svd.v_t.expect("requested").row(k).transpose();
    (svd.singular_values[k], u, v)
}

fn ellipsoid_route<T: Real>(m: &DMatrix<T>, s: &DMatrix<T>) -> AlphaResult<T> {
    let (sigma, b, a) = top_singular(s * m * s);
    AlphaResult::exact(sigma, AlphaMethod::Spectral, s * a, s * b)
}

fn ball_hull_route<T: Real>(m: &DMatrix<T>, blocks: &[Block<T>], dim: usize) -> AlphaResult<T> {
    let mut best: Option<(T, DVector<T>, DVector<T>)> = None;
    for bk in blocks {
        for bl in blocks {
            let sub = DMatrix::from_fn(bl.coords.len(), bk.coords.len(), |i, j| m[(bl.coords[i], bk.coords[j])]);
            let (sigma, u, v) = top_singular(sub);
            let value = bk.radius * bl.radius * sigma;
            if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
                let mut x = DVector::zeros(dim);
                let mut y = DVector::zeros(dim);
                for (j, &c) in bk.coords.iter().enumerate() {
                    x[c] = bk.radius * v[j];
                }
                for (i, &c) in bl.coords.iter().enumerate() {
                    y[c] = bl.radius * u[i];
                }
                best = Some((value, x, y));
            }
        }
    }
    let (value, x, y) = best.expect("at least one block");
    AlphaResult::exact(value, AlphaMethod::Spectral, x, y)
}

const DEFAULT_ALPHA_STREAM: RngStream = RngStream {
    seed: 0x616c_7068_61,
    stream_id: 0,
};

/// `α(K)` or `α(OK)` with default options; alternating starts come from a
/// fixed stream so repeated calls agree.
pub fn alpha<T: Real>(body: &ConvexBody<T>, rotation: Option<&RotationMatrix<T>>) -> Result<AlphaResult<T>> {
    AlphaPlan::new(body, AlphaOptions::default())?.evaluate(rotation, &mut DEFAULT_ALPHA_STREAM.rng())
}

/// `[α⁻¹, 4α⁻¹]`; `certified` only when α came from an exact route.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityInterval<T: Real> {
    pub lo: T,
    pub hi: T,
    pub certified: bool,
    pub alpha: AlphaResult<T>,
}

pub fn capacity_interval<T: Real>(alpha: AlphaResult<T>) -> CapacityInterval<T> {
    let lo = T::one() / alpha.value;
    CapacityInterval {
        lo,
        hi: T::lit(4.0) * lo,
        certified: alpha.certified(),
        alpha,
    }
}

pub fn ehz_sandwich<T: Real>(body: &ConvexBody<T>, rotation: Option<&RotationMatrix<T>>) -> Result<CapacityInterval<T>> {
    Ok(capacity_interval(alpha(body, rotation)?))
}

const MAX_CONDITION: f64 = 1e8;

/// `c_EHZ` of `{x : xᵀCx <= 1}`: `π / max β` over the eigenvalues `±iβ` of `JC`.
pub fn ehz_ellipsoid<T: Real>(c: &DMatrix<T>) -> Result<T> {
    let dim = c.nrows();
    if !c.is_square() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", c.nrows(), c.ncols()),
        });
    }
    if dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    let scale = c.amax();
    if (c - c.transpose()).amax() > T::tol(1e-12, 16.0) * scale {
        return Err(Error::NotPositiveDefinite);
    }
    let eig = c.clone().symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if lo <= T::zero() {
        return Err(Error::NotPositiveDefinite);
    }
    let cond = (hi / lo).as_f64();
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let jc = standard_j::<T>(dim)? * c;
    let schur = nalgebra::Schur::try_new(jc, T::default_epsilon(), 10_000).ok_or(Error::NoConvergence)?;
    let eigs = schur.complex_eigenvalues();
    let tol = T::tol(1e-8, 64.0 * dim as f64) * hi;
    let worst_real = eigs.iter().map(|z| z.re.abs()).fold(T::zero(), |a, b| a.max(b));
    if worst_real > tol {
        return Err(Error::SpectralImpurity {
            real: worst_real.as_f64(),
            tol: tol.as_f64(),
        });
    }
    let beta = eigs.iter().map(|z| z.im.abs()).fold(T::zero(), |a, b| a.max(b));
    Ok(T::pi() / beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzRecord {
    pub lhs: f64,
    pub rhs: f64,
}

impl LipschitzRecord {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// `α(O₁K) − α(O₂K)` against `2 R(K°)² ‖O₁ − O₂‖_HS`.
pub fn lipschitz_gap<T: Real>(plan: &AlphaPlan<T>, polar_circumradius: T, o1: &RotationMatrix<T>, o2: &RotationMatrix<T>) -> Result<LipschitzRecord> {
    if !plan.method().is_exact() {
        return Err(Error::NoExactRoute("the Lipschitz check needs an exact α".into()));
    }
    let mut rng = DEFAULT_ALPHA_STREAM.rng();
    let a1 = plan.evaluate(Some(o1), &mut rng)?.value;
    let a2 = plan.evaluate(Some(o2), &mut rng)?.value;
    let hs = (o1.matrix() - o2.matrix()).norm();
    Ok(LipschitzRecord {
        lhs: (a1 - a2).as_f64(),
        rhs: (T::lit(2.0) * polar_circumradius * polar_circumradius * hs).as_f64(),
    })
}

/// [`lipschitz_gap`] building the plan and `R(K°)` from the body.
pub fn lipschitz_gap_for<T: Real>(body: &ConvexBody<T>, o1: &RotationMatrix<T>, o2: &RotationMatrix<T>) -> Result<LipschitzRecord> {
    let plan = AlphaPlan::new(body, AlphaOptions::default())?;
    lipschitz_gap(&plan, circumradius(&body.polar())?, o1, o2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{make_body, FamilySpec};
    use crate::rotation::haar_rotation;
    use std::f64::consts::PI;

    fn body(s: &str) -> ConvexBody<f64> {
        make_body(&s.parse().unwrap()).unwrap()
    }

    /// Independent oracle: brute force over all vertex pairs of K° using
    /// the vertex iterator and the explicit J matrix.
    fn brute_force(k: &ConvexBody<f64>, o: Option<&RotationMatrix<f64>>) -> f64 {
        let j = standard_j::<f64>(k.dim()).unwrap();
        let m = match o {
            Some(o) => o.matrix().transpose() * j * o.matrix(),
            None => j,
        };
        let vs: Vec<_> = k.polar().vertices().unwrap().iter().collect();
        let mut best = f64::NEG_INFINITY;
        for x in &vs {
            for y in &vs {
                best = best.max((&m * x).dot(y).abs());
            }
        }
        best
    }

    #[test]
    fn ball_is_one_for_every_rotation() {
        let k = body("ball:8:1");
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..10 {
            let o = haar_rotation(&mut rng, 8).unwrap();
            let a = alpha(&k, Some(&o)).unwrap();
            assert_eq!(a.method, AlphaMethod::Spectral);
            assert!((a.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_is_one() {
        let k = body("cube:4");
        let a = alpha(&k, None).unwrap();
        assert_eq!(a.method, AlphaMethod::VertexExact);
        assert_eq!(a.value, 1.0);
        assert_eq!(brute_force(&k, None), 1.0);
        let (x, y) = a.certificate.unwrap();
        assert_eq!((standard_j::<f64>(4).unwrap() * &x).dot(&y), 1.0);
    }

    #[test]
    fn ellipsoid_one_four_is_pi() {
        let k = body("ellipsoid:1,4");
        let a = alpha(&k, None).unwrap();
        assert_eq!(a.method, AlphaMethod::Spectral);
        assert!((a.value - PI).abs() < 1e-12);
        let alt = AlphaPlan::alternating(&k, AlphaOptions::default())
            .unwrap()
            .evaluate(None, &mut RngStream::new(2, 0).rng())
            .unwrap();
        assert!((alt.value - PI).abs() < 1e-6);
        assert!(alt.value <= a.value + 1e-12);
    }

    #[test]
    fn exact_routes_match_brute_force() {
        let mut rng = RngStream::new(3, 0).rng();
        for name in ["cube:6", "cross:6", "box:1,2,5", "cube:8", "cross:8"] {
            let k = body(name);
            let plan = AlphaPlan::new(&k, AlphaOptions::default()).unwrap();
            for _ in 0..10 {
                let o = haar_rotation(&mut rng, k.dim()).unwrap();
                let a = plan.evaluate(Some(&o), &mut rng).unwrap();
                assert_eq!(a.method, AlphaMethod::VertexExact);
                let b = brute_force(&k, Some(&o));
                assert!((a.value - b).abs() < 1e-12, "{name}: {} vs {b}", a.value);
            }
        }
    }

    #[test]
    fn certificates_attain_value() {
        let mut rng = RngStream::new(4, 0).rng();
        for name in ["cube:8", "cross:8", "ellipsoid:1,2,3,7", "ballproduct:8:4", "lp:8:3", "ball:6:2"] {
            let k = body(name);
            let plan = AlphaPlan::new(&k, AlphaOptions::default()).unwrap();
            let kp = k.polar();
            for _ in 0..5 {
                let o = haar_rotation(&mut rng, k.dim()).unwrap();
                let a = plan.evaluate(Some(&o), &mut rng).unwrap();
                let (x, y) = a.certificate.clone().unwrap();
                let attained = (j_of(&o) * &x).dot(&y);
                assert!((attained - a.value).abs() < 1e-9 * a.value.max(1.0), "{name}");
                assert!(kp.gauge(&x) <= 1.0 + 1e-9 && kp.gauge(&y) <= 1.0 + 1e-9, "{name}");
                // floor α >= r²(K°) = 1 / R(K)²
                let r = 1.0 / circumradius(&k).unwrap();
                assert!(a.value >= r * r - 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn rotation_argument_matches_rotated_body() {
        let mut rng = RngStream::new(5, 0).rng();
        let j = standard_j::<f64>(8).unwrap();
        for name in ["cube:8", "cross:8", "ellipsoid:1,2,4,9", "ballproduct:8:3"] {
            let k = body(name);
            for _ in 0..5 {
                let o = haar_rotation(&mut rng, 8).unwrap();
                let via_arg = alpha(&k, Some(&o)).unwrap().value;
                let rotated = k.rotated(&o).unwrap();
                let via_body = alpha(&rotated, None).unwrap().value;
                assert!((via_arg - via_body).abs() < 1e-9, "{name}");
                if let Some(vs) = rotated.polar().vertices() {
                    // explicit rotated vertices through the generic pair scan
                    let scan = bilinear_sup_vertices(&j, &vs);
                    assert!((via_arg - scan).abs() < 1e-9, "{name}");
                }
            }
        }
    }

    #[test]
    fn two_homogeneity() {
        let mut rng = RngStream::new(6, 0).rng();
        for name in ["cube:8", "cross:8", "ellipsoid:1,3,4,9", "ballproduct:8:5"] {
            let k = body(name);
            let o = haar_rotation(&mut rng, 8).unwrap();
            let a = alpha(&k, Some(&o)).unwrap().value;
            for lam in [0.5, 2.0] {
                let b = alpha(&k.scaled(lam).unwrap(), Some(&o)).unwrap().value;
                assert!((b - a / (lam * lam)).abs() < 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn alternating_never_exceeds_exact() {
        let mut rng = RngStream::new(7, 0).rng();
        for name in ["cube:6", "cross:6", "ellipsoid:1,2,5", "ballproduct:6:4", "ballproduct:8:16"] {
            let k = body(name);
            let exact = AlphaPlan::new(&k, AlphaOptions::default()).unwrap();
            let alt = AlphaPlan::alternating(&k, AlphaOptions::default()).unwrap();
            for _ in 0..5 {
                let o = haar_rotation(&mut rng, k.dim()).unwrap();
                let e = exact.evaluate(Some(&o), &mut rng).unwrap().value;
                let a = alt.evaluate(Some(&o), &mut rng).unwrap().value;
                assert!(a <= e + 1e-9, "{name}: {a} > {e}");
                assert!(e - a <= 1e-6 * e, "{name}: gap {}", e - a);
            }
        }
    }

    #[test]
    fn antisymmetry_of_certificate() {
        let k = body("cube:8");
        let mut rng = RngStream::new(8, 0).rng();
        let o = haar_rotation(&mut rng, 8).unwrap();
        let a = alpha(&k, Some(&o)).unwrap();
        let (x, y) = a.certificate.unwrap();
        let m = j_of(&o);
        assert!((&m * &x).dot(&x).abs() < 1e-12);
        assert!((&x - &y).amax() > 1e-6 && (&x + &y).amax() > 1e-6);
    }

    #[test]
    fn heuristic_for_general_lp() {
        let k = body("lp:6:3");
        let a = alpha(&k, None).unwrap();
        assert_eq!(a.method, AlphaMethod::AlternatingLowerBound);
        assert!(!ehz_sandwich(&k, None).unwrap().certified);
        assert!(a.gap_bound.is_none());
    }

    #[test]
    fn sandwich_examples() {
        let s = ehz_sandwich(&body("ball:8:1"), None).unwrap();
        assert!((s.lo - 1.0).abs() < 1e-12 && (s.hi - 4.0).abs() < 1e-12 && s.certified);
        assert!(s.lo <= PI && PI <= s.hi);
        let s = ehz_sandwich(&body("ellipsoid:1,4"), None).unwrap();
        assert!((s.lo - 1.0 / PI).abs() < 1e-12 && (s.hi - 4.0 / PI).abs() < 1e-12);
        assert!(s.lo <= 1.0 && 1.0 <= s.hi);
        let s = ehz_sandwich(&body("cube:4"), None).unwrap();
        assert_eq!((s.lo, s.hi), (1.0, 4.0));
        assert_eq!(s.hi / s.lo, 4.0);
    }

    #[test]
    fn ellipsoid_capacity_examples() {
        for r in [0.5, 1.0, 3.0] {
            let c = DMatrix::<f64>::identity(6, 6) / (r * r);
            assert!((ehz_ellipsoid(&c).unwrap() - PI * r * r).abs() < 1e-9);
        }
        let e = body("ellipsoid:1,4");
        assert!((ehz_ellipsoid(e.quad_form().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let e = body("ellipsoid:2,3,7");
        assert!((ehz_ellipsoid(e.quad_form().unwrap()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_capacity_unitary_invariance() {
        let e = body("ellipsoid:1,2,5");
        let c = e.quad_form().unwrap();
        let base = ehz_ellipsoid(c).unwrap();
        // U(n) ⊂ SO(2n): rotations in the (x_i, y_i) planes commute with J
        let u1 = RotationMatrix::plane(6, 0, 3, 0.3);
        let u2 = RotationMatrix::plane(6, 1, 4, -1.1);
        let u = &u1 * &u2;
        let cu = crate::rotation::conjugate(c, &u).unwrap();
        assert!((ehz_ellipsoid(&cu).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    fn ellipsoid_capacity_rejects_bad_input() {
        let bad = DMatrix::from_diagonal(&nalgebra::dvector![1.0, -1.0, 1.0, 1.0]);
        assert_eq!(ehz_ellipsoid(&bad), Err(Error::NotPositiveDefinite));
        let skew = nalgebra::dmatrix![1.0, 0.5, 0.0, 0.0; 0.0, 1.0, 0.0, 0.0; 0.0, 0.0, 1.0, 0.0; 0.0, 0.0, 0.0, 1.0];
        assert_eq!(ehz_ellipsoid(&skew), Err(Error::NotPositiveDefinite));
        let thin = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 1e9, 1.0, 1e9]);
        assert!(matches!(ehz_ellipsoid(&thin), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn sandwich_product_is_pi_for_ellipsoids() {
        let mut rng = RngStream::new(9, 0).rng();
        let e = body("ellipsoid:1,2,3,9");
        for _ in 0..20 {
            let o = haar_rotation(&mut rng, 8).unwrap();
            let oe = e.rotated(&o).unwrap();
            let c = ehz_ellipsoid(oe.quad_form().unwrap()).unwrap();
            let a = alpha(&oe, None).unwrap().value;
            assert!((c * a - PI).abs() < 1e-9);
        }
    }

    #[test]
    fn lipschitz_examples() {
        let mut rng = RngStream::new(10, 0).rng();
        let cube = body("cube:8");
        let o = haar_rotation(&mut rng, 8).unwrap();
        let same = lipschitz_gap_for(&cube, &o, &o).unwrap();
        assert_eq!(same, LipschitzRecord { lhs: 0.0, rhs: 0.0 });
        let ball = body("ball:8:1");
        for _ in 0..10 {
            let o1 = haar_rotation(&mut rng, 8).unwrap();
            let o2 = haar_rotation(&mut rng, 8).unwrap();
            let rec = lipschitz_gap_for(&ball, &o1, &o2).unwrap();
            assert!(rec.lhs.abs() < 1e-12 && rec.rhs > 0.0);
            assert!(lipschitz_gap_for(&cube, &o1, &o2).unwrap().holds(1e-9));
        }
        assert!(lipschitz_gap_for(&body("lp:6:3"), &o_id(6), &o_id(6)).is_err());
    }

    fn o_id(d: usize) -> RotationMatrix<f64> {
        RotationMatrix::identity(d)
    }

    #[test]
    fn rejects_small_dimension() {
        assert_eq!(
            alpha(&body("cube:2"), None).unwrap_err(),
            Error::DimensionTooSmall { dim: 2, min: 4 }
        );
        let k = make_body::<f64>(&FamilySpec::Cube { dim: 4 }).unwrap();
        let wrong = RotationMatrix::identity(6);
        assert!(matches!(alpha(&k, Some(&wrong)), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn f32_alpha() {
        let k = make_body::<f32>(&"ellipsoid:1,4".parse().unwrap()).unwrap();
        let a = alpha(&k, None).unwrap();
        assert!((a.value - std::f32::consts::PI).abs() < 1e-4);
        let k = make_body::<f32>(&"cube:8".parse().unwrap()).unwrap();
        assert_eq!(alpha(&k, None).unwrap().value, 1.0);
    }
}
