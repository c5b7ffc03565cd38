//! Radii, contact points, mean widths, volume radius, the non-degeneracy
//! functional and the Table 1 quantities.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::body::{section_support, ConvexBody, FamilySpec, Shape};
use crate::error::{Error, Result};
use crate::parallel::sample_map;
use crate::rotation::RngStream;
use crate::scalar::Real;
use crate::stats::{ln_gamma, EstimatorResult, Welford};

fn circumradius_of<T: Real>(shape: &Shape<T>, dim: usize) -> Result<T> {
    Ok(match shape {
        Shape::Box { half_widths } => half_widths.norm(),
        Shape::Cross { radii } => radii.max(),
        Shape::Lp { p, .. } => {
            let half = T::lit(0.5);
            if *p >= T::lit(2.0) {
                T::lit(dim as f64).powf(half - T::one() / *p)
            } else {
                T::one()
            }
        }
        Shape::Ellipsoid { form, .. } => T::one() / form.clone().symmetric_eigen().eigenvalues.min().sqrt(),
        Shape::BallProduct { blocks } => blocks.iter().map(|b| b.radius * b.radius).fold(T::zero(), |a, b| a + b).sqrt(),
        Shape::BallHull { blocks } => blocks.iter().map(|b| b.radius).fold(T::zero(), |a, b| a.max(b)),
        Shape::VPolytope { vertices } => vertices.iter().map(|v| v.norm()).fold(T::zero(), |a, b| a.max(b)),
        Shape::Facets { .. } => {
            return Err(Error::NoExactRoute(
                "circumradius of a facet-described body; use a family with vertices, a quadratic form or a closed form"
                    .into(),
            ))
        }
        Shape::Rotated { inner, .. } => circumradius_of(inner, dim)?,
    })
}

/// `R(K) = max{|x| : x ∈ K}`, exact.
pub fn circumradius<T: Real>(body: &ConvexBody<T>) -> Result<T> {
    circumradius_of(body.shape(), body.dim())
}

/// `r(K) = 1 / R(K°)`.
pub fn inradius<T: Real>(body: &ConvexBody<T>) -> Result<T> {
    Ok(T::one() / circumradius(&body.polar())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactSource {
    VertexScan,
    PrincipalAxis,
    ClosedForm,
}

/// A point of K° at maximal distance `R(K°)` from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPoint<T: Real> {
    pub v: DVector<T>,
    pub source: ContactSource,
}

fn unit<T: Real>(dim: usize, i: usize, scale: T) -> DVector<T> {
    let mut e = DVector::zeros(dim);
    e[i] = scale;
    e
}

/// Farthest point of a shape; ties go to the smallest coordinate index with
/// a positive sign.
fn farthest_point<T: Real>(shape: &Shape<T>, dim: usize) -> Result<ContactPoint<T>> {
    let cp = |v, source| Ok(ContactPoint { v, source });
    match shape {
        Shape::Box { half_widths } => cp(half_widths.clone(), ContactSource::ClosedForm),
        Shape::Cross { radii } => {
            let i = radii.iter().enumerate().fold(0, |b, (i, r)| if *r > radii[b] { i } else { b });
            cp(unit(dim, i, radii[i]), ContactSource::VertexScan)
        }
        Shape::Lp { p, .. } => {
            if *p > T::lit(2.0) {
                let c = T::lit(dim as f64).powf(-T::one() / *p);
                cp(DVector::from_element(dim, c), ContactSource::ClosedForm)
            } else {
                cp(unit(dim, 0, T::one()), ContactSource::ClosedForm)
            }
        }
        Shape::Ellipsoid { form, .. } => {
            let eig = form.clone().symmetric_eigen();
            let lmin = eig.eigenvalues.min();
            let cut = lmin * (T::one() + T::tol(1e-9, 64.0));
            let cols: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] <= cut).collect();
            let basis = DMatrix::from_fn(dim, cols.len(), |i, j| eig.eigenvectors[(i, cols[j])]);
            // first coordinate axis with a visible projection onto the longest axes
            let proj_floor = T::lit(1e-6);
            let dir = (0..dim)
                .map(|i| &basis * basis.row(i).transpose())
                .find(|p| p.norm() > proj_floor)
                .expect("eigenspace is non-trivial");
            cp(dir.normalize() / lmin.sqrt(), ContactSource::PrincipalAxis)
        }
        Shape::BallProduct { blocks } => {
            let mut v = DVector::zeros(dim);
            for b in blocks {
                v[b.coords[0]] = b.radius;
            }
            cp(v, ContactSource::ClosedForm)
        }
        Shape::BallHull { blocks } => {
            let k = (0..blocks.len()).fold(0, |b, k| if blocks[k].radius > blocks[b].radius { k } else { b });
            cp(unit(dim, blocks[k].coords[0], blocks[k].radius), ContactSource::ClosedForm)
        }
        Shape::VPolytope { vertices } => {
            let norms: Vec<T> = vertices.iter().map(|v| v.norm()).collect();
            let top = norms.iter().fold(T::zero(), |a, b| a.max(*b));
            let cut = top * (T::one() - T::tol(1e-12, 64.0));
            // among the farthest vertices prefer the canonical tie-break
            let best = vertices
                .iter()
                .zip(&norms)
                .filter(|(_, n)| **n >= cut)
                .map(|(v, _)| v)
                .max_by(|a, b| canonical_order(a, b))
                .expect("non-empty");
            cp(best.clone(), ContactSource::VertexScan)
        }
        Shape::Facets { .. } => Err(Error::NoExactRoute("contact point of a facet-described polar".into())),
        Shape::Rotated { inner, rotation } => {
            let c = farthest_point(inner, dim)?;
            cp(rotation * c.v, c.source)
        }
    }
}

/// Orders vectors so that the one whose first nonzero entry sits at the
/// smallest index, positive, compares greatest.
fn canonical_order<T: Real>(a: &DVector<T>, b: &DVector<T>) -> std::cmp::Ordering {
    let key = |v: &DVector<T>| -> (usize, bool) {
        let i = v.iter().position(|x| x.abs() > T::default_epsilon()).unwrap_or(v.len());
        (i, i < v.len() && v[i] > T::zero())
    };
    let (ia, pa) = key(a);
    let (ib, pb) = key(b);
    ib.cmp(&ia).then(pa.cmp(&pb))
}

/// Contact point of K° with its circumscribed ball.
pub fn contact_point<T: Real>(body: &ConvexBody<T>) -> Result<ContactPoint<T>> {
    farthest_point(body.polar().shape(), body.dim())
}

fn require_samples(n: usize) -> Result<()> {
    if n < 100 {
        Err(Error::InsufficientSamples { needed: 100, got: n })
    } else {
        Ok(())
    }
}

/// A uniform point of `S^{dim−1}` (normalised Gaussian).
pub fn sphere_point<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<T> {
    loop {
        let g = DVector::from_fn(dim, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        let n = g.norm();
        if n > T::zero() {
            return g / n;
        }
    }
}

/// A uniform point of the unit sphere of `v⊥` for a unit `v`.
pub fn sphere_point_orthogonal<T: Real, R: Rng + ?Sized>(rng: &mut R, v: &DVector<T>) -> DVector<T> {
    loop {
        let mut g = DVector::from_fn(v.len(), |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)));
        let t = g.dot(v);
        g.axpy(-t, v, T::one());
        let n = g.norm();
        if n > T::zero() {
            g /= n;
            // one more projection to clean rounding
            let t = g.dot(v);
            g.axpy(-t, v, T::one());
            return g;
        }
    }
}

/// `M*(K) = ∫ h_K dσ` by plain Monte Carlo.
pub fn mean_width<T: Real>(body: &ConvexBody<T>, n: usize, stream: &RngStream, workers: usize) -> Result<EstimatorResult> {
    require_samples(n)?;
    let dim = body.dim();
    let hs = sample_map(n, stream, workers, |_, rng| Ok(body.support(&sphere_point::<T, _>(rng, dim)).as_f64()))?;
    Ok(EstimatorResult::from_samples(&hs, stream.seed))
}

/// `M*(K ∩ v⊥)` averaged over the unit sphere of `v⊥`.
pub fn section_mean_width<T: Real>(
    body: &ConvexBody<T>,
    v: &DVector<T>,
    n: usize,
    stream: &RngStream,
    workers: usize,
) -> Result<EstimatorResult> {
    require_samples(n)?;
    let norm = v.norm();
    if (norm - T::one()).abs() > T::tol(1e-9, 16.0) {
        return Err(Error::NotUnit(norm.as_f64()));
    }
    let hs = sample_map(n, stream, workers, |_, rng| {
        let u = sphere_point_orthogonal(rng, v);
        Ok(section_support(body, v, &u)?.as_f64())
    })?;
    Ok(EstimatorResult::from_samples(&hs, stream.seed))
}

/// `(Vol K / Vol B^{2n})^{1/n}` in closed form.
pub fn volume_radius_sq(spec: &FamilySpec) -> Result<f64> {
    spec.validate()?;
    let dim = spec.dim();
    let n = (dim / 2) as f64;
    let d = dim as f64;
    let pi = std::f64::consts::PI;
    let ln_ball = n * pi.ln() - ln_gamma(n + 1.0);
    let ln_vol = match spec {
        FamilySpec::Cube { .. } => d * 2f64.ln(),
        FamilySpec::CrossPolytope { .. } => d * 2f64.ln() - ln_gamma(d + 1.0),
        FamilySpec::EuclideanBall { radius, .. } => ln_ball + d * radius.ln(),
        FamilySpec::SymplecticEllipsoid { axes } => ln_ball + axes.iter().map(|a| (a / pi).ln()).sum::<f64>(),
        FamilySpec::SymplecticBox { axes } => axes.iter().map(|a| a.ln()).sum(),
        FamilySpec::LpBall { p, .. } if p.is_infinite() => d * 2f64.ln(),
        FamilySpec::LpBall { p, .. } => d * (2.0 * (ln_gamma(1.0 + 1.0 / p)).exp()).ln() - ln_gamma(1.0 + d / p),
        FamilySpec::EllipsoidMatrix { matrix } => {
            let m = crate::body::spec::square_matrix(matrix)?;
            let det = m.cholesky().ok_or(Error::NotPositiveDefinite)?.determinant();
            ln_ball - 0.5 * det.ln()
        }
        other => {
            return Err(Error::Unsupported(format!(
                "closed-form volume of a {} body",
                other.family_name()
            )))
        }
    };
    Ok(((ln_vol - ln_ball) / n).exp())
}

/// `ND_q(K) = M*(K) · (∫ h_K^{−q} dσ)^{1/q}` from one shared sample, with a
/// delta-method standard error.
pub fn nondeg_functional<T: Real>(body: &ConvexBody<T>, q: f64, n: usize, stream: &RngStream, workers: usize) -> Result<EstimatorResult> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must be positive, got {q}")));
    }
    require_samples(n)?;
    let dim = body.dim();
    let hs = sample_map(n, stream, workers, |_, rng| Ok(body.support(&sphere_point::<T, _>(rng, dim)).as_f64()))?;
    if hs.iter().any(|h| *h <= 0.0) {
        return Err(Error::InvalidParameter("support function vanishes on the sphere".into()));
    }
    let neg: Vec<f64> = hs.iter().map(|h| (-q * h.ln()).exp()).collect();
    let (a, b) = (Welford::from_slice(&hs), Welford::from_slice(&neg));
    let (m1, m2) = (a.mean(), b.mean());
    let nf = n as f64;
    let cov = hs.iter().zip(&neg).map(|(x, y)| (x - m1) * (y - m2)).sum::<f64>() / (nf - 1.0);
    let nd = m1 * m2.powf(1.0 / q);
    // gradient of m1 · m2^{1/q}
    let g1 = m2.powf(1.0 / q);
    let g2 = m1 * m2.powf(1.0 / q - 1.0) / q;
    let var = (g1 * g1 * a.variance() + 2.0 * g1 * g2 * cov + g2 * g2 * b.variance()).max(0.0) / nf;
    Ok(EstimatorResult::new(nd, var.sqrt(), n, stream.seed))
}

/// `r(K) / M*(K° ∩ L)` with `L = v⊥` for the contact point `v` of K°.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioAnchor {
    pub inradius: f64,
    pub polar_circumradius: f64,
    pub contact: Vec<f64>,
    pub section_mean_width: EstimatorResult,
    pub ratio: EstimatorResult,
}

pub fn ratio_anchor<T: Real>(body: &ConvexBody<T>, n: usize, stream: &RngStream, workers: usize) -> Result<RatioAnchor> {
    let polar = body.polar();
    let cp = contact_point(body)?;
    let big_r = cp.v.norm();
    let v = &cp.v / big_r;
    let m = section_mean_width(&polar, &v, n, stream, workers)?;
    let r = inradius(body)?.as_f64();
    let ratio = EstimatorResult::new(r / m.estimate, r * m.std_error / (m.estimate * m.estimate), m.n_samples, m.seed);
    Ok(RatioAnchor {
        inradius: r,
        polar_circumradius: big_r.as_f64(),
        contact: cp.v.iter().map(|x| x.as_f64()).collect(),
        section_mean_width: m,
        ratio,
    })
}

/// The three Table 1 quantities and their reference growth `f(n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub family: String,
    pub dim: usize,
    pub r_sq: f64,
    pub ratio: EstimatorResult,
    pub volradius_sq: f64,
    /// `f(n)` for each column.
    pub reference: [f64; 3],
    /// Each column divided by its `f(n)`.
    pub normalized: [f64; 3],
    pub contact: Vec<f64>,
}

/// Reference growth of the Table 1 columns for the four tabulated families.
pub fn table1_reference(spec: &FamilySpec) -> Result<[f64; 3]> {
    let n = (spec.dim() / 2) as f64;
    match spec {
        FamilySpec::Cube { .. } => Ok([1.0, (n / n.ln()).sqrt(), n]),
        FamilySpec::CrossPolytope { .. } => Ok([1.0 / n, 1.0 / n, 1.0 / n]),
        FamilySpec::SymplecticEllipsoid { axes } => {
            let a1 = axes[0];
            let harmonic = axes.iter().map(|a| 1.0 / a).sum::<f64>();
            let geo = (axes.iter().map(|a| a.ln()).sum::<f64>() / n).exp();
            Ok([a1, a1.sqrt() * (n / harmonic).sqrt(), geo])
        }
        FamilySpec::SymplecticBox { axes } => {
            let a1 = axes[0];
            let geo = (axes.iter().map(|a| a.ln()).sum::<f64>() / n).exp();
            // ln 1 = 0, so the minimum effectively starts at k = 2
            let min = axes
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| (n * a / ((i + 1) as f64).ln()).sqrt())
                .fold(f64::INFINITY, f64::min);
            Ok([a1, a1.sqrt() * min, n * geo])
        }
        other => Err(Error::Unsupported(format!("{} is not a Table 1 family", other.family_name()))),
    }
}

pub fn table1_row(spec: &FamilySpec, n: usize, stream: &RngStream, workers: usize) -> Result<Table1Row> {
    let reference = table1_reference(spec)?;
    let body = crate::body::make_body::<f64>(spec)?;
    let anchor = ratio_anchor(&body, n, stream, workers)?;
    let r_sq = anchor.inradius * anchor.inradius;
    let volradius_sq = volume_radius_sq(spec)?;
    let vals = [r_sq, anchor.ratio.estimate, volradius_sq];
    Ok(Table1Row {
        family: spec.family_name().to_string(),
        dim: spec.dim(),
        r_sq,
        ratio: anchor.ratio,
        volradius_sq,
        reference,
        normalized: [vals[0] / reference[0], vals[1] / reference[1], vals[2] / reference[2]],
        contact: anchor.contact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::make_body;
    use std::f64::consts::PI;

    fn body(s: &str) -> ConvexBody<f64> {
        make_body(&s.parse().unwrap()).unwrap()
    }

    fn mean_width_cube_oracle(m: usize) -> f64 {
        // E‖θ‖₁ = m E|θ_1| = m Γ(m/2) / (√π Γ((m+1)/2))
        let m = m as f64;
        m * (ln_gamma(m / 2.0) - ln_gamma((m + 1.0) / 2.0)).exp() / PI.sqrt()
    }

    #[test]
    fn radii_examples() {
        assert!((circumradius(&body("cube:8")).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(circumradius(&body("cross:8")).unwrap(), 1.0);
        assert!((circumradius(&body("ellipsoid:1,4")).unwrap() - (4.0 / PI).sqrt()).abs() < 1e-12);
        assert!((inradius(&body("cube:8")).unwrap() - 1.0).abs() < 1e-12);
        assert!((inradius(&body("cross:8")).unwrap() - 1.0 / 8f64.sqrt()).abs() < 1e-12);
        assert!((inradius(&body("ball:6:3")).unwrap() - 3.0).abs() < 1e-12);
        assert!((circumradius(&body("lp:8:4")).unwrap() - 8f64.powf(0.25)).abs() < 1e-12);
        assert_eq!(circumradius(&body("lp:8:1.5")).unwrap(), 1.0);
        assert!((circumradius(&body("ballproduct:8:2")).unwrap() - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radius_duality() {
        for name in ["cube:8", "cross:8", "lp:8:3", "lp:8:1.5", "ball:6:2", "ellipsoid:1,2,7", "box:1,4,9", "ballproduct:8:5"] {
            let k = body(name);
            let prod = inradius(&k).unwrap() * circumradius(&k.polar()).unwrap();
            assert!((prod - 1.0).abs() < 1e-10, "{name}");
        }
    }

    #[test]
    fn contact_point_examples() {
        let c = contact_point(&body("cube:8")).unwrap();
        assert_eq!(c.v, unit(8, 0, 1.0));
        let c = contact_point(&body("ellipsoid:1,4")).unwrap();
        assert!((&c.v - unit(4, 0, PI.sqrt())).amax() < 1e-12);
        assert_eq!(c.source, ContactSource::PrincipalAxis);
        let c = contact_point(&body("ball:6:1")).unwrap();
        assert!((&c.v - unit(6, 0, 1.0)).amax() < 1e-12);
    }

    #[test]
    fn contact_point_is_on_boundary_and_farthest() {
        let mut rng = RngStream::new(1, 0).rng();
        for name in ["cube:8", "cross:8", "lp:8:3", "lp:8:1.5", "ellipsoid:1,2,7", "box:1,4,9", "ballproduct:8:5", "ballproduct:8:0.5"] {
            let k = body(name);
            let p = k.polar();
            let c = contact_point(&k).unwrap();
            assert!((p.gauge(&c.v) - 1.0).abs() < 1e-9, "{name}");
            assert!((c.v.norm() - circumradius(&p).unwrap()).abs() < 1e-9, "{name}");
            for _ in 0..200 {
                let u = sphere_point::<f64, _>(&mut rng, k.dim());
                assert!(p.support(&u) <= c.v.norm() + 1e-9, "{name}");
            }
        }
    }

    #[test]
    fn mean_width_examples() {
        let s = RngStream::new(2, 0);
        let ball = mean_width(&body("ball:8:1"), 1000, &s, 0).unwrap();
        assert!((ball.estimate - 1.0).abs() < 1e-12 && ball.std_error < 1e-12);
        let cube = mean_width(&body("cube:8"), 20_000, &s, 0).unwrap();
        assert!((cube.estimate - mean_width_cube_oracle(8)).abs() < 4.0 * cube.std_error);
        let cross = mean_width(&body("cross:16"), 20_000, &s, 0).unwrap();
        assert!((0.5..0.8).contains(&cross.estimate));
    }

    #[test]
    fn mean_width_monotone_under_inclusion() {
        let s = RngStream::new(3, 0);
        let a = mean_width(&body("cross:8"), 5000, &s, 0).unwrap();
        let b = mean_width(&body("ball:8:1"), 5000, &s, 0).unwrap();
        let c = mean_width(&body("cube:8"), 5000, &s, 0).unwrap();
        assert!(a.estimate <= b.estimate + 4.0 * a.std_error);
        assert!(b.estimate <= c.estimate + 4.0 * c.std_error);
    }

    #[test]
    fn section_mean_width_examples() {
        let s = RngStream::new(4, 0);
        let ball = body("ball:6:1");
        let v = sphere_point::<f64, _>(&mut s.rng(), 6);
        let m = section_mean_width(&ball, &v, 500, &s, 0).unwrap();
        assert!((m.estimate - 1.0).abs() < 1e-8);
        // coordinate section of the 4-dim cross-polytope is the 3-dim one;
        // oracle: mean of ‖u‖_∞ over S² equals 3 ∫... estimated by direct sampling in ℝ³
        let cross = body("cross:4");
        let e1 = unit(4, 0, 1.0);
        let sec = section_mean_width(&cross, &e1, 20_000, &s, 0).unwrap();
        let mut rng = RngStream::new(99, 0).rng();
        let direct: Vec<f64> = (0..200_000).map(|_| sphere_point::<f64, _>(&mut rng, 3).amax()).collect();
        let reference = EstimatorResult::from_samples(&direct, 99);
        assert!(sec.z_distance(&reference) < 4.0, "{sec:?} vs {reference:?}");
    }

    #[test]
    fn sections_shrink_support_inside_the_hyperplane() {
        // compared on the same directions of v⊥: h_{K∩L}(u) <= h_K(u)
        let s = RngStream::new(5, 0);
        for name in ["cube:8", "cross:8", "ellipsoid:1,2,3,4"] {
            let p = body(name).polar();
            let v = contact_point(&body(name)).unwrap().v.normalize();
            let sec = section_mean_width(&p, &v, 4000, &s, 0).unwrap();
            let mut rng = s.child(0).rng();
            let hs: Vec<f64> = (0..4000).map(|_| p.support(&sphere_point_orthogonal(&mut rng, &v))).collect();
            let full = EstimatorResult::from_samples(&hs, 5);
            assert!(sec.estimate <= full.estimate + 4.0 * sec.std_error.hypot(full.std_error), "{name}");
        }
    }

    #[test]
    fn volume_radius_examples() {
        assert!((volume_radius_sq(&"ball:8:1".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((volume_radius_sq(&"ball:8:2".parse().unwrap()).unwrap() - 4.0).abs() < 1e-12);
        let e = volume_radius_sq(&"ellipsoid:1,4".parse().unwrap()).unwrap();
        assert!((e - 2.0 / PI).abs() < 1e-12);
        // same body as an explicit matrix
        let m: FamilySpec = r#"{"kind":"EllipsoidMatrix","matrix":[[3.141592653589793,0,0,0],[0,0.7853981633974483,0,0],[0,0,3.141592653589793,0],[0,0,0,0.7853981633974483]]}"#
            .parse()
            .unwrap();
        assert!((volume_radius_sq(&m).unwrap() - 2.0 / PI).abs() < 1e-12);
        // lp:∞ and lp:1 agree with cube and cross
        let c = volume_radius_sq(&"cube:8".parse().unwrap()).unwrap();
        assert!((volume_radius_sq(&"lp:8:inf".parse().unwrap()).unwrap() - c).abs() < 1e-12);
        assert!((volume_radius_sq(&"lp:8:2".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        let x = volume_radius_sq(&"cross:8".parse().unwrap()).unwrap();
        assert!((volume_radius_sq(&"lp:8:1".parse().unwrap()).unwrap() - x).abs() < 1e-12);
        for n in 4..=32 {
            let v = volume_radius_sq(&FamilySpec::Cube { dim: 2 * n }).unwrap();
            assert!((0.5..2.0).contains(&(v / n as f64)), "n={n}: {v}");
        }
        assert!(volume_radius_sq(&"ballproduct:8:2".parse().unwrap()).is_err());
    }

    #[test]
    fn nondeg_examples() {
        let s = RngStream::new(6, 0);
        for q in [0.5, 1.0, 2.0] {
            let nd = nondeg_functional(&body("ball:8:1"), q, 1000, &s, 0).unwrap();
            assert!((nd.estimate - 1.0).abs() < 1e-12);
        }
        let nd = nondeg_functional(&body("cube:16"), 0.5, 10_000, &s, 0).unwrap();
        assert!(nd.estimate <= 5.0 && nd.estimate >= 1.0 - 4.0 * nd.std_error);
        assert!(nondeg_functional(&body("cube:16"), 0.0, 1000, &s, 0).is_err());
    }

    #[test]
    fn nondeg_grows_as_box_thins() {
        let s = RngStream::new(7, 0);
        let mut last = 0.0;
        for eps in [1.0, 0.1, 0.01, 0.001] {
            let spec: FamilySpec =
                format!(r#"{{"kind":"VPolytope","vertices":{}}}"#, serde_json::to_string(&thin_box(eps)).unwrap())
                    .parse()
                    .unwrap();
            let nd = nondeg_functional(&make_body::<f64>(&spec).unwrap(), 1.0, 4000, &s, 0).unwrap();
            assert!(nd.estimate > last, "eps={eps}");
            last = nd.estimate;
        }
    }

    fn thin_box(eps: f64) -> Vec<Vec<f64>> {
        (0..16u32)
            .map(|mask| {
                (0..4)
                    .map(|i| {
                        let w = if i == 0 { eps } else { 1.0 };
                        if mask >> i & 1 == 1 {
                            -w
                        } else {
                            w
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn table1_small_cases() {
        let s = RngStream::new(8, 0);
        let row = table1_row(&"cube:8".parse().unwrap(), 2000, &s, 0).unwrap();
        assert!((row.r_sq - 1.0).abs() < 1e-12);
        // equal axes: a ball of radius 1/√π, so every column is exactly 1/π
        let row = table1_row(&"ellipsoid:1,1,1".parse().unwrap(), 2000, &s, 0).unwrap();
        for x in row.normalized {
            assert!((x - 1.0 / PI).abs() < 1e-9, "{row:?}");
        }
        let row = table1_row(&"cross:8".parse().unwrap(), 2000, &s, 0).unwrap();
        assert!(row.normalized.iter().all(|x| (0.2..5.0).contains(x)), "{row:?}");
        let row = table1_row(&"box:1,2,4".parse().unwrap(), 500, &s, 0).unwrap();
        assert!(row.ratio.estimate > 0.0);
        assert!(table1_row(&"ball:8:1".parse().unwrap(), 500, &s, 0).is_err());
    }
}
