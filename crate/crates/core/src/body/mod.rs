//! Centrally symmetric convex bodies given by evaluation oracles.
//!
//! A [`ConvexBody`] pairs the [`FamilySpec`] it was built from with a
//! [`Shape`], the concrete representation that answers support, gauge and
//! support-point queries. Polarity and rotation act on shapes exactly
//! (cube ↔ cross-polytope, ellipsoid form ↔ inverse form, product of balls ↔
//! hull of balls, V-polytope ↔ facet description), so polar bodies keep
//! whatever exact structure the original had.

mod lp;
mod section;
pub mod spec;

use nalgebra::{DMatrix, DVector};

pub use section::{golden_section_min, section_support};
pub use spec::FamilySpec;

use crate::error::{Error, Result};
use crate::rotation::RotationMatrix;
use crate::scalar::Real;

/// A Euclidean ball living on a subset of the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T: Real> {
    pub coords: Vec<usize>,
    pub radius: T,
}

impl<T: Real> Block<T> {
    fn norm(&self, x: &DVector<T>) -> T {
        self.coords.iter().map(|&i| x[i] * x[i]).fold(T::zero(), |a, b| a + b).sqrt()
    }

    /// Writes `radius * x_B / |x_B|` into `out` (first coordinate when `x_B = 0`).
    fn write_radial(&self, x: &DVector<T>, out: &mut DVector<T>) {
        let n = self.norm(x);
        if n > T::zero() {
            for &i in &self.coords {
                out[i] = self.radius * x[i] / n;
            }
        } else {
            out[self.coords[0]] = self.radius;
        }
    }
}

/// Concrete oracle representation of a body.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape<T: Real> {
    /// Axis-aligned box `∏[-w_i, w_i]`.
    Box { half_widths: DVector<T> },
    /// `conv{±r_i e_i}`.
    Cross { radii: DVector<T> },
    /// Unit ℓp ball for `1 < p < ∞`; `q` is the dual exponent.
    Lp { p: T, q: T },
    /// `{x : xᵀ form x <= 1}`; `inverse` is cached.
    Ellipsoid { form: DMatrix<T>, inverse: DMatrix<T> },
    /// Cartesian product of balls on disjoint coordinate blocks.
    BallProduct { blocks: Vec<Block<T>> },
    /// Convex hull of balls on disjoint coordinate blocks.
    BallHull { blocks: Vec<Block<T>> },
    /// `conv(vertices)`, centrally symmetric.
    VPolytope { vertices: Vec<DVector<T>> },
    /// `{x : ⟨a, x⟩ <= 1 for every normal a}`, centrally symmetric.
    Facets { normals: Vec<DVector<T>> },
    /// `rotation · inner`.
    Rotated { inner: Box<Shape<T>>, rotation: DMatrix<T> },
}

/// Extreme points of a polytopal body.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexSet<T: Real> {
    Explicit(Vec<DVector<T>>),
    /// The `2^dim` points `rotation · (σ ∘ half_widths)`, σ ∈ {±1}^dim,
    /// enumerated lazily by [`VertexSet::iter`].
    Signs {
        half_widths: DVector<T>,
        rotation: Option<DMatrix<T>>,
    },
}

impl<T: Real> VertexSet<T> {
    pub fn len(&self) -> usize {
        match self {
            VertexSet::Explicit(v) => v.len(),
            VertexSet::Signs { half_widths, .. } => 1usize.checked_shl(half_widths.len() as u32).unwrap_or(usize::MAX),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates the vertices. Sign vectors come in binary order with bit `i`
    /// set meaning a negative `i`-th coordinate.
    pub fn iter(&self) -> Box<dyn Iterator<Item = DVector<T>> + '_> {
        match self {
            VertexSet::Explicit(v) => Box::new(v.iter().cloned()),
            VertexSet::Signs { half_widths, rotation } => {
                let dim = half_widths.len();
                let count: u64 = 1u64 << dim.min(63);
                Box::new((0..count).map(move |mask| {
                    let x = DVector::from_fn(dim, |i, _| {
                        if mask >> i & 1 == 1 {
                            -half_widths[i]
                        } else {
                            half_widths[i]
                        }
                    });
                    match rotation {
                        Some(r) => r * x,
                        None => x,
                    }
                }))
            }
        }
    }
}

fn lp_norm<T: Real>(x: &DVector<T>, p: T) -> T {
    let m = x.amax();
    if m == T::zero() {
        return T::zero();
    }
    let s = x.iter().map(|xi| (xi.abs() / m).powf(p)).fold(T::zero(), |a, b| a + b);
    m * s.powf(T::one() / p)
}

fn sign_or_plus<T: Real>(x: T) -> T {
    if x < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

/// First index attaining the maximum of `score` (ties toward the smaller index).
fn first_argmax<T: Real>(scores: impl Iterator<Item = T>) -> Option<(usize, T)> {
    scores.enumerate().fold(None, |best, (i, s)| match best {
        Some((_, b)) if s <= b => best,
        _ => Some((i, s)),
    })
}

impl<T: Real> Shape<T> {
    /// `h(u) = sup_{x ∈ K} ⟨x, u⟩`.
    pub fn support(&self, u: &DVector<T>) -> T {
        match self {
            Shape::Box { half_widths } => u.iter().zip(half_widths.iter()).map(|(a, w)| a.abs() * *w).fold(T::zero(), |a, b| a + b),
            Shape::Cross { radii } => u.iter().zip(radii.iter()).map(|(a, r)| a.abs() * *r).fold(T::zero(), |a, b| a.max(b)),
            Shape::Lp { q, .. } => lp_norm(u, *q),
            Shape::Ellipsoid { inverse, .. } => quadratic(inverse, u).max(T::zero()).sqrt(),
            Shape::BallProduct { blocks } => blocks.iter().map(|b| b.radius * b.norm(u)).fold(T::zero(), |a, b| a + b),
            Shape::BallHull { blocks } => blocks.iter().map(|b| b.radius * b.norm(u)).fold(T::zero(), |a, b| a.max(b)),
            Shape::VPolytope { vertices } => vertices.iter().map(|v| v.dot(u)).fold(T::zero(), |a, b| a.max(b)),
            Shape::Facets { normals } => lp::maximize_in_polyhedron(normals, u)
                .expect("facet body of a spanning symmetric vertex set is bounded")
                .value,
            Shape::Rotated { inner, rotation } => inner.support(&rotation.tr_mul(u)),
        }
    }

    /// Minkowski functional `‖x‖_K = inf{λ > 0 : x ∈ λK}`.
    pub fn gauge(&self, x: &DVector<T>) -> T {
        match self {
            Shape::Box { half_widths } => x.iter().zip(half_widths.iter()).map(|(a, w)| a.abs() / *w).fold(T::zero(), |a, b| a.max(b)),
            Shape::Cross { radii } => x.iter().zip(radii.iter()).map(|(a, r)| a.abs() / *r).fold(T::zero(), |a, b| a + b),
            Shape::Lp { p, .. } => lp_norm(x, *p),
            Shape::Ellipsoid { form, .. } => quadratic(form, x).max(T::zero()).sqrt(),
            Shape::BallProduct { blocks } => blocks.iter().map(|b| b.norm(x) / b.radius).fold(T::zero(), |a, b| a.max(b)),
            Shape::BallHull { blocks } => blocks.iter().map(|b| b.norm(x) / b.radius).fold(T::zero(), |a, b| a + b),
            Shape::VPolytope { vertices } => lp::maximize_in_polyhedron(vertices, x)
                .expect("polar of a spanning symmetric vertex set is bounded")
                .value,
            Shape::Facets { normals } => normals.iter().map(|a| a.dot(x)).fold(T::zero(), |a, b| a.max(b)),
            Shape::Rotated { inner, rotation } => inner.gauge(&rotation.tr_mul(x)),
        }
    }

    /// A point of `K` maximising `⟨·, c⟩`. Ties break toward the smaller
    /// coordinate index and the positive sign; `c = 0` is treated as `e_1`.
    pub fn support_point(&self, c: &DVector<T>) -> DVector<T> {
        if c.iter().all(|x| *x == T::zero()) {
            let mut e1 = DVector::zeros(c.len());
            e1[0] = T::one();
            return self.support_point(&e1);
        }
        match self {
            Shape::Box { half_widths } => DVector::from_fn(c.len(), |i, _| sign_or_plus(c[i]) * half_widths[i]),
            Shape::Cross { radii } => {
                let (i, _) = first_argmax(c.iter().zip(radii.iter()).map(|(a, r)| a.abs() * *r)).expect("non-empty");
                let mut x = DVector::zeros(c.len());
                x[i] = sign_or_plus(c[i]) * radii[i];
                x
            }
            Shape::Lp { q, .. } => {
                let norm = lp_norm(c, *q);
                c.map(|ci| sign_or_plus(ci) * (ci.abs() / norm).powf(*q - T::one()))
            }
            Shape::Ellipsoid { inverse, .. } => {
                let w = inverse * c;
                let h = w.dot(c).max(T::zero()).sqrt();
                w / h
            }
            Shape::BallProduct { blocks } => {
                let mut x = DVector::zeros(c.len());
                for b in blocks {
                    b.write_radial(c, &mut x);
                }
                x
            }
            Shape::BallHull { blocks } => {
                let (k, _) = first_argmax(blocks.iter().map(|b| b.radius * b.norm(c))).expect("non-empty");
                let mut x = DVector::zeros(c.len());
                blocks[k].write_radial(c, &mut x);
                x
            }
            Shape::VPolytope { vertices } => {
                let (k, _) = first_argmax(vertices.iter().map(|v| v.dot(c))).expect("non-empty");
                vertices[k].clone()
            }
            Shape::Facets { normals } => lp::maximize_in_polyhedron(normals, c)
                .expect("facet body of a spanning symmetric vertex set is bounded")
                .point,
            Shape::Rotated { inner, rotation } => rotation * inner.support_point(&rotation.tr_mul(c)),
        }
    }

    /// The polar body `K° = {y : h_K(y) <= 1}`.
    pub fn polar(&self) -> Shape<T> {
        let invert_blocks = |blocks: &[Block<T>]| -> Vec<Block<T>> {
            blocks
                .iter()
                .map(|b| Block {
                    coords: b.coords.clone(),
                    radius: T::one() / b.radius,
                })
                .collect()
        };
        match self {
            Shape::Box { half_widths } => Shape::Cross {
                radii: half_widths.map(|w| T::one() / w),
            },
            Shape::Cross { radii } => Shape::Box {
                half_widths: radii.map(|r| T::one() / r),
            },
            Shape::Lp { p, q } => Shape::Lp { p: *q, q: *p },
            Shape::Ellipsoid { form, inverse } => Shape::Ellipsoid {
                form: inverse.clone(),
                inverse: form.clone(),
            },
            Shape::BallProduct { blocks } => Shape::BallHull {
                blocks: invert_blocks(blocks),
            },
            Shape::BallHull { blocks } => Shape::BallProduct {
                blocks: invert_blocks(blocks),
            },
            Shape::VPolytope { vertices } => Shape::Facets {
                normals: vertices.clone(),
            },
            Shape::Facets { normals } => Shape::VPolytope {
                vertices: normals.clone(),
            },
            Shape::Rotated { inner, rotation } => Shape::Rotated {
                inner: Box::new(inner.polar()),
                rotation: rotation.clone(),
            },
        }
    }

    /// The image `R·K`. Ellipsoids are transformed explicitly.
    pub fn rotate(&self, r: &DMatrix<T>) -> Shape<T> {
        match self {
            Shape::Ellipsoid { form, inverse } => Shape::Ellipsoid {
                form: symmetrize(r * form * r.transpose()),
                inverse: symmetrize(r * inverse * r.transpose()),
            },
            Shape::Rotated { inner, rotation } => Shape::Rotated {
                inner: inner.clone(),
                rotation: r * rotation,
            },
            other => Shape::Rotated {
                inner: Box::new(other.clone()),
                rotation: r.clone(),
            },
        }
    }

    fn scaled(&self, lambda: T) -> Result<Shape<T>> {
        let blocks = |bs: &[Block<T>]| -> Vec<Block<T>> {
            bs.iter()
                .map(|b| Block {
                    coords: b.coords.clone(),
                    radius: b.radius * lambda,
                })
                .collect()
        };
        Ok(match self {
            Shape::Box { half_widths } => Shape::Box {
                half_widths: half_widths * lambda,
            },
            Shape::Cross { radii } => Shape::Cross { radii: radii * lambda },
            Shape::Lp { .. } => return Err(Error::Unsupported("scaling an ℓp ball".into())),
            Shape::Ellipsoid { form, inverse } => Shape::Ellipsoid {
                form: form / (lambda * lambda),
                inverse: inverse * (lambda * lambda),
            },
            Shape::BallProduct { blocks: bs } => Shape::BallProduct { blocks: blocks(bs) },
            Shape::BallHull { blocks: bs } => Shape::BallHull { blocks: blocks(bs) },
            Shape::VPolytope { vertices } => Shape::VPolytope {
                vertices: vertices.iter().map(|v| v * lambda).collect(),
            },
            Shape::Facets { normals } => Shape::Facets {
                normals: normals.iter().map(|a| a / lambda).collect(),
            },
            Shape::Rotated { inner, rotation } => Shape::Rotated {
                inner: Box::new(inner.scaled(lambda)?),
                rotation: rotation.clone(),
            },
        })
    }

    pub fn vertices(&self) -> Option<VertexSet<T>> {
        match self {
            Shape::Box { half_widths } => Some(VertexSet::Signs {
                half_widths: half_widths.clone(),
                rotation: None,
            }),
            Shape::Cross { radii } => {
                let dim = radii.len();
                let mut out = Vec::with_capacity(2 * dim);
                for i in 0..dim {
                    for s in [T::one(), -T::one()] {
                        let mut v = DVector::zeros(dim);
                        v[i] = s * radii[i];
                        out.push(v);
                    }
                }
                Some(VertexSet::Explicit(out))
            }
            Shape::VPolytope { vertices } => Some(VertexSet::Explicit(vertices.clone())),
            Shape::Rotated { inner, rotation } => inner.vertices().map(|vs| match vs {
                VertexSet::Explicit(v) => VertexSet::Explicit(v.iter().map(|x| rotation * x).collect()),
                VertexSet::Signs { half_widths, rotation: r0 } => VertexSet::Signs {
                    half_widths,
                    rotation: Some(match r0 {
                        Some(r0) => rotation * r0,
                        None => rotation.clone(),
                    }),
                },
            }),
            _ => None,
        }
    }

    pub fn quad_form(&self) -> Option<&DMatrix<T>> {
        match self {
            Shape::Ellipsoid { form, .. } => Some(form),
            _ => None,
        }
    }
}

fn quadratic<T: Real>(m: &DMatrix<T>, x: &DVector<T>) -> T {
    (m * x).dot(x)
}

fn symmetrize<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    (&m + m.transpose()) * T::lit(0.5)
}

/// An immutable convex body: family metadata plus its oracle shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody<T: Real> {
    spec: FamilySpec,
    dim: usize,
    shape: Shape<T>,
}

impl<T: Real> ConvexBody<T> {
    /// Wraps an explicit shape; `spec` is only used as metadata.
    pub fn from_shape(spec: FamilySpec, dim: usize, shape: Shape<T>) -> Self {
        ConvexBody { spec, dim, shape }
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape<T> {
        &self.shape
    }

    pub fn support(&self, u: &DVector<T>) -> T {
        self.shape.support(u)
    }

    pub fn gauge(&self, x: &DVector<T>) -> T {
        self.shape.gauge(x)
    }

    pub fn support_point(&self, c: &DVector<T>) -> DVector<T> {
        self.shape.support_point(c)
    }

    pub fn vertices(&self) -> Option<VertexSet<T>> {
        self.shape.vertices()
    }

    pub fn quad_form(&self) -> Option<&DMatrix<T>> {
        self.shape.quad_form()
    }

    pub fn polar(&self) -> ConvexBody<T> {
        let spec = match &self.spec {
            FamilySpec::Cube { dim } => FamilySpec::CrossPolytope { dim: *dim },
            FamilySpec::CrossPolytope { dim } => FamilySpec::Cube { dim: *dim },
            FamilySpec::LpBall { dim, p } => FamilySpec::LpBall {
                dim: *dim,
                p: dual_exponent(*p),
            },
            FamilySpec::EuclideanBall { dim, radius } => FamilySpec::EuclideanBall {
                dim: *dim,
                radius: 1.0 / radius,
            },
            FamilySpec::EllipsoidMatrix { .. } => {
                let inv = self.shape.polar();
                let m = inv.quad_form().expect("ellipsoid polar is an ellipsoid");
                FamilySpec::EllipsoidMatrix {
                    matrix: (0..self.dim).map(|i| (0..self.dim).map(|j| m[(i, j)].as_f64()).collect()).collect(),
                }
            }
            FamilySpec::Polar { of } => (**of).clone(),
            other => FamilySpec::Polar { of: Box::new(other.clone()) },
        };
        ConvexBody {
            spec,
            dim: self.dim,
            shape: self.shape.polar(),
        }
    }

    /// The body `O·K`.
    pub fn rotated(&self, rotation: &RotationMatrix<T>) -> Result<ConvexBody<T>> {
        if rotation.dim() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0} rotation", self.dim),
                found: format!("{0}x{0}", rotation.dim()),
            });
        }
        Ok(ConvexBody {
            spec: FamilySpec::Rotated {
                of: Box::new(self.spec.clone()),
            },
            dim: self.dim,
            shape: self.shape.rotate(rotation.matrix()),
        })
    }

    /// `λK` for `λ > 0`.
    pub fn scaled(&self, lambda: T) -> Result<ConvexBody<T>> {
        if lambda <= T::zero() {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        Ok(ConvexBody {
            spec: self.spec.clone(),
            dim: self.dim,
            shape: self.shape.scaled(lambda)?,
        })
    }
}

fn dual_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Symplectic coordinate index of `x_i` and `y_i` for plane `i` of `n`.
fn plane(i: usize, n: usize) -> [usize; 2] {
    [i, n + i]
}

/// Builds the oracle bundle for a family.
pub fn make_body<T: Real>(spec: &FamilySpec) -> Result<ConvexBody<T>> {
    spec.validate()?;
    let dim = spec.dim();
    let ones = || DVector::<T>::from_element(dim, T::one());
    let shape = match spec {
        FamilySpec::Cube { .. } => Shape::Box { half_widths: ones() },
        FamilySpec::CrossPolytope { .. } => Shape::Cross { radii: ones() },
        FamilySpec::LpBall { p, .. } => {
            if *p == 1.0 {
                Shape::Cross { radii: ones() }
            } else if p.is_infinite() {
                Shape::Box { half_widths: ones() }
            } else if *p == 2.0 {
                ellipsoid_from_diagonal(ones())
            } else {
                Shape::Lp {
                    p: T::lit(*p),
                    q: T::lit(dual_exponent(*p)),
                }
            }
        }
        FamilySpec::EuclideanBall { radius, .. } => {
            let r = T::lit(*radius);
            ellipsoid_from_diagonal(DVector::from_element(dim, T::one() / (r * r)))
        }
        FamilySpec::SymplecticEllipsoid { axes } => {
            let n = axes.len();
            let mut d = DVector::zeros(dim);
            for (i, a) in axes.iter().enumerate() {
                for k in plane(i, n) {
                    d[k] = T::pi() / T::lit(*a);
                }
            }
            ellipsoid_from_diagonal(d)
        }
        FamilySpec::SymplecticBox { axes } => {
            let n = axes.len();
            let mut w = DVector::zeros(dim);
            for (i, a) in axes.iter().enumerate() {
                for k in plane(i, n) {
                    w[k] = T::lit(a.sqrt() / 2.0);
                }
            }
            Shape::Box { half_widths: w }
        }
        FamilySpec::BallProduct { radius, lambda, .. } => {
            let n = dim / 2;
            let disc = plane(0, n).to_vec();
            let rest = (0..dim).filter(|k| !disc.contains(k)).collect();
            Shape::BallProduct {
                blocks: vec![
                    Block {
                        coords: disc,
                        radius: T::lit(*radius),
                    },
                    Block {
                        coords: rest,
                        radius: T::lit(*lambda),
                    },
                ],
            }
        }
        FamilySpec::VPolytope { vertices } => Shape::VPolytope {
            vertices: vertices.iter().map(|v| DVector::from_iterator(dim, v.iter().map(|x| T::lit(*x)))).collect(),
        },
        FamilySpec::EllipsoidMatrix { matrix } => {
            let m = spec::square_matrix(matrix)?;
            let form = symmetrize(m.map(T::lit));
            let inverse = form.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
            Shape::Ellipsoid {
                form,
                inverse: symmetrize(inverse),
            }
        }
        FamilySpec::Polar { of } => return Ok(make_body::<T>(of)?.polar()),
        FamilySpec::Rotated { .. } => {
            return Err(Error::Unsupported(
                "building a rotated family from its echo; use ConvexBody::rotated".into(),
            ))
        }
    };
    Ok(ConvexBody {
        spec: spec.clone(),
        dim,
        shape,
    })
}

fn ellipsoid_from_diagonal<T: Real>(d: DVector<T>) -> Shape<T> {
    Shape::Ellipsoid {
        inverse: DMatrix::from_diagonal(&d.map(|x| T::one() / x)),
        form: DMatrix::from_diagonal(&d),
    }
}

/// Polar of a body (free-function form).
pub fn polar<T: Real>(body: &ConvexBody<T>) -> ConvexBody<T> {
    body.polar()
}
