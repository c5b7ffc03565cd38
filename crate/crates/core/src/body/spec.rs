//! Parametric descriptors for the supported body families and the compact
//! string grammar used on the command line (`cube:8`, `lp:8:1.5`,
//! `ellipsoid:1,4,9`, ...). Matrix-valued families are given as JSON.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A body family together with its parameters.
///
/// Symplectic coordinates are ordered `(x_1..x_n, y_1..y_n)` throughout, so
/// the i-th complex plane is spanned by coordinates `i` and `n + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FamilySpec {
    /// `[-1, 1]^dim`.
    Cube { dim: usize },
    /// `conv{±e_i}`.
    CrossPolytope { dim: usize },
    /// Unit ball of the ℓp norm, `1 <= p <= ∞`.
    LpBall {
        dim: usize,
        #[serde(with = "exponent")]
        p: f64,
    },
    EuclideanBall { dim: usize, radius: f64 },
    /// `E(a) = {Σ π|z_i|²/a_i <= 1}` with `0 < a_1 <= ... <= a_n`.
    SymplecticEllipsoid { axes: Vec<f64> },
    /// Centered box with side `√a_i` in both coordinates of plane `i`.
    SymplecticBox { axes: Vec<f64> },
    /// `B²(radius) × B^{dim-2}(lambda)`, the disc in the first complex plane.
    BallProduct {
        dim: usize,
        radius: f64,
        lambda: f64,
    },
    /// `conv(vertices)`; the list must be centrally symmetric.
    VPolytope { vertices: Vec<Vec<f64>> },
    /// `{x : xᵀ A x <= 1}` for a symmetric positive definite `A`.
    EllipsoidMatrix { matrix: Vec<Vec<f64>> },
    /// Polar body of another family.
    Polar { of: Box<FamilySpec> },
    /// Image of another family under a rotation (matrix not echoed).
    Rotated { of: Box<FamilySpec> },
}

impl FamilySpec {
    pub fn dim(&self) -> usize {
        match self {
            FamilySpec::Cube { dim }
            | FamilySpec::CrossPolytope { dim }
            | FamilySpec::LpBall { dim, .. }
            | FamilySpec::EuclideanBall { dim, .. }
            | FamilySpec::BallProduct { dim, .. } => *dim,
            FamilySpec::SymplecticEllipsoid { axes } | FamilySpec::SymplecticBox { axes } => {
                2 * axes.len()
            }
            FamilySpec::VPolytope { vertices } => vertices.first().map_or(0, Vec::len),
            FamilySpec::EllipsoidMatrix { matrix } => matrix.len(),
            FamilySpec::Polar { of } | FamilySpec::Rotated { of } => of.dim(),
        }
    }

    /// Short family name used in reports and CSV rows.
    pub fn family_name(&self) -> &'static str {
        match self {
            FamilySpec::Cube { .. } => "cube",
            FamilySpec::CrossPolytope { .. } => "cross",
            FamilySpec::LpBall { .. } => "lp",
            FamilySpec::EuclideanBall { .. } => "ball",
            FamilySpec::SymplecticEllipsoid { .. } => "ellipsoid",
            FamilySpec::SymplecticBox { .. } => "box",
            FamilySpec::BallProduct { .. } => "ballproduct",
            FamilySpec::VPolytope { .. } => "vpolytope",
            FamilySpec::EllipsoidMatrix { .. } => "ellipsoid-matrix",
            FamilySpec::Polar { .. } => "polar",
            FamilySpec::Rotated { .. } => "rotated",
        }
    }

    /// Same family at another dimension, for families parametrised by `dim`.
    pub fn with_dim(&self, dim: usize) -> Result<FamilySpec> {
        let spec = match self {
            FamilySpec::Cube { .. } => FamilySpec::Cube { dim },
            FamilySpec::CrossPolytope { .. } => FamilySpec::CrossPolytope { dim },
            FamilySpec::LpBall { p, .. } => FamilySpec::LpBall { dim, p: *p },
            FamilySpec::EuclideanBall { radius, .. } => FamilySpec::EuclideanBall {
                dim,
                radius: *radius,
            },
            FamilySpec::BallProduct { radius, lambda, .. } => FamilySpec::BallProduct {
                dim,
                radius: *radius,
                lambda: *lambda,
            },
            other => {
                return Err(Error::Unsupported(format!(
                    "changing the dimension of a {} body",
                    other.family_name()
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A family by name at a given dimension. The symplectic families get the
    /// axes `a_i = i²`, so `ellipsoid` at dimension 4 is `E(1, 4)`.
    pub fn named(family: &str, dim: usize) -> Result<FamilySpec> {
        let squares = || (1..=dim / 2).map(|i| (i * i) as f64).collect::<Vec<_>>();
        let spec = match family.trim().to_ascii_lowercase().as_str() {
            "cube" => FamilySpec::Cube { dim },
            "cross" => FamilySpec::CrossPolytope { dim },
            "ball" => FamilySpec::EuclideanBall { dim, radius: 1.0 },
            "ellipsoid" => FamilySpec::SymplecticEllipsoid { axes: squares() },
            "box" => FamilySpec::SymplecticBox { axes: squares() },
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every invariant that does not need the oracle construction.
    pub fn validate(&self) -> Result<()> {
        let check_dim = |dim: usize| -> Result<()> {
            if dim == 0 {
                Err(Error::DimensionTooSmall { dim, min: 2 })
            } else if dim % 2 == 1 {
                Err(Error::OddDimension(dim))
            } else {
                Ok(())
            }
        };
        let positive = |name: &str, x: f64| -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
            }
        };
        match self {
            FamilySpec::Cube { dim } | FamilySpec::CrossPolytope { dim } => check_dim(*dim),
            FamilySpec::LpBall { dim, p } => {
                check_dim(*dim)?;
                if p.is_nan() || *p < 1.0 {
                    return Err(Error::InvalidParameter(format!("ℓp exponent must be in [1, ∞], got {p}")));
                }
                Ok(())
            }
            FamilySpec::EuclideanBall { dim, radius } => {
                check_dim(*dim)?;
                positive("radius", *radius)
            }
            FamilySpec::SymplecticEllipsoid { axes } | FamilySpec::SymplecticBox { axes } => {
                if axes.is_empty() {
                    return Err(Error::DimensionTooSmall { dim: 0, min: 2 });
                }
                let sorted = axes.windows(2).all(|w| w[0] <= w[1]);
                if !sorted || axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::UnsortedAxes);
                }
                Ok(())
            }
            FamilySpec::BallProduct { dim, radius, lambda } => {
                check_dim(*dim)?;
                if *dim < 4 {
                    return Err(Error::DimensionTooSmall { dim: *dim, min: 4 });
                }
                positive("radius", *radius)?;
                positive("lambda", *lambda)
            }
            FamilySpec::VPolytope { vertices } => validate_vertices(vertices),
            FamilySpec::EllipsoidMatrix { matrix } => {
                let m = square_matrix(matrix)?;
                check_dim(m.nrows())?;
                if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                if m.clone().cholesky().is_none() {
                    return Err(Error::NotPositiveDefinite);
                }
                Ok(())
            }
            FamilySpec::Polar { of } | FamilySpec::Rotated { of } => of.validate(),
        }
    }
}

/// Converts nested rows into a square matrix.
pub(crate) fn square_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{} rows of lengths {:?}", n, rows.iter().map(Vec::len).collect::<Vec<_>>()),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn validate_vertices(vertices: &[Vec<f64>]) -> Result<()> {
    let dim = vertices.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::DimensionTooSmall { dim, min: 2 });
    }
    if dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    if let Some(bad) = vertices.iter().find(|v| v.len() != dim) {
        return Err(Error::ShapeMismatch {
            expected: format!("vertices of length {dim}"),
            found: format!("length {}", bad.len()),
        });
    }
    let scale = vertices
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()))
        .max(1.0);
    for (i, v) in vertices.iter().enumerate() {
        let mirrored = vertices
            .iter()
            .any(|w| v.iter().zip(w).all(|(a, b)| (a + b).abs() <= 1e-9 * scale));
        if !mirrored {
            return Err(Error::AsymmetricVertices(i));
        }
    }
    let m = DMatrix::from_fn(dim, vertices.len(), |i, j| vertices[j][i]);
    let rank = m.rank(1e-10 * scale);
    if rank < dim {
        return Err(Error::DegenerateVertices { rank, dim });
    }
    Ok(())
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[f64]| xs.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
        match self {
            FamilySpec::Cube { dim } => write!(f, "cube:{dim}"),
            FamilySpec::CrossPolytope { dim } => write!(f, "cross:{dim}"),
            FamilySpec::LpBall { dim, p } if p.is_infinite() => write!(f, "lp:{dim}:inf"),
            FamilySpec::LpBall { dim, p } => write!(f, "lp:{dim}:{p}"),
            FamilySpec::EuclideanBall { dim, radius } => write!(f, "ball:{dim}:{radius}"),
            FamilySpec::SymplecticEllipsoid { axes } => write!(f, "ellipsoid:{}", list(axes)),
            FamilySpec::SymplecticBox { axes } => write!(f, "box:{}", list(axes)),
            FamilySpec::BallProduct { dim, radius, lambda } if *radius == 1.0 => {
                write!(f, "ballproduct:{dim}:{lambda}")
            }
            FamilySpec::BallProduct { dim, radius, lambda } => {
                write!(f, "ballproduct:{dim}:{lambda}:{radius}")
            }
            FamilySpec::Polar { of } => write!(f, "polar({of})"),
            FamilySpec::Rotated { of } => write!(f, "rotated({of})"),
            other => {
                let json = serde_json::to_string(other).map_err(|_| fmt::Error)?;
                f.write_str(&json)
            }
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let spec: FamilySpec =
                serde_json::from_str(s).map_err(|e| Error::Parse(format!("body JSON: {e}")))?;
            spec.validate()?;
            return Ok(spec);
        }
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default().to_ascii_lowercase();
        let args: Vec<&str> = parts.collect();
        let int = |i: usize| -> Result<usize> {
            let raw = args.get(i).ok_or_else(|| Error::Parse(format!("`{s}`: missing field {}", i + 1)))?;
            raw.parse().map_err(|_| Error::Parse(format!("`{s}`: `{raw}` is not an integer")))
        };
        let real = |i: usize| -> Result<f64> {
            let raw = args.get(i).ok_or_else(|| Error::Parse(format!("`{s}`: missing field {}", i + 1)))?;
            parse_real(raw).ok_or_else(|| Error::Parse(format!("`{s}`: `{raw}` is not a number")))
        };
        let axes = || -> Result<Vec<f64>> {
            let raw = args.first().ok_or_else(|| Error::Parse(format!("`{s}`: missing axis list")))?;
            raw.split(',')
                .map(|a| parse_real(a).ok_or_else(|| Error::Parse(format!("`{s}`: bad axis `{a}`"))))
                .collect()
        };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if args.len() < lo || args.len() > hi {
                Err(Error::Parse(format!("`{s}`: expected {lo}..={hi} fields after `{head}`")))
            } else {
                Ok(())
            }
        };
        let spec = match head.as_str() {
            "cube" => {
                arity(1, 1)?;
                FamilySpec::Cube { dim: int(0)? }
            }
            "cross" => {
                arity(1, 1)?;
                FamilySpec::CrossPolytope { dim: int(0)? }
            }
            "lp" => {
                arity(2, 2)?;
                FamilySpec::LpBall { dim: int(0)?, p: real(1)? }
            }
            "ball" => {
                arity(1, 2)?;
                let radius = if args.len() > 1 { real(1)? } else { 1.0 };
                FamilySpec::EuclideanBall { dim: int(0)?, radius }
            }
            "ellipsoid" => {
                arity(1, 1)?;
                FamilySpec::SymplecticEllipsoid { axes: axes()? }
            }
            "box" => {
                arity(1, 1)?;
                FamilySpec::SymplecticBox { axes: axes()? }
            }
            "ballproduct" => {
                arity(2, 3)?;
                let radius = if args.len() > 2 { real(2)? } else { 1.0 };
                FamilySpec::BallProduct {
                    dim: int(0)?,
                    radius,
                    lambda: real(1)?,
                }
            }
            _ => return Err(Error::Parse(format!("unknown body family `{head}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_real(raw: &str) -> Option<f64> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Some(f64::INFINITY),
        other => other.parse().ok(),
    }
}

/// JSON has no infinity; `p = ∞` travels as the string `"inf"`.
mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(p),
            Raw::Text(t) => super::parse_real(&t).ok_or_else(|| de::Error::custom(format!("bad exponent `{t}`"))),
        }
    }
}
