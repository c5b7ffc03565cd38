//! Support function of a central section `K ∩ L`, for a hyperplane `L = v⊥`.
//!
//! By duality `h_{K∩L}(u) = min_t h_K(u + t v)` for `u ∈ L`; the right side
//! is convex in `t`, so a bracket plus golden-section search suffices.

use nalgebra::DVector;

use super::ConvexBody;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_DOUBLINGS: usize = 60;

/// Minimises a convex function on `[a, b]` by golden-section search until the
/// bracket is shorter than `width`. Returns the best abscissa and value seen.
pub fn golden_section_min<T: Real>(mut f: impl FnMut(T) -> T, a: T, b: T, width: T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if b - a <= width {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `h_{K ∩ v⊥}(u)` for a unit normal `v` and `u ⟂ v`.
pub fn section_support<T: Real>(body: &ConvexBody<T>, v: &DVector<T>, u: &DVector<T>) -> Result<T> {
    if v.len() != body.dim() || u.len() != body.dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("vectors of length {}", body.dim()),
            found: format!("{} and {}", v.len(), u.len()),
        });
    }
    let vn = v.norm();
    if (vn - T::one()).abs() > T::tol(1e-9, 16.0) {
        return Err(Error::NotUnit(vn.as_f64()));
    }
    let un = u.norm();
    if u.dot(v).abs() > T::tol(1e-12, 64.0) * un.max(T::one()) {
        return Err(Error::InvalidParameter(format!(
            "direction is not orthogonal to the normal (⟨u, v⟩ = {:e})",
            u.dot(v).as_f64()
        )));
    }
    let f0 = body.support(u);
    if f0 == T::zero() {
        return Ok(f0);
    }
    let hv = body.support(v);
    let mut w = u.clone();
    let mut f = |t: T| {
        w.copy_from(u);
        w.axpy(t, v, T::one());
        body.support(&w)
    };
    // The minimiser lies within |t| <= 2 h(u) / r(K), so this bracket closes fast.
    let mut s = f0 / hv;
    let mut closed = false;
    for _ in 0..MAX_DOUBLINGS {
        if f(s) >= f0 && f(-s) >= f0 {
            closed = true;
            break;
        }
        s += s;
    }
    if !closed {
        return Err(Error::BracketExpansion);
    }
    let width = T::tol(1e-9, 64.0) * (T::one() + f0) / hv;
    let (_, best) = golden_section_min(f, -s, s, width);
    Ok(best.min(f0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::make_body;
    use crate::rotation::RngStream;
    use nalgebra::dvector;
    use rand::Rng;

    #[test]
    fn golden_section_finds_kink() {
        let (t, v) = golden_section_min(|t: f64| (t - 0.3).abs() + 1.0, -5.0, 5.0, 1e-12);
        assert!((t - 0.3).abs() < 1e-10);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cube_section_through_diagonal() {
        // K ∩ (1,1)⊥ in [-1,1]²: segment from (-1,1) to (1,-1)
        let k = make_body::<f64>(&"cube:2".parse().unwrap()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = section_support(&k, &dvector![s, s], &dvector![s, -s]).unwrap();
        assert!((h - 2.0 * s).abs() < 1e-8);
    }

    #[test]
    fn ball_section_is_ball() {
        let k = make_body::<f64>(&"ball:6:2".parse().unwrap()).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..20 {
            let v = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0)).normalize();
            let x = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let u = &x - &v * v.dot(&x);
            let h = section_support(&k, &v, &u).unwrap();
            assert!((h - 2.0 * u.norm()).abs() < 1e-8 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn section_never_exceeds_body() {
        let mut rng = RngStream::new(6, 0).rng();
        for name in ["cube:6", "cross:6", "lp:6:3", "ballproduct:6:4", "box:1,4,9"] {
            let k = make_body::<f64>(&name.parse().unwrap()).unwrap();
            for _ in 0..20 {
                let v = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0)).normalize();
                let x = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
                let u = &x - &v * v.dot(&x);
                let h = section_support(&k, &v, &u).unwrap();
                assert!(h <= k.support(&u) + 1e-12, "{name}");
                // brute-force grid over t as an independent check
                let grid = (-4000..=4000)
                    .map(|i| k.support(&(&u + &v * (i as f64 * 1e-3))))
                    .fold(f64::INFINITY, f64::min);
                assert!(h <= grid + 1e-9, "{name}: {h} vs grid {grid}");
                assert!(grid - h < 5e-3 * (1.0 + grid), "{name}: {h} vs grid {grid}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let k = make_body::<f64>(&"cube:2".parse().unwrap()).unwrap();
        assert!(matches!(
            section_support(&k, &dvector![2.0, 0.0], &dvector![0.0, 1.0]),
            Err(Error::NotUnit(_))
        ));
        assert!(matches!(
            section_support(&k, &dvector![1.0, 0.0], &dvector![1.0, 1.0]),
            Err(Error::InvalidParameter(_))
        ));
    }
}
