//! Small dense simplex for `max ⟨c, y⟩ s.t. ⟨a_i, y⟩ <= 1`.
//!
//! This is the only linear program the oracles need: the support function of
//! a polyhedron given by its facet normals, equivalently the gauge of the
//! V-polytope whose vertices are those normals. The origin is feasible, so the
//! slack basis starts the method without a phase one. Bland's rule keeps the
//! highly degenerate origin vertex from cycling.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) struct LpSolution<T: Real> {
    pub value: T,
    pub point: DVector<T>,
}

pub(crate) fn maximize_in_polyhedron<T: Real>(rows: &[DVector<T>], c: &DVector<T>) -> Result<LpSolution<T>> {
    let d = c.len();
    let m = rows.len();
    // columns: y+ (d), y- (d), slack (m), rhs
    let width = 2 * d + m + 1;
    let rhs = width - 1;
    let mut tab = vec![T::zero(); (m + 1) * width];
    for (i, a) in rows.iter().enumerate() {
        let row = &mut tab[i * width..(i + 1) * width];
        for j in 0..d {
            row[j] = a[j];
            row[d + j] = -a[j];
        }
        row[2 * d + i] = T::one();
        row[rhs] = T::one();
    }
    // objective row holds reduced costs c_j - z_j
    {
        let obj = &mut tab[m * width..];
        for j in 0..d {
            obj[j] = c[j];
            obj[d + j] = -c[j];
        }
    }
    let mut basis: Vec<usize> = (0..m).map(|i| 2 * d + i).collect();
    let scale = c.amax().max(T::one());
    let eps = T::tol(1e-12, 64.0) * scale;
    let max_pivots = 50 * (m + 2 * d + 1);

    for _ in 0..max_pivots {
        let obj = &tab[m * width..];
        let Some(enter) = (0..rhs).find(|&j| obj[j] > eps) else {
            let mut point = DVector::zeros(d);
            for (i, &b) in basis.iter().enumerate() {
                let val = tab[i * width + rhs];
                if b < d {
                    point[b] += val;
                } else if b < 2 * d {
                    point[b - d] -= val;
                }
            }
            let value = point.dot(c);
            return Ok(LpSolution { value, point });
        };
        let mut leave: Option<(usize, T)> = None;
        for i in 0..m {
            let a = tab[i * width + enter];
            if a > eps {
                let ratio = tab[i * width + rhs] / a;
                let better = match leave {
                    None => true,
                    Some((l, best)) => ratio < best - eps || (ratio <= best + eps && basis[i] < basis[l]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Err(Error::Unbounded);
        };
        pivot(&mut tab, width, pivot_row, enter);
        basis[pivot_row] = enter;
    }
    Err(Error::NoConvergence)
}

fn pivot<T: Real>(tab: &mut [T], width: usize, row: usize, col: usize) {
    let p = tab[row * width + col];
    for x in &mut tab[row * width..(row + 1) * width] {
        *x /= p;
    }
    let pivot_row: Vec<T> = tab[row * width..(row + 1) * width].to_vec();
    let rows = tab.len() / width;
    for r in 0..rows {
        if r == row {
            continue;
        }
        let f = tab[r * width + col];
        if f == T::zero() {
            continue;
        }
        for (x, &q) in tab[r * width..(r + 1) * width].iter_mut().zip(&pivot_row) {
            *x -= f * q;
        }
    }
}
