//! Scalar abstraction shared by every geometric routine.
//!
//! Oracles, rotations and the α engine are written once over [`Real`] and
//! instantiated at `f64` (the default everywhere) or `f32`. Monte Carlo
//! reductions always accumulate in `f64`.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating point scalar usable by the geometry kernels: `f32` or `f64`.
pub trait Real: RealField + Copy + ToPrimitive {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Widening conversion used by the estimators.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance that is `tol` in `f64` but never tighter than what the
    /// type can resolve (`scale * machine epsilon`).
    #[inline]
    fn tol(tol: f64, scale: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(scale);
        Self::lit(tol).max(floor)
    }
}

impl<T: RealField + Copy + ToPrimitive> Real for T {}
