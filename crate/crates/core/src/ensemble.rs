//! Experiments over Haar-random rotations `O ∈ SO(2n)`: moments of `α(OK)`,
//! capacity brackets, the exact-mean identity, tail profiles, ψ₂ estimates
//! and the `K_λ` sweep. All estimators run in `f64`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::alpha::{ehz_ellipsoid, AlphaMethod, AlphaOptions, AlphaPlan};
use crate::body::{make_body, section_support, ConvexBody, FamilySpec};
use crate::error::{Error, Result};
use crate::geom::{circumradius, contact_point, mean_width, ratio_anchor, section_mean_width, RatioAnchor};
use crate::parallel::{sample_map, sample_map_lossy};
use crate::rotation::{apply_j_vec, haar_frame, haar_rotation, RngStream};
use crate::stats::{bootstrap_moment_se, linear_fit, moment_root, EstimatorResult, Welford};

pub const MIN_SAMPLES: usize = 100;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Sampling protocol for `E_μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub body: FamilySpec,
    pub n_samples: usize,
    pub seed: u64,
    pub p: f64,
    /// Thread count; 0 uses the global rayon pool.
    pub workers: usize,
    #[serde(default)]
    pub allow_heuristic: bool,
    #[serde(default)]
    pub bootstrap: bool,
}

impl EnsembleConfig {
    pub fn new(body: FamilySpec, n_samples: usize, seed: u64, p: f64) -> Self {
        EnsembleConfig {
            body,
            n_samples,
            seed,
            p,
            workers: 0,
            allow_heuristic: false,
            bootstrap: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_SAMPLES,
                got: self.n_samples,
            });
        }
        if self.p == 0.0 || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!("moment order must be finite and nonzero, got {}", self.p)));
        }
        Ok(())
    }

    pub fn stream(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }
}

/// Raw `α(OᵢK)` samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaEnsemble {
    pub samples: Vec<f64>,
    pub method: AlphaMethod,
    /// False if any alternating run hit its iteration cap.
    pub converged: bool,
}

fn require_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n })
    } else {
        Ok(())
    }
}

/// `α(OᵢK)` for `n` Haar rotations; sample `i` is a function of `(stream, i)`.
pub fn alpha_samples(body: &ConvexBody<f64>, n: usize, stream: &RngStream, workers: usize, allow_heuristic: bool) -> Result<AlphaEnsemble> {
    require_samples(n)?;
    let plan = AlphaPlan::new(body, AlphaOptions::default())?;
    let method = plan.method();
    if !method.is_exact() && !allow_heuristic {
        return Err(Error::HeuristicRejected);
    }
    let dim = body.dim();
    let raw = sample_map(n, stream, workers, |_, rng| {
        let o = haar_rotation::<f64, _>(rng, dim)?;
        let a = plan.evaluate(Some(&o), rng)?;
        Ok((a.value, a.converged))
    })?;
    Ok(AlphaEnsemble {
        converged: raw.iter().all(|(_, c)| *c),
        samples: raw.into_iter().map(|(a, _)| a).collect(),
        method,
    })
}

/// `(E α(OK)^p)^{1/p}` with the raw samples kept for later analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub moment: EstimatorResult,
    pub bootstrap_se: Option<f64>,
    pub p: f64,
    pub method: AlphaMethod,
    pub converged: bool,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

fn bootstrap(xs: &[f64], p: f64, stream: &RngStream) -> Result<f64> {
    bootstrap_moment_se(xs, p, BOOTSTRAP_RESAMPLES, &mut stream.child(u64::MAX).rng())
}

pub fn expect_alpha_moment(cfg: &EnsembleConfig) -> Result<MomentReport> {
    cfg.validate()?;
    let body = make_body::<f64>(&cfg.body)?;
    expect_alpha_moment_for(&body, cfg)
}

/// [`expect_alpha_moment`] for an already built body (rotated bodies, say).
pub fn expect_alpha_moment_for(body: &ConvexBody<f64>, cfg: &EnsembleConfig) -> Result<MomentReport> {
    cfg.validate()?;
    let stream = cfg.stream();
    let ens = alpha_samples(body, cfg.n_samples, &stream, cfg.workers, cfg.allow_heuristic)?;
    moment_report(ens, cfg.p, cfg.seed, cfg.bootstrap.then_some(&stream))
}

/// Moment root of existing samples; `bootstrap` adds the resampling SE.
pub fn moment_report(ens: AlphaEnsemble, p: f64, seed: u64, bootstrap_from: Option<&RngStream>) -> Result<MomentReport> {
    let moment = moment_root(&ens.samples, p, seed)?;
    let bootstrap_se = bootstrap_from.map(|s| bootstrap(&ens.samples, p, s)).transpose()?;
    Ok(MomentReport {
        moment,
        bootstrap_se,
        p,
        method: ens.method,
        converged: ens.converged,
        samples: ens.samples,
    })
}

/// Moment roots of the per-rotation endpoints `α⁻¹` and `4α⁻¹`; by
/// monotonicity they bracket `(E c_EHZ(OK)^p)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacitySandwich {
    pub lo: EstimatorResult,
    pub hi: EstimatorResult,
    pub certified: bool,
}

impl CapacitySandwich {
    /// Does `x ± se` meet `[lo − k·se_lo, hi + k·se_hi]`?
    pub fn contains(&self, x: &EstimatorResult, k: f64) -> bool {
        let lo = self.lo.estimate - k * self.lo.std_error.hypot(x.std_error);
        let hi = self.hi.estimate + k * self.hi.std_error.hypot(x.std_error);
        (lo..=hi).contains(&x.estimate)
    }
}

pub fn capacity_sandwich_from(alphas: &[f64], p: f64, certified: bool, seed: u64) -> Result<CapacitySandwich> {
    if p <= 0.0 {
        return Err(Error::InvalidParameter(format!("the capacity bracket needs p > 0, got {p}")));
    }
    let inv: Vec<f64> = alphas.iter().map(|a| 1.0 / a).collect();
    let lo = moment_root(&inv, p, seed)?;
    Ok(CapacitySandwich {
        lo,
        hi: lo.scaled(4.0),
        certified,
    })
}

pub fn capacity_expectation_sandwich(cfg: &EnsembleConfig) -> Result<CapacitySandwich> {
    cfg.validate()?;
    let body = make_body::<f64>(&cfg.body)?;
    let ens = alpha_samples(&body, cfg.n_samples, &cfg.stream(), cfg.workers, cfg.allow_heuristic)?;
    capacity_sandwich_from(&ens.samples, cfg.p, ens.method.is_exact(), cfg.seed)
}

/// Exact capacities of rotated symplectic ellipsoids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidCapacity {
    pub moment: EstimatorResult,
    /// Samples dropped because `JC` failed the spectral check.
    pub failures: usize,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

const MAX_FAILURE_FRACTION: f64 = 1e-3;

fn ellipsoid_form(axes: &[f64]) -> Result<DMatrix<f64>> {
    let spec = FamilySpec::SymplecticEllipsoid { axes: axes.to_vec() };
    spec.validate()?;
    let lo = axes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = axes.iter().cloned().fold(0.0, f64::max);
    if hi / lo > 1e8 {
        return Err(Error::IllConditioned(hi / lo));
    }
    let body = make_body::<f64>(&spec)?;
    Ok(body.quad_form().expect("ellipsoids carry their form").clone())
}

/// `(E c_EHZ(OE(a))^p)^{1/p}` with `OE = {x : xᵀ OCOᵀ x <= 1}`.
pub fn ellipsoid_capacity_expectation(axes: &[f64], p: f64, n: usize, stream: &RngStream, workers: usize) -> Result<EllipsoidCapacity> {
    require_samples(n)?;
    let c = ellipsoid_form(axes)?;
    let dim = c.nrows();
    let (samples, failures) = sample_map_lossy(n, stream, workers, MAX_FAILURE_FRACTION, |_, rng| {
        let o = haar_rotation::<f64, _>(rng, dim)?;
        ehz_ellipsoid(&(o.matrix() * &c * o.matrix().transpose()))
    })?;
    Ok(EllipsoidCapacity {
        moment: moment_root(&samples, p, stream.seed)?,
        failures,
        samples,
    })
}

/// One rotated ellipsoid with both `c_EHZ` and `α` computed exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichTrial {
    pub axes: Vec<f64>,
    pub capacity: f64,
    pub alpha: f64,
    /// `c · α`, which must lie in `[1, 4]`.
    pub product: f64,
}

/// `n` ellipsoids in dimension `dim`, axes log-uniform on `[1, max_axis]`,
/// each under its own Haar rotation.
pub fn ellipsoid_sandwich_trials(dim: usize, max_axis: f64, n: usize, stream: &RngStream, workers: usize) -> Result<Vec<SandwichTrial>> {
    if dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    if !(max_axis >= 1.0 && max_axis.is_finite()) {
        return Err(Error::InvalidParameter(format!("max axis {max_axis} must be at least 1")));
    }
    sample_map(n, stream, workers, |_, rng| {
        let mut axes: Vec<f64> = (0..dim / 2).map(|_| max_axis.powf(rng.random::<f64>())).collect();
        axes.sort_by(f64::total_cmp);
        let body = make_body::<f64>(&FamilySpec::SymplecticEllipsoid { axes: axes.clone() })?;
        let o = haar_rotation::<f64, _>(rng, dim)?;
        let c = body.quad_form().expect("ellipsoid");
        let capacity = ehz_ellipsoid(&(o.matrix() * c * o.matrix().transpose()))?;
        let alpha = AlphaPlan::new(&body, AlphaOptions::default())?.evaluate(Some(&o), rng)?.value;
        Ok(SandwichTrial {
            axes,
            capacity,
            alpha,
            product: capacity * alpha,
        })
    })
}

/// Both sides of `E_μ sup_{w ∈ K°∩L} ⟨J(O)v, w⟩ = R(K°) M*(K° ∩ L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanIdentity {
    pub ensemble: EstimatorResult,
    pub reference: EstimatorResult,
    /// `|ensemble − reference|` in joint standard errors.
    pub z: f64,
}

/// The ensemble side draws Haar rotations from `stream.child(0)`; the
/// reference integrates over the sphere of `L` from `stream.child(1)`.
pub fn theorem17_mean_identity(body: &ConvexBody<f64>, n_ensemble: usize, n_reference: usize, stream: &RngStream, workers: usize) -> Result<MeanIdentity> {
    require_samples(n_ensemble)?;
    let polar = body.polar();
    let cp = contact_point(body)?;
    let big_r = cp.v.norm();
    let v = &cp.v / big_r;
    let dim = body.dim();
    let hs = sample_map(n_ensemble, &stream.child(0), workers, |_, rng| {
        let o = haar_rotation::<f64, _>(rng, dim)?;
        // J(O)v = Oᵀ J O v, a unit vector orthogonal to v
        let w = o.matrix().tr_mul(&apply_j_vec(&(o.matrix() * &v)));
        Ok(big_r * section_support(&polar, &v, &w)?)
    })?;
    let ensemble = EstimatorResult::from_samples(&hs, stream.seed);
    let reference = section_mean_width(&polar, &v, n_reference, &stream.child(1), workers)?.scaled(big_r);
    Ok(MeanIdentity {
        z: ensemble.z_distance(&reference),
        ensemble,
        reference,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailStatistic {
    Alpha,
    /// `α⁻¹`, the certified capacity lower bound.
    InverseAlpha,
}

/// Tail of `|X − mean X|` on a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProfile {
    pub dim: usize,
    pub n_samples: usize,
    pub mean: f64,
    pub sd: f64,
    pub thresholds: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    /// Slope of `ln tail` against `t²`, fitted on tails of at least `20/N`.
    pub fitted_slope: Option<f64>,
    /// Zero variance (the ball, for instance).
    pub degenerate: bool,
}

const GRID: usize = 16;
const GRID_SPAN_SD: f64 = 3.0;

/// `P(|x − mean| >= t)` for each `t`, with the slope fit.
pub fn tail_profile(dim: usize, xs: &[f64], thresholds: &[f64]) -> TailProfile {
    let w = Welford::from_slice(xs);
    let (mean, sd) = (w.mean(), w.std_dev());
    let n = xs.len();
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - mean).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let empirical_tail: Vec<f64> = thresholds
        .iter()
        .map(|t| (n - dev.partition_point(|d| d < t)) as f64 / n as f64)
        .collect();
    let degenerate = sd <= 1e-12 * mean.abs().max(1e-300);
    let floor = 20.0 / n as f64;
    let (tx, ty): (Vec<f64>, Vec<f64>) = thresholds
        .iter()
        .zip(&empirical_tail)
        .filter(|(t, p)| **t > 0.0 && **p >= floor)
        .map(|(t, p)| (t * t, p.ln()))
        .unzip();
    TailProfile {
        dim,
        n_samples: n,
        mean,
        sd,
        thresholds: thresholds.to_vec(),
        empirical_tail,
        fitted_slope: if degenerate { None } else { linear_fit(&tx, &ty).map(|(s, _)| s) },
        degenerate,
    }
}

/// Tail profiles of `α(OK)` (or `α⁻¹`) as the dimension grows. The
/// threshold grid is fixed by the first dimension's SD so slopes compare.
pub fn concentration_profile(
    spec: &FamilySpec,
    dims: &[usize],
    n: usize,
    stream: &RngStream,
    workers: usize,
    statistic: TailStatistic,
    allow_heuristic: bool,
) -> Result<Vec<TailProfile>> {
    let mut grid: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(dims.len());
    for &d in dims {
        let spec = spec.with_dim(d)?;
        let body = make_body::<f64>(&spec)?;
        let mut xs = alpha_samples(&body, n, &stream.child(d as u64), workers, allow_heuristic)?.samples;
        if statistic == TailStatistic::InverseAlpha {
            xs.iter_mut().for_each(|a| *a = 1.0 / *a);
        }
        let thresholds = grid
            .get_or_insert_with(|| {
                let sd = Welford::from_slice(&xs).std_dev();
                (0..GRID).map(|k| GRID_SPAN_SD * sd * k as f64 / (GRID - 1) as f64).collect()
            })
            .clone();
        out.push(tail_profile(d, &xs, &thresholds));
    }
    Ok(out)
}

pub const PSI2_MIN_SAMPLES: usize = 1000;
pub const PSI2_MAX_ORDER: usize = 10;

/// `max_{1 <= p <= p_max} p^{−1/2} (mean |Z|^p)^{1/p}`.
pub fn psi2_norm_estimate(samples: &[f64], p_max: usize) -> Result<f64> {
    if samples.len() < PSI2_MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: PSI2_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    if !(1..=PSI2_MAX_ORDER).contains(&p_max) {
        return Err(Error::InvalidParameter(format!("p_max must lie in 1..={PSI2_MAX_ORDER}, got {p_max}")));
    }
    let abs: Vec<f64> = samples.iter().map(|z| z.abs()).collect();
    let top = abs.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    // factor out the maximum so high powers stay finite
    let best = (1..=p_max)
        .map(|p| {
            let p = p as f64;
            let m = abs.iter().map(|z| (z / top).powf(p)).sum::<f64>() / abs.len() as f64;
            top * m.powf(1.0 / p) / p.sqrt()
        })
        .fold(0.0, f64::max);
    Ok(best)
}

/// `ξ(O) = ⟨J(O)x, y⟩` for Haar `O`. Only the image of `span{x, y}` matters,
/// so each sample draws a two-column Haar frame instead of a full rotation.
pub fn xi_samples(x: &DVector<f64>, y: &DVector<f64>, n: usize, stream: &RngStream, workers: usize) -> Result<Vec<f64>> {
    let dim = x.len();
    if y.len() != dim {
        return Err(Error::ShapeMismatch {
            expected: format!("vector of length {dim}"),
            found: format!("length {}", y.len()),
        });
    }
    if dim % 2 == 1 {
        return Err(Error::OddDimension(dim));
    }
    // x = a q₁, y = b q₁ + c q₂ with (q₁, q₂) orthonormal
    let a = x.norm();
    if a == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let q1 = x / a;
    let b = y.dot(&q1);
    let c = (y - &q1 * b).norm();
    // ⟨J O q₁, O q₁⟩ = 0, so only the cross term survives
    sample_map(n, stream, workers, |_, rng| {
        let f = haar_frame::<f64, _>(rng, dim, 2)?;
        let f1 = f.column(0).into_owned();
        let f2 = f.column(1).into_owned();
        Ok(a * c * apply_j_vec(&f1).dot(&f2))
    })
}

/// One λ of the `K_λ = B²(1) × B^{2n−2}(λ)` sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// `E α(OK_λ)⁻¹`, a certified lower bound for `E c_EHZ(OK_λ)`.
    pub capacity_lower: EstimatorResult,
    pub method: AlphaMethod,
    pub anchor: RatioAnchor,
}

pub fn counterexample_sweep(
    lambdas: &[f64],
    dim: usize,
    n: usize,
    n_anchor: usize,
    stream: &RngStream,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    if dim < 6 {
        return Err(Error::DimensionTooSmall { dim, min: 6 });
    }
    lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let spec = FamilySpec::BallProduct { dim, radius: 1.0, lambda };
            let body = make_body::<f64>(&spec)?;
            let s = stream.child(k as u64);
            let ens = alpha_samples(&body, n, &s.child(0), workers, false)?;
            let inv: Vec<f64> = ens.samples.iter().map(|a| 1.0 / a).collect();
            Ok(SweepPoint {
                lambda,
                capacity_lower: EstimatorResult::from_samples(&inv, stream.seed),
                method: ens.method,
                anchor: ratio_anchor(&body, n_anchor, &s.child(1), workers)?,
            })
        })
        .collect()
}

/// `E sup_{x,y ∈ K°} ⟨Gx, y⟩` against the bound `2 R(K°) M*(K°)`, both sides
/// of the operator norm taken in K°. `G` has `N(0, 1/dim)` entries so that the
/// spherical mean width stands in for the Gaussian one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChevetRecord {
    pub lhs: EstimatorResult,
    pub bound: EstimatorResult,
    pub ratio: f64,
}

pub fn chevet_check(body: &ConvexBody<f64>, n: usize, stream: &RngStream, workers: usize) -> Result<ChevetRecord> {
    require_samples(n)?;
    let plan = AlphaPlan::new(body, AlphaOptions::default())?;
    if !plan.method().is_exact() {
        return Err(Error::NoExactRoute("the Chevet check needs an exact bilinear route".into()));
    }
    let dim = body.dim();
    let xs = sample_map(n, &stream.child(0), workers, |_, rng| {
        let scale = (dim as f64).sqrt().recip();
        let g = DMatrix::from_fn(dim, dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        Ok(plan.sup_bilinear(&g, rng).value)
    })?;
    let lhs = EstimatorResult::from_samples(&xs, stream.seed);
    let polar = body.polar();
    let bound = mean_width(&polar, n, &stream.child(1), workers)?.scaled(2.0 * circumradius(&polar)?);
    Ok(ChevetRecord {
        lhs,
        bound,
        ratio: lhs.estimate / bound.estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::j_of;

    fn spec(s: &str) -> FamilySpec {
        s.parse().unwrap()
    }

    #[test]
    fn ball_is_constant() {
        let cfg = EnsembleConfig::new(spec("ball:8:1"), 200, 3, -0.5);
        let r = expect_alpha_moment(&cfg).unwrap();
        assert!((r.moment.estimate - 1.0).abs() < 1e-12);
        assert!(r.moment.std_error < 1e-12);
        let s = capacity_expectation_sandwich(&EnsembleConfig { p: 1.0, ..cfg }).unwrap();
        assert!((s.lo.estimate - 1.0).abs() < 1e-12 && (s.hi.estimate - 4.0).abs() < 1e-12);
        assert!(s.certified);
    }

    #[test]
    fn config_is_validated() {
        let mut cfg = EnsembleConfig::new(spec("cube:8"), 99, 1, 1.0);
        assert!(matches!(expect_alpha_moment(&cfg), Err(Error::InsufficientSamples { .. })));
        cfg.n_samples = 100;
        cfg.p = 0.0;
        assert!(matches!(expect_alpha_moment(&cfg), Err(Error::InvalidParameter(_))));
        cfg.p = -1.0;
        assert!(capacity_expectation_sandwich(&cfg).is_err());
    }

    #[test]
    fn heuristic_families_need_opt_in() {
        let mut cfg = EnsembleConfig::new(spec("lp:8:3"), 100, 1, 1.0);
        assert!(matches!(expect_alpha_moment(&cfg), Err(Error::HeuristicRejected)));
        cfg.allow_heuristic = true;
        let r = expect_alpha_moment(&cfg).unwrap();
        assert_eq!(r.method, AlphaMethod::AlternatingLowerBound);
    }

    #[test]
    fn power_mean_ordering() {
        let cfg = EnsembleConfig::new(spec("cube:8"), 1000, 11, 1.0);
        let up = expect_alpha_moment(&cfg).unwrap();
        let down = expect_alpha_moment(&EnsembleConfig { p: -1.0, ..cfg }).unwrap();
        assert!(down.moment.estimate <= up.moment.estimate);
        // same rotations for both orders
        assert_eq!(up.samples, down.samples);
    }

    #[test]
    fn hi_is_four_lo_exactly() {
        let cfg = EnsembleConfig::new(spec("cross:8"), 300, 5, 0.5);
        let s = capacity_expectation_sandwich(&cfg).unwrap();
        assert_eq!(s.hi.estimate, 4.0 * s.lo.estimate);
        assert_eq!(s.hi.std_error, 4.0 * s.lo.std_error);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = EnsembleConfig::new(spec("cube:8"), 300, 9, 1.0);
        cfg.workers = 1;
        let a = expect_alpha_moment(&cfg).unwrap();
        cfg.workers = 3;
        let b = expect_alpha_moment(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_agrees_with_delta_method() {
        let mut cfg = EnsembleConfig::new(spec("cube:8"), 2000, 2, 1.0);
        cfg.bootstrap = true;
        let r = expect_alpha_moment(&cfg).unwrap();
        let b = r.bootstrap_se.unwrap();
        assert!(b > 0.5 * r.moment.std_error && b < 2.0 * r.moment.std_error, "{b} vs {}", r.moment.std_error);
    }

    #[test]
    fn round_ellipsoid_capacity_is_constant() {
        let e = ellipsoid_capacity_expectation(&[2.0, 2.0, 2.0], 1.0, 200, &RngStream::new(1, 0), 0).unwrap();
        assert!((e.moment.estimate - 2.0).abs() < 1e-9);
        assert_eq!(e.failures, 0);
    }

    #[test]
    fn rotated_ellipsoid_capacity_is_between_axes() {
        let e = ellipsoid_capacity_expectation(&[1.0, 4.0], 1.0, 500, &RngStream::new(4, 0), 0).unwrap();
        assert!(e.samples.iter().all(|c| (1.0 - 1e-9..=4.0 + 1e-9).contains(c)));
        assert!(e.samples.iter().any(|c| *c > 1.0 + 1e-3), "rotations should break the symplectic splitting");
    }

    #[test]
    fn ill_conditioned_axes_are_rejected() {
        let r = ellipsoid_capacity_expectation(&[1.0, 1e9], 1.0, 200, &RngStream::new(4, 0), 0);
        assert!(matches!(r, Err(Error::IllConditioned(_))));
    }

    #[test]
    fn sandwich_trials_stay_in_the_window() {
        let trials = ellipsoid_sandwich_trials(6, 10.0, 100, &RngStream::new(8, 0), 0).unwrap();
        for t in &trials {
            assert!((1.0 - 1e-6..=4.0 + 1e-6).contains(&t.product), "{t:?}");
            assert!(t.capacity >= t.axes[0] - 1e-9 && t.capacity <= t.axes[2] + 1e-9);
        }
    }

    #[test]
    fn mean_identity_for_the_ball() {
        let m = theorem17_mean_identity(&make_body(&spec("ball:8:1")).unwrap(), 200, 200, &RngStream::new(1, 0), 0).unwrap();
        assert!((m.ensemble.estimate - 1.0).abs() < 1e-9);
        assert!((m.reference.estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_identity_small_cube() {
        let m = theorem17_mean_identity(&make_body(&spec("cube:8")).unwrap(), 3000, 20000, &RngStream::new(6, 0), 0).unwrap();
        assert!(m.z < 4.0, "{m:?}");
    }

    #[test]
    fn tail_profile_basics() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 / 999.0) * 2.0 - 1.0).collect();
        let t: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
        let p = tail_profile(8, &xs, &t);
        assert_eq!(p.empirical_tail[0], 1.0);
        assert!(p.empirical_tail.windows(2).all(|w| w[1] <= w[0]));
        assert!((p.empirical_tail[2] - 0.5).abs() < 0.01);
        assert!(p.fitted_slope.unwrap() < 0.0);
        let flat = tail_profile(8, &[1.0; 500], &t);
        assert!(flat.degenerate && flat.fitted_slope.is_none());
    }

    #[test]
    fn ball_concentration_is_flagged() {
        let p = concentration_profile(&spec("ball:8:1"), &[8, 16], 200, &RngStream::new(1, 0), 0, TailStatistic::Alpha, false).unwrap();
        assert!(p.iter().all(|t| t.degenerate));
    }

    #[test]
    fn psi2_examples() {
        let ones: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((psi2_norm_estimate(&ones, 10).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = RngStream::new(1, 0).rng();
        let g: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = psi2_norm_estimate(&g, 10).unwrap();
        assert!((0.7..=1.5).contains(&e), "{e}");
        assert!(psi2_norm_estimate(&g[..999], 4).is_err());
        assert!(psi2_norm_estimate(&g, 11).is_err());
        assert!(psi2_norm_estimate(&g, 0).is_err());
    }

    #[test]
    fn xi_matches_full_rotation_moments() {
        // second moment of ⟨J(O)x, y⟩ for orthonormal x, y is 1/(dim − 1)
        let dim = 8;
        let mut x = DVector::zeros(dim);
        let mut y = DVector::zeros(dim);
        x[0] = 1.0;
        y[1] = 1.0;
        let s = RngStream::new(2, 0);
        let xi = xi_samples(&x, &y, 20_000, &s, 0).unwrap();
        let w = Welford::from_slice(&xi.iter().map(|z| z * z).collect::<Vec<_>>());
        assert!((w.mean() - 1.0 / 7.0).abs() < 4.0 * w.std_error(), "{}", w.mean());
        let plan_free: Vec<f64> = sample_map(20_000, &s.child(9), 0, |_, rng| {
            let o = haar_rotation::<f64, _>(rng, dim)?;
            Ok((j_of(&o) * &x).dot(&y).powi(2))
        })
        .unwrap();
        let w2 = Welford::from_slice(&plan_free);
        assert!((w.mean() - w2.mean()).abs() < 4.0 * w.std_error().hypot(w2.std_error()));
        // the Jx direction has ξ ≡ ⟨J(O)x, x⟩ = 0
        assert!(xi_samples(&x, &x, 100, &s, 0).unwrap().iter().all(|z| z.abs() < 1e-15));
    }

    #[test]
    fn sweep_rejects_small_dims() {
        assert!(matches!(
            counterexample_sweep(&[1.0], 4, 100, 100, &RngStream::new(1, 0), 0),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn sweep_anchor_inradius_is_one() {
        let pts = counterexample_sweep(&[1.0, 4.0], 6, 200, 500, &RngStream::new(1, 0), 0).unwrap();
        for p in &pts {
            assert!((p.anchor.inradius - 1.0).abs() < 1e-12);
            assert_eq!(p.method, AlphaMethod::Spectral);
        }
        assert!(pts[1].capacity_lower.estimate > pts[0].capacity_lower.estimate);
    }

    #[test]
    fn chevet_holds_for_the_cube() {
        let c = chevet_check(&make_body(&spec("cube:8")).unwrap(), 500, &RngStream::new(3, 0), 0).unwrap();
        assert!(c.ratio <= 1.0, "{c:?}");
    }
}
