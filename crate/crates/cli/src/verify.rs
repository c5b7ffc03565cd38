//! Acceptance suites with fixed budgets. Each suite returns every contract it
//! evaluated with the observed values, so a failure shows where it broke.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use symcap_core::alpha::{lipschitz_gap, AlphaMethod, AlphaOptions, AlphaPlan};
use symcap_core::ensemble::{
    alpha_samples, concentration_profile, counterexample_sweep, ellipsoid_sandwich_trials, psi2_norm_estimate,
    theorem17_mean_identity, xi_samples, TailStatistic,
};
use symcap_core::geom::{circumradius, nondeg_functional, ratio_anchor, sphere_point, table1_row};
use symcap_core::{
    ehz_ellipsoid, haar_rotation, make_body, prop21_identities, pushforward_uniformity_test, Body, Error, EstimatorResult,
    FamilySpec, Result, RngStream, Rotation,
};

use crate::args::Format;
use crate::commands::{run_expect, Settings};
use crate::config::ConfigFile;
use crate::report::{est, ReportDocument};

pub const SUITES: &[&str] = &[
    "pushforward",
    "sandwich",
    "mean-identity",
    "lower-bound",
    "upper-trend",
    "table1",
    "lipschitz",
    "concentration",
    "psi2",
    "nondeg",
    "counterexample",
    "determinism",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    pub name: String,
    pub passed: bool,
    pub observed: Value,
    pub threshold: String,
    /// The window was fixed by pilot runs rather than derived exactly.
    pub calibrated: bool,
}

fn contract(name: &str, passed: bool, observed: Value, threshold: &str, calibrated: bool) -> Contract {
    Contract {
        name: name.to_string(),
        passed,
        observed,
        threshold: threshold.to_string(),
        calibrated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub budgets: Value,
    pub contracts: Vec<Contract>,
    /// Extra numbers without a pass/fail verdict.
    pub diagnostics: Value,
}

impl SuiteReport {
    fn new(suite: &str, budgets: Value, contracts: Vec<Contract>, diagnostics: Value) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            passed: contracts.iter().all(|c| c.passed),
            budgets,
            contracts,
            diagnostics,
        }
    }

    pub fn contract(&self, name: &str) -> Option<&Contract> {
        self.contracts.iter().find(|c| c.name == name)
    }
}

pub fn run_suite(name: &str, seed: u64, workers: usize) -> Result<SuiteReport> {
    match name {
        "pushforward" => pushforward(seed),
        "sandwich" => sandwich(seed, workers),
        "mean-identity" => mean_identity(seed, workers),
        "lower-bound" => lower_bound(seed, workers),
        "upper-trend" => upper_trend(seed, workers),
        "table1" => table1(seed, workers),
        "lipschitz" => lipschitz(seed),
        "concentration" => concentration(seed, workers),
        "psi2" => psi2(seed, workers),
        "nondeg" => nondeg(seed, workers),
        "counterexample" => counterexample(seed, workers),
        "determinism" => determinism(seed),
        other => Err(Error::Parse(format!("unknown suite `{other}`; known: {}", SUITES.join(", ")))),
    }
}

fn body(spec: &FamilySpec) -> Result<Body> {
    make_body(spec)
}

fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

fn pushforward(seed: u64) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 1);
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, dim) in [8usize, 16].into_iter().enumerate() {
        let mut rng = s.child(k as u64).rng();
        for _ in 0..100 {
            let a = gaussian_matrix(&mut rng, dim);
            let y = sphere_point::<f64, _>(&mut rng, dim);
            let o = haar_rotation::<f64, _>(&mut rng, dim)?;
            worst = worst.max(prop21_identities(&a, &y, &o)?.max_defect());
            count += 1;
        }
    }
    let mut contracts = vec![contract(
        "identities",
        worst <= 1e-9,
        json!({ "max_defect": worst, "triples": count }),
        "|t_obs − t_pred|, |r_obs − r_pred| <= 1e-9 for every triple",
        false,
    )];
    let dim = 16;
    let mut y = DVector::zeros(dim);
    y[0] = 1.0;
    match pushforward_uniformity_test(&s.child(2), dim, &y, 5000) {
        Ok(u) => {
            contracts.push(contract(
                "support",
                u.max_tangency <= 1e-10 && u.max_norm_defect <= 1e-10,
                json!({ "max_tangency": u.max_tangency, "max_norm_defect": u.max_norm_defect }),
                "|⟨z,y⟩| <= 1e-10 and ||z| − 1| <= 1e-10 per sample",
                false,
            ));
            contracts.push(contract(
                "uniformity",
                u.p_value >= 0.01,
                json!({ "ks_statistic": u.ks_statistic, "p_value": u.p_value }),
                "KS p-value >= 0.01",
                false,
            ));
        }
        Err(Error::IdentityViolation(msg)) => {
            contracts.push(contract("support", false, json!({ "violation": msg }), "per-sample support check", false));
        }
        Err(e) => return Err(e),
    }
    Ok(SuiteReport::new(
        "pushforward",
        json!({ "identity_triples_per_dim": 100, "identity_dims": [8, 16], "ks_dim": dim, "ks_samples": 5000 }),
        contracts,
        Value::Null,
    ))
}

fn sandwich(seed: u64, workers: usize) -> Result<SuiteReport> {
    let trials = ellipsoid_sandwich_trials(8, 10.0, 500, &RngStream::new(seed, 2), workers)?;
    let lo = trials.iter().map(|t| t.product).fold(f64::INFINITY, f64::min);
    let hi = trials.iter().map(|t| t.product).fold(f64::NEG_INFINITY, f64::max);
    let mut pi_defect = 0.0f64;
    for t in &trials {
        let k = body(&FamilySpec::SymplecticEllipsoid { axes: t.axes.clone() })?;
        let c = ehz_ellipsoid(k.quad_form().expect("ellipsoid"))?;
        let a = symcap_core::alpha(&k, None)?.value;
        pi_defect = pi_defect.max((c * a - std::f64::consts::PI).abs());
    }
    Ok(SuiteReport::new(
        "sandwich",
        json!({ "trials": 500, "dim": 8, "axes": "log-uniform on [1, 10]" }),
        vec![
            contract(
                "rotated_window",
                lo >= 1.0 - 1e-6 && hi <= 4.0 + 1e-6,
                json!({ "min_product": lo, "max_product": hi }),
                "1 − 1e-6 <= c·α <= 4 + 1e-6 for every trial",
                false,
            ),
            contract(
                "unrotated_pi",
                pi_defect <= 1e-9,
                json!({ "max_defect": pi_defect }),
                "|c·α − π| <= 1e-9 for the unrotated ellipsoids",
                false,
            ),
        ],
        Value::Null,
    ))
}

fn mean_identity(seed: u64, workers: usize) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 3);
    let cases = [("cube:16", 20_000, 1_000_000), ("cross:8", 20_000, 200_000), ("ball:8:1", 1000, 1000)];
    let mut contracts = Vec::new();
    for (k, (name, n_ens, n_ref)) in cases.into_iter().enumerate() {
        let m = theorem17_mean_identity(&body(&name.parse()?)?, n_ens, n_ref, &s.child(k as u64), workers)?;
        contracts.push(contract(
            name,
            m.z <= 4.0,
            json!({ "ensemble": est(&m.ensemble), "reference": est(&m.reference), "z": m.z }),
            "|ensemble − reference| <= 4 joint SE",
            false,
        ));
    }
    Ok(SuiteReport::new(
        "mean-identity",
        json!({ "cases": cases.iter().map(|(n, e, r)| json!({ "body": n, "ensemble": e, "reference": r })).collect::<Vec<_>>() }),
        contracts,
        Value::Null,
    ))
}

/// `E α(OK)` and `R(K°) M*(K° ∩ L)` for the three families at dims 8, 16, 32.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub family: String,
    pub dim: usize,
    pub mean_alpha: EstimatorResult,
    pub reference: EstimatorResult,
    pub ratio: f64,
    pub ratio_se: f64,
    pub method: AlphaMethod,
}

pub const BOUND_FAMILIES: [&str; 3] = ["cube", "cross", "ellipsoid"];
pub const BOUND_DIMS: [usize; 3] = [8, 16, 32];
const BOUND_ENSEMBLE: usize = 2000;
const BOUND_REFERENCE: usize = 20_000;

pub fn bound_rows(seed: u64, workers: usize) -> Result<Vec<BoundRow>> {
    let s = RngStream::new(seed, 4);
    let mut rows = Vec::new();
    for (fi, fam) in BOUND_FAMILIES.iter().enumerate() {
        for dim in BOUND_DIMS {
            let k = body(&FamilySpec::named(fam, dim)?)?;
            let cs = s.child((fi * 1000 + dim) as u64);
            // a heuristic α only underestimates, which keeps the lower bound honest
            let ens = alpha_samples(&k, BOUND_ENSEMBLE, &cs.child(0), workers, true)?;
            let mean_alpha = EstimatorResult::from_samples(&ens.samples, seed);
            let anchor = ratio_anchor(&k, BOUND_REFERENCE, &cs.child(1), workers)?;
            let reference = anchor.section_mean_width.scaled(anchor.polar_circumradius);
            let ratio = mean_alpha.estimate / reference.estimate;
            let rel = (mean_alpha.std_error / mean_alpha.estimate).hypot(reference.std_error / reference.estimate);
            rows.push(BoundRow {
                family: fam.to_string(),
                dim,
                mean_alpha,
                reference,
                ratio,
                ratio_se: ratio * rel,
                method: ens.method,
            });
        }
    }
    Ok(rows)
}

fn bound_budgets() -> Value {
    json!({ "families": BOUND_FAMILIES, "dims": BOUND_DIMS, "ensemble": BOUND_ENSEMBLE, "reference": BOUND_REFERENCE })
}

fn row_json(r: &BoundRow) -> Value {
    json!({
        "mean_alpha": est(&r.mean_alpha),
        "reference": est(&r.reference),
        "ratio": r.ratio,
        "ratio_se": r.ratio_se,
        "method": r.method,
    })
}

pub fn lower_bound_contracts(rows: &[BoundRow]) -> Vec<Contract> {
    rows.iter()
        .map(|r| {
            let joint = r.mean_alpha.std_error.hypot(r.reference.std_error);
            contract(
                &format!("{}:{}", r.family, r.dim),
                r.mean_alpha.estimate >= r.reference.estimate - 3.0 * joint,
                row_json(r),
                "E α(OK) >= R(K°) M*(K° ∩ L) − 3 joint SE",
                false,
            )
        })
        .collect()
}

pub fn upper_trend_contracts(rows: &[BoundRow]) -> Vec<Contract> {
    let mut out: Vec<Contract> = rows
        .iter()
        .map(|r| {
            contract(
                &format!("{}:{}", r.family, r.dim),
                r.ratio >= 1.0 - 3.0 * r.ratio_se && r.ratio <= 10.0,
                row_json(r),
                "ratio in [1 − 3 SE, 10]",
                true,
            )
        })
        .collect();
    for fam in BOUND_FAMILIES {
        let ratios: Vec<f64> = rows.iter().filter(|r| r.family == fam).map(|r| r.ratio).collect();
        let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(contract(
            &format!("{fam}:spread"),
            spread <= 2.0,
            json!({ "ratios": ratios, "max_over_min": spread }),
            "ratio varies by at most a factor 2 across dims",
            true,
        ));
    }
    out
}

fn lower_bound(seed: u64, workers: usize) -> Result<SuiteReport> {
    let rows = bound_rows(seed, workers)?;
    Ok(SuiteReport::new("lower-bound", bound_budgets(), lower_bound_contracts(&rows), Value::Null))
}

fn upper_trend(seed: u64, workers: usize) -> Result<SuiteReport> {
    let rows = bound_rows(seed, workers)?;
    Ok(SuiteReport::new("upper-trend", bound_budgets(), upper_trend_contracts(&rows), Value::Null))
}

fn table1(seed: u64, workers: usize) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 5);
    let dims = [8usize, 16, 32, 64];
    let n = 20_000;
    let mut cube = Vec::new();
    let mut cross = Vec::new();
    for (k, &d) in dims.iter().enumerate() {
        cube.push(table1_row(&FamilySpec::Cube { dim: d }, n, &s.child(k as u64), workers)?);
        cross.push(table1_row(&FamilySpec::CrossPolytope { dim: d }, n, &s.child(100 + k as u64), workers)?);
    }
    let cube_norm: Vec<f64> = cube.iter().map(|r| r.normalized[1]).collect();
    let spread = cube_norm.iter().cloned().fold(0.0, f64::max) / cube_norm.iter().cloned().fold(f64::INFINITY, f64::min);
    let cross_norm: Vec<[f64; 3]> = cross.iter().map(|r| r.normalized).collect();
    let cross_ok = cross_norm.iter().flatten().all(|x| (0.2..=5.0).contains(x));
    Ok(SuiteReport::new(
        "table1",
        json!({ "dims": dims, "samples": n }),
        vec![
            contract(
                "cube_ratio_scaling",
                spread <= 2.0,
                json!({ "normalized_ratio": cube_norm, "max_over_min": spread }),
                "r/M*(K°∩L) / sqrt(n / ln n) varies by at most a factor 2",
                true,
            ),
            contract(
                "cross_bounded",
                cross_ok,
                json!({ "normalized": cross_norm }),
                "all three normalized columns in [0.2, 5]",
                true,
            ),
        ],
        json!({ "cube_normalized": cube.iter().map(|r| r.normalized).collect::<Vec<_>>() }),
    ))
}

fn lipschitz(seed: u64) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 6);
    let mut contracts = Vec::new();
    let mut diagnostics = serde_json::Map::new();
    for (k, spec) in [FamilySpec::Cube { dim: 8 }, FamilySpec::named("ellipsoid", 8)?].into_iter().enumerate() {
        let b = body(&spec)?;
        let plan = AlphaPlan::new(&b, AlphaOptions::default())?;
        let r = circumradius(&b.polar())?;
        let mut rng = s.child(k as u64).rng();
        let (mut worst, mut tightest, mut near_worst) = (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
        for _ in 0..200 {
            let o1 = haar_rotation::<f64, _>(&mut rng, 8)?;
            let o2 = haar_rotation::<f64, _>(&mut rng, 8)?;
            let rec = lipschitz_gap(&plan, r, &o1, &o2)?;
            worst = worst.max(rec.lhs - rec.rhs);
            tightest = tightest.max(rec.lhs / rec.rhs);
            // a nearby pair makes the bound bite
            let i = rng.random_range(0..7);
            let j = rng.random_range(i + 1..8);
            let theta = 10f64.powf(rng.random_range(-4.0..-1.0));
            let o3 = &o1 * &Rotation::plane(8, i, j, theta);
            let rec = lipschitz_gap(&plan, r, &o1, &o3)?;
            near_worst = near_worst.max(rec.lhs - rec.rhs);
        }
        let name = spec.to_string();
        contracts.push(contract(
            &format!("{name}:haar_pairs"),
            worst <= 1e-9,
            json!({ "max_excess": worst }),
            "α(O₁K) − α(O₂K) <= 2R(K°)²‖O₁ − O₂‖_HS + 1e-9 for 200 pairs",
            false,
        ));
        contracts.push(contract(
            &format!("{name}:near_pairs"),
            near_worst <= 1e-9,
            json!({ "max_excess": near_worst }),
            "same bound for 200 pairs differing by one small plane rotation",
            false,
        ));
        diagnostics.insert(name, json!({ "max_lhs_over_rhs": tightest }));
    }
    Ok(SuiteReport::new("lipschitz", json!({ "pairs": 200, "dim": 8 }), contracts, Value::Object(diagnostics)))
}

fn concentration(seed: u64, workers: usize) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 7);
    let dims = [8usize, 16, 32, 64];
    let n = 4000;
    let cube = FamilySpec::Cube { dim: 8 };
    let prof = concentration_profile(&cube, &dims, n, &s, workers, TailStatistic::Alpha, false)?;
    let sds: Vec<f64> = prof.iter().map(|p| p.sd).collect();
    let monotone = sds.windows(2).all(|w| w[1] <= w[0]);
    let shrink = sds[3] / sds[0];
    let inv = concentration_profile(&cube, &dims, n, &s, workers, TailStatistic::InverseAlpha, false)?;
    Ok(SuiteReport::new(
        "concentration",
        json!({ "dims": dims, "samples": n }),
        vec![
            contract("sd_non_increasing", monotone, json!({ "sd": sds }), "SD(α) non-increasing in dim", false),
            contract(
                "sd_shrinks",
                shrink <= 0.8,
                json!({ "sd64_over_sd8": shrink }),
                "SD(64) <= 0.8 SD(8)",
                true,
            ),
        ],
        json!({
            "fitted_slopes": prof.iter().map(|p| p.fitted_slope).collect::<Vec<_>>(),
            "inverse_alpha_sd": inv.iter().map(|p| p.sd).collect::<Vec<_>>(),
            "inverse_alpha_relative_sd": inv.iter().map(|p| p.sd / p.mean).collect::<Vec<_>>(),
        }),
    ))
}

fn psi2(seed: u64, workers: usize) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 8);
    let dims = [8usize, 32, 128];
    let n = 100_000;
    let mut scaled = Vec::new();
    for (k, &d) in dims.iter().enumerate() {
        let mut x = DVector::zeros(d);
        let mut y = DVector::zeros(d);
        x[0] = 1.0;
        y[1] = 1.0;
        let xi = xi_samples(&x, &y, n, &s.child(k as u64), workers)?;
        scaled.push(((d / 2) as f64).sqrt() * psi2_norm_estimate(&xi, 10)?);
    }
    Ok(SuiteReport::new(
        "psi2",
        json!({ "dims": dims, "samples": n, "p_max": 10 }),
        vec![contract(
            "sqrt_n_scaling",
            scaled.iter().all(|v| (0.2..=3.0).contains(v)),
            json!({ "sqrt_n_psi2": scaled }),
            "sqrt(n)·ψ₂ in [0.2, 3] at every dim (n = dim/2)",
            true,
        )],
        Value::Null,
    ))
}

fn nondeg(seed: u64, workers: usize) -> Result<SuiteReport> {
    let s = RngStream::new(seed, 9);
    let n = 20_000;
    let mut contracts = Vec::new();
    for (k, fam) in ["cube", "cross", "ellipsoid"].into_iter().enumerate() {
        let spec = FamilySpec::named(fam, 16)?;
        let nd = nondeg_functional(&body(&spec)?, 0.5, n, &s.child(k as u64), workers)?;
        contracts.push(contract(&format!("{spec}"), nd.estimate <= 5.0, est(&nd), "ND_{1/2} <= 5", true));
    }
    let ball = body(&FamilySpec::EuclideanBall { dim: 16, radius: 1.0 })?;
    for (k, q) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let nd = nondeg_functional(&ball, q, n, &s.child(10 + k as u64), workers)?;
        contracts.push(contract(
            &format!("ball:q={q}"),
            (nd.estimate - 1.0).abs() <= 4.0 * nd.std_error + 1e-12,
            est(&nd),
            "|ND_q − 1| <= 4 SE (+1e-12 rounding floor)",
            false,
        ));
    }
    Ok(SuiteReport::new("nondeg", json!({ "dim": 16, "samples": n }), contracts, Value::Null))
}

pub const SWEEP_LAMBDAS: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

fn counterexample(seed: u64, workers: usize) -> Result<SuiteReport> {
    let (n, n_anchor) = (2000, 20_000);
    let pts = counterexample_sweep(&SWEEP_LAMBDAS, 8, n, n_anchor, &RngStream::new(seed, 10), workers)?;
    let caps: Vec<f64> = pts.iter().map(|p| p.capacity_lower.estimate).collect();
    let ratios: Vec<f64> = pts.iter().map(|p| p.anchor.ratio.estimate).collect();
    let band = |xs: &[f64]| xs.iter().cloned().fold(0.0, f64::max) / xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let growth = caps[caps.len() - 1] / caps[0];
    Ok(SuiteReport::new(
        "counterexample",
        json!({ "lambdas": SWEEP_LAMBDAS, "dim": 8, "samples": n, "anchor_samples": n_anchor }),
        vec![
            contract(
                "capacity_increasing",
                caps.windows(2).all(|w| w[1] > w[0]),
                json!({ "capacity_lower": pts.iter().map(|p| est(&p.capacity_lower)).collect::<Vec<_>>() }),
                "E α(OK_λ)⁻¹ strictly increasing in λ",
                false,
            ),
            contract(
                "capacity_growth",
                growth >= 3.0,
                json!({ "final_over_initial": growth }),
                "final/initial >= 3",
                true,
            ),
            contract(
                "anchor_band",
                band(&ratios) <= 1.5,
                json!({ "ratios": ratios, "max_over_min": band(&ratios) }),
                "r/M*(K_λ° ∩ L) within a factor 1.5 across the grid",
                true,
            ),
        ],
        json!({
            "anchor_band_from_lambda_4": band(&ratios[1..]),
            "section_mean_width": pts.iter().map(|p| p.anchor.section_mean_width.estimate).collect::<Vec<_>>(),
            "inradius": pts.iter().map(|p| p.anchor.inradius).collect::<Vec<_>>(),
        }),
    ))
}

fn determinism(seed: u64) -> Result<SuiteReport> {
    let settings = |workers| Settings {
        seed,
        samples: Some(500),
        workers,
        format: Format::Json,
        out: None,
        allow_heuristic: false,
        bootstrap: false,
        file: ConfigFile::default(),
    };
    let run = |workers| -> Result<ReportDocument> {
        run_expect(&settings(workers), Some("cube:8".into()), Some(1.0))
            .map(|(doc, _)| doc)
            .map_err(|e| Error::InvalidParameter(e.message))
    };
    let (a, b, c) = (run(2)?, run(2)?, run(1)?);
    Ok(SuiteReport::new(
        "determinism",
        json!({ "command": "expect --body cube:8 --p 1 --samples 500" }),
        vec![
            contract(
                "repeat",
                a.determinism_hash == b.determinism_hash,
                json!({ "first": a.determinism_hash, "second": b.determinism_hash }),
                "identical hashes for identical runs",
                false,
            ),
            // the worker count is echoed in the report, so compare results only
            contract(
                "worker_count",
                a.results == c.results,
                json!({ "two_workers": a.determinism_hash, "one_worker": c.determinism_hash }),
                "identical results for 1 and 2 workers",
                false,
            ),
        ],
        Value::Null,
    ))
}
