//! One function per subcommand. Each returns the report and its CSV rows.

use std::path::PathBuf;

use serde_json::{json, Value};

use symcap_core::alpha::{capacity_interval, AlphaOptions, AlphaPlan};
use symcap_core::ensemble::{
    capacity_sandwich_from, chevet_check, concentration_profile, counterexample_sweep, ellipsoid_capacity_expectation,
    expect_alpha_moment_for, EnsembleConfig, TailStatistic,
};
use symcap_core::geom::{ratio_anchor, table1_row};
use symcap_core::{ehz_ellipsoid, haar_rotation, make_body, Body, Error, FamilySpec, RngStream};

use crate::args::{Command, Common, Format};
use crate::config::ConfigFile;
use crate::report::{est, CsvRow, ReportDocument};
use crate::verify::{run_suite, SuiteReport, SUITES};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::HeuristicRejected => EXIT_UNCERTIFIED,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CmdResult = Result<(ReportDocument, Vec<CsvRow>), CliError>;

/// Flags merged with the config file and the environment.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub samples: Option<usize>,
    pub workers: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub allow_heuristic: bool,
    pub bootstrap: bool,
    pub file: ConfigFile,
}

pub const SEED_ENV: &str = "SYMCAP_SEED";

impl Settings {
    /// Precedence: flag, config file, `$SYMCAP_SEED` (seed only), built-in.
    pub fn resolve(common: &Common, env_seed: Option<String>) -> Result<Self, CliError> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p).map_err(CliError::usage)?,
            None => ConfigFile::default(),
        };
        let env_seed = env_seed
            .map(|s| s.trim().parse::<u64>().map_err(|_| CliError::usage(format!("{SEED_ENV}=`{s}` is not a u64"))))
            .transpose()?;
        let format = match common.format {
            Some(f) => f,
            None => match file.raw("format") {
                None | Some("json") => Format::Json,
                Some("csv") => Format::Csv,
                Some(other) => return Err(CliError::usage(format!("config key `format`: unknown format `{other}`"))),
            },
        };
        Ok(Settings {
            seed: common.seed.or(file.get("seed").map_err(CliError::usage)?).or(env_seed).unwrap_or(0),
            samples: common.samples.or(file.get("samples").map_err(CliError::usage)?),
            workers: common.workers.or(file.get("workers").map_err(CliError::usage)?).unwrap_or(0),
            format,
            out: common.out.clone().or(file.get("out").map_err(CliError::usage)?),
            allow_heuristic: common.allow_heuristic || file.flag("allow-heuristic").map_err(CliError::usage)?,
            bootstrap: common.bootstrap || file.flag("bootstrap").map_err(CliError::usage)?,
            file,
        })
    }

    fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn body(&self, flag: Option<String>, default: Option<&str>) -> Result<FamilySpec, CliError> {
        let raw = flag
            .or_else(|| self.file.raw("body").map(str::to_string))
            .or(default.map(str::to_string))
            .ok_or_else(|| CliError::usage("--body is required"))?;
        Ok(raw.parse::<FamilySpec>()?)
    }

    fn value<T: std::str::FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(flag.or(self.file.get(key).map_err(CliError::usage)?).unwrap_or(default))
    }

    fn list<T: std::str::FromStr + Clone>(&self, flag: Option<Vec<T>>, key: &str, default: &[T]) -> Result<Vec<T>, CliError> {
        Ok(flag
            .or(self.file.list(key).map_err(CliError::usage)?)
            .unwrap_or_else(|| default.to_vec()))
    }

    fn echo(&self) -> Value {
        json!({
            "samples": self.samples,
            "workers": self.workers,
            "allow_heuristic": self.allow_heuristic,
            "bootstrap": self.bootstrap,
        })
    }
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

fn vec_json(v: &nalgebra::DVector<f64>) -> Value {
    json!(v.iter().collect::<Vec<_>>())
}

/// Outcome of a command: the report, CSV rows and the exit code.
pub struct Outcome {
    pub doc: ReportDocument,
    pub rows: Vec<CsvRow>,
    pub code: i32,
}

pub fn dispatch(command: Command, settings: &Settings) -> Result<Outcome, CliError> {
    let ok = |(doc, rows): (ReportDocument, Vec<CsvRow>)| Outcome { doc, rows, code: 0 };
    match command {
        Command::Alpha { body, rotation_seed } => run_alpha(settings, body, rotation_seed).map(ok),
        Command::Expect { body, p } => run_expect(settings, body, p).map(ok),
        Command::Table1 { dims, families } => run_table1(settings, dims, families).map(ok),
        Command::Verify { suite } => run_verify(settings, &suite),
        Command::Sweep { lambdas, dim } => run_sweep(settings, lambdas, dim).map(ok),
        Command::Concentration { body, dims, inverse } => run_concentration(settings, body, dims, inverse).map(ok),
        Command::Chevet { body } => run_chevet(settings, body).map(ok),
    }
}

pub fn run_alpha(settings: &Settings, body: Option<String>, rotation_seed: Option<u64>) -> CmdResult {
    let spec = settings.body(body, None)?;
    let rotation_seed = rotation_seed.or(settings.file.get("rotation-seed").map_err(CliError::usage)?);
    let k: Body = make_body(&spec)?;
    let plan = AlphaPlan::new(&k, AlphaOptions::default())?;
    if !plan.method().is_exact() && !settings.allow_heuristic {
        return Err(Error::HeuristicRejected.into());
    }
    let o = rotation_seed
        .map(|s| haar_rotation::<f64, _>(&mut RngStream::new(s, 0).rng(), k.dim()))
        .transpose()?;
    let a = plan.evaluate(o.as_ref(), &mut RngStream::new(settings.seed, 0).rng())?;
    let interval = capacity_interval(a.clone());
    // ellipsoids also get their exact capacity
    let exact = match k.quad_form() {
        Some(c) => {
            let c = match &o {
                Some(o) => o.matrix() * c * o.matrix().transpose(),
                None => c.clone(),
            };
            Some(ehz_ellipsoid(&c)?)
        }
        None => None,
    };
    let results = json!({
        "alpha": a.value,
        "method": a.method,
        "certified": a.certified(),
        "converged": a.converged,
        "gap_bound": a.gap_bound,
        "certificate": a.certificate.as_ref().map(|(x, y)| json!({ "x": vec_json(x), "y": vec_json(y) })),
        "capacity_interval": { "lo": interval.lo, "hi": interval.hi, "certified": interval.certified },
        "exact_capacity": exact,
        "rotation_seed": rotation_seed,
    });
    let mut rows = vec![
        CsvRow::new("alpha", 0.0, a.value, None),
        CsvRow::new("capacity_lo", 0.0, interval.lo, None),
        CsvRow::new("capacity_hi", 0.0, interval.hi, None),
    ];
    if let Some(c) = exact {
        rows.push(CsvRow::new("capacity_exact", 0.0, c, None));
    }
    let params = merge(settings.echo(), json!({ "rotation_seed": rotation_seed }));
    Ok((ReportDocument::new("alpha", Some(spec.to_string()), params, settings.seed, 0, results), rows))
}

pub const EXPECT_SAMPLES: usize = 2000;

pub fn run_expect(settings: &Settings, body: Option<String>, p: Option<f64>) -> CmdResult {
    let spec = settings.body(body, None)?;
    let p = settings.value(p, "p", 1.0)?;
    let n = settings.samples_or(EXPECT_SAMPLES);
    let cfg = EnsembleConfig {
        body: spec.clone(),
        n_samples: n,
        seed: settings.seed,
        p,
        workers: settings.workers,
        allow_heuristic: settings.allow_heuristic,
        bootstrap: settings.bootstrap,
    };
    cfg.validate()?;
    let k: Body = make_body(&spec)?;
    let stream = cfg.stream();
    let moment = expect_alpha_moment_for(&k, &cfg)?;
    let mut rows = vec![CsvRow::new("alpha_moment", p, moment.moment.estimate, Some(moment.moment.std_error))];
    let sandwich = if p > 0.0 {
        let s = capacity_sandwich_from(&moment.samples, p, moment.method.is_exact(), settings.seed)?;
        rows.push(CsvRow::new("capacity_lo", p, s.lo.estimate, Some(s.lo.std_error)));
        rows.push(CsvRow::new("capacity_hi", p, s.hi.estimate, Some(s.hi.std_error)));
        Some(s)
    } else {
        None
    };
    // same stream, so sample i sees the same rotation as the α ensemble
    let exact = match &spec {
        FamilySpec::SymplecticEllipsoid { axes } => {
            let e = ellipsoid_capacity_expectation(axes, p, n, &stream, settings.workers)?;
            rows.push(CsvRow::new("capacity_exact", p, e.moment.estimate, Some(e.moment.std_error)));
            let products: Option<(f64, f64)> = (e.failures == 0).then(|| {
                e.samples
                    .iter()
                    .zip(&moment.samples)
                    .map(|(c, a)| c * a)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
            });
            Some(json!({
                "moment": est(&e.moment),
                "failures": e.failures,
                "product_range": products.map(|(lo, hi)| json!({ "min": lo, "max": hi })),
                "inside_bracket": sandwich.map(|s| s.contains(&e.moment, 4.0)),
            }))
        }
        _ => None,
    };
    let anchor = ratio_anchor(&k, n, &stream.child(1), settings.workers)?;
    rows.push(CsvRow::new("anchor_ratio", p, anchor.ratio.estimate, Some(anchor.ratio.std_error)));
    let reference = anchor.section_mean_width.scaled(anchor.polar_circumradius);
    let results = json!({
        "alpha_moment": merge(est(&moment.moment), json!({
            "p": p,
            "method": moment.method,
            "converged": moment.converged,
            "bootstrap_se": moment.bootstrap_se,
        })),
        "capacity_sandwich": sandwich.map(|s| json!({ "lo": est(&s.lo), "hi": est(&s.hi), "certified": s.certified })),
        "exact_capacity": exact,
        "anchor": {
            "inradius": anchor.inradius,
            "polar_circumradius": anchor.polar_circumradius,
            "contact": anchor.contact,
            "section_mean_width": est(&anchor.section_mean_width),
            "ratio": est(&anchor.ratio),
            "mean_alpha_reference": est(&reference),
        },
    });
    let params = merge(settings.echo(), json!({ "p": p }));
    Ok((ReportDocument::new("expect", Some(spec.to_string()), params, settings.seed, n, results), rows))
}

pub const TABLE1_SAMPLES: usize = 20_000;
pub const DEFAULT_DIMS: [usize; 4] = [8, 16, 32, 64];

pub fn run_table1(settings: &Settings, dims: Option<Vec<usize>>, families: Option<Vec<String>>) -> CmdResult {
    let dims = settings.list(dims, "dims", &DEFAULT_DIMS)?;
    let default_fams: Vec<String> = ["cube", "cross", "ellipsoid", "box"].iter().map(|s| s.to_string()).collect();
    let families = settings.list(families, "families", &default_fams)?;
    let n = settings.samples_or(TABLE1_SAMPLES);
    let stream = RngStream::new(settings.seed, 0);
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (fi, fam) in families.iter().enumerate() {
        for &d in &dims {
            let spec = FamilySpec::named(fam, d)?;
            let r = table1_row(&spec, n, &stream.child((fi * 100_000 + d) as u64), settings.workers)?;
            let cols = ["r_sq", "ratio", "volradius_sq"];
            for (c, name) in cols.iter().enumerate() {
                let err = (c == 1).then(|| r.ratio.std_error / r.reference[1]);
                rows.push(CsvRow::new(format!("{fam}:{name}"), d as f64, r.normalized[c], err));
            }
            out.push(json!({
                "family": fam,
                "body": spec.to_string(),
                "dim": d,
                "r_sq": r.r_sq,
                "ratio": est(&r.ratio),
                "volradius_sq": r.volradius_sq,
                "reference": r.reference,
                "normalized": r.normalized,
                "contact": r.contact,
            }));
        }
    }
    let params = merge(settings.echo(), json!({ "dims": dims, "families": families }));
    Ok((ReportDocument::new("table1", None, params, settings.seed, n, json!({ "rows": out })), rows))
}

fn suite_rows(r: &SuiteReport) -> Vec<CsvRow> {
    r.contracts
        .iter()
        .enumerate()
        .map(|(i, c)| CsvRow::new(format!("{}:{}", r.suite, c.name), i as f64, if c.passed { 1.0 } else { 0.0 }, None))
        .collect()
}

pub fn run_verify(settings: &Settings, suite: &str) -> Result<Outcome, CliError> {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut reports = Vec::new();
    for name in names {
        reports.push(run_suite(name, settings.seed, settings.workers)?);
    }
    let passed = reports.iter().all(|r| r.passed);
    let rows = reports.iter().flat_map(suite_rows).collect();
    let results = json!({ "passed": passed, "suites": reports });
    let params = json!({ "suite": suite, "workers": settings.workers });
    Ok(Outcome {
        doc: ReportDocument::new("verify", None, params, settings.seed, 0, results),
        rows,
        code: if passed { 0 } else { EXIT_ACCEPTANCE },
    })
}

pub const SWEEP_SAMPLES: usize = 2000;

pub fn run_sweep(settings: &Settings, lambdas: Option<Vec<f64>>, dim: Option<usize>) -> CmdResult {
    let lambdas = settings.list(lambdas, "lambdas", &crate::verify::SWEEP_LAMBDAS)?;
    let dim = settings.value(dim, "dim", 8)?;
    let n = settings.samples_or(SWEEP_SAMPLES);
    let pts = counterexample_sweep(&lambdas, dim, n, n, &RngStream::new(settings.seed, 0), settings.workers)?;
    let mut rows = Vec::new();
    for p in &pts {
        rows.push(CsvRow::new("capacity_lower", p.lambda, p.capacity_lower.estimate, Some(p.capacity_lower.std_error)));
        rows.push(CsvRow::new("anchor_ratio", p.lambda, p.anchor.ratio.estimate, Some(p.anchor.ratio.std_error)));
    }
    let points: Vec<Value> = pts
        .iter()
        .map(|p| {
            json!({
                "lambda": p.lambda,
                "capacity_lower": est(&p.capacity_lower),
                "method": p.method,
                "inradius": p.anchor.inradius,
                "section_mean_width": est(&p.anchor.section_mean_width),
                "anchor_ratio": est(&p.anchor.ratio),
            })
        })
        .collect();
    let params = merge(settings.echo(), json!({ "lambdas": lambdas, "dim": dim }));
    Ok((ReportDocument::new("sweep", None, params, settings.seed, n, json!({ "points": points })), rows))
}

pub const CONCENTRATION_SAMPLES: usize = 4000;

pub fn run_concentration(settings: &Settings, body: Option<String>, dims: Option<Vec<usize>>, inverse: bool) -> CmdResult {
    let spec = settings.body(body, Some("cube:8"))?;
    let dims = settings.list(dims, "dims", &DEFAULT_DIMS)?;
    let n = settings.samples_or(CONCENTRATION_SAMPLES);
    let stat = if inverse { TailStatistic::InverseAlpha } else { TailStatistic::Alpha };
    let profiles = concentration_profile(&spec, &dims, n, &RngStream::new(settings.seed, 0), settings.workers, stat, settings.allow_heuristic)?;
    let mut rows = Vec::new();
    for p in &profiles {
        rows.push(CsvRow::new("sd", p.dim as f64, p.sd, None));
        for (t, q) in p.thresholds.iter().zip(&p.empirical_tail) {
            rows.push(CsvRow::new(format!("tail:{}", p.dim), *t, *q, None));
        }
    }
    let params = merge(settings.echo(), json!({ "dims": dims, "statistic": stat }));
    Ok((ReportDocument::new("concentration", Some(spec.to_string()), params, settings.seed, n, json!({ "profiles": profiles })), rows))
}

pub const CHEVET_SAMPLES: usize = 2000;

pub fn run_chevet(settings: &Settings, body: Option<String>) -> CmdResult {
    let spec = settings.body(body, None)?;
    let n = settings.samples_or(CHEVET_SAMPLES);
    let k: Body = make_body(&spec)?;
    let c = chevet_check(&k, n, &RngStream::new(settings.seed, 0), settings.workers)?;
    let rows = vec![
        CsvRow::new("operator_norm", 0.0, c.lhs.estimate, Some(c.lhs.std_error)),
        CsvRow::new("bound", 0.0, c.bound.estimate, Some(c.bound.std_error)),
    ];
    let results = json!({ "mean_operator_norm": est(&c.lhs), "bound": est(&c.bound), "ratio": c.ratio });
    Ok((ReportDocument::new("chevet", Some(spec.to_string()), settings.echo(), settings.seed, n, results), rows))
}
