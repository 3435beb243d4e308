//! Scenario runs: distance → truncation → smoothing → surgery → embedding →
//! lift → verification, with reports and CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distance::distance_field;
use crate::embed::{
    distortion, embed_curve, optimize_embedding, DistortionReport, EmbedRequest, OptimizerParams, Provider,
    StressSample,
};
use crate::error::{Error, Result};
use crate::fields::{EmbeddingMap, MetricField, ScalarField};
use crate::generators::Generator;
use crate::io::{load_manifold, Format};
use crate::lift::{
    axis_query, escape_bound_check, lift, non_properness_witness, properness_certificate, pullback_check, EscapeReport,
    NonPropernessWitness, PropernessCertificate, WitnessParams,
};
use crate::manifold::SampledManifold;
use crate::refine::refine;
use crate::smoothing::{
    smooth_approx, truncate_distance, tube_bounds, verify_tube, SmoothingCertificate, SmoothingParams, TubeReport,
};
use crate::surgery::{covector_norm, differential, modify_metric, reconstruction_residual, spd_check};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Generator(Generator),
    /// Mesh or curve-config file; relative paths resolve against the
    /// scenario file's directory.
    File {
        path: PathBuf,
        format: Option<Format>,
    },
}

/// A query point given by its height `Q` (placed on the last axis) or in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuerySpec {
    Height(f64),
    Point(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessCheck {
    #[serde(default)]
    pub params: WitnessParams,
    /// Whether the pre-lift embedding is expected to fail properness.
    pub expect_raw: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub source: Source,
    #[serde(default)]
    pub refine: u32,
    #[serde(default)]
    pub smoothing: SmoothingParams,
    pub embed: EmbedRequest,
    #[serde(default = "default_queries")]
    pub queries: Vec<QuerySpec>,
    #[serde(default = "default_pullback_tolerance")]
    pub pullback_tolerance: f64,
    #[serde(default)]
    pub witness: Option<WitnessCheck>,
}

fn default_queries() -> Vec<QuerySpec> {
    vec![QuerySpec::Height(0.5), QuerySpec::Height(1.0), QuerySpec::Height(2.0)]
}

fn default_pullback_tolerance() -> f64 {
    1e-6
}

impl Scenario {
    /// Reads a scenario file and resolves relative manifold paths.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        let mut s: Scenario =
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("scenario {}: {e}", path.display())))?;
        if let Source::File { path: p, .. } = &mut s.source {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        s.validate()?;
        Ok(s)
    }

    /// Checks everything except the smoothing parameters, whose failures
    /// are reported by the smoothing stage.
    pub fn validate(&self) -> Result<()> {
        if !(self.pullback_tolerance > 0.0) {
            return Err(Error::InvalidParameter("pullback_tolerance must be positive".into()));
        }
        for q in &self.queries {
            let ok = match q {
                QuerySpec::Height(h) => h.is_finite(),
                QuerySpec::Point(p) => !p.is_empty() && p.iter().all(|x| x.is_finite()),
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("bad query {q:?}")));
            }
        }
        if self.embed.ambient_dim == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        Ok(())
    }

    fn build_manifold(&self) -> Result<SampledManifold> {
        let m = match &self.source {
            Source::Generator(g) => g.build()?,
            Source::File { path, format } => load_manifold(path, format.unwrap_or_else(|| Format::from_path(path)))?,
        };
        if self.refine > 0 {
            refine(&m, self.refine)
        } else {
            Ok(m)
        }
    }
}

fn curve_scenario(
    name: &str,
    description: &str,
    generator: Generator,
    provider: Provider,
    ambient_dim: usize,
) -> Scenario {
    Scenario {
        name: name.into(),
        description: description.into(),
        source: Source::Generator(generator),
        refine: 0,
        smoothing: SmoothingParams::default(),
        embed: EmbedRequest {
            ambient_dim,
            provider,
            ..Default::default()
        },
        queries: default_queries(),
        pullback_tolerance: default_pullback_tolerance(),
        witness: None,
    }
}

/// Metric of the bundled line scenario.
pub const LINE_METRIC: &str = "(1 + 0.1 * math::sin(t / 100))^2";

const SCENARIOS: &[&str] = &["line", "circle", "spiral-circle", "spiral-point", "grid-patch"];

pub fn list_scenarios() -> Vec<&'static str> {
    SCENARIOS.to_vec()
}

/// Bundled scenario by name.
pub fn scenario(name: &str) -> Option<Scenario> {
    let half_line = Generator::HalfLine {
        horizon: 100.0,
        edges: 10_000,
    };
    let raw_witness = |expect_raw| {
        Some(WitnessCheck {
            params: WitnessParams::default(),
            expect_raw,
        })
    };
    let s = match name {
        "line" => Scenario {
            witness: raw_witness(false),
            ..curve_scenario(
                name,
                "interval [0, 100] with a varying metric, arc-length embedding",
                Generator::LineSegment {
                    t0: 0.0,
                    t1: 100.0,
                    edges: 10_000,
                    metric: LINE_METRIC.into(),
                },
                Provider::Line,
                1,
            )
        },
        "circle" => curve_scenario(
            name,
            "closed loop of length 2, inscribed polygon",
            Generator::Circle {
                circumference: 2.0,
                edges: 10_000,
            },
            Provider::Circle,
            2,
        ),
        "spiral-circle" => Scenario {
            witness: raw_witness(true),
            ..curve_scenario(
                name,
                "half-line wound onto the unit circle",
                half_line,
                Provider::SpiralToCircle,
                2,
            )
        },
        "spiral-point" => Scenario {
            witness: raw_witness(true),
            ..curve_scenario(
                name,
                "half-line wound into the origin",
                half_line,
                Provider::SpiralToPoint,
                2,
            )
        },
        "grid-patch" => Scenario {
            pullback_tolerance: 1e-3,
            embed: EmbedRequest {
                ambient_dim: 51,
                provider: Provider::Optimizer,
                optimizer: OptimizerParams {
                    rel_tol: 1e-6,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..curve_scenario(
                name,
                "flat 33×33 patch of the unit square, stress optimizer",
                Generator::GridPatch { k: 33, size: 1.0 },
                Provider::Optimizer,
                51,
            )
        },
        _ => return None,
    };
    Some(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Skipped,
}

/// How a failing stage is reported to callers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Input,
    Certification,
    Verification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub kind: StageKind,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub const STAGES: &[(&str, StageKind)] = &[
    ("manifold", StageKind::Input),
    ("distance", StageKind::Input),
    ("truncation", StageKind::Input),
    ("smoothing", StageKind::Certification),
    ("surgery", StageKind::Certification),
    ("embedding", StageKind::Verification),
    ("lift", StageKind::Verification),
    ("pullback", StageKind::Verification),
    ("escape", StageKind::Verification),
    ("properness", StageKind::Verification),
    ("witness", StageKind::Verification),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdSummary {
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub min_generalized: f64,
    pub max_covector_norm: f64,
    /// Smallest `λ(g̃, g) − (1 − ¼‖dφ‖²)` over cells.
    pub min_floor_gap: f64,
    pub reconstruction_residual: f64,
    pub failing_cells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub expect_raw: bool,
    pub raw: Option<NonPropernessWitness>,
    pub lifted: Option<NonPropernessWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub passed: bool,
    pub stages: Vec<StageStatus>,
    pub vertex_count: usize,
    pub cell_count: usize,
    pub mesh_scale: f64,
    pub smoothing: Option<SmoothingCertificate>,
    pub tube: Option<TubeReport>,
    pub spd: Option<SpdSummary>,
    pub embedding: Option<DistortionReport>,
    pub pullback: Option<DistortionReport>,
    pub escape: Option<EscapeReport>,
    pub certificates: Vec<PropernessCertificate>,
    pub witness: Option<WitnessSummary>,
}

impl RunReport {
    fn new(name: &str) -> RunReport {
        RunReport {
            scenario: name.into(),
            passed: false,
            stages: STAGES
                .iter()
                .map(|&(stage, kind)| StageStatus {
                    stage: stage.into(),
                    kind,
                    status: Status::Skipped,
                    detail: None,
                })
                .collect(),
            vertex_count: 0,
            cell_count: 0,
            mesh_scale: 0.0,
            smoothing: None,
            tube: None,
            spd: None,
            embedding: None,
            pullback: None,
            escape: None,
            certificates: Vec::new(),
            witness: None,
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageStatus> {
        self.stages.iter().find(|s| s.stage == name)
    }

    fn set(&mut self, name: &str, ok: bool, detail: Option<String>) {
        let s = self.stages.iter_mut().find(|s| s.stage == name).expect("known stage");
        s.status = if ok { Status::Passed } else { Status::Failed };
        s.detail = detail;
    }

    /// First failing stage, if any.
    pub fn first_failure(&self) -> Option<&StageStatus> {
        self.stages.iter().find(|s| s.status == Status::Failed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Fields produced along the way, for output files.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub manifold: Option<SampledManifold>,
    pub distance: Option<ScalarField>,
    pub truncated: Option<ScalarField>,
    pub phi: Option<ScalarField>,
    pub gt: Option<MetricField>,
    pub raw: Option<EmbeddingMap>,
    pub lifted: Option<EmbeddingMap>,
    pub stress_trace: Vec<StressSample>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub timings: Vec<StageTiming>,
    pub artifacts: Artifacts,
}

struct Runner {
    report: RunReport,
    timings: Vec<StageTiming>,
    artifacts: Artifacts,
}

impl Runner {
    /// Runs one stage; `Err` marks it failed and stops the run.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<(T, bool, Option<String>)>) -> Option<T> {
        let start = Instant::now();
        let out = f(self);
        self.timings.push(StageTiming {
            stage: name.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        match out {
            Ok((v, ok, detail)) => {
                self.report.set(name, ok, detail);
                Some(v)
            }
            Err(e) => {
                self.report.set(name, false, Some(e.to_string()));
                None
            }
        }
    }
}

fn queries_for(s: &Scenario, dim: usize) -> Vec<Vec<f64>> {
    s.queries
        .iter()
        .map(|q| match q {
            QuerySpec::Height(h) => axis_query(dim, *h),
            QuerySpec::Point(p) => p.clone(),
        })
        .collect()
}

pub fn run_scenario(s: &Scenario) -> Result<RunOutput> {
    s.validate()?;
    let mut r = Runner {
        report: RunReport::new(&s.name),
        timings: Vec::new(),
        artifacts: Artifacts::default(),
    };
    let params = &s.smoothing;
    run_stages(s, params, &mut r);
    r.report.passed = r.report.stages.iter().all(|st| match st.status {
        Status::Passed => true,
        Status::Skipped => st.stage == "witness" && s.witness.is_none(),
        Status::Failed => false,
    });
    Ok(RunOutput {
        report: r.report,
        timings: r.timings,
        artifacts: r.artifacts,
    })
}

fn run_stages(s: &Scenario, params: &SmoothingParams, r: &mut Runner) -> Option<()> {
    let m = r.stage("manifold", |_| Ok((s.build_manifold()?, true, None)))?;
    r.report.vertex_count = m.vertex_count();
    r.report.cell_count = m.cell_count();
    r.report.mesh_scale = m.mesh_scale();
    r.artifacts.manifold = Some(m.clone());

    let d = r.stage("distance", |_| Ok((distance_field(&m)?, true, None)))?;
    r.artifacts.distance = Some(d.clone());
    let f = r.stage("truncation", |_| Ok((truncate_distance(&d, params)?, true, None)))?;
    r.artifacts.truncated = Some(f.clone());

    let phi = r.stage("smoothing", |r| match smooth_approx(&m, &f, params) {
        Ok((phi, cert)) => {
            let tube = verify_tube(&phi, &f, &d, params)?;
            let ok = cert.valid && tube.tube_violations.is_empty();
            r.report.smoothing = Some(cert);
            r.report.tube = Some(tube);
            Ok((phi, ok, None))
        }
        Err(Error::Certification(cert)) => {
            r.report.smoothing = Some(*cert);
            Err(Error::Validation(
                "smoothing did not certify within the pass budget".into(),
            ))
        }
        Err(e) => Err(e),
    })?;
    r.artifacts.phi = Some(phi.clone());
    if r.report.stage("smoothing").map(|st| st.status) != Some(Status::Passed) {
        return None;
    }

    let gt = r.stage("surgery", |r| {
        let w = differential(&m, &phi)?;
        let norms = covector_norm(&w, m.metric())?;
        let gt = modify_metric(m.metric(), &w)?;
        let spd = spd_check(&gt, m.metric())?;
        let min_floor_gap = spd
            .generalized
            .iter()
            .zip(&norms)
            .map(|(l, n)| l - (1.0 - 0.25 * n * n))
            .fold(f64::INFINITY, f64::min);
        let summary = SpdSummary {
            passed: spd.passed,
            min_eigenvalue: spd.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min),
            min_generalized: spd.min_generalized,
            max_covector_norm: norms.iter().copied().fold(0.0, f64::max),
            min_floor_gap,
            reconstruction_residual: reconstruction_residual(&gt, m.metric(), &w)?,
            failing_cells: spd.failing_cells.clone(),
        };
        let ok = summary.passed;
        r.report.spd = Some(summary);
        Ok((gt, ok, None))
    })?;
    r.artifacts.gt = Some(gt.clone());
    if r.report.stage("surgery").map(|st| st.status) != Some(Status::Passed) {
        return None;
    }

    let raw = r.stage("embedding", |r| {
        let (map, report) = match s.embed.provider {
            Provider::Optimizer => {
                let out = optimize_embedding(&m, &gt, &s.embed)?;
                r.artifacts.stress_trace = out.trace;
                (out.map, out.report)
            }
            _ => {
                let map = embed_curve(&m, &gt, &s.embed)?;
                let rep = distortion(&map, &m, &gt)?;
                (map, rep)
            }
        };
        let ok = report.converged;
        let detail = (!ok).then(|| "optimizer stopped before reaching its tolerance".to_string());
        r.report.embedding = Some(report);
        Ok((map, ok, detail))
    })?;
    r.artifacts.raw = Some(raw.clone());

    let e = r.stage("lift", |_| Ok((lift(&raw, &phi)?, true, None)))?;
    r.artifacts.lifted = Some(e.clone());

    r.stage("pullback", |r| {
        let rep = pullback_check(&e, &m)?;
        let ok = rep.max_rel_edge_error <= s.pullback_tolerance;
        let detail = (!ok).then(|| {
            format!(
                "max relative error {:e} above {:e}",
                rep.max_rel_edge_error, s.pullback_tolerance
            )
        });
        r.report.pullback = Some(rep);
        Ok(((), ok, detail))
    });
    r.stage("escape", |r| {
        let rep = escape_bound_check(&e, &d, params.r_ball)?;
        let ok = rep.passed();
        let detail = (!ok).then(|| format!("{} vertices below D/4", rep.violations.len()));
        r.report.escape = Some(rep);
        Ok(((), ok, detail))
    });
    r.stage("properness", |r| {
        let mut ok = true;
        for q in queries_for(s, e.ambient_dim()) {
            let c = properness_certificate(&e, &m, &d, &q, params.r_ball)?;
            ok &= c.verdict;
            r.report.certificates.push(c);
        }
        Ok(((), ok, None))
    });
    if let Some(check) = &s.witness {
        r.stage("witness", |r| {
            let raw_w = non_properness_witness(&raw, &m, &check.params)?;
            let lifted_params = WitnessParams {
                target: None,
                ..check.params.clone()
            };
            let lifted_w = non_properness_witness(&e, &m, &lifted_params)?;
            let ok = raw_w.is_some() == check.expect_raw && lifted_w.is_none();
            let detail = (!ok).then(|| {
                format!(
                    "raw witness found: {}, lifted witness found: {}",
                    raw_w.is_some(),
                    lifted_w.is_some()
                )
            });
            r.report.witness = Some(WitnessSummary {
                expect_raw: check.expect_raw,
                raw: raw_w,
                lifted: lifted_w,
            });
            Ok(((), ok, detail))
        });
    }
    Some(())
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    written.push(p);
    Ok(())
}

/// `vertex,x,y,D` rows.
pub fn distance_csv(m: &SampledManifold, d: &ScalarField) -> String {
    let mut s = String::from("vertex,x,y,distance\n");
    for (v, (p, dv)) in m.chart().iter().zip(d.values()).enumerate() {
        let _ = writeln!(s, "{v},{:?},{:?},{dv:?}", p[0], p[1]);
    }
    s
}

fn embedding_csv(x: &EmbeddingMap) -> String {
    let mut s = String::from("vertex");
    for i in 0..x.ambient_dim() {
        let _ = write!(s, ",x{i}");
    }
    s.push('\n');
    for (v, p) in x.points().enumerate() {
        let _ = write!(s, "{v}");
        for c in p {
            let _ = write!(s, ",{c:?}");
        }
        s.push('\n');
    }
    s
}

/// Writes CSV series and JSON reports into `dir`, returning the paths.
pub fn emit_plots(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let a = &out.artifacts;
    if let (Some(m), Some(d)) = (&a.manifold, &a.distance) {
        write(dir, "distance.csv", &distance_csv(m, d), &mut written)?;
    }
    if let (Some(d), Some(f), Some(phi)) = (&a.distance, &a.truncated, &a.phi) {
        let (lo, hi) = tube_bounds(f)?;
        let mut s = String::from("vertex,distance,f,phi,tube_lo,tube_hi\n");
        for v in 0..phi.len() {
            let _ = writeln!(s, "{v},{:?},{:?},{:?},{:?},{:?}", d[v], f[v], phi[v], lo[v], hi[v]);
        }
        write(dir, "phi.csv", &s, &mut written)?;
    }
    if let Some(gt) = &a.gt {
        let mut s = String::from(if gt.dim() == 1 {
            "cell,g11\n"
        } else {
            "cell,g11,g12,g22\n"
        });
        for (c, t) in gt.tensors().iter().enumerate() {
            let coeffs: Vec<String> = t.coefficients().iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{c},{}", coeffs.join(","));
        }
        write(dir, "gtilde.csv", &s, &mut written)?;
    }
    if let Some(x) = &a.raw {
        write(dir, "embedding.csv", &embedding_csv(x), &mut written)?;
    }
    if let Some(x) = &a.lifted {
        write(dir, "lifted.csv", &embedding_csv(x), &mut written)?;
    }
    if !a.stress_trace.is_empty() {
        let mut s = String::from("iter,stress,step\n");
        for t in &a.stress_trace {
            let _ = writeln!(s, "{},{:?},{:?}", t.iter, t.stress, t.step);
        }
        write(dir, "stress.csv", &s, &mut written)?;
    }
    write(
        dir,
        "certificate.json",
        &serde_json::to_string_pretty(&out.report.certificates)?,
        &mut written,
    )?;
    if let Some(w) = &out.report.witness {
        write(dir, "witness.json", &serde_json::to_string_pretty(w)?, &mut written)?;
    }
    write(dir, "report.json", &out.report.to_json()?, &mut written)?;
    write(
        dir,
        "timings.json",
        &serde_json::to_string_pretty(&out.timings)?,
        &mut written,
    )?;
    Ok(written)
}
