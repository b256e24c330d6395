//! Scenario runs, coupling sweeps and figure data behind the `condmeas` binary.
//!
//! Every evaluation can go through three paths:
//!
//! * `grid`: conditioned moments of the brute-force evolved joint state;
//! * `joint`: the same moments assembled from joint weak values;
//! * `closed`: Hermite-Gauss closed forms, or kernel-based system
//!   expressions for other detector profiles.
//!
//! Agreement is measured as `|a − b| / max(1, |b|)` against the grid path.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{decoherence_kernel, kernel_accuracy_warning, laguerre};
use crate::hilbert::SystemOperator;
use crate::scenario::{DetectorVariant, Paths, Resolved, Scenario};
use crate::vonneumann::{conditioned_result, ConditionedResult, CouplingConfig, GridOracle};
use crate::weakvalue::{
    conditioned_averages_from_weak_values, generalized_weak_value, hg_closed_forms,
    joint_weak_values, kernel_averages, second_moment_closed_form,
};
use crate::{Error, Result};

/// Post-selection probabilities below this trigger a warning.
pub const LOW_PROBABILITY: f64 = 1e-3;

/// `|a − b| / max(1, |b|)`.
pub fn relative_delta(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub grid_points: Option<usize>,
    pub paths: Option<Paths>,
    pub tolerance: Option<f64>,
}

impl RunOptions {
    pub fn apply(&self, scenario: &mut Scenario) {
        if let Some(n) = self.grid_points {
            scenario.detector.grid_points = Some(n);
        }
        if let Some(p) = self.paths {
            scenario.outputs.paths = p;
        }
        if let Some(t) = self.tolerance {
            scenario.outputs.tolerance = t;
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            if n == 0 {
                return Err(Error::validation("--workers", "must be at least 1"));
            }
            builder = builder.num_threads(n);
        }
        builder
            .build()
            .map_err(|e| Error::validation("--workers", e.to_string()))
    }
}

/// Short machine-readable tag for an error, used in CSV marker columns.
pub fn error_tag(e: &Error) -> &'static str {
    match e {
        Error::PostSelectionImpossible { .. } => "post-selection-impossible",
        Error::Wraparound { .. } => "wraparound",
        Error::GridTruncation { .. } => "grid-truncation",
        Error::Domain { .. } => "domain",
        Error::Tolerance(_) => "tolerance",
        Error::Io(_) => "io",
        _ => "validation",
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    /// `x[n − 1] = f⟨xⁿ⟩`.
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl From<&ConditionedResult> for Moments {
    fn from(r: &ConditionedResult) -> Self {
        Moments {
            x: r.moments_x.clone(),
            p: r.moments_p.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct WeakValueReport {
    pub ReA_w: f64,
    pub ImA_w: f64,
    pub Rex_w: f64,
    pub Rep_w: f64,
    pub ReDelta: Option<f64>,
    pub ImDelta: Option<f64>,
}

/// One `(g, detector)` evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub g: f64,
    pub mode: String,
    pub prob_f: f64,
    /// Keyed by path: `grid`, `joint`, `closed`.
    pub moments: BTreeMap<String, Moments>,
    pub weak_values: WeakValueReport,
    /// Keyed by `<path>_vs_grid`; relative deltas per reported moment.
    pub deltas: BTreeMap<String, Moments>,
    pub warnings: Vec<String>,
}

impl Evaluation {
    pub fn max_delta(&self) -> f64 {
        self.deltas
            .values()
            .flat_map(|m| m.x.iter().chain(&m.p))
            .fold(0.0, |a, &b| a.max(b))
    }

    pub fn first_moments(&self, path: &str) -> Option<(f64, f64)> {
        self.moments.get(path).map(|m| (m.x[0], m.p[0]))
    }
}

fn deltas_against(reference: &Moments, other: &Moments) -> Moments {
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| relative_delta(*x, *y)).collect();
    Moments {
        x: d(&other.x, &reference.x),
        p: d(&other.p, &reference.p),
    }
}

/// Everything the closed path produces for one evaluation.
struct ClosedPath {
    prob_f: f64,
    moments: Moments,
    weak: WeakValueReport,
}

fn closed_path(
    res: &Resolved,
    variant: &DetectorVariant,
    cfg: &CouplingConfig,
    g: f64,
    max_order: usize,
    warnings: &mut Vec<String>,
) -> Result<ClosedPath> {
    let a = cfg.observable();
    match variant {
        DetectorVariant::Mode(m) => {
            let sigma = res.sigma.expect("validated");
            let hg = hg_closed_forms(&res.rho_s, a, g, sigma, *m, &res.postselect, res.hbar)?;
            let mut moments = Moments {
                x: vec![hg.mean_x],
                p: vec![hg.mean_p],
            };
            if max_order >= 2 {
                let (x2, p2) = second_moment_closed_form(&res.rho_s, a, g, sigma, *m, &res.postselect, res.hbar)?;
                moments.x.push(x2);
                moments.p.push(p2);
            }
            Ok(ClosedPath {
                prob_f: hg.prob_f,
                moments,
                weak: WeakValueReport {
                    ReA_w: hg.a_w.value.re,
                    ImA_w: hg.a_w.value.im,
                    Rex_w: 0.0,
                    Rep_w: hg.mean_p,
                    ReDelta: Some(hg.delta.re),
                    ImDelta: Some(hg.delta.im),
                },
            })
        }
        _ => {
            let state = res.detector_state(variant, g, cfg.max_shift())?;
            let kernel = decoherence_kernel(&state)?;
            let gaps: Vec<f64> = cfg
                .eigenvalues()
                .iter()
                .flat_map(|aj| cfg.eigenvalues().iter().map(move |ak| g * (aj - ak)))
                .collect();
            warnings.extend(kernel_accuracy_warning(&state, &gaps));
            let k = kernel_averages(&res.rho_s, a, g, &kernel, &res.postselect)?;
            Ok(ClosedPath {
                prob_f: k.a_w.denominator,
                moments: Moments {
                    x: vec![k.mean_x],
                    p: vec![k.mean_p],
                },
                weak: WeakValueReport {
                    ReA_w: k.a_w.value.re,
                    ImA_w: k.a_w.value.im,
                    Rex_w: k.re_x_w,
                    Rep_w: k.re_p_w,
                    ReDelta: None,
                    ImDelta: None,
                },
            })
        }
    }
}

/// Evaluates one detector variant at one coupling through the requested paths.
pub fn evaluate(res: &Resolved, variant: &DetectorVariant, g: f64) -> Result<Evaluation> {
    let paths = res.outputs.paths;
    let max_order = res.outputs.max_order;
    let cfg = CouplingConfig::new(g, res.observable.clone())?;
    let mut moments = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut weak = WeakValueReport::default();
    let mut prob_f = None;

    if paths.grid() {
        let state = res.detector_state(variant, g, cfg.max_shift())?;
        let oracle = GridOracle::new(&res.rho_s, &state, &cfg, &res.postselect)?;
        let grid = conditioned_result(&oracle, max_order)?;
        prob_f = Some(grid.prob_f);
        moments.insert("grid".to_string(), Moments::from(&grid));
        let jwv = joint_weak_values(&res.rho_s, &state, &cfg, &res.postselect)?;
        let joint = conditioned_averages_from_weak_values(&jwv, g);
        let mut jm = Moments::from(&joint);
        jm.x.truncate(max_order);
        jm.p.truncate(max_order);
        moments.insert("joint".to_string(), jm);
        weak = WeakValueReport {
            ReA_w: jwv.a_w.re,
            ImA_w: jwv.a_w.im,
            Rex_w: jwv.x_w.re,
            Rep_w: jwv.p_w.re,
            ReDelta: None,
            ImDelta: None,
        };
    }
    if paths.closed() {
        let closed = closed_path(res, variant, &cfg, g, max_order, &mut warnings)?;
        prob_f.get_or_insert(closed.prob_f);
        if !paths.grid() {
            weak = closed.weak;
        } else {
            weak.ReDelta = closed.weak.ReDelta;
            weak.ImDelta = closed.weak.ImDelta;
        }
        moments.insert("closed".to_string(), closed.moments);
    }

    let mut deltas = BTreeMap::new();
    if let Some(grid) = moments.get("grid") {
        for path in ["joint", "closed"] {
            if let Some(other) = moments.get(path) {
                deltas.insert(format!("{path}_vs_grid"), deltas_against(grid, other));
            }
        }
    }
    let prob_f = prob_f.expect("at least one path runs");
    if prob_f < LOW_PROBABILITY {
        warnings.push(format!("post-selection probability {prob_f:.3e} is small; weak values are ill-conditioned"));
    }
    Ok(Evaluation {
        g,
        mode: variant.label(),
        prob_f,
        moments,
        weak_values: weak,
        deltas,
        warnings,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario_echo: serde_json::Value,
    pub tolerance: f64,
    pub evaluations: Vec<Evaluation>,
    pub max_delta: f64,
    pub passed: bool,
    pub warnings: Vec<String>,
}

impl Report {
    /// `Err(Tolerance)` if any path delta exceeds the tolerance.
    pub fn status(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::Tolerance(format!(
                "largest path delta {:.3e} exceeds {:.3e}",
                self.max_delta, self.tolerance
            )))
        }
    }
}

/// Evaluates every `(g, detector)` combination of a scenario.
pub fn build_report(scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut scenario = scenario.clone();
    opts.apply(&mut scenario);
    let res = scenario.resolve()?;
    let points = grid_points_of(&res);
    let evaluations = opts.pool()?.install(|| {
        points
            .par_iter()
            .map(|(g, v)| evaluate(&res, v, *g))
            .collect::<Result<Vec<_>>>()
    })?;
    let max_delta = evaluations.iter().map(Evaluation::max_delta).fold(0.0, f64::max);
    let tolerance = res.outputs.tolerance;
    let warnings = evaluations
        .iter()
        .flat_map(|e| e.warnings.iter().map(move |w| format!("g={} mode={}: {w}", e.g, e.mode)))
        .collect();
    Ok(Report {
        scenario_echo: serde_json::to_value(&scenario).expect("scenario serializes"),
        tolerance,
        evaluations,
        max_delta,
        passed: max_delta <= tolerance,
        warnings,
    })
}

fn grid_points_of(res: &Resolved) -> Vec<(f64, DetectorVariant)> {
    res.couplings
        .iter()
        .flat_map(|&g| res.variants.iter().map(move |v| (g, v.clone())))
        .collect()
}

fn default_output(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn resolve_output(scenario_path: &Path, configured: Option<&str>, suffix: &str) -> PathBuf {
    match configured {
        Some(p) => {
            let p = Path::new(p);
            if p.is_relative() {
                scenario_path.parent().unwrap_or(Path::new(".")).join(p)
            } else {
                p.to_path_buf()
            }
        }
        None => default_output(scenario_path, suffix),
    }
}

/// Runs a scenario file and writes its JSON report; the report is written
/// even when a tolerance guard fails.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<(PathBuf, Report)> {
    let scenario = Scenario::from_path(path)?;
    let report = build_report(&scenario, opts)?;
    let out = resolve_output(path, scenario.outputs.report.as_deref(), ".report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&out, text + "\n").map_err(Error::io_at(&out))?;
    Ok((out, report))
}

pub const SWEEP_HEADER: &str =
    "g,m,prob_f,x_mean_closed,x_mean_grid,p_mean_closed,p_mean_grid,ReA_w,ImA_w,ReDelta_m,ImDelta_m,error";

/// One CSV row of a coupling sweep.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepRow {
    pub g: f64,
    pub m: String,
    pub prob_f: Option<f64>,
    pub x_mean_closed: Option<f64>,
    pub x_mean_grid: Option<f64>,
    pub p_mean_closed: Option<f64>,
    pub p_mean_grid: Option<f64>,
    pub re_a_w: Option<f64>,
    pub im_a_w: Option<f64>,
    pub re_delta: Option<f64>,
    pub im_delta: Option<f64>,
    /// Empty unless a guard tripped.
    pub error: String,
}

fn fmt_float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.11e}")).unwrap_or_default()
}

impl SweepRow {
    fn to_csv(&self) -> String {
        [
            fmt_float(Some(self.g)),
            self.m.clone(),
            fmt_float(self.prob_f),
            fmt_float(self.x_mean_closed),
            fmt_float(self.x_mean_grid),
            fmt_float(self.p_mean_closed),
            fmt_float(self.p_mean_grid),
            fmt_float(self.re_a_w),
            fmt_float(self.im_a_w),
            fmt_float(self.re_delta),
            fmt_float(self.im_delta),
            self.error.clone(),
        ]
        .join(",")
    }
}

fn sweep_row(res: &Resolved, variant: &DetectorVariant, g: f64) -> SweepRow {
    let mut row = SweepRow {
        g,
        m: variant.label(),
        ..Default::default()
    };
    let mut markers: Vec<&'static str> = Vec::new();
    let paths = res.outputs.paths;
    if paths.closed() {
        let mut closed_only = res.clone();
        closed_only.outputs.max_order = 1;
        closed_only.outputs.paths = Paths::Closed;
        match evaluate(&closed_only, variant, g) {
            Ok(e) => {
                let (x, p) = e.first_moments("closed").expect("closed path ran");
                row.prob_f = Some(e.prob_f);
                row.x_mean_closed = Some(x);
                row.p_mean_closed = Some(p);
                row.re_a_w = Some(e.weak_values.ReA_w);
                row.im_a_w = Some(e.weak_values.ImA_w);
                row.re_delta = e.weak_values.ReDelta;
                row.im_delta = e.weak_values.ImDelta;
            }
            Err(e) => markers.push(error_tag(&e)),
        }
    }
    if paths.grid() {
        let outcome = CouplingConfig::new(g, res.observable.clone()).and_then(|cfg| {
            let state = res.detector_state(variant, g, cfg.max_shift())?;
            let oracle = GridOracle::new(&res.rho_s, &state, &cfg, &res.postselect)?;
            let result = conditioned_result(&oracle, 1)?;
            let a_w = if paths.closed() {
                None
            } else {
                Some(generalized_weak_value(&res.postselect, &res.observable, &oracle.reduced_state()?)?)
            };
            Ok((result, a_w))
        });
        match outcome {
            Ok((r, a_w)) => {
                row.prob_f.get_or_insert(r.prob_f);
                row.x_mean_grid = Some(r.mean_x);
                row.p_mean_grid = Some(r.mean_p);
                if let Some(w) = a_w {
                    row.re_a_w = Some(w.value.re);
                    row.im_a_w = Some(w.value.im);
                }
            }
            Err(e) => markers.push(error_tag(&e)),
        }
    }
    if let (Some(xc), Some(xg), Some(pc), Some(pg)) =
        (row.x_mean_closed, row.x_mean_grid, row.p_mean_closed, row.p_mean_grid)
    {
        let tol = res.outputs.tolerance;
        if relative_delta(xc, xg) > tol || relative_delta(pc, pg) > tol {
            markers.push("tolerance");
        }
    }
    markers.dedup();
    row.error = markers.join(";");
    row
}

/// Sweep rows in deterministic `g`-then-mode order; failed points carry an
/// error marker instead of aborting the sweep.
pub fn sweep_rows(scenario: &Scenario, opts: &RunOptions) -> Result<Vec<SweepRow>> {
    let mut scenario = scenario.clone();
    opts.apply(&mut scenario);
    let res = scenario.resolve()?;
    let points = grid_points_of(&res);
    let rows = opts
        .pool()?
        .install(|| points.par_iter().map(|(g, v)| sweep_row(&res, v, *g)).collect());
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 200);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Runs the sweep of a scenario file and writes the CSV.
pub fn sweep_coupling(path: &Path, opts: &RunOptions) -> Result<(PathBuf, Vec<SweepRow>)> {
    let scenario = Scenario::from_path(path)?;
    let rows = sweep_rows(&scenario, opts)?;
    let out = resolve_output(path, scenario.outputs.csv.as_deref(), ".sweep.csv");
    fs::write(&out, sweep_csv(&rows)).map_err(Error::io_at(&out))?;
    Ok((out, rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

/// Number of logarithmic sweep points in the weak-value figure data.
pub const FIG1_POINTS: usize = 61;

/// Points of the Bloch trajectories, `g/σ ∈ [0, 5]`.
pub const FIG3_POINTS: usize = 101;

/// Writes the data behind one figure into `out_dir`; returns the files written.
pub fn emit_figure_data(which: Figure, out_dir: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(Error::io_at(out_dir))?;
    match which {
        Figure::Fig1 => {
            let scenario = Scenario::fig1_preset(FIG1_POINTS);
            let rows = sweep_rows(&scenario, opts)?;
            let csv = out_dir.join("fig1_weak_values.csv");
            fs::write(&csv, sweep_csv(&rows)).map_err(Error::io_at(&csv))?;
            let sweep = scenario.coupling.sweep.as_ref().expect("preset sweeps");
            let sigma = scenario.detector.sigma.expect("preset sigma");
            let meta = serde_json::json!({
                "sigma": sigma,
                "modes": [0, 1, 2],
                "g_over_sigma": {
                    "min": sweep.min / sigma,
                    "max": sweep.max / sigma,
                    "count": sweep.count,
                    "spacing": "log",
                    "includes_zero": sweep.include_zero,
                },
                "weak_limit": 1.0 + std::f64::consts::SQRT_2,
                "strong_limit": std::f64::consts::FRAC_1_SQRT_2,
                "eigenvalue_bound": 1.0,
                "scenario": serde_json::to_value(&scenario).expect("scenario serializes"),
            });
            let meta_path = out_dir.join("fig1_metadata.json");
            fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("json") + "\n").map_err(Error::io_at(&meta_path))?;
            Ok(vec![csv, meta_path])
        }
        Figure::Fig2 => {
            let sigma = 2.0;
            let mut scenario = Scenario::fig2_preset(sigma);
            opts.apply(&mut scenario);
            let res = scenario.resolve()?;
            let g = res.couplings[0];
            let cfg = CouplingConfig::new(g, res.observable.clone())?;
            let mut columns = Vec::new();
            let mut initial = Vec::new();
            let mut xs = Vec::new();
            let mut dx = 0.0;
            for v in &res.variants {
                let state = res.detector_state(v, g, cfg.max_shift())?;
                let oracle = GridOracle::new(&res.rho_s, &state, &cfg, &res.postselect)?;
                columns.push(oracle.conditioned_position_density()?);
                let samples = state.samples().expect("mode states sample");
                initial.push(samples.iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>());
                xs = state.grid().positions();
                dx = state.grid().dx();
            }
            let mut out = String::new();
            writeln!(
                out,
                "# g={g:.11e} sigma={sigma:.11e} hbar={:.11e} dx={dx:.11e} (preset g = sigma)",
                res.hbar
            )
            .expect("string write");
            let labels: Vec<String> = res.variants.iter().map(|v| v.label()).collect();
            let header: Vec<String> = std::iter::once("x".to_string())
                .chain(labels.iter().map(|m| format!("initial_m{m}")))
                .chain(labels.iter().map(|m| format!("m{m}")))
                .collect();
            out.push_str(&header.join(","));
            out.push('\n');
            for (i, x) in xs.iter().enumerate() {
                let fields: Vec<String> = std::iter::once(*x)
                    .chain(initial.iter().map(|c| c[i]))
                    .chain(columns.iter().map(|c| c[i]))
                    .map(|v| fmt_float(Some(v)))
                    .collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            let path = out_dir.join("fig2_intensity.csv");
            fs::write(&path, out).map_err(Error::io_at(&path))?;
            Ok(vec![path])
        }
        Figure::Fig3 => {
            let scenario = Scenario::fig2_preset(0.0);
            let res = scenario.resolve()?;
            let sigma = res.sigma.expect("preset sigma");
            let identity = SystemOperator::identity(2);
            let mut out = String::from("g,g_over_sigma,m,r1,r2,r3,coherence\n");
            for m in 0..=2usize {
                for i in 0..FIG3_POINTS {
                    let ratio = 5.0 * i as f64 / (FIG3_POINTS - 1) as f64;
                    let g = ratio * sigma;
                    let hg = hg_closed_forms(&res.rho_s, &res.observable, g, sigma, m, &identity, res.hbar)?;
                    let r = hg.reduced.bloch().expect("qubit");
                    let coherence = laguerre(m, ratio * ratio) * (-0.5 * ratio * ratio).exp();
                    let fields: Vec<String> = [g, ratio]
                        .iter()
                        .map(|v| fmt_float(Some(*v)))
                        .chain(std::iter::once(m.to_string()))
                        .chain([r[0], r[1], r[2], coherence].iter().map(|v| fmt_float(Some(*v))))
                        .collect();
                    out.push_str(&fields.join(","));
                    out.push('\n');
                }
            }
            let path = out_dir.join("fig3_bloch.csv");
            fs::write(&path, out).map_err(Error::io_at(&path))?;
            Ok(vec![path])
        }
    }
}
