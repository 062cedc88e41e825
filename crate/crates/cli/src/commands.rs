use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use nonclassical::eigenmax::{max_eigen, n_scan, EigenMethod, LatticeProblem};
use nonclassical::expsim::{fit_distribution, mixture_j, run_pipeline, PipelineConfig, PipelineReport, TimeSeries};
use nonclassical::gaussian::{detection_map, mu_star_rectangle, mu_star_triangle, ThresholdPoint};
use nonclassical::grid::Axis;
use nonclassical::optimizer::{optimize, threshold_scan, Mode, Objective, OptimConfig, ScanReport};
use nonclassical::states::{displaced_parity, make_cat_vacuum_mixture, StateSpec};
use nonclassical::witness::{
    eval_j, PointSet4, PointSetSpec, CLASSICAL_LOWER, CLASSICAL_UPPER, GAUSSIAN_BOUND,
};

use crate::error::CliError;
use crate::output::{Format, Sink, Table};
use crate::{Command, Global};

/// Four parallelogram vertices `p00, p01, p10, p11` used by the measurement presets.
pub const WITNESS_POINTS: [[f64; 2]; 4] = [[-0.110, -0.110], [0.121, 0.100], [0.100, 0.121], [0.331, 0.331]];

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModeArg {
    Rectangle,
    Parallelogram,
    Triangle,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rectangle => Mode::Rectangle,
            ModeArg::Parallelogram => Mode::Parallelogram,
            ModeArg::Triangle => Mode::Triangle,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ObjectiveArg {
    Max,
    Min,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Max => Objective::Max,
            ObjectiveArg::Min => Objective::Min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScanName {
    GaussianMap,
    FockMixture,
    CatMixture,
    NoisyPhoton,
    #[value(name = "eigen-N", alias = "eigen-n")]
    #[serde(rename = "eigen-N")]
    EigenN,
    SqueezeSweep,
}

impl ScanName {
    fn file_stem(self) -> &'static str {
        match self {
            ScanName::GaussianMap => "gaussian_map",
            ScanName::FockMixture => "fock_mixture",
            ScanName::CatMixture => "cat_mixture",
            ScanName::NoisyPhoton => "noisy_photon",
            ScanName::EigenN => "eigen_n",
            ScanName::SqueezeSweep => "squeeze_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum ExpsimPreset {
    #[value(name = "fig3b_n0")]
    #[serde(rename = "fig3b_n0")]
    Fig3bN0,
    #[value(name = "fig3b_n2")]
    #[serde(rename = "fig3b_n2")]
    Fig3bN2,
    #[value(name = "fig3b_mix")]
    #[serde(rename = "fig3b_mix")]
    Fig3bMix,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        if e.is_io() {
            CliError::Io(format!("{}: {e}", path.display()))
        } else {
            CliError::Validation(format!("{}: {e}", path.display()))
        }
    })
}

fn config_or_default<T: DeserializeOwned + Default>(global: &Global) -> Result<T, CliError> {
    match &global.config {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

pub fn dispatch(global: &Global, command: Command, mut sink: Sink) -> Result<(), CliError> {
    let (name, config) = match command {
        Command::Wigner { state, points, theta } => ("wigner", wigner(global, &state, points.as_deref(), theta, &mut sink)?),
        Command::Test { state, points } => ("test", test(&state, &points, &mut sink)?),
        Command::Optimize { state, mode, objective, r_max, multistart } => {
            ("optimize", optimize_cmd(global, &state, mode, objective, r_max, multistart, &mut sink)?)
        }
        Command::Scan { name, from, to, steps, r_max, gnuplot } => {
            ("scan", scan(global, name, (from, to, steps), r_max, gnuplot, &mut sink)?)
        }
        Command::Eigenmax { n, d_squared, r_index } => ("eigenmax", eigenmax(global, n, d_squared, r_index, &mut sink)?),
        Command::Expsim { preset, weight, series } => {
            ("expsim", expsim(global, preset, weight, series.as_deref(), &mut sink)?)
        }
        Command::Thresholds { steps } => ("thresholds", thresholds(global, steps, &mut sink)?),
    };
    sink.finish(name, global.seed, config)
}

// wigner

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WignerConfig {
    theta: f64,
    x: Axis,
    y: Axis,
}

impl Default for WignerConfig {
    fn default() -> Self {
        let axis = Axis { min: -3.0, max: 3.0, steps: 61 };
        Self { theta: 0.0, x: axis, y: axis }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct WignerRow {
    x: f64,
    y: f64,
    parity: f64,
}

fn wigner(
    global: &Global,
    state_path: &Path,
    points: Option<&Path>,
    theta: Option<f64>,
    sink: &mut Sink,
) -> Result<serde_json::Value, CliError> {
    let state: StateSpec = read_json(state_path)?;
    let mut cfg: WignerConfig = config_or_default(global)?;
    if let Some(t) = theta {
        cfg.theta = t;
    }
    let coords: Vec<(f64, f64)> = match points {
        Some(p) => {
            let file = File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let mut reader = csv::Reader::from_reader(BufReader::new(file));
            reader
                .deserialize::<(f64, f64)>()
                .map(|r| r.map_err(|e| CliError::Validation(format!("{}: {e}", p.display()))))
                .collect::<Result<_, _>>()?
        }
        None => {
            cfg.x.validate()?;
            cfg.y.validate()?;
            let ys = cfg.y.values();
            cfg.x.values().into_iter().flat_map(|x| ys.iter().map(move |&y| (x, y))).collect()
        }
    };
    let rows: Vec<WignerRow> = coords
        .iter()
        .map(|&(x, y)| Ok(WignerRow { x, y, parity: displaced_parity(&state, x, y, cfg.theta)? }))
        .collect::<Result<_, nonclassical::Error>>()?;
    sink.rows("wigner", &rows)?;
    to_value(&serde_json::json!({ "state": state, "grid": if points.is_some() { None } else { Some(&cfg) }, "points": points.map(|_| &coords), "theta": cfg.theta }))
}

// test

fn test(state_path: &Path, points_path: &Path, sink: &mut Sink) -> Result<serde_json::Value, CliError> {
    let state: StateSpec = read_json(state_path)?;
    let points: PointSetSpec = read_json(points_path)?;
    let result = points.evaluate(&state)?;
    match sink.format() {
        Format::Json => sink.document("test", &result)?,
        Format::Csv => sink.rows("test", &result.parities)?,
    }
    log::info!("J = {:.6}, verdicts {:?}", result.value, result.verdicts);
    to_value(&serde_json::json!({ "state": state, "points": points }))
}

// optimize

fn optimize_cmd(
    global: &Global,
    state_path: &Path,
    mode: Option<ModeArg>,
    objective: Option<ObjectiveArg>,
    r_max: Option<f64>,
    multistart: Option<usize>,
    sink: &mut Sink,
) -> Result<serde_json::Value, CliError> {
    let state: StateSpec = read_json(state_path)?;
    let mut cfg: OptimConfig = config_or_default(global)?;
    if let Some(m) = mode {
        cfg.mode = m.into();
    }
    if let Some(o) = objective {
        cfg.objective = o.into();
    }
    if let Some(r) = r_max {
        cfg = cfg.with_r_max(r);
    }
    if let Some(m) = multistart {
        cfg.multistart = m;
    }
    cfg.seed = global.seed;
    let report = optimize(&state, &cfg)?;
    match sink.format() {
        Format::Json => sink.document("optimize", &report)?,
        Format::Csv => sink.rows("optimize", &report.starts)?,
    }
    to_value(&serde_json::json!({ "state": state, "optim": cfg }))
}

// scan

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScanConfig {
    /// Family parameter axis; each scan has its own default.
    param: Option<Axis>,
    r_max: f64,
    /// Bisection width for crossings.
    tolerance: f64,
    optim: OptimConfig,
    /// State for `squeeze-sweep`.
    state: Option<StateSpec>,
    mu: Axis,
    xi: Axis,
    n_max: u32,
    d_squared: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            param: None,
            r_max: 3.0,
            tolerance: 1e-4,
            optim: OptimConfig::default(),
            state: None,
            mu: Axis { min: 0.01, max: 1.0, steps: 100 },
            xi: Axis { min: 0.0, max: 2.0 - 1e-9, steps: 100 },
            n_max: 8,
            d_squared: PI / 4.0,
        }
    }
}

fn default_param(name: ScanName) -> Axis {
    match name {
        ScanName::FockMixture => Axis { min: 0.0, max: 1.0, steps: 21 },
        ScanName::CatMixture => Axis { min: 0.1, max: 2.0, steps: 20 },
        ScanName::NoisyPhoton => Axis { min: 0.0, max: 0.5, steps: 26 },
        ScanName::SqueezeSweep => Axis { min: 0.0, max: 1.5, steps: 16 },
        ScanName::GaussianMap | ScanName::EigenN => Axis::fixed(0.0),
    }
}

#[derive(Debug, Clone, Serialize)]
struct CrossingRow {
    column: &'static str,
    param: f64,
    lower: f64,
    upper: f64,
    detected_below: bool,
}

struct Column {
    name: &'static str,
    mode: Mode,
    objective: Objective,
    bound: f64,
}

const fn column(name: &'static str, mode: Mode, objective: Objective, bound: f64) -> Column {
    Column { name, mode, objective, bound }
}

fn scan(
    global: &Global,
    name: ScanName,
    (from, to, steps): (Option<f64>, Option<f64>, Option<usize>),
    r_max: Option<f64>,
    gnuplot: bool,
    sink: &mut Sink,
) -> Result<serde_json::Value, CliError> {
    let mut cfg: ScanConfig = config_or_default(global)?;
    let mut param = cfg.param.unwrap_or_else(|| default_param(name));
    param.min = from.unwrap_or(param.min);
    param.max = to.unwrap_or(param.max);
    param.steps = steps.unwrap_or(param.steps);
    cfg.param = Some(param);
    if let Some(r) = r_max {
        cfg.r_max = r;
    }
    cfg.optim.seed = global.seed;
    let stem = name.file_stem();

    let (table, crossings) = match name {
        ScanName::GaussianMap => {
            let map = detection_map(cfg.mu, cfg.xi)?;
            sink.rows(stem, &map.cells)?;
            (None, Vec::new())
        }
        ScanName::EigenN => {
            let rows = n_scan(cfg.n_max, cfg.d_squared.sqrt())?;
            sink.rows(stem, &rows)?;
            (None, Vec::new())
        }
        ScanName::FockMixture => {
            param.validate()?;
            let family = |f: f64| StateSpec::fock_mixture(&[(f, 0), (1.0 - f, 2)]);
            let columns = [
                column("j_rectangle", Mode::Rectangle, Objective::Max, CLASSICAL_UPPER),
                column("j_parallelogram", Mode::Parallelogram, Objective::Max, GAUSSIAN_BOUND),
            ];
            let (mut table, crossings) = threshold_table("f", &family, param, &columns, &cfg)?;
            let points = PointSet4::from_vertices(WITNESS_POINTS.map(|[a, b]| (a, b)))?;
            table.header.push("j_fixed_points");
            for row in &mut table.rows {
                row.push(eval_j(&family(row[0])?, &points)?.value);
            }
            (Some(table), crossings)
        }
        ScanName::CatMixture => {
            let columns = [
                column("j_rectangle", Mode::Rectangle, Objective::Max, CLASSICAL_UPPER),
                column("j_parallelogram", Mode::Parallelogram, Objective::Max, GAUSSIAN_BOUND),
            ];
            let (t, c) = threshold_table("gamma", &make_cat_vacuum_mixture, param, &columns, &cfg)?;
            (Some(t), c)
        }
        ScanName::NoisyPhoton => {
            let family = |f: f64| StateSpec::fock_mixture(&[(f, 0), (1.0 - f, 1)]);
            let columns = [
                column("min_rectangle", Mode::Rectangle, Objective::Min, CLASSICAL_LOWER),
                column("min_parallelogram", Mode::Parallelogram, Objective::Min, CLASSICAL_LOWER),
                column("max_rectangle", Mode::Rectangle, Objective::Max, CLASSICAL_UPPER),
                column("max_parallelogram", Mode::Parallelogram, Objective::Max, GAUSSIAN_BOUND),
            ];
            let (t, c) = threshold_table("f", &family, param, &columns, &cfg)?;
            (Some(t), c)
        }
        ScanName::SqueezeSweep => {
            param.validate()?;
            let state = cfg.state.clone().unwrap_or(StateSpec::fock(2));
            let mut table = Table::new(vec!["r", "j_max"]);
            for r in param.values() {
                let mut oc = OptimConfig { mode: Mode::Parallelogram, objective: Objective::Max, ..cfg.optim.clone() };
                oc.r = Axis::fixed(r);
                table.rows.push(vec![r, optimize(&state, &oc)?.value]);
            }
            cfg.state = Some(state);
            (Some(table), Vec::new())
        }
    };
    if let Some(table) = &table {
        sink.table(stem, table)?;
        if !crossings.is_empty() || sink.dir().is_some() {
            log::info!("{} crossings", crossings.len());
        }
        if sink.dir().is_some() && matches!(name, ScanName::FockMixture | ScanName::CatMixture | ScanName::NoisyPhoton) {
            sink.rows(&format!("{stem}_crossings"), &crossings)?;
        }
        if gnuplot {
            write_gnuplot(sink, stem, table)?;
        }
    }
    let mut value = to_value(&cfg)?;
    value["scan"] = to_value(&name)?;
    Ok(value)
}

fn threshold_table<F>(
    label: &'static str,
    family: &F,
    param: Axis,
    columns: &[Column],
    cfg: &ScanConfig,
) -> Result<(Table, Vec<CrossingRow>), CliError>
where
    F: Fn(f64) -> nonclassical::Result<StateSpec> + Sync,
{
    let mut header = vec![label];
    header.extend(columns.iter().map(|c| c.name));
    let mut table = Table::new(header);
    let mut crossings = Vec::new();
    let mut reports: Vec<ScanReport> = Vec::new();
    for c in columns {
        let mut oc = OptimConfig { mode: c.mode, objective: c.objective, ..cfg.optim.clone() };
        if c.mode == Mode::Parallelogram {
            oc = oc.with_r_max(cfg.r_max);
        }
        let report = threshold_scan(family, param, c.bound, cfg.tolerance, &oc)?;
        crossings.extend(report.crossings.iter().map(|x| CrossingRow {
            column: c.name,
            param: x.param,
            lower: x.lower,
            upper: x.upper,
            detected_below: x.detected_below,
        }));
        reports.push(report);
    }
    for (i, p) in reports[0].points.iter().enumerate() {
        let mut row = vec![p.param];
        row.extend(reports.iter().map(|r| r.points[i].value));
        table.rows.push(row);
    }
    Ok((table, crossings))
}

fn write_gnuplot(sink: &mut Sink, stem: &str, table: &Table) -> Result<(), CliError> {
    if sink.format() != Format::Csv {
        return Err(CliError::Validation("--gnuplot needs --format csv".into()));
    }
    let columns = table.header.len();
    let stem = stem.to_string();
    sink.text(&format!("{stem}.gp"), move |w| {
        writeln!(w, "set datafile separator ','")?;
        writeln!(w, "set key autotitle columnhead")?;
        writeln!(w, "set xlabel '{}'", table.header[0])?;
        writeln!(w, "plot for [i=2:{columns}] '{stem}.csv' using 1:i with linespoints")?;
        Ok(())
    })
}

// eigenmax

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EigenConfig {
    n: u32,
    d_squared: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { n: 1, d_squared: PI / 4.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
struct EigenSummary {
    #[serde(rename = "N")]
    n: u32,
    d_squared: f64,
    lambda_re: f64,
    lambda_im: f64,
    largest_modulus: Option<f64>,
    mu: f64,
    discrepancy: f64,
    method: EigenMethod,
}

fn eigenmax(
    global: &Global,
    n: Option<u32>,
    d_squared: Option<f64>,
    r_index: Option<u32>,
    sink: &mut Sink,
) -> Result<serde_json::Value, CliError> {
    let mut cfg: EigenConfig = config_or_default(global)?;
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(d2) = d_squared {
        cfg.d_squared = d2;
    }
    if let Some(r) = r_index {
        cfg.d_squared = f64::from(r) * PI / 2.0 + PI / 4.0;
    }
    if !(cfg.d_squared.is_finite() && cfg.d_squared > 0.0) {
        return Err(CliError::Validation(format!("d_squared must be positive, got {}", cfg.d_squared)));
    }
    let res = max_eigen(&LatticeProblem::new(cfg.n, cfg.d_squared.sqrt())?)?;
    let summary = EigenSummary {
        n: cfg.n,
        d_squared: cfg.d_squared,
        lambda_re: res.lambda.re,
        lambda_im: res.lambda.im,
        largest_modulus: res.largest_modulus.map(|z| z.norm()),
        mu: res.mu,
        discrepancy: res.discrepancy,
        method: res.method,
    };
    match sink.format() {
        Format::Json => sink.document("eigenmax", &summary)?,
        Format::Csv => sink.rows("eigenmax", &[summary])?,
    }
    sink.text("lattice_state.txt", |w| res.state.write_text(w))?;
    to_value(&cfg)
}

// expsim

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Component {
    weight: f64,
    state: StateSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExpsimConfig {
    components: Vec<Component>,
    /// Vertices `p00, p01, p10, p11` in `(q, p)`.
    points: [[f64; 2]; 4],
    pipeline: PipelineConfig,
}

impl Default for ExpsimConfig {
    fn default() -> Self {
        Self::preset(ExpsimPreset::Fig3bN0, 0.5)
    }
}

impl ExpsimConfig {
    fn preset(preset: ExpsimPreset, weight: f64) -> Self {
        let components = match preset {
            ExpsimPreset::Fig3bN0 => vec![Component { weight: 1.0, state: StateSpec::fock(0) }],
            ExpsimPreset::Fig3bN2 => vec![Component { weight: 1.0, state: StateSpec::fock(2) }],
            ExpsimPreset::Fig3bMix => vec![
                Component { weight, state: StateSpec::fock(0) },
                Component { weight: 1.0 - weight, state: StateSpec::fock(2) },
            ],
        };
        Self { components, points: WITNESS_POINTS, pipeline: PipelineConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ComponentSummary {
    weight: f64,
    truth: f64,
    mean: f64,
    std_error: f64,
    scatter_sigma: f64,
    fit_sigma: f64,
    parity_means: [(f64, f64); 4],
}

#[derive(Debug, Clone, Serialize)]
struct ExpsimSummary {
    components: Vec<ComponentSummary>,
    /// Weighted `J` and its standard error.
    value: f64,
    sigma: f64,
    truth: f64,
    bound: f64,
    exceeds_gaussian: bool,
}

#[derive(Debug, Clone, Serialize)]
struct RepeatRow {
    component: usize,
    repeat: usize,
    p00: f64,
    p01: f64,
    p10: f64,
    p11: f64,
    j: f64,
}

fn expsim(
    global: &Global,
    preset: Option<ExpsimPreset>,
    weight: Option<f64>,
    series: Option<&Path>,
    sink: &mut Sink,
) -> Result<serde_json::Value, CliError> {
    let mut cfg = match (preset, &global.config) {
        (Some(_), Some(_)) => return Err(CliError::Validation("give either a preset or --config, not both".into())),
        (Some(p), None) => ExpsimConfig::preset(p, weight.unwrap_or(0.5)),
        (None, Some(path)) => read_json(path)?,
        (None, None) if series.is_some() => ExpsimConfig::default(),
        (None, None) => return Err(CliError::Validation("give a preset (fig3b_n0, fig3b_n2, fig3b_mix) or --config".into())),
    };
    cfg.pipeline.seed = global.seed;

    if let Some(path) = series {
        let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let ts = TimeSeries::read_csv(BufReader::new(file))?;
        let fit = fit_distribution(&ts, &cfg.pipeline.model, &cfg.pipeline.fit)?;
        sink.document("fit", &fit)?;
        sink.text("fit.txt", |w| fit.write_text(w))?;
        return to_value(&serde_json::json!({ "series": ts, "model": cfg.pipeline.model, "fit": cfg.pipeline.fit }));
    }

    if cfg.components.is_empty() {
        return Err(CliError::Validation("expsim needs at least one component".into()));
    }
    let total: f64 = cfg.components.iter().map(|c| c.weight).sum();
    if cfg.components.iter().any(|c| !(c.weight >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(CliError::Validation(format!("component weights must be >= 0 and sum to 1, got {total}")));
    }
    let points = PointSet4::from_vertices(cfg.points.map(|[a, b]| (a, b)))?;
    let mut reports: Vec<PipelineReport> = Vec::new();
    for (i, c) in cfg.components.iter().enumerate() {
        let pc = PipelineConfig { seed: global.seed.wrapping_add(i as u64), ..cfg.pipeline.clone() };
        reports.push(run_pipeline(&c.state, &points, &pc)?);
    }
    // fold weighted estimates pairwise
    let mut acc = (reports[0].mean, reports[0].std_error);
    let mut truth = reports[0].truth * cfg.components[0].weight;
    let mut seen = cfg.components[0].weight;
    for (c, r) in cfg.components.iter().zip(&reports).skip(1) {
        let f = if seen + c.weight > 0.0 { seen / (seen + c.weight) } else { 0.5 };
        acc = mixture_j(acc, (r.mean, r.std_error), f)?;
        seen += c.weight;
        truth += c.weight * r.truth;
    }
    let summary = ExpsimSummary {
        components: cfg
            .components
            .iter()
            .zip(&reports)
            .map(|(c, r)| ComponentSummary {
                weight: c.weight,
                truth: r.truth,
                mean: r.mean,
                std_error: r.std_error,
                scatter_sigma: r.scatter_sigma,
                fit_sigma: r.fit_sigma,
                parity_means: r.parity_means,
            })
            .collect(),
        value: acc.0,
        sigma: acc.1,
        truth,
        bound: GAUSSIAN_BOUND,
        exceeds_gaussian: acc.0 > GAUSSIAN_BOUND,
    };
    match sink.format() {
        Format::Json => sink.document("expsim", &summary)?,
        Format::Csv => {
            let rows: Vec<RepeatRow> = reports
                .iter()
                .enumerate()
                .flat_map(|(ci, r)| {
                    r.repeats.iter().map(move |rep| RepeatRow {
                        component: ci,
                        repeat: rep.index,
                        p00: rep.parities[0].0,
                        p01: rep.parities[1].0,
                        p10: rep.parities[2].0,
                        p11: rep.parities[3].0,
                        j: rep.j,
                    })
                })
                .collect();
            sink.rows("expsim", &rows)?;
            if sink.dir().is_some() {
                sink.document("expsim_summary", &summary)?;
            }
        }
    }
    let mut value = to_value(&cfg)?;
    value["preset"] = to_value(&preset)?;
    Ok(value)
}

// thresholds

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ThresholdsConfig {
    xi: Axis,
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        Self { xi: Axis { min: 0.0, max: 2.0 - 1e-9, steps: 101 } }
    }
}

fn thresholds(global: &Global, steps: Option<usize>, sink: &mut Sink) -> Result<serde_json::Value, CliError> {
    let mut cfg: ThresholdsConfig = config_or_default(global)?;
    if let Some(s) = steps {
        cfg.xi.steps = s;
    }
    cfg.xi.validate()?;
    if cfg.xi.min < 0.0 || cfg.xi.max >= 2.0 {
        return Err(CliError::Validation(format!("xi axis must lie in [0, 2), got [{}, {}]", cfg.xi.min, cfg.xi.max)));
    }
    let rows: Vec<ThresholdPoint> = cfg
        .xi
        .values()
        .into_iter()
        .map(|xi| Ok(ThresholdPoint { xi, mu_star_rect: mu_star_rectangle(xi)?, mu_star_tri: mu_star_triangle(xi)? }))
        .collect::<Result<_, nonclassical::Error>>()?;
    sink.rows("thresholds", &rows)?;
    to_value(&cfg)
}
