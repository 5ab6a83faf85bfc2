//! Command-line front end.
//!
//! Every command accepts `--config FILE`; its fields are overridden by
//! flags. A `model.json` written by a fit is itself a valid config, so
//! `funarch fit-fada --config out/model.json` repeats a run exactly.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::archetypes::{self, fit_archetypes, ElbowReport, ElbowRow, FitOptions};
use crate::archetypoids::fit_archetypoids;
use crate::basis::{evaluate_curve, uniform_grid, BasisSpec};
use crate::error::{Error, Result};
use crate::functional::{
    self, fada, faa, stack_multivariate, FunctionalDataset, MultivariateFunctionalDataset,
    DEFAULT_STANDARDIZE_GRID,
};
use crate::io::{self, InputFormat, LabelledMatrix, VariableCurves};
use crate::linalg::SolverOptions;
use crate::render::{self, Panel};

#[derive(Debug, Parser)]
#[command(name = "funarch", version, about = "Archetype and archetypoid analysis for vectors and curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Archetypes of the rows of a numeric table.
    FitAa(FitArgs),
    /// Archetypoids of the rows of a numeric table.
    FitAda(FitArgs),
    /// Archetypes of curves expanded in a basis.
    FitFaa(FitArgs),
    /// Archetypoids of curves expanded in a basis.
    FitFada(FitArgs),
    /// RSS over a range of k, written as elbow.csv and elbow.svg.
    Elbow(ElbowArgs),
    /// Overlay of curves with fitted archetypes and archetypoids.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Aa,
    Ada,
    Faa,
    Fada,
}

impl Analysis {
    fn functional(self) -> bool {
        matches!(self, Analysis::Faa | Analysis::Fada)
    }

    fn archetypoids(self) -> bool {
        matches!(self, Analysis::Ada | Analysis::Fada)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BasisName {
    Fourier,
    Bspline,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON config (or a previous model.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV; repeat for several wide-format variables.
    #[arg(long = "input", short = 'i')]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, value_enum)]
    pub basis: Option<BasisName>,
    #[arg(long)]
    pub basis_size: Option<usize>,
    /// B-spline order (4 = cubic).
    #[arg(long)]
    pub order: Option<usize>,
    /// Basis domain as `a,b`; defaults to the range of the data.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub domain: Option<Vec<f64>>,
    /// Fourier period; defaults to the domain length.
    #[arg(long)]
    pub period: Option<f64>,
    /// Interior B-spline knots, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub knots: Option<Vec<f64>>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Random seed (0 when neither flag nor config sets it).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_outer_iters: Option<usize>,
    /// Weight of the sum-to-one row in the constrained solver.
    #[arg(long)]
    pub huge_weight: Option<f64>,
    /// Standardize columns (classical) or curves pointwise (functional).
    #[arg(long)]
    pub standardize: bool,
    /// Points of the evaluation grid for archetype_curves.csv.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Output directory (or SVG file for `render`).
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, short = 'k')]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ElbowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub analysis: Option<Analysis>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fitted model.json; repeat to overlay archetypes and archetypoids.
    #[arg(long)]
    pub model: Vec<PathBuf>,
}

/// Run configuration as stored in config files and `model.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub analysis: Option<Analysis>,
    pub inputs: Vec<PathBuf>,
    pub format: Option<InputFormat>,
    pub basis: Option<BasisName>,
    pub basis_size: Option<usize>,
    pub order: Option<usize>,
    pub domain: Option<(f64, f64)>,
    pub period: Option<f64>,
    pub knots: Option<Vec<f64>>,
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub huge_weight: Option<f64>,
    pub zero_tolerance: Option<f64>,
    pub max_active_set_iters: Option<usize>,
    pub standardize: Option<bool>,
    pub grid_size: Option<usize>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a config file; a `model.json` contributes its `config` member.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))?;
        let mut v: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))?;
        if let Some(inner) = v.get_mut("config") {
            v = inner.take();
        }
        serde_json::from_value(v).map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))
    }

    fn overlay(mut self, a: &CommonArgs) -> Self {
        if !a.inputs.is_empty() {
            self.inputs = a.inputs.clone();
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if a.$f.is_some() { self.$f = a.$f.clone(); } )* };
        }
        take!(format, basis, basis_size, order, period, knots, restarts, seed, rel_tol, max_outer_iters, huge_weight, grid_size, output);
        if let Some(d) = &a.domain {
            self.domain = Some((d.first().copied().unwrap_or(f64::NAN), d.get(1).copied().unwrap_or(f64::NAN)));
            if d.len() != 2 {
                self.domain = Some((f64::NAN, f64::NAN));
            }
        }
        if a.standardize {
            self.standardize = Some(true);
        }
        self
    }

    fn fit_options(&self) -> FitOptions {
        let d = FitOptions::default();
        let sd = SolverOptions::default();
        FitOptions {
            restarts: self.restarts.unwrap_or(d.restarts),
            max_outer_iters: self.max_outer_iters.unwrap_or(d.max_outer_iters),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            seed: self.seed.unwrap_or(0),
            standardize: false,
            solver: SolverOptions {
                huge_weight: self.huge_weight.unwrap_or(sd.huge_weight),
                max_active_set_iters: self.max_active_set_iters.or(sd.max_active_set_iters),
                zero_tolerance: self.zero_tolerance.unwrap_or(sd.zero_tolerance),
            },
        }
    }

    /// Collects every problem instead of stopping at the first.
    fn check(&self, needs_k: bool, needs_range: bool, needs_output: bool) -> Result<()> {
        let mut problems = Vec::new();
        let analysis = self.analysis.unwrap_or(Analysis::Aa);
        if self.inputs.is_empty() {
            problems.push("no input file given".to_string());
        }
        if needs_k && self.k.is_none_or(|k| k == 0) {
            problems.push("k must be given and >= 1".into());
        }
        if needs_range {
            match (self.k_min, self.k_max) {
                (Some(a), Some(b)) if a >= 1 && a <= b => {}
                _ => problems.push("k_min and k_max must satisfy 1 <= k_min <= k_max".into()),
            }
        }
        if needs_output && self.output.is_none() {
            problems.push("no output location given".into());
        }
        if analysis.functional() {
            if self.basis.is_none() {
                problems.push("functional analyses need a basis (fourier or bspline)".into());
            }
            if self.basis_size.is_none_or(|m| m == 0) {
                problems.push("basis_size must be given and >= 1".into());
            }
        } else if self.inputs.len() > 1 {
            problems.push("classical analyses read a single table".into());
        }
        if let Some((a, b)) = self.domain {
            if !(a.is_finite() && b.is_finite() && a < b) {
                problems.push("domain must be two finite numbers a < b".into());
            }
        }
        if let Err(e) = self.fit_options().validate() {
            problems.push(e.to_string());
        }
        if self.grid_size == Some(0) {
            problems.push("grid_size must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Argument(problems.join("; ")))
        }
    }

    fn basis_spec(&self, domain: (f64, f64)) -> Result<BasisSpec> {
        let (a, b) = domain;
        let m = self.basis_size.unwrap_or(0);
        match self.basis {
            Some(BasisName::Fourier) => match self.period {
                Some(p) => BasisSpec::fourier_with_period(a, b, m, p),
                None => BasisSpec::fourier(a, b, m),
            },
            Some(BasisName::Bspline) => {
                let order = self.order.unwrap_or(4);
                match &self.knots {
                    Some(k) => {
                        let spec = BasisSpec::bspline_with_knots(a, b, order, k.clone())?;
                        if spec.size() != m {
                            return Err(Error::Argument(format!(
                                "{} interior knots with order {order} give {} functions, not {m}",
                                k.len(),
                                spec.size()
                            )));
                        }
                        Ok(spec)
                    }
                    None => BasisSpec::bspline(a, b, m, order),
                }
            }
            None => Err(Error::Argument("no basis given".into())),
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(msg) => {
            if !msg.is_empty() {
                println!("{msg}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<String> {
    match cmd {
        Command::FitAa(a) => fit(a, Analysis::Aa),
        Command::FitAda(a) => fit(a, Analysis::Ada),
        Command::FitFaa(a) => fit(a, Analysis::Faa),
        Command::FitFada(a) => fit(a, Analysis::Fada),
        Command::Elbow(a) => elbow(a),
        Command::Render(a) => render_cmd(a),
    }
}

fn base_config(common: &CommonArgs) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(cfg.overlay(common))
}

/// Data prepared for a classical or functional fit.
enum Prepared {
    Table {
        table: LabelledMatrix,
        standardization: Option<archetypes::Standardization>,
    },
    Curves {
        ids: Vec<String>,
        /// Components used by the fit (standardized when requested).
        data: MultivariateFunctionalDataset,
        /// Unstandardized fits of the same curves.
        raw: MultivariateFunctionalDataset,
        domain: (f64, f64),
    },
}

impl Prepared {
    fn ids(&self) -> &[String] {
        match self {
            Prepared::Table { table, .. } => &table.ids,
            Prepared::Curves { ids, .. } => ids,
        }
    }
}

fn load_curves(cfg: &RunConfig) -> Result<Vec<VariableCurves>> {
    let format = cfg.format.unwrap_or(InputFormat::Wide);
    let mut vars = Vec::new();
    for p in &cfg.inputs {
        vars.extend(io::ingest(p, format)?);
    }
    // align every variable to the id order of the first
    let order: Vec<String> = vars[0].ids();
    let first = vars[0].variable.clone();
    for v in vars.iter_mut().skip(1) {
        let mut ids = v.ids();
        ids.sort();
        let mut want = order.clone();
        want.sort();
        if ids != want {
            let missing: Vec<&String> = order.iter().filter(|id| ids.binary_search(id).is_err()).collect();
            let extra: Vec<&String> = ids.iter().filter(|id| want.binary_search(id).is_err()).collect();
            return Err(Error::Alignment(format!(
                "`{}` vs `{}`: missing {missing:?}, extra {extra:?}",
                first, v.variable
            )));
        }
        let pos: HashMap<&str, usize> = order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        v.curves.sort_by_key(|c| pos[c.id.as_str()]);
    }
    Ok(vars)
}

fn prepare(cfg: &mut RunConfig) -> Result<Prepared> {
    let analysis = cfg.analysis.unwrap_or(Analysis::Aa);
    if !analysis.functional() {
        let file = fs::File::open(&cfg.inputs[0])
            .map_err(|e| Error::Data(format!("{}: {e}", cfg.inputs[0].display())))?;
        let table = io::read_matrix(file)?;
        let standardization = cfg
            .standardize
            .unwrap_or(false)
            .then(|| archetypes::Standardization::from_data(table.values.view()));
        return Ok(Prepared::Table { table, standardization });
    }
    let vars = load_curves(cfg)?;
    let domain = match cfg.domain {
        Some(d) => d,
        None => {
            let all = vars.iter().flat_map(|v| &v.curves).flat_map(|c| c.arguments.iter().copied());
            let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), t| (l.min(t), h.max(t)));
            if lo >= hi {
                return Err(Error::Data("curves span a single argument value".into()));
            }
            (lo, hi)
        }
    };
    cfg.domain = Some(domain);
    let spec = cfg.basis_spec(domain)?;
    let mut raw = Vec::new();
    let mut data = Vec::new();
    for v in &vars {
        let fd = FunctionalDataset::from_curves(spec.clone(), &v.curves, v.variable.clone())?;
        data.push(if cfg.standardize.unwrap_or(false) {
            functional::standardize(&fd, DEFAULT_STANDARDIZE_GRID)?
        } else {
            fd.clone()
        });
        raw.push(fd);
    }
    let ids = vars[0].ids();
    Ok(Prepared::Curves {
        ids,
        data: MultivariateFunctionalDataset::new(data)?,
        raw: MultivariateFunctionalDataset::new(raw)?,
        domain,
    })
}

fn labels(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("{prefix}{j}")).collect()
}

fn fit(args: FitArgs, analysis: Analysis) -> Result<String> {
    let mut cfg = base_config(&args.common)?;
    cfg.analysis = Some(analysis);
    if args.k.is_some() {
        cfg.k = args.k;
    }
    cfg.seed = Some(cfg.seed.unwrap_or(0));
    cfg.check(true, false, true)?;
    let k = cfg.k.unwrap();
    let opts = cfg.fit_options();
    let prepared = prepare(&mut cfg)?;
    let ids = prepared.ids().to_vec();
    if k > ids.len() {
        return Err(Error::Argument(format!("k = {k} exceeds the {} observations", ids.len())));
    }
    let out_dir = cfg.output.clone().unwrap();
    let grid_size = cfg.grid_size.unwrap_or(101);

    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut record = serde_json::Map::new();
    record.insert("command".into(), json!(format!("fit-{}", serde_json::to_value(analysis)?.as_str().unwrap())));
    record.insert("ids".into(), json!(ids));

    // the analysis-scale data and metric
    let (x, raw_x) = match &prepared {
        Prepared::Table { table, standardization } => {
            let x = match standardization {
                Some(s) => s.apply(table.values.view()),
                None => table.values.clone(),
            };
            (x, table.values.clone())
        }
        Prepared::Curves { data, raw, .. } => {
            let (x, _) = stack_multivariate(data)?;
            let (rx, _) = stack_multivariate(raw)?;
            (x, rx)
        }
    };

    let (alpha, archetypes_x, rss) = if analysis.archetypoids() {
        let model = match &prepared {
            Prepared::Curves { data, .. } => fada(data, k, &opts)?,
            Prepared::Table { .. } => fit_archetypoids(x.view(), k, &opts, None)?,
        };
        let z = x.select(Axis(0), &model.indices);
        files.push(("archetypoids.csv", io::archetypoids_csv(&model.indices, &ids)?));
        record.insert("indices".into(), json!(model.indices));
        record.insert("archetypoid_ids".into(), json!(model.indices.iter().map(|&i| &ids[i]).collect::<Vec<_>>()));
        record.insert("init_used".into(), json!(model.init_used));
        record.insert("swap_steps".into(), json!(model.swap_steps));
        record.insert("rss_path".into(), json!(model.rss_path));
        record.insert("aa_rss".into(), json!(model.aa_rss));
        record.insert("candidates".into(), serde_json::to_value(&model.candidates)?);
        (model.alpha, z, model.rss)
    } else {
        let (model, z) = match &prepared {
            Prepared::Curves { data, .. } => {
                let m = faa(data, k, &opts)?;
                let z = m.archetype_coefficients.clone();
                (m.model, z)
            }
            Prepared::Table { .. } => {
                let m = fit_archetypes(x.view(), k, &opts, None)?;
                let z = m.archetypes.clone();
                (m, z)
            }
        };
        files.push(("beta.csv", io::labelled_matrix_csv(&labels("a", k), &ids, model.beta.view())?));
        record.insert("beta".into(), serde_json::to_value(&model.beta)?);
        record.insert("iterations".into(), json!(model.iterations));
        record.insert("converged".into(), json!(model.converged));
        record.insert("restart".into(), json!(model.restart));
        record.insert(
            "restart_rss".into(),
            json!(model.traces.iter().map(|t| t.sweeps.last().map(|s| s.rss)).collect::<Vec<_>>()),
        );
        (model.alpha, z, model.rss)
    };
    files.insert(0, ("alpha.csv", io::labelled_matrix_csv(&ids, &labels("a", k), alpha.view())?));
    record.insert("k".into(), json!(k));
    record.insert("rss".into(), json!(rss));
    record.insert("alpha".into(), serde_json::to_value(&alpha)?);

    // RSS of the same mixture on the unstandardized scale
    if cfg.standardize.unwrap_or(false) {
        let raw_rss = match &prepared {
            Prepared::Table { standardization: Some(s), .. } => {
                let z_raw = &archetypes_x * &s.scale + &s.mean;
                archetypes::rss(raw_x.view(), alpha.view(), z_raw.view(), None)?
            }
            Prepared::Curves { raw, .. } => {
                // refer the archetypes to raw curves through the same weights
                let weights = if analysis.archetypoids() {
                    let idx: Vec<usize> = record["indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
                    let mut b = Array2::zeros((k, ids.len()));
                    for (j, &i) in idx.iter().enumerate() {
                        b[[j, i]] = 1.0;
                    }
                    b
                } else {
                    serde_json::from_value(record["beta"].clone())?
                };
                let z_raw = weights.dot(&raw_x);
                let (_, w) = stack_multivariate(raw)?;
                archetypes::rss(raw_x.view(), alpha.view(), z_raw.view(), Some(&w))?
            }
            _ => rss,
        };
        record.insert("rss_unstandardized".into(), json!(raw_rss));
    }

    // archetype profiles or curves on the analysis scale
    let curves_csv = match &prepared {
        Prepared::Table { table, .. } => io::labelled_matrix_csv(&labels("a", k), &table.columns, archetypes_x.view())?,
        Prepared::Curves { data, domain, .. } => {
            let grid = uniform_grid(domain.0, domain.1, grid_size);
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["variable".to_string(), "t".to_string()];
            header.extend(labels("a", k));
            w.write_record(&header)?;
            let mut off = 0;
            let mut coef_json = Vec::new();
            for comp in &data.components {
                let m = comp.basis.size();
                let zc = archetypes_x.slice(s![.., off..off + m]);
                let evals: Vec<Vec<f64>> =
                    zc.rows().into_iter().map(|r| evaluate_curve(&comp.basis, r, &grid)).collect::<Result<_>>()?;
                for (g, t) in grid.iter().enumerate() {
                    let mut rec = vec![comp.variable.clone(), format!("{t}")];
                    rec.extend(evals.iter().map(|e| format!("{}", e[g])));
                    w.write_record(&rec)?;
                }
                coef_json.push(json!({
                    "variable": comp.variable,
                    "basis": comp.basis,
                    "coefficients": zc.to_owned(),
                }));
                off += m;
            }
            record.insert("archetype_functions".into(), json!(coef_json));
            w.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    files.push(("archetype_curves.csv", curves_csv));
    if let Prepared::Curves { data, .. } = &prepared {
        record.insert("variables".into(), json!(data.components.iter().map(|c| &c.variable).collect::<Vec<_>>()));
    }
    record.insert("options".into(), serde_json::to_value(&opts)?);
    record.insert("config".into(), serde_json::to_value(&cfg)?);
    files.push(("model.json", serde_json::to_vec_pretty(&Value::Object(record))?));

    write_all(&out_dir, &files)?;
    Ok(format!("k = {k}, rss = {rss:.6e}, outputs in {}", out_dir.display()))
}

/// Writes every file under a temporary name first, then renames them all.
fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, bytes) in files {
        let tmp = io::temp_name(&dir.join(name));
        if let Err(e) = fs::write(&tmp, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        written.push(tmp);
    }
    for (name, tmp) in files.iter().map(|f| f.0).zip(&written) {
        fs::rename(tmp, dir.join(name))?;
    }
    Ok(())
}

fn elbow(args: ElbowArgs) -> Result<String> {
    let mut cfg = base_config(&args.common)?;
    if args.analysis.is_some() {
        cfg.analysis = args.analysis;
    }
    cfg.analysis = Some(cfg.analysis.unwrap_or(Analysis::Aa));
    if args.k_min.is_some() {
        cfg.k_min = args.k_min;
    }
    if args.k_max.is_some() {
        cfg.k_max = args.k_max;
    }
    cfg.seed = Some(cfg.seed.unwrap_or(0));
    cfg.check(false, true, true)?;
    let analysis = cfg.analysis.unwrap();
    let opts = cfg.fit_options();
    let prepared = prepare(&mut cfg)?;
    let n = prepared.ids().len();
    let ks: Vec<usize> = (cfg.k_min.unwrap()..=cfg.k_max.unwrap()).collect();
    if ks.last().copied().unwrap_or(0) > n {
        return Err(Error::Argument(format!("k_max exceeds the {n} observations")));
    }
    let (x, metric) = match &prepared {
        Prepared::Table { table, standardization } => (
            match standardization {
                Some(s) => s.apply(table.values.view()),
                None => table.values.clone(),
            },
            None,
        ),
        Prepared::Curves { data, .. } => {
            let (x, w) = stack_multivariate(data)?;
            (x, Some(w))
        }
    };
    let report = if analysis.archetypoids() {
        ElbowReport {
            rows: ks
                .iter()
                .map(|&k| match fit_archetypoids(x.view(), k, &opts, metric.as_ref()) {
                    Ok(m) => ElbowRow { k, rss: Some(m.rss), converged: true, restarts_used: opts.restarts, error: None },
                    Err(e) => ElbowRow { k, rss: None, converged: false, restarts_used: 0, error: Some(e.to_string()) },
                })
                .collect(),
        }
    } else {
        archetypes::elbow_scan(x.view(), &ks, &opts, metric.as_ref())?
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "rss", "converged", "restarts_used", "error"])?;
    for r in &report.rows {
        w.write_record([
            r.k.to_string(),
            r.rss.map(|v| format!("{v}")).unwrap_or_default(),
            r.converged.to_string(),
            r.restarts_used.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let csv_bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let points: Vec<(usize, f64)> = report.rows.iter().filter_map(|r| r.rss.map(|v| (r.k, v))).collect();
    let svg = render::elbow_svg(&points);
    let out = cfg.output.clone().unwrap();
    write_all(&out, &[("elbow.csv", csv_bytes), ("elbow.svg", svg.into_bytes())])?;
    Ok(format!("{} rows, outputs in {}", report.rows.len(), out.display()))
}

/// Archetype functions stored in a model file, one entry per variable.
fn model_functions(model: &Value, path: &Path) -> Result<Vec<(String, BasisSpec, Array2<f64>)>> {
    let Some(list) = model.get("archetype_functions").and_then(Value::as_array) else {
        return Err(Error::Data(format!("{}: not a functional model", path.display())));
    };
    list.iter()
        .map(|f| {
            let var = f["variable"].as_str().unwrap_or_default().to_string();
            let basis: BasisSpec = serde_json::from_value(f["basis"].clone())?;
            let coef: Array2<f64> = serde_json::from_value(f["coefficients"].clone())?;
            Ok((var, basis, coef))
        })
        .collect()
}

fn render_cmd(args: RenderArgs) -> Result<String> {
    let mut cfg = base_config(&args.common)?;
    let mut models = Vec::new();
    for p in &args.model {
        let text = fs::read_to_string(p).map_err(|e| Error::Data(format!("model file {}: {e}", p.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("model file {}: {e}", p.display())))?;
        models.push((p.clone(), v));
    }
    // inputs, basis and scaling come from the first model unless given
    if let Some((_, first)) = models.first() {
        let mc: RunConfig = serde_json::from_value(first["config"].clone())?;
        cfg = RunConfig { output: cfg.output.clone().or(mc.output.clone()), ..mc }.overlay(&args.common);
        if args.common.output.is_none() {
            cfg.output = None;
        }
    }
    if cfg.inputs.is_empty() {
        return Err(Error::Argument("no input file given".into()));
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("curves.svg"));
    let vars = load_curves(&cfg)?;
    let grid_size = cfg.grid_size.unwrap_or(201);
    let mut panels: Vec<Panel> = Vec::new();
    let standardized = cfg.standardize.unwrap_or(false) && !models.is_empty();
    let shared_grid = cfg.domain.map(|(a, b)| uniform_grid(a, b, grid_size));
    for v in &vars {
        let mut panel = Panel { title: v.variable.clone(), ..Default::default() };
        if standardized {
            // fitted, standardized curves on a common grid
            let (a, b) = cfg.domain.ok_or_else(|| Error::Data("model lacks a domain".into()))?;
            let spec = cfg.basis_spec((a, b))?;
            let fd = functional::standardize(
                &FunctionalDataset::from_curves(spec, &v.curves, v.variable.clone())?,
                DEFAULT_STANDARDIZE_GRID,
            )?;
            let grid = shared_grid.clone().unwrap();
            panel.data = fd.evaluate(&grid)?.rows().into_iter().map(|r| r.to_vec()).collect();
            panel.grid = grid;
        } else if vars.len() == 1 && v.curves.len() == 1 && models.is_empty() {
            panel.grid = v.curves[0].arguments.clone();
            panel.data = vec![v.curves[0].values.clone()];
        } else {
            // raw observations, drawn on each curve's own arguments
            panel.grid = shared_grid.clone().unwrap_or_else(|| v.curves[0].arguments.clone());
            panel.data = Vec::new();
        }
        panels.push(panel);
    }
    let raw_mode = !standardized && !(vars.len() == 1 && vars[0].curves.len() == 1 && models.is_empty());

    for (path, model) in &models {
        let fns = model_functions(model, path)?;
        let is_ada = model.get("indices").is_some();
        for (var, basis, coef) in fns {
            let Some(panel) = panels.iter_mut().find(|p| p.title == var) else {
                return Err(Error::Data(format!("{}: variable `{var}` not in the input", path.display())));
            };
            let grid = match &shared_grid {
                Some(g) => g.clone(),
                None => uniform_grid(basis.domain.0, basis.domain.1, grid_size),
            };
            if panel.grid.len() != grid.len() || raw_mode {
                panel.grid = grid.clone();
            }
            let curves: Vec<Vec<f64>> =
                coef.rows().into_iter().map(|r| evaluate_curve(&basis, r, &grid)).collect::<Result<_>>()?;
            if is_ada {
                panel.archetypoids.extend(curves);
            } else {
                panel.archetypes.extend(curves);
            }
        }
    }

    let svg = if raw_mode {
        raw_overlay(&vars, &panels)
    } else {
        render::curves_svg(&panels)
    };
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        fs::create_dir_all(dir)?;
    }
    io::write_atomic(&out, svg.as_bytes())?;
    Ok(format!("wrote {}", out.display()))
}

/// Raw observations may sit on different arguments per curve; each data
/// curve gets its own panel grid by resampling onto the union of arguments.
fn raw_overlay(vars: &[VariableCurves], panels: &[Panel]) -> String {
    let mut out_panels = Vec::with_capacity(panels.len());
    for (v, p) in vars.iter().zip(panels) {
        let mut grid: Vec<f64> = v.curves.iter().flat_map(|c| c.arguments.iter().copied()).collect();
        grid.extend(p.grid.iter().copied());
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let data = v.curves.iter().map(|c| interpolate(&c.arguments, &c.values, &grid)).collect();
        let resample = |ys: &Vec<f64>| interpolate(&p.grid, ys, &grid);
        out_panels.push(Panel {
            title: p.title.clone(),
            data,
            archetypes: p.archetypes.iter().map(resample).collect(),
            archetypoids: p.archetypoids.iter().map(resample).collect(),
            grid,
        });
    }
    render::curves_svg(&out_panels)
}

/// Piecewise-linear interpolation, held constant outside the sampled range.
fn interpolate(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    at.iter()
        .map(|&t| {
            if xs.len() == 1 || t <= xs[0] {
                return ys[0];
            }
            if t >= xs[xs.len() - 1] {
                return ys[ys.len() - 1];
            }
            let j = xs.partition_point(|&x| x <= t);
            let (x0, x1) = (xs[j - 1], xs[j]);
            ys[j - 1] + (ys[j] - ys[j - 1]) * (t - x0) / (x1 - x0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(["funarch", "fit-aa", "--bogus"]), 1);
        assert_eq!(run(["funarch", "fit-aa"]), 1);
    }

    #[test]
    fn all_problems_reported_together() {
        let cfg = RunConfig { analysis: Some(Analysis::Faa), rel_tol: Some(-1.0), ..Default::default() };
        let msg = cfg.check(true, false, true).unwrap_err().to_string();
        for needle in ["input", "k must", "output", "basis", "rel_tol"] {
            assert!(msg.contains(needle), "{needle} missing from {msg}");
        }
    }

    #[test]
    fn flags_override_config() {
        let cfg = RunConfig { seed: Some(7), k: Some(3), restarts: Some(2), ..Default::default() };
        let args = CommonArgs { seed: Some(9), ..Default::default() };
        let merged = cfg.overlay(&args);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.restarts, Some(2));
    }

    #[test]
    fn interpolation_is_linear() {
        assert_eq!(interpolate(&[0.0, 2.0], &[0.0, 4.0], &[-1.0, 1.0, 3.0]), vec![0.0, 2.0, 4.0]);
    }
}
