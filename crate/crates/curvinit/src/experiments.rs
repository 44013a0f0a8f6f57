//! Experiment drivers. Each one is a pure function of its config and the
//! dataset files it names, and produces a single CSV table.

use std::path::{Path, PathBuf};

use curvinit_core::curvature::{default_fd_step, relative_error, LayerHessian, DEGENERATE_EXACT};
use curvinit_core::data::{synth_dataset, SynthKind};
use curvinit_core::init::{calibrate_to_unit_hessian, initialize, CalibrationOptions};
use curvinit_core::stats::{correlation_experiment, Component, CorrelationSetup, Pairing};
use curvinit_core::train::train_sgd;
use curvinit_core::{
    curvature, rng, ActivationKind, BaseScheme, CurvatureProbe, Dataset, LayerSpec, LossKind, Network, Target,
    TrainConfig,
};

use crate::config::{parse_list, Config};
use crate::error::{CliError, CliResult};
use crate::idx::load_mnist_idx;
use crate::netfmt::write_network;
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    ApproxError,
    ErrorScaling,
    InitSweep,
    Correlation,
    Calibrate,
}

const DATA_KEYS: &[&str] = &["data", "images", "labels", "samples", "input_scale", "synth_classes", "seed"];
const NET_KEYS: &[&str] = &["layers", "act", "out_act", "scheme", "relu_correct", "dropout_correct", "loss"];

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::ApproxError,
        Experiment::ErrorScaling,
        Experiment::InitSweep,
        Experiment::Correlation,
        Experiment::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ApproxError => "approx-error",
            Experiment::ErrorScaling => "error-scaling",
            Experiment::InitSweep => "init-sweep",
            Experiment::Correlation => "correlation",
            Experiment::Calibrate => "calibrate",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Keys accepted in this experiment's config file.
    pub fn allowed_keys(self) -> Vec<&'static str> {
        let own: &[&str] = match self {
            Experiment::ApproxError => &["probes", "batch"],
            Experiment::ErrorScaling => &["scales", "probes", "layer"],
            Experiment::InitSweep => &["stds", "epochs", "batch", "lr", "eig_samples", "power_iters"],
            Experiment::Correlation => &["x", "target", "pairs", "pairing", "seeds", "inits", "perms"],
            Experiment::Calibrate => {
                &["layer", "target", "tol", "max_bisect", "eig_samples", "power_iters", "verify_fd", "save_net"]
            }
        };
        let mut keys: Vec<&str> = match self {
            Experiment::ErrorScaling | Experiment::Correlation => vec!["seed"],
            _ => DATA_KEYS.to_vec(),
        };
        keys.extend_from_slice(NET_KEYS);
        keys.extend_from_slice(own);
        keys
    }
}

/// A finished experiment: the CSV table plus human-readable remarks.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub notes: Vec<String>,
}

/// Runs `exp`; relative paths in `cfg` are resolved against `base_dir`.
pub fn run(exp: Experiment, cfg: &Config, base_dir: &Path) -> CliResult<Report> {
    match exp {
        Experiment::ApproxError => approx_error(cfg, base_dir),
        Experiment::ErrorScaling => error_scaling(cfg),
        Experiment::InitSweep => init_sweep(cfg, base_dir),
        Experiment::Correlation => correlation(cfg),
        Experiment::Calibrate => calibrate(cfg, base_dir),
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

struct NetSetup {
    spec: Vec<LayerSpec>,
    scheme: curvinit_core::InitScheme,
}

fn net_setup(cfg: &Config, hidden: ActivationKind, output: ActivationKind, scheme: BaseScheme) -> CliResult<NetSetup> {
    let widths: Vec<usize> = cfg.list("layers")?.ok_or_else(|| CliError::Config("`layers` is required".into()))?;
    if widths.len() < 2 || widths.contains(&0) {
        return Err(CliError::Config("`layers` needs at least two positive widths".into()));
    }
    let hidden = cfg.activation("act", hidden)?;
    let output = cfg.activation("out_act", output)?;
    Ok(NetSetup { spec: LayerSpec::chain(&widths, hidden, output), scheme: cfg.scheme(scheme)? })
}

/// Loads the configured dataset with inputs multiplied by `input_scale`.
fn load_data(cfg: &Config, base: &Path, spec: &[LayerSpec]) -> CliResult<Dataset> {
    let scale = cfg.positive("input_scale", 0.1)?;
    let seed = cfg.get_or("seed", 0u64)?;
    let d_in = spec[0].d_in;
    let d_out = spec[spec.len() - 1].d_out;
    let source = cfg.str("data").unwrap_or("blobs");
    let data = match source {
        "mnist" => {
            let images = cfg.str("images").ok_or_else(|| CliError::Config("`data=mnist` needs `images`".into()))?;
            let labels = cfg.str("labels").ok_or_else(|| CliError::Config("`data=mnist` needs `labels`".into()))?;
            let n = cfg.count("samples", 5000, 1)?;
            load_mnist_idx(&resolve(base, images), &resolve(base, labels), Some(n))?.scaled(scale)
        }
        "blobs" | "linreg" => {
            let n = cfg.count("samples", 512, 1)?;
            let (kind, k) = if source == "blobs" {
                (SynthKind::Blobs, cfg.count("synth_classes", d_out, 2)?)
            } else {
                (SynthKind::LinReg, d_out)
            };
            synth_dataset(kind, n, d_in, k, scale, seed)?
        }
        other => return Err(CliError::Config(format!("unknown data source `{other}`"))),
    };
    if data.input_dim() != d_in {
        return Err(CliError::Config(format!(
            "network input width {d_in} does not match data dimension {}",
            data.input_dim()
        )));
    }
    Ok(data)
}

fn loss_for(cfg: &Config, data_classes: Option<usize>, d_out: usize) -> CliResult<LossKind> {
    let name = cfg.str("loss").unwrap_or(if data_classes.is_some() { "ce" } else { "se" });
    match (name, data_classes) {
        ("se", None) => Ok(LossKind::SquaredError),
        ("ce", Some(k)) if k == d_out => Ok(LossKind::SoftmaxCrossEntropy { num_classes: k }),
        ("ce", Some(k)) => Err(CliError::Config(format!("{k} classes but network output width is {d_out}"))),
        ("se", Some(_)) => Err(CliError::Config("`loss=se` needs regression targets".into())),
        ("ce", None) => Err(CliError::Config("`loss=ce` needs class labels".into())),
        (other, _) => Err(CliError::Config(format!("unknown loss `{other}` (expected se or ce)"))),
    }
}

fn numeric(e: curvinit_core::Error) -> CliError {
    CliError::Core(e)
}

fn layer_index(cfg: &Config, depth: usize) -> CliResult<usize> {
    let l = cfg.get_or("layer", 1usize)?;
    if l == 0 || l > depth {
        return Err(CliError::Config(format!("`layer` must be in 1..={depth}, got {l}")));
    }
    Ok(l - 1)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub const RTOL_THRESHOLDS: [f64; 3] = [0.5, 1.0, 1.5];

fn approx_error(cfg: &Config, base: &Path) -> CliResult<Report> {
    let setup = net_setup(cfg, ActivationKind::Tanh, ActivationKind::Linear, BaseScheme::Glorot)?;
    let data = load_data(cfg, base, &setup.spec)?;
    let kind = loss_for(cfg, data.num_classes(), setup.spec[setup.spec.len() - 1].d_out)?;
    let probes = cfg.count("probes", 100, 1)?;
    let batch = cfg.count("batch", 32, 1)?.min(data.len());
    let seed = cfg.get_or("seed", 0u64)?;
    let net = initialize(&setup.spec, &setup.scheme, seed)?;

    let mut table = Table::new(&["layer", "rtol_0.5", "rtol_1", "rtol_1.5"]);
    let mut notes = Vec::new();
    for k in 0..net.depth() {
        let mut hits = [0usize; 3];
        let mut valid = 0usize;
        for p in 0..probes {
            let start = (p * batch) % data.len();
            let idx: Vec<usize> = (0..batch).map(|j| (start + j) % data.len()).collect();
            let chunk = data.select(&idx)?;
            let probe = CurvatureProbe::random(&net, k, rng::derive_seed(seed, (k * probes + p) as u64 + 1))?;
            let eps = default_fd_step(&net, &probe);
            let lh = LayerHessian::new(&net, &chunk, kind, k, batch)?;
            let approx = lh.quadform(&probe.direction)?;
            let exact = lh.fd_quadform(&probe.direction, eps)?;
            if exact.abs() < DEGENERATE_EXACT {
                continue;
            }
            valid += 1;
            let rtol = relative_error(approx, exact);
            for (h, t) in hits.iter_mut().zip(RTOL_THRESHOLDS) {
                if rtol <= t {
                    *h += 1;
                }
            }
        }
        if valid == 0 {
            return Err(CliError::Numeric(format!("layer {}: every probe was degenerate", k + 1)));
        }
        if valid < probes {
            notes.push(format!("layer {}: {} degenerate probes excluded", k + 1, probes - valid));
        }
        let pct = |h: usize| 100.0 * h as f64 / valid as f64;
        table.push(vec![(k + 1).into(), pct(hits[0]).into(), pct(hits[1]).into(), pct(hits[2]).into()]);
    }
    Ok(Report { table, notes })
}

/// Mean approximation gap and mean leading term per input scale, averaged
/// over `probes` independent (network, input, target, direction) draws. The
/// draws are shared across scales; only the input norm changes.
pub struct ScalingSweep {
    pub scales: Vec<f64>,
    pub err: Vec<f64>,
    pub lead: Vec<f64>,
}

pub fn scaling_sweep(
    spec: &[LayerSpec],
    scheme: &curvinit_core::InitScheme,
    kind: LossKind,
    layer: usize,
    scales: &[f64],
    probes: usize,
    seed: u64,
) -> curvinit_core::Result<ScalingSweep> {
    let d_in = spec[0].d_in;
    let d_out = spec[spec.len() - 1].d_out;
    let mut err = vec![0.0; scales.len()];
    let mut lead = vec![0.0; scales.len()];
    for p in 0..probes {
        let s = rng::derive_seed(seed, p as u64);
        let net = initialize(spec, scheme, rng::derive_seed(s, 0))?;
        let mut r = rng::seeded(rng::derive_seed(s, 1));
        let dir = rng::unit_vec(&mut r, d_in);
        let t_vals = rng::normal_vec(&mut r, d_out);
        let t = match kind {
            LossKind::SquaredError => Target::Values(&t_vals),
            LossKind::SoftmaxCrossEntropy { num_classes } => Target::Class(p % num_classes),
        };
        let probe = CurvatureProbe::random(&net, layer, rng::derive_seed(s, 2))?;
        let eps = default_fd_step(&net, &probe);
        for (i, &c) in scales.iter().enumerate() {
            let x: Vec<f64> = dir.iter().map(|a| a * c).collect();
            let trace = net.forward(&x, 0)?;
            let approx = curvature::approx_quadform(&net, &trace, kind, t, &probe)?;
            let exact = curvature::fd_quadform(&net, &x, kind, t, &probe, eps, 0)?;
            err[i] += (exact - approx).abs();
            lead[i] += approx.abs();
        }
    }
    let n = probes as f64;
    err.iter_mut().for_each(|e| *e /= n);
    lead.iter_mut().for_each(|e| *e /= n);
    Ok(ScalingSweep { scales: scales.to_vec(), err, lead })
}

fn error_scaling(cfg: &Config) -> CliResult<Report> {
    let setup = net_setup(cfg, ActivationKind::Tanh, ActivationKind::Linear, BaseScheme::Glorot)?;
    let d_out = setup.spec[setup.spec.len() - 1].d_out;
    let kind = match cfg.str("loss").unwrap_or("se") {
        "se" => LossKind::SquaredError,
        "ce" => LossKind::SoftmaxCrossEntropy { num_classes: d_out },
        other => return Err(CliError::Config(format!("unknown loss `{other}`"))),
    };
    let scales: Vec<f64> = cfg.list("scales")?.unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    if scales.len() < 2 || scales.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(CliError::Config("`scales` needs at least two positive values".into()));
    }
    let probes = cfg.count("probes", 200, 1)?;
    let layer = layer_index(cfg, setup.spec.len())?;
    let seed = cfg.get_or("seed", 0u64)?;
    let sweep = scaling_sweep(&setup.spec, &setup.scheme, kind, layer, &scales, probes, seed).map_err(numeric)?;
    if sweep.err.iter().chain(&sweep.lead).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Numeric("approximation gap or leading term vanished; slopes undefined".into()));
    }
    let err_slope = loglog_slope(&sweep.scales, &sweep.err);
    let lead_slope = loglog_slope(&sweep.scales, &sweep.lead);
    let mut table = Table::new(&["c", "err", "lead", "err_slope", "lead_slope"]);
    for i in 0..scales.len() {
        table.push(vec![
            scales[i].into(),
            sweep.err[i].into(),
            sweep.lead[i].into(),
            err_slope.into(),
            lead_slope.into(),
        ]);
    }
    Ok(Report { table, notes: vec![format!("err slope {err_slope:.3}, lead slope {lead_slope:.3}")] })
}

/// Per-std row of the init sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub std: f64,
    /// Top approximate-Hessian eigenvalue of every layer except the output one.
    pub eigenvalues: Vec<f64>,
    pub final_loss: f64,
}

pub struct SweepSettings {
    pub stds: Vec<f64>,
    pub train: TrainConfig,
    pub eig_samples: usize,
    pub power_iters: usize,
}

/// Mean loss over the last epoch's batches (or over the whole data set when
/// no training happened).
fn final_epoch_loss(net: &Network, data: &Dataset, kind: LossKind, history: &[f64], per_epoch: usize) -> curvinit_core::Result<f64> {
    if history.is_empty() {
        let mut acc = 0.0;
        for i in 0..data.len() {
            acc += kind.value(net.forward(data.input(i), i as u64)?.output(), data.target(i))?;
        }
        return Ok(acc / data.len() as f64);
    }
    let tail = &history[history.len() - per_epoch..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

pub fn init_sweep_rows(
    spec: &[LayerSpec],
    relu_correction: bool,
    dropout_correction: bool,
    data: &Dataset,
    kind: LossKind,
    s: &SweepSettings,
) -> curvinit_core::Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(s.stds.len());
    for &std in &s.stds {
        let scheme = curvinit_core::InitScheme::new(BaseScheme::Fixed(std), relu_correction, dropout_correction)?;
        let net = initialize(spec, &scheme, s.train.seed)?;
        let mut eigenvalues = Vec::new();
        for k in 0..net.depth() - 1 {
            let lh = LayerHessian::new(&net, data, kind, k, s.eig_samples)?;
            // Fixed iteration count: eigenvalues span many orders of magnitude
            // across stds, so an absolute tolerance would be meaningless.
            let e = lh.top_eigenvalue(s.power_iters, 0.0, rng::derive_seed(s.train.seed, 0xE1 + k as u64))?;
            eigenvalues.push(e.value);
        }
        let (trained, history) = train_sgd(&net, data, kind, &s.train)?;
        let per_epoch = data.len().div_ceil(s.train.batch_size);
        let final_loss = final_epoch_loss(&trained, data, kind, &history, per_epoch)?;
        rows.push(SweepRow { std, eigenvalues, final_loss });
    }
    Ok(rows)
}

fn init_sweep(cfg: &Config, base: &Path) -> CliResult<Report> {
    let setup = net_setup(cfg, ActivationKind::Relu, ActivationKind::Linear, BaseScheme::Glorot)?;
    if cfg.contains("scheme") {
        return Err(CliError::Config("init-sweep sets the scheme from `stds`; remove `scheme`".into()));
    }
    let data = load_data(cfg, base, &setup.spec)?;
    let kind = loss_for(cfg, data.num_classes(), setup.spec[setup.spec.len() - 1].d_out)?;
    let stds: Vec<f64> = cfg.list("stds")?.unwrap_or_else(|| vec![1.0, 0.1, 0.005]);
    if stds.is_empty() || stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(CliError::Config("`stds` must be positive".into()));
    }
    let train = TrainConfig {
        learning_rate: cfg.get_or("lr", 0.01)?,
        epochs: cfg.get_or("epochs", 2usize)?,
        batch_size: cfg.count("batch", 32, 1)?,
        seed: cfg.get_or("seed", 0u64)?,
        input_scale: 1.0,
    };
    train.validate()?;
    let settings = SweepSettings {
        stds,
        train,
        eig_samples: cfg.count("eig_samples", 64, 1)?,
        power_iters: cfg.count("power_iters", 100, 1)?,
    };
    let rows = init_sweep_rows(
        &setup.spec,
        setup.scheme.relu_correction(),
        setup.scheme.dropout_correction(),
        &data,
        kind,
        &settings,
    )?;
    let eig_cols: Vec<String> = (1..setup.spec.len()).map(|k| format!("eig_{k}")).collect();
    let mut header: Vec<&str> = vec!["std"];
    header.extend(eig_cols.iter().map(String::as_str));
    header.push("final_loss");
    let mut table = Table::new(&header);
    for r in &rows {
        let mut row: Vec<Cell> = vec![r.std.into()];
        row.extend(r.eigenvalues.iter().map(|&e| Cell::from(e)));
        row.push(r.final_loss.into());
        table.push(row);
    }
    Ok(Report { table, notes: Vec::new() })
}

/// Parses `dL:i`, `z:i`, `J:layer:row:col`, `dzdw:layer:out:row:col` and
/// `w:layer:row:col`. Layers are 1-based, all other indices 0-based.
pub fn parse_component(s: &str) -> Result<Component, String> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let nums: Vec<usize> = parts[1..]
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| format!("bad index `{p}` in `{s}`")))
        .collect::<Result<_, _>>()?;
    let layer = |l: usize| if l == 0 { Err(format!("layers are 1-based in `{s}`")) } else { Ok(l - 1) };
    match (parts[0], nums.as_slice()) {
        ("dL", [i]) => Ok(Component::LossGrad { index: *i }),
        ("z", [i]) => Ok(Component::Output { index: *i }),
        ("J", [l, r, c]) => Ok(Component::LayerJacobian { layer: layer(*l)?, row: *r, col: *c }),
        ("dzdw", [l, o, r, c]) => Ok(Component::WeightJacobian { layer: layer(*l)?, output: *o, row: *r, col: *c }),
        ("w", [l, r, c]) => Ok(Component::Weight { layer: layer(*l)?, row: *r, col: *c }),
        _ => Err(format!("unknown component `{s}`")),
    }
}

/// `a/b;c/d;...`
pub fn parse_pairs(s: &str) -> Result<Vec<(Component, Component)>, String> {
    s.split(';')
        .map(|p| {
            let (a, b) = p.split_once('/').ok_or_else(|| format!("pair `{p}` needs the form a/b"))?;
            Ok((parse_component(a)?, parse_component(b)?))
        })
        .collect()
}

fn correlation(cfg: &Config) -> CliResult<Report> {
    let mut cfg = cfg.clone();
    if !cfg.contains("layers") {
        cfg.set("layers", "1,1,1");
    }
    let setup = net_setup(&cfg, ActivationKind::Linear, ActivationKind::Linear, BaseScheme::Fixed(1.0))?;
    let d_in = setup.spec[0].d_in;
    let d_out = setup.spec[setup.spec.len() - 1].d_out;
    let x: Vec<f64> = cfg.list("x")?.unwrap_or_else(|| vec![1.0; d_in]);
    if x.len() != d_in {
        return Err(CliError::Config(format!("`x` has {} entries, network input width is {d_in}", x.len())));
    }
    let kind = match cfg.str("loss").unwrap_or("se") {
        "se" => LossKind::SquaredError,
        "ce" => LossKind::SoftmaxCrossEntropy { num_classes: d_out },
        other => return Err(CliError::Config(format!("unknown loss `{other}`"))),
    };
    let t_vals: Vec<f64>;
    let target = match kind {
        LossKind::SquaredError => {
            t_vals = cfg.list("target")?.unwrap_or_else(|| vec![1.0; d_out]);
            if t_vals.len() != d_out {
                return Err(CliError::Config(format!("`target` needs {d_out} entries")));
            }
            Target::Values(&t_vals)
        }
        LossKind::SoftmaxCrossEntropy { .. } => Target::Class(cfg.get_or("target", 0usize)?),
    };
    let pairs = cfg
        .get_with("pairs", parse_pairs)?
        .unwrap_or_else(|| vec![(Component::LossGrad { index: 0 }, Component::Weight { layer: setup.spec.len() - 1, row: 0, col: 0 })]);
    let pairing = match cfg.str("pairing").unwrap_or("magnitude") {
        "raw" => Pairing::Raw,
        "magnitude" => Pairing::Magnitude,
        other => return Err(CliError::Config(format!("unknown pairing `{other}` (raw or magnitude)"))),
    };
    let setup_c = CorrelationSetup {
        pairs,
        pairing,
        n_seeds: cfg.count("seeds", 10, 1)?,
        n_inits: cfg.count("inits", 10_000, 100)?,
        n_perm: cfg.count("perms", 999, 100)?,
        seed: cfg.get_or("seed", 0u64)?,
    };
    let reports = correlation_experiment(&setup.spec, &setup.scheme, kind, &x, target, &setup_c)?;
    let mut table = Table::new(&["seed", "pair", "r", "p_value", "detected"]);
    let mut detected = vec![0usize; setup_c.pairs.len()];
    for pr in &reports {
        let hit = pr.report.p_value < 0.05;
        if hit {
            detected[pr.pair_index] += 1;
        }
        table.push(vec![
            pr.seed_index.into(),
            pr.pair_index.into(),
            pr.report.r.into(),
            pr.report.p_value.into(),
            usize::from(hit).into(),
        ]);
    }
    let notes = detected
        .iter()
        .enumerate()
        .map(|(p, d)| format!("pair {p}: dependence detected in {d}/{} seeds", setup_c.n_seeds))
        .collect();
    Ok(Report { table, notes })
}

fn calibrate(cfg: &Config, base: &Path) -> CliResult<Report> {
    let setup = net_setup(cfg, ActivationKind::Tanh, ActivationKind::Linear, BaseScheme::Glorot)?;
    let data = load_data(cfg, base, &setup.spec)?;
    let kind = loss_for(cfg, data.num_classes(), setup.spec[setup.spec.len() - 1].d_out)?;
    let opts = CalibrationOptions {
        layer: layer_index(cfg, setup.spec.len())?,
        target: cfg.positive("target", 1.0)?,
        tol: cfg.positive("tol", 0.1)?,
        max_bisect: cfg.get_or("max_bisect", 40usize)?,
        seed: cfg.get_or("seed", 0u64)?,
        sample_limit: cfg.count("eig_samples", 64, 1)?,
        power_iters: cfg.count("power_iters", 300, 1)?,
        ..CalibrationOptions::default()
    };
    let verify = !cfg.contains("verify_fd") || cfg.flag("verify_fd")?;
    let cal = calibrate_to_unit_hessian(&setup.spec, &setup.scheme, &data, kind, &opts)?;
    let fd = if verify {
        let lh = LayerHessian::new(&cal.network, &data, kind, opts.layer, opts.sample_limit)?;
        let e = lh.fd_top_eigenvalue(opts.power_iters, opts.power_tol * opts.target, rng::derive_seed(opts.seed, 0xFD))?;
        Cell::Num(e.value)
    } else {
        Cell::Text(String::new())
    };
    if let Some(p) = cfg.str("save_net") {
        let path = resolve(base, p);
        std::fs::write(&path, write_network(&cal.network)).map_err(|e| CliError::io(path, e))?;
    }
    let mut table = Table::new(&["layer", "target", "scale", "eigenvalue", "fd_eigenvalue"]);
    table.push(vec![(opts.layer + 1).into(), opts.target.into(), cal.scale.into(), cal.eigenvalue.into(), fd]);
    Ok(Report { table, notes: Vec::new() })
}

/// Reads a comma-separated list outside of a config file.
pub fn list_arg<T: std::str::FromStr>(flag: &str, v: &str) -> CliResult<Vec<T>> {
    parse_list(v).map_err(|m| CliError::Config(format!("--{flag}: {m}")))
}
