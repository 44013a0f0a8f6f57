use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use curvinit::config::Config;
use curvinit::experiments::{self, Experiment};
use curvinit::{CliError, CliResult};

/// Curvature-calibrated initialization experiments.
///
/// Every experiment reads a `key=value` config file and writes one CSV table.
/// `calibrate` can also be driven entirely from flags.
#[derive(Debug, Parser)]
#[command(name = "curvinit", version)]
struct Cli {
    /// approx-error, error-scaling, init-sweep, correlation or calibrate
    experiment: String,

    #[arg(long)]
    config: Option<PathBuf>,

    /// CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Layer widths including the input, e.g. 784,128,64,10 (calibrate only)
    #[arg(long)]
    layers: Option<String>,

    /// Hidden activation (calibrate only)
    #[arg(long)]
    act: Option<String>,

    /// glorot, forward, backward or fixed:<std> (calibrate only)
    #[arg(long)]
    scheme: Option<String>,

    /// Target top eigenvalue (calibrate only)
    #[arg(long)]
    target: Option<f64>,

    /// Divide the std of ReLU layers by √2
    #[arg(long)]
    relu_correct: bool,

    /// Divide the std of dropout layers by √keep_rate
    #[arg(long)]
    dropout_correct: bool,

    /// 1-based layer whose Hessian is calibrated (calibrate only)
    #[arg(long)]
    layer: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,

    /// Write the calibrated network in text format (calibrate only)
    #[arg(long)]
    save_net: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k, val));
            }
        };
        put("layers", self.layers.clone());
        put("act", self.act.clone());
        put("scheme", self.scheme.clone());
        put("target", self.target.map(|t| t.to_string()));
        put("layer", self.layer.map(|l| l.to_string()));
        put("seed", self.seed.map(|s| s.to_string()));
        put("save_net", self.save_net.as_ref().map(|p| p.display().to_string()));
        put("relu_correct", self.relu_correct.then(|| "true".into()));
        put("dropout_correct", self.dropout_correct.then(|| "true".into()));
        v
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let exp = Experiment::from_name(&cli.experiment).ok_or_else(|| {
        let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
        CliError::Config(format!("unknown experiment `{}` (expected one of {})", cli.experiment, names.join(", ")))
    })?;
    let allowed = exp.allowed_keys();
    let (mut cfg, base) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
            (Config::parse(&text, &allowed)?, base)
        }
        None if exp == Experiment::Calibrate => (Config::default(), PathBuf::from(".")),
        None => return Err(CliError::Config(format!("`{}` needs --config <path>", exp.name()))),
    };
    let overrides = cli.overrides();
    if exp != Experiment::Calibrate && !overrides.is_empty() {
        return Err(CliError::Config("network flags are only accepted by `calibrate`".into()));
    }
    for (k, v) in overrides {
        cfg.set(k, v);
    }

    let report = experiments::run(exp, &cfg, &base)?;
    for n in &report.notes {
        eprintln!("{}: {n}", exp.name());
    }
    match &cli.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            report.table.write_to(io::BufWriter::new(file))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.table.write_to(&mut lock)?;
            lock.flush().map_err(|e| CliError::Data(format!("stdout: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
