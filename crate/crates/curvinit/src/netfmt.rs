//! Line-oriented network text format.
//!
//! ```text
//! layers=<n>
//! dims=<d_in>x<d_out> act=<name>[:<param>]
//! <d_out lines of d_in weights>
//! <bias line of d_out entries>
//! ...
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;

use curvinit_core::{ActivationKind, Layer, Matrix, Network};

use crate::error::{CliError, CliResult};

pub fn activation_name(kind: &ActivationKind) -> String {
    match *kind {
        ActivationKind::Linear => "linear".into(),
        ActivationKind::Tanh => "tanh".into(),
        ActivationKind::Sigmoid => "sigmoid".into(),
        ActivationKind::Relu => "relu".into(),
        ActivationKind::LeakyRelu { slope } => format!("leaky_relu:{}", fmt17(slope)),
        ActivationKind::Dropout { keep_rate, mask_seed } => format!("dropout:{},{mask_seed}", fmt17(keep_rate)),
    }
}

/// Parses `linear`, `tanh`, `sigmoid`, `relu`, `leaky_relu[:slope]` (default
/// slope 0.01) and `dropout:<keep_rate>[,<mask_seed>]`.
pub fn parse_activation(s: &str) -> Result<ActivationKind, String> {
    let (name, param) = match s.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (s, None),
    };
    let real = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("bad activation parameter `{p}` in `{s}`"));
    let kind = match (name.trim(), param) {
        ("linear", None) => ActivationKind::Linear,
        ("tanh", None) => ActivationKind::Tanh,
        ("sigmoid", None) => ActivationKind::Sigmoid,
        ("relu", None) => ActivationKind::Relu,
        ("leaky_relu", None) => ActivationKind::LeakyRelu { slope: 0.01 },
        ("leaky_relu", Some(p)) => ActivationKind::LeakyRelu { slope: real(p)? },
        ("dropout", Some(p)) => {
            let (keep, seed) = match p.split_once(',') {
                Some((k, sd)) => (k, sd.trim().parse::<u64>().map_err(|_| format!("bad mask seed in `{s}`"))?),
                None => (p, 0),
            };
            ActivationKind::Dropout { keep_rate: real(keep)?, mask_seed: seed }
        }
        _ => return Err(format!("unknown activation `{s}`")),
    };
    kind.validate().map_err(|e| e.to_string())?;
    Ok(kind)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&fmt17(*v));
    }
    out.push('\n');
}

pub fn write_network(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "layers={}", net.depth());
    for l in net.layers() {
        let _ = writeln!(out, "dims={}x{} act={}", l.d_in(), l.d_out(), activation_name(&l.activation));
        for i in 0..l.d_out() {
            push_row(&mut out, l.weights.row(i));
        }
        push_row(&mut out, &l.bias);
    }
    out
}

fn bad(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Data(format!("network line {line}: {}", msg.into()))
}

fn numbers(line_no: usize, line: &str, expected: usize) -> CliResult<Vec<f64>> {
    let vals = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(line_no, format!("bad number `{t}`"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if vals.len() != expected {
        return Err(bad(line_no, format!("expected {expected} numbers, found {}", vals.len())));
    }
    Ok(vals)
}

pub fn read_network(text: &str) -> CliResult<Network> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().ok_or_else(|| CliError::Data(format!("network text ends before {what}")));

    let (n0, header) = next("header")?;
    let n: usize = header
        .trim()
        .strip_prefix("layers=")
        .and_then(|v| v.parse().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| bad(n0, "expected `layers=<n>` with n >= 1"))?;

    let mut layers = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, dims_line) = next("layer header")?;
        let mut parts = dims_line.split_whitespace();
        let dims = parts
            .next()
            .and_then(|p| p.strip_prefix("dims="))
            .ok_or_else(|| bad(ln, "expected `dims=<d_in>x<d_out>`"))?;
        let (d_in, d_out) = dims
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
            .filter(|&(a, b)| a > 0 && b > 0)
            .ok_or_else(|| bad(ln, format!("bad dims `{dims}`")))?;
        let act = parts
            .next()
            .and_then(|p| p.strip_prefix("act="))
            .ok_or_else(|| bad(ln, "expected `act=<name>`"))?;
        if parts.next().is_some() {
            return Err(bad(ln, "trailing fields after act="));
        }
        let activation = parse_activation(act).map_err(|e| bad(ln, e))?;

        let mut w = Vec::with_capacity(d_in * d_out);
        for _ in 0..d_out {
            let (wl, row) = next("weight row")?;
            w.extend(numbers(wl, row, d_in)?);
        }
        let (bl, bias_line) = next("bias line")?;
        let bias = numbers(bl, bias_line, d_out)?;
        layers.push(Layer::new(Matrix::from_vec(d_out, d_in, w)?, bias, activation));
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(bad(ln, format!("unexpected trailing content `{extra}`")));
    }
    Network::new(layers).map_err(|e| CliError::Data(format!("network: {e}")))
}
