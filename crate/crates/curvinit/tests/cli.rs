use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use curvinit::netfmt::read_network;

fn curvinit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvinit")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_CORRELATION: &str = "\
layers=1,1,1
act=linear
scheme=fixed:1
loss=se
x=1
target=1
pairs=dL:0/w:2:0:0
seeds=2
inits=200
perms=199
seed=4
";

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = curvinit(&["train-everything", "--config", "x.conf"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown experiment `train-everything`"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", &format!("{SMALL_CORRELATION}learning_rate=3\n"));
    let o = curvinit(&["correlation", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key `learning_rate`"), "{}", stderr(&o));
}

#[test]
fn missing_config_and_foreign_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(curvinit(&["approx-error"], dir.path()).status.code(), Some(2));
    assert_eq!(curvinit(&["correlation", "--config", "nope.conf"], dir.path()).status.code(), Some(2));
    let cfg = write(dir.path(), "c.conf", SMALL_CORRELATION);
    let o = curvinit(&["correlation", "--config", &cfg, "--layers", "1,1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "a.conf",
        "data=mnist\nimages=no-such-images\nlabels=no-such-labels\nlayers=784,10\nprobes=1\n",
    );
    let o = curvinit(&["approx-error", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no-such-images"));
}

#[test]
fn divergence_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.conf",
        "data=blobs\nsamples=64\nsynth_classes=3\ninput_scale=1\nlayers=4,8,3\nact=relu\nloss=ce\nstds=1\nepochs=3\nlr=1e300\n",
    );
    let o = curvinit(&["init-sweep", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn csv_goes_to_stdout_or_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.conf", SMALL_CORRELATION);
    let o = curvinit(&["correlation", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("seed,pair,r,p_value,detected"));
    assert_eq!(lines.count(), 2);
    assert!(!out.contains('\r'));

    let o = curvinit(&["correlation", "--config", &cfg, "--out", "r.csv"], dir.path());
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(dir.path().join("r.csv")).unwrap(), out);
}

#[test]
fn calibrate_from_flags_and_save_network() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "calibrate", "--layers", "8,16,16,3", "--act", "tanh", "--scheme", "glorot", "--target", "1.0", "--seed", "3",
        "--save-net", "net.txt",
    ];
    let o = curvinit(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("layer,target,scale,eigenvalue,fd_eigenvalue\n"), "{out}");
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((1.0 / 1.1..=1.1).contains(&row[3]), "{out}");
    let net = read_network(&fs::read_to_string(dir.path().join("net.txt")).unwrap()).unwrap();
    assert_eq!(net.depth(), 3);
    assert_eq!(net.input_dim(), 8);

    let o = curvinit(&["calibrate", "--layers", "8,16,3", "--act", "swish"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
