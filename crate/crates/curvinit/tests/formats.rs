use curvinit::config::{parse_scheme, Config};
use curvinit::idx::{load_mnist_idx, mnist_from_bytes, parse_images, parse_labels};
use curvinit::netfmt::{read_network, write_network};
use curvinit::table::{Cell, Table};
use curvinit::CliError;
use curvinit_core::activation::ActivationKind::{self, *};
use curvinit_core::init::{initialize, InitScheme};
use curvinit_core::{BaseScheme, LayerSpec, Network, Targets};
use proptest::prelude::*;

fn be(v: u32) -> [u8; 4] {
    v.to_be_bytes()
}

fn images_fixture(magic: u32, count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    for v in [magic, count, rows, cols] {
        b.extend_from_slice(&be(v));
    }
    b.extend_from_slice(pixels);
    b
}

fn labels_fixture(magic: u32, labels: &[u8]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(&be(magic));
    b.extend_from_slice(&be(labels.len() as u32));
    b.extend_from_slice(labels);
    b
}

/// Straight transcription of the IDX layout, kept separate from the crate's reader.
fn independent_read(images: &[u8], labels: &[u8]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let word = |b: &[u8], i: usize| u32::from_be_bytes(b[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (n, r, c) = (word(images, 1), word(images, 2), word(images, 3));
    let xs = (0..n).map(|i| images[16 + i * r * c..16 + (i + 1) * r * c].iter().map(|&p| p as f64 / 255.0).collect()).collect();
    let ys = labels[8..8 + word(labels, 1)].iter().map(|&l| l as usize).collect();
    (xs, ys)
}

#[test]
fn two_image_fixture() {
    let pixels = [0u8, 255, 128, 1, 7, 0, 255, 200];
    let imgs = images_fixture(2051, 2, 2, 2, &pixels);
    let labs = labels_fixture(2049, &[3, 9]);
    let ds = mnist_from_bytes(&imgs, &labs, None).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.input_dim(), 4);
    let (xs, ys) = independent_read(&imgs, &labs);
    for i in 0..2 {
        assert_eq!(ds.input(i), &xs[i][..]);
    }
    assert_eq!(ds.input(0)[0], 0.0);
    assert_eq!(ds.input(0)[1], 1.0);
    match ds.targets() {
        Targets::Classes { labels, num_classes } => {
            assert_eq!(labels, &ys);
            assert_eq!(*num_classes, 10);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(mnist_from_bytes(&imgs, &labs, Some(1)).unwrap().len(), 1);
    let parsed = parse_images(&imgs).unwrap();
    assert_eq!((parsed.count, parsed.rows, parsed.cols), (2, 2, 2));
}

#[test]
fn idx_format_guards() {
    let imgs = images_fixture(2051, 2, 2, 2, &[0; 8]);
    let labs = labels_fixture(2049, &[1, 2]);
    let wrong = labels_fixture(2051, &[1, 2]);
    let err = parse_labels(&wrong).unwrap_err();
    assert!(err.to_string().contains("magic 2051, expected 2049"), "{err}");
    assert!(parse_images(&labels_fixture(2049, &[0; 16])).is_err());

    for cut in [3, 10, 16, 23] {
        let e = parse_images(&imgs[..cut]).unwrap_err();
        assert!(e.to_string().contains("truncated"), "{e}");
        assert_eq!(e.exit_code(), 3);
    }
    assert!(parse_labels(&labs[..9]).unwrap_err().to_string().contains("truncated"));

    let e = mnist_from_bytes(&imgs, &labels_fixture(2049, &[1, 2, 3]), None).unwrap_err();
    assert!(e.to_string().contains("2 images but 3 labels"), "{e}");
    assert!(mnist_from_bytes(&imgs, &labels_fixture(2049, &[1, 10]), None).is_err());
    assert!(mnist_from_bytes(&images_fixture(2051, 0, 2, 2, &[]), &labels_fixture(2049, &[]), None).is_err());
}

#[test]
fn idx_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("img"), dir.path().join("lab"));
    std::fs::write(&ip, images_fixture(2051, 1, 1, 3, &[0, 51, 255])).unwrap();
    std::fs::write(&lp, labels_fixture(2049, &[4])).unwrap();
    let ds = load_mnist_idx(&ip, &lp, None).unwrap();
    assert_eq!(ds.input(0), &[0.0, 0.2, 1.0]);
    let e = load_mnist_idx(&dir.path().join("missing"), &lp, None).unwrap_err();
    assert!(matches!(e, CliError::Io { .. }));
    assert_eq!(e.exit_code(), 3);
}

fn act_strategy() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![
        Just(Linear),
        Just(Tanh),
        Just(Sigmoid),
        Just(Relu),
        (1e-4f64..1.0).prop_map(|slope| LeakyRelu { slope }),
        (0.05f64..=1.0, any::<u64>()).prop_map(|(keep_rate, mask_seed)| Dropout { keep_rate, mask_seed }),
    ]
}

proptest! {
    #[test]
    fn network_text_round_trips_bit_exactly(
        widths in proptest::collection::vec(1usize..6, 2..5),
        acts in proptest::collection::vec(act_strategy(), 4),
        seed in any::<u64>(),
        bias in -1e3f64..1e3,
    ) {
        let spec: Vec<LayerSpec> =
            widths.windows(2).zip(&acts).map(|(w, &a)| LayerSpec::new(w[0], w[1], a)).collect();
        let net = initialize(&spec, &InitScheme::plain(BaseScheme::Fixed(0.7)).unwrap(), seed).unwrap();
        let mut layers = net.layers().to_vec();
        layers[0].bias.iter_mut().enumerate().for_each(|(i, b)| *b = bias * (i as f64 + 1.0) * 1e-7);
        let net = Network::new(layers).unwrap();
        let text = write_network(&net);
        let back = read_network(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(write_network(&back), text);
    }
}

#[test]
fn network_text_rejects_malformed_input() {
    let good = "layers=1\ndims=2x1 act=tanh\n1 2\n0.5\n";
    assert!(read_network(good).is_ok());
    for bad in [
        "",
        "layers=0\n",
        "layers=1\ndims=2x1 act=tanh\n1\n0.5\n",
        "layers=1\ndims=2x1 act=tanh\n1 x\n0.5\n",
        "layers=1\ndims=2x1 act=swish\n1 2\n0.5\n",
        "layers=1\ndims=2x1 act=tanh\n1 2\n",
        "layers=1\ndims=2x1 act=tanh\n1 2\n0.5\nextra\n",
        "layers=2\ndims=2x1 act=tanh\n1 2\n0.5\ndims=2x1 act=tanh\n1 2\n0\n",
        "layers=1\ndims=2x1 act=dropout:1.5,3\n1 2\n0.5\n",
    ] {
        let e = read_network(bad).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{bad:?}: {e}");
    }
}

#[test]
fn config_parsing() {
    let text = "# comment\n  a = 1 # trailing\n\nb=x,y\n";
    let cfg = Config::parse(text, &["a", "b", "c"]).unwrap();
    assert_eq!(cfg.get::<u32>("a").unwrap(), Some(1));
    assert_eq!(cfg.str("b"), Some("x,y"));
    assert_eq!(cfg.get_or("c", 5u32).unwrap(), 5);

    let unknown = Config::parse("a=1\nzz=2\n", &["a"]).unwrap_err();
    assert!(matches!(unknown, CliError::ConfigLine { line: 2, .. }), "{unknown:?}");
    assert_eq!(unknown.exit_code(), 2);
    assert!(matches!(Config::parse("a=1\na=2\n", &["a"]), Err(CliError::ConfigLine { line: 2, .. })));
    assert!(Config::parse("a\n", &["a"]).is_err());
    assert!(Config::parse("a=\n", &["a"]).is_err());

    let cfg = Config::parse("a=abc\nb=-1\nc=maybe\n", &["a", "b", "c"]).unwrap();
    assert!(matches!(cfg.get::<f64>("a"), Err(CliError::ConfigLine { line: 1, .. })));
    assert!(cfg.positive("b", 1.0).is_err());
    assert!(cfg.flag("c").is_err());
}

#[test]
fn scheme_names() {
    assert_eq!(parse_scheme("glorot").unwrap(), BaseScheme::Glorot);
    assert_eq!(parse_scheme("forward").unwrap(), BaseScheme::ForwardStable);
    assert_eq!(parse_scheme("backward").unwrap(), BaseScheme::BackwardStable);
    assert_eq!(parse_scheme("fixed:0.25").unwrap(), BaseScheme::Fixed(0.25));
    assert!(parse_scheme("he").is_err());
    let cfg = Config::parse("scheme=fixed:0\n", &["scheme"]).unwrap();
    assert_eq!(cfg.scheme(BaseScheme::Glorot).unwrap_err().exit_code(), 2);
}

#[test]
fn csv_output_format() {
    let mut t = Table::new(&["a", "b", "c"]);
    t.push(vec![Cell::from(0.1), Cell::from(3usize), Cell::from("x")]);
    t.push(vec![Cell::from(1.0 / 3.0), Cell::from(0usize), Cell::from("y z")]);
    t.push(vec![Cell::from(1e-300), Cell::from(12usize), Cell::from("w")]);
    let s = t.to_csv_string();
    assert_eq!(s, "a,b,c\n0.1,3,x\n0.3333333333333333,0,y z\n1e-300,12,w\n");
    assert!(!s.contains('\r'));
    let parsed: f64 = s.lines().nth(2).unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(parsed, 1.0 / 3.0);
    assert_eq!(t.values("b"), vec![3.0, 0.0, 12.0]);
}
