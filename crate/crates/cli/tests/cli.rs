use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use softjpeg::bench::read_csv;
use softjpeg::synth::{structured_image, Scene};
use softjpeg::{hard_decode, parse_jpeg, GrayImage};
use tempfile::TempDir;

fn softjpeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softjpeg")).args(args).env_remove("SOFTJPEG_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = softjpeg(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_corpus(dir: &Path, scenes: &[(Scene, u64)], side: usize) {
    fs::create_dir_all(dir).unwrap();
    for (i, &(scene, seed)) in scenes.iter().enumerate() {
        let img = structured_image(scene, side, side, seed);
        fs::write(dir.join(format!("img{i}.pgm")), img.encode_pgm()).unwrap();
    }
}

fn train(tmp: &TempDir) -> std::path::PathBuf {
    let corpus = tmp.path().join("train");
    write_corpus(&corpus, &[(Scene::Shapes, 1), (Scene::Rings, 2)], 48);
    let dict = tmp.path().join("d.sjdc");
    ok(&["train-dict", "--corpus", p(&corpus), "--atoms", "100", "--sparsity", "4", "--iters", "3", "--patches", "400", "--seed", "7", "--out", p(&dict)]);
    dict
}

#[test]
fn encode_then_hard_decode_round_trips() {
    let tmp = TempDir::new().unwrap();
    let img = structured_image(Scene::Shapes, 40, 24, 3);
    let (src, jpg, out) = (tmp.path().join("a.pgm"), tmp.path().join("a.jpg"), tmp.path().join("b.pgm"));
    fs::write(&src, img.encode_pgm()).unwrap();
    ok(&["encode", "--in", p(&src), "--qf", "20", "--out", p(&jpg)]);
    ok(&["decode", "--in", p(&jpg), "--mode", "hard", "--out", p(&out)]);
    let decoded = GrayImage::decode_pgm(&fs::read(&out).unwrap()).unwrap();
    let expected = hard_decode(&parse_jpeg(&fs::read(&jpg).unwrap()).unwrap());
    assert_eq!(decoded, expected);
    assert_eq!((decoded.width(), decoded.height()), (40, 24));
    ok(&["decode", "--in", p(&jpg), "--mode", "mmse", "--out", p(&out)]);
    assert!(GrayImage::decode_pgm(&fs::read(&out).unwrap()).is_ok());
}

#[test]
fn missing_dictionary_is_a_runtime_failure_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let src = tmp.path().join("a.pgm");
    let jpg = tmp.path().join("a.jpg");
    fs::write(&src, structured_image(Scene::Rings, 32, 32, 1).encode_pgm()).unwrap();
    ok(&["encode", "--in", p(&src), "--qf", "10", "--out", p(&jpg)]);
    let missing = tmp.path().join("nowhere.sjdc");
    let out = softjpeg(&["soft-decode", "--in", p(&jpg), "--dict", p(&missing), "--out", p(&tmp.path().join("o.pgm"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(p(&missing)));
}

#[test]
fn bad_invocations_exit_with_usage_code() {
    let tmp = TempDir::new().unwrap();
    let x = p(tmp.path());
    for args in [
        vec!["encode", "--in", x, "--qf", "0", "--out", x],
        vec!["encode", "--in", x, "--bogus", "--out", x],
        vec!["decode", "--in", x, "--mode", "fancy", "--out", x],
        vec!["frobnicate"],
        vec![],
        vec!["--threads", "0", "graph-demo", "--out", x],
        vec!["graph-demo", "--length", "2", "--out", x],
        vec!["bench", "--corpus", x, "--dict", x, "--out", x, "--methods", "hard,magic"],
        vec!["soft-decode", "--in", x, "--dict", x, "--out", x, "--lambda2", "-1"],
    ] {
        assert_eq!(softjpeg(&args).status.code(), Some(2), "{args:?}");
    }
    let cfg = tmp.path().join("solver.conf");
    fs::write(&cfg, "lambda2 = 0.3\nunknown_key = 1\n").unwrap();
    let out = softjpeg(&["soft-decode", "--in", x, "--dict", x, "--out", x, "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));

    let env = Command::new(env!("CARGO_BIN_EXE_softjpeg"))
        .args(["graph-demo", "--out", p(&tmp.path().join("g.csv"))])
        .env("SOFTJPEG_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
    assert!(softjpeg(&["--help"]).status.success());
}

#[test]
fn soft_decode_writes_image_and_report() {
    let tmp = TempDir::new().unwrap();
    let dict = train(&tmp);
    let src = tmp.path().join("a.pgm");
    let jpg = tmp.path().join("a.jpg");
    fs::write(&src, structured_image(Scene::Shapes, 32, 32, 11).encode_pgm()).unwrap();
    ok(&["encode", "--in", p(&src), "--qf", "5", "--out", p(&jpg)]);
    let cfg = tmp.path().join("solver.conf");
    fs::write(&cfg, "# two passes\niters = 2\nregularizer = combinatorial\n").unwrap();
    let (out, report) = (tmp.path().join("s.pgm"), tmp.path().join("r.json"));
    ok(&["soft-decode", "--in", p(&jpg), "--dict", p(&dict), "--out", p(&out), "--report", p(&report), "--config", p(&cfg), "--lambda2", "0.4"]);
    let img = GrayImage::decode_pgm(&fs::read(&out).unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (32, 32));
    let json = fs::read_to_string(&report).unwrap();
    for key in ["\"outer_iterations\": ", "\"mean_objective\"", "\"psnr_vs_hard\"", "\"qp_iterations\"", "\"wall_time_ms\""] {
        assert!(json.contains(key), "{key} missing from {json}");
    }
    assert!(json.contains("\"outer_iterations\": 1") || json.contains("\"outer_iterations\": 2"));
}

#[test]
fn bench_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let dict = train(&tmp);
    let corpus = tmp.path().join("eval");
    write_corpus(&corpus, &[(Scene::Shapes, 5), (Scene::Stripes, 6)], 32);
    let run = |threads: &str, tag: &str| {
        let csv = tmp.path().join(format!("{tag}.csv"));
        let rasters = tmp.path().join(tag);
        ok(&[
            "--threads", threads, "bench", "--corpus", p(&corpus), "--qfs", "5,20", "--dict", p(&dict), "--out", p(&csv),
            "--methods", "hard,mmse,soft,soft-normalized", "--single-iter", "--no-timing", "--out-dir", p(&rasters),
        ]);
        (csv, rasters)
    };
    let (csv_a, dir_a) = run("1", "a");
    let (csv_b, dir_b) = run("3", "b");
    assert_eq!(fs::read(&csv_a).unwrap(), fs::read(&csv_b).unwrap());
    let rows = read_csv(fs::File::open(&csv_a).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 4);
    let mut names: Vec<_> = fs::read_dir(&dir_a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), rows.len());
    for name in names {
        assert_eq!(fs::read(dir_a.join(&name)).unwrap(), fs::read(dir_b.join(&name)).unwrap());
    }
}

#[test]
fn graph_demo_reports_spectra_and_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("demo.csv");
    ok(&["graph-demo", "--signal", "pws", "--delta", "0.2", "--Delta", "4", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("series,index,value"));
    let value = |series: &str| -> f64 {
        text.lines().find(|l| l.starts_with(&format!("{series},"))).unwrap().rsplit(',').next().unwrap().parse().unwrap()
    };
    assert!(value("graph_error") < value("dct_error"));
    assert_eq!(text.lines().filter(|l| l.starts_with("eigenvalue,")).count(), 16);
}
