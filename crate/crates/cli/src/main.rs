mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use softjpeg::bench::{mean_psnr_by_method, run_bench, write_csv, BenchConfig, BenchRow, Method};
use softjpeg::decoder::{soft_decode, SolverConfig};
use softjpeg::graph::{ncut_demo, pws_signal, two_term_reconstruction};
use softjpeg::graph::{RegularizerKind, Sigmas};
use softjpeg::laplacian::{fit_laplacian, mmse_decode, LaplacianParams};
use softjpeg::sparse::{ksvd_train, load_dict_file, mean_frequency, sample_training_patches, save_dict_file, KsvdConfig};
use softjpeg::{encode_jpeg, hard_decode, parse_jpeg, GrayImage};

#[derive(Parser)]
#[command(name = "softjpeg", version, about = "JPEG soft decoding with sparsity and graph-smoothness priors")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "SOFTJPEG_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a PGM to baseline grayscale JPEG.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=100))]
        qf: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a JPEG with bin-center or Laplacian MMSE reconstruction.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Hard)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a JPEG with the combined-prior solver.
    SoftDecode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the solver report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Accepted for interface uniformity; decoding uses no randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Train a patch dictionary with K-SVD on every PGM in a directory.
    TrainDict {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 400)]
        atoms: usize,
        #[arg(long, default_value_t = 8)]
        sparsity: usize,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        #[arg(long, default_value_t = 10)]
        patch: usize,
        /// Number of training patches sampled from the corpus.
        #[arg(long, default_value_t = 8000)]
        patches: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare decoders on every PGM in a directory and write a CSV.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5u8, 10, 40])]
        qfs: Vec<u8>,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated methods: hard, mmse, soft, soft-<regularizer>.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["hard".to_string(), "mmse".into(), "soft".into()])]
        methods: Vec<String>,
        /// Stop soft decoding after one outer iteration.
        #[arg(long)]
        single_iter: bool,
        /// Report runtime_ms as 0 so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
        /// Also write every decoded raster here as <image>_q<qf>_<method>.pgm.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Spectral analysis of a 1-D piecewise-smooth signal, as CSV.
    GraphDemo {
        #[arg(long, value_enum, default_value_t = Signal::Pws)]
        signal: Signal,
        /// Variation within each smooth piece.
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Minimum jump between the pieces.
        #[arg(long = "Delta", default_value_t = 4.0)]
        gap: f64,
        #[arg(long, default_value_t = 16)]
        length: usize,
        /// Length of the first piece (default: half).
        #[arg(long)]
        split: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        sigma1: f64,
        #[arg(long, default_value_t = 1e6)]
        sigma2: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Hard,
    Mmse,
}

#[derive(Clone, Copy, ValueEnum)]
enum Signal {
    Pws,
    Pwc,
}

#[derive(Args)]
struct SolverArgs {
    /// Flat `key = value` file; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_parser = parse_kind)]
    regularizer: Option<RegularizerKind>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
}

fn parse_kind(s: &str) -> Result<RegularizerKind, String> {
    RegularizerKind::parse(s).ok_or_else(|| format!("expected one of combinatorial, normalized, lerag; got `{s}`"))
}

/// Problems with the invocation itself, reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

impl SolverArgs {
    fn resolve(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            config::parse(&text, &mut cfg).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        }
        if let Some(v) = self.lambda1 {
            cfg.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            cfg.lambda2_base = v;
        }
        if let Some(v) = self.iters {
            cfg.max_outer_iters = v;
        }
        if let Some(v) = self.regularizer {
            cfg.regularizer = v;
        }
        if self.sigma1.is_some() {
            cfg.sigma1 = self.sigma1;
        }
        if self.sigma2.is_some() {
            cfg.sigma2 = self.sigma2;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    GrayImage::decode_pgm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    fs::write(path, img.encode_pgm()).with_context(|| format!("writing {}", path.display()))
}

fn read_jpeg(path: &Path) -> Result<softjpeg::QuantizedImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_jpeg(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Every `.pgm` file in `dir`, sorted by file name.
fn read_corpus(dir: &Path) -> Result<Vec<(String, GrayImage)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")));
    paths.sort();
    if paths.is_empty() {
        bail!("no .pgm files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, read_pgm(p)?))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting thread pool")?;
    }
    match cli.command {
        Command::Encode { input, qf, out } => {
            let img = read_pgm(&input)?;
            let bytes = encode_jpeg(&img, qf)?;
            fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Decode { input, mode, out } => {
            let qimg = read_jpeg(&input)?;
            let img = match mode {
                Mode::Hard => hard_decode(&qimg),
                Mode::Mmse => {
                    let params = fit_laplacian::<f64>(&qimg).unwrap_or_else(|e| {
                        eprintln!("warning: {e}; using bin centers");
                        LaplacianParams::uniform()
                    });
                    mmse_decode(&qimg, &params)
                }
            };
            write_pgm(&img, &out)?;
        }
        Command::SoftDecode { input, dict, out, report, seed: _, solver } => {
            let cfg = solver.resolve()?;
            let qimg = read_jpeg(&input)?;
            let dictionary = load_dict_file::<f64>(&dict).with_context(|| format!("loading dictionary {}", dict.display()))?;
            let (img, rep) = soft_decode(&qimg, &dictionary, &cfg)?;
            write_pgm(&img, &out)?;
            if let Some(path) = report {
                let json = serde_json::to_string_pretty(&rep)?;
                fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::TrainDict { corpus, atoms, sparsity, iters, patch, patches, seed, out } => {
            if !(9..=16).contains(&patch) {
                return Err(usage("--patch must be between 9 and 16"));
            }
            let images: Vec<GrayImage> = read_corpus(&corpus)?.into_iter().map(|(_, img)| img).collect();
            let samples = sample_training_patches::<f64>(&images, patch, patches, seed)?;
            let trained = ksvd_train(&samples, KsvdConfig { atoms, sparsity, iterations: iters, seed })?;
            let mut dictionary = trained.dictionary;
            dictionary.set_source(corpus.display().to_string());
            save_dict_file(&dictionary, &out).with_context(|| format!("writing {}", out.display()))?;
            let first = trained.objective.first().copied().unwrap_or(f64::NAN);
            let last = trained.objective.last().copied().unwrap_or(f64::NAN);
            println!(
                "{} atoms of {} pixels from {} patches; objective {first:.4e} -> {last:.4e}; mean frequency {:.4}",
                dictionary.m(),
                dictionary.n(),
                samples.len(),
                mean_frequency(&dictionary)?
            );
        }
        Command::Bench { corpus, qfs, dict, out, methods, single_iter, no_timing, out_dir, solver } => {
            if qfs.is_empty() || qfs.iter().any(|&q| q == 0 || q > 100) {
                return Err(usage("--qfs must list quality factors in 1..=100"));
            }
            let methods = methods.iter().map(|m| Method::parse(m)).collect::<Result<Vec<_>, _>>().map_err(|e| usage(e.to_string()))?;
            let cfg = BenchConfig { qfs, methods, solver: solver.resolve()?, single_iter, timing: !no_timing };
            let images = read_corpus(&corpus)?;
            let dictionary = load_dict_file::<f64>(&dict).with_context(|| format!("loading dictionary {}", dict.display()))?;
            let cells = run_bench(&images, &dictionary, &cfg)?;
            let rows: Vec<BenchRow> = cells.iter().map(|c| c.row.clone()).collect();
            let file = fs::File::create(&out).with_context(|| format!("writing {}", out.display()))?;
            write_csv(&rows, std::io::BufWriter::new(file))?;
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for c in &cells {
                    let name = format!("{}_q{}_{}.pgm", c.row.image, c.row.qf, c.row.method);
                    write_pgm(&c.decoded, &dir.join(name))?;
                }
            }
            for (method, mean) in mean_psnr_by_method(&rows) {
                println!("{method:>20}  mean PSNR {mean:.3} dB");
            }
        }
        Command::GraphDemo { signal, delta, gap, length, split, sigma1, sigma2, out } => {
            let split = split.unwrap_or(length / 2);
            if length < 3 || split == 0 || split >= length {
                return Err(usage("--length must be at least 3 and --split inside (0, length)"));
            }
            let delta = match signal {
                Signal::Pws => delta,
                Signal::Pwc => 0.0,
            };
            let x = pws_signal(length, split, delta, gap);
            let sigmas = Sigmas { intensity: sigma1, spatial: sigma2 };
            let report = ncut_demo(&x, sigmas)?;
            let cmp = two_term_reconstruction(&x, sigmas)?;
            let mut csv = String::from("series,index,value\n");
            let mut series = |name: &str, values: &[f64]| {
                for (i, v) in values.iter().enumerate() {
                    csv.push_str(&format!("{name},{i},{v:e}\n"));
                }
            };
            series("signal", &x);
            series("eigenvalue", &report.eigenvalues);
            series("indicator", &report.indicator);
            series("fiedler_number", &[report.fiedler_number]);
            series("pwc_error", &[report.pwc_error]);
            series("graph_error", &[cmp.graph_error]);
            series("dct_error", &[cmp.dct_error]);
            fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "fiedler {:.3e}; two-term error graph {:.4} vs dct {:.4}{}",
                report.fiedler_number,
                cmp.graph_error,
                cmp.dct_error,
                if report.degenerate { " (degenerate)" } else { "" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
