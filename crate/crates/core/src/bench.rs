//! Benchmark harness: every (image, quality factor, method) cell is decoded and
//! scored against the original; results are written as CSV.

use std::fmt;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::{soft_decode, DecodeError, SolverConfig, SolverReport};
use crate::graph::RegularizerKind;
use crate::jpeg::{hard_decode, quantize, JpegError};
use crate::laplacian::{fit_laplacian, mmse_decode, LaplacianParams};
use crate::metrics::{psnr, ssim};
use crate::raster::GrayImage;
use crate::scalar::Real;
use crate::sparse::Dictionary;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Jpeg(#[from] JpegError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Hard,
    Mmse,
    /// Soft decoding with the configured regularizer.
    Soft,
    /// Soft decoding with the regularizer swapped for `kind`.
    SoftWith(RegularizerKind),
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, BenchError> {
        match s {
            "hard" => Ok(Self::Hard),
            "mmse" => Ok(Self::Mmse),
            "soft" => Ok(Self::Soft),
            _ => s
                .strip_prefix("soft-")
                .and_then(RegularizerKind::parse)
                .map(Self::SoftWith)
                .ok_or_else(|| BenchError::UnknownMethod(s.to_string())),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hard => f.write_str("hard"),
            Self::Mmse => f.write_str("mmse"),
            Self::Soft => f.write_str("soft"),
            Self::SoftWith(kind) => write!(f, "soft-{}", kind.name()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub qfs: Vec<u8>,
    pub methods: Vec<Method>,
    pub solver: SolverConfig,
    /// Stop soft decoding after the first outer iteration.
    pub single_iter: bool,
    /// Record wall time; when off `runtime_ms` is 0 so runs compare byte for byte.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            qfs: vec![5, 10, 40],
            methods: vec![Method::Hard, Method::Mmse, Method::Soft],
            solver: SolverConfig::default(),
            single_iter: false,
            timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub image: String,
    pub qf: u8,
    pub method: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug)]
pub struct CellOutput {
    pub row: BenchRow,
    pub decoded: GrayImage,
    /// Present for soft-decoding methods.
    pub report: Option<SolverReport>,
}

/// Evaluates all cells in parallel; the output order is image, then quality
/// factor, then method, as given.
pub fn run_bench<T: Real>(
    images: &[(String, GrayImage)],
    dict: &Dictionary<T>,
    cfg: &BenchConfig,
) -> Result<Vec<CellOutput>, BenchError> {
    let mut solver = cfg.solver.clone();
    if cfg.single_iter {
        solver.max_outer_iters = 1;
    }
    let cells: Vec<(usize, u8, Method)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, _)| cfg.qfs.iter().flat_map(move |&qf| cfg.methods.iter().map(move |&m| (i, qf, m))))
        .collect();
    cells
        .par_iter()
        .map(|&(i, qf, method)| {
            let (name, img) = &images[i];
            let started = Instant::now();
            let qimg = quantize(img, qf)?;
            let (decoded, report) = match method {
                Method::Hard => (hard_decode(&qimg), None),
                Method::Mmse => {
                    let params = fit_laplacian::<f64>(&qimg).unwrap_or_else(|_| LaplacianParams::uniform());
                    (mmse_decode(&qimg, &params), None)
                }
                Method::Soft | Method::SoftWith(_) => {
                    let mut s = solver.clone();
                    if let Method::SoftWith(kind) = method {
                        s.regularizer = kind;
                    }
                    let (out, report) = soft_decode(&qimg, dict, &s)?;
                    (out, Some(report))
                }
            };
            let runtime_ms = if cfg.timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            let row = BenchRow {
                image: name.clone(),
                qf,
                method: method.to_string(),
                psnr_db: psnr(img, &decoded),
                ssim: ssim(img, &decoded),
                runtime_ms,
            };
            Ok(CellOutput { row, decoded, report })
        })
        .collect()
}

/// Writes the header `image,qf,method,psnr_db,ssim,runtime_ms` and one line per row.
pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<(), BenchError> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRow>, BenchError> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(BenchError::from)).collect()
}

/// Mean PSNR per method over all rows, in first-seen method order.
pub fn mean_psnr_by_method(rows: &[BenchRow]) -> Vec<(String, f64)> {
    let mut sums: Vec<(String, f64, usize)> = Vec::new();
    for row in rows {
        match sums.iter_mut().find(|(m, _, _)| *m == row.method) {
            Some(entry) => {
                entry.1 += row.psnr_db;
                entry.2 += 1;
            }
            None => sums.push((row.method.clone(), row.psnr_db, 1)),
        }
    }
    sums.into_iter().map(|(m, s, n)| (m, s / n as f64)).collect()
}
