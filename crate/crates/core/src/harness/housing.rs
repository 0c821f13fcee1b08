//! Housing regression pool: ingestion, preprocessing and the reference fit.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::seq::index;

use crate::config::{ExperimentConfig, ModelFamily, Strategy};
use crate::data::{read_pool_csv, CandidateSet, ExperimentLog, LogMeta};
use crate::error::{Error, Result};
use crate::infomax::metrics::{bic, BicOptions, BicResult};
use crate::infomax::ParamBundle;
use crate::rng::{labels, RngStream};

pub const PREDICTORS: usize = 8;
pub const SUBSAMPLE_ROWS: usize = 5000;
/// The subset is a property of the dataset, not of a run.
pub const SUBSAMPLE_SEED: u64 = 20_000;

const TARGET_NAMES: [&str; 4] = ["MedHouseVal", "median_house_value", "target", "y"];

/// Raw rows: 8 predictors and the target.
#[derive(Clone, Debug, PartialEq)]
pub struct RawHousing {
    pub predictors: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub names: Vec<String>,
}

/// Read a CSV with a header, 8 numeric predictor columns and a target.
/// The target is the column named like a house value, or the last numeric
/// column. Non-numeric columns are ignored; rows with missing values are
/// dropped.
pub fn read_raw(path: &Path) -> Result<RawHousing> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let rows: Vec<csv::StringRecord> = rdr
        .records()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Malformed {
                line: i + 2,
                msg: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let numeric: Vec<usize> = (0..header.len())
        .filter(|&c| {
            rows.iter()
                .filter_map(|r| r.get(c).map(str::trim).filter(|s| !s.is_empty()))
                .all(|s| s.parse::<f64>().is_ok())
        })
        .collect();
    let target = numeric
        .iter()
        .copied()
        .find(|&c| {
            TARGET_NAMES
                .iter()
                .any(|n| n.eq_ignore_ascii_case(&header[c]))
        })
        .or(numeric.last().copied())
        .ok_or_else(|| Error::Malformed {
            line: 1,
            msg: "no numeric columns".into(),
        })?;
    let cols: Vec<usize> = numeric.iter().copied().filter(|&c| c != target).collect();
    if cols.len() != PREDICTORS {
        return Err(Error::Malformed {
            line: 1,
            msg: format!(
                "expected {PREDICTORS} numeric predictor columns, found {}",
                cols.len()
            ),
        });
    }
    let mut out = RawHousing {
        predictors: Vec::new(),
        target: Vec::new(),
        names: cols.iter().map(|&c| header[c].clone()).collect(),
    };
    for r in &rows {
        let get = |c: usize| r.get(c).and_then(|s| s.trim().parse::<f64>().ok());
        let x: Option<Vec<f64>> = cols.iter().map(|&c| get(c)).collect();
        if let (Some(x), Some(y)) = (x, get(target)) {
            out.predictors.push(x);
            out.target.push(y);
        }
    }
    if out.target.is_empty() {
        return Err(Error::invalid(format!(
            "{} has no complete rows",
            path.display()
        )));
    }
    Ok(out)
}

/// Subsample `rows` rows with a fixed seed (all rows if fewer), standardize
/// each predictor over the subset and append an intercept column.
pub fn preprocess(raw: &RawHousing, rows: usize, seed: u64) -> Result<CandidateSet> {
    let n = raw.target.len();
    let mut keep: Vec<usize> = if n > rows {
        let mut rng = RngStream::new(seed, labels::CANDIDATES);
        index::sample(&mut rng, n, rows).into_vec()
    } else {
        (0..n).collect()
    };
    keep.sort_unstable();
    let m = keep.len() as f64;
    let p = raw.predictors[0].len();
    let mut mean = vec![0.0; p];
    for &i in &keep {
        for (a, v) in mean.iter_mut().zip(&raw.predictors[i]) {
            *a += v;
        }
    }
    for a in mean.iter_mut() {
        *a /= m;
    }
    let mut sd = vec![0.0; p];
    for &i in &keep {
        for j in 0..p {
            sd[j] += (raw.predictors[i][j] - mean[j]).powi(2) / m;
        }
    }
    for (s, mu) in sd.iter_mut().zip(&mean) {
        *s = s.sqrt();
        // constant columns are centred but not scaled
        if *s <= 1e-12 * mu.abs().max(1.0) {
            *s = 1.0;
        }
    }
    let inputs: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            let mut x: Vec<f64> = (0..p)
                .map(|j| (raw.predictors[i][j] - mean[j]) / sd[j])
                .collect();
            x.push(1.0);
            x
        })
        .collect();
    let outputs = keep.iter().map(|&i| raw.target[i]).collect();
    CandidateSet::pool(inputs, outputs)
}

/// Load a pool for a configuration. Files with a `y,x0,...` header are
/// taken as already prepared; anything else is treated as raw housing data.
pub fn load_pool(path: &Path) -> Result<CandidateSet> {
    let first = std::fs::read_to_string(path)?
        .lines()
        .next()
        .map(|l| l.split(',').next().unwrap_or("").trim().to_string())
        .unwrap_or_default();
    if first == "y" {
        let (x, y) = read_pool_csv(path)?;
        CandidateSet::pool(x, y)
    } else {
        preprocess(&read_raw(path)?, SUBSAMPLE_ROWS, SUBSAMPLE_SEED)
    }
}

/// Every row of a pool as a log, in pool order.
pub fn pool_log(pool: &CandidateSet) -> Result<ExperimentLog> {
    let meta = LogMeta {
        family: ModelFamily::Mlr,
        seed: 0,
        strategy: Strategy::Random,
    };
    let ys: Vec<f64> = (0..pool.len())
        .map(|i| {
            pool.stored_output(i)
                .ok_or_else(|| Error::invalid("not a pool"))
        })
        .collect::<Result<_>>()?;
    ExperimentLog::from_pairs(meta, pool.inputs(), &ys)
}

/// BIC of a K-state MLR fit to the whole pool, for each K in `ks`.
pub fn bic_table(
    pool: &CandidateSet,
    ks: &[usize],
    opts: &BicOptions,
) -> Result<Vec<(usize, BicResult)>> {
    let log = pool_log(pool)?;
    ks.iter().map(|&k| Ok((k, bic(&log, k, opts)?))).collect()
}

/// Reference parameters: the maximum-likelihood K-state fit on the pool.
pub fn reference_fit(pool: &CandidateSet, k: usize, opts: &BicOptions) -> Result<BicResult> {
    bic(&pool_log(pool)?, k, opts)
}

/// Adopt the reference noise variance and return the reference bundle.
pub fn configure_from_reference(cfg: &mut ExperimentConfig, fit: &BicResult) -> ParamBundle {
    cfg.sigma_sq = fit.params.sigma_sq;
    ParamBundle::Mlr(fit.params.clone())
}
