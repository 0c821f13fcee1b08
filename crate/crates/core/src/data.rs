//! Trial records, the experiment log and candidate input sets.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};

use crate::config::{ModelFamily, Strategy};
use crate::error::{Error, Result};
use crate::rng::{labels, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    /// 1-based trial index.
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogMeta {
    pub family: ModelFamily,
    pub seed: u64,
    pub strategy: Strategy,
}

/// Append-only dataset of `(x, y)` pairs with contiguous 1-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentLog {
    dim: usize,
    meta: LogMeta,
    trials: Vec<TrialRecord>,
}

impl ExperimentLog {
    pub fn new(dim: usize, meta: LogMeta) -> Self {
        ExperimentLog {
            dim,
            meta,
            trials: Vec::new(),
        }
    }

    /// Build a log from raw pairs, numbering trials from 1.
    pub fn from_pairs(meta: LogMeta, xs: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("inputs and outputs differ in length"));
        }
        let dim = xs.first().map(|x| x.len()).unwrap_or(0);
        let mut log = ExperimentLog::new(dim, meta);
        for (x, y) in xs.iter().zip(ys) {
            log.push(x.clone(), *y)?;
        }
        Ok(log)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn meta(&self) -> &LogMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.trials[i].x
    }

    pub fn y(&self, i: usize) -> f64 {
        self.trials[i].y
    }

    pub fn append(&mut self, rec: TrialRecord) -> Result<()> {
        if rec.t != self.trials.len() + 1 {
            return Err(Error::NonContiguousTrial {
                len: self.trials.len(),
                got: rec.t,
            });
        }
        if rec.x.len() != self.dim {
            return Err(Error::invalid(format!(
                "input has length {}, log expects {}",
                rec.x.len(),
                self.dim
            )));
        }
        if self.meta.family.binary_output() && rec.y != 0.0 && rec.y != 1.0 {
            return Err(Error::invalid("binary outputs must be exactly 0 or 1"));
        }
        if !rec.y.is_finite() || rec.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("trial values must be finite"));
        }
        self.trials.push(rec);
        Ok(())
    }

    /// Append the next trial.
    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        let t = self.trials.len() + 1;
        self.append(TrialRecord { t, x, y })
    }

    /// First `n` trials as a new log.
    pub fn prefix(&self, n: usize) -> ExperimentLog {
        ExperimentLog {
            dim: self.dim,
            meta: self.meta.clone(),
            trials: self.trials[..n.min(self.trials.len())].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# family={} seed={} strategy={} dim={}",
            self.meta.family, self.meta.seed, self.meta.strategy, self.dim
        )?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "y".to_string()];
        header.extend((0..self.dim).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for r in &self.trials {
            let mut row = vec![r.t.to_string(), r.y.to_string()];
            row.extend(r.x.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines.next().ok_or(Error::Malformed {
            line: 1,
            msg: "empty log file".into(),
        })?;
        let meta_line = first.strip_prefix('#').ok_or(Error::Malformed {
            line: 1,
            msg: "missing metadata line".into(),
        })?;
        let mut family = None;
        let mut seed = None;
        let mut strategy = None;
        let mut dim = None;
        for tok in meta_line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or(Error::Malformed {
                line: 1,
                msg: format!("bad metadata token '{tok}'"),
            })?;
            let bad = |m: String| Error::Malformed { line: 1, msg: m };
            match k {
                "family" => {
                    family = Some(v.parse::<ModelFamily>().map_err(|e| bad(e.to_string()))?)
                }
                "seed" => seed = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                "strategy" => {
                    strategy = Some(v.parse::<Strategy>().map_err(|e| bad(e.to_string()))?)
                }
                "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                _ => return Err(bad(format!("unknown metadata key '{k}'"))),
            }
        }
        let meta = LogMeta {
            family: family.ok_or(Error::Malformed {
                line: 1,
                msg: "missing family".into(),
            })?,
            seed: seed.ok_or(Error::Malformed {
                line: 1,
                msg: "missing seed".into(),
            })?,
            strategy: strategy.ok_or(Error::Malformed {
                line: 1,
                msg: "missing strategy".into(),
            })?,
        };
        let dim = dim.ok_or(Error::Malformed {
            line: 1,
            msg: "missing dim".into(),
        })?;
        let body = text.split_once('\n').map(|(_, b)| b).unwrap_or("");
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let header = rdr.headers()?.clone();
        if header.len() != dim + 2 || &header[0] != "t" || &header[1] != "y" {
            return Err(Error::Malformed {
                line: 2,
                msg: "expected header t,y,x0,...".into(),
            });
        }
        let mut log = ExperimentLog::new(dim, meta);
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 3;
            let rec = rec?;
            let nums = parse_row(&rec, line)?;
            let t = nums[0];
            if t.fract() != 0.0 || t < 1.0 {
                return Err(Error::Malformed {
                    line,
                    msg: "trial index must be a positive integer".into(),
                });
            }
            log.append(TrialRecord {
                t: t as usize,
                y: nums[1],
                x: nums[2..].to_vec(),
            })?;
        }
        Ok(log)
    }
}

fn parse_row(rec: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    rec.iter()
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::Malformed {
                line,
                msg: format!("not a number: '{s}'"),
            })
        })
        .collect()
}

/// Description of how to build a candidate set.
#[derive(Clone, Debug, PartialEq)]
pub enum CandidateSpec {
    /// Unit vectors at `0, step, 2·step, …` degrees.
    CircleGrid { step_deg: f64 },
    /// `n` uniformly distributed points on the unit sphere in `dim` dimensions.
    Hypersphere { n: usize, dim: usize, seed: u64 },
    /// Scalars `lo, lo + step, …, hi`.
    LineGrid { lo: f64, hi: f64, step: f64 },
    /// CSV with header `y,x0,...`.
    PoolFile { path: PathBuf },
}

impl fmt::Display for CandidateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateSpec::CircleGrid { step_deg } => write!(f, "circle:{step_deg}"),
            CandidateSpec::Hypersphere { n, dim, seed } => write!(f, "sphere:{n}:{dim}:{seed}"),
            CandidateSpec::LineGrid { lo, hi, step } => write!(f, "line:{lo}:{hi}:{step}"),
            CandidateSpec::PoolFile { path } => write!(f, "pool:{}", path.display()),
        }
    }
}

impl std::str::FromStr for CandidateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("bad candidate spec '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(bad)?
                .trim()
                .parse::<f64>()
                .map_err(|_| bad())
        };
        let int = |i: usize| -> Result<u64> {
            parts
                .get(i)
                .ok_or_else(bad)?
                .trim()
                .parse::<u64>()
                .map_err(|_| bad())
        };
        match kind {
            "circle" if parts.len() == 1 => Ok(CandidateSpec::CircleGrid { step_deg: num(0)? }),
            "sphere" if parts.len() == 3 => Ok(CandidateSpec::Hypersphere {
                n: int(0)? as usize,
                dim: int(1)? as usize,
                seed: int(2)?,
            }),
            "line" if parts.len() == 3 => Ok(CandidateSpec::LineGrid {
                lo: num(0)?,
                hi: num(1)?,
                step: num(2)?,
            }),
            "pool" => Ok(CandidateSpec::PoolFile {
                path: PathBuf::from(rest),
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CandidateMode {
    Grid,
    Pool {
        outputs: Vec<f64>,
        consumed: Vec<bool>,
    },
}

/// Finite ordered set of candidate inputs. Pool sets carry a stored output
/// per element, each of which may be revealed at most once.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    spec: CandidateSpec,
    inputs: Vec<Vec<f64>>,
    mode: CandidateMode,
    bias: bool,
}

impl CandidateSet {
    pub fn build(spec: &CandidateSpec) -> Result<Self> {
        let (inputs, mode) = match spec {
            CandidateSpec::CircleGrid { step_deg } => {
                if !(*step_deg > 0.0) || *step_deg > 360.0 {
                    return Err(Error::invalid("circle step must be in (0, 360]"));
                }
                let n = (360.0 / step_deg - 1e-9).ceil() as usize;
                let inputs = (0..n)
                    .map(|i| {
                        let a = (i as f64 * step_deg).to_radians();
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                (inputs, CandidateMode::Grid)
            }
            CandidateSpec::Hypersphere { n, dim, seed } => {
                if *n == 0 || *dim == 0 {
                    return Err(Error::invalid("hypersphere needs n ≥ 1 and dim ≥ 1"));
                }
                let mut rng = RngStream::new(*seed, labels::CANDIDATES);
                let mut inputs = Vec::with_capacity(*n);
                while inputs.len() < *n {
                    let v: Vec<f64> = (0..*dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        inputs.push(v.iter().map(|a| a / norm).collect());
                    }
                }
                (inputs, CandidateMode::Grid)
            }
            CandidateSpec::LineGrid { lo, hi, step } => {
                if !(*step > 0.0) || !(hi >= lo) {
                    return Err(Error::invalid("line grid needs step > 0 and hi ≥ lo"));
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                let inputs = (0..n)
                    .map(|i| {
                        let v = lo + i as f64 * step;
                        // pin the endpoint against rounding in i·step
                        vec![if (v - hi).abs() < step * 1e-6 { *hi } else { v }]
                    })
                    .collect();
                (inputs, CandidateMode::Grid)
            }
            CandidateSpec::PoolFile { path } => {
                let (inputs, outputs) = read_pool_csv(path)?;
                let consumed = vec![false; inputs.len()];
                (inputs, CandidateMode::Pool { outputs, consumed })
            }
        };
        if inputs.is_empty() {
            return Err(Error::invalid("candidate set is empty"));
        }
        Ok(CandidateSet {
            spec: spec.clone(),
            inputs,
            mode,
            bias: false,
        })
    }

    /// A pool built from in-memory rows.
    pub fn pool(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::invalid("candidate set is empty"));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::invalid("pool inputs and outputs differ in length"));
        }
        let d = inputs[0].len();
        if inputs.iter().any(|x| x.len() != d) {
            return Err(Error::invalid("pool rows differ in dimension"));
        }
        let consumed = vec![false; inputs.len()];
        Ok(CandidateSet {
            spec: CandidateSpec::PoolFile {
                path: PathBuf::new(),
            },
            inputs,
            mode: CandidateMode::Pool { outputs, consumed },
            bias: false,
        })
    }

    /// Append a constant-1 coordinate to every input.
    pub fn with_bias_column(mut self) -> Self {
        if !self.bias {
            for x in &mut self.inputs {
                x.push(1.0);
            }
            self.bias = true;
        }
        self
    }

    pub fn spec(&self) -> &CandidateSpec {
        &self.spec
    }

    pub fn has_bias(&self) -> bool {
        self.bias
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i]
    }

    pub fn mode(&self) -> &CandidateMode {
        &self.mode
    }

    pub fn is_pool(&self) -> bool {
        matches!(self.mode, CandidateMode::Pool { .. })
    }

    pub fn is_available(&self, i: usize) -> bool {
        match &self.mode {
            CandidateMode::Grid => true,
            CandidateMode::Pool { consumed, .. } => !consumed[i],
        }
    }

    /// Indices that may still be selected, in order.
    pub fn available(&self) -> Vec<usize> {
        (0..self.len()).filter(|i| self.is_available(*i)).collect()
    }

    pub fn consumed_count(&self) -> usize {
        match &self.mode {
            CandidateMode::Grid => 0,
            CandidateMode::Pool { consumed, .. } => consumed.iter().filter(|c| **c).count(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.len() - self.consumed_count()
    }

    /// Stored output of a pool element without consuming it.
    pub fn stored_output(&self, i: usize) -> Option<f64> {
        match &self.mode {
            CandidateMode::Grid => None,
            CandidateMode::Pool { outputs, .. } => Some(outputs[i]),
        }
    }

    /// Reveal and consume pool element `i`.
    pub fn consume(&mut self, i: usize) -> Result<f64> {
        match &mut self.mode {
            CandidateMode::Grid => Err(Error::invalid("grid candidates have no stored output")),
            CandidateMode::Pool { outputs, consumed } => {
                if i >= consumed.len() {
                    return Err(Error::invalid("pool index out of range"));
                }
                if consumed[i] {
                    return Err(Error::invalid(format!("pool row {i} already revealed")));
                }
                consumed[i] = true;
                Ok(outputs[i])
            }
        }
    }

    /// Write the set, including consumption state, as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# spec={} bias={}", self.spec, self.bias)?;
        let d = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = Vec::new();
        if self.is_pool() {
            header.push("consumed".to_string());
            header.push("y".to_string());
        }
        header.extend((0..d).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (i, x) in self.inputs.iter().enumerate() {
            let mut row = Vec::new();
            if let CandidateMode::Pool { outputs, consumed } = &self.mode {
                row.push(u8::from(consumed[i]).to_string());
                row.push(outputs[i].to_string());
            }
            row.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let first = text.lines().next().unwrap_or("");
        let meta = first.strip_prefix("# ").ok_or(Error::Malformed {
            line: 1,
            msg: "missing metadata line".into(),
        })?;
        let mut spec = None;
        let mut bias = None;
        for tok in meta.split(' ') {
            if let Some(v) = tok.strip_prefix("spec=") {
                spec = Some(v.parse::<CandidateSpec>()?);
            } else if let Some(v) = tok.strip_prefix("bias=") {
                bias = Some(v == "true");
            }
        }
        let spec = spec.ok_or(Error::Malformed {
            line: 1,
            msg: "missing spec".into(),
        })?;
        let bias = bias.ok_or(Error::Malformed {
            line: 1,
            msg: "missing bias".into(),
        })?;
        let body = text.split_once('\n').map(|(_, b)| b).unwrap_or("");
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let pool = rdr.headers()?.get(0) == Some("consumed");
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut consumed = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let nums = parse_row(&rec?, i + 3)?;
            if pool {
                if nums.len() < 3 {
                    return Err(Error::Malformed {
                        line: i + 3,
                        msg: "short pool row".into(),
                    });
                }
                consumed.push(nums[0] != 0.0);
                outputs.push(nums[1]);
                inputs.push(nums[2..].to_vec());
            } else {
                inputs.push(nums);
            }
        }
        if inputs.is_empty() {
            return Err(Error::invalid("candidate set is empty"));
        }
        let mode = if pool {
            CandidateMode::Pool { outputs, consumed }
        } else {
            CandidateMode::Grid
        };
        Ok(CandidateSet {
            spec,
            inputs,
            mode,
            bias,
        })
    }
}

/// Read a pool CSV with header `y,x0,...`.
pub fn read_pool_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let file = File::open(path)?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let header = rdr.headers()?.clone();
    if header.len() < 2 || header.get(0).map(str::trim) != Some("y") {
        return Err(Error::Malformed {
            line: 1,
            msg: "pool header must be y,x0,...".into(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Malformed {
            line: i + 2,
            msg: e.to_string(),
        })?;
        let nums = parse_row(&rec, i + 2)?;
        if nums.len() != header.len() {
            return Err(Error::Malformed {
                line: i + 2,
                msg: "wrong column count".into(),
            });
        }
        ys.push(nums[0]);
        xs.push(nums[1..].to_vec());
    }
    if xs.is_empty() {
        return Err(Error::invalid(format!(
            "pool file {} has no rows",
            path.display()
        )));
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> LogMeta {
        LogMeta {
            family: ModelFamily::Mlr,
            seed: 3,
            strategy: Strategy::Random,
        }
    }

    #[test]
    fn circle_grid_has_36_unit_vectors() {
        let c = CandidateSet::build(&CandidateSpec::CircleGrid { step_deg: 10.0 }).unwrap();
        assert_eq!(c.len(), 36);
        assert_eq!(c.input(0), &[1.0, 0.0]);
        let a = c.input(9);
        assert!(a[0].abs() < 1e-15 && (a[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn line_grid_endpoints() {
        let c = CandidateSet::build(&CandidateSpec::LineGrid {
            lo: -5.0,
            hi: 5.0,
            step: 0.01,
        })
        .unwrap();
        assert_eq!(c.len(), 1001);
        assert_eq!(c.input(0)[0], -5.0);
        assert_eq!(c.input(1000)[0], 5.0);
        assert_eq!(c.input(500)[0], 0.0);
        assert!(CandidateSet::build(&CandidateSpec::LineGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.0
        })
        .is_err());
        assert!(CandidateSet::build(&CandidateSpec::CircleGrid { step_deg: -1.0 }).is_err());
    }

    #[test]
    fn hypersphere_unit_norm_and_deterministic() {
        let spec = CandidateSpec::Hypersphere {
            n: 1000,
            dim: 10,
            seed: 5,
        };
        let a = CandidateSet::build(&spec).unwrap();
        let b = CandidateSet::build(&spec).unwrap();
        assert_eq!(a, b);
        for x in a.inputs() {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_append_contiguity() {
        let mut log = ExperimentLog::new(2, meta());
        log.append(TrialRecord {
            t: 1,
            x: vec![1.0, 0.0],
            y: 0.5,
        })
        .unwrap();
        assert_eq!(log.len(), 1);
        for _ in 0..4 {
            log.push(vec![0.0, 1.0], 1.0).unwrap();
        }
        let err = log.append(TrialRecord {
            t: 7,
            x: vec![0.0, 0.0],
            y: 0.0,
        });
        assert!(matches!(
            err,
            Err(Error::NonContiguousTrial { len: 5, got: 7 })
        ));
        let dup = log.append(TrialRecord {
            t: 5,
            x: vec![0.0, 0.0],
            y: 0.0,
        });
        assert!(dup.is_err());
        assert!(log.push(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn binary_outputs_enforced() {
        let mut log = ExperimentLog::new(
            1,
            LogMeta {
                family: ModelFamily::IoHmm,
                seed: 0,
                strategy: Strategy::Random,
            },
        );
        assert!(log.push(vec![0.2], 0.5).is_err());
        log.push(vec![0.2], 1.0).unwrap();
    }

    #[test]
    fn log_round_trip_is_bitwise() {
        let mut log = ExperimentLog::new(2, meta());
        log.push(vec![0.1 + 0.2, -1e-300], std::f64::consts::PI)
            .unwrap();
        log.push(vec![1.0 / 3.0, 5e17], -0.0).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = ExperimentLog::parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, log);
        for (a, b) in back.trials().iter().zip(log.trials()) {
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }

    #[test]
    fn pool_consumption() {
        let mut c = CandidateSet::pool(vec![vec![1.0], vec![2.0]], vec![10.0, 20.0]).unwrap();
        assert_eq!(c.consume(1).unwrap(), 20.0);
        assert!(c.consume(1).is_err());
        assert_eq!(c.available(), vec![0]);
        assert_eq!(c.consumed_count() + c.remaining(), 2);
    }

    #[test]
    fn candidate_round_trip() {
        let mut c = CandidateSet::pool(vec![vec![0.1, 0.7], vec![2.0, 1e-9]], vec![1.5, -2.25])
            .unwrap()
            .with_bias_column();
        c.consume(0).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = CandidateSet::parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, c);

        let g = CandidateSet::build(&CandidateSpec::CircleGrid { step_deg: 10.0 }).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(
            CandidateSet::parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap(),
            g
        );
    }

    #[test]
    fn pool_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "y,x0\n").unwrap();
        assert!(CandidateSet::build(&CandidateSpec::PoolFile { path: empty }).is_err());
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "y,x0\n1.0,abc\n").unwrap();
        assert!(matches!(
            CandidateSet::build(&CandidateSpec::PoolFile { path: bad }),
            Err(Error::Malformed { .. })
        ));
        let good = dir.path().join("good.csv");
        std::fs::write(&good, "y,x0,x1\n1.0,2.0,3.0\n4.0,5.0,6.0\n").unwrap();
        let c = CandidateSet::build(&CandidateSpec::PoolFile { path: good }).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.stored_output(1), Some(4.0));
    }

    #[test]
    fn spec_string_round_trip() {
        for s in [
            CandidateSpec::CircleGrid { step_deg: 10.0 },
            CandidateSpec::Hypersphere {
                n: 1000,
                dim: 10,
                seed: 9,
            },
            CandidateSpec::LineGrid {
                lo: -5.0,
                hi: 5.0,
                step: 0.01,
            },
            CandidateSpec::PoolFile {
                path: PathBuf::from("data/pool.csv"),
            },
        ] {
            assert_eq!(s.to_string().parse::<CandidateSpec>().unwrap(), s);
        }
    }
}
