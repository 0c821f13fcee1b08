//! Latent-state decoding from forward-backward posteriors.

use std::io::Write;

use super::hmm::forward_backward_params;
use super::IoHmmParams;
use crate::data::ExperimentLog;
use crate::error::Result;

/// T×K matrix of `p(z_t = k | y_{1:T}, x_{1:T})`.
pub fn decode_states(log: &ExperimentLog, params: &IoHmmParams) -> Result<Vec<Vec<f64>>> {
    Ok(forward_backward_params(log, params)?.posteriors())
}

/// Most probable state per trial (lowest index on ties).
pub fn hard_decode(posteriors: &[Vec<f64>]) -> Vec<usize> {
    posteriors
        .iter()
        .map(|row| {
            let mut best = 0;
            for (k, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(decoded: &[usize], truth: &[usize]) -> f64 {
    if decoded.is_empty() {
        return 1.0;
    }
    let hits = decoded.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / decoded.len() as f64
}

/// CSV with header `t,true_state,p_state1,...` (the true-state column is
/// omitted when unknown). States are written 1-based.
pub fn write_decoded_csv<W: Write>(
    out: W,
    posteriors: &[Vec<f64>],
    truth: Option<&[usize]>,
) -> Result<()> {
    let k = posteriors.first().map(|r| r.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    if truth.is_some() {
        header.push("true_state".into());
    }
    header.extend((1..=k).map(|i| format!("p_state{i}")));
    w.write_record(&header)?;
    for (t, row) in posteriors.iter().enumerate() {
        let mut rec = vec![(t + 1).to_string()];
        if let Some(z) = truth {
            rec.push((z[t] + 1).to_string());
        }
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModelFamily, Strategy};
    use crate::data::LogMeta;
    use crate::iohmm::glm::to_augmented;

    fn meta() -> LogMeta {
        LogMeta {
            family: ModelFamily::IoHmm,
            seed: 0,
            strategy: Strategy::Random,
        }
    }

    #[test]
    fn single_state_column_of_ones() {
        let mut log = ExperimentLog::new(2, meta());
        for i in 0..5 {
            log.push(vec![i as f64, 1.0], (i % 2) as f64).unwrap();
        }
        let p = IoHmmParams::new(vec![to_augmented(1.0, 0.0)], vec![vec![1.0]], vec![1.0]).unwrap();
        let post = decode_states(&log, &p).unwrap();
        assert!(post.iter().all(|r| (r[0] - 1.0).abs() < 1e-15));
        assert_eq!(accuracy(&hard_decode(&post), &[0; 5]), 1.0);
    }

    #[test]
    fn sticky_block_is_decoded() {
        // state 1 predicts y = 1 at x = 3, state 0 predicts y = 0 there
        let p = IoHmmParams::new(
            vec![to_augmented(-4.0, 0.0), to_augmented(4.0, 0.0)],
            IoHmmParams::sticky_transitions(2, 0.99),
            vec![0.5, 0.5],
        )
        .unwrap();
        let mut log = ExperimentLog::new(2, meta());
        let truth: Vec<usize> = (0..30)
            .map(|t| usize::from((10..20).contains(&t)))
            .collect();
        for &z in &truth {
            log.push(vec![3.0, 1.0], z as f64).unwrap();
        }
        let post = decode_states(&log, &p).unwrap();
        assert_eq!(hard_decode(&post), truth);
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_decoded_csv(&mut buf, &[vec![0.25, 0.75]], Some(&[1])).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "t,true_state,p_state1,p_state2");
        assert_eq!(s.lines().nth(1).unwrap(), "1,2,0.25,0.75");
    }
}
