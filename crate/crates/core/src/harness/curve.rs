//! Training curves: mean and spread of greedy evaluation returns logged at
//! a fixed episode cadence, and their aggregation over repeated runs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Training episodes completed when the point was taken.
    pub episode: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Point-wise mean of the repeat means, with the spread across repeats.
pub fn aggregate(curves: &[Vec<CurvePoint>]) -> Result<Vec<CurvePoint>> {
    let Some(first) = curves.first() else {
        return Ok(Vec::new());
    };
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(Error::Config("curves have different lengths".into()));
    }
    let mut out = Vec::with_capacity(first.len());
    for (i, p) in first.iter().enumerate() {
        if curves.iter().any(|c| c[i].episode != p.episode) {
            return Err(Error::Config("curves are logged at different episodes".into()));
        }
        let means: Vec<f64> = curves.iter().map(|c| c[i].mean).collect();
        let (mean, std) = mean_std(&means);
        out.push(CurvePoint {
            episode: p.episode,
            mean,
            std,
        });
    }
    Ok(out)
}

/// Mean of the points in the first and in the last tenth of `total_episodes`.
pub fn decile_means(points: &[CurvePoint], total_episodes: usize) -> Option<(f64, f64)> {
    let cut = total_episodes / 10;
    let early: Vec<f64> = points.iter().filter(|p| p.episode <= cut).map(|p| p.mean).collect();
    let late: Vec<f64> = points
        .iter()
        .filter(|p| p.episode > total_episodes - cut)
        .map(|p| p.mean)
        .collect();
    if early.is_empty() || late.is_empty() {
        return None;
    }
    Some((mean_std(&early).0, mean_std(&late).0))
}

pub fn write_csv(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "episode,mean,std")?;
    for p in points {
        // `{:?}` prints the shortest representation that reads back exactly
        writeln!(f, "{},{:?},{:?}", p.episode, p.mean, p.std)?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = std::fs::read_to_string(path)?;
    let parse = |line: usize, msg: &str| Error::Parse {
        file: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "episode,mean,std")) => {}
        _ => return Err(parse(1, "expected header 'episode,mean,std'")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(parse(i + 1, "expected 3 columns"));
        }
        out.push(CurvePoint {
            episode: cols[0].parse().map_err(|_| parse(i + 1, "bad episode"))?,
            mean: cols[1].parse().map_err(|_| parse(i + 1, "bad mean"))?,
            std: cols[2].parse().map_err(|_| parse(i + 1, "bad std"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(vals: &[f64]) -> Vec<CurvePoint> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| CurvePoint {
                episode: (i + 1) * 100,
                mean: *v,
                std: 0.1,
            })
            .collect()
    }

    #[test]
    fn single_repeat_aggregate_is_identity_with_zero_spread() {
        let c = curve(&[1.0, -2.5, 0.125]);
        let agg = aggregate(&[c.clone()]).unwrap();
        for (a, b) in agg.iter().zip(&c) {
            assert_eq!((a.episode, a.mean, a.std), (b.episode, b.mean, 0.0));
        }
    }

    #[test]
    fn aggregate_is_pointwise_mean() {
        let agg = aggregate(&[curve(&[1.0, 2.0]), curve(&[3.0, 2.0]), curve(&[2.0, 2.0])]).unwrap();
        assert_eq!(agg[0].mean, 2.0);
        assert!((agg[0].std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(agg[1].std, 0.0);
    }

    #[test]
    fn mismatched_curves_rejected() {
        assert!(aggregate(&[curve(&[1.0]), curve(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let c = curve(&[0.1 + 0.2, -1.0 / 3.0, 1e-300]);
        write_csv(&p, &c).unwrap();
        assert_eq!(read_csv(&p).unwrap(), c);
    }

    #[test]
    fn deciles() {
        let c = curve(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        assert_eq!(decile_means(&c, 1000), Some((0.0, 9.0)));
    }
}
