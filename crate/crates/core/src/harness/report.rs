//! Crash tables: one row per (attacker presence, car count), one column per
//! failure code, each cell "attacker-involved/total".

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::eval::FcHistogram;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub with_attacker: bool,
    pub n_env_cars: usize,
    pub episodes: u64,
    pub attacker_involved: [u64; 8],
    pub counts: [u64; 8],
}

impl From<&FcHistogram> for ReportRow {
    fn from(h: &FcHistogram) -> Self {
        Self {
            with_attacker: h.with_attacker,
            n_env_cars: h.n_env_cars,
            episodes: h.episodes,
            attacker_involved: h.attacker_involved,
            counts: h.counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub config_hash: String,
    /// Include the failure-code-0 column.
    pub extended: bool,
    /// Without attacker first, then by car count.
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Rejects histograms from different configurations and duplicate rows.
    pub fn from_histograms(hists: &[FcHistogram], extended: bool) -> Result<Self> {
        let first = hists
            .first()
            .ok_or_else(|| Error::Config("report needs at least one histogram".into()))?;
        if let Some(h) = hists.iter().find(|h| h.config_hash != first.config_hash) {
            return Err(Error::Config(format!(
                "histograms come from different configurations ({} vs {})",
                first.config_hash, h.config_hash
            )));
        }
        let mut rows: Vec<ReportRow> = hists.iter().map(ReportRow::from).collect();
        rows.sort_by_key(|r| (r.with_attacker, r.n_env_cars));
        if rows
            .windows(2)
            .any(|w| (w[0].with_attacker, w[0].n_env_cars) == (w[1].with_attacker, w[1].n_env_cars))
        {
            return Err(Error::Config("two histograms for the same row".into()));
        }
        Ok(Self {
            config_hash: first.config_hash.clone(),
            extended,
            rows,
        })
    }

    fn codes(&self) -> std::ops::RangeInclusive<usize> {
        if self.extended {
            0..=7
        } else {
            1..=7
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# config_hash {}\nattacker,env_cars,episodes", self.config_hash);
        for fc in self.codes() {
            write!(out, ",fc{fc}").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            let label = if r.with_attacker { "with" } else { "without" };
            write!(out, "{label},{},{}", r.n_env_cars, r.episodes).unwrap();
            for fc in self.codes() {
                write!(out, ",{}/{}", r.attacker_involved[fc], r.counts[fc]).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text layout of the same table.
    pub fn to_text(&self) -> String {
        let mut header = vec!["attacker".to_string(), "env cars".to_string(), "episodes".to_string()];
        header.extend(self.codes().map(|fc| format!("FC {fc}")));
        let mut cells = vec![header];
        for r in &self.rows {
            let mut line = vec![
                if r.with_attacker { "with" } else { "without" }.to_string(),
                r.n_env_cars.to_string(),
                r.episodes.to_string(),
            ];
            line.extend(self.codes().map(|fc| format!("{}/{}", r.attacker_involved[fc], r.counts[fc])));
            cells.push(line);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("config {}\n", self.config_hash);
        for line in &cells {
            let padded: Vec<String> = line.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            out.push_str(padded.join(" | ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Reads back the output of `to_csv`. Errors name the file and line.
    pub fn parse_csv(text: &str, file: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            file: file.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i, first) = lines.next().ok_or_else(|| err(1, "empty report".into()))?;
        let config_hash = first
            .strip_prefix("# config_hash ")
            .ok_or_else(|| err(i + 1, "expected '# config_hash <hash>'".into()))?
            .trim()
            .to_string();
        let (i, header) = lines.next().ok_or_else(|| err(i + 2, "missing column header".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let extended = match cols.as_slice() {
            ["attacker", "env_cars", "episodes", rest @ ..] if *rest == ["fc1", "fc2", "fc3", "fc4", "fc5", "fc6", "fc7"] => false,
            ["attacker", "env_cars", "episodes", rest @ ..]
                if *rest == ["fc0", "fc1", "fc2", "fc3", "fc4", "fc5", "fc6", "fc7"] =>
            {
                true
            }
            _ => return Err(err(i + 1, "unexpected column header".into())),
        };
        let mut report = Self {
            config_hash,
            extended,
            rows: Vec::new(),
        };
        let codes: Vec<usize> = report.codes().collect();
        for (i, line) in lines {
            let n = i + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 + codes.len() {
                return Err(err(n, format!("expected {} fields, found {}", 3 + codes.len(), f.len())));
            }
            let with_attacker = match f[0] {
                "with" => true,
                "without" => false,
                other => return Err(err(n, format!("bad attacker label '{other}'"))),
            };
            let num = |s: &str, what: &str| s.trim().parse::<u64>().map_err(|_| err(n, format!("bad {what} '{s}'")));
            let mut row = ReportRow {
                with_attacker,
                n_env_cars: num(f[1], "car count")? as usize,
                episodes: num(f[2], "episode count")?,
                attacker_involved: [0; 8],
                counts: [0; 8],
            };
            for (fc, cell) in codes.iter().zip(&f[3..]) {
                let (a, t) = cell.split_once('/').ok_or_else(|| err(n, format!("cell '{cell}' is not a/t")))?;
                row.attacker_involved[*fc] = num(a, "cell")?;
                row.counts[*fc] = num(t, "cell")?;
                if row.attacker_involved[*fc] > row.counts[*fc] {
                    return Err(err(n, format!("cell '{cell}' has more attacker crashes than crashes")));
                }
            }
            report.rows.push(row);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(with: bool, cars: usize, counts: [u64; 8], att: [u64; 8]) -> FcHistogram {
        FcHistogram {
            config_hash: "h1".into(),
            n_env_cars: cars,
            with_attacker: with,
            episodes: 1000,
            counts,
            attacker_involved: att,
            total_crashes: counts.iter().sum(),
        }
    }

    #[test]
    fn cell_format() {
        let h = hist(true, 10, [0, 1, 0, 3, 0, 7, 504, 0], [0, 0, 0, 1, 0, 2, 504, 0]);
        let r = Report::from_histograms(&[h], false).unwrap();
        let csv = r.to_csv();
        assert!(csv.contains("with,10,1000,0/1,0/0,1/3,0/0,2/7,504/504,0/0"), "{csv}");
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn round_trip_both_variants() {
        let hs = [
            hist(true, 15, [2, 1, 0, 3, 0, 7, 5, 0], [1, 0, 0, 1, 0, 2, 5, 0]),
            hist(false, 10, [1, 0, 0, 5, 0, 46, 0, 0], [0; 8]),
            hist(false, 20, [0, 0, 0, 14, 0, 55, 0, 0], [0; 8]),
        ];
        for extended in [false, true] {
            let r = Report::from_histograms(&hs, extended).unwrap();
            let back = Report::parse_csv(&r.to_csv(), Path::new("r.csv")).unwrap();
            assert_eq!(back.rows.len(), 3);
            for (a, b) in back.rows.iter().zip(&r.rows) {
                let lo = if extended { 0 } else { 1 };
                assert_eq!(a.counts[lo..], b.counts[lo..]);
                assert_eq!(a.attacker_involved[lo..], b.attacker_involved[lo..]);
                assert_eq!((a.with_attacker, a.n_env_cars, a.episodes), (b.with_attacker, b.n_env_cars, b.episodes));
            }
            assert_eq!(back.config_hash, "h1");
        }
    }

    #[test]
    fn rows_are_ordered() {
        let hs = [hist(true, 10, [0; 8], [0; 8]), hist(false, 20, [0; 8], [0; 8]), hist(false, 10, [0; 8], [0; 8])];
        let r = Report::from_histograms(&hs, false).unwrap();
        let keys: Vec<_> = r.rows.iter().map(|r| (r.with_attacker, r.n_env_cars)).collect();
        assert_eq!(keys, vec![(false, 10), (false, 20), (true, 10)]);
    }

    #[test]
    fn mixed_configs_rejected() {
        let a = hist(false, 10, [0; 8], [0; 8]);
        let mut b = hist(true, 10, [0; 8], [0; 8]);
        b.config_hash = "h2".into();
        assert!(Report::from_histograms(&[a, b], false).is_err());
    }

    #[test]
    fn malformed_input_names_line() {
        let text = "# config_hash h\nattacker,env_cars,episodes,fc1,fc2,fc3,fc4,fc5,fc6,fc7\nwith,10,5,0/0,0/0,0/0,x/0,0/0,0/0,0/0\n";
        match Report::parse_csv(text, Path::new("bad.csv")) {
            Err(Error::Parse { file, line, .. }) => {
                assert_eq!(file, Path::new("bad.csv"));
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn text_layout_has_one_line_per_row() {
        let r = Report::from_histograms(&[hist(false, 10, [0; 8], [0; 8])], false).unwrap();
        assert_eq!(r.to_text().lines().count(), 3);
    }
}
