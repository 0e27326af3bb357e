//! CSV and JSON persistence of trial records.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::harness::TrialRecord;

pub const CSV_HEADER: &str = "policy,replication,seed,regret,selected_arm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Json,
}

impl RecordFormat {
    /// `.json` is JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            RecordFormat::Json
        } else {
            RecordFormat::Csv
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes records sorted by `(policy, replication)`. Policy labels never
/// contain commas, so CSV fields are written unquoted.
pub fn write_records(records: &[TrialRecord], path: &Path, format: RecordFormat) -> Result<()> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.policy
            .cmp(&b.policy)
            .then(a.replication.cmp(&b.replication))
    });
    let text = match format {
        RecordFormat::Json => serde_json::to_string_pretty(&sorted)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        RecordFormat::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in sorted {
                if r.policy.contains([',', '\n', '"']) {
                    return Err(Error::invalid(format!(
                        "policy label `{}` not CSV-safe",
                        r.policy
                    )));
                }
                // `{}` on f64 prints the shortest string that round-trips.
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.policy, r.replication, r.seed, r.regret, r.selected_arm
                )
                .expect("writing to a String");
            }
            s
        }
    };
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_records(path: &Path, format: RecordFormat) -> Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |line: usize, what: &str| Error::Parse(format!("{}:{line}: {what}", path.display()));
    match format {
        RecordFormat::Json => serde_json::from_str(&text).map_err(|e| bad(0, &e.to_string())),
        RecordFormat::Csv => {
            let mut lines = text.lines().enumerate();
            match lines.next() {
                Some((_, h)) if h.trim() == CSV_HEADER => {}
                _ => return Err(bad(1, "missing header")),
            }
            lines
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    let f: Vec<&str> = l.split(',').collect();
                    if f.len() != 5 {
                        return Err(bad(i + 1, "expected 5 fields"));
                    }
                    Ok(TrialRecord {
                        policy: f[0].to_string(),
                        replication: f[1].parse().map_err(|_| bad(i + 1, "replication"))?,
                        seed: f[2].parse().map_err(|_| bad(i + 1, "seed"))?,
                        regret: f[3].parse().map_err(|_| bad(i + 1, "regret"))?,
                        selected_arm: f[4].parse().map_err(|_| bad(i + 1, "selected_arm"))?,
                    })
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TrialRecord> {
        vec![
            TrialRecord {
                policy: "uniform".into(),
                replication: 1,
                seed: 3,
                regret: 0.1 + 0.2,
                selected_arm: 4,
            },
            TrialRecord {
                policy: "rho".into(),
                replication: 0,
                seed: 3,
                regret: 1e-17,
                selected_arm: 0,
            },
        ]
    }

    #[test]
    fn csv_round_trip_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_records(&sample(), &p, RecordFormat::Csv).unwrap();
        let back = read_records(&p, RecordFormat::Csv).unwrap();
        let mut expect = sample();
        expect.reverse();
        assert_eq!(back, expect);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("policy,replication,seed,regret,selected_arm\nrho,"));
    }

    #[test]
    fn empty_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_records(&[], &p, RecordFormat::Csv).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            format!("{CSV_HEADER}\n")
        );
        assert!(read_records(&p, RecordFormat::Csv).unwrap().is_empty());
    }

    #[test]
    fn json_is_array_of_objects() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        assert_eq!(RecordFormat::from_path(&p), RecordFormat::Json);
        write_records(&sample(), &p, RecordFormat::Json).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 2);
        assert_eq!(arr[0]["policy"], "rho");
        assert_eq!(arr[1]["selected_arm"], 4);
        assert_eq!(read_records(&p, RecordFormat::Json).unwrap().len(), 2);
    }

    #[test]
    fn io_error_names_path() {
        let err = read_records(Path::new("/no/such/dir/x.csv"), RecordFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/no/such/dir/x.csv"));
    }
}
