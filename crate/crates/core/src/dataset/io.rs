//! CSV and versioned binary persistence for rate, TR and ATR datasets.
//!
//! The binary header freezes the pair-flattening convention (combiner-major,
//! `n = i·|F| + j`) so models and datasets cannot silently disagree.

use std::fmt::Write as _;
use std::path::Path;

use super::{AtrRow, TrRow};
use crate::codec::{read_file, write_atomic, Reader, Writer};
use crate::error::{Error, Result};
use crate::link::RateRow;
use crate::scene::Location;

const MAGIC: &[u8; 4] = b"BTDS";
const VERSION: u32 = 1;
/// Combiner-major pair flattening.
const PAIR_ORDER_COMBINER_MAJOR: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Binary,
}

impl DatasetFormat {
    /// `.csv` selects CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DatasetFormat::Csv,
            _ => DatasetFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Rate { n_w: usize, n_f: usize, rows: Vec<RateRow> },
    Tr { n_w: usize, n_f: usize, rows: Vec<TrRow> },
    Atr { n_w: usize, n_f: usize, rows: Vec<AtrRow> },
}

impl Dataset {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Dataset::Rate { n_w, n_f, .. } | Dataset::Tr { n_w, n_f, .. } | Dataset::Atr { n_w, n_f, .. } => (*n_w, *n_f),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Rate { rows, .. } => rows.len(),
            Dataset::Tr { rows, .. } => rows.len(),
            Dataset::Atr { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind_code(&self) -> u8 {
        match self {
            Dataset::Rate { .. } => 0,
            Dataset::Tr { .. } => 1,
            Dataset::Atr { .. } => 2,
        }
    }

    fn check(&self) -> Result<()> {
        let (n_w, n_f) = self.shape();
        let bad = |got: usize, expected: usize| Error::Dimension {
            expected,
            got,
            context: "dataset row width",
        };
        match self {
            Dataset::Rate { rows, .. } => rows.iter().try_for_each(|r| {
                (r.rates.len() == n_w * n_f).then_some(()).ok_or_else(|| bad(r.rates.len(), n_w * n_f))
            }),
            Dataset::Tr { rows, .. } => rows.iter().try_for_each(|r| {
                (r.ratios.len() == n_w * n_f).then_some(()).ok_or_else(|| bad(r.ratios.len(), n_w * n_f))
            }),
            Dataset::Atr { rows, .. } => rows.iter().try_for_each(|r| {
                (r.atr_w.len() == n_w && r.atr_f.len() == n_f)
                    .then_some(())
                    .ok_or_else(|| bad(r.atr_w.len() + r.atr_f.len(), n_w + n_f))
            }),
        }
    }

    /// Serialised binary form; also the input to dataset checksums.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (n_w, n_f) = self.shape();
        let mut w = Writer::new(MAGIC, VERSION);
        w.u8(self.kind_code());
        w.u8(PAIR_ORDER_COMBINER_MAJOR);
        w.usize(n_w);
        w.usize(n_f);
        w.usize(self.len());
        let head = |w: &mut Writer, loc: &Location, sid: u64| {
            w.f64(loc.x);
            w.f64(loc.y);
            w.u64(sid);
        };
        match self {
            Dataset::Rate { rows, .. } => {
                for r in rows {
                    head(&mut w, &r.location, r.snapshot_id);
                    r.rates.iter().for_each(|&v| w.f64(v));
                }
            }
            Dataset::Tr { rows, .. } => {
                for r in rows {
                    head(&mut w, &r.location, r.snapshot_id);
                    w.f64(r.max_rate);
                    r.ratios.iter().for_each(|&v| w.f64(v));
                }
            }
            Dataset::Atr { rows, .. } => {
                for r in rows {
                    head(&mut w, &r.location, r.snapshot_id);
                    r.atr_w.iter().for_each(|&v| w.f64(v));
                    r.atr_f.iter().for_each(|&v| w.f64(v));
                }
            }
        }
        w.finish()
    }

    fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader::new(bytes, path, MAGIC, VERSION)?;
        let kind = r.u8()?;
        let order = r.u8()?;
        if order != PAIR_ORDER_COMBINER_MAJOR {
            return Err(r.error(format!("unknown pair ordering {order}")));
        }
        let n_w = r.usize()?;
        let n_f = r.usize()?;
        let n = r.usize()?;
        let per_row = match kind {
            0 => n_w * n_f,
            1 => n_w * n_f + 1,
            2 => n_w + n_f,
            k => return Err(r.error(format!("unknown dataset kind {k}"))),
        };
        if n.saturating_mul((per_row + 3) * 8) > bytes.len() {
            return Err(r.error(format!("row count {n} exceeds file size")));
        }
        let read_vec = |r: &mut Reader, len: usize| (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>();
        let ds = match kind {
            0 => {
                let mut rows = Vec::with_capacity(n);
                for _ in 0..n {
                    let location = Location::new(r.f64()?, r.f64()?);
                    let snapshot_id = r.u64()?;
                    rows.push(RateRow {
                        location,
                        snapshot_id,
                        rates: read_vec(&mut r, n_w * n_f)?,
                    });
                }
                Dataset::Rate { n_w, n_f, rows }
            }
            1 => {
                let mut rows = Vec::with_capacity(n);
                for _ in 0..n {
                    let location = Location::new(r.f64()?, r.f64()?);
                    let snapshot_id = r.u64()?;
                    let max_rate = r.f64()?;
                    rows.push(TrRow {
                        location,
                        snapshot_id,
                        ratios: read_vec(&mut r, n_w * n_f)?,
                        max_rate,
                    });
                }
                Dataset::Tr { n_w, n_f, rows }
            }
            _ => {
                let mut rows = Vec::with_capacity(n);
                for _ in 0..n {
                    let location = Location::new(r.f64()?, r.f64()?);
                    let snapshot_id = r.u64()?;
                    let atr_w = read_vec(&mut r, n_w)?;
                    let atr_f = read_vec(&mut r, n_f)?;
                    rows.push(AtrRow {
                        location,
                        snapshot_id,
                        atr_w,
                        atr_f,
                    });
                }
                Dataset::Atr { n_w, n_f, rows }
            }
        };
        r.finish()?;
        Ok(ds)
    }

    fn csv_header(&self) -> Vec<String> {
        let (n_w, n_f) = self.shape();
        let mut cols: Vec<String> = vec!["x".into(), "y".into(), "snapshot_id".into()];
        match self {
            Dataset::Rate { .. } | Dataset::Tr { .. } => {
                for i in 1..=n_w {
                    for j in 1..=n_f {
                        cols.push(format!("r_{i}_{j}"));
                    }
                }
                if matches!(self, Dataset::Tr { .. }) {
                    cols.push("max_rate".into());
                }
            }
            Dataset::Atr { .. } => {
                cols.extend((1..=n_w).map(|i| format!("atr_w_{i}")));
                cols.extend((1..=n_f).map(|j| format!("atr_f_{j}")));
            }
        }
        cols
    }

    fn to_csv(&self) -> String {
        let mut out = self.csv_header().join(",");
        out.push('\n');
        let mut line = |loc: &Location, sid: u64, vals: &mut dyn Iterator<Item = f64>| {
            let _ = write!(out, "{},{},{}", fmt9(loc.x), fmt9(loc.y), sid);
            for v in vals {
                out.push(',');
                out.push_str(&fmt9(v));
            }
            out.push('\n');
        };
        match self {
            Dataset::Rate { rows, .. } => rows
                .iter()
                .for_each(|r| line(&r.location, r.snapshot_id, &mut r.rates.iter().copied())),
            Dataset::Tr { rows, .. } => rows.iter().for_each(|r| {
                line(
                    &r.location,
                    r.snapshot_id,
                    &mut r.ratios.iter().copied().chain(std::iter::once(r.max_rate)),
                )
            }),
            Dataset::Atr { rows, .. } => rows.iter().for_each(|r| {
                line(&r.location, r.snapshot_id, &mut r.atr_w.iter().chain(&r.atr_f).copied())
            }),
        }
        out
    }

    fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::malformed(path, "empty file"))?
            .split(',')
            .collect();
        if header.len() < 4 || header[..3] != ["x", "y", "snapshot_id"] {
            return Err(Error::malformed(path, "header must start with x,y,snapshot_id"));
        }
        let last = header[header.len() - 1];
        let template = if header[3].starts_with("atr_w_") {
            let n_w = header.iter().filter(|h| h.starts_with("atr_w_")).count();
            let n_f = header.iter().filter(|h| h.starts_with("atr_f_")).count();
            Dataset::Atr { n_w, n_f, rows: vec![] }
        } else {
            let is_tr = last == "max_rate";
            let width_col = if is_tr { header[header.len() - 2] } else { last };
            let (n_w, n_f) = width_col
                .strip_prefix("r_")
                .and_then(|t| t.split_once('_'))
                .and_then(|(i, j)| Some((i.parse::<usize>().ok()?, j.parse::<usize>().ok()?)))
                .ok_or_else(|| Error::malformed(path, format!("cannot infer codebook sizes from column {width_col}")))?;
            if is_tr {
                Dataset::Tr { n_w, n_f, rows: vec![] }
            } else {
                Dataset::Rate { n_w, n_f, rows: vec![] }
            }
        };
        if template.csv_header() != header {
            return Err(Error::malformed(path, "unexpected header layout"));
        }
        let width = header.len();
        let (n_w, n_f) = template.shape();
        let mut parsed: Vec<(Location, u64, Vec<f64>)> = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width {
                return Err(Error::malformed(
                    path,
                    format!("line {} has {} fields, expected {width}", ln + 2, fields.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::malformed(path, format!("line {}: bad number {s:?}", ln + 2)))
            };
            let loc = Location::new(num(fields[0])?, num(fields[1])?);
            let sid = fields[2]
                .parse::<u64>()
                .map_err(|_| Error::malformed(path, format!("line {}: bad snapshot id", ln + 2)))?;
            let vals = fields[3..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
            parsed.push((loc, sid, vals));
        }
        if !text.ends_with('\n') {
            return Err(Error::malformed(path, "missing final newline (truncated file?)"));
        }
        Ok(match template {
            Dataset::Rate { .. } => Dataset::Rate {
                n_w,
                n_f,
                rows: parsed
                    .into_iter()
                    .map(|(location, snapshot_id, rates)| RateRow {
                        location,
                        snapshot_id,
                        rates,
                    })
                    .collect(),
            },
            Dataset::Tr { .. } => Dataset::Tr {
                n_w,
                n_f,
                rows: parsed
                    .into_iter()
                    .map(|(location, snapshot_id, mut vals)| {
                        let max_rate = vals.pop().expect("row width checked");
                        TrRow {
                            location,
                            snapshot_id,
                            ratios: vals,
                            max_rate,
                        }
                    })
                    .collect(),
            },
            Dataset::Atr { .. } => Dataset::Atr {
                n_w,
                n_f,
                rows: parsed
                    .into_iter()
                    .map(|(location, snapshot_id, vals)| AtrRow {
                        location,
                        snapshot_id,
                        atr_w: vals[..n_w].to_vec(),
                        atr_f: vals[n_w..].to_vec(),
                    })
                    .collect(),
            },
        })
    }
}

/// Nine significant digits.
fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn save_dataset(path: &Path, dataset: &Dataset, format: DatasetFormat) -> Result<()> {
    dataset.check()?;
    match format {
        DatasetFormat::Binary => write_atomic(path, &dataset.to_bytes()),
        DatasetFormat::Csv => write_atomic(path, dataset.to_csv().as_bytes()),
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Dataset> {
    let bytes = read_file(path)?;
    match format {
        DatasetFormat::Binary => Dataset::from_bytes(&bytes, path),
        DatasetFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| Error::malformed(path, "not utf-8"))?;
            Dataset::from_csv(&text, path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{to_atr, to_throughput_ratios};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(n: usize, n_w: usize, n_f: usize) -> Vec<RateRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        (0..n)
            .map(|s| RateRow {
                location: Location::new(rng.gen_range(2.0..16.0), rng.gen_range(5.0..105.0)),
                snapshot_id: s as u64,
                rates: (0..n_w * n_f).map(|_| rng.gen_range(0.0..9.0)).collect(),
            })
            .collect()
    }

    fn all_kinds() -> Vec<Dataset> {
        let rows = sample(12, 4, 8);
        let tr = to_throughput_ratios(&rows).unwrap();
        let atr = to_atr(&tr, 4, 8).unwrap();
        vec![
            Dataset::Rate { n_w: 4, n_f: 8, rows },
            Dataset::Tr { n_w: 4, n_f: 8, rows: tr },
            Dataset::Atr { n_w: 4, n_f: 8, rows: atr },
        ]
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for ds in all_kinds() {
            let p = dir.path().join("d.bin");
            save_dataset(&p, &ds, DatasetFormat::Binary).unwrap();
            assert_eq!(load_dataset(&p, DatasetFormat::Binary).unwrap(), ds);
        }
    }

    fn max_dev(a: &Dataset, b: &Dataset) -> f64 {
        match (a, b) {
            (Dataset::Tr { rows: x, .. }, Dataset::Tr { rows: y, .. }) => x
                .iter()
                .zip(y)
                .flat_map(|(p, q)| p.ratios.iter().zip(&q.ratios).map(|(u, v)| (u - v).abs()))
                .fold(0.0, f64::max),
            (Dataset::Atr { rows: x, .. }, Dataset::Atr { rows: y, .. }) => x
                .iter()
                .zip(y)
                .flat_map(|(p, q)| {
                    p.atr_w
                        .iter()
                        .chain(&p.atr_f)
                        .zip(q.atr_w.iter().chain(&q.atr_f))
                        .map(|(u, v)| (u - v).abs())
                })
                .fold(0.0, f64::max),
            (Dataset::Rate { rows: x, .. }, Dataset::Rate { rows: y, .. }) => x
                .iter()
                .zip(y)
                .flat_map(|(p, q)| p.rates.iter().zip(&q.rates).map(|(u, v)| (u - v).abs() / 9.0))
                .fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    #[test]
    fn csv_round_trip_within_precision() {
        let dir = tempfile::tempdir().unwrap();
        for ds in all_kinds() {
            let p = dir.path().join("d.csv");
            save_dataset(&p, &ds, DatasetFormat::Csv).unwrap();
            let back = load_dataset(&p, DatasetFormat::Csv).unwrap();
            assert_eq!(back.shape(), ds.shape());
            assert_eq!(back.len(), ds.len());
            assert!(max_dev(&ds, &back) < 1e-8);
        }
    }

    #[test]
    fn csv_header_layout() {
        let ds = &all_kinds()[0];
        let h = ds.csv_header();
        assert_eq!(&h[..4], &["x", "y", "snapshot_id", "r_1_1"]);
        assert_eq!(h.last().unwrap(), "r_4_8");
        assert_eq!(h.len(), 3 + 32);
    }

    #[test]
    fn truncated_files_fail_to_load() {
        let dir = tempfile::tempdir().unwrap();
        let ds = &all_kinds()[1];
        for (name, fmt) in [("t.bin", DatasetFormat::Binary), ("t.csv", DatasetFormat::Csv)] {
            let p = dir.path().join(name);
            save_dataset(&p, ds, fmt).unwrap();
            let bytes = std::fs::read(&p).unwrap();
            std::fs::write(&p, &bytes[..bytes.len() * 2 / 3]).unwrap();
            assert!(load_dataset(&p, fmt).is_err(), "{name}");
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");
        let mut bytes = all_kinds()[0].to_bytes();
        bytes[4] = 9;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(load_dataset(&p, DatasetFormat::Binary), Err(Error::Version { found: 9, .. })));
    }
}
