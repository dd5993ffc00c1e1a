//! CSV files: datasets, accuracy tables, bound curves and sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use fedgame_core::signal::{Dataset, DatasetId, Modulation, SpectrumSample, FEATURES};
use fedgame_core::table::{cell_count, cells, AccuracyTable};

use crate::error::{Error, Result};

pub const TABLE_HEADER: [&str; 3] = ["i", "k", "accuracy"];
pub const BOUNDS_HEADER: [&str; 5] = ["n", "best_utility", "worst_utility", "best_i", "worst_i"];

/// Shortest representation that parses back to `x`, padded to at least
/// six decimals.
pub fn fixed(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') {
        s.push('.');
    }
    let decimals = s.len() - s.find('.').unwrap() - 1;
    for _ in decimals..6 {
        s.push('0');
    }
    s
}

/// Seventeen significant digits in scientific notation.
pub fn scientific(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn render(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

struct Rows {
    path: PathBuf,
    reader: csv::Reader<fs::File>,
}

impl Rows {
    fn open(path: &Path, header: &[&str]) -> Result<Rows> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let got = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if got.iter().ne(header.iter().copied()) {
            return Err(Error::format(
                path,
                1,
                format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    got.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        Ok(Rows {
            path: path.to_path_buf(),
            reader,
        })
    }

    /// Records with their 1-based line numbers.
    fn records(&mut self) -> Result<Vec<(u64, csv::StringRecord)>> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let rec = rec.map_err(|e| csv_error(&self.path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            out.push((line, rec));
        }
        Ok(out)
    }

    fn field<T: std::str::FromStr>(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        col: usize,
        name: &str,
    ) -> Result<T> {
        let raw = rec.get(col).unwrap_or("");
        raw.trim()
            .parse()
            .map_err(|_| Error::format(&self.path, line, format!("bad {name} `{raw}`")))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::format(path, line, format!("{kind:?}")),
    }
}

pub fn table_csv(table: &AccuracyTable) -> Vec<u8> {
    render(
        &TABLE_HEADER,
        table
            .iter()
            .map(|((i, k), u)| vec![i.to_string(), k.to_string(), fixed(u)]),
    )
}

pub fn write_table(path: &Path, table: &AccuracyTable) -> Result<()> {
    write_file(path, &table_csv(table))
}

/// Reads a table written by [`write_table`]. Rows must list every cell in
/// `(i, k)` order; errors name the offending line.
pub fn read_table(path: &Path) -> Result<AccuracyTable> {
    let mut rows = Rows::open(path, &TABLE_HEADER)?;
    let records = rows.records()?;
    let Some((last_line, last)) = records.last() else {
        return Err(Error::format(path, 2, "no rows"));
    };
    let n: usize = rows.field(*last_line, last, 0, "i")?;
    let mut entries = Vec::with_capacity(cell_count(n));
    let mut expected = cells(n);
    for (line, rec) in &records {
        if rec.len() != 3 {
            return Err(Error::format(
                path,
                *line,
                format!("expected 3 fields, found {}", rec.len()),
            ));
        }
        let i: usize = rows.field(*line, rec, 0, "i")?;
        let k: usize = rows.field(*line, rec, 1, "k")?;
        let u: f64 = rows.field(*line, rec, 2, "accuracy")?;
        match expected.next() {
            Some(cell) if cell == (i, k) => {}
            Some((ei, ek)) => {
                return Err(Error::format(
                    path,
                    *line,
                    format!("expected cell ({ei}, {ek}), found ({i}, {k})"),
                ))
            }
            None => return Err(Error::format(path, *line, format!("extra cell ({i}, {k})"))),
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::format(
                path,
                *line,
                format!("accuracy {u} outside [0, 1]"),
            ));
        }
        entries.push(u);
    }
    if let Some((ei, ek)) = expected.next() {
        return Err(Error::format(
            path,
            *last_line,
            format!("missing cell ({ei}, {ek})"),
        ));
    }
    Ok(AccuracyTable::new(n, entries)?)
}

/// One table from a file, or every `.csv` table in a directory, sorted by `n`.
pub fn read_tables(path: &Path) -> Result<Vec<(PathBuf, AccuracyTable)>> {
    if !path.is_dir() {
        return Ok(vec![(path.to_path_buf(), read_table(path)?)]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "csv") {
            files.push(p);
        }
    }
    files.sort();
    let mut tables = files
        .into_iter()
        .map(|p| read_table(&p).map(|t| (p, t)))
        .collect::<Result<Vec<_>>>()?;
    if tables.is_empty() {
        return Err(Error::Invalid(format!(
            "{}: no .csv tables found",
            path.display()
        )));
    }
    tables.sort_by_key(|(_, t)| t.n());
    for pair in tables.windows(2) {
        if pair[0].1.n() == pair[1].1.n() {
            return Err(Error::Invalid(format!(
                "{} and {} both hold n = {}",
                pair[0].0.display(),
                pair[1].0.display(),
                pair[0].1.n()
            )));
        }
    }
    Ok(tables)
}

pub fn dataset_header() -> Vec<String> {
    std::iter::once("label".to_string())
        .chain((0..FEATURES).map(|j| format!("f{j}")))
        .collect()
}

pub fn dataset_csv(d: &Dataset) -> Vec<u8> {
    let header = dataset_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    render(
        &header,
        d.samples().iter().map(|s| {
            std::iter::once(s.label.index().to_string())
                .chain(s.features.iter().map(|&f| scientific(f)))
                .collect()
        }),
    )
}

pub fn write_dataset(path: &Path, d: &Dataset) -> Result<()> {
    write_file(path, &dataset_csv(d))
}

pub fn read_dataset(path: &Path, id: DatasetId) -> Result<Dataset> {
    let header = dataset_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Rows::open(path, &header)?;
    let mut samples = Vec::new();
    for (line, rec) in rows.records()? {
        if rec.len() != FEATURES + 1 {
            return Err(Error::format(
                path,
                line,
                format!("expected {} fields, found {}", FEATURES + 1, rec.len()),
            ));
        }
        let label: usize = rows.field(line, &rec, 0, "label")?;
        let label =
            Modulation::from_index(label).map_err(|e| Error::format(path, line, e.to_string()))?;
        let mut features = [0.0; FEATURES];
        for (j, f) in features.iter_mut().enumerate() {
            *f = rows.field(line, &rec, j + 1, "feature")?;
        }
        let sample = SpectrumSample::new(features, label)
            .map_err(|e| Error::format(path, line, e.to_string()))?;
        samples.push(sample);
    }
    Dataset::new(id, samples).map_err(|e| Error::format(path, 1, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub n: usize,
    pub best_utility: f64,
    pub worst_utility: f64,
    pub best_i: usize,
    pub worst_i: usize,
}

pub fn bounds_csv(rows: &[BoundsRow]) -> Vec<u8> {
    render(
        &BOUNDS_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fixed(r.best_utility),
                fixed(r.worst_utility),
                r.best_i.to_string(),
                r.worst_i.to_string(),
            ]
        }),
    )
}

pub fn read_bounds(path: &Path) -> Result<Vec<BoundsRow>> {
    let mut rows = Rows::open(path, &BOUNDS_HEADER)?;
    rows.records()?
        .iter()
        .map(|(line, rec)| {
            Ok(BoundsRow {
                n: rows.field(*line, rec, 0, "n")?,
                best_utility: rows.field(*line, rec, 1, "best_utility")?,
                worst_utility: rows.field(*line, rec, 2, "worst_utility")?,
                best_i: rows.field(*line, rec, 3, "best_i")?,
                worst_i: rows.field(*line, rec, 4, "worst_i")?,
            })
        })
        .collect()
}

/// Pre-formatted rows, used for sweeps.
pub fn rows_csv(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    render(header, rows.iter().cloned())
}

/// [`fixed`] or an empty cell.
pub fn fixed_or_empty(x: Option<f64>) -> String {
    x.map(fixed).unwrap_or_default()
}

/// Numeric CSV with possibly empty cells.
pub fn read_optional_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rows = Rows::open(path, header)?;
    rows.records()?
        .iter()
        .map(|(line, rec)| {
            (0..header.len())
                .map(|c| {
                    if rec.get(c).unwrap_or("").is_empty() {
                        Ok(None)
                    } else {
                        rows.field(*line, rec, c, header[c]).map(Some)
                    }
                })
                .collect()
        })
        .collect()
}
