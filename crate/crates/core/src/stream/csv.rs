use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::sample::{Batch, Sample};
use crate::{Error, Result};

/// Which CSV column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Numeric strings select by index, anything else by header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub batch_size: usize,
    /// Min-max scale features with statistics of the first batch only.
    pub normalize: bool,
}

/// Reads a headed CSV file into batches of `batch_size` rows.
///
/// The class count is the largest label plus one. Row numbers in errors are
/// file line numbers, the header being line 1.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Vec<Batch>> {
    let path = path.as_ref();
    if options.batch_size == 0 {
        return Err(Error::config("batch_size", "must be positive"));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let data_err = |row: usize, reason: String| Error::Data {
        path: path.to_path_buf(),
        row,
        reason,
    };

    let headers = reader
        .headers()
        .map_err(|e| data_err(1, e.to_string()))?
        .clone();
    let label_idx = match &options.label_column {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(data_err(1, format!("label column index {i} out of range")))
        }
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(1, format!("no column named `{name}`")))?,
    };

    let mut rows: Vec<(Vec<f64>, usize)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| data_err(line, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(data_err(
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut features = Vec::with_capacity(headers.len() - 1);
        let mut label = None;
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                let parsed = field
                    .parse::<usize>()
                    .map_err(|_| data_err(line, format!("label `{field}` is not a class index")))?;
                label = Some(parsed);
            } else {
                let v = field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        data_err(line, format!("column {j}: `{field}` is not a finite number"))
                    })?;
                features.push(v);
            }
        }
        rows.push((features, label.expect("label column present")));
    }
    if rows.is_empty() {
        return Err(data_err(2, "file holds no data rows".into()));
    }

    let class_count = rows.iter().map(|(_, l)| *l).max().unwrap_or(0) + 1;
    let scaling = options
        .normalize
        .then(|| min_max(&rows[..options.batch_size.min(rows.len())]));

    let mut batches = Vec::with_capacity(rows.len().div_ceil(options.batch_size));
    for (b, chunk) in rows.chunks(options.batch_size).enumerate() {
        let samples = chunk
            .iter()
            .map(|(f, l)| {
                let f = match &scaling {
                    Some(s) => s.apply(f),
                    None => f.clone(),
                };
                Sample::new(f, *l, class_count)
            })
            .collect::<Result<Vec<_>>>()?;
        batches.push(Batch::new(samples, b + 1)?);
    }
    Ok(batches)
}

struct MinMax {
    low: Vec<f64>,
    span: Vec<f64>,
}

impl MinMax {
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(self.low.iter().zip(&self.span))
            .map(|(v, (lo, span))| (v - lo) / span)
            .collect()
    }
}

fn min_max(rows: &[(Vec<f64>, usize)]) -> MinMax {
    let n = rows[0].0.len();
    let mut low = vec![f64::INFINITY; n];
    let mut high = vec![f64::NEG_INFINITY; n];
    for (f, _) in rows {
        for j in 0..n {
            low[j] = low[j].min(f[j]);
            high[j] = high[j].max(f[j]);
        }
    }
    let span = low
        .iter()
        .zip(&high)
        .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
        .collect();
    MinMax { low, span }
}

/// Writes batches as `f1,…,fn,label` rows. Floats use the shortest
/// round-trip representation so identical streams give identical bytes.
pub fn write_csv<'a>(
    path: impl AsRef<Path>,
    batches: impl IntoIterator<Item = &'a Batch>,
) -> Result<usize> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut rows = 0usize;
    let mut header_written = false;
    for batch in batches {
        if !header_written {
            let mut cols: Vec<String> = (1..=batch.input_dim()).map(|j| format!("f{j}")).collect();
            cols.push("label".into());
            writeln!(out, "{}", cols.join(",")).map_err(|e| Error::io(path, e))?;
            header_written = true;
        }
        for s in batch.samples() {
            let mut line: Vec<String> = s.features().iter().map(|v| v.to_string()).collect();
            line.push(s.label().to_string());
            writeln!(out, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
            rows += 1;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn opts(batch_size: usize) -> CsvOptions {
        CsvOptions {
            label_column: LabelColumn::Name("y".into()),
            batch_size,
            normalize: false,
        }
    }

    #[test]
    fn four_rows_two_batches() {
        let f = write_tmp("a,b,y\n1,2,0\n3,4,1\n5,6,0\n7,8,1\n");
        let batches = load_csv(f.path(), &opts(2)).unwrap();
        assert_eq!(batches.len(), 2);
        assert!(batches.iter().all(|b| b.len() == 2));
        assert_eq!(batches[1].samples()[0].features(), &[5.0, 6.0]);
    }

    #[test]
    fn infers_class_count() {
        let f = write_tmp("y,a\n0,1\n2,1\n1,1\n");
        let mut o = opts(10);
        o.label_column = LabelColumn::Index(0);
        let batches = load_csv(f.path(), &o).unwrap();
        assert_eq!(batches[0].class_count(), 3);
        assert_eq!(batches[0].samples()[1].target(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn missing_file_is_path_error() {
        let err = load_csv("/nonexistent/data.csv", &opts(2)).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/data.csv"));
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_tmp("a,y\n1,0\nx,1\n");
        let err = load_csv(f.path(), &opts(2)).unwrap_err();
        match err {
            Error::Data { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_label_rejected() {
        let f = write_tmp("a,y\n1,0.5\n");
        assert!(matches!(
            load_csv(f.path(), &opts(2)),
            Err(Error::Data { row: 2, .. })
        ));
    }

    #[test]
    fn normalization_uses_first_batch_only() {
        let f = write_tmp("a,y\n0,0\n10,1\n20,0\n");
        let mut o = opts(2);
        o.normalize = true;
        let batches = load_csv(f.path(), &o).unwrap();
        assert_eq!(batches[0].samples()[1].features(), &[1.0]);
        // later values are scaled with the first batch's range, not clipped
        assert_eq!(batches[1].samples()[0].features(), &[2.0]);
    }

    #[test]
    fn write_then_load_preserves_rows() {
        let cfg = super::super::GeneratorConfig::sea(25, 10, 4);
        let batches: Vec<Batch> = super::super::generate(cfg).unwrap().collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sea.csv");
        assert_eq!(write_csv(&path, &batches).unwrap(), 25);
        let back = load_csv(&path, &opts_label(10)).unwrap();
        let a: Vec<&Sample> = batches.iter().flat_map(|b| b.samples()).collect();
        let b: Vec<&Sample> = back.iter().flat_map(|b| b.samples()).collect();
        assert_eq!(a, b);
    }

    fn opts_label(batch_size: usize) -> CsvOptions {
        CsvOptions {
            label_column: LabelColumn::Name("label".into()),
            batch_size,
            normalize: false,
        }
    }
}
