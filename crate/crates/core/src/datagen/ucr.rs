//! UCR time-series archive files: one series per line, integer class label
//! first, fields separated by tabs, commas or whitespace (detected per file).

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub label: usize,
    pub values: Vec<f64>,
}

/// Train and test splits with labels remapped to `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct UcrData {
    pub train: Vec<LabeledSeries>,
    pub test: Vec<LabeledSeries>,
    /// Original label of each remapped class.
    pub original_labels: Vec<i64>,
}

impl UcrData {
    pub fn classes(&self) -> usize {
        self.original_labels.len()
    }

    pub fn series_len(&self) -> usize {
        self.train.first().map(|s| s.values.len()).unwrap_or(0)
    }

    /// Fraction of the test split carrying its most common label.
    pub fn test_majority_rate(&self) -> f64 {
        let mut counts = vec![0usize; self.classes()];
        for s in &self.test {
            counts[s.label] += 1;
        }
        counts.into_iter().max().unwrap_or(0) as f64 / self.test.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Separator {
    Tab,
    Comma,
    Whitespace,
}

impl Separator {
    fn detect(line: &str) -> Self {
        if line.contains('\t') {
            Separator::Tab
        } else if line.contains(',') {
            Separator::Comma
        } else {
            Separator::Whitespace
        }
    }

    fn split<'a>(self, line: &'a str) -> Box<dyn Iterator<Item = &'a str> + 'a> {
        match self {
            Separator::Tab => Box::new(line.split('\t').map(str::trim)),
            Separator::Comma => Box::new(line.split(',').map(str::trim)),
            Separator::Whitespace => Box::new(line.split_whitespace()),
        }
    }
}

/// Raw rows of one file as `(label, values)`; all rows share the first row's length.
pub fn load_ucr_file(path: &Path) -> Result<Vec<(i64, Vec<f64>)>> {
    let text = std::fs::read_to_string(path)?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut sep = None;
    let mut rows: Vec<(i64, Vec<f64>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let sep = *sep.get_or_insert_with(|| Separator::detect(line));
        let mut fields = sep.split(line.trim());
        let head = fields.next().unwrap_or("");
        let label = head
            .parse::<f64>()
            .ok()
            .filter(|v| v.fract() == 0.0 && v.is_finite())
            .ok_or_else(|| parse_err(lineno, format!("class label {head:?} is not an integer")))?
            as i64;
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("value {f:?} is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(parse_err(lineno, "row has no values".into()));
        }
        if let Some((_, first)) = rows.first() {
            if first.len() != values.len() {
                return Err(shape_err("load_ucr_file", format!("{} values", first.len()), format!("{} values on line {lineno}", values.len())));
            }
        }
        rows.push((label, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

/// Both splits, labels remapped to `0..K` in ascending order of the original labels.
pub fn load_ucr(train: &Path, test: &Path) -> Result<UcrData> {
    let train_rows = load_ucr_file(train)?;
    let test_rows = load_ucr_file(test)?;
    let (len_train, len_test) = (train_rows[0].1.len(), test_rows[0].1.len());
    if len_train != len_test {
        return Err(shape_err("load_ucr", format!("test series of length {len_train}"), len_test));
    }
    let labels: Vec<i64> = train_rows
        .iter()
        .chain(&test_rows)
        .map(|r| r.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let remap = |rows: Vec<(i64, Vec<f64>)>| -> Vec<LabeledSeries> {
        rows.into_iter()
            .map(|(l, values)| LabeledSeries {
                label: labels.binary_search(&l).expect("label collected above"),
                values,
            })
            .collect()
    };
    Ok(UcrData {
        train: remap(train_rows),
        test: remap(test_rows),
        original_labels: labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let train = write(&dir, "train.tsv", "1\t0.5\t-1.25\t2\n3\t1e-1\t0\t-3.5\n\n");
        let test = write(&dir, "test.csv", "5.0,1,2,3\n1,4,5,6\n");
        let data = load_ucr(&train, &test).unwrap();
        assert_eq!(data.original_labels, vec![1, 3, 5]);
        assert_eq!(data.classes(), 3);
        assert_eq!(data.series_len(), 3);
        assert_eq!(
            data.train,
            vec![
                LabeledSeries { label: 0, values: vec![0.5, -1.25, 2.0] },
                LabeledSeries { label: 1, values: vec![0.1, 0.0, -3.5] },
            ]
        );
        assert_eq!(data.test[0], LabeledSeries { label: 2, values: vec![1.0, 2.0, 3.0] });
        assert_eq!(data.test_majority_rate(), 0.5);
    }

    #[test]
    fn whitespace_and_exponent_labels() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(&dir, "a.txt", "  2.0000000e+00   1.0  2.0\n  1.0000000e+00  3.0  4.0\n");
        let rows = load_ucr_file(&f).unwrap();
        assert_eq!(rows, vec![(2, vec![1.0, 2.0]), (1, vec![3.0, 4.0])]);
    }

    #[test]
    fn reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let f = write(&dir, "bad.tsv", "1\t0.5\t1\n\n2\tabc\t1\n");
        match load_ucr_file(&f) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = write(&dir, "ragged.tsv", "1\t0.5\t1\n2\t1\n");
        assert!(matches!(load_ucr_file(&f), Err(Error::Shape { .. })));
        let f = write(&dir, "label.tsv", "1.5\t0.5\t1\n");
        assert!(matches!(load_ucr_file(&f), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load_ucr_file(&dir.path().join("missing")), Err(Error::Io(_))));
    }
}
