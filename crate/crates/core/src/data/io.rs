use std::io::{BufRead, Read, Write};

use super::{Dataset, Task};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reads `label idx:val idx:val …` lines with strictly increasing 1-based
/// indices. The feature dimension is the largest index seen.
pub fn parse_sparse_text<R: BufRead>(reader: R, task: Task) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0usize;

    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let text = line.trim_end_matches('\r');
        if text.trim().is_empty() {
            continue;
        }
        let mut tokens = tokens_with_columns(text);
        let (col, label_tok) = tokens.next().expect("non-empty line has a token");
        let label = label_tok.parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            column: col,
            message: format!("bad label `{label_tok}`"),
        })?;
        let mut row = Vec::new();
        let mut last = 0usize;
        for (col, tok) in tokens {
            let bad = |message: String| Error::Parse {
                line: line_no,
                column: col,
                message,
            };
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("expected idx:val, got `{tok}`")))?;
            let idx = i
                .parse::<usize>()
                .map_err(|_| bad(format!("bad index `{i}`")))?;
            if idx == 0 {
                return Err(bad("indices are 1-based".into()));
            }
            if idx <= last {
                return Err(bad(format!("index {idx} does not increase after {last}")));
            }
            let val = v
                .parse::<f64>()
                .map_err(|_| bad(format!("bad value `{v}`")))?;
            last = idx;
            row.push((idx - 1, val));
        }
        dim = dim.max(last);
        labels.push(label);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut x = Matrix::zeros(rows.len(), dim);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            x.set(i, j, v);
        }
    }
    Dataset::new(x, labels, task)
}

/// Whitespace-separated tokens with their 1-based starting column.
fn tokens_with_columns(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut start = None;
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &text[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &text[s..]));
    }
    out.into_iter()
}

/// Writes the sparse text format; zero features are omitted and values use
/// the shortest representation that parses back to the same float.
pub fn write_sparse_text<W: Write>(data: &Dataset, mut w: W) -> Result<()> {
    let mut out = String::new();
    for i in 0..data.len() {
        out.push_str(&format!("{:?}", data.y()[i]));
        for (j, &v) in data.row(i).iter().enumerate() {
            if v != 0.0 {
                out.push_str(&format!(" {}:{:?}", j + 1, v));
            }
        }
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    First,
    Last,
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = Error;

    /// `first`, `last`, `-1` (last) or a 0-based column index.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(LabelColumn::First),
            "last" | "-1" => Ok(LabelColumn::Last),
            _ => s
                .parse::<usize>()
                .map(LabelColumn::Index)
                .map_err(|_| Error::invalid(format!("bad label column `{s}`"))),
        }
    }
}

/// Reads a rectangular numeric CSV. A first row containing any non-numeric
/// cell is treated as a header and skipped.
pub fn parse_csv<R: Read>(reader: R, label: LabelColumn, task: Task) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut width = None;
    let mut labels = Vec::new();
    let mut feats = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: n + 1,
            column: 1,
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(n + 1, |p| p.line() as usize);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = rec
            .iter()
            .enumerate()
            .map(|(c, s)| s.parse::<f64>().map_err(|_| c + 1))
            .collect();
        if n == 0 && parsed.iter().any(|p| p.is_err()) {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("ragged row: {} cells, expected {w}", rec.len()),
            });
        }
        let mut row = Vec::with_capacity(w);
        for p in parsed {
            row.push(p.map_err(|column| Error::Parse {
                line,
                column,
                message: "non-numeric cell".into(),
            })?);
        }
        let li = match label {
            LabelColumn::First => 0,
            LabelColumn::Last => w - 1,
            LabelColumn::Index(i) if i < w => i,
            LabelColumn::Index(i) => {
                return Err(Error::invalid(format!(
                    "label column {i} out of range for {w} columns"
                )))
            }
        };
        labels.push(row.remove(li));
        feats.push(row);
    }
    if feats.is_empty() {
        return Err(Error::EmptyInput);
    }
    Dataset::new(Matrix::from_rows(&feats)?, labels, task)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_single_line() {
        let d = parse_sparse_text(&b"1 1:0.5 3:2.0\n"[..], Task::Regression).unwrap();
        assert_eq!(d.y(), &[1.0]);
        assert_eq!(d.row(0), &[0.5, 0.0, 2.0]);
    }

    #[test]
    fn sparse_two_lines_crlf() {
        let d = parse_sparse_text(&b"-1 2:1\r\n1 1:1\r\n"[..], Task::Binary).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.len(), 2);
        assert_eq!(d.row(0), &[0.0, 1.0]);
        assert_eq!(d.y(), &[-1.0, 1.0]);
    }

    #[test]
    fn sparse_errors_carry_position() {
        match parse_sparse_text(&b"1 1:0.5\n2 2:1 x:3\n"[..], Task::Regression) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 7)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_sparse_text(&b"1 3:1 2:1\n"[..], Task::Regression),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_sparse_text(&b"1 1:abc\n"[..], Task::Regression),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_sparse_text(&b"\n\n"[..], Task::Regression),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn sparse_round_trip() {
        let x =
            Matrix::from_rows(&[vec![0.1 + 0.2, 0.0, -1e-7], vec![0.0, 3.0, 1.0 / 3.0]]).unwrap();
        let d = Dataset::new(x, vec![0.7, -2.5], Task::Regression).unwrap();
        let mut buf = Vec::new();
        write_sparse_text(&d, &mut buf).unwrap();
        let back = parse_sparse_text(&buf[..], Task::Regression).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn binary_zero_one_labels_are_remapped() {
        let d = parse_sparse_text(&b"0 1:1\n1 1:2\n"[..], Task::Binary).unwrap();
        assert_eq!(d.y(), &[-1.0, 1.0]);
        assert!(matches!(
            parse_sparse_text(&b"2 1:1\n"[..], Task::Binary),
            Err(Error::InvalidLabel { .. })
        ));
    }

    #[test]
    fn csv_header_and_label_positions() {
        let first = parse_csv(
            &b"y,a,b\n1,2,3\n4,5,6\n"[..],
            LabelColumn::First,
            Task::Regression,
        )
        .unwrap();
        let last = parse_csv(&b"2,3,1\n5,6,4\n"[..], LabelColumn::Last, Task::Regression).unwrap();
        assert_eq!(first, last);
        assert_eq!(first.y(), &[1.0, 4.0]);
        assert_eq!(first.row(1), &[5.0, 6.0]);

        let mid = parse_csv(
            &b"2,1,3\n5,4,6\n"[..],
            LabelColumn::Index(1),
            Task::Regression,
        )
        .unwrap();
        assert_eq!(mid, first);
    }

    #[test]
    fn csv_single_row() {
        let d = parse_csv(&b"1.5,2\n"[..], LabelColumn::First, Task::Regression).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.row(0), &[2.0]);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            parse_csv(&b"1,2\n3,4,5\n"[..], LabelColumn::First, Task::Regression),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv(&b"1,2\n3,x\n"[..], LabelColumn::First, Task::Regression),
            Err(Error::Parse {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            parse_csv(&b""[..], LabelColumn::First, Task::Regression),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn label_column_parsing() {
        assert_eq!("last".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
        assert_eq!("-1".parse::<LabelColumn>().unwrap(), LabelColumn::Last);
        assert_eq!("0".parse::<LabelColumn>().unwrap(), LabelColumn::Index(0));
        assert!("x".parse::<LabelColumn>().is_err());
    }
}
