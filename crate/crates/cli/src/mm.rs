//! Matrix Market I/O: dense `array` and sparse `coordinate` formats,
//! real field, general symmetry. Vectors additionally load from plain
//! whitespace-separated text.
//!
//! Parse failures carry the file name and 1-based line number.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use tlscond::{DMatrix, DVector};

#[derive(Debug)]
pub struct ParseError {
    pub file: PathBuf,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file.display(), self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err(file: &Path, line: usize, message: impl Into<String>) -> ParseError {
    ParseError { file: file.to_path_buf(), line, message: message.into() }
}

struct Lines {
    // (1-based line number, content)
    items: Vec<(usize, String)>,
    pos: usize,
}

impl Lines {
    fn new(text: &str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim().to_string()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { items, pos: 0 }
    }

    /// Next non-comment line (owned, so error paths can re-inspect self).
    fn next_data(&mut self) -> Option<(usize, String)> {
        while self.pos < self.items.len() {
            let (num, line) = &self.items[self.pos];
            self.pos += 1;
            if !line.starts_with('%') {
                return Some((*num, line.clone()));
            }
        }
        None
    }

    fn last_line_number(&self) -> usize {
        self.items.last().map(|(n, _)| *n).unwrap_or(0)
    }
}

enum Layout {
    Array,
    Coordinate,
}

/// Read a Matrix Market file into a dense matrix. Coordinate entries are
/// densified; unspecified entries are zero. Duplicate coordinate entries
/// are rejected.
pub fn read_matrix_market(path: &Path) -> Result<DMatrix<f64>, ParseError> {
    let text = fs::read_to_string(path)
        .map_err(|e| err(path, 0, format!("cannot read file: {e}")))?;
    let mut lines = Lines::new(&text);

    // Header: %%MatrixMarket matrix <layout> <field> <symmetry>
    let header = lines
        .items
        .first()
        .cloned()
        .ok_or_else(|| err(path, 1, "empty file"))?;
    let (header_line, header_text) = (header.0, header.1);
    let tokens: Vec<&str> = header_text.split_whitespace().collect();
    if tokens.len() != 5 || !tokens[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(err(
            path,
            header_line,
            "expected header '%%MatrixMarket matrix <format> real general'",
        ));
    }
    if !tokens[1].eq_ignore_ascii_case("matrix") {
        return Err(err(path, header_line, format!("unsupported object '{}'", tokens[1])));
    }
    let layout = match tokens[2].to_ascii_lowercase().as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(err(path, header_line, format!("unsupported format '{other}'"))),
    };
    if !tokens[3].eq_ignore_ascii_case("real") {
        return Err(err(path, header_line, format!("unsupported field '{}', only real", tokens[3])));
    }
    if !tokens[4].eq_ignore_ascii_case("general") {
        return Err(err(
            path,
            header_line,
            format!("unsupported symmetry '{}', only general", tokens[4]),
        ));
    }
    lines.pos = 1; // past the header

    // Size line.
    let (size_line, size_text) = lines
        .next_data()
        .ok_or_else(|| err(path, lines.last_line_number(), "missing size line"))?;
    let dims: Vec<&str> = size_text.split_whitespace().collect();

    let parse_dim = |s: &str, what: &str, line: usize| -> Result<usize, ParseError> {
        s.parse::<usize>()
            .ok()
            .filter(|&v| v > 0 || what == "nnz")
            .ok_or_else(|| err(path, line, format!("invalid {what} '{s}'")))
    };

    match layout {
        Layout::Array => {
            if dims.len() != 2 {
                return Err(err(path, size_line, "array size line must be 'rows cols'"));
            }
            let rows = parse_dim(dims[0], "row count", size_line)?;
            let cols = parse_dim(dims[1], "column count", size_line)?;
            rows.checked_mul(cols)
                .filter(|&t| t <= 100_000_000)
                .ok_or_else(|| err(path, size_line, "dimensions overflow"))?;
            // Array data is column-major, one value per line (extra values
            // per line tolerated).
            let mut values = Vec::with_capacity(rows * cols);
            while values.len() < rows * cols {
                let (line_no, data) = lines.next_data().ok_or_else(|| {
                    err(
                        path,
                        lines.last_line_number(),
                        format!("expected {} values, got {}", rows * cols, values.len()),
                    )
                })?;
                for tok in data.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| err(path, line_no, format!("invalid real value '{tok}'")))?;
                    values.push(v);
                }
            }
            if values.len() > rows * cols {
                return Err(err(
                    path,
                    lines.last_line_number(),
                    format!("expected {} values, got {}", rows * cols, values.len()),
                ));
            }
            Ok(DMatrix::from_column_slice(rows, cols, &values))
        }
        Layout::Coordinate => {
            if dims.len() != 3 {
                return Err(err(path, size_line, "coordinate size line must be 'rows cols nnz'"));
            }
            let rows = parse_dim(dims[0], "row count", size_line)?;
            let cols = parse_dim(dims[1], "column count", size_line)?;
            let nnz = parse_dim(dims[2], "nnz", size_line)?;
            rows.checked_mul(cols)
                .filter(|&t| t <= 100_000_000)
                .ok_or_else(|| err(path, size_line, "dimensions overflow"))?;
            let mut m = DMatrix::zeros(rows, cols);
            let mut seen = vec![false; rows * cols];
            for _ in 0..nnz {
                let (line_no, data) = lines.next_data().ok_or_else(|| {
                    err(path, lines.last_line_number(), format!("expected {nnz} entries"))
                })?;
                let toks: Vec<&str> = data.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(err(path, line_no, "coordinate entry must be 'i j value'"));
                }
                let i: usize = toks[0]
                    .parse()
                    .map_err(|_| err(path, line_no, format!("invalid row index '{}'", toks[0])))?;
                let j: usize = toks[1]
                    .parse()
                    .map_err(|_| err(path, line_no, format!("invalid column index '{}'", toks[1])))?;
                if i < 1 || i > rows || j < 1 || j > cols {
                    return Err(err(path, line_no, format!("index ({i}, {j}) out of bounds")));
                }
                let v: f64 = toks[2]
                    .parse()
                    .map_err(|_| err(path, line_no, format!("invalid real value '{}'", toks[2])))?;
                if seen[(j - 1) * rows + (i - 1)] {
                    return Err(err(path, line_no, format!("duplicate entry ({i}, {j})")));
                }
                seen[(j - 1) * rows + (i - 1)] = true;
                m[(i - 1, j - 1)] = v;
            }
            if lines.next_data().is_some() {
                return Err(err(path, lines.last_line_number(), "trailing data after entries"));
            }
            Ok(m)
        }
    }
}

/// Read a right-hand-side vector: either a Matrix Market `m x 1` matrix or
/// a plain file of whitespace-separated numbers.
pub fn read_vector(path: &Path) -> Result<DVector<f64>, ParseError> {
    let text = fs::read_to_string(path)
        .map_err(|e| err(path, 0, format!("cannot read file: {e}")))?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        let m = read_matrix_market(path)?;
        if m.ncols() != 1 {
            return Err(err(path, 1, format!("expected a column vector, got {} columns", m.ncols())));
        }
        return Ok(m.column(0).into());
    }
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(path, i + 1, format!("invalid real value '{tok}'")))?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(err(path, 1, "no values in vector file"));
    }
    Ok(DVector::from_vec(values))
}

/// Write in array format with 17 significant digits, so reading back is
/// exact.
#[cfg_attr(not(test), allow(dead_code))]
pub fn write_matrix_market(path: &Path, m: &DMatrix<f64>) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push_str(&format!("{:.16e}\n", m[(i, j)]));
        }
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn write_temp(content: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_array_identity() {
        let f = write_temp(
            "%%MatrixMarket matrix array real general\n% comment\n2 2\n1.0\n0.0\n0.0\n1.0\n",
        );
        let m = read_matrix_market(f.path()).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2));
    }

    #[test]
    fn reads_coordinate_with_implicit_zeros() {
        let f = write_temp(
            "%%MatrixMarket matrix coordinate real general\n3 2 3\n1 1 5.0\n3 2 -1.5\n2 1 2.0\n",
        );
        let m = read_matrix_market(f.path()).unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m[(0, 0)], 5.0);
        assert_eq!(m[(1, 0)], 2.0);
        assert_eq!(m[(2, 1)], -1.5);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(2, 0)], 0.0);
    }

    #[test]
    fn rejects_complex_field_with_line_number() {
        let f = write_temp("%%MatrixMarket matrix array complex general\n2 2\n");
        let e = read_matrix_market(f.path()).unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("complex"));
    }

    #[test]
    fn rejects_bad_value_with_line_number() {
        let f = write_temp("%%MatrixMarket matrix array real general\n2 1\n1.0\nnope\n");
        let e = read_matrix_market(f.path()).unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn rejects_out_of_bounds_coordinate() {
        let f = write_temp("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
        let e = read_matrix_market(f.path()).unwrap_err();
        assert!(e.message.contains("out of bounds"));
    }

    #[test]
    fn rejects_symmetric_header() {
        let f = write_temp("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 1.0\n");
        assert!(read_matrix_market(f.path()).is_err());
    }

    #[test]
    fn vector_from_plain_text_and_mm() {
        let plain = write_temp("1.5\n-2.0 3.0\n");
        let v = read_vector(plain.path()).unwrap();
        assert_eq!(v.as_slice(), &[1.5, -2.0, 3.0]);

        let mm = write_temp("%%MatrixMarket matrix array real general\n2 1\n4.0\n5.0\n");
        let v = read_vector(mm.path()).unwrap();
        assert_eq!(v.as_slice(), &[4.0, 5.0]);

        let wide = write_temp("%%MatrixMarket matrix array real general\n1 2\n4.0\n5.0\n");
        assert!(read_vector(wide.path()).is_err());
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let m = DMatrix::from_row_slice(
            2,
            3,
            &[std::f64::consts::PI, -1.0 / 3.0, 1e-300, 2.5e17, f64::MIN_POSITIVE, -0.0],
        );
        let f = NamedTempFile::new().unwrap();
        write_matrix_market(f.path(), &m).unwrap();
        let back = read_matrix_market(f.path()).unwrap();
        assert_eq!(m, back);
    }
}
