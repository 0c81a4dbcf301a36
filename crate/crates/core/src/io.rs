//! Matrix Market and plain-text vector files, and problem directories.
//!
//! Supported Matrix Market headers are
//! `%%MatrixMarket matrix <coordinate|array> <real|integer> <general|symmetric>`,
//! matched case-insensitively. Coordinate entries are 1-based and duplicates
//! are summed. Array data is column-major; symmetric array data lists the
//! lower triangle only.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{RowMatrix, Vector};
use crate::problem::{Problem, ProblemManifest};

/// Largest dense matrix accepted by default (`2²⁶` entries, 512 MiB).
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
}

/// Whitespace-separated tokens with their 1-based starting column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, tok)| (line[..byte].chars().count() + 1, tok))
        .collect()
}

fn parse_header(line: &str) -> Result<(Format, Field, bool)> {
    let toks = tokens(line);
    let get = |k: usize, what: &str| {
        toks.get(k)
            .map(|(c, t)| (*c, t.to_ascii_lowercase()))
            .ok_or_else(|| Error::parse(1, line.chars().count() + 1, format!("missing {what} in header")))
    };
    let (c, banner) = get(0, "banner")?;
    if banner != "%%matrixmarket" {
        return Err(Error::parse(1, c, "expected `%%MatrixMarket` banner"));
    }
    let (c, object) = get(1, "object")?;
    if object != "matrix" {
        return Err(Error::parse(1, c, format!("unsupported object `{}`", toks[1].1)));
    }
    let (c, format) = get(2, "format")?;
    let format = match format.as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        _ => return Err(Error::parse(1, c, format!("unknown format `{}`", toks[2].1))),
    };
    let (c, field) = get(3, "field")?;
    let field = match field.as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "pattern" | "complex" => return Err(Error::UnsupportedField(toks[3].1.to_string())),
        _ => return Err(Error::parse(1, c, format!("unknown field `{}`", toks[3].1))),
    };
    let (c, symmetry) = get(4, "symmetry")?;
    let symmetric = match symmetry.as_str() {
        "general" => false,
        "symmetric" => true,
        "skew-symmetric" | "hermitian" => return Err(Error::UnsupportedField(toks[4].1.to_string())),
        _ => return Err(Error::parse(1, c, format!("unknown symmetry `{}`", toks[4].1))),
    };
    if let Some((c, _)) = toks.get(5) {
        return Err(Error::parse(1, *c, "unexpected token after header"));
    }
    Ok((format, field, symmetric))
}

fn parse_index(line: usize, (col, tok): (usize, &str)) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(line, col, format!("expected a nonnegative integer, found `{tok}`")))
}

fn parse_value(line: usize, (col, tok): (usize, &str), field: Field) -> Result<f64> {
    let v = match field {
        Field::Integer => tok.parse::<i64>().map(|v| v as f64).ok(),
        Field::Real => tok.parse::<f64>().ok(),
    };
    match v {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => Err(Error::parse(line, col, format!("non-finite value `{tok}`"))),
        None => Err(Error::parse(line, col, format!("expected a number, found `{tok}`"))),
    }
}

/// Parses Matrix Market text into a dense matrix.
pub fn parse_matrix_market(text: &str) -> Result<RowMatrix> {
    parse_matrix_market_with_limit(text, DEFAULT_DENSE_LIMIT)
}

/// As [`parse_matrix_market`], refusing matrices with more than `limit` entries.
pub fn parse_matrix_market_with_limit(text: &str, limit: usize) -> Result<RowMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, 1, "empty input"))?;
    let (format, field, symmetric) = parse_header(header)?;
    let mut content = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size) = content
        .next()
        .ok_or_else(|| Error::parse(text.lines().count() + 1, 1, "missing size line"))?;
    let toks = tokens(size);
    let expected = if format == Format::Coordinate { 3 } else { 2 };
    if toks.len() != expected {
        return Err(Error::parse(size_line, 1, format!("size line needs {expected} integers")));
    }
    let nrows = parse_index(size_line, toks[0])?;
    let ncols = parse_index(size_line, toks[1])?;
    if nrows == 0 || ncols == 0 {
        return Err(Error::EmptyMatrix);
    }
    match nrows.checked_mul(ncols) {
        Some(total) if total <= limit => {}
        _ => return Err(Error::TooLarge { nrows, ncols, limit }),
    }
    if symmetric && nrows != ncols {
        return Err(Error::parse(size_line, 1, "symmetric matrix must be square"));
    }
    let mut data = vec![0.0; nrows * ncols];

    let count = match format {
        Format::Coordinate => parse_index(size_line, toks[2])?,
        Format::Array if symmetric => nrows * (nrows + 1) / 2,
        Format::Array => nrows * ncols,
    };
    // every coordinate line holds at least five characters
    if format == Format::Coordinate && count > text.len() / 5 + 1 {
        return Err(Error::parse(size_line, toks[2].0, "entry count exceeds the input length"));
    }

    let mut seen = 0;
    let mut last_line = size_line;
    // position of the next array entry: (row, col)
    let (mut ai, mut aj) = (0usize, 0usize);
    for (ln, line) in content {
        last_line = ln;
        let toks = tokens(line);
        if seen == count {
            return Err(Error::parse(ln, toks[0].0, format!("more than the declared {count} entries")));
        }
        match format {
            Format::Coordinate => {
                if toks.len() != 3 {
                    return Err(Error::parse(ln, 1, "coordinate entry needs `row col value`"));
                }
                let i = parse_index(ln, toks[0])?;
                let j = parse_index(ln, toks[1])?;
                let v = parse_value(ln, toks[2], field)?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(Error::IndexOutOfBounds { row: i, col: j, nrows, ncols, line: ln });
                }
                let (i, j) = (i - 1, j - 1);
                data[i * ncols + j] += v;
                if symmetric && i != j {
                    data[j * ncols + i] += v;
                }
            }
            Format::Array => {
                if toks.len() != 1 {
                    return Err(Error::parse(ln, toks[1].0, "array entry holds a single value"));
                }
                let v = parse_value(ln, toks[0], field)?;
                data[ai * ncols + aj] = v;
                if symmetric {
                    data[aj * ncols + ai] = v;
                }
                ai += 1;
                if ai == nrows {
                    aj += 1;
                    ai = if symmetric { aj } else { 0 };
                }
            }
        }
        seen += 1;
    }
    if seen < count {
        return Err(Error::parse(last_line + 1, 1, format!("expected {count} entries, found {seen}")));
    }
    RowMatrix::new(nrows, ncols, data)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<RowMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Dense `array real general` output with shortest round-trip floats.
pub fn write_matrix_market(a: &RowMatrix, mut w: impl Write) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{:e}", a.get(i, j))?;
        }
    }
    Ok(())
}

/// Sparse `coordinate real general` output listing the nonzero entries.
pub fn write_matrix_market_coordinate(a: &RowMatrix, mut w: impl Write) -> Result<()> {
    let nnz = a.as_slice().iter().filter(|v| **v != 0.0).count();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), nnz)?;
    for (i, row) in a.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

/// One value per line. Blank lines and lines starting with `#` or `%` are skipped.
pub fn parse_vector(text: &str) -> Result<Vector> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let toks = tokens(line);
        if toks.len() != 1 {
            return Err(Error::parse(i + 1, toks[1].0, "one value per line expected"));
        }
        out.push(parse_value(i + 1, toks[0], Field::Real)?);
    }
    Vector::new(out)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vector> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn write_vector(v: &[f64], mut w: impl Write) -> Result<()> {
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    Ok(())
}

pub fn parse_manifest(text: &str) -> Result<ProblemManifest> {
    Ok(serde_json::from_str(text)?)
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes `A.mtx`, `b.txt`, `x_hat.txt` (when known) and `manifest.json`.
pub fn save_problem(problem: &Problem, dir: impl AsRef<Path>, mut manifest: ProblemManifest) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    manifest.m = problem.nrows();
    manifest.n = problem.ncols();
    manifest.lambda = problem.lambda;
    manifest.normalized = problem.normalized;
    manifest.noise_delta = problem.noise_delta;
    manifest.matrix = "A.mtx".into();
    manifest.rhs = "b.txt".into();
    manifest.x_hat = problem.x_hat.as_ref().map(|_| "x_hat.txt".into());
    write_file(&dir.join(&manifest.matrix), |w| write_matrix_market(&problem.a, w))?;
    write_file(&dir.join(&manifest.rhs), |w| write_vector(&problem.b, w))?;
    if let (Some(x), Some(name)) = (&problem.x_hat, &manifest.x_hat) {
        write_file(&dir.join(name), |w| write_vector(x, w))?;
    }
    write_file(&dir.join(MANIFEST_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)?;
        Ok(())
    })
}

/// Loads a directory written by [`save_problem`].
pub fn load_problem_dir(dir: impl AsRef<Path>) -> Result<(Problem, ProblemManifest)> {
    let dir = dir.as_ref();
    let manifest = parse_manifest(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let x_path = manifest.x_hat.as_ref().map(|x| dir.join(x));
    let mut problem = load_problem_files(dir.join(&manifest.matrix), dir.join(&manifest.rhs), x_path, manifest.lambda)?;
    problem.noise_delta = manifest.noise_delta;
    Ok((problem, manifest))
}

/// Builds a problem from a Matrix Market file, a right-hand side and an
/// optional ground truth.
pub fn load_problem_files(
    matrix: impl AsRef<Path>,
    rhs: impl AsRef<Path>,
    x_hat: Option<PathBuf>,
    lambda: f64,
) -> Result<Problem> {
    let a = read_matrix_market(matrix)?;
    let b = read_vector(rhs)?;
    let x = x_hat.map(read_vector).transpose()?;
    Problem::new(a, b, x, lambda)
}
