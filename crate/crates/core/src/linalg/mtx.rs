//! MatrixMarket coordinate format (ASCII, real).
//!
//! Symmetric matrices are written with the `symmetric` qualifier and only
//! their lower triangle; everything else is written as `general`. Values use
//! 17 significant digits so that a write/read cycle is exact.

use std::io::{BufRead, Write};

use super::CsrMatrix;
use crate::{Error, Result};

const BANNER: &str = "%%MatrixMarket matrix coordinate real";

pub fn write<W: Write>(mut w: W, m: &CsrMatrix, symmetric: bool) -> Result<()> {
    if symmetric && !m.is_structurally_symmetric_exact() {
        return Err(Error::NotSymmetric(f64::NAN));
    }
    let entries: Vec<_> = m
        .triplets()
        .filter(|&(i, j, _)| !symmetric || j <= i)
        .collect();
    writeln!(w, "{BANNER} {}", if symmetric { "symmetric" } else { "general" })?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    let symmetric = if lower.ends_with("symmetric") {
        true
    } else if lower.ends_with("general") {
        false
    } else {
        return Err(Error::Parse(format!("unsupported symmetry qualifier: {header}")));
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut field = |what: &str| {
            it.next()
                .ok_or_else(|| Error::Parse(format!("missing {what} in line '{t}'")))
        };
        match size {
            None => {
                let rows = parse_usize(field("rows")?)?;
                let cols = parse_usize(field("cols")?)?;
                let nnz = parse_usize(field("nnz")?)?;
                size = Some((rows, cols, nnz));
                triplets.reserve(nnz * if symmetric { 2 } else { 1 });
            }
            Some(_) => {
                let i = parse_usize(field("row index")?)?;
                let j = parse_usize(field("col index")?)?;
                let v: f64 = field("value")?
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad value in '{t}': {e}")))?;
                if i == 0 || j == 0 {
                    return Err(Error::Parse("MatrixMarket indices are 1-based".into()));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| j <= i).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(rows, cols, &triplets)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|e| Error::Parse(format!("bad integer '{s}': {e}")))
}

pub fn write_file(path: &std::path::Path, m: &CsrMatrix, symmetric: bool) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write(&mut w, m, symmetric)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: &std::path::Path) -> Result<CsrMatrix> {
    let f = std::fs::File::open(path)?;
    read(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_header_and_lower_triangle() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 5.0)]).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &m, true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n"));
        assert_eq!(read(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read("%%MatrixMarket matrix array real general\n".as_bytes()).is_err());
        assert!(read("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n".as_bytes()).is_err());
        assert!(read("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n".as_bytes()).is_err());
    }

    #[test]
    fn asymmetric_matrix_cannot_be_written_symmetric() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(write(Vec::new(), &m, true).is_err());
    }

    proptest! {
        #[test]
        fn general_write_read_is_exact(
            entries in proptest::collection::vec((0usize..6, 0usize..4, -1e6f64..1e6), 0..20)
        ) {
            let m = CsrMatrix::from_triplets(6, 4, &entries).unwrap();
            let mut buf = Vec::new();
            write(&mut buf, &m, false).unwrap();
            prop_assert_eq!(read(&buf[..]).unwrap(), m);
        }
    }
}
