//! Dictionary and signal files.
//!
//! * dense CSV: one dictionary row per line, no header.
//! * binary: `N` and `K` as little-endian `u32`, then the entries in
//!   column-major order as little-endian `f64`.
//! * vectors: one value per line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use fastl1_core::{DenseDictionary, Dictionary};

pub fn write_dense_csv(path: &Path, a: &DenseDictionary) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..a.nrows() {
        w.write_record((0..a.ncols()).map(|j| format!("{:?}", a.get(i, j))))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dense_csv(path: &Path) -> Result<DenseDictionary> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for rec in r.records() {
        let rec = rec?;
        if *ncols.get_or_insert(rec.len()) != rec.len() {
            bail!("{}: row {} has {} entries", path.display(), nrows + 1, rec.len());
        }
        for field in rec.iter() {
            data.push(field.trim().parse::<f64>().with_context(|| format!("bad number '{field}'"))?);
        }
        nrows += 1;
    }
    let Some(ncols) = ncols else { bail!("{}: empty file", path.display()) };
    Ok(DenseDictionary::from_row_major(nrows, ncols, &data)?)
}

pub fn write_dense_bin(path: &Path, a: &DenseDictionary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&u32::try_from(a.nrows())?.to_le_bytes())?;
    w.write_all(&u32::try_from(a.ncols())?.to_le_bytes())?;
    for v in a.as_col_major() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dense_bin(path: &Path) -> Result<DenseDictionary> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?).read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        bail!("{}: truncated header", path.display());
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into()?) as usize;
    let k = u32::from_le_bytes(bytes[4..8].try_into()?) as usize;
    let body = &bytes[8..];
    if body.len() != n * k * 8 {
        bail!("{}: expected {} bytes of data for {n}x{k}, found {}", path.display(), n * k * 8, body.len());
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(DenseDictionary::from_col_major(n, k, data)?)
}

/// Picks the format from the extension: `.bin` is binary, anything else CSV.
pub fn read_dictionary(path: &Path) -> Result<DenseDictionary> {
    if path.extension().is_some_and(|e| e == "bin") {
        read_dense_bin(path)
    } else {
        read_dense_csv(path)
    }
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().with_context(|| format!("bad number '{l}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseDictionary {
        DenseDictionary::from_rows(&[vec![1.0, -2.5, 1e-300], vec![0.1, 3.0, -0.0]]).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_dense_csv(&p, &sample()).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().next().unwrap(), "1.0,-2.5,1e-300");
        let back = read_dense_csv(&p).unwrap();
        assert_eq!(back.as_col_major(), sample().as_col_major());
    }

    #[test]
    fn binary_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        write_dense_bin(&p, &sample()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 8 + 6 * 8);
        assert_eq!(&bytes[..8], &[2, 0, 0, 0, 3, 0, 0, 0]);
        // second stored value is A[1, 0]
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.1);
        assert_eq!(read_dictionary(&p).unwrap().as_col_major(), sample().as_col_major());
    }

    #[test]
    fn malformed_inputs_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_dense_csv(&p).is_err());
        let b = dir.path().join("bad.bin");
        std::fs::write(&b, [1u8, 0, 0, 0, 1, 0, 0, 0, 0]).unwrap();
        assert!(read_dense_bin(&b).is_err());
    }

    #[test]
    fn vector_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.csv");
        let v = vec![0.1, -1.0 / 3.0, 5e-17];
        write_vector(&p, &v).unwrap();
        assert_eq!(read_vector(&p).unwrap(), v);
    }
}
