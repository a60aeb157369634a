//! File formats: MatrixMarket export/import, spectrum and grid CSV, gnuplot
//! triples, and JSON grid sidecars.
//!
//! Floating-point values are serialized with Rust's shortest-round-trip
//! formatting, so every emitted file can be read back with bit-exact value
//! recovery. CSV files use commas, a header line, and LF line endings.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dual::SparseHermitianMatrix;
use crate::fock::FockSpace;
use crate::hamiltonian::SparseSymmetricMatrix;
use crate::spectral::SpectrumResult;
use crate::thermo::{GridMeta, PhaseGrid};
use crate::{Error, Result};

/// MatrixMarket coordinate format, `real symmetric` kind, 1-based indices.
///
/// Symmetric-kind entries must lie on or below the diagonal, so the stored
/// upper triangle is emitted transposed.
pub fn write_matrix_market<W: Write>(mut w: W, m: &SparseSymmetricMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.dim(), m.dim(), m.nnz_stored())?;
    for &(r, c, v) in m.entries() {
        writeln!(w, "{} {} {}", c + 1, r + 1, v)?;
    }
    Ok(())
}

/// MatrixMarket coordinate format, `complex hermitian` kind.
pub fn write_matrix_market_hermitian<W: Write>(
    mut w: W,
    m: &SparseHermitianMatrix,
) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate complex hermitian")?;
    writeln!(w, "{} {} {}", m.dim(), m.dim(), m.entries().len())?;
    for &(r, c, z) in m.entries() {
        // lower-triangle convention: emit the conjugate-transposed entry
        writeln!(w, "{} {} {} {}", c + 1, r + 1, z.re, -z.im)?;
    }
    Ok(())
}

/// Read a `real` coordinate MatrixMarket file into a sparse symmetric
/// matrix. `general` files must contain a symmetric entry set.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseSymmetricMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty MatrixMarket file".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%MatrixMarket" || fields[1] != "matrix" {
        return Err(Error::Parse("not a MatrixMarket matrix file".into()));
    }
    if fields[2] != "coordinate" || fields[3] != "real" {
        return Err(Error::Parse(format!(
            "unsupported MatrixMarket flavor: {} {}",
            fields[2], fields[3]
        )));
    }
    let symmetric = match fields[4] {
        "symmetric" => true,
        "general" => false,
        other => return Err(Error::Parse(format!("unsupported symmetry kind {other}"))),
    };

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<(u32, u32, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        if dims.is_none() {
            let rows: usize = parse_field(it.next(), "row count")?;
            let cols: usize = parse_field(it.next(), "column count")?;
            let nnz: usize = parse_field(it.next(), "nonzero count")?;
            if rows != cols {
                return Err(Error::Parse(format!("matrix is {rows}x{cols}, not square")));
            }
            dims = Some((rows, cols, nnz));
            continue;
        }
        let i: usize = parse_field(it.next(), "row index")?;
        let j: usize = parse_field(it.next(), "column index")?;
        let v: f64 = parse_field(it.next(), "value")?;
        if i == 0 || j == 0 {
            return Err(Error::Parse("MatrixMarket indices are 1-based".into()));
        }
        let (r0, c0) = (i - 1, j - 1);
        let (lo, hi) = if r0 <= c0 { (r0, c0) } else { (c0, r0) };
        entries.push((lo as u32, hi as u32, v));
    }
    let (dim, _, nnz) = dims.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if entries.len() != nnz {
        return Err(Error::Parse(format!(
            "expected {nnz} entries, found {}",
            entries.len()
        )));
    }
    entries.sort_by_key(|&(r, c, _)| (r, c));
    if !symmetric {
        // a general file carries both triangles; keep one copy of each pair
        // after checking they match
        let mut dedup: Vec<(u32, u32, f64)> = Vec::with_capacity(entries.len());
        for &(r, c, v) in &entries {
            match dedup.last_mut() {
                Some(last) if last.0 == r && last.1 == c => {
                    if (last.2 - v).abs() > 1e-12 * v.abs().max(1.0) {
                        return Err(Error::Parse(format!(
                            "asymmetric general matrix at ({r},{c})"
                        )));
                    }
                }
                _ => dedup.push((r, c, v)),
            }
        }
        entries = dedup;
    }
    SparseSymmetricMatrix::from_upper_triplets(dim, entries)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse {what}")))
}

/// One line of a spectrum CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub index: usize,
    pub eigenvalue: f64,
    pub expected_n: f64,
    pub residual: f64,
}

/// Tabulate a spectrum: per state its energy, `<N>`, and residual norm.
pub fn spectrum_rows(space: &FockSpace, spectrum: &SpectrumResult) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::with_capacity(spectrum.len());
    for i in 0..spectrum.len() {
        rows.push(SpectrumRow {
            index: i,
            eigenvalue: spectrum.eigenvalues()[i],
            expected_n: space.expected_particle_number(&spectrum.eigenvectors()[i])?,
            residual: spectrum.residuals()[i],
        });
    }
    Ok(rows)
}

pub fn write_spectrum_csv<W: Write>(mut w: W, rows: &[SpectrumRow]) -> Result<()> {
    writeln!(w, "index,eigenvalue,expected_n,residual")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.index, row.eigenvalue, row.expected_n, row.residual
        )?;
    }
    Ok(())
}

pub fn read_spectrum_csv<R: BufRead>(r: R) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line != "index,eigenvalue,expected_n,residual" {
                return Err(Error::Parse("unexpected spectrum CSV header".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',');
        rows.push(SpectrumRow {
            index: parse_field(it.next(), "index")?,
            eigenvalue: parse_field(it.next(), "eigenvalue")?,
            expected_n: parse_field(it.next(), "expected_n")?,
            residual: parse_field(it.next(), "residual")?,
        });
    }
    Ok(rows)
}

/// Grid CSV: the header row carries the `t` axis, the first column the `mu`
/// axis, and the corner cell a fixed label.
pub fn write_grid_csv<W: Write>(mut w: W, grid: &PhaseGrid) -> Result<()> {
    write!(w, "mu/t")?;
    for t in grid.t_axis() {
        write!(w, ",{t}")?;
    }
    w.write_all(b"\n")?;
    for (i, mu) in grid.mu_axis().iter().enumerate() {
        write!(w, "{mu}")?;
        for j in 0..grid.cols() {
            write!(w, ",{}", grid.value(i, j))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read back a grid CSV. Returns `(mu_axis, t_axis, row-major values)`.
pub fn read_grid_csv<R: BufRead>(r: R) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty grid CSV".into()))??;
    let mut fields = header.split(',');
    if fields.next() != Some("mu/t") {
        return Err(Error::Parse("unexpected grid CSV corner label".into()));
    }
    let t_axis: Vec<f64> = fields
        .map(|f| f.parse().map_err(|_| Error::Parse("bad t value".into())))
        .collect::<Result<_>>()?;
    let mut mu_axis = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',');
        mu_axis.push(parse_field(it.next(), "mu value")?);
        let row: Vec<f64> = it
            .map(|f| f.parse().map_err(|_| Error::Parse("bad cell value".into())))
            .collect::<Result<_>>()?;
        if row.len() != t_axis.len() {
            return Err(Error::Parse("ragged grid CSV row".into()));
        }
        values.extend(row);
    }
    Ok((mu_axis, t_axis, values))
}

/// Gnuplot-ready three-column `mu t value` data, one block per `mu` row.
pub fn write_grid_gnuplot<W: Write>(mut w: W, grid: &PhaseGrid) -> Result<()> {
    for (i, mu) in grid.mu_axis().iter().enumerate() {
        for (j, t) in grid.t_axis().iter().enumerate() {
            writeln!(w, "{mu} {t} {}", grid.value(i, j))?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read back gnuplot triple data as flat `(mu, t, value)` rows.
pub fn read_grid_gnuplot<R: BufRead>(r: R) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        out.push((
            parse_field(it.next(), "mu")?,
            parse_field(it.next(), "t")?,
            parse_field(it.next(), "value")?,
        ));
    }
    Ok(out)
}

/// JSON sidecar written next to every grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub meta: GridMeta,
    pub flagged: Vec<(usize, usize)>,
}

impl GridSidecar {
    pub fn of(grid: &PhaseGrid) -> Self {
        GridSidecar {
            meta: grid.meta().clone(),
            flagged: grid.flagged().to_vec(),
        }
    }
}

pub fn write_grid_sidecar<W: Write>(w: W, grid: &PhaseGrid) -> Result<()> {
    serde_json::to_writer_pretty(w, &GridSidecar::of(grid))
        .map_err(|e| Error::Parse(format!("sidecar serialization: {e}")))
}

pub fn read_grid_sidecar<R: BufRead>(r: R) -> Result<GridSidecar> {
    serde_json::from_reader(r).map_err(|e| Error::Parse(format!("sidecar parse: {e}")))
}

/// Reassemble a [`PhaseGrid`] from its CSV and sidecar halves.
pub fn grid_from_parts(
    mu_axis: Vec<f64>,
    t_axis: Vec<f64>,
    values: Vec<f64>,
    sidecar: GridSidecar,
) -> Result<PhaseGrid> {
    PhaseGrid::new(mu_axis, t_axis, values, sidecar.flagged, sidecar.meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, HamiltonianParams};
    use crate::spectral::{eigensolve, EigenCount};
    use crate::thermo::{GridObservable, PhaseGrid};
    use std::io::Cursor;

    fn sample_grid() -> PhaseGrid {
        let meta = GridMeta {
            observable: GridObservable::LogZ,
            u: 10.0,
            beta: Some(10.0),
            n_max: 150,
            grand_shift: true,
            level: None,
            threshold: Some(0.125),
        };
        let mu = vec![-1.0, 0.0, 1.0 / 3.0];
        let t = vec![0.1, 0.2];
        let values = vec![
            1.0,
            std::f64::consts::PI,
            -2.5e-17,
            7.0,
            0.1 + 0.2, // deliberately not representable exactly
            -42.0,
        ];
        PhaseGrid::new(mu, t, values, vec![(1, 0)], meta).unwrap()
    }

    #[test]
    fn matrix_market_round_trip() {
        let space = FockSpace::new(50).unwrap();
        let params = HamiltonianParams::new(7.0, -0.3, 1.7, 50).unwrap();
        let h = build_hamiltonian(&space, &params).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &h).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n"));
        let back = read_matrix_market(Cursor::new(buf)).unwrap();
        assert_eq!(back.dim(), h.dim());
        assert_eq!(back.entries().len(), h.entries().len());
        for (a, b) in h.entries().iter().zip(back.entries()) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
            assert_eq!(a.2.to_bits(), b.2.to_bits(), "lossless value recovery");
        }
    }

    #[test]
    fn matrix_market_rejects_garbage() {
        assert!(read_matrix_market(Cursor::new(b"hello\n".to_vec())).is_err());
        let bad = b"%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 5.0\n".to_vec();
        assert!(read_matrix_market(Cursor::new(bad)).is_err());
        let missing = b"%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 5.0\n".to_vec();
        assert!(read_matrix_market(Cursor::new(missing)).is_err());
    }

    #[test]
    fn hermitian_export_shape() {
        let space = FockSpace::new(12).unwrap();
        let params = HamiltonianParams::new(3.0, 0.2, 0.5, 12).unwrap();
        let spec = crate::dual::FlowSpec::seeded(&space, 3, 1.0).unwrap();
        let ht = crate::dual::conjugated_hamiltonian(&space, &spec, &params).unwrap();
        let mut buf = Vec::new();
        write_matrix_market_hermitian(&mut buf, &ht).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate complex hermitian"
        );
        let size: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(size[0], 12);
        assert_eq!(size[2], ht.entries().len());
        assert_eq!(lines.count(), ht.entries().len());
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let space = FockSpace::new(30).unwrap();
        let params = HamiltonianParams::new(5.0, 0.5, 0.9, 30).unwrap();
        let h = build_hamiltonian(&space, &params).unwrap();
        let s = eigensolve(&h, EigenCount::All).unwrap();
        let rows = spectrum_rows(&space, &s).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &rows).unwrap();
        assert!(!String::from_utf8(buf.clone()).unwrap().contains('\r'));
        let back = read_spectrum_csv(Cursor::new(buf)).unwrap();
        assert_eq!(rows.len(), back.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.index, b.index);
            assert_eq!(a.eigenvalue.to_bits(), b.eigenvalue.to_bits());
            assert_eq!(a.expected_n.to_bits(), b.expected_n.to_bits());
            assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        }
    }

    #[test]
    fn grid_csv_round_trip_is_lossless() {
        let grid = sample_grid();
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &grid).unwrap();
        let (mu, t, values) = read_grid_csv(Cursor::new(buf)).unwrap();
        assert_eq!(mu.len(), grid.rows());
        assert_eq!(t.len(), grid.cols());
        for (a, b) in grid.mu_axis().iter().zip(&mu) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in grid.values().iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn sidecar_round_trip() {
        let grid = sample_grid();
        let mut buf = Vec::new();
        write_grid_sidecar(&mut buf, &grid).unwrap();
        let side = read_grid_sidecar(Cursor::new(buf)).unwrap();
        assert_eq!(side.meta, *grid.meta());
        assert_eq!(side.flagged, vec![(1, 0)]);
        let (mut mu, mut t, mut values) = (Vec::new(), Vec::new(), Vec::new());
        let mut csv = Vec::new();
        write_grid_csv(&mut csv, &grid).unwrap();
        if let Ok((m, tt, v)) = read_grid_csv(Cursor::new(csv)) {
            mu = m;
            t = tt;
            values = v;
        }
        let back = grid_from_parts(mu, t, values, side).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn gnuplot_blocks_round_trip() {
        let grid = sample_grid();
        let mut buf = Vec::new();
        write_grid_gnuplot(&mut buf, &grid).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
        assert_eq!(blocks.len(), grid.rows());
        for block in blocks {
            assert_eq!(block.lines().count(), grid.cols());
        }
        let rows = read_grid_gnuplot(Cursor::new(buf)).unwrap();
        assert_eq!(rows.len(), grid.rows() * grid.cols());
        for (k, &(mu, t, v)) in rows.iter().enumerate() {
            let (i, j) = (k / grid.cols(), k % grid.cols());
            assert_eq!(mu.to_bits(), grid.mu_axis()[i].to_bits());
            assert_eq!(t.to_bits(), grid.t_axis()[j].to_bits());
            assert_eq!(v.to_bits(), grid.value(i, j).to_bits());
        }
    }
}
