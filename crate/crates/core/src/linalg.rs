//! Small dense linear-algebra helpers shared across modules.

use std::io::{self, BufRead, Write};

use nalgebra::{Complex, DMatrix, DVector};

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Largest real part over the spectrum of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    a.nrows() == 0 || spectral_abscissa(a) < 0.0
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest and largest eigenvalue of the symmetric part of `m`.
pub fn sym_eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let ev = symmetrize(m).symmetric_eigenvalues();
    (ev.min(), ev.max())
}

pub fn sym_lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eig_range(m).1
}

pub fn sym_lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eig_range(m).0
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm2(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = sym_eig_range(m);
    lo.abs().max(hi.abs())
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Cholesky factor L (P = L Lᵀ), or the 0-based index of the first
/// leading principal minor that is not positive definite.
pub fn cholesky_lower(p: &DMatrix<f64>) -> Result<DMatrix<f64>, usize> {
    let n = p.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = p[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = p[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Selects rows and columns `idx` of `m`.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Writes the plain-text matrix dump: `rows cols` then one line per row.
pub fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix<R: BufRead>(r: R) -> io::Result<DMatrix<f64>> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut tokens = Vec::new();
    for line in r.lines() {
        tokens.extend(line?.split_whitespace().map(str::to_string));
    }
    let mut it = tokens.into_iter();
    let rows: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing row count"))?;
    let cols: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing column count"))?;
    let vals: Vec<f64> = it
        .map(|s| s.parse::<f64>().map_err(|_| bad("invalid value")))
        .collect::<Result<_, _>>()?;
    if vals.len() != rows * cols {
        return Err(bad("value count does not match dimensions"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reports_failing_minor() {
        let p = DMatrix::from_row_slice(3, 3, &[4.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        assert_eq!(cholesky_lower(&p), Err(2));
        let q = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky_lower(&q).unwrap();
        assert!((&l * l.transpose() - q).norm() < 1e-14);
    }

    #[test]
    fn matrix_dump_round_trip() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -2.5, 1e-300, 0.1, 3.0, f64::MAX]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("2 3\n"));
        assert_eq!(read_matrix(&buf[..]).unwrap(), m);
    }
}
