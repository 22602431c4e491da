use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

/// Time series of state vectors, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: DMatrix<f64>,
    labels: Vec<String>,
    derivs: Option<DMatrix<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: DMatrix<f64>, labels: Vec<String>) -> Self {
        assert_eq!(times.len(), states.nrows(), "one state row per time");
        assert_eq!(labels.len(), states.ncols(), "one label per state column");
        Trajectory { times, states, labels, derivs: None }
    }

    /// Attaches time derivatives used for Hermite interpolation.
    pub fn with_derivatives(mut self, derivs: DMatrix<f64>) -> Self {
        assert_eq!(derivs.shape(), self.states.shape());
        self.derivs = Some(derivs);
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.states.ncols());
        self.labels = labels;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn derivatives(&self) -> Option<&DMatrix<f64>> {
        self.derivs.as_ref()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, i: usize) -> DVector<f64> {
        self.states.row(i).transpose()
    }

    pub fn last_state(&self) -> DVector<f64> {
        self.state(self.len() - 1)
    }

    /// Applies a linear map to every state: rows become `(m · x)ᵀ`.
    pub fn map_linear(&self, m: &DMatrix<f64>, labels: Vec<String>) -> Trajectory {
        let states = &self.states * m.transpose();
        let derivs = self.derivs.as_ref().map(|d| d * m.transpose());
        Trajectory { times: self.times.clone(), states, labels, derivs }
    }

    /// Keeps only the listed state columns.
    pub fn select(&self, cols: &[usize]) -> Trajectory {
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])]);
        Trajectory {
            times: self.times.clone(),
            states: pick(&self.states),
            labels: cols.iter().map(|&c| self.labels[c].clone()).collect(),
            derivs: self.derivs.as_ref().map(pick),
        }
    }

    fn slopes(&self) -> DMatrix<f64> {
        if let Some(d) = &self.derivs {
            return d.clone();
        }
        // Three-point finite-difference slopes on a nonuniform grid.
        let n = self.len();
        let y = &self.states;
        let t = &self.times;
        let mut d = DMatrix::zeros(n, self.dim());
        if n < 2 {
            return d;
        }
        for j in 0..self.dim() {
            if n == 2 {
                let s = (y[(1, j)] - y[(0, j)]) / (t[1] - t[0]);
                d[(0, j)] = s;
                d[(1, j)] = s;
                continue;
            }
            for i in 0..n {
                let (a, b, c) = if i == 0 {
                    (0, 1, 2)
                } else if i == n - 1 {
                    (n - 3, n - 2, n - 1)
                } else {
                    (i - 1, i, i + 1)
                };
                // Derivative of the quadratic through (a, b, c) evaluated at t_i.
                let (ta, tb, tc) = (t[a], t[b], t[c]);
                let ti = t[i];
                let la = (2.0 * ti - tb - tc) / ((ta - tb) * (ta - tc));
                let lb = (2.0 * ti - ta - tc) / ((tb - ta) * (tb - tc));
                let lc = (2.0 * ti - ta - tb) / ((tc - ta) * (tc - tb));
                d[(i, j)] = la * y[(a, j)] + lb * y[(b, j)] + lc * y[(c, j)];
            }
        }
        d
    }

    /// Cubic Hermite interpolation; clamps outside the sampled range.
    pub fn interpolate(&self, t: f64) -> DVector<f64> {
        self.interpolator().eval(t)
    }

    /// Prepared interpolator (slopes computed once).
    pub fn interpolator(&self) -> Interpolator<'_> {
        Interpolator { traj: self, slopes: self.slopes() }
    }

    /// Samples the trajectory at new times by cubic interpolation.
    pub fn resample(&self, times: &[f64]) -> Trajectory {
        let ip = self.interpolator();
        let states = DMatrix::from_fn(times.len(), self.dim(), |i, j| ip.eval(times[i])[j]);
        Trajectory::new(times.to_vec(), states, self.labels.clone())
    }

    /// Writes `t,<label1>,...` followed by one row per sample.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "t,{}", self.labels.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:.16e}", self.times[i])];
            row.extend((0..self.dim()).map(|j| format!("{:.16e}", self.states[(i, j)])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub struct Interpolator<'a> {
    traj: &'a Trajectory,
    slopes: DMatrix<f64>,
}

impl Interpolator<'_> {
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let tr = self.traj;
        let ts = &tr.times;
        let n = ts.len();
        if n == 1 || t <= ts[0] {
            return tr.state(0);
        }
        if t >= ts[n - 1] {
            return tr.state(n - 1);
        }
        let i = match ts.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return tr.state(i),
            Err(i) => i - 1,
        };
        let h = ts[i + 1] - ts[i];
        let s = (t - ts[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        DVector::from_fn(tr.dim(), |j, _| {
            h00 * tr.states[(i, j)]
                + h10 * h * self.slopes[(i, j)]
                + h01 * tr.states[(i + 1, j)]
                + h11 * h * self.slopes[(i + 1, j)]
        })
    }
}

/// Time series of symmetric covariance matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CovTrajectory {
    times: Vec<f64>,
    covs: Vec<DMatrix<f64>>,
}

impl CovTrajectory {
    pub fn new(times: Vec<f64>, covs: Vec<DMatrix<f64>>) -> Self {
        assert_eq!(times.len(), covs.len());
        CovTrajectory { times, covs }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covs
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.covs.last().expect("non-empty covariance trajectory")
    }

    /// Marginal variance of component `i` at every time.
    pub fn variance(&self, i: usize) -> Vec<f64> {
        self.covs.iter().map(|x| x[(i, i)]).collect()
    }

    /// Output covariance C X Cᵀ at every time.
    pub fn project(&self, c: &DMatrix<f64>) -> CovTrajectory {
        CovTrajectory {
            times: self.times.clone(),
            covs: self.covs.iter().map(|x| c * x * c.transpose()).collect(),
        }
    }

    /// Largest |X - Xᵀ| over all samples.
    pub fn max_asymmetry(&self) -> f64 {
        self.covs
            .iter()
            .map(|x| crate::linalg::max_abs(&(x - x.transpose())))
            .fold(0.0, f64::max)
    }

    /// Writes `t,cov_<i>_<j>` with 1-based upper-triangle pairs in row-major order.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let n = self.covs.first().map_or(0, |x| x.nrows());
        let mut header = vec!["t".to_string()];
        for i in 0..n {
            for j in i..n {
                header.push(format!("cov_{}_{}", i + 1, j + 1));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.covs) {
            let mut row = vec![format!("{t:.16e}")];
            for i in 0..n {
                for j in i..n {
                    row.push(format!("{:.16e}", x[(i, j)]));
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_with_exact_slopes_is_accurate() {
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let states = DMatrix::from_fn(times.len(), 1, |i, _| times[i].sin());
        let derivs = DMatrix::from_fn(times.len(), 1, |i, _| times[i].cos());
        let tr = Trajectory::new(times, states, vec!["s".into()]).with_derivatives(derivs);
        for k in 0..100 {
            let t = 0.037 * k as f64;
            assert!((tr.interpolate(t)[0] - t.sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn finite_difference_slopes_reproduce_quadratics() {
        let times = vec![0.0, 0.3, 1.0, 1.2, 2.0];
        let states = DMatrix::from_fn(5, 1, |i, _| times[i] * times[i]);
        let tr = Trajectory::new(times, states, vec!["q".into()]);
        for t in [0.1, 0.5, 1.1, 1.7] {
            assert!((tr.interpolate(t)[0] - t * t).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_csv_header() {
        let ct = CovTrajectory::new(vec![0.0], vec![DMatrix::identity(3, 3)]);
        let mut buf = Vec::new();
        ct.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,cov_1_1,cov_1_2,cov_1_3,cov_2_2,cov_2_3,cov_3_3\n"));
    }
}
