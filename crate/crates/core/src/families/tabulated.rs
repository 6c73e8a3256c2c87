//! Density tables.
//!
//! The pdf is the piecewise-linear interpolant of the `(x, pdf)` rows and the
//! cdf is its exact running integral: the monotone cubic Hermite interpolant
//! of the trapezoidal cumulative masses with the tabulated densities as node
//! slopes. Both are consistent to rounding, so pdf/cdf identities used by the
//! measures hold on tables exactly as they do on closed forms.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Relative deviation of the trapezoidal mass from 1 accepted before
/// renormalising.
pub const MASS_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    xs: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    /// Running integral of the cdf at each node.
    cdf_integral: Vec<f64>,
}

impl DensityTable {
    pub fn new(xs: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        if xs.len() != pdf.len() {
            return Err(Error::invalid("x and pdf columns differ in length"));
        }
        if xs.len() < 2 {
            return Err(Error::invalid("density table needs at least two rows"));
        }
        if xs.iter().chain(pdf.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("density table contains non-finite values"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("density table x column must be strictly increasing"));
        }
        if pdf.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid("density table pdf values must be non-negative"));
        }
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (pdf[i - 1] + pdf[i]) * (xs[i] - xs[i - 1]);
        }
        let mass = *cdf.last().unwrap();
        if !(mass > 0.0) || (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!(
                "density table integrates to {mass}, expected 1"
            )));
        }
        let pdf: Vec<f64> = pdf.into_iter().map(|p| p / mass).collect();
        for c in cdf.iter_mut() {
            *c /= mass;
        }
        let mut table = Self { xs, pdf, cdf, cdf_integral: Vec::new() };
        let mut acc = vec![0.0; table.xs.len()];
        for i in 1..table.xs.len() {
            let h = table.xs[i] - table.xs[i - 1];
            acc[i] = acc[i - 1] + table.segment_cdf_integral(i - 1, h);
        }
        table.cdf_integral = acc;
        Ok(table)
    }

    /// Parse a CSV document with header `x,pdf`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::invalid(format!("density table: {e}")))?
            .clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "pdf" {
            return Err(Error::invalid("density table header must be `x,pdf`"));
        }
        let (mut xs, mut ps) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::invalid(format!("density table: {e}")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("density table: bad number `{s}`")))
            };
            xs.push(parse(&rec[0])?);
            ps.push(parse(&rec[1])?);
        }
        Self::new(xs, ps)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn lower(&self) -> f64 {
        self.xs[0]
    }

    pub fn upper(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    fn segment(&self, x: f64) -> usize {
        // index i with xs[i] <= x < xs[i+1]
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    fn slope(&self, i: usize) -> f64 {
        (self.pdf[i + 1] - self.pdf[i]) / (self.xs[i + 1] - self.xs[i])
    }

    fn segment_cdf_integral(&self, i: usize, t: f64) -> f64 {
        let s = self.slope(i);
        self.cdf[i] * t + 0.5 * self.pdf[i] * t * t + s * t * t * t / 6.0
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lower() || x > self.upper() {
            return 0.0;
        }
        let i = self.segment(x);
        let t = x - self.xs[i];
        (self.pdf[i] + self.slope(i) * t).max(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower() {
            return 0.0;
        }
        if x >= self.upper() {
            return 1.0;
        }
        let i = self.segment(x);
        let t = x - self.xs[i];
        (self.cdf[i] + self.pdf[i] * t + 0.5 * self.slope(i) * t * t).clamp(0.0, 1.0)
    }

    /// `∫_{-inf}^x F(t) dt`.
    pub fn cdf_integral(&self, x: f64) -> f64 {
        if x <= self.lower() {
            return 0.0;
        }
        if x >= self.upper() {
            return *self.cdf_integral.last().unwrap() + (x - self.upper());
        }
        let i = self.segment(x);
        self.cdf_integral[i] + self.segment_cdf_integral(i, x - self.xs[i])
    }

    pub fn mean(&self) -> f64 {
        self.upper() - *self.cdf_integral.last().unwrap()
    }

    /// Inverse cdf by segment search and the quadratic within the segment.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => return self.xs[i],
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        };
        let (c0, p0, s) = (self.cdf[i], self.pdf[i], self.slope(i));
        let h = self.xs[i + 1] - self.xs[i];
        let target = u - c0;
        // 0.5 s t^2 + p0 t - target = 0, stable root.
        let t = if s.abs() < 1e-300 {
            if p0 > 0.0 { target / p0 } else { 0.5 * h }
        } else {
            let disc = (p0 * p0 + 2.0 * s * target).max(0.0);
            2.0 * target / (p0 + disc.sqrt())
        };
        self.xs[i] + t.clamp(0.0, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> DensityTable {
        DensityTable::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn triangle_cdf_and_pdf() {
        let t = triangle();
        assert_eq!(t.cdf(0.0), 0.5);
        assert!((t.cdf(-0.5) - 0.125).abs() < 1e-15);
        assert_eq!(t.pdf(0.5), 0.5);
        assert_eq!(t.pdf(2.0), 0.0);
        assert_eq!(t.cdf(2.0), 1.0);
        assert_eq!(t.cdf(-2.0), 0.0);
    }

    #[test]
    fn cdf_integral_is_put_price() {
        let t = triangle();
        // E[(0 - X)^+] for the symmetric triangle = 1/6.
        assert!((t.cdf_integral(0.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!(t.mean().abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = triangle();
        for &u in &[0.01, 0.125, 0.5, 0.77, 0.999] {
            assert!((t.cdf(t.quantile(u)) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(DensityTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DensityTable::new(vec![0.0, 1.0], vec![-1.0, 3.0]).is_err());
        assert!(DensityTable::new(vec![0.0, 1.0], vec![5.0, 5.0]).is_err());
    }

    #[test]
    fn csv_header_is_mandatory() {
        let good = "x,pdf\n-1,0\n0,1\n1,0\n";
        assert!(DensityTable::from_csv_reader(good.as_bytes()).is_ok());
        let bad = "a,b\n-1,0\n0,1\n1,0\n";
        assert!(DensityTable::from_csv_reader(bad.as_bytes()).is_err());
    }
}
