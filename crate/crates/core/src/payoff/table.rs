use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of `(x, phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl PayoffTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid("payoff table needs at least two (x, phi) rows"));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("payoff table contains non-finite values"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("payoff table x column must be strictly increasing"));
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("payoff table phi column must be strictly increasing"));
        }
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            // weighted harmonic mean keeps the interpolant monotone
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
        Ok(Self { xs, ys, slopes: m })
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::invalid(format!("payoff table: {e}")))?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "phi" {
            return Err(Error::invalid("payoff table header must be `x,phi`"));
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::invalid(format!("payoff table: {e}")))?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::invalid(format!("payoff table: bad number `{s}`")))
            };
            xs.push(parse(&rec[0])?);
            ys.push(parse(&rec[1])?);
        }
        Self::new(xs, ys)
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

    /// Interpolated value; clamps to the end values outside the table.
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.lower() {
            return self.ys[0];
        }
        if x >= self.upper() {
            return *self.ys.last().unwrap();
        }
        let i = match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }
}
