//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature with tail
//! truncation driven by a probability-mass witness.
//!
//! Semi-infinite integrals are cut where the witness mass beyond the cut
//! falls under [`QuadratureSpec::tail_cutoff_mass`]. The cut is located by
//! doubling steps away from the finite limit; the doubling segments double as
//! the initial partition of the adaptive scheme, and doubling continues past
//! the mass cutoff until the segment contributions have visibly converged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Probability mass below which a semi-infinite tail is dropped.
    pub tail_cutoff_mass: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-9,
            absolute_tolerance: 1e-12,
            tail_cutoff_mass: 1e-14,
            max_subdivisions: 5000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::invalid("relative_tolerance must be > 0"));
        }
        if !(self.absolute_tolerance > 0.0) {
            return Err(Error::invalid("absolute_tolerance must be > 0"));
        }
        if !(self.tail_cutoff_mass > 0.0 && self.tail_cutoff_mass <= 1e-6) {
            return Err(Error::invalid("tail_cutoff_mass must lie in (0, 1e-6]"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions must be positive"));
        }
        Ok(())
    }

    /// Error budget for a value of the given magnitude.
    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.absolute_tolerance
            .max(self.relative_tolerance * value.abs())
    }
}

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Mass witness for a semi-infinite tail.
///
/// `mass_beyond(x)` is the probability mass on the far side of `x` (the cdf
/// for a left tail, the survival function for a right tail). `scale` sets the
/// first doubling step.
pub struct TailWitness<'a> {
    pub mass_beyond: &'a dyn Fn(f64) -> f64,
    pub scale: f64,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_977_686_880,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_nan() {
        Err(Error::EvaluationFailure(format!("integrand is NaN at x = {x}")))
    } else {
        Ok(y)
    }
}

/// One 21-point Kronrod rule on [a, b] with the QUADPACK error rescaling.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Estimate> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let h = half.abs();
    let value = res_k * half;
    res_abs *= h;
    res_asc *= h;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        return Err(Error::EvaluationFailure(format!(
            "integrand overflowed on [{a}, {b}]"
        )));
    }
    Ok(Estimate { value, error: err })
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est
            .error
            .total_cmp(&other.est.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn refine<F: Fn(f64) -> f64>(f: &F, pieces: Vec<Piece>, spec: &QuadratureSpec) -> Result<Estimate> {
    let mut heap: BinaryHeap<Piece> = pieces.into_iter().collect();
    // Pieces too narrow to split keep their error but leave the queue.
    let mut frozen = Estimate { value: 0.0, error: 0.0 };
    let mut subdivisions = 0usize;

    loop {
        let (mut total, mut err) = (frozen.value, frozen.error);
        for p in heap.iter() {
            total += p.est.value;
            err += p.est.error;
        }
        if err <= spec.tolerance_for(total) || heap.is_empty() {
            return Ok(Estimate { value: total, error: err });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::NonConvergence {
                subdivisions,
                estimate: total,
                error: err,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let width = (worst.b - worst.a).abs();
        if width <= 64.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(1e-300) || mid == worst.a || mid == worst.b {
            frozen.value += worst.est.value;
            frozen.error += worst.est.error;
            continue;
        }
        let left = kronrod21(f, worst.a, mid)?;
        let right = kronrod21(f, mid, worst.b)?;
        heap.push(Piece { a: worst.a, b: mid, est: left });
        heap.push(Piece { a: mid, b: worst.b, est: right });
        subdivisions += 1;
    }
}

/// Integrate over [a, b] (a may exceed b; the sign follows the orientation).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    integrate_breakpoints(f, &[a, b], spec)
}

/// Integrate over consecutive breakpoints `points[0] .. points[n-1]`, using
/// them as the initial partition (place kinks of the integrand here).
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::invalid("at least two breakpoints are required"));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("breakpoints must be finite"));
    }
    let mut pieces = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        pieces.push(Piece {
            a: w[0],
            b: w[1],
            est: kronrod21(&f, w[0], w[1])?,
        });
    }
    refine(&f, pieces, spec)
}

const MAX_DOUBLINGS: usize = 1000;

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    finite_end: f64,
    side: Side,
    interior: &[f64],
    witness: &TailWitness<'_>,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    spec.validate()?;
    if !finite_end.is_finite() {
        return Err(Error::invalid("finite integration limit required"));
    }
    if !(witness.scale > 0.0 && witness.scale.is_finite()) {
        return Err(Error::invalid("tail witness scale must be positive"));
    }
    let dir = if side == Side::Left { -1.0 } else { 1.0 };

    // Interior breakpoints strictly inside the tail, ordered outward.
    let mut inner: Vec<f64> = interior
        .iter()
        .copied()
        .filter(|&p| p.is_finite() && (p - finite_end) * dir > 0.0)
        .collect();
    inner.sort_by(|a, b| ((a - finite_end) * dir).total_cmp(&((b - finite_end) * dir)));
    inner.dedup();

    let mut outer = finite_end;
    let mut pieces: Vec<Piece> = Vec::new();
    let mut contributions: Vec<f64> = Vec::new();
    let mut step = witness.scale;
    let mut increasing_run = 0usize;
    let mut inner_iter = inner.into_iter().peekable();
    let mut cut_reached = false;
    let mut converged = false;

    for _ in 0..MAX_DOUBLINGS {
        let next = finite_end + dir * step;
        step *= 2.0;
        if !next.is_finite() {
            return Err(Error::DivergentIntegral(
                "tail truncation point overflowed".into(),
            ));
        }
        let mut edges = vec![outer];
        while let Some(&p) = inner_iter.peek() {
            if (p - next) * dir < 0.0 {
                edges.push(p);
                inner_iter.next();
            } else {
                break;
            }
        }
        edges.push(next);
        outer = next;

        let mut segment = 0.0;
        for w in edges.windows(2) {
            let (a, b) = if side == Side::Left { (w[1], w[0]) } else { (w[0], w[1]) };
            let est = kronrod21(&f, a, b)?;
            segment += est.value;
            pieces.push(Piece { a, b, est });
        }
        contributions.push(segment);

        if (witness.mass_beyond)(next) < spec.tail_cutoff_mass {
            cut_reached = true;
        }
        if !cut_reached || inner_iter.peek().is_some() {
            continue;
        }

        let total: f64 = contributions.iter().sum();
        let n = contributions.len();
        let c_last = contributions[n - 1].abs();
        let c_prev = if n >= 2 { contributions[n - 2].abs() } else { f64::INFINITY };
        if c_last == 0.0 && (n < 2 || c_prev == 0.0) {
            converged = true;
            break;
        }
        if n < 2 {
            continue;
        }
        let budget = 0.1 * spec.tolerance_for(total);
        if c_last >= c_prev && c_last > spec.absolute_tolerance {
            increasing_run += 1;
            if increasing_run >= 3 {
                return Err(Error::DivergentIntegral(format!(
                    "tail contributions grow across doublings (last {c_last:e}, previous {c_prev:e})"
                )));
            }
            continue;
        }
        increasing_run = 0;
        let ratio = if c_prev > 0.0 { c_last / c_prev } else { 0.0 };
        let remainder = if ratio < 1.0 { c_last * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if remainder <= budget || c_last <= 1e-3 * budget {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::DivergentIntegral(format!(
            "tail did not settle within {MAX_DOUBLINGS} doublings"
        )));
    }
    refine(&f, pieces, spec)
}

/// Integrate `f` over (-inf, upper]. `breakpoints` are optional interior
/// points below `upper` (kinks of the integrand).
pub fn integrate_left_tail<F: Fn(f64) -> f64>(
    f: F,
    upper: f64,
    breakpoints: &[f64],
    witness: &TailWitness<'_>,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    integrate_tail(f, upper, Side::Left, breakpoints, witness, spec)
}

/// Integrate `f` over [lower, +inf).
pub fn integrate_right_tail<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    breakpoints: &[f64],
    witness: &TailWitness<'_>,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    integrate_tail(f, lower, Side::Right, breakpoints, witness, spec)
}
