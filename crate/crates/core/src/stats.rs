//! Small statistics toolkit: order statistics, empirical CDFs with
//! Dvoretzky–Kiefer–Wolfowitz bands, and least-squares line fits.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{param, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Linear-interpolated quantile (R type 7) of unsorted data, `p` in [0, 1].
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, p)
}

pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Half-width of the DKW confidence band: sup |F_n - F| <= eps with
/// probability at least 1 - alpha.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical CDF over a sorted sample.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut xs: Vec<f64>) -> Self {
        xs.sort_by(f64::total_cmp);
        Ecdf { sorted: xs }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample that is <= t.
    pub fn cdf(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.sorted.len() as f64
    }

    /// sup_t (other(t) - self(t)), evaluated at every jump of either sample.
    pub fn max_shortfall(&self, other: &Ecdf) -> f64 {
        self.sorted
            .iter()
            .chain(other.sorted.iter())
            .map(|&t| other.cdf(t) - self.cdf(t))
            .fold(0.0, f64::max)
    }
}

/// Ordinary least squares fit of y = intercept + slope * x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (0 for exact fits or two points).
    pub slope_se: f64,
    pub points: usize,
}

impl LineFit {
    /// Two-sided confidence interval for the slope at `level` (e.g. 0.95).
    pub fn slope_ci(&self, level: f64) -> (f64, f64) {
        if self.points <= 2 || self.slope_se == 0.0 {
            return (self.slope, self.slope);
        }
        let t = StudentsT::new(0.0, 1.0, (self.points - 2) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.5 + level / 2.0);
        (self.slope - t * self.slope_se, self.slope + t * self.slope_se)
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(param("line fit needs at least two paired points"));
    }
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(param("line fit needs distinct x values"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_se = if xs.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, r_squared, slope_se, points: xs.len() })
}

/// Fit of ln y against ln x; the slope is the scaling exponent.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.iter().chain(ys).any(|v| *v <= 0.0) {
        return Err(param("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}
