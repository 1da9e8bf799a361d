use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::linear_fit;

/// Line fitted to `log₂(g_m/g_c − 1)` against `log₂` of the control parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    /// Base-2 intercept.
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    /// The critical exponent, `−slope`.
    pub fn exponent(&self) -> f64 {
        -self.slope
    }
}

fn fit_log2_offsets(points: &[(f64, f64)], what: &str) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!(
            "{what} scaling fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    let mut x = Vec::with_capacity(points.len());
    let mut y = Vec::with_capacity(points.len());
    for &(p, ratio_m) in points {
        if !(p > 0.0) {
            return Err(Error::Domain(format!("{what} = {p} must be positive")));
        }
        if !(ratio_m > 1.0) {
            return Err(Error::Domain(format!(
                "g_m/g_c = {ratio_m} at {what} = {p} is not above 1; the minimum is unresolved, refine the grid"
            )));
        }
        x.push(p.log2());
        y.push((ratio_m - 1.0).log2());
    }
    let f = linear_fit(&x, &y)?;
    Ok(PowerLawFit {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        points: points.len(),
    })
}

/// `log₂(g_m/g_c − 1) ∼ −k·log₂ η` from `(η, g_m/g_c)` pairs.
pub fn fit_scaling_eta(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    fit_log2_offsets(points, "eta")
}

/// `log₂(g_m/g_c − 1) ∼ −κ·log₂ γ` from `(γ, g_m/g_c)` pairs.
pub fn fit_scaling_gamma(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    fit_log2_offsets(points, "gamma")
}

/// `y = a·N^(−b) + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Root-mean-square misfit.
    pub residual: f64,
}

const B_MAX: f64 = 5.0;
const B_GRID_STEP: f64 = 1e-3;

/// Linear least squares for `(a, c)` at fixed `b`; returns `(a, c, sum of squares)`.
fn inner_fit(ns: &[f64], ys: &[f64], b: f64) -> (f64, f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|n| n.powf(-b)).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let (a, c) = if sxx <= 1e-300 {
        (0.0, my)
    } else {
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let a = sxy / sxx;
        (a, my - a * mx)
    };
    let ss = xs.iter().zip(ys).map(|(x, y)| (y - a * x - c).powi(2)).sum();
    (a, c, ss)
}

/// Nested fit: grid search over `b ∈ [0, 5]` (step 1e-3), then golden-section
/// refinement around the best grid point; `(a, c)` solved in closed form.
/// Ties in residual resolve toward the smallest `b`.
pub fn fit_size_law(points: &[(f64, f64)]) -> Result<SizeFit> {
    if points.len() < 4 {
        return Err(Error::Parameter(format!(
            "size-law fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    let ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    if ns.iter().any(|n| !(*n > 0.0)) {
        return Err(Error::Parameter("atom counts must be positive".into()));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Fit(
            "degenerate design: N values must be strictly increasing".into(),
        ));
    }
    if ys.iter().any(|y| !(*y > 0.0 && *y < 1.0)) {
        return Err(Error::Parameter("size-law values must lie in (0, 1)".into()));
    }

    let steps = (B_MAX / B_GRID_STEP).round() as usize;
    let mut best_b = 0.0;
    let mut best_ss = inner_fit(&ns, &ys, 0.0).2;
    for i in 1..=steps {
        let b = i as f64 * B_GRID_STEP;
        let ss = inner_fit(&ns, &ys, b).2;
        if ss < best_ss * (1.0 - 1e-12) && best_ss - ss > 1e-300 {
            best_b = b;
            best_ss = ss;
        }
    }

    if best_ss > 0.0 {
        let (mut lo, mut hi) = ((best_b - B_GRID_STEP).max(0.0), (best_b + B_GRID_STEP).min(B_MAX));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = inner_fit(&ns, &ys, x1).2;
        let mut f2 = inner_fit(&ns, &ys, x2).2;
        while hi - lo > 1e-13 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = inner_fit(&ns, &ys, x1).2;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = inner_fit(&ns, &ys, x2).2;
            }
        }
        let b = 0.5 * (lo + hi);
        if inner_fit(&ns, &ys, b).2 < best_ss {
            best_b = b;
        }
    }
    let (a, c, ss) = inner_fit(&ns, &ys, best_b);
    let b = if a == 0.0 { 0.0 } else { best_b };
    Ok(SizeFit {
        a,
        b,
        c,
        residual: (ss / ns.len() as f64).sqrt(),
    })
}
