use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::CouplingGrid;
use crate::error::{Error, Result};

/// Coarse grid, optional local grid, then golden-section refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimumSearch {
    pub coarse: CouplingGrid,
    /// `(step, half_window)` of an intermediate uniform grid around the coarse minimum.
    pub local: Option<(f64, f64)>,
    /// Golden-section stops once the bracket is narrower than
    /// `max(abs_tol, rel_tol·|ratio − offset_reference|)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub offset_reference: f64,
    pub max_evaluations: usize,
}

impl MinimumSearch {
    pub fn new(coarse: CouplingGrid) -> Self {
        Self {
            coarse,
            local: None,
            rel_tol: 0.02,
            abs_tol: 1e-9,
            offset_reference: 1.0,
            max_evaluations: 200,
        }
    }

    pub fn with_local(mut self, step: f64, half_window: f64) -> Self {
        self.local = Some((step, half_window));
        self
    }

    pub fn with_tolerance(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.coarse.len() < 3 {
            return Err(Error::Parameter("minimum search needs >= 3 coarse points".into()));
        }
        if !(self.rel_tol >= 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Parameter("search tolerances must be positive".into()));
        }
        if let Some((step, half)) = self.local {
            if !(step > 0.0 && half >= step) {
                return Err(Error::Parameter(format!(
                    "bad local grid: step {step}, half window {half}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub ratio_m: f64,
    pub value_at_m: f64,
    /// The extremum sat on the edge of the coarse range, so no refinement ran.
    pub boundary: bool,
    /// Width of the final bracket.
    pub resolution: f64,
    /// Every evaluated `(ratio, value)` pair, sorted by ratio.
    pub evaluations: Vec<(f64, f64)>,
}

fn eval_many<F>(f: &F, xs: &[f64]) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    xs.par_iter()
        .map(|&x| f(x).map(|v| (x, v)).map_err(|e| e.at_ratio(x)))
        .collect()
}

fn argbest(points: &[(f64, f64)], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        if better(p.1, points[best].1) {
            best = i;
        }
    }
    best
}

fn uniform_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * step).collect()
}

/// Locates the minimum of `f` over the coarse range.
pub fn minimum_search<F>(f: F, search: &MinimumSearch) -> Result<SearchOutcome>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    search.validate()?;
    let mut log = eval_many(&f, search.coarse.ratios())?;
    let best = argbest(&log, |a, b| a < b);
    if best == 0 || best == log.len() - 1 {
        let (ratio_m, value_at_m) = log[best];
        let r = search.coarse.ratios();
        return Ok(SearchOutcome {
            ratio_m,
            value_at_m,
            boundary: true,
            resolution: r[1] - r[0],
            evaluations: log,
        });
    }
    let r = search.coarse.ratios();
    let mut center = log[best].0;
    let mut step = (r[best + 1] - r[best - 1]) / 2.0;

    if let Some((local_step, half)) = search.local {
        let lo = (center - half).max(r[0]);
        let hi = (center + half).min(r[r.len() - 1]);
        let pts = eval_many(&f, &uniform_points(lo, hi, local_step))?;
        let i = argbest(&pts, |a, b| a < b);
        center = pts[i].0;
        step = local_step;
        log.extend(pts);
    }

    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (center - step, center + step);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = f(x1).map_err(|e| e.at_ratio(x1))?;
    let mut f2 = f(x2).map_err(|e| e.at_ratio(x2))?;
    log.push((x1, f1));
    log.push((x2, f2));
    loop {
        let mid = 0.5 * (lo + hi);
        let tol = search
            .abs_tol
            .max(search.rel_tol * (mid - search.offset_reference).abs());
        if hi - lo < tol || log.len() >= search.max_evaluations {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1).map_err(|e| e.at_ratio(x1))?;
            log.push((x1, f1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2).map_err(|e| e.at_ratio(x2))?;
            log.push((x2, f2));
        }
    }
    log.sort_by(|a, b| a.0.total_cmp(&b.0));
    let inside: Vec<(f64, f64)> = log.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi).collect();
    let (ratio_m, value_at_m) = if inside.is_empty() {
        (x1, f1)
    } else {
        inside[argbest(&inside, |a, b| a < b)]
    };
    Ok(SearchOutcome {
        ratio_m,
        value_at_m,
        boundary: false,
        resolution: hi - lo,
        evaluations: log,
    })
}

/// Zooming search for the maximum of the central-difference derivative
/// `d f / d g` with `g = ratio·g_c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakSearch {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Number of grids, the first included.
    pub stages: usize,
    /// Each later grid spans `±half_width_steps` previous steps.
    pub half_width_steps: f64,
    /// Step reduction per stage.
    pub shrink: f64,
}

impl PeakSearch {
    pub fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self {
            lo,
            hi,
            step,
            stages: 6,
            half_width_steps: 3.0,
            shrink: 6.0,
        }
    }

    pub fn with_stages(mut self, stages: usize) -> Self {
        self.stages = stages;
        self
    }
}

/// Locates the ratio where `d f / d g` peaks.
pub fn susceptibility_peak_search<F>(f: F, g_c: f64, search: &PeakSearch) -> Result<SearchOutcome>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(search.step > 0.0 && search.hi - search.lo >= 2.0 * search.step && search.stages >= 1 && search.shrink > 1.0) {
        return Err(Error::Parameter(format!("bad peak search {search:?}")));
    }
    if !(g_c > 0.0) {
        return Err(Error::Parameter(format!("g_c = {g_c} must be positive")));
    }
    let (mut lo, mut hi, mut step) = (search.lo, search.hi, search.step);
    let mut log = Vec::new();
    let mut peak = (0.0, 0.0);
    for stage in 0..search.stages {
        let pts = eval_many(&f, &uniform_points(lo, hi, step))?;
        let deriv: Vec<(f64, f64)> = pts
            .windows(3)
            .map(|w| (w[1].0, (w[2].1 - w[0].1) / ((w[2].0 - w[0].0) * g_c)))
            .collect();
        log.extend(pts);
        let i = argbest(&deriv, |a, b| a > b);
        peak = deriv[i];
        if stage == 0 && (i == 0 || i == deriv.len() - 1) {
            log.sort_by(|a, b| a.0.total_cmp(&b.0));
            return Ok(SearchOutcome {
                ratio_m: peak.0,
                value_at_m: peak.1,
                boundary: true,
                resolution: step,
                evaluations: log,
            });
        }
        lo = peak.0 - search.half_width_steps * step;
        hi = peak.0 + search.half_width_steps * step;
        step /= search.shrink;
    }
    log.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SearchOutcome {
        ratio_m: peak.0,
        value_at_m: peak.1,
        boundary: false,
        resolution: step * search.shrink,
        evaluations: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cusp_to_relative_tolerance() {
        let target = 1.0 + 3.7e-5;
        let f = |r: f64| Ok((r - target).abs().sqrt() + 0.2 * r);
        let s = MinimumSearch::new(CouplingGrid::uniform(0.95, 1.1, 0.01).unwrap());
        let out = minimum_search(f, &s).unwrap();
        assert!(!out.boundary);
        assert!(
            ((out.ratio_m - 1.0) / (target - 1.0) - 1.0).abs() < 0.03,
            "{}",
            out.ratio_m
        );
        assert!(out.evaluations.len() < 60);
    }

    #[test]
    fn local_grid_stage() {
        let f = |r: f64| Ok((r - 1.0213).powi(2));
        let s = MinimumSearch::new(CouplingGrid::uniform(0.5, 1.5, 0.01).unwrap())
            .with_local(0.002, 0.03)
            .with_tolerance(0.0, 1e-7);
        let out = minimum_search(f, &s).unwrap();
        assert!((out.ratio_m - 1.0213).abs() < 1e-6);
    }

    #[test]
    fn monotone_is_boundary() {
        let s = MinimumSearch::new(CouplingGrid::uniform(0.5, 1.5, 0.1).unwrap());
        let out = minimum_search(Ok, &s).unwrap();
        assert!(out.boundary);
        assert_eq!(out.ratio_m, 0.5);
    }

    #[test]
    fn peak_of_smooth_step() {
        let center = 1.0 + 2f64.powf(-9.3);
        let f = |r: f64| Ok(((r - center) * 300.0).tanh());
        let out = susceptibility_peak_search(f, 2.0, &PeakSearch::new(0.8, 1.5, 0.01)).unwrap();
        assert!(!out.boundary);
        assert!((out.ratio_m - center).abs() < 1e-6, "{}", out.ratio_m);
        assert!((out.value_at_m - 150.0).abs() < 1.0);
    }

    #[test]
    fn errors_carry_ratio() {
        let s = MinimumSearch::new(CouplingGrid::uniform(0.5, 1.5, 0.1).unwrap());
        let err = minimum_search(
            |r| {
                if r > 0.95 {
                    Err(Error::Numerical("x".into()))
                } else {
                    Ok(r)
                }
            },
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, Error::AtGridPoint { .. }));
    }
}
