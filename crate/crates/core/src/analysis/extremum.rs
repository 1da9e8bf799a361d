use serde::{Deserialize, Serialize};

use super::scan::{CouplingGrid, ScanResult};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremumLocation {
    pub ratio_m: f64,
    pub value_at_m: f64,
    pub refined: bool,
    /// The extremum sits on the edge of the search range; widen the grid.
    pub boundary: bool,
}

/// Grid argmin/argmax inside `range`, optionally refined by the vertex of
/// the parabola through the extremum and its two neighbours.
pub fn locate_extremum(
    ratios: &[f64],
    values: &[f64],
    kind: ExtremumKind,
    range: (f64, f64),
    refine: bool,
) -> Result<ExtremumLocation> {
    if ratios.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} ratios vs {} values",
            ratios.len(),
            values.len()
        )));
    }
    let inside: Vec<usize> = (0..ratios.len())
        .filter(|&i| ratios[i] >= range.0 && ratios[i] <= range.1)
        .collect();
    if inside.len() < 3 {
        return Err(Error::Parameter(format!(
            "extremum search needs >= 3 grid points in [{}, {}], found {}",
            range.0,
            range.1,
            inside.len()
        )));
    }
    let better = |a: f64, b: f64| match kind {
        ExtremumKind::Min => a < b,
        ExtremumKind::Max => a > b,
    };
    let mut best = inside[0];
    for &i in &inside[1..] {
        if better(values[i], values[best]) {
            best = i;
        }
    }
    let boundary = best == inside[0] || best == *inside.last().unwrap();
    let mut loc = ExtremumLocation {
        ratio_m: ratios[best],
        value_at_m: values[best],
        refined: false,
        boundary,
    };
    if refine && !boundary {
        let (x0, x1, x2) = (ratios[best - 1], ratios[best], ratios[best + 1]);
        let (y0, y1, y2) = (values[best - 1], values[best], values[best + 1]);
        if let Some((xv, yv)) = parabola_vertex((x0, y0), (x1, y1), (x2, y2)) {
            loc.ratio_m = xv.clamp(x0, x2);
            loc.value_at_m = yv;
            loc.refined = true;
        }
    }
    Ok(loc)
}

fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> Option<(f64, f64)> {
    let ((x0, y0), (x1, y1), (x2, y2)) = (p0, p1, p2);
    // divided differences: y = y0 + d1 (x − x0) + d2 (x − x0)(x − x1)
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let d2 = (d12 - d01) / (x2 - x0);
    if d2 == 0.0 || !d2.is_finite() {
        return None;
    }
    let xv = 0.5 * (x0 + x1) - d01 / (2.0 * d2);
    let yv = y0 + d01 * (xv - x0) + d2 * (xv - x0) * (xv - x1);
    Some((xv, yv))
}

/// Central-difference derivative with respect to the absolute coupling `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityCurve {
    pub grid: CouplingGrid,
    pub values: Vec<f64>,
    /// `g = ratio·g_c`.
    pub g_c: f64,
}

/// `(v[i+1] − v[i−1]) / (g[i+1] − g[i−1])` on interior points of a uniform grid.
pub fn susceptibility(scan: &ScanResult) -> Result<SusceptibilityCurve> {
    let r = scan.grid.ratios();
    if r.len() < 3 {
        return Err(Error::Parameter(format!(
            "susceptibility needs >= 3 grid points, got {}",
            r.len()
        )));
    }
    let step = r[1] - r[0];
    if r.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9) {
        return Err(Error::Parameter("susceptibility needs a uniformly spaced grid".into()));
    }
    let g_c = scan.meta.g_c;
    let v = &scan.values;
    let values = (1..r.len() - 1)
        .map(|i| (v[i + 1] - v[i - 1]) / ((r[i + 1] - r[i - 1]) * g_c))
        .collect();
    Ok(SusceptibilityCurve {
        grid: CouplingGrid::new(r[1..r.len() - 1].to_vec())?,
        values,
        g_c,
    })
}
