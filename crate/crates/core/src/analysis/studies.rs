use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extremum::{locate_extremum, susceptibility, ExtremumKind, ExtremumLocation};
use super::fit::{fit_size_law, SizeFit};
use super::scan::{correlator_average, scan_order_parameter, scan_otoc, CouplingGrid, OrderState};
use crate::correlators::{otoc_infinite_temperature_at, CorrelatorKind, TimeGrid};
use crate::dynamics::prepare_frame;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::regression::{linear_fit, LinearFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub cutoff: usize,
    /// Raw `F(t)` (real part) at each probe time.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffStudy {
    pub ratio: f64,
    pub probe_times: Vec<f64>,
    pub rows: Vec<CutoffRow>,
    /// Per probe time, `log₂ F` against `log₂ n`.
    pub fits: Vec<LinearFit>,
}

/// Raw infinite-temperature OTOC at fixed probe times as the cutoff grows.
pub fn cutoff_study<M>(make_spec: M, cutoffs: &[usize], ratio: f64, probe_times: &[f64]) -> Result<CutoffStudy>
where
    M: Fn(usize) -> Result<ModelSpec> + Sync,
{
    if cutoffs.len() < 3 {
        return Err(Error::Parameter(format!(
            "cutoff study needs >= 3 cutoffs, got {}",
            cutoffs.len()
        )));
    }
    if probe_times.is_empty() {
        return Err(Error::Parameter("cutoff study needs at least one probe time".into()));
    }
    let rows: Vec<CutoffRow> = cutoffs
        .par_iter()
        .map(|&n| {
            let spec = make_spec(n)?;
            let h = spec.hamiltonian_at_ratio(ratio)?;
            let w = spec.number_operator();
            let frame = prepare_frame(&h, &w, &w)?;
            let values = otoc_infinite_temperature_at(&frame, probe_times)
                .iter()
                .map(|z| z.re)
                .collect();
            Ok(CutoffRow { cutoff: n, values })
        })
        .collect::<Result<_>>()?;
    let x: Vec<f64> = cutoffs.iter().map(|&n| (n as f64).log2()).collect();
    let fits = (0..probe_times.len())
        .map(|k| {
            let y: Vec<f64> = rows
                .iter()
                .map(|r| {
                    let v = r.values[k];
                    if v > 0.0 {
                        Ok(v.log2())
                    } else {
                        Err(Error::Domain(format!(
                            "F = {v} at n = {}, t = {} is not positive",
                            r.cutoff, probe_times[k]
                        )))
                    }
                })
                .collect::<Result<_>>()?;
            linear_fit(&x, &y)
        })
        .collect::<Result<_>>()?;
    Ok(CutoffStudy {
        ratio,
        probe_times: probe_times.to_vec(),
        rows,
        fits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub beta: f64,
    pub temperature: f64,
    pub susceptibility_max: ExtremumLocation,
    pub otoc_min: ExtremumLocation,
}

/// Per β: thermal order-parameter susceptibility maximum and thermal OTOC minimum.
pub fn thermal_drift_study(
    spec: &ModelSpec,
    betas: &[f64],
    grid: &CouplingGrid,
    time: &TimeGrid,
    refine: bool,
) -> Result<Vec<DriftRow>> {
    if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(Error::Parameter(format!(
            "drift study needs positive finite beta, got {b}"
        )));
    }
    let range = (grid.min(), grid.max());
    betas
        .iter()
        .map(|&beta| {
            let order = scan_order_parameter(spec, grid, OrderState::Thermal { beta }, false)?;
            let chi = susceptibility(&order)?;
            let chi_range = (chi.grid.min(), chi.grid.max());
            let susceptibility_max =
                locate_extremum(chi.grid.ratios(), &chi.values, ExtremumKind::Max, chi_range, refine)?;
            let otoc = scan_otoc(spec, grid, CorrelatorKind::OtocThermal { beta }, time)?;
            let otoc_min = locate_extremum(grid.ratios(), &otoc.values, ExtremumKind::Min, range, refine)?;
            Ok(DriftRow {
                beta,
                temperature: 1.0 / beta,
                susceptibility_max,
                otoc_min,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeLawRow {
    pub ratio: f64,
    /// `(N, 1 − F̃)` pairs that were fitted.
    pub points: Vec<(f64, f64)>,
    pub fit: SizeFit,
}

/// Fits `1 − F̃ = a·N^(−b) + c` at each coupling ratio over the atom numbers.
pub fn size_law_study<M>(make_spec: M, atoms: &[usize], ratios: &[f64], time: &TimeGrid) -> Result<Vec<SizeLawRow>>
where
    M: Fn(usize) -> Result<ModelSpec> + Sync,
{
    if atoms.len() < 4 {
        return Err(Error::Parameter(format!(
            "size-law study needs >= 4 atom numbers, got {}",
            atoms.len()
        )));
    }
    let specs: Vec<ModelSpec> = atoms.iter().map(|&n| make_spec(n)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..ratios.len())
        .flat_map(|i| (0..specs.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, j)| {
            correlator_average(&specs[j], ratios[i], CorrelatorKind::OtocInfTemp, time)
                .map(|p| p.value)
                .map_err(|e| e.at_ratio(ratios[i]))
        })
        .collect::<Result<_>>()?;
    ratios
        .iter()
        .enumerate()
        .map(|(i, &ratio)| {
            let points: Vec<(f64, f64)> = atoms
                .iter()
                .enumerate()
                .map(|(j, &n)| (n as f64, 1.0 - values[i * atoms.len() + j]))
                .collect();
            let fit = fit_size_law(&points).map_err(|e| e.at_ratio(ratio))?;
            Ok(SizeLawRow { ratio, points, fit })
        })
        .collect()
}
