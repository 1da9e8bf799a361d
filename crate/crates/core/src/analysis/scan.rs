use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{
    otoc_equilibrium, otoc_infinite_temperature, otoc_thermal, time_average, tpc_infinite_temperature, CorrelatorKind,
    TimeGrid,
};
use crate::dynamics::{ground_state, ground_state_degenerate, prepare_frame, thermal_expectation};
use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// Strictly increasing `g/g_c` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingGrid {
    ratios: Vec<f64>,
}

impl CouplingGrid {
    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::Parameter("coupling grid is empty".into()));
        }
        if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Parameter(format!("coupling ratio {r} must be finite and >= 0")));
        }
        if let Some(w) = ratios.windows(2).find(|w| w[1] - w[0] < 1e-6) {
            return Err(Error::Parameter(format!(
                "coupling grid must increase by at least 1e-6 ({} -> {})",
                w[0], w[1]
            )));
        }
        Ok(Self { ratios })
    }

    /// `lo, lo + step, …, hi` (the end point is kept when within 1e-9·step).
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || hi < lo {
            return Err(Error::Parameter(format!("bad grid range [{lo}, {hi}] step {step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|i| lo + i as f64 * step).collect())
    }

    /// Default figure grid `0.5 … 1.5` in steps of `0.01`.
    pub fn default_scan() -> Self {
        Self::uniform(0.5, 1.5, 0.01).expect("static grid")
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.ratios[0]
    }

    pub fn max(&self) -> f64 {
        *self.ratios.last().unwrap()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub model: String,
    pub eta: f64,
    pub atoms: usize,
    pub gamma: f64,
    pub g_c: f64,
    pub state: String,
    pub cutoff: usize,
    pub t_f: Option<f64>,
    pub dt: Option<f64>,
    pub normalized: bool,
    /// Grid points where the two lowest levels were numerically degenerate.
    pub degenerate_ground: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid: CouplingGrid,
    pub values: Vec<f64>,
    pub meta: ScanMeta,
}

/// Value of one scan point plus whether its ground state was degenerate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub degenerate_ground: bool,
}

fn meta_for(spec: &ModelSpec, state: String, time: Option<&TimeGrid>, normalized: bool) -> ScanMeta {
    ScanMeta {
        model: spec.kind.as_str().into(),
        eta: spec.eta(),
        atoms: spec.spin.atoms(),
        gamma: spec.gamma(),
        g_c: spec.critical_coupling(),
        state,
        cutoff: spec.cutoff.n(),
        t_f: time.map(|g| g.t_end()),
        dt: time.map(|g| g.dt()),
        normalized,
        degenerate_ground: Vec::new(),
    }
}

/// Whether scans of this kind divide by the `t = 0` value. The equilibrium
/// OTOC vanishes identically at `g = 0`, so it is averaged raw.
fn normalizes(kind: &CorrelatorKind) -> bool {
    !matches!(kind, CorrelatorKind::OtocEquilibrium)
}

/// Time-averaged correlator of `W = V = a†a⊗I` at one coupling ratio.
pub fn correlator_average(spec: &ModelSpec, ratio: f64, kind: CorrelatorKind, time: &TimeGrid) -> Result<PointValue> {
    let h = spec.hamiltonian_at_ratio(ratio)?;
    let w = spec.number_operator();
    let frame = prepare_frame(&h, &w, &w)?;
    let norm = normalizes(&kind);
    let series = match kind {
        CorrelatorKind::OtocInfTemp => otoc_infinite_temperature(&frame, time, norm)?,
        CorrelatorKind::OtocThermal { beta } => otoc_thermal(&frame, &frame.thermal_weights(beta)?, time, norm)?,
        CorrelatorKind::OtocEquilibrium => otoc_equilibrium(&frame, &ground_state(frame.spectral()), time, norm)?,
        CorrelatorKind::TpcInfTemp => tpc_infinite_temperature(&frame, time, norm)?,
    };
    Ok(PointValue {
        value: time_average(&series)?,
        degenerate_ground: matches!(kind, CorrelatorKind::OtocEquilibrium) && ground_state_degenerate(frame.spectral()),
    })
}

/// Scans the time-averaged correlator over the coupling grid.
pub fn scan_otoc(spec: &ModelSpec, grid: &CouplingGrid, kind: CorrelatorKind, time: &TimeGrid) -> Result<ScanResult> {
    let points: Vec<PointValue> = grid
        .ratios()
        .par_iter()
        .map(|&r| correlator_average(spec, r, kind, time).map_err(|e| e.at_ratio(r)))
        .collect::<Result<_>>()?;
    let mut meta = meta_for(spec, kind.label(), Some(time), normalizes(&kind));
    meta.degenerate_ground = grid
        .ratios()
        .iter()
        .zip(&points)
        .filter(|(_, p)| p.degenerate_ground)
        .map(|(r, _)| *r)
        .collect();
    Ok(ScanResult {
        grid: grid.clone(),
        values: points.iter().map(|p| p.value).collect(),
        meta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum OrderState {
    Ground,
    Thermal { beta: f64 },
}

impl OrderState {
    pub fn label(&self) -> String {
        match self {
            OrderState::Ground => "ground".into(),
            OrderState::Thermal { beta } => format!("thermal(beta={beta})"),
        }
    }
}

/// `⟨a†a⟩` in the ground state or the thermal state at one coupling ratio.
pub fn order_parameter(spec: &ModelSpec, ratio: f64, state: OrderState) -> Result<PointValue> {
    let h = spec.hamiltonian_at_ratio(ratio)?;
    let w = spec.number_operator();
    let frame = prepare_frame(&h, &w, &w)?;
    let value = match state {
        OrderState::Ground => frame.w_eig().get(0, 0).re,
        OrderState::Thermal { beta } => thermal_expectation(&frame.thermal_weights(beta)?, frame.w_eig()),
    };
    Ok(PointValue {
        value,
        degenerate_ground: matches!(state, OrderState::Ground) && ground_state_degenerate(frame.spectral()),
    })
}

/// Scans `⟨a†a⟩`, optionally divided by the cutoff `n`.
pub fn scan_order_parameter(
    spec: &ModelSpec,
    grid: &CouplingGrid,
    state: OrderState,
    rescale_by_cutoff: bool,
) -> Result<ScanResult> {
    let points: Vec<PointValue> = grid
        .ratios()
        .par_iter()
        .map(|&r| order_parameter(spec, r, state).map_err(|e| e.at_ratio(r)))
        .collect::<Result<_>>()?;
    let scale = if rescale_by_cutoff {
        1.0 / spec.cutoff.n() as f64
    } else {
        1.0
    };
    let mut meta = meta_for(spec, state.label(), None, rescale_by_cutoff);
    meta.degenerate_ground = grid
        .ratios()
        .iter()
        .zip(&points)
        .filter(|(_, p)| p.degenerate_ground)
        .map(|(r, _)| *r)
        .collect();
    Ok(ScanResult {
        grid: grid.clone(),
        values: points.iter().map(|p| p.value * scale).collect(),
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(CouplingGrid::new(vec![]).is_err());
        assert!(CouplingGrid::new(vec![0.5, 0.5]).is_err());
        assert!(CouplingGrid::new(vec![0.6, 0.5]).is_err());
        assert!(CouplingGrid::new(vec![-0.1, 0.5]).is_err());
        assert_eq!(CouplingGrid::default_scan().len(), 101);
        assert_eq!(CouplingGrid::uniform(0.9, 1.1, 0.01).unwrap().len(), 21);
    }

    #[test]
    fn zero_coupling_point_is_one() {
        let spec = ModelSpec::rabi(64.0, 10).unwrap();
        let grid = CouplingGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let time = TimeGrid::new(0.0, 20.0, 0.1).unwrap();
        let s = scan_otoc(&spec, &grid, CorrelatorKind::OtocInfTemp, &time).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!(s.values[2] < 1.0);
        assert_eq!(s.meta.gamma, s.meta.eta * s.meta.atoms as f64);
    }

    #[test]
    fn order_parameter_limits() {
        let spec = ModelSpec::dicke(256.0, 12, 2).unwrap();
        let grid = CouplingGrid::new(vec![0.0, 0.5, 1.3]).unwrap();
        let g = scan_order_parameter(&spec, &grid, OrderState::Ground, false).unwrap();
        assert_eq!(g.values[0], 0.0);
        let hot = scan_order_parameter(&spec, &grid, OrderState::Thermal { beta: 0.0 }, false).unwrap();
        for v in hot.values {
            assert!((v - 5.5).abs() < 1e-10);
        }
    }

    #[test]
    fn errors_name_the_grid_point() {
        let spec = ModelSpec::rabi(4.0, 4).unwrap();
        let grid = CouplingGrid::new(vec![0.5]).unwrap();
        let bad = CorrelatorKind::OtocThermal { beta: -1.0 };
        let err = scan_otoc(&spec, &grid, bad, &TimeGrid::new(0.0, 1.0, 0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::AtGridPoint { ratio, .. } if ratio == 0.5));
        assert!(matches!(err.root(), Error::Parameter(_)));
    }
}
