//! Out-of-time-order and two-point correlators on a uniform time grid.
//!
//! Every β = 0 trace is dimension-normalized: `F(t) = (1/D)·tr(A(t)²)` with
//! `A(t) = W(t)·V`. Per time sample the cost is one block matrix product
//! per sector of the frame; samples are evaluated in parallel and assembled
//! in grid order.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{phases, EvolvedFrame, Sector, ThermalWeights};
use crate::error::{Error, Result};
use crate::regression::{linear_fit, LinearFit};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform grid `t_start, t_start + dt, …` up to `t_end` (inclusive when
/// `t_end − t_start` is a multiple of `dt`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && dt.is_finite()) {
            return Err(Error::Parameter("time grid values must be finite".into()));
        }
        if t_start < 0.0 {
            return Err(Error::Parameter(format!("t_start must be >= 0, got {t_start}")));
        }
        if dt <= 0.0 {
            return Err(Error::Parameter(format!("dt must be > 0, got {dt}")));
        }
        if t_end <= t_start {
            return Err(Error::Parameter(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        let g = Self { t_start, t_end, dt };
        if g.len() < 2 {
            return Err(Error::Parameter(format!(
                "time grid [{t_start}, {t_end}] with dt {dt} has fewer than 2 samples"
            )));
        }
        Ok(g)
    }

    /// `[0, 500]` with `dt = 0.1`: 5001 samples.
    pub fn default_window() -> Self {
        Self {
            t_start: 0.0,
            t_end: 500.0,
            dt: 0.1,
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        // guard against 500/0.1 = 4999.999…
        ((self.t_end - self.t_start) / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelatorKind {
    OtocInfTemp,
    OtocThermal { beta: f64 },
    OtocEquilibrium,
    TpcInfTemp,
}

impl CorrelatorKind {
    pub fn label(&self) -> String {
        match self {
            CorrelatorKind::OtocInfTemp => "otoc_inf_temp".into(),
            CorrelatorKind::OtocThermal { beta } => format!("otoc_thermal(beta={beta})"),
            CorrelatorKind::OtocEquilibrium => "otoc_equilibrium".into(),
            CorrelatorKind::TpcInfTemp => "tpc_inf_temp".into(),
        }
    }
}

/// Correlator samples on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
    /// Raw `t = 0` value the samples were divided by, if normalized.
    pub normalization: Option<f64>,
    pub kind: CorrelatorKind,
}

impl TimeSeries {
    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }
}

/// Per-thread buffers for one sector.
struct SectorScratch {
    /// `exp(iE_a t)` at the current sample.
    phase: Vec<Complex64>,
    /// `exp(iE_a dt)`.
    step: Vec<Complex64>,
    stacked: Mat<f64>,
    product: Mat<f64>,
    wt: Mat<Complex64>,
    a: Mat<Complex64>,
}

impl SectorScratch {
    fn new(s: &Sector, dt: f64, products: bool) -> Self {
        let d = s.dim();
        let real = s.real.is_some();
        let (rr, rc) = if products && real { (2 * d, d) } else { (0, 0) };
        let cd = if products && !real { d } else { 0 };
        Self {
            phase: vec![ZERO; d],
            step: phases(&s.energies, dt),
            stacked: Mat::zeros(rr, rc),
            product: Mat::zeros(rr, rc),
            wt: Mat::zeros(cd, cd),
            a: Mat::zeros(cd, cd),
        }
    }
}

struct Scratch(Vec<SectorScratch>);

impl Scratch {
    fn new(frame: &EvolvedFrame, dt: f64, products: bool) -> Self {
        Self(
            frame
                .sectors
                .iter()
                .map(|s| SectorScratch::new(s, dt, products))
                .collect(),
        )
    }

    fn set_time(&mut self, frame: &EvolvedFrame, t: f64) {
        for (s, scr) in frame.sectors.iter().zip(self.0.iter_mut()) {
            scr.phase = phases(&s.energies, t);
        }
    }

    fn advance(&mut self) {
        for scr in &mut self.0 {
            for (p, st) in scr.phase.iter_mut().zip(&scr.step) {
                *p *= st;
            }
        }
    }
}

/// `Σ_a c_a·[A(t)²]_aa` over local sector indices, `A(t) = W(t)·V`.
fn weighted_a_squared(s: &Sector, scr: &mut SectorScratch, coeff: &[f64]) -> Complex64 {
    let d = s.dim();
    let ph = &scr.phase;
    if let Some((w, v)) = &s.real {
        // W(t) = Wc + i·Ws with Wc_ab = W_ab cos(θ_a−θ_b), Ws_ab = W_ab sin(θ_a−θ_b)
        for b in 0..d {
            let (cb, sb) = (ph[b].re, ph[b].im);
            let wcol = w.col_as_slice(b);
            let col = scr.stacked.col_as_slice_mut(b);
            let (top, bottom) = col.split_at_mut(d);
            for a in 0..d {
                let (ca, sa) = (ph[a].re, ph[a].im);
                let x = wcol[a];
                top[a] = x * (ca * cb + sa * sb);
                bottom[a] = x * (sa * cb - ca * sb);
            }
        }
        matmul(
            scr.product.as_mut(),
            Accum::Replace,
            scr.stacked.as_ref(),
            v.as_ref(),
            1.0,
            Par::Seq,
        );
        let p = &scr.product;
        let mut total = ZERO;
        for (a, &c) in coeff.iter().enumerate().take(d) {
            if c == 0.0 {
                continue;
            }
            let col_a = p.col_as_slice(a);
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..d {
                let col_j = p.col_as_slice(j);
                let (xr, xi) = (col_j[a], col_j[a + d]);
                let (yr, yi) = (col_a[j], col_a[j + d]);
                re += xr * yr - xi * yi;
                im += xr * yi + xi * yr;
            }
            total += Complex64::new(re, im) * c;
        }
        total
    } else {
        for b in 0..d {
            let pb = ph[b].conj();
            for a in 0..d {
                scr.wt[(a, b)] = s.w[(a, b)] * ph[a] * pb;
            }
        }
        matmul(
            scr.a.as_mut(),
            Accum::Replace,
            scr.wt.as_ref(),
            s.v.as_ref(),
            Complex64::new(1.0, 0.0),
            Par::Seq,
        );
        let m = &scr.a;
        let mut total = ZERO;
        for (a, &c) in coeff.iter().enumerate().take(d) {
            if c == 0.0 {
                continue;
            }
            let col_a = m.col_as_slice(a);
            let acc: Complex64 = (0..d).map(|j| m[(a, j)] * col_a[j]).sum();
            total += acc * c;
        }
        total
    }
}

/// `Σ_a coeff[global a]·[A(t)²]_aa` at the phases held in `scratch`.
fn weighted_otoc(frame: &EvolvedFrame, scratch: &mut Scratch, coeff: &[f64], local: &mut Vec<f64>) -> Complex64 {
    let mut total = ZERO;
    for (s, scr) in frame.sectors.iter().zip(scratch.0.iter_mut()) {
        local.clear();
        local.extend(s.positions.iter().map(|&p| coeff[p]));
        if local.iter().all(|&c| c == 0.0) {
            continue;
        }
        total += weighted_a_squared(s, scr, local);
    }
    total
}

/// Samples per work unit. Phases are recomputed at the start of each unit
/// and advanced by `exp(iE·dt)` inside it, so the result does not depend on
/// how units are scheduled.
const CHUNK: usize = 32;

fn sample_series<F>(frame: &EvolvedFrame, grid: &TimeGrid, products: bool, eval: F) -> Vec<Complex64>
where
    F: Fn(&mut Scratch, &mut Vec<f64>) -> Complex64 + Sync,
{
    let n = grid.len();
    let chunks: Vec<Vec<Complex64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map_init(
            || (Scratch::new(frame, grid.dt(), products), Vec::new()),
            |(scr, buf), c| {
                let range = c * CHUNK..((c + 1) * CHUNK).min(n);
                let mut out = Vec::with_capacity(range.len());
                for i in range.clone() {
                    if i == range.start {
                        scr.set_time(frame, grid.time(i));
                    } else {
                        scr.advance();
                    }
                    out.push(eval(scr, buf));
                }
                out
            },
        )
        .collect();
    chunks.concat()
}

fn at_time_zero<F>(frame: &EvolvedFrame, products: bool, eval: F) -> Complex64
where
    F: Fn(&mut Scratch, &mut Vec<f64>) -> Complex64,
{
    let mut scr = Scratch::new(frame, 0.0, products);
    scr.set_time(frame, 0.0);
    eval(&mut scr, &mut Vec::new())
}

fn finish(
    grid: TimeGrid,
    mut values: Vec<Complex64>,
    at_zero: Complex64,
    normalize: bool,
    scale: f64,
    kind: CorrelatorKind,
) -> Result<TimeSeries> {
    let normalization = if normalize {
        let f0 = at_zero.re;
        if !(f0.abs() > 1e-14 * scale) {
            return Err(Error::Domain(format!(
                "cannot normalize {}: t = 0 value {f0:.3e} vanishes",
                kind.label()
            )));
        }
        for v in &mut values {
            *v /= f0;
        }
        Some(f0)
    } else {
        None
    };
    Ok(TimeSeries {
        grid,
        values,
        normalization,
        kind,
    })
}

fn operator_scale(frame: &EvolvedFrame) -> f64 {
    let s = frame.w_eig().max_abs() * frame.v_eig().max_abs();
    s * s
}

/// `F(t) = (1/D)·tr[(W(t)·V)²]`.
pub fn otoc_infinite_temperature(frame: &EvolvedFrame, grid: &TimeGrid, normalize: bool) -> Result<TimeSeries> {
    let coeff = vec![1.0 / frame.dim() as f64; frame.dim()];
    let eval = |scr: &mut Scratch, buf: &mut Vec<f64>| weighted_otoc(frame, scr, &coeff, buf);
    let values = sample_series(frame, grid, true, eval);
    let f0 = at_time_zero(frame, true, eval);
    finish(
        *grid,
        values,
        f0,
        normalize,
        operator_scale(frame),
        CorrelatorKind::OtocInfTemp,
    )
}

/// Unnormalized `F(t)` at arbitrary times.
pub fn otoc_infinite_temperature_at(frame: &EvolvedFrame, times: &[f64]) -> Vec<Complex64> {
    let coeff = vec![1.0 / frame.dim() as f64; frame.dim()];
    times
        .par_iter()
        .map_init(
            || (Scratch::new(frame, 0.0, true), Vec::new()),
            |(scr, buf), &t| {
                scr.set_time(frame, t);
                weighted_otoc(frame, scr, &coeff, buf)
            },
        )
        .collect()
}

/// `F_β(t) = Σ_a w_a·[W(t)·V·W(t)·V]_aa` in the eigenbasis.
pub fn otoc_thermal(
    frame: &EvolvedFrame,
    weights: &ThermalWeights,
    grid: &TimeGrid,
    normalize: bool,
) -> Result<TimeSeries> {
    if weights.dim() != frame.dim() {
        return Err(Error::Shape(format!(
            "{} thermal weights for a frame of dimension {}",
            weights.dim(),
            frame.dim()
        )));
    }
    let coeff = weights.weights();
    let eval = |scr: &mut Scratch, buf: &mut Vec<f64>| weighted_otoc(frame, scr, coeff, buf);
    let values = sample_series(frame, grid, true, eval);
    let f0 = at_time_zero(frame, true, eval);
    finish(
        *grid,
        values,
        f0,
        normalize,
        operator_scale(frame),
        CorrelatorKind::OtocThermal { beta: weights.beta() },
    )
}

/// `x ← W(t)·x` on one sector: `p ∘ (W·(p̄ ∘ x))` with `p = exp(iEt)`.
fn apply_evolved(w: &Mat<Complex64>, p: &[Complex64], x: &[Complex64], tmp: &mut [Complex64], out: &mut [Complex64]) {
    for ((t, pb), xb) in tmp.iter_mut().zip(p).zip(x) {
        *t = pb.conj() * xb;
    }
    apply(w, tmp, out);
    for (o, pa) in out.iter_mut().zip(p) {
        *o *= pa;
    }
}

fn apply(m: &Mat<Complex64>, x: &[Complex64], out: &mut [Complex64]) {
    out.fill(ZERO);
    for (b, xb) in x.iter().enumerate() {
        if *xb == ZERO {
            continue;
        }
        for (o, mab) in out.iter_mut().zip(m.col_as_slice(b)) {
            *o += mab * xb;
        }
    }
}

/// `F_eq(t) = ⟨ψ|W(t)·V·W(t)·V|ψ⟩`; `psi` is given in the computational basis.
pub fn otoc_equilibrium(
    frame: &EvolvedFrame,
    psi: &[Complex64],
    grid: &TimeGrid,
    normalize: bool,
) -> Result<TimeSeries> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("state must have unit norm, got {norm}")));
    }
    let c = frame.state_to_eigenbasis(psi)?;
    // per sector: local coefficients and V·c
    let local: Vec<(Vec<Complex64>, Vec<Complex64>)> = frame
        .sectors
        .iter()
        .map(|s| {
            let cs: Vec<Complex64> = s.positions.iter().map(|&p| c[p]).collect();
            let mut vc = vec![ZERO; cs.len()];
            apply(&s.v, &cs, &mut vc);
            (cs, vc)
        })
        .collect();
    let eval = |scr: &mut Scratch, _: &mut Vec<f64>| -> Complex64 {
        let mut total = ZERO;
        for ((s, (cs, vc)), ss) in frame.sectors.iter().zip(&local).zip(&scr.0) {
            if cs.iter().all(|z| *z == ZERO) {
                continue;
            }
            let d = s.dim();
            let p = &ss.phase;
            let (mut z, mut u, mut x, mut tmp) = (vec![ZERO; d], vec![ZERO; d], vec![ZERO; d], vec![ZERO; d]);
            apply_evolved(&s.w, p, vc, &mut tmp, &mut z);
            apply(&s.v, &z, &mut u);
            apply_evolved(&s.w, p, &u, &mut tmp, &mut x);
            total += cs.iter().zip(&x).map(|(a, b)| a.conj() * b).sum::<Complex64>();
        }
        total
    };
    let values = sample_series(frame, grid, false, eval);
    let f0 = at_time_zero(frame, false, eval);
    finish(
        *grid,
        values,
        f0,
        normalize,
        operator_scale(frame),
        CorrelatorKind::OtocEquilibrium,
    )
}

/// `f(t) = (1/D)·Σ_ab W_ab·exp(i(E_a−E_b)t)·V_ba`.
pub fn tpc_infinite_temperature(frame: &EvolvedFrame, grid: &TimeGrid, normalize: bool) -> Result<TimeSeries> {
    let inv_d = 1.0 / frame.dim() as f64;
    // M_ab = W_ab·V_ba, stored with b contiguous
    let products: Vec<Vec<Complex64>> = frame
        .sectors
        .iter()
        .map(|s| {
            let d = s.dim();
            let mut m = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    m.push(s.w[(a, b)] * s.v[(b, a)]);
                }
            }
            m
        })
        .collect();
    let eval = |scr: &mut Scratch, _: &mut Vec<f64>| -> Complex64 {
        let mut total = ZERO;
        for ((s, m), ss) in frame.sectors.iter().zip(&products).zip(&scr.0) {
            let d = s.dim();
            let p = &ss.phase;
            for a in 0..d {
                let row = &m[a * d..(a + 1) * d];
                let inner: Complex64 = row.iter().zip(p).map(|(x, pb)| x * pb.conj()).sum();
                total += p[a] * inner;
            }
        }
        total * inv_d
    };
    let values = sample_series(frame, grid, false, eval);
    let f0 = at_time_zero(frame, false, eval);
    let scale = (frame.w_eig().max_abs() * frame.v_eig().max_abs()).max(f64::MIN_POSITIVE);
    finish(*grid, values, f0, normalize, scale, CorrelatorKind::TpcInfTemp)
}

/// Trapezoidal average of the real parts over the sampled span.
pub fn time_average(series: &TimeSeries) -> Result<f64> {
    let v = &series.values;
    if v.len() < 2 {
        return Err(Error::Parameter("time average needs at least 2 samples".into()));
    }
    let n = v.len();
    let interior: f64 = v[1..n - 1].iter().map(|z| z.re).sum();
    Ok((interior + 0.5 * (v[0].re + v[n - 1].re)) / (n - 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageMode {
    /// Keeps only the pairings that are stationary for a spectrum without
    /// accidental gap resonances.
    GenericSpectrum,
    /// Sums every index quadruple whose total frequency is below tolerance.
    ResonanceSum,
}

/// Largest dimension accepted by the O(D⁴) resonance sum.
pub const RESONANCE_SUM_MAX_DIM: usize = 40;

/// Infinite-time average of the dimension-normalized β = 0 OTOC.
pub fn otoc_exact_time_average(frame: &EvolvedFrame, mode: AverageMode, freq_tol: f64) -> Result<f64> {
    let d = frame.dim();
    let (w, v) = (frame.w_eig(), frame.v_eig());
    let total = match mode {
        AverageMode::GenericSpectrum => {
            let mut first = ZERO;
            let mut second = ZERO;
            let mut overlap = ZERO;
            for a in 0..d {
                let (waa, vaa) = (w.get(a, a), v.get(a, a));
                for c in 0..d {
                    first += waa * v.get(a, c) * w.get(c, c) * v.get(c, a);
                    second += w.get(a, c) * v.get(c, c) * w.get(c, a) * vaa;
                }
                overlap += (waa * vaa) * (waa * vaa);
            }
            first + second - overlap
        }
        AverageMode::ResonanceSum => {
            if d > RESONANCE_SUM_MAX_DIM {
                return Err(Error::Resource(format!(
                    "resonance sum is O(D^4); dimension {d} exceeds {RESONANCE_SUM_MAX_DIM}"
                )));
            }
            let e = frame.spectral().eigenvalues();
            let tol = freq_tol * frame.spectral().max_abs_eigenvalue();
            let mut acc = ZERO;
            for a in 0..d {
                for b in 0..d {
                    let wab = w.get(a, b);
                    for c in 0..d {
                        let wv = wab * v.get(b, c);
                        for dd in 0..d {
                            if (e[a] - e[b] + e[c] - e[dd]).abs() <= tol {
                                acc += wv * w.get(c, dd) * v.get(dd, a);
                            }
                        }
                    }
                }
            }
            acc
        }
    };
    Ok(total.re / d as f64)
}

/// Early-time exponential decay `F ∝ exp(−λ_L t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub lambda_l: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
}

/// Least squares of `ln Re F` against `t` over the samples in `window`.
pub fn fit_exponential_decay(series: &TimeSeries, window: (f64, f64)) -> Result<ExpFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::Parameter(format!("fit window ({lo}, {hi}) is empty")));
    }
    let slack = 1e-9 * series.grid.dt();
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (i, z) in series.values.iter().enumerate() {
        let t = series.grid.time(i);
        if t >= lo - slack && t <= hi + slack {
            if z.re <= 0.0 {
                return Err(Error::Domain(format!(
                    "non-positive correlator {:.3e} at t = {t} inside the fit window",
                    z.re
                )));
            }
            ts.push(t);
            ys.push(z.re.ln());
        }
    }
    if ts.len() < 3 {
        return Err(Error::Parameter(format!(
            "fit window ({lo}, {hi}) holds {} samples, need >= 3",
            ts.len()
        )));
    }
    let LinearFit {
        slope,
        intercept,
        r_squared,
    } = linear_fit(&ts, &ys)?;
    Ok(ExpFit {
        lambda_l: -slope,
        intercept,
        window,
        r_squared,
    })
}
