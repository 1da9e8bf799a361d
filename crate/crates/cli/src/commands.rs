use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use otoc_core::analysis::{
    correlator_average, cutoff_study, fit_scaling_eta, fit_scaling_gamma, fit_size_law, locate_extremum,
    minimum_search, order_parameter, scan_order_parameter, scan_otoc, susceptibility, susceptibility_peak_search,
    thermal_drift_study, CouplingGrid, ExtremumKind, MinimumSearch, OrderState, PeakSearch, PowerLawFit, ScanResult,
};
use otoc_core::correlators::{
    fit_exponential_decay, otoc_equilibrium, otoc_infinite_temperature, otoc_thermal, tpc_infinite_temperature,
};
use otoc_core::dynamics::ground_state;
use otoc_core::{prepare_frame, BosonCutoff, CorrelatorKind, ModelKind, ModelSpec, SpinLength, TimeGrid};

use crate::config::{KindTag, Observable, RunConfig, StateTag, Sweep};
use crate::error::CliError;
use crate::output::{envelope, Column, Table, Writer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Trace,
    Scan,
    Scaling,
    OrderParam,
    SizeFit,
    CutoffStudy,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Scan => "scan",
            Command::Scaling => "scaling",
            Command::OrderParam => "order-param",
            Command::SizeFit => "size-fit",
            Command::CutoffStudy => "cutoff-study",
        }
    }
}

/// Runs one command and returns the files it wrote.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Writer::new(&cfg.output)?;
    let result = match command {
        Command::Trace => trace(cfg, &mut out),
        Command::Scan => scan(cfg, &mut out),
        Command::Scaling => scaling(cfg, &mut out),
        Command::OrderParam => order_param(cfg, &mut out),
        Command::SizeFit => size_fit(cfg, &mut out),
        Command::CutoffStudy => cutoff(cfg, &mut out),
    };
    result.map(|_| out.written)
}

fn model_spec(cfg: &RunConfig, eta: f64, atoms: usize) -> Result<ModelSpec, CliError> {
    if !(cfg.omega0 > 0.0 && cfg.omega0.is_finite()) {
        return Err(CliError::config("omega0", format!("{} must be positive", cfg.omega0)));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(CliError::config("eta", format!("{eta} must be positive")));
    }
    if cfg.model == ModelKind::Rabi && atoms != 1 {
        return Err(CliError::config(
            "atoms",
            "the Rabi model has a single atom; use model = dicke",
        ));
    }
    Ok(ModelSpec {
        kind: cfg.model,
        omega0: cfg.omega0,
        omega: eta * cfg.omega0,
        cutoff: BosonCutoff::new(cfg.n).map_err(|e| CliError::config("n", e.to_string()))?,
        spin: SpinLength::new(atoms).map_err(|e| CliError::config("atoms", e.to_string()))?,
    })
}

fn time_grid(cfg: &RunConfig) -> Result<TimeGrid, CliError> {
    TimeGrid::new(cfg.t_start, cfg.t_end, cfg.dt).map_err(|e| CliError::config("dt", e.to_string()))
}

fn coupling_grid(cfg: &RunConfig) -> Result<CouplingGrid, CliError> {
    let grid = CouplingGrid::uniform(cfg.ratio_min, cfg.ratio_max, cfg.ratio_step)
        .map_err(|e| CliError::config("ratio_step", e.to_string()))?;
    if grid.len() < 3 {
        return Err(CliError::config(
            "ratio_step",
            format!("the coupling grid has {} point(s); at least 3 are needed", grid.len()),
        ));
    }
    Ok(grid)
}

fn checked_betas(cfg: &RunConfig) -> Result<&[f64], CliError> {
    if cfg.beta.is_empty() {
        return Err(CliError::config("beta", "empty list"));
    }
    if let Some(b) = cfg.beta.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(CliError::config(
            "beta",
            format!("{b} is not a finite non-negative number"),
        ));
    }
    Ok(&cfg.beta)
}

/// Correlator kinds with the β list expanded, plus a file-name tag for each.
fn correlator_kinds(cfg: &RunConfig) -> Result<Vec<(String, CorrelatorKind)>, CliError> {
    if cfg.kind.is_empty() {
        return Err(CliError::config("kind", "empty list"));
    }
    let mut out = Vec::new();
    for k in &cfg.kind {
        match k {
            KindTag::OtocInf => out.push((k.as_str().to_string(), CorrelatorKind::OtocInfTemp)),
            KindTag::OtocEq => out.push((k.as_str().to_string(), CorrelatorKind::OtocEquilibrium)),
            KindTag::Tpc => out.push((k.as_str().to_string(), CorrelatorKind::TpcInfTemp)),
            KindTag::OtocThermal => {
                for &beta in checked_betas(cfg)? {
                    out.push((
                        format!("{}_beta{beta}", k.as_str()),
                        CorrelatorKind::OtocThermal { beta },
                    ));
                }
            }
        }
    }
    Ok(out)
}

fn normalizes(kind: CorrelatorKind) -> bool {
    !matches!(kind, CorrelatorKind::OtocEquilibrium)
}

fn model_meta(table: Table, spec: &ModelSpec) -> Table {
    table
        .with_meta("model", spec.kind.as_str())
        .with_meta("eta", spec.eta())
        .with_meta("atoms", spec.spin.atoms())
        .with_meta("gamma", spec.gamma())
        .with_meta("g_c", spec.critical_coupling())
        .with_meta("cutoff", spec.cutoff.n())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn trace(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let spec = model_spec(cfg, cfg.eta, cfg.atoms)?;
    let time = time_grid(cfg)?;
    let kinds = correlator_kinds(cfg)?;
    let h = spec
        .hamiltonian_at_ratio(cfg.ratio)
        .map_err(|e| CliError::config("ratio", e.to_string()))?;
    let w = spec.number_operator();
    let frame = prepare_frame(&h, &w, &w)?;
    let mut fits = serde_json::Map::new();
    let mut tables = Vec::new();
    for (tag, kind) in kinds {
        let norm = normalizes(kind);
        let series = match kind {
            CorrelatorKind::OtocInfTemp => otoc_infinite_temperature(&frame, &time, norm)?,
            CorrelatorKind::OtocThermal { beta } => otoc_thermal(&frame, &frame.thermal_weights(beta)?, &time, norm)?,
            CorrelatorKind::OtocEquilibrium => otoc_equilibrium(&frame, &ground_state(frame.spectral()), &time, norm)?,
            CorrelatorKind::TpcInfTemp => tpc_infinite_temperature(&frame, &time, norm)?,
        };
        let table = Table::new(vec![
            Column::new("t", "1/omega0", time.times()),
            Column::new("value_real", "1", series.values.iter().map(|z| z.re).collect()),
            Column::new("value_imag", "1", series.values.iter().map(|z| z.im).collect()),
            Column::new(
                "normalized",
                "flag",
                vec![flag(series.is_normalized()); series.values.len()],
            ),
        ]);
        let mut table = model_meta(table, &spec)
            .with_meta("ratio", cfg.ratio)
            .with_meta("kind", series.kind.label());
        if let Some(n) = series.normalization {
            table = table.with_meta("normalization", n);
        }
        if let Some(window) = cfg.fit_window {
            let fit = fit_exponential_decay(&series, window).map_err(CliError::from)?;
            fits.insert(tag.clone(), json!(fit));
        }
        out.csv(&format!("trace_{tag}.csv"), "trace", cfg, &table)?;
        tables.push((tag, table));
    }
    let refs: Vec<(&str, &Table)> = tables.iter().map(|(n, t)| (n.as_str(), t)).collect();
    out.json("trace.json", &envelope("trace", cfg, &refs, json!({ "fits": fits })))
}

fn scan_with_timing(
    spec: &ModelSpec,
    grid: &CouplingGrid,
    kind: CorrelatorKind,
    time: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let timed: Vec<(f64, f64)> = grid
        .ratios()
        .par_iter()
        .map(|&r| {
            let start = Instant::now();
            let v = correlator_average(spec, r, kind, time).map_err(|e| e.at_ratio(r))?;
            Ok((v.value, start.elapsed().as_secs_f64()))
        })
        .collect::<otoc_core::Result<_>>()?;
    Ok(timed.into_iter().unzip())
}

fn scan(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let spec = model_spec(cfg, cfg.eta, cfg.atoms)?;
    let time = time_grid(cfg)?;
    let grid = coupling_grid(cfg)?;
    let mut curves = Vec::new();
    let mut tables = Vec::new();
    for (tag, kind) in correlator_kinds(cfg)? {
        let (values, seconds, degenerate) = if cfg.timing {
            let (v, s) = scan_with_timing(&spec, &grid, kind, &time)?;
            (v, Some(s), Vec::new())
        } else {
            let r = scan_otoc(&spec, &grid, kind, &time)?;
            (r.values, None, r.meta.degenerate_ground)
        };
        let mut cols = vec![
            Column::new("ratio", "g/g_c", grid.ratios().to_vec()),
            Column::new("value", "1", values.clone()),
        ];
        if let Some(s) = seconds {
            cols.push(Column::new("seconds", "s", s));
        }
        let mut table = model_meta(Table::new(cols), &spec)
            .with_meta("kind", kind.label())
            .with_meta("normalized", normalizes(kind));
        if !degenerate.is_empty() {
            let list: Vec<String> = degenerate.iter().map(|r| r.to_string()).collect();
            table = table.with_meta("degenerate_ground", list.join(","));
        }
        let min = locate_extremum(
            grid.ratios(),
            &values,
            ExtremumKind::Min,
            (grid.min(), grid.max()),
            false,
        )?;
        curves.push(json!({ "curve": tag, "kind": kind, "minimum": min }));
        out.csv(&format!("scan_{tag}.csv"), "scan", cfg, &table)?;
        tables.push((tag, table));
    }
    let refs: Vec<(&str, &Table)> = tables.iter().map(|(n, t)| (n.as_str(), t)).collect();
    out.json("scan.json", &envelope("scan", cfg, &refs, json!({ "curves": curves })))
}

struct Member {
    eta: f64,
    atoms: usize,
    gamma: f64,
}

fn scaling_members(cfg: &RunConfig) -> Result<Vec<Member>, CliError> {
    let members: Vec<Member> = match cfg.model {
        ModelKind::Rabi => cfg
            .etas
            .iter()
            .map(|&eta| Member {
                eta,
                atoms: 1,
                gamma: eta,
            })
            .collect(),
        ModelKind::Dicke => cfg
            .atoms_list
            .iter()
            .flat_map(|&atoms| {
                cfg.gammas.iter().map(move |&gamma| Member {
                    eta: gamma / atoms as f64,
                    atoms,
                    gamma,
                })
            })
            .collect(),
    };
    if members.len() < 3 {
        let key = if cfg.model == ModelKind::Rabi { "etas" } else { "gammas" };
        return Err(CliError::config(
            key,
            format!("scaling needs >= 3 members, got {}", members.len()),
        ));
    }
    Ok(members)
}

fn member_label(m: &Member) -> String {
    format!("eta={} N={} gamma={}", m.eta, m.atoms, m.gamma)
}

fn order_state(cfg: &RunConfig) -> Result<OrderState, CliError> {
    Ok(match cfg.state {
        StateTag::Ground => OrderState::Ground,
        StateTag::Thermal => OrderState::Thermal {
            beta: checked_betas(cfg)?[0],
        },
    })
}

fn scaling(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let members = scaling_members(cfg)?;
    let time = time_grid(cfg)?;
    let kind = correlator_kinds(cfg)?[0].1;
    let mut rows = Vec::with_capacity(members.len());
    let mut unresolved = None;
    for m in &members {
        let (ratio_m, value, resolution, evaluations, boundary) = if cfg.synthetic {
            let x = if cfg.model == ModelKind::Rabi { m.eta } else { m.gamma };
            let r = 1.0 + (cfg.synthetic_intercept - cfg.synthetic_k * x.log2()).exp2();
            (r, f64::NAN, 0.0, 0, false)
        } else {
            let spec = model_spec(cfg, m.eta, m.atoms)?;
            let outcome = match cfg.observable {
                Observable::OtocMin => {
                    let coarse = CouplingGrid::uniform(cfg.search_min, cfg.search_max, cfg.search_step)
                        .map_err(|e| CliError::config("search_step", e.to_string()))?;
                    let mut search = MinimumSearch::new(coarse).with_tolerance(cfg.search_rel_tol, 1e-9);
                    if cfg.local_step > 0.0 {
                        search = search.with_local(cfg.local_step, cfg.local_window);
                    }
                    minimum_search(|r| correlator_average(&spec, r, kind, &time).map(|p| p.value), &search)?
                }
                Observable::SusceptibilityMax => {
                    let state = order_state(cfg)?;
                    let search =
                        PeakSearch::new(cfg.search_min, cfg.search_max, cfg.search_step).with_stages(cfg.peak_stages);
                    susceptibility_peak_search(
                        |r| order_parameter(&spec, r, state).map(|p| p.value),
                        spec.critical_coupling(),
                        &search,
                    )?
                }
            };
            (
                outcome.ratio_m,
                outcome.value_at_m,
                outcome.resolution,
                outcome.evaluations.len(),
                outcome.boundary,
            )
        };
        if boundary && unresolved.is_none() {
            unresolved = Some((member_label(m), ratio_m));
        }
        rows.push((m, ratio_m, value, resolution, evaluations, boundary));
    }
    let table = Table::new(vec![
        Column::new("eta", "1", rows.iter().map(|r| r.0.eta).collect()),
        Column::new("atoms", "1", rows.iter().map(|r| r.0.atoms as f64).collect()),
        Column::new("gamma", "1", rows.iter().map(|r| r.0.gamma).collect()),
        Column::new("ratio_m", "g/g_c", rows.iter().map(|r| r.1).collect()),
        Column::new("offset", "g/g_c", rows.iter().map(|r| r.1 - 1.0).collect()),
        Column::new("value_at_m", "1", rows.iter().map(|r| r.2).collect()),
        Column::new("resolution", "g/g_c", rows.iter().map(|r| r.3).collect()),
        Column::new("evaluations", "count", rows.iter().map(|r| r.4 as f64).collect()),
        Column::new("boundary", "flag", rows.iter().map(|r| flag(r.5)).collect()),
    ])
    .with_meta("observable", cfg.get("observable").unwrap_or_default())
    .with_meta("synthetic", cfg.synthetic);
    out.csv("scaling_members.csv", "scaling", cfg, &table)?;
    if let Some((member, ratio)) = unresolved {
        return Err(CliError::Unresolved { member, ratio });
    }
    let (axis, pooled) = if cfg.model == ModelKind::Rabi {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.eta, r.1)).collect();
        ("eta", fit_scaling_eta(&pts)?)
    } else {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.gamma, r.1)).collect();
        ("gamma", fit_scaling_gamma(&pts)?)
    };
    let mut per_atoms = Vec::new();
    if cfg.model == ModelKind::Dicke {
        for &n in &cfg.atoms_list {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.0.atoms == n)
                .map(|r| (r.0.gamma, r.1))
                .collect();
            if pts.len() >= 3 {
                per_atoms.push(json!({ "atoms": n, "fit": fit_json(&fit_scaling_gamma(&pts)?) }));
            }
        }
    }
    let summary = json!({
        "axis": axis,
        "fit": fit_json(&pooled),
        "per_atoms": per_atoms,
    });
    out.json(
        "scaling.json",
        &envelope("scaling", cfg, &[("members", &table)], summary),
    )
}

fn fit_json(f: &PowerLawFit) -> Value {
    json!({
        "slope": f.slope,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "exponent": f.exponent(),
        "points": f.points,
    })
}

fn order_tables(scan: &ScanResult, cfg: &RunConfig) -> Result<(Table, Table, f64, f64, bool), CliError> {
    let chi = susceptibility(scan)?;
    let max = locate_extremum(
        chi.grid.ratios(),
        &chi.values,
        ExtremumKind::Max,
        (chi.grid.min(), chi.grid.max()),
        true,
    )?;
    let order = Table::new(vec![
        Column::new("ratio", "g/g_c", scan.grid.ratios().to_vec()),
        Column::new("order", if cfg.rescale { "1/n" } else { "1" }, scan.values.clone()),
    ])
    .with_meta("state", &scan.meta.state);
    let sus = Table::new(vec![
        Column::new("ratio", "g/g_c", chi.grid.ratios().to_vec()),
        Column::new("susceptibility", "1/omega0", chi.values.clone()),
    ])
    .with_meta("state", &scan.meta.state);
    Ok((order, sus, max.ratio_m, max.value_at_m, max.boundary))
}

fn order_param(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    let grid = coupling_grid(cfg)?;
    let jobs: Vec<(f64, OrderState, String)> = match cfg.sweep {
        Sweep::Beta => match cfg.state {
            StateTag::Ground => vec![(cfg.eta, OrderState::Ground, "ground".into())],
            StateTag::Thermal => checked_betas(cfg)?
                .iter()
                .map(|&beta| (cfg.eta, OrderState::Thermal { beta }, format!("beta{beta}")))
                .collect(),
        },
        Sweep::Eta => {
            if cfg.etas.is_empty() {
                return Err(CliError::config("etas", "empty list"));
            }
            let state = order_state(cfg)?;
            let suffix = match state {
                OrderState::Ground => "ground".to_string(),
                OrderState::Thermal { beta } => format!("beta{beta}"),
            };
            cfg.etas
                .iter()
                .map(|&eta| (eta, state, format!("eta{eta}_{suffix}")))
                .collect()
        }
    };
    let mut maxima = Vec::new();
    let mut tables = Vec::new();
    for (eta, state, tag) in &jobs {
        let spec = model_spec(cfg, *eta, cfg.atoms)?;
        let scan = scan_order_parameter(&spec, &grid, *state, cfg.rescale)?;
        let (order, sus, ratio_m, chi_max, boundary) = order_tables(&scan, cfg)?;
        let order = model_meta(order, &spec);
        let sus = model_meta(sus, &spec);
        out.csv(&format!("order_{tag}.csv"), "order-param", cfg, &order)?;
        out.csv(&format!("susceptibility_{tag}.csv"), "order-param", cfg, &sus)?;
        let beta = match state {
            OrderState::Ground => f64::INFINITY,
            OrderState::Thermal { beta } => *beta,
        };
        maxima.push((*eta, beta, ratio_m, chi_max, boundary));
        tables.push((format!("order_{tag}"), order));
        tables.push((format!("susceptibility_{tag}"), sus));
    }
    let max_table = Table::new(vec![
        Column::new("eta", "1", maxima.iter().map(|m| m.0).collect()),
        Column::new("beta", "1/omega0", maxima.iter().map(|m| m.1).collect()),
        Column::new("ratio_m", "g/g_c", maxima.iter().map(|m| m.2).collect()),
        Column::new("susceptibility_max", "1/omega0", maxima.iter().map(|m| m.3).collect()),
        Column::new("boundary", "flag", maxima.iter().map(|m| flag(m.4)).collect()),
    ]);
    out.csv("order_maxima.csv", "order-param", cfg, &max_table)?;
    let mut drift = None;
    if cfg.drift && cfg.state == StateTag::Thermal && cfg.sweep == Sweep::Beta {
        let spec = model_spec(cfg, cfg.eta, cfg.atoms)?;
        let rows = thermal_drift_study(&spec, checked_betas(cfg)?, &grid, &time_grid(cfg)?, true)?;
        let t = Table::new(vec![
            Column::new("beta", "1/omega0", rows.iter().map(|r| r.beta).collect()),
            Column::new("temperature", "omega0", rows.iter().map(|r| r.temperature).collect()),
            Column::new(
                "susceptibility_ratio_m",
                "g/g_c",
                rows.iter().map(|r| r.susceptibility_max.ratio_m).collect(),
            ),
            Column::new(
                "otoc_ratio_m",
                "g/g_c",
                rows.iter().map(|r| r.otoc_min.ratio_m).collect(),
            ),
        ]);
        out.csv("drift.csv", "order-param", cfg, &t)?;
        drift = Some(t);
    }
    let mut refs: Vec<(&str, &Table)> = tables.iter().map(|(n, t)| (n.as_str(), t)).collect();
    refs.push(("maxima", &max_table));
    if let Some(t) = &drift {
        refs.push(("drift", t));
    }
    out.json("order_param.json", &envelope("order-param", cfg, &refs, json!({})))?;
    if let Some(m) = maxima.iter().find(|m| m.4) {
        return Err(CliError::Unresolved {
            member: format!("susceptibility at eta={} beta={}", m.0, m.1),
            ratio: m.2,
        });
    }
    Ok(())
}

fn size_fit(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    if cfg.atoms_list.len() < 4 {
        return Err(CliError::config("atoms_list", "the size law needs >= 4 atom numbers"));
    }
    if cfg.ratios.is_empty() {
        return Err(CliError::config("ratios", "empty list"));
    }
    if !cfg.synthetic && cfg.model != ModelKind::Dicke {
        return Err(CliError::config(
            "model",
            "size-fit varies the atom number; use model = dicke",
        ));
    }
    let time = time_grid(cfg)?;
    let mut points: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    if cfg.synthetic {
        for &r in &cfg.ratios {
            let pts = cfg
                .atoms_list
                .iter()
                .map(|&n| {
                    (
                        n as f64,
                        cfg.synthetic_a * (n as f64).powf(-cfg.synthetic_b) + cfg.synthetic_c,
                    )
                })
                .collect();
            points.push((r, pts));
        }
    } else {
        let specs: Vec<ModelSpec> = cfg
            .atoms_list
            .iter()
            .map(|&n| model_spec(cfg, cfg.eta, n))
            .collect::<Result<_, _>>()?;
        let jobs: Vec<(f64, usize)> = cfg
            .ratios
            .iter()
            .flat_map(|&r| (0..specs.len()).map(move |j| (r, j)))
            .collect();
        let values: Vec<f64> = jobs
            .par_iter()
            .map(|&(r, j)| {
                correlator_average(&specs[j], r, CorrelatorKind::OtocInfTemp, &time)
                    .map(|p| p.value)
                    .map_err(|e| e.at_ratio(r))
            })
            .collect::<otoc_core::Result<_>>()?;
        for (i, &r) in cfg.ratios.iter().enumerate() {
            let pts = cfg
                .atoms_list
                .iter()
                .enumerate()
                .map(|(j, &n)| (n as f64, 1.0 - values[i * specs.len() + j]))
                .collect();
            points.push((r, pts));
        }
    }
    let mut fits = Vec::new();
    for (r, pts) in &points {
        fits.push(fit_size_law(pts).map_err(|e| e.at_ratio(*r))?);
    }
    let fit_table = Table::new(vec![
        Column::new("ratio", "g/g_c", points.iter().map(|p| p.0).collect()),
        Column::new("a", "1", fits.iter().map(|f| f.a).collect()),
        Column::new("b", "1", fits.iter().map(|f| f.b).collect()),
        Column::new("c", "1", fits.iter().map(|f| f.c).collect()),
        Column::new("residual", "1", fits.iter().map(|f| f.residual).collect()),
        Column::new("f_inf", "1", fits.iter().map(|f| 1.0 - f.c).collect()),
    ])
    .with_meta("eta", cfg.eta)
    .with_meta("synthetic", cfg.synthetic);
    let flat: Vec<(f64, f64, f64)> = points
        .iter()
        .flat_map(|(r, pts)| pts.iter().map(move |&(n, y)| (*r, n, y)))
        .collect();
    let point_table = Table::new(vec![
        Column::new("ratio", "g/g_c", flat.iter().map(|p| p.0).collect()),
        Column::new("atoms", "1", flat.iter().map(|p| p.1).collect()),
        Column::new("one_minus_f", "1", flat.iter().map(|p| p.2).collect()),
    ]);
    out.csv("size_fit.csv", "size-fit", cfg, &fit_table)?;
    out.csv("size_points.csv", "size-fit", cfg, &point_table)?;
    out.json(
        "size_fit.json",
        &envelope(
            "size-fit",
            cfg,
            &[("fits", &fit_table), ("points", &point_table)],
            json!({}),
        ),
    )
}

fn cutoff(cfg: &RunConfig, out: &mut Writer) -> Result<(), CliError> {
    if cfg.cutoffs.len() < 3 {
        return Err(CliError::config("cutoffs", "the cutoff study needs >= 3 cutoffs"));
    }
    if cfg.probe_times.is_empty() {
        return Err(CliError::config("probe_times", "empty list"));
    }
    // Validate the model once with the first cutoff so errors name the right key.
    let mut probe = cfg.clone();
    probe.n = cfg.cutoffs[0];
    model_spec(&probe, cfg.eta, cfg.atoms)?;
    let study = cutoff_study(
        |n| {
            let mut c = cfg.clone();
            c.n = n;
            model_spec(&c, cfg.eta, cfg.atoms).map_err(|e| otoc_core::Error::Parameter(e.to_string()))
        },
        &cfg.cutoffs,
        cfg.ratio,
        &cfg.probe_times,
    )?;
    let mut cols = vec![Column::new(
        "n",
        "1",
        study.rows.iter().map(|r| r.cutoff as f64).collect(),
    )];
    for (k, t) in study.probe_times.iter().enumerate() {
        cols.push(Column::new(
            format!("F_t{t}"),
            "1",
            study.rows.iter().map(|r| r.values[k]).collect(),
        ));
    }
    let table = Table::new(cols).with_meta("ratio", cfg.ratio).with_meta("eta", cfg.eta);
    out.csv("cutoff_study.csv", "cutoff-study", cfg, &table)?;
    let fits: Vec<Value> = study
        .probe_times
        .iter()
        .zip(&study.fits)
        .map(|(t, f)| json!({ "t": t, "slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared }))
        .collect();
    out.json(
        "cutoff_study.json",
        &envelope("cutoff-study", cfg, &[("values", &table)], json!({ "fits": fits })),
    )
}
