//! Subcommand runners. Each returns a dataset whose row order is fixed by the
//! configuration alone, whatever the worker count.

use rayon::prelude::*;

use sgu_core::engine::SguResult;
use sgu_core::fermion::{truncated_sgu, XYChain};
use sgu_core::phase::{measurement_comparison_curve, sgu_st, sgu_sv, PhaseWindow, ProbePhases};
use sgu_core::thermometry::{minimal_outperforming_levels, transition_map, ThermometryWindow};
use sgu_core::{Result, SguError};

use crate::config::{Command, RunConfig};
use crate::output::{format_number, Dataset, Value};

pub fn run(cfg: &RunConfig) -> Result<Dataset> {
    match cfg.subcommand {
        Command::ThermometryMap => thermometry_map(cfg),
        Command::CounterMap => {
            let t0s = logspace(cfg.thermometry.t0_min, cfg.thermometry.t0_max, cfg.thermometry.t0_points);
            counter(cfg, &t0s)
        }
        Command::CounterSlice => counter(cfg, &cfg.thermometry.slice_t0),
        Command::PeScaling => pe_scaling(cfg),
        Command::PeAsymptotic => pe_asymptotic(cfg),
        Command::PeThermal => pe_thermal(cfg),
        Command::XySgu => xy_sgu(cfg),
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|j| match j {
            0 => lo,
            _ if j + 1 == n => hi,
            _ => (lo.ln() + (hi.ln() - lo.ln()) * j as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

fn relative_widths(cfg: &RunConfig) -> Vec<f64> {
    let t = &cfg.thermometry;
    (1..=t.delta_rel_points)
        .map(|k| (k as f64 - 0.5) * t.delta_rel_max / t.delta_rel_points as f64)
        .collect()
}

/// SGU value and its log; both empty when the average diverged.
fn sgu_cells(r: &SguResult) -> [Value; 2] {
    if r.diverged {
        [Value::Empty, Value::Empty]
    } else {
        [Value::Num(r.value), Value::Num(r.ln_value)]
    }
}

fn thermometry_map(cfg: &RunConfig) -> Result<Dataset> {
    let t = &cfg.thermometry;
    let t0s = logspace(t.t0_min, t.t0_max, t.t0_points);
    let cells = transition_map(&t0s, &relative_widths(cfg), &cfg.numerics.quad(), &cfg.numerics.minimize())?;
    let mut data = Dataset::new(&["T0", "delta_rel", "r_m_opt", "sgu", "ln_sgu", "diverged"]);
    for c in cells {
        let [sgu, ln] = sgu_cells(&c.result);
        data.push(vec![
            Value::Num(c.t0),
            Value::Num(c.delta_rel),
            Value::Num(c.result.params[0]),
            sgu,
            ln,
            Value::Flag(c.result.diverged),
        ]);
    }
    Ok(data)
}

fn counter(cfg: &RunConfig, t0s: &[f64]) -> Result<Dataset> {
    let quad = cfg.numerics.quad();
    let opts = cfg.numerics.minimize();
    let cells: Vec<(f64, f64)> = t0s
        .iter()
        .flat_map(|&t0| relative_widths(cfg).into_iter().map(move |r| (t0, r)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(t0, rel)| {
            let w = ThermometryWindow::relative(t0, rel)?;
            minimal_outperforming_levels(&w, cfg.thermometry.level_cap, &quad, &opts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Dataset::new(&[
        "T0",
        "delta_rel",
        "m0",
        "ln_sgu_gaussian",
        "ln_sgu_counter",
        "gaussian_optimal",
        "diverged",
    ]);
    for (&(t0, rel), s) in cells.iter().zip(results) {
        data.push(vec![
            Value::Num(t0),
            Value::Num(rel),
            s.levels.map_or(Value::Empty, Value::Int),
            if s.gaussian.diverged { Value::Empty } else { Value::Num(s.gaussian.ln_value) },
            Value::Num(s.counter_ln_value),
            Value::Flag(s.levels.is_none()),
            Value::Flag(s.gaussian.diverged),
        ]);
    }
    Ok(data)
}

fn probe_phases(optimize: bool) -> ProbePhases {
    if optimize {
        ProbePhases::optimized()
    } else {
        ProbePhases::default()
    }
}

fn pe_scaling(cfg: &RunConfig) -> Result<Dataset> {
    let p = &cfg.phase;
    let ns = logspace(p.n_min, p.n_max, p.n_points);
    let phases = probe_phases(p.optimize_probe_phase);
    let mut data = Dataset::new(&[
        "n_prime",
        "delta",
        "G_opt",
        "G_homodyne",
        "G_heterodyne",
        "s_m_opt",
        "psi_opt",
        "diverged_opt",
        "diverged_homodyne",
        "diverged_heterodyne",
    ]);
    for &delta in &p.deltas {
        let window = PhaseWindow::new(p.lambda0, delta)?;
        let rows = measurement_comparison_curve(&ns, &window, &phases, &cfg.numerics.quad(), &cfg.numerics.minimize())?;
        for r in rows {
            let value = |s: &SguResult| if s.diverged { Value::Empty } else { Value::Num(s.value) };
            data.push(vec![
                Value::Num(r.n),
                Value::Num(delta),
                value(&r.optimal),
                value(&r.homodyne),
                value(&r.heterodyne),
                Value::Num(r.optimal.params[0]),
                Value::Num(r.optimal.param("psi").unwrap_or(phases.psi)),
                Value::Flag(r.optimal.diverged),
                Value::Flag(r.homodyne.diverged),
                Value::Flag(r.heterodyne.diverged),
            ]);
        }
    }
    Ok(data)
}

fn pe_asymptotic(cfg: &RunConfig) -> Result<Dataset> {
    let p = &cfg.phase;
    let phases = probe_phases(p.optimize_probe_phase);
    let results = p
        .asymptotic_deltas
        .par_iter()
        .map(|&delta| {
            let window = PhaseWindow::new(p.lambda0, delta)?;
            sgu_sv(p.n_asymptotic, &window, &phases, &cfg.numerics.quad(), &cfg.numerics.minimize())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Dataset::new(&["delta", "n", "s_m_opt", "sgu", "diverged"]);
    for (&delta, r) in p.asymptotic_deltas.iter().zip(results) {
        let [sgu, _] = sgu_cells(&r);
        data.push(vec![
            Value::Num(delta),
            Value::Num(p.n_asymptotic),
            Value::Num(r.params[0]),
            sgu,
            Value::Flag(r.diverged),
        ]);
    }
    Ok(data)
}

fn pe_thermal(cfg: &RunConfig) -> Result<Dataset> {
    let p = &cfg.phase;
    let nbar = p.st_squeezing.sinh().powi(2);
    let phases = probe_phases(p.thermal_optimize_probe_phase);
    let cells: Vec<(f64, f64)> = p
        .thermal_deltas
        .iter()
        .flat_map(|&d| p.n_thermal.iter().map(move |&n| (d, n)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(delta, n_th)| {
            let window = PhaseWindow::new(p.lambda0, delta)?;
            sgu_st(nbar, n_th, &window, p.st_reading, &phases, &cfg.numerics.quad(), &cfg.numerics.minimize())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Dataset::new(&["delta", "n_thermal", "s_m_opt", "sgu", "diverged"]);
    for (&(delta, n_th), r) in cells.iter().zip(results) {
        let [sgu, _] = sgu_cells(&r);
        data.push(vec![
            Value::Num(delta),
            Value::Num(n_th),
            Value::Num(r.params[0]),
            sgu,
            Value::Flag(r.diverged),
        ]);
    }
    Ok(data)
}

fn xy_sgu(cfg: &RunConfig) -> Result<Dataset> {
    let x = &cfg.xy;
    let chain = XYChain::new(x.sites, x.gamma)?;
    let ks = chain.momenta_below(x.k0)?;
    let cells: Vec<(f64, f64)> = x
        .lambda0
        .iter()
        .flat_map(|&l| x.deltas.iter().map(move |&d| (l, d)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(l, d)| truncated_sgu(&chain, l, d, x.k0, &cfg.numerics.quad(), &cfg.numerics.minimize()))
        .collect::<Result<Vec<_>>>()?;
    let mut columns: Vec<String> = ["lambda0", "delta", "G", "sgu", "rel_gap", "diverged"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for j in 0..ks.len() {
        columns.push(format!("theta_m_{j}"));
        columns.push(format!("phi_m_{j}"));
    }
    let mut data = Dataset {
        columns,
        rows: Vec::new(),
        notes: vec![(
            "momenta".into(),
            ks.iter().map(|&k| format_number(k)).collect::<Vec<_>>().join(" "),
        )],
    };
    for (&(l, d), r) in cells.iter().zip(results) {
        if r.bound.diverged {
            return Err(SguError::Numerical(format!("global bound diverged at lambda0 = {l}")));
        }
        let mut row = vec![
            Value::Num(l),
            Value::Num(d),
            Value::Num(r.bound.value),
            if r.sgu.diverged { Value::Empty } else { Value::Num(r.sgu.value) },
            Value::Num(r.relative_gap),
            Value::Flag(r.sgu.diverged),
        ];
        for b in &r.bases {
            row.push(Value::Num(b.theta_m));
            row.push(Value::Num(b.phi_m));
        }
        data.push(row);
    }
    Ok(data)
}
