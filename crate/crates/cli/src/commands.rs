//! Command implementations. Each sweep point yields a block of rows; blocks
//! are computed on the worker pool and concatenated in sweep order.

use rayon::prelude::*;
use serde::Serialize;

use ptwalk::evolution::{evolve_full, trace_series, CoinState, Formalism, FullState};
use ptwalk::measures::{
    blp_from_distances, entanglement_series, purity_full, purity_series, rhp_series, trace_distance_series,
    MeasureSeries,
};
use ptwalk::walk::{
    a_coefficient, ep_contour_grid, exceptional_point, grid_collisions, regime, KGrid, Regime, WalkParams,
};

use crate::error::CliError;
use crate::table::{Cell, Table};

/// |a(k) ∓ 1| below which `validate` reports a grid collision.
pub const COLLISION_TOL: f64 = 1e-8;

/// Resolved walk sweep shared by the per-γ commands.
#[derive(Debug, Clone, Serialize)]
pub struct Setup {
    pub theta1: f64,
    pub theta2: f64,
    pub gammas: Vec<f64>,
    pub steps: u32,
    pub grid: usize,
    pub shifted: bool,
    pub formalism: Formalism,
    #[serde(serialize_with = "state_entries")]
    pub state: CoinState,
    #[serde(serialize_with = "state_entries")]
    pub state2: CoinState,
}

fn state_entries<S: serde::Serializer>(s: &CoinState, ser: S) -> Result<S::Ok, S::Error> {
    let m = s.matrix();
    let entries: Vec<String> = m.entries().iter().map(|z| format!("{z}")).collect();
    entries.serialize(ser)
}

impl Setup {
    pub fn grid(&self) -> KGrid {
        let g = if self.shifted {
            KGrid::shifted(self.grid)
        } else {
            KGrid::new(self.grid)
        };
        g.expect("grid size checked during config resolution")
    }

    pub fn params(&self, gamma: f64) -> WalkParams {
        WalkParams::new(self.theta1, self.theta2, gamma)
    }
}

fn compute(gamma: f64) -> impl Fn(ptwalk::Error) -> CliError {
    move |source| CliError::Compute { gamma, source }
}

/// Runs `f` for every γ on the pool and joins the blocks in sweep order.
fn sweep<F>(setup: &Setup, columns: Vec<&'static str>, f: F) -> Result<Table, CliError>
where
    F: Fn(f64) -> Result<Vec<Vec<Cell>>, CliError> + Sync,
{
    let blocks: Vec<Result<Vec<Vec<Cell>>, CliError>> = setup.gammas.par_iter().map(|&g| f(g)).collect();
    let mut table = Table::new(columns);
    for block in blocks {
        for row in block? {
            table.push(row);
        }
    }
    Ok(table)
}

fn lead(gamma: f64) -> [Cell; 2] {
    [gamma.into(), gamma.exp().into()]
}

fn series_rows(gamma: f64, series: &MeasureSeries) -> Vec<Vec<Cell>> {
    series
        .iter()
        .map(|(t, v, f)| {
            let [g, eg] = lead(gamma);
            vec![g, eg, t.into(), v.into(), f.beyond_ep.into()]
        })
        .collect()
}

pub fn trace(setup: &Setup) -> Result<Table, CliError> {
    let grid = setup.grid();
    sweep(setup, vec!["gamma", "exp_gamma", "t", "trace", "beyond_ep"], |g| {
        let s = trace_series(&setup.params(g), &setup.state, setup.steps, &grid, setup.formalism)
            .map_err(compute(g))?;
        Ok(series_rows(g, &s))
    })
}

pub fn tracedist(setup: &Setup) -> Result<Table, CliError> {
    let grid = setup.grid();
    sweep(setup, vec!["gamma", "exp_gamma", "t", "trace_distance", "beyond_ep"], |g| {
        let s = trace_distance_series(
            &setup.params(g),
            &setup.state,
            &setup.state2,
            setup.steps,
            &grid,
            setup.formalism,
        )
        .map_err(compute(g))?;
        Ok(series_rows(g, &s))
    })
}

fn blp_pair(setup: &Setup, grid: &KGrid, g: f64) -> Result<(MeasureSeries, MeasureSeries), CliError> {
    if setup.state.matrix() == setup.state2.matrix() {
        return Err(CliError::Config("BLP needs two distinct initial states".into()));
    }
    let d = trace_distance_series(
        &setup.params(g),
        &setup.state,
        &setup.state2,
        setup.steps,
        grid,
        setup.formalism,
    )
    .map_err(compute(g))?;
    let n = blp_from_distances(&d);
    Ok((d, n))
}

pub fn blp(setup: &Setup) -> Result<Table, CliError> {
    let grid = setup.grid();
    sweep(
        setup,
        vec!["gamma", "exp_gamma", "t", "trace_distance", "blp", "beyond_ep"],
        |g| {
            let (d, n) = blp_pair(setup, &grid, g)?;
            Ok(d.iter()
                .zip(&n.values)
                .map(|((t, dv, f), &nv)| {
                    let [a, b] = lead(g);
                    vec![a, b, t.into(), dv.into(), nv.into(), f.beyond_ep.into()]
                })
                .collect())
        },
    )
}

pub fn blp_scan(setup: &Setup) -> Result<Table, CliError> {
    let grid = setup.grid();
    sweep(setup, vec!["gamma", "exp_gamma", "regime", "steps", "blp"], |g| {
        let (_, n) = blp_pair(setup, &grid, g)?;
        let [a, b] = lead(g);
        Ok(vec![vec![
            a,
            b,
            regime(&setup.params(g)).to_string().into(),
            setup.steps.into(),
            n.last().unwrap_or(0.0).into(),
        ]])
    })
}

pub fn rhp(setup: &Setup, rtol: f64) -> Result<Table, CliError> {
    let grid = setup.grid();
    let columns = vec![
        "gamma",
        "exp_gamma",
        "t",
        "g",
        "g_clamped",
        "rhp",
        "choi_trace_x2",
        "partial_trace_error",
        "pseudo_inverted",
        "beyond_ep",
    ];
    sweep(setup, columns, |g| {
        let r = rhp_series(&setup.params(g), setup.steps, &grid, setup.formalism, rtol).map_err(compute(g))?;
        Ok((0..r.g.len())
            .map(|i| {
                let [a, b] = lead(g);
                let gv = r.g.values[i];
                let flags = r.g.flags[i];
                vec![
                    a,
                    b,
                    r.g.times[i].into(),
                    gv.into(),
                    gv.max(0.0).into(),
                    r.cumulative.values[i].into(),
                    r.choi_trace.values[i].into(),
                    r.partial_trace_error.values[i].into(),
                    flags.pseudo_inverted.into(),
                    flags.beyond_ep.into(),
                ]
            })
            .collect())
    })
}

pub fn entanglement(setup: &Setup) -> Result<Table, CliError> {
    let grid = setup.grid();
    sweep(
        setup,
        vec!["gamma", "exp_gamma", "t", "entanglement_entropy", "beyond_ep"],
        |g| {
            let s = entanglement_series(&setup.params(g), &setup.state, setup.steps, &grid, setup.formalism)
                .map_err(compute(g))?;
            Ok(series_rows(g, &s))
        },
    )
}

/// Coin purity, or with `sites` the purity of the joint lattice state.
pub fn purity(setup: &Setup, sites: Option<usize>) -> Result<Table, CliError> {
    let columns = vec!["gamma", "exp_gamma", "t", "purity", "beyond_ep"];
    match sites {
        None => {
            let grid = setup.grid();
            sweep(setup, columns, |g| {
                let s = purity_series(&setup.params(g), &setup.state, setup.steps, &grid, setup.formalism)
                    .map_err(compute(g))?;
                Ok(series_rows(g, &s))
            })
        }
        Some(n) => sweep(setup, columns, |g| {
            let p = setup.params(g);
            let rho0 = FullState::localized(n, &setup.state).map_err(compute(g))?;
            let beyond = regime(&p) == Regime::Broken;
            (0..=setup.steps)
                .map(|t| {
                    let s = evolve_full(&p, &rho0, t, setup.formalism).map_err(compute(g))?;
                    let [a, b] = lead(g);
                    Ok(vec![a, b, t.into(), purity_full(&s).into(), beyond.into()])
                })
                .collect()
        }),
    }
}

/// Regime labels and EP collisions on the chosen grid, with warnings.
pub fn validate(setup: &Setup) -> Result<(Table, Vec<String>), CliError> {
    let grid = setup.grid();
    let gamma_pt = exceptional_point(setup.theta1, setup.theta2).ok();
    let mut warnings = Vec::new();
    let mut table = Table::new(vec![
        "gamma",
        "exp_gamma",
        "regime",
        "gamma_pt",
        "collisions",
        "min_distance_to_ep",
    ]);
    for &g in &setup.gammas {
        let p = setup.params(g);
        let hits = grid_collisions(&p, &grid, COLLISION_TOL);
        let nearest = grid
            .points()
            .iter()
            .map(|&k| {
                let a = a_coefficient(&p, k);
                (a - 1.0).abs().min((a + 1.0).abs())
            })
            .fold(f64::INFINITY, f64::min);
        for (k, a) in &hits {
            let hint = if grid.is_shifted() {
                "change --grid"
            } else {
                "use the half-step shifted grid (drop --no-shift)"
            };
            warnings.push(format!(
                "gamma = {g}: grid point k = {k} sits on the exceptional point (a = {a}); {hint}"
            ));
        }
        let [a, b] = lead(g);
        table.push(vec![
            a,
            b,
            regime(&p).to_string().into(),
            gamma_pt.into(),
            hits.len().into(),
            nearest.into(),
        ]);
    }
    Ok((table, warnings))
}

/// γ_PT over a (θ1, θ2) lattice; cells without a transition are left empty.
pub fn ep_grid(theta1: (f64, f64), theta2: (f64, f64), resolution: usize) -> Table {
    let grid = ep_contour_grid(theta1, theta2, resolution);
    let mut table = Table::new(vec!["theta1", "theta2", "gamma_pt", "exp_gamma_pt", "status"]);
    for (i, &t1) in grid.theta1.iter().enumerate() {
        for (j, &t2) in grid.theta2.iter().enumerate() {
            let g = grid.gamma[i][j];
            let status = if g.is_some() { "ok" } else { "no_transition" };
            table.push(vec![
                t1.into(),
                t2.into(),
                g.into(),
                g.map(f64::exp).into(),
                status.into(),
            ]);
        }
    }
    table
}
