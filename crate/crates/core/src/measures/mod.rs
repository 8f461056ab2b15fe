//! Distinguishability, non-Markovianity and entanglement diagnostics.

pub mod rhp;

use crate::evolution::{CoinState, Formalism, FullState, ReducedDynamics};
use crate::numerics::dd::XMat;
use crate::numerics::C64;
use crate::walk::{regime, KGrid, Regime, WalkParams};
use crate::{Error, Result};

pub use crate::series::{MeasureSeries, PointFlags};
pub use rhp::{
    choi_of_map, devec, intermediate_map, map_chain, map_matrix, rhp_from_maps, rhp_series, unitary_channel, vec,
    ChoiMatrix, MapMatrix, RhpSeries, DD_COND_LIMIT, DEFAULT_RTOL,
};

fn abs_eigen_sum(m: &XMat) -> f64 {
    m.eigenvalues2().iter().map(|z| z.to_c64().norm()).sum()
}

/// D(ρ, σ) = ½‖ρ − σ‖₁.
///
/// For normalised and raw states Δ is Hermitian and this is half the sum of
/// |eigenvalues|. Metric states use the generalised trace norm, which is the
/// same expression on the plain eigenvalues of the non-Hermitian Δ̄.
pub fn trace_distance(rho: &CoinState, sigma: &CoinState) -> Result<f64> {
    if rho.formalism() != sigma.formalism() {
        return Err(Error::FormalismMismatch(
            rho.formalism().to_string(),
            sigma.formalism().to_string(),
        ));
    }
    Ok(0.5 * abs_eigen_sum(&(*rho.exact() - *sigma.exact())))
}

/// Half the sum of |eig(ρ̄ − σ̄)| for two joint lattice states.
pub fn trace_distance_full(rho: &FullState, sigma: &FullState) -> Result<f64> {
    if rho.formalism() != sigma.formalism() {
        return Err(Error::FormalismMismatch(
            rho.formalism().to_string(),
            sigma.formalism().to_string(),
        ));
    }
    let delta = rho.matrix() - sigma.matrix();
    let (_, t) = delta.schur().unpack();
    Ok(0.5 * (0..t.nrows()).map(|i| t[(i, i)].norm()).sum::<f64>())
}

fn ep_flags(p: &WalkParams) -> PointFlags {
    PointFlags {
        beyond_ep: regime(p) == Regime::Broken,
        ..PointFlags::default()
    }
}

fn paired_states(
    p: &WalkParams,
    rho0: &CoinState,
    sigma0: &CoinState,
    steps: u32,
    grid: &KGrid,
    formalism: Formalism,
) -> Result<(Vec<CoinState>, Vec<CoinState>)> {
    let dynamics = ReducedDynamics::new(p, grid);
    Ok((
        dynamics.states(rho0, steps, formalism)?,
        dynamics.states(sigma0, steps, formalism)?,
    ))
}

/// D(t) for t = 0..=steps.
pub fn trace_distance_series(
    p: &WalkParams,
    rho0: &CoinState,
    sigma0: &CoinState,
    steps: u32,
    grid: &KGrid,
    formalism: Formalism,
) -> Result<MeasureSeries> {
    let (r, s) = paired_states(p, rho0, sigma0, steps, grid, formalism)?;
    let flags = ep_flags(p);
    let mut out = MeasureSeries::new(format!("trace_distance_{formalism}"));
    for (t, (a, b)) in r.iter().zip(&s).enumerate() {
        out.push(t as u32, trace_distance(a, b)?, flags);
    }
    Ok(out)
}

/// Cumulative positive increments of a distance series: N(0) = 0 and
/// N(t) = N(t−1) + max(D(t) − D(t−1), 0).
pub fn blp_from_distances(distances: &MeasureSeries) -> MeasureSeries {
    let mut out = MeasureSeries::new("blp");
    let mut acc = 0.0;
    for (i, (t, d, f)) in distances.iter().enumerate() {
        if i > 0 {
            let delta = d - distances.values[i - 1];
            if delta > 0.0 {
                acc += delta;
            }
        }
        out.push(t, acc, f);
    }
    out
}

/// Discrete BLP measure for a fixed pair of initial coin states.
pub fn blp_series(
    p: &WalkParams,
    rho0: &CoinState,
    sigma0: &CoinState,
    steps: u32,
    grid: &KGrid,
    formalism: Formalism,
) -> Result<MeasureSeries> {
    if rho0.matrix().max_abs_diff(&sigma0.matrix()) == 0.0 {
        return Err(Error::InvalidState("BLP needs two distinct initial states".into()));
    }
    let d = trace_distance_series(p, rho0, sigma0, steps, grid, formalism)?;
    let mut out = blp_from_distances(&d);
    out.label = format!("blp_{formalism}");
    Ok(out)
}

/// tr(ρ²) including its imaginary part, which vanishes for Hermitian states
/// and for metric states with real spectra.
pub fn purity_complex(state: &CoinState) -> C64 {
    let m = *state.exact();
    (m * m).trace().to_c64()
}

/// Real part of tr(ρ²).
pub fn purity(state: &CoinState) -> f64 {
    purity_complex(state).re
}

/// Real part of tr(ρ²) for a joint lattice state.
pub fn purity_full(state: &FullState) -> f64 {
    let m = state.matrix();
    (m * m).trace().re
}

/// Coin purity for t = 0..=steps.
pub fn purity_series(
    p: &WalkParams,
    rho0: &CoinState,
    steps: u32,
    grid: &KGrid,
    formalism: Formalism,
) -> Result<MeasureSeries> {
    let states = ReducedDynamics::new(p, grid).states(rho0, steps, formalism)?;
    let flags = ep_flags(p);
    let mut out = MeasureSeries::new(format!("purity_{formalism}"));
    for (t, s) in states.iter().enumerate() {
        out.push(t as u32, purity(s), flags);
    }
    Ok(out)
}

/// EE = −Σ |λ_i| ln |λ_i| over the eigenvalues of the coin state
/// (natural log, 0·ln 0 = 0).
pub fn entanglement_entropy(rho: &CoinState) -> f64 {
    let ee: f64 = rho
        .exact()
        .eigenvalues2()
        .iter()
        .map(|z| z.to_c64().norm())
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.ln())
        .sum();
    // a pure state gives −1·ln 1 plus round-off of either sign
    if ee.abs() < 1e-15 {
        0.0
    } else {
        ee
    }
}

/// EE(t) for t = 0..=steps. Points beyond the EP carry `beyond_ep`; there
/// |λ_i| may exceed 1 and the value is reported as computed.
pub fn entanglement_series(
    p: &WalkParams,
    rho0: &CoinState,
    steps: u32,
    grid: &KGrid,
    formalism: Formalism,
) -> Result<MeasureSeries> {
    let states = ReducedDynamics::new(p, grid).states(rho0, steps, formalism)?;
    let flags = ep_flags(p);
    let mut out = MeasureSeries::new(format!("entanglement_{formalism}"));
    for (t, s) in states.iter().enumerate() {
        out.push(t as u32, entanglement_entropy(s), flags);
    }
    Ok(out)
}
