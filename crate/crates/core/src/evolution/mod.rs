//! Reduced coin dynamics in the momentum representation.
//!
//! The walk is block diagonal in k, so the coin state after t steps is the
//! k-average of 2×2 evolutions. Two readings of the non-unitary step are
//! provided:
//!
//! * raw / normalised: ρ_c(t) = ⟨W^t ρ₀ W^{†t}⟩_k, optionally divided by its
//!   trace at every step;
//! * metric: ρ̄_c(t) = ⟨W^t ρ₀ W^{†t} G_c(k, t)⟩_k, whose trace does not
//!   depend on t and is divided out once.
//!
//! With W = V Λ V⁻¹ the metric identity W^{†t} G(t) = G(0) W^{−t} turns the
//! metric state into V (Λ^t M Λ^{−t}) V⁻¹ with M = V⁻¹ ρ₀ V^{−†}, which is how
//! it is evaluated here. All per-k work and the k-sum run in double-double.

pub mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerics::dd::{Cdd, Dd, XMat};
use crate::numerics::{c64, CMat, C64};
use crate::series::{MeasureSeries, PointFlags};
use crate::walk::{coin_walk_operator_dd, regime, spectrum, KGrid, Regime, Spectrum, WalkParams};
use crate::{Error, Result};

pub use oracle::{evolve_full, full_walk_operator, position_oracle, FullState};

/// How a non-unitary step is turned into a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formalism {
    /// Plain W ρ W†, trace drifts.
    Raw,
    /// W ρ W† divided by its trace.
    Normalised,
    /// W ρ W† G with a time-dependent metric G.
    Metric,
}

impl fmt::Display for Formalism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formalism::Raw => "raw",
            Formalism::Normalised => "normalised",
            Formalism::Metric => "metric",
        })
    }
}

impl FromStr for Formalism {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Formalism::Raw),
            "normalised" | "normalized" => Ok(Formalism::Normalised),
            "metric" => Ok(Formalism::Metric),
            other => Err(format!("unknown formalism `{other}`")),
        }
    }
}

/// Tolerance for the Hermitian / PSD / unit-trace checks on initial states.
pub const STATE_TOL: f64 = 1e-10;

/// 2×2 coin state tagged with the formalism that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinState {
    matrix: XMat,
    formalism: Formalism,
}

impl CoinState {
    /// Validated initial state: Hermitian, positive semi-definite and of unit
    /// trace within 1e−10.
    pub fn new(m: CMat) -> Result<Self> {
        if m.dim() != 2 {
            return Err(Error::InvalidState(format!("coin state must be 2×2, got {0}×{0}", m.dim())));
        }
        if !m.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = m.trace();
        if (tr - c64(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let (vals, _) = crate::numerics::eigh(&m);
        if vals[0] < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", vals[0])));
        }
        Ok(CoinState {
            matrix: XMat::from_cmat(&m),
            formalism: Formalism::Raw,
        })
    }

    /// |ψ⟩⟨ψ| for a non-zero vector, normalised.
    pub fn pure(psi: [C64; 2]) -> Result<Self> {
        let n = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite state vector".into()));
        }
        let v = [psi[0] / n, psi[1] / n];
        CoinState::new(CMat::outer(&v, &v))
    }

    /// |↑⟩⟨↑|.
    pub fn up() -> Self {
        CoinState::pure([c64(1.0, 0.0), c64(0.0, 0.0)]).expect("valid preset")
    }

    /// |↓⟩⟨↓|.
    pub fn down() -> Self {
        CoinState::pure([c64(0.0, 0.0), c64(1.0, 0.0)]).expect("valid preset")
    }

    /// |↑+↓⟩⟨↑+↓|/2.
    pub fn plus() -> Self {
        CoinState::new(CMat::real2([[0.5, 0.5], [0.5, 0.5]])).expect("valid preset")
    }

    /// Wraps an evolved matrix without validation.
    pub fn from_exact(matrix: XMat, formalism: Formalism) -> Self {
        assert_eq!(matrix.dim(), 2, "coin state must be 2×2");
        CoinState { matrix, formalism }
    }

    /// Entries rounded to `f64`.
    pub fn matrix(&self) -> CMat {
        self.matrix.to_cmat()
    }

    /// Double-double entries.
    pub fn exact(&self) -> &XMat {
        &self.matrix
    }

    pub fn formalism(&self) -> Formalism {
        self.formalism
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace().to_c64()
    }
}

/// G_c(k, t) at a single momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinMetric {
    pub k: f64,
    pub t: u32,
    pub matrix: CMat,
}

/// G_c(k, t) = (Σ_i e^{2 Im ε_i t} |φ_i⟩⟨φ_i|)⁻¹ with unit-norm φ_i.
pub fn coin_metric(p: &WalkParams, k: f64, t: u32) -> Result<CoinMetric> {
    let g = spectrum(p, k)?.metric(t);
    if !g.is_finite() {
        return Err(Error::SingularMetric { k, t });
    }
    Ok(CoinMetric {
        k,
        t,
        matrix: g.to_cmat(),
    })
}

/// Per-momentum operators of one walk on one grid.
///
/// Spectra are computed eagerly but only demanded by the metric paths, so a
/// grid that touches the exceptional point still supports raw evolution.
#[derive(Debug, Clone)]
pub struct ReducedDynamics {
    params: WalkParams,
    grid: KGrid,
    walks: Vec<XMat>,
    spectra: std::result::Result<Vec<Spectrum>, Error>,
}

fn scale_mat(m: &XMat, s: Dd) -> XMat {
    m.scale(Cdd::from(s))
}

impl ReducedDynamics {
    pub fn new(params: &WalkParams, grid: &KGrid) -> Self {
        let ks = grid.points();
        let walks = ks.iter().map(|&k| coin_walk_operator_dd(params, k)).collect();
        let spectra = ks.iter().map(|&k| spectrum(params, k)).collect();
        ReducedDynamics {
            params: *params,
            grid: *grid,
            walks,
            spectra,
        }
    }

    pub fn params(&self) -> &WalkParams {
        &self.params
    }

    pub fn grid(&self) -> &KGrid {
        &self.grid
    }

    pub fn spectra(&self) -> Result<&[Spectrum]> {
        self.spectra.as_deref().map_err(Clone::clone)
    }

    fn inv_n(&self) -> Dd {
        Dd::ONE / Dd::new(self.grid.len() as f64)
    }

    /// ⟨W^t X W^{†t}⟩_k for t = 0..=steps (linear in X).
    pub fn raw_trajectory(&self, x: &XMat, steps: u32) -> Vec<XMat> {
        let mut sums = vec![XMat::zeros(2); steps as usize + 1];
        for w in &self.walks {
            let wd = w.adjoint();
            let mut cur = *x;
            for (t, acc) in sums.iter_mut().enumerate() {
                if t > 0 {
                    cur = *w * cur * wd;
                }
                *acc = *acc + cur;
            }
        }
        let s = self.inv_n();
        sums.iter().map(|m| scale_mat(m, s)).collect()
    }

    /// ⟨W^t X W^{†t}⟩_k at a single time, with W^t by repeated squaring.
    pub fn raw_at(&self, x: &XMat, t: u32) -> XMat {
        let mut acc = XMat::zeros(2);
        for w in &self.walks {
            let wt = w.pow(t);
            acc = acc + wt * *x * wt.adjoint();
        }
        scale_mat(&acc, self.inv_n())
    }

    /// ⟨W^t X W^{†t} G(k, t)⟩_k for t = 0..=steps, not rescaled (linear in X).
    pub fn metric_trajectory(&self, x: &XMat, steps: u32) -> Result<Vec<XMat>> {
        let spectra = self.spectra()?;
        let mut sums = vec![XMat::zeros(2); steps as usize + 1];
        for s in spectra {
            let m = s.vinv * *x * s.vinv.adjoint();
            let step = [s.lambda[0], s.lambda[1]];
            let back = [Cdd::ONE / s.lambda[0], Cdd::ONE / s.lambda[1]];
            let mut pw = [Cdd::ONE; 2];
            let mut pinv = [Cdd::ONE; 2];
            for (t, acc) in sums.iter_mut().enumerate() {
                if t > 0 {
                    for i in 0..2 {
                        pw[i] = pw[i] * step[i];
                        pinv[i] = pinv[i] * back[i];
                    }
                }
                *acc = *acc + metric_term(s, &m, &pw, &pinv);
            }
        }
        let n = self.inv_n();
        Ok(sums.iter().map(|m| scale_mat(m, n)).collect())
    }

    /// Single-time version of [`Self::metric_trajectory`].
    pub fn metric_at(&self, x: &XMat, t: u32) -> Result<XMat> {
        let spectra = self.spectra()?;
        let mut acc = XMat::zeros(2);
        for s in spectra {
            let m = s.vinv * *x * s.vinv.adjoint();
            let pw = [s.lambda[0].powi(t as i64), s.lambda[1].powi(t as i64)];
            let pinv = [s.lambda[0].powi(-(t as i64)), s.lambda[1].powi(-(t as i64))];
            acc = acc + metric_term(s, &m, &pw, &pinv);
        }
        Ok(scale_mat(&acc, self.inv_n()))
    }

    /// k-average of the t = 0 metrics, ⟨G_c(k, 0)⟩_k.
    pub fn mean_metric0(&self) -> Result<XMat> {
        let spectra = self.spectra()?;
        let acc = spectra
            .iter()
            .fold(XMat::zeros(2), |acc, s| acc + s.metric(0));
        Ok(scale_mat(&acc, self.inv_n()))
    }

    /// Unrescaled linear images for t = 0..=steps: raw for `Raw` and
    /// `Normalised`, metric-weighted for `Metric`.
    pub fn trajectory(&self, x: &XMat, steps: u32, formalism: Formalism) -> Result<Vec<XMat>> {
        match formalism {
            Formalism::Raw | Formalism::Normalised => Ok(self.raw_trajectory(x, steps)),
            Formalism::Metric => self.metric_trajectory(x, steps),
        }
    }

    /// Coin states for t = 0..=steps. Normalised and metric states are
    /// divided by their trace; raw states are returned as they are.
    pub fn states(&self, rho0: &CoinState, steps: u32, formalism: Formalism) -> Result<Vec<CoinState>> {
        let traj = self.trajectory(rho0.exact(), steps, formalism)?;
        Ok(traj
            .into_iter()
            .map(|m| CoinState::from_exact(rescale(&m, formalism), formalism))
            .collect())
    }

    /// Coin state at a single time.
    pub fn state_at(&self, rho0: &CoinState, t: u32, formalism: Formalism) -> Result<CoinState> {
        let m = match formalism {
            Formalism::Raw | Formalism::Normalised => self.raw_at(rho0.exact(), t),
            Formalism::Metric => self.metric_at(rho0.exact(), t)?,
        };
        Ok(CoinState::from_exact(rescale(&m, formalism), formalism))
    }
}

/// V (Λ^t M Λ^{−t}) V⁻¹.
fn metric_term(s: &Spectrum, m: &XMat, pw: &[Cdd; 2], pinv: &[Cdd; 2]) -> XMat {
    let mut n = XMat::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            n[(i, j)] = m[(i, j)] * pw[i] * pinv[j];
        }
    }
    s.v * n * s.vinv
}

fn rescale(m: &XMat, formalism: Formalism) -> XMat {
    match formalism {
        Formalism::Raw => *m,
        Formalism::Normalised | Formalism::Metric => m.scale(Cdd::ONE / m.trace()),
    }
}

/// Trace-normalised coin state ρ_N(t).
pub fn evolve_normalised(p: &WalkParams, rho0: &CoinState, t: u32, grid: &KGrid) -> CoinState {
    ReducedDynamics::new(p, grid)
        .state_at(rho0, t, Formalism::Normalised)
        .expect("raw evolution does not fail")
}

/// Unnormalised coin state ρ_c(t) = ⟨W^t ρ₀ W^{†t}⟩_k.
pub fn evolve_raw(p: &WalkParams, rho0: &CoinState, t: u32, grid: &KGrid) -> CoinState {
    ReducedDynamics::new(p, grid)
        .state_at(rho0, t, Formalism::Raw)
        .expect("raw evolution does not fail")
}

/// Metric-formalism coin state ρ̄_c(t), divided by its (constant) trace.
pub fn evolve_metric(p: &WalkParams, rho0: &CoinState, t: u32, grid: &KGrid) -> Result<CoinState> {
    ReducedDynamics::new(p, grid).state_at(rho0, t, Formalism::Metric)
}

/// Trace of the unrescaled coin state for t = 0..=steps.
///
/// `Raw` and `Normalised` report the trace before normalisation; `Metric`
/// reports the trace before the constant rescaling.
pub fn trace_series(
    p: &WalkParams,
    rho0: &CoinState,
    steps: u32,
    grid: &KGrid,
    formalism: Formalism,
) -> Result<MeasureSeries> {
    let dynamics = ReducedDynamics::new(p, grid);
    let traj = dynamics.trajectory(rho0.exact(), steps, formalism)?;
    let flags = PointFlags {
        beyond_ep: regime(p) == Regime::Broken,
        ..PointFlags::default()
    };
    let mut series = MeasureSeries::new(format!("trace_{formalism}"));
    for (t, m) in traj.iter().enumerate() {
        series.push(t as u32, m.trace().re.to_f64(), flags);
    }
    Ok(series)
}
