//! Position-space reference implementation on a periodic lattice.
//!
//! Builds the full 2N×2N walk operator and evolves the joint state directly,
//! without the momentum decomposition. On N sites the lattice momenta are
//! exactly the unshifted N-point grid, so the reduced states must agree with
//! [`super::ReducedDynamics`].

use nalgebra::DMatrix;

use super::{CoinState, Formalism};
use crate::numerics::dd::XMat;
use crate::numerics::{c64, CMat, NumericsError, C64};
use crate::walk::{coin_operator, gain_loss, WalkParams};
use crate::{Error, Result};

pub type DMat = DMatrix<C64>;

/// Condition of the full eigenvector matrix above which the metric branch
/// refuses to build G.
pub const FULL_COND_LIMIT: f64 = 1e10;

/// Joint position ⊗ coin state on a periodic lattice; basis index `2x + c`
/// with the origin at x = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    sites: usize,
    matrix: DMat,
    formalism: Formalism,
}

impl FullState {
    /// |0⟩⟨0| ⊗ ρ_coin.
    pub fn localized(sites: usize, coin: &CoinState) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidState("lattice needs at least one site".into()));
        }
        let c = coin.matrix();
        let mut m = DMat::zeros(2 * sites, 2 * sites);
        for a in 0..2 {
            for b in 0..2 {
                m[(a, b)] = c[(a, b)];
            }
        }
        Ok(FullState {
            sites,
            matrix: m,
            formalism: Formalism::Raw,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn matrix(&self) -> &DMat {
        &self.matrix
    }

    pub fn formalism(&self) -> Formalism {
        self.formalism
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Partial trace over position.
    pub fn reduced(&self) -> CMat {
        let mut r = CMat::zeros(2);
        for x in 0..self.sites {
            for a in 0..2 {
                for b in 0..2 {
                    r[(a, b)] += self.matrix[(2 * x + a, 2 * x + b)];
                }
            }
        }
        r
    }

    /// Reduced state tagged with this state's formalism.
    pub fn coin_state(&self) -> CoinState {
        CoinState::from_exact(XMat::from_cmat(&self.reduced()), self.formalism)
    }
}

fn coin_block(sites: usize, m: &CMat) -> DMat {
    let mut out = DMat::zeros(2 * sites, 2 * sites);
    for x in 0..sites {
        for a in 0..2 {
            for b in 0..2 {
                out[(2 * x + a, 2 * x + b)] = m[(a, b)];
            }
        }
    }
    out
}

/// Conditional shift: |x, ↑⟩ → |x+1, ↑⟩, |x, ↓⟩ → |x−1, ↓⟩, periodic.
fn shift(sites: usize) -> DMat {
    let mut s = DMat::zeros(2 * sites, 2 * sites);
    for x in 0..sites {
        let right = (x + 1) % sites;
        let left = (x + sites - 1) % sites;
        s[(2 * right, 2 * x)] += c64(1.0, 0.0);
        s[(2 * left + 1, 2 * x + 1)] += c64(1.0, 0.0);
    }
    s
}

/// W = S·Ḡ⁻¹·C̄(θ2)·S·Ḡ·C̄(θ1) on `sites` lattice points.
pub fn full_walk_operator(p: &WalkParams, sites: usize) -> DMat {
    let s = shift(sites);
    let g = coin_block(sites, &gain_loss(p.gamma));
    let gi = coin_block(sites, &gain_loss(-p.gamma));
    let c1 = coin_block(sites, &coin_operator(p.theta1));
    let c2 = coin_block(sites, &coin_operator(p.theta2));
    &s * gi * c2 * &s * g * c1
}

/// Eigenvalue clusters of W with orthogonal projectors onto each eigenspace.
struct FullSpectrum {
    clusters: Vec<(C64, DMat)>,
}

impl FullSpectrum {
    fn new(w: &DMat) -> Result<Self> {
        let n = w.nrows();
        let scale = w.norm().max(1e-300);
        let (_, t) = w.clone().schur().unpack();
        let mut vals: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
        vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

        let mut groups: Vec<Vec<C64>> = Vec::new();
        for v in vals {
            let tol = 1e-7 * v.norm().max(1.0);
            match groups
                .iter_mut()
                .find(|g| g.iter().any(|u| (u - v).norm() <= tol))
            {
                Some(g) => g.push(v),
                None => groups.push(vec![v]),
            }
        }

        let mut clusters = Vec::with_capacity(groups.len());
        let mut basis: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(n);
        for g in groups {
            let lambda = g.iter().sum::<C64>() / g.len() as f64;
            let shifted = w - DMat::identity(n, n) * lambda;
            let svd = shifted.clone().svd(false, true);
            let v_t = svd.v_t.expect("requested V");
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
            let mut proj = DMat::zeros(n, n);
            for &idx in order.iter().take(g.len()) {
                let v = v_t.row(idx).transpose().map(|z| z.conj());
                let residual = (&shifted * &v).norm();
                if residual > 1e-6 * scale {
                    return Err(NumericsError::NonDiagonalizable {
                        condition: f64::INFINITY,
                    }
                    .into());
                }
                proj += &v * v.adjoint();
                basis.push(v);
            }
            clusters.push((lambda, proj));
        }

        let e = DMat::from_columns(&basis);
        let sv = e.singular_values();
        let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition.is_nan() || condition > FULL_COND_LIMIT {
            return Err(NumericsError::NonDiagonalizable { condition }.into());
        }
        Ok(FullSpectrum { clusters })
    }

    /// G(t) = (Σ_c |λ_c|^{2t} P_c)⁻¹.
    fn metric(&self, t: u32) -> Result<DMat> {
        let n = self.clusters[0].1.nrows();
        let mut sum = DMat::zeros(n, n);
        for (lambda, p) in &self.clusters {
            sum += p * c64(lambda.norm().powi(2 * t as i32), 0.0);
        }
        sum.try_inverse().ok_or_else(|| {
            NumericsError::Singular { ratio: 0.0 }.into()
        })
    }
}

/// Evolves a joint state for `t` steps on its own lattice.
///
/// `Metric` uses W^t ρ₀ W^{†t} G(t) with G built from the eigenspaces of the
/// full walk operator and divides by the (constant) trace.
pub fn evolve_full(p: &WalkParams, rho0: &FullState, t: u32, formalism: Formalism) -> Result<FullState> {
    let w = full_walk_operator(p, rho0.sites);
    let mut wt = DMat::identity(w.nrows(), w.ncols());
    for _ in 0..t {
        wt = &w * wt;
    }
    let mut m = &wt * &rho0.matrix * wt.adjoint();
    match formalism {
        Formalism::Raw => {}
        Formalism::Normalised => {
            let tr = m.trace();
            m /= tr;
        }
        Formalism::Metric => {
            let spec = FullSpectrum::new(&w)?;
            m *= spec.metric(t)?;
            let tr = m.trace();
            m /= tr;
        }
    }
    Ok(FullState {
        sites: rho0.sites,
        matrix: m,
        formalism,
    })
}

/// Reduced coin state of the lattice evolution.
pub fn position_oracle(p: &WalkParams, rho0: &FullState, t: u32, formalism: Formalism) -> Result<CoinState> {
    Ok(evolve_full(p, rho0, t, formalism)?.coin_state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve_metric, evolve_normalised};
    use crate::walk::KGrid;

    #[test]
    fn zero_steps_returns_coin_factor() {
        let rho = CoinState::plus();
        let full = FullState::localized(9, &rho).unwrap();
        let out = position_oracle(&WalkParams::reference(0.2), &full, 0, Formalism::Normalised).unwrap();
        assert!(out.matrix().max_abs_diff(&rho.matrix()) < 1e-15);
    }

    #[test]
    fn lattice_matches_momentum_sum() {
        let p = WalkParams::reference(0.15);
        let sites = 16;
        let full = FullState::localized(sites, &CoinState::up()).unwrap();
        let grid = KGrid::new(sites).unwrap();
        for t in [1, 3, 7] {
            let a = position_oracle(&p, &full, t, Formalism::Normalised).unwrap().matrix();
            let b = evolve_normalised(&p, &CoinState::up(), t, &grid).matrix();
            assert!(a.max_abs_diff(&b) < 1e-10, "t = {t}");
        }
        for t in [0, 2, 5] {
            let a = position_oracle(&p, &full, t, Formalism::Metric).unwrap().matrix();
            let b = evolve_metric(&p, &CoinState::up(), t, &grid).unwrap().matrix();
            assert!(a.max_abs_diff(&b) < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn walk_operator_unitary_without_gain_loss() {
        let w = full_walk_operator(&WalkParams::reference(0.0), 8);
        let prod = &w * w.adjoint();
        assert!((prod - DMat::identity(16, 16)).norm() < 1e-12);
    }
}
