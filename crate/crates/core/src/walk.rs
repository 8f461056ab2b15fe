//! Walk operators in the coin (momentum) space, their spectra, and the
//! exceptional point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::dd::{Cdd, Dd, XMat};
use crate::numerics::{c64, CMat, C64};
use crate::{Error, Result};

/// Distance of `a` from ±1 below which the one-step operator is treated as
/// sitting on the exceptional point.
pub const EP_TOL: f64 = 1e-10;

/// Coin angles and non-Hermiticity of the split-step walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub theta1: f64,
    pub theta2: f64,
    pub gamma: f64,
}

impl WalkParams {
    /// The spectrum is even in γ (the two gain/loss operators are mutual
    /// inverses), so a negative γ is stored as |γ|.
    pub fn new(theta1: f64, theta2: f64, gamma: f64) -> Self {
        WalkParams {
            theta1,
            theta2,
            gamma: gamma.abs(),
        }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        WalkParams::new(self.theta1, self.theta2, gamma)
    }

    /// θ1 = π/4, θ2 = −π/7, the angles used throughout the reference runs.
    pub fn reference(gamma: f64) -> Self {
        WalkParams::new(PI / 4.0, -PI / 7.0, gamma)
    }
}

/// Uniform momentum grid `k_j = −π + offset + j·2π/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    n: usize,
    offset: f64,
}

impl KGrid {
    /// Grid including k = −π and k = 0 (for even n).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("grid needs at least one point".into()));
        }
        Ok(KGrid { n, offset: 0.0 })
    }

    /// Grid shifted by half a step, which avoids k = 0 and k = ±π.
    pub fn shifted(n: usize) -> Result<Self> {
        let g = KGrid::new(n)?;
        Ok(KGrid {
            n,
            offset: g.delta() / 2.0,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_shifted(&self) -> bool {
        self.offset != 0.0
    }

    pub fn delta(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -PI + self.offset + j as f64 * self.delta()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }
}

impl Default for KGrid {
    /// 512 points, shifted by half a step.
    fn default() -> Self {
        KGrid::shifted(512).expect("non-empty grid")
    }
}

/// C(θ) = [[cos θ, i sin θ], [i sin θ, cos θ]].
pub fn coin_operator(theta: f64) -> CMat {
    let (s, c) = theta.sin_cos();
    CMat::mat2([[c64(c, 0.0), c64(0.0, s)], [c64(0.0, s), c64(c, 0.0)]])
}

/// diag(e^γ, e^−γ).
pub fn gain_loss(gamma: f64) -> CMat {
    CMat::real2([[gamma.exp(), 0.0], [0.0, (-gamma).exp()]])
}

/// diag(e^{ik}, e^{−ik}).
pub fn shift_k(k: f64) -> CMat {
    let e = C64::from_polar(1.0, k);
    CMat::mat2([[e, c64(0.0, 0.0)], [c64(0.0, 0.0), e.conj()]])
}

/// W_c(k) = S(k)·G⁻¹·C(θ2)·S(k)·G·C(θ1).
pub fn coin_walk_operator(p: &WalkParams, k: f64) -> CMat {
    let s = shift_k(k);
    s * gain_loss(-p.gamma) * coin_operator(p.theta2) * s * gain_loss(p.gamma) * coin_operator(p.theta1)
}

/// Same product as [`coin_walk_operator`], accumulated in double-double.
pub fn coin_walk_operator_dd(p: &WalkParams, k: f64) -> XMat {
    let s = XMat::from_cmat(&shift_k(k));
    s * XMat::from_cmat(&gain_loss(-p.gamma))
        * XMat::from_cmat(&coin_operator(p.theta2))
        * s
        * XMat::from_cmat(&gain_loss(p.gamma))
        * XMat::from_cmat(&coin_operator(p.theta1))
}

/// a(k) = cos 2k·cos θ1·cos θ2 − cosh 2γ·sin θ1·sin θ2, half the trace of W_c(k).
pub fn a_coefficient(p: &WalkParams, k: f64) -> f64 {
    (2.0 * k).cos() * p.theta1.cos() * p.theta2.cos()
        - (2.0 * p.gamma).cosh() * p.theta1.sin() * p.theta2.sin()
}

/// λ₊ = a + √(a² − 1), with the root taken as i√(1 − a²) when |a| < 1.
fn lambda_plus_closed(a: f64) -> C64 {
    let d = a * a - 1.0;
    if d >= 0.0 {
        c64(a + d.sqrt(), 0.0)
    } else {
        c64(a, (-d).sqrt())
    }
}

/// Per-momentum spectral data of W_c(k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KEigenSystem {
    pub k: f64,
    pub a: f64,
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    /// ε = i·ln λ, principal branch.
    pub eps_plus: C64,
    pub eps_minus: C64,
    pub phi_plus: [C64; 2],
    pub phi_minus: [C64; 2],
}

/// Double-double eigendata of W_c(k): W = V·diag(λ₊, λ₋)·V⁻¹ with unit
/// columns of V.
#[derive(Debug, Clone, Copy)]
pub struct Spectrum {
    pub k: f64,
    pub a: f64,
    pub lambda: [Cdd; 2],
    pub v: XMat,
    pub vinv: XMat,
}

impl Spectrum {
    /// G_c(k, t) = Σ_i |λ_i|^{−2t} χ_i χ_i†, where χ_i† is row i of V⁻¹.
    ///
    /// Equal to (Σ_i |λ_i|^{2t} φ_i φ_i†)⁻¹ but formed without an inversion.
    pub fn metric(&self, t: u32) -> XMat {
        let mut g = XMat::zeros(2);
        for i in 0..2 {
            let w = Cdd::from(self.lambda[i].norm_sqr()).powi(-(t as i64));
            for r in 0..2 {
                for c in 0..2 {
                    g[(r, c)] += w * self.vinv[(i, r)].conj() * self.vinv[(i, c)];
                }
            }
        }
        g
    }

    /// Rounded one-step eigendata.
    pub fn to_eigensystem(&self) -> KEigenSystem {
        let lp = self.lambda[0].to_c64();
        let lm = self.lambda[1].to_c64();
        let i = c64(0.0, 1.0);
        let col = |j: usize| [self.v[(0, j)].to_c64(), self.v[(1, j)].to_c64()];
        KEigenSystem {
            k: self.k,
            a: self.a,
            lambda_plus: lp,
            lambda_minus: lm,
            eps_plus: i * lp.ln(),
            eps_minus: i * lm.ln(),
            phi_plus: col(0),
            phi_minus: col(1),
        }
    }
}

fn eigvec_dd(w: &XMat, lambda: Cdd) -> [Cdd; 2] {
    let v1 = [w[(0, 1)], lambda - w[(0, 0)]];
    let v2 = [lambda - w[(1, 1)], w[(1, 0)]];
    let n = |v: &[Cdd; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).hi;
    let v = if n(&v1) >= n(&v2) { v1 } else { v2 };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    // phase: first entry of largest modulus real positive
    let (m0, m1) = (v[0].norm().hi, v[1].norm().hi);
    let pivot = if m1 > m0 * (1.0 + 1e-12) { v[1] } else { v[0] };
    let phase = pivot.conj().scale(Dd::ONE / (pivot.norm() * norm));
    [v[0] * phase, v[1] * phase]
}

/// Double-double eigendata of W_c(k).
pub fn spectrum(p: &WalkParams, k: f64) -> Result<Spectrum> {
    let a = a_coefficient(p, k);
    if (a - 1.0).abs() < EP_TOL || (a + 1.0).abs() < EP_TOL {
        return Err(Error::ExceptionalPoint {
            gamma: p.gamma,
            k,
            a,
        });
    }
    let w = coin_walk_operator_dd(p, k);
    let half = w.trace().scale(Dd::new(0.5));
    let det = w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)];
    let root = (half * half - det).sqrt();
    let (c1, c2) = (half + root, half - root);
    let (big, _) = if c1.norm_sqr().hi >= c2.norm_sqr().hi {
        (c1, c2)
    } else {
        (c2, c1)
    };
    let small = det / big;
    // label by proximity to the closed form so λ₊ = a + √(a²−1) exactly
    let lp = lambda_plus_closed(a);
    let (plus, minus) = if (big.to_c64() - lp).norm() <= (small.to_c64() - lp).norm() {
        (big, small)
    } else {
        (small, big)
    };
    let fp = eigvec_dd(&w, plus);
    let fm = eigvec_dd(&w, minus);
    let mut v = XMat::zeros(2);
    v[(0, 0)] = fp[0];
    v[(1, 0)] = fp[1];
    v[(0, 1)] = fm[0];
    v[(1, 1)] = fm[1];
    let vdet = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
    let mut vinv = XMat::zeros(2);
    vinv[(0, 0)] = v[(1, 1)] / vdet;
    vinv[(0, 1)] = -v[(0, 1)] / vdet;
    vinv[(1, 0)] = -v[(1, 0)] / vdet;
    vinv[(1, 1)] = v[(0, 0)] / vdet;
    Ok(Spectrum {
        k,
        a,
        lambda: [plus, minus],
        v,
        vinv,
    })
}

/// Eigenvalues λ± = a ± √(a²−1), quasi-energies ε± = i·ln λ± and unit
/// eigenvectors of W_c(k).
///
/// Above the exceptional point λ₊ > 1 > λ₋ > 0, so Im ε₊ > 0 > Im ε₋.
pub fn eigensystem(p: &WalkParams, k: f64) -> Result<KEigenSystem> {
    Ok(spectrum(p, k)?.to_eigensystem())
}

/// γ_PT = ½·acosh[(cos θ1 cos θ2 − 1)/(sin θ1 sin θ2)].
///
/// This is where a(0) reaches 1. It is the first breaking point whenever
/// cos θ1 cos θ2 ≥ 0, which covers the angles used in practice; see
/// [`regime`] for the general test.
pub fn exceptional_point(theta1: f64, theta2: f64) -> Result<f64> {
    let s = theta1.sin() * theta2.sin();
    let arg = (theta1.cos() * theta2.cos() - 1.0) / s;
    // θ2 = −θ1 gives arg = 1 up to rounding: the walk breaks at γ = 0
    if s == 0.0 || !arg.is_finite() || arg < 1.0 - 1e-12 {
        return Err(Error::NoTransition { theta1, theta2 });
    }
    Ok(0.5 * arg.max(1.0).acosh())
}

/// Whether the parameters sit below, on, or beyond the PT-breaking threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Unbroken,
    Exceptional,
    Broken,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Unbroken => "unbroken",
            Regime::Exceptional => "exceptional",
            Regime::Broken => "broken",
        })
    }
}

/// Classifies by max_k |a(k)| = |cos θ1 cos θ2| + cosh 2γ·|sin θ1 sin θ2|.
pub fn regime(p: &WalkParams) -> Regime {
    let m = (p.theta1.cos() * p.theta2.cos()).abs()
        + (2.0 * p.gamma).cosh() * (p.theta1.sin() * p.theta2.sin()).abs();
    if (m - 1.0).abs() < EP_TOL {
        Regime::Exceptional
    } else if m > 1.0 {
        Regime::Broken
    } else {
        Regime::Unbroken
    }
}

/// Grid points with |a(k) ∓ 1| < `tol`, as (k, a) pairs.
pub fn grid_collisions(p: &WalkParams, grid: &KGrid, tol: f64) -> Vec<(f64, f64)> {
    grid.points()
        .into_iter()
        .map(|k| (k, a_coefficient(p, k)))
        .filter(|(_, a)| (a - 1.0).abs() < tol || (a + 1.0).abs() < tol)
        .collect()
}

/// γ_PT sampled on an inclusive (θ1, θ2) lattice. Cells without a
/// transition hold `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpGrid {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// Indexed `[i1][i2]`.
    pub gamma: Vec<Vec<Option<f64>>>,
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn ep_contour_grid(theta1_range: (f64, f64), theta2_range: (f64, f64), resolution: usize) -> EpGrid {
    let theta1 = linspace(theta1_range, resolution);
    let theta2 = linspace(theta2_range, resolution);
    let gamma = theta1
        .iter()
        .map(|&t1| {
            theta2
                .iter()
                .map(|&t2| exceptional_point(t1, t2).ok())
                .collect()
        })
        .collect();
    EpGrid {
        theta1,
        theta2,
        gamma,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig;

    const P4: f64 = PI / 4.0;
    const P7: f64 = -PI / 7.0;

    #[test]
    fn coin_examples() {
        assert!(coin_operator(0.0).max_abs_diff(&CMat::identity(2)) < 1e-16);
        let c = coin_operator(PI / 2.0);
        assert!(c.max_abs_diff(&CMat::mat2([[c64(0.0, 0.0), c64(0.0, 1.0)], [c64(0.0, 1.0), c64(0.0, 0.0)]])) < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let c = coin_operator(P4);
        assert!((c[(0, 0)] - c64(r, 0.0)).norm() < 1e-15);
        assert!((c[(0, 1)] - c64(0.0, r)).norm() < 1e-15);
        for th in [0.1, 1.3, -2.0] {
            let c = coin_operator(th);
            assert!(c.is_unitary(1e-12));
            assert_eq!(c, c.transpose());
            assert!((c.conj() * c).max_abs_diff(&CMat::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn gain_loss_examples() {
        assert_eq!(gain_loss(0.0), CMat::identity(2));
        let g = gain_loss(1.2_f64.ln());
        assert!((g[(0, 0)].re - 1.2).abs() < 1e-15);
        assert!((g[(1, 1)].re - 1.0 / 1.2).abs() < 1e-15);
        let g = gain_loss(0.29798);
        assert!((g[(0, 0)].re - 1.34714).abs() < 1e-5);
        assert!((g[(1, 1)].re - 0.74231).abs() < 1e-5);
        assert!((gain_loss(0.7) * gain_loss(-0.7)).max_abs_diff(&CMat::identity(2)) < 1e-15);
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_k(0.0), CMat::identity(2));
        assert!(shift_k(PI / 2.0).max_abs_diff(&CMat::from_diag(&[c64(0.0, 1.0), c64(0.0, -1.0)])) < 1e-15);
        assert!(shift_k(PI).max_abs_diff(&CMat::real2([[-1.0, 0.0], [0.0, -1.0]])) < 1e-15);
    }

    #[test]
    fn walk_operator_examples() {
        let p = WalkParams::new(0.0, 0.0, 0.0);
        let w = coin_walk_operator(&p, 0.37);
        let e = C64::from_polar(1.0, 0.74);
        assert!(w.max_abs_diff(&CMat::from_diag(&[e, e.conj()])) < 1e-15);

        let w = coin_walk_operator(&WalkParams::reference(0.0), 0.3);
        assert!(w.is_unitary(1e-12));

        let p = WalkParams::reference(0.2);
        let w = coin_walk_operator(&p, 0.0);
        assert!((w.trace() - c64(2.0 * a_coefficient(&p, 0.0), 0.0)).norm() < 1e-12);
        assert!((w.det() - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exceptional_point_values() {
        let g = exceptional_point(P4, P7).unwrap();
        assert!((g.exp() - 1.34714).abs() < 1e-4);
        assert!((g - 0.29798).abs() < 1e-4);
        let g = exceptional_point(P4, -PI / 6.0).unwrap();
        assert!((g.exp() - 1.243).abs() < 1e-3);
        assert!((a_coefficient(&WalkParams::reference(exceptional_point(P4, P7).unwrap()), 0.0) - 1.0).abs() < 1e-12);
        assert!(matches!(exceptional_point(P4, 0.0), Err(Error::NoTransition { .. })));
        assert!(matches!(exceptional_point(0.0, P7), Err(Error::NoTransition { .. })));
    }

    #[test]
    fn exceptional_point_matches_spectral_scan() {
        // smallest γ on a fine grid with a complex quasi-energy
        let (t1, t2) = (PI / 3.0, -PI / 6.0);
        let grid = KGrid::new(64).unwrap();
        let mut found = None;
        for i in 0..2000 {
            let gamma = i as f64 * 2.5e-4;
            let p = WalkParams::new(t1, t2, gamma);
            let broken = grid.points().into_iter().any(|k| match eigensystem(&p, k) {
                Ok(e) => e.eps_plus.im.abs() > 1e-8,
                Err(_) => false,
            });
            if broken {
                found = Some(gamma);
                break;
            }
        }
        let scanned = found.unwrap();
        let closed = exceptional_point(t1, t2).unwrap();
        assert!((scanned - closed).abs() < 1e-3, "{scanned} vs {closed}");
        assert!((closed.exp() - 1.468).abs() < 1e-3);
    }

    #[test]
    fn eigensystem_examples() {
        let e = eigensystem(&WalkParams::reference(0.0), 0.8).unwrap();
        assert!((e.lambda_plus.norm() - 1.0).abs() < 1e-12);
        assert!(e.eps_plus.im.abs() < 1e-10 && e.eps_minus.im.abs() < 1e-10);

        let gpt = exceptional_point(P4, P7).unwrap();
        assert!(matches!(
            eigensystem(&WalkParams::reference(gpt), 0.0),
            Err(Error::ExceptionalPoint { .. })
        ));

        let p = WalkParams::reference(0.35);
        let e = eigensystem(&p, 0.0).unwrap();
        assert!(e.a > 1.0);
        assert!(e.lambda_plus.im.abs() < 1e-14 && e.lambda_minus.im.abs() < 1e-14);
        assert!(e.lambda_plus.re > 1.0 && e.lambda_minus.re < 1.0 && e.lambda_minus.re > 0.0);
        assert!(((e.lambda_plus * e.lambda_minus) - c64(1.0, 0.0)).norm() < 1e-12);
        assert!(e.eps_plus.re.abs() < 1e-10 && e.eps_plus.im > 0.0);
        assert!(e.eps_minus.re.abs() < 1e-10 && e.eps_minus.im < 0.0);
        let numeric = eig(&coin_walk_operator(&p, 0.0)).unwrap();
        assert!((numeric.values[0] - e.lambda_plus).norm() < 1e-8);
        assert!((numeric.values[1] - e.lambda_minus).norm() < 1e-8);
    }

    #[test]
    fn eigenvectors_are_eigenvectors() {
        for &gamma in &[0.0, 0.15, 0.5] {
            for j in 0..17 {
                let k = -3.0 + 0.37 * j as f64;
                let p = WalkParams::reference(gamma);
                let w = coin_walk_operator(&p, k);
                let e = eigensystem(&p, k).unwrap();
                for (lam, phi) in [(e.lambda_plus, e.phi_plus), (e.lambda_minus, e.phi_minus)] {
                    let wv = w.mul_vec(&phi);
                    let res = ((wv[0] - lam * phi[0]).norm_sqr() + (wv[1] - lam * phi[1]).norm_sqr()).sqrt();
                    assert!(res < 1e-10 * w.norm());
                    assert!(((phi[0].norm_sqr() + phi[1].norm_sqr()) - 1.0).abs() < 1e-14);
                }
                // closed form labels
                let lp = lambda_plus_closed(e.a);
                assert!((e.lambda_plus - lp).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn metric_matches_inverse_definition() {
        let p = WalkParams::reference(0.2);
        let s = spectrum(&p, 0.5).unwrap();
        let es = s.to_eigensystem();
        for t in [0u32, 1, 5] {
            let mut sum = CMat::zeros(2);
            for (lam, phi) in [(es.lambda_plus, es.phi_plus), (es.lambda_minus, es.phi_minus)] {
                sum = sum + CMat::outer(&phi, &phi) * lam.norm().powi(2 * t as i32);
            }
            let g = crate::numerics::inv(&sum).unwrap();
            assert!(s.metric(t).to_cmat().max_abs_diff(&g) < 1e-10);
        }
    }

    #[test]
    fn regime_and_grid_checks() {
        let gpt = exceptional_point(P4, P7).unwrap();
        assert_eq!(regime(&WalkParams::reference(0.0)), Regime::Unbroken);
        assert_eq!(regime(&WalkParams::reference(gpt - 0.01)), Regime::Unbroken);
        assert_eq!(regime(&WalkParams::reference(gpt + 0.01)), Regime::Broken);
        let p = WalkParams::reference(gpt);
        assert!(!grid_collisions(&p, &KGrid::new(512).unwrap(), 1e-8).is_empty());
        assert!(grid_collisions(&p, &KGrid::default(), 1e-8).is_empty());
    }

    #[test]
    fn grid_layout() {
        let g = KGrid::new(4).unwrap();
        assert_eq!(g.points(), vec![-PI, -PI / 2.0, 0.0, PI / 2.0]);
        let s = KGrid::shifted(4).unwrap();
        assert!((s.point(0) + PI - PI / 4.0).abs() < 1e-15);
        assert!(KGrid::new(0).is_err());
        assert_eq!(KGrid::default().len(), 512);
    }

    #[test]
    fn contour_grid() {
        let g = ep_contour_grid((P4, P4), (P7, P7), 1);
        assert!((g.gamma[0][0].unwrap() - 0.29798).abs() < 1e-4);
        let g = ep_contour_grid((0.1, 3.0), (-3.0, 0.0), 7);
        assert!(g.gamma.iter().all(|row| row[6].is_none()));
        let g = ep_contour_grid((0.2, 1.4), (-1.4, -0.2), 5);
        for (i, row) in g.gamma.iter().enumerate() {
            let j = 4 - i; // θ2 = −θ1
            assert!((g.theta2[j] + g.theta1[i]).abs() < 1e-12);
            let closed = exceptional_point(g.theta1[i], -g.theta1[i]).unwrap();
            assert!((row[j].unwrap() - closed).abs() < 1e-6);
        }
    }

    #[test]
    fn negative_gamma_is_folded() {
        assert_eq!(WalkParams::new(0.1, 0.2, -0.3).gamma, 0.3);
    }
}
