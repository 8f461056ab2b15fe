//! Map matrices, intermediate maps, Choi matrices and the RHP measure.
//!
//! Vectorization is row-major: vec(X)[2i + j] = X[i][j], so
//! vec(A X B) = (A ⊗ Bᵀ) vec(X). Column 2i + j of a map matrix is
//! vec Λ(|i⟩⟨j|).

use crate::evolution::{Formalism, ReducedDynamics};
use crate::numerics::dd::{Cdd, Dd, XMat};
use crate::numerics::{pinv, trace_norm, CMat, C64};
use crate::series::{MeasureSeries, PointFlags};
use crate::walk::{regime, KGrid, Regime, WalkParams};
use crate::Result;

/// Relative singular-value cutoff of the pseudo-inverse fallback.
pub const DEFAULT_RTOL: f64 = 1e-10;

/// Row-major vectorization of a 2×2 matrix.
pub fn vec(m: &CMat) -> [C64; 4] {
    assert_eq!(m.dim(), 2, "vec expects a 2×2 matrix");
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Inverse of [`vec`].
pub fn devec(v: &[C64; 4]) -> CMat {
    CMat::mat2([[v[0], v[1]], [v[2], v[3]]])
}

fn basis(i: usize, j: usize) -> XMat {
    let mut e = XMat::zeros(2);
    e[(i, j)] = Cdd::ONE;
    e
}

/// Superoperator of a coin map from `from_t` to `to_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMatrix {
    matrix: XMat,
    from_t: u32,
    to_t: u32,
    pseudo_inverted: bool,
}

impl MapMatrix {
    pub fn new(matrix: CMat, from_t: u32, to_t: u32) -> Self {
        MapMatrix::from_exact(XMat::from_cmat(&matrix), from_t, to_t)
    }

    pub fn from_exact(matrix: XMat, from_t: u32, to_t: u32) -> Self {
        assert_eq!(matrix.dim(), 4, "map matrices are 4×4");
        MapMatrix {
            matrix,
            from_t,
            to_t,
            pseudo_inverted: false,
        }
    }

    pub fn identity(t: u32) -> Self {
        MapMatrix::from_exact(XMat::identity(4), t, t)
    }

    pub fn matrix(&self) -> CMat {
        self.matrix.to_cmat()
    }

    pub fn exact(&self) -> &XMat {
        &self.matrix
    }

    pub fn from_t(&self) -> u32 {
        self.from_t
    }

    pub fn to_t(&self) -> u32 {
        self.to_t
    }

    /// Whether a pseudo-inverse entered this map.
    pub fn pseudo_inverted(&self) -> bool {
        self.pseudo_inverted
    }

    /// devec(L · vec(X)).
    pub fn apply(&self, x: &XMat) -> XMat {
        let v = [x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]];
        let out = self.matrix.mul_vec(&v);
        let mut m = XMat::zeros(2);
        m[(0, 0)] = out[0];
        m[(0, 1)] = out[1];
        m[(1, 0)] = out[2];
        m[(1, 1)] = out[3];
        m
    }
}

/// X ↦ U X U†, i.e. U ⊗ Ū.
pub fn unitary_channel(u: &CMat, from_t: u32, to_t: u32) -> MapMatrix {
    MapMatrix::new(u.kron(&u.conj()), from_t, to_t)
}

/// L(t, 0) for t = 0..=steps.
///
/// Normalised and raw evolutions share the linear map X ↦ ⟨W^t X W^{†t}⟩_k;
/// the trace division of the normalised method is not linear and is left
/// out. The metric map is X ↦ ⟨W^t X W^{†t} G(k, t)⟩_k composed with the
/// inverse of its t = 0 member X ↦ X·⟨G(k, 0)⟩_k, so L(0, 0) = I and the map
/// acts on states expressed in the t = 0 metric frame.
pub fn map_chain(p: &WalkParams, steps: u32, grid: &KGrid, formalism: Formalism) -> Result<Vec<MapMatrix>> {
    let dynamics = ReducedDynamics::new(p, grid);
    let mut columns = Vec::with_capacity(4);
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        columns.push(dynamics.trajectory(&basis(i, j), steps, formalism)?);
    }
    let frame = match formalism {
        Formalism::Metric => {
            let g0 = dynamics.mean_metric0()?;
            let g0_inv = g0
                .inverse()
                .expect("mean metric is positive definite away from the EP");
            Some(XMat::identity(2).kron(&g0_inv.transpose()))
        }
        _ => None,
    };
    Ok((0..=steps as usize)
        .map(|t| {
            let mut m = XMat::zeros(4);
            for (c, col) in columns.iter().enumerate() {
                let x = &col[t];
                m[(0, c)] = x[(0, 0)];
                m[(1, c)] = x[(0, 1)];
                m[(2, c)] = x[(1, 0)];
                m[(3, c)] = x[(1, 1)];
            }
            if let Some(f) = frame {
                m = m * f;
            }
            MapMatrix::from_exact(m, 0, t as u32)
        })
        .collect())
}

/// L(t, 0) at a single time.
pub fn map_matrix(p: &WalkParams, t: u32, grid: &KGrid, formalism: Formalism) -> Result<MapMatrix> {
    Ok(*map_chain(p, t, grid, formalism)?.last().expect("chain is non-empty"))
}

/// Largest condition estimate ‖L‖_F·‖L⁻¹‖_F for which the double-double
/// inverse of a map matrix is trusted. Its error grows as cond·2⁻¹⁰⁴, about
/// 5e-8 at the limit.
pub const DD_COND_LIMIT: f64 = 1e24;

/// L(t+1, t) = L(t+1, 0)·L(t, 0)⁻¹.
///
/// Uses the double-double inverse of `curr` while its condition estimate
/// stays below [`DD_COND_LIMIT`]; otherwise the f64 pseudo-inverse with
/// relative cutoff `rtol`, and the result is flagged.
pub fn intermediate_map(next: &MapMatrix, curr: &MapMatrix, rtol: f64) -> MapMatrix {
    let norm = curr.matrix().norm();
    let exact_inverse = curr
        .matrix
        .inverse()
        .filter(|inv| inv.is_finite() && norm * inv.to_cmat().norm() <= DD_COND_LIMIT);
    let (matrix, pseudo) = match exact_inverse {
        Some(inv) => (next.matrix * inv, false),
        None => (XMat::from_cmat(&(next.matrix() * pinv(&curr.matrix(), rtol))), true),
    };
    MapMatrix {
        matrix,
        from_t: curr.to_t,
        to_t: next.to_t,
        pseudo_inverted: pseudo || next.pseudo_inverted || curr.pseudo_inverted,
    }
}

/// Choi matrix of a coin map, normalised so the identity map gives |Φ⟩⟨Φ|
/// with |Φ⟩ = (|00⟩ + |11⟩)/√2.
///
/// Factor order follows the swap construction U₂↔₃(L ⊗ I)U₂↔₃ vec|Φ⟩⟨Φ|:
/// the output of the map is the first tensor factor,
/// 𝒞 = ½ Σ_ij Λ(|i⟩⟨j|) ⊗ |i⟩⟨j|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix {
    matrix: XMat,
    from_t: u32,
    to_t: u32,
    pseudo_inverted: bool,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> CMat {
        self.matrix.to_cmat()
    }

    pub fn exact(&self) -> &XMat {
        &self.matrix
    }

    pub fn from_t(&self) -> u32 {
        self.from_t
    }

    pub fn to_t(&self) -> u32 {
        self.to_t
    }

    pub fn pseudo_inverted(&self) -> bool {
        self.pseudo_inverted
    }

    /// Trace, evaluated before rounding.
    pub fn trace(&self) -> C64 {
        self.matrix.trace().to_c64()
    }

    /// Partial trace over the output factor; I/2 for trace-preserving maps.
    pub fn output_partial_trace(&self) -> CMat {
        let mut r = XMat::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                r[(i, j)] = self.matrix[(i, j)] + self.matrix[(2 + i, 2 + j)];
            }
        }
        r.to_cmat()
    }

    /// ‖𝒞‖₁.
    pub fn trace_norm(&self) -> f64 {
        trace_norm(&self.matrix())
    }
}

pub fn choi_of_map(l: &MapMatrix) -> ChoiMatrix {
    let half = Cdd::from(Dd::new(0.5));
    let mut c = XMat::zeros(4);
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    c[(2 * a + i, 2 * b + j)] = l.matrix[(2 * a + b, 2 * i + j)] * half;
                }
            }
        }
    }
    ChoiMatrix {
        matrix: c,
        from_t: l.from_t,
        to_t: l.to_t,
        pseudo_inverted: l.pseudo_inverted,
    }
}

/// Per-step RHP data.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RhpSeries {
    /// g(t) = ‖𝒞(L(t+1, t))‖₁ − 1, unclamped.
    pub g: MeasureSeries,
    /// 𝓘(t) = Σ_{s=1}^{t} g(s), with 𝓘(0) = 0.
    pub cumulative: MeasureSeries,
    /// 2·tr 𝒞(L(t+1, t)); 2 for trace-preserving intermediate maps.
    pub choi_trace: MeasureSeries,
    /// max |tr_out 𝒞 − I/2| entry-wise.
    pub partial_trace_error: MeasureSeries,
}

/// RHP data from a chain L(t, 0), t = 0..=T+1, giving points t = 0..=T.
pub fn rhp_from_maps(chain: &[MapMatrix], rtol: f64, beyond_ep: bool) -> RhpSeries {
    let mut out = RhpSeries {
        g: MeasureSeries::new("g"),
        cumulative: MeasureSeries::new("rhp"),
        choi_trace: MeasureSeries::new("choi_trace_x2"),
        partial_trace_error: MeasureSeries::new("choi_partial_trace_error"),
    };
    let half_identity = CMat::real2([[0.5, 0.0], [0.0, 0.5]]);
    let mut acc = 0.0;
    for (t, pair) in chain.windows(2).enumerate() {
        let step = intermediate_map(&pair[1], &pair[0], rtol);
        let choi = choi_of_map(&step);
        let g = choi.trace_norm() - 1.0;
        if t > 0 {
            acc += g;
        }
        let flags = PointFlags {
            pseudo_inverted: step.pseudo_inverted(),
            beyond_ep,
        };
        let t = t as u32;
        out.g.push(t, g, flags);
        out.cumulative.push(t, acc, flags);
        out.choi_trace.push(t, 2.0 * choi.trace().re, flags);
        out.partial_trace_error
            .push(t, choi.output_partial_trace().max_abs_diff(&half_identity), flags);
    }
    out
}

/// RHP data for t = 0..=steps.
pub fn rhp_series(p: &WalkParams, steps: u32, grid: &KGrid, formalism: Formalism, rtol: f64) -> Result<RhpSeries> {
    let chain = map_chain(p, steps + 1, grid, formalism)?;
    let mut out = rhp_from_maps(&chain, rtol, regime(p) == Regime::Broken);
    for s in [&mut out.g, &mut out.cumulative, &mut out.choi_trace, &mut out.partial_trace_error] {
        s.label = format!("{}_{formalism}", s.label);
    }
    Ok(out)
}
