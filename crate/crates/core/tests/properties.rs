use std::f64::consts::PI;

use proptest::prelude::*;

use ptwalk::evolution::{evolve_metric, evolve_normalised, trace_series, CoinState, Formalism, ReducedDynamics};
use ptwalk::measures::{
    blp_series, choi_of_map, devec, entanglement_entropy, rhp_from_maps, trace_distance, unitary_channel, vec,
    MapMatrix, DEFAULT_RTOL,
};
use ptwalk::numerics::{c64, eig, eigh, inv, pinv, singular_values, sqrtm_psd, svd, trace_norm, CMat, C64};
use ptwalk::walk::{
    a_coefficient, coin_operator, coin_walk_operator, eigensystem, shift_k, KGrid, WalkParams,
};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c64(re, im))
}

fn cmat(dim: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(complex(), dim * dim).prop_map(move |e| CMat::new(dim, &e).unwrap())
}

fn params() -> impl Strategy<Value = WalkParams> {
    (0.05..PI - 0.05, -PI + 0.05..-0.05, 0.0..0.8f64).prop_map(|(a, b, g)| WalkParams::new(a, b, g))
}

fn unitary() -> impl Strategy<Value = CMat> {
    (-PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c)| coin_operator(a) * shift_k(b) * coin_operator(c))
}

fn pure_state() -> impl Strategy<Value = CoinState> {
    (0.0..PI, 0.0..2.0 * PI).prop_map(|(th, ph)| {
        CoinState::pure([c64((th / 2.0).cos(), 0.0), C64::from_polar((th / 2.0).sin(), ph)]).unwrap()
    })
}

fn mixed_state() -> impl Strategy<Value = CoinState> {
    (pure_state(), pure_state(), 0.0..1.0f64).prop_map(|(a, b, w)| {
        CoinState::new(a.matrix() * w + b.matrix() * (1.0 - w)).unwrap()
    })
}

fn max_growth(p: &WalkParams, grid: &KGrid, steps: i32) -> f64 {
    grid.points()
        .iter()
        .map(|&k| {
            let a = a_coefficient(p, k).abs();
            let l = if a > 1.0 { a + (a * a - 1.0).sqrt() } else { 1.0 };
            l.powi(2 * steps)
        })
        .fold(1.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn svd_reconstructs(a in cmat(4)) {
        let d = svd(&a);
        let s = CMat::from_diag(&d.s.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
        prop_assert!((d.u * s * d.v.adjoint()).max_abs_diff(&a) < 1e-12);
        prop_assert!(d.u.is_unitary(1e-12) && d.v.is_unitary(1e-12));
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn trace_norm_bounds_trace(a in cmat(4)) {
        prop_assert!(trace_norm(&a) + 1e-12 >= a.trace().norm());
        prop_assert!((trace_norm(&a) - singular_values(&a).iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip(a in cmat(4)) {
        if let Ok(ai) = inv(&a) {
            let scale = a.max_abs() * ai.max_abs();
            prop_assert!((a * ai).max_abs_diff(&CMat::identity(4)) < 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn pinv_penrose(a in cmat(4), drop in 0usize..4) {
        // force a rank deficiency by zeroing one singular value
        let mut d = svd(&a);
        d.s[drop] = 0.0;
        let s = CMat::from_diag(&d.s.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
        let r = d.u * s * d.v.adjoint();
        let p = pinv(&r, 1e-10);
        prop_assert!((r * p * r).max_abs_diff(&r) < 1e-8);
        prop_assert!((p * r * p).max_abs_diff(&p) < 1e-8 * p.max_abs().max(1.0));
        prop_assert!((r * p).is_hermitian(1e-8));
        prop_assert!((p * r).is_hermitian(1e-8));
    }

    #[test]
    fn sqrtm_of_gram(a in cmat(2)) {
        let g = a.adjoint() * a;
        let r = sqrtm_psd(&g).unwrap();
        prop_assert!((r * r).max_abs_diff(&g) < 1e-10);
        prop_assert!(r.is_hermitian(1e-12));
    }

    #[test]
    fn eig_residuals(a in cmat(4)) {
        if let Ok(e) = eig(&a) {
            for (l, v) in e.values.iter().zip(&e.vectors) {
                let av = a.mul_vec(v);
                let res: f64 = av.iter().zip(v).map(|(x, y)| (x - y * l).norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(res < 1e-8 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn eigh_is_sorted_and_real(a in cmat(4)) {
        let h = (a + a.adjoint()) * 0.5;
        let (vals, vecs) = eigh(&h);
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(vecs.is_unitary(1e-10));
    }

    #[test]
    fn coin_walk_has_unit_determinant(p in params(), k in -PI..PI) {
        let w = coin_walk_operator(&p, k);
        prop_assert!((w.det() - c64(1.0, 0.0)).norm() < 1e-10);
        prop_assert!((w.trace() * 0.5 - c64(a_coefficient(&p, k), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn eigenvalues_pair_up(p in params(), k in -PI..PI) {
        if let Ok(e) = eigensystem(&p, k) {
            prop_assert!((e.lambda_plus * e.lambda_minus - c64(1.0, 0.0)).norm() < 1e-10);
            if e.a.abs() < 1.0 {
                prop_assert!((e.lambda_plus.norm() - 1.0).abs() < 1e-10);
            }
            let w = coin_walk_operator(&p, k);
            for (l, v) in [(e.lambda_plus, e.phi_plus), (e.lambda_minus, e.phi_minus)] {
                let wv = w.mul_vec(&v);
                prop_assert!(((wv[0] - v[0] * l).norm() + (wv[1] - v[1] * l).norm()) < 1e-8);
            }
        }
    }

    #[test]
    fn unitary_choi_is_pure(u in unitary()) {
        let c = choi_of_map(&unitary_channel(&u, 0, 1)).matrix();
        let (vals, _) = eigh(&c);
        prop_assert!(vals[0] > -1e-10);
        prop_assert!((vals[3] - 1.0).abs() < 1e-10);
        prop_assert!((trace_norm(&c) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitary_chain_has_vanishing_g(us in prop::collection::vec(unitary(), 1..12)) {
        let mut chain = vec![MapMatrix::identity(0)];
        let mut total = CMat::identity(2);
        for (t, u) in us.iter().enumerate() {
            total = *u * total;
            chain.push(unitary_channel(&total, 0, t as u32 + 1));
        }
        let r = rhp_from_maps(&chain, DEFAULT_RTOL, false);
        prop_assert!(r.g.values.iter().all(|g| g.abs() < 1e-8));
    }

    #[test]
    fn vec_round_trip(m in cmat(2)) {
        prop_assert_eq!(devec(&vec(&m)), m);
    }

    #[test]
    fn trace_distance_is_a_metric(a in mixed_state(), b in mixed_state(), c in mixed_state()) {
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!(ab <= trace_distance(&a, &c).unwrap() + trace_distance(&c, &b).unwrap() + 1e-12);
    }

    #[test]
    fn entropy_bounds_and_invariance(rho in mixed_state(), u in unitary()) {
        let ee = entanglement_entropy(&rho);
        prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&ee));
        let rotated = CoinState::new(u * rho.matrix() * u.adjoint()).unwrap();
        prop_assert!((ee - entanglement_entropy(&rotated)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn normalised_states_are_density_matrices(p in params(), rho in mixed_state(), t in 0u32..30) {
        let g = KGrid::shifted(64).unwrap();
        let s = evolve_normalised(&p, &rho, t, &g).matrix();
        prop_assert!(s.is_hermitian(1e-12));
        prop_assert!((s.trace() - c64(1.0, 0.0)).norm() < 1e-12);
        let (vals, _) = eigh(&s);
        prop_assert!(vals[0] > -1e-10);
    }

    #[test]
    fn metric_trace_is_constant(p in params(), rho in mixed_state()) {
        let g = KGrid::shifted(64).unwrap();
        // growth λ^{2t} must stay inside double-double range
        prop_assume!(max_growth(&p, &g, 30) < 1e20);
        if let Ok(s) = trace_series(&p, &rho, 30, &g, Formalism::Metric) {
            let first = s.values[0];
            prop_assert!(s.values.iter().all(|v| (v - first).abs() < 1e-8 * first.abs().max(1.0)));
        }
    }

    #[test]
    fn metric_spectrum_of_up_is_real_below_ep(gamma in 0.0..0.25f64, t in 0u32..30) {
        // holds for |↑⟩ at the reference angles; |+⟩ picks up Im λ ~ 1e-2
        let p = WalkParams::reference(gamma);
        let g = KGrid::shifted(64).unwrap();
        if let Ok(s) = evolve_metric(&p, &CoinState::up(), t, &g) {
            for l in s.exact().eigenvalues2() {
                prop_assert!(l.to_c64().im.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn evolution_is_linear(p in params(), a in mixed_state(), b in mixed_state(), w in 0.0..1.0f64) {
        let d = ReducedDynamics::new(&p, &KGrid::shifted(64).unwrap());
        let mix = a.exact().scale(c64(w, 0.0).into()) + b.exact().scale(c64(1.0 - w, 0.0).into());
        let lhs = d.raw_at(&mix, 9).to_cmat();
        let rhs = d.raw_at(a.exact(), 9).to_cmat() * w + d.raw_at(b.exact(), 9).to_cmat() * (1.0 - w);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10 * lhs.max_abs().max(1.0));
    }

    #[test]
    fn blp_is_non_decreasing(p in params(), a in pure_state(), b in pure_state()) {
        prop_assume!(a.matrix().max_abs_diff(&b.matrix()) > 1e-6);
        let g = KGrid::shifted(64).unwrap();
        let s = blp_series(&p, &a, &b, 25, &g, Formalism::Normalised).unwrap();
        prop_assert_eq!(s.values[0], 0.0);
        prop_assert!(s.values.windows(2).all(|w| w[1] >= w[0]));
    }
}
