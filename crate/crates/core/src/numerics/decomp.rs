//! Decompositions for [`CMat`]: SVD (one-sided Jacobi), Hermitian
//! eigensolver (cyclic Jacobi), general eigenvalues (closed form for 2×2,
//! shifted QR for 4×4), inverse, pseudo-inverse and PSD square root.

use super::{c64, CMat, NumericsError, ABS_FLOOR, C64};

const MAX_SWEEPS: usize = 80;

/// Eigenvector-matrix condition above which `eig` refuses to answer.
pub const EIG_COND_LIMIT: f64 = 1e12;
/// Relative singular-value threshold below which `inv` reports `Singular`.
pub const INV_RTOL: f64 = 1e-12;

/// Singular value decomposition `A = U·diag(s)·V†`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

/// Eigenvalues and unit-norm eigenvectors of a diagonalizable matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
    /// Condition number of the eigenvector matrix.
    pub condition: f64,
}

impl EigenDecomp {
    /// Matrix whose columns are the eigenvectors.
    pub fn vector_matrix(&self) -> CMat {
        CMat::from_columns(&self.vectors)
    }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Scales to unit norm and fixes the phase so that the first entry of
/// largest modulus is real and positive.
pub(crate) fn normalize_phase(v: &mut [C64]) {
    let n = norm2(v);
    if n == 0.0 {
        return;
    }
    let mut pivot = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        // small slack so numerically tied entries pick the first one
        if z.norm() > best * (1.0 + 1e-12) {
            best = z.norm();
            pivot = i;
        }
    }
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z = *z * phase / n;
    }
}

/// One-sided Jacobi SVD.
pub fn svd(a: &CMat) -> Svd {
    let n = a.dim();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<C64>> = (0..n).map(|j| CMat::identity(n).column(j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma = dot(&cols[p], &cols[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for vecs in [&mut cols, &mut vcols] {
                    let (lo, hi) = vecs.split_at_mut(q);
                    for (yp, yq) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let xp = *yp;
                        let xq = *yq * phase;
                        *yp = xp * c - xq * s;
                        *yq = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let smax = sig[order[0]];

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for &j in &order {
        s.push(sig[j]);
        v_cols.push(vcols[j].clone());
        if sig[j] > smax * 1e-300 && sig[j] > 0.0 {
            u_cols.push(cols[j].iter().map(|z| z / sig[j]).collect());
        } else {
            u_cols.push(Vec::new());
        }
    }
    complete_basis(&mut u_cols, n);
    Svd {
        u: CMat::from_columns(&u_cols),
        s,
        v: CMat::from_columns(&v_cols),
    }
}

/// Fills empty slots of `cols` with unit vectors orthogonal to the others.
fn complete_basis(cols: &mut [Vec<C64>], n: usize) {
    for slot in 0..cols.len() {
        if !cols[slot].is_empty() {
            continue;
        }
        for e in 0..n {
            let mut cand = vec![c64(0.0, 0.0); n];
            cand[e] = c64(1.0, 0.0);
            for other in cols.iter().filter(|c| !c.is_empty()) {
                let proj = dot(other, &cand);
                for i in 0..n {
                    cand[i] -= other[i] * proj;
                }
            }
            let nrm = norm2(&cand);
            if nrm > 1e-6 {
                cols[slot] = cand.iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    svd(a).s
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).iter().sum()
}

/// Two-norm condition number; infinite for singular input.
pub fn cond(a: &CMat) -> f64 {
    let s = singular_values(a);
    let smin = *s.last().unwrap();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        s[0] / smin
    }
}

/// Hermitian eigendecomposition by cyclic Jacobi. Eigenvalues ascending;
/// columns of the returned matrix are the eigenvectors.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.dim();
    // symmetrize so round-off in the input cannot stall the sweep
    let mut m = (*a + a.adjoint()) * 0.5;
    let mut v = CMat::identity(n);
    let scale = m.norm().max(ABS_FLOOR);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 {
                    continue;
                }
                let e = apq / g; // e^{iφ}
                let zeta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane
                let jpp = c64(c, 0.0);
                let jpq = c64(s, 0.0);
                let jqp = e.conj() * (-s);
                let jqq = e.conj() * c;
                for i in 0..n {
                    let xp = m[(i, p)];
                    let xq = m[(i, q)];
                    m[(i, p)] = xp * jpp + xq * jqp;
                    m[(i, q)] = xp * jpq + xq * jqq;
                    let yp = v[(i, p)];
                    let yq = v[(i, q)];
                    v[(i, p)] = yp * jpp + yq * jqp;
                    v[(i, q)] = yp * jpq + yq * jqq;
                }
                for j in 0..n {
                    let xp = m[(p, j)];
                    let xq = m[(q, j)];
                    m[(p, j)] = jpp.conj() * xp + jqp.conj() * xq;
                    m[(q, j)] = jpq.conj() * xp + jqq.conj() * xq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let cols: Vec<Vec<C64>> = order.iter().map(|&i| v.column(i)).collect();
    (values, CMat::from_columns(&cols))
}

/// Total order used for eigenvalues: modulus descending, then real part
/// descending, then imaginary part descending. Comparisons within `tol`
/// count as ties.
fn eig_before(a: C64, b: C64, tol: f64) -> bool {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > tol {
        return ma > mb;
    }
    if (a.re - b.re).abs() > tol {
        return a.re > b.re;
    }
    if (a.im - b.im).abs() > tol {
        return a.im > b.im;
    }
    false
}

fn sort_eigen<T>(items: &mut [(C64, T)], scale: f64) {
    let tol = 1e-12 * scale.max(ABS_FLOOR);
    // insertion sort: the tolerant comparison is not a strict total order
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && eig_before(items[j].0, items[j - 1].0, tol) {
            items.swap(j, j - 1);
            j -= 1;
        }
    }
}

fn eigenvalues2(a: &CMat) -> [C64; 2] {
    let half = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let det = a.det();
    let disc = (half * half - det).sqrt();
    let (p, m) = (half + disc, half - disc);
    // take the larger root directly and the smaller from the product
    let (big, small) = if p.norm() >= m.norm() { (p, m) } else { (m, p) };
    let small = if big.norm() > 0.0 && small.norm() < 1e-4 * big.norm() {
        det / big
    } else {
        small
    };
    [big, small]
}

/// Reduces a square matrix to upper Hessenberg form (Householder).
fn hessenberg(a: &CMat) -> CMat {
    let n = a.dim();
    let mut h = *a;
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let xn = norm2(&x);
        if xn <= 1e-300 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            c64(1.0, 0.0)
        };
        let mut v = x.clone();
        v[0] += phase * xn;
        let vn = norm2(&v);
        for z in v.iter_mut() {
            *z /= vn;
        }
        // H <- (I - 2vv†) H
        for j in 0..n {
            let s: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= v[i] * s * 2.0;
            }
        }
        // H <- H (I - 2vv†)
        for i in 0..n {
            let s: C64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= s * v[j].conj() * 2.0;
            }
        }
    }
    h
}

fn givens(x: C64, y: C64) -> (f64, C64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, c64(0.0, 0.0));
    }
    if x.norm() == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let c = x.norm() / r;
    let s = (x / x.norm()) * y.conj() / r;
    (c, s)
}

/// Eigenvalues by the shifted QR algorithm on the Hessenberg form.
fn eigenvalues_qr(a: &CMat) -> Vec<C64> {
    let n = a.dim();
    let mut h = hessenberg(a);
    let mut out = vec![c64(0.0, 0.0); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let floor = 1e-300_f64.max(a.norm() * 1e-300);
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if sub <= f64::EPSILON * diag || sub <= floor {
                h[(l, l - 1)] = c64(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 500 {
            // give up on further deflation; read the remaining diagonal
            for i in 0..=hi {
                out[i] = h[(i, i)];
            }
            break;
        }
        let shift = if iter % 11 == 10 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            let blk = CMat::mat2([
                [h[(hi - 1, hi - 1)], h[(hi - 1, hi)]],
                [h[(hi, hi - 1)], h[(hi, hi)]],
            ]);
            let [e1, e2] = eigenvalues2(&blk);
            if (e1 - h[(hi, hi)]).norm() <= (e2 - h[(hi, hi)]).norm() {
                e1
            } else {
                e2
            }
        };
        for i in l..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            for i in 0..=(k + 1).min(hi) {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -s * x + y * c;
            }
        }
        for i in l..=hi {
            h[(i, i)] += shift;
        }
    }
    out
}

/// Eigenvalues only, in the canonical order. Never fails.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    let vals = match a.dim() {
        2 => eigenvalues2(a).to_vec(),
        _ => eigenvalues_qr(a),
    };
    let mut items: Vec<(C64, ())> = vals.into_iter().map(|v| (v, ())).collect();
    sort_eigen(&mut items, a.norm());
    items.into_iter().map(|(v, _)| v).collect()
}

pub(crate) fn eigvec2(a: &CMat, lambda: C64, scale: f64) -> Option<Vec<C64>> {
    let v1 = [a[(0, 1)], lambda - a[(0, 0)]];
    let v2 = [lambda - a[(1, 1)], a[(1, 0)]];
    let (n1, n2) = (norm2(&v1), norm2(&v2));
    let best = if n1 >= n2 { v1 } else { v2 };
    if n1.max(n2) <= 1e-14 * scale.max(ABS_FLOOR) {
        return None;
    }
    let mut v = best.to_vec();
    normalize_phase(&mut v);
    Some(v)
}

/// Eigendecomposition with unit-norm eigenvectors.
///
/// 2×2 uses the characteristic polynomial directly; 4×4 takes eigenvalues
/// from shifted QR and eigenvectors from the null space of `A − λI`.
pub fn eig(a: &CMat) -> Result<EigenDecomp, NumericsError> {
    let n = a.dim();
    let scale = a.norm();
    let mut pairs: Vec<(C64, Vec<C64>)> = Vec::with_capacity(n);
    if n == 2 {
        let vals = eigenvalues2(a);
        let mut scalar_slot = 0;
        for lam in vals {
            let v = match eigvec2(a, lam, scale) {
                Some(v) => v,
                None => {
                    // A = λI: any basis works, hand out e1 then e2
                    let mut e = vec![c64(0.0, 0.0); 2];
                    e[scalar_slot] = c64(1.0, 0.0);
                    scalar_slot += 1;
                    e
                }
            };
            pairs.push((lam, v));
        }
    } else {
        let vals = eigenvalues_qr(a);
        let tol = 1e-8 * scale.max(ABS_FLOOR);
        let mut used = vec![false; n];
        for i in 0..n {
            if used[i] {
                continue;
            }
            let cluster: Vec<usize> = (i..n)
                .filter(|&j| !used[j] && (vals[j] - vals[i]).norm() <= tol)
                .collect();
            let mean: C64 =
                cluster.iter().map(|&j| vals[j]).sum::<C64>() / cluster.len() as f64;
            let shifted = *a - CMat::identity(n) * mean;
            let dec = svd(&shifted);
            for (slot, &j) in cluster.iter().enumerate() {
                used[j] = true;
                let mut v = dec.v.column(n - 1 - slot);
                normalize_phase(&mut v);
                pairs.push((vals[j], v));
            }
        }
    }
    sort_eigen(&mut pairs, scale);
    let (values, vectors): (Vec<C64>, Vec<Vec<C64>>) = pairs.into_iter().unzip();
    let condition = cond(&CMat::from_columns(&vectors));
    if condition.is_nan() || condition > EIG_COND_LIMIT {
        return Err(NumericsError::NonDiagonalizable { condition });
    }
    Ok(EigenDecomp {
        values,
        vectors,
        condition,
    })
}

/// Inverse; `Singular` when σ_min < 1e-12·σ_max.
pub fn inv(a: &CMat) -> Result<CMat, NumericsError> {
    let s = singular_values(a);
    let ratio = if s[0] > 0.0 { s[s.len() - 1] / s[0] } else { 0.0 };
    if ratio < INV_RTOL {
        return Err(NumericsError::Singular { ratio });
    }
    if a.dim() == 2 {
        let det = a.det();
        return Ok(CMat::mat2([
            [a[(1, 1)] / det, -a[(0, 1)] / det],
            [-a[(1, 0)] / det, a[(0, 0)] / det],
        ]));
    }
    Ok(gauss_jordan(a))
}

fn gauss_jordan(a: &CMat) -> CMat {
    let n = a.dim();
    let mut m = *a;
    let mut out = CMat::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .unwrap();
        if pivot != col {
            for j in 0..n {
                let t = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = t;
                let t = out[(col, j)];
                out[(col, j)] = out[(pivot, j)];
                out[(pivot, j)] = t;
            }
        }
        let p = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= p;
            out[(col, j)] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[(i, col)];
            if f == c64(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let mv = m[(col, j)];
                let ov = out[(col, j)];
                m[(i, j)] -= f * mv;
                out[(i, j)] -= f * ov;
            }
        }
    }
    out
}

/// Moore–Penrose pseudo-inverse, discarding singular values below
/// `rtol·σ_max`.
pub fn pinv(a: &CMat, rtol: f64) -> CMat {
    let n = a.dim();
    let dec = svd(a);
    let cutoff = rtol * dec.s[0];
    let mut out = CMat::zeros(n);
    for (k, &s) in dec.s.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let v = dec.v.column(k);
        let u = dec.u.column(k);
        out = out + CMat::outer(&v, &u) * (1.0 / s);
    }
    out
}

/// Principal square root of a Hermitian positive semi-definite matrix.
pub fn sqrtm_psd(a: &CMat) -> Result<CMat, NumericsError> {
    let scale = a.norm().max(ABS_FLOOR);
    let deviation = a.max_abs_diff(&a.adjoint());
    if deviation > 1e-10 * scale {
        return Err(NumericsError::NotHermitian { deviation });
    }
    let (vals, vecs) = eigh(a);
    if vals[0] < -1e-8 * scale {
        return Err(NumericsError::NotPsd { eigenvalue: vals[0] });
    }
    let roots: Vec<C64> = vals.iter().map(|&l| c64(l.max(0.0).sqrt(), 0.0)).collect();
    Ok(vecs * CMat::from_diag(&roots) * vecs.adjoint())
}
