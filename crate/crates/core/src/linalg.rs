//! Small dense linear-algebra helpers on top of nalgebra: balanced eigenvalues,
//! inverse-iteration eigenvectors, discrete Lyapunov solves and spectrum matching.

use nalgebra::{Complex, DMatrix, DVector, Hessenberg, SymmetricEigen};

pub type C64 = Complex<f64>;

/// Parlett-Reinsch balancing. Returns the balanced matrix and the diagonal
/// scaling `d` with `balanced = D⁻¹ A D`.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = DVector::from_element(n, 1.0);
    let radix = 2.0_f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// iteration with exceptional shifts (the EISPACK `hqr` scheme). `None` if a
/// block fails to split within the iteration budget.
fn hqr(h: &DMatrix<f64>) -> Option<Vec<C64>> {
    let n = h.nrows() as isize;
    let mut a = h.clone();
    let mut out = vec![C64::new(0.0, 0.0); n as usize];
    let at = |i: isize, j: isize| (i as usize, j as usize);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += a[at(i, j)].abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = a[at(l - 1, l - 1)].abs() + a[at(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[at(l, l - 1)].abs() <= eps * s {
                    a[at(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[at(nn, nn)];
            if l == nn {
                out[nn as usize] = C64::new(x + t, 0.0);
                nn -= 1;
            } else {
                let mut y = a[at(nn - 1, nn - 1)];
                let mut w = a[at(nn, nn - 1)] * a[at(nn - 1, nn)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        let hi = x + z;
                        let lo = if z != 0.0 { x - w / z } else { hi };
                        out[(nn - 1) as usize] = C64::new(hi, 0.0);
                        out[nn as usize] = C64::new(lo, 0.0);
                    } else {
                        out[(nn - 1) as usize] = C64::new(x + p, z);
                        out[nn as usize] = C64::new(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return None;
                    }
                    if its > 0 && its % 10 == 0 {
                        t += x;
                        for i in 0..=nn {
                            a[at(i, i)] -= x;
                        }
                        let s = a[at(nn, nn - 1)].abs() + a[at(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a[at(m, m)];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[at(m + 1, m)] + a[at(m, m + 1)];
                        q = a[at(m + 1, m + 1)] - z - rr - ss;
                        r = a[at(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[at(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[at(m - 1, m - 1)].abs() + z.abs() + a[at(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        a[at(i + 2, i)] = 0.0;
                        if i != m {
                            a[at(i + 2, i - 1)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[at(k, k - 1)];
                            q = a[at(k + 1, k - 1)];
                            r = if k + 1 != nn { a[at(k + 2, k - 1)] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[at(k, k - 1)] = -a[at(k, k - 1)];
                                }
                            } else {
                                a[at(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a[at(k, j)] + q * a[at(k + 1, j)];
                                if k + 1 != nn {
                                    pp += r * a[at(k + 2, j)];
                                    a[at(k + 2, j)] -= pp * z;
                                }
                                a[at(k + 1, j)] -= pp * y;
                                a[at(k, j)] -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[at(i, k)] + y * a[at(i, k + 1)];
                                if k + 1 != nn {
                                    pp += z * a[at(i, k + 2)];
                                    a[at(i, k + 2)] -= pp * r;
                                }
                                a[at(i, k + 1)] -= pp * q;
                                a[at(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !(l < nn - 1) {
                break;
            }
        }
    }
    Some(out)
}

/// Eigenvalues of a real square matrix, sorted by (real, imag) for determinism.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    if a.nrows() == 0 {
        return Vec::new();
    }
    let (b, _) = balance(a);
    let hess = Hessenberg::new(b).h();
    let mut ev = hqr(&hess).expect("eigenvalue iteration failed to converge");
    // Conjugate pairs come out of the 2x2 blocks exactly symmetric; snap tiny
    // imaginary parts on real eigenvalues to zero.
    for z in ev.iter_mut() {
        if z.im.abs() <= 1e-13 * (1.0 + z.re.abs()) {
            z.im = 0.0;
        }
    }
    ev.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    ev
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Right eigenvector for an (approximate) eigenvalue `lambda`, by inverse
/// iteration on a slightly shifted complex system. Normalised to unit 2-norm
/// with the largest component real and positive.
pub fn eigenvector(a: &DMatrix<f64>, lambda: C64) -> DVector<C64> {
    let n = a.nrows();
    let scale = 1.0 + a.amax();
    let shift = lambda + C64::new(1e-10 * scale, 1e-10 * scale);
    let mut m: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut v = DVector::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
    for _ in 0..3 {
        let next = match lu.solve(&v) {
            Some(x) => x,
            None => break,
        };
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        v = next / C64::new(norm, 0.0);
    }
    let (imax, _) = v.iter().enumerate().fold(
        (0, 0.0),
        |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc },
    );
    let pivot = v[imax];
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / C64::new(pivot.norm(), 0.0);
        v *= phase;
    }
    v
}

/// Extreme eigenvalues (min, max) of a symmetric matrix.
pub fn sym_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Solve `Aᵀ X A − X + Q = 0` for Schur-stable `A` by Smith doubling.
/// Returns `None` when `A` is not Schur stable or the iteration stalls.
pub fn discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if spectral_radius(a) >= 1.0 {
        return None;
    }
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let inc = ak.transpose() * &x * &ak;
        x += &inc;
        ak = &ak * &ak;
        if inc.amax() <= 1e-15 * x.amax() {
            let x = (&x + x.transpose()) * 0.5;
            return Some(x);
        }
    }
    None
}

/// Participation of each state in the invariant subspace of the `k`
/// eigenvalues clustered at `lambda`: the moduli of the diagonal of the
/// spectral projector built from the `k` smallest singular directions of
/// `A − λI`. Entries sum to about `k`. Falls back to normalised right
/// eigenvector energy when the subspace is defective.
pub fn participation(a: &DMatrix<f64>, lambda: C64, k: usize) -> Vec<f64> {
    let n = a.nrows();
    let mut m: DMatrix<C64> = a.map(|v| C64::new(v, 0.0));
    for i in 0..n {
        m[(i, i)] -= lambda;
    }
    let Some(svd) = m.try_svd(true, true, f64::EPSILON, 2000) else {
        return vec![0.0; n];
    };
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return vec![0.0; n];
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let pick = &order[..k.min(n)];
    let right = DMatrix::from_fn(n, pick.len(), |r, c| v_t[(pick[c], r)].conj());
    let left = DMatrix::from_fn(n, pick.len(), |r, c| u[(r, pick[c])]);
    let gram = left.adjoint() * &right;
    if let Some(inv) = gram.clone().try_inverse() {
        let cond = gram.norm() * inv.norm();
        if cond.is_finite() && cond < 1e10 {
            let proj = &right * inv * left.adjoint();
            return (0..n).map(|i| proj[(i, i)].norm()).collect();
        }
    }
    let energy: Vec<f64> = (0..n)
        .map(|i| right.row(i).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let total: f64 = energy.iter().sum();
    energy
        .iter()
        .map(|e| e * pick.len() as f64 / total.max(f64::MIN_POSITIVE))
        .collect()
}

/// Greedy one-to-one matching of two spectra. True when every element of `a`
/// has a distinct partner in `b` within `tol·(1 + |λ|)`.
pub fn spectra_match(a: &[C64], b: &[C64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for za in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, zb) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let dist = (za - zb).norm();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
        match best {
            Some((j, d)) if d <= tol * (1.0 + za.norm()) => used[j] = true,
            _ => return false,
        }
    }
    true
}
