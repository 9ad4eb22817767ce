use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg::{spectral_radius, sym_extremes};

/// Discrete plant seen by a static output feedback `u = F·y`:
/// `x⁺ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SofProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl SofProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Self {
        assert!(a.is_square(), "A must be square");
        assert_eq!(b.nrows(), a.nrows(), "B rows must match A");
        assert_eq!(c.ncols(), a.nrows(), "C columns must match A");
        Self { a, b, c }
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn closed_loop(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * f * &self.c
    }
}

/// The block matrix
/// `[[−P, −(A+BFC)ᵀNᵀ], [−N(A+BFC), P − N − Nᵀ]]`.
pub fn lmi_block(problem: &SofProblem, n_mat: &DMatrix<f64>, p_mat: &DMatrix<f64>, f: &DMatrix<f64>) -> DMatrix<f64> {
    let n = problem.states();
    let off = -(n_mat * problem.closed_loop(f));
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-p_mat));
    m.view_mut((n, 0), (n, n)).copy_from(&off);
    m.view_mut((0, n), (n, n)).copy_from(&off.transpose());
    m.view_mut((n, n), (n, n))
        .copy_from(&(p_mat - n_mat - n_mat.transpose()));
    m
}

/// Largest eigenvalue of [`lmi_block`]; the LMI holds iff this is negative
/// and `P ≻ 0`.
pub fn lmi_residual(problem: &SofProblem, n_mat: &DMatrix<f64>, p_mat: &DMatrix<f64>, f: &DMatrix<f64>) -> f64 {
    sym_extremes(&lmi_block(problem, n_mat, p_mat, f)).1
}

/// Feasibility evidence for a gain, re-verified from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiCertificate {
    pub p: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub min_eig_p: f64,
    pub max_eig_lmi: f64,
    pub spectral_radius: f64,
}

/// Margin required of a certificate on both eigenvalue tests.
pub const CERT_MARGIN: f64 = 1e-9;

impl LmiCertificate {
    /// Assemble the certificate for `(N, P, F)` and keep it only if every
    /// test passes.
    pub fn verify(problem: &SofProblem, n_mat: &DMatrix<f64>, p_mat: &DMatrix<f64>, f: &DMatrix<f64>) -> Option<Self> {
        if p_mat.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        let cert = Self {
            p: p_mat.clone(),
            n: n_mat.clone(),
            min_eig_p: sym_extremes(p_mat).0,
            max_eig_lmi: lmi_residual(problem, n_mat, p_mat, f),
            spectral_radius: spectral_radius(&problem.closed_loop(f)),
        };
        cert.holds().then_some(cert)
    }

    pub fn holds(&self) -> bool {
        self.max_eig_lmi < -CERT_MARGIN && self.min_eig_p > CERT_MARGIN && self.spectral_radius < 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Frobenius-norm bound on F, enforced by a barrier.
    pub gain_bound: f64,
    /// Stop once the centred maximum eigenvalue falls below `−target`.
    pub target: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gain_bound: 1e3,
            target: 1e-6,
            max_outer: 14,
            max_newton: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SofSolution {
    pub f: DMatrix<f64>,
    pub certificate: LmiCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Option<SofSolution>,
    /// Largest LMI eigenvalue at the last iterate.
    pub best_residual: f64,
    /// Final `P` iterate, certified or not.
    pub p: DMatrix<f64>,
    pub newton_steps: usize,
}

/// One symmetric rank-two piece `coef·(a bᵀ + b aᵀ)` of a basis matrix.
#[derive(Clone, Copy)]
enum Vec2 {
    Unit(usize),
    G(usize),
    H(usize),
}

#[derive(Clone, Copy)]
struct Term {
    coef: f64,
    a: Vec2,
    b: Vec2,
}

struct Cache {
    w: DMatrix<f64>,
    w2: DMatrix<f64>,
    wg: DMatrix<f64>,
    wh: DMatrix<f64>,
    gg: DMatrix<f64>,
    hh: DMatrix<f64>,
    hg: DMatrix<f64>,
    w2g: DMatrix<f64>,
    w2h: DMatrix<f64>,
}

impl Cache {
    /// `xᵀ W y` for basis vectors.
    fn bil(&self, x: Vec2, y: Vec2) -> f64 {
        use Vec2::*;
        match (x, y) {
            (Unit(i), Unit(j)) => self.w[(i, j)],
            (Unit(i), G(r)) | (G(r), Unit(i)) => self.wg[(i, r)],
            (Unit(i), H(c)) | (H(c), Unit(i)) => self.wh[(i, c)],
            (G(r), G(s)) => self.gg[(r, s)],
            (H(c), H(d)) => self.hh[(c, d)],
            (H(c), G(r)) | (G(r), H(c)) => self.hg[(c, r)],
        }
    }

    /// `xᵀ W² y` for basis vectors.
    fn bil2(&self, x: Vec2, y: Vec2, g: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
        use Vec2::*;
        match (x, y) {
            (Unit(i), Unit(j)) => self.w2[(i, j)],
            (Unit(i), G(r)) | (G(r), Unit(i)) => self.w2g[(i, r)],
            (Unit(i), H(c)) | (H(c), Unit(i)) => self.w2h[(i, c)],
            (G(r), G(s)) => g.column(r).dot(&self.w2g.column(s)),
            (H(c), H(d)) => h.column(c).dot(&self.w2h.column(d)),
            (H(c), G(r)) | (G(r), H(c)) => h.column(c).dot(&self.w2g.column(r)),
        }
    }

    fn trace_pair(&self, s: &Term, t: &Term) -> f64 {
        // tr(W (a bᵀ + b aᵀ) W (c dᵀ + d cᵀ)) = 2[(bᵀWc)(aᵀWd) + (bᵀWd)(aᵀWc)]
        let (a, b, c, d) = (s.a, s.b, t.a, t.b);
        2.0 * s.coef * t.coef * (self.bil(b, c) * self.bil(a, d) + self.bil(b, d) * self.bil(a, c))
    }
}

/// Barrier-method semidefinite solver for the output-feedback LMI with `N`
/// fixed. Minimises the largest eigenvalue of the block over `(P, F)`,
/// following the central path of `t·s − log det(sI − L(P, F))` with a
/// log barrier keeping `‖F‖ < gain_bound`. Returns as soon as a centred
/// iterate is strictly feasible, or when the duality bound proves the
/// optimum positive.
pub fn solve_sof(problem: &SofProblem, n_mat: &DMatrix<f64>, opts: &SolverOptions) -> SolveReport {
    solve_sof_from(problem, n_mat, None, opts)
}

/// [`solve_sof`] with the gain iterate started at `f_init` instead of zero.
pub fn solve_sof_from(
    problem: &SofProblem,
    n_mat: &DMatrix<f64>,
    f_init: Option<&DMatrix<f64>>,
    opts: &SolverOptions,
) -> SolveReport {
    let n = problem.states();
    let m_in = problem.b.ncols();
    let p_out = problem.c.nrows();
    assert_eq!(n_mat.shape(), (n, n), "N must match the plant state dimension");
    let dim = 2 * n;

    // Basis of the affine map: P entries (i ≤ j), then F entries, then s.
    let mut basis: Vec<Vec<Term>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let coef = if i == j { 0.5 } else { 1.0 };
            basis.push(vec![
                Term {
                    coef,
                    a: Vec2::Unit(i),
                    b: Vec2::Unit(j),
                },
                Term {
                    coef: -coef,
                    a: Vec2::Unit(n + i),
                    b: Vec2::Unit(n + j),
                },
            ]);
        }
    }
    let n_p = basis.len();
    for r in 0..m_in {
        for c in 0..p_out {
            basis.push(vec![Term {
                coef: 1.0,
                a: Vec2::G(r),
                b: Vec2::H(c),
            }]);
        }
    }
    let n_f = m_in * p_out;
    let n_var = n_p + n_f + 1;
    let s_idx = n_var - 1;

    // ĝ_r = [0; (N B)_r], ĥ_c = [C_cᵀ; 0]
    let nb = n_mat * &problem.b;
    let mut g = DMatrix::zeros(dim, m_in);
    g.view_mut((n, 0), (n, m_in)).copy_from(&nb);
    let mut h = DMatrix::zeros(dim, p_out);
    h.view_mut((0, 0), (n, p_out)).copy_from(&problem.c.transpose());

    let unpack = |x: &DVector<f64>| -> (DMatrix<f64>, DMatrix<f64>, f64) {
        let mut p = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                p[(i, j)] = x[k];
                p[(j, i)] = x[k];
                k += 1;
            }
        }
        let f = DMatrix::from_fn(m_in, p_out, |r, c| x[n_p + r * p_out + c]);
        (p, f, x[s_idx])
    };
    let slack = |x: &DVector<f64>| -> DMatrix<f64> {
        let (p, f, s) = unpack(x);
        let mut sm = -lmi_block(problem, n_mat, &p, &f);
        for i in 0..dim {
            sm[(i, i)] += s;
        }
        sm
    };
    let gamma2 = opts.gain_bound * opts.gain_bound;
    let f_norm2 = |x: &DVector<f64>| x.rows(n_p, n_f).norm_squared();
    let barrier = |x: &DVector<f64>, t: f64| -> Option<f64> {
        let chol = slack(x).cholesky()?;
        let room = gamma2 - f_norm2(x);
        if room <= 0.0 {
            return None;
        }
        let logdet: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Some(t * x[s_idx] - logdet - room.ln())
    };

    // Start from P = sym(N), F = f_init or 0, s above the current maximum
    // eigenvalue.
    let mut x = DVector::zeros(n_var);
    if let Some(f0) = f_init {
        assert_eq!(f0.shape(), (m_in, p_out), "initial gain has the wrong shape");
        for r in 0..m_in {
            for c in 0..p_out {
                x[n_p + r * p_out + c] = f0[(r, c)];
            }
        }
    }
    {
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                x[k] = 0.5 * (n_mat[(i, j)] + n_mat[(j, i)]);
                k += 1;
            }
        }
        if f_norm2(&x) >= gamma2 {
            x.rows_mut(n_p, n_f).fill(0.0);
        }
        let (p, f, _) = unpack(&x);
        let residual = lmi_residual(problem, n_mat, &p, &f);
        // A warm start that already satisfies the LMI needs no iterations.
        if f_init.is_some() {
            if let Some(certificate) = LmiCertificate::verify(problem, n_mat, &p, &f) {
                return SolveReport {
                    solution: Some(SofSolution { f, certificate }),
                    best_residual: residual,
                    p,
                    newton_steps: 0,
                };
            }
        }
        x[s_idx] = residual.max(0.0) + 1.0;
    }
    let nu = (dim + 1) as f64;
    let mut t = nu / x[s_idx].abs().max(1.0);
    let mut newton_steps = 0;

    for _ in 0..opts.max_outer {
        for _ in 0..opts.max_newton {
            let Some(chol) = slack(&x).cholesky() else { break };
            let w = chol.inverse();
            let w2 = &w * &w;
            let wg = &w * &g;
            let wh = &w * &h;
            let cache = Cache {
                gg: g.transpose() * &wg,
                hh: h.transpose() * &wh,
                hg: h.transpose() * &wg,
                w2g: &w2 * &g,
                w2h: &w2 * &h,
                w,
                w2,
                wg,
                wh,
            };
            let mut grad = DVector::zeros(n_var);
            let mut hess = DMatrix::zeros(n_var, n_var);
            for (k, terms) in basis.iter().enumerate() {
                grad[k] = -terms
                    .iter()
                    .map(|tm| 2.0 * tm.coef * cache.bil(tm.a, tm.b))
                    .sum::<f64>();
                for (l, other) in basis.iter().enumerate().skip(k) {
                    let mut acc = 0.0;
                    for s in terms {
                        for o in other {
                            acc += cache.trace_pair(s, o);
                        }
                    }
                    hess[(k, l)] = acc;
                    hess[(l, k)] = acc;
                }
                let hs: f64 = terms
                    .iter()
                    .map(|tm| 2.0 * tm.coef * cache.bil2(tm.a, tm.b, &g, &h))
                    .sum();
                hess[(k, s_idx)] = hs;
                hess[(s_idx, k)] = hs;
            }
            grad[s_idx] = t - cache.w.trace();
            hess[(s_idx, s_idx)] = cache.w2.norm_squared();
            // gain-bound barrier
            let room = gamma2 - f_norm2(&x);
            let fx = x.rows(n_p, n_f).into_owned();
            for r in 0..n_f {
                grad[n_p + r] += 2.0 * fx[r] / room;
                hess[(n_p + r, n_p + r)] += 2.0 / room;
                for c in 0..n_f {
                    hess[(n_p + r, n_p + c)] += 4.0 * fx[r] * fx[c] / (room * room);
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    let eig = SymmetricEigen::new(hess);
                    let shift = (-eig.eigenvalues.min()).max(0.0) + 1e-10;
                    let mut reg = eig.recompose();
                    for i in 0..n_var {
                        reg[(i, i)] += shift;
                    }
                    match reg.cholesky() {
                        Some(ch) => ch.solve(&(-&grad)),
                        None => break,
                    }
                }
            };
            let decrement = -grad.dot(&step);
            if !(decrement.is_finite()) || decrement < 1e-10 {
                break;
            }
            newton_steps += 1;
            let f0 = barrier(&x, t).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-10 {
                let trial = &x + &step * alpha;
                if let Some(ft) = barrier(&trial, t) {
                    if ft <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved || decrement < 1e-9 {
                break;
            }
        }
        let s = x[s_idx];
        if s < -opts.target {
            break;
        }
        // optimum ≥ s − ν/t; positive lower bound means infeasible
        if s - nu / t > 0.0 {
            break;
        }
        t *= 8.0;
    }

    let (p, f, _) = unpack(&x);
    let best_residual = lmi_residual(problem, n_mat, &p, &f);
    let solution = LmiCertificate::verify(problem, n_mat, &p, &f).map(|certificate| SofSolution { f, certificate });
    SolveReport {
        solution,
        best_residual,
        p,
        newton_steps,
    }
}
