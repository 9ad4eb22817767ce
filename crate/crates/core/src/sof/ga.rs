use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::gain::SofGain;
use super::lmi::{solve_sof_from, LmiCertificate, SofProblem, SolverOptions};
use super::plant::GeneralizedPlant;
use crate::error::{IgcError, Result};
use crate::igc::{classify_modes, ModeKind, ModeTable, IGC_DIM};
use crate::linalg::{discrete_lyapunov, eigenvalues, spectral_radius, sym_extremes};

/// Genetic search settings and performance-index weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Standard deviation of the first generation's mutations; shrinks by
    /// `mutation_decay` each generation.
    pub mutation_scale: f64,
    pub mutation_decay: f64,
    pub seed: u64,
    /// Damping ratio every oscillatory closed-loop mode should reach.
    pub damping_target: f64,
    pub damping_weight: f64,
    /// Spiral pole real part (1/s) below which the spiral counts as
    /// stabilised.
    pub spiral_target: f64,
    pub spiral_weight: f64,
    /// Slowest acceptable decay rate (1/s) of any closed-loop pole.
    pub decay_target: f64,
    pub decay_weight: f64,
    /// Penalty per unit Frobenius norm of the gain.
    pub gain_weight: f64,
    /// Best individuals handed to the LMI solver for certification.
    pub finalists: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 24,
            generations: 60,
            mutation_scale: 0.02,
            mutation_decay: 0.98,
            seed: 7,
            damping_target: 0.4,
            damping_weight: 10.0,
            spiral_target: -0.5,
            spiral_weight: 2.0,
            decay_target: 0.3,
            decay_weight: 5.0,
            gain_weight: 0.01,
            finalists: 4,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(IgcError::Config(format!("ga: {m}")));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.generations == 0 || self.finalists == 0 {
            return bad("generations and finalists must be positive");
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return bad("mutation_scale must be positive");
        }
        if !(self.mutation_decay > 0.0 && self.mutation_decay <= 1.0) {
            return bad("mutation_decay must lie in (0, 1]");
        }
        let weights = [
            self.damping_weight,
            self.spiral_weight,
            self.decay_weight,
            self.gain_weight,
        ];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("performance-index weights must be finite and non-negative");
        }
        Ok(())
    }
}

/// Cost assigned to a closed loop that is not Schur stable, before the
/// radius excess is added.
const UNSTABLE_COST: f64 = 1e3;

/// A scored trial gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub f: DMatrix<f64>,
    pub fitness: f64,
}

/// Evolve trial gains `F` for `problem`, minimising `fitness`. Returns the
/// final population sorted best first. Deterministic for a given seed.
pub fn evolve<Fit>(problem: &SofProblem, cfg: &GaConfig, fitness: Fit) -> Result<Vec<Individual>>
where
    Fit: Fn(&DMatrix<f64>) -> f64,
{
    let zero = DMatrix::zeros(problem.b.ncols(), problem.c.nrows());
    evolve_from(problem, cfg, &zero, fitness)
}

/// [`evolve`] with the first generation scattered around `center` instead
/// of the zero gain. `center` itself is the first individual.
pub fn evolve_from<Fit>(
    problem: &SofProblem,
    cfg: &GaConfig,
    center: &DMatrix<f64>,
    fitness: Fit,
) -> Result<Vec<Individual>>
where
    Fit: Fn(&DMatrix<f64>) -> f64,
{
    cfg.validate()?;
    let (rows, cols) = (problem.b.ncols(), problem.c.nrows());
    if center.shape() != (rows, cols) {
        return Err(IgcError::Domain(format!(
            "initial gain must be {rows}x{cols}, got {:?}",
            center.shape()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let score = |f: DMatrix<f64>| {
        let v = fitness(&f);
        Individual {
            f,
            fitness: if v.is_nan() { f64::INFINITY } else { v },
        }
    };
    let mut pop: Vec<Individual> = (0..cfg.population)
        .map(|k| {
            let spread = if k == 0 { 0.0 } else { cfg.mutation_scale };
            let f = DMatrix::from_fn(rows, cols, |i, j| center[(i, j)] + spread * unit.sample(&mut rng));
            score(f)
        })
        .collect();
    let rank = |pop: &mut Vec<Individual>| pop.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    rank(&mut pop);

    let elites = 2.min(cfg.population);
    let mut sigma = cfg.mutation_scale;
    for _ in 0..cfg.generations {
        let mut next: Vec<Individual> = pop[..elites].to_vec();
        while next.len() < cfg.population {
            let a = tournament(&pop, &mut rng);
            let b = tournament(&pop, &mut rng);
            let w: f64 = rng.random();
            let child = DMatrix::from_fn(rows, cols, |i, j| {
                let mut v = w * pop[a].f[(i, j)] + (1.0 - w) * pop[b].f[(i, j)];
                if rng.random::<f64>() < 0.3 {
                    v += sigma * unit.sample(&mut rng);
                }
                v
            });
            next.push(score(child));
        }
        pop = next;
        rank(&mut pop);
        sigma *= cfg.mutation_decay;
    }
    Ok(pop)
}

fn tournament(pop: &[Individual], rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..pop.len());
    for _ in 0..2 {
        let k = rng.random_range(0..pop.len());
        if pop[k].fitness < pop[best].fitness {
            best = k;
        }
    }
    best
}

/// Fitness used on plants without a mode structure: the closed-loop
/// spectral radius, with the unstable-loop penalty.
pub fn radius_fitness(problem: &SofProblem) -> impl Fn(&DMatrix<f64>) -> f64 + '_ {
    move |f| {
        let r = spectral_radius(&problem.closed_loop(f));
        if r >= 1.0 {
            UNSTABLE_COST + r
        } else {
            r
        }
    }
}

/// Slack matrix for a trial gain: the solution of `AᵀXA − X + I = 0` for
/// the closed loop, which makes the LMI strictly feasible at that gain.
/// Scaled to unit smallest eigenvalue so the LMI margin at the trial gain
/// is of order one.
pub fn slack_from_gain(problem: &SofProblem, f: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = problem.states();
    let x = discrete_lyapunov(&problem.closed_loop(f), &DMatrix::identity(n, n))?;
    let (low, _) = sym_extremes(&x);
    (low.is_finite() && low > 0.0).then(|| x / low)
}

/// Certified outcome of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct Certified {
    pub f: DMatrix<f64>,
    pub certificate: LmiCertificate,
    pub fitness: f64,
}

/// Solve the LMI for the best `cfg.finalists` individuals and keep the
/// certified gain with the lowest fitness.
pub fn certify_finalists<Fit>(
    problem: &SofProblem,
    ranked: &[Individual],
    cfg: &GaConfig,
    fitness: Fit,
) -> std::result::Result<Certified, f64>
where
    Fit: Fn(&DMatrix<f64>) -> f64,
{
    let opts = SolverOptions::default();
    let mut best: Option<Certified> = None;
    let mut best_residual = f64::INFINITY;
    for ind in ranked.iter().filter(|i| i.fitness < UNSTABLE_COST).take(cfg.finalists) {
        let Some(n_mat) = slack_from_gain(problem, &ind.f) else {
            continue;
        };
        let report = solve_sof_from(problem, &n_mat, Some(&ind.f), &opts);
        best_residual = best_residual.min(report.best_residual);
        if let Some(sol) = report.solution {
            let fit = fitness(&sol.f);
            if best.as_ref().is_none_or(|b| fit < b.fitness) {
                best = Some(Certified {
                    f: sol.f,
                    certificate: sol.certificate,
                    fitness: fit,
                });
            }
        }
    }
    best.ok_or(best_residual)
}

/// Genetic search on a bare problem with the spectral-radius fitness.
pub fn search_problem(problem: &SofProblem, cfg: &GaConfig) -> Result<Certified> {
    let fit = radius_fitness(problem);
    let ranked = evolve(problem, cfg, &fit)?;
    certify_finalists(problem, &ranked, cfg, &fit).map_err(|best_residual| IgcError::SynthesisFailed {
        best_residual,
        generations: cfg.generations,
    })
}

/// Result of [`ga_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub gain: SofGain,
    pub certificate: LmiCertificate,
    /// Continuous-equivalent closed-loop modes of the fifteen-state model.
    pub modes: ModeTable,
    pub fitness: f64,
}

/// The fifteen-state loop inside the generalized plant: dynamics, control
/// input and feedback signals, without the weight states.
fn core_problem(gp: &GeneralizedPlant) -> SofProblem {
    SofProblem::new(
        gp.a.view((0, 0), (IGC_DIM, IGC_DIM)).into_owned(),
        gp.b_u.rows(0, IGC_DIM).into_owned(),
        gp.c.columns(0, IGC_DIM).into_owned(),
    )
}

fn modes_of(core: &SofProblem, f: &DMatrix<f64>, ts: f64) -> (f64, ModeTable) {
    let acl = core.closed_loop(f);
    let eigs = eigenvalues(&acl);
    let radius = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let poles: Vec<_> = eigs.iter().map(|z| z.ln() / ts).collect();
    (radius, classify_modes(&acl, &eigs, &poles))
}

/// Performance index of a gain on the fifteen-state loop: unstable-loop
/// penalty, damping deficit, spiral term (negative once the spiral is
/// stabilised past its target), slow-pole penalty and gain size.
pub fn performance_index(core: &SofProblem, f: &DMatrix<f64>, ts: f64, cfg: &GaConfig) -> f64 {
    let (radius, modes) = modes_of(core, f, ts);
    if !(radius < 1.0) {
        return UNSTABLE_COST + radius;
    }
    let zeta = modes.min_damping().unwrap_or(1.0);
    let damping = (cfg.damping_target - zeta).max(0.0);
    let spiral = match modes.of_kind(ModeKind::Spiral).next() {
        Some(m) => (m.pole.re - cfg.spiral_target).clamp(-1.0, 10.0),
        None => 1.0,
    };
    let decay = (modes.max_real() + cfg.decay_target).max(0.0);
    cfg.damping_weight * damping + cfg.spiral_weight * spiral + cfg.decay_weight * decay + cfg.gain_weight * f.norm()
}

/// Search for a certified static output-feedback gain on the generalized
/// plant. Each individual is a trial gain; its slack matrix `N` is the
/// closed-loop Lyapunov matrix on the full weighted plant, and the best
/// individuals are passed to the LMI solver with that `N`.
pub fn ga_search(gp: &GeneralizedPlant, cfg: &GaConfig) -> Result<Synthesis> {
    let core = core_problem(gp);
    let full = gp.sof_problem();
    let fit = |f: &DMatrix<f64>| performance_index(&core, f, gp.ts, cfg);
    let ranked = evolve(&core, cfg, fit)?;
    let best = certify_finalists(&full, &ranked, cfg, fit).map_err(|best_residual| IgcError::SynthesisFailed {
        best_residual,
        generations: cfg.generations,
    })?;
    let (_, modes) = modes_of(&core, &best.f, gp.ts);
    Ok(Synthesis {
        gain: SofGain::new(best.f),
        certificate: best.certificate,
        modes,
        fitness: best.fitness,
    })
}
