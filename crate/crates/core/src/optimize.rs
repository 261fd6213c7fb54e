//! Minimization of smooth functions over a box `w >= lower`, by projected
//! gradient with Armijo backtracking, and a central-difference gradient
//! checker.

/// A smooth objective over `R^m` with componentwise lower bounds.
pub trait BoundedProblem {
    fn dimension(&self) -> usize;

    fn value(&self, w: &[f64]) -> f64;

    /// Writes the gradient at `w` into `grad` (length [`dimension`](Self::dimension)).
    fn gradient(&self, w: &[f64], grad: &mut [f64]);

    fn lower_bound(&self, _i: usize) -> f64 {
        0.0
    }
}

/// A [`BoundedProblem`] built from closures, bounded below by zero.
pub struct FnProblem<F, G> {
    dimension: usize,
    value: F,
    gradient: G,
}

impl<F, G> FnProblem<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(dimension: usize, value: F, gradient: G) -> Self {
        FnProblem {
            dimension,
            value,
            gradient,
        }
    }
}

impl<F, G> BoundedProblem for FnProblem<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn value(&self, w: &[f64]) -> f64 {
        (self.value)(w)
    }

    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        (self.gradient)(w, grad)
    }
}

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C1: f64 = 1e-4;
pub const MAX_BACKTRACKS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Absolute tolerance on the projected gradient norm. `None` means
    /// `1e-8 * (1 + |f(w0)|)`.
    pub grad_tol: Option<f64>,
    pub step_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 500,
            grad_tol: None,
            step_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    /// No step satisfied the Armijo condition within [`MAX_BACKTRACKS`] halvings.
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub minimizer: Vec<f64>,
    pub objective_value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Norm of `w - P(w - grad)` at the minimizer.
    pub grad_norm_proj: f64,
}

fn project<P: BoundedProblem + ?Sized>(problem: &P, w: &mut [f64]) {
    for (i, wi) in w.iter_mut().enumerate() {
        let lb = problem.lower_bound(i);
        if *wi < lb {
            *wi = lb;
        }
    }
}

fn projected_gradient_norm<P: BoundedProblem + ?Sized>(problem: &P, w: &[f64], g: &[f64]) -> f64 {
    w.iter()
        .zip(g)
        .enumerate()
        .map(|(i, (wi, gi))| {
            let step = wi - (wi - gi).max(problem.lower_bound(i));
            step * step
        })
        .sum::<f64>()
        .sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `problem` from `w0` (clipped to the feasible set).
///
/// Each iteration tries a Barzilai-Borwein step length along the negative
/// gradient, projects onto the bounds and halves the step until the Armijo
/// condition holds, so accepted iterates never increase the objective.
pub fn minimize_bounded<P: BoundedProblem + ?Sized>(
    problem: &P,
    w0: &[f64],
    opts: &SolveOptions,
) -> SolveReport {
    let m = problem.dimension();
    assert_eq!(w0.len(), m, "initial point has the wrong dimension");

    let mut w = w0.to_vec();
    project(problem, &mut w);
    let mut f = problem.value(&w);
    let initial_value = f;
    let grad_tol = opts.grad_tol.unwrap_or(1e-8 * (1.0 + f.abs()));
    let mut g = vec![0.0; m];
    problem.gradient(&w, &mut g);
    let mut pg_norm = projected_gradient_norm(problem, &w, &g);

    let mut alpha = {
        let gn = norm(&g);
        if gn > 0.0 {
            1.0 / gn
        } else {
            1.0
        }
    };
    let mut trial = vec![0.0; m];
    let mut g_new = vec![0.0; m];
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < opts.max_iters {
        if pg_norm <= grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut accepted = None;
        let mut step = alpha;
        for _ in 0..=MAX_BACKTRACKS {
            for i in 0..m {
                trial[i] = w[i] - step * g[i];
            }
            project(problem, &mut trial);
            let decrease: f64 = (0..m).map(|i| g[i] * (trial[i] - w[i])).sum();
            let f_trial = problem.value(&trial);
            if f_trial.is_finite() && f_trial <= f + ARMIJO_C1 * decrease {
                accepted = Some(f_trial);
                break;
            }
            step *= 0.5;
        }
        let Some(f_trial) = accepted else {
            termination = Termination::LineSearchFailure;
            break;
        };
        iterations += 1;

        problem.gradient(&trial, &mut g_new);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..m {
            let s = trial[i] - w[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        std::mem::swap(&mut w, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        f = f_trial;
        pg_norm = projected_gradient_norm(problem, &w, &g);

        if ss.sqrt() <= opts.step_tol {
            termination = Termination::StepTolerance;
            break;
        }
        alpha = if sy > 0.0 {
            (ss / sy).clamp(1e-30, 1e30)
        } else {
            (step * 2.0).min(1e30)
        };
    }
    if termination == Termination::MaxIterations && pg_norm <= grad_tol {
        termination = Termination::GradientTolerance;
    }

    SolveReport {
        minimizer: w,
        objective_value: f,
        initial_value,
        iterations,
        converged: matches!(
            termination,
            Termination::GradientTolerance | Termination::StepTolerance
        ),
        termination,
        grad_norm_proj: pg_norm,
    }
}

/// Per-coordinate step used by [`check_gradient`] and finite-difference gradients.
pub fn fd_step(wi: f64) -> f64 {
    1e-6 * (1.0 + wi.abs())
}

/// Central-difference estimate of the gradient of `f` at `w`.
pub fn central_difference<F: Fn(&[f64]) -> f64>(f: F, w: &[f64], out: &mut [f64]) {
    let mut probe = w.to_vec();
    for i in 0..w.len() {
        let h = fd_step(w[i]);
        probe[i] = w[i] + h;
        let fp = f(&probe);
        probe[i] = w[i] - h;
        let fm = f(&probe);
        probe[i] = w[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}

/// Largest `|analytic - numeric| / (1 + |numeric|)` over the coordinates,
/// with central differences of step `1e-6 (1 + |w_i|)`.
pub fn check_gradient<P: BoundedProblem + ?Sized>(problem: &P, w: &[f64]) -> f64 {
    let m = problem.dimension();
    let mut analytic = vec![0.0; m];
    problem.gradient(w, &mut analytic);
    let mut numeric = vec![0.0; m];
    central_difference(|p| problem.value(p), w, &mut numeric);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / (1.0 + n.abs()))
        .fold(0.0, f64::max)
}
