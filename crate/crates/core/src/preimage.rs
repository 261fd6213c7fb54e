//! Backward mapping from the reduced space to input space.
//!
//! A pre-image is sought as a nonnegative combination `x* = X w` of the
//! training samples. Weights come either from a distance heuristic in the
//! reduced space or from minimizing a discrepancy between the target `z*` and
//! the forward image of `x*`. Only the `m` training samples whose images are
//! closest to `z*` carry weight.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::kpca::KpcaModel;
use crate::optimize::{self, BoundedProblem, SolveOptions, SolveReport};

/// Values below this are clamped before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

/// Distances at or below this make the heuristic weights one-hot.
pub const COINCIDENCE_TOL: f64 = 1e-14;

pub const DEFAULT_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `|z* - V*^T g(w)|^2` with `g(w)` centered like the model.
    Residual,
    /// `|log(V* z*) - log(g(w))|^2`, Gaussian kernel on an uncentered model only.
    GaussianLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w = 1/d`
    InvDist,
    /// `w = 1/d^2`
    InvDistSq,
    /// `w = exp(-d)`
    ExpNegDist,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [
        WeightScheme::InvDist,
        WeightScheme::InvDistSq,
        WeightScheme::ExpNegDist,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreimageOptions {
    pub objective: Objective,
    pub init: WeightScheme,
    /// Number of training samples allowed a nonzero weight.
    pub neighbors: usize,
    pub solver: SolveOptions,
}

impl PreimageOptions {
    /// Options with the given objective, rejected when the objective does not
    /// apply to `model`.
    pub fn new(model: &KpcaModel, objective: Objective) -> Result<Self> {
        let opts = PreimageOptions {
            objective,
            init: WeightScheme::InvDistSq,
            neighbors: DEFAULT_NEIGHBORS.min(model.n_samples()),
            solver: SolveOptions::default(),
        };
        opts.validate(model)?;
        Ok(opts)
    }

    /// The log objective for uncentered Gaussian models, the residual otherwise.
    pub fn default_for(model: &KpcaModel) -> Self {
        let objective = if supports_log_objective(model) {
            Objective::GaussianLog
        } else {
            Objective::Residual
        };
        PreimageOptions::new(model, objective).expect("default objective always applies")
    }

    pub fn validate(&self, model: &KpcaModel) -> Result<()> {
        if self.objective == Objective::GaussianLog {
            require_log_objective(model)?;
        }
        if self.neighbors == 0 {
            return Err(Error::InvalidArgument(
                "at least one neighbor is required".into(),
            ));
        }
        Ok(())
    }
}

fn supports_log_objective(model: &KpcaModel) -> bool {
    model.kernel.is_gaussian() && !model.centered
}

fn require_log_objective(model: &KpcaModel) -> Result<f64> {
    match model.kernel {
        KernelSpec::Gaussian { beta } if !model.centered => Ok(beta),
        KernelSpec::Gaussian { .. } => Err(Error::InvalidArgument(
            "the log objective needs an uncentered kernel model".into(),
        )),
        _ => Err(Error::InvalidArgument(
            "the log objective needs a gaussian kernel".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreimageResult {
    /// One weight per training sample, zero outside the active set.
    pub weights: Vec<f64>,
    /// `X w`
    pub x_star: DVector<f64>,
    pub objective_value: f64,
    /// Objective at the heuristic starting weights.
    pub initial_objective: f64,
    pub init: WeightScheme,
    /// Training indices that were free to move, nearest first.
    pub active: Vec<usize>,
    /// Some entry of `V* z*` was not positive before clamping (log objective only).
    pub nonpositive_target: bool,
    pub report: SolveReport,
}

fn check_z(model: &KpcaModel, z_star: &[f64]) -> Result<()> {
    if z_star.len() != model.k {
        return Err(Error::DimensionMismatch {
            expected: model.k,
            actual: z_star.len(),
        });
    }
    Ok(())
}

fn check_weights(model: &KpcaModel, w: &[f64]) -> Result<()> {
    if w.len() != model.n_samples() {
        return Err(Error::DimensionMismatch {
            expected: model.n_samples(),
            actual: w.len(),
        });
    }
    Ok(())
}

/// Distances from `z_star` to every training image.
pub fn reduced_distances(model: &KpcaModel, z_star: &[f64]) -> Result<Vec<f64>> {
    check_z(model, z_star)?;
    Ok(model
        .z_train
        .column_iter()
        .map(|c| {
            c.iter()
                .zip(z_star)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Indices of the `m` training images nearest to `z_star`, nearest first
/// (ties broken by index).
pub fn nearest_neighbors(model: &KpcaModel, z_star: &[f64], m: usize) -> Result<Vec<usize>> {
    let dist = reduced_distances(model, z_star)?;
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    order.truncate(m.clamp(1, dist.len()));
    Ok(order)
}

fn scheme_weights(scheme: WeightScheme, dist: &[f64]) -> Vec<f64> {
    let d_min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = dist
        .iter()
        .map(|&d| match scheme {
            WeightScheme::InvDist => 1.0 / d,
            WeightScheme::InvDistSq => 1.0 / (d * d),
            // shifted by the smallest distance; cancels in the normalization
            WeightScheme::ExpNegDist => (-(d - d_min)).exp(),
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Distance-based weights on the `m` nearest training images, normalized to
/// sum to one; one-hot on the nearest sample when it coincides with `z_star`.
pub fn heuristic_weights(
    model: &KpcaModel,
    z_star: &[f64],
    scheme: WeightScheme,
    m: usize,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "at least one neighbor is required".into(),
        ));
    }
    let dist = reduced_distances(model, z_star)?;
    let active = nearest_neighbors(model, z_star, m)?;
    let mut weights = vec![0.0; model.n_samples()];
    if dist[active[0]] <= COINCIDENCE_TOL {
        weights[active[0]] = 1.0;
        return Ok(weights);
    }
    let local: Vec<f64> = active.iter().map(|&i| dist[i]).collect();
    for (&i, w) in active.iter().zip(scheme_weights(scheme, &local)) {
        weights[i] = w;
    }
    Ok(weights)
}

/// `X w` for weights restricted to `active`.
fn combine(model: &KpcaModel, active: &[usize], w: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(model.dim());
    for (&j, &wj) in active.iter().zip(w) {
        if wj != 0.0 {
            x.axpy(wj, &DVector::from_column_slice(model.training.column(j)), 1.0);
        }
    }
    x
}

fn support(w: &[f64]) -> Vec<usize> {
    (0..w.len()).collect()
}

/// Residual discrepancy evaluated over the active coordinates.
struct ResidualProblem<'a> {
    model: &'a KpcaModel,
    z_star: DVector<f64>,
    active: Vec<usize>,
}

impl ResidualProblem<'_> {
    fn eval(&self, w: &[f64]) -> Result<f64> {
        let x = combine(self.model, &self.active, w);
        let g = self.model.kernel_vector(x.as_slice())?;
        let z = self.model.project_kernel_vector(&g)?;
        Ok((&self.z_star - z).norm_squared())
    }
}

impl BoundedProblem for ResidualProblem<'_> {
    fn dimension(&self) -> usize {
        self.active.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.eval(w).unwrap_or(f64::INFINITY)
    }

    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        optimize::central_difference(|p| self.value(p), w, grad);
    }
}

/// Log discrepancy for the Gaussian kernel, evaluated through the input-space
/// Gram matrix only: `|x^i - X w|^2 = G_ii - 2 (G w)_i + w^T G w`.
struct GaussianLogProblem<'a> {
    model: &'a KpcaModel,
    beta: f64,
    log_target: Vec<f64>,
    active: Vec<usize>,
}

/// Per-sample quantities shared by the value and the gradient.
struct LogTerms {
    gw: Vec<f64>,
    residuals: Vec<f64>,
    /// Whether `log g_i` sits on the clamp (no dependence on `w`).
    clamped: Vec<bool>,
}

impl<'a> GaussianLogProblem<'a> {
    fn new(model: &'a KpcaModel, z_star: &[f64], active: Vec<usize>) -> Result<(Self, bool)> {
        let beta = require_log_objective(model)?;
        let (log_target, nonpositive) = log_target(model, z_star)?;
        Ok((
            GaussianLogProblem {
                model,
                beta,
                log_target,
                active,
            },
            nonpositive,
        ))
    }

    fn terms(&self, w: &[f64]) -> LogTerms {
        let gram = self.model.input_gram();
        let n = gram.nrows();
        let mut gw = vec![0.0; n];
        for (&j, &wj) in self.active.iter().zip(w) {
            if wj != 0.0 {
                for (i, g) in gw.iter_mut().enumerate() {
                    *g += gram[(i, j)] * wj;
                }
            }
        }
        let wgw: f64 = self.active.iter().zip(w).map(|(&j, &wj)| wj * gw[j]).sum();
        let floor = LOG_FLOOR.ln();
        let mut residuals = Vec::with_capacity(n);
        let mut clamped = Vec::with_capacity(n);
        for i in 0..n {
            let sq = gram[(i, i)] - 2.0 * gw[i] + wgw;
            let log_g = -self.beta * sq;
            let (log_g, hit) = if log_g < floor {
                (floor, true)
            } else {
                (log_g, false)
            };
            residuals.push(self.log_target[i] - log_g);
            clamped.push(hit);
        }
        LogTerms {
            gw,
            residuals,
            clamped,
        }
    }
}

impl BoundedProblem for GaussianLogProblem<'_> {
    fn dimension(&self) -> usize {
        self.active.len()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.terms(w).residuals.iter().map(|r| r * r).sum()
    }

    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        let t = self.terms(w);
        let gram = self.model.input_gram();
        let live = |i: usize| if t.clamped[i] { 0.0 } else { t.residuals[i] };
        let r_sum: f64 = (0..t.residuals.len()).map(live).sum();
        for (out, &a) in grad.iter_mut().zip(&self.active) {
            let cross: f64 = (0..t.residuals.len()).map(|i| live(i) * gram[(i, a)]).sum();
            *out = 4.0 * self.beta * (r_sum * t.gw[a] - cross);
        }
    }
}

/// `log(V* z*)` with entries clamped at [`LOG_FLOOR`], and whether any entry
/// was not positive before clamping.
pub fn log_target(model: &KpcaModel, z_star: &[f64]) -> Result<(Vec<f64>, bool)> {
    check_z(model, z_star)?;
    let t = model.lift(z_star)?;
    let nonpositive = t.iter().any(|v| *v <= 0.0);
    Ok((t.iter().map(|v| v.max(LOG_FLOOR).ln()).collect(), nonpositive))
}

/// `|z* - V*^T g(w)|^2` for a full weight vector.
pub fn objective_residual(model: &KpcaModel, z_star: &[f64], w: &[f64]) -> Result<f64> {
    check_z(model, z_star)?;
    check_weights(model, w)?;
    ResidualProblem {
        model,
        z_star: DVector::from_column_slice(z_star),
        active: support(w),
    }
    .eval(w)
}

/// `|log(V* z*) - log(g(w))|^2` for a full weight vector.
pub fn objective_gaussian_log(model: &KpcaModel, z_star: &[f64], w: &[f64]) -> Result<f64> {
    check_weights(model, w)?;
    let (p, _) = GaussianLogProblem::new(model, z_star, support(w))?;
    Ok(p.value(w))
}

/// Analytic gradient of [`objective_gaussian_log`] with respect to all weights.
pub fn gradient_gaussian_log(model: &KpcaModel, z_star: &[f64], w: &[f64]) -> Result<DVector<f64>> {
    check_weights(model, w)?;
    let (p, _) = GaussianLogProblem::new(model, z_star, support(w))?;
    let mut g = vec![0.0; w.len()];
    p.gradient(w, &mut g);
    Ok(DVector::from_vec(g))
}

/// Evaluates the chosen objective for a full weight vector.
pub fn objective(model: &KpcaModel, z_star: &[f64], w: &[f64], which: Objective) -> Result<f64> {
    match which {
        Objective::Residual => objective_residual(model, z_star, w),
        Objective::GaussianLog => objective_gaussian_log(model, z_star, w),
    }
}

/// Reconstructs a pre-image of `z_star` by minimizing the chosen discrepancy
/// over nonnegative weights on the `m` nearest training samples, starting
/// from the heuristic weights of `opts.init`.
pub fn solve_preimage(
    model: &KpcaModel,
    z_star: &[f64],
    opts: &PreimageOptions,
) -> Result<PreimageResult> {
    opts.validate(model)?;
    check_z(model, z_star)?;
    let active = nearest_neighbors(model, z_star, opts.neighbors)?;
    let full_init = heuristic_weights(model, z_star, opts.init, opts.neighbors)?;
    let w0: Vec<f64> = active.iter().map(|&i| full_init[i]).collect();

    let (report, nonpositive_target) = match opts.objective {
        Objective::Residual => {
            let problem = ResidualProblem {
                model,
                z_star: DVector::from_column_slice(z_star),
                active: active.clone(),
            };
            (optimize::minimize_bounded(&problem, &w0, &opts.solver), false)
        }
        Objective::GaussianLog => {
            let (problem, nonpositive) = GaussianLogProblem::new(model, z_star, active.clone())?;
            (
                optimize::minimize_bounded(&problem, &w0, &opts.solver),
                nonpositive,
            )
        }
    };

    let mut weights = vec![0.0; model.n_samples()];
    for (&i, &w) in active.iter().zip(&report.minimizer) {
        weights[i] = w;
    }
    let x_star = combine(model, &active, &report.minimizer);
    Ok(PreimageResult {
        weights,
        x_star,
        objective_value: report.objective_value,
        initial_objective: report.initial_value,
        init: opts.init,
        active,
        nonpositive_target,
        report,
    })
}

/// Runs [`solve_preimage`] from every heuristic initialization and keeps the
/// lowest final objective (earliest scheme on ties).
pub fn solve_preimage_multistart(
    model: &KpcaModel,
    z_star: &[f64],
    opts: &PreimageOptions,
) -> Result<PreimageResult> {
    let mut best: Option<PreimageResult> = None;
    for scheme in WeightScheme::ALL {
        let run = solve_preimage(model, z_star, &PreimageOptions { init: scheme, ..*opts })?;
        if best
            .as_ref()
            .is_none_or(|b| run.objective_value < b.objective_value)
        {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one scheme"))
}

/// `x*` for the heuristic weights alone, without optimization.
pub fn heuristic_preimage(
    model: &KpcaModel,
    z_star: &[f64],
    scheme: WeightScheme,
    m: usize,
) -> Result<DVector<f64>> {
    let w = heuristic_weights(model, z_star, scheme, m)?;
    Ok(combine(model, &support(&w), &w))
}
