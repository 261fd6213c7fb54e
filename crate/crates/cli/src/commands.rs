use std::fmt;
use std::io::Write;
use std::path::Path;

use kpca_core::datasets::{self, DatasetSpec, Family};
use kpca_core::io::{self, ModelFile};
use kpca_core::kernels::{self, KernelSpec};
use kpca_core::preimage::{self, Objective, PreimageOptions, PreimageResult, WeightScheme};
use kpca_core::{pca, ErrorClass, KpcaModel, KpcaOptions, Normalization, SampleMatrix};
use nalgebra::DVector;

use crate::{
    Command, EvalArgs, FamilyArg, FitArgs, GenArgs, InitArg, KernelArg, NormalizationArg,
    ObjectiveArg, PlotArgs, PreimageArgs, RoundtripArgs, SolverArgs, TransformArgs,
};
use crate::svg;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(kpca_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<kpca_core::Error> for CliError {
    fn from(e: kpca_core::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit(a),
        Command::Transform(a) => transform(a),
        Command::Preimage(a) => preimage_cmd(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::Eval(a) => eval(a),
        Command::Plot(a) => plot(a),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let family = match a.family {
        FamilyArg::Circle => Family::Circle,
        FamilyArg::Helix => Family::Helix,
        FamilyArg::ClosingCurve => Family::ClosingCurve,
    };
    let data = datasets::generate(&DatasetSpec {
        family,
        ambient_dim: a.dim,
        n_samples: a.n,
        noise_sigma: a.noise,
        seed: a.seed,
    })?;
    io::save_csv(&a.out, &data.samples)?;
    if let Some(path) = &a.heldout {
        io::save_rows(path, None, &[data.heldout.as_slice()])?;
    }
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let x = io::load_csv(&a.data)?;
    let kernel = match a.kernel {
        KernelArg::Gaussian => {
            let beta = if a.beta == "auto" {
                kernels::median_heuristic_beta(&x)?
            } else {
                a.beta
                    .parse()
                    .map_err(|_| CliError::Usage(format!("--beta: expected a number or `auto`, got {:?}", a.beta)))?
            };
            KernelSpec::gaussian(beta)?
        }
        KernelArg::Linear => KernelSpec::Linear,
        KernelArg::Poly => KernelSpec::polynomial(a.degree, a.offset)?,
    };
    let epsilon = a.eps.unwrap_or(pca::DEFAULT_EPSILON);
    if !(0.0..1.0).contains(&epsilon) {
        return Err(CliError::Usage(format!("--eps must be in [0, 1), got {epsilon}")));
    }
    let opts = KpcaOptions {
        epsilon,
        k: a.k,
        centered: !a.no_center,
        normalization: match a.normalization {
            NormalizationArg::Unit => Normalization::Unit,
            NormalizationArg::Feature => Normalization::Feature,
        },
    };
    let model = kpca_core::kpca_fit(&x, kernel, &opts)?;
    println!(
        "k = {}, captured variance = {:.6}",
        model.k,
        model.captured_variance()
    );
    io::save_model(&a.out, &ModelFile::Kpca(model))?;
    Ok(())
}

fn transform_one(model: &ModelFile, x: &[f64]) -> Result<DVector<f64>> {
    Ok(match model {
        ModelFile::Kpca(m) => kpca_core::kpca_transform(m, x)?,
        ModelFile::Pca(m) => pca::forward(m, x)?,
    })
}

fn transform(a: TransformArgs) -> Result<()> {
    let model = io::load_model(&a.model)?;
    let x = io::load_csv(&a.data)?;
    let rows = x
        .columns()
        .map(|c| transform_one(&model, c).map(|z| z.as_slice().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    io::save_rows(&a.out, None, &rows)?;
    Ok(())
}

/// Solver settings resolved against a model.
enum Backward {
    Kpca(PreimageOptions, bool),
    Pca,
}

fn backward_options(model: &ModelFile, s: &SolverArgs) -> Result<Backward> {
    let ModelFile::Kpca(m) = model else {
        return Ok(Backward::Pca);
    };
    let mut opts = match s.objective {
        None => PreimageOptions::default_for(m),
        Some(ObjectiveArg::Residual) => PreimageOptions::new(m, Objective::Residual)?,
        Some(ObjectiveArg::Log) => PreimageOptions::new(m, Objective::GaussianLog)?,
    };
    if let Some(n) = s.neighbors {
        if n == 0 {
            return Err(CliError::Usage("--neighbors must be at least 1".into()));
        }
        opts.neighbors = n.min(m.n_samples());
    }
    let multistart = match s.init {
        InitArg::Invd => {
            opts.init = WeightScheme::InvDist;
            false
        }
        InitArg::Invd2 => {
            opts.init = WeightScheme::InvDistSq;
            false
        }
        InitArg::Expd => {
            opts.init = WeightScheme::ExpNegDist;
            false
        }
        InitArg::Best => true,
    };
    Ok(Backward::Kpca(opts, multistart))
}

fn solve(model: &KpcaModel, z: &[f64], opts: &PreimageOptions, multistart: bool) -> Result<PreimageResult> {
    Ok(if multistart {
        preimage::solve_preimage_multistart(model, z, opts)?
    } else {
        preimage::solve_preimage(model, z, opts)?
    })
}

/// Pre-image of `z`, with the solver result when the model is a kernel model.
fn backward(model: &ModelFile, how: &Backward, z: &[f64]) -> Result<(DVector<f64>, Option<PreimageResult>)> {
    match (model, how) {
        (ModelFile::Kpca(m), Backward::Kpca(opts, multi)) => {
            let r = solve(m, z, opts, *multi)?;
            Ok((r.x_star.clone(), Some(r)))
        }
        (ModelFile::Pca(m), _) => Ok((pca::backward(m, z)?, None)),
        _ => unreachable!("options are resolved from the same model"),
    }
}

fn preimage_cmd(a: PreimageArgs) -> Result<()> {
    let model = io::load_model(&a.model)?;
    let how = backward_options(&model, &a.solver)?;
    let z = io::load_rows(&a.z)?;
    let mut xs = Vec::with_capacity(z.len());
    let mut report = Vec::new();
    for (i, zi) in z.iter().enumerate() {
        let (x, r) = backward(&model, &how, zi)?;
        xs.push(x.as_slice().to_vec());
        if let Some(r) = r {
            report.push(format!(
                "{i},{},{},{},{},{:?},{},{}",
                r.objective_value,
                r.initial_objective,
                r.report.iterations,
                r.report.converged,
                r.report.termination,
                r.nonpositive_target,
                format!("{:?}", r.init).to_lowercase(),
            ));
        }
    }
    io::save_rows(&a.out, None, &xs)?;
    if let Some(path) = &a.report {
        let mut text = String::from(
            "index,objective,initial_objective,iterations,converged,termination,nonpositive_target,init\n",
        );
        for line in report {
            text.push_str(&line);
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| {
        CliError::Core(kpca_core::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn roundtrip(a: RoundtripArgs) -> Result<()> {
    let model = io::load_model(&a.model)?;
    let how = backward_options(&model, &a.solver)?;
    let x: SampleMatrix = io::load_csv(&a.data)?;
    let mut errors = Vec::with_capacity(x.n_samples());
    for col in x.columns() {
        let z = transform_one(&model, col)?;
        let (back, _) = backward(&model, &how, z.as_slice())?;
        let orig = DVector::from_column_slice(col);
        let scale = orig.norm();
        let diff = (back - &orig).norm();
        errors.push(if scale > 0.0 { diff / scale } else { diff });
    }
    let mut text = String::from("relative_error\n");
    for e in &errors {
        text.push_str(&format!("{e}\n"));
    }
    write_text(&a.out, &text)?;
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    println!(
        "samples = {}, median = {:.3e}, p95 = {:.3e}, max = {:.3e}",
        sorted.len(),
        percentile(&sorted, 50.0),
        percentile(&sorted, 95.0),
        sorted[sorted.len() - 1]
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = io::load_model(&a.model)?;
    let mut out = String::new();
    let (eigenvalues, k) = match &model {
        ModelFile::Kpca(m) => {
            out += &format!(
                "kind = kpca, kernel = {}, centered = {}, samples = {}\n",
                m.kernel.name(),
                m.centered,
                m.n_samples()
            );
            (m.eigenvalues.clone(), m.k)
        }
        ModelFile::Pca(m) => {
            out += &format!("kind = pca, dim = {}\n", m.dim());
            (m.eigenvalues.clone(), m.k)
        }
    };
    let total: f64 = eigenvalues.iter().sum();
    out += &format!("k = {k}\n{:>5} {:>24} {:>10}\n", "i", "eigenvalue", "captured");
    let mut partial = 0.0;
    for (i, l) in eigenvalues.iter().enumerate() {
        partial += l;
        let mark = if i + 1 == k { " <- k" } else { "" };
        out += &format!("{:>5} {:>24.16e} {:>10.6}{mark}\n", i + 1, l, partial / total);
    }
    // a closed pipe (e.g. `| head`) is not an error
    let _ = std::io::stdout().write_all(out.as_bytes());
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let z = io::load_rows(&a.z)?;
    let points = svg::project(&z);
    let title = a
        .z
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_text(&a.out, &svg::scatter(&points, &title, z[0].len()))?;
    let rows: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
    io::save_rows(a.out.with_extension("csv"), Some(&["x", "y"]), &rows)?;
    Ok(())
}
