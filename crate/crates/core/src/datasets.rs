//! Seeded synthetic manifolds with a one-parameter latent variable.
//!
//! All randomness comes from a ChaCha8 stream keyed by the spec's seed:
//! stream 0 draws the embedding frame and then the training noise (column by
//! column), stream 1 draws the noise of extra held-out points. ChaCha8 output
//! is fixed by its published definition, so datasets are identical on every
//! platform.
//!
//! Families, in terms of the latent parameter `s`:
//!
//! * `circle`: `cos(s) q1 + sin(s) q2` for `s` on the arc `[0, CIRCLE_ARC]`,
//!   with `q1, q2` a random orthonormal pair in `R^d`.
//! * `helix`: `cos(s) q1 + sin(s) q2 + HELIX_RISE * s / (2 pi) q3` for
//!   `s in [0, 2 pi]`.
//! * `closing_curve`: `s in [0, 2)` is folded to `t = min(s, 2 - s)`, so the
//!   curve is traversed forward and then backward. Coordinate `i` is
//!   `sin(pi w_i t + p_i) / sqrt(d)` with `w_i = 0.5 + 2.5 frac(i g)`,
//!   `p_i = 2 pi frac(i sqrt 2)` and `g` the golden ratio. No random frame.
//!
//! Training parameters lie on a uniform grid with spacing `h`; the held-out
//! sample sits at `(floor((n-1)/2) + 1/2) h`, halfway between the two central
//! grid points.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::SampleMatrix;

/// Length of the circle arc covered by the latent parameter.
pub const CIRCLE_ARC: f64 = PI;

/// Height gained by the helix over one turn.
pub const HELIX_RISE: f64 = 1.0;

const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Circle,
    Helix,
    ClosingCurve,
}

impl Family {
    /// Smallest ambient dimension the family fits in.
    pub fn min_dim(self) -> usize {
        match self {
            Family::Circle => 2,
            Family::Helix => 3,
            Family::ClosingCurve => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Circle => "circle",
            Family::Helix => "helix",
            Family::ClosingCurve => "closing_curve",
        }
    }

    fn param_range(self) -> f64 {
        match self {
            Family::Circle => CIRCLE_ARC,
            Family::Helix => 2.0 * PI,
            Family::ClosingCurve => 2.0,
        }
    }

    /// Whether the grid leaves out the right end of the range.
    fn half_open(self) -> bool {
        self == Family::ClosingCurve
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Family::Circle),
            "helix" => Ok(Family::Helix),
            "closing_curve" => Ok(Family::ClosingCurve),
            other => Err(Error::BadSpec(format!("unknown family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub family: Family,
    pub ambient_dim: usize,
    pub n_samples: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ambient_dim < self.family.min_dim() {
            return Err(Error::BadSpec(format!(
                "{} needs ambient_dim >= {}, got {}",
                self.family.name(),
                self.family.min_dim(),
                self.ambient_dim
            )));
        }
        if self.n_samples < 3 {
            return Err(Error::BadSpec(format!(
                "n_samples must be at least 3, got {}",
                self.n_samples
            )));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::BadSpec(format!(
                "noise_sigma must be finite and nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Grid spacing of the training parameters.
    pub fn spacing(&self) -> f64 {
        let intervals = if self.family.half_open() {
            self.n_samples
        } else {
            self.n_samples - 1
        };
        self.family.param_range() / intervals as f64
    }

    pub fn training_params(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_samples).map(|j| j as f64 * h).collect()
    }

    pub fn heldout_param(&self) -> f64 {
        ((self.n_samples - 1) / 2) as f64 * self.spacing() + 0.5 * self.spacing()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub samples: SampleMatrix,
    pub params: Vec<f64>,
    pub heldout: DVector<f64>,
    pub heldout_param: f64,
}

/// The noise-free embedding of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    family: Family,
    dim: usize,
    /// d x r orthonormal frame (empty for the closing curve).
    frame: DMatrix<f64>,
}

impl Manifold {
    fn draw(spec: &DatasetSpec, rng: &mut ChaCha8Rng) -> Self {
        let r = match spec.family {
            Family::Circle => 2,
            Family::Helix => 3,
            Family::ClosingCurve => 0,
        };
        Manifold {
            family: spec.family,
            dim: spec.ambient_dim,
            frame: random_frame(spec.ambient_dim, r, rng),
        }
    }

    pub fn new(spec: &DatasetSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Manifold::draw(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)))
    }

    pub fn point(&self, s: f64) -> DVector<f64> {
        let coords = match self.family {
            Family::Circle => vec![s.cos(), s.sin()],
            Family::Helix => vec![s.cos(), s.sin(), HELIX_RISE * s / (2.0 * PI)],
            Family::ClosingCurve => return closing_curve_point(self.dim, s),
        };
        &self.frame * DVector::from_vec(coords)
    }

    /// Distance from `x` to the curve, by golden-section refinement of a
    /// dense parameter scan.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        let range = self.family.param_range();
        let dist = |s: f64| {
            self.point(s)
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let scan = 2000;
        let step = range / scan as f64;
        let (mut best_s, mut best) = (0.0, f64::INFINITY);
        for i in 0..=scan {
            let s = i as f64 * step;
            let d = dist(s);
            if d < best {
                best = d;
                best_s = s;
            }
        }
        let (mut a, mut b) = ((best_s - step).max(0.0), (best_s + step).min(range));
        let inv = 1.0 / GOLDEN;
        for _ in 0..80 {
            let c = b - (b - a) * inv;
            let e = a + (b - a) * inv;
            if dist(c) < dist(e) {
                b = e;
            } else {
                a = c;
            }
        }
        best.min(dist(0.5 * (a + b)))
    }
}

fn closing_curve_point(d: usize, s: f64) -> DVector<f64> {
    let t = if s <= 1.0 { s } else { 2.0 - s };
    let scale = 1.0 / (d as f64).sqrt();
    DVector::from_fn(d, |i, _| {
        let i = i as f64;
        let w = 0.5 + 2.5 * (i * GOLDEN).fract();
        let p = 2.0 * PI * (i * SQRT_2).fract();
        scale * (PI * w * t + p).sin()
    })
}

/// `r` orthonormal columns from Gram-Schmidt on standard normal draws.
fn random_frame(d: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::zeros(d, r);
    let mut j = 0;
    while j < r {
        let mut v = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        for _ in 0..2 {
            for p in 0..j {
                let c = q.column(p).dot(&v);
                v.axpy(-c, &q.column(p), 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            q.set_column(j, &(v / norm));
            j += 1;
        }
    }
    q
}

fn add_noise(x: &mut DVector<f64>, sigma: f64, rng: &mut ChaCha8Rng) {
    for v in x.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += sigma * e;
    }
}

pub fn generate(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let manifold = Manifold::draw(spec, &mut rng);
    let params = spec.training_params();
    let mut columns = Vec::with_capacity(spec.n_samples);
    for &s in &params {
        let mut x = manifold.point(s);
        add_noise(&mut x, spec.noise_sigma, &mut rng);
        columns.push(x);
    }
    let heldout_param = spec.heldout_param();
    let mut heldout = manifold.point(heldout_param);
    add_noise(&mut heldout, spec.noise_sigma, &mut rng);
    let samples = SampleMatrix::from_matrix(DMatrix::from_columns(&columns))?;
    Ok(Dataset {
        spec: *spec,
        samples,
        params,
        heldout,
        heldout_param,
    })
}

/// `count` extra points at midpoints between consecutive training
/// parameters, spread evenly over the grid, with their parameters.
pub fn heldout_points(spec: &DatasetSpec, count: usize) -> Result<(SampleMatrix, Vec<f64>)> {
    spec.validate()?;
    let intervals = spec.n_samples - 1;
    if count == 0 || count > intervals {
        return Err(Error::BadSpec(format!(
            "held-out count must be in 1..={intervals}, got {count}"
        )));
    }
    let manifold = Manifold::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let h = spec.spacing();
    let mut params = Vec::with_capacity(count);
    let mut columns = Vec::with_capacity(count);
    for c in 0..count {
        let j = (c * intervals) / count + intervals / (2 * count);
        let s = (j as f64 + 0.5) * h;
        let mut x = manifold.point(s);
        add_noise(&mut x, spec.noise_sigma, &mut rng);
        params.push(s);
        columns.push(x);
    }
    Ok((SampleMatrix::from_matrix(DMatrix::from_columns(&columns))?, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::{fit_covariance, forward, PcaOptions};

    fn spec(family: Family, d: usize, n: usize, noise: f64) -> DatasetSpec {
        DatasetSpec {
            family,
            ambient_dim: d,
            n_samples: n,
            noise_sigma: noise,
            seed: 11,
        }
    }

    #[test]
    fn noise_free_circle_has_unit_radius() {
        for d in [2, 10] {
            let data = generate(&spec(Family::Circle, d, 25, 0.0)).unwrap();
            for x in data.samples.columns() {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() <= 1e-12);
            }
            assert!((data.heldout.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn same_seed_same_bits() {
        for family in [Family::Circle, Family::Helix, Family::ClosingCurve] {
            let a = generate(&spec(family, 7, 30, 0.1)).unwrap();
            let b = generate(&spec(family, 7, 30, 0.1)).unwrap();
            assert_eq!(a, b);
            let c = generate(&DatasetSpec { seed: 12, ..spec(family, 7, 30, 0.1) }).unwrap();
            assert_ne!(a.samples, c.samples);
        }
    }

    #[test]
    fn closing_curve_is_linearly_high_dimensional() {
        let s = spec(Family::ClosingCurve, 100, 69, 0.0);
        let data = generate(&s).unwrap();
        let model = fit_covariance(&data.samples, &PcaOptions::with_epsilon(0.01)).unwrap();
        assert!(model.k > 1, "k = {}", model.k);

        // the leading coordinate does not track the latent parameter exactly
        let t: Vec<f64> = data.params.iter().map(|s| s.min(2.0 - s)).collect();
        let z1: Vec<f64> = data
            .samples
            .columns()
            .map(|x| forward(&model, x).unwrap()[0])
            .collect();
        let corr = correlation(&z1, &t).abs();
        assert!(corr < 0.999, "{corr}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn closing_curve_heldout_is_midpoint_of_traversal() {
        let s = spec(Family::ClosingCurve, 100, 69, 0.0);
        assert!((s.heldout_param() - 1.0).abs() <= 1e-15);
        let params = s.training_params();
        assert!(params.iter().all(|p| (p - 1.0).abs() > 1e-3));
        // forward and backward passes visit the same points
        let data = generate(&s).unwrap();
        let a = DVector::from_column_slice(data.samples.column(10));
        let b = DVector::from_column_slice(data.samples.column(59));
        assert!((a - b).amax() <= 1e-12);
    }

    #[test]
    fn circle_neighbors_by_parameter_are_neighbors_by_distance() {
        let data = generate(&spec(Family::Circle, 10, 40, 0.0)).unwrap();
        let col = |j: usize| DVector::from_column_slice(data.samples.column(j));
        for j in 0..39 {
            let next = (col(j) - col(j + 1)).norm();
            for other in 0..40 {
                if other != j && other != j + 1 {
                    assert!((col(j) - col(other)).norm() >= next - 1e-12);
                }
            }
        }
    }

    #[test]
    fn noise_free_points_lie_on_the_manifold() {
        for family in [Family::Circle, Family::Helix, Family::ClosingCurve] {
            let s = spec(family, 6, 20, 0.0);
            let data = generate(&s).unwrap();
            let m = Manifold::new(&s).unwrap();
            for (x, p) in data.samples.columns().zip(&data.params) {
                assert!((m.point(*p) - DVector::from_column_slice(x)).amax() <= 1e-12);
                assert!(m.distance_to(x) <= 1e-7);
            }
        }
    }

    #[test]
    fn helix_rises_along_its_axis() {
        let s = spec(Family::Helix, 3, 20, 0.0);
        let m = Manifold::new(&s).unwrap();
        let gap = (m.point(2.0 * PI) - m.point(0.0)).norm();
        assert!((gap - HELIX_RISE).abs() <= 1e-12);
    }

    #[test]
    fn heldout_points_fall_between_grid_points() {
        let s = spec(Family::ClosingCurve, 20, 69, 0.01);
        let (x, params) = heldout_points(&s, 20).unwrap();
        assert_eq!(x.n_samples(), 20);
        let h = s.spacing();
        for p in &params {
            let r = (p / h).fract();
            assert!((r - 0.5).abs() < 1e-9);
        }
        assert!(params.windows(2).all(|w| w[0] < w[1]));
        assert!(heldout_points(&s, 0).is_err());
    }

    #[test]
    fn bad_specs_are_rejected() {
        assert!(generate(&spec(Family::Circle, 1, 10, 0.0)).is_err());
        assert!(generate(&spec(Family::Helix, 2, 10, 0.0)).is_err());
        assert!(generate(&spec(Family::Circle, 3, 2, 0.0)).is_err());
        assert!(generate(&spec(Family::Circle, 3, 10, -1.0)).is_err());
        assert!(matches!(
            generate(&spec(Family::Circle, 3, 10, f64::NAN)),
            Err(Error::BadSpec(_))
        ));
        assert!("spiral".parse::<Family>().is_err());
    }
}
