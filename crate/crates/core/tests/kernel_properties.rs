use kpca_core::kernels::{self, center_gram, center_gram_vector, gram, KernelSpec};
use kpca_core::kpca::{kpca_fit, kpca_transform, KpcaOptions};
use kpca_core::matcore::SampleMatrix;
use proptest::prelude::*;

fn samples() -> impl Strategy<Value = SampleMatrix> {
    (1usize..=5, 2usize..=25).prop_flat_map(|(d, n)| {
        prop::collection::vec(-2.0f64..2.0, d * n)
            .prop_map(move |v| SampleMatrix::new(d, n, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_gram_is_psd_with_unit_diagonal(x in samples(), beta in 0.01f64..5.0) {
        let g = gram(&KernelSpec::gaussian(beta).unwrap(), &x).unwrap();
        for i in 0..g.nrows() {
            prop_assert_eq!(g[(i, i)], 1.0);
        }
        prop_assert_eq!(g.clone(), g.transpose());
    }

    #[test]
    fn centered_gram_has_zero_row_sums(x in samples(), beta in 0.01f64..5.0) {
        let g = gram(&KernelSpec::gaussian(beta).unwrap(), &x).unwrap();
        let (c, _) = center_gram(&g).unwrap();
        let n = g.nrows() as f64;
        let bound = 1e-10 * n * g.amax();
        for r in c.row_iter() {
            prop_assert!(r.sum().abs() <= bound);
        }
        for col in c.column_iter() {
            prop_assert!(col.sum().abs() <= bound);
        }
        let (twice, _) = center_gram(&c).unwrap();
        prop_assert!((twice - &c).amax() <= 1e-12 * (1.0 + g.amax()));
    }

    #[test]
    fn centering_training_columns_reproduces_centered_gram(x in samples(), beta in 0.05f64..2.0) {
        let g = gram(&KernelSpec::gaussian(beta).unwrap(), &x).unwrap();
        let (c, agg) = center_gram(&g).unwrap();
        for j in 0..g.ncols() {
            let col: Vec<f64> = g.column(j).iter().copied().collect();
            let v = center_gram_vector(&col, &agg).unwrap();
            prop_assert!((v - c.column(j)).amax() <= 1e-12);
        }
    }

    #[test]
    fn training_samples_transform_to_their_stored_images(x in samples()) {
        let beta = kernels::median_heuristic_beta(&x).unwrap_or(1.0);
        for centered in [true, false] {
            let opts = KpcaOptions { centered, ..Default::default() };
            let Ok(model) = kpca_fit(&x, KernelSpec::gaussian(beta).unwrap(), &opts) else {
                continue;
            };
            for j in 0..x.n_samples() {
                let z = kpca_transform(&model, x.column(j)).unwrap();
                prop_assert!((z - model.z_column(j)).amax() <= 1e-10);
            }
        }
    }
}
