mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use src_core::baselines::{knn_classify, knn_vote, lda_classify, LdaModel, Projection, ProjectionKind, DEFAULT_KNN_K};

use common::{gaussian, labels, rng};

fn reconstruction_error(data: &DMatrix<f64>, p: &Projection) -> f64 {
    (data - p.reconstruct(data).unwrap()).norm_squared()
}

/// Two Gaussian blobs in `dim` dimensions, centers `gap` apart along the
/// first axis, unit covariance.
fn blobs(seed: u64, dim: usize, per_class: usize, gap: f64) -> (DMatrix<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let mut data = gaussian(&mut r, dim, 2 * per_class);
    let mut lab = vec![1; per_class];
    lab.extend(vec![2; per_class]);
    for j in per_class..2 * per_class {
        data[(0, j)] += gap;
    }
    (data, lab)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pca_reconstruction_error_never_grows_with_d(seed in any::<u64>(), m in 2usize..8, n in 2usize..12) {
        let data = gaussian(&mut rng(seed), m, n);
        let full = Projection::fit(&data, ProjectionKind::Pca, m.min(n)).unwrap();
        let gram = full.basis.tr_mul(&full.basis);
        prop_assert!((gram - DMatrix::identity(full.dimension, full.dimension)).amax() < 1e-8);
        let mut prev = f64::INFINITY;
        for d in 1..=full.dimension {
            let e = reconstruction_error(&data, &full.truncate(d).unwrap());
            prop_assert!(e <= prev + 1e-10);
            prev = e;
        }
    }

    #[test]
    fn one_nearest_neighbour_recalls_the_training_set(seed in any::<u64>(), m in 1usize..6, n in 1usize..30, k in 1usize..5) {
        let mut r = rng(seed);
        let data = gaussian(&mut r, m, n);
        let lab = labels(&mut r, n, k.min(n));
        for j in 0..n {
            let x = data.column(j).clone_owned();
            prop_assert_eq!(knn_classify(&data, &lab, &x, 1).unwrap(), lab[j]);
        }
    }

    #[test]
    fn lda_is_affine_invariant(seed in any::<u64>(), d in 1usize..5, k in 2usize..4) {
        let mut r = rng(seed);
        let n = 12 * k;
        let mut data = gaussian(&mut r, d, n);
        let lab = labels(&mut r, n, k);
        for j in 0..n {
            data[(0, j)] += lab[j] as f64;
        }
        let a = gaussian(&mut r, d, d) + DMatrix::identity(d, d) * 3.0;
        prop_assume!(a.determinant().abs() > 1e-3);
        let shift = gaussian(&mut r, d, 1).column(0).clone_owned();
        let moved = {
            let mut t = &a * &data;
            for mut c in t.column_iter_mut() {
                c += &shift;
            }
            t
        };
        let plain = LdaModel::fit(&data, &lab, k, 0.0).unwrap();
        let affine = LdaModel::fit(&moved, &lab, k, 0.0).unwrap();
        let test = gaussian(&mut r, d, 30) * 2.0;
        for x in test.column_iter() {
            let x = x.clone_owned();
            let dp = plain.discriminants(&x);
            let mut sorted = dp.clone();
            sorted.sort_by(|p, q| q.partial_cmp(p).unwrap());
            if sorted[0] - sorted[1] < 1e-6 {
                continue;
            }
            prop_assert_eq!(plain.classify(&x), affine.classify(&(&a * &x + &shift)));
        }
    }
}

#[test]
fn pca_on_a_line_through_the_origin() {
    let dir = DVector::from_vec(vec![3.0, -4.0, 12.0]).normalize();
    let data = DMatrix::from_fn(3, 7, |i, j| dir[i] * (j as f64 - 3.0));
    let p = Projection::fit(&data, ProjectionKind::Pca, 1).unwrap();
    assert!(reconstruction_error(&data, &p) < 1e-20);
    // Sign rule: the largest-magnitude loading is positive.
    assert!((p.basis.column(0) - &dir).amax() < 1e-12);
}

#[test]
fn full_rank_pca_preserves_distances() {
    let data = gaussian(&mut rng(3), 4, 9);
    let p = Projection::fit(&data, ProjectionKind::Pca, 4).unwrap();
    let coords = p.project(&data).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            let a = (data.column(i) - data.column(j)).norm();
            let b = (coords.column(i) - coords.column(j)).norm();
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn spectral_embedding_reproduces_a_known_psd_matrix() {
    let q = gaussian(&mut rng(5), 4, 4).qr().q();
    let spectrum = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 3.0, 1.5, 0.25]));
    let s = &q * spectrum * q.transpose();
    let p = Projection::fit(&s, ProjectionKind::SpectralEmbedding, 4).unwrap();
    let coords = p.coordinates(&[0, 1, 2, 3]).unwrap();
    assert!((coords.tr_mul(&coords) - &s).amax() < 1e-8);
    for (got, want) in p.singular_values.iter().zip([5.0, 3.0, 1.5, 0.25]) {
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn projection_errors() {
    let data = gaussian(&mut rng(1), 3, 5);
    assert!(matches!(
        Projection::fit(&data, ProjectionKind::SpectralEmbedding, 2),
        Err(src_core::Error::NotSquare { rows: 3, cols: 5 })
    ));
    assert!(matches!(
        Projection::fit(&data, ProjectionKind::Pca, 4),
        Err(src_core::Error::DimensionTooLarge { .. })
    ));
}

#[test]
fn vote_rules() {
    assert_eq!(DEFAULT_KNN_K, 9);
    let lab = [1, 1, 1, 1, 1, 2, 2, 2, 2];
    let dist = vec![1.0; 9];
    assert_eq!(knn_vote(&dist, &lab, 9).unwrap(), 1);
    // Distance ties go to the lower index, vote ties to the lower class.
    assert_eq!(knn_vote(&[0.5, 0.5, 0.1], &[2, 1, 3], 1).unwrap(), 3);
    assert_eq!(knn_vote(&[0.5, 0.5, 0.1], &[2, 1, 3], 2).unwrap(), 2);
    assert_eq!(knn_vote(&[0.2, 0.1], &[2, 1], 2).unwrap(), 1);
    assert_eq!(knn_vote(&[], &[], 1), Err(src_core::Error::EmptyTrainingSet));
}

#[test]
fn well_separated_blobs_are_classified_perfectly() {
    let (train, lab) = blobs(11, 3, 100, 10.0);
    let (test, truth) = blobs(12, 3, 100, 10.0);
    let model = LdaModel::fit(&train, &lab, 2, 1e-6).unwrap();
    let wrong = test.column_iter().zip(&truth).filter(|(x, &y)| model.classify(&x.clone_owned()) != y).count();
    assert_eq!(wrong, 0);
}

#[test]
fn identical_classes_give_coin_flip_accuracy() {
    let (train, lab) = blobs(21, 2, 200, 0.0);
    let mut r = rng(22);
    let test = gaussian(&mut r, 2, 1000);
    let truth: Vec<usize> = (0..1000).map(|_| r.random_range(1..=2)).collect();
    let right = test
        .column_iter()
        .zip(&truth)
        .filter(|(x, &y)| lda_classify(&train, &lab, &x.clone_owned(), 1e-6).unwrap() == y)
        .count();
    let acc = right as f64 / 1000.0;
    assert!((acc - 0.5).abs() <= 0.1, "accuracy {acc}");
}

#[test]
fn degenerate_covariance_with_ridge() {
    let train = DMatrix::from_element(2, 6, 1.0);
    let lab = vec![1, 1, 1, 2, 2, 2];
    let x = DVector::from_vec(vec![1.0, 1.0]);
    assert_eq!(lda_classify(&train, &lab, &x, 1e-6).unwrap(), 1);
    assert_eq!(lda_classify(&train, &lab, &x, 0.0), Err(src_core::Error::SingularCovariance));
}
