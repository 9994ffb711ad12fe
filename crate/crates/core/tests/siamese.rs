mod support;

use hangul_coach::dsp::MfccMatrix;
use hangul_coach::siamese::{
    load_model, read_model, save_model, sigmoid, train, write_model, ModelError, PairExample, SiameseModel, Tensor,
    TrainConfig, INPUT_COEFFS, INPUT_FRAMES,
};
use hangul_coach_oracles::shapes;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::gradcheck;

#[test]
fn layer_shapes_follow_valid_convolution_arithmetic() {
    let input = (1, INPUT_COEFFS, INPUT_FRAMES);
    let c1 = shapes::conv(input, 8, 3, 7);
    let p1 = shapes::pool2(c1);
    let c2 = shapes::conv(p1, 16, 3, 5);
    let p2 = shapes::pool2(c2);
    assert_eq!([c1, p1, c2, p2], [(8, 11, 194), (8, 5, 97), (16, 3, 93), (16, 1, 46)]);
    assert_eq!(p2.0 * p2.1 * p2.2, Tensor::FcWeight.dims()[0]);
    assert_eq!(Tensor::FcWeight.dims(), &[736, 64]);
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let model = gradcheck::random_model(11);
    let batch = gradcheck::random_batch(12, 4);
    let report = gradcheck::check(&model, &batch, 200, 13);
    assert_eq!(report.accepted, 200);
    assert!(report.max_relative_error < 1e-4, "{report:?}");
}

#[test]
fn laws_over_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = gradcheck::random_model(21);
    let expected = sigmoid(model.head_bias());
    for _ in 0..100 {
        let a = gradcheck::random_matrix(&mut rng, 20.0);
        let b = gradcheck::random_matrix(&mut rng, 20.0);
        assert_eq!(model.similarity(&a, &a).unwrap(), expected);
        let ab = model.similarity(&a, &b).unwrap();
        assert_eq!(ab, model.similarity(&b, &a).unwrap());
        assert!(ab > 0.0 && ab < 1.0);
        assert!(model.embed(&a).unwrap().iter().all(|&e| e > 0.0 && e < 1.0));
    }
}

#[test]
fn weights_are_shared_between_twins() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = SiameseModel::init(5);
    let x = gradcheck::random_matrix(&mut rng, 5.0);
    for tensor in Tensor::ALL {
        for _ in 0..3 {
            let i = rng.random_range(0..tensor.len());
            model.params_mut().get_mut(tensor)[i] += rng.random_range(-1.0..1.0);
            assert_eq!(model.similarity(&x, &x).unwrap(), sigmoid(model.head_bias()));
        }
    }
}

#[test]
fn zero_model_embeds_to_one_half() {
    let model = SiameseModel::from_params(hangul_coach::siamese::ParamSet::zeros());
    let zeros = MfccMatrix::from_rows(vec![0.0; INPUT_FRAMES * INPUT_COEFFS], INPUT_FRAMES, INPUT_COEFFS, 0.01);
    assert!(model.embed(&zeros).unwrap().iter().all(|&e| e == 0.5));
}

#[test]
fn wrong_shapes_are_rejected() {
    let model = SiameseModel::init(1);
    let short = MfccMatrix::from_rows(vec![0.0; 10 * INPUT_COEFFS], 10, INPUT_COEFFS, 0.01);
    assert!(matches!(model.embed(&short), Err(ModelError::ShapeMismatch { .. })));
    assert!(PairExample::new(short.clone(), short, true).is_err());
}

#[test]
fn training_is_deterministic_and_saves_exactly() {
    let data = gradcheck::random_batch(3, 6);
    let config = TrainConfig {
        epochs: 3,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let (a, history) = train(SiameseModel::init(42), &data, &config).unwrap();
    let (b, _) = train(SiameseModel::init(42), &data, &config).unwrap();
    assert_eq!(history.len(), 3);
    let (mut bytes_a, mut bytes_b) = (Vec::new(), Vec::new());
    write_model(&a, &mut bytes_a).unwrap();
    write_model(&b, &mut bytes_b).unwrap();
    assert_eq!(bytes_a, bytes_b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ksnm");
    save_model(&a, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    let (x, y) = (&data[0].a, &data[1].b);
    assert_eq!(
        loaded.similarity(x, y).unwrap().to_bits(),
        a.similarity(x, y).unwrap().to_bits()
    );
    assert_eq!(read_model(&mut bytes_a.as_slice()).unwrap(), a);
}

#[test]
fn zero_epochs_leave_the_model_alone() {
    let data = gradcheck::random_batch(3, 2);
    let (model, history) = train(
        SiameseModel::init(7),
        &data,
        &TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert_eq!(model, SiameseModel::init(7));
    assert!(history.is_empty());
}
