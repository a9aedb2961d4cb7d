use fuse_core::cohort::{CohortTable, Column, ColumnData};
use fuse_core::ml::boosting::train_gradient_boosting_traced;
use fuse_core::ml::{
    fit_model, oof_scores, roc_auc, stratified_kfold, stratified_kfold_keyed, BoostingParams, FeatureMatrix,
    ForestParams, ModelFamily, ModelParams, ModelSpec,
};
use fuse_core::rng::stream;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn view(cols: &[Vec<f64>]) -> CohortTable {
    let n = cols[0].len();
    let columns = cols
        .iter()
        .enumerate()
        .map(|(j, c)| Column {
            name: format!("x{j}"),
            data: ColumnData::Numeric(c.iter().map(|&v| Some(v)).collect()),
        })
        .collect();
    CohortTable::new(columns, n).unwrap()
}

/// Light hyperparameters so property cases stay fast.
fn quick_params() -> ModelParams {
    ModelParams {
        random_forest: ForestParams {
            n_trees: 40,
            ..Default::default()
        },
        gradient_boosting: BoostingParams {
            n_rounds: 30,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn noisy_linear(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = stream(seed, &[]);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let y = (0..n)
        .map(|i| {
            let z: f64 = cols.iter().enumerate().map(|(j, c)| c[i] / (j + 1) as f64).sum();
            let e: f64 = StandardNormal.sample(&mut rng);
            u8::from(z + 0.8 * e > 0.0)
        })
        .collect();
    (cols, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boosting_loss_never_increases(seed in any::<u64>(), n in 10usize..80, p in 1usize..5, lr in 0.01..1.0f64) {
        let mut rng = stream(seed, &[]);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let params = BoostingParams { n_rounds: 50, learning_rate: lr, ..Default::default() };
        let (_, trace) = train_gradient_boosting_traced(&x, &y, &params, seed).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn stratified_folds_balanced(y in prop::collection::vec(0u8..2, 10..200), k in 2usize..6, seed in any::<u64>()) {
        let n1 = y.iter().filter(|&&l| l == 1).count();
        prop_assume!(n1 >= k && y.len() - n1 >= k);
        let f = stratified_kfold(&y, k, seed).unwrap();
        for class in 0..2u8 {
            let counts: Vec<usize> = (0..k)
                .map(|fold| (0..y.len()).filter(|&i| y[i] == class && f.fold_of[i] == fold).count())
                .collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn own_label_never_leaks_into_own_score(seed in any::<u64>(), who in 0usize..60) {
        let (cols, y) = noisy_linear(60, 3, seed);
        let v = view(&cols);
        let keys: Vec<u64> = (0..60).collect();
        let folds = stratified_kfold(&y, 5, seed).unwrap();
        for family in ModelFamily::ALL {
            let spec = ModelSpec { family, params: quick_params(), seed };
            let base = oof_scores(&v, &y, &spec, &folds, &keys).unwrap();
            let mut y2 = y.clone();
            y2[who] ^= 1;
            let mine = oof_scores(&v, &y2, &spec, &folds, &keys);
            // flipping can empty a class in some training complement; nothing to compare then
            if let Ok(s) = mine {
                prop_assert_eq!(base[who].to_bits(), s[who].to_bits(), "{}", family);
            }
        }
    }

    #[test]
    fn oof_scores_follow_row_permutation(seed in any::<u64>(), shift in 1usize..59) {
        let (cols, y) = noisy_linear(60, 3, seed);
        let keys: Vec<u64> = (0..60u64).map(|i| i * 7919 + 13).collect();
        let perm: Vec<usize> = (0..60).map(|i| (i + shift) % 60).rev().collect();
        let cols2: Vec<Vec<f64>> = cols.iter().map(|c| perm.iter().map(|&i| c[i]).collect()).collect();
        let y2: Vec<u8> = perm.iter().map(|&i| y[i]).collect();
        let keys2: Vec<u64> = perm.iter().map(|&i| keys[i]).collect();
        let f1 = stratified_kfold_keyed(&y, &keys, 5, seed).unwrap();
        let f2 = stratified_kfold_keyed(&y2, &keys2, 5, seed).unwrap();
        for family in ModelFamily::ALL {
            let spec = ModelSpec { family, params: quick_params(), seed };
            let a = oof_scores(&view(&cols), &y, &spec, &f1, &keys).unwrap();
            let b = oof_scores(&view(&cols2), &y2, &spec, &f2, &keys2).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                prop_assert_eq!(a[i].to_bits(), b[j].to_bits(), "{}", family);
            }
        }
    }
}

#[test]
fn trainers_are_deterministic() {
    let (cols, y) = noisy_linear(120, 4, 5);
    let rows: Vec<Vec<f64>> = (0..120).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let x = FeatureMatrix::from_rows(&rows).unwrap();
    for family in ModelFamily::ALL {
        let a = fit_model(&x, &y, family, &quick_params(), 42).unwrap();
        let b = fit_model(&x, &y, family, &quick_params(), 42).unwrap();
        assert_eq!(a, b, "{family}");
    }
}

fn threshold_task(n: usize, seed: u64) -> (FeatureMatrix, Vec<u8>) {
    let mut rng = stream(seed, &[]);
    let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y = x.iter().map(|&v| u8::from(v > 0.0)).collect();
    (FeatureMatrix::from_rows(&x.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap(), y)
}

#[test]
fn every_trainer_learns_a_threshold() {
    let (xtr, ytr) = threshold_task(400, 1);
    let (xte, yte) = threshold_task(400, 2);
    for family in ModelFamily::ALL {
        let m = fit_model(&xtr, &ytr, family, &ModelParams::default(), 3).unwrap();
        let auc = roc_auc(&m.predict_proba(&xte), &yte).unwrap();
        assert!(auc >= 0.95, "{family}: {auc}");
    }
}

#[test]
fn null_labels_give_chance_auc() {
    let mut rng = stream(99, &[]);
    let cols: Vec<Vec<f64>> = (0..5).map(|_| (0..500).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
    let y: Vec<u8> = (0..500).map(|_| u8::from(rng.random::<bool>())).collect();
    let keys: Vec<u64> = (0..500).collect();
    let folds = stratified_kfold(&y, 5, 1).unwrap();
    for family in ModelFamily::ALL {
        let spec = ModelSpec::new(family, 4);
        let s = oof_scores(&view(&cols), &y, &spec, &folds, &keys).unwrap();
        let auc = roc_auc(&s, &y).unwrap();
        assert!((0.40..=0.60).contains(&auc), "{family}: {auc}");
    }
}
