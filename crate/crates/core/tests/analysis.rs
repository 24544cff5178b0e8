mod common;

use common::*;
use ensemble_projection::analysis::{
    corrupt_labels, ensemble_noise_simulation, label_cooccurrence_curve, Averaging, NoiseSimConfig,
    Reassign,
};
use ensemble_projection::synth::{make_blobs, BlobSpec};
use ensemble_projection::Dataset;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn oracle_curve(d: &Dataset, k_max: usize, averaging: Averaging) -> Vec<f64> {
    let (labels, c) = d.require_labels().unwrap();
    let n = d.n_samples();
    let mut per_query = Vec::new();
    for i in 0..n {
        let ranking = oracle_ranking(&d.features, i);
        per_query.push(
            (0..k_max)
                .map(|k| (labels[ranking[k]] == labels[i]) as u8 as f64)
                .collect::<Vec<_>>(),
        );
    }
    (0..k_max)
        .map(|k| match averaging {
            Averaging::PerImage => per_query.iter().map(|q| q[k]).sum::<f64>() / n as f64,
            Averaging::PerClass => {
                (0..c)
                    .map(|class| {
                        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                        members.iter().map(|&i| per_query[i][k]).sum::<f64>() / members.len() as f64
                    })
                    .sum::<f64>()
                    / c as f64
            }
        })
        .collect()
}

#[test]
fn curve_matches_full_sort_oracle() {
    let mut r = rng(51);
    for trial in 0..100 {
        let m = if trial % 2 == 0 {
            random_matrix(&mut r, 25, 3)
        } else {
            tied_matrix(&mut r, 25, 2)
        };
        let labels: Vec<usize> = (0..25)
            .map(|i| if i < 3 { i } else { r.random_range(0..3) })
            .collect();
        let d = Dataset::labeled(m, labels, None).unwrap();
        for avg in [Averaging::PerClass, Averaging::PerImage] {
            let got = label_cooccurrence_curve(&d, 10, avg).unwrap().p;
            let want = oracle_curve(&d, 10, avg);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn collapsed_blobs_have_perfect_early_neighbours() {
    let d = make_blobs(&BlobSpec::new(3, 6, 4, 10.0, 0.0, 2)).unwrap();
    let p = label_cooccurrence_curve(&d, 5, Averaging::PerClass)
        .unwrap()
        .p;
    assert_eq!(p, vec![1.0; 5]);
}

#[test]
fn shuffled_labels_sit_at_the_prior() {
    let d = make_blobs(&BlobSpec::new(4, 30, 5, 10.0, 1.0, 5)).unwrap();
    let mut r = rng(52);
    let shuffles = 10;
    let mut mean = vec![0.0; 10];
    for _ in 0..shuffles {
        let mut labels = d.labels().unwrap().to_vec();
        labels.shuffle(&mut r);
        let sd = Dataset::labeled(d.features.clone(), labels, None).unwrap();
        let p = label_cooccurrence_curve(&sd, 10, Averaging::PerImage)
            .unwrap()
            .p;
        mean.iter_mut()
            .zip(p)
            .for_each(|(m, v)| *m += v / shuffles as f64);
    }
    // same-class neighbour probability without structure: 29/119
    let prior = 29.0 / 119.0;
    for v in mean {
        assert!((v - prior).abs() < 0.05, "{v} vs {prior}");
    }
}

#[test]
fn clean_labels_give_a_flat_oracle_curve() {
    let d = make_blobs(&BlobSpec::new(4, 50, 6, 10.0, 1.0, 3)).unwrap();
    let c = ensemble_noise_simulation(&d, &NoiseSimConfig::new(0.0, 1), &[1, 5, 25]).unwrap();
    let first = c.points[0].1;
    assert!(first > 0.95);
    assert!(c.points.iter().all(|&(_, a)| (a - first).abs() <= 0.02));
}

#[test]
fn simulation_is_deterministic() {
    let d = make_blobs(&BlobSpec::new(3, 30, 4, 10.0, 2.0, 3)).unwrap();
    let cfg = NoiseSimConfig::new(0.5, 4);
    let a = ensemble_noise_simulation(&d, &cfg, &[1, 3, 9]).unwrap();
    assert_eq!(a, ensemble_noise_simulation(&d, &cfg, &[1, 3, 9]).unwrap());
    assert!(ensemble_noise_simulation(&d.strip_labels(), &cfg, &[1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn corruption_touches_exact_counts(seed in any::<u64>(), len in 1usize..80, rate in 0.0f64..1.0, c in 2usize..6) {
        let mut r = rng(seed);
        let original: Vec<usize> = (0..len).map(|_| r.random_range(0..c)).collect();
        let mut y = original.clone();
        let picked = corrupt_labels(&mut y, c, rate, Reassign::OtherClasses, &mut r);
        prop_assert_eq!(picked.len(), (rate * len as f64).round() as usize);
        for i in 0..len {
            prop_assert_eq!(picked.binary_search(&i).is_ok(), y[i] != original[i]);
        }
        let mut z = original.clone();
        let picked = corrupt_labels(&mut z, c, rate, Reassign::AnyClass, &mut r);
        prop_assert_eq!(picked.len(), (rate * len as f64).round() as usize);
        for i in 0..len {
            if picked.binary_search(&i).is_err() {
                prop_assert_eq!(z[i], original[i]);
            }
        }
    }
}
