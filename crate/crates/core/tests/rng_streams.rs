use mckean_mlp::rng::{gaussian_vector, uniform, uniform_at, IndexKey, Tag};
use proptest::prelude::*;

const SAMPLES: u64 = 100_000;

#[test]
fn uniform_passes_kolmogorov_smirnov() {
    let mut u: Vec<f64> = (0..SAMPLES)
        .map(|i| uniform(&IndexKey::new(17, &[i]), Tag::TIME))
        .collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample statistic, asymptotic form
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "KS statistic {d} above {critical}");
    assert!(u.iter().all(|&x| (0.0..1.0).contains(&x)));
}

#[test]
fn uniform_mean_is_one_half() {
    let mean = (0..SAMPLES)
        .map(|i| uniform(&IndexKey::new(5, &[3, i]), Tag::custom(1)))
        .sum::<f64>()
        / SAMPLES as f64;
    let tol = 3.0 / (12.0 * SAMPLES as f64).sqrt();
    assert!((mean - 0.5).abs() < tol, "mean {mean}");
}

#[test]
fn gaussian_variance_is_one() {
    let d = 3;
    let mut sum = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for i in 0..SAMPLES {
        let g = gaussian_vector(&IndexKey::new(9, &[i]), Tag::increment(0), d, 1.0).unwrap();
        for c in 0..d {
            sum[c] += g[c];
            sq[c] += g[c] * g[c];
        }
    }
    let n = SAMPLES as f64;
    for c in 0..d {
        let mean = sum[c] / n;
        let var = (sq[c] - n * mean * mean) / (n - 1.0);
        assert!((var - 1.0).abs() < 0.05, "coordinate {c} variance {var}");
    }
}

#[test]
fn distinct_keys_give_uncorrelated_streams() {
    let pairs = [
        (IndexKey::new(1, &[0]), IndexKey::new(1, &[1])),
        (IndexKey::new(1, &[0, 2]), IndexKey::new(1, &[0, 2, 0])),
        (IndexKey::new(1, &[4]), IndexKey::new(2, &[4])),
        (IndexKey::new(1, &[1, 23]), IndexKey::new(1, &[12, 3])),
    ];
    for (a, b) in &pairs {
        let n = 10_000u64;
        let xs: Vec<f64> = (0..n).map(|t| uniform(a, Tag::custom(t))).collect();
        let ys: Vec<f64> = (0..n).map(|t| uniform(b, Tag::custom(t))).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.05, "{a:?} vs {b:?}: correlation {corr}");
    }
}

#[test]
fn changing_a_suffix_changes_every_draw() {
    let parent = IndexKey::new(4, &[0, 2, 1]);
    for ext in 0..200u64 {
        let a = parent.child(&[ext]);
        let b = parent.child(&[ext + 1]);
        for t in 0..200u64 {
            assert_ne!(a.word(Tag::custom(t), 0), b.word(Tag::custom(t), 0));
            assert_ne!(a.word(Tag::custom(t), 0), parent.word(Tag::custom(t), 0));
        }
    }
}

proptest! {
    #[test]
    fn draws_are_pure(seed: u64, path in prop::collection::vec(any::<u64>(), 0..6), tag: u64, counter: u64) {
        let a = IndexKey::new(seed, &path);
        let b = IndexKey::new(seed, &path);
        prop_assert_eq!(
            uniform_at(&a, Tag::custom(tag), counter).to_bits(),
            uniform_at(&b, Tag::custom(tag), counter).to_bits()
        );
    }

    #[test]
    fn child_is_concatenation(
        seed: u64,
        base in prop::collection::vec(any::<u64>(), 0..4),
        x in prop::collection::vec(any::<u64>(), 0..4),
        y in prop::collection::vec(any::<u64>(), 0..4),
    ) {
        let k = IndexKey::new(seed, &base);
        let joined: Vec<u64> = x.iter().chain(&y).copied().collect();
        prop_assert_eq!(k.child(&x).child(&y), k.child(&joined));
        prop_assert_eq!(k.child(&[]), k.clone());
        let whole: Vec<u64> = base.iter().chain(&joined).copied().collect();
        prop_assert_eq!(k.child(&joined).word(Tag::TIME, 0), IndexKey::new(seed, &whole).word(Tag::TIME, 0));
    }

    #[test]
    fn distinct_paths_do_not_collide(
        seed: u64,
        a in prop::collection::vec(0u64..40, 0..5),
        b in prop::collection::vec(0u64..40, 0..5),
    ) {
        prop_assume!(a != b);
        let (ka, kb) = (IndexKey::new(seed, &a), IndexKey::new(seed, &b));
        prop_assert_ne!(ka.word(Tag::TIME, 0), kb.word(Tag::TIME, 0));
    }

    #[test]
    fn zero_variance_is_the_zero_vector(seed: u64, d in 1usize..8) {
        let g = gaussian_vector(&IndexKey::root(seed), Tag::custom(3), d, 0.0).unwrap();
        prop_assert!(g.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn gaussian_vector_rejects_bad_inputs() {
    let k = IndexKey::root(1);
    assert!(gaussian_vector(&k, Tag::TIME, 0, 1.0).is_err());
    assert!(gaussian_vector(&k, Tag::TIME, 2, -1.0).is_err());
}
