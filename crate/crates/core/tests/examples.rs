mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revsignal::corpus::Corpus;
use revsignal::examples::*;
use revsignal::timeline::TemporalIndex;

fn setup(seed: u64) -> (Corpus, TemporalIndex) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_corpus(&mut rng, &Shape { reviews: 50, ..Shape::default() });
    let i = TemporalIndex::build(&c, Default::default());
    (c, i)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn labels_agree_with_the_comments(seed in any::<u64>()) {
        let (c, index) = setup(seed);
        let oracle = Oracle::new(&c);
        let ex = build_examples_between(&c, &index, 0, 2000, 0, ExampleOptions::new(Task::Participation));
        for e in &ex {
            let r = c.review(&e.review_id).unwrap();
            prop_assert_eq!(e.participated, oracle.is_reviewer(r, &e.candidate_id));
            prop_assert_eq!(e.comment_count, oracle.comment_count(r, &e.candidate_id));
            prop_assert_eq!(e.log_feedback, (1.0 + e.comment_count as f64).log10());
            prop_assert_eq!(Some(e.features.to_array()), oracle.features(r, &e.candidate_id, 0));
        }
        // one example per employed non-author, for every review whose author is employed
        for r in c.reviews() {
            let got: Vec<&str> = ex.iter().filter(|e| e.review_id == r.review_id).map(|e| e.candidate_id.as_str()).collect();
            let want = if oracle.org(&r.author_id, r.created_at).is_some() { oracle.candidates(r) } else { Vec::new() };
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn feedback_examples_are_the_participants(seed in any::<u64>()) {
        let (c, index) = setup(seed);
        let part = build_examples_between(&c, &index, 0, 2000, 0, ExampleOptions::new(Task::Participation));
        let feed = build_examples_between(&c, &index, 0, 2000, 0, ExampleOptions::new(Task::Feedback));
        let positives: Vec<_> = part.into_iter().filter(|e| e.participated).collect();
        prop_assert!(feed.iter().all(|e| e.comment_count >= 1));
        prop_assert_eq!(feed, positives);
    }

    #[test]
    fn phases_only_see_their_own_reviews(seed in any::<u64>(), a in 100i64..600, b in 600i64..1000) {
        let (c, index) = setup(seed);
        let w = WindowSpec::new(0, a, a, b).unwrap();
        let opts = ExampleOptions::new(Task::Participation);
        for (phase, lo, hi) in [(Phase::Train, 0, a), (Phase::Test, a, b)] {
            for e in build_examples(&c, &index, &w, phase, opts) {
                let t = c.review(&e.review_id).unwrap().created_at;
                prop_assert!(lo <= t && t < hi);
            }
        }
    }

    #[test]
    fn undersampling_is_deterministic_and_keeps_positives(
        labels in prop::collection::vec(any::<bool>(), 0..300),
        rate in 0.01f64..=1.0,
        seed in any::<u64>(),
    ) {
        let cfg = SamplingConfig { rate, seed };
        let kept = undersample_indices(&labels, &cfg).unwrap();
        prop_assert_eq!(&undersample_indices(&labels, &cfg).unwrap(), &kept);
        let other = undersample_indices(&labels, &SamplingConfig { rate, seed: seed.wrapping_add(1) }).unwrap();
        let pos = |k: &[usize]| k.iter().copied().filter(|&i| labels[i]).collect::<BTreeSet<_>>();
        prop_assert_eq!(pos(&kept), pos(&other));
        prop_assert_eq!(pos(&kept).len(), labels.iter().filter(|&&l| l).count());
        let negatives = labels.iter().filter(|&&l| !l).count();
        prop_assert_eq!(kept.len() - pos(&kept).len(), undersample_count(negatives, rate));
    }

    #[test]
    fn windows_tile_the_span(tf in 1u32..12, n in 1usize..6, period in 1u32..4) {
        let span = (1_000, 1_000 + 40 * SECONDS_PER_MONTH);
        let Ok(ws) = make_windows(span, tf, n, period) else {
            prop_assert!(i64::from(tf + n as u32 * period) > 40);
            return Ok(());
        };
        prop_assert_eq!(ws.len(), n);
        for (k, w) in ws.iter().enumerate() {
            prop_assert!(w.validate().is_ok());
            prop_assert_eq!(w.train_end - w.train_start, i64::from(tf) * SECONDS_PER_MONTH);
            prop_assert_eq!(w.test_end - w.test_start, i64::from(period) * SECONDS_PER_MONTH);
            prop_assert!(w.train_start >= span.0 && w.test_end <= span.1);
            if k > 0 {
                prop_assert_eq!(w.test_start, ws[k - 1].test_end);
            }
        }
    }
}

#[test]
fn rounding_is_half_up_with_a_floor_of_one() {
    assert_eq!(undersample_count(0, 0.05), 0);
    assert_eq!(undersample_count(1, 0.05), 1);
    assert_eq!(undersample_count(10, 0.05), 1);
    assert_eq!(undersample_count(30, 0.05), 2);
    assert_eq!(undersample_count(10, 0.25), 3);
    assert_eq!(undersample_count(14, 0.25), 4);
    assert_eq!(undersample_count(9, 1.0), 9);
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(matches!(WindowSpec::new(10, 5, 5, 20), Err(ExampleError::InvalidWindow(_))));
    assert!(WindowSpec::new(0, 10, 5, 20).is_err());
    assert!(WindowSpec::new(0, 10, 10, 20).is_ok());
    for rate in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(undersample_indices(&[true, false], &SamplingConfig { rate, seed: 0 }).is_err());
    }
    assert!(make_windows((0, 5 * SECONDS_PER_MONTH), 3, 3, 1).is_err());
}

#[test]
fn aligned_windows_share_test_periods() {
    let span = (0, 27 * SECONDS_PER_MONTH);
    let grid = make_aligned_windows(span, &[3, 6, 9, 12], 5, 3).unwrap();
    let tests: Vec<Vec<(i64, i64)>> = grid
        .iter()
        .map(|(_, ws)| ws.iter().map(|w| (w.test_start, w.test_end)).collect())
        .collect();
    assert!(tests.windows(2).all(|p| p[0] == p[1]));
    assert_eq!(tests[0][0].0, 12 * SECONDS_PER_MONTH);
}

#[test]
fn mc1_examples() {
    let c = mc1();
    let index = TemporalIndex::build(&c, Default::default());
    let ex = build_examples_between(&c, &index, 0, 1000, 0, ExampleOptions::new(Task::Participation));
    let pairs: Vec<(&str, &str, bool, u32)> = ex
        .iter()
        .map(|e| (e.review_id.as_str(), e.candidate_id.as_str(), e.participated, e.comment_count))
        .collect();
    assert_eq!(
        pairs,
        [
            ("c1", "R1", true, 2),
            ("c1", "R2", false, 0),
            ("c2", "A", true, 1),
            ("c2", "R1", false, 0),
            ("c3", "R1", false, 0),
            ("c3", "R2", false, 0),
        ]
    );
    assert_eq!(ex[0].log_feedback, 3f64.log10());
}
