mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revsignal::corpus::{Corpus, ReviewRecord};
use revsignal::features::*;
use revsignal::timeline::TemporalIndex;

const COUNT_FEATURES: [usize; 6] = [1, 2, 3, 4, 10, 11];

fn setup(seed: u64) -> (Corpus, TemporalIndex) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_corpus(&mut rng, &Shape::default());
    let i = TemporalIndex::build(&c, Default::default());
    (c, i)
}

fn features(i: &TemporalIndex, r: &ReviewRecord, cand: &str, w: i64) -> Option<[f64; N_FEATURES]> {
    compute_features(i, r, cand, w).ok().map(|v| v.to_array())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn features_match_the_oracle(seed in any::<u64>()) {
        let (c, index) = setup(seed);
        let oracle = Oracle::new(&c);
        for r in c.reviews() {
            for cand in c.developers().into_iter().filter(|d| *d != r.author_id) {
                for w in [0, r.created_at / 2, r.created_at, r.created_at + 50] {
                    let got = features(&index, r, cand, w);
                    prop_assert_eq!(got, oracle.features(r, cand, w), "{} {} w={}", r.review_id, cand, w);
                    if let Some(v) = got {
                        prop_assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
                        prop_assert!(BOOLEAN_FEATURES.iter().all(|&j| v[j] == 0.0 || v[j] == 1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn later_reviews_do_not_matter(seed in any::<u64>()) {
        let (c, index) = setup(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let Some(target) = c.reviews().get(rng.random_range(0..c.reviews().len())) else {
            return Ok(());
        };
        // drop every other review created at or after the target, and strip
        // comments from the ones that stay
        let reviews: Vec<ReviewRecord> = c
            .reviews()
            .iter()
            .filter(|r| r.created_at < target.created_at || r.review_id == target.review_id || rng.random_bool(0.5))
            .map(|r| {
                let mut r = r.clone();
                if r.created_at >= target.created_at && r.review_id != target.review_id {
                    r.comments.clear();
                }
                r
            })
            .collect();
        let edited = Corpus::new(reviews, c.assignments().to_vec(), c.modules().to_vec()).unwrap();
        let edited_index = TemporalIndex::build(&edited, Default::default());
        for cand in c.developers().into_iter().filter(|d| *d != target.author_id) {
            prop_assert_eq!(features(&index, target, cand, 0), features(&edited_index, target, cand, 0));
        }
    }

    #[test]
    fn window_at_creation_zeroes_the_counts(seed in any::<u64>()) {
        let (c, index) = setup(seed);
        for r in c.reviews() {
            for cand in c.developers().into_iter().filter(|d| *d != r.author_id) {
                if let Some(v) = features(&index, r, cand, r.created_at) {
                    prop_assert!(COUNT_FEATURES.iter().all(|&j| v[j] == 0.0));
                }
            }
        }
    }

    #[test]
    fn candidate_names_are_not_features(seed in any::<u64>()) {
        let (c, index) = setup(seed);
        // rename d1 everywhere; its vectors must not change
        let rename = |s: &str| if s == "d1" { "zz-renamed".to_string() } else { s.to_string() };
        let mut assignments = c.assignments().to_vec();
        for a in &mut assignments {
            a.developer_id = rename(&a.developer_id);
        }
        let mut modules = c.modules().to_vec();
        for m in &mut modules {
            for mi in &mut m.maintainer_intervals {
                mi.developer_id = rename(&mi.developer_id);
            }
        }
        let reviews: Vec<ReviewRecord> = c
            .reviews()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.author_id = rename(&r.author_id);
                for cm in &mut r.comments {
                    cm.commenter_id = rename(&cm.commenter_id);
                }
                r
            })
            .collect();
        let renamed = Corpus::new(reviews, assignments, modules).unwrap();
        let renamed_index = TemporalIndex::build(&renamed, Default::default());
        for (r, r2) in c.reviews().iter().zip(renamed.reviews()) {
            if r.author_id != "d1" {
                prop_assert_eq!(features(&index, r, "d1", 0), features(&renamed_index, r2, "zz-renamed", 0));
            }
        }
    }
}

#[test]
fn file_reviewer_adds_over_files() {
    // R1 reviewed f1 once in MC1; a review touching f1 twice under
    // different names sees the sum of the single-file counts
    let c = mc1();
    let index = TemporalIndex::build(&c, Default::default());
    let mut two = c.review("c3").unwrap().clone();
    two.files.push(revsignal::corpus::FileChange::new("f2", 1, 0));
    let mut only_f2 = c.review("c3").unwrap().clone();
    only_f2.files = vec![revsignal::corpus::FileChange::new("f2", 1, 0)];
    let fr = |r: &ReviewRecord| compute_features(&index, r, "R1", 0).unwrap().file_reviewer;
    assert_eq!(fr(&two), fr(c.review("c3").unwrap()) + fr(&only_f2));
    assert_eq!(fr(&two), 1.0);
}

#[test]
fn feature_sets_have_the_documented_members() {
    let names = |s: FeatureSet| FeatureSelector::from(s).names();
    assert_eq!(names(FeatureSet::Loc), ["changed_loc"]);
    assert_eq!(names(FeatureSet::Fr), ["file_reviewer"]);
    assert_eq!(names(FeatureSet::Wl), ["author_workload", "reviewer_workload"]);
    assert_eq!(names(FeatureSet::Proposed).len(), 11);
    assert!(!names(FeatureSet::Proposed).contains(&"changed_loc"));
    assert_eq!(names(FeatureSet::All).len(), N_FEATURES);
}
