use serde::{Deserialize, Serialize};

use super::{Corpus, ModuleCategory, ReviewRecord, SECONDS_PER_DAY};

/// Dataset cleaning rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Reviews with more changed lines (added + deleted) are dropped.
    pub max_loc: u64,
    /// Closed reviews that stayed open strictly longer than this are dropped.
    pub max_duration_secs: i64,
    pub keep_bots: bool,
    pub excluded_categories: Vec<ModuleCategory>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_loc: 5000,
            max_duration_secs: 30 * SECONDS_PER_DAY,
            keep_bots: false,
            excluded_categories: vec![
                ModuleCategory::Documentation,
                ModuleCategory::Iac,
                ModuleCategory::ThirdParty,
            ],
        }
    }
}

impl FilterConfig {
    pub fn keeps(&self, corpus: &Corpus, review: &ReviewRecord) -> bool {
        let category_ok = corpus
            .module(&review.module_id)
            .is_some_and(|m| !self.excluded_categories.contains(&m.category));
        let duration_ok = review
            .duration()
            .is_none_or(|d| d <= self.max_duration_secs);
        category_ok
            && review.changed_loc <= self.max_loc
            && duration_ok
            && (self.keep_bots || !review.is_bot_authored)
    }
}

/// Returns a new corpus with the cleaning rules applied.
///
/// Bot comments are stripped from the surviving reviews unless
/// `keep_bots` is set. Review order is preserved.
pub fn filter_corpus(corpus: &Corpus, rules: &FilterConfig) -> Corpus {
    let reviews = corpus
        .reviews()
        .iter()
        .filter(|r| rules.keeps(corpus, r))
        .map(|r| {
            let mut r = r.clone();
            if !rules.keep_bots {
                r.comments.retain(|c| !c.is_bot);
            }
            r
        })
        .collect();
    corpus.with_reviews(reviews)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::{assignment, module, review};
    use crate::corpus::{Comment, ModuleCategory};

    fn corpus_with(reviews: Vec<ReviewRecord>) -> Corpus {
        Corpus::new(
            reviews,
            vec![assignment("a", "t", "l", 0, None)],
            vec![
                module("m", "t", ModuleCategory::Code),
                module("docs", "t", ModuleCategory::Documentation),
                module("infra", "t", ModuleCategory::Iac),
                module("vendor", "t", ModuleCategory::ThirdParty),
            ],
        )
        .unwrap()
    }

    fn ids(c: &Corpus) -> Vec<&str> {
        c.reviews().iter().map(|r| r.review_id.as_str()).collect()
    }

    #[test]
    fn loc_limit_is_inclusive() {
        let mut big = review("big", "m", "a", 0, None);
        big.files[0].lines_added = 5001;
        big.changed_loc = 5001;
        let mut edge = review("edge", "m", "a", 1, None);
        edge.files[0].lines_added = 4000;
        edge.files[0].lines_deleted = 1000;
        edge.changed_loc = 5000;
        let c = filter_corpus(&corpus_with(vec![big, edge]), &FilterConfig::default());
        assert_eq!(ids(&c), ["edge"]);
    }

    #[test]
    fn exactly_thirty_days_is_kept() {
        let day = SECONDS_PER_DAY;
        let c = corpus_with(vec![
            review("ok", "m", "a", 0, Some(30 * day)),
            review("stale", "m", "a", 1, Some(1 + 30 * day + 1)),
            review("open", "m", "a", 2, None),
        ]);
        let f = filter_corpus(&c, &FilterConfig::default());
        assert_eq!(ids(&f), ["ok", "open"]);
    }

    #[test]
    fn non_code_modules_are_dropped() {
        let c = corpus_with(vec![
            review("a1", "docs", "a", 0, None),
            review("a2", "infra", "a", 1, None),
            review("a3", "vendor", "a", 2, None),
            review("a4", "m", "a", 3, None),
        ]);
        assert_eq!(ids(&filter_corpus(&c, &FilterConfig::default())), ["a4"]);
    }

    #[test]
    fn bots_are_dropped_unless_kept() {
        let mut bot = review("bot", "m", "ci", 0, None);
        bot.is_bot_authored = true;
        let mut human = review("human", "m", "a", 1, Some(10));
        human.comments = vec![Comment::bot("ci", 2), Comment::new("a", 3)];
        let c = corpus_with(vec![bot, human]);

        let f = filter_corpus(&c, &FilterConfig::default());
        assert_eq!(ids(&f), ["human"]);
        assert_eq!(f.reviews()[0].comments, vec![Comment::new("a", 3)]);

        let keep = FilterConfig {
            keep_bots: true,
            ..FilterConfig::default()
        };
        let k = filter_corpus(&c, &keep);
        assert_eq!(ids(&k), ["bot", "human"]);
        assert_eq!(k.reviews()[1].comments.len(), 2);
        // input untouched
        assert_eq!(c.reviews()[1].comments.len(), 2);
    }
}
