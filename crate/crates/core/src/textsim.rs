//! Word tokenization and token-set Jaccard similarity.

use std::collections::BTreeSet;

/// A set of lower-cased, non-empty word tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSet(
            iter.into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }
}

/// Lower-cases `text` and splits it on every maximal run of non-alphanumeric
/// characters.
pub fn tokenize(text: &str) -> TokenSet {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// |A ∩ B| / |A ∪ B|. Two empty sets have similarity 0.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.0.intersection(&b.0).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(tokens: &[&str]) -> TokenSet {
        tokens.iter().copied().collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Working posture"), set(&["working", "posture"]));
        assert_eq!(
            tokenize("Effort-reward imbalance"),
            set(&["effort", "reward", "imbalance"])
        );
        assert!(tokenize("").is_empty());
        assert!(tokenize(" -- ").is_empty());
        assert_eq!(tokenize("Job  job JOB"), set(&["job"]));
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["a", "b"])), 1.0);
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["c", "d"])), 0.0);
        assert_eq!(jaccard(&set(&["a", "b"]), &set(&["b", "c"])), 1.0 / 3.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
    }

    fn token_sets() -> impl Strategy<Value = TokenSet> {
        prop::collection::btree_set("[a-e]{1,2}", 0..6).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_bounded(a in token_sets(), b in token_sets()) {
            let ab = jaccard(&a, &b);
            prop_assert_eq!(ab, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b && !a.is_empty());
        }

        #[test]
        fn tokenize_is_idempotent_on_joined_output(text in "[A-Za-z0-9 ,.-]{0,40}") {
            let once = tokenize(&text);
            let joined = once.iter().collect::<Vec<_>>().join(" ");
            prop_assert_eq!(tokenize(&joined), once);
        }
    }
}
