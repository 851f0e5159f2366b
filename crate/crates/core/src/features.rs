//! Tokenization and hashed n-gram features.
//!
//! N-grams are the configured-order windows of tokens joined with a single
//! space, hashed with 64-bit FNV-1a over their UTF-8 bytes and reduced modulo
//! the feature dimension. Counts are accumulated per bucket and L2-normalized.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::seed::fnv1a64;

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizerConfig {
    pub dim: usize,
    pub ngram_orders: Vec<usize>,
    pub lowercase: bool,
    pub normalize_urls_users: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self { dim: 1 << 18, ngram_orders: alloc::vec![1, 2], lowercase: true, normalize_urls_users: true }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dim.is_power_of_two() || self.dim < (1 << 10) {
            return Err(CoreError::InvalidConfig(alloc::format!(
                "feature dim must be a power of two >= 1024, got {}",
                self.dim
            )));
        }
        if self.dim > u32::MAX as usize {
            return Err(CoreError::InvalidConfig("feature dim exceeds u32 index space".into()));
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.iter().any(|n| !(1..=3).contains(n)) {
            return Err(CoreError::InvalidConfig("n-gram orders must be a non-empty subset of {1,2,3}".into()));
        }
        Ok(())
    }
}

/// Sparse feature vector with entries sorted by index and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    /// Build from arbitrary `(index, value)` pairs; duplicates are summed and zeros dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if i as usize >= dim {
                return Err(CoreError::DimensionMismatch { expected: dim, actual: i as usize + 1 });
            }
            if !v.is_finite() {
                return Err(CoreError::NonFinite(alloc::format!("feature {i}")));
            }
            *acc.entry(i).or_insert(0.0) += v;
        }
        Ok(Self { dim, entries: acc.into_iter().filter(|&(_, v)| v != 0.0).collect() })
    }

    /// Dense constructor, convenient for small synthetic problems.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::from_pairs(values.len(), values.iter().enumerate().map(|(i, &v)| (i as u32, v)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: u32) -> f64 {
        self.entries.binary_search_by_key(&index, |&(i, _)| i).map_or(0.0, |p| self.entries[p].1)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|&(_, v)| v * v).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v.is_finite())
    }

    /// `a * self + b * other`, merged over the union of supports.
    pub fn linear_combination(&self, a: f64, other: &FeatureVector, b: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, actual: other.dim });
        }
        let (x, y) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(x.len() + y.len());
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            let (idx, v) = match (x.get(i), y.get(j)) {
                (Some(&(xi, xv)), Some(&(yi, yv))) if xi == yi => {
                    i += 1;
                    j += 1;
                    (xi, a * xv + b * yv)
                }
                (Some(&(xi, xv)), Some(&(yi, _))) if xi < yi => {
                    i += 1;
                    (xi, a * xv)
                }
                (Some(&(xi, xv)), None) => {
                    i += 1;
                    (xi, a * xv)
                }
                (_, Some(&(yi, yv))) => {
                    j += 1;
                    (yi, b * yv)
                }
                (None, None) => unreachable!(),
            };
            if v != 0.0 {
                out.push((idx, v));
            }
        }
        Ok(Self { dim: self.dim, entries: out })
    }

    /// Keep only entries for which `keep` returns true, preserving values.
    pub fn filter(&self, mut keep: impl FnMut(u32, f64) -> bool) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().copied().filter(|&(i, v)| keep(i, v)).collect() }
    }

    /// Rescale to unit L2 norm; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for e in &mut self.entries {
                e.1 /= n;
            }
        }
        self
    }

    /// `index:weight,...` rendering used by the feature dump format.
    pub fn render_sparse(&self) -> String {
        let mut out = String::new();
        for (k, (i, v)) in self.entries.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&alloc::format!("{i}:{v:?}"));
        }
        out
    }

    pub fn parse_sparse(dim: usize, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in text.split(',').filter(|s| !s.is_empty()) {
            let (i, v) = item
                .split_once(':')
                .ok_or_else(|| CoreError::MalformedRow { row: 0, message: alloc::format!("bad entry `{item}`") })?;
            let i: u32 = i.parse().map_err(|_| CoreError::MalformedRow { row: 0, message: alloc::format!("bad index `{i}`") })?;
            let v: f64 = v.parse().map_err(|_| CoreError::MalformedRow { row: 0, message: alloc::format!("bad weight `{v}`") })?;
            pairs.push((i, v));
        }
        Self::from_pairs(dim, pairs)
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace/punctuation tokenization with URL, mention and hashtag handling.
pub fn tokenize(text: &str, config: &FeaturizerConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk == URL_TOKEN || chunk == USER_TOKEN {
            tokens.push(chunk.to_string());
            continue;
        }
        if config.normalize_urls_users {
            let lower = chunk.to_ascii_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
                tokens.push(URL_TOKEN.to_string());
                continue;
            }
            if let Some(rest) = chunk.strip_prefix('@') {
                if rest.chars().next().is_some_and(is_word_char) {
                    tokens.push(USER_TOKEN.to_string());
                    continue;
                }
            }
        }
        // Hashtags fall through: `#` is punctuation, so the word survives on its own.
        for word in chunk.split(|c: char| !is_word_char(c)).filter(|w| !w.is_empty()) {
            tokens.push(if config.lowercase { word.to_lowercase() } else { word.to_string() });
        }
    }
    tokens
}

pub fn bucket(ngram: &str, dim: usize) -> u32 {
    (fnv1a64(ngram.as_bytes()) % dim as u64) as u32
}

/// Raw (unnormalized) bucket counts of all configured n-grams.
pub fn ngram_counts(tokens: &[String], config: &FeaturizerConfig) -> BTreeMap<u32, f64> {
    let mut counts = BTreeMap::new();
    let mut gram = String::new();
    for &n in &config.ngram_orders {
        if n == 0 || tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            gram.clear();
            for (k, t) in window.iter().enumerate() {
                if k > 0 {
                    gram.push(' ');
                }
                gram.push_str(t);
            }
            *counts.entry(bucket(&gram, config.dim)).or_insert(0.0) += 1.0;
        }
    }
    counts
}

pub fn featurize(tokens: &[String], config: &FeaturizerConfig) -> FeatureVector {
    let counts = ngram_counts(tokens, config);
    FeatureVector { dim: config.dim, entries: counts.into_iter().collect() }.normalized()
}

pub fn featurize_text(text: &str, config: &FeaturizerConfig) -> FeatureVector {
    featurize(&tokenize(text, config), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn small() -> FeaturizerConfig {
        FeaturizerConfig { dim: 1024, ..FeaturizerConfig::default() }
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("", &small()).is_empty());
        assert!(tokenize("  \t ", &small()).is_empty());
    }

    #[test]
    fn handles_users_urls_and_hashtags() {
        let toks = tokenize("Flooding at @cityhall http://x.co #rescue", &small());
        assert_eq!(toks, vec!["flooding", "at", "<user>", "<url>", "rescue"]);
    }

    #[test]
    fn punctuation_splits_words() {
        let toks = tokenize("Help!! Need water,food... WWW.example.org", &small());
        assert_eq!(toks, vec!["help", "need", "water", "food", "<url>"]);
        let cased = FeaturizerConfig { lowercase: false, ..small() };
        assert_eq!(tokenize("Need Water", &cased), vec!["Need", "Water"]);
    }

    #[test]
    fn config_validation() {
        assert!(FeaturizerConfig::default().validate().is_ok());
        assert!(FeaturizerConfig { dim: 512, ..small() }.validate().is_err());
        assert!(FeaturizerConfig { dim: 1500, ..small() }.validate().is_err());
        assert!(FeaturizerConfig { ngram_orders: vec![4], ..small() }.validate().is_err());
    }

    #[test]
    fn empty_tokens_give_zero_vector() {
        let v = featurize(&[], &small());
        assert_eq!(v.nnz(), 0);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn colliding_ngrams_sum_their_counts() {
        // Brute-force two distinct short tokens sharing a bucket.
        let dim = 1024;
        let mut seen: BTreeMap<u32, String> = BTreeMap::new();
        let (mut a, mut b) = (String::new(), String::new());
        'search: for x in 0..100_000u32 {
            let word = format!("w{x}");
            let bkt = bucket(&word, dim);
            if let Some(prev) = seen.get(&bkt) {
                a = prev.clone();
                b = word;
                break 'search;
            }
            seen.insert(bkt, word);
        }
        assert_ne!(a, b);
        let cfg = FeaturizerConfig { dim, ngram_orders: vec![1], ..FeaturizerConfig::default() };
        let tokens = vec![a.clone(), b.clone()];
        let raw = ngram_counts(&tokens, &cfg);
        assert_eq!(raw.len(), 1);
        assert_eq!(*raw.values().next().unwrap(), 2.0);
        let v = featurize(&tokens, &cfg);
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.entries()[0].0, bucket(&a, dim));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn linear_combination_merges_supports() {
        let x = FeatureVector::from_pairs(8, [(1, 1.0), (3, 2.0)]).unwrap();
        let y = FeatureVector::from_pairs(8, [(3, 4.0), (5, 1.0)]).unwrap();
        let z = x.linear_combination(0.5, &y, 0.5).unwrap();
        assert_eq!(z.entries(), &[(1, 0.5), (3, 3.0), (5, 0.5)]);
        assert!(x.linear_combination(1.0, &FeatureVector::zeros(4), 1.0).is_err());
    }

    #[test]
    fn sparse_render_parses_back() {
        let v = featurize_text("the river rose overnight near the bridge", &small());
        let back = FeatureVector::parse_sparse(v.dim(), &v.render_sparse()).unwrap();
        assert_eq!(back, v);
    }

    proptest! {
        #[test]
        fn nonempty_vectors_are_unit_norm(words in proptest::collection::vec("[a-z]{1,8}", 1..30)) {
            let v = featurize(&words, &small());
            prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            prop_assert!(v.entries().iter().all(|&(i, w)| (i as usize) < v.dim() && w != 0.0));
            prop_assert!(v.entries().windows(2).all(|p| p[0].0 < p[1].0));
        }

        #[test]
        fn tokenize_is_a_fixpoint(text in "[ a-zA-Z0-9@#:/.,!?_-]{0,60}") {
            let cfg = small();
            let once = tokenize(&text, &cfg);
            let twice = tokenize(&once.join(" "), &cfg);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn one_token_change_is_local(
            words in proptest::collection::vec("[a-z]{1,6}", 3..20),
            pos in 0usize..20,
            replacement in "[A-Z]{3}",
        ) {
            let cfg = small();
            let pos = pos % words.len();
            let mut changed = words.clone();
            changed[pos] = replacement.to_lowercase() + "zz";
            let before = ngram_counts(&words, &cfg);
            let after = ngram_counts(&changed, &cfg);
            // n-grams touching one position: 1 unigram + up to 2 bigrams.
            let touching = 1 + usize::from(pos > 0) + usize::from(pos + 1 < words.len());
            let mut keys: alloc::collections::BTreeSet<u32> = before.keys().copied().collect();
            keys.extend(after.keys().copied());
            let differing = keys.iter().filter(|k| before.get(k) != after.get(k)).count();
            prop_assert!(differing <= 2 * touching);
        }
    }
}
