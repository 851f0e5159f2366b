//! Seeded synthetic data: topic-word tweet corpora for benchmarks and
//! separable sparse point clusters for property tests.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::corpus::{humaid_schema, EventCorpus, Example, LabelSchema};
use crate::error::{CoreError, Result};
use crate::features::FeatureVector;
use crate::seed;
use crate::strategies::{LabeledPoint, SslTask, UnlabeledPoint};

/// Train-split class counts of the 2018 Kerala floods event, in schema order.
pub const KERALA_TRAIN_COUNTS: [usize; 10] = [97, 585, 413, 39, 254, 0, 207, 3005, 669, 319];

/// Generator for a labeled tweet-like corpus. Each class owns a Zipf-distributed
/// topic vocabulary; every token is drawn from the example's own topic, from
/// another active class's topic (confusion) or from shared background words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCorpusSpec {
    pub name: String,
    pub train_counts: Vec<usize>,
    pub val_counts: Vec<usize>,
    pub test_counts: Vec<usize>,
    pub topic_vocab: usize,
    pub background_vocab: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub topical_rate: f64,
    pub confusion_rate: f64,
    pub zipf_exponent: f64,
    pub seed: u64,
}

/// Scale `counts` to sum to about `total`, keeping zero classes at zero and
/// every non-zero class at one or more.
pub fn scale_counts(counts: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = counts.iter().sum();
    if sum == 0 {
        return alloc::vec![0; counts.len()];
    }
    counts
        .iter()
        .map(|&c| if c == 0 { 0 } else { libm::round(c as f64 * total as f64 / sum as f64).max(1.0) as usize })
        .collect()
}

impl TopicCorpusSpec {
    /// 10-class corpus with the Kerala class imbalance: about 5,000 train,
    /// 750 validation and 1,500 test examples.
    pub fn kerala_like(seed: u64) -> Self {
        Self {
            name: String::from("synthetic-kerala"),
            train_counts: scale_counts(&KERALA_TRAIN_COUNTS, 5000),
            val_counts: scale_counts(&KERALA_TRAIN_COUNTS, 750),
            test_counts: scale_counts(&KERALA_TRAIN_COUNTS, 1500),
            topic_vocab: 400,
            background_vocab: 2000,
            min_tokens: 10,
            max_tokens: 18,
            topical_rate: 0.33,
            confusion_rate: 0.12,
            zipf_exponent: 0.9,
            seed,
        }
    }

    pub fn validate(&self, schema: &LabelSchema) -> Result<()> {
        let bad = |what: &str| Err(CoreError::InvalidConfig(format!("topic corpus: {what}")));
        let n = schema.len();
        if self.train_counts.len() != n || self.val_counts.len() != n || self.test_counts.len() != n {
            return bad("class count vectors must match the schema");
        }
        if self.train_counts.iter().filter(|&&c| c > 0).count() < 2 {
            return bad("need at least two classes with training examples");
        }
        if self.topic_vocab == 0 || self.background_vocab == 0 {
            return bad("vocabularies must be non-empty");
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return bad("token range must satisfy 1 <= min <= max");
        }
        if !(0.0..=1.0).contains(&self.topical_rate)
            || !(0.0..=1.0).contains(&self.confusion_rate)
            || self.topical_rate + self.confusion_rate > 1.0
        {
            return bad("topical and confusion rates must be probabilities with sum <= 1");
        }
        if !(self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be non-negative");
        }
        Ok(())
    }
}

struct TextSampler<'a> {
    spec: &'a TopicCorpusSpec,
    topic: Zipf<f64>,
    background: Zipf<f64>,
    active: Vec<usize>,
}

impl TextSampler<'_> {
    fn text(&self, class: usize, rng: &mut ChaCha8Rng) -> String {
        let len = rng.random_range(self.spec.min_tokens..=self.spec.max_tokens);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.random();
            let word = if u < self.spec.topical_rate {
                format!("t{class}w{}", self.topic.sample(rng) as usize)
            } else if u < self.spec.topical_rate + self.spec.confusion_rate {
                let others: Vec<usize> = self.active.iter().copied().filter(|&c| c != class).collect();
                let other = *others.choose(rng).unwrap_or(&class);
                format!("t{other}w{}", self.topic.sample(rng) as usize)
            } else {
                format!("bg{}", self.background.sample(rng) as usize)
            };
            words.push(word);
        }
        words.join(" ")
    }

    fn split(&self, prefix: &str, counts: &[usize], rng: &mut ChaCha8Rng) -> Vec<Example> {
        let mut examples: Vec<Example> = Vec::with_capacity(counts.iter().sum());
        for (class, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                examples.push(Example { id: String::new(), text: self.text(class, rng), gold_label: Some(class) });
            }
        }
        examples.shuffle(rng);
        for (i, ex) in examples.iter_mut().enumerate() {
            ex.id = format!("{prefix}-{i:05}");
        }
        examples
    }
}

pub fn generate_topic_corpus(spec: &TopicCorpusSpec, schema: &LabelSchema) -> Result<EventCorpus> {
    spec.validate(schema)?;
    let zipf = |n: usize| {
        Zipf::new(n as f64, spec.zipf_exponent).map_err(|_| CoreError::InvalidConfig("invalid Zipf parameters".into()))
    };
    let sampler = TextSampler {
        spec,
        topic: zipf(spec.topic_vocab)?,
        background: zipf(spec.background_vocab)?,
        active: (0..schema.len()).filter(|&c| spec.train_counts[c] > 0).collect(),
    };
    let mut rng = seed::rng(spec.seed);
    let train = sampler.split("tr", &spec.train_counts, &mut rng);
    let val = sampler.split("va", &spec.val_counts, &mut rng);
    let test = sampler.split("te", &spec.test_counts, &mut rng);
    EventCorpus::new(spec.name.clone(), schema.clone(), train, val, test)
}

/// Kerala-profile corpus under the HumAID schema.
pub fn kerala_like_corpus(seed: u64) -> Result<EventCorpus> {
    generate_topic_corpus(&TopicCorpusSpec::kerala_like(seed), &humaid_schema())
}

/// Sparse points where each class owns a disjoint block of signature features,
/// so the classes are linearly separable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub class_count: usize,
    pub dim: usize,
    /// Signature features owned by each class.
    pub signature_size: usize,
    /// Signature features switched on per example.
    pub active_signature: usize,
    /// Shared noise features switched on per example.
    pub noise_features: usize,
    pub seed: u64,
}

impl ClusterSpec {
    pub fn new(class_count: usize, seed: u64) -> Self {
        Self { class_count, dim: 1024, signature_size: 20, active_signature: 4, noise_features: 4, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(CoreError::TooFewClasses);
        }
        let reserved = self.class_count * self.signature_size;
        if self.active_signature == 0 || self.active_signature > self.signature_size {
            return Err(CoreError::InvalidConfig("active_signature must lie in 1..=signature_size".into()));
        }
        if reserved >= self.dim || self.noise_features > self.dim - reserved {
            return Err(CoreError::InvalidConfig("dim too small for the signature blocks and noise".into()));
        }
        Ok(())
    }

    fn point(&self, class: usize, rng: &mut ChaCha8Rng) -> FeatureVector {
        let base = class * self.signature_size;
        let reserved = self.class_count * self.signature_size;
        let mut idx: Vec<u32> = rand::seq::index::sample(rng, self.signature_size, self.active_signature)
            .into_iter()
            .map(|i| (base + i) as u32)
            .collect();
        idx.extend(
            rand::seq::index::sample(rng, self.dim - reserved, self.noise_features)
                .into_iter()
                .map(|i| (reserved + i) as u32),
        );
        let w = 1.0 / libm::sqrt(idx.len() as f64);
        FeatureVector::from_pairs(self.dim, idx.into_iter().map(|i| (i, w))).expect("distinct indices in range")
    }

    /// `per_class` points for every class, interleaved by class.
    pub fn points(&self, per_class: usize) -> Result<Vec<(FeatureVector, usize)>> {
        self.validate()?;
        let mut rng = seed::rng(self.seed);
        let mut out = Vec::with_capacity(per_class * self.class_count);
        for _ in 0..per_class {
            for class in 0..self.class_count {
                out.push((self.point(class, &mut rng), class));
            }
        }
        Ok(out)
    }

    /// An [`SslTask`] with `labeled` gold-labeled points per class plus the
    /// given numbers of unlabeled, validation and test points per class.
    pub fn task(&self, labeled: usize, unlabeled: usize, val: usize, test: usize) -> Result<SslTask> {
        let points = self.points(labeled + unlabeled + val + test)?;
        let k = self.class_count;
        let mut task = SslTask {
            class_count: k,
            input_dim: self.dim,
            active_classes: (0..k).collect(),
            labeled: Vec::new(),
            unlabeled: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for (i, (features, label)) in points.into_iter().enumerate() {
            let row = i / k;
            let id = format!("p{i:05}");
            if row < labeled {
                task.labeled.push(LabeledPoint { id, features, label });
            } else if row < labeled + unlabeled {
                task.unlabeled.push(UnlabeledPoint { id, features, gold: Some(label) });
            } else if row < labeled + unlabeled + val {
                task.val.push(LabeledPoint { id, features, label });
            } else {
                task.test.push(LabeledPoint { id, features, label });
            }
        }
        task.validate()?;
        Ok(task)
    }
}
