//! Tagged corpora sampled from a small hidden Markov model.
//!
//! Each hidden state owns a block of the vocabulary whose words share a
//! state-specific ending, emitted with Zipf-like frequencies. Surfaces are
//! then perturbed the way social media text is (capitalization, stretched
//! vowels), so many test surfaces are rare or unseen in training while their
//! spelling still carries the state.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Platform, Sentence, TagCoverage, TagsetKind, Token};

const TAGS: [&str; 5] = ["N_NN", "V_VM", "JJ", "RB", "PSP"];
const ENDINGS: [&str; 5] = ["an", "ega", "ish", "li", "ko"];
const ONSETS: [&str; 14] = ["b", "d", "g", "h", "j", "k", "m", "p", "r", "s", "t", "v", "ch", "bh"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

#[derive(Debug, Clone, PartialEq)]
pub struct HmmConfig {
    /// At most five states are available.
    pub states: usize,
    pub vocab: usize,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that an emitted surface is perturbed.
    pub noise: f64,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig {
            states: 5,
            vocab: 200,
            train_sentences: 2000,
            test_sentences: 500,
            min_len: 5,
            max_len: 15,
            noise: 0.3,
            zipf_exponent: 1.0,
            seed: 2016,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: Corpus,
    pub test: Corpus,
    /// Word types per state, in frequency order.
    pub lexicon: Vec<Vec<String>>,
}

struct Hmm {
    start: WeightedIndex<f64>,
    transitions: Vec<WeightedIndex<f64>>,
    emissions: Vec<WeightedIndex<f64>>,
    words: Vec<Vec<String>>,
}

fn make_words(rng: &mut ChaCha8Rng, states: usize, vocab: usize) -> Vec<Vec<String>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut words = vec![Vec::new(); states];
    for i in 0..vocab {
        let state = i % states;
        loop {
            let syllables = rng.gen_range(1..=2);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
                w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
            }
            w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
            w.push_str(ENDINGS[state]);
            if seen.insert(w.clone()) {
                words[state].push(w);
                break;
            }
        }
    }
    words
}

impl Hmm {
    fn new(config: &HmmConfig, rng: &mut ChaCha8Rng) -> Self {
        let n = config.states;
        let words = make_words(rng, n, config.vocab);
        let transitions = (0..n)
            .map(|_| {
                // one strongly preferred successor per state
                let favorite = rng.gen_range(0..n);
                let row: Vec<f64> = (0..n)
                    .map(|j| rng.gen_range(0.05..0.3) + if j == favorite { 1.5 } else { 0.0 })
                    .collect();
                WeightedIndex::new(row).expect("positive weights")
            })
            .collect();
        let emissions = words
            .iter()
            .map(|ws| {
                let zipf = (1..=ws.len()).map(|r| (r as f64).powf(-config.zipf_exponent));
                WeightedIndex::new(zipf).expect("positive weights")
            })
            .collect();
        Hmm {
            start: WeightedIndex::new(vec![1.0; n]).expect("positive weights"),
            transitions,
            emissions,
            words,
        }
    }
}

/// Changes case or stretches one vowel before the last `keep` bytes.
fn perturb(word: &str, keep: usize, rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => word.to_uppercase(),
        1 => {
            let mut c = word.chars();
            c.next()
                .map(|f| f.to_uppercase().chain(c).collect())
                .unwrap_or_default()
        }
        _ => {
            let vowels: Vec<usize> = word
                .char_indices()
                .filter(|&(i, c)| i + keep < word.len() && "aeiou".contains(c))
                .map(|(i, _)| i)
                .collect();
            let i = vowels[rng.gen_range(0..vowels.len())];
            let v = &word[i..i + 1];
            let extra = v.repeat(rng.gen_range(1..=3));
            format!("{}{}{}", &word[..=i], extra, &word[i + 1..])
        }
    }
}

fn sample_corpus(hmm: &Hmm, config: &HmmConfig, count: usize, first_id: usize, rng: &mut ChaCha8Rng) -> Corpus {
    let sentences = (0..count)
        .map(|i| {
            let len = rng.gen_range(config.min_len..=config.max_len);
            let mut state = hmm.start.sample(rng);
            let mut tokens = Vec::with_capacity(len);
            for t in 0..len {
                if t > 0 {
                    state = hmm.transitions[state].sample(rng);
                }
                let word = &hmm.words[state][hmm.emissions[state].sample(rng)];
                let surface = if rng.gen_bool(config.noise) {
                    perturb(word, ENDINGS[state].len(), rng)
                } else {
                    word.clone()
                };
                tokens.push(Token::new(surface).with_tag(TagsetKind::Fine, TAGS[state]));
            }
            let mut s = Sentence::new(first_id + i, tokens);
            s.platform = Platform::Unknown;
            s
        })
        .collect();
    Corpus::new(sentences, TagCoverage::Fine)
}

/// Samples train and test corpora; the same config always gives the same data.
pub fn generate(config: &HmmConfig) -> SyntheticData {
    assert!(
        (1..=TAGS.len()).contains(&config.states),
        "between 1 and {} states",
        TAGS.len()
    );
    assert!(config.vocab >= config.states && config.min_len >= 1 && config.min_len <= config.max_len);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let hmm = Hmm::new(config, &mut rng);
    let train = sample_corpus(&hmm, config, config.train_sentences, 0, &mut rng);
    let test = sample_corpus(&hmm, config, config.test_sentences, config.train_sentences, &mut rng);
    SyntheticData {
        train,
        test,
        lexicon: hmm.words,
    }
}
