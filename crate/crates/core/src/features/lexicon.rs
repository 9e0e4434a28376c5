use std::collections::BTreeMap;

use super::FeatureError;
use crate::corpus::{Corpus, TagsetKind};

/// Word/tag co-occurrence counts from training data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    totals: BTreeMap<String, u64>,
    /// Tags in first-seen order.
    tag_inventory: Vec<String>,
}

impl Lexicon {
    /// Counts every `(surface, tag)` pair in order.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut lex = Lexicon::default();
        for (word, tag) in pairs {
            lex.add(word, tag);
        }
        lex
    }

    fn add(&mut self, word: &str, tag: &str) {
        if !self.tag_inventory.iter().any(|t| t == tag) {
            self.tag_inventory.push(tag.to_string());
        }
        *self
            .counts
            .entry(word.to_string())
            .or_default()
            .entry(tag.to_string())
            .or_default() += 1;
        *self.totals.entry(word.to_string()).or_default() += 1;
    }

    /// Counts over every token of `train`.
    pub fn build(train: &Corpus, kind: TagsetKind) -> Result<Self, FeatureError> {
        if train.token_count() == 0 {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut pairs = Vec::with_capacity(train.token_count());
        for (si, sentence) in train.sentences.iter().enumerate() {
            for (ti, token) in sentence.tokens.iter().enumerate() {
                let tag = token.tag(kind).ok_or(FeatureError::MissingGold {
                    sentence: si,
                    token: ti,
                    kind,
                })?;
                pairs.push((token.surface.as_str(), tag));
            }
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn tag_inventory(&self) -> &[String] {
        &self.tag_inventory
    }

    pub fn counts(&self, word: &str) -> Option<&BTreeMap<String, u64>> {
        self.counts.get(word)
    }

    pub fn count(&self, word: &str, tag: &str) -> u64 {
        self.counts
            .get(word)
            .and_then(|m| m.get(tag))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self, word: &str) -> u64 {
        self.totals.get(word).copied().unwrap_or(0)
    }

    pub fn word_count(&self) -> usize {
        self.counts.len()
    }

    /// `P(tag | word)` from relative frequencies, 0 for unseen words.
    pub fn probability(&self, word: &str, tag: &str) -> f64 {
        match self.total(word) {
            0 => 0.0,
            total => self.count(word, tag) as f64 / total as f64,
        }
    }

    /// One bit per inventory tag, set for the `k` most probable tags of
    /// `word`. Every tag tied with the k-th probability is also set. Unseen
    /// words get all zeros.
    pub fn top_k_bits(&self, word: &str, k: usize) -> Vec<bool> {
        let mut bits = vec![false; self.tag_inventory.len()];
        let Some(tags) = self.counts.get(word) else {
            return bits;
        };
        if k == 0 {
            return bits;
        }
        // counts share the denominator, so ranking counts ranks probabilities
        let mut ranked: Vec<u64> = tags.values().copied().collect();
        ranked.sort_unstable_by(|a, b| b.cmp(a));
        let threshold = ranked[(k - 1).min(ranked.len() - 1)];
        for (bit, tag) in bits.iter_mut().zip(&self.tag_inventory) {
            *bit = tags.get(tag).is_some_and(|&c| c >= threshold);
        }
        bits
    }

    fn check_invariants(&self) -> bool {
        self.counts
            .iter()
            .all(|(w, m)| m.values().sum::<u64>() == self.total(w))
    }

    /// Tab-separated `word tag count` lines in sorted order, preceded by an
    /// `#inventory` line listing tags in first-seen order.
    pub fn to_text(&self) -> String {
        let mut out = String::from("#inventory");
        for t in &self.tag_inventory {
            out.push('\t');
            out.push_str(t);
        }
        out.push('\n');
        for (word, tags) in &self.counts {
            for (tag, count) in tags {
                out.push_str(&format!("{word}\t{tag}\t{count}\n"));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FeatureError> {
        let bad = |line: usize, message: &str| FeatureError::LexiconFormat {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty lexicon file"))?;
        let mut head = header.split('\t');
        if head.next() != Some("#inventory") {
            return Err(bad(1, "missing #inventory header"));
        }
        let mut lex = Lexicon {
            tag_inventory: head.map(str::to_string).collect(),
            ..Default::default()
        };
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [word, tag, count] = fields[..] else {
                return Err(bad(i + 1, "expected word<TAB>tag<TAB>count"));
            };
            let count: u64 = count.parse().map_err(|_| bad(i + 1, "count is not an integer"))?;
            if !lex.tag_inventory.iter().any(|t| t == tag) {
                return Err(bad(i + 1, "tag missing from inventory"));
            }
            lex.counts
                .entry(word.to_string())
                .or_default()
                .insert(tag.to_string(), count);
            *lex.totals.entry(word.to_string()).or_default() += count;
        }
        debug_assert!(lex.check_invariants());
        Ok(lex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, TagCoverage, Token};

    fn baby() -> Lexicon {
        Lexicon::from_pairs([("baby", "N"), ("baby", "N"), ("baby", "V")])
    }

    #[test]
    fn counts_occurrences() {
        let lex = baby();
        assert_eq!(lex.count("baby", "N"), 2);
        assert_eq!(lex.count("baby", "V"), 1);
        assert_eq!(lex.total("baby"), 3);
        assert_eq!(lex.tag_inventory(), ["N", "V"]);
        assert!(lex.counts("kid").is_none());
        assert!(lex.check_invariants());
    }

    #[test]
    fn top_k() {
        let lex = baby();
        assert_eq!(lex.top_k_bits("baby", 1), vec![true, false]);
        assert_eq!(lex.top_k_bits("baby", 2), vec![true, true]);
        assert_eq!(lex.top_k_bits("kid", 1), vec![false, false]);
        assert_eq!(lex.top_k_bits("kid", 2), vec![false, false]);
    }

    #[test]
    fn ties_set_every_tied_bit() {
        let lex = Lexicon::from_pairs([("a", "X"), ("a", "Y"), ("a", "Z"), ("a", "Z"), ("b", "Y")]);
        assert_eq!(lex.top_k_bits("a", 1), vec![false, false, true]);
        assert_eq!(lex.top_k_bits("a", 2), vec![true, true, true]);
        assert_eq!(lex.top_k_bits("b", 2), vec![false, true, false]);
    }

    #[test]
    fn build_from_corpus() {
        let tokens = vec![
            Token::new("baby").with_tag(TagsetKind::Fine, "N_NN"),
            Token::new("so").with_tag(TagsetKind::Fine, "V_VM"),
        ];
        let corpus = Corpus::new(vec![Sentence::new(0, tokens)], TagCoverage::Fine);
        let lex = Lexicon::build(&corpus, TagsetKind::Fine).unwrap();
        assert_eq!(lex.tag_inventory(), ["N_NN", "V_VM"]);
        assert!(matches!(
            Lexicon::build(&corpus, TagsetKind::Coarse),
            Err(FeatureError::MissingGold { .. })
        ));
        let empty = Corpus::new(vec![], TagCoverage::Fine);
        assert_eq!(Lexicon::build(&empty, TagsetKind::Fine), Err(FeatureError::EmptyCorpus));
    }

    #[test]
    fn text_round_trip() {
        let lex = Lexicon::from_pairs([("zz", "V"), ("baby", "N"), ("baby", "V")]);
        let text = lex.to_text();
        assert!(text.starts_with("#inventory\tV\tN\n"));
        assert_eq!(Lexicon::from_text(&text).unwrap(), lex);
        assert!(Lexicon::from_text("word\tN\t1\n").is_err());
    }
}
