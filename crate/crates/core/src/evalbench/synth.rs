//! Synthetic source trees with Zipf-distributed vocabulary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::history::BugReport;
use crate::preprocess::{porter, stoplist};

/// Path → file text.
pub type RepoState = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub docs: usize,
    /// Word pool size. Zipf draws leave the rarest words unused, so the
    /// realized vocabulary is somewhat smaller.
    pub vocab: usize,
    /// Token draws per document, uniform in this inclusive range.
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 2000,
            vocab: 24_000,
            min_tokens: 150,
            max_tokens: 600,
            zipf_exponent: 1.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Churn {
    /// Fraction of live documents rewritten per transition.
    pub modify: f64,
    /// Fraction added and fraction deleted per transition.
    pub add: f64,
    pub delete: f64,
}

impl Default for Churn {
    fn default() -> Self {
        Churn {
            modify: 0.01,
            add: 0.0,
            delete: 0.0,
        }
    }
}

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "m", "n", "p", "r", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "i", "o", "u"];

/// `n` distinct lowercase words that survive preprocessing unchanged: each
/// is its own stem, not a stopword, and a single identifier part.
pub fn vocabulary(n: usize) -> Vec<String> {
    let syllables: Vec<String> = ONSETS
        .iter()
        .flat_map(|c| VOWELS.iter().map(move |v| format!("{c}{v}")))
        .collect();
    let mut words = Vec::with_capacity(n);
    let mut len = 2;
    while words.len() < n {
        let total = syllables.len().pow(len as u32);
        for mut i in 0..total {
            let mut w = String::with_capacity(2 * len + 1);
            for _ in 0..len {
                w.push_str(&syllables[i % syllables.len()]);
                i /= syllables.len();
            }
            // A closing consonant keeps Porter's vowel-final rules away.
            w.push('x');
            if porter::stem(&w) == w && !stoplist::is_stopword(&w) {
                words.push(w);
                if words.len() == n {
                    break;
                }
            }
        }
        len += 1;
    }
    words
}

/// Generator of documents and reports over a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct Synth {
    config: SynthConfig,
    words: Vec<String>,
    zipf: Zipf<f64>,
    rng: ChaCha8Rng,
    next_file: usize,
}

impl Synth {
    pub fn new(config: SynthConfig) -> Self {
        let words = vocabulary(config.vocab.max(1));
        let zipf = Zipf::new(words.len() as f64, config.zipf_exponent).expect("valid Zipf parameters");
        // Rank order is decoupled from lexical order.
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut words = words;
        words.shuffle(&mut rng);
        Synth {
            config,
            words,
            zipf,
            rng,
            next_file: 0,
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    fn word(&mut self) -> &str {
        let rank = self.zipf.sample(&mut self.rng) as usize;
        &self.words[rank.clamp(1, self.words.len()) - 1]
    }

    /// Text of a Java-like file with a random token count.
    pub fn document(&mut self) -> String {
        let n = self.rng.random_range(self.config.min_tokens..=self.config.max_tokens.max(self.config.min_tokens));
        let mut text = String::from("class Synth {\n");
        for i in 0..n {
            let w = self.word().to_string();
            text.push_str(if i % 12 == 0 { "    " } else { " " });
            text.push_str(&w);
            if i % 12 == 11 {
                text.push_str(";\n");
            }
        }
        text.push_str("\n}\n");
        text
    }

    fn fresh_path(&mut self) -> String {
        let p = format!("src/m{:02}/File{:05}.java", self.next_file % 50, self.next_file);
        self.next_file += 1;
        p
    }

    pub fn repo(&mut self) -> RepoState {
        (0..self.config.docs)
            .map(|_| (self.fresh_path(), self.document()))
            .collect()
    }

    /// Next state after rewriting, adding and deleting the configured
    /// fractions of files. At least one file is rewritten when `modify > 0`.
    pub fn evolve(&mut self, state: &RepoState, churn: Churn) -> RepoState {
        let m = state.len();
        let count = |f: f64| {
            let n = (f * m as f64).round() as usize;
            if f > 0.0 { n.max(1) } else { 0 }
        };
        let paths: Vec<String> = state.keys().cloned().collect();
        let mut picked: Vec<&String> = paths
            .choose_multiple(&mut self.rng, (count(churn.modify) + count(churn.delete)).min(m))
            .collect();
        let deleted: Vec<String> = picked.split_off(picked.len().min(count(churn.modify))).into_iter().cloned().collect();
        let modified: Vec<String> = picked.into_iter().cloned().collect();

        let mut next = state.clone();
        for p in &deleted {
            next.remove(p);
        }
        for p in modified {
            let text = self.document();
            next.insert(p, text);
        }
        for _ in 0..count(churn.add) {
            let p = self.fresh_path();
            let text = self.document();
            next.insert(p, text);
        }
        next
    }

    /// Every file rewritten.
    pub fn rewrite_all(&mut self, state: &RepoState) -> RepoState {
        state.keys().map(|p| (p.clone(), self.document())).collect()
    }

    /// A report whose text samples the same term distribution.
    pub fn report(&mut self, id: &str, terms: usize) -> BugReport {
        let mut desc = String::new();
        for _ in 0..terms {
            let w = self.word().to_string();
            let _ = write!(desc, "{w} ");
        }
        let title = self.word().to_string();
        BugReport::new(id, title, desc.trim_end())
    }
}
