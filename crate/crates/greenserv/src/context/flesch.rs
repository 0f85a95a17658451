//! Flesch Reading Ease scoring with fixed, deterministic counting rules.
//!
//! Counting rules:
//! - word: maximal alphanumeric run
//! - sentence boundary: '.', '!' or '?' followed by whitespace or end of text;
//!   a text with words but no terminator counts as one sentence
//! - syllables: maximal runs of a/e/i/o/u/y per word, minus a silent trailing
//!   'e', minimum 1 per word

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleschBreakdown {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    /// Unclamped formula value.
    pub raw: f64,
    /// Raw value clamped to [0, 100].
    pub score: f64,
}

pub fn count_words(text: &str) -> usize {
    crate::context::embedding::tokenize(text).len()
}

pub fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    for (i, &ch) in chars.iter().enumerate() {
        if ch == '.' || ch == '!' || ch == '?' {
            let at_end = chars[i + 1..].iter().all(|c| !c.is_alphanumeric());
            let followed_by_ws = chars.get(i + 1).map_or(true, |c| c.is_whitespace());
            if at_end || followed_by_ws {
                count += 1;
                if at_end {
                    break;
                }
            }
        }
    }
    count.max(1)
}

pub fn count_syllables_word(word: &str) -> usize {
    let lower = word.to_lowercase();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut in_group = false;
    for c in lower.chars() {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
                in_group = true;
            }
        } else {
            in_group = false;
        }
    }
    // silent trailing 'e': subtract when it terminates its own vowel group
    if groups > 1 && lower.ends_with('e') {
        let chars: Vec<char> = lower.chars().collect();
        let n = chars.len();
        if n >= 2 && !is_vowel(chars[n - 2]) {
            groups -= 1;
        }
    }
    groups.max(1)
}

pub fn count_syllables(text: &str) -> usize {
    crate::context::embedding::tokenize(text)
        .iter()
        .map(|w| count_syllables_word(w))
        .sum()
}

/// Flesch Reading Ease: 206.835 - 1.015*(words/sentences) - 84.6*(syllables/words),
/// clamped to [0, 100]. The unclamped value is available in the breakdown.
pub fn flesch_score(text: &str) -> Result<FleschBreakdown> {
    let words = count_words(text);
    if words == 0 {
        return Err(Error::invalid("no countable words"));
    }
    let sentences = count_sentences(text);
    let syllables = count_syllables(text);
    let raw = 206.835
        - 1.015 * (words as f64 / sentences as f64)
        - 84.6 * (syllables as f64 / words as f64);
    Ok(FleschBreakdown {
        words,
        sentences,
        syllables,
        raw,
        score: raw.clamp(0.0, 100.0),
    })
}

/// Equal-width binning of a clamped score over [lo, hi]; the upper boundary
/// maps into the last bin.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ComplexityBinner {
    pub n_bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl ComplexityBinner {
    pub fn new(n_bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if n_bins == 0 || !(lo < hi) {
            return Err(Error::invalid("binner needs n_bins >= 1 and lo < hi"));
        }
        Ok(ComplexityBinner { n_bins, lo, hi })
    }

    pub fn bin(&self, score: f64) -> usize {
        let width = (self.hi - self.lo) / self.n_bins as f64;
        let clamped = score.clamp(self.lo, self.hi);
        let idx = ((clamped - self.lo) / width).floor() as usize;
        idx.min(self.n_bins - 1)
    }
}

impl Default for ComplexityBinner {
    fn default() -> Self {
        ComplexityBinner {
            n_bins: 3,
            lo: 0.0,
            hi: 100.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_cat_sat_clamps_to_100() {
        // words=3, sentences=1, syllables=3
        let b = flesch_score("The cat sat.").unwrap();
        assert_eq!(b.words, 3);
        assert_eq!(b.sentences, 1);
        assert_eq!(b.syllables, 3);
        assert!((b.raw - 119.19).abs() < 1e-9);
        assert_eq!(b.score, 100.0);
    }

    #[test]
    fn engineered_ratios_hand_value() {
        // 20 words per sentence, 2 syllables per word:
        // 206.835 - 1.015*20 - 84.6*2 = 17.335
        let word = "window"; // 2 syllables
        assert_eq!(count_syllables_word(word), 2);
        let sentence = vec![word; 20].join(" ") + ".";
        let b = flesch_score(&sentence).unwrap();
        assert_eq!(b.words, 20);
        assert_eq!(b.sentences, 1);
        assert_eq!(b.syllables, 40);
        assert!((b.raw - 17.335).abs() < 1e-9);
    }

    #[test]
    fn whitespace_only_is_invalid() {
        assert!(flesch_score("   \n\t ").is_err());
    }

    #[test]
    fn silent_trailing_e() {
        assert_eq!(count_syllables_word("make"), 1);
        assert_eq!(count_syllables_word("the"), 1); // min 1
        assert_eq!(count_syllables_word("tee"), 1); // e inside final vowel group stays
        assert_eq!(count_syllables_word("readable"), 2); // trailing-e rule, no -le exception
        assert_eq!(count_syllables_word("window"), 2);
    }

    #[test]
    fn sentence_terminators() {
        assert_eq!(count_sentences("One. Two! Three?"), 3);
        assert_eq!(count_sentences("version 3.14 is out"), 1); // '.' inside number
        assert_eq!(count_sentences("no terminator"), 1);
    }

    #[test]
    fn score_always_in_range() {
        let hard = vec!["incomprehensibility"; 60].join(" ");
        let b = flesch_score(&hard).unwrap();
        assert!(b.raw < 0.0);
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn bin_boundaries() {
        let binner = ComplexityBinner::default();
        assert_eq!(binner.bin(45.0), 1);
        assert_eq!(binner.bin(100.0), 2);
        assert_eq!(binner.bin(0.0), 0);
    }
}
