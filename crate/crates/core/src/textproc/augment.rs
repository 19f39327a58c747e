//! Pronunciation-inpainting augmentation: replace dictionary words with
//! phoneme sequences so downstream models see mixed word/phoneme input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dict::PronDict;
use crate::error::{Error, Result};

/// Which words are eligible for replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplacementScope {
    /// Only words with exactly one pronunciation.
    RepMono,
    /// Every dictionary word; polyphones use their first listed pronunciation.
    RepAll,
}

/// What a replacement looks like in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhonemeMode {
    /// The phoneme run substitutes for the word: `{HH AH0 L OW1}`.
    MixPhn,
    /// The word is kept and the phoneme run follows it: `⟦HH AH0 L OW1⟧`.
    CatPhn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub scope: ReplacementScope,
    pub mode: PhonemeMode,
    pub replace_prob: f64,
    /// CatPhn only: probability of swapping the kept word for a different
    /// dictionary word while the phonemes stay correct.
    #[serde(default)]
    pub corrupt_prob: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("replace_prob", self.replace_prob), ("corrupt_prob", self.corrupt_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Marked phoneme run substituting for a word.
pub fn mark_mix(phonemes: &[String]) -> String {
    format!("{{{}}}", phonemes.join(" "))
}

/// Marked phoneme run concatenated after a kept word.
pub fn mark_cat(phonemes: &[String]) -> String {
    format!("⟦{}⟧", phonemes.join(" "))
}

fn eligible_pronunciation<'d>(
    word: &str,
    dict: &'d PronDict,
    scope: ReplacementScope,
) -> Option<&'d [String]> {
    let prons = dict.get(word)?;
    match scope {
        ReplacementScope::RepMono if prons.len() != 1 => None,
        _ => prons.first().map(Vec::as_slice),
    }
}

/// Replace eligible words with probability `policy.replace_prob`.
///
/// Randomness is consumed only for eligible words (one uniform draw each,
/// plus draws for the optional CatPhn corruption), so the output is a pure
/// function of the inputs and the generator state.
pub fn augment_pronunciation<R: Rng>(
    words: &[String],
    dict: &PronDict,
    policy: &AugmentPolicy,
    rng: &mut R,
) -> Result<Vec<String>> {
    policy.validate()?;
    let corruption_pool: Vec<&str> = if policy.corrupt_prob > 0.0 {
        dict.words().collect()
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(words.len());
    for word in words {
        let Some(pron) = eligible_pronunciation(word, dict, policy.scope) else {
            out.push(word.clone());
            continue;
        };
        if rng.random::<f64>() >= policy.replace_prob {
            out.push(word.clone());
            continue;
        }
        match policy.mode {
            PhonemeMode::MixPhn => out.push(mark_mix(pron)),
            PhonemeMode::CatPhn => {
                let mut kept = word.clone();
                if policy.corrupt_prob > 0.0
                    && corruption_pool.len() > 1
                    && rng.random::<f64>() < policy.corrupt_prob
                {
                    // pick a different-sounding word; phonemes stay correct
                    let upper = word.to_uppercase();
                    loop {
                        let candidate = corruption_pool[rng.random_range(0..corruption_pool.len())];
                        if candidate != upper {
                            kept = candidate.to_owned();
                            break;
                        }
                    }
                }
                out.push(kept);
                out.push(mark_cat(pron));
            }
        }
    }
    Ok(out)
}

/// Convenience wrapper over whitespace-tokenized sentences.
pub fn augment_sentence<R: Rng>(
    sentence: &str,
    dict: &PronDict,
    policy: &AugmentPolicy,
    rng: &mut R,
) -> Result<String> {
    let words: Vec<String> = sentence.split_whitespace().map(str::to_owned).collect();
    Ok(augment_pronunciation(&words, dict, policy, rng)?.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::dict::parse_pron_dict;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture_dict() -> PronDict {
        let src = "HELLO HH AH0 L OW1\nREAD R EH1 D\nREAD(2) R IY1 D\n";
        parse_pron_dict(src.as_bytes()).unwrap().0
    }

    fn policy(scope: ReplacementScope, mode: PhonemeMode, p: f64) -> AugmentPolicy {
        AugmentPolicy {
            scope,
            mode,
            replace_prob: p,
            corrupt_prob: 0.0,
            seed: 42,
        }
    }

    #[test]
    fn zero_probability_keeps_sentence() {
        let dict = fixture_dict();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let out = augment_sentence(
            "HELLO READ",
            &dict,
            &policy(ReplacementScope::RepAll, PhonemeMode::MixPhn, 0.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, "HELLO READ");
    }

    #[test]
    fn rep_mono_mix_fixture() {
        let dict = fixture_dict();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let out = augment_sentence(
            "HELLO READ",
            &dict,
            &policy(ReplacementScope::RepMono, PhonemeMode::MixPhn, 1.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, "{HH AH0 L OW1} READ");
    }

    #[test]
    fn rep_all_mix_uses_first_pronunciation() {
        let dict = fixture_dict();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let out = augment_sentence(
            "HELLO READ",
            &dict,
            &policy(ReplacementScope::RepAll, PhonemeMode::MixPhn, 1.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, "{HH AH0 L OW1} {R EH1 D}");
    }

    #[test]
    fn cat_phn_keeps_word_and_phonemes() {
        let dict = fixture_dict();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let out = augment_sentence(
            "HELLO",
            &dict,
            &policy(ReplacementScope::RepMono, PhonemeMode::CatPhn, 1.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, "HELLO ⟦HH AH0 L OW1⟧");
    }

    #[test]
    fn same_seed_is_deterministic() {
        let dict = fixture_dict();
        let pol = policy(ReplacementScope::RepAll, PhonemeMode::MixPhn, 0.5);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            augment_sentence("HELLO READ HELLO READ HELLO", &dict, &pol, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn replacement_fraction_converges_to_probability() {
        let dict = fixture_dict();
        let pol = policy(ReplacementScope::RepMono, PhonemeMode::MixPhn, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000u32;
        let mut replaced = 0u32;
        for _ in 0..n {
            let out =
                augment_pronunciation(&["HELLO".to_owned()], &dict, &pol, &mut rng).unwrap();
            if out[0].starts_with('{') {
                replaced += 1;
            }
        }
        let p = 0.3f64;
        let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
        let freq = f64::from(replaced) / f64::from(n);
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq}");
    }

    #[test]
    fn corruption_swaps_word_but_not_phonemes() {
        let dict = fixture_dict();
        let pol = AugmentPolicy {
            scope: ReplacementScope::RepMono,
            mode: PhonemeMode::CatPhn,
            replace_prob: 1.0,
            corrupt_prob: 1.0,
            seed: 42,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let out = augment_pronunciation(&["HELLO".to_owned()], &dict, &pol, &mut rng).unwrap();
        assert_eq!(out.len(), 2);
        assert_ne!(out[0], "HELLO");
        assert_eq!(out[1], "⟦HH AH0 L OW1⟧");
    }

    #[test]
    fn invalid_probability_rejected() {
        let dict = fixture_dict();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut pol = policy(ReplacementScope::RepAll, PhonemeMode::MixPhn, 1.5);
        assert!(augment_sentence("HELLO", &dict, &pol, &mut rng).is_err());
        pol.replace_prob = -0.1;
        assert!(augment_sentence("HELLO", &dict, &pol, &mut rng).is_err());
    }
}
