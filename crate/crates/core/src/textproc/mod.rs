//! Auxiliary text-corpus construction: pronunciation-inpainting augmentation
//! and instruction-prompt building.

mod augment;
mod dict;
mod instruct;

pub use augment::{
    augment_pronunciation, augment_sentence, mark_cat, mark_mix, AugmentPolicy, PhonemeMode,
    ReplacementScope,
};
pub use dict::{parse_pron_dict, PronDict};
pub use instruct::{
    build_instructed_text, build_polyglot_prompt, build_polyglot_prompt_zh,
    split_instructed_text, validate_fine_grained_tags, END_OF_PROMPT, VOCAL_BURSTS,
};
