//! Instruction-prompt construction for instructed generation and for the
//! multilingual speaker fine-tuning corpus.

use crate::error::{Error, Result};

/// Separator between a natural-language instruction and the synthesis text.
pub const END_OF_PROMPT: &str = "<|endofprompt|>";

/// Vocal-burst markers allowed inside instructed body text.
pub const VOCAL_BURSTS: [&str; 2] = ["laughter", "breath"];

/// Serialize `instruction<|endofprompt|>body`, validating the fine-grained
/// tags in the body (`[laughter]`, `[breath]`, balanced `<strong>…</strong>`).
pub fn build_instructed_text(instruction: &str, body: &str) -> Result<String> {
    if instruction.is_empty() {
        return Err(Error::InvalidInput("instruction must be non-empty".into()));
    }
    validate_fine_grained_tags(body)?;
    Ok(format!("{instruction}{END_OF_PROMPT}{body}"))
}

/// Split a serialized instructed text back into `(instruction, body)`.
pub fn split_instructed_text(text: &str) -> Option<(&str, &str)> {
    text.find(END_OF_PROMPT)
        .map(|idx| (&text[..idx], &text[idx + END_OF_PROMPT.len()..]))
}

/// Check `<strong>` balance and that bracket markers come from the known
/// vocal-burst set.
pub fn validate_fine_grained_tags(body: &str) -> Result<()> {
    let mut open = 0usize;
    let mut rest = body;
    while let Some(idx) = rest.find('<') {
        rest = &rest[idx..];
        if let Some(stripped) = rest.strip_prefix("<strong>") {
            if open > 0 {
                return Err(Error::InvalidTag("nested <strong>".into()));
            }
            open += 1;
            rest = stripped;
        } else if let Some(stripped) = rest.strip_prefix("</strong>") {
            if open == 0 {
                return Err(Error::InvalidTag("</strong> without opener".into()));
            }
            open -= 1;
            rest = stripped;
        } else {
            rest = &rest[1..];
        }
    }
    if open != 0 {
        return Err(Error::InvalidTag("unclosed <strong>".into()));
    }

    let mut rest = body;
    while let Some(start) = rest.find('[') {
        let after = &rest[start + 1..];
        let Some(end) = after.find(']') else {
            return Err(Error::InvalidTag("unterminated [ tag".into()));
        };
        let name = &after[..end];
        if !VOCAL_BURSTS.contains(&name) {
            return Err(Error::InvalidTag(format!("unknown vocal burst [{name}]")));
        }
        rest = &after[end + 1..];
    }
    Ok(())
}

const LANGUAGES: [(&str, &str, &str, &str); 9] = [
    // tag, english name, chinese name, alias
    ("zh", "Chinese", "中文", "mandarin"),
    ("en", "English", "英语", "english"),
    ("ja", "Japanese", "日语", "japanese"),
    ("ko", "Korean", "韩语", "korean"),
    ("de", "German", "德语", "german"),
    ("fr", "French", "法语", "french"),
    ("ru", "Russian", "俄语", "russian"),
    ("it", "Italian", "意大利语", "italian"),
    ("es", "Spanish", "西班牙语", "spanish"),
];

fn language_entry(language: &str) -> Result<&'static (&'static str, &'static str, &'static str, &'static str)> {
    let lower = language.to_lowercase();
    LANGUAGES
        .iter()
        .find(|(tag, name, zh, alias)| {
            lower == *tag || lower == name.to_lowercase() || language == *zh || lower == *alias
        })
        .ok_or_else(|| Error::UnknownLanguage(language.to_owned()))
}

/// `You are Speaker {speaker}. Please speak {language}.`
pub fn build_polyglot_prompt(speaker: &str, language: &str) -> Result<String> {
    if speaker.is_empty() || language.is_empty() {
        return Err(Error::InvalidInput(
            "speaker and language must be non-empty".into(),
        ));
    }
    let (_, name, _, _) = language_entry(language)?;
    Ok(format!("You are Speaker {speaker}. Please speak {name}."))
}

/// Chinese-template variant: `你是说话人{speaker}。请讲{language}。`
pub fn build_polyglot_prompt_zh(speaker: &str, language: &str) -> Result<String> {
    if speaker.is_empty() || language.is_empty() {
        return Err(Error::InvalidInput(
            "speaker and language must be non-empty".into(),
        ));
    }
    let (_, _, zh_name, _) = language_entry(language)?;
    Ok(format!("你是说话人{speaker}。请讲{zh_name}。"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_serialized_form() {
        let s = build_instructed_text("Please speak happily.", "Hi").unwrap();
        assert_eq!(s, "Please speak happily.<|endofprompt|>Hi");
    }

    #[test]
    fn accepts_emphasis_and_bursts() {
        assert!(build_instructed_text("x", "good <strong>morning</strong>").is_ok());
        assert!(build_instructed_text("x", "so funny [laughter] right [breath]").is_ok());
    }

    #[test]
    fn rejects_unbalanced_strong() {
        assert!(build_instructed_text("x", "good <strong>morning").is_err());
        assert!(build_instructed_text("x", "good morning</strong>").is_err());
        assert!(build_instructed_text("x", "<strong>a<strong>b</strong></strong>").is_err());
    }

    #[test]
    fn rejects_unknown_bursts() {
        assert!(build_instructed_text("x", "[cough]").is_err());
        assert!(build_instructed_text("x", "[laughter").is_err());
    }

    #[test]
    fn rejects_empty_instruction() {
        assert!(build_instructed_text("", "Hi").is_err());
    }

    #[test]
    fn round_trips_on_first_separator() {
        let s = build_instructed_text("speak slowly", "one <|x|> two").unwrap();
        let (i, b) = split_instructed_text(&s).unwrap();
        assert_eq!((i, b), ("speak slowly", "one <|x|> two"));
    }

    #[test]
    fn polyglot_examples() {
        assert_eq!(
            build_polyglot_prompt("B", "German").unwrap(),
            "You are Speaker B. Please speak German."
        );
        assert_eq!(
            build_polyglot_prompt("A", "French").unwrap(),
            "You are Speaker A. Please speak French."
        );
        assert_eq!(
            build_polyglot_prompt("A", "fr").unwrap(),
            "You are Speaker A. Please speak French."
        );
        assert!(build_polyglot_prompt("A", "xx").is_err());
        assert!(build_polyglot_prompt("", "fr").is_err());
    }

    #[test]
    fn polyglot_zh_template() {
        assert_eq!(
            build_polyglot_prompt_zh("小明", "fr").unwrap(),
            "你是说话人小明。请讲法语。"
        );
    }
}
