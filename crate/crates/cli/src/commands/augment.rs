//! `augment`: pronunciation-inpainting over a JSONL corpus.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tokenforge_core::textproc::{augment_sentence, parse_pron_dict, AugmentPolicy};

use super::{create_writer, open_reader, read_to_string, CliError, Context};

#[derive(Args)]
pub struct AugmentArgs {
    /// CMU-format pronunciation dictionary
    #[arg(long)]
    pub dict: PathBuf,

    /// Input corpus (JSONL with a "text" field per line)
    #[arg(long)]
    pub input: PathBuf,

    /// Output corpus with "augmented_text" filled in
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct CorpusRecord {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    augmented_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instruction: Option<String>,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

pub fn run(ctx: &Context, args: AugmentArgs) -> Result<(), CliError> {
    let config_path = ctx.require_config()?;
    let raw: serde_json::Value = serde_json::from_str(&read_to_string(config_path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", config_path.display())))?;
    let file_has_seed = raw.get("seed").is_some();
    let mut policy: AugmentPolicy = serde_json::from_value(raw)
        .map_err(|e| CliError::config(format!("{}: {e}", config_path.display())))?;
    policy.validate()?;
    // --seed beats the policy-file seed, which beats the environment/default
    if ctx.seed_explicit || !file_has_seed {
        policy.seed = ctx.seed;
    }

    let (dict, warnings) = parse_pron_dict(open_reader(&args.dict)?)?;
    for warning in &warnings {
        ctx.log(format!("{}: {warning}", args.dict.display()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let reader = open_reader(&args.input)?;
    let mut writer = create_writer(&args.output)?;
    let mut count = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::config(format!("corpus line {}: {e}", lineno + 1)))?;
        record.augmented_text = Some(augment_sentence(&record.text, &dict, &policy, &mut rng)?);
        serde_json::to_writer(&mut writer, &record)
            .map_err(tokenforge_core::Error::from)?;
        writer.write_all(b"\n")?;
        count += 1;
    }
    writer.flush()?;
    println!("augmented {count} records to {}", args.output.display());
    Ok(())
}
