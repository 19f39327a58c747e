//! `pipeline`: run the corpus-production stages over a JSONL manifest.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use tokenforge_core::pipeline::{
    read_manifest, run_pipeline, write_manifest, write_stats, Adapters, CommandAdapter,
    PipelineConfig,
};

use super::{create_writer, open_reader, read_to_string, CliError, Context};

#[derive(Args)]
pub struct PipelineArgs {
    /// Input manifest (JSONL, one utterance per line)
    #[arg(long)]
    pub input: PathBuf,

    /// Output manifest
    #[arg(long)]
    pub output: PathBuf,

    /// Stage statistics JSON (default: <output>.stats.json)
    #[arg(long)]
    pub stats: Option<PathBuf>,

    /// Directory for processed audio (default: <output stem>_audio next to
    /// the output manifest)
    #[arg(long)]
    pub audio_dir: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct PipelineRunFile {
    #[serde(flatten)]
    pipeline: PipelineConfig,
    denoise_cmd: Option<Vec<String>>,
    asr_cmd: Option<Vec<String>>,
    align_cmd: Option<Vec<String>>,
}

fn adapter_from(argv: &Option<Vec<String>>) -> Result<Option<CommandAdapter>, CliError> {
    match argv {
        None => Ok(None),
        Some(argv) => Ok(Some(CommandAdapter::from_argv(argv)?)),
    }
}

pub fn run(ctx: &Context, args: PipelineArgs) -> Result<(), CliError> {
    let file: PipelineRunFile = match &ctx.config {
        Some(path) => serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => PipelineRunFile::default(),
    };
    file.pipeline.validate()?;

    let adapters = Adapters {
        denoise: adapter_from(&file.denoise_cmd)?,
        asr: adapter_from(&file.asr_cmd)?,
        align: adapter_from(&file.align_cmd)?,
        seed: ctx.seed,
    };

    let records = read_manifest(open_reader(&args.input)?)?;
    let audio_dir = args.audio_dir.clone().unwrap_or_else(|| {
        let stem = args
            .output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "pipeline".to_owned());
        args.output
            .parent()
            .unwrap_or_else(|| std::path::Path::new("."))
            .join(format!("{stem}_audio"))
    });

    ctx.log(format!("processing {} records", records.len()));
    let (output, stats) =
        run_pipeline::<f64>(&file.pipeline, records, &adapters, &audio_dir, ctx.jobs)?;

    let mut writer = create_writer(&args.output)?;
    write_manifest(&mut writer, &output)?;
    writer.flush()?;

    let stats_path = args
        .stats
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.stats.json", args.output.display())));
    let mut stats_writer = create_writer(&stats_path)?;
    write_stats(&mut stats_writer, &stats)?;
    stats_writer.flush()?;

    println!(
        "kept {} of {} records ({} dropped)",
        stats.output_records,
        stats.input_records,
        stats.total_drops()
    );
    Ok(())
}
