//! `eval`: score hypotheses against references and emit per-language
//! reports.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;

use tokenforge_core::eval::{aggregate, read_items, render_table, TextPrep};

use super::{create_writer, open_reader, CliError, Context};

#[derive(Args)]
pub struct EvalArgs {
    /// Items JSONL (id, language, reference, hypothesis, optional
    /// embeddings and emotion labels)
    #[arg(long)]
    pub input: PathBuf,

    /// Report JSON
    #[arg(long)]
    pub output: PathBuf,

    /// Also write an aligned plain-text table
    #[arg(long)]
    pub table: Option<PathBuf>,

    /// Score raw text instead of normalized text
    #[arg(long)]
    pub raw: bool,
}

pub fn run(ctx: &Context, args: EvalArgs) -> Result<(), CliError> {
    let base_dir = args.input.parent().unwrap_or_else(|| Path::new("."));
    let items = read_items(open_reader(&args.input)?, base_dir)?;
    ctx.log(format!("scoring {} items", items.len()));
    let prep = if args.raw { TextPrep::Raw } else { TextPrep::Normalized };
    let report = aggregate(&items, prep)?;

    let mut writer = create_writer(&args.output)?;
    serde_json::to_writer_pretty(&mut writer, &report).map_err(tokenforge_core::Error::from)?;
    writer.write_all(b"\n")?;
    writer.flush()?;

    if let Some(table_path) = &args.table {
        let mut table_writer = create_writer(table_path)?;
        table_writer.write_all(render_table(&report).as_bytes())?;
        table_writer.flush()?;
    }

    match report.overall.wer_or_cer {
        Some(rate) => println!("scored {} items, overall rate {rate}", report.overall.n),
        None => println!("scored {} items", report.overall.n),
    }
    Ok(())
}
