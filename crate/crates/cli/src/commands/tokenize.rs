//! `tokenize`: stream feature vectors through the quantizer, or decode a
//! token stream back into quantized vectors.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Args;

use tokenforge_core::fsq::{
    decode_index, encode_index, quantize, read_tokens_binary, read_tokens_text,
    write_tokens_binary, write_tokens_text, FsqConfig, TokenId,
};

use super::{create_writer, open_reader, read_to_string, CliError, Context};

#[derive(Args)]
pub struct TokenizeArgs {
    /// Feature vectors (one whitespace-separated row per line), or a token
    /// stream with --decode
    #[arg(long)]
    pub input: PathBuf,

    /// Output token stream, or quantized-vector stream with --decode
    #[arg(long)]
    pub output: PathBuf,

    /// Use the binary token format (16-byte header + little-endian u32s)
    #[arg(long)]
    pub binary: bool,

    /// Decode tokens back into quantized integer vectors
    #[arg(long)]
    pub decode: bool,
}

fn parse_feature_line(line: &str, lineno: usize, dim: usize) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|e| CliError::config(format!("features line {lineno}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != dim {
        return Err(CliError::config(format!(
            "features line {lineno}: expected {dim} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

pub fn run(ctx: &Context, args: TokenizeArgs) -> Result<(), CliError> {
    let config_path = ctx.require_config()?;
    let config: FsqConfig<f64> = FsqConfig::from_json_str(&read_to_string(config_path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", config_path.display())))?;

    if args.decode {
        decode_stream(ctx, &args, &config)
    } else {
        encode_stream(ctx, &args, &config)
    }
}

fn encode_stream(ctx: &Context, args: &TokenizeArgs, config: &FsqConfig<f64>) -> Result<(), CliError> {
    let reader = open_reader(&args.input)?;
    let mut tokens: Vec<TokenId> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let features = parse_feature_line(&line, idx + 1, config.input_dim())?;
        let quantized = quantize(&features, config)?;
        tokens.push(encode_index(&quantized, config.bound())?);
    }

    let mut writer = create_writer(&args.output)?;
    if args.binary {
        write_tokens_binary(
            &mut writer,
            &tokens,
            config.low_rank_dim() as u32,
            config.bound(),
        )?;
    } else {
        write_tokens_text(&mut writer, &tokens)?;
    }
    writer.flush()?;
    ctx.log(format!("codebook size {}", config.codebook_size()));
    println!("wrote {} tokens to {}", tokens.len(), args.output.display());
    Ok(())
}

fn decode_stream(_ctx: &Context, args: &TokenizeArgs, config: &FsqConfig<f64>) -> Result<(), CliError> {
    let tokens = if args.binary {
        let file = std::fs::File::open(&args.input)
            .map_err(|e| CliError::io(format!("cannot open {}: {e}", args.input.display())))?;
        let (tokens, d, k) = read_tokens_binary(file)?;
        if d as usize != config.low_rank_dim() || k != config.bound() {
            return Err(CliError::config(format!(
                "token stream header (D={d}, K={k}) does not match the config (D={}, K={})",
                config.low_rank_dim(),
                config.bound()
            )));
        }
        tokens
    } else {
        read_tokens_text(open_reader(&args.input)?)?
    };

    let mut writer = create_writer(&args.output)?;
    for token in &tokens {
        let q = decode_index(*token, config.low_rank_dim(), config.bound())?;
        let row: Vec<String> = q.values().iter().map(i32::to_string).collect();
        writeln!(writer, "{}", row.join(" "))?;
    }
    writer.flush()?;
    println!("wrote {} vectors to {}", tokens.len(), args.output.display());
    Ok(())
}
