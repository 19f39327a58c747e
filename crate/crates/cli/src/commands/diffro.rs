//! `diffro`: seeded gradient-ascent run of a toy token policy against a
//! reader reward, writing the objective trace and the final policy.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use tokenforge_core::diffro::{
    optimize, token_level_kl, LinearReader, OptimizeOptions, PolicyLogits, Reader, RewardConfig,
    SampleMode,
};
use tokenforge_core::mat::Mat;

use super::{create_writer, read_to_string, CliError, Context};

#[derive(Args)]
pub struct DiffroArgs {
    /// Reader model JSON ({"vocab": [...], "emission": row-major})
    #[arg(long)]
    pub reader: PathBuf,

    /// Initial policy JSON (default: zero logits sized to the target)
    #[arg(long)]
    pub policy_in: Option<PathBuf>,

    /// Reference policy JSON for the KL term (default: the initial policy)
    #[arg(long)]
    pub reference: Option<PathBuf>,

    /// Objective trace CSV (step, reward, kl, objective)
    #[arg(long)]
    pub trace: PathBuf,

    /// Final policy JSON
    #[arg(long)]
    pub policy_out: PathBuf,
}

#[derive(Deserialize)]
struct DiffroRunFile {
    beta: f64,
    #[serde(default = "default_temperature")]
    temperature: f64,
    steps: usize,
    lr: f64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_noise_draws")]
    noise_draws: usize,
    #[serde(default)]
    sample_mode: SampleMode,
    target: Vec<String>,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_noise_draws() -> usize {
    1
}

pub fn run(ctx: &Context, args: DiffroArgs) -> Result<(), CliError> {
    let config_path = ctx.require_config()?;
    let file: DiffroRunFile = serde_json::from_str(&read_to_string(config_path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", config_path.display())))?;
    if file.target.is_empty() {
        return Err(CliError::config("run config needs a non-empty target"));
    }

    let reader: LinearReader<f64> = LinearReader::from_json_str(&read_to_string(&args.reader)?)
        .map_err(|e| CliError::config(format!("{}: {e}", args.reader.display())))?;
    let target_refs: Vec<&str> = file.target.iter().map(String::as_str).collect();
    let target = reader.encode_target(&target_refs)?;

    let policy = match &args.policy_in {
        Some(path) => PolicyLogits::from_json_str(&read_to_string(path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => PolicyLogits::new(Mat::zeros(target.len(), reader.num_codes()))?,
    };
    let reference = match &args.reference {
        Some(path) => PolicyLogits::from_json_str(&read_to_string(path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => policy.clone(),
    };

    let mut cfg = RewardConfig::new(file.beta, file.temperature)?;
    cfg.sample_mode = file.sample_mode;
    let opts = OptimizeOptions {
        steps: file.steps,
        learning_rate: file.lr,
        noise_draws: file.noise_draws,
    };

    // --seed wins over the run-config seed, which wins over the environment
    let seed = if ctx.seed_explicit {
        ctx.seed
    } else {
        file.seed.unwrap_or(ctx.seed)
    };
    ctx.log(format!("seed {seed}"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (final_policy, trace) =
        optimize(&policy, &reference, &target, &reader, &cfg, &opts, &mut rng)?;

    let mut trace_writer = create_writer(&args.trace)?;
    writeln!(trace_writer, "step,reward,kl,objective")?;
    for row in &trace {
        writeln!(
            trace_writer,
            "{},{},{},{}",
            row.step, row.reward, row.kl, row.objective
        )?;
    }
    trace_writer.flush()?;

    let mut policy_writer = create_writer(&args.policy_out)?;
    policy_writer.write_all(final_policy.to_json_string()?.as_bytes())?;
    policy_writer.write_all(b"\n")?;
    policy_writer.flush()?;

    let final_kl = token_level_kl(&final_policy, &reference)?;
    let last = trace.last().expect("steps >= 1");
    println!(
        "final reward={} kl={} objective={}",
        last.reward, final_kl, last.objective
    );
    Ok(())
}
