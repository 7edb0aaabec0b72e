//! `chainboost run`: build a config from an optional TOML/JSON file plus
//! flag overrides, execute it, and emit the full report as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chainboost_core::sim::{run, Mode, RunConfig, RunReport};
use chainboost_core::workload::PaymentModality;
use clap::{Args, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Base,
    Chainboost,
    Opboost,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Base => Mode::Base,
            ModeArg::Chainboost => Mode::ChainBoost,
            ModeArg::Opboost => Mode::OpBoost,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModalityArg {
    ContractEnd,
    EpochEnd,
    EachMcRound,
}

impl From<ModalityArg> for PaymentModality {
    fn from(m: ModalityArg) -> PaymentModality {
        match m {
            ModalityArg::ContractEnd => PaymentModality::ContractEnd,
            ModalityArg::EpochEnd => PaymentModality::EpochEnd,
            ModalityArg::EachMcRound => PaymentModality::EachMcRound,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML or JSON run configuration; omitted fields use defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<ModeArg>,
    /// Miner / storage-node population.
    #[arg(long)]
    pub nodes: Option<u32>,
    /// Number of storage contracts.
    #[arg(long)]
    pub contracts: Option<u32>,
    /// Transfers as a fraction of round transaction count.
    #[arg(long)]
    pub payment_fraction: Option<f64>,
    #[arg(long)]
    pub modality: Option<ModalityArg>,
    #[arg(long)]
    pub mc_block_bytes: Option<u64>,
    #[arg(long)]
    pub sc_block_bytes: Option<u64>,
    /// Sidechain rounds per mainchain round.
    #[arg(long)]
    pub ratio: Option<u32>,
    /// Scripted run length in mainchain rounds.
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub committee_size: Option<u32>,
    /// Number of standby committees.
    #[arg(long)]
    pub kappa: Option<u32>,
    /// Mainchain block share reserved for payment transactions.
    #[arg(long)]
    pub payment_quota: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the full JSON report here ("-" for stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the human-readable summary.
    #[arg(long)]
    pub quiet: bool,
}

/// Parse a config file by extension: `.toml` or `.json`.
pub fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let cfg = match ext {
        "toml" => toml::from_str(&text)
            .with_context(|| format!("parsing TOML config {}", path.display()))?,
        "json" => serde_json::from_str(&text)
            .with_context(|| format!("parsing JSON config {}", path.display()))?,
        other => bail!(
            "unsupported config extension {other:?} (expected .toml or .json): {}",
            path.display()
        ),
    };
    Ok(cfg)
}

/// Config file (or defaults) with the flag overrides applied on top.
pub fn build_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m.into();
    }
    if let Some(n) = args.nodes {
        cfg.nodes = n;
    }
    if let Some(c) = args.contracts {
        cfg.workload.contracts = c;
    }
    if let Some(f) = args.payment_fraction {
        cfg.workload.payment_fraction = f;
    }
    if let Some(m) = args.modality {
        cfg.workload.modality = m.into();
    }
    if let Some(b) = args.mc_block_bytes {
        cfg.mc_block_bytes = b;
    }
    if let Some(b) = args.sc_block_bytes {
        cfg.sc_block_bytes = b;
    }
    if let Some(r) = args.ratio {
        cfg.time.sc_rounds_per_mc = r;
    }
    if let Some(r) = args.rounds {
        cfg.run_len_mc_rounds = r;
    }
    if let Some(cs) = args.committee_size {
        cfg.committee_size = cs;
    }
    if let Some(k) = args.kappa {
        cfg.kappa = k;
    }
    if let Some(q) = args.payment_quota {
        cfg.payment_quota = q;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn exec(args: RunArgs) -> anyhow::Result<()> {
    let cfg = build_config(&args)?;
    let report = run(cfg).context("run failed")?;

    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&report)?;
        if out.as_os_str() == "-" {
            println!("{json}");
        } else {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(out, json)?;
        }
    }
    if !args.quiet {
        print!("{}", summary(&report));
    }
    Ok(())
}

fn mb(bytes: u64) -> f64 {
    bytes as f64 / (1u64 << 20) as f64
}

/// Human-readable digest of one run.
pub fn summary(r: &RunReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "mode        {:?} (seed {})\n",
        r.config.mode, r.config.seed
    ));
    s.push_str(&format!(
        "rounds      {} scripted, {} total\n",
        r.rounds_scripted, r.rounds_total
    ));
    s.push_str(&format!(
        "throughput  {:.1} tx/mc-round ({} confirmed in window, {} total)\n",
        r.throughput_per_mc_round, r.window_confirmed_txs, r.total_confirmed_txs
    ));
    s.push_str(&format!(
        "latency     mc {:.2} (max {}) | sc {:.2} (max {}) | finality {:.2} mc-rounds\n",
        r.latency_main.mean_mc_rounds,
        r.latency_main.max_mc_rounds,
        r.latency_side.mean_mc_rounds,
        r.latency_side.max_mc_rounds,
        r.finality_mc_rounds
    ));
    s.push_str(&format!(
        "chain       main {:.1} MB ({} blocks) | side {:.1} MB ({} blocks) | pruned {:.1} MB\n",
        mb(r.chain.main_bytes),
        r.chain.main_blocks,
        mb(r.chain.side_bytes),
        r.chain.side_blocks,
        mb(r.chain.side_bytes_pruned)
    ));
    s.push_str(&format!(
        "sync        {} applied | {} mass | {} rejected | {} stale\n",
        r.sync.applied, r.sync.mass_syncs, r.sync.rejected, r.sync.stale_discarded
    ));
    s.push_str(&format!(
        "committees  {} leader changes | {} takeovers | {} failed epochs\n",
        r.committees.leader_changes,
        r.committees.takeovers.len(),
        r.committees.autorecovery_failures.len()
    ));
    s.push_str(&format!(
        "escrow      funded {} | dispensed {} | outstanding {}\n",
        r.escrow.funded, r.escrow.dispensed, r.escrow.outstanding
    ));
    if let Some(op) = &r.opboost {
        s.push_str(&format!(
            "rollup      {} batches | processing {:.2} | contested finality {:.2} mc-rounds\n",
            op.batches, op.processing_mean_mc_rounds, op.finality_mean_mc_rounds
        ));
    }
    s
}
