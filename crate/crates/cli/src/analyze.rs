//! `chainboost analyze`: closed-form committee-failure probabilities,
//! sweeps over the misbehaving-node count, and committee-size bounds.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use chainboost_analysis::{
    committee_size_bound, monte_carlo_af, pr_af_float, pr_af_generating_function,
    pr_af_hypergeometric, FailureModel,
};
use clap::{Args, Subcommand};

#[derive(Debug, Subcommand)]
pub enum AnalyzeCmd {
    /// Probability that the primary and every standby committee are
    /// non-functional in the same epoch.
    Af(AfArgs),
    /// Sweep the misbehaving-node count; CSV output.
    AfSweep(AfSweepArgs),
    /// Smallest committee sizes meeting failure-probability targets.
    CommitteeSize(CommitteeSizeArgs),
}

/// Default liveness threshold for a committee of `cs`: the optimal
/// strong threshold leaves `floor((cs + 2) / 3)` seats.
fn default_liveness_threshold(cs: u64) -> u64 {
    (cs + 2) / 3
}

#[derive(Debug, Args)]
pub struct AfArgs {
    #[arg(long)]
    pub population: u64,
    #[arg(long)]
    pub misbehaving: u64,
    #[arg(long)]
    pub committee_size: u64,
    /// Number of standby committees.
    #[arg(long)]
    pub backups: u64,
    /// Misbehaving members that make a committee non-functional
    /// (default: the optimal weak threshold for the committee size).
    #[arg(long)]
    pub liveness_threshold: Option<u64>,
    /// Also estimate empirically with this many trials.
    #[arg(long)]
    pub monte_carlo: Option<u64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn model_from(
    population: u64,
    misbehaving: u64,
    committee_size: u64,
    backups: u64,
    liveness_threshold: Option<u64>,
) -> anyhow::Result<FailureModel> {
    let theta = liveness_threshold.unwrap_or_else(|| default_liveness_threshold(committee_size));
    FailureModel::new(population, misbehaving, committee_size, backups, theta)
        .context("invalid failure model")
}

fn exec_af(args: AfArgs) -> anyhow::Result<()> {
    let model = model_from(
        args.population,
        args.misbehaving,
        args.committee_size,
        args.backups,
        args.liveness_threshold,
    )?;
    println!(
        "model        population {} | misbehaving {} | committee size {} | backups {} | liveness threshold {}",
        model.population, model.misbehaving, model.committee_size, model.backups,
        model.liveness_threshold
    );

    let gf = pr_af_generating_function(&model);
    // The composition sum is exponential in the committee count; only
    // cross-check it at small scale.
    if (model.backups + 1) * model.committee_size <= 64 {
        let hyper = pr_af_hypergeometric(&model);
        if hyper != gf {
            bail!("internal disagreement: hypergeometric {hyper} != generating function {gf}");
        }
        println!("pr_af exact  {gf}  (two independent derivations agree)");
    } else {
        println!("pr_af exact  {gf}");
    }
    println!("pr_af float  {:.6e}", pr_af_float(&model));

    if let Some(trials) = args.monte_carlo {
        let est = monte_carlo_af(&model, trials, args.seed);
        println!(
            "monte carlo  {:.6e} +/- {:.2e} (1 SE, {} trials, seed {})",
            est.mean, est.std_error, est.trials, args.seed
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AfSweepArgs {
    #[arg(long)]
    pub population: u64,
    #[arg(long)]
    pub committee_size: u64,
    #[arg(long)]
    pub backups: u64,
    #[arg(long)]
    pub liveness_threshold: Option<u64>,
    /// First misbehaving-node count.
    #[arg(long, default_value_t = 0)]
    pub from: u64,
    /// Last misbehaving-node count (inclusive).
    #[arg(long)]
    pub to: u64,
    #[arg(long, default_value_t = 1)]
    pub step: u64,
    /// CSV destination ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

fn exec_af_sweep(args: AfSweepArgs) -> anyhow::Result<()> {
    if args.step == 0 {
        bail!("--step must be positive");
    }
    if args.to < args.from {
        bail!("--to must be at least --from");
    }
    let mut csv = String::from(
        "population,misbehaving,committee_size,backups,liveness_threshold,pr_af\n",
    );
    let mut m = args.from;
    while m <= args.to {
        let model = model_from(
            args.population,
            m,
            args.committee_size,
            args.backups,
            args.liveness_threshold,
        )?;
        csv.push_str(&format!(
            "{},{},{},{},{},{:.12e}\n",
            model.population,
            model.misbehaving,
            model.committee_size,
            model.backups,
            model.liveness_threshold,
            pr_af_float(&model)
        ));
        m += args.step;
    }
    write_text(&args.out, &csv)
}

#[derive(Debug, Args)]
pub struct CommitteeSizeArgs {
    /// Per-node misbehavior rates.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.30])]
    pub p: Vec<f64>,
    /// Tolerable misbehaving fraction inside a committee.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub gamma: f64,
    /// Failure-probability targets.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-10, 1e-5, 1e-3])]
    pub targets: Vec<f64>,
    /// CSV destination ("-" for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

fn exec_committee_size(args: CommitteeSizeArgs) -> anyhow::Result<()> {
    let mut csv = String::from("p,gamma,target,committee_size\n");
    for &target in &args.targets {
        for &p in &args.p {
            let cs = committee_size_bound(p, args.gamma, target)
                .with_context(|| format!("p={p}, gamma={}, target={target}", args.gamma))?;
            csv.push_str(&format!("{},{},{:e},{}\n", p, args.gamma, target, cs));
        }
    }
    write_text(&args.out, &csv)
}

fn write_text(out: &PathBuf, text: &str) -> anyhow::Result<()> {
    if out.as_os_str() == "-" {
        print!("{text}");
    } else {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

pub fn exec(cmd: AnalyzeCmd) -> anyhow::Result<()> {
    match cmd {
        AnalyzeCmd::Af(args) => exec_af(args),
        AnalyzeCmd::AfSweep(args) => exec_af_sweep(args),
        AnalyzeCmd::CommitteeSize(args) => exec_committee_size(args),
    }
}
