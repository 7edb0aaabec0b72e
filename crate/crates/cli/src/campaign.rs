//! `chainboost campaign`: run the built-in experiment batches and write
//! one CSV (and optionally the full JSON reports) per campaign.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use chainboost_core::campaign::{run_campaign, to_csv, Campaign};
use clap::Args;

#[derive(Debug, Args)]
pub struct CampaignArgs {
    /// Campaign names (see --list); defaults to all of them.
    pub names: Vec<String>,
    /// List the available campaigns and exit.
    #[arg(long)]
    pub list: bool,
    /// Directory for the CSV output files.
    #[arg(long, default_value = "results")]
    pub out_dir: PathBuf,
    /// Also write the full per-run JSON reports.
    #[arg(long)]
    pub reports: bool,
}

fn by_name(name: &str) -> Option<Campaign> {
    Campaign::all().into_iter().find(|c| c.name == name)
}

pub fn exec(args: CampaignArgs) -> anyhow::Result<()> {
    if args.list {
        for c in Campaign::all() {
            println!("{:<20} {} runs", c.name, c.runs.len());
        }
        return Ok(());
    }

    let campaigns: Vec<Campaign> = if args.names.is_empty() {
        Campaign::all()
    } else {
        args.names
            .iter()
            .map(|n| {
                by_name(n).with_context(|| {
                    let known: Vec<String> =
                        Campaign::all().into_iter().map(|c| c.name).collect();
                    format!("unknown campaign {n:?}; available: {}", known.join(", "))
                })
            })
            .collect::<Result<_, _>>()?
    };
    if campaigns.is_empty() {
        bail!("no campaigns selected");
    }

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    for c in &campaigns {
        let started = Instant::now();
        let cells = run_campaign(c).with_context(|| format!("campaign {}", c.name))?;
        let csv_path = args.out_dir.join(format!("{}.csv", c.name));
        fs::write(&csv_path, to_csv(&cells))?;
        if args.reports {
            let json_path = args.out_dir.join(format!("{}-reports.json", c.name));
            fs::write(&json_path, serde_json::to_string_pretty(&cells)?)?;
        }
        println!(
            "{:<20} {} runs in {:.1}s -> {}",
            c.name,
            cells.len(),
            started.elapsed().as_secs_f64(),
            csv_path.display()
        );
    }
    Ok(())
}
