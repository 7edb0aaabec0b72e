//! Named experiment sweeps: batches of run configurations covering the
//! headline comparisons — block-size grid, contract-count scalability,
//! sidechain round ratio, payment-transaction share, payment modality,
//! and rollup-vs-sidechain finality — plus sequential execution and a
//! flat CSV emitter for the collected reports.

use serde::{Deserialize, Serialize};

use crate::clock::TimeBase;
use crate::sim::{run, Mode, RunConfig, RunReport, SimError};
use crate::workload::PaymentModality;

/// One labeled run inside a campaign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignRun {
    pub label: String,
    pub cfg: RunConfig,
}

/// A named batch of runs executed sequentially.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Campaign {
    pub name: String,
    pub runs: Vec<CampaignRun>,
}

const MB: u64 = 1 << 20;

fn labeled(label: impl Into<String>, cfg: RunConfig) -> CampaignRun {
    CampaignRun {
        label: label.into(),
        cfg,
    }
}

fn with_contracts(cfg: &RunConfig, contracts: u32) -> RunConfig {
    let mut c = cfg.clone();
    c.workload.contracts = contracts;
    c
}

impl Campaign {
    /// Saturated-throughput grid: the plain mainchain at 1 MB blocks
    /// against offloaded runs with sidechain blocks of 0.5–2 MB.
    pub fn block_size_grid() -> Campaign {
        let base = RunConfig::default();
        let mut runs = vec![labeled(
            "base-1mb",
            RunConfig {
                mode: Mode::Base,
                ..base.clone()
            },
        )];
        for (label, sc_bytes) in [
            ("cb-0.5mb", MB / 2),
            ("cb-1mb", MB),
            ("cb-1.5mb", 3 * MB / 2),
            ("cb-2mb", 2 * MB),
        ] {
            runs.push(labeled(
                label,
                RunConfig {
                    sc_block_bytes: sc_bytes,
                    ..base.clone()
                },
            ));
        }
        Campaign {
            name: "block-size-grid".into(),
            runs,
        }
    }

    /// Contract-count scalability, with and without the sidechain, at
    /// matched 1 MB / 1 MB block sizes.
    pub fn scalability() -> Campaign {
        let base = RunConfig {
            sc_block_bytes: MB,
            ..RunConfig::default()
        };
        let mut runs = Vec::new();
        for contracts in [500, 1_000, 2_000, 4_000, 8_000, 16_000, 32_000] {
            runs.push(labeled(
                format!("base-{contracts}"),
                RunConfig {
                    mode: Mode::Base,
                    ..with_contracts(&base, contracts)
                },
            ));
            runs.push(labeled(
                format!("cb-{contracts}"),
                with_contracts(&base, contracts),
            ));
        }
        Campaign {
            name: "scalability".into(),
            runs,
        }
    }

    /// Sidechain rounds per mainchain round, at 8000 contracts and
    /// 1 MB / 1 MB blocks: throughput grows with the ratio until the
    /// sidechain outruns demand, then plateaus.
    pub fn round_ratio() -> Campaign {
        let base = RunConfig {
            sc_block_bytes: MB,
            ..with_contracts(&RunConfig::default(), 8_000)
        };
        let runs = [3u32, 4, 6, 8, 10]
            .into_iter()
            .map(|ratio| {
                labeled(
                    format!("cb-ratio-{ratio}"),
                    RunConfig {
                        time: TimeBase {
                            sc_rounds_per_mc: ratio,
                            ..base.time
                        },
                        ..base.clone()
                    },
                )
            })
            .collect();
        Campaign {
            name: "round-ratio".into(),
            runs,
        }
    }

    /// Share of plain currency transfers in the traffic mix: offloading
    /// gains shrink as less of the traffic is service-related.
    pub fn payment_fraction() -> Campaign {
        let base = with_contracts(&RunConfig::default(), 4_000);
        let mut runs = Vec::new();
        for fraction in [0.02, 0.10, 0.30, 0.50, 0.70, 0.90] {
            for (prefix, mode) in [("base", Mode::Base), ("cb", Mode::ChainBoost)] {
                let mut cfg = base.clone();
                cfg.mode = mode;
                cfg.workload.payment_fraction = fraction;
                runs.push(labeled(format!("{prefix}-pay-{fraction:.2}"), cfg));
            }
        }
        Campaign {
            name: "payment-fraction".into(),
            runs,
        }
    }

    /// Payment modalities at 8000 contracts, 1 MB / 1 MB blocks:
    /// settle each contract at expiry vs. dispense at each epoch sync.
    pub fn modality_table() -> Campaign {
        let base = RunConfig {
            sc_block_bytes: MB,
            ..with_contracts(&RunConfig::default(), 8_000)
        };
        let runs = [
            ("cb-pay-contract-end", PaymentModality::ContractEnd),
            ("cb-pay-epoch-end", PaymentModality::EpochEnd),
        ]
        .into_iter()
        .map(|(label, modality)| {
            let mut cfg = base.clone();
            cfg.workload.modality = modality;
            labeled(label, cfg)
        })
        .collect();
        Campaign {
            name: "modality".into(),
            runs,
        }
    }

    /// User-visible finality: sidechain offloading against an
    /// optimistic-rollup baseline with a contestation period.
    pub fn finality_table() -> Campaign {
        Campaign {
            name: "finality".into(),
            runs: vec![
                labeled("cb-0.5mb", RunConfig::default()),
                labeled(
                    "opboost",
                    RunConfig {
                        mode: Mode::OpBoost,
                        ..RunConfig::default()
                    },
                ),
            ],
        }
    }

    /// Every built-in campaign, in presentation order.
    pub fn all() -> Vec<Campaign> {
        vec![
            Campaign::block_size_grid(),
            Campaign::scalability(),
            Campaign::round_ratio(),
            Campaign::payment_fraction(),
            Campaign::modality_table(),
            Campaign::finality_table(),
        ]
    }
}

/// One executed campaign cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignCell {
    pub label: String,
    pub report: RunReport,
}

/// Execute a campaign's runs in order. Fails fast on the first
/// configuration or invariant error, naming the offending cell.
pub fn run_campaign(campaign: &Campaign) -> Result<Vec<CampaignCell>, SimError> {
    let mut cells = Vec::with_capacity(campaign.runs.len());
    for cr in &campaign.runs {
        let report = run(cr.cfg.clone()).map_err(|e| match e {
            SimError::Config(msg) => SimError::Config(format!("{}: {msg}", cr.label)),
            SimError::Invariant(msg) => SimError::Invariant(format!("{}: {msg}", cr.label)),
            other => other,
        })?;
        cells.push(CampaignCell {
            label: cr.label.clone(),
            report,
        });
    }
    Ok(cells)
}

/// Column order of [`to_csv`] rows.
pub const CSV_COLUMNS: [&str; 24] = [
    "label",
    "mode",
    "contracts",
    "payment_fraction",
    "modality",
    "mc_block_bytes",
    "sc_block_bytes",
    "sc_rounds_per_mc",
    "throughput_per_mc_round",
    "window_confirmed_txs",
    "total_confirmed_txs",
    "total_generated_txs",
    "latency_main_mean",
    "latency_main_max",
    "latency_side_mean",
    "latency_side_max",
    "finality_mc_rounds",
    "serviced_contracts_mean",
    "main_bytes",
    "side_bytes",
    "side_bytes_pruned",
    "autorecovery_failures",
    "mass_syncs",
    "rounds_total",
];

/// Flatten executed cells into a CSV table (header + one row per run),
/// floats fixed to four decimals so identical runs emit identical text.
pub fn to_csv(cells: &[CampaignCell]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for cell in cells {
        let r = &cell.report;
        let c = &r.config;
        let row = [
            cell.label.clone(),
            format!("{:?}", c.mode),
            c.workload.contracts.to_string(),
            format!("{:.4}", c.workload.payment_fraction),
            format!("{:?}", c.workload.modality),
            c.mc_block_bytes.to_string(),
            c.sc_block_bytes.to_string(),
            c.time.sc_rounds_per_mc.to_string(),
            format!("{:.4}", r.throughput_per_mc_round),
            r.window_confirmed_txs.to_string(),
            r.total_confirmed_txs.to_string(),
            r.total_generated_txs.to_string(),
            format!("{:.4}", r.latency_main.mean_mc_rounds),
            r.latency_main.max_mc_rounds.to_string(),
            format!("{:.4}", r.latency_side.mean_mc_rounds),
            r.latency_side.max_mc_rounds.to_string(),
            format!("{:.4}", r.finality_mc_rounds),
            format!("{:.4}", r.serviced_contracts_mean),
            r.chain.main_bytes.to_string(),
            r.chain.side_bytes.to_string(),
            r.chain.side_bytes_pruned.to_string(),
            r.committees.autorecovery_failures.len().to_string(),
            r.sync.mass_syncs.to_string(),
            r.rounds_total.to_string(),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
