//! Run the default offloading configuration and print the headline
//! numbers: throughput, confirmation latencies, chain footprint.

use chainboost_core::sim::{run, Mode, RunConfig};

fn main() {
    for (label, cfg) in [
        ("base 1MB", RunConfig {
            mode: Mode::Base,
            ..RunConfig::default()
        }),
        ("chainboost 1MB/0.5MB", RunConfig::default()),
        ("chainboost 1MB/2MB", RunConfig {
            sc_block_bytes: 2 * 1024 * 1024,
            ..RunConfig::default()
        }),
    ] {
        let t0 = std::time::Instant::now();
        let report = run(cfg).expect("default config runs");
        println!(
            "{label}: {:.0} tx/mc-round | mc latency {:.2} | sc latency {:.2} | \
             main {:.1} MB side {:.1} MB pruned {:.1} MB | rounds {} | {:?}",
            report.throughput_per_mc_round,
            report.latency_main.mean_mc_rounds,
            report.latency_side.mean_mc_rounds,
            report.chain.main_bytes as f64 / 1048576.0,
            report.chain.side_bytes as f64 / 1048576.0,
            report.chain.side_bytes_pruned as f64 / 1048576.0,
            report.rounds_total,
            t0.elapsed(),
        );
    }
}
