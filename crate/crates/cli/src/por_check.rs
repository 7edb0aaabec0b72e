//! `chainboost por selftest`: exercise the retrievability scheme end to
//! end — keygen, preprocessing, challenge, proof, verification, proof
//! encoding, and two required rejections.

use std::time::Instant;

use anyhow::{bail, Context};
use chainboost_por::{
    challenge_seed, decode_proof, derive_challenge, encode_proof, keygen, preprocess,
    prove, verify, PorParams, DEFAULT_QUERY_SIZE,
};
use clap::{Args, Subcommand};
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Subcommand)]
pub enum PorCmd {
    /// Prove and verify possession of a random file, then check that a
    /// tampered file and a stale challenge are both rejected.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 65_536)]
    pub file_bytes: usize,
    /// Sectors folded into each block (proof size / storage trade-off).
    #[arg(long, default_value_t = 16)]
    pub sectors_per_block: usize,
    /// Blocks challenged per proof.
    #[arg(long, default_value_t = DEFAULT_QUERY_SIZE)]
    pub query_size: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn exec_selftest(args: SelftestArgs) -> anyhow::Result<()> {
    let params = PorParams::new(args.sectors_per_block, args.query_size)
        .context("invalid parameters")?;
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);

    let mut data = vec![0u8; args.file_bytes];
    rng.fill_bytes(&mut data);
    let mut name = [0u8; 32];
    rng.fill_bytes(&mut name);
    let mut prev_block_hash = [0u8; 32];
    rng.fill_bytes(&mut prev_block_hash);

    let (sk, pk) = keygen(&mut rng);
    println!(
        "parameters   {}-byte file | {} sectors/block | query size {}",
        args.file_bytes, args.sectors_per_block, params.query_size
    );

    let t = Instant::now();
    let file = preprocess(params, &sk, name, &data, &mut rng).context("preprocess")?;
    println!(
        "preprocess   {} blocks in {:.1} ms",
        file.tag.block_count,
        t.elapsed().as_secs_f64() * 1e3
    );

    let seed = challenge_seed(&prev_block_hash, 42);
    let challenge = derive_challenge(&seed, file.tag.block_count, params.query_size);

    let t = Instant::now();
    let proof = prove(&file, &challenge).context("prove")?;
    let encoded = encode_proof(&proof);
    println!(
        "prove        {:.1} ms (proof {} bytes)",
        t.elapsed().as_secs_f64() * 1e3,
        encoded.len()
    );

    let t = Instant::now();
    verify(&pk, &file.tag, &challenge, &proof).context("honest proof rejected")?;
    println!("verify       ok in {:.1} ms", t.elapsed().as_secs_f64() * 1e3);

    let decoded = decode_proof(&encoded).context("proof encoding roundtrip")?;
    if decoded != proof {
        bail!("proof encoding roundtrip changed the proof");
    }
    println!("encoding     roundtrip ok");

    // A proof computed over a one-byte-different file must not verify
    // against the original tag.
    let mut tampered = data.clone();
    tampered[0] ^= 1;
    let tampered_file =
        preprocess(params, &sk, name, &tampered, &mut rng).context("preprocess tampered")?;
    let tampered_proof = prove(&tampered_file, &challenge).context("prove tampered")?;
    if verify(&pk, &file.tag, &challenge, &tampered_proof).is_ok() {
        bail!("a proof over tampered data verified against the original tag");
    }
    println!("tampered     data rejected ok");

    // A proof for one round's challenge must not satisfy another's.
    let stale = derive_challenge(
        &challenge_seed(&prev_block_hash, 43),
        file.tag.block_count,
        params.query_size,
    );
    if verify(&pk, &file.tag, &stale, &proof).is_ok() {
        bail!("a proof for one challenge verified against another");
    }
    println!("stale        challenge rejected ok");
    Ok(())
}

pub fn exec(cmd: PorCmd) -> anyhow::Result<()> {
    match cmd {
        PorCmd::Selftest(args) => exec_selftest(args),
    }
}
