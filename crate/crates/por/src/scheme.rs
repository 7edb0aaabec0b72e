//! Keys, file preprocessing, proving, and verification.
//!
//! A file splits into `n` blocks of `s` field sectors. The owner publishes a
//! signed tag `(name, n, u_1..u_s)` and hands the server one authenticator
//! per block:
//!
//! ```text
//! sigma_i = (H(name, i) + sum_j m_ij * u_j) * alpha
//! ```
//!
//! A proof for challenge `{(i, v_i)}` aggregates the challenged blocks into
//! `mu_j = sum_i v_i * m_ij` and `sigma = sum_i v_i * sigma_i`, and verifies
//! through one pairing equation:
//!
//! ```text
//! e(sigma, g2) == e(sum_i v_i * H(name, i) + sum_j mu_j * u_j, v)
//! ```

use bls12_381::hash_to_curve::{ExpandMsgXmd, HashToCurve};
use bls12_381::{pairing, G1Affine, G1Projective, G2Affine, G2Projective, Scalar};
use ff::Field;
use group::Curve;
use rand_core::RngCore;
use sha2::Sha256;

use crate::challenge::ChallengeSet;
use crate::chunk;
use crate::params::{PorError, PorParams};

const BLOCK_HASH_DST: &[u8] = b"chainboost-por-block-v1";
const TAG_HASH_DST: &[u8] = b"chainboost-por-tag-v1";

/// Secret material: the authenticator key and the tag-signing key.
#[derive(Debug, Clone)]
pub struct PorSecretKey {
    pub alpha: Scalar,
    pub tag_key: Scalar,
}

/// Public material: `v = g2 * alpha` plus the tag verification key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PorPublicKey {
    pub v: G2Affine,
    pub tag_pk: G2Affine,
}

/// Signed description of a processed file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileTag {
    pub name: [u8; 32],
    pub block_count: u64,
    pub u: Vec<G1Affine>,
    pub signature: G1Affine,
}

/// Server-side state: the sectors and one authenticator per block.
#[derive(Debug, Clone)]
pub struct ProcessedFile {
    pub params: PorParams,
    pub tag: FileTag,
    pub blocks: Vec<Vec<Scalar>>,
    pub authenticators: Vec<G1Affine>,
}

/// Aggregated possession proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PorProof {
    pub sigma: G1Affine,
    pub mu: Vec<Scalar>,
}

/// Sample a fresh keypair.
pub fn keygen(rng: &mut impl RngCore) -> (PorSecretKey, PorPublicKey) {
    let alpha = Scalar::random(&mut *rng);
    let tag_key = Scalar::random(&mut *rng);
    let public = PorPublicKey {
        v: (G2Projective::generator() * alpha).to_affine(),
        tag_pk: (G2Projective::generator() * tag_key).to_affine(),
    };
    (PorSecretKey { alpha, tag_key }, public)
}

fn hash_to_g1(dst: &[u8], message: &[u8]) -> G1Projective {
    <G1Projective as HashToCurve<ExpandMsgXmd<Sha256>>>::hash_to_curve(message, dst)
}

/// Per-block base point `H(name, i)`, `i` 1-based.
fn block_point(name: &[u8; 32], index: u64) -> G1Projective {
    let mut message = Vec::with_capacity(40);
    message.extend_from_slice(name);
    message.extend_from_slice(&index.to_le_bytes());
    hash_to_g1(BLOCK_HASH_DST, &message)
}

fn tag_message_bytes(name: &[u8; 32], block_count: u64, u: &[G1Affine]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(32 + 8 + 2 + 48 * u.len());
    bytes.extend_from_slice(name);
    bytes.extend_from_slice(&block_count.to_le_bytes());
    bytes.extend_from_slice(&(u.len() as u16).to_le_bytes());
    for point in u {
        bytes.extend_from_slice(&point.to_compressed());
    }
    bytes
}

fn sign_tag(sk: &PorSecretKey, message: &[u8]) -> G1Affine {
    (hash_to_g1(TAG_HASH_DST, message) * sk.tag_key).to_affine()
}

fn verify_tag(pk: &PorPublicKey, tag: &FileTag) -> Result<(), PorError> {
    let message = tag_message_bytes(&tag.name, tag.block_count, &tag.u);
    let expected = hash_to_g1(TAG_HASH_DST, &message).to_affine();
    let lhs = pairing(&tag.signature, &G2Affine::generator());
    let rhs = pairing(&expected, &pk.tag_pk);
    if lhs == rhs {
        Ok(())
    } else {
        Err(PorError::TagSignature)
    }
}

/// Chunk `data`, authenticate every block, and sign the tag.
pub fn preprocess(
    params: PorParams,
    sk: &PorSecretKey,
    name: [u8; 32],
    data: &[u8],
    rng: &mut impl RngCore,
) -> Result<ProcessedFile, PorError> {
    if data.is_empty() {
        return Err(PorError::EmptyFile);
    }
    let block_count = params.block_count(data.len() as u64);
    let blocks = chunk::blocks(data, block_count, params.sectors_per_block);

    let u_proj: Vec<G1Projective> = (0..params.sectors_per_block)
        .map(|_| G1Projective::generator() * Scalar::random(&mut *rng))
        .collect();
    let u: Vec<G1Affine> = u_proj.iter().map(|p| p.to_affine()).collect();

    let authenticators = blocks
        .iter()
        .enumerate()
        .map(|(b, sectors)| {
            let mut acc = block_point(&name, b as u64 + 1);
            for (j, m) in sectors.iter().enumerate() {
                acc += u_proj[j] * m;
            }
            (acc * sk.alpha).to_affine()
        })
        .collect();

    let message = tag_message_bytes(&name, block_count, &u);
    let signature = sign_tag(sk, &message);
    Ok(ProcessedFile {
        params,
        tag: FileTag {
            name,
            block_count,
            u,
            signature,
        },
        blocks,
        authenticators,
    })
}

/// Aggregate the challenged blocks into a constant-size proof.
pub fn prove(file: &ProcessedFile, challenge: &ChallengeSet) -> Result<PorProof, PorError> {
    if challenge.is_empty() {
        return Err(PorError::EmptyChallenge);
    }
    let s = file.params.sectors_per_block;
    let mut mu = vec![Scalar::ZERO; s];
    let mut sigma = G1Projective::identity();
    for (index, coeff) in &challenge.entries {
        if *index == 0 || *index > file.tag.block_count {
            return Err(PorError::UnknownBlock(*index, file.tag.block_count));
        }
        let b = (*index - 1) as usize;
        for (j, m) in file.blocks[b].iter().enumerate() {
            mu[j] += coeff * m;
        }
        sigma += G1Projective::from(file.authenticators[b]) * coeff;
    }
    Ok(PorProof {
        sigma: sigma.to_affine(),
        mu,
    })
}

/// Check a proof against the signed tag and the public key.
pub fn verify(
    pk: &PorPublicKey,
    tag: &FileTag,
    challenge: &ChallengeSet,
    proof: &PorProof,
) -> Result<(), PorError> {
    if challenge.is_empty() {
        return Err(PorError::EmptyChallenge);
    }
    if proof.mu.len() != tag.u.len() {
        return Err(PorError::ProofMismatch);
    }
    verify_tag(pk, tag)?;

    let mut agg = G1Projective::identity();
    for (index, coeff) in &challenge.entries {
        if *index == 0 || *index > tag.block_count {
            return Err(PorError::UnknownBlock(*index, tag.block_count));
        }
        agg += block_point(&tag.name, *index) * coeff;
    }
    for (j, u) in tag.u.iter().enumerate() {
        agg += G1Projective::from(u) * proof.mu[j];
    }

    let lhs = pairing(&proof.sigma, &G2Affine::generator());
    let rhs = pairing(&agg.to_affine(), &pk.v);
    if lhs == rhs {
        Ok(())
    } else {
        Err(PorError::ProofMismatch)
    }
}

/// Canonical proof encoding: a 32-byte envelope (domain label and sector
/// count), the `s` aggregated sectors, then the aggregated authenticator.
/// Total: `(1 + s) * 32 + 48` bytes.
pub fn encode_proof(proof: &PorProof) -> Vec<u8> {
    let mut envelope = [0u8; 32];
    envelope[..12].copy_from_slice(b"por-proof-v1");
    envelope[12..14].copy_from_slice(&(proof.mu.len() as u16).to_le_bytes());
    let mut out = Vec::with_capacity(32 * (1 + proof.mu.len()) + 48);
    out.extend_from_slice(&envelope);
    for m in &proof.mu {
        out.extend_from_slice(&m.to_bytes());
    }
    out.extend_from_slice(&proof.sigma.to_compressed());
    out
}

/// Inverse of [`encode_proof`].
pub fn decode_proof(bytes: &[u8]) -> Result<PorProof, PorError> {
    if bytes.len() < 32 + 48 || &bytes[..12] != b"por-proof-v1" {
        return Err(PorError::Encoding("bad envelope"));
    }
    let s = u16::from_le_bytes([bytes[12], bytes[13]]) as usize;
    if bytes.len() != 32 * (1 + s) + 48 {
        return Err(PorError::Encoding("length mismatch"));
    }
    let mut mu = Vec::with_capacity(s);
    for j in 0..s {
        let mut raw = [0u8; 32];
        raw.copy_from_slice(&bytes[32 + 32 * j..64 + 32 * j]);
        let scalar = Option::<Scalar>::from(Scalar::from_bytes(&raw))
            .ok_or(PorError::Encoding("non-canonical scalar"))?;
        mu.push(scalar);
    }
    let mut raw = [0u8; 48];
    raw.copy_from_slice(&bytes[32 * (1 + s)..]);
    let sigma = Option::<G1Affine>::from(G1Affine::from_compressed(&raw))
        .ok_or(PorError::Encoding("bad group point"))?;
    Ok(PorProof { sigma, mu })
}
