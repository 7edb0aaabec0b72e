//! Bit-level file chunking into field sectors.

use bls12_381::Scalar;

use crate::params::SECTOR_WIDTH_BITS;

/// Extract the `index`-th sector (little-endian bit order) as a canonical
/// field element. Bits past the end of the data read as zero, so the final
/// sector is implicitly zero-padded.
pub fn sector(data: &[u8], index: usize) -> Scalar {
    let mut bytes = [0u8; 32];
    let base = index * SECTOR_WIDTH_BITS;
    for bit in 0..SECTOR_WIDTH_BITS {
        let pos = base + bit;
        let byte = pos / 8;
        if byte >= data.len() {
            break;
        }
        if data[byte] >> (pos % 8) & 1 == 1 {
            bytes[bit / 8] |= 1 << (bit % 8);
        }
    }
    // A 253-bit value is always below the 255-bit field modulus.
    Scalar::from_bytes(&bytes).expect("sector below modulus")
}

/// Split `data` into `block_count` blocks of `sectors_per_block` sectors.
pub fn blocks(data: &[u8], block_count: u64, sectors_per_block: usize) -> Vec<Vec<Scalar>> {
    (0..block_count as usize)
        .map(|b| {
            (0..sectors_per_block)
                .map(|s| sector(data, b * sectors_per_block + s))
                .collect()
        })
        .collect()
}
