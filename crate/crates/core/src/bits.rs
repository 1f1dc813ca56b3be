//! Natural-binary (MSB first) conversion between message indices and bit vectors.

use crate::error::{Error, Result};

/// Hard bit, always 0 or 1.
pub type Bit = u8;

/// Bits of `index`, MSB first, padded to `width`.
pub fn index_to_bits(index: usize, width: usize) -> Vec<Bit> {
    let mut out = vec![0; width];
    write_index_bits(index, &mut out);
    out
}

/// Writes the natural-binary label of `index` into `out` (MSB first).
#[inline]
pub fn write_index_bits(index: usize, out: &mut [Bit]) {
    let width = out.len();
    for (i, b) in out.iter_mut().enumerate() {
        *b = ((index >> (width - 1 - i)) & 1) as Bit;
    }
}

/// Integer value of an MSB-first bit vector.
pub fn bits_to_index(bits: &[Bit]) -> Result<usize> {
    if bits.len() >= usize::BITS as usize {
        return Err(Error::domain(format!("{} bits do not fit an index", bits.len())));
    }
    bits.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as usize),
        other => Err(Error::domain(format!("bit value {other} is not 0 or 1"))),
    })
}

/// Number of positions where the two vectors differ.
pub fn hamming(a: &[Bit], b: &[Bit]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first() {
        assert_eq!(index_to_bits(1, 2), vec![0, 1]);
        assert_eq!(index_to_bits(2, 2), vec![1, 0]);
        assert_eq!(bits_to_index(&[1, 1, 0]).unwrap(), 6);
    }

    #[test]
    fn rejects_non_binary() {
        assert!(bits_to_index(&[0, 2]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(width in 1usize..20, raw in any::<usize>()) {
            let index = raw % (1usize << width);
            prop_assert_eq!(bits_to_index(&index_to_bits(index, width)).unwrap(), index);
        }
    }
}
