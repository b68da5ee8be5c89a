//! Seed derivation and the packed correctness bitmaps shared by the
//! evaluation and sweep code.

use sha2::{Digest, Sha256};

/// Derives an independent sub-seed from a base seed and a list of tags.
///
/// Every sampling site in the pipeline draws from its own derived stream so
/// that adding or reordering one sampling step never perturbs another.
pub fn derive_seed(seed: u64, tags: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for tag in tags {
        hasher.update([0x1f]);
        hasher.update(tag.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Fixed-length bitmap storing one correctness bit per evaluation query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
    len: usize,
}

impl Bitmap {
    pub fn zeros(len: usize) -> Self {
        Bitmap {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// All bits set; used as the degenerate "full subsample" mask.
    pub fn ones(len: usize) -> Self {
        let mut b = Bitmap::zeros(len);
        for i in 0..len {
            b.set(i, true);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(
            index < self.len,
            "bit index {index} out of range {}",
            self.len
        );
        let (word, bit) = (index / 64, index % 64);
        if value {
            self.words[word] |= 1 << bit;
        } else {
            self.words[word] &= !(1 << bit);
        }
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.len,
            "bit index {index} out of range {}",
            self.len
        );
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fraction of set bits over the whole bitmap.
    pub fn fraction_ones(&self) -> f64 {
        self.count_ones() as f64 / self.len as f64
    }

    /// Number of positions set in both bitmaps. Lengths must match.
    pub fn intersect_count(&self, mask: &Bitmap) -> usize {
        assert_eq!(self.len, mask.len, "bitmap length mismatch");
        self.words
            .iter()
            .zip(&mask.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Serializes as a '0'/'1' string so result files stay diffable.
    pub fn to_bit_string(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bit_string(s: &str) -> Option<Self> {
        let mut b = Bitmap::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => b.set(i, true),
                '0' => {}
                _ => return None,
            }
        }
        Some(b)
    }
}

impl serde::Serialize for Bitmap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bit_string())
    }
}

impl<'de> serde::Deserialize<'de> for Bitmap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Bitmap::from_bit_string(&s)
            .ok_or_else(|| serde::de::Error::custom("bitmap must be a string of '0' and '1'"))
    }
}

/// Arithmetic mean; callers guarantee non-empty input.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Index of the maximum value, ties broken by the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_seed_is_stable_and_tag_sensitive() {
        assert_eq!(derive_seed(7, &["a"]), derive_seed(7, &["a"]));
        assert_ne!(derive_seed(7, &["a"]), derive_seed(7, &["b"]));
        assert_ne!(derive_seed(7, &["a", "b"]), derive_seed(7, &["ab"]));
        assert_ne!(derive_seed(7, &["a"]), derive_seed(8, &["a"]));
    }

    #[test]
    fn bitmap_roundtrip_and_counts() {
        let mut b = Bitmap::zeros(70);
        b.set(0, true);
        b.set(63, true);
        b.set(64, true);
        b.set(69, true);
        assert_eq!(b.count_ones(), 4);
        assert!(b.get(64));
        assert!(!b.get(1));
        let s = b.to_bit_string();
        assert_eq!(s.len(), 70);
        assert_eq!(Bitmap::from_bit_string(&s).unwrap(), b);
        assert!(Bitmap::from_bit_string("01x").is_none());
    }

    #[test]
    fn bitmap_intersection_counts_only_shared_bits() {
        let mut a = Bitmap::zeros(10);
        let mut m = Bitmap::zeros(10);
        for i in [1, 3, 5, 7] {
            a.set(i, true);
        }
        for i in [3, 4, 5] {
            m.set(i, true);
        }
        assert_eq!(a.intersect_count(&m), 2);
        assert_eq!(a.intersect_count(&Bitmap::ones(10)), 4);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax(&[0.9]), 0);
    }
}
