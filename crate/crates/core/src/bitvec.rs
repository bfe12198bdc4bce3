use crate::error::{Error, Result};

/// Packed match indicator: bit `i` is set iff row `i` satisfies the predicate.
///
/// Bits are LSB-first within 32-bit words and every bit at a position
/// `>= n_rows` is zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResultBitVector {
    n_rows: usize,
    words: Vec<u32>,
}

#[inline]
fn word_count(n_rows: usize) -> usize {
    n_rows.div_ceil(32)
}

impl ResultBitVector {
    pub fn zeros(n_rows: usize) -> Self {
        Self { n_rows, words: vec![0; word_count(n_rows)] }
    }

    pub fn ones(n_rows: usize) -> Self {
        let mut v = Self { n_rows, words: vec![u32::MAX; word_count(n_rows)] };
        v.clear_tail();
        v
    }

    /// Wraps raw words, rejecting a wrong word count or set trailing bits.
    pub fn from_words(n_rows: usize, words: Vec<u32>) -> Result<Self> {
        if words.len() != word_count(n_rows) {
            return Err(Error::LengthMismatch { expected: word_count(n_rows), actual: words.len() });
        }
        let v = Self { n_rows, words };
        let mut check = v.clone();
        check.clear_tail();
        if check != v {
            return Err(Error::Format("bits set beyond the last row".into()));
        }
        Ok(v)
    }

    pub fn from_indices(n_rows: usize, rows: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(n_rows);
        for r in rows {
            v.set(r);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_indices(bits.len(), bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i))
    }

    fn clear_tail(&mut self) {
        let rem = self.n_rows % 32;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u32 << rem) - 1;
            }
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u32] {
        &mut self.words
    }

    pub fn get(&self, row: usize) -> bool {
        row < self.n_rows && self.words[row / 32] >> (row % 32) & 1 == 1
    }

    /// Panics if `row` is out of range.
    pub fn set(&mut self, row: usize) {
        assert!(row < self.n_rows, "row {row} out of range for {} rows", self.n_rows);
        self.words[row / 32] |= 1 << (row % 32);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.n_rows != other.n_rows {
            return Err(Error::LengthMismatch { expected: self.n_rows, actual: other.n_rows });
        }
        Ok(())
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect();
        Ok(Self { n_rows: self.n_rows, words })
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Ok(Self { n_rows: self.n_rows, words })
    }

    pub fn not(&self) -> Self {
        let mut v = Self { n_rows: self.n_rows, words: self.words.iter().map(|w| !w).collect() };
        v.clear_tail();
        v
    }

    /// Ascending indices of the set bits.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 32 + bit)
            })
        })
    }

    /// Concatenates word-aligned fragments; every fragment except the last
    /// must cover a multiple of 32 rows.
    pub fn concat(parts: Vec<ResultBitVector>) -> Result<Self> {
        let mut n_rows = 0;
        let mut words = Vec::new();
        let count = parts.len();
        for (i, p) in parts.into_iter().enumerate() {
            if i + 1 < count && p.n_rows % 32 != 0 {
                return Err(Error::Format("fragment not aligned to a 32-row boundary".into()));
            }
            n_rows += p.n_rows;
            words.extend(p.words);
        }
        Ok(Self { n_rows, words })
    }
}
