//! Multi-scale bag-of-regularity features.
//!
//! For every active day of a binary daily sequence a window of length
//! `ℓ_s = 2 + (s-1)·z` is cut around it (scales `s = 1..=S`), padded with
//! zeros past either end. Windows are counted per pattern; since every
//! window contains its active center, the all-zero pattern never occurs and
//! each scale yields `2^ℓ - 1` counts.
//!
//! Centering: odd lengths are symmetric. Even lengths put the extra cell on
//! the right, so the window for center `i` is `[i - ℓ/2 + 1, i + ℓ/2]`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Longest window supported; `2^24 - 1` counts per block is already unwieldy.
pub const MAX_WINDOW: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityConfig {
    /// Maximum scale `S`.
    pub max_scale: usize,
    /// Step `z` between consecutive window lengths.
    pub scale_step: usize,
    /// Patterns seen fewer than this many times are zeroed.
    pub min_count: usize,
    pub normalize: bool,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            max_scale: 4,
            scale_step: 1,
            min_count: 1,
            normalize: false,
        }
    }
}

impl RegularityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_scale == 0 || self.scale_step == 0 || self.min_count == 0 {
            return Err(Error::validation(
                "regularity max_scale, scale_step and min_count must be >= 1",
            ));
        }
        if self.window_len(self.max_scale) > MAX_WINDOW {
            return Err(Error::validation(format!(
                "regularity window length {} exceeds {MAX_WINDOW}",
                self.window_len(self.max_scale)
            )));
        }
        Ok(())
    }

    /// Window length at 1-based `scale`.
    pub fn window_len(&self, scale: usize) -> usize {
        2 + (scale - 1) * self.scale_step
    }

    pub fn window_lens(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.max_scale).map(|s| self.window_len(s))
    }

    /// Total vector width, `Σ_s (2^ℓ_s - 1)`.
    pub fn width(&self) -> usize {
        self.window_lens().map(block_width).sum()
    }

    /// Column names `{prefix}_l{ℓ}_{pattern bits}`.
    pub fn column_names(&self, prefix: &str) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for len in self.window_lens() {
            for code in 1..(1u64 << len) {
                names.push(format!("{prefix}_l{len}_{code:0len$b}"));
            }
        }
        names
    }
}

pub fn block_width(len: usize) -> usize {
    (1usize << len) - 1
}

/// Per-scale pattern counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityVector<T> {
    pub blocks: Vec<Vec<T>>,
}

impl<T: Scalar> RegularityVector<T> {
    pub fn width(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn concatenated(&self) -> Vec<T> {
        self.blocks.iter().flatten().copied().collect()
    }

    pub fn into_concatenated(self) -> Vec<T> {
        self.blocks.into_iter().flatten().collect()
    }
}

/// Big-endian pattern code of the window centered on every active bit.
fn window_codes(bits: &[u8], len: usize) -> Vec<u64> {
    let left = (len - 1) / 2;
    let n = bits.len() as isize;
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0)
        .map(|(i, _)| {
            let lo = i as isize - left as isize;
            (0..len as isize).fold(0u64, |code, k| {
                let pos = lo + k;
                let bit = pos >= 0 && pos < n && bits[pos as usize] != 0;
                (code << 1) | u64::from(bit)
            })
        })
        .collect()
}

/// One zero-padded window of length `len` per nonzero position of `bits`.
pub fn sample_windows(bits: &[u8], len: usize) -> Vec<Vec<u8>> {
    assert!(len >= 2, "window length must be at least 2");
    window_codes(bits, len)
        .into_iter()
        .map(|code| (0..len).rev().map(|k| ((code >> k) & 1) as u8).collect())
        .collect()
}

fn counts_from_codes<T: Scalar>(codes: impl IntoIterator<Item = u64>, len: usize, min_count: usize) -> Vec<T> {
    let mut counts = vec![0usize; block_width(len)];
    for code in codes {
        debug_assert!(code != 0, "window without an active day");
        counts[(code - 1) as usize] += 1;
    }
    counts
        .into_iter()
        .map(|c| if c < min_count { T::zero() } else { T::from_count(c) })
        .collect()
}

/// Count windows by pattern: entry `code - 1` holds the count of the
/// pattern whose bits read as the big-endian integer `code`.
pub fn bag_counts<T: Scalar>(windows: &[Vec<u8>], len: usize, min_count: usize) -> Vec<T> {
    let codes = windows.iter().map(|w| {
        assert_eq!(w.len(), len, "window length mismatch");
        w.iter().fold(0u64, |c, &b| (c << 1) | u64::from(b != 0))
    });
    counts_from_codes(codes, len, min_count)
}

/// Regularity vector of `bits` across all configured scales.
pub fn extract<T: Scalar>(bits: &[u8], cfg: &RegularityConfig) -> RegularityVector<T> {
    let active = bits.iter().filter(|&&b| b != 0).count();
    let scale = T::from_count(active.max(1));
    let blocks = cfg
        .window_lens()
        .map(|len| {
            let mut block = counts_from_codes::<T>(window_codes(bits, len), len, cfg.min_count);
            if cfg.normalize {
                block.iter_mut().for_each(|v| *v = *v / scale);
            }
            block
        })
        .collect();
    RegularityVector { blocks }
}
