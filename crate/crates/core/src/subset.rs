//! Feature subsets as fixed-width bitmasks.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest feature count a subset can address.
pub const MAX_DIM: usize = 63;

/// Largest feature count for which all `2^d` subsets may be enumerated.
pub const MAX_ENUMERATION_DIM: usize = 25;

/// A subset `S ⊆ D = {0, .., dim-1}`; bit `i` is set iff feature `i ∈ S`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSubset {
    bits: u64,
    dim: u8,
}

impl FeatureSubset {
    pub fn empty(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dim {dim} out of range");
        Self { bits: 0, dim: dim as u8 }
    }

    pub fn full(dim: usize) -> Self {
        Self { bits: full_mask(dim), ..Self::empty(dim) }
    }

    pub fn from_bits(bits: u64, dim: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        if bits & !full_mask(dim) != 0 {
            return Err(Error::PreconditionViolation(format!(
                "bitmask {bits:#b} has bits at or above dim {dim}"
            )));
        }
        Ok(Self { bits, dim: dim as u8 })
    }

    pub fn from_indices(indices: &[usize], dim: usize) -> Result<Self> {
        let mut s = Self::from_bits(0, dim)?;
        for &i in indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, len: dim });
            }
            s.bits |= 1 << i;
        }
        Ok(s)
    }

    /// Internal constructor for masks already known to be in range.
    pub(crate) fn from_bits_unchecked(bits: u64, dim: usize) -> Self {
        debug_assert!(bits & !full_mask(dim) == 0);
        Self { bits, dim: dim as u8 }
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn is_full(self) -> bool {
        self.bits == full_mask(self.dim())
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i < self.dim() && self.bits >> i & 1 == 1
    }

    /// `S ∪ {i}`.
    #[inline]
    pub fn with(self, i: usize) -> Self {
        assert!(i < self.dim());
        Self { bits: self.bits | 1 << i, ..self }
    }

    /// `S \ {i}`.
    #[inline]
    pub fn without(self, i: usize) -> Self {
        assert!(i < self.dim());
        Self { bits: self.bits & !(1 << i), ..self }
    }

    /// `D \ S`.
    #[inline]
    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_mask(self.dim()), ..self }
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self { bits: self.bits | other.bits, ..self }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Member indices in ascending order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut bits = self.bits;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.indices().collect()
    }
}

impl fmt::Debug for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.dim)
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.indices())
    }
}

#[inline]
pub fn full_mask(dim: usize) -> u64 {
    if dim >= 64 {
        u64::MAX
    } else {
        (1u64 << dim) - 1
    }
}

pub fn subset_complement(s: FeatureSubset) -> FeatureSubset {
    s.complement()
}

fn check_enumerable(dim: usize) -> Result<()> {
    if dim > MAX_ENUMERATION_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_ENUMERATION_DIM });
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("feature count must be at least 1".into()));
    }
    Ok(())
}

/// All `2^d` subsets in ascending bitmask order.
pub fn enumerate_subsets(dim: usize) -> Result<impl ExactSizeIterator<Item = FeatureSubset>> {
    check_enumerable(dim)?;
    Ok((0..1usize << dim).map(move |bits| FeatureSubset::from_bits_unchecked(bits as u64, dim)))
}

/// All subsets of size `k` in ascending bitmask order (Gosper's hack).
pub fn subsets_of_size(dim: usize, k: usize) -> impl Iterator<Item = FeatureSubset> {
    assert!(dim <= MAX_DIM && k <= dim);
    let limit = 1u64 << dim;
    let mut next = Some((1u64 << k) - 1);
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit {
            return None;
        }
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            Some((((r ^ cur) >> 2) / c) | r)
        };
        Some(FeatureSubset::from_bits_unchecked(cur, dim))
    })
}

/// Binomial coefficient as a float; exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
