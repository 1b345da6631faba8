//! Fixed-width subsets of a constraint universe.

use std::fmt;

const WORD: usize = 64;

/// A subset of `{0, .., width-1}` stored as a bit mask.
///
/// Bit `i` set means constraint `i` (0-based, i.e. DIMACS clause `i+1`)
/// is in the subset. All set-algebra operations preserve `width`; mixing
/// masks of different widths is a logic error and panics.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    width: usize,
    words: Vec<u64>,
}

impl SubsetMask {
    pub fn empty(width: usize) -> Self {
        SubsetMask {
            width,
            words: vec![0; width.div_ceil(WORD)],
        }
    }

    pub fn full(width: usize) -> Self {
        let mut m = Self::empty(width);
        for w in m.words.iter_mut() {
            *w = !0;
        }
        m.trim();
        m
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(width: usize, indices: I) -> Self {
        let mut m = Self::empty(width);
        for i in indices {
            m.insert(i);
        }
        m
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_indices(
            bits.len(),
            bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i),
        )
    }

    fn trim(&mut self) {
        let rem = self.width % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        assert!(
            i < self.width,
            "index {i} out of range for width {}",
            self.width
        );
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) -> bool {
        assert!(
            i < self.width,
            "index {i} out of range for width {}",
            self.width
        );
        let had = self.contains(i);
        self.words[i / WORD] |= 1 << (i % WORD);
        !had
    }

    #[inline]
    pub fn remove(&mut self, i: usize) -> bool {
        assert!(
            i < self.width,
            "index {i} out of range for width {}",
            self.width
        );
        let had = self.contains(i);
        self.words[i / WORD] &= !(1 << (i % WORD));
        had
    }

    /// Number of members (popcount).
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.width
    }

    fn same_width(&self, other: &Self) {
        assert_eq!(self.width, other.width, "subset width mismatch");
    }

    pub fn union(&self, other: &Self) -> Self {
        self.same_width(other);
        SubsetMask {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.same_width(other);
        SubsetMask {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.same_width(other);
        SubsetMask {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }

    pub fn complement(&self) -> Self {
        let mut m = SubsetMask {
            width: self.width,
            words: self.words.iter().map(|w| !w).collect(),
        };
        m.trim();
        m
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.same_width(other);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn is_superset(&self, other: &Self) -> bool {
        other.is_subset(self)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + b)
                }
            })
        })
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.contains(i)).collect()
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubsetMask({}/{:?})", self.width, self.to_indices())
    }
}
