//! Binary substitution masks.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Diagonal of the binary substitution matrix: bit `j` set means metric `j`
/// is taken from the distractor.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubstitutionMask {
    bits: Vec<bool>,
}

impl SubstitutionMask {
    pub fn empty(num_metrics: usize) -> Self {
        Self {
            bits: vec![false; num_metrics],
        }
    }

    pub fn full(num_metrics: usize) -> Self {
        Self {
            bits: vec![true; num_metrics],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Panics if an index is out of range.
    pub fn from_indices(num_metrics: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(num_metrics);
        for i in indices {
            mask.bits[i] = true;
        }
        mask
    }

    /// Number of metrics the mask spans, `m`.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `‖A‖₁`.
    pub fn cardinality(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, metric: usize) -> bool {
        self.bits[metric]
    }

    pub fn set(&mut self, metric: usize, value: bool) {
        self.bits[metric] = value;
    }

    pub fn flip(&mut self, metric: usize) {
        self.bits[metric] = !self.bits[metric];
    }

    pub fn with(&self, metric: usize) -> Self {
        let mut out = self.clone();
        out.bits[metric] = true;
        out
    }

    pub fn without(&self, metric: usize) -> Self {
        let mut out = self.clone();
        out.bits[metric] = false;
        out
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Set bit positions in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Number of positions where the masks differ.
    pub fn hamming(&self, other: &SubstitutionMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }

    /// The mask as a 0/1 vector.
    pub fn to_binary_vector(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

impl fmt::Debug for SubstitutionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SubstitutionMask{{")?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.bits.len())
    }
}

impl Serialize for SubstitutionMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.bits.iter().map(|&b| b as u8))
    }
}

impl<'de> Deserialize<'de> for SubstitutionMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(deserializer)?;
        let bits = raw
            .into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(D::Error::custom(format!("mask entries must be 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { bits })
    }
}
