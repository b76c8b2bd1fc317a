//! Binary run patterns and the Hölder exponents attached to their runs of ones.

use crate::error::{Error, Result};

/// Largest `m` for which patterns are enumerated (`2^(2m-1)` candidates).
pub const MAX_PATTERN_M: usize = 8;

/// A vector `s` in `{0,1}^{2m-1}` with no two consecutive zeros and `s_{2m-1} = 1`.
///
/// Positions are 1-based; every position outside `[1, 2m-1]` reads as `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunPattern {
    m: usize,
    bits: Vec<u8>,
}

impl RunPattern {
    pub fn new(m: usize, bits: Vec<u8>) -> Result<Self> {
        if m == 0 || bits.len() != 2 * m - 1 {
            return Err(Error::ParamOutOfRange(format!("pattern for m = {m} needs {} bits", (2 * m).saturating_sub(1))));
        }
        let pattern = Self { m, bits };
        if !pattern.is_admissible() {
            return Err(Error::ParamOutOfRange(format!("{pattern} is not admissible")));
        }
        Ok(pattern)
    }

    fn is_admissible(&self) -> bool {
        let len = self.len() as i64;
        self.bits.iter().all(|&b| b <= 1) && self.bit(len) == 1 && (1..len).all(|j| self.bit(j) + self.bit(j + 1) > 0)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// `s_i`, with `s_i = 0` for `i <= 0` and `i >= 2m`.
    pub fn bit(&self, i: i64) -> u8 {
        if i >= 1 && (i as usize) <= self.bits.len() {
            self.bits[i as usize - 1]
        } else {
            0
        }
    }

    /// First and last index of the run of ones containing `j` (which must have `s_j = 1`).
    pub fn run_bounds(&self, j: usize) -> (usize, usize) {
        debug_assert_eq!(self.bit(j as i64), 1);
        let mut first = j as i64;
        while self.bit(first - 1) == 1 {
            first -= 1;
        }
        let mut last = j as i64;
        while self.bit(last + 1) == 1 {
            last += 1;
        }
        (first as usize, last as usize)
    }

    /// Indices `j` with `s_j = 1`, increasing.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.len()).filter(|&j| self.bit(j as i64) == 1)
    }
}

impl std::fmt::Display for RunPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Every admissible pattern of length `2m - 1`, in lexicographic order.
pub fn admissible_patterns(m: usize) -> Result<Vec<RunPattern>> {
    if m == 0 {
        return Err(Error::ParamOutOfRange("m must be at least 1".into()));
    }
    if m > MAX_PATTERN_M {
        return Err(Error::BudgetExceeded {
            what: "pattern enumeration",
            needed: 2f64.powi(2 * m as i32 - 1),
            cap: 2f64.powi(2 * MAX_PATTERN_M as i32 - 1),
        });
    }
    let len = 2 * m - 1;
    let mut out = Vec::new();
    for code in 0u32..(1 << len) {
        // most significant bit is s_1, so increasing codes are lexicographic
        let bits: Vec<u8> = (0..len).map(|k| ((code >> (len - 1 - k)) & 1) as u8).collect();
        let candidate = RunPattern { m, bits };
        if candidate.is_admissible() {
            out.push(candidate);
        }
    }
    Ok(out)
}

/// Exponents attached to one position `j` with `s_j = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderExponent {
    pub j: usize,
    pub i1: usize,
    pub i2: usize,
    /// `4m / (2m + i1 + i2 - 2j)`.
    pub p: f64,
    /// `1 - |i1 + i2 - 2j| / (2m)`.
    pub beta: f64,
}

/// The exponents of every one-position of a pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentAssignment {
    pub m: usize,
    pub entries: Vec<HolderExponent>,
}

impl ExponentAssignment {
    pub fn get(&self, j: usize) -> Option<&HolderExponent> {
        self.entries.iter().find(|e| e.j == j)
    }

    /// `prod_j 1/beta(s, j)`.
    pub fn inverse_beta_product(&self) -> f64 {
        self.entries.iter().map(|e| 1.0 / e.beta).product()
    }
}

pub fn holder_exponents(s: &RunPattern) -> ExponentAssignment {
    let m = s.m() as f64;
    let entries = s
        .ones()
        .map(|j| {
            let (i1, i2) = s.run_bounds(j);
            let centre = i1 as i64 + i2 as i64 - 2 * j as i64;
            HolderExponent {
                j,
                i1,
                i2,
                p: 4.0 * m / (2.0 * m + centre as f64),
                beta: 1.0 - centre.unsigned_abs() as f64 / (2.0 * m),
            }
        })
        .collect();
    ExponentAssignment { m: s.m(), entries }
}
