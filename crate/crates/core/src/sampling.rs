//! Low-discrepancy sampling for the assumption estimators.
//!
//! The estimators approximate suprema over state boxes, so sample
//! placement matters more than randomness: a Halton sequence covers the
//! box deterministically and reproducibly. A `seed` offsets the sequence
//! start, giving distinct-but-reproducible sample sets.

use nalgebra::DVector;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical-inverse of `index` in base `base`, in `[0, 1)`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// Deterministic Halton point stream in `[0, 1)^dim`.
#[derive(Debug, Clone)]
pub struct HaltonSequence {
    dim: usize,
    index: u64,
}

impl HaltonSequence {
    /// `seed` skips ahead in the sequence so different seeds yield
    /// different (still low-discrepancy) point sets.
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(
            dim <= PRIMES.len(),
            "Halton sampler supports up to {} dimensions",
            PRIMES.len()
        );
        // Skip the degenerate all-zero leading point.
        Self {
            dim,
            index: 1 + seed.wrapping_mul(7919),
        }
    }

    /// Next point in the unit cube.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let idx = self.index;
        self.index += 1;
        (0..self.dim)
            .map(|d| radical_inverse(idx, PRIMES[d]))
            .collect()
    }
}

/// Axis-aligned box of admissible states, `lo ≤ x ≤ hi` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    lo: DVector<f64>,
    hi: DVector<f64>,
}

impl StateBox {
    pub fn new(lo: DVector<f64>, hi: DVector<f64>) -> Result<Self, String> {
        if lo.len() != hi.len() {
            return Err(format!(
                "state box bounds disagree in dimension: {} vs {}",
                lo.len(),
                hi.len()
            ));
        }
        for k in 0..lo.len() {
            if !(lo[k].is_finite() && hi[k].is_finite()) || lo[k] > hi[k] {
                return Err(format!(
                    "state box dimension {k} is invalid: [{}, {}]",
                    lo[k], hi[k]
                ));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Symmetric box `[-half, half]` per dimension.
    pub fn centered(half_widths: DVector<f64>) -> Result<Self, String> {
        let lo = -half_widths.clone();
        Self::new(lo, half_widths)
    }

    /// Smallest box containing every column-state in `points`, then
    /// padded by `pad_fraction` of each width. Degenerate dimensions get
    /// a small absolute floor so sampling stays well defined.
    pub fn bounding(points: &[DVector<f64>], pad_fraction: f64) -> Result<Self, String> {
        let dim = points
            .first()
            .ok_or_else(|| "cannot bound an empty point set".to_string())?
            .len();
        let mut lo = DVector::from_element(dim, f64::INFINITY);
        let mut hi = DVector::from_element(dim, f64::NEG_INFINITY);
        for pt in points {
            for k in 0..dim {
                lo[k] = lo[k].min(pt[k]);
                hi[k] = hi[k].max(pt[k]);
            }
        }
        for k in 0..dim {
            let width = hi[k] - lo[k];
            let center = 0.5 * (hi[k] + lo[k]);
            let pad = (pad_fraction * width).max(1e-6 * center.abs().max(1.0));
            lo[k] -= pad;
            hi[k] += pad;
        }
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<f64> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<f64> {
        &self.hi
    }

    pub fn widths(&self) -> DVector<f64> {
        &self.hi - &self.lo
    }

    /// True when every dimension has strictly positive width.
    pub fn is_nondegenerate(&self) -> bool {
        (0..self.dim()).all(|k| self.hi[k] > self.lo[k])
    }

    /// Maps a unit-cube point into the box.
    pub fn map_unit(&self, unit: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |k, _| {
            self.lo[k] + (self.hi[k] - self.lo[k]) * unit[k]
        })
    }

    /// Difference box `{x − y : x ∈ self, y ∈ other}`.
    pub fn minkowski_difference(&self, other: &StateBox) -> Result<Self, String> {
        if self.dim() != other.dim() {
            return Err("state boxes disagree in dimension".to_string());
        }
        Self::new(&self.lo - &other.hi, &self.hi - &other.lo)
    }
}
