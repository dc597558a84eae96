//! Sampled state fields on a space-time lattice `[t0, t0 + T) x T^k`.
//!
//! Nodes are stored time-major; within a time slice spatial axis 1 is the
//! slowest. Values are interleaved per node: `values[node * n + c]`.

mod besov;
mod generate;
mod io;

pub use besov::{estimate_besov, shift_difference_norm, BesovEstimate, BESOV_MIN_SHIFTS};
pub use generate::{
    lacunary_phases, lacunary_profile, make_lacunary_field, make_shear_field, make_shock_field,
    LacunaryParams, PhaseLaw,
};
pub use io::{read_binary, write_binary, write_csv, CSV_MAX_NODES};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Smallest admissible count along any axis.
pub const MIN_AXIS_COUNT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    /// Space dimension.
    pub k: usize,
    pub n_time: usize,
    /// Samples per spatial axis.
    pub n_space: usize,
    pub extent_time: f64,
    /// Period of every spatial axis.
    pub extent_space: f64,
    #[serde(default)]
    pub origin_time: f64,
}

impl Lattice {
    pub fn new(
        k: usize,
        n_time: usize,
        n_space: usize,
        extent_time: f64,
        extent_space: f64,
    ) -> Result<Self> {
        let lattice = Lattice {
            k,
            n_time,
            n_space,
            extent_time,
            extent_space,
            origin_time: 0.0,
        };
        lattice.validate()?;
        Ok(lattice)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(LabError::Parameter(
                "space dimension must be at least 1".into(),
            ));
        }
        if self.n_time < MIN_AXIS_COUNT || self.n_space < MIN_AXIS_COUNT {
            return Err(LabError::Parameter(format!(
                "lattice counts must be >= {MIN_AXIS_COUNT}, got n_time={}, n_space={}",
                self.n_time, self.n_space
            )));
        }
        for (what, v) in [
            ("extent_time", self.extent_time),
            ("extent_space", self.extent_space),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LabError::Parameter(format!(
                    "{what} must be positive, got {v}"
                )));
            }
        }
        if !self.origin_time.is_finite() {
            return Err(LabError::Parameter("origin_time must be finite".into()));
        }
        self.n_space
            .checked_pow(self.k as u32)
            .and_then(|s| s.checked_mul(self.n_time))
            .ok_or_else(|| LabError::Parameter("lattice too large".into()))?;
        Ok(())
    }

    pub fn h_time(&self) -> f64 {
        self.extent_time / self.n_time as f64
    }

    pub fn h_space(&self) -> f64 {
        self.extent_space / self.n_space as f64
    }

    /// Number of axes, `k + 1`.
    pub fn axes(&self) -> usize {
        self.k + 1
    }

    /// Count along `axis` (0 = time).
    pub fn count(&self, axis: usize) -> usize {
        if axis == 0 {
            self.n_time
        } else {
            self.n_space
        }
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.h_time()
        } else {
            self.h_space()
        }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.extent_time
        } else {
            self.extent_space
        }
    }

    pub fn spatial_nodes(&self) -> usize {
        self.n_space.pow(self.k as u32)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_time * self.spatial_nodes()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h_time() * self.h_space().powi(self.k as i32)
    }

    /// Index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            self.spatial_nodes()
        } else {
            self.n_space.pow((self.k - axis) as u32)
        }
    }

    /// Per-axis indices of `node`.
    pub fn multi_index(&self, node: usize, out: &mut [usize]) {
        out[0] = node / self.spatial_nodes();
        let mut rest = node % self.spatial_nodes();
        for a in (1..=self.k).rev() {
            out[a] = rest % self.n_space;
            rest /= self.n_space;
        }
    }

    /// Coordinate of index `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if axis == 0 {
            self.origin_time + i as f64 * self.h_time()
        } else {
            i as f64 * self.h_space()
        }
    }

    /// `(t, x_1, ..., x_k)` of `node`.
    pub fn point(&self, node: usize, out: &mut [f64]) {
        let mut idx = vec![0usize; self.axes()];
        self.multi_index(node, &mut idx);
        for (a, i) in idx.iter().enumerate() {
            out[a] = self.coordinate(a, *i);
        }
    }
}

/// A state field sampled at every lattice node. Spatial axes are periodic;
/// time is periodic only when `periodic_time` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub lattice: Lattice,
    /// State dimension.
    pub n: usize,
    pub values: Vec<f64>,
    pub periodic_time: bool,
    /// Name of the system whose domain the values were checked against.
    pub system: Option<String>,
    /// Generator notes, e.g. adjustments of the time extent.
    pub notes: Vec<String>,
}

impl DiscreteField {
    pub fn new(lattice: Lattice, n: usize, values: Vec<f64>, periodic_time: bool) -> Result<Self> {
        lattice.validate()?;
        if n == 0 || values.len() != lattice.n_nodes() * n {
            return Err(LabError::Parameter(format!(
                "expected {} values for {} nodes of dimension {n}, got {}",
                lattice.n_nodes() * n,
                lattice.n_nodes(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Parameter(format!(
                "non-finite value at node {}",
                i / n
            )));
        }
        Ok(DiscreteField {
            lattice,
            n,
            values,
            periodic_time,
            system: None,
            notes: Vec::new(),
        })
    }

    /// Sample `f(point, out)` at every node.
    pub fn from_fn(
        lattice: Lattice,
        n: usize,
        periodic_time: bool,
        f: impl Fn(&[f64], &mut [f64]) + Sync,
    ) -> Result<Self> {
        use rayon::prelude::*;
        lattice.validate()?;
        let mut values = vec![0.0; lattice.n_nodes() * n];
        let axes = lattice.axes();
        values
            .par_chunks_mut(n * 1024)
            .enumerate()
            .for_each(|(c, chunk)| {
                let mut p = vec![0.0; axes];
                for (j, out) in chunk.chunks_mut(n).enumerate() {
                    lattice.point(c * 1024 + j, &mut p);
                    f(&p, out);
                }
            });
        DiscreteField::new(lattice, n, values, periodic_time)
    }

    pub fn n_nodes(&self) -> usize {
        self.lattice.n_nodes()
    }

    pub fn state(&self, node: usize) -> &[f64] {
        &self.values[node * self.n..(node + 1) * self.n]
    }

    /// Copy of component `c`.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.n)
            .copied()
            .collect()
    }

    /// Per-component minimum and maximum.
    pub fn range_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.n];
        let mut hi = vec![f64::NEG_INFINITY; self.n];
        for s in self.values.chunks(self.n) {
            for c in 0..self.n {
                lo[c] = lo[c].min(s[c]);
                hi[c] = hi[c].max(s[c]);
            }
        }
        (lo, hi)
    }

    /// `a * self + b * other` on the same lattice.
    pub fn combine(&self, a: f64, other: &DiscreteField, b: f64) -> Result<DiscreteField> {
        if self.lattice != other.lattice || self.n != other.n {
            return Err(LabError::Parameter(
                "fields live on different lattices".into(),
            ));
        }
        let mut out = self.clone();
        for (x, y) in out.values.iter_mut().zip(&other.values) {
            *x = a * *x + b * y;
        }
        Ok(out)
    }

    /// Circular index shift: `out(i) = self(i - offset)` along `axis`.
    /// Time may only be rolled when periodic.
    pub fn roll(&self, axis: usize, offset: isize) -> Result<DiscreteField> {
        if axis > self.lattice.k {
            return Err(LabError::Parameter(format!("axis {axis} out of range")));
        }
        if axis == 0 && !self.periodic_time {
            return Err(LabError::Parameter(
                "cannot roll a non-periodic time axis".into(),
            ));
        }
        let count = self.lattice.count(axis);
        let stride = self.lattice.stride(axis);
        let block = stride * count;
        let shift = offset.rem_euclid(count as isize) as usize;
        let mut out = self.clone();
        let n = self.n;
        for base in (0..self.n_nodes()).step_by(block) {
            for i in 0..count {
                let j = (i + shift) % count;
                let src = (base + i * stride) * n;
                let dst = (base + j * stride) * n;
                out.values[dst..dst + stride * n]
                    .copy_from_slice(&self.values[src..src + stride * n]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_round_trips() {
        let l = Lattice::new(2, 8, 16, 1.0, 2.0).unwrap();
        let mut idx = [0usize; 3];
        let node = 3 * 256 + 5 * 16 + 7;
        l.multi_index(node, &mut idx);
        assert_eq!(idx, [3, 5, 7]);
        let mut p = [0.0; 3];
        l.point(node, &mut p);
        assert_eq!(p, [3.0 / 8.0, 5.0 / 8.0, 7.0 / 8.0]);
        assert_eq!(l.stride(1), 16);
        assert_eq!(l.stride(2), 1);
    }

    #[test]
    fn small_lattices_rejected() {
        assert!(Lattice::new(1, 4, 64, 1.0, 1.0).is_err());
        assert!(Lattice::new(1, 8, 64, 0.0, 1.0).is_err());
    }

    #[test]
    fn roll_moves_values() {
        let l = Lattice::new(1, 8, 8, 1.0, 1.0).unwrap();
        let f = DiscreteField::from_fn(l, 1, true, |p, o| o[0] = p[0] * 10.0 + p[1]).unwrap();
        let g = f.roll(1, 3).unwrap();
        let back = g.roll(1, -3).unwrap();
        assert_eq!(f, back);
        assert_eq!(g.values[3], f.values[0]);
        let h = f.roll(0, 1).unwrap();
        assert_eq!(h.values[8], f.values[0]);
    }
}
