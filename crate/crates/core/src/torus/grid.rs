use crate::error::{Error, Result};

/// Uniform periodic grid on the unit flat torus.
///
/// Cells are indexed with axis 0 varying fastest. Cell `i` along an axis
/// covers `[i h, (i + 1) h)`; samples are taken at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub const MIN_N: usize = 16;
    pub const MAX_N: usize = 4096;

    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !n.is_power_of_two() || !(Self::MIN_N..=Self::MAX_N).contains(&n) {
            return Err(Error::NonPowerOfTwo(n));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell width `1 / N`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of cells, `N^n`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        coords.iter().rev().fold(0, |acc, &c| acc * self.n + c)
    }

    /// Index of the cell reached from `coords` by a signed lattice shift, with wrap-around.
    pub fn shifted_index(&self, coords: &[usize], shift: &[i64]) -> usize {
        let n = self.n as i64;
        let mut idx = 0usize;
        for k in (0..self.dim).rev() {
            let c = (coords[k] as i64 + shift[k]).rem_euclid(n) as usize;
            idx = idx * self.n + c;
        }
        idx
    }

    pub fn coords(&self, mut index: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for c in out.iter_mut().take(self.dim) {
            *c = index % self.n;
            index /= self.n;
        }
        out
    }

    /// Minimal-image signed lattice offset of a cell index, each component in `(-N/2, N/2]`.
    pub fn signed_offset(&self, index: usize) -> [i64; 3] {
        let c = self.coords(index);
        let n = self.n as i64;
        let mut out = [0i64; 3];
        for k in 0..self.dim {
            let v = c[k] as i64;
            out[k] = if v > n / 2 { v - n } else { v };
        }
        out
    }

    /// Cell-center position in `[0, 1)^n`.
    pub fn center(&self, index: usize) -> [f64; 3] {
        let c = self.coords(index);
        let h = self.h();
        let mut x = [0.0; 3];
        for k in 0..self.dim {
            x[k] = (c[k] as f64 + 0.5) * h;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_contract() {
        let g = TorusGrid::new(2, 256).unwrap();
        assert_eq!(g.len(), 65536);
        assert_eq!(g.h(), 1.0 / 256.0);
        assert_eq!(g.h() * g.n() as f64, 1.0);
        assert_eq!(TorusGrid::new(3, 64).unwrap().len(), 262_144);
        assert_eq!(TorusGrid::new(2, 100), Err(Error::NonPowerOfTwo(100)));
        assert_eq!(TorusGrid::new(2, 8), Err(Error::NonPowerOfTwo(8)));
        assert_eq!(TorusGrid::new(2, 8192), Err(Error::NonPowerOfTwo(8192)));
        assert_eq!(TorusGrid::new(4, 64), Err(Error::UnsupportedDimension(4)));
    }

    #[test]
    fn index_roundtrip_and_wrap() {
        let g = TorusGrid::new(3, 16).unwrap();
        for idx in [0usize, 1, 17, 300, 4095] {
            let c = g.coords(idx);
            assert_eq!(g.index(&c[..3]), idx);
        }
        assert_eq!(g.shifted_index(&[0, 0, 0], &[-1, 0, 0]), g.index(&[15, 0, 0]));
        assert_eq!(g.shifted_index(&[15, 15, 15], &[1, 1, 1]), 0);
        assert_eq!(g.signed_offset(g.index(&[15, 8, 9]))[..3], [-1, 8, -7]);
    }
}
