//! Binary fields sampled at cell centers of a periodic grid.

use std::io::{self, Write};

use super::grid::TorusGrid;
use super::shape::{PerimeterEstimate, PerimeterMethod, ShapeSpec};
use crate::error::{Error, Result};

/// A `{0, 1}`-valued function on the cells of a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryField {
    grid: TorusGrid,
    values: Vec<u8>,
    ones: usize,
}

impl BinaryField {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { values: vec![0; grid.len()], grid, ones: 0 }
    }

    pub fn ones(grid: TorusGrid) -> Self {
        Self { values: vec![1; grid.len()], ones: grid.len(), grid }
    }

    /// Builds a field from cell values; any nonzero entry counts as 1.
    pub fn from_values(grid: TorusGrid, values: Vec<u8>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("expected {} cell values, got {}", grid.len(), values.len())));
        }
        let values: Vec<u8> = values.into_iter().map(|v| u8::from(v != 0)).collect();
        let ones = values.iter().filter(|&&v| v == 1).count();
        Ok(Self { grid, values, ones })
    }

    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(usize) -> bool) -> Self {
        let values: Vec<u8> = (0..grid.len()).map(|i| u8::from(f(i))).collect();
        let ones = values.iter().filter(|&&v| v == 1).count();
        Self { grid, values, ones }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, index: usize) -> bool {
        self.values[index] != 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    /// Exact fraction of 1-cells.
    pub fn volume_fraction(&self) -> f64 {
        self.ones as f64 / self.grid.len() as f64
    }

    /// Exchanges the values of two cells. Only swaps of unequal values change anything,
    /// so the number of 1-cells is preserved.
    pub fn swap(&mut self, a: usize, b: usize) {
        self.values.swap(a, b);
    }

    pub fn complement(&self) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| 1 - v).collect(), ones: self.grid.len() - self.ones }
    }

    /// Periodic translation by a whole number of cells along each axis.
    pub fn translate(&self, shift: &[i64]) -> Self {
        let mut out = vec![0u8; self.values.len()];
        let d = self.grid.dim();
        for (i, &v) in self.values.iter().enumerate() {
            let c = self.grid.coords(i);
            out[self.grid.shifted_index(&c[..d], shift)] = v;
        }
        Self { grid: self.grid, values: out, ones: self.ones }
    }

    /// FNV-1a hash of the grid shape and cell values.
    pub fn checksum(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write(&(self.grid.dim() as u64).to_le_bytes());
        h.write(&(self.grid.n() as u64).to_le_bytes());
        h.write(&self.values);
        h.finish()
    }

    /// Writes the field as a plain portable graymap with values 0/1.
    /// Three-dimensional fields are written as a stack of slices along the last axis.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.grid.n();
        let rows = self.grid.len() / n;
        writeln!(w, "P2")?;
        writeln!(w, "# dim={} n={}", self.grid.dim(), n)?;
        writeln!(w, "{n} {rows}")?;
        writeln!(w, "1")?;
        for row in self.values.chunks(n) {
            let line: Vec<&str> = row.iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Samples the shape at cell centers.
pub fn rasterize(shape: &ShapeSpec, grid: TorusGrid) -> Result<BinaryField> {
    shape.validate()?;
    if let Some(d) = shape.dim() {
        if d != grid.dim() {
            return Err(Error::DimensionMismatch { shape: d, grid: grid.dim() });
        }
    }
    if let ShapeSpec::Laminate { axis, .. } = shape {
        if *axis >= grid.dim() {
            return Err(Error::DimensionMismatch { shape: axis + 1, grid: grid.dim() });
        }
    }
    let d = grid.dim();
    Ok(BinaryField::from_fn(grid, |i| {
        let c = grid.center(i);
        shape.contains(&c[..d])
    }))
}

/// Anisotropic perimeter: `h^{n-1}` times the number of axis-adjacent cell pairs that differ.
pub fn l1_interface_perimeter(f: &BinaryField) -> PerimeterEstimate {
    let g = f.grid();
    let n = g.n();
    let d = g.dim();
    let v = f.values();
    let mut count = 0usize;
    let mut stride = 1usize;
    for _ in 0..d {
        for (i, &vi) in v.iter().enumerate() {
            let along = (i / stride) % n;
            let j = if along + 1 == n { i + stride - n * stride } else { i + stride };
            count += usize::from(vi != v[j]);
        }
        stride *= n;
    }
    PerimeterEstimate {
        value: count as f64 * g.h().powi(d as i32 - 1),
        method: PerimeterMethod::L1Count,
        uncertainty: 0.0,
    }
}

/// Averages of the field over `blocks^n` equal blocks; used to observe weak-* convergence.
pub fn block_averages(f: &BinaryField, blocks: usize) -> Result<Vec<f64>> {
    let g = f.grid();
    let n = g.n();
    if blocks == 0 || !n.is_multiple_of(blocks) {
        return Err(Error::InvalidArgument(format!("{blocks} blocks do not divide N = {n}")));
    }
    let d = g.dim();
    let side = n / blocks;
    let mut sums = vec![0usize; blocks.pow(d as u32)];
    for i in 0..g.len() {
        if f.get(i) {
            let c = g.coords(i);
            let mut b = 0;
            for k in (0..d).rev() {
                b = b * blocks + c[k] / side;
            }
            sums[b] += 1;
        }
    }
    let per = side.pow(d as u32) as f64;
    Ok(sums.into_iter().map(|s| s as f64 / per).collect())
}
