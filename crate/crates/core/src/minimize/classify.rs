//! Ball / laminate / other diagnostics for annealed fields.

use std::collections::VecDeque;
use std::fmt;

use crate::autocorr::slope_perimeter;
use crate::error::{Error, Result};
use crate::measure::ball_perimeter_for_volume;
use crate::torus::BinaryField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Ball,
    Laminate,
    Other,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Ball => "ball",
            Classification::Laminate => "laminate",
            Classification::Other => "other",
        })
    }
}

/// Slope-fit perimeter over the perimeter of the ball with the same volume.
pub fn isoperimetric_quotient(f: &BinaryField) -> Result<f64> {
    let theta = f.volume_fraction();
    if f.count_ones() == 0 || f.count_ones() == f.grid().len() {
        return Err(Error::InvalidArgument("isoperimetric quotient needs 0 < volume fraction < 1".into()));
    }
    let p = slope_perimeter(f)?;
    Ok(p.value / ball_perimeter_for_volume(f.grid().dim(), theta))
}

/// Face-connected component of the 1-phase.
struct Component {
    size: usize,
    /// Bit `i` set when the component wraps around axis `i`.
    wraps: u8,
}

fn components(f: &BinaryField) -> Vec<Component> {
    let g = f.grid();
    let d = g.dim();
    let n = g.n() as i64;
    let mut seen = vec![false; g.len()];
    // unwrapped coordinates of each visited cell
    let mut lifted = vec![[0i64; 3]; g.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.len() {
        if seen[start] || !f.get(start) {
            continue;
        }
        seen[start] = true;
        let c = g.coords(start);
        lifted[start] = [c[0] as i64, c[1] as i64, c[2] as i64];
        queue.push_back(start);
        let mut comp = Component { size: 0, wraps: 0 };
        while let Some(x) = queue.pop_front() {
            comp.size += 1;
            let cx = g.coords(x);
            for axis in 0..d {
                for s in [-1i64, 1] {
                    let mut shift = [0i64; 3];
                    shift[axis] = s;
                    let y = g.shifted_index(&cx[..d], &shift[..d]);
                    if !f.get(y) {
                        continue;
                    }
                    let mut ly = lifted[x];
                    ly[axis] += s;
                    if seen[y] {
                        for (i, (a, b)) in ly.iter().zip(&lifted[y]).enumerate().take(d) {
                            if (a - b).rem_euclid(n) == 0 && a != b {
                                comp.wraps |= 1 << i;
                            }
                        }
                    } else {
                        seen[y] = true;
                        lifted[y] = ly;
                        queue.push_back(y);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Ball, laminate or other, judged on the minority phase.
///
/// Components smaller than `max(4 cells, 1%` of the phase) are ignored. A ball has an
/// isoperimetric quotient in `[0.9, 1.1]` and one component that wraps no axis. A
/// laminate is made of components that all wrap the same `n - 1` axes, with a slope-fit
/// perimeter within 15% of `2m` for some `m` in `1..=8`.
pub fn classify_minimizer(f: &BinaryField) -> Classification {
    let g = f.grid();
    let d = g.dim();
    let ones = f.count_ones();
    if ones == 0 || ones == g.len() {
        return Classification::Other;
    }
    let phase = if 2 * ones > g.len() { f.complement() } else { f.clone() };
    let volume = phase.volume_fraction();
    let Ok(p) = slope_perimeter(&phase) else {
        return Classification::Other;
    };
    let speck = 4usize.max(phase.count_ones() / 100);
    let big: Vec<Component> = components(&phase).into_iter().filter(|c| c.size > speck).collect();
    if big.is_empty() {
        return Classification::Other;
    }
    let quotient = p.value / ball_perimeter_for_volume(d, volume);
    if big.len() == 1 && big[0].wraps == 0 && (0.9..=1.1).contains(&quotient) {
        return Classification::Ball;
    }
    let wraps = big[0].wraps;
    let same = big.iter().all(|c| c.wraps == wraps);
    if same && wraps.count_ones() as usize == d - 1 {
        let matches = (1..=8).any(|m| {
            let target = 2.0 * m as f64;
            p.value >= 0.85 * target && p.value <= 1.15 * target
        });
        if matches {
            return Classification::Laminate;
        }
    }
    Classification::Other
}
