//! Analytic subsets of the flat torus.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::{unit_ball_volume, unit_sphere_area};

/// A polytope whose canonical embedding lies in the fundamental domain `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Polytope {
    /// Simple polygon (n = 2) given by its vertices in order. No vertices means the empty set.
    Polygon(Vec<[f64; 2]>),
    /// Axis-aligned box `[lo, hi)`. A box spanning a full period along some axis
    /// has no faces normal to that axis.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

/// Analytic description of a subset of the flat torus.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `stripes` equally spaced slabs of total width `theta`, normal to `axis` (0-based).
    Laminate {
        axis: usize,
        theta: f64,
        stripes: usize,
    },
    Polytope(Polytope),
    Complement(Box<ShapeSpec>),
}

/// How a perimeter value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerimeterMethod {
    Analytic,
    SlopeFit,
    L1Count,
}

impl fmt::Display for PerimeterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerimeterMethod::Analytic => "analytic",
            PerimeterMethod::SlopeFit => "slope_fit",
            PerimeterMethod::L1Count => "l1_count",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerimeterEstimate {
    pub value: f64,
    pub method: PerimeterMethod,
    pub uncertainty: f64,
}

impl PerimeterEstimate {
    pub fn analytic(value: f64) -> Self {
        Self { value, method: PerimeterMethod::Analytic, uncertainty: 0.0 }
    }
}

impl ShapeSpec {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = ShapeSpec::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    /// Laminate with `stripes` slabs normal to the 0-based `axis`.
    pub fn laminate(axis: usize, theta: f64, stripes: usize) -> Result<Self> {
        let s = ShapeSpec::Laminate { axis, theta, stripes };
        s.validate()?;
        Ok(s)
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let s = ShapeSpec::Polytope(Polytope::Polygon(vertices));
        s.validate()?;
        Ok(s)
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let s = ShapeSpec::Polytope(Polytope::Box { lo, hi });
        s.validate()?;
        Ok(s)
    }

    /// Axis-aligned square (n = 2) with lower corner `lo` and the given side.
    pub fn square(lo: [f64; 2], side: f64) -> Result<Self> {
        Self::cuboid(lo.to_vec(), vec![lo[0] + side, lo[1] + side])
    }

    /// The empty polygon; its complement is the whole torus.
    pub fn empty() -> Self {
        ShapeSpec::Polytope(Polytope::Polygon(Vec::new()))
    }

    pub fn complement(inner: ShapeSpec) -> Self {
        ShapeSpec::Complement(Box::new(inner))
    }

    /// Spatial dimension, or `None` for laminates, which exist in every dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ShapeSpec::Ball { center, .. } => Some(center.len()),
            ShapeSpec::Laminate { .. } => None,
            ShapeSpec::Polytope(Polytope::Polygon(_)) => Some(2),
            ShapeSpec::Polytope(Polytope::Box { lo, .. }) => Some(lo.len()),
            ShapeSpec::Complement(inner) => inner.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShape(msg));
        match self {
            ShapeSpec::Ball { center, radius } => {
                if !(2..=3).contains(&center.len()) {
                    return bad(format!("ball center has {} coordinates", center.len()));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return bad("ball center is not finite".into());
                }
                if !(*radius > 0.0 && *radius < 0.5) {
                    return bad(format!("ball radius {radius} outside (0, 1/2)"));
                }
            }
            ShapeSpec::Laminate { axis, theta, stripes } => {
                if *axis >= 3 {
                    return bad(format!("laminate axis {} out of range", axis + 1));
                }
                if !(*theta > 0.0 && *theta < 1.0) {
                    return bad(format!("laminate width {theta} outside (0, 1)"));
                }
                if *stripes == 0 {
                    return bad("laminate needs at least one stripe".into());
                }
            }
            ShapeSpec::Polytope(Polytope::Polygon(v)) => {
                if v.is_empty() {
                    return Ok(());
                }
                if v.len() < 3 {
                    return bad("polygon needs at least three vertices".into());
                }
                if v.iter().flatten().any(|&c| !(0.0..=1.0).contains(&c)) {
                    return bad("polygon vertices must lie in [0, 1]^2".into());
                }
                if polygon_signed_area(v).abs() < 1e-14 {
                    return bad("polygon is degenerate".into());
                }
                if polygon_self_intersects(v) {
                    return bad("polygon is not simple".into());
                }
            }
            ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
                if lo.len() != hi.len() || !(2..=3).contains(&lo.len()) {
                    return bad("box corners must both have 2 or 3 coordinates".into());
                }
                for (a, b) in lo.iter().zip(hi) {
                    if !(0.0 <= *a && a < b && *b <= 1.0) {
                        return bad(format!("box extent [{a}, {b}) not inside [0, 1]"));
                    }
                }
            }
            ShapeSpec::Complement(inner) => inner.validate()?,
        }
        Ok(())
    }

    /// Point membership for `x` in `[0, 1)^n`.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ShapeSpec::Ball { center, radius } => {
                let d2: f64 = center
                    .iter()
                    .zip(x)
                    .map(|(c, p)| {
                        let d = p - c;
                        let d = d - d.round();
                        d * d
                    })
                    .sum();
                d2 < radius * radius
            }
            ShapeSpec::Laminate { axis, theta, stripes } => {
                let m = *stripes as f64;
                let t = (x[*axis] * m).rem_euclid(1.0);
                t < *theta
            }
            ShapeSpec::Polytope(Polytope::Polygon(v)) => point_in_polygon(v, [x[0], x[1]]),
            ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
                lo.iter().zip(hi).zip(x).all(|((a, b), p)| *a <= *p && *p < *b)
            }
            ShapeSpec::Complement(inner) => !inner.contains(x),
        }
    }

    /// Exact Lebesgue measure of the set on the unit torus.
    pub fn volume(&self) -> f64 {
        match self {
            ShapeSpec::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            ShapeSpec::Laminate { theta, .. } => *theta,
            ShapeSpec::Polytope(Polytope::Polygon(v)) => polygon_signed_area(v).abs(),
            ShapeSpec::Polytope(Polytope::Box { lo, hi }) => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            ShapeSpec::Complement(inner) => 1.0 - inner.volume(),
        }
    }

    /// Exact perimeter on the torus (for laminates, in any dimension).
    pub fn perimeter(&self) -> f64 {
        match self {
            ShapeSpec::Ball { center, radius } => {
                let n = center.len();
                unit_sphere_area(n) * radius.powi(n as i32 - 1)
            }
            ShapeSpec::Laminate { stripes, .. } => 2.0 * *stripes as f64,
            ShapeSpec::Polytope(Polytope::Polygon(v)) => {
                let k = v.len();
                (0..k)
                    .map(|i| {
                        let a = v[i];
                        let b = v[(i + 1) % k];
                        (b[0] - a[0]).hypot(b[1] - a[1])
                    })
                    .sum()
            }
            ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
                let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
                (0..sides.len())
                    .filter(|&k| sides[k] < 1.0)
                    .map(|k| 2.0 * sides.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, s)| s).product::<f64>())
                    .sum()
            }
            ShapeSpec::Complement(inner) => inner.perimeter(),
        }
    }

    /// Radius below which the radial autocorrelation is a polynomial, when it is known in closed form.
    pub fn polynomial_radius(&self) -> Option<f64> {
        match self {
            ShapeSpec::Laminate { theta, stripes, .. } => {
                let m = *stripes as f64;
                Some(theta.min(1.0 - theta) / m)
            }
            ShapeSpec::Polytope(Polytope::Box { lo, hi }) => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| {
                    let s = b - a;
                    if s >= 1.0 {
                        f64::INFINITY
                    } else {
                        s.min(1.0 - s)
                    }
                })
                .reduce(f64::min),
            ShapeSpec::Complement(inner) => inner.polynomial_radius(),
            _ => None,
        }
    }

    /// Exact perimeter wrapped as an estimate.
    pub fn perimeter_estimate(&self) -> PerimeterEstimate {
        PerimeterEstimate::analytic(self.perimeter())
    }
}

fn polygon_signed_area(v: &[[f64; 2]]) -> f64 {
    let k = v.len();
    if k < 3 {
        return 0.0;
    }
    0.5 * (0..k)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % k];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let k = v.len();
    if k < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = k - 1;
    for i in 0..k {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn polygon_self_intersects(v: &[[f64; 2]]) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    let k = v.len();
    for i in 0..k {
        let (a, b) = (v[i], v[(i + 1) % k]);
        for j in (i + 1)..k {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == k - 1) {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % k]);
            let d1 = orient(a, b, c);
            let d2 = orient(a, b, d);
            let d3 = orient(c, d, a);
            let d4 = orient(c, d, b);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return true;
            }
        }
    }
    false
}

/// Volume fraction at which the ball of that volume and a single laminate have
/// equal perimeter; below it (in `min(theta, 1 - theta)`) the ball is the
/// minimizer of the limit energy, above it the laminate.
///
/// Equating `n omega_n^{1/n} theta^{(n-1)/n}` with `2` gives
/// `(2/n)^{n/(n-1)} omega_n^{-1/(n-1)}`; for `n = 2` this is `1/pi`.
pub fn ball_laminate_threshold(n: usize) -> f64 {
    assert!(n >= 2, "threshold needs n >= 2");
    let nf = n as f64;
    (2.0 / nf).powf(nf / (nf - 1.0)) * unit_ball_volume(n).powf(-1.0 / (nf - 1.0))
}

/// The `k`-th laminate of volume `theta`: `k` stripes, perimeter `2k`.
pub fn laminate_sequence(k: usize, theta: f64) -> Result<ShapeSpec> {
    if k == 0 {
        return Err(Error::InvalidArgument("laminate index must be >= 1".into()));
    }
    ShapeSpec::laminate(0, theta, k)
}

// ---------------------------------------------------------------------------
// Plain-text records: `ball cx=0.5 cy=0.5 r=0.2`, `laminate axis=1 theta=0.3 m=4`,
// `polytope v=(x1,y1);(x2,y2);...`, `box lo=(a,b) hi=(c,d)`, `complement <shape>`.

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeSpec::Ball { center, radius } => {
                write!(f, "ball")?;
                for (name, c) in ["cx", "cy", "cz"].iter().zip(center) {
                    write!(f, " {name}={c}")?;
                }
                write!(f, " r={radius}")
            }
            ShapeSpec::Laminate { axis, theta, stripes } => {
                write!(f, "laminate axis={} theta={} m={}", axis + 1, theta, stripes)
            }
            ShapeSpec::Polytope(Polytope::Polygon(v)) => {
                write!(f, "polytope v=")?;
                let parts: Vec<String> = v.iter().map(|p| format!("({},{})", p[0], p[1])).collect();
                write!(f, "{}", parts.join(";"))
            }
            ShapeSpec::Polytope(Polytope::Box { lo, hi }) => {
                let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                write!(f, "box lo=({}) hi=({})", join(lo), join(hi))
            }
            ShapeSpec::Complement(inner) => write!(f, "complement {inner}"),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{key}: cannot parse '{v}' as a number")))
}

fn parse_tuple(key: &str, v: &str) -> Result<Vec<f64>> {
    let t = v.trim().trim_start_matches('(').trim_end_matches(')');
    t.split(',').map(|x| parse_f64(key, x)).collect()
}

impl FromStr for ShapeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = match s.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (s, ""),
        };
        if kind == "complement" {
            return Ok(ShapeSpec::complement(rest.parse()?));
        }
        let mut fields = Vec::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{tok}'")))?;
            fields.push((k, v));
        }
        let get = |key: &str| fields.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let allow = |keys: &[&str]| -> Result<()> {
            for (k, _) in &fields {
                if !keys.contains(k) {
                    return Err(Error::Parse(format!("unknown key '{k}' for {kind}")));
                }
            }
            Ok(())
        };
        let need = |key: &str| get(key).ok_or_else(|| Error::Parse(format!("{kind}: missing '{key}'")));
        match kind {
            "ball" => {
                allow(&["cx", "cy", "cz", "r"])?;
                let mut center = vec![parse_f64("cx", need("cx")?)?, parse_f64("cy", need("cy")?)?];
                if let Some(cz) = get("cz") {
                    center.push(parse_f64("cz", cz)?);
                }
                ShapeSpec::ball(center, parse_f64("r", need("r")?)?)
            }
            "laminate" => {
                allow(&["axis", "theta", "m"])?;
                let axis: usize =
                    get("axis").unwrap_or("1").parse().map_err(|_| Error::Parse("laminate: bad axis".into()))?;
                if axis == 0 {
                    return Err(Error::Parse("laminate: axis is 1-based".into()));
                }
                let m: usize = get("m").unwrap_or("1").parse().map_err(|_| Error::Parse("laminate: bad m".into()))?;
                ShapeSpec::laminate(axis - 1, parse_f64("theta", need("theta")?)?, m)
            }
            "polytope" => {
                allow(&["v"])?;
                let v = get("v").unwrap_or("");
                let mut verts = Vec::new();
                for part in v.split(';').filter(|p| !p.trim().is_empty()) {
                    let c = parse_tuple("v", part)?;
                    if c.len() != 2 {
                        return Err(Error::Parse("polytope vertices must be 2-D".into()));
                    }
                    verts.push([c[0], c[1]]);
                }
                ShapeSpec::polygon(verts)
            }
            "box" => {
                allow(&["lo", "hi"])?;
                ShapeSpec::cuboid(parse_tuple("lo", need("lo")?)?, parse_tuple("hi", need("hi")?)?)
            }
            other => Err(Error::Parse(format!("unknown shape kind '{other}'"))),
        }
    }
}

/// Parses one shape per non-empty, non-comment line.
pub fn parse_shapes(text: &str) -> Result<Vec<ShapeSpec>> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::parse).collect()
}

/// Disk perimeter at the threshold volume, for checking the crossover.
pub fn disk_perimeter(theta: f64) -> f64 {
    2.0 * (PI * theta).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes() {
        let b = ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap();
        assert!((b.volume() - 0.125_663_706_143_591_7).abs() < 1e-12);
        assert_eq!(ShapeSpec::laminate(0, 0.3, 5).unwrap().volume(), 0.3);
        let c = ShapeSpec::complement(b.clone());
        assert!((c.volume() - 0.874_336_293_856_408_3).abs() < 1e-12);
    }

    #[test]
    fn perimeters() {
        let b = ShapeSpec::ball(vec![0.5, 0.5], 0.2).unwrap();
        assert!((b.perimeter() - 1.256_637_061_435_917).abs() < 1e-12);
        assert_eq!(ShapeSpec::laminate(0, 0.3, 4).unwrap().perimeter(), 8.0);
        assert_eq!(ShapeSpec::square([0.25, 0.25], 0.5).unwrap().perimeter(), 2.0);
        assert_eq!(ShapeSpec::complement(b.clone()).perimeter(), b.perimeter());
        // a box spanning the full period is a laminate
        let slab = ShapeSpec::cuboid(vec![0.0, 0.2], vec![1.0, 0.7]).unwrap();
        assert_eq!(slab.perimeter(), 2.0);
        let tri = ShapeSpec::polygon(vec![[0.2, 0.2], [0.8, 0.2], [0.2, 0.8]]).unwrap();
        assert!((tri.perimeter() - (1.2 + 0.6 * 2f64.sqrt())).abs() < 1e-12);
        assert!((tri.volume() - 0.18).abs() < 1e-12);
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(ShapeSpec::ball(vec![0.5, 0.5], 0.5).is_err());
        assert!(ShapeSpec::laminate(0, 1.0, 1).is_err());
        assert!(ShapeSpec::laminate(0, 0.3, 0).is_err());
        assert!(ShapeSpec::polygon(vec![[0.1, 0.1], [0.9, 0.9], [0.9, 0.1], [0.1, 0.9]]).is_err());
        assert!(ShapeSpec::cuboid(vec![0.5, 0.5], vec![0.4, 0.9]).is_err());
        assert!(laminate_sequence(0, 0.3).is_err());
    }

    #[test]
    fn laminate_sequence_geometry() {
        let s = laminate_sequence(8, 0.3).unwrap();
        assert_eq!(s.perimeter(), 16.0);
        assert_eq!(s.volume(), 0.3);
        assert!(s.contains(&[0.0375 * 0.5, 0.3]));
        assert!(!s.contains(&[0.0375 + 1e-9, 0.3]));
        assert!(s.contains(&[0.125 + 0.001, 0.3]));
        assert_eq!(laminate_sequence(1, 0.3).unwrap().perimeter(), 2.0);
    }

    #[test]
    fn threshold_values() {
        assert!((ball_laminate_threshold(2) - 1.0 / PI).abs() < 1e-15);
        let t2 = ball_laminate_threshold(2);
        assert!((disk_perimeter(t2) - 2.0).abs() < 1e-12);
        let t3 = ball_laminate_threshold(3);
        let sphere = crate::measure::ball_perimeter_for_volume(3, t3);
        assert!((sphere - 2.0).abs() < 1e-12, "{t3} {sphere}");
    }

    #[test]
    fn text_records_roundtrip() {
        let shapes = parse_shapes(
            "# comment\nball cx=0.5 cy=0.5 r=0.2\nlaminate axis=1 theta=0.3 m=4\n\
             polytope v=(0.2,0.2);(0.8,0.2);(0.2,0.8)\nbox lo=(0.25,0.25) hi=(0.75,0.75)\n\
             complement ball cx=0.5 cy=0.5 cz=0.5 r=0.1\npolytope v=\n",
        )
        .unwrap();
        assert_eq!(shapes.len(), 6);
        assert_eq!(shapes[1], ShapeSpec::laminate(0, 0.3, 4).unwrap());
        for s in &shapes {
            let again: ShapeSpec = s.to_string().parse().unwrap();
            assert_eq!(&again, s);
        }
        assert!("ball cx=0.5 cy=0.5 r=0.2 q=1".parse::<ShapeSpec>().is_err());
        assert!("blob r=1".parse::<ShapeSpec>().is_err());
        assert!("laminate axis=0 theta=0.3".parse::<ShapeSpec>().is_err());
    }
}
