//! Design-of-experiments sampling: Sobol sequences, box rescaling, and
//! objective-value normalization.
//!
//! The Sobol generator uses the bundled Joe-Kuo style direction-number table
//! (`data/joe_kuo_d64.txt`, dimensions up to 64), is origin-inclusive, and
//! applies no scrambling or index skipping. Points are emitted in natural
//! sequence order: point `i` is the XOR of the direction numbers selected by
//! the binary digits of `i`, scaled by 2^-32.

use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const SOBOL_BITS: usize = 32;
const MAX_SOBOL_DIM: usize = 64;
pub const MAX_SOBOL_EXPONENT: usize = 16;

static DIRECTION_TABLE: &str = include_str!("../data/joe_kuo_d64.txt");
static DIRECTIONS: OnceLock<Vec<[u32; SOBOL_BITS]>> = OnceLock::new();

/// Direction numbers for all supported dimensions, computed once from the
/// bundled parameter table.
fn directions() -> &'static [[u32; SOBOL_BITS]] {
    DIRECTIONS.get_or_init(|| {
        let mut dirs = Vec::with_capacity(MAX_SOBOL_DIM);
        // dimension 1: van der Corput in base 2
        let mut v = [0u32; SOBOL_BITS];
        for (c, slot) in v.iter_mut().enumerate() {
            *slot = 1u32 << (SOBOL_BITS - 1 - c);
        }
        dirs.push(v);

        for line in DIRECTION_TABLE.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse().expect("malformed direction table"))
                .collect();
            let (d, s, a) = (fields[0] as usize, fields[1] as usize, fields[2] as u32);
            assert_eq!(d, dirs.len() + 1, "direction table rows out of order");
            let m = &fields[3..3 + s];
            let mut v = [0u32; SOBOL_BITS];
            for c in 0..s {
                v[c] = (m[c] as u32) << (SOBOL_BITS - 1 - c);
            }
            for c in s..SOBOL_BITS {
                let mut val = v[c - s] ^ (v[c - s] >> s);
                for k in 1..s {
                    if (a >> (s - 1 - k)) & 1 == 1 {
                        val ^= v[c - k];
                    }
                }
                v[c] = val;
            }
            dirs.push(v);
        }
        assert_eq!(dirs.len(), MAX_SOBOL_DIM);
        dirs
    })
}

/// How a design was produced; custom designs relax the power-of-two size
/// invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoeProvenance {
    /// First `2^m` Sobol points.
    Sobol { m: usize },
    /// User-supplied points in the unit cube.
    Custom,
}

/// A set of sample points in `[0,1)^d`, row-major.
#[derive(Debug, Clone)]
pub struct DoeMatrix {
    n: usize,
    d: usize,
    points: Vec<f64>,
    provenance: DoeProvenance,
}

impl DoeMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn provenance(&self) -> DoeProvenance {
        self.provenance
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.points[r * self.d..(r + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// Wrap an arbitrary point set as a design. The sample count need not be
    /// a power of two, but every coordinate must lie in `[0,1)`.
    pub fn from_points(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                context: "custom DoE",
                expected: d.max(1),
                actual: points.len(),
            });
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput { context: "custom DoE" });
        }
        if points.iter().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::InvalidArgument {
                context: "custom DoE",
                message: "coordinates must lie in [0,1)".into(),
            });
        }
        Ok(DoeMatrix {
            n: points.len() / d,
            d,
            points,
            provenance: DoeProvenance::Custom,
        })
    }

    /// Serialize as CSV with header `x0,...,x{d-1}`, 15 decimal places per
    /// coordinate.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.d {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "x{j}");
        }
        out.push('\n');
        for row in self.rows() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x:.15}");
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form written by [`DoeMatrix::to_csv`]. The result is
    /// tagged as a custom design.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::FormatError {
            message: "empty DoE CSV".into(),
        })?;
        let d = header.split(',').count();
        let mut points = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d {
                return Err(Error::FormatError {
                    message: format!("expected {d} columns, got {}", fields.len()),
                });
            }
            for f in fields {
                points.push(f.trim().parse::<f64>().map_err(|_| Error::FormatError {
                    message: format!("bad coordinate {f:?}"),
                })?);
            }
        }
        DoeMatrix::from_points(points, d)
    }
}

/// Objective values normalized to `[0,1]`, with optional provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeVector {
    pub values: Vec<f64>,
    pub source_id: Option<String>,
}

impl LandscapeVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// First `2^m` Sobol points in dimension `d`, natural order, origin first.
pub fn sobol_points(m: usize, d: usize) -> Result<DoeMatrix> {
    if d == 0 || d > MAX_SOBOL_DIM {
        return Err(Error::UnsupportedDimension { dim: d, max: MAX_SOBOL_DIM });
    }
    if m > MAX_SOBOL_EXPONENT {
        return Err(Error::InvalidArgument {
            context: "sobol_points",
            message: format!("exponent m = {m} exceeds {MAX_SOBOL_EXPONENT}"),
        });
    }
    let dirs = directions();
    let n = 1usize << m;
    let scale = 1.0 / (1u64 << SOBOL_BITS) as f64;
    let mut points = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            let mut acc = 0u32;
            let mut bits = i;
            let mut c = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    acc ^= dirs[j][c];
                }
                bits >>= 1;
                c += 1;
            }
            points[i * d + j] = acc as f64 * scale;
        }
    }
    Ok(DoeMatrix {
        n,
        d,
        points,
        provenance: DoeProvenance::Sobol { m },
    })
}

/// Affinely map a unit-cube design onto the box `[lower, upper]`.
pub fn rescale(doe: &DoeMatrix, lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if lower.len() != doe.d || upper.len() != doe.d {
        return Err(Error::DimensionMismatch {
            context: "rescale bounds",
            expected: doe.d,
            actual: lower.len().min(upper.len()),
        });
    }
    for i in 0..doe.d {
        if !(lower[i] < upper[i]) {
            return Err(Error::InvalidBounds { coordinate: i });
        }
    }
    let mut out = Vec::with_capacity(doe.points.len());
    for row in doe.rows() {
        for (i, &x) in row.iter().enumerate() {
            out.push(lower[i] + x * (upper[i] - lower[i]));
        }
    }
    Ok(out)
}

/// Min-max normalize raw objective values to `[0,1]`. A constant input maps
/// to the all-zero vector; degenerate landscapes are expected to be filtered
/// out before this point by the function generator.
pub fn normalize_values(raw: &[f64]) -> Result<LandscapeVector> {
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput { context: "normalize_values" });
    }
    let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values = if max > min {
        let span = max - min;
        raw.iter().map(|&x| (x - min) / span).collect()
    } else {
        vec![0.0; raw.len()]
    };
    Ok(LandscapeVector { values, source_id: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_point_is_origin() {
        let doe = sobol_points(0, 3).unwrap();
        assert_eq!(doe.n(), 1);
        assert_eq!(doe.row(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn first_two_points_d2() {
        let doe = sobol_points(1, 2).unwrap();
        assert_eq!(doe.row(0), &[0.0, 0.0]);
        assert_eq!(doe.row(1), &[0.5, 0.5]);
    }

    #[test]
    fn shape_m8_d5() {
        let doe = sobol_points(8, 5).unwrap();
        assert_eq!(doe.n(), 256);
        assert_eq!(doe.d(), 5);
        assert!(doe.as_slice().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(
            sobol_points(3, 65),
            Err(Error::UnsupportedDimension { dim: 65, .. })
        ));
        assert!(matches!(
            sobol_points(3, 0),
            Err(Error::UnsupportedDimension { dim: 0, .. })
        ));
    }

    #[test]
    fn deterministic_across_calls() {
        let a = sobol_points(7, 13).unwrap();
        let b = sobol_points(7, 13).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    /// Dyadic balance: every 1-d projection of a 2^m Sobol block puts
    /// exactly half of its points in [0, 0.5).
    #[test]
    fn dyadic_balance() {
        for &(m, d) in &[(1usize, 2usize), (4, 3), (6, 10), (8, 64)] {
            let doe = sobol_points(m, d).unwrap();
            for j in 0..d {
                let low = doe.rows().filter(|row| row[j] < 0.5).count();
                assert_eq!(low, 1 << (m - 1), "m={m} d={d} coord {j}");
            }
        }
    }

    #[test]
    fn rescale_trivials() {
        let doe = DoeMatrix::from_points(vec![0.5, 0.0], 2).unwrap();
        let out = rescale(&doe, &[-5.0, -5.0], &[5.0, 5.0]).unwrap();
        assert_eq!(out, vec![0.0, -5.0]);

        let doe = sobol_points(1, 1).unwrap();
        let out = rescale(&doe, &[2.0], &[4.0]).unwrap();
        assert_eq!(out, vec![2.0, 3.0]);
    }

    #[test]
    fn rescale_rejects_bad_bounds() {
        let doe = sobol_points(1, 2).unwrap();
        assert!(matches!(
            rescale(&doe, &[0.0, 1.0], &[1.0, 1.0]),
            Err(Error::InvalidBounds { coordinate: 1 })
        ));
    }

    #[test]
    fn rescale_inverse_roundtrip() {
        let doe = sobol_points(6, 4).unwrap();
        let lower = [-5.0, 0.0, 2.5, -100.0];
        let upper = [5.0, 1.0, 7.5, 300.0];
        let scaled = rescale(&doe, &lower, &upper).unwrap();
        for (r, row) in doe.rows().enumerate() {
            for i in 0..4 {
                let back = (scaled[r * 4 + i] - lower[i]) / (upper[i] - lower[i]);
                assert!((back - row[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_trivials() {
        let v = normalize_values(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(v.values, vec![0.0, 0.5, 1.0]);
        let v = normalize_values(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(v.values, vec![0.0, 0.0, 0.0]);
        let v = normalize_values(&[-1.0, 0.0, 3.0]).unwrap();
        assert_eq!(v.values, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn normalize_rejects_non_finite() {
        assert!(matches!(
            normalize_values(&[1.0, f64::NAN]),
            Err(Error::NonFiniteInput { .. })
        ));
        assert!(matches!(
            normalize_values(&[1.0, f64::INFINITY]),
            Err(Error::NonFiniteInput { .. })
        ));
    }

    #[test]
    fn normalize_idempotent() {
        let mut g = crate::rng::SplitMix64::new(5);
        let raw: Vec<f64> = (0..50).map(|_| g.uniform(-3.0, 9.0)).collect();
        let once = normalize_values(&raw).unwrap();
        let twice = normalize_values(&once.values).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn custom_doe_relaxes_power_of_two() {
        let doe = DoeMatrix::from_points(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 2).unwrap();
        assert_eq!(doe.n(), 3);
        assert_eq!(doe.provenance(), DoeProvenance::Custom);
        assert!(DoeMatrix::from_points(vec![0.1, 1.0], 2).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let doe = sobol_points(5, 3).unwrap();
        let text = doe.to_csv();
        assert!(text.starts_with("x0,x1,x2\n"));
        let back = DoeMatrix::from_csv(&text).unwrap();
        assert_eq!(back.n(), doe.n());
        for (a, b) in doe.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
