//! Lightweight exploratory-landscape features and feature-vector plumbing.
//!
//! The nine features mirror the classic y-distribution, meta-model and
//! dispersion groups at low cost, computed from a design and its normalized
//! objective values alone (no extra sampling): skewness, kurtosis and
//! histogram entropy of `y`; adjusted R² and coefficient ratios of linear
//! and pure-quadratic least-squares fits; and the dispersion of the best 10%
//! and 25% of points relative to the whole design. Non-finite feature values
//! are replaced by a 0 sentinel and flagged.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::sampling::{DoeMatrix, LandscapeVector};
use crate::vae::LatentVector;

/// Ridge jitter added to the Gram diagonal for numerical safety on
/// near-collinear designs.
const RIDGE: f64 = 1e-10;

/// Named feature values; `sentinel[i]` marks entries that were non-finite
/// and replaced by 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
    sentinel: Vec<bool>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, raw_values: Vec<f64>) -> Result<Self> {
        if names.len() != raw_values.len() {
            return Err(Error::DimensionMismatch {
                context: "FeatureVector",
                expected: names.len(),
                actual: raw_values.len(),
            });
        }
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::NameCollision { name: a.clone() });
                }
            }
        }
        let mut sentinel = vec![false; raw_values.len()];
        let values = raw_values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                if v.is_finite() {
                    v
                } else {
                    sentinel[i] = true;
                    0.0
                }
            })
            .collect();
        Ok(FeatureVector { names, values, sentinel })
    }

    pub fn empty() -> Self {
        FeatureVector { names: Vec::new(), values: Vec::new(), sentinel: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sentinels(&self) -> &[bool] {
        &self.sentinel
    }
}

/// Ordered concatenation of two feature vectors with disjoint names.
pub fn concat_features(a: &FeatureVector, b: &FeatureVector) -> Result<FeatureVector> {
    for name in b.names() {
        if a.names.iter().any(|n| n == name) {
            return Err(Error::NameCollision { name: name.clone() });
        }
    }
    let mut names = a.names.clone();
    names.extend(b.names.iter().cloned());
    let mut values = a.values.clone();
    values.extend_from_slice(&b.values);
    let mut sentinel = a.sentinel.clone();
    sentinel.extend_from_slice(&b.sentinel);
    Ok(FeatureVector { names, values, sentinel })
}

/// Wrap a latent vector as features named `z_0..z_{ls-1}`.
pub fn latent_as_features(z: &LatentVector) -> FeatureVector {
    let names = (0..z.len()).map(|i| format!("z_{i}")).collect();
    FeatureVector::new(names, z.clone()).expect("latent names are unique")
}

struct Fit {
    adjusted_r2: f64,
    coefficients: Vec<f64>,
}

/// Least squares of `y` against the given predictor columns plus an
/// intercept, via ridge-jittered normal equations. Returns the adjusted R²
/// and the non-intercept coefficients.
fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Option<Fit> {
    let n = y.len();
    let p = columns.len() + 1; // intercept first
    let mut design = vec![1.0; n * p];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            design[i * p + j + 1] = col[i];
        }
    }
    // gram = X^T X + ridge, rhs = X^T y
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for i in 0..n {
        let row = &design[i * p..(i + 1) * p];
        for a in 0..p {
            rhs[a] += row[a] * y[i];
            for b in a..p {
                gram[a * p + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
        gram[a * p + a] += RIDGE;
    }
    let beta = solve_dense(gram, rhs)?;
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut ss_tot = 0.0;
    let mut ss_res = 0.0;
    for i in 0..n {
        let row = &design[i * p..(i + 1) * p];
        let pred: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if ss_tot <= 0.0 || n <= p + 1 {
        return None;
    }
    let r2 = 1.0 - ss_res / ss_tot;
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64);
    Some(Fit { adjusted_r2, coefficients: beta[1..].to_vec() })
}

fn magnitude_ratio(coefs: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for &c in coefs {
        let a = c.abs();
        min = min.min(a);
        max = max.max(a);
    }
    if min == 0.0 || !min.is_finite() {
        0.0
    } else {
        max / min
    }
}

/// Mean pairwise Euclidean distance over the rows selected by `idx`.
fn mean_pairwise(doe: &DoeMatrix, idx: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in idx.iter().enumerate() {
        let ri = doe.row(i);
        for &j in idx.iter().skip(a + 1) {
            let rj = doe.row(j);
            let d2: f64 = ri.iter().zip(rj).map(|(x, y)| (x - y) * (x - y)).sum();
            total += d2.sqrt();
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

fn dispersion(doe: &DoeMatrix, y: &[f64], fraction: f64, all_mean: f64) -> f64 {
    let n = y.len();
    let k = ((fraction * n as f64).floor() as usize).max(2);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap().then(a.cmp(&b)));
    let best = &order[..k.min(n)];
    if all_mean == 0.0 {
        return 0.0;
    }
    mean_pairwise(doe, best) / all_mean
}

/// The nine documented landscape features for one design/landscape pair.
pub fn ela_lite(doe: &DoeMatrix, y: &LandscapeVector) -> Result<FeatureVector> {
    let n = doe.n();
    let d = doe.d();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "ela_lite",
            expected: n,
            actual: y.len(),
        });
    }
    if n < 4 * d {
        return Err(Error::InsufficientSamples { needed: 4 * d, got: n });
    }
    let values = &y.values;

    // y-distribution moments
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };

    // histogram entropy over 20 fixed bins on [0,1]
    let bins = 20usize;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let entropy = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / nf;
            p * p.ln()
        })
        .sum::<f64>();

    // linear and pure-quadratic fits on the unit-cube coordinates
    let lin_cols: Vec<Vec<f64>> =
        (0..d).map(|j| doe.rows().map(|r| r[j]).collect()).collect();
    let lin = least_squares(&lin_cols, values);
    let mut quad_cols = lin_cols.clone();
    for j in 0..d {
        quad_cols.push(doe.rows().map(|r| r[j] * r[j]).collect());
    }
    let quad = least_squares(&quad_cols, values);

    let (lin_r2, lin_coef_ratio) = match &lin {
        Some(fit) => (fit.adjusted_r2, magnitude_ratio(&fit.coefficients)),
        None => (f64::NAN, 0.0),
    };
    let (quad_r2, quad_cond) = match &quad {
        Some(fit) => (fit.adjusted_r2, magnitude_ratio(&fit.coefficients[d..])),
        None => (f64::NAN, 0.0),
    };

    let all_mean = mean_pairwise(doe, &(0..n).collect::<Vec<_>>());
    let disp_10 = dispersion(doe, values, 0.10, all_mean);
    let disp_25 = dispersion(doe, values, 0.25, all_mean);

    FeatureVector::new(
        vec![
            "y_skewness".into(),
            "y_kurtosis".into(),
            "y_entropy".into(),
            "lin_r2".into(),
            "lin_coef_ratio".into(),
            "quad_r2".into(),
            "quad_cond".into(),
            "disp_10".into(),
            "disp_25".into(),
        ],
        vec![
            skewness,
            kurtosis,
            entropy,
            lin_r2,
            lin_coef_ratio,
            quad_r2,
            quad_cond,
            disp_10,
            disp_25,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{normalize_values, rescale, sobol_points};

    fn feature(fv: &FeatureVector, name: &str) -> f64 {
        let idx = fv.names().iter().position(|n| n == name).unwrap();
        fv.values()[idx]
    }

    #[test]
    fn linear_function_fits_exactly() {
        let doe = sobol_points(6, 3).unwrap();
        let raw: Vec<f64> =
            doe.rows().map(|r| 2.0 * r[0] - 3.0 * r[1] + 0.5 * r[2] + 1.0).collect();
        let y = normalize_values(&raw).unwrap();
        let fv = ela_lite(&doe, &y).unwrap();
        assert!(feature(&fv, "lin_r2") >= 0.999);
        assert!(feature(&fv, "quad_r2") >= 0.999);
    }

    #[test]
    fn symmetric_values_have_zero_skew() {
        let doe = sobol_points(4, 2).unwrap();
        // mirrored pairs around 0.5
        let raw: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 0.5 + (i as f64) } else { 0.5 - (i as f64 - 1.0) }).collect();
        let y = normalize_values(&raw).unwrap();
        let fv = ela_lite(&doe, &y).unwrap();
        assert!(feature(&fv, "y_skewness").abs() < 1e-9);
    }

    #[test]
    fn sphere_profile() {
        let doe = sobol_points(8, 2).unwrap();
        let pts = rescale(&doe, &[-5.0, -5.0], &[5.0, 5.0]).unwrap();
        let raw: Vec<f64> = pts.chunks_exact(2).map(|p| p[0] * p[0] + p[1] * p[1]).collect();
        let y = normalize_values(&raw).unwrap();
        let fv = ela_lite(&doe, &y).unwrap();
        assert!(feature(&fv, "quad_r2") >= 0.999, "quad_r2 {}", feature(&fv, "quad_r2"));
        assert!(feature(&fv, "lin_r2") < 0.5, "lin_r2 {}", feature(&fv, "lin_r2"));
        assert!(feature(&fv, "disp_10") < 1.0, "disp_10 {}", feature(&fv, "disp_10"));
    }

    /// Fits agree with an independent pseudo-inverse computed by nalgebra.
    #[test]
    fn least_squares_matches_pinv_oracle() {
        use nalgebra::{DMatrix, DVector};
        let doe = sobol_points(5, 2).unwrap();
        let raw: Vec<f64> = doe
            .rows()
            .map(|r| 1.5 * r[0] - 0.7 * r[1] + 2.0 * r[0] * r[0] + 0.3)
            .collect();
        let y = normalize_values(&raw).unwrap();

        let n = doe.n();
        let cols: Vec<Vec<f64>> = (0..2).map(|j| doe.rows().map(|r| r[j]).collect()).collect();
        let fit = least_squares(&cols, &y.values).unwrap();

        let mut design = DMatrix::zeros(n, 3);
        for i in 0..n {
            design[(i, 0)] = 1.0;
            design[(i, 1)] = doe.row(i)[0];
            design[(i, 2)] = doe.row(i)[1];
        }
        let target = DVector::from_vec(y.values.clone());
        let pinv = (design.transpose() * &design)
            .try_inverse()
            .unwrap()
            * design.transpose()
            * target;
        assert!((fit.coefficients[0] - pinv[1]).abs() < 1e-8);
        assert!((fit.coefficients[1] - pinv[2]).abs() < 1e-8);
    }

    #[test]
    fn insufficient_samples_rejected() {
        let doe = sobol_points(2, 2).unwrap(); // 4 points, need 8
        let y = LandscapeVector { values: vec![0.0, 0.3, 0.7, 1.0], source_id: None };
        assert!(matches!(
            ela_lite(&doe, &y),
            Err(Error::InsufficientSamples { needed: 8, got: 4 })
        ));
    }

    #[test]
    fn scale_invariance_through_normalization() {
        let doe = sobol_points(6, 2).unwrap();
        let raw: Vec<f64> = doe.rows().map(|r| (3.0 * r[0]).sin() + r[1] * r[1]).collect();
        let scaled: Vec<f64> = raw.iter().map(|v| 4.0 * v + 17.0).collect();
        let fa = ela_lite(&doe, &normalize_values(&raw).unwrap()).unwrap();
        let fb = ela_lite(&doe, &normalize_values(&scaled).unwrap()).unwrap();
        for (a, b) in fa.values().iter().zip(fb.values()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn dispersion_order_invariant() {
        let doe = sobol_points(5, 2).unwrap();
        let raw: Vec<f64> = doe.rows().map(|r| r[0] + 2.0 * r[1]).collect();
        let y = normalize_values(&raw).unwrap();
        let fv = ela_lite(&doe, &y).unwrap();

        // permute rows and values together
        let n = doe.n();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let mut pts = Vec::new();
        let mut raw_p = Vec::new();
        for &i in &perm {
            pts.extend_from_slice(doe.row(i));
            raw_p.push(raw[i]);
        }
        let doe_p = DoeMatrix::from_points(pts, 2).unwrap();
        let fv_p = ela_lite(&doe_p, &normalize_values(&raw_p).unwrap()).unwrap();
        assert!((feature(&fv, "disp_10") - feature(&fv_p, "disp_10")).abs() < 1e-12);
        assert!((feature(&fv, "disp_25") - feature(&fv_p, "disp_25")).abs() < 1e-12);
    }

    #[test]
    fn concat_behaviour() {
        let a = FeatureVector::new(vec!["p".into(), "q".into()], vec![1.0, 2.0]).unwrap();
        let b = FeatureVector::new(vec!["r".into()], vec![3.0]).unwrap();
        let c = concat_features(&a, &b).unwrap();
        assert_eq!(c.names(), &["p".to_string(), "q".into(), "r".into()]);
        assert_eq!(c.values(), &[1.0, 2.0, 3.0]);
        let id = concat_features(&a, &FeatureVector::empty()).unwrap();
        assert_eq!(id, a);
        assert!(matches!(
            concat_features(&a, &a),
            Err(Error::NameCollision { .. })
        ));
    }

    #[test]
    fn latent_feature_wrapping() {
        let z = vec![0.1, 0.2, 0.3, 0.4];
        let fv = latent_as_features(&z);
        assert_eq!(fv.names(), &["z_0".to_string(), "z_1".into(), "z_2".into(), "z_3".into()]);
        assert_eq!(fv.values(), z.as_slice());
        assert!(latent_as_features(&Vec::new()).is_empty());
        // ela + 32 latent = 41 features
        let doe = sobol_points(6, 2).unwrap();
        let raw: Vec<f64> = doe.rows().map(|r| r[0] * r[1] + r[0]).collect();
        let ela = ela_lite(&doe, &normalize_values(&raw).unwrap()).unwrap();
        let z32 = latent_as_features(&vec![0.0; 32]);
        assert_eq!(concat_features(&ela, &z32).unwrap().len(), 41);
    }

    #[test]
    fn non_finite_features_become_sentinels() {
        let fv = FeatureVector::new(vec!["a".into(), "b".into()], vec![f64::NAN, 1.0]).unwrap();
        assert_eq!(fv.values(), &[0.0, 1.0]);
        assert_eq!(fv.sentinels(), &[true, false]);
    }
}
