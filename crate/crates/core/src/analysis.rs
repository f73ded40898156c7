//! Experiment harnesses: the latent-size × KL-weight sweep, classical
//! (Torgerson) multidimensional scaling, and latent traversal.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::sampling::LandscapeVector;
use crate::vae::{
    dataset_fingerprint, decode, train, LatentVector, ModelKind, ModelWeights, TrainConfig,
};

/// Final validation losses of one sweep cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub latent_size: usize,
    pub kl_weight: f64,
    pub loss_vae: f64,
    pub loss_mse: f64,
    pub loss_kl: f64,
}

/// Grid of sweep cells in row-major `(latent_size, kl_weight)` order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub dataset_fingerprint: u64,
    pub seed: u64,
}

impl SweepResult {
    pub fn cell(&self, latent_size: usize, kl_weight: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.latent_size == latent_size && c.kl_weight == kl_weight)
    }
}

/// The latent sizes swept by default.
pub const DEFAULT_LATENT_SIZES: [usize; 5] = [4, 8, 16, 24, 32];
/// The KL weights swept by default.
pub const DEFAULT_KL_WEIGHTS: [f64; 5] = [0.0001, 0.0002, 0.001, 0.005, 0.01];

/// Train one VAE per `(latent size, KL weight)` cell with a shared seed and
/// record final validation losses. Cells train in parallel; each cell's run
/// is self-contained, so the grid is a pure function of its inputs.
pub fn sweep(
    latent_sizes: &[usize],
    kl_weights: &[f64],
    dataset: &[LandscapeVector],
    config: &TrainConfig,
) -> Result<SweepResult> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset[0].len();
    for &ls in latent_sizes {
        if ls == 0 || ls >= n / 4 {
            return Err(Error::InvalidArgument {
                context: "sweep",
                message: format!("latent size {ls} violates ls < n/4 with n = {n}"),
            });
        }
    }
    let grid: Vec<(usize, f64)> = latent_sizes
        .iter()
        .flat_map(|&ls| kl_weights.iter().map(move |&beta| (ls, beta)))
        .collect();
    let cells: Vec<SweepCell> = grid
        .par_iter()
        .map(|&(ls, beta)| {
            let cell_cfg = TrainConfig { kl_weight: beta, ..config.clone() };
            let model = train(dataset, &cell_cfg, ModelKind::Vae, ls).map_err(|e| {
                Error::Configuration {
                    message: format!("sweep cell (ls={ls}, kl_weight={beta}) failed: {e}"),
                }
            })?;
            let last = model.meta.history.last().expect("at least one epoch");
            Ok(SweepCell {
                latent_size: ls,
                kl_weight: beta,
                loss_vae: last.val_vae,
                loss_mse: last.val_mse,
                loss_kl: last.val_kl,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        cells,
        dataset_fingerprint: dataset_fingerprint(dataset),
        seed: config.seed,
    })
}

/// A 2-d embedding produced by classical MDS.
#[derive(Debug, Clone)]
pub struct Embedding2D {
    /// `k x 2` row-major coordinates, centered per column.
    pub points: Vec<f64>,
    /// Kruskal stress-1 between input and embedded distances.
    pub stress: f64,
}

const MDS_TOLERANCE: f64 = 1e-10;
const MDS_MAX_ITERATIONS: usize = 10_000;

/// Dominant eigenpair of a symmetric matrix by power iteration with a fixed
/// seeded start vector. Returns `(eigenvalue, eigenvector)`.
fn power_iteration(b: &[f64], k: usize) -> Result<(f64, Vec<f64>)> {
    let mut rng = SplitMix64::new(0x3D5_0001);
    let mut v: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut bv = vec![0.0; k];
    for iteration in 0..MDS_MAX_ITERATIONS {
        for (r, slot) in bv.iter_mut().enumerate() {
            *slot = b[r * k..(r + 1) * k].iter().zip(&v).map(|(m, x)| m * x).sum();
        }
        let lambda: f64 = v.iter().zip(&bv).map(|(a, c)| a * c).sum();
        let bv_norm = bv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if bv_norm < MDS_TOLERANCE {
            // matrix annihilates the probe: eigenvalue zero
            return Ok((0.0, vec![0.0; k]));
        }
        // residual ||Bv - lambda v||_inf against the scale of lambda
        let residual = v
            .iter()
            .zip(&bv)
            .map(|(a, c)| (c - lambda * a).abs())
            .fold(0.0f64, f64::max);
        if residual <= MDS_TOLERANCE * lambda.abs().max(1.0) {
            let _ = iteration;
            return Ok((lambda, v));
        }
        for (slot, &c) in v.iter_mut().zip(&bv) {
            *slot = c / bv_norm;
        }
    }
    Err(Error::Convergence { iterations: MDS_MAX_ITERATIONS })
}

/// Classical (Torgerson) MDS of `rows x cols` row-major vectors onto two
/// dimensions: double-center the squared Euclidean distance matrix and take
/// the top two eigenpairs by power iteration with deflation.
pub fn classical_mds(vectors: &[f64], rows: usize, cols: usize) -> Result<Embedding2D> {
    if rows < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: rows });
    }
    if vectors.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            context: "classical_mds",
            expected: rows * cols,
            actual: vectors.len() / cols.max(1),
        });
    }
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { context: "classical_mds" });
    }

    // squared distances
    let mut d2 = vec![0.0; rows * rows];
    for i in 0..rows {
        let ri = &vectors[i * cols..(i + 1) * cols];
        for j in i + 1..rows {
            let rj = &vectors[j * cols..(j + 1) * cols];
            let dist2: f64 = ri.iter().zip(rj).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[i * rows + j] = dist2;
            d2[j * rows + i] = dist2;
        }
    }

    // B = -1/2 J D2 J
    let row_means: Vec<f64> =
        (0..rows).map(|i| d2[i * rows..(i + 1) * rows].iter().sum::<f64>() / rows as f64).collect();
    let grand = row_means.iter().sum::<f64>() / rows as f64;
    let mut b = vec![0.0; rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            b[i * rows + j] = -0.5 * (d2[i * rows + j] - row_means[i] - row_means[j] + grand);
        }
    }

    let mut points = vec![0.0; rows * 2];
    for axis in 0..2 {
        let (lambda, mut v) = power_iteration(&b, rows)?;
        if lambda > 0.0 {
            // deterministic sign: largest-magnitude component positive
            let lead = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap_or(0);
            if v[lead] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let scale = lambda.sqrt();
            for i in 0..rows {
                points[i * 2 + axis] = scale * v[i];
            }
            // deflate
            for i in 0..rows {
                for j in 0..rows {
                    b[i * rows + j] -= lambda * v[i] * v[j];
                }
            }
        }
        // non-positive eigenvalue: the axis stays zero
    }

    // stress-1 between original and embedded distances
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..rows {
        for j in i + 1..rows {
            let orig = d2[i * rows + j].sqrt();
            let dx = points[i * 2] - points[j * 2];
            let dy = points[i * 2 + 1] - points[j * 2 + 1];
            let emb = (dx * dx + dy * dy).sqrt();
            num += (orig - emb) * (orig - emb);
            den += orig * orig;
        }
    }
    let stress = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(Embedding2D { points, stress })
}

/// Vary one latent coordinate by each delta and decode; `deltas` should
/// include 0 to anchor the sweep at the starting point.
pub fn latent_traversal(
    model: &ModelWeights,
    z0: &LatentVector,
    index: usize,
    deltas: &[f64],
) -> Result<Vec<LandscapeVector>> {
    if z0.len() != model.ls {
        return Err(Error::DimensionMismatch {
            context: "latent_traversal",
            expected: model.ls,
            actual: z0.len(),
        });
    }
    if index >= model.ls {
        return Err(Error::IndexOutOfRange { index, len: model.ls });
    }
    deltas
        .iter()
        .map(|&delta| {
            let mut z = z0.clone();
            z[index] += delta;
            decode(model, &z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use crate::randfunc::{evaluate, generate_filtered, GeneratorConfig};
    use crate::sampling::{normalize_values, sobol_points};

    fn pairwise(points: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..rows {
            for j in i + 1..rows {
                let a = &points[i * cols..(i + 1) * cols];
                let b = &points[j * cols..(j + 1) * cols];
                out.push(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt());
            }
        }
        out
    }

    #[test]
    fn sweep_covers_grid() {
        let doe = sobol_points(5, 2).unwrap();
        let dataset: Vec<LandscapeVector> = (0..40)
            .map(|i| {
                let cfg = GeneratorConfig::new(2, 7000 + i);
                let expr = generate_filtered(&cfg, doe.as_slice()).unwrap();
                normalize_values(&evaluate(&expr, doe.as_slice(), 2).unwrap()).unwrap()
            })
            .collect();
        let cfg = TrainConfig { epochs: 1, seed: 1, ..TrainConfig::default() };
        let result = sweep(&[2, 3], &[0.001, 0.01, 0.1], &dataset, &cfg).unwrap();
        assert_eq!(result.cells.len(), 6);
        assert!(result.cells.iter().all(|c| c.loss_vae.is_finite() && c.loss_vae >= 0.0));
        // row-major order over (ls, kl)
        assert_eq!(result.cells[0].latent_size, 2);
        assert_eq!(result.cells[0].kl_weight, 0.001);
        assert_eq!(result.cells[5].latent_size, 3);
        assert_eq!(result.cells[5].kl_weight, 0.1);
        // cells are a pure function of the inputs
        let again = sweep(&[2, 3], &[0.001, 0.01, 0.1], &dataset, &cfg).unwrap();
        for (a, b) in result.cells.iter().zip(&again.cells) {
            assert_eq!(a.loss_vae, b.loss_vae);
        }
    }

    #[test]
    fn sweep_rejects_oversized_latent() {
        let dataset = vec![LandscapeVector { values: vec![0.5; 32], source_id: None }];
        let cfg = TrainConfig::default();
        assert!(matches!(
            sweep(&[8], &[0.001], &dataset, &cfg),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn mds_recovers_2d_configurations() {
        let mut rng = SplitMix64::new(0xEE);
        let rows = 12;
        let pts: Vec<f64> = (0..rows * 2).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let emb = classical_mds(&pts, rows, 2).unwrap();
        let orig = pairwise(&pts, rows, 2);
        let got = pairwise(&emb.points, rows, 2);
        for (a, b) in orig.iter().zip(&got) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        // centered
        let mean_x: f64 = (0..rows).map(|i| emb.points[i * 2]).sum::<f64>() / rows as f64;
        let mean_y: f64 = (0..rows).map(|i| emb.points[i * 2 + 1]).sum::<f64>() / rows as f64;
        assert!(mean_x.abs() < 1e-9 && mean_y.abs() < 1e-9);
        assert!(emb.stress < 1e-6);
    }

    #[test]
    fn mds_345_triangle_from_5d() {
        // right triangle with side lengths 3, 4, 5 placed in 5 dimensions
        let pts = vec![
            0.0, 0.0, 0.0, 0.0, 0.0, //
            3.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, 4.0, 0.0, 0.0, 0.0,
        ];
        let emb = classical_mds(&pts, 3, 5).unwrap();
        let mut got = pairwise(&emb.points, 3, 2);
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [3.0, 4.0, 5.0];
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn mds_duplicate_rows_coincide() {
        let pts = vec![
            1.0, 2.0, //
            1.0, 2.0, //
            4.0, 6.0, //
            -1.0, 0.5,
        ];
        let emb = classical_mds(&pts, 4, 2).unwrap();
        let dx = emb.points[0] - emb.points[2];
        let dy = emb.points[1] - emb.points[3];
        assert!((dx * dx + dy * dy).sqrt() < 1e-9);
    }

    #[test]
    fn mds_rejects_bad_input() {
        assert!(matches!(
            classical_mds(&[0.0; 4], 2, 2),
            Err(Error::InsufficientSamples { .. })
        ));
        assert!(matches!(
            classical_mds(&[0.0, f64::NAN, 0.0, 1.0, 2.0, 3.0], 3, 2),
            Err(Error::NonFiniteInput { .. })
        ));
    }

    #[test]
    fn mds_stress_invariant_under_orthogonal_input_transform() {
        let mut rng = SplitMix64::new(0xBEE);
        let rows = 10;
        let cols = 6;
        let pts: Vec<f64> = (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let q = random_orthogonal(cols, 5);
        let mut rotated = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                rotated[i * cols + j] = (0..cols)
                    .map(|k| q[j * cols + k] * pts[i * cols + k])
                    .sum();
            }
        }
        let a = classical_mds(&pts, rows, cols).unwrap();
        let b = classical_mds(&rotated, rows, cols).unwrap();
        assert!((a.stress - b.stress).abs() < 1e-6);
    }

    #[test]
    fn traversal_contract() {
        let doe = sobol_points(5, 2).unwrap();
        let dataset: Vec<LandscapeVector> = (0..40)
            .map(|i| {
                let cfg = GeneratorConfig::new(2, 9000 + i);
                let expr = generate_filtered(&cfg, doe.as_slice()).unwrap();
                normalize_values(&evaluate(&expr, doe.as_slice(), 2).unwrap()).unwrap()
            })
            .collect();
        let cfg = TrainConfig { epochs: 2, seed: 3, ..TrainConfig::default() };
        let model = train(&dataset, &cfg, ModelKind::Vae, 4).unwrap();

        let z0 = vec![0.1, -0.2, 0.3, 0.0];
        let deltas = [-0.5, 0.0, 0.5];
        let frames = latent_traversal(&model, &z0, 1, &deltas).unwrap();
        assert_eq!(frames.len(), 3);
        let anchor = decode(&model, &z0).unwrap();
        assert_eq!(frames[1].values, anchor.values);

        let zeros = [0.0; 4];
        let frames = latent_traversal(&model, &z0, 2, &zeros).unwrap();
        assert_eq!(frames.len(), 4);
        for f in &frames {
            assert_eq!(f.values, anchor.values);
        }

        assert!(matches!(
            latent_traversal(&model, &z0, 4, &deltas),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
