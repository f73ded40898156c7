//! Archive of random functions keyed by latent vectors, with exact
//! nearest-neighbor lookup for surrogate retrieval.
//!
//! Lookup is a brute-force linear scan: archives at desk scale hold at most
//! around a million short vectors, exactness keeps the contract testable,
//! and an index could be slotted in behind the same signatures later.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::persistence::model_fingerprint;
use crate::randfunc::{evaluate, serialize, FunctionExpr};
use crate::sampling::{normalize_values, rescale, sobol_points};
use crate::vae::{encode, LatentVector, ModelWeights};

/// The design an archive's landscapes were evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub struct DoeDescriptor {
    pub m: usize,
    pub d: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DoeDescriptor {
    /// Unit-cube descriptor.
    pub fn unit(m: usize, d: usize) -> Self {
        DoeDescriptor { m, d, lower: vec![0.0; d], upper: vec![1.0; d] }
    }

    pub fn n(&self) -> usize {
        1 << self.m
    }

    /// Materialize the (rescaled) evaluation points.
    pub fn points(&self) -> Result<Vec<f64>> {
        let doe = sobol_points(self.m, self.d)?;
        if self.lower.iter().all(|&v| v == 0.0) && self.upper.iter().all(|&v| v == 1.0) {
            Ok(doe.as_slice().to_vec())
        } else {
            rescale(&doe, &self.lower, &self.upper)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArchiveEntry {
    pub expr_text: String,
    pub latent: LatentVector,
}

/// Functions paired with their latent representations under one model.
#[derive(Debug, Clone)]
pub struct FunctionArchive {
    pub model_fingerprint: u64,
    pub doe: DoeDescriptor,
    pub entries: Vec<ArchiveEntry>,
}

impl FunctionArchive {
    pub fn latent_len(&self) -> usize {
        self.entries.first().map_or(0, |e| e.latent.len())
    }
}

/// Evaluate, normalize and encode every function on the descriptor's design.
/// Functions with constant values are skipped; the second return value
/// counts them. Entry order follows input order.
pub fn build_archive(
    model: &ModelWeights,
    functions: &[FunctionExpr],
    doe: &DoeDescriptor,
) -> Result<(FunctionArchive, usize)> {
    if model.n != doe.n() {
        return Err(Error::Incompatibility {
            message: format!(
                "model expects input size {}, design provides {}",
                model.n,
                doe.n()
            ),
        });
    }
    let points = doe.points()?;
    let encoded: Vec<Option<ArchiveEntry>> = functions
        .par_iter()
        .map(|expr| {
            let raw = evaluate(expr, &points, doe.d)?;
            let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(max > min) {
                return Ok(None); // constant landscape, no signal
            }
            let landscape = normalize_values(&raw)?;
            let latent = encode(model, &landscape)?;
            Ok(Some(ArchiveEntry { expr_text: serialize(expr), latent }))
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(functions.len());
    let mut skipped = 0usize;
    for e in encoded {
        match e {
            Some(entry) => entries.push(entry),
            None => skipped += 1,
        }
    }
    Ok((
        FunctionArchive {
            model_fingerprint: model_fingerprint(model),
            doe: doe.clone(),
            entries,
        },
        skipped,
    ))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The `k` archive entries closest to `query` in Euclidean distance,
/// ascending, ties broken by lower index. Exact linear scan.
pub fn nearest(archive: &FunctionArchive, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
    let width = archive.latent_len();
    if archive.entries.is_empty() || k == 0 || k > archive.entries.len() {
        return Err(Error::InvalidK { k, entries: archive.entries.len() });
    }
    if query.len() != width {
        return Err(Error::DimensionMismatch {
            context: "nearest query",
            expected: width,
            actual: query.len(),
        });
    }
    let mut scored: Vec<(usize, f64)> = archive
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (i, euclidean(&e.latent, query)))
        .collect();
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Full retrieval pipeline for raw objective values measured on the
/// archive's design: normalize, encode, and rank the `k` nearest entries.
/// The model must be the one the archive was built with.
pub fn query_landscape(
    model: &ModelWeights,
    archive: &FunctionArchive,
    raw_y: &[f64],
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    let fp = model_fingerprint(model);
    if fp != archive.model_fingerprint {
        return Err(Error::Incompatibility {
            message: format!(
                "model fingerprint {fp:016x} does not match archive {:016x}",
                archive.model_fingerprint
            ),
        });
    }
    if raw_y.len() != model.n {
        return Err(Error::DimensionMismatch {
            context: "query_landscape",
            expected: model.n,
            actual: raw_y.len(),
        });
    }
    let landscape = normalize_values(raw_y)?;
    let z = encode(model, &landscape)?;
    nearest(archive, &z, k)
}
