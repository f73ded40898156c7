//! Byte-level readers and writers for the model, dataset, archive and
//! function-suite formats, plus content fingerprints.
//!
//! All binary layouts are little-endian. Weights and landscape values are
//! stored as `f32` (compute stays in `f64`); re-reading and re-writing a
//! file reproduces it byte for byte. Files are written atomically via a
//! temp-file rename in the target directory.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{Activation, DenseLayer};
use crate::randfunc::{parse_with_dim, serialize, FunctionExpr};
use crate::retrieval::{ArchiveEntry, DoeDescriptor, FunctionArchive};
use crate::sampling::LandscapeVector;
use crate::vae::{ModelKind, ModelWeights, TrainMeta};

const MODEL_MAGIC: &[u8; 4] = b"D2V1";
const DATASET_MAGIC: &[u8; 4] = b"D2VD";
const ARCHIVE_HEADER: &str = "D2V-ARCHIVE 1";

/// 64-bit FNV-1a streaming hasher.
#[derive(Debug, Clone)]
pub struct Fnv1a {
    state: u64,
}

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a { state: 0xCBF2_9CE4_8422_2325 }
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.state ^= b as u64;
            self.state = self.state.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = Fnv1a::new();
    h.write(bytes);
    h.finish()
}

/// Content hash plus format identification for a serialized artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileFingerprint {
    pub hash: u64,
    pub format: &'static str,
    pub version: u32,
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------- reader

/// Cursor over a byte buffer with corruption-aware reads.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Corruption { message: "truncated file".into() });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

// ----------------------------------------------------------------- model

#[derive(Serialize, Deserialize)]
struct MetaBlock {
    beta: f64,
    train: TrainMeta,
}

fn activation_code(a: Activation) -> u32 {
    match a {
        Activation::Relu => 0,
        Activation::Sigmoid => 1,
        Activation::Identity => 2,
    }
}

fn activation_from_code(code: u32) -> Result<Activation> {
    match code {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::Sigmoid),
        2 => Ok(Activation::Identity),
        other => Err(Error::Corruption { message: format!("unknown activation code {other}") }),
    }
}

/// Serialize a model to its canonical `D2V1` byte form.
pub fn model_to_bytes(model: &ModelWeights) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    let kind = match model.kind {
        ModelKind::Ae => 0u32,
        ModelKind::Vae => 1u32,
    };
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(model.n as u32).to_le_bytes());
    out.extend_from_slice(&(model.ls as u32).to_le_bytes());
    let layers = model.layers();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for layer in &layers {
        out.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
        out.extend_from_slice(&activation_code(layer.activation).to_le_bytes());
        for &w in &layer.w {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
        for &b in &layer.b {
            out.extend_from_slice(&(b as f32).to_le_bytes());
        }
    }
    let meta = MetaBlock { beta: model.kl_weight, train: model.meta.clone() };
    let json = serde_json::to_vec(&meta).expect("metadata serializes");
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out
}

/// Content fingerprint of a model: FNV-1a over its canonical byte form.
pub fn model_fingerprint(model: &ModelWeights) -> u64 {
    fnv1a(&model_to_bytes(model))
}

pub fn write_model(path: &Path, model: &ModelWeights) -> Result<()> {
    atomic_write(path, &model_to_bytes(model))
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<ModelWeights> {
    if bytes.len() < 4 {
        return Err(Error::FormatError { message: "file shorter than magic".into() });
    }
    let magic = &bytes[..4];
    if magic != MODEL_MAGIC {
        // same family, different version digit -> version error
        if &magic[..3] == b"D2V" && magic[3].is_ascii_digit() {
            return Err(Error::UnsupportedVersion {
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        return Err(Error::FormatError {
            message: format!("bad magic {:?}", String::from_utf8_lossy(magic)),
        });
    }
    let mut r = Reader::new(&bytes[4..]);
    let kind = match r.u32()? {
        0 => ModelKind::Ae,
        1 => ModelKind::Vae,
        other => return Err(Error::Corruption { message: format!("unknown model kind {other}") }),
    };
    let n = r.u32()? as usize;
    let ls = r.u32()? as usize;
    let layer_count = r.u32()? as usize;
    let expected_layers = match kind {
        ModelKind::Ae => 6,
        ModelKind::Vae => 7,
    };
    if layer_count != expected_layers {
        return Err(Error::Corruption {
            message: format!("expected {expected_layers} layers, found {layer_count}"),
        });
    }
    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        let activation = activation_from_code(r.u32()?)?;
        let mut w = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..in_dim * out_dim {
            w.push(r.f32()? as f64);
        }
        let mut b = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            b.push(r.f32()? as f64);
        }
        layers.push(DenseLayer { in_dim, out_dim, w, b, activation });
    }
    let json_len = r.u32()? as usize;
    let json = r.take(json_len)?;
    if !r.done() {
        return Err(Error::Corruption { message: "trailing bytes after metadata".into() });
    }
    let meta: MetaBlock = serde_json::from_slice(json)
        .map_err(|e| Error::Corruption { message: format!("metadata block: {e}") })?;

    let mut iter = layers.into_iter();
    let encoder: Vec<DenseLayer> = vec![iter.next().unwrap(), iter.next().unwrap()];
    let mu_head = iter.next().unwrap();
    let sigma_head = match kind {
        ModelKind::Vae => Some(iter.next().unwrap()),
        ModelKind::Ae => None,
    };
    let decoder: Vec<DenseLayer> = iter.collect();
    let model = ModelWeights {
        kind,
        n,
        ls,
        encoder,
        mu_head,
        sigma_head,
        decoder,
        kl_weight: meta.beta,
        meta: meta.train,
    };
    // structural sanity
    if model.decoder.len() != 3
        || model.encoder[0].in_dim != n
        || model.mu_head.out_dim != ls
        || model.decoder[2].out_dim != n
    {
        return Err(Error::Corruption { message: "inconsistent layer dimensions".into() });
    }
    Ok(model)
}

pub fn read_model(path: &Path) -> Result<ModelWeights> {
    model_from_bytes(&fs::read(path)?)
}

// --------------------------------------------------------------- dataset

/// Serialize a landscape collection to its canonical `D2VD` version-1 form.
/// `d` records the input dimension of the generating functions.
pub fn dataset_to_bytes(records: &[LandscapeVector], d: usize) -> Result<Vec<u8>> {
    let n = records.first().map_or(0, |r| r.len());
    for r in records {
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                context: "dataset record",
                expected: n,
                actual: r.len(),
            });
        }
    }
    let mut out = Vec::with_capacity(4 + 4 + 4 + 4 + 8 + records.len() * n * 4);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&1u32.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for r in records {
        for &v in &r.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, records: &[LandscapeVector], d: usize) -> Result<()> {
    atomic_write(path, &dataset_to_bytes(records, d)?)
}

/// Read a dataset; returns the records and the recorded function dimension.
pub fn dataset_from_bytes(bytes: &[u8]) -> Result<(Vec<LandscapeVector>, usize)> {
    if bytes.len() < 4 {
        return Err(Error::FormatError { message: "file shorter than magic".into() });
    }
    if &bytes[..4] != DATASET_MAGIC {
        return Err(Error::FormatError {
            message: format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4])),
        });
    }
    let mut r = Reader::new(&bytes[4..]);
    let version = r.u32()?;
    if version != 1 {
        return Err(Error::UnsupportedVersion { found: format!("D2VD v{version}") });
    }
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    let count = r.u64()? as usize;
    let expected = count * n * 4;
    if self_remaining(&r) != expected {
        return Err(Error::Corruption {
            message: format!(
                "payload holds {} bytes, header implies {expected}",
                self_remaining(&r)
            ),
        });
    }
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(r.f32()? as f64);
        }
        records.push(LandscapeVector { values, source_id: None });
    }
    Ok((records, d))
}

fn self_remaining(r: &Reader<'_>) -> usize {
    r.bytes.len() - r.pos
}

pub fn read_dataset(path: &Path) -> Result<(Vec<LandscapeVector>, usize)> {
    dataset_from_bytes(&fs::read(path)?)
}

/// Fingerprint of a dataset file's canonical bytes.
pub fn dataset_file_fingerprint(path: &Path) -> Result<FileFingerprint> {
    let bytes = fs::read(path)?;
    Ok(FileFingerprint { hash: fnv1a(&bytes), format: "D2VD", version: 1 })
}

// --------------------------------------------------------------- archive

pub fn archive_to_string(archive: &FunctionArchive) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    out.push_str(ARCHIVE_HEADER);
    out.push('\n');
    let _ = writeln!(out, "{:016x}", archive.model_fingerprint);
    let _ = write!(out, "{} {}", archive.doe.m, archive.doe.d);
    for v in &archive.doe.lower {
        let _ = write!(out, " {v}");
    }
    for v in &archive.doe.upper {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
    for entry in &archive.entries {
        out.push_str(&entry.expr_text);
        out.push('\t');
        for (i, v) in entry.latent.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.8e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_archive(path: &Path, archive: &FunctionArchive) -> Result<()> {
    atomic_write(path, archive_to_string(archive).as_bytes())
}

pub fn archive_from_str(text: &str) -> Result<FunctionArchive> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::FormatError { message: "empty archive".into() })?;
    if header != ARCHIVE_HEADER {
        if let Some(rest) = header.strip_prefix("D2V-ARCHIVE ") {
            return Err(Error::UnsupportedVersion { found: format!("D2V-ARCHIVE {rest}") });
        }
        return Err(Error::FormatError { message: format!("bad archive header {header:?}") });
    }
    let fp_line = lines.next().ok_or(Error::Corruption { message: "missing fingerprint".into() })?;
    let model_fingerprint = u64::from_str_radix(fp_line.trim(), 16)
        .map_err(|_| Error::Corruption { message: format!("bad fingerprint {fp_line:?}") })?;
    let doe_line = lines.next().ok_or(Error::Corruption { message: "missing DoE descriptor".into() })?;
    let fields: Vec<&str> = doe_line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::Corruption { message: "short DoE descriptor".into() });
    }
    let m: usize = fields[0]
        .parse()
        .map_err(|_| Error::Corruption { message: "bad DoE exponent".into() })?;
    let d: usize = fields[1]
        .parse()
        .map_err(|_| Error::Corruption { message: "bad DoE dimension".into() })?;
    if fields.len() != 2 + 2 * d {
        return Err(Error::Corruption {
            message: format!("DoE descriptor needs {} bounds, found {}", 2 * d, fields.len() - 2),
        });
    }
    let parse_f = |s: &str| -> Result<f64> {
        s.parse().map_err(|_| Error::Corruption { message: format!("bad bound {s:?}") })
    };
    let lower: Vec<f64> = fields[2..2 + d].iter().map(|s| parse_f(s)).collect::<Result<_>>()?;
    let upper: Vec<f64> =
        fields[2 + d..2 + 2 * d].iter().map(|s| parse_f(s)).collect::<Result<_>>()?;

    let mut entries = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (expr_text, latent_text) = line.split_once('\t').ok_or(Error::Corruption {
            message: "entry line missing tab separator".into(),
        })?;
        let latent: Vec<f64> = latent_text
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Corruption { message: format!("bad latent value {t:?}") })
            })
            .collect::<Result<_>>()?;
        entries.push(ArchiveEntry { expr_text: expr_text.to_string(), latent });
    }
    let archive = FunctionArchive {
        model_fingerprint,
        doe: DoeDescriptor { m, d, lower, upper },
        entries,
    };
    if let Some(first) = archive.entries.first() {
        let width = first.latent.len();
        if archive.entries.iter().any(|e| e.latent.len() != width) {
            return Err(Error::Corruption { message: "inconsistent latent widths".into() });
        }
    }
    Ok(archive)
}

pub fn read_archive(path: &Path) -> Result<FunctionArchive> {
    archive_from_str(&fs::read_to_string(path)?)
}

// ----------------------------------------------------------------- suite

/// Write a function suite: a dimension comment followed by one expression
/// per line.
pub fn write_suite(path: &Path, exprs: &[FunctionExpr], d: usize) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# dim {d}\n"));
    for e in exprs {
        out.push_str(&serialize(e));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Read a function suite. The dimension comes from the `# dim` header when
/// present, otherwise from the largest variable index used.
pub fn read_suite(path: &Path) -> Result<(Vec<FunctionExpr>, usize)> {
    let text = fs::read_to_string(path)?;
    let mut d_header: Option<usize> = None;
    let mut body: Vec<&str> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("dim ") {
                d_header = v.trim().parse().ok();
            }
            continue;
        }
        body.push(trimmed);
    }
    let d = match d_header {
        Some(d) => d,
        None => {
            let mut max_d = 1;
            for line in &body {
                let expr = crate::randfunc::parse(line)?;
                max_d = max_d.max(expr.d);
            }
            max_d
        }
    };
    let exprs: Vec<FunctionExpr> =
        body.iter().map(|line| parse_with_dim(line, d)).collect::<Result<_>>()?;
    Ok((exprs, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randfunc::{generate, GeneratorConfig};
    use crate::vae::{encode, train, TrainConfig};
    use tempdir::tempdir;

    mod tempdir {
        use std::path::PathBuf;

        pub struct TempDir(PathBuf);

        impl TempDir {
            pub fn path(&self) -> &std::path::Path {
                &self.0
            }
        }

        impl Drop for TempDir {
            fn drop(&mut self) {
                let _ = std::fs::remove_dir_all(&self.0);
            }
        }

        pub fn tempdir() -> TempDir {
            let mut p = std::env::temp_dir();
            let unique = format!(
                "doe2vec-test-{}-{:x}",
                std::process::id(),
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .unwrap()
                    .as_nanos()
            );
            p.push(unique);
            std::fs::create_dir_all(&p).unwrap();
            TempDir(p)
        }
    }

    fn small_model() -> ModelWeights {
        let doe = crate::sampling::sobol_points(5, 2).unwrap();
        let dataset: Vec<LandscapeVector> = (0..40)
            .map(|i| {
                let cfg = GeneratorConfig::new(2, i);
                let expr = crate::randfunc::generate_filtered(&cfg, doe.as_slice()).unwrap();
                let raw = crate::randfunc::evaluate(&expr, doe.as_slice(), 2).unwrap();
                crate::sampling::normalize_values(&raw).unwrap()
            })
            .collect();
        let cfg = TrainConfig { epochs: 3, seed: 11, ..TrainConfig::default() };
        train(&dataset, &cfg, crate::vae::ModelKind::Vae, 4).unwrap()
    }

    #[test]
    fn fnv_reference_value() {
        // FNV-1a 64 of "a" is a published constant
        assert_eq!(fnv1a(b"a"), 0xAF63_DC4C_8601_EC8C);
        assert_eq!(fnv1a(b""), 0xCBF2_9CE4_8422_2325);
    }

    #[test]
    fn model_roundtrip_preserves_structure() {
        let dir = tempdir();
        let model = small_model();
        let path = dir.path().join("model.d2v");
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.kind, model.kind);
        assert_eq!(back.n, model.n);
        assert_eq!(back.ls, model.ls);
        assert_eq!(back.kl_weight, model.kl_weight);
        assert_eq!(back.meta.seed, model.meta.seed);
        assert_eq!(back.meta.dataset_fingerprint, model.meta.dataset_fingerprint);
        for (a, b) in model.layers().iter().zip(back.layers().iter()) {
            assert_eq!(a.in_dim, b.in_dim);
            assert_eq!(a.out_dim, b.out_dim);
            assert_eq!(a.activation, b.activation);
            for (x, y) in a.w.iter().zip(&b.w) {
                let rel = (x - y).abs() / x.abs().max(1e-12);
                assert!(rel <= 1e-6 || (x - y).abs() < 1e-9);
            }
        }
        // encodings barely move under f32 quantization
        let x = LandscapeVector { values: vec![0.3; model.n], source_id: None };
        let za = encode(&model, &x).unwrap();
        let zb = encode(&back, &x).unwrap();
        for (a, b) in za.iter().zip(&zb) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn model_rewrite_is_byte_identical() {
        let dir = tempdir();
        let model = small_model();
        let path = dir.path().join("model.d2v");
        write_model(&path, &model).unwrap();
        let bytes1 = fs::read(&path).unwrap();
        let back = read_model(&path).unwrap();
        let bytes2 = model_to_bytes(&back);
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn model_bad_magic() {
        assert!(matches!(
            model_from_bytes(b"XXXXrest"),
            Err(Error::FormatError { .. })
        ));
    }

    #[test]
    fn model_future_version() {
        assert!(matches!(
            model_from_bytes(b"D2V2rest"),
            Err(Error::UnsupportedVersion { .. })
        ));
    }

    #[test]
    fn model_truncation_detected() {
        let model = small_model();
        let bytes = model_to_bytes(&model);
        let cut = &bytes[..bytes.len() - 7];
        assert!(matches!(
            model_from_bytes(cut),
            Err(Error::Corruption { .. })
        ));
    }

    #[test]
    fn dataset_roundtrip() {
        let dir = tempdir();
        let records: Vec<LandscapeVector> = (0..10)
            .map(|i| LandscapeVector {
                values: (0..16).map(|j| ((i * 16 + j) as f64 / 160.0)).collect(),
                source_id: None,
            })
            .collect();
        let path = dir.path().join("data.d2vd");
        write_dataset(&path, &records, 3).unwrap();
        let bytes1 = fs::read(&path).unwrap();
        let (back, d) = read_dataset(&path).unwrap();
        assert_eq!(d, 3);
        assert_eq!(back.len(), 10);
        // rewrite is byte identical
        let bytes2 = dataset_to_bytes(&back, d).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn dataset_empty_is_valid() {
        let bytes = dataset_to_bytes(&[], 2).unwrap();
        let (records, d) = dataset_from_bytes(&bytes).unwrap();
        assert!(records.is_empty());
        assert_eq!(d, 2);
    }

    #[test]
    fn dataset_count_mismatch_is_corruption() {
        let records: Vec<LandscapeVector> = (0..10)
            .map(|_| LandscapeVector { values: vec![0.5; 8], source_id: None })
            .collect();
        let mut bytes = dataset_to_bytes(&records, 2).unwrap();
        // drop one record's worth of payload
        bytes.truncate(bytes.len() - 8 * 4);
        assert!(matches!(
            dataset_from_bytes(&bytes),
            Err(Error::Corruption { .. })
        ));
    }

    #[test]
    fn dataset_version_check() {
        let mut bytes = dataset_to_bytes(&[], 2).unwrap();
        bytes[4] = 9; // bump version field
        assert!(matches!(
            dataset_from_bytes(&bytes),
            Err(Error::UnsupportedVersion { .. })
        ));
        assert!(matches!(
            dataset_from_bytes(b"NOPE"),
            Err(Error::FormatError { .. })
        ));
    }

    #[test]
    fn suite_roundtrip() {
        let dir = tempdir();
        let exprs: Vec<FunctionExpr> = (0..20)
            .map(|i| generate(&GeneratorConfig::new(3, i)).unwrap())
            .collect();
        let path = dir.path().join("suite.txt");
        write_suite(&path, &exprs, 3).unwrap();
        let (back, d) = read_suite(&path).unwrap();
        assert_eq!(d, 3);
        assert_eq!(back.len(), exprs.len());
        for (a, b) in exprs.iter().zip(&back) {
            assert_eq!(a.root, b.root);
        }
    }

    #[test]
    fn archive_roundtrip() {
        let dir = tempdir();
        let archive = FunctionArchive {
            model_fingerprint: 0xDEAD_BEEF_0123_4567,
            doe: DoeDescriptor { m: 6, d: 2, lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
            entries: vec![
                ArchiveEntry { expr_text: "(add x0 x1)".into(), latent: vec![0.25, -1.5] },
                ArchiveEntry { expr_text: "(sin x0)".into(), latent: vec![1e-3, 2.0] },
            ],
        };
        let path = dir.path().join("archive.txt");
        write_archive(&path, &archive).unwrap();
        let back = read_archive(&path).unwrap();
        assert_eq!(back.model_fingerprint, archive.model_fingerprint);
        assert_eq!(back.doe.m, 6);
        assert_eq!(back.entries.len(), 2);
        for (a, b) in archive.entries.iter().zip(&back.entries) {
            assert_eq!(a.expr_text, b.expr_text);
            for (x, y) in a.latent.iter().zip(&b.latent) {
                assert!((x - y).abs() < 1e-8 * x.abs().max(1.0));
            }
        }
        // header rejections
        assert!(matches!(
            archive_from_str("D2V-ARCHIVE 2\n0\n1 1 0 1\n"),
            Err(Error::UnsupportedVersion { .. })
        ));
        assert!(matches!(
            archive_from_str("garbage\n"),
            Err(Error::FormatError { .. })
        ));
    }
}
