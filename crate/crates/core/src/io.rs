//! On-disk formats: binary checkpoints and embedding datasets, plus
//! delimiter-separated text for sidecars, segments, frame features and
//! analysis reports.
//!
//! Binary layouts are little-endian throughout. Checkpoint files carry
//! magic `CNFP`, embedding datasets `CNFE`, both with a format version
//! so later revisions can evolve the layout. Parsers validate
//! exhaustively (magic, version, size caps, exact byte length, finite
//! floats) so arbitrary bytes never panic and never round-trip into an
//! invalid structure.
//!
//! Text files are comma-separated with a mandatory header line; parse
//! errors carry 1-based line numbers. Floats are written with Rust's
//! shortest round-trip formatting, so write-then-parse is lossless.

use crate::analysis::{CorrelationReport, DeltaRecord, SummaryTable};
use crate::attributes::FrameFeatures;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{DenseLayer, Mlp};
use crate::synthdata::{validate_segments, PhonemeClass, PhonemeSegment};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

const CHECKPOINT_MAGIC: &[u8; 4] = b"CNFP";
const EMBEDDINGS_MAGIC: &[u8; 4] = b"CNFE";
const FORMAT_VERSION: u32 = 1;

/// Size caps keep hostile headers from driving huge allocations.
const MAX_DIM: u32 = 65_536;
const MAX_HIDDEN: u32 = 65_536;
const MAX_LAYERS: u32 = 64;
const MAX_ROWS: u32 = 10_000_000;

// ---------------------------------------------------------------------
// binary primitives

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| {
                Error::parse(
                    None,
                    format!("truncated file: {what} needs {n} bytes at offset {}", self.pos),
                )
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64_slice(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let total = n
            .checked_mul(8)
            .ok_or_else(|| Error::parse(None, format!("{what}: size overflow")))?;
        let raw = self.take(total, what)?;
        let mut out = Vec::with_capacity(n);
        for (i, chunk) in raw.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
            if !v.is_finite() {
                return Err(Error::parse(None, format!("{what}: non-finite value at index {i}")));
            }
            out.push(v);
        }
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::parse(
                None,
                format!(
                    "{} trailing bytes after expected end of file",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        Ok(())
    }
}

fn expect_magic(reader: &mut ByteReader<'_>, magic: &[u8; 4]) -> Result<()> {
    let got = reader.take(4, "magic bytes")?;
    if got != magic {
        return Err(Error::parse(
            None,
            format!(
                "bad magic: expected {:?}, got {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(got)
            ),
        ));
    }
    Ok(())
}

fn expect_version(reader: &mut ByteReader<'_>) -> Result<()> {
    let version = reader.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::parse(
            None,
            format!("unsupported format version {version} (expected {FORMAT_VERSION})"),
        ));
    }
    Ok(())
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

// ---------------------------------------------------------------------
// checkpoints (CNFP)

/// Serializes network parameters: header, then per layer the row-major
/// weights followed by the bias.
pub fn checkpoint_to_bytes(params: &Mlp) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * params.n_params());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.embedding_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(params.hidden_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(params.layers().len() as u32).to_le_bytes());
    for layer in params.layers() {
        push_f64s(&mut out, layer.weight.data());
        push_f64s(&mut out, &layer.bias);
    }
    out
}

/// Parses a checkpoint, validating header fields, layer shapes, exact
/// length and float finiteness.
pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Mlp> {
    let mut r = ByteReader::new(bytes);
    expect_magic(&mut r, CHECKPOINT_MAGIC)?;
    expect_version(&mut r)?;
    let dim = r.u32("embedding dim")?;
    let hidden = r.u32("hidden dim")?;
    let n_layers = r.u32("layer count")?;
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::parse(None, format!("embedding dim {dim} outside 1..={MAX_DIM}")));
    }
    if hidden > MAX_HIDDEN {
        return Err(Error::parse(None, format!("hidden dim {hidden} exceeds {MAX_HIDDEN}")));
    }
    if n_layers == 0 || n_layers > MAX_LAYERS {
        return Err(Error::parse(
            None,
            format!("layer count {n_layers} outside 1..={MAX_LAYERS}"),
        ));
    }
    if n_layers == 1 && hidden != 0 {
        return Err(Error::parse(
            None,
            "single-layer checkpoint must declare hidden dim 0".to_string(),
        ));
    }
    if n_layers > 1 && hidden == 0 {
        return Err(Error::parse(
            None,
            "multi-layer checkpoint must declare a positive hidden dim".to_string(),
        ));
    }
    let dim = dim as usize;
    let hidden = hidden as usize;
    let n_layers = n_layers as usize;
    let input = dim + 2;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let rows = if i + 1 == n_layers { dim } else { hidden };
        let cols = if i == 0 { input } else { hidden };
        let what = format!("layer {i} weights");
        let weight = Matrix::from_vec(rows, cols, r.f64_slice(rows * cols, &what)?)?;
        let bias = r.f64_slice(rows, &format!("layer {i} bias"))?;
        layers.push(DenseLayer { weight, bias });
    }
    r.finish()?;
    let params = Mlp::from_layers(dim, layers)?;
    if params.hidden_dim() != hidden {
        return Err(Error::parse(
            None,
            format!(
                "declared hidden dim {hidden} does not match layer shapes ({})",
                params.hidden_dim()
            ),
        ));
    }
    Ok(params)
}

pub fn write_checkpoint(path: &Path, params: &Mlp) -> Result<()> {
    write_atomic(path, &checkpoint_to_bytes(params))
}

pub fn read_checkpoint(path: &Path) -> Result<Mlp> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes)
}

// ---------------------------------------------------------------------
// embedding datasets (CNFE)

/// Serializes embeddings row-wise (one row per sample).
pub fn embeddings_to_bytes(embeddings: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * embeddings.data().len());
    out.extend_from_slice(EMBEDDINGS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(embeddings.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(embeddings.cols() as u32).to_le_bytes());
    push_f64s(&mut out, embeddings.data());
    out
}

pub fn embeddings_from_bytes(bytes: &[u8]) -> Result<Matrix> {
    let mut r = ByteReader::new(bytes);
    expect_magic(&mut r, EMBEDDINGS_MAGIC)?;
    expect_version(&mut r)?;
    let n = r.u32("row count")?;
    let dim = r.u32("embedding dim")?;
    if n == 0 || n > MAX_ROWS {
        return Err(Error::parse(None, format!("row count {n} outside 1..={MAX_ROWS}")));
    }
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::parse(None, format!("embedding dim {dim} outside 1..={MAX_DIM}")));
    }
    let total = (n as usize)
        .checked_mul(dim as usize)
        .ok_or_else(|| Error::parse(None, "embedding size overflow".to_string()))?;
    let data = r.f64_slice(total, "embedding rows")?;
    r.finish()?;
    Matrix::from_vec(n as usize, dim as usize, data)
}

pub fn write_embeddings(path: &Path, embeddings: &Matrix) -> Result<()> {
    write_atomic(path, &embeddings_to_bytes(embeddings))
}

pub fn read_embeddings(path: &Path) -> Result<Matrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    embeddings_from_bytes(&bytes)
}

// ---------------------------------------------------------------------
// delimiter-separated text

fn parse_lines<'a>(
    text: &'a str,
    expected_header: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == expected_header => {}
        Some((_, header)) => {
            return Err(Error::parse(
                Some(1),
                format!("expected header {expected_header:?}, got {header:?}"),
            ))
        }
        None => return Err(Error::parse(Some(1), "empty file".to_string())),
    }
    Ok(lines
        .map(|(i, line)| (i + 1, line.trim_end()))
        .filter(|(_, line)| !line.is_empty()))
}

fn split_fields<'a>(line_no: usize, line: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n {
        return Err(Error::parse(
            Some(line_no),
            format!("expected {n} comma-separated fields, got {}", fields.len()),
        ));
    }
    Ok(fields)
}

fn parse_f64(line_no: usize, what: &str, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(Some(line_no), format!("invalid {what}: {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(Some(line_no), format!("non-finite {what}: {field:?}")));
    }
    Ok(v)
}

fn parse_usize(line_no: usize, what: &str, field: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(Some(line_no), format!("invalid {what}: {field:?}")))
}

fn expect_index(line_no: usize, what: &str, field: &str, expected: usize) -> Result<()> {
    let got = parse_usize(line_no, what, field)?;
    if got != expected {
        return Err(Error::parse(
            Some(line_no),
            format!("{what} {got} out of order (expected {expected})"),
        ));
    }
    Ok(())
}

const SIDECAR_HEADER: &str = "index,a";
const SEGMENTS_HEADER: &str = "class,start_frame,end_frame";
const FRAME_FEATURES_HEADER: &str = "frame_index,energy,creak_probability";
const LOSS_CURVE_HEADER: &str = "iteration,nll";
const DELTAS_HEADER: &str = "frame,class,manipulation,delta";
const SUMMARY_HEADER: &str = "set,class,shift,mean,std,n";
const CORRELATIONS_HEADER: &str = "name,r,n";

/// Attribute sidecar: `index,a` with 0-based contiguous indices.
pub fn parse_attribute_sidecar(text: &str) -> Result<Vec<f64>> {
    let mut attrs = Vec::new();
    for (line_no, line) in parse_lines(text, SIDECAR_HEADER)? {
        let fields = split_fields(line_no, line, 2)?;
        expect_index(line_no, "index", fields[0], attrs.len())?;
        attrs.push(parse_f64(line_no, "attribute", fields[1])?);
    }
    if attrs.is_empty() {
        return Err(Error::parse(None, "sidecar has no rows".to_string()));
    }
    Ok(attrs)
}

pub fn render_attribute_sidecar(attrs: &[f64]) -> String {
    let mut out = String::from(SIDECAR_HEADER);
    out.push('\n');
    for (i, a) in attrs.iter().enumerate() {
        let _ = writeln!(out, "{i},{a}");
    }
    out
}

pub fn write_attribute_sidecar(path: &Path, attrs: &[f64]) -> Result<()> {
    write_atomic(path, render_attribute_sidecar(attrs).as_bytes())
}

/// Segment file: `class,start_frame,end_frame`; segments must tile
/// `[0, T)` where `T` is the last end frame.
pub fn parse_segments(text: &str) -> Result<Vec<PhonemeSegment>> {
    let mut segments = Vec::new();
    for (line_no, line) in parse_lines(text, SEGMENTS_HEADER)? {
        let fields = split_fields(line_no, line, 3)?;
        let class = PhonemeClass::parse(fields[0].trim())
            .map_err(|e| Error::parse(Some(line_no), e.to_string()))?;
        let start = parse_usize(line_no, "start_frame", fields[1])?;
        let end = parse_usize(line_no, "end_frame", fields[2])?;
        segments.push(PhonemeSegment::new(class, start, end));
    }
    let total = segments.last().map_or(0, |s| s.end_frame);
    validate_segments(&segments, total)
        .map_err(|e| Error::parse(None, e.to_string()))?;
    Ok(segments)
}

pub fn render_segments(segments: &[PhonemeSegment]) -> String {
    let mut out = String::from(SEGMENTS_HEADER);
    out.push('\n');
    for seg in segments {
        let _ = writeln!(out, "{},{},{}", seg.class.as_str(), seg.start_frame, seg.end_frame);
    }
    out
}

pub fn write_segments(path: &Path, segments: &[PhonemeSegment]) -> Result<()> {
    write_atomic(path, render_segments(segments).as_bytes())
}

/// Frame-feature file: `frame_index,energy,creak_probability` with
/// 0-based contiguous frame indices. The frame rate is not serialized;
/// parsed features use the default 100 Hz.
pub fn parse_frame_features(text: &str) -> Result<FrameFeatures> {
    let mut energy = Vec::new();
    let mut probs = Vec::new();
    for (line_no, line) in parse_lines(text, FRAME_FEATURES_HEADER)? {
        let fields = split_fields(line_no, line, 3)?;
        expect_index(line_no, "frame_index", fields[0], energy.len())?;
        energy.push(parse_f64(line_no, "energy", fields[1])?);
        probs.push(parse_f64(line_no, "creak_probability", fields[2])?);
    }
    FrameFeatures::new(energy, probs, 100.0).map_err(|e| Error::parse(None, e.to_string()))
}

pub fn render_frame_features(features: &FrameFeatures) -> String {
    let mut out = String::from(FRAME_FEATURES_HEADER);
    out.push('\n');
    for (i, (e, p)) in features
        .energy()
        .iter()
        .zip(features.creak_probability())
        .enumerate()
    {
        let _ = writeln!(out, "{i},{e},{p}");
    }
    out
}

pub fn write_frame_features(path: &Path, features: &FrameFeatures) -> Result<()> {
    write_atomic(path, render_frame_features(features).as_bytes())
}

pub fn render_loss_curve(losses: &[f64]) -> String {
    let mut out = String::from(LOSS_CURVE_HEADER);
    out.push('\n');
    for (i, loss) in losses.iter().enumerate() {
        let _ = writeln!(out, "{i},{loss}");
    }
    out
}

pub fn write_loss_curve(path: &Path, losses: &[f64]) -> Result<()> {
    write_atomic(path, render_loss_curve(losses).as_bytes())
}

pub fn parse_loss_curve(text: &str) -> Result<Vec<f64>> {
    let mut losses = Vec::new();
    for (line_no, line) in parse_lines(text, LOSS_CURVE_HEADER)? {
        let fields = split_fields(line_no, line, 2)?;
        expect_index(line_no, "iteration", fields[0], losses.len())?;
        losses.push(parse_f64(line_no, "nll", fields[1])?);
    }
    Ok(losses)
}

pub fn render_delta_records(records: &[DeltaRecord]) -> String {
    let mut out = String::from(DELTAS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.frame,
            r.class.as_str(),
            r.manipulation,
            r.value
        );
    }
    out
}

pub fn write_delta_records(path: &Path, records: &[DeltaRecord]) -> Result<()> {
    write_atomic(path, render_delta_records(records).as_bytes())
}

pub fn parse_delta_records(text: &str) -> Result<Vec<DeltaRecord>> {
    let mut records = Vec::new();
    for (line_no, line) in parse_lines(text, DELTAS_HEADER)? {
        let fields = split_fields(line_no, line, 4)?;
        let frame = parse_usize(line_no, "frame", fields[0])?;
        let class = PhonemeClass::parse(fields[1].trim())
            .map_err(|e| Error::parse(Some(line_no), e.to_string()))?;
        let manipulation = parse_f64(line_no, "manipulation", fields[2])?;
        let value = parse_f64(line_no, "delta", fields[3])?;
        if value < 0.0 {
            return Err(Error::parse(Some(line_no), format!("negative delta {value}")));
        }
        records.push(DeltaRecord {
            frame,
            manipulation,
            class,
            value,
        });
    }
    Ok(records)
}

pub fn write_summary(path: &Path, table: &SummaryTable) -> Result<()> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.set_label,
            row.class.as_str(),
            row.delta_mag,
            row.mean,
            row.std,
            row.n
        );
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_correlations(path: &Path, report: &CorrelationReport) -> Result<()> {
    let mut out = String::from(CORRELATIONS_HEADER);
    out.push('\n');
    for e in &report.entries {
        let _ = writeln!(out, "{},{},{}", e.name, e.r, e.n);
    }
    write_atomic(path, out.as_bytes())
}

// ---------------------------------------------------------------------
// atomic writes

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes via a unique temporary file in the target directory followed
/// by a rename, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let stamp = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let mut tmp_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("path {} has no file name", path.display())))?
        .to_os_string();
    tmp_name.push(format!(".tmp.{}.{stamp}", std::process::id()));
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp_path, bytes).map_err(|e| Error::io(&tmp_path, e))?;
    std::fs::rename(&tmp_path, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp_path);
        Error::io(path, e)
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{CorrelationEntry, SummaryRow};
    use crate::synthdata::PhonemeClass::*;

    #[test]
    fn checkpoint_round_trips_exactly() {
        for (dim, hidden, n_hidden) in [(4usize, 8usize, 2usize), (3, 5, 1), (2, 0, 0)] {
            let params = Mlp::with_init(dim, hidden, n_hidden, 42).unwrap();
            let bytes = checkpoint_to_bytes(&params);
            let back = checkpoint_from_bytes(&bytes).unwrap();
            assert_eq!(params, back);
            assert_eq!(bytes, checkpoint_to_bytes(&back));
        }
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let params = Mlp::with_init(3, 4, 1, 7).unwrap();
        let good = checkpoint_to_bytes(&params);

        assert!(checkpoint_from_bytes(&[]).is_err());
        assert!(checkpoint_from_bytes(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(checkpoint_from_bytes(&extra).is_err());

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(checkpoint_from_bytes(&bad_magic).is_err());

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(checkpoint_from_bytes(&bad_version).is_err());

        let mut nan = good.clone();
        let tail = nan.len() - 8;
        nan[tail..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(checkpoint_from_bytes(&nan).is_err());

        // Huge layer count must fail fast on the cap, not allocate.
        let mut huge = good.clone();
        huge[16..20].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(checkpoint_from_bytes(&huge).is_err());

        // Single layer with nonzero hidden dim is inconsistent.
        let single = Mlp::with_init(2, 0, 0, 1).unwrap();
        let mut bytes = checkpoint_to_bytes(&single);
        bytes[12..16].copy_from_slice(&4u32.to_le_bytes());
        assert!(checkpoint_from_bytes(&bytes).is_err());
    }

    #[test]
    fn checkpoint_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cnfp");
        let params = Mlp::with_init(5, 6, 2, 3).unwrap();
        write_checkpoint(&path, &params).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), params);
        assert!(std::fs::read_dir(dir.path()).unwrap().count() == 1, "no temp leftovers");
    }

    #[test]
    fn embeddings_round_trip_and_rejects() {
        let m = Matrix::from_rows(vec![vec![1.0, -2.5], vec![0.25, 1e300]]).unwrap();
        let bytes = embeddings_to_bytes(&m);
        assert_eq!(embeddings_from_bytes(&bytes).unwrap(), m);

        assert!(embeddings_from_bytes(b"CNFE").is_err());
        let mut zero_rows = bytes.clone();
        zero_rows[8..12].copy_from_slice(&0u32.to_le_bytes());
        assert!(embeddings_from_bytes(&zero_rows).is_err());
        let mut truncated = bytes.clone();
        truncated.truncate(bytes.len() - 3);
        assert!(embeddings_from_bytes(&truncated).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.cnfe");
        write_embeddings(&path, &m).unwrap();
        assert_eq!(read_embeddings(&path).unwrap(), m);
    }

    #[test]
    fn sidecar_round_trip_and_errors() {
        let attrs = vec![0.0, 0.123456789012345, 1.0];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attrs.csv");
        write_attribute_sidecar(&path, &attrs).unwrap();
        let text = read_text(&path).unwrap();
        assert_eq!(parse_attribute_sidecar(&text).unwrap(), attrs);

        assert!(parse_attribute_sidecar("").is_err());
        assert!(parse_attribute_sidecar("wrong,header\n0,0.5\n").is_err());
        assert!(parse_attribute_sidecar("index,a\n").is_err());
        assert!(parse_attribute_sidecar("index,a\n1,0.5\n").is_err());
        assert!(parse_attribute_sidecar("index,a\n0,0.5\n0,0.6\n").is_err());
        assert!(parse_attribute_sidecar("index,a\n0,oops\n").is_err());
        match parse_attribute_sidecar("index,a\n0,0.5\n1,nan\n") {
            Err(Error::Parse { line: Some(3), .. }) => {}
            other => panic!("expected line-3 parse error, got {other:?}"),
        }
    }

    #[test]
    fn segments_round_trip_and_validation() {
        let segments = vec![
            PhonemeSegment::new(Voiced, 0, 4),
            PhonemeSegment::new(Unvoiced, 4, 7),
            PhonemeSegment::new(Silence, 7, 12),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("segments.csv");
        write_segments(&path, &segments).unwrap();
        let text = read_text(&path).unwrap();
        assert_eq!(parse_segments(&text).unwrap(), segments);

        assert!(parse_segments("class,start_frame,end_frame\nvoiced,0,0\n").is_err());
        assert!(parse_segments("class,start_frame,end_frame\nvoiced,1,3\n").is_err());
        assert!(
            parse_segments("class,start_frame,end_frame\nvoiced,0,3\nsilence,4,6\n").is_err()
        );
        assert!(parse_segments("class,start_frame,end_frame\nhummed,0,3\n").is_err());
        assert_eq!(parse_segments("class,start_frame,end_frame\n").unwrap(), vec![]);
    }

    #[test]
    fn frame_features_round_trip() {
        let features = FrameFeatures::new(vec![1.0, 0.7, 0.0], vec![0.5, 0.0, 0.0], 100.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_frame_features(&path, &features).unwrap();
        let text = read_text(&path).unwrap();
        let back = parse_frame_features(&text).unwrap();
        assert_eq!(back, features);

        assert!(parse_frame_features("frame_index,energy,creak_probability\n0,1.0,1.5\n").is_err());
        assert!(parse_frame_features("frame_index,energy,creak_probability\n5,1.0,0.5\n").is_err());
    }

    #[test]
    fn loss_curve_round_trip() {
        let losses = vec![3.5, 2.25, 1.0625];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loss.csv");
        write_loss_curve(&path, &losses).unwrap();
        assert_eq!(parse_loss_curve(&read_text(&path).unwrap()).unwrap(), losses);
    }

    #[test]
    fn delta_records_round_trip() {
        let records = vec![
            DeltaRecord { frame: 0, manipulation: -0.5, class: Voiced, value: 0.125 },
            DeltaRecord { frame: 1, manipulation: -0.5, class: Silence, value: 0.0 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("deltas.csv");
        write_delta_records(&path, &records).unwrap();
        assert_eq!(parse_delta_records(&read_text(&path).unwrap()).unwrap(), records);
        assert!(parse_delta_records("frame,class,manipulation,delta\n0,voiced,0.5,-1\n").is_err());
    }

    #[test]
    fn report_writers_emit_expected_headers() {
        let dir = tempfile::tempdir().unwrap();
        let summary = SummaryTable {
            rows: vec![SummaryRow {
                set_label: "seen".into(),
                class: Voiced,
                delta_mag: 0.5,
                mean: 12.5,
                std: 3.25,
                n: 10,
            }],
        };
        let path = dir.path().join("summary.csv");
        write_summary(&path, &summary).unwrap();
        let text = read_text(&path).unwrap();
        assert_eq!(text, "set,class,shift,mean,std,n\nseen,voiced,0.5,12.5,3.25,10\n");

        let report = CorrelationReport {
            entries: vec![CorrelationEntry { name: "creak".into(), r: -0.5, n: 7 }],
        };
        let path = dir.path().join("corr.csv");
        write_correlations(&path, &report).unwrap();
        assert_eq!(read_text(&path).unwrap(), "name,r,n\ncreak,-0.5,7\n");
    }

    #[test]
    fn write_atomic_replaces_existing_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.bin");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
