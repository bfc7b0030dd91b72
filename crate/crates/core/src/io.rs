//! Signal files and measurement-set manifests.
//!
//! Signals are stored as CSV (one row per grid row; a single column is read
//! as 1-D) or 16-bit PGM with a JSON sidecar holding the affine map back to
//! floating point. Artifacts (targets, measurement sets, reports) are
//! directories holding their files plus `manifest.json` with per-file
//! SHA-256 checksums and provenance.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use semver::Version;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::signal::{ConvMode, GridSignal, MeasurementSet, Normalization};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const FORMAT_VERSION: &str = "1.0.0";
const PGM_MAXVAL: u32 = 65535;

/// Reads a signal, choosing the format from the extension.
pub fn read_signal(path: &Path) -> Result<GridSignal> {
    match extension(path).as_str() {
        "csv" | "txt" => read_csv(path),
        "pgm" => read_pgm(path),
        other => Err(Error::Format(format!("unsupported signal extension {other:?}"))),
    }
}

pub fn write_signal(path: &Path, signal: &GridSignal) -> Result<()> {
    match extension(path).as_str() {
        "csv" | "txt" => write_csv(path, signal),
        "pgm" => write_pgm(path, signal, false),
        other => Err(Error::Format(format!("unsupported signal extension {other:?}"))),
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase()
}

pub fn read_csv(path: &Path) -> Result<GridSignal> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("{}: not a number: {f:?}", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Format(format!("{}: ragged rows", path.display())));
    }
    if cols == 1 {
        GridSignal::from_1d(rows.into_iter().flatten().collect())
    } else {
        GridSignal::from_2d(rows.len(), cols, rows.into_iter().flatten().collect())
    }
}

pub fn write_csv(path: &Path, signal: &GridSignal) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    let cols = if signal.ndim() == 1 { 1 } else { signal.shape()[1] };
    for row in signal.values().chunks(cols) {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Affine map from PGM grey levels to values: `value = offset + scale · level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmSidecar {
    pub offset: f64,
    pub scale: f64,
    pub maxval: u32,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes 16-bit PGM, text (P2) or binary (P5), plus a sidecar. 1-D signals
/// become one row. Quantisation error is at most half a grey level of the
/// stored range.
pub fn write_pgm(path: &Path, signal: &GridSignal, binary: bool) -> Result<()> {
    let (rows, cols) = match signal.shape() {
        [n] => (1, *n),
        [r, c] => (*r, *c),
        _ => unreachable!(),
    };
    let (lo, hi) = signal
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let scale = if hi > lo { (hi - lo) / PGM_MAXVAL as f64 } else { 1.0 };
    let level = |v: f64| ((v - lo) / scale).round().clamp(0.0, PGM_MAXVAL as f64) as u16;
    let magic = if binary { "P5" } else { "P2" };
    let mut out = format!("{magic}\n{cols} {rows}\n{PGM_MAXVAL}\n").into_bytes();
    for row in signal.values().chunks(cols) {
        if binary {
            row.iter().for_each(|&v| out.extend_from_slice(&level(v).to_be_bytes()));
        } else {
            let line: Vec<String> = row.iter().map(|&v| level(v).to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    fs::write(path, out)?;
    let sidecar = PgmSidecar {
        offset: lo,
        scale,
        maxval: PGM_MAXVAL,
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

/// Reads P2 or P5 PGM. Without a sidecar, levels are mapped to `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<GridSignal> {
    let bytes = fs::read(path)?;
    let bad = |what: &str| Error::Format(format!("{}: {what}", path.display()));
    let mut pos = 0;
    let mut header = Vec::new();
    while header.len() < 4 {
        // Skip whitespace and comments between header tokens.
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    let magic = header[0].as_str();
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (cols, rows, maxval) = (parse(&header[1])?, parse(&header[2])?, parse(&header[3])?);
    if maxval == 0 || maxval > PGM_MAXVAL as usize {
        return Err(bad("maxval out of range"));
    }
    let count = rows * cols;
    let levels: Vec<u32> = match magic {
        "P5" => {
            let data = &bytes[(pos + 1).min(bytes.len())..];
            let width = if maxval > 255 { 2 } else { 1 };
            if data.len() < count * width {
                return Err(bad("truncated raster"));
            }
            data.chunks_exact(width)
                .take(count)
                .map(|c| if width == 2 { u16::from_be_bytes([c[0], c[1]]) as u32 } else { c[0] as u32 })
                .collect()
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[pos..]);
            let v = text
                .split_whitespace()
                .take(count)
                .map(|t| t.parse::<u32>().map_err(|_| bad("bad grey level")))
                .collect::<Result<Vec<_>>>()?;
            if v.len() < count {
                return Err(bad("truncated raster"));
            }
            v
        }
        _ => return Err(bad("not a PGM (expected P2 or P5)")),
    };
    let sidecar = sidecar_path(path);
    let map = if sidecar.exists() {
        serde_json::from_str::<PgmSidecar>(&fs::read_to_string(&sidecar)?)?
    } else {
        PgmSidecar {
            offset: 0.0,
            scale: 1.0 / maxval as f64,
            maxval: maxval as u32,
        }
    };
    let values = levels.iter().map(|&l| map.offset + map.scale * l as f64).collect();
    if rows == 1 {
        GridSignal::from_1d(values)
    } else {
        GridSignal::from_2d(rows, cols, values)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    Target,
    MeasurementSet,
    Report,
}

/// One file referenced by a manifest, relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<usize>,
    pub file: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementInfo {
    pub scales: Vec<usize>,
    pub mode: ConvMode,
    pub normalization: Normalization,
    pub sigma: f64,
    pub source_shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub created: String,
    pub tool: String,
    pub tool_version: String,
    #[serde(default)]
    pub command_line: Vec<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Free-form generation details, e.g. a target spec.
    #[serde(default)]
    pub details: serde_json::Value,
}

impl Provenance {
    pub fn now(command_line: Vec<String>, seed: Option<u64>, details: serde_json::Value) -> Self {
        Provenance {
            created: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line,
            seed,
            details,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub kind: ArtifactKind,
    pub payloads: Vec<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementInfo>,
    pub provenance: Provenance,
}

impl Manifest {
    pub fn new(kind: ArtifactKind, provenance: Provenance) -> Self {
        Manifest {
            format_version: FORMAT_VERSION.to_string(),
            kind,
            payloads: Vec::new(),
            measurement: None,
            provenance,
        }
    }

    /// Accepts any 1.x format.
    pub fn check_version(&self) -> Result<()> {
        let v = Version::parse(&self.format_version).map_err(|_| Error::Version(self.format_version.clone()))?;
        let supported = Version::parse(FORMAT_VERSION).expect("valid constant");
        if v.major != supported.major {
            return Err(Error::Version(self.format_version.clone()));
        }
        Ok(())
    }

    /// Records an already-written file in `dir`.
    pub fn add_payload(&mut self, dir: &Path, role: &str, file: &str, scale: Option<usize>, shape: &[usize]) -> Result<()> {
        self.payloads.push(Payload {
            role: role.to_string(),
            scale,
            file: file.to_string(),
            sha256: sha256_file(&dir.join(file))?,
            shape: shape.to_vec(),
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let mut f = fs::File::create(&path)?;
        f.write_all(serde_json::to_string_pretty(self)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(path)
    }

    /// Parses and version-checks a manifest given its path or directory;
    /// returns it with the directory payloads are relative to.
    pub fn read(path: &Path) -> Result<(Manifest, PathBuf)> {
        let manifest_path = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
        let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let manifest: Manifest = serde_json::from_reader(BufReader::new(fs::File::open(&manifest_path)?))?;
        manifest.check_version()?;
        Ok((manifest, dir))
    }

    /// Path of a payload after verifying its checksum.
    pub fn verified(&self, dir: &Path, payload: &Payload) -> Result<PathBuf> {
        let p = dir.join(&payload.file);
        let found = sha256_file(&p)?;
        if found != payload.sha256 {
            return Err(Error::Checksum {
                path: p.display().to_string(),
                expected: payload.sha256.clone(),
                found,
            });
        }
        Ok(p)
    }

    fn expect_kind(&self, kind: ArtifactKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Inconsistent(format!("expected a {kind:?} manifest, found {:?}", self.kind)))
        }
    }
}

/// Writes a target signal and its manifest into `dir`; `file` picks the format.
pub fn save_target(dir: &Path, file: &str, signal: &GridSignal, provenance: Provenance) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    write_signal(&dir.join(file), signal)?;
    let mut manifest = Manifest::new(ArtifactKind::Target, provenance);
    manifest.add_payload(dir, "target", file, None, signal.shape())?;
    manifest.write(dir)?;
    Ok(manifest)
}

/// Loads a target from a manifest (checksum-verified) or a bare signal file.
pub fn load_target(path: &Path) -> Result<(GridSignal, Option<Manifest>)> {
    let is_manifest = path.is_dir() || extension(path) == "json";
    if !is_manifest {
        return Ok((read_signal(path)?, None));
    }
    let (manifest, dir) = Manifest::read(path)?;
    manifest.expect_kind(ArtifactKind::Target)?;
    let payload = manifest
        .payloads
        .iter()
        .find(|p| p.role == "target")
        .ok_or_else(|| Error::Inconsistent("manifest has no target payload".into()))?;
    let mut signal = read_signal(&manifest.verified(&dir, payload)?)?;
    if !payload.shape.is_empty() && signal.shape() != payload.shape.as_slice() {
        signal = GridSignal::new(payload.shape.clone(), signal.into_values())?;
    }
    Ok((signal, Some(manifest)))
}

/// Writes `z_k<k>.csv` per scale and a manifest into `dir` (created if needed).
pub fn save_measurements(dir: &Path, ms: &MeasurementSet, provenance: Provenance) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut manifest = Manifest::new(ArtifactKind::MeasurementSet, provenance);
    for (&k, z) in ms.scales().iter().zip(ms.data()) {
        let file = format!("z_k{k}.csv");
        write_csv(&dir.join(&file), z)?;
        manifest.add_payload(dir, "measurement", &file, Some(k), z.shape())?;
    }
    manifest.measurement = Some(MeasurementInfo {
        scales: ms.scales().to_vec(),
        mode: ms.mode(),
        normalization: ms.normalization(),
        sigma: ms.sigma(),
        source_shape: ms.source_shape().to_vec(),
    });
    manifest.write(dir)?;
    Ok(manifest)
}

/// Loads a set from a directory or a manifest path, verifying checksums.
pub fn load_measurements(path: &Path) -> Result<(MeasurementSet, Manifest)> {
    let (manifest, dir) = Manifest::read(path)?;
    manifest.expect_kind(ArtifactKind::MeasurementSet)?;
    let info = manifest
        .measurement
        .clone()
        .ok_or_else(|| Error::Inconsistent("measurement manifest lacks its description".into()))?;
    let mut data = Vec::new();
    for payload in manifest.payloads.iter().filter(|p| p.role == "measurement") {
        let scale = payload
            .scale
            .ok_or_else(|| Error::Inconsistent(format!("payload {} has no scale", payload.file)))?;
        let mut z = read_csv(&manifest.verified(&dir, payload)?)?;
        if z.shape() != payload.shape.as_slice() {
            // A one-row 2-D block reads back as 1-D.
            z = GridSignal::new(payload.shape.clone(), z.into_values())?;
        }
        data.push((scale, z));
    }
    data.sort_by_key(|(k, _)| *k);
    let scales: Vec<usize> = data.iter().map(|(k, _)| *k).collect();
    if scales != info.scales {
        return Err(Error::Inconsistent("manifest scales do not match its files".into()));
    }
    let ms = MeasurementSet::new(
        scales,
        data.into_iter().map(|(_, z)| z).collect(),
        info.mode,
        info.normalization,
        info.sigma,
        info.source_shape,
    )?;
    Ok((ms, manifest))
}

/// Reads a single signal from lines of whitespace-separated numbers.
pub fn read_plain_text<R: BufRead>(reader: R) -> Result<GridSignal> {
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("not a number: {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 1 {
        GridSignal::from_1d(rows.into_iter().flatten().collect())
    } else if rows.iter().all(|r| r.len() == cols) {
        GridSignal::from_2d(rows.len(), cols, rows.into_iter().flatten().collect())
    } else {
        Err(Error::Format("ragged rows".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{add_noise, forward_stack};

    fn sample() -> GridSignal {
        GridSignal::from_fn_2d(5, 7, |i, j| (i as f64 * 0.37 - j as f64 * 1.1).sin() / 3.0).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        let p = dir.path().join("s.csv");
        write_signal(&p, &s).unwrap();
        assert_eq!(read_signal(&p).unwrap(), s);
        let line = GridSignal::from_1d(vec![0.1, 1e-300, -3.5]).unwrap();
        write_signal(&p, &line).unwrap();
        assert_eq!(read_signal(&p).unwrap(), line);
    }

    #[test]
    fn pgm_round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        let p = dir.path().join("s.pgm");
        write_signal(&p, &s).unwrap();
        let back = read_signal(&p).unwrap();
        let (lo, hi) = (s.values().iter().cloned().fold(f64::INFINITY, f64::min), s.max_abs());
        let step = (hi - lo).abs() / PGM_MAXVAL as f64;
        assert!(back.max_abs_diff(&s) <= step);
    }

    #[test]
    fn binary_and_text_pgm_agree() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
        write_pgm(&a, &sample(), true).unwrap();
        write_pgm(&b, &sample(), false).unwrap();
        assert_eq!(fs::read(&a).unwrap()[..2], *b"P5");
        assert_eq!(read_pgm(&a).unwrap(), read_pgm(&b).unwrap());
    }

    #[test]
    fn target_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        save_target(dir.path(), "t.csv", &s, Provenance::now(vec!["synth".into()], Some(1), serde_json::Value::Null))
            .unwrap();
        let (back, manifest) = load_target(dir.path()).unwrap();
        assert_eq!(back, s);
        assert_eq!(manifest.unwrap().kind, ArtifactKind::Target);
        // A target manifest is not a measurement set.
        assert!(matches!(load_measurements(dir.path()), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn ascii_pgm_without_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        fs::write(&p, "P2\n# comment\n3 2\n4\n0 1 2\n3 4 0\n").unwrap();
        let s = read_pgm(&p).unwrap();
        assert_eq!(s.shape(), &[2, 3]);
        assert_eq!(s.values(), &[0.0, 0.25, 0.5, 0.75, 1.0, 0.0]);
    }

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let ms = forward_stack(&sample(), &[2, 3], ConvMode::Valid, Normalization::Mean).unwrap();
        let ms = add_noise(&ms, 0.01, 4).unwrap();
        save_measurements(dir.path(), &ms, Provenance::now(vec![], Some(4), serde_json::Value::Null)).unwrap();
        let (back, manifest) = load_measurements(dir.path()).unwrap();
        assert_eq!(back.data(), ms.data());
        assert_eq!(back.sigma(), 0.01);
        assert_eq!(manifest.payloads.len(), 2);
        assert_eq!(manifest.provenance.seed, Some(4));

        let victim = dir.path().join("z_k3.csv");
        let mut text = fs::read_to_string(&victim).unwrap();
        text.push('\n');
        fs::write(&victim, text).unwrap();
        assert!(matches!(load_measurements(dir.path()), Err(Error::Checksum { .. })));
    }

    #[test]
    fn version_gate() {
        let dir = tempfile::tempdir().unwrap();
        let ms = forward_stack(&sample(), &[2], ConvMode::Cyclic, Normalization::Unit).unwrap();
        let mut m = save_measurements(dir.path(), &ms, Provenance::now(vec![], None, serde_json::Value::Null)).unwrap();
        m.format_version = "1.4.2".into();
        assert!(m.check_version().is_ok());
        m.format_version = "2.0.0".into();
        assert!(matches!(m.check_version(), Err(Error::Version(_))));
        m.format_version = "one".into();
        assert!(m.check_version().is_err());
    }

    #[test]
    fn plain_text() {
        let s = read_plain_text("1 2 3\n4,5,6\n\n".as_bytes()).unwrap();
        assert_eq!(s.shape(), &[2, 3]);
        assert!(read_plain_text("1 2\n3\n".as_bytes()).is_err());
    }
}
