//! `.tdis` scattered-data files and `.csv` indicator fields.
//!
//! A `.tdis` file is little-endian throughout:
//!
//! ```text
//! magic    b"TDIS"
//! version  u32 (= 1)
//! header   dimension u32, N_m u64, N_t u64, N_i u64,
//!          T f64, Δt f64, c f64, ω f64, σ f64, t0 f64, causal u8
//! geometry sensors then sources, each:
//!          dimension u32, aperture tag u32, start f64, span f64, then (x, y, z, Δs) f64 per point
//! payload  N_m·(N_t+1)·N_i f64 values, i-major, then k, then j
//! metadata u64 byte length, UTF-8 JSON object of string pairs
//! ```
//!
//! Field files are comma-separated tables with one row per probe followed
//! by `# key: value` comment lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::forward::ScatteredDataSet;
use crate::geometry::{Aperture, SurfaceGeometry};
use crate::greenfn::Medium;
use crate::indicator::IndicatorField;
use crate::signal::{SignalSpec, TimeGrid};
use crate::{Dimension, Error, Point, Result};

pub const TDIS_MAGIC: [u8; 4] = *b"TDIS";
pub const TDIS_VERSION: u32 = 1;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Hex SHA-256 of a file's contents.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_surface(out: &mut Vec<u8>, s: &SurfaceGeometry) {
    let (tag, start, span) = match s.aperture {
        Aperture::Full => (0, 0.0, 0.0),
        Aperture::Arc { start, span } => (1, start, span),
        Aperture::Sphere => (2, 0.0, 0.0),
    };
    put_u32(out, s.dimension.as_u32());
    put_u32(out, tag);
    put_f64(out, start);
    put_f64(out, span);
    for (p, w) in s.points.iter().zip(&s.weights) {
        for c in p {
            put_f64(out, *c);
        }
        put_f64(out, *w);
    }
}

/// Serializes a data set into `.tdis` bytes.
pub fn encode_tdis(data: &ScatteredDataSet) -> Result<Vec<u8>> {
    let (nm, nt1, ni) = data.shape();
    let metadata = serde_json::to_vec(&data.metadata)
        .map_err(|e| Error::Malformed(format!("metadata: {e}")))?;
    let mut out = Vec::with_capacity(128 + 8 * (data.values.len() + 4 * (nm + ni)) + metadata.len());
    out.extend_from_slice(&TDIS_MAGIC);
    put_u32(&mut out, TDIS_VERSION);
    put_u32(&mut out, data.dimension.as_u32());
    put_u64(&mut out, nm as u64);
    put_u64(&mut out, (nt1 - 1) as u64);
    put_u64(&mut out, ni as u64);
    put_f64(&mut out, data.time.terminal);
    put_f64(&mut out, data.time.dt());
    put_f64(&mut out, data.medium.c);
    put_f64(&mut out, data.signal.omega);
    put_f64(&mut out, data.signal.sigma);
    put_f64(&mut out, data.signal.t0);
    out.push(data.signal.causal as u8);
    put_surface(&mut out, &data.sensors);
    put_surface(&mut out, &data.sources);
    for v in &data.values {
        put_f64(&mut out, *v);
    }
    put_u64(&mut out, metadata.len() as u64);
    out.extend_from_slice(&metadata);
    Ok(out)
}

pub fn write_tdis(data: &ScatteredDataSet, path: &Path) -> Result<()> {
    write_atomic(path, &encode_tdis(data)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let rest = self.bytes.len() - self.pos;
        if rest < n {
            return Err(Error::Truncated {
                what,
                expected: n as u64,
                found: rest as u64,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| Error::Overflow(format!("{what} of {n} values")))?;
        Ok(self
            .take(bytes, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn to_count(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Overflow(format!("{what} = {v}")))
}

fn read_surface(r: &mut Reader, count: usize) -> Result<SurfaceGeometry> {
    let dim = r.u32("geometry")?;
    let dimension =
        Dimension::from_u32(dim).ok_or_else(|| Error::Malformed(format!("surface dimension {dim}")))?;
    let tag = r.u32("geometry")?;
    let start = r.f64("geometry")?;
    let span = r.f64("geometry")?;
    let aperture = match tag {
        0 => Aperture::Full,
        1 => Aperture::Arc { start, span },
        2 => Aperture::Sphere,
        t => return Err(Error::Malformed(format!("unknown aperture tag {t}"))),
    };
    let n = count
        .checked_mul(4)
        .ok_or_else(|| Error::Overflow(format!("{count} surface points")))?;
    let raw = r.f64s(n, "geometry")?;
    let points: Vec<Point> = raw.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect();
    let weights = raw.chunks_exact(4).map(|c| c[3]).collect();
    SurfaceGeometry::new(dimension, points, weights, aperture)
        .map_err(|e| Error::Malformed(format!("geometry: {e}")))
}

/// Parses `.tdis` bytes; `origin` names the source in error messages.
pub fn decode_tdis(bytes: &[u8], origin: &Path) -> Result<ScatteredDataSet> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 || bytes[..4] != TDIS_MAGIC {
        return Err(Error::BadMagic(origin.to_path_buf()));
    }
    r.pos = 4;
    let version = r.u32("header")?;
    if version != TDIS_VERSION {
        return Err(Error::Version {
            found: version,
            expected: TDIS_VERSION,
        });
    }
    let dim = r.u32("header")?;
    let dimension =
        Dimension::from_u32(dim).ok_or_else(|| Error::Malformed(format!("dimension {dim}")))?;
    let nm = to_count(r.u64("header")?, "sensor count")?;
    let nt = to_count(r.u64("header")?, "time steps")?;
    let ni = to_count(r.u64("header")?, "source count")?;
    let terminal = r.f64("header")?;
    let _dt = r.f64("header")?;
    let c = r.f64("header")?;
    let omega = r.f64("header")?;
    let sigma = r.f64("header")?;
    let t0 = r.f64("header")?;
    let causal = r.u8("header")? != 0;
    let total = nt
        .checked_add(1)
        .and_then(|n| n.checked_mul(nm))
        .and_then(|n| n.checked_mul(ni))
        .filter(|n| n.checked_mul(8).is_some())
        .ok_or_else(|| Error::Overflow(format!("{nm} x ({nt} + 1) x {ni} values")))?;
    let bad = |e: Error| Error::Malformed(e.to_string());
    let time = TimeGrid::new(terminal, nt).map_err(bad)?;
    let medium = Medium::new(c).map_err(bad)?;
    let signal = SignalSpec::new(omega, sigma, t0).map_err(bad)?.with_causal(causal);
    let sensors = read_surface(&mut r, nm)?;
    let sources = read_surface(&mut r, ni)?;
    let values = r.f64s(total, "payload")?;
    let len = to_count(r.u64("metadata")?, "metadata length")?;
    let text = r.take(len, "metadata")?;
    let metadata: BTreeMap<String, String> =
        serde_json::from_slice(text).map_err(|e| Error::Malformed(format!("metadata: {e}")))?;
    if r.pos != bytes.len() {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after metadata",
            bytes.len() - r.pos
        )));
    }
    Ok(ScatteredDataSet {
        dimension,
        sensors,
        sources,
        time,
        signal,
        medium,
        values,
        metadata,
    })
}

pub fn read_tdis(path: &Path) -> Result<ScatteredDataSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tdis(&bytes, path)
}

/// Comment lines appended to a field file besides the indicator and argmax.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldMeta {
    /// SHA-256 of the `.tdis` file the field was computed from.
    pub data_sha256: Option<String>,
    pub extra: Vec<(String, String)>,
}

fn coord_names(axes: usize) -> &'static [&'static str] {
    &["z1", "z2", "z3"][..axes]
}

/// Renders a field as CSV text with 17 significant digits per number.
pub fn format_field(field: &IndicatorField, meta: &FieldMeta) -> String {
    let axes = field.grid.axes();
    let mut s = String::new();
    s.push_str(&coord_names(axes).join(","));
    s.push_str(",value\n");
    for (p, v) in field.grid.points.iter().zip(&field.values) {
        for c in &p[..axes] {
            s.push_str(&format!("{c:.16e},"));
        }
        s.push_str(&format!("{v:.16e}\n"));
    }
    let a = field.argmax_point();
    let coords: Vec<String> = a[..axes].iter().map(|c| format!("{c:.16e}")).collect();
    s.push_str(&format!("# indicator: {}\n", field.kind));
    s.push_str(&format!(
        "# argmax: {} ({}) {:.16e}\n",
        field.argmax,
        coords.join(", "),
        field.max_value()
    ));
    let bounds: Vec<String> = field
        .grid
        .bounds
        .iter()
        .zip(&field.grid.counts)
        .map(|((lo, hi), n)| format!("[{lo:?}, {hi:?}]x{n}"))
        .collect();
    s.push_str(&format!("# grid: {}\n", bounds.join(" ")));
    if !field.flagged.is_empty() {
        let f: Vec<String> = field.flagged.iter().map(|i| i.to_string()).collect();
        s.push_str(&format!("# flagged: {}\n", f.join(" ")));
    }
    s.push_str(&format!("# note: {}\n", field.note));
    if let Some(h) = &meta.data_sha256 {
        s.push_str(&format!("# data_sha256: {h}\n"));
    }
    for (k, v) in &meta.extra {
        s.push_str(&format!("# {k}: {}\n", v.replace('\n', " ")));
    }
    s
}

pub fn write_field(field: &IndicatorField, path: &Path, meta: &FieldMeta) -> Result<()> {
    write_atomic(path, format_field(field, meta).as_bytes())
}

/// A parsed field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub comments: BTreeMap<String, String>,
}

impl FieldTable {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| *r.last().unwrap()).collect()
    }

    /// Whether the recorded data hash matches the file at `tdis`.
    pub fn matches_data(&self, tdis: &Path) -> Result<bool> {
        let recorded = self
            .comments
            .get("data_sha256")
            .ok_or_else(|| Error::Malformed("field records no data hash".into()))?;
        Ok(*recorded == file_sha256(tdis)?)
    }
}

pub fn parse_field(text: &str) -> Result<FieldTable> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Malformed("empty field file".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    if columns.last().map(String::as_str) != Some("value") {
        return Err(Error::Malformed(format!("unexpected header `{header}`")));
    }
    let mut rows = Vec::new();
    let mut comments = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        if let Some(c) = line.strip_prefix("# ") {
            let (k, v) = c.split_once(": ").unwrap_or((c, ""));
            comments.insert(k.to_string(), v.to_string());
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .filter(|r| r.len() == columns.len())
            .ok_or_else(|| Error::Malformed(format!("row {}: `{line}`", n + 1)))?;
        rows.push(row);
    }
    Ok(FieldTable {
        columns,
        rows,
        comments,
    })
}

pub fn read_field(path: &Path) -> Result<FieldTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{synth_point_model, PointScatterer};
    use crate::geometry::{make_circle_sensors, make_sampling_grid};
    use crate::indicator::IndicatorKind;

    fn sample() -> ScatteredDataSet {
        let s = make_circle_sensors(6, 4.0, 0.3, 3.0).unwrap();
        let mut d = synth_point_model(
            &[PointScatterer::new([0.3, -0.2, 0.0])],
            &s,
            &s,
            TimeGrid::new(12.0, 40).unwrap(),
            SignalSpec::default(),
            Medium::default(),
            Dimension::Three,
            Default::default(),
        )
        .unwrap();
        d.metadata.insert("note".into(), "a \"quoted\"\nvalue".into());
        d
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.tdis");
        let d = sample();
        write_tdis(&d, &path).unwrap();
        let back = read_tdis(&path).unwrap();
        assert_eq!(back, d);
        assert!(back.values.iter().zip(&d.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let p = Path::new("x.tdis");
        let good = encode_tdis(&sample()).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_tdis(&bad, p), Err(Error::BadMagic(_))));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode_tdis(&bad, p), Err(Error::Version { found: 2, .. })));

        let mut bad = good.clone();
        bad[20..28].copy_from_slice(&80u64.to_le_bytes());
        let e = decode_tdis(&bad, p).unwrap_err();
        assert!(matches!(e, Error::Truncated { what: "payload", .. }), "{e}");
        assert!(e.to_string().contains("truncated payload"));

        let cut = &good[..good.len() - 100];
        assert!(matches!(decode_tdis(cut, p), Err(Error::Truncated { .. })));

        let mut bad = good.clone();
        bad[20..28].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_tdis(&bad, p), Err(Error::Overflow(_))));
    }

    #[test]
    fn field_file_rows_and_comments() {
        let grid = make_sampling_grid(&[(0.0, 1.0), (0.0, 1.0)], &[2, 2]).unwrap();
        let f = IndicatorField::new(grid, vec![0.1, 0.7, 0.2, 0.3], IndicatorKind::I2, vec![]);
        let meta = FieldMeta {
            data_sha256: Some("ab".repeat(32)),
            extra: vec![],
        };
        let text = format_field(&f, &meta);
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
        let t = parse_field(&text).unwrap();
        assert_eq!(t.columns, ["z1", "z2", "value"]);
        assert_eq!(t.values(), f.values);
        assert_eq!(t.comments["indicator"], "i2");
        assert!(t.comments["argmax"].starts_with("1 ("));
        assert_eq!(format_field(&f, &meta), text);
    }

    #[test]
    fn hash_links_field_to_data() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("u.tdis");
        write_tdis(&sample(), &data).unwrap();
        let grid = make_sampling_grid(&[(0.0, 1.0)], &[2]).unwrap();
        let f = IndicatorField::new(grid, vec![1.0, 2.0], IndicatorKind::I3, vec![]);
        let out = dir.path().join("f.csv");
        let meta = FieldMeta {
            data_sha256: Some(file_sha256(&data).unwrap()),
            extra: vec![],
        };
        write_field(&f, &out, &meta).unwrap();
        let t = read_field(&out).unwrap();
        assert!(t.matches_data(&data).unwrap());
        write_tdis(&sample().scaled(2.0), &data).unwrap();
        assert!(!t.matches_data(&data).unwrap());
    }
}
