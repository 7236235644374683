//! Dataset ingestion: IDX image and label files, letter frequency tables,
//! deterministic synthetic glyphs, and signal-space manifests.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeneoError, Result};
use crate::grid::{norm_v, Signal, TorusGrid, WeightedSignalSpace, WEIGHT_SUM_TOLERANCE};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// The letter frequency table shipped in `data/letter_frequencies.txt`.
pub const SHIPPED_FREQUENCIES: &str = include_str!("../../../data/letter_frequencies.txt");

pub const LETTERS: usize = 26;

/// `count` grayscale images of `rows × cols` bytes, stored back to back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImageSet {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImageSet {
    pub fn new(count: usize, rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        let expected = payload_len(&[count, rows, cols])?;
        if pixels.len() != expected {
            return Err(GeneoError::IdxFormat(format!(
                "{count} images of {rows}x{cols} need {expected} bytes, got {}",
                pixels.len()
            )));
        }
        Ok(Self { count, rows, cols, pixels })
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[index * size..(index + 1) * size]
    }
}

/// Contents of an IDX file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdxData {
    Images(IdxImageSet),
    Labels(Vec<u8>),
}

fn payload_len(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| GeneoError::IdxFormat(format!("dimension overflow: {dims:?}")))
}

fn maybe_gunzip(bytes: &[u8]) -> Result<std::borrow::Cow<'_, [u8]>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut out).map_err(|e| GeneoError::IdxFormat(format!("gzip: {e}")))?;
        Ok(out.into())
    } else {
        Ok(bytes.into())
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| GeneoError::IdxFormat(format!("header truncated at byte {offset}")))
}

/// Parses an IDX file (uint8 images or labels), gunzipping transparently.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxData> {
    if bytes.is_empty() {
        return Err(GeneoError::Empty("IDX input"));
    }
    let bytes = maybe_gunzip(bytes)?;
    let magic = read_u32(&bytes, 0)?;
    let ndims = match magic {
        IDX_IMAGES_MAGIC => 3,
        IDX_LABELS_MAGIC => 1,
        found => return Err(GeneoError::IdxMagic { expected: IDX_IMAGES_MAGIC, found }),
    };
    let dims = (0..ndims).map(|d| read_u32(&bytes, 4 + 4 * d).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * ndims;
    let expected = payload_len(&dims)?;
    let found = bytes.len() - header;
    if found < expected {
        return Err(GeneoError::IdxTruncated { expected, found });
    }
    if found > expected {
        return Err(GeneoError::IdxFormat(format!("{} trailing bytes after payload", found - expected)));
    }
    let payload = bytes[header..].to_vec();
    Ok(match ndims {
        3 => IdxData::Images(IdxImageSet { count: dims[0], rows: dims[1], cols: dims[2], pixels: payload }),
        _ => IdxData::Labels(payload),
    })
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImageSet> {
    match parse_idx(bytes)? {
        IdxData::Images(set) => Ok(set),
        IdxData::Labels(_) => Err(GeneoError::IdxMagic { expected: IDX_IMAGES_MAGIC, found: IDX_LABELS_MAGIC }),
    }
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    match parse_idx(bytes)? {
        IdxData::Labels(labels) => Ok(labels),
        IdxData::Images(_) => Err(GeneoError::IdxMagic { expected: IDX_LABELS_MAGIC, found: IDX_IMAGES_MAGIC }),
    }
}

pub fn read_idx_file(path: impl AsRef<Path>) -> Result<IdxData> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| GeneoError::io(path, e))?;
    parse_idx(&bytes)
}

/// Uncompressed IDX encoding.
pub fn serialize_idx(data: &IdxData) -> Vec<u8> {
    let mut out = Vec::new();
    match data {
        IdxData::Images(set) => {
            out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
            for d in [set.count, set.rows, set.cols] {
                out.extend_from_slice(&(d as u32).to_be_bytes());
            }
            out.extend_from_slice(&set.pixels);
        }
        IdxData::Labels(labels) => {
            out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
            out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
            out.extend_from_slice(labels);
        }
    }
    out
}

/// Which sample represents each letter class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LetterPolicy {
    /// The first sample of each class.
    First,
    /// For class `c`, the `indices[c]`-th sample of that class.
    Indices(Vec<usize>),
    /// A uniformly random sample per class.
    SeedRandom(u64),
}

pub fn letter_of(class: usize) -> char {
    (b'a' + class as u8) as char
}

/// One signal per letter `a..z`, scaled to `[0, 1]`.
///
/// Labels follow the EMNIST letters convention (`1 = a … 26 = z`; anything
/// else is ignored). EMNIST stores images transposed, so each image is
/// transposed back to upright orientation.
pub fn load_letters(images: &IdxImageSet, labels: &[u8], policy: &LetterPolicy, n: usize) -> Result<Vec<Signal>> {
    if labels.len() != images.count {
        return Err(GeneoError::IdxFormat(format!("{} labels for {} images", labels.len(), images.count)));
    }
    if images.rows != n || images.cols != n {
        return Err(GeneoError::GridMismatch { expected: n, got: images.rows.max(images.cols) });
    }
    let grid = TorusGrid::new(n)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); LETTERS];
    for (idx, &label) in labels.iter().enumerate() {
        if (1..=LETTERS as u8).contains(&label) {
            by_class[label as usize - 1].push(idx);
        }
    }
    let missing: Vec<String> =
        (0..LETTERS).filter(|&c| by_class[c].is_empty()).map(|c| letter_of(c).to_string()).collect();
    if !missing.is_empty() {
        return Err(GeneoError::MissingClasses(missing.join(", ")));
    }
    let mut rng = match policy {
        LetterPolicy::SeedRandom(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut out = Vec::with_capacity(LETTERS);
    for (class, members) in by_class.iter().enumerate() {
        let idx = match policy {
            LetterPolicy::First => members[0],
            LetterPolicy::Indices(picks) => {
                let pick = *picks.get(class).ok_or_else(|| {
                    GeneoError::IdxFormat(format!("index list has {} entries, need {LETTERS}", picks.len()))
                })?;
                *members.get(pick).ok_or_else(|| {
                    GeneoError::IdxFormat(format!(
                        "letter {} has {} samples, index {pick} requested",
                        letter_of(class),
                        members.len()
                    ))
                })?
            }
            LetterPolicy::SeedRandom(_) => *members.choose(rng.as_mut().expect("seeded")).expect("nonempty"),
        };
        let img = images.image(idx);
        let values = (0..n * n).map(|s| img[(s % n) * n + s / n] as f64 / 255.0).collect();
        out.push(Signal::new(grid, values)?);
    }
    Ok(out)
}

/// Normalized weights for the letters `a..z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    entries: Vec<(char, f64)>,
    raw_sum: f64,
}

impl FrequencyTable {
    fn from_map(map: BTreeMap<char, f64>) -> Result<Self> {
        let missing: Vec<String> =
            (0..LETTERS).map(letter_of).filter(|c| !map.contains_key(c)).map(|c| c.to_string()).collect();
        if !missing.is_empty() {
            return Err(GeneoError::Frequency(format!("missing letters: {}", missing.join(", "))));
        }
        let raw_sum: f64 = map.values().sum();
        if !(raw_sum > 0.0) {
            return Err(GeneoError::Frequency("weights sum to zero".into()));
        }
        let entries = map.into_iter().map(|(c, w)| (c, w / raw_sum)).collect();
        Ok(Self { entries, raw_sum })
    }

    pub fn uniform() -> Self {
        let entries = (0..LETTERS).map(|c| (letter_of(c), 1.0 / LETTERS as f64)).collect();
        Self { entries, raw_sum: 1.0 }
    }

    /// The table shipped with the project.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_FREQUENCIES).expect("shipped frequency table is valid")
    }

    /// Accepts a JSON object `{"a": 8.1, ...}` or `letter=value` lines
    /// (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut insert = |key: &str, w: f64| -> Result<()> {
            let key = key.trim().to_ascii_lowercase();
            let mut chars = key.chars();
            let c = match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_lowercase() => c,
                _ => return Err(GeneoError::Frequency(format!("unknown label {key:?}"))),
            };
            if !(w >= 0.0) || !w.is_finite() {
                return Err(GeneoError::Frequency(format!("weight for {c} is {w}")));
            }
            if map.insert(c, w).is_some() {
                return Err(GeneoError::Frequency(format!("duplicate label {c}")));
            }
            Ok(())
        };
        if text.trim_start().starts_with('{') {
            let obj: BTreeMap<String, f64> = serde_json::from_str(text)?;
            for (k, w) in obj {
                insert(&k, w)?;
            }
        } else {
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| GeneoError::Frequency(format!("line {}: expected letter=value", lineno + 1)))?;
                let w: f64 =
                    v.trim().parse().map_err(|e| GeneoError::Frequency(format!("line {}: {e}", lineno + 1)))?;
                insert(k, w)?;
            }
        }
        Self::from_map(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GeneoError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn weight(&self, letter: char) -> Option<f64> {
        self.entries.iter().find(|(c, _)| *c == letter).map(|(_, w)| *w)
    }

    /// Weights in `a..z` order.
    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, w)| *w).collect()
    }

    pub fn entries(&self) -> &[(char, f64)] {
        &self.entries
    }

    /// True when the file's weights were not already normalized.
    pub fn renormalized(&self) -> bool {
        (self.raw_sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE
    }
}

pub fn load_frequencies(path: impl AsRef<Path>) -> Result<FrequencyTable> {
    FrequencyTable::load(path)
}

pub fn uniform_frequencies() -> FrequencyTable {
    FrequencyTable::uniform()
}

/// Minimum grid size for synthetic glyphs.
pub const MIN_GLYPH_SIZE: usize = 8;

/// 26 deterministic stroke images standing in for handwritten letters.
///
/// Each glyph is two to four soft line strokes with values in `[0, 1]`. The
/// glyph for letter `c` depends only on `(n, seed, c)`.
pub fn synth_glyphs(n: usize, seed: u64) -> Result<Vec<Signal>> {
    if n < MIN_GLYPH_SIZE {
        return Err(GeneoError::GridTooSmall { got: n, min: MIN_GLYPH_SIZE });
    }
    let grid = TorusGrid::new(n)?;
    let width = (n as f64 / 28.0).max(0.35) * 1.1;
    let mut glyphs: Vec<Signal> = Vec::with_capacity(LETTERS);
    for c in 0..LETTERS {
        let mut attempt = 0u64;
        let glyph = loop {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64 + attempt * LETTERS as u64);
            let glyph = one_glyph(grid, width, &mut rng)?;
            // Distinct from all earlier glyphs, and not blank.
            let distinct = glyphs.iter().all(|g| norm_v(&(g - &glyph)) > 0.0) && norm_v(&glyph) > 0.0;
            if distinct {
                break glyph;
            }
            attempt += 1;
        };
        glyphs.push(glyph);
    }
    Ok(glyphs)
}

fn one_glyph(grid: TorusGrid, width: f64, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let n = grid.n() as f64;
    let (lo, hi) = (0.2 * n, 0.8 * n);
    let strokes: Vec<[f64; 4]> = (0..rng.random_range(2..=4))
        .map(|_| {
            [rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi)]
        })
        .collect();
    Signal::from_fn(grid, |s| {
        let (px, py) = (s.i as f64, s.j as f64);
        strokes
            .iter()
            .map(|&[x0, y0, x1, y1]| {
                let d2 = segment_dist_sq(px, py, x0, y0, x1, y1);
                (-d2 / (2.0 * width * width)).exp()
            })
            .fold(0.0, f64::max)
    })
}

fn segment_dist_sq(px: f64, py: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((px - x0) * dx + (py - y0) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (x0 + t * dx, y0 + t * dy);
    (px - qx).powi(2) + (py - qy).powi(2)
}

/// JSON manifest `{n, signals: [paths], weights: [reals]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceManifest {
    pub n: usize,
    pub signals: Vec<String>,
    pub weights: Vec<f64>,
}

/// Reads one signal file: `.csv` as rows of reals, anything else as an IDX
/// image file whose first image is scaled to `[0, 1]`.
pub fn read_signal_file(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let file = std::fs::File::open(path).map_err(|e| GeneoError::io(path, e))?;
        return Signal::read_csv(std::io::BufReader::new(file));
    }
    let bytes = std::fs::read(path).map_err(|e| GeneoError::io(path, e))?;
    let set = parse_idx_images(&bytes)?;
    if set.count == 0 || set.rows != set.cols {
        return Err(GeneoError::IdxFormat(format!("{}: need at least one square image", path.display())));
    }
    let grid = TorusGrid::new(set.rows)?;
    Signal::new(grid, set.image(0).iter().map(|&b| b as f64 / 255.0).collect())
}

/// Loads a manifest; signal paths are resolved relative to the manifest.
pub fn load_space_manifest(path: impl AsRef<Path>) -> Result<WeightedSignalSpace> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| GeneoError::io(path, e))?;
    let manifest: SpaceManifest = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let grid = TorusGrid::new(manifest.n)?;
    let signals = manifest
        .signals
        .iter()
        .map(|p| {
            let s = read_signal_file(base.join(p))?;
            grid.ensure_same(&s.grid())?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedSignalSpace::new(signals, manifest.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn golden_two_by_two() -> Vec<u8> {
        vec![
            0x00, 0x00, 0x08, 0x03, // magic
            0x00, 0x00, 0x00, 0x02, // count
            0x00, 0x00, 0x00, 0x02, // rows
            0x00, 0x00, 0x00, 0x02, // cols
            1, 2, 3, 4, 250, 251, 252, 253,
        ]
    }

    #[test]
    fn parse_golden_images() {
        let set = parse_idx_images(&golden_two_by_two()).unwrap();
        assert_eq!((set.count, set.rows, set.cols), (2, 2, 2));
        assert_eq!(set.image(0), &[1, 2, 3, 4]);
        assert_eq!(set.image(1), &[250, 251, 252, 253]);
    }

    #[test]
    fn gzip_is_transparent() {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&golden_two_by_two()).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(parse_idx(&gz).unwrap(), parse_idx(&golden_two_by_two()).unwrap());
    }

    #[test]
    fn bad_magic_names_both_values() {
        let mut bytes = golden_two_by_two();
        bytes[3] = 0x02;
        let err = parse_idx(&bytes).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, GeneoError::IdxMagic { expected: 0x803, found: 0x802 }));
        assert!(msg.contains("0x00000803") && msg.contains("0x00000802"), "{msg}");
    }

    #[test]
    fn truncated_and_trailing_payloads() {
        let bytes = golden_two_by_two();
        let err = parse_idx(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, GeneoError::IdxTruncated { expected: 8, found: 5 }));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(parse_idx(&longer).is_err());
        assert!(parse_idx(&bytes[..6]).is_err());
        assert!(parse_idx(&[]).is_err());
    }

    #[test]
    fn dimension_overflow_is_rejected() {
        let mut bytes = vec![0x00, 0x00, 0x08, 0x03];
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_be_bytes());
        }
        let err = parse_idx(&bytes).unwrap_err();
        // On 64-bit targets the product fits in usize and the payload check fires instead.
        assert!(matches!(err, GeneoError::IdxFormat(_) | GeneoError::IdxTruncated { .. }));
    }

    #[test]
    fn labels_and_kind_checks() {
        let labels = IdxData::Labels(vec![1, 2, 3]);
        let bytes = serialize_idx(&labels);
        assert_eq!(&bytes[..4], &[0, 0, 8, 1]);
        assert_eq!(parse_idx_labels(&bytes).unwrap(), vec![1, 2, 3]);
        assert!(parse_idx_images(&bytes).is_err());
        assert!(parse_idx_labels(&golden_two_by_two()).is_err());
    }

    fn labeled_set(n: usize, classes: &[u8]) -> (IdxImageSet, Vec<u8>) {
        let mut pixels = Vec::new();
        for (i, _) in classes.iter().enumerate() {
            for p in 0..n * n {
                pixels.push(((i * 7 + p) % 256) as u8);
            }
        }
        (IdxImageSet::new(classes.len(), n, n, pixels).unwrap(), classes.to_vec())
    }

    #[test]
    fn letters_in_label_order_and_transposed() {
        let n = 8;
        let classes: Vec<u8> = (1..=26).rev().collect();
        let (set, labels) = labeled_set(n, &classes);
        let sigs = load_letters(&set, &labels, &LetterPolicy::First, n).unwrap();
        assert_eq!(sigs.len(), 26);
        // Letter 'a' has label 1, the last image.
        let img = set.image(25);
        let a = &sigs[0];
        for i in 0..n {
            for j in 0..n {
                let v = a.get(crate::grid::Site::new(i, j)).unwrap();
                assert_eq!(v, img[j * n + i] as f64 / 255.0);
            }
        }
        assert!(sigs.iter().all(|s| s.values().iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn missing_classes_are_listed() {
        let classes: Vec<u8> = (1..=26).filter(|&c| c != 3 && c != 17).collect();
        let (set, labels) = labeled_set(8, &classes);
        let err = load_letters(&set, &labels, &LetterPolicy::First, 8).unwrap_err();
        assert_eq!(err.to_string(), "missing letter classes: c, q");
        let (set, labels) = labeled_set(8, &(1..=26).collect::<Vec<u8>>());
        assert!(matches!(load_letters(&set, &labels, &LetterPolicy::First, 28), Err(GeneoError::GridMismatch { .. })));
    }

    #[test]
    fn letter_policies() {
        let mut classes: Vec<u8> = (1..=26).collect();
        classes.extend(1..=26);
        let (set, labels) = labeled_set(8, &classes);
        let first = load_letters(&set, &labels, &LetterPolicy::First, 8).unwrap();
        let second = load_letters(&set, &labels, &LetterPolicy::Indices(vec![1; 26]), 8).unwrap();
        assert_ne!(first[0], second[0]);
        assert!(load_letters(&set, &labels, &LetterPolicy::Indices(vec![2; 26]), 8).is_err());
        let r1 = load_letters(&set, &labels, &LetterPolicy::SeedRandom(5), 8).unwrap();
        let r2 = load_letters(&set, &labels, &LetterPolicy::SeedRandom(5), 8).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn frequency_tables() {
        let u = uniform_frequencies();
        assert!(u.weights().iter().all(|&w| w == 1.0 / 26.0));
        assert!(!u.renormalized());

        let shipped = FrequencyTable::shipped();
        assert!(shipped.weight('e').unwrap() > shipped.weight('z').unwrap());
        assert!((shipped.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut lines: String = (0..26).map(|c| format!("{}={}\n", letter_of(c), 0.999 / 26.0)).collect();
        let t = FrequencyTable::parse(&lines).unwrap();
        assert!(t.renormalized());
        assert!((t.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Idempotent: re-parsing the normalized table changes nothing.
        let again: String = t.entries().iter().map(|(c, w)| format!("{c}={w}\n")).collect();
        let t2 = FrequencyTable::parse(&again).unwrap();
        for (a, b) in t.weights().iter().zip(t2.weights()) {
            assert!((a - b).abs() < 1e-15);
        }

        lines.push_str("?=1\n");
        assert!(FrequencyTable::parse(&lines).is_err());
        let neg: String = (0..26).map(|c| format!("{}={}\n", letter_of(c), if c == 4 { -1.0 } else { 1.0 })).collect();
        assert!(FrequencyTable::parse(&neg).is_err());
        let err = FrequencyTable::parse("a=1\nb=2\n").unwrap_err();
        assert!(err.to_string().contains("missing letters"));

        let json: String = format!(
            "{{{}}}",
            (0..26).map(|c| format!("\"{}\": {}", letter_of(c), c + 1)).collect::<Vec<_>>().join(",")
        );
        let j = FrequencyTable::parse(&json).unwrap();
        assert!(j.weight('z').unwrap() > j.weight('a').unwrap());
    }

    #[test]
    fn synthetic_glyphs() {
        let a = synth_glyphs(28, 7).unwrap();
        let b = synth_glyphs(28, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 26);
        for (i, g) in a.iter().enumerate() {
            assert!(g.values().iter().all(|v| (0.0..=1.0).contains(v)));
            for h in &a[i + 1..] {
                assert!(norm_v(&(g - h)) > 0.0);
            }
        }
        assert_ne!(synth_glyphs(28, 8).unwrap(), a);
        assert!(matches!(synth_glyphs(7, 1), Err(GeneoError::GridTooSmall { got: 7, .. })));
        assert!(synth_glyphs(8, 1).is_ok());
    }

    #[test]
    fn manifest_loading() {
        let dir = std::env::temp_dir().join(format!("geneo-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("a.csv"), "0,1\n1,0\n").unwrap();
        let idx = IdxData::Images(IdxImageSet::new(1, 2, 2, vec![0, 255, 255, 0]).unwrap());
        std::fs::write(dir.join("b.idx"), serialize_idx(&idx)).unwrap();
        let manifest = SpaceManifest { n: 2, signals: vec!["a.csv".into(), "b.idx".into()], weights: vec![3.0, 1.0] };
        std::fs::write(dir.join("space.json"), serde_json::to_string(&manifest).unwrap()).unwrap();
        let space = load_space_manifest(dir.join("space.json")).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.weights(), &[0.75, 0.25]);
        assert_eq!(space.signals()[0], space.signals()[1]);

        let bad = SpaceManifest { n: 3, ..manifest };
        std::fs::write(dir.join("bad.json"), serde_json::to_string(&bad).unwrap()).unwrap();
        assert!(load_space_manifest(dir.join("bad.json")).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
