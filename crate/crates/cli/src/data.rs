use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use geneo_core::ingest::{
    load_letters, load_space_manifest, parse_idx_images, parse_idx_labels, synth_glyphs, FrequencyTable, LetterPolicy,
};
use geneo_core::{GeneoError, Signal, TorusGrid, WeightedSignalSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{DataArgs, FamilyArgs};
use crate::UsageError;

const EMNIST_IMAGES: [&str; 2] =
    ["emnist-letters-train-images-idx3-ubyte", "emnist-letters-train-images-idx3-ubyte.gz"];
const EMNIST_LABELS: [&str; 2] =
    ["emnist-letters-train-labels-idx1-ubyte", "emnist-letters-train-labels-idx1-ubyte.gz"];

/// What was actually loaded; embedded in reports.
#[derive(Clone, Debug, Serialize)]
pub struct DatasetInfo {
    pub source: String,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub letter_policy: Option<LetterPolicy>,
    pub weights: String,
    pub weights_renormalized: bool,
    pub signals: usize,
    pub n: usize,
}

pub fn parse_policy(text: &str) -> Result<LetterPolicy> {
    if text == "first" {
        return Ok(LetterPolicy::First);
    }
    if let Some(seed) = text.strip_prefix("seed:") {
        let seed = seed.parse().map_err(|_| UsageError(format!("bad seed in letter policy {text:?}")))?;
        return Ok(LetterPolicy::SeedRandom(seed));
    }
    if let Some(list) = text.strip_prefix("indices:") {
        let picks = list
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| UsageError(format!("bad index list in letter policy {text:?}")))?;
        return Ok(LetterPolicy::Indices(picks));
    }
    Err(UsageError(format!("unknown letter policy {text:?}; use first, seed:<u64> or indices:<list>")).into())
}

fn find_in(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| anyhow::Error::new(e).context(format!("reading {}", path.display())))
}

fn frequency_table(args: &DataArgs, default_uniform: bool) -> Result<(FrequencyTable, String)> {
    if let Some(path) = &args.frequencies {
        let table = FrequencyTable::load(path)?;
        return Ok((table, path.display().to_string()));
    }
    if args.uniform || default_uniform {
        return Ok((FrequencyTable::uniform(), "uniform".into()));
    }
    Ok((FrequencyTable::shipped(), "shipped letter frequencies".into()))
}

fn synthetic(args: &DataArgs) -> Result<(WeightedSignalSpace, DatasetInfo)> {
    let glyphs = synth_glyphs(args.n, args.glyph_seed)?;
    let (table, label) = frequency_table(args, true)?;
    let space = WeightedSignalSpace::new(glyphs, table.weights())?;
    let info = DatasetInfo {
        source: format!("synthetic glyphs (seed {})", args.glyph_seed),
        images: None,
        labels: None,
        letter_policy: None,
        weights: label,
        weights_renormalized: table.renormalized(),
        signals: space.len(),
        n: args.n,
    };
    Ok((space, info))
}

fn random(args: &DataArgs, count: usize) -> Result<(WeightedSignalSpace, DatasetInfo)> {
    if count == 0 {
        bail!(UsageError("--random-signals must be positive".into()));
    }
    let grid = TorusGrid::new(args.n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.glyph_seed);
    let signals = (0..count)
        .map(|_| Signal::from_fn(grid, |_| rng.random_range(0.0..1.0)))
        .collect::<geneo_core::Result<Vec<_>>>()?;
    let (weights, label, renormalized) = match &args.frequencies {
        Some(_) if count == 26 => {
            let (table, label) = frequency_table(args, true)?;
            (table.weights(), label, table.renormalized())
        }
        Some(_) => bail!(UsageError("--frequencies needs exactly 26 signals".into())),
        None => (vec![1.0; count], "uniform".to_string(), false),
    };
    let space = WeightedSignalSpace::new(signals, weights)?;
    let info = DatasetInfo {
        source: format!("random signals (seed {})", args.glyph_seed),
        images: None,
        labels: None,
        letter_policy: None,
        weights: label,
        weights_renormalized: renormalized,
        signals: count,
        n: args.n,
    };
    Ok((space, info))
}

/// Resolves the admissible signal space from the flags.
pub fn load_space(args: &DataArgs) -> Result<(WeightedSignalSpace, DatasetInfo)> {
    if args.synthetic {
        return synthetic(args);
    }
    if let Some(count) = args.random_signals {
        return random(args, count);
    }
    if let Some(path) = &args.manifest {
        let space = load_space_manifest(path)?;
        if space.grid().n() != args.n {
            return Err(GeneoError::GridMismatch { expected: args.n, got: space.grid().n() }.into());
        }
        let info = DatasetInfo {
            source: format!("manifest {}", path.display()),
            images: None,
            labels: None,
            letter_policy: None,
            weights: "manifest".into(),
            weights_renormalized: space.renormalization_flagged(),
            signals: space.len(),
            n: args.n,
        };
        return Ok((space, info));
    }
    let images = args.images.clone().or_else(|| args.data_dir.as_deref().and_then(|d| find_in(d, &EMNIST_IMAGES)));
    let labels = args.labels.clone().or_else(|| args.data_dir.as_deref().and_then(|d| find_in(d, &EMNIST_LABELS)));
    let (images, labels) = match (images, labels) {
        (Some(i), Some(l)) => (i, l),
        (None, None) if args.fallback_synthetic => {
            eprintln!("notice: no dataset found, using synthetic glyphs");
            return synthetic(args);
        }
        (None, None) => {
            bail!(UsageError("no dataset: pass --images and --labels, set GENEO_DATA_DIR, or use --synthetic".into()))
        }
        _ => bail!(UsageError("--images and --labels must be given together".into())),
    };
    let policy = parse_policy(&args.letter_policy)?;
    let set = parse_idx_images(&read(&images)?).with_context(|| format!("parsing {}", images.display()))?;
    let label_bytes = parse_idx_labels(&read(&labels)?).with_context(|| format!("parsing {}", labels.display()))?;
    let letters = load_letters(&set, &label_bytes, &policy, args.n)?;
    let (table, label) = frequency_table(args, false)?;
    let space = WeightedSignalSpace::new(letters, table.weights())?;
    let info = DatasetInfo {
        source: "EMNIST letters".into(),
        images: Some(images),
        labels: Some(labels),
        letter_policy: Some(policy),
        weights: label,
        weights_renormalized: table.renormalized(),
        signals: space.len(),
        n: args.n,
    };
    Ok((space, info))
}

/// `(k, h)` after checking them against `--m`.
pub fn resolve_family(args: &FamilyArgs) -> Result<(Vec<u32>, Vec<u32>)> {
    if args.k.len() != args.h.len() {
        bail!(UsageError(format!("--k has {} entries but --h has {}", args.k.len(), args.h.len())));
    }
    if let Some(m) = args.m {
        if m as usize != args.k.len() {
            bail!(UsageError(format!("--m {m} does not match the {} entries of --k/--h", args.k.len())));
        }
    }
    Ok((args.k.clone(), args.h.clone()))
}
