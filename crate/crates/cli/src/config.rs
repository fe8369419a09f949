//! Run configuration: a TOML file whose every key can be overridden on the
//! command line with a flag of the same dotted name (`--epochs.length=30`).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use marketstates_core::clustering::Representation;
use marketstates_core::MatrixKind;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Environment variable that replaces `paths.output`.
pub const OUTPUT_DIR_ENV: &str = "MARKETSTATES_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed of every random choice; there is no default.
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub prices: PriceSchema,
    #[serde(default)]
    pub epochs: EpochSettings,
    #[serde(default)]
    pub clustering: ClusteringSettings,
    #[serde(default)]
    pub series: SeriesSettings,
    #[serde(default)]
    pub robustness: RobustnessSettings,
    #[serde(default)]
    pub render: RenderSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub prices: PathBuf,
    pub sectors: PathBuf,
    /// Optional `date,name` file of events drawn on the timelines.
    #[serde(default)]
    pub events: Option<PathBuf>,
    pub output: PathBuf,
}

/// Column mapping of the long-format price file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriceSchema {
    pub delimiter: String,
    pub ticker: String,
    pub date: String,
    pub close: String,
    /// chrono format string of the date column.
    pub date_format: String,
}

impl Default for PriceSchema {
    fn default() -> Self {
        Self {
            delimiter: ",".into(),
            ticker: "ticker".into(),
            date: "date".into(),
            close: "close".into(),
            date_format: "%Y-%m-%d".into(),
        }
    }
}

impl PriceSchema {
    pub fn delimiter_byte(&self) -> Result<u8> {
        match self.delimiter.as_bytes() {
            [b] => Ok(*b),
            _ if self.delimiter == "\\t" => Ok(b'\t'),
            _ => Err(CliError::config(format!(
                "prices.delimiter must be a single ASCII character, got {:?}",
                self.delimiter
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpochSettings {
    /// Trading days per epoch.
    pub length: usize,
}

impl Default for EpochSettings {
    fn default() -> Self {
        Self { length: 42 }
    }
}

/// A matrix kind spelled as in file names (`reduced_corr`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct KindName(pub MatrixKind);

impl Serialize for KindName {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.0.as_str())
    }
}

impl<'de> Deserialize<'de> for KindName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse::<MatrixKind>()
            .map(KindName)
            .map_err(|_| serde::de::Error::custom(format!("unknown matrix kind `{text}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationName {
    Raw,
    #[default]
    Pca,
}

impl From<RepresentationName> for Representation {
    fn from(r: RepresentationName) -> Self {
        match r {
            RepresentationName::Raw => Representation::Raw,
            RepresentationName::Pca => Representation::Pca,
        }
    }
}

/// Number of states analysed per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatesPerKind {
    pub standard: usize,
    pub reduced_cov: usize,
    pub reduced_corr: usize,
    pub demeaned: usize,
}

impl Default for StatesPerKind {
    fn default() -> Self {
        Self {
            standard: 4,
            reduced_cov: 4,
            reduced_corr: 5,
            demeaned: 5,
        }
    }
}

impl StatesPerKind {
    pub fn get(&self, kind: MatrixKind) -> usize {
        match kind {
            MatrixKind::Standard => self.standard,
            MatrixKind::ReducedCov => self.reduced_cov,
            MatrixKind::ReducedCorr => self.reduced_corr,
            MatrixKind::Demeaned => self.demeaned,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringSettings {
    pub kinds: Vec<KindName>,
    pub k: StatesPerKind,
    /// Largest k of the hierarchy and of the selection curve.
    pub k_max: usize,
    /// Lloyd restarts per 2-means split.
    pub restarts: usize,
    pub representation: RepresentationName,
}

impl Default for ClusteringSettings {
    fn default() -> Self {
        Self {
            kinds: MatrixKind::ALL.iter().copied().map(KindName).collect(),
            k: StatesPerKind::default(),
            k_max: 10,
            restarts: 100,
            representation: RepresentationName::Pca,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesSettings {
    /// Emit the one-day sliding mean-correlation series.
    pub sliding: bool,
}

impl Default for SeriesSettings {
    fn default() -> Self {
        Self { sliding: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessSettings {
    pub enabled: bool,
    pub kinds: Vec<KindName>,
    pub subset_sizes: Vec<usize>,
    pub repetitions: usize,
    /// Subset redraws allowed after a zero-volatility failure.
    pub max_attempts: usize,
}

impl Default for RobustnessSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            kinds: vec![KindName(MatrixKind::ReducedCorr)],
            subset_sizes: vec![50, 100, 150, 200, 250],
            repetitions: 50,
            max_attempts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSettings {
    pub enabled: bool,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self { enabled: true }
    }
}

impl RunConfig {
    pub fn kinds(&self) -> Vec<MatrixKind> {
        self.clustering.kinds.iter().map(|k| k.0).collect()
    }

    pub fn robustness_kinds(&self) -> Vec<MatrixKind> {
        self.robustness.kinds.iter().map(|k| k.0).collect()
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::config(m));
        if self.epochs.length < marketstates_core::epoch::MIN_EPOCH_LENGTH {
            return fail(format!("epochs.length must be at least 3, got {}", self.epochs.length));
        }
        self.prices.delimiter_byte()?;
        let c = &self.clustering;
        if c.kinds.is_empty() {
            return fail("clustering.kinds is empty".into());
        }
        if c.kinds.iter().collect::<BTreeSet<_>>().len() != c.kinds.len() {
            return fail("clustering.kinds lists a kind twice".into());
        }
        if c.restarts == 0 {
            return fail("clustering.restarts must be at least 1".into());
        }
        for kind in self.kinds() {
            let k = c.k.get(kind);
            if k == 0 || k > c.k_max {
                return fail(format!("clustering.k.{kind} = {k} must lie in 1..=k_max ({})", c.k_max));
            }
        }
        let r = &self.robustness;
        if r.enabled {
            if r.subset_sizes.is_empty() || r.subset_sizes.iter().any(|&s| s < 2) {
                return fail("robustness.subset_sizes must be non-empty with sizes of at least 2".into());
            }
            if r.repetitions == 0 || r.max_attempts == 0 {
                return fail("robustness.repetitions and robustness.max_attempts must be at least 1".into());
            }
            for kind in self.robustness_kinds() {
                if !self.kinds().contains(&kind) {
                    return fail(format!("robustness kind {kind} is not among clustering.kinds"));
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// One `--dotted.key=value` command-line override.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub key: String,
    pub value: String,
}

/// Splits dotted overrides (`--a.b=v` or `--a.b v`) out of the argument list
/// and returns the remaining arguments untouched.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<Override>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let Some(body) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if !key.contains('.') && key != "seed" {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => iter
                .next()
                .ok_or_else(|| CliError::config(format!("override --{key} has no value")))?,
        };
        overrides.push(Override { key, value });
    }
    Ok((rest, overrides))
}

/// Settings that hold lists; a plain comma-separated override value is split
/// for these even when the file leaves them at their defaults.
const LIST_KEYS: [&str; 3] = ["clustering.kinds", "robustness.kinds", "robustness.subset_sizes"];

fn parse_value(raw: &str, current: Option<&toml::Value>, is_list: bool) -> toml::Value {
    if let Ok(mut table) = toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        if let Some(v) = table.remove("v") {
            return v;
        }
    }
    if is_list || matches!(current, Some(toml::Value::Array(_))) {
        let items = raw
            .split(',')
            .map(|s| parse_value(s.trim(), None, false))
            .collect();
        return toml::Value::Array(items);
    }
    toml::Value::String(raw.to_string())
}

/// Sets `key` (dotted) in `root`, creating intermediate tables.
pub fn apply_override(root: &mut toml::Table, o: &Override) -> Result<()> {
    let parts: Vec<&str> = o.key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("malformed override key `{}`", o.key)));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut table = root;
    for p in parents {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override `{}`: `{p}` is not a table", o.key)))?;
    }
    let value = parse_value(&o.value, table.get(*last), LIST_KEYS.contains(&o.key.as_str()));
    table.insert(last.to_string(), value);
    Ok(())
}

/// A validated configuration with paths resolved against the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    /// Effective configuration, paths as written (after overrides).
    pub config: RunConfig,
    pub prices: PathBuf,
    pub sectors: PathBuf,
    pub events: Option<PathBuf>,
    pub output: PathBuf,
    /// Digest of `config`.
    pub digest: String,
}

/// Parses configuration text, applies overrides and validates.
pub fn parse_config(text: &str, overrides: &[Override]) -> Result<RunConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Reads the file, applies overrides, validates and resolves paths. The
/// output directory comes from [`OUTPUT_DIR_ENV`] when that is set.
pub fn load(path: &Path, overrides: &[Override]) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let config = parse_config(&text, overrides).map_err(|e| e.context(path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let output = match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => resolve(&config.paths.output),
    };
    Ok(LoadedConfig {
        prices: resolve(&config.paths.prices),
        sectors: resolve(&config.paths.sectors),
        events: config.paths.events.as_deref().map(resolve),
        output,
        digest: config.digest(),
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[paths]
prices = "prices.csv"
sectors = "sectors.csv"
output = "out"
"#;

    #[test]
    fn defaults() {
        let c = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(c.epochs.length, 42);
        assert_eq!(c.kinds(), MatrixKind::ALL.to_vec());
        assert_eq!(
            (c.clustering.k.standard, c.clustering.k.reduced_cov, c.clustering.k.reduced_corr, c.clustering.k.demeaned),
            (4, 4, 5, 5)
        );
        assert!(!c.robustness.enabled);
        assert_eq!(c.clustering.representation, RepresentationName::Pca);
    }

    #[test]
    fn seed_is_mandatory() {
        let text = MINIMAL.replace("seed = 7", "");
        let e = parse_config(&text, &[]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.message.contains("seed"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[epochs]\nlenght = 3\n");
        assert!(parse_config(&text, &[]).is_err());
    }

    #[test]
    fn overrides() {
        let args = ["run", "--config", "a.toml", "--epochs.length=30", "--clustering.kinds", "standard,demeaned", "--seed=9"]
            .map(String::from)
            .to_vec();
        let (rest, o) = extract_overrides(args).unwrap();
        assert_eq!(rest, vec!["run", "--config", "a.toml"]);
        let c = parse_config(MINIMAL, &o).unwrap();
        assert_eq!(c.epochs.length, 30);
        assert_eq!(c.seed, 9);
        assert_eq!(c.kinds(), vec![MatrixKind::Standard, MatrixKind::Demeaned]);
        let o = [Override {
            key: "clustering.kinds".into(),
            value: r#"["reduced_corr"]"#.into(),
        }];
        assert_eq!(parse_config(MINIMAL, &o).unwrap().kinds(), vec![MatrixKind::ReducedCorr]);
    }

    #[test]
    fn invalid_values() {
        for (key, value) in [
            ("epochs.length", "2"),
            ("clustering.k.standard", "11"),
            ("clustering.kinds", "standard,standard"),
            ("clustering.kinds", "bogus"),
            ("clustering.restarts", "0"),
            ("prices.delimiter", ";;"),
        ] {
            let o = [Override {
                key: key.into(),
                value: value.into(),
            }];
            let e = parse_config(MINIMAL, &o).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{key}={value}");
        }
    }

    #[test]
    fn digest_tracks_content() {
        let a = parse_config(MINIMAL, &[]).unwrap();
        let o = [Override {
            key: "seed".into(),
            value: "8".into(),
        }];
        let b = parse_config(MINIMAL, &o).unwrap();
        assert_eq!(a.digest(), parse_config(MINIMAL, &[]).unwrap().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
