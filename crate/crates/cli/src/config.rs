//! Effective run configuration: one TOML section per subcommand, with
//! command-line flags layered on top.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vtid_core::addfs::AddfsParams;
use vtid_core::eval::{ClassifierKind, SelectorKind};
use vtid_core::features::PeakParams;
use vtid_core::ingest::DEFAULT_ELEPHANT_THRESHOLD;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extract: Option<ExtractConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<RankConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

fn default_threshold() -> usize {
    DEFAULT_ELEPHANT_THRESHOLD
}

fn yes() -> bool {
    true
}

/// `0.1, 0.2, .., 0.9`.
pub fn decile_fractions() -> Vec<f64> {
    fraction_range(0.1, 0.9, 0.1).expect("valid range")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    /// SNI rule file, `pattern<TAB>class` per line.
    pub labels: Option<PathBuf>,
    #[serde(default = "default_threshold")]
    pub elephant_threshold: usize,
    #[serde(default = "yes")]
    pub elephant_filter: bool,
    pub dictionary: Option<PathBuf>,
    pub peak: PeakParams,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            inputs: Vec::new(),
            output: None,
            labels: None,
            elephant_threshold: DEFAULT_ELEPHANT_THRESHOLD,
            elephant_filter: true,
            dictionary: None,
            peak: PeakParams::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    pub dataset: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub addfs: AddfsParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub dataset: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub selector: SelectorKind,
    pub fractions: Vec<f64>,
    pub classifier: ClassifierKind,
    pub k: usize,
    pub folds: usize,
    pub leaky_selection: bool,
    pub ablate_peaks: bool,
    pub window_sweep: bool,
    pub offset_sweep: bool,
    pub traces: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub elephant_threshold: usize,
    pub elephant_filter: bool,
    /// Window lengths tried by the window sweep, seconds.
    pub windows: Vec<f64>,
    /// Offset factors tried by the offset sweep.
    pub offsets: Vec<f64>,
    pub addfs: AddfsParams,
    /// Base peak parameters for the sweeps.
    pub peak: PeakParams,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            dataset: None,
            out_dir: None,
            seed: None,
            selector: SelectorKind::Addfs,
            fractions: decile_fractions(),
            classifier: ClassifierKind::Dt,
            k: 10,
            folds: 10,
            leaky_selection: false,
            ablate_peaks: false,
            window_sweep: false,
            offset_sweep: false,
            traces: Vec::new(),
            labels: None,
            elephant_threshold: DEFAULT_ELEPHANT_THRESHOLD,
            elephant_filter: true,
            windows: (1..=6).map(f64::from).collect(),
            offsets: fraction_range(0.1, 1.0, 0.1).expect("valid range"),
            addfs: AddfsParams::default(),
            peak: PeakParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub datasets: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub selectors: Vec<SelectorKind>,
    pub fractions: Vec<f64>,
    pub classifier: ClassifierKind,
    pub k: usize,
    pub folds: usize,
    pub leaky_selection: bool,
    pub addfs: AddfsParams,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            datasets: Vec::new(),
            out_dir: None,
            seed: None,
            selectors: vec![
                SelectorKind::Addfs,
                SelectorKind::Relief,
                SelectorKind::Pearson,
                SelectorKind::Fscore,
            ],
            fractions: vec![0.1, 0.2, 0.3],
            classifier: ClassifierKind::Dt,
            k: 10,
            folds: 10,
            leaky_selection: false,
            addfs: AddfsParams::default(),
        }
    }
}

/// `start, start + step, ..` up to `stop`, each rounded to 1e-9 so that
/// `0.1:0.9:0.1` yields `0.3` rather than `0.30000000000000004`.
pub fn fraction_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start <= stop) {
        bail!("bad range {start}:{stop}:{step}");
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let v = ((start + f64::from(i) * step) * 1e9).round() / 1e9;
        if v > stop + 1e-9 {
            break;
        }
        out.push(v);
        i += 1;
    }
    Ok(out)
}

/// A parsed `--fractions` value.
#[derive(Debug, Clone, PartialEq)]
pub struct Fractions(pub Vec<f64>);

/// Parses `start:stop:step` or a comma-separated list.
pub fn parse_fractions(s: &str) -> Result<Fractions, String> {
    parse_fraction_list(s).map(Fractions)
}

fn parse_fraction_list(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        return fraction_range(num(parts[0])?, num(parts[1])?, num(parts[2])?).map_err(|e| e.to_string());
    }
    if parts.len() != 1 {
        return Err(format!("expected start:stop:step or a list, got {s:?}"));
    }
    s.split(',').map(num).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_syntax() {
        assert_eq!(parse_fractions("0.1:0.9:0.1").unwrap().0.len(), 9);
        assert_eq!(parse_fractions("0.1:0.9:0.1").unwrap().0[2], 0.3);
        assert_eq!(parse_fractions("0.1, 0.5,1").unwrap().0, vec![0.1, 0.5, 1.0]);
        assert!(parse_fractions("0.1:0.2").is_err());
        assert!(parse_fractions("x").is_err());
        assert_eq!(decile_fractions()[8], 0.9);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = FileConfig {
            jobs: Some(2),
            eval: Some(EvalSection {
                seed: Some(7),
                dataset: Some("d.csv".into()),
                ..Default::default()
            }),
            extract: Some(ExtractConfig::default()),
            ..Default::default()
        };
        let text = cfg.to_toml().unwrap();
        let back: FileConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(toml::from_str::<FileConfig>("[rank]\nbogus = 1\n").is_err());
        let partial: FileConfig = toml::from_str("[eval]\nseed = 3\n[eval.peak]\nwindow = 4.0\n").unwrap();
        let e = partial.eval.unwrap();
        assert_eq!(e.peak.window, 4.0);
        assert_eq!(e.peak.alpha, 5.0);
        assert_eq!(e.folds, 10);
    }
}
