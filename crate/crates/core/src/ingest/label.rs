use std::fs;
use std::path::Path;

use glob::{MatchOptions, Pattern};

use super::{Flow, IngestError};

const MATCH: MatchOptions = MatchOptions {
    case_sensitive: false,
    require_literal_separator: false,
    require_literal_leading_dot: false,
};

/// Ordered SNI glob rules; the first matching rule decides the class.
#[derive(Debug, Clone, Default)]
pub struct LabelRules {
    rules: Vec<(Pattern, String)>,
}

impl LabelRules {
    pub fn new<P, C>(rules: impl IntoIterator<Item = (P, C)>) -> Result<Self, IngestError>
    where
        P: AsRef<str>,
        C: Into<String>,
    {
        let rules = rules
            .into_iter()
            .map(|(p, c)| {
                let p = p.as_ref();
                Pattern::new(p)
                    .map(|pat| (pat, c.into()))
                    .map_err(|e| IngestError::Pattern {
                        pattern: p.to_owned(),
                        msg: e.msg.to_owned(),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(LabelRules { rules })
    }

    /// Parses `pattern<TAB>class` lines; blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (pat, class) = line.split_once('\t').ok_or_else(|| IngestError::Line {
                line: i + 1,
                msg: "expected pattern<TAB>class".into(),
            })?;
            let (pat, class) = (pat.trim(), class.trim());
            if pat.is_empty() || class.is_empty() {
                return Err(IngestError::Line {
                    line: i + 1,
                    msg: "empty pattern or class".into(),
                });
            }
            pairs.push((pat.to_owned(), class.to_owned()));
        }
        LabelRules::new(pairs)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_owned(),
            source,
        })?;
        LabelRules::parse(&text)
    }

    pub fn classify(&self, sni: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|(p, _)| p.matches_with(sni, MATCH))
            .map(|(_, c)| c.as_str())
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Result of [`label_flows`].
#[derive(Debug, Clone)]
pub struct Labeled {
    pub flows: Vec<Flow>,
    /// Indices into `flows` of the flows left without a label.
    pub unlabeled: Vec<usize>,
}

/// Labels every flow by its SNI through `rules`, falling back to
/// `default_label`. Flows matching neither stay unlabeled and are listed.
pub fn label_flows(
    flows: Vec<Flow>,
    rules: Option<&LabelRules>,
    default_label: Option<&str>,
) -> Labeled {
    let mut unlabeled = Vec::new();
    let flows = flows
        .into_iter()
        .enumerate()
        .map(|(i, mut f)| {
            let by_rule = rules
                .zip(f.sni())
                .and_then(|(r, sni)| r.classify(sni))
                .map(str::to_owned);
            let label = by_rule.or_else(|| default_label.map(str::to_owned));
            if label.is_none() {
                unlabeled.push(i);
            }
            f.set_label(label);
            f
        })
        .collect();
    Labeled { flows, unlabeled }
}
