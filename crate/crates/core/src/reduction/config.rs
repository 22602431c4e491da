//! Text form of a reduction request:
//!
//! ```text
//! retain = m1, m2
//! lump = {p1, p2}:1, {q1, q2}:auto
//! method = structured
//! ```
//!
//! Entries are separated by newlines or `;`. Optional keys: `fast` (species
//! eliminated by the averaging method, default: everything not retained),
//! `block = two|per-group`, `transform = balanced|identity` and
//! `threshold = rel:<f>|abs:<f>`. Lines starting with `#` are ignored.

use nalgebra::DVector;

use super::balance::ThresholdRule;
use super::model::ReducedModel;
use super::pipeline::{reduce_averaging, reduce_structured, GroupTruncation, LumpedGroup, StructuredOptions, TransformMode};
use super::ReductionError;
use crate::gramians::BlockMode;
use crate::netparse::ReactionNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodKind {
    #[default]
    Structured,
    Averaging,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReductionConfig {
    pub retain: Vec<String>,
    pub lump: Vec<(Vec<String>, GroupTruncation)>,
    pub method: MethodKind,
    pub fast: Option<Vec<String>>,
    pub block_mode: Option<BlockMode>,
    pub transform: Option<TransformMode>,
    pub threshold: Option<ThresholdRule>,
}

/// Species indices resolved against a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedConfig {
    pub retained: Vec<usize>,
    pub groups: Vec<LumpedGroup>,
    pub fast: Vec<usize>,
}

fn err(msg: impl Into<String>) -> ReductionError {
    ReductionError::Config(msg.into())
}

fn species_list(s: &str) -> Result<Vec<String>, ReductionError> {
    let names: Vec<String> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    if let Some(bad) = names.iter().find(|n| !n.chars().all(|c| c.is_alphanumeric() || c == '_')) {
        return Err(err(format!("invalid species name `{bad}`")));
    }
    Ok(names)
}

fn parse_lump(s: &str) -> Result<Vec<(Vec<String>, GroupTruncation)>, ReductionError> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('{').ok_or_else(|| err(format!("expected `{{` in lump at `{rest}`")))?;
        let close = body.find('}').ok_or_else(|| err("unclosed `{` in lump"))?;
        let species = species_list(&body[..close])?;
        if species.is_empty() {
            return Err(err("empty lumped group"));
        }
        rest = body[close + 1..].trim_start();
        let truncate = if let Some(after) = rest.strip_prefix(':') {
            let end = after.find(',').unwrap_or(after.len());
            let tok = after[..end].trim();
            rest = after[end..].trim_start();
            if tok == "auto" {
                GroupTruncation::Auto
            } else {
                GroupTruncation::Count(tok.parse().map_err(|_| err(format!("invalid truncation count `{tok}`")))?)
            }
        } else {
            GroupTruncation::Count(0)
        };
        out.push((species, truncate));
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(out)
}

fn parse_threshold(s: &str) -> Result<ThresholdRule, ReductionError> {
    let (kind, v) = s.split_once(':').unwrap_or(("rel", s));
    let v: f64 = v.trim().parse().map_err(|_| err(format!("invalid threshold `{s}`")))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(err(format!("threshold must be nonnegative, got {v}")));
    }
    match kind.trim() {
        "rel" | "relative" => Ok(ThresholdRule::Relative(v)),
        "abs" | "absolute" => Ok(ThresholdRule::Absolute(v)),
        other => Err(err(format!("unknown threshold kind `{other}`"))),
    }
}

/// Parses the configuration text.
pub fn parse_reduction_config(text: &str) -> Result<ReductionConfig, ReductionError> {
    let mut cfg = ReductionConfig::default();
    let mut seen = Vec::new();
    let entries = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(';'))
        .map(str::trim)
        .filter(|e| !e.is_empty());
    for entry in entries {
        let (key, value) = entry.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{entry}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if seen.contains(&key.to_string()) {
            return Err(err(format!("key `{key}` given twice")));
        }
        seen.push(key.to_string());
        match key {
            "retain" => cfg.retain = species_list(value)?,
            "lump" => cfg.lump = parse_lump(value)?,
            "fast" => cfg.fast = Some(species_list(value)?),
            "method" => {
                cfg.method = match value {
                    "structured" => MethodKind::Structured,
                    "averaging" => MethodKind::Averaging,
                    other => return Err(err(format!("unknown method `{other}`"))),
                }
            }
            "block" => {
                cfg.block_mode = Some(match value {
                    "two" => BlockMode::Two,
                    "per-group" => BlockMode::PerGroup,
                    other => return Err(err(format!("unknown block mode `{other}`"))),
                })
            }
            "transform" => {
                cfg.transform = Some(match value {
                    "balanced" => TransformMode::Balanced,
                    "identity" => TransformMode::Identity,
                    other => return Err(err(format!("unknown transform `{other}`"))),
                })
            }
            "threshold" => cfg.threshold = Some(parse_threshold(value)?),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    if cfg.retain.is_empty() {
        return Err(err("`retain` must list at least one species"));
    }
    Ok(cfg)
}

impl ReductionConfig {
    /// Looks up species names in `net`.
    pub fn resolve(&self, net: &ReactionNetwork) -> Result<ResolvedConfig, ReductionError> {
        let retained = net.species_indices(&self.retain)?;
        let groups = self
            .lump
            .iter()
            .map(|(names, t)| Ok(LumpedGroup { species: net.species_indices(names)?, truncate: *t }))
            .collect::<Result<Vec<_>, ReductionError>>()?;
        let fast = match &self.fast {
            Some(names) => net.species_indices(names)?,
            None => (0..net.species().len()).filter(|i| !retained.contains(i)).collect(),
        };
        Ok(ResolvedConfig { retained, groups, fast })
    }

    /// Runs the configured reduction of `net` about `x_ss`.
    pub fn reduce(&self, net: &ReactionNetwork, x_ss: &DVector<f64>) -> Result<ReducedModel, ReductionError> {
        let res = self.resolve(net)?;
        match self.method {
            MethodKind::Structured => {
                let mut opts = StructuredOptions::default();
                if let Some(b) = self.block_mode {
                    opts.gramian.block_mode = b;
                }
                if let Some(t) = self.transform {
                    opts.transform = t;
                }
                if let Some(t) = self.threshold {
                    opts.threshold = t;
                }
                reduce_structured(net, x_ss, &res.retained, &res.groups, &opts)
            }
            MethodKind::Averaging => reduce_averaging(net, x_ss, &res.retained, &res.fast),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let cfg = parse_reduction_config(
            "retain = m1, m2; lump = {p1, p2}:1, {a b}:auto\nmethod = structured\nblock = two # comment\nthreshold = abs:0.5",
        )
        .unwrap();
        assert_eq!(cfg.retain, ["m1", "m2"]);
        assert_eq!(cfg.lump.len(), 2);
        assert_eq!(cfg.lump[0], (vec!["p1".to_string(), "p2".to_string()], GroupTruncation::Count(1)));
        assert_eq!(cfg.lump[1].1, GroupTruncation::Auto);
        assert_eq!(cfg.block_mode, Some(BlockMode::Two));
        assert_eq!(cfg.threshold, Some(ThresholdRule::Absolute(0.5)));
    }

    #[test]
    fn errors() {
        assert!(parse_reduction_config("lump = {p1}:1").is_err());
        assert!(parse_reduction_config("retain = m1; method = fancy").is_err());
        assert!(parse_reduction_config("retain = m1; lump = {p1:1").is_err());
        assert!(parse_reduction_config("retain = m1; lump = {p1}:x").is_err());
        assert!(parse_reduction_config("retain = m1; retain = m2").is_err());
        assert!(parse_reduction_config("retain = m1; colour = red").is_err());
    }

    #[test]
    fn resolve_defaults_fast_to_unretained() {
        let net = crate::models::toy_network();
        let cfg = parse_reduction_config("retain = m1 m2; method = averaging").unwrap();
        let r = cfg.resolve(&net).unwrap();
        assert_eq!(r.retained, vec![0, 2]);
        assert_eq!(r.fast, vec![1, 3]);
        let bad = parse_reduction_config("retain = zz").unwrap();
        assert!(bad.resolve(&net).is_err());
    }
}
