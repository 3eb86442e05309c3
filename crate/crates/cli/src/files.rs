//! On-disk formats: model JSON, encode-log CSV, feasible-set and level
//! configs, and content feature records.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use starq::features::FeatureVector;
use starq::fitting::{EncodeLog, RateSample};
use starq::optimizer::FeasibleSets;
use starq::ordering::LayerLevels;
use starq::{
    named_frame_size, stepsize_from_qp, QrModel, QualityParams, RateParams, ResolutionRef, Star,
};

/// Malformed or unreadable user input. Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

/// Parses a frame size given either as a pixel count or as qcif/cif/4cif.
pub fn parse_frame_size(text: &str) -> Result<f64, String> {
    if let Some(s) = named_frame_size(text) {
        return Ok(s);
    }
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!(
            "'{text}' is neither a pixel count nor one of qcif, cif, 4cif"
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum FrameSize {
    Pixels(f64),
    Named(String),
}

fn frame_sizes(values: Vec<FrameSize>) -> Result<Vec<f64>> {
    values
        .into_iter()
        .map(|v| match v {
            FrameSize::Pixels(p) => Ok(p),
            FrameSize::Named(n) => parse_frame_size(&n).map_err(input_error),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qr: Option<QrModel>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let model: ModelFile = serde_json::from_str(&text)
            .map_err(|e| input_error(format!("{}: invalid model file: {e}", path.display())))?;
        if model.rate.is_none() && model.quality.is_none() && model.qr.is_none() {
            return Err(input_error(format!(
                "{}: model file holds no parameters",
                path.display()
            )));
        }
        if let Some(r) = &model.rate {
            r.validate()
                .with_context(|| format!("{}: rate parameters", path.display()))?;
        }
        if let Some(q) = &model.quality {
            q.validate()
                .with_context(|| format!("{}: quality parameters", path.display()))?;
        }
        if let Some(q) = &model.qr {
            q.validate()
                .with_context(|| format!("{}: Q(R) parameters", path.display()))?;
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn rate(&self, path: &Path) -> Result<RateParams> {
        self.rate.ok_or_else(|| {
            input_error(format!(
                "{}: model file has no rate parameters",
                path.display()
            ))
        })
    }

    pub fn quality(&self, path: &Path) -> Result<QualityParams> {
        self.quality.ok_or_else(|| {
            input_error(format!(
                "{}: model file has no quality parameters",
                path.display()
            ))
        })
    }
}

pub struct LoadedLog {
    pub log: EncodeLog,
    pub warnings: Vec<String>,
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Reads an encode log. Columns: `q` or `qp`, `width` and `height` (or a
/// single `resolution`), `fps`, `rate_kbps`, optional `label`.
pub fn load_encode_log(path: &Path, reference: Option<ResolutionRef>) -> Result<LoadedLog> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?
        .clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(input_error(format!(
            "{}: line 1: missing header row",
            path.display()
        )));
    }

    let mut warnings = Vec::new();
    let q_col = find_column(&headers, "q");
    let qp_col = find_column(&headers, "qp");
    let step_col = match (qp_col, q_col) {
        (Some(qp), Some(_)) => {
            warnings.push("both q and qp columns present; using qp".to_string());
            StepColumn::Qp(qp)
        }
        (Some(qp), None) => StepColumn::Qp(qp),
        (None, Some(q)) => StepColumn::Q(q),
        (None, None) => return Err(missing(path, "q or qp")),
    };
    let size_col = match (
        find_column(&headers, "width"),
        find_column(&headers, "height"),
    ) {
        (Some(w), Some(h)) => SizeColumn::Dims(w, h),
        _ => match find_column(&headers, "resolution") {
            Some(r) => SizeColumn::Named(r),
            None => return Err(missing(path, "width and height")),
        },
    };
    let fps_col = find_column(&headers, "fps").ok_or_else(|| missing(path, "fps"))?;
    let rate_col = find_column(&headers, "rate_kbps").ok_or_else(|| missing(path, "rate_kbps"))?;
    let label_col = find_column(&headers, "label");

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(input_error(format!(
                    "{}: line {line}: column {name}: cannot parse '{raw}' as a number",
                    path.display()
                ))),
            }
        };
        let q = match step_col {
            StepColumn::Q(c) => field(c, "q")?,
            StepColumn::Qp(c) => stepsize_from_qp(field(c, "qp")?),
        };
        let s = match size_col {
            SizeColumn::Dims(w, h) => field(w, "width")? * field(h, "height")?,
            SizeColumn::Named(c) => parse_frame_size(record.get(c).unwrap_or("")).map_err(|e| {
                input_error(format!(
                    "{}: line {line}: column resolution: {e}",
                    path.display()
                ))
            })?,
        };
        let t = field(fps_col, "fps")?;
        let rate = field(rate_col, "rate_kbps")?;
        let star = Star::new(q, s, t)
            .map_err(|e| input_error(format!("{}: line {line}: {e}", path.display())))?;
        if rate <= 0.0 {
            return Err(input_error(format!(
                "{}: line {line}: rate_kbps must be > 0, got {rate}",
                path.display()
            )));
        }
        let mut sample = RateSample::new(star, rate);
        sample.tag = label_col
            .and_then(|c| record.get(c))
            .filter(|l| !l.is_empty())
            .map(str::to_string);
        samples.push(sample);
    }

    let log = match reference {
        Some(r) => EncodeLog::with_reference(samples, r),
        None => EncodeLog::new(samples),
    }
    .with_context(|| format!("{}", path.display()))?;
    Ok(LoadedLog { log, warnings })
}

#[derive(Clone, Copy)]
enum StepColumn {
    Q(usize),
    Qp(usize),
}

#[derive(Clone, Copy)]
enum SizeColumn {
    Dims(usize, usize),
    Named(usize),
}

fn missing(path: &Path, what: &str) -> anyhow::Error {
    input_error(format!(
        "{}: line 1: header lacks required column {what}",
        path.display()
    ))
}

/// Shared config for feasible sets and layer levels. Unspecified keys take
/// the standard values.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    s_values: Option<Vec<FrameSize>>,
    #[serde(default)]
    t_values: Option<Vec<f64>>,
    #[serde(default)]
    q_range: Option<(f64, f64)>,
    #[serde(default)]
    q_levels: Option<Vec<f64>>,
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| input_error(format!("{}: invalid config: {e}", path.display())))
}

pub fn load_sets(path: Option<&Path>) -> Result<FeasibleSets> {
    let mut sets = FeasibleSets::dyadic();
    let Some(path) = path else { return Ok(sets) };
    let cfg = load_config(path)?;
    if let Some(s) = cfg.s_values {
        sets.s_values = frame_sizes(s)?;
    }
    if let Some(t) = cfg.t_values {
        sets.t_values = t;
    }
    match (cfg.q_range, cfg.q_levels) {
        (Some(r), _) => sets.q_range = r,
        (None, Some(levels)) => {
            let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if levels.is_empty() {
                return Err(input_error(format!(
                    "{}: q_levels is empty",
                    path.display()
                )));
            }
            sets.q_range = (lo, hi);
        }
        (None, None) => {}
    }
    Ok(sets)
}

pub fn load_levels(path: Option<&Path>) -> Result<LayerLevels> {
    let mut levels = LayerLevels::standard();
    let Some(path) = path else { return Ok(levels) };
    let cfg = load_config(path)?;
    if cfg.q_range.is_some() {
        return Err(input_error(format!(
            "{}: layer ordering needs q_levels, not q_range",
            path.display()
        )));
    }
    if let Some(s) = cfg.s_values {
        levels.s_values = frame_sizes(s)?;
    }
    if let Some(t) = cfg.t_values {
        levels.t_values = t;
    }
    if let Some(q) = cfg.q_levels {
        levels.q_levels = q;
    }
    levels
        .validate()
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(levels)
}

/// Reads one feature record from a JSON object or a one-row CSV.
pub fn load_features(path: &Path) -> Result<FeatureVector> {
    let text = read_text(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    let features: FeatureVector = if is_json {
        serde_json::from_str(&text)
            .map_err(|e| input_error(format!("{}: invalid features: {e}", path.display())))?
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = reader.deserialize::<FeatureVector>();
        let first = rows
            .next()
            .ok_or_else(|| input_error(format!("{}: no feature record", path.display())))?
            .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        if rows.next().is_some() {
            return Err(input_error(format!(
                "{}: expected exactly one feature record",
                path.display()
            )));
        }
        first
    };
    features
        .validate()
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use starq::{CIF, CIF4, QCIF};

    #[test]
    fn frame_size_names_and_numbers() {
        assert_eq!(parse_frame_size("4CIF").unwrap(), CIF4);
        assert_eq!(parse_frame_size("qcif").unwrap(), QCIF);
        assert_eq!(parse_frame_size("101376").unwrap(), CIF);
        assert!(parse_frame_size("vga").is_err());
        assert!(parse_frame_size("-5").is_err());
    }

    #[test]
    fn model_file_round_trip_is_exact() {
        let rate = RateParams::new(
            1.1800000000000002,
            0.1 + 0.2,
            0.53,
            2379.123456789012,
            ResolutionRef::standard(),
        )
        .unwrap();
        let m = ModelFile {
            scenario: Some("SVC#1".into()),
            label: Some("city".into()),
            rate: Some(rate),
            quality: Some(
                QualityParams::new(7.25, 5.0 / 3.0, 3.48, ResolutionRef::standard()).unwrap(),
            ),
            qr: Some(QrModel::new(5.058, 2379.0).unwrap()),
        };
        let back: ModelFile = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
