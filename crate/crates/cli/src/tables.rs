//! CSV layouts owned by the command line: scan predictions and scan labels.

use std::collections::BTreeMap;
use std::path::Path;

use scanfuse::confmap::{validate_dataset, SourceLines};
use scanfuse::{Dataset, Error, FusedScan, LabelSpace};

use crate::run::{CliError, RowViolation};

/// One fused scan as read back from a predictions file.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub scan_id: String,
    pub prediction: usize,
    pub scores: Vec<f64>,
}

fn writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf)
}

/// `scan_id,prediction,score_<class>...`
pub fn write_predictions(labels: &LabelSpace, fused: &[FusedScan]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        let mut header = vec!["scan_id".to_string(), "prediction".to_string()];
        header.extend(labels.classes().iter().map(|c| format!("score_{c}")));
        w.write_record(&header).map_err(Error::from)?;
        for f in fused {
            let mut row = vec![f.scan_id.clone(), labels.name(f.decision).to_string()];
            row.extend(f.values.iter().map(|v| format!("{v}")));
            w.write_record(&row).map_err(Error::from)?;
        }
        w.flush().map_err(|e| CliError::Failed(e.to_string()))?;
    }
    Ok(buf)
}

pub fn read_predictions(bytes: &[u8]) -> Result<(LabelSpace, Vec<PredictionRow>), CliError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(Error::from)?.iter().map(str::to_string).collect();
    let parse_err = |line: usize, message: String| CliError::Data(Error::Parse { line, message });
    if header.len() < 4 || header[0] != "scan_id" || header[1] != "prediction" {
        return Err(parse_err(1, "header must be scan_id,prediction,score_<class>...".into()));
    }
    let classes = header[2..]
        .iter()
        .map(|c| c.strip_prefix("score_").map(str::to_string).ok_or_else(|| parse_err(1, format!("unexpected column `{c}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = LabelSpace::new(classes).map_err(|e| parse_err(1, e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(Error::from)?;
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        let prediction =
            labels.index_of(&rec[1]).ok_or_else(|| parse_err(line, format!("unknown class `{}`", &rec[1])))?;
        let scores = rec
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>().map_err(|_| parse_err(line, format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(PredictionRow { scan_id: rec[0].to_string(), prediction, scores });
    }
    Ok((labels, rows))
}

/// `scan_id,label` for every labeled scan.
pub fn write_labels(d: &Dataset) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = writer(&mut buf);
        w.write_record(["scan_id", "label"]).map_err(Error::from)?;
        for s in &d.scans {
            if let Some(l) = s.true_label {
                w.write_record([s.scan_id.as_str(), d.label_space.name(l)]).map_err(Error::from)?;
            }
        }
        w.flush().map_err(|e| CliError::Failed(e.to_string()))?;
    }
    Ok(buf)
}

/// Scan labels from any CSV with `scan_id` and `label` columns, so both the
/// labels layout and a labeled confidence map work.
pub fn read_labels(bytes: &[u8], labels: &LabelSpace) -> Result<BTreeMap<String, usize>, CliError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(Error::from)?.iter().map(str::to_string).collect();
    let parse_err = |line: usize, message: String| CliError::Data(Error::Parse { line, message });
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| parse_err(1, format!("missing `{name}` column")))
    };
    let (sid, lid) = (col("scan_id")?, col("label")?);
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(Error::from)?;
        let name = rec.get(lid).unwrap_or("");
        if name.is_empty() {
            continue;
        }
        let label = labels.index_of(name).ok_or_else(|| parse_err(line, format!("unknown class `{name}`")))?;
        let scan = rec.get(sid).unwrap_or("").to_string();
        if let Some(prev) = out.insert(scan.clone(), label) {
            if prev != label {
                return Err(parse_err(line, format!("conflicting labels for scan `{scan}`")));
            }
        }
    }
    Ok(out)
}

/// Reads a confidence map and rejects it, naming every offending row, if any
/// dataset invariant is broken.
pub fn read_confmap(bytes: &[u8], path: &Path) -> Result<Dataset, CliError> {
    let (d, lines) = scanfuse::confmap::read_csv(bytes)?;
    let violations = validate_dataset(&d);
    if violations.is_empty() {
        return Ok(d);
    }
    Err(CliError::Violations { path: path.to_path_buf(), violations: locate(&violations, &lines) })
}

fn locate(violations: &[scanfuse::Violation], lines: &SourceLines) -> Vec<RowViolation> {
    violations
        .iter()
        .map(|v| {
            let line = match (&v.scan_id, &v.slice_id) {
                (Some(s), Some(sl)) => lines.line_of(s, sl),
                (Some(s), None) => lines.first_line_of_scan(s),
                _ => None,
            };
            RowViolation {
                line,
                scan_id: v.scan_id.clone(),
                slice_id: v.slice_id.clone(),
                rule: serde_json::to_value(v.rule).ok().and_then(|r| r.as_str().map(str::to_string)).unwrap_or_default(),
                detail: v.detail.clone(),
            }
        })
        .collect()
}
