//! Confidence maps: the per-slice class-probability vectors of a set of scans.
//!
//! Types here are plain data. Construction through [`ConfidenceVector::try_new`]
//! or [`normalize_confidence`] guarantees the simplex invariant, but a
//! [`Dataset`] parsed from a file may hold arbitrary values so that
//! [`validate_dataset`] can report every problem at once.
//!
//! # CSV layout
//!
//! ```text
//! scan_id,slice_id,p_EDH,p_IPH,p_IVH,p_SAH,p_SDH[,label]
//! ```
//!
//! One row per slice, UTF-8, `.` as decimal point. The probability columns
//! define the label space and its order. The optional `label` column carries
//! the scan's class identifier on every row of that scan (empty for unlabeled
//! scans). Floats are written as the shortest decimal that parses back to the
//! same `f64`.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class identifiers in file-column order.
pub const ICH_CLASSES: [&str; 5] = ["EDH", "IPH", "IVH", "SAH", "SDH"];

/// Allowed slack on `Σp = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Ordered set of class identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    classes: Vec<String>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(classes: impl IntoIterator<Item = S>) -> Result<Self> {
        let classes: Vec<String> = classes.into_iter().map(Into::into).collect();
        if classes.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "label space needs at least 2 classes, got {}",
                classes.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &classes {
            if c.is_empty() || !seen.insert(c.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate or empty class identifier `{c}`")));
            }
        }
        Ok(Self { classes })
    }

    /// The five hemorrhage subtypes in alphabetical order.
    pub fn ich() -> Self {
        Self { classes: ICH_CLASSES.iter().map(|s| s.to_string()).collect() }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn name(&self, index: usize) -> &str {
        &self.classes[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }
}

impl Default for LabelSpace {
    fn default() -> Self {
        Self::ich()
    }
}

/// Class-probability vector of one slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfidenceVector(Vec<f64>);

impl ConfidenceVector {
    /// Builds a vector, rejecting anything off the probability simplex.
    pub fn try_new(p: Vec<f64>) -> Result<Self> {
        let v = Self(p);
        match v.simplex_problem() {
            None => Ok(v),
            Some(problem) => Err(Error::InvalidInput(problem)),
        }
    }

    /// Wraps raw values without checking them.
    pub fn from_raw(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    /// Largest class probability.
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Describes why the vector is off the simplex, if it is.
    pub fn simplex_problem(&self) -> Option<String> {
        if self.0.is_empty() {
            return Some("empty probability vector".into());
        }
        if let Some((k, p)) = self
            .0
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Some(format!("probability {p} for class {k} outside [0,1]"));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Some(format!("probabilities sum to {sum}, not 1"));
        }
        None
    }
}

/// Index of the maximum value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub slice_id: String,
    pub confidence: ConfidenceVector,
}

impl SliceRecord {
    pub fn new(slice_id: impl Into<String>, confidence: ConfidenceVector) -> Self {
        Self { slice_id: slice_id.into(), confidence }
    }
}

/// All slices of one scan, in input order, plus the scan label if known.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub scan_id: String,
    pub slices: Vec<SliceRecord>,
    /// Class index into the dataset's [`LabelSpace`].
    pub true_label: Option<usize>,
}

impl ScanRecord {
    pub fn new(scan_id: impl Into<String>, slices: Vec<SliceRecord>, true_label: Option<usize>) -> Self {
        Self { scan_id: scan_id.into(), slices, true_label }
    }

    /// Builds a scan from bare probability vectors with slice ids `0..n`.
    pub fn from_vectors(scan_id: impl Into<String>, vectors: Vec<Vec<f64>>, true_label: Option<usize>) -> Self {
        let slices = vectors
            .into_iter()
            .enumerate()
            .map(|(i, p)| SliceRecord::new(i.to_string(), ConfidenceVector::from_raw(p)))
            .collect();
        Self::new(scan_id, slices, true_label)
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.slices.first().map_or(0, |s| s.confidence.len())
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.slices.iter().map(|s| s.confidence.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    pub label_space: LabelSpace,
    pub scans: Vec<ScanRecord>,
}

impl Dataset {
    pub fn new(label_space: LabelSpace, scans: Vec<ScanRecord>) -> Self {
        Self { label_space, scans }
    }

    pub fn slice_count(&self) -> usize {
        self.scans.iter().map(ScanRecord::len).sum()
    }

    pub fn is_fully_labeled(&self) -> bool {
        !self.scans.is_empty() && self.scans.iter().all(|s| s.true_label.is_some())
    }

    /// Returns the dataset, or an error describing the first violation.
    pub fn validated(self) -> Result<Self> {
        match validate_dataset(&self).into_iter().next() {
            None => Ok(self),
            Some(v) => Err(Error::InvalidInput(v.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    LabelSpace,
    DuplicateScanId,
    EmptyScan,
    DuplicateSliceId,
    ClassCount,
    Simplex,
    LabelOutOfRange,
}

/// One broken dataset invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub scan_id: Option<String>,
    pub slice_id: Option<String>,
    pub rule: Rule,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.rule)?;
        if let Some(scan) = &self.scan_id {
            write!(f, " scan `{scan}`")?;
        }
        if let Some(slice) = &self.slice_id {
            write!(f, " slice `{slice}`")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Checks every dataset invariant; an empty result means the dataset is valid.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let c = d.label_space.len();
    let unique: HashSet<&String> = d.label_space.classes.iter().collect();
    if c < 2 || unique.len() != c {
        out.push(Violation {
            scan_id: None,
            slice_id: None,
            rule: Rule::LabelSpace,
            detail: format!("label space must hold >= 2 unique classes, got {:?}", d.label_space.classes),
        });
    }

    let mut scan_ids = HashSet::new();
    for scan in &d.scans {
        let sid = Some(scan.scan_id.clone());
        if !scan_ids.insert(scan.scan_id.as_str()) {
            out.push(Violation {
                scan_id: sid.clone(),
                slice_id: None,
                rule: Rule::DuplicateScanId,
                detail: "scan_id appears more than once".into(),
            });
        }
        if scan.slices.is_empty() {
            out.push(Violation {
                scan_id: sid.clone(),
                slice_id: None,
                rule: Rule::EmptyScan,
                detail: "scan has no slices".into(),
            });
        }
        if let Some(label) = scan.true_label {
            if label >= c {
                out.push(Violation {
                    scan_id: sid.clone(),
                    slice_id: None,
                    rule: Rule::LabelOutOfRange,
                    detail: format!("label index {label} outside {c} classes"),
                });
            }
        }
        let mut slice_ids = HashSet::new();
        for slice in &scan.slices {
            let slid = Some(slice.slice_id.clone());
            if !slice_ids.insert(slice.slice_id.as_str()) {
                out.push(Violation {
                    scan_id: sid.clone(),
                    slice_id: slid.clone(),
                    rule: Rule::DuplicateSliceId,
                    detail: "slice_id appears more than once in scan".into(),
                });
            }
            if slice.confidence.len() != c {
                out.push(Violation {
                    scan_id: sid.clone(),
                    slice_id: slid,
                    rule: Rule::ClassCount,
                    detail: format!("{} probabilities for {c} classes", slice.confidence.len()),
                });
                continue;
            }
            if let Some(problem) = slice.confidence.simplex_problem() {
                out.push(Violation { scan_id: sid.clone(), slice_id: slid, rule: Rule::Simplex, detail: problem });
            }
        }
    }
    out
}

/// Rescales a nonnegative vector onto the probability simplex.
pub fn normalize_confidence(raw: &[f64]) -> Result<ConfidenceVector> {
    if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::DegenerateVector);
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::DegenerateVector);
    }
    Ok(ConfidenceVector(raw.iter().map(|v| (v / sum).min(1.0)).collect()))
}

/// Line numbers (1-based, header is line 1) of each parsed slice row.
#[derive(Clone, Debug, Default)]
pub struct SourceLines {
    lines: HashMap<(String, String), usize>,
}

impl SourceLines {
    pub fn line_of(&self, scan_id: &str, slice_id: &str) -> Option<usize> {
        self.lines.get(&(scan_id.to_string(), slice_id.to_string())).copied()
    }

    /// First line belonging to a scan.
    pub fn first_line_of_scan(&self, scan_id: &str) -> Option<usize> {
        self.lines.iter().filter(|((s, _), _)| s == scan_id).map(|(_, l)| *l).min()
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes a dataset in the confidence-map CSV layout.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let labeled = d.scans.iter().any(|s| s.true_label.is_some());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header = vec!["scan_id".to_string(), "slice_id".to_string()];
    header.extend(d.label_space.classes().iter().map(|c| format!("p_{c}")));
    if labeled {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for scan in &d.scans {
        let label = scan
            .true_label
            .and_then(|l| d.label_space.classes().get(l))
            .map(String::as_str)
            .unwrap_or("");
        for slice in &scan.slices {
            let mut row = vec![scan.scan_id.clone(), slice.slice_id.clone()];
            row.extend(slice.confidence.as_slice().iter().map(|p| fmt_f64(*p)));
            if labeled {
                row.push(label.to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses the confidence-map CSV layout.
///
/// Structural problems (bad header, unparsable numbers, unknown or
/// inconsistent labels) are errors; value problems are left for
/// [`validate_dataset`].
pub fn read_csv<R: Read>(reader: R) -> Result<(Dataset, SourceLines)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 2 || cols[0] != "scan_id" || cols[1] != "slice_id" {
        return Err(Error::Parse { line: 1, message: "header must start with scan_id,slice_id".into() });
    }
    let has_label = cols.last() == Some(&"label");
    let prob_cols = &cols[2..cols.len() - usize::from(has_label)];
    let mut classes = Vec::with_capacity(prob_cols.len());
    for col in prob_cols {
        match col.strip_prefix("p_") {
            Some(name) => classes.push(name.to_string()),
            None => {
                return Err(Error::Parse { line: 1, message: format!("unexpected column `{col}`") });
            }
        }
    }
    let label_space =
        LabelSpace::new(classes).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;

    let mut scans: Vec<ScanRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut lines = SourceLines::default();
    for (row_no, record) in r.records().enumerate() {
        let line = row_no + 2;
        let record = record?;
        if record.len() != cols.len() {
            return Err(Error::Parse { line, message: format!("expected {} fields, got {}", cols.len(), record.len()) });
        }
        let scan_id = record[0].to_string();
        let slice_id = record[1].to_string();
        let mut p = Vec::with_capacity(prob_cols.len());
        for (k, field) in record.iter().skip(2).take(prob_cols.len()).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("bad number `{field}` in column {}", cols[k + 2]) })?;
            p.push(v);
        }
        let label = if has_label {
            let l = record[cols.len() - 1].to_string();
            (!l.is_empty()).then_some(l)
        } else {
            None
        };
        let slot = *index.entry(scan_id.clone()).or_insert_with(|| {
            scans.push(ScanRecord::new(scan_id.clone(), Vec::new(), None));
            labels.push(label.clone());
            scans.len() - 1
        });
        if labels[slot] != label {
            return Err(Error::Parse { line, message: format!("inconsistent label for scan `{scan_id}`") });
        }
        lines.lines.entry((scan_id, slice_id.clone())).or_insert(line);
        scans[slot].slices.push(SliceRecord::new(slice_id, ConfidenceVector::from_raw(p)));
    }
    for (scan, label) in scans.iter_mut().zip(labels) {
        if let Some(name) = label {
            let idx = label_space.index_of(&name).ok_or_else(|| Error::UnknownLabel(name.clone()))?;
            scan.true_label = Some(idx);
        }
    }
    Ok((Dataset::new(label_space, scans), lines))
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    classes: Vec<String>,
    scans: Vec<ScanDoc>,
}

#[derive(Serialize, Deserialize)]
struct ScanDoc {
    scan_id: String,
    label: Option<String>,
    slices: Vec<SliceRecord>,
}

/// JSON form of a dataset: the same fields as the CSV, nested by scan.
pub fn to_json(d: &Dataset) -> Result<String> {
    let doc = DatasetDoc {
        classes: d.label_space.classes().to_vec(),
        scans: d
            .scans
            .iter()
            .map(|s| ScanDoc {
                scan_id: s.scan_id.clone(),
                label: s.true_label.and_then(|l| d.label_space.classes().get(l).cloned()),
                slices: s.slices.clone(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(s: &str) -> Result<Dataset> {
    let doc: DatasetDoc = serde_json::from_str(s)?;
    let label_space = LabelSpace::new(doc.classes)?;
    let mut scans = Vec::with_capacity(doc.scans.len());
    for s in doc.scans {
        let true_label = match s.label {
            Some(name) => Some(label_space.index_of(&name).ok_or(Error::UnknownLabel(name))?),
            None => None,
        };
        scans.push(ScanRecord::new(s.scan_id, s.slices, true_label));
    }
    Ok(Dataset::new(label_space, scans))
}
