use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::confmap::{fmt_f64, LabelSpace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleId {
    pub scan_id: String,
    pub slice_id: String,
}

impl SampleId {
    pub fn new(scan_id: impl Into<String>, slice_id: impl Into<String>) -> Self {
        Self { scan_id: scan_id.into(), slice_id: slice_id.into() }
    }
}

/// Samples × features matrix, row-major, with optional class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    ids: Vec<SampleId>,
    names: Vec<String>,
    data: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl FeatureTable {
    pub fn new(ids: Vec<SampleId>, names: Vec<String>, data: Vec<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidInput("feature table needs at least one feature".into()));
        }
        let unique: HashSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::InvalidInput("feature names must be unique".into()));
        }
        if data.len() != ids.len() * names.len() {
            return Err(Error::DimensionMismatch { expected: ids.len() * names.len(), actual: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature values must be finite".into()));
        }
        if let Some(l) = &labels {
            if l.len() != ids.len() {
                return Err(Error::DimensionMismatch { expected: ids.len(), actual: l.len() });
            }
        }
        Ok(Self { ids, names, data, labels })
    }

    /// Builds a table from rows with generated ids (`scan = row`, `slice = 0`)
    /// and names `f0..f{d-1}`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<usize>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let ids = (0..rows.len()).map(|i| SampleId::new(i.to_string(), "0")).collect();
        let names = (0..d).map(|j| format!("f{j}")).collect();
        Self::new(ids, names, rows.concat(), labels)
    }

    pub fn n_samples(&self) -> usize {
        self.ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn ids(&self) -> &[SampleId] {
        &self.ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.names.len();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.names.len())
    }

    pub fn column_means(&self) -> Vec<f64> {
        let d = self.n_features();
        let mut m = vec![0.0; d];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = self.n_samples().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|c| **c >= self.n_features()) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.n_features() });
        }
        let names = columns.iter().map(|c| self.names[*c].clone()).collect();
        let data = self.rows().flat_map(|r| columns.iter().map(move |c| r[*c])).collect();
        Self::new(self.ids.clone(), names, data, self.labels.clone())
    }

    /// Keeps the listed rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|r| **r >= self.n_samples()) {
            return Err(Error::IndexOutOfRange { index: bad, len: self.n_samples() });
        }
        let ids = rows.iter().map(|r| self.ids[*r].clone()).collect();
        let data = rows.iter().flat_map(|r| self.row(*r).iter().copied()).collect();
        let labels = self.labels.as_ref().map(|l| rows.iter().map(|r| l[*r]).collect());
        Self::new(ids, self.names.clone(), data, labels)
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n_samples() {
                return Err(Error::DimensionMismatch { expected: self.n_samples(), actual: l.len() });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Writes `scan_id,slice_id,<features...>[,label]`.
    pub fn write_csv<W: Write>(&self, labels: &LabelSpace, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["scan_id".to_string(), "slice_id".to_string()];
        header.extend(self.names.iter().cloned());
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut rec = vec![id.scan_id.clone(), id.slice_id.clone()];
            rec.extend(self.row(i).iter().map(|v| fmt_f64(*v)));
            if let Some(l) = &self.labels {
                let name = labels.classes().get(l[i]).ok_or_else(|| Error::UnknownLabel(l[i].to_string()))?;
                rec.push(name.clone());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the layout written by [`FeatureTable::write_csv`]. A trailing
    /// `label` column is resolved against `labels`.
    pub fn read_csv<R: Read>(reader: R, labels: &LabelSpace) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        let cols: Vec<String> = header.iter().map(str::to_string).collect();
        if cols.len() < 3 || cols[0] != "scan_id" || cols[1] != "slice_id" {
            return Err(Error::Parse { line: 1, message: "header must be scan_id,slice_id,<features>".into() });
        }
        let has_label = cols.last().map(String::as_str) == Some("label");
        let names: Vec<String> = cols[2..cols.len() - usize::from(has_label)].to_vec();
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut lab = Vec::new();
        for (row_no, rec) in r.records().enumerate() {
            let line = row_no + 2;
            let rec = rec?;
            if rec.len() != cols.len() {
                return Err(Error::Parse { line, message: format!("expected {} fields", cols.len()) });
            }
            ids.push(SampleId::new(&rec[0], &rec[1]));
            for field in rec.iter().skip(2).take(names.len()) {
                let v: f64 =
                    field.parse().map_err(|_| Error::Parse { line, message: format!("bad number `{field}`") })?;
                data.push(v);
            }
            if has_label {
                let name = &rec[cols.len() - 1];
                lab.push(labels.index_of(name).ok_or_else(|| Error::UnknownLabel(name.to_string()))?);
            }
        }
        Self::new(ids, names, data, has_label.then_some(lab))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_labels() {
        let t = FeatureTable::from_rows(&[vec![1.5, -2.0], vec![0.1, 3.0]], Some(vec![0, 4])).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&LabelSpace::ich(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scan_id,slice_id,f0,f1,label\n0,0,1.5,-2,EDH\n"));
        assert_eq!(FeatureTable::read_csv(buf.as_slice(), &LabelSpace::ich()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(FeatureTable::from_rows(&[vec![1.0], vec![1.0, 2.0]], None).is_err());
        assert!(FeatureTable::from_rows(&[vec![f64::NAN]], None).is_err());
        let ids = vec![SampleId::new("a", "1")];
        assert!(FeatureTable::new(ids, vec!["x".into(), "x".into()], vec![1.0, 2.0], None).is_err());
    }

    #[test]
    fn column_and_row_selection() {
        let t = FeatureTable::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], Some(vec![1, 2])).unwrap();
        let c = t.select_columns(&[2, 0]).unwrap();
        assert_eq!(c.data(), &[3.0, 1.0, 6.0, 4.0]);
        assert_eq!(c.names(), &["f2".to_string(), "f0".to_string()]);
        let r = t.select_rows(&[1]).unwrap();
        assert_eq!(r.row(0), &[4.0, 5.0, 6.0]);
        assert_eq!(r.labels(), Some(&[2][..]));
        assert_eq!(t.column_means(), vec![2.5, 3.5, 4.5]);
    }
}
