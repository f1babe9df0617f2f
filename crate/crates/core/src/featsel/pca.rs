use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::table::FeatureTable;
use crate::error::{Error, Result};

/// Principal axes of a feature table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `d`.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalues, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn d(&self) -> usize {
        self.mean.len()
    }

    /// Rebuilds feature-space rows from component scores.
    pub fn inverse_transform(&self, scores: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (s, comp) in scores.iter().zip(&self.components) {
            for (xi, ci) in x.iter_mut().zip(comp) {
                *xi += s * ci;
            }
        }
        x
    }
}

fn covariance(t: &FeatureTable, mean: &[f64]) -> DMatrix<f64> {
    let d = t.n_features();
    let n = t.n_samples();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in t.rows() {
        for i in 0..d {
            let ci = row[i] - mean[i];
            for j in i..d {
                cov[(i, j)] += ci * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Fits `k` principal components from the eigendecomposition of the sample
/// covariance (divisor `n - 1`).
///
/// Each component's sign is fixed so that its largest-magnitude coordinate
/// (first one on ties) is positive.
pub fn fit_pca(t: &FeatureTable, k: usize) -> Result<PcaModel> {
    let n = t.n_samples();
    let d = t.n_features();
    if n < 2 {
        return Err(Error::InvalidInput("PCA needs at least 2 samples".into()));
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(Error::InvalidConfig(format!("k = {k} outside 1..={}", (n - 1).min(d))));
    }
    let mean = t.column_means();
    let cov = covariance(t, &mean);
    if cov.trace() <= 0.0 {
        return Err(Error::InvalidInput("zero-variance table".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]).then(a.cmp(b)));
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let pivot = (0..d).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[j].max(0.0));
    }
    Ok(PcaModel { feature_names: t.names().to_vec(), mean, components, explained_variance })
}

/// Like [`fit_pca`] but clamps `k` to what the table supports, logging a
/// warning when it does.
pub fn fit_pca_clamped(t: &FeatureTable, k: usize) -> Result<PcaModel> {
    let limit = t.n_samples().saturating_sub(1).min(t.n_features());
    if k > limit {
        log::warn!("PCA k = {k} clamped to {limit} for a {}x{} table", t.n_samples(), t.n_features());
    }
    fit_pca(t, k.min(limit).max(1))
}

/// Projects rows onto the components: `(x - mean) · componentsᵀ`.
pub fn transform_pca(m: &PcaModel, t: &FeatureTable) -> Result<FeatureTable> {
    if t.n_features() != m.d() {
        return Err(Error::DimensionMismatch { expected: m.d(), actual: t.n_features() });
    }
    let data: Vec<f64> = t
        .rows()
        .flat_map(|row| {
            m.components
                .iter()
                .map(move |c| c.iter().zip(row).zip(&m.mean).map(|((ci, x), mu)| ci * (x - mu)).sum::<f64>())
        })
        .collect();
    let names = (1..=m.k()).map(|i| format!("pc{i}")).collect();
    FeatureTable::new(t.ids().to_vec(), names, data, t.labels().map(<[usize]>::to_vec))
}

/// Separate PCA per column group, outputs concatenated in group order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupedPca {
    pub groups: Vec<(String, Vec<usize>, PcaModel)>,
}

/// Groups columns by the name prefix before the first `separator`.
pub fn column_groups(t: &FeatureTable, separator: char) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (j, name) in t.names().iter().enumerate() {
        let prefix = name.split(separator).next().unwrap_or("").to_string();
        match groups.iter_mut().find(|(p, _)| *p == prefix) {
            Some((_, cols)) => cols.push(j),
            None => groups.push((prefix, vec![j])),
        }
    }
    groups
}

/// Fits one clamped PCA per column group (one per extractor, for instance).
pub fn fit_grouped_pca(t: &FeatureTable, groups: &[(String, Vec<usize>)], k: usize) -> Result<GroupedPca> {
    let groups = groups
        .iter()
        .map(|(name, cols)| Ok((name.clone(), cols.clone(), fit_pca_clamped(&t.select_columns(cols)?, k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupedPca { groups })
}

pub fn transform_grouped_pca(m: &GroupedPca, t: &FeatureTable) -> Result<FeatureTable> {
    let mut names = Vec::new();
    let mut parts = Vec::new();
    for (group, cols, model) in &m.groups {
        let p = transform_pca(model, &t.select_columns(cols)?)?;
        names.extend(p.names().iter().map(|c| format!("{group}_{c}")));
        parts.push(p);
    }
    let data = (0..t.n_samples()).flat_map(|i| parts.iter().flat_map(move |p| p.row(i).to_vec())).collect();
    FeatureTable::new(t.ids().to_vec(), names, data, t.labels().map(<[usize]>::to_vec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_varying_axis() {
        let t = FeatureTable::from_rows(&[vec![0.0, 3.0, 1.0], vec![2.0, 3.0, 1.0], vec![5.0, 3.0, 1.0]], None).unwrap();
        let m = fit_pca(&t, 1).unwrap();
        assert_eq!(m.components[0].iter().map(|v| v.round()).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        assert!((m.components[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_points() {
        let t = FeatureTable::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]], None).unwrap();
        let m = fit_pca(&t, 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.components[0][0] - r).abs() < 1e-12 && (m.components[0][1] - r).abs() < 1e-12);
        assert!((m.explained_variance[0] - 2.0).abs() < 1e-12);
        assert!(m.explained_variance[1].abs() < 1e-12);
        let s = transform_pca(&m, &t).unwrap();
        let sqrt2 = 2f64.sqrt();
        for (got, want) in [s.row(0)[0], s.row(1)[0], s.row(2)[0]].iter().zip([-sqrt2, 0.0, sqrt2]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn k_bounds_and_zero_variance() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..10).map(|j| ((i * j) % 7) as f64).collect()).collect();
        let t = FeatureTable::from_rows(&rows, None).unwrap();
        assert!(fit_pca(&t, 50).is_err());
        assert_eq!(fit_pca_clamped(&t, 50).unwrap().k(), 10);
        let flat = FeatureTable::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], None).unwrap();
        assert!(fit_pca(&flat, 1).is_err());
    }

    #[test]
    fn mean_maps_to_origin_and_identity_model() {
        let t = FeatureTable::from_rows(&[vec![1.0, 5.0], vec![3.0, 2.0], vec![-1.0, 0.0]], None).unwrap();
        let m = fit_pca(&t, 2).unwrap();
        let mean_row = FeatureTable::from_rows(std::slice::from_ref(&m.mean), None).unwrap();
        assert!(transform_pca(&m, &mean_row).unwrap().row(0).iter().all(|v| v.abs() < 1e-12));
        let id = PcaModel {
            feature_names: vec!["a".into(), "b".into()],
            mean: vec![0.0, 0.0],
            components: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            explained_variance: vec![1.0, 1.0],
        };
        assert_eq!(transform_pca(&id, &t).unwrap().data(), t.data());
    }

    #[test]
    fn grouped_by_prefix() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64, (i % 3) as f64]).collect();
        let t = FeatureTable::from_rows(&rows, None).unwrap();
        let t = FeatureTable::new(
            t.ids().to_vec(),
            vec!["pvt_a".into(), "pvt_b".into(), "cnn_a".into()],
            t.data().to_vec(),
            None,
        )
        .unwrap();
        let groups = column_groups(&t, '_');
        assert_eq!(groups, vec![("pvt".to_string(), vec![0, 1]), ("cnn".to_string(), vec![2])]);
        let g = fit_grouped_pca(&t, &groups, 50).unwrap();
        let out = transform_grouped_pca(&g, &t).unwrap();
        assert_eq!(out.names(), &["pvt_pc1", "pvt_pc2", "cnn_pc1"].map(String::from));
    }
}
