use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Majority vote among the `k` nearest training samples (Euclidean).
///
/// Neighbours are ordered by distance, then by training index. Vote ties go
/// to the class with the smaller summed neighbour distance, then to the lower
/// class code.
#[derive(Debug, Clone)]
pub struct KnnModel {
    train: Matrix,
    labels: Vec<usize>,
    n_classes: usize,
    k: usize,
}

pub fn knn_train(data: &LabeledDataset, k: usize) -> Result<KnnModel> {
    if data.n_samples() == 0 {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if k == 0 || k > data.n_samples() {
        return Err(Error::Parameter(format!(
            "k = {k} must lie in 1..={}",
            data.n_samples()
        )));
    }
    Ok(KnnModel {
        train: data.features().clone(),
        labels: data.labels().to_vec(),
        n_classes: data.n_classes(),
        k,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut dist: Vec<(f64, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(i, r)| {
                let d2: f64 = r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        dist.select_nth_unstable_by(self.k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut votes = vec![0usize; self.n_classes];
        let mut summed = vec![0.0f64; self.n_classes];
        for &(d2, i) in &dist[..self.k] {
            let class = self.labels[i];
            votes[class] += 1;
            summed[class] += d2.sqrt();
        }
        (0..self.n_classes)
            .filter(|&c| votes[c] > 0)
            .min_by(|&a, &b| {
                votes[b]
                    .cmp(&votes[a])
                    .then(summed[a].total_cmp(&summed[b]))
                    .then(a.cmp(&b))
            })
            .expect("k >= 1 neighbours")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(points: &[f64], labels: &[usize]) -> LabeledDataset {
        let rows: Vec<[f64; 1]> = points.iter().map(|&p| [p]).collect();
        LabeledDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels.to_vec(),
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    #[test]
    fn one_nn() {
        let m = knn_train(&dataset(&[0.0, 10.0], &[0, 1]), 1).unwrap();
        assert_eq!(m.predict(&[1.0]), 0);
        assert_eq!(m.predict(&[9.0]), 1);
    }

    #[test]
    fn three_nn_majority() {
        let m = knn_train(&dataset(&[0.0, 1.0, 2.0, 50.0], &[0, 0, 1, 1]), 3).unwrap();
        assert_eq!(m.predict(&[1.9]), 0);
    }

    #[test]
    fn vote_tie_goes_to_closer_class() {
        let m = knn_train(&dataset(&[0.0, 3.0], &[0, 1]), 2).unwrap();
        assert_eq!(m.predict(&[2.0]), 1);
        assert_eq!(m.predict(&[1.0]), 0);
        // Equal summed distance: lower class code.
        assert_eq!(m.predict(&[1.5]), 0);
    }

    #[test]
    fn parameter_errors() {
        let d = dataset(&[0.0, 1.0], &[0, 1]);
        assert!(knn_train(&d, 0).is_err());
        assert!(knn_train(&d, 3).is_err());
        let empty = LabeledDataset {
            features: Matrix::zeros(1, 1),
            labels: vec![],
            class_names: vec!["A".into()],
        };
        assert!(matches!(
            knn_train(&empty, 1),
            Err(Error::InsufficientData(_))
        ));
    }
}
