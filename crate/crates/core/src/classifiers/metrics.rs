use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts indexed `[test label][actual label]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Per actual class, the percentage assigned to each test label.
    pub fn column_percentages(&self) -> Vec<Vec<f64>> {
        let n = self.counts.len();
        let col_totals: Vec<usize> = (0..n)
            .map(|a| (0..n).map(|t| self.counts[t][a]).sum())
            .collect();
        (0..n)
            .map(|t| {
                (0..n)
                    .map(|a| {
                        if col_totals[a] == 0 {
                            0.0
                        } else {
                            100.0 * self.counts[t][a] as f64 / col_totals[a] as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Metrics of one evaluation run, in percent. Sensitivity and specificity
/// are reported for two-class problems only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

pub fn evaluate(
    predictions: &[usize],
    actuals: &[usize],
    class_names: &[String],
    positive_class: usize,
) -> Result<(RunMetrics, ConfusionMatrix)> {
    if predictions.len() != actuals.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} samples",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InsufficientData("nothing to evaluate".into()));
    }
    let n = class_names.len();
    if let Some(&bad) = predictions.iter().chain(actuals).find(|&&c| c >= n) {
        return Err(Error::Parameter(format!("class code {bad} out of range")));
    }
    let mut counts = vec![vec![0usize; n]; n];
    for (&p, &a) in predictions.iter().zip(actuals) {
        counts[p][a] += 1;
    }
    let confusion = ConfusionMatrix {
        class_names: class_names.to_vec(),
        counts,
    };
    let accuracy = 100.0 * confusion.correct() as f64 / confusion.total() as f64;
    let (sensitivity, specificity) = if n == 2 {
        let pos = positive_class;
        let neg = 1 - pos.min(1);
        let c = &confusion.counts;
        let (tp, fn_, tn, fp) = (c[pos][pos], c[neg][pos], c[neg][neg], c[pos][neg]);
        (ratio(tp, tp + fn_), ratio(tn, tn + fp))
    } else {
        (None, None)
    };
    Ok((
        RunMetrics {
            accuracy,
            sensitivity,
            specificity,
        },
        confusion,
    ))
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Aggregate over repeated runs. `std_accuracy` uses the `n − 1` divisor;
/// `mse_accuracy` is the mean squared deviation about the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub runs: Vec<RunMetrics>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mse_accuracy: f64,
    pub mean_sensitivity: Option<f64>,
    pub mean_specificity: Option<f64>,
}

impl MetricsSummary {
    pub fn from_runs(runs: Vec<RunMetrics>) -> Self {
        let n = runs.len() as f64;
        let mean_accuracy = if runs.is_empty() {
            0.0
        } else {
            runs.iter().map(|r| r.accuracy).sum::<f64>() / n
        };
        let ss: f64 = runs
            .iter()
            .map(|r| (r.accuracy - mean_accuracy).powi(2))
            .sum();
        let std_accuracy = if runs.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        let mse_accuracy = if runs.is_empty() { 0.0 } else { ss / n };
        let mean_of = |get: fn(&RunMetrics) -> Option<f64>| {
            let vals: Option<Vec<f64>> = runs.iter().map(get).collect();
            vals.filter(|v| !v.is_empty())
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        Self {
            mean_sensitivity: mean_of(|r| r.sensitivity),
            mean_specificity: mean_of(|r| r.specificity),
            runs,
            mean_accuracy,
            std_accuracy,
            mse_accuracy,
        }
    }

    /// `"91.75 ± 4.32%"`.
    pub fn accuracy_cell(&self) -> String {
        format!("{:.2} ± {:.2}%", self.mean_accuracy, self.std_accuracy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        ["HC", "FES", "CHR"][..n].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 1, 0, 1];
        let (m, c) = evaluate(&y, &y, &names(2), 0).unwrap();
        assert_eq!(m.accuracy, 100.0);
        assert_eq!(m.sensitivity, Some(100.0));
        assert_eq!(m.specificity, Some(100.0));
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn sensitivity_and_specificity_formulas() {
        // TP=9, FN=1, TN=8, FP=2 with class 0 positive.
        let mut pred = vec![];
        let mut actual = vec![];
        pred.extend([0; 9]);
        actual.extend([0; 9]);
        pred.push(1);
        actual.push(0);
        pred.extend([1; 8]);
        actual.extend([1; 8]);
        pred.extend([0; 2]);
        actual.extend([1; 2]);
        let (m, c) = evaluate(&pred, &actual, &names(2), 0).unwrap();
        assert!((m.sensitivity.unwrap() - 90.0).abs() < 1e-12);
        assert!((m.specificity.unwrap() - 80.0).abs() < 1e-12);
        assert!((m.accuracy - 85.0).abs() < 1e-12);
        // Columns are actual labels.
        assert_eq!(c.counts, vec![vec![9, 2], vec![1, 8]]);
    }

    #[test]
    fn three_class_has_no_sensitivity() {
        let (m, c) = evaluate(&[0, 1, 2, 2], &[0, 1, 1, 2], &names(3), 0).unwrap();
        assert_eq!(m.sensitivity, None);
        assert!((m.accuracy - 75.0).abs() < 1e-12);
        let pct = c.column_percentages();
        assert_eq!(pct[1][1], 50.0);
        assert_eq!(pct[2][1], 50.0);
        // Column sums equal per-class test counts.
        for a in 0..3 {
            let col: usize = (0..3).map(|t| c.counts[t][a]).sum();
            assert_eq!(col, [1, 2, 1][a]);
        }
        assert_eq!(m.accuracy, 100.0 * c.correct() as f64 / c.total() as f64);
    }

    #[test]
    fn evaluate_errors() {
        assert!(evaluate(&[0], &[0, 1], &names(2), 0).is_err());
        assert!(evaluate(&[], &[], &names(2), 0).is_err());
        assert!(evaluate(&[3], &[0], &names(2), 0).is_err());
    }

    #[test]
    fn summary_statistics() {
        let runs = [90.0, 95.0, 100.0]
            .iter()
            .map(|&a| RunMetrics {
                accuracy: a,
                sensitivity: Some(a),
                specificity: Some(100.0),
            })
            .collect();
        let s = MetricsSummary::from_runs(runs);
        assert!((s.mean_accuracy - 95.0).abs() < 1e-12);
        assert!((s.std_accuracy - 5.0).abs() < 1e-12);
        assert!((s.mse_accuracy - 50.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.mean_specificity, Some(100.0));
        assert_eq!(s.accuracy_cell(), "95.00 ± 5.00%");
    }

    #[test]
    fn table_row_fixture() {
        // Two-class SVM row of the published comparison table.
        let json = r#"{"accuracy":97.5,"sensitivity":98.5,"specificity":96.5}"#;
        let m: RunMetrics = serde_json::from_str(json).unwrap();
        let row = format!(
            "SVM\t{:.2}%\t{:.2}%\t{:.2}%",
            m.accuracy,
            m.sensitivity.unwrap(),
            m.specificity.unwrap()
        );
        assert_eq!(row, "SVM\t97.50%\t98.50%\t96.50%");
    }
}
