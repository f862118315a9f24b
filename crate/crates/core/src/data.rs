use std::fmt;

use nalgebra::DMatrix;

/// Label value marking a sample without ground truth.
pub const UNLABELED: i32 = -1;

/// A d×n non-negative observation matrix, one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub values: DMatrix<f64>,
    /// Per-sample class in `[0, classes)` or [`UNLABELED`].
    pub labels: Option<Vec<i32>>,
    pub classes: usize,
}

impl DataMatrix {
    /// Builds a matrix and checks every invariant.
    pub fn new(
        values: DMatrix<f64>,
        labels: Option<Vec<i32>>,
        classes: usize,
    ) -> Result<Self, ValidationReport> {
        let data = DataMatrix {
            values,
            labels,
            classes,
        };
        data.validate()?;
        Ok(data)
    }

    /// Labeled data with `classes` inferred as `max(label) + 1`.
    pub fn labeled(values: DMatrix<f64>, labels: Vec<i32>) -> Result<Self, ValidationReport> {
        let classes = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
        Self::new(values, Some(labels), classes)
    }

    pub fn features(&self) -> usize {
        self.values.nrows()
    }

    pub fn samples(&self) -> usize {
        self.values.ncols()
    }

    /// Ground-truth labels as class indices, `None` for unlabeled samples.
    pub fn class_of(&self, sample: usize) -> Option<usize> {
        self.labels
            .as_ref()
            .and_then(|l| usize::try_from(l[sample]).ok())
    }

    /// Checks all invariants and reports every violation found.
    pub fn validate(&self) -> Result<(), ValidationReport> {
        let mut violations = Vec::new();
        let (d, n) = self.values.shape();
        if d < 1 {
            violations.push(Violation::TooFewFeatures);
        }
        if n < 2 {
            violations.push(Violation::TooFewSamples { samples: n });
        }
        for col in 0..n {
            for row in 0..d {
                let value = self.values[(row, col)];
                if !value.is_finite() {
                    violations.push(Violation::NonFinite { row, col });
                } else if value < 0.0 {
                    violations.push(Violation::NegativeEntry { row, col, value });
                }
            }
        }
        if let Some(labels) = &self.labels {
            if self.classes < 2 {
                violations.push(Violation::TooFewClasses {
                    classes: self.classes,
                });
            }
            if labels.len() != n {
                violations.push(Violation::LabelCount {
                    expected: n,
                    found: labels.len(),
                });
            }
            for (sample, &label) in labels.iter().enumerate() {
                let in_range = label >= 0 && (label as usize) < self.classes;
                if label != UNLABELED && !in_range {
                    violations.push(Violation::LabelOutOfRange {
                        sample,
                        label,
                        classes: self.classes,
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ValidationReport { violations })
        }
    }
}

/// A single broken invariant of a [`DataMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewFeatures,
    TooFewSamples { samples: usize },
    TooFewClasses { classes: usize },
    NegativeEntry { row: usize, col: usize, value: f64 },
    NonFinite { row: usize, col: usize },
    LabelCount { expected: usize, found: usize },
    LabelOutOfRange { sample: usize, label: i32, classes: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewFeatures => write!(f, "matrix has no feature rows"),
            Violation::TooFewSamples { samples } => {
                write!(f, "need at least 2 samples, found {samples}")
            }
            Violation::TooFewClasses { classes } => {
                write!(f, "labeled data needs at least 2 classes, found {classes}")
            }
            Violation::NegativeEntry { row, col, value } => {
                write!(f, "negative entry {value} at ({row}, {col})")
            }
            Violation::NonFinite { row, col } => write!(f, "non-finite entry at ({row}, {col})"),
            Violation::LabelCount { expected, found } => {
                write!(f, "expected {expected} labels, found {found}")
            }
            Violation::LabelOutOfRange {
                sample,
                label,
                classes,
            } => write!(
                f,
                "label out of range: sample {sample} has label {label}, classes = {classes}"
            ),
        }
    }
}

/// Every invariant violation found by [`DataMatrix::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zeros_without_labels_are_valid() {
        let data = DataMatrix {
            values: DMatrix::zeros(3, 3),
            labels: None,
            classes: 0,
        };
        assert!(data.validate().is_ok());
    }

    #[test]
    fn negative_entry_is_located() {
        let mut values = DMatrix::zeros(3, 3);
        values[(1, 2)] = -1.0;
        let err = DataMatrix::new(values, None, 0).unwrap_err();
        assert_eq!(
            err.violations,
            vec![Violation::NegativeEntry {
                row: 1,
                col: 2,
                value: -1.0
            }]
        );
        assert!(err.to_string().contains("(1, 2)"));
    }

    #[test]
    fn label_equal_to_class_count_is_rejected() {
        let err = DataMatrix::new(DMatrix::zeros(2, 3), Some(vec![0, 1, 2]), 2).unwrap_err();
        assert!(err.to_string().contains("label out of range"));
    }

    #[test]
    fn reports_every_violation() {
        let mut values = DMatrix::zeros(2, 2);
        values[(0, 0)] = f64::NAN;
        values[(1, 1)] = -3.0;
        let err = DataMatrix::new(values, Some(vec![5, UNLABELED]), 2).unwrap_err();
        assert_eq!(err.violations.len(), 3);
    }

    proptest! {
        #[test]
        fn validate_matches_invariants(
            entries in proptest::collection::vec(
                prop_oneof![4 => 0.0..10.0f64, 1 => -5.0..-0.1f64, 1 => Just(f64::NAN)], 6),
            labels in proptest::collection::vec(-2i32..4, 3),
        ) {
            let values = DMatrix::from_vec(2, 3, entries.clone());
            let data = DataMatrix { values, labels: Some(labels.clone()), classes: 3 };
            let expect_ok = entries.iter().all(|v| v.is_finite() && *v >= 0.0)
                && labels.iter().all(|&l| l == UNLABELED || (0..3).contains(&l));
            prop_assert_eq!(data.validate().is_ok(), expect_ok);
        }
    }
}
