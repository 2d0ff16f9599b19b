//! Linear readout `y = W_out · X_G + b` trained by ridge regression.
//!
//! Features are centred before solving, so the bias is never shrunk. Classes
//! map to targets -1 (class 0) and +1 (class 1), and an exact zero score
//! predicts class 0.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::reservoir::GraphEmbedding;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearReadout {
    weights: DVector<f64>,
    bias: f64,
    ridge_lambda: f64,
}

/// Encodes class labels as ±1 regression targets.
pub fn encode_targets(classes: &[u8]) -> DVector<f64> {
    DVector::from_iterator(
        classes.len(),
        classes.iter().map(|&c| if c == 0 { -1.0 } else { 1.0 }),
    )
}

/// Ridge regression of `targets` on the rows of `embeddings`.
///
/// With `λ > 0` this solves the centred normal equations by Cholesky, in the
/// primal `(XᵀX + λI) w = Xᵀy` when there are more samples than features and
/// in the equivalent dual `w = Xᵀ(XXᵀ + λI)⁻¹y` otherwise. With `λ = 0` the
/// minimum-norm least-squares solution is taken from an SVD.
pub fn fit_ridge(
    embeddings: &DMatrix<f64>,
    targets: &DVector<f64>,
    lambda: f64,
) -> Result<LinearReadout> {
    let (n, dim) = embeddings.shape();
    if n == 0 {
        return Err(Error::Data("ridge fit needs at least one sample".into()));
    }
    if targets.len() != n {
        return Err(Error::Shape {
            context: "ridge targets",
            expected: (n, 1),
            actual: (targets.len(), 1),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "ridge lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if embeddings.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("embeddings"));
    }
    if targets.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }

    let feature_mean = embeddings.row_mean();
    let target_mean = targets.mean();
    let mut centered = embeddings.clone();
    for mut row in centered.row_iter_mut() {
        row -= &feature_mean;
    }
    let yc = targets.add_scalar(-target_mean);

    let weights = if lambda == 0.0 {
        let svd = centered.clone().svd(true, true);
        let eps = f64::EPSILON * (n.max(dim) as f64) * svd.singular_values.max();
        svd.solve(&yc, eps)
            .map_err(|e| Error::Data(format!("least-squares solve failed: {e}")))?
            .column(0)
            .into_owned()
    } else if n > dim {
        let mut gram = centered.tr_mul(&centered);
        for i in 0..dim {
            gram[(i, i)] += lambda;
        }
        let rhs = centered.tr_mul(&yc);
        gram.cholesky()
            .ok_or_else(|| Error::Data("ridge system is not positive definite".into()))?
            .solve(&rhs)
    } else {
        let mut gram = &centered * centered.transpose();
        for i in 0..n {
            gram[(i, i)] += lambda;
        }
        let dual = gram
            .cholesky()
            .ok_or_else(|| Error::Data("ridge system is not positive definite".into()))?
            .solve(&yc);
        centered.tr_mul(&dual)
    };
    let bias = target_mean - feature_mean.transpose().dot(&weights);
    let readout = LinearReadout {
        weights,
        bias,
        ridge_lambda: lambda,
    };
    if readout.weights.iter().any(|x| !x.is_finite()) || !readout.bias.is_finite() {
        return Err(Error::NonFinite("ridge solution"));
    }
    Ok(readout)
}

/// Ridge fit on class labels encoded as ±1.
pub fn fit_classifier(
    embeddings: &DMatrix<f64>,
    classes: &[u8],
    lambda: f64,
) -> Result<LinearReadout> {
    fit_ridge(embeddings, &encode_targets(classes), lambda)
}

impl LinearReadout {
    pub fn new(weights: DVector<f64>, bias: f64, ridge_lambda: f64) -> Self {
        Self {
            weights,
            bias,
            ridge_lambda,
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(Error::Shape {
                context: "readout input",
                expected: (self.weights.len(), 1),
                actual: (features.len(), 1),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(features)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias)
    }

    pub fn predict_features(&self, features: &[f64]) -> Result<u8> {
        Ok(u8::from(self.score(features)? > 0.0))
    }

    pub fn predict(&self, e: &GraphEmbedding) -> Result<u8> {
        self.predict_features(e.as_slice())
    }

    /// Fraction of rows of `embeddings` whose prediction equals `classes`.
    pub fn accuracy(&self, embeddings: &DMatrix<f64>, classes: &[u8]) -> Result<f64> {
        if embeddings.nrows() != classes.len() {
            return Err(Error::Shape {
                context: "accuracy inputs",
                expected: (classes.len(), self.dim()),
                actual: embeddings.shape(),
            });
        }
        if classes.is_empty() {
            return Err(Error::Data("accuracy of an empty set".into()));
        }
        let mut row = vec![0.0; embeddings.ncols()];
        let mut correct = 0usize;
        for (i, &c) in classes.iter().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = embeddings[(i, j)];
            }
            if self.predict_features(&row)? == c {
                correct += 1;
            }
        }
        Ok(correct as f64 / classes.len() as f64)
    }

    /// One CSV row `w_0,...,w_{D-1},bias` under header `w_0,...,bias`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for j in 0..self.dim() {
            let _ = write!(s, "w_{j},");
        }
        s.push_str("bias\n");
        for w in self.weights.iter() {
            let _ = write!(s, "{w},");
        }
        let _ = writeln!(s, "{}", self.bias);
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty readout file".into()))?;
        let row = lines
            .next()
            .ok_or_else(|| Error::Data("readout file has no data row".into()))?;
        let values = row
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Data(format!("readout value: {e}")))?;
        if values.len() != header.split(',').count() || values.is_empty() {
            return Err(Error::Data("readout row width differs from header".into()));
        }
        let (bias, w) = values.split_last().expect("nonempty");
        Ok(Self::new(DVector::from_column_slice(w), *bias, f64::NAN))
    }
}

/// Stacks embeddings as rows of an `N × D` matrix.
pub fn embedding_matrix(embeddings: &[GraphEmbedding]) -> Result<DMatrix<f64>> {
    let dim = embeddings.first().map_or(0, GraphEmbedding::len);
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::Data("embeddings of differing dimension".into()));
    }
    Ok(DMatrix::from_fn(embeddings.len(), dim, |i, j| {
        embeddings[i].as_slice()[j]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_targets_recovered() {
        let x =
            DMatrix::from_row_slice(5, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.0, -2.0, 2.0, 2.0]);
        let y = DVector::from_iterator(5, x.row_iter().map(|r| 1.5 * r[0] - 0.5 * r[1] + 0.25));
        let r = fit_ridge(&x, &y, 0.0).unwrap();
        for (i, row) in x.row_iter().enumerate() {
            let row: Vec<f64> = row.iter().copied().collect();
            assert!((r.score(&row).unwrap() - y[i]).abs() < 1e-8);
        }
        assert!((r.weights()[0] - 1.5).abs() < 1e-8);
        assert!((r.bias() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn huge_lambda_shrinks_to_mean() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 3.0]);
        let y = DVector::from_column_slice(&[1.0, -1.0, 1.0, 1.0]);
        let r = fit_ridge(&x, &y, 1e9).unwrap();
        assert!(r.weights().amax() < 1e-8);
        assert!((r.bias() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn zero_readout_ties_to_class_zero() {
        let r = LinearReadout::new(DVector::zeros(3), 0.0, 0.0);
        assert_eq!(
            r.predict(&GraphEmbedding::new(vec![1.0, 2.0, 3.0]))
                .unwrap(),
            0
        );
    }

    #[test]
    fn aligned_weights_predict_one_and_negation_flips() {
        let r = LinearReadout::new(DVector::from_column_slice(&[1.0, 2.0]), 0.1, 0.0);
        let e = GraphEmbedding::new(vec![3.0, 4.0]);
        assert_eq!(r.predict(&e).unwrap(), 1);
        let neg = LinearReadout::new(-r.weights().clone(), -r.bias(), 0.0);
        assert_eq!(neg.predict(&e).unwrap(), 0);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let r = LinearReadout::new(DVector::zeros(3), 0.0, 0.0);
        assert!(r.predict(&GraphEmbedding::new(vec![1.0])).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let x = DMatrix::from_row_slice(4, 1, &[-2.0, -1.0, 1.0, 2.0]);
        let r = LinearReadout::new(DVector::from_column_slice(&[1.0]), 0.0, 0.0);
        assert_eq!(r.accuracy(&x, &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(r.accuracy(&x, &[0, 0, 1, 0]).unwrap(), 0.75);
        let constant = LinearReadout::new(DVector::zeros(1), 1.0, 0.0);
        assert_eq!(constant.accuracy(&x, &[0, 1, 0, 1]).unwrap(), 0.5);
        assert!(r.accuracy(&DMatrix::zeros(0, 1), &[]).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(matches!(
            fit_ridge(&x, &DVector::zeros(2), 1.0),
            Err(Error::NonFinite(_))
        ));
        assert!(fit_ridge(&DMatrix::zeros(0, 2), &DVector::zeros(0), 1.0).is_err());
        assert!(fit_ridge(&DMatrix::zeros(2, 2), &DVector::zeros(2), -1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let r = LinearReadout::new(
            DVector::from_column_slice(&[0.1, -2.5e-7, 3.0]),
            -0.75,
            1e-3,
        );
        let back = LinearReadout::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back.weights(), r.weights());
        assert_eq!(back.bias(), r.bias());
    }
}
