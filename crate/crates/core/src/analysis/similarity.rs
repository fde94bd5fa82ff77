use crate::error::{Error, Result};
use crate::network::Network;
use crate::numerics::{svd, DenseMatrix};
use crate::snapshot::Snapshot;

/// Singular values scaled to unit Euclidean norm.
fn profile(m: &DenseMatrix) -> Result<Vec<f64>> {
    let s = svd(m)?.singular_values;
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Undefined("zero weight matrix has no singular-value profile".into()));
    }
    Ok(s.into_iter().map(|v| v / norm).collect())
}

/// Cosine similarity of two singular-value profiles, zero-padded to a common length.
pub fn profile_similarity(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let (pa, pb) = (profile(a)?, profile(b)?);
    let dot: f64 = pa.iter().zip(&pb).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(0.0, 1.0))
}

/// Similarity of each adjacent pair of weight matrices.
pub fn adjacent_layer_similarity(weights: &[DenseMatrix]) -> Result<Vec<f64>> {
    if weights.len() < 2 {
        return Err(Error::InvalidArgument("adjacent similarity needs at least 2 layers".into()));
    }
    weights.windows(2).map(|w| profile_similarity(&w[0], &w[1])).collect()
}

pub fn network_weights(net: &Network) -> Vec<DenseMatrix> {
    net.blocks().iter().map(|b| b.weights.clone()).collect()
}

pub fn snapshot_weights(s: &Snapshot) -> Result<Vec<DenseMatrix>> {
    s.layers
        .iter()
        .map(|l| DenseMatrix::new(l.weights_shape[0], l.weights_shape[1], l.weights.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_rank_one() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        let s = adjacent_layer_similarity(&[m.clone(), m]).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);

        let rank1 = DenseMatrix::from_rows(&vec![vec![1.0, 1.0, 1.0]; 3]).unwrap();
        let iso = DenseMatrix::identity(3);
        assert!(profile_similarity(&rank1, &iso).unwrap() < 0.8);
    }

    #[test]
    fn degenerate_cases() {
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            adjacent_layer_similarity(&[z, DenseMatrix::identity(2)]),
            Err(Error::Undefined(_))
        ));
        assert!(adjacent_layer_similarity(&[DenseMatrix::identity(2)]).is_err());
    }
}
