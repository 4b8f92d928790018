//! Entropies in bits.

/// `−p log₂ p − (1−p) log₂(1−p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    shannon(&[p, 1.0 - p])
}

/// Shannon entropy of a probability vector; zero and negative entries are skipped.
pub fn shannon(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * libm::log2(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((shannon(&[0.25; 4]) - 2.0).abs() < 1e-15);
    }
}
