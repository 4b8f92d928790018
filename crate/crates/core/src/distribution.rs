//! Exact joint output distributions over party outcome alphabets.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Symbol used for the failure outcome in files and reports.
pub const FAIL_SYMBOL: &str = "∅";

/// A single party outcome: a conclusive label or the failure symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Outcome {
    Label(String),
    Fail,
}

impl Outcome {
    pub fn label(s: impl Into<String>) -> Self {
        Outcome::Label(s.into())
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail)
    }

    pub fn parse(s: &str) -> Self {
        if s == FAIL_SYMBOL {
            Outcome::Fail
        } else {
            Outcome::Label(s.to_string())
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Label(s) => f.write_str(s),
            Outcome::Fail => f.write_str(FAIL_SYMBOL),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        Ok(Outcome::parse(&s))
    }
}

/// Labels `"0", "1", ...`.
pub fn numeric_alphabet(n: usize) -> Vec<Outcome> {
    (0..n).map(|k| Outcome::Label(format!("{k}"))).collect()
}

pub const NEGATIVE_TOL: f64 = 1e-12;
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Dense probability table; the last party varies fastest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeDistribution {
    alphabets: Vec<Vec<Outcome>>,
    probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(alphabets: Vec<Vec<Outcome>>, probabilities: Vec<f64>) -> Result<Self> {
        let size: usize = alphabets.iter().map(Vec::len).product();
        if alphabets.is_empty() || size != probabilities.len() {
            return Err(Error::InvalidDistribution(format!(
                "table has {} entries, alphabets require {size}",
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= -NEGATIVE_TOL)) {
            return Err(Error::InvalidDistribution(format!("entry {p} is negative")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {total}")));
        }
        Ok(Self { alphabets, probabilities })
    }

    /// Product of independent per-party distributions.
    pub fn product(alphabets: Vec<Vec<Outcome>>, marginals: &[Vec<f64>]) -> Result<Self> {
        let shape: Vec<usize> = alphabets.iter().map(Vec::len).collect();
        let mut probs = Vec::with_capacity(shape.iter().product());
        for_each_tuple(&shape, |t| {
            probs.push(t.iter().enumerate().map(|(j, &a)| marginals[j][a]).product());
        });
        Self::new(alphabets, probs)
    }

    pub fn n_parties(&self) -> usize {
        self.alphabets.len()
    }

    pub fn alphabets(&self) -> &[Vec<Outcome>] {
        &self.alphabets
    }

    pub fn alphabet(&self, party: usize) -> &[Outcome] {
        &self.alphabets[party]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn shape(&self) -> Vec<usize> {
        self.alphabets.iter().map(Vec::len).collect()
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        tuple
            .iter()
            .zip(&self.alphabets)
            .fold(0, |acc, (&a, alpha)| acc * alpha.len() + a)
    }

    pub fn prob(&self, tuple: &[usize]) -> f64 {
        self.probabilities[self.index_of(tuple)]
    }

    /// Probability of a tuple given by label strings; `None` for unknown labels.
    pub fn prob_of(&self, labels: &[&str]) -> Option<f64> {
        if labels.len() != self.n_parties() {
            return None;
        }
        let mut t = Vec::with_capacity(labels.len());
        for (j, l) in labels.iter().enumerate() {
            let o = Outcome::parse(l);
            t.push(self.alphabets[j].iter().position(|x| *x == o)?);
        }
        Some(self.prob(&t))
    }

    /// Calls `f(tuple, probability)` for every entry in table order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut k = 0;
        for_each_tuple(&self.shape(), |t| {
            f(t, self.probabilities[k]);
            k += 1;
        });
    }

    /// Entries with tiny negative rounding noise set to zero.
    pub fn clamped(&self) -> Vec<f64> {
        self.probabilities.iter().map(|p| p.max(0.0)).collect()
    }

    fn fail_index(&self, party: usize) -> Option<usize> {
        self.alphabets[party].iter().position(Outcome::is_fail)
    }

    /// Sums out every party not in `parties`; the kept parties stay in the given order.
    pub fn marginal(&self, parties: &[usize]) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::InvalidDistribution("empty party set".into()));
        }
        for (k, &p) in parties.iter().enumerate() {
            if p >= self.n_parties() {
                return Err(Error::PartyOutOfRange { party: p, n_parties: self.n_parties() });
            }
            if parties[..k].contains(&p) {
                return Err(Error::InvalidDistribution(format!("party {p} listed twice")));
            }
        }
        let alphabets: Vec<Vec<Outcome>> =
            parties.iter().map(|&p| self.alphabets[p].clone()).collect();
        let sub_shape: Vec<usize> = alphabets.iter().map(Vec::len).collect();
        let mut out = alloc::vec![0.0; sub_shape.iter().product()];
        let mut sub = alloc::vec![0usize; parties.len()];
        self.for_each(|t, p| {
            for (k, &party) in parties.iter().enumerate() {
                sub[k] = t[party];
            }
            let idx = sub.iter().zip(&sub_shape).fold(0, |acc, (&a, &n)| acc * n + a);
            out[idx] += p;
        });
        Ok(Self { alphabets, probabilities: out })
    }

    /// `P[a_j ≠ ∅]`; parties without a failure label are always conclusive.
    pub fn conclusive_probability(&self, party: usize) -> f64 {
        self.conclusive_probability_of(&[party])
    }

    /// Probability that every listed party is conclusive.
    pub fn conclusive_probability_of(&self, parties: &[usize]) -> f64 {
        let fails: Vec<Option<usize>> = parties.iter().map(|&p| self.fail_index(p)).collect();
        let mut total = 0.0;
        self.for_each(|t, p| {
            if parties.iter().zip(&fails).all(|(&j, f)| Some(t[j]) != *f) {
                total += p;
            }
        });
        total
    }

    pub fn all_conclusive_probability(&self) -> f64 {
        let all: Vec<usize> = (0..self.n_parties()).collect();
        self.conclusive_probability_of(&all)
    }

    /// Restriction to all-conclusive tuples, renormalized, plus its mass.
    pub fn conditional_on_conclusive(&self) -> Result<(Self, f64)> {
        let keep: Vec<Vec<usize>> = (0..self.n_parties())
            .map(|j| {
                (0..self.alphabets[j].len())
                    .filter(|&a| !self.alphabets[j][a].is_fail())
                    .collect()
            })
            .collect();
        let alphabets: Vec<Vec<Outcome>> = keep
            .iter()
            .enumerate()
            .map(|(j, k)| k.iter().map(|&a| self.alphabets[j][a].clone()).collect())
            .collect();
        let shape: Vec<usize> = keep.iter().map(Vec::len).collect();
        if shape.iter().any(|&n| n == 0) {
            return Err(Error::ZeroSuccess);
        }
        let mut probs = Vec::with_capacity(shape.iter().product());
        let mut full = alloc::vec![0usize; self.n_parties()];
        for_each_tuple(&shape, |t| {
            for (j, &a) in t.iter().enumerate() {
                full[j] = keep[j][a];
            }
            probs.push(self.prob(&full));
        });
        let success: f64 = probs.iter().sum();
        if !(success > 0.0) {
            return Err(Error::ZeroSuccess);
        }
        probs.iter_mut().for_each(|p| *p /= success);
        Ok((Self { alphabets, probabilities: probs }, success))
    }

    /// Reorders the party axes: party `k` of the result is party `order[k]` here.
    pub fn permute_parties(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_parties() {
            return Err(Error::InvalidDistribution("permutation length".into()));
        }
        self.marginal(order)
    }

    /// Largest absolute entry-wise difference; `None` when alphabets differ.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f64> {
        (self.alphabets == other.alphabets).then(|| {
            self.probabilities
                .iter()
                .zip(&other.probabilities)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// Odometer over all index tuples of `shape`, last position fastest.
pub fn for_each_tuple(shape: &[usize], mut f: impl FnMut(&[usize])) {
    if shape.iter().any(|&n| n == 0) {
        return;
    }
    let mut t = alloc::vec![0usize; shape.len()];
    loop {
        f(&t);
        let mut k = shape.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            t[k] += 1;
            if t[k] < shape[k] {
                break;
            }
            t[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn phi_plus_computational() -> OutcomeDistribution {
        OutcomeDistribution::new(
            vec![numeric_alphabet(2), numeric_alphabet(2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn marginal_of_product_is_factor() {
        let d = OutcomeDistribution::product(
            vec![numeric_alphabet(2), numeric_alphabet(3)],
            &[vec![0.3, 0.7], vec![0.2, 0.5, 0.3]],
        )
        .unwrap();
        let m = d.marginal(&[0]).unwrap();
        assert!((m.probabilities()[0] - 0.3).abs() < 1e-15);
        assert!((m.probabilities()[1] - 0.7).abs() < 1e-15);
        let m = d.marginal(&[1]).unwrap();
        assert!((m.probabilities()[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn marginal_of_correlated_pair_is_uniform() {
        let m = phi_plus_computational().marginal(&[0]).unwrap();
        assert_eq!(m.probabilities(), &[0.5, 0.5]);
    }

    #[test]
    fn marginal_rejects_bad_sets() {
        let d = phi_plus_computational();
        assert!(d.marginal(&[]).is_err());
        assert!(d.marginal(&[2]).is_err());
        assert!(d.marginal(&[0, 0]).is_err());
    }

    #[test]
    fn conditional_without_failures_is_identity() {
        let d = phi_plus_computational();
        let (c, s) = d.conditional_on_conclusive().unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(c, d);
    }

    #[test]
    fn conditional_drops_failure_mass() {
        let alpha = vec![Outcome::label("0"), Outcome::Fail];
        let d = OutcomeDistribution::new(vec![alpha.clone(), alpha], vec![0.5, 0.0, 0.0, 0.5])
            .unwrap();
        let (c, s) = d.conditional_on_conclusive().unwrap();
        assert_eq!(s, 0.5);
        assert_eq!(c.probabilities(), &[1.0]);
        assert_eq!(d.conclusive_probability(0), 0.5);
    }

    #[test]
    fn conditional_with_zero_success_fails() {
        let alpha = vec![Outcome::label("0"), Outcome::Fail];
        let d = OutcomeDistribution::new(vec![alpha.clone(), alpha], vec![0.0, 0.0, 0.0, 1.0])
            .unwrap();
        assert_eq!(d.conditional_on_conclusive(), Err(Error::ZeroSuccess));
    }

    #[test]
    fn rejects_unnormalized_tables() {
        assert!(OutcomeDistribution::new(vec![numeric_alphabet(2)], vec![0.5, 0.4]).is_err());
        assert!(OutcomeDistribution::new(vec![numeric_alphabet(2)], vec![1.1, -0.1]).is_err());
    }

    #[test]
    fn label_lookup() {
        let d = phi_plus_computational();
        assert_eq!(d.prob_of(&["1", "1"]), Some(0.5));
        assert_eq!(d.prob_of(&["1", "x"]), None);
    }
}
