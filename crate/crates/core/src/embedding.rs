//! Face template vectors and the similarity used to compare them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Face-recognition template. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Embedding::new(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidEmbedding("empty vector".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding(format!(
                "entry {pos} is not finite"
            )));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Unit-length copy. Fails on a zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateEmbedding);
        }
        Ok(Self(self.0.iter().map(|v| v / n).collect()))
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Component-wise mean of the templates, L2-normalized.
pub fn mean_embedding<'a, I>(templates: I) -> Result<Embedding>
where
    I: IntoIterator<Item = &'a Embedding>,
{
    let mut iter = templates.into_iter();
    let first = iter.next().ok_or(Error::NoTemplates)?;
    let mut sum = first.0.clone();
    for t in iter {
        check_dim(sum.len(), t.dim())?;
        for (acc, v) in sum.iter_mut().zip(&t.0) {
            *acc += v;
        }
    }
    // The mean and the sum share a direction; normalizing either gives the same result.
    Embedding(sum).normalized()
}

/// Cosine similarity, in `[-1, 1]`.
pub fn similarity(u: &Embedding, v: &Embedding) -> Result<f64> {
    check_dim(u.dim(), v.dim())?;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| (a / nu) * (b / nv)).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn mean_of_single_is_normalized_input() {
        let u = e(&[3.0, 4.0]);
        let m = mean_embedding([&u]).unwrap();
        assert!((m.values()[0] - 0.6).abs() < 1e-12);
        assert!((m.values()[1] - 0.8).abs() < 1e-12);
        let m2 = mean_embedding([&u, &u]).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn mean_of_axes() {
        let m = mean_embedding([&e(&[1.0, 0.0]), &e(&[0.0, 1.0])]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m.values()[0] - r).abs() < 1e-12);
        assert!((m.values()[1] - r).abs() < 1e-12);
    }

    #[test]
    fn mean_errors() {
        assert!(matches!(
            mean_embedding(std::iter::empty()),
            Err(Error::NoTemplates)
        ));
        assert!(matches!(
            mean_embedding([&e(&[1.0, 0.0]), &e(&[1.0, 0.0, 0.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            mean_embedding([&e(&[1.0, 0.0]), &e(&[-1.0, 0.0])]),
            Err(Error::DegenerateEmbedding)
        ));
    }

    #[test]
    fn similarity_examples() {
        let u = e(&[1.0, 0.0]);
        let v = e(&[0.0, 1.0]);
        assert!((similarity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(similarity(&u, &v).unwrap(), 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let w = e(&[r, r]);
        assert!((similarity(&u, &w).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn similarity_rejects_zero_vector() {
        assert!(matches!(
            similarity(&e(&[0.0, 0.0]), &e(&[1.0, 0.0])),
            Err(Error::DegenerateEmbedding)
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Embedding::new(vec![1.0, f64::NAN]).is_err());
        assert!(Embedding::new(vec![]).is_err());
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..16).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0f64..10.0, d),
                prop::collection::vec(-10.0f64..10.0, d),
            )
        })
    }

    proptest! {
        #[test]
        fn similarity_bounded_and_scale_invariant((a, b) in vec_pair(), s in 0.01f64..100.0) {
            let u = e(&a);
            let v = e(&b);
            prop_assume!(u.norm() > 1e-6 && v.norm() > 1e-6);
            let sim = similarity(&u, &v).unwrap();
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&sim));
            let scaled = e(&a.iter().map(|x| x * s).collect::<Vec<_>>());
            let sim2 = similarity(&scaled, &v).unwrap();
            prop_assert!((sim - sim2).abs() < 1e-9);
        }

        #[test]
        fn mean_has_unit_norm(rows in prop::collection::vec(prop::collection::vec(0.1f64..10.0, 8), 1..10)) {
            let ts: Vec<Embedding> = rows.into_iter().map(|r| e(&r)).collect();
            let m = mean_embedding(&ts).unwrap();
            prop_assert!((m.norm() - 1.0).abs() < 1e-6);
        }
    }
}
