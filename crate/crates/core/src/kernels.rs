//! Distance measures and kernels used to compare sensor vectors.
//!
//! Every function takes two equal-length real vectors. Callers convert ADC
//! counts to normalized reals before they reach this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which comparison a regressor uses for its similarity vector and
/// covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Minkowski {
        #[serde(default = "default_degree")]
        m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Rbf {
        sigma: f64,
        /// Use the squared Euclidean norm in the exponent (textbook Gaussian)
        /// instead of the plain norm.
        #[serde(default)]
        squared: bool,
    },
    Cosine,
    Manhattan,
    Canberra,
}

fn default_degree() -> f64 {
    2.0
}

impl Default for MeasureSpec {
    fn default() -> Self {
        MeasureSpec::euclidean()
    }
}

impl MeasureSpec {
    pub fn euclidean() -> Self {
        MeasureSpec::Minkowski {
            m: 2.0,
            weights: None,
        }
    }

    pub fn rbf(sigma: f64) -> Self {
        MeasureSpec::Rbf {
            sigma,
            squared: false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeasureSpec::Minkowski { .. } => "minkowski",
            MeasureSpec::Rbf { .. } => "rbf",
            MeasureSpec::Cosine => "cosine",
            MeasureSpec::Manhattan => "manhattan",
            MeasureSpec::Canberra => "canberra",
        }
    }

    /// Checks parameter ranges; `channels` is the vector length the measure
    /// will be applied to.
    pub fn validate(&self, channels: usize) -> Result<()> {
        match self {
            MeasureSpec::Minkowski { m, weights } => {
                if !(*m >= 1.0) || !m.is_finite() {
                    return Err(Error::arg(format!("minkowski degree {m} must be >= 1")));
                }
                if let Some(w) = weights {
                    Error::check_dim(channels, w.len())?;
                    if w.iter().any(|&wi| !(wi >= 0.0) || !wi.is_finite()) {
                        return Err(Error::arg("minkowski weights must be finite and >= 0"));
                    }
                }
                Ok(())
            }
            MeasureSpec::Rbf { sigma, .. } => {
                if !(*sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::arg(format!("rbf sigma {sigma} must be > 0")));
                }
                Ok(())
            }
            MeasureSpec::Cosine | MeasureSpec::Manhattan | MeasureSpec::Canberra => Ok(()),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            MeasureSpec::Minkowski { m, weights } => match weights {
                Some(w) => minkowski(a, b, *m, w),
                None => minkowski_unweighted(a, b, *m),
            },
            MeasureSpec::Rbf { sigma, squared } => {
                if *squared {
                    rbf_squared(a, b, *sigma)
                } else {
                    rbf(a, b, *sigma)
                }
            }
            MeasureSpec::Cosine => cosine(a, b),
            MeasureSpec::Manhattan => manhattan(a, b),
            MeasureSpec::Canberra => canberra(a, b),
        }
    }

    /// Same measure restricted to a subset of channels (weights follow).
    pub fn select_channels(&self, channels: &[usize]) -> Self {
        match self {
            MeasureSpec::Minkowski {
                m,
                weights: Some(w),
            } => MeasureSpec::Minkowski {
                m: *m,
                weights: Some(channels.iter().map(|&c| w[c]).collect()),
            },
            other => other.clone(),
        }
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    Error::check_dim(a.len(), b.len())
}

fn weighted_power_sum(a: &[f64], b: &[f64], m: f64, w: impl Iterator<Item = f64>) -> f64 {
    let sum: f64 = if m == 1.0 {
        a.iter().zip(b).zip(w).map(|((x, y), wi)| wi * (x - y).abs()).sum()
    } else if m == 2.0 {
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), wi)| wi * (x - y) * (x - y))
            .sum()
    } else {
        a.iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), wi)| wi * (x - y).abs().powf(m))
            .sum()
    };
    if m == 1.0 {
        sum
    } else if m == 2.0 {
        sum.sqrt()
    } else {
        sum.powf(1.0 / m)
    }
}

/// Weighted Minkowski distance `(sum_i w_i |a_i - b_i|^m)^(1/m)`.
pub fn minkowski(a: &[f64], b: &[f64], m: f64, w: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Error::check_dim(a.len(), w.len())?;
    if !(m >= 1.0) {
        return Err(Error::arg(format!("minkowski degree {m} must be >= 1")));
    }
    Ok(weighted_power_sum(a, b, m, w.iter().copied()))
}

/// Minkowski distance with all weights equal to one.
pub fn minkowski_unweighted(a: &[f64], b: &[f64], m: f64) -> Result<f64> {
    check_len(a, b)?;
    if !(m >= 1.0) {
        return Err(Error::arg(format!("minkowski degree {m} must be >= 1")));
    }
    Ok(weighted_power_sum(a, b, m, std::iter::repeat(1.0)))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `exp(-||a - b|| / (2 sigma^2))` with the plain (unsquared) Euclidean norm.
pub fn rbf(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_len(a, b)?;
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("rbf sigma {sigma} must be > 0")));
    }
    Ok((-euclidean(a, b) / (2.0 * sigma * sigma)).exp())
}

/// `exp(-||a - b||^2 / (2 sigma^2))`, the usual Gaussian kernel.
pub fn rbf_squared(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_len(a, b)?;
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("rbf sigma {sigma} must be > 0")));
    }
    let d = euclidean(a, b);
    Ok((-d * d / (2.0 * sigma * sigma)).exp())
}

/// `1 - a.b / (|a| |b|)`. Zero vectors have no direction and are rejected.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("cosine distance of a zero vector".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    // Rounding can push the ratio a hair past 1.
    Ok((1.0 - dot / (na * nb)).max(0.0))
}

pub fn manhattan(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// `sum |a_i - b_i| / (|a_i| + |b_i|)`; 0/0 terms count as zero.
pub fn canberra(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a, b)?;
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let den = x.abs() + y.abs();
            if den == 0.0 {
                0.0
            } else {
                (x - y).abs() / den
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski(&[0.0, 0.0], &[3.0, 4.0], 2.0, &[1.0, 1.0]).unwrap(), 5.0);
        assert_eq!(
            minkowski(&[7.0, 7.0, 7.0], &[7.0, 7.0, 7.0], 2.0, &[1.0; 3]).unwrap(),
            0.0
        );
        assert_eq!(minkowski(&[1.0, 1.0], &[4.0, 5.0], 1.0, &[1.0, 1.0]).unwrap(), 7.0);
        // m = 3, weights select the second coordinate only: |4-1| = 3
        let d = minkowski(&[0.0, 1.0], &[9.0, 4.0], 3.0, &[0.0, 1.0]).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn minkowski_errors() {
        assert!(matches!(
            minkowski(&[0.0], &[0.0, 1.0], 2.0, &[1.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(minkowski(&[0.0], &[1.0], 0.5, &[1.0]).is_err());
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf(&[1.0, 2.0], &[1.0, 2.0], 0.3).unwrap(), 1.0);
        let v = rbf(&[0.0, 0.0], &[3.0, 4.0], 2.5f64.sqrt()).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        assert!((v - 0.367879).abs() < 1e-6);
        let far = rbf(&[0.0, 0.0], &[3.0, 4.0], 1e6).unwrap();
        assert!((far - 1.0).abs() < 1e-10);
        assert!(rbf(&[0.0], &[1.0], 0.0).is_err());
        assert!(rbf(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn rbf_squared_variant() {
        let v = rbf_squared(&[0.0, 0.0], &[3.0, 4.0], 5.0).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        let spec = MeasureSpec::Rbf {
            sigma: 5.0,
            squared: true,
        };
        assert_eq!(spec.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), v);
    }

    #[test]
    fn other_measure_examples() {
        let a = [0.3, -1.2, 4.0];
        let a2: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        assert!(cosine(&a, &a2).unwrap().abs() < 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::Degenerate(_))));
        assert_eq!(manhattan(&[1.0, 2.0], &[4.0, 6.0]).unwrap(), 7.0);
        assert_eq!(canberra(&[0.0, 1.0], &[0.0, 3.0]).unwrap(), 0.5);
        assert!((cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(MeasureSpec::euclidean().validate(3).is_ok());
        let bad_m = MeasureSpec::Minkowski {
            m: 0.9,
            weights: None,
        };
        assert!(bad_m.validate(3).is_err());
        let bad_w = MeasureSpec::Minkowski {
            m: 2.0,
            weights: Some(vec![1.0, -1.0, 1.0]),
        };
        assert!(bad_w.validate(3).is_err());
        let short_w = MeasureSpec::Minkowski {
            m: 2.0,
            weights: Some(vec![1.0; 2]),
        };
        assert!(short_w.validate(3).is_err());
        assert!(MeasureSpec::rbf(0.0).validate(3).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = MeasureSpec::Minkowski {
            m: 3.0,
            weights: Some(vec![1.0, 0.5]),
        };
        let text = toml::to_string(&spec).unwrap();
        let back: MeasureSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let plain: MeasureSpec = toml::from_str("kind = \"minkowski\"").unwrap();
        assert_eq!(plain, MeasureSpec::euclidean());
    }

    fn pair(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            proptest::collection::vec(-2.0..2.0f64, len),
            proptest::collection::vec(-2.0..2.0f64, len),
        )
    }

    proptest! {
        #[test]
        fn minkowski_one_is_manhattan((a, b) in (1usize..16).prop_flat_map(pair)) {
            let w = vec![1.0; a.len()];
            prop_assert_eq!(minkowski(&a, &b, 1.0, &w).unwrap(), manhattan(&a, &b).unwrap());
        }

        #[test]
        fn measures_are_symmetric((a, b) in (1usize..16).prop_flat_map(pair), m in 1.0..4.0f64) {
            let w = vec![1.0; a.len()];
            prop_assert_eq!(minkowski(&a, &b, m, &w).unwrap(), minkowski(&b, &a, m, &w).unwrap());
            prop_assert_eq!(rbf(&a, &b, 0.7).unwrap(), rbf(&b, &a, 0.7).unwrap());
            prop_assert_eq!(manhattan(&a, &b).unwrap(), manhattan(&b, &a).unwrap());
            prop_assert_eq!(canberra(&a, &b).unwrap(), canberra(&b, &a).unwrap());
            prop_assert_eq!(cosine(&a, &b).unwrap(), cosine(&b, &a).unwrap());
        }

        #[test]
        fn self_comparisons((a, _) in (1usize..16).prop_flat_map(pair)) {
            let w = vec![1.0; a.len()];
            prop_assert_eq!(minkowski(&a, &a, 2.0, &w).unwrap(), 0.0);
            prop_assert_eq!(manhattan(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(canberra(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(rbf(&a, &a, 0.2).unwrap(), 1.0);
        }

        #[test]
        fn euclidean_triangle_inequality(
            (a, b) in (1usize..12).prop_flat_map(pair),
            c in proptest::collection::vec(-2.0..2.0f64, 12),
        ) {
            let c = &c[..a.len()];
            let w = vec![1.0; a.len()];
            let ab = minkowski(&a, &b, 2.0, &w).unwrap();
            let ac = minkowski(&a, c, 2.0, &w).unwrap();
            let cb = minkowski(c, &b, 2.0, &w).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }
}
