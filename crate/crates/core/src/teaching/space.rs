use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::types::{Explanation, ExplanationKind};
use crate::error::{Error, Result};
use crate::math::binomial;

/// Largest space `enumerate` will materialize.
pub const ENUMERATION_LIMIT: u128 = 5_000_000;

/// Generative description of the candidate pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceDescriptor {
    /// All `size`-subsets of `pool` (dataset row indices).
    Subsets { pool: Vec<usize>, size: usize },
    /// One `size`-subset from each class pool, chosen jointly.
    PerClassSubsets { pools: Vec<Vec<usize>>, size: usize },
    /// Hard binary masks over `dim` features.
    Masks { dim: usize, keep_prob: f64 },
    /// An explicit finite list.
    Listed { items: Vec<Explanation> },
    /// Continuous surrogate parameters; searched by optimization only.
    SurrogateParameters { family: ExplanationKind, dim: usize },
}

/// Unnormalized prior weight P(x).
#[derive(Clone, Default)]
pub enum Prior {
    #[default]
    Uniform,
    /// Weight per enumeration index.
    Listed(Vec<f64>),
    /// Independent Bernoulli(p) per kept feature.
    MaskBernoulli(f64),
    Custom(Arc<dyn Fn(&Explanation) -> f64 + Send + Sync>),
}

impl fmt::Debug for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Uniform => write!(f, "Uniform"),
            Prior::Listed(w) => f.debug_tuple("Listed").field(w).finish(),
            Prior::MaskBernoulli(p) => f.debug_tuple("MaskBernoulli").field(p).finish(),
            Prior::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Prior {
    pub fn weight(&self, index: Option<usize>, x: &Explanation) -> Result<f64> {
        let w = match self {
            Prior::Uniform => 1.0,
            Prior::Listed(ws) => {
                let i = index.ok_or_else(|| {
                    Error::InvalidArgument("listed prior needs an enumeration index".into())
                })?;
                *ws.get(i).ok_or_else(|| {
                    Error::InvalidArgument(format!("no prior weight for element {i}"))
                })?
            }
            Prior::MaskBernoulli(p) => {
                let (kept, dropped) = mask_counts(x)?;
                p.powf(kept) * (1.0 - p).powf(dropped)
            }
            Prior::Custom(f) => f(x),
        };
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior weight must be finite and nonnegative, got {w}"
            )));
        }
        Ok(w)
    }

    pub fn log_weight(&self, index: Option<usize>, x: &Explanation) -> Result<f64> {
        match self {
            Prior::Uniform => Ok(0.0),
            Prior::MaskBernoulli(p) => {
                let (kept, dropped) = mask_counts(x)?;
                Ok(kept * p.ln() + dropped * (1.0 - p).ln())
            }
            _ => Ok(self.weight(index, x)?.ln()),
        }
    }
}

/// Kept and dropped mass of a mask. Working from counts rather than a
/// per-feature sum makes masks with equal counts tie exactly.
fn mask_counts(x: &Explanation) -> Result<(f64, f64)> {
    let mask = x.as_mask()?;
    let kept: f64 = mask.iter().sum();
    Ok((kept, mask.len() as f64 - kept))
}

/// The candidate pool and its prior weighting.
#[derive(Debug, Clone)]
pub struct ExplanationSpace {
    pub descriptor: SpaceDescriptor,
    pub prior: Prior,
}

impl ExplanationSpace {
    pub fn new(descriptor: SpaceDescriptor, prior: Prior) -> Self {
        Self { descriptor, prior }
    }

    pub fn uniform(descriptor: SpaceDescriptor) -> Self {
        Self::new(descriptor, Prior::Uniform)
    }

    /// Mask space with the Bernoulli prior implied by its keep probability.
    pub fn masks(dim: usize, keep_prob: f64) -> Self {
        Self::new(
            SpaceDescriptor::Masks { dim, keep_prob },
            Prior::MaskBernoulli(keep_prob),
        )
    }

    pub fn listed(items: Vec<Explanation>, weights: Option<Vec<f64>>) -> Self {
        let prior = weights.map(Prior::Listed).unwrap_or_default();
        Self::new(SpaceDescriptor::Listed { items }, prior)
    }

    /// Number of elements, or `None` for continuous spaces.
    pub fn size(&self) -> Option<u128> {
        match &self.descriptor {
            SpaceDescriptor::Subsets { pool, size } => Some(binomial(pool.len(), *size)),
            SpaceDescriptor::PerClassSubsets { pools, size } => pools
                .iter()
                .try_fold(1u128, |acc, p| acc.checked_mul(binomial(p.len(), *size))),
            SpaceDescriptor::Masks { dim, .. } => 1u128.checked_shl(*dim as u32),
            SpaceDescriptor::Listed { items } => Some(items.len() as u128),
            SpaceDescriptor::SurrogateParameters { .. } => None,
        }
    }

    pub fn enumerable(&self) -> bool {
        matches!(self.size(), Some(n) if n <= ENUMERATION_LIMIT)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.descriptor {
            SpaceDescriptor::Subsets { pool, size } => {
                if *size == 0 || *size > pool.len() {
                    return Err(Error::InvalidArgument(format!(
                        "subset size {size} must be in 1..={}",
                        pool.len()
                    )));
                }
                check_distinct(pool)?;
            }
            SpaceDescriptor::PerClassSubsets { pools, size } => {
                if pools.is_empty() {
                    return Err(Error::InvalidArgument("no class pools".into()));
                }
                for p in pools {
                    if *size == 0 || *size > p.len() {
                        return Err(Error::InvalidArgument(format!(
                            "per-class size {size} must be in 1..={}",
                            p.len()
                        )));
                    }
                }
                check_distinct(&pools.concat())?;
            }
            SpaceDescriptor::Masks { dim, keep_prob } => {
                if *dim == 0 || !(*keep_prob > 0.0 && *keep_prob < 1.0) {
                    return Err(Error::InvalidArgument(
                        "mask space needs dim >= 1 and keep probability in (0,1)".into(),
                    ));
                }
            }
            SpaceDescriptor::Listed { items } => {
                if items.is_empty() {
                    return Err(Error::InvalidArgument("listed space is empty".into()));
                }
                if let Prior::Listed(w) = &self.prior {
                    if w.len() != items.len() {
                        return Err(Error::InvalidArgument(
                            "listed prior length differs from item count".into(),
                        ));
                    }
                }
            }
            SpaceDescriptor::SurrogateParameters { .. } => {}
        }
        Ok(())
    }

    /// Materializes every element in canonical order: lexicographic for
    /// subsets, odometer over classes (last class fastest) for per-class
    /// subsets, binary counting with feature 0 as the low bit for masks.
    pub fn enumerate(&self) -> Result<Vec<Explanation>> {
        self.validate()?;
        let count = self.size().ok_or(Error::NotEnumerable)?;
        if count > ENUMERATION_LIMIT {
            return Err(Error::SpaceTooLarge {
                count,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(match &self.descriptor {
            SpaceDescriptor::Subsets { pool, size } => combinations(pool.len(), *size)
                .into_iter()
                .map(|c| Explanation::ExampleSet(c.iter().map(|&i| pool[i]).collect()))
                .collect(),
            SpaceDescriptor::PerClassSubsets { pools, size } => {
                let per_class: Vec<Vec<Vec<usize>>> = pools
                    .iter()
                    .map(|p| {
                        combinations(p.len(), *size)
                            .into_iter()
                            .map(|c| c.iter().map(|&i| p[i]).collect())
                            .collect()
                    })
                    .collect();
                let mut out = Vec::with_capacity(count as usize);
                let mut digits = vec![0usize; pools.len()];
                loop {
                    let mut set = Vec::with_capacity(pools.len() * size);
                    for (c, &d) in digits.iter().enumerate() {
                        set.extend_from_slice(&per_class[c][d]);
                    }
                    out.push(Explanation::ExampleSet(set));
                    let mut pos = pools.len();
                    loop {
                        if pos == 0 {
                            return Ok(out);
                        }
                        pos -= 1;
                        digits[pos] += 1;
                        if digits[pos] < per_class[pos].len() {
                            break;
                        }
                        digits[pos] = 0;
                    }
                }
            }
            SpaceDescriptor::Masks { dim, .. } => (0..count as u64)
                .map(|bits| {
                    Explanation::FeatureMask((0..*dim).map(|j| ((bits >> j) & 1) as f64).collect())
                })
                .collect(),
            SpaceDescriptor::Listed { items } => items.clone(),
            SpaceDescriptor::SurrogateParameters { .. } => unreachable!(),
        })
    }
}

fn check_distinct(ix: &[usize]) -> Result<()> {
    let mut sorted = ix.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(
            "pool indices must be distinct".into(),
        ));
    }
    Ok(())
}

/// All k-combinations of 0..n in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        let c = combinations(4, 2);
        assert_eq!(
            c,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(combinations(5, 5), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(combinations(10, 3).len(), 120);
        assert!(combinations(0, 0) == vec![Vec::<usize>::new()]);
    }

    #[test]
    fn per_class_odometer_order() {
        let space = ExplanationSpace::uniform(SpaceDescriptor::PerClassSubsets {
            pools: vec![vec![0, 1, 2], vec![3, 4]],
            size: 1,
        });
        let items = space.enumerate().unwrap();
        let sets: Vec<_> = items
            .iter()
            .map(|x| x.as_example_set().unwrap().to_vec())
            .collect();
        assert_eq!(
            sets,
            vec![
                vec![0, 3],
                vec![0, 4],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4]
            ]
        );
    }

    #[test]
    fn mask_prior_matches_bernoulli_product() {
        let space = ExplanationSpace::masks(3, 0.3);
        let items = space.enumerate().unwrap();
        assert_eq!(items.len(), 8);
        let total: f64 = items
            .iter()
            .map(|x| space.prior.weight(None, x).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        let x = Explanation::FeatureMask(vec![1.0, 0.0, 1.0]);
        let lw = space.prior.log_weight(None, &x).unwrap();
        assert!((lw.exp() - 0.3 * 0.7 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_spaces() {
        let s = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
            pool: vec![1, 2],
            size: 3,
        });
        assert!(s.enumerate().is_err());
        let s = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
            pool: vec![1, 1],
            size: 1,
        });
        assert!(s.enumerate().is_err());
        let s = ExplanationSpace::uniform(SpaceDescriptor::SurrogateParameters {
            family: ExplanationKind::SoftTree,
            dim: 3,
        });
        assert!(!s.enumerable());
        assert!(matches!(s.enumerate(), Err(Error::NotEnumerable)));
        let s = ExplanationSpace::masks(40, 0.5);
        assert!(!s.enumerable());
    }

    #[test]
    fn negative_prior_rejected() {
        let s = ExplanationSpace::listed(vec![Explanation::ExampleSet(vec![0])], Some(vec![-1.0]));
        assert!(s.prior.weight(Some(0), &s.enumerate().unwrap()[0]).is_err());
    }
}
