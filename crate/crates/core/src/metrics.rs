//! Representativeness and diversity of a generated set over latent vectors,
//! and a difficulty-bias diagnostic between an original dataset and a pool.

use serde::{Deserialize, Serialize};

use crate::distribution::{histogram, INTERVALS};
use crate::error::{Error, Result};
use crate::manifest::{Item, Manifest};

/// Vectors of one dimension with aligned ids.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    pub ids: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

impl VectorSet {
    pub fn new(ids: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::validation("ids and vectors must align"));
        }
        if let Some(first) = vectors.first() {
            if first.is_empty() {
                return Err(Error::validation("vectors need dimension at least 1"));
            }
            if vectors.iter().any(|v| v.len() != first.len()) {
                return Err(Error::validation("vectors have mixed dimensions"));
            }
        }
        Ok(VectorSet { ids, vectors })
    }

    /// Latents of `items`; fails when any item has none.
    pub fn from_items(items: &[&Item]) -> Result<Self> {
        let mut ids = Vec::with_capacity(items.len());
        let mut vectors = Vec::with_capacity(items.len());
        for it in items {
            let latent = it
                .latent
                .as_ref()
                .ok_or_else(|| Error::validation(format!("item {:?} has no latent", it.id)))?;
            ids.push(it.id.clone());
            vectors.push(latent.clone());
        }
        VectorSet::new(ids, vectors)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::domain("cosine similarity of a zero vector"));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Per-item scores with their aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScores {
    pub per_item: Vec<f64>,
    pub aggregate: f64,
}

/// For every generated vector, its lowest similarity to the real memory; the
/// aggregate is the lowest of those.
pub fn representativeness(generated: &VectorSet, real_memory: &VectorSet) -> Result<ItemScores> {
    if generated.is_empty() || real_memory.is_empty() {
        return Err(Error::domain("representativeness needs non-empty sets"));
    }
    let per_item = generated
        .vectors
        .iter()
        .map(|g| {
            real_memory
                .vectors
                .iter()
                .map(|m| cosine(g, m))
                .try_fold(f64::INFINITY, |acc, s| s.map(|s| acc.min(s)))
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = per_item.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ItemScores {
        per_item,
        aggregate,
    })
}

/// For every generated vector, its highest similarity to another member; the
/// aggregate is the highest of those. Lower means more diverse.
pub fn diversity(generated: &VectorSet) -> Result<ItemScores> {
    let n = generated.len();
    if n < 2 {
        return Err(Error::domain("diversity needs at least two vectors"));
    }
    let mut per_item = vec![f64::NEG_INFINITY; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = cosine(&generated.vectors[i], &generated.vectors[j])?;
            per_item[i] = per_item[i].max(s);
            per_item[j] = per_item[j].max(s);
        }
    }
    let aggregate = per_item.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ItemScores {
        per_item,
        aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBias {
    pub label: String,
    /// Normalized pool histogram minus normalized original histogram.
    pub interval_delta: [f64; INTERVALS],
    /// Mean pool difficulty minus mean original difficulty.
    pub mean_gap: f64,
    /// Pool share of the easiest interval over the original share; `None`
    /// when the original has no items there.
    pub easiest_share_ratio: Option<f64>,
}

pub fn bias_report(original: &Manifest, pool: &Manifest) -> Result<Vec<ClassBias>> {
    if original.labels() != pool.labels() {
        return Err(Error::validation("original and pool label sets differ"));
    }
    let pool_classes = pool.by_label();
    original
        .by_label()
        .into_iter()
        .map(|(label, orig_items)| {
            let pool_items = &pool_classes[label];
            let o = histogram(label, orig_items.iter().map(|it| it.difficulty))?.normalized();
            let p = histogram(label, pool_items.iter().map(|it| it.difficulty))?.normalized();
            let mean = |items: &[&Item]| {
                items.iter().map(|it| it.difficulty).sum::<f64>() / items.len() as f64
            };
            Ok(ClassBias {
                label: label.to_string(),
                interval_delta: std::array::from_fn(|k| p[k] - o[k]),
                mean_gap: mean(pool_items) - mean(&orig_items),
                easiest_share_ratio: (o[0] > 0.0).then(|| p[0] / o[0]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::Role;

    fn set(vectors: Vec<Vec<f64>>) -> VectorSet {
        let ids = (0..vectors.len()).map(|i| i.to_string()).collect();
        VectorSet::new(ids, vectors).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, -3.0], &[-1.0, 3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn representativeness_examples() {
        let v = set(vec![vec![0.3, 0.4]]);
        assert!((representativeness(&v, &v).unwrap().aggregate - 1.0).abs() < 1e-15);
        let r = representativeness(&set(vec![vec![1.0, 0.0]]), &set(vec![vec![0.0, 1.0]])).unwrap();
        assert_eq!(r.aggregate, 0.0);
        assert!(representativeness(&set(vec![]), &v).is_err());
    }

    #[test]
    fn diversity_examples() {
        let d = diversity(&set(vec![vec![1.0, 1.0], vec![1.0, 1.0]])).unwrap();
        assert!((d.aggregate - 1.0).abs() < 1e-15);
        let d = diversity(&set(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ]))
        .unwrap();
        assert_eq!(d.per_item, vec![0.0; 3]);
        assert!(diversity(&set(vec![vec![1.0]])).is_err());
    }

    #[test]
    fn vector_set_checks() {
        assert!(VectorSet::new(vec!["a".into()], vec![]).is_err());
        assert!(VectorSet::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![1.0, 2.0]]
        )
        .is_err());
        let it = Item::from_difficulty("a", "x", 0.1).unwrap();
        assert!(VectorSet::from_items(&[&it]).is_err());
    }

    fn manifest(values: &[f64], label: &str, prefix: &str) -> Vec<Item> {
        values
            .iter()
            .enumerate()
            .map(|(i, &d)| Item::from_difficulty(format!("{prefix}{i}"), label, d).unwrap())
            .collect()
    }

    #[test]
    fn bias_examples() {
        let o = Manifest::new(manifest(&[0.1, 0.5, 0.7], "x", "o"), Role::Original).unwrap();
        let same = bias_report(&o, &o).unwrap();
        assert_eq!(same[0].interval_delta, [0.0; 10]);
        assert_eq!(same[0].mean_gap, 0.0);
        assert_eq!(same[0].easiest_share_ratio, None);

        let o = Manifest::new(manifest(&[0.95; 4], "x", "o"), Role::Original).unwrap();
        let p = Manifest::new(manifest(&[0.05; 4], "x", "p"), Role::Pool).unwrap();
        let b = bias_report(&o, &p).unwrap();
        assert!((b[0].mean_gap + 0.9).abs() < 1e-12);
        assert_eq!(b[0].interval_delta[0], 1.0);
        assert_eq!(b[0].interval_delta[9], -1.0);

        let other = Manifest::new(manifest(&[0.5], "y", "q"), Role::Pool).unwrap();
        assert!(matches!(bias_report(&o, &other), Err(Error::Validation(_))));
    }
}
