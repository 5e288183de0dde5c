//! Stream sources a config can name: the two synthetic families with
//! ready-made layouts, or a CSV file.
//!
//! `mixture`: context `i` is one diagonal Gaussian whose spread is large in
//! two "active" dimensions (`2i` and `2i+1`, wrapping) and small elsewhere, so
//! each context lives near its own plane. Minority instances are drawn
//! around a context's mean with an isotropic spread, so they break the
//! plane structure without leaving the context's neighbourhood. Both the
//! minority displacement and spread are configurable.
//!
//! `rbf` / `rbf-noise`: each context owns several balls with centres drawn
//! from the layout seed; minority balls are drawn the same way. Majority
//! balls default to radius 0.3, wide enough in the unit cube that balls of
//! different contexts overlap. `rbf-noise` defaults the noise fraction to
//! one half.

use rand::Rng;

use ctxocc_core::rng::{derive_seed, seeded};
use ctxocc_core::stream::{
    Instance, MixtureModelStream, MvndComponent, RbfCentroid, RbfStream, StreamDescriptor,
};

use crate::config::{ensure, join, Reader};
use crate::error::{HarnessError, Result};
use crate::ingest::{read_csv_stream, CsvSchema};

const LAYOUT_LABEL: u64 = 0x1A_7007;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCommon {
    pub seed: u64,
    pub dimension: usize,
    pub context_probabilities: Vec<f64>,
    pub minority_fraction: f64,
}

impl SyntheticCommon {
    fn descriptor(&self) -> StreamDescriptor {
        StreamDescriptor {
            dimension: self.dimension,
            context_probabilities: self.context_probabilities.clone(),
            minority_fraction: self.minority_fraction,
            seed: self.seed,
        }
    }

    fn contexts(&self) -> usize {
        self.context_probabilities.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec {
    pub common: SyntheticCommon,
    /// Gap between consecutive context means along every axis.
    pub separation: f64,
    /// Standard deviation in a context's active dimensions.
    pub spread: f64,
    /// Standard deviation in the remaining dimensions.
    pub thin: f64,
    /// Displacement of the minority components along thin dimensions.
    pub anomaly_offset: f64,
    /// Standard deviation of the minority components.
    pub anomaly_spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbfSpec {
    pub common: SyntheticCommon,
    pub centroids: usize,
    pub radius: f64,
    pub minority_centroids: usize,
    pub minority_radius: f64,
    pub noise_fraction: f64,
    /// Whether the config named `rbf-noise`.
    pub noisy_preset: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StreamSpec {
    Mixture(MixtureSpec),
    Rbf(RbfSpec),
    Csv { schema: CsvSchema, contexts: usize },
}

fn read_common(
    r: &mut Reader,
    master_seed: u64,
    default_dimension: usize,
) -> Result<SyntheticCommon> {
    let seed = r.get("stream.seed", master_seed)?;
    let contexts = r.get("contexts", 2usize)?;
    ensure(contexts >= 1, "contexts", "must be at least 1")?;
    let dimension = r.get("dimension", default_dimension)?;
    ensure(dimension >= 1, "dimension", "must be at least 1")?;
    let context_probabilities = r
        .list::<f64>("context_probabilities")?
        .unwrap_or_else(|| vec![1.0 / contexts as f64; contexts]);
    ensure(
        context_probabilities.len() == contexts,
        "context_probabilities",
        format!("expected {contexts} values, one per context"),
    )?;
    ensure(
        context_probabilities
            .iter()
            .all(|p| (0.0..=1.0).contains(p))
            && (context_probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        "context_probabilities",
        "values must lie in [0, 1] and sum to 1",
    )?;
    let minority_fraction = r.get("minority_fraction", 0.02)?;
    ensure(
        (0.0..=1.0).contains(&minority_fraction),
        "minority_fraction",
        "must lie in [0, 1]",
    )?;
    Ok(SyntheticCommon {
        seed,
        dimension,
        context_probabilities,
        minority_fraction,
    })
}

fn common_key_values(c: &SyntheticCommon) -> Vec<(String, String)> {
    vec![
        ("stream.seed".into(), c.seed.to_string()),
        ("contexts".into(), c.contexts().to_string()),
        ("dimension".into(), c.dimension.to_string()),
        (
            "context_probabilities".into(),
            join(&c.context_probabilities),
        ),
        ("minority_fraction".into(), c.minority_fraction.to_string()),
    ]
}

fn positive(r: &mut Reader, key: &str, default: f64) -> Result<f64> {
    let v = r.get(key, default)?;
    ensure(v > 0.0 && v.is_finite(), key, "must be positive")?;
    Ok(v)
}

impl StreamSpec {
    pub(crate) fn read(r: &mut Reader, master_seed: u64) -> Result<Self> {
        let kind = r.get("stream", "mixture".to_string())?;
        match kind.as_str() {
            "mixture" => {
                let common = read_common(r, master_seed, 4)?;
                let separation: f64 = r.get("mixture.separation", 0.3)?;
                ensure(
                    separation.is_finite(),
                    "mixture.separation",
                    "must be finite",
                )?;
                let thin = positive(r, "mixture.thin", 0.02)?;
                Ok(StreamSpec::Mixture(MixtureSpec {
                    common,
                    separation,
                    spread: positive(r, "mixture.spread", 0.1)?,
                    thin,
                    anomaly_offset: r.get("mixture.anomaly_offset", 0.0)?,
                    anomaly_spread: positive(r, "mixture.anomaly_spread", 0.1)?,
                }))
            }
            "rbf" | "rbf-noise" => {
                let noisy_preset = kind == "rbf-noise";
                let common = read_common(r, master_seed, 4)?;
                let centroids = r.get("rbf.centroids", 3usize)?;
                ensure(centroids >= 1, "rbf.centroids", "must be at least 1")?;
                let minority_centroids = r.get("rbf.minority_centroids", 2usize)?;
                ensure(
                    minority_centroids >= 1 || common.minority_fraction == 0.0,
                    "rbf.minority_centroids",
                    "must be at least 1 when minority_fraction is positive",
                )?;
                let noise_fraction =
                    r.get("noise_fraction", if noisy_preset { 0.5 } else { 0.0 })?;
                ensure(
                    (0.0..=1.0).contains(&noise_fraction),
                    "noise_fraction",
                    "must lie in [0, 1]",
                )?;
                Ok(StreamSpec::Rbf(RbfSpec {
                    common,
                    centroids,
                    radius: positive(r, "rbf.radius", 0.3)?,
                    minority_centroids,
                    minority_radius: positive(r, "rbf.minority_radius", 0.05)?,
                    noise_fraction,
                    noisy_preset,
                }))
            }
            "csv" => {
                let schema = CsvSchema::read(r)?;
                let contexts = r.get("contexts", 1usize)?;
                ensure(contexts >= 1, "contexts", "must be at least 1")?;
                Ok(StreamSpec::Csv { schema, contexts })
            }
            other => Err(HarnessError::config(
                "stream",
                format!("unknown stream '{other}' (expected mixture, rbf, rbf-noise or csv)"),
            )),
        }
    }

    pub fn context_count(&self) -> usize {
        match self {
            StreamSpec::Mixture(m) => m.common.contexts(),
            StreamSpec::Rbf(r) => r.common.contexts(),
            StreamSpec::Csv { contexts, .. } => *contexts,
        }
    }

    /// Seed of the instance sequence, when the source is generated.
    pub fn seed(&self) -> Option<u64> {
        match self {
            StreamSpec::Mixture(m) => Some(m.common.seed),
            StreamSpec::Rbf(r) => Some(r.common.seed),
            StreamSpec::Csv { .. } => None,
        }
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        match self {
            StreamSpec::Mixture(m) => {
                let mut kv = vec![("stream".to_string(), "mixture".to_string())];
                kv.extend(common_key_values(&m.common));
                kv.push(("mixture.separation".into(), m.separation.to_string()));
                kv.push(("mixture.spread".into(), m.spread.to_string()));
                kv.push(("mixture.thin".into(), m.thin.to_string()));
                kv.push((
                    "mixture.anomaly_offset".into(),
                    m.anomaly_offset.to_string(),
                ));
                kv.push((
                    "mixture.anomaly_spread".into(),
                    m.anomaly_spread.to_string(),
                ));
                kv
            }
            StreamSpec::Rbf(r) => {
                let name = if r.noisy_preset { "rbf-noise" } else { "rbf" };
                let mut kv = vec![("stream".to_string(), name.to_string())];
                kv.extend(common_key_values(&r.common));
                kv.push(("rbf.centroids".into(), r.centroids.to_string()));
                kv.push(("rbf.radius".into(), r.radius.to_string()));
                kv.push((
                    "rbf.minority_centroids".into(),
                    r.minority_centroids.to_string(),
                ));
                kv.push(("rbf.minority_radius".into(), r.minority_radius.to_string()));
                kv.push(("noise_fraction".into(), r.noise_fraction.to_string()));
                kv
            }
            StreamSpec::Csv { schema, contexts } => {
                let mut kv = vec![("stream".to_string(), "csv".to_string())];
                kv.extend(schema.to_key_values());
                kv.push(("contexts".into(), contexts.to_string()));
                kv
            }
        }
    }

    /// The first `length` instances of the source (fewer if a CSV file is shorter).
    pub fn generate(&self, length: usize) -> Result<Vec<Instance>> {
        match self {
            StreamSpec::Mixture(m) => Ok(m.stream()?.take(length).collect()),
            StreamSpec::Rbf(r) => Ok(r.stream()?.take(length).collect()),
            StreamSpec::Csv { schema, contexts } => {
                let mut rows = read_csv_stream(schema)?;
                rows.truncate(length);
                if let Some((i, c)) = rows
                    .iter()
                    .enumerate()
                    .find_map(|(i, x)| x.context_id.filter(|c| c >= contexts).map(|c| (i, c)))
                {
                    return Err(HarnessError::Schema {
                        path: schema.path.clone(),
                        message: format!(
                            "row {} has context {} but contexts = {}",
                            i + 1,
                            c,
                            contexts
                        ),
                    });
                }
                Ok(rows)
            }
        }
    }
}

impl MixtureSpec {
    fn active(&self, context: usize) -> [usize; 2] {
        let d = self.common.dimension;
        [(2 * context) % d, (2 * context + 1) % d]
    }

    pub fn mean(&self, context: usize) -> Vec<f64> {
        let j = self.common.contexts() as f64;
        let shift = self.separation * (context as f64 - 0.5 * (j - 1.0));
        vec![0.5 + shift; self.common.dimension]
    }

    pub fn components(&self) -> Result<(Vec<Vec<MvndComponent>>, Vec<MvndComponent>)> {
        let d = self.common.dimension;
        let mut majority = Vec::new();
        let mut minority = Vec::new();
        for c in 0..self.common.contexts() {
            let active = self.active(c);
            let mean = self.mean(c);
            let std: Vec<f64> = (0..d)
                .map(|k| {
                    if active.contains(&k) {
                        self.spread
                    } else {
                        self.thin
                    }
                })
                .collect();
            majority.push(vec![MvndComponent::new(mean.clone(), std)?]);
            let thin: Vec<usize> = (0..d).filter(|k| !active.contains(k)).collect();
            let along: Vec<usize> = if thin.is_empty() {
                (0..d).collect()
            } else {
                thin
            };
            let mut shifted = mean;
            for (n, k) in along.iter().enumerate() {
                shifted[*k] += if n % 2 == 0 {
                    self.anomaly_offset
                } else {
                    -self.anomaly_offset
                };
            }
            minority.push(MvndComponent::isotropic(shifted, self.anomaly_spread)?);
        }
        Ok((majority, minority))
    }

    pub fn stream(&self) -> Result<MixtureModelStream> {
        let (majority, minority) = self.components()?;
        Ok(MixtureModelStream::new(
            self.common.descriptor(),
            majority,
            minority,
        )?)
    }
}

impl RbfSpec {
    /// Centroid layout, fixed by the stream seed.
    pub fn centroids(&self) -> Result<(Vec<Vec<RbfCentroid>>, Vec<RbfCentroid>)> {
        let mut rng = seeded(derive_seed(self.common.seed, LAYOUT_LABEL));
        let d = self.common.dimension;
        let mut ball = |radius: f64| -> Result<RbfCentroid> {
            let center: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            let weight = rng.random_range(0.5..1.5);
            Ok(RbfCentroid::new(center, radius, weight)?)
        };
        let majority = (0..self.common.contexts())
            .map(|_| {
                (0..self.centroids)
                    .map(|_| ball(self.radius))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let minority = (0..self.minority_centroids)
            .map(|_| ball(self.minority_radius))
            .collect::<Result<Vec<_>>>()?;
        Ok((majority, minority))
    }

    pub fn stream(&self) -> Result<RbfStream> {
        let (majority, minority) = self.centroids()?;
        Ok(RbfStream::new(
            self.common.descriptor(),
            majority,
            minority,
            self.noise_fraction,
        )?)
    }
}
