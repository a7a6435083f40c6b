//! Prototype-sum embedding space. Prototypes are drawn on a dedicated RNG
//! stream so the geometry of the space never depends on how many sentences
//! are generated from it.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::corpus::{CorpusSpec, EmbeddedSentence, SentenceStructure, Slot};
use crate::error::{Error, Result};
use crate::linalg::squared_distance;
use crate::LatentVector;

const PROTOTYPE_STREAM: u64 = 0;
const GENERATION_STREAM: u64 = 1;

/// A built corpus space: prototypes plus the exhaustive candidate table the
/// decoder searches (every content combination of every template).
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    spec: CorpusSpec,
    prototypes: HashMap<(String, String), Vec<f64>>,
    candidates: Vec<(SentenceStructure, Vec<f64>)>,
}

impl SynthCorpus {
    pub fn build(spec: CorpusSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(PROTOTYPE_STREAM);
        let mut prototypes = HashMap::new();
        // Declared order fixes the draw order, and with it every prototype.
        for role in &spec.roles {
            for content in &role.contents {
                let p: Vec<f64> = (0..spec.dim)
                    .map(|_| {
                        let g: f64 = rng.sample(StandardNormal);
                        g * spec.prototype_scale
                    })
                    .collect();
                prototypes.insert((role.role.clone(), content.clone()), p);
            }
        }
        let mut corpus = SynthCorpus {
            spec,
            prototypes,
            candidates: Vec::new(),
        };
        corpus.candidates = corpus.enumerate_candidates()?;
        Ok(corpus)
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn prototype(&self, role: &str, content: &str) -> Result<&[f64]> {
        self.prototypes
            .get(&(role.to_string(), content.to_string()))
            .map(Vec::as_slice)
            .ok_or_else(|| {
                if self.spec.roles.iter().any(|r| r.role == role) {
                    Error::UnknownSymbol {
                        kind: "content",
                        name: format!("{content} (role {role})"),
                    }
                } else {
                    Error::UnknownSymbol {
                        kind: "role",
                        name: role.to_string(),
                    }
                }
            })
    }

    /// Every decodable structure with its noiseless embedding.
    pub fn candidates(&self) -> &[(SentenceStructure, Vec<f64>)] {
        &self.candidates
    }

    /// Noiseless embedding: the sum of the slot prototypes.
    pub fn encode(&self, structure: &SentenceStructure) -> Result<LatentVector> {
        let mut acc = vec![0.0; self.spec.dim];
        for slot in structure.slots() {
            let p = self.prototype(&slot.role, &slot.content)?;
            for (a, b) in acc.iter_mut().zip(p) {
                *a += b;
            }
        }
        LatentVector::new(acc)
    }

    /// Exact nearest-candidate search over the template inventory. Ties
    /// resolve to the earliest candidate in enumeration order.
    pub fn decode(&self, vector: &[f64]) -> Result<SentenceStructure> {
        if vector.len() != self.spec.dim {
            return Err(Error::DimensionMismatch {
                context: "decode input".into(),
                expected: self.spec.dim,
                got: vector.len(),
            });
        }
        Error::check_finite(vector, "decode input")?;
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, (_, cand)) in self.candidates.iter().enumerate() {
            let d = squared_distance(vector, cand);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(self.candidates[best].0.clone())
    }

    /// Draws the corpus: `samples_per_cluster` sentences per cluster-role
    /// content, templates chosen uniformly among those hosting the cluster
    /// role, other slots filled uniformly, noise eta per dimension. A pure
    /// function of the spec.
    pub fn generate(&self) -> Result<Vec<EmbeddedSentence>> {
        let spec = &self.spec;
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(GENERATION_STREAM);
        let hosting: Vec<&Vec<String>> = spec
            .templates
            .iter()
            .filter(|t| t.contains(&spec.cluster_role))
            .collect();
        let contents = spec.cluster_contents().to_vec();
        let mut out = Vec::with_capacity(contents.len() * spec.samples_per_cluster);
        let mut counter = 0usize;
        for content in &contents {
            for _ in 0..spec.samples_per_cluster {
                let template = hosting[rng.random_range(0..hosting.len())];
                let slots: Vec<Slot> = template
                    .iter()
                    .map(|role| {
                        let filled = if role == &spec.cluster_role {
                            content.clone()
                        } else {
                            let vocab = &spec
                                .roles
                                .iter()
                                .find(|r| &r.role == role)
                                .expect("validated template role")
                                .contents;
                            vocab[rng.random_range(0..vocab.len())].clone()
                        };
                        Slot {
                            role: role.clone(),
                            content: filled,
                        }
                    })
                    .collect();
                let structure = SentenceStructure::new(slots)?;
                let clean = self.encode(&structure)?;
                let noisy: Vec<f64> = clean
                    .iter()
                    .map(|&v| {
                        let g: f64 = rng.sample(StandardNormal);
                        v + spec.noise_std * g
                    })
                    .collect();
                let text = structure.render();
                out.push(EmbeddedSentence {
                    id: format!("s{counter:06}"),
                    vector: LatentVector::new(noisy)?,
                    structure,
                    text: Some(text),
                });
                counter += 1;
            }
        }
        Ok(out)
    }

    fn enumerate_candidates(&self) -> Result<Vec<(SentenceStructure, Vec<f64>)>> {
        let mut out = Vec::new();
        for template in &self.spec.templates {
            let vocabs: Vec<&Vec<String>> = template
                .iter()
                .map(|role| {
                    &self
                        .spec
                        .roles
                        .iter()
                        .find(|r| &r.role == role)
                        .expect("validated template role")
                        .contents
                })
                .collect();
            let mut odometer = vec![0usize; template.len()];
            'combos: loop {
                let slots: Vec<Slot> = template
                    .iter()
                    .enumerate()
                    .map(|(k, role)| Slot {
                        role: role.clone(),
                        content: vocabs[k][odometer[k]].clone(),
                    })
                    .collect();
                let structure = SentenceStructure::new(slots)?;
                let vec = self.encode(&structure)?.into_inner();
                out.push((structure, vec));
                // Advance like an odometer, least-significant slot last.
                let mut pos = template.len() - 1;
                loop {
                    odometer[pos] += 1;
                    if odometer[pos] < vocabs[pos].len() {
                        continue 'combos;
                    }
                    odometer[pos] = 0;
                    if pos == 0 {
                        break 'combos;
                    }
                    pos -= 1;
                }
            }
        }
        Ok(out)
    }
}
