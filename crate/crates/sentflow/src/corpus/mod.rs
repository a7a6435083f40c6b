//! Synthetic role-labelled sentence corpus. Each (role, content) pair owns a
//! fixed prototype vector; a sentence embeds as the sum of its slot
//! prototypes plus isotropic noise, so ground truth is available everywhere:
//! encoding is exact, decoding is nearest-candidate search over the declared
//! template inventory, and cluster structure is known by construction.

mod clusters;
mod jsonl;
mod synth;

pub use clusters::{cluster_assignments, compute_cluster_specs};
pub use jsonl::{load_embeddings, save_embeddings};
pub use synth::SynthCorpus;

use crate::error::{Error, Result};
use crate::LatentVector;

/// One filled role in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Slot {
    pub role: String,
    pub content: String,
}

/// An ordered set of filled roles, at most one slot per role.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentenceStructure {
    slots: Vec<Slot>,
}

impl SentenceStructure {
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidInput(
                "sentence structure needs at least one slot".into(),
            ));
        }
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].iter().any(|prev| prev.role == s.role) {
                return Err(Error::InvalidInput(format!(
                    "role {} filled more than once",
                    s.role
                )));
            }
        }
        Ok(SentenceStructure { slots })
    }

    /// Convenience constructor from (role, content) string pairs.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(r, c)| Slot {
                    role: r.to_string(),
                    content: c.to_string(),
                })
                .collect(),
        )
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn content_of(&self, role: &str) -> Option<&str> {
        self.slots
            .iter()
            .find(|s| s.role == role)
            .map(|s| s.content.as_str())
    }

    /// Order-independent identity, for novelty checks and grouping.
    pub fn key(&self) -> String {
        let mut parts: Vec<String> = self
            .slots
            .iter()
            .map(|s| format!("{}={}", s.role, s.content))
            .collect();
        parts.sort();
        parts.join(";")
    }

    /// Space-joined contents in slot order, a readable stand-in for text.
    pub fn render(&self) -> String {
        self.slots
            .iter()
            .map(|s| s.content.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A role and its content vocabulary.
#[derive(Debug, Clone)]
pub struct RoleSpec {
    pub role: String,
    pub contents: Vec<String>,
}

impl RoleSpec {
    pub fn new(role: &str, contents: &[&str]) -> Self {
        RoleSpec {
            role: role.to_string(),
            contents: contents.iter().map(|c| c.to_string()).collect(),
        }
    }
}

/// Everything that determines a synthetic corpus, seed included; building
/// and generating from an identical spec is bitwise reproducible.
#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub dim: usize,
    pub roles: Vec<RoleSpec>,
    /// Role subsets a sentence may instantiate, in slot order.
    pub templates: Vec<Vec<String>>,
    /// The role whose contents define the supervision clusters.
    pub cluster_role: String,
    pub samples_per_cluster: usize,
    /// Composition noise std (eta).
    pub noise_std: f64,
    /// Scale of the prototype Gaussian.
    pub prototype_scale: f64,
    pub seed: u64,
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.dim % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "corpus dimension must be even and at least 2, got {}",
                self.dim
            )));
        }
        if self.roles.is_empty() {
            return Err(Error::InvalidParameter("corpus declares no roles".into()));
        }
        for (i, r) in self.roles.iter().enumerate() {
            if self.roles[..i].iter().any(|p| p.role == r.role) {
                return Err(Error::InvalidParameter(format!(
                    "role {} declared twice",
                    r.role
                )));
            }
            if r.contents.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "role {} has an empty vocabulary",
                    r.role
                )));
            }
            for (j, c) in r.contents.iter().enumerate() {
                if r.contents[..j].contains(c) {
                    return Err(Error::InvalidParameter(format!(
                        "content {c} declared twice for role {}",
                        r.role
                    )));
                }
            }
        }
        if self.templates.is_empty() {
            return Err(Error::InvalidParameter("corpus declares no templates".into()));
        }
        for t in &self.templates {
            if t.is_empty() {
                return Err(Error::InvalidParameter("empty template".into()));
            }
            for (i, role) in t.iter().enumerate() {
                if t[..i].contains(role) {
                    return Err(Error::InvalidParameter(format!(
                        "template repeats role {role}"
                    )));
                }
                if !self.roles.iter().any(|r| &r.role == role) {
                    return Err(Error::UnknownSymbol {
                        kind: "role",
                        name: role.clone(),
                    });
                }
            }
        }
        if !self.roles.iter().any(|r| r.role == self.cluster_role) {
            return Err(Error::UnknownSymbol {
                kind: "role",
                name: self.cluster_role.clone(),
            });
        }
        if !self
            .templates
            .iter()
            .any(|t| t.contains(&self.cluster_role))
        {
            return Err(Error::InvalidParameter(format!(
                "no template contains the cluster role {}, so the requested \
                 per-cluster counts cannot be met",
                self.cluster_role
            )));
        }
        if self.samples_per_cluster == 0 {
            return Err(Error::InvalidParameter(
                "samples_per_cluster must be at least 1".into(),
            ));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise std must be nonnegative and finite, got {}",
                self.noise_std
            )));
        }
        if !(self.prototype_scale > 0.0) || !self.prototype_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "prototype scale must be positive and finite, got {}",
                self.prototype_scale
            )));
        }
        Ok(())
    }

    pub fn cluster_contents(&self) -> &[String] {
        &self
            .roles
            .iter()
            .find(|r| r.role == self.cluster_role)
            .expect("validated cluster role")
            .contents
    }
}

/// One sentence with its embedding and role annotations.
#[derive(Debug, Clone)]
pub struct EmbeddedSentence {
    pub id: String,
    pub vector: LatentVector,
    pub structure: SentenceStructure,
    pub text: Option<String>,
}

/// The full corpus: agent-like subjects, predicates, patients, and enough
/// optional modifier structure that novel recombinations vastly outnumber
/// the generated set.
pub fn default_spec(seed: u64) -> CorpusSpec {
    CorpusSpec {
        dim: 32,
        roles: vec![
            RoleSpec::new("ARG0", &["human", "animal", "plant", "something"]),
            RoleSpec::new("V", &["is", "are", "cause", "require"]),
            RoleSpec::new("ARG1", &["food", "oxygen", "sun", "water"]),
            RoleSpec::new(
                "ARGM-TMP",
                &[
                    "today", "yesterday", "tomorrow", "nightly", "daily", "weekly", "rarely",
                    "often",
                ],
            ),
            RoleSpec::new(
                "ARGM-PRP",
                &[
                    "growth", "survival", "energy", "warmth", "balance", "health", "shelter",
                    "repair", "signal", "defense", "motion", "rest",
                ],
            ),
        ],
        templates: vec![
            vec!["ARG0".into(), "V".into(), "ARG1".into()],
            vec!["ARG0".into(), "V".into(), "ARG1".into(), "ARGM-TMP".into()],
            vec!["ARG0".into(), "V".into(), "ARG1".into(), "ARGM-PRP".into()],
            vec![
                "ARG0".into(),
                "V".into(),
                "ARG1".into(),
                "ARGM-TMP".into(),
                "ARGM-PRP".into(),
            ],
        ],
        cluster_role: "ARG0".into(),
        samples_per_cluster: 500,
        noise_std: 0.3,
        prototype_scale: 1.0,
        seed,
    }
}

/// Single-slot corpus: every sentence is one cluster-role slot, so vectors
/// concentrate at the cluster prototype with std `noise_std`.
pub fn single_role_spec(seed: u64) -> CorpusSpec {
    CorpusSpec {
        dim: 32,
        roles: vec![RoleSpec::new(
            "ARG0",
            &["human", "animal", "plant", "something"],
        )],
        templates: vec![vec!["ARG0".into()]],
        cluster_role: "ARG0".into(),
        samples_per_cluster: 500,
        noise_std: 0.3,
        prototype_scale: 1.0,
        seed,
    }
}

/// A scaled-down corpus for fast tests and smoke runs.
pub fn small_spec(seed: u64) -> CorpusSpec {
    CorpusSpec {
        dim: 8,
        roles: vec![
            RoleSpec::new("ARG0", &["human", "animal"]),
            RoleSpec::new("V", &["is", "require"]),
            RoleSpec::new("ARG1", &["food", "water"]),
        ],
        templates: vec![
            vec!["ARG0".into(), "V".into()],
            vec!["ARG0".into(), "V".into(), "ARG1".into()],
        ],
        cluster_role: "ARG0".into(),
        samples_per_cluster: 24,
        noise_std: 0.2,
        prototype_scale: 1.0,
        seed,
    }
}
