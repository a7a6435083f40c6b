//! Deterministic proxy classifiers for measuring how separable labelled
//! regions are in a vector space. Three classical models with fixed
//! hyper-parameters: k-nearest-neighbour, Gaussian naive Bayes, and a
//! one-vs-rest linear SVM trained by full-batch subgradient descent. All
//! tie-breaking is explicit, so repeated runs agree to the bit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::euclidean_distance;
use crate::vector::LatentVector;

/// Which proxy classifier to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Knn,
    GaussianNb,
    LinearSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Knn,
        ClassifierKind::GaussianNb,
        ClassifierKind::LinearSvm,
    ];

    /// Stable identifier used in report tables.
    pub fn label(&self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianNb => "gaussian-nb",
            ClassifierKind::LinearSvm => "linear-svm",
        }
    }
}

pub const KNN_NEIGHBOURS: usize = 5;
pub const SVM_LAMBDA: f64 = 1e-3;
pub const SVM_EPOCHS: usize = 500;
pub const SVM_BASE_LR: f64 = 0.1;
const NB_SMOOTHING_FACTOR: f64 = 1e-9;

/// A fitted classifier. Construction is fitting, so an unfitted model
/// cannot be asked to predict.
#[derive(Debug, Clone)]
pub enum Classifier {
    Knn {
        train: Vec<LatentVector>,
        labels: Vec<String>,
    },
    GaussianNb {
        classes: Vec<NbClass>,
    },
    LinearSvm {
        classes: Vec<SvmClass>,
    },
}

#[derive(Debug, Clone)]
pub struct NbClass {
    pub label: String,
    pub log_prior: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SvmClass {
    pub label: String,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Classifier {
    pub fn fit(kind: ClassifierKind, xs: &[LatentVector], ys: &[String]) -> Result<Classifier> {
        if xs.is_empty() {
            return Err(Error::InvalidInput("training set is empty".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "{} training vectors but {} labels",
                xs.len(),
                ys.len()
            )));
        }
        let dim = xs[0].dim();
        for x in xs {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: "classifier training set".into(),
                    expected: dim,
                    got: x.dim(),
                });
            }
        }
        match kind {
            ClassifierKind::Knn => Ok(Classifier::Knn {
                train: xs.to_vec(),
                labels: ys.to_vec(),
            }),
            ClassifierKind::GaussianNb => fit_gaussian_nb(xs, ys),
            ClassifierKind::LinearSvm => fit_linear_svm(xs, ys),
        }
    }

    pub fn predict(&self, x: &LatentVector) -> Result<&str> {
        self.check_dim(x)?;
        match self {
            Classifier::Knn { train, labels } => Ok(knn_predict(train, labels, x)),
            Classifier::GaussianNb { classes } => {
                // Ties keep the lexicographically first class; list is sorted.
                let mut best = &classes[0];
                let mut best_score = nb_log_likelihood(best, x);
                for class in &classes[1..] {
                    let score = nb_log_likelihood(class, x);
                    if score > best_score {
                        best = class;
                        best_score = score;
                    }
                }
                Ok(&best.label)
            }
            Classifier::LinearSvm { classes } => {
                let mut best = &classes[0];
                let mut best_score = svm_score(best, x);
                for class in &classes[1..] {
                    let score = svm_score(class, x);
                    if score > best_score {
                        best = class;
                        best_score = score;
                    }
                }
                Ok(&best.label)
            }
        }
    }

    fn check_dim(&self, x: &LatentVector) -> Result<()> {
        let expected = match self {
            Classifier::Knn { train, .. } => train[0].dim(),
            Classifier::GaussianNb { classes } => classes[0].means.len(),
            Classifier::LinearSvm { classes } => classes[0].weights.len(),
        };
        if x.dim() != expected {
            return Err(Error::DimensionMismatch {
                context: "classifier query".into(),
                expected,
                got: x.dim(),
            });
        }
        Ok(())
    }
}

/// Majority vote over the 5 nearest training points (all of them when the
/// training set is smaller). Ties on count fall to the label with the
/// smallest summed distance, then to the lexicographically first label.
fn knn_predict<'a>(train: &[LatentVector], labels: &'a [String], x: &LatentVector) -> &'a str {
    let mut order: Vec<usize> = (0..train.len()).collect();
    let dist: Vec<f64> = train
        .iter()
        .map(|t| euclidean_distance(t.as_slice(), x.as_slice()))
        .collect();
    order.sort_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap().then(a.cmp(&b)));
    order.truncate(KNN_NEIGHBOURS);

    let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &i in &order {
        let entry = votes.entry(&labels[i]).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += dist[i];
    }
    // BTreeMap iteration visits labels in lexicographic order, so full
    // ties keep the first label seen.
    let mut winner: Option<(&'a str, usize, f64)> = None;
    for (&label, &(count, sum)) in &votes {
        let better = match winner {
            None => true,
            Some((_, c, s)) => count > c || (count == c && sum < s),
        };
        if better {
            winner = Some((label, count, sum));
        }
    }
    winner.unwrap().0
}

fn group_by_label(ys: &[String]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, y) in ys.iter().enumerate() {
        groups.entry(y).or_default().push(i);
    }
    groups
}

fn fit_gaussian_nb(xs: &[LatentVector], ys: &[String]) -> Result<Classifier> {
    let dim = xs[0].dim();
    let n = xs.len() as f64;

    // Smoothing floor: 1e-9 times the largest per-dimension variance of
    // the pooled data, so constant features cannot zero a denominator.
    let mut pooled_mean = vec![0.0; dim];
    for x in xs {
        for (m, v) in pooled_mean.iter_mut().zip(x.iter()) {
            *m += v / n;
        }
    }
    let mut max_var = 0.0f64;
    for d in 0..dim {
        let var = xs
            .iter()
            .map(|x| (x[d] - pooled_mean[d]).powi(2))
            .sum::<f64>()
            / n;
        max_var = max_var.max(var);
    }
    let smoothing = NB_SMOOTHING_FACTOR * max_var;

    let mut classes = Vec::new();
    for (label, members) in group_by_label(ys) {
        let m = members.len() as f64;
        let mut means = vec![0.0; dim];
        for &i in &members {
            for (mean, v) in means.iter_mut().zip(xs[i].iter()) {
                *mean += v / m;
            }
        }
        let mut variances = vec![0.0; dim];
        for d in 0..dim {
            let var = members
                .iter()
                .map(|&i| (xs[i][d] - means[d]).powi(2))
                .sum::<f64>()
                / m;
            variances[d] = var + smoothing;
        }
        if variances.iter().any(|&v| v <= 0.0) {
            return Err(Error::Degenerate(format!(
                "class {label} has zero variance in every direction and the \
                 pooled data offers no smoothing scale"
            )));
        }
        classes.push(NbClass {
            label: label.to_string(),
            log_prior: (m / n).ln(),
            means,
            variances,
        });
    }
    Ok(Classifier::GaussianNb { classes })
}

fn nb_log_likelihood(class: &NbClass, x: &LatentVector) -> f64 {
    let mut score = class.log_prior;
    for ((&v, &mean), &var) in x.iter().zip(&class.means).zip(&class.variances) {
        score += -0.5 * (std::f64::consts::TAU * var).ln() - (v - mean).powi(2) / (2.0 * var);
    }
    score
}

/// One-vs-rest hinge loss, full-batch subgradient descent with the step
/// schedule lr_t = 0.1 / sqrt(t). The objective per class is
/// lambda/2 |w|^2 + mean_i max(0, 1 - y_i (w.x_i + b)).
fn fit_linear_svm(xs: &[LatentVector], ys: &[String]) -> Result<Classifier> {
    let dim = xs[0].dim();
    let n = xs.len() as f64;
    let mut classes = Vec::new();
    for label in group_by_label(ys).into_keys() {
        let signs: Vec<f64> = ys
            .iter()
            .map(|y| if y == label { 1.0 } else { -1.0 })
            .collect();
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        for t in 1..=SVM_EPOCHS {
            let lr = SVM_BASE_LR / (t as f64).sqrt();
            let mut grad_w: Vec<f64> = w.iter().map(|wi| SVM_LAMBDA * wi).collect();
            let mut grad_b = 0.0;
            for (x, &sign) in xs.iter().zip(&signs) {
                let margin = sign * (dot_slice(&w, x.as_slice()) + b);
                if margin < 1.0 {
                    for (g, &v) in grad_w.iter_mut().zip(x.iter()) {
                        *g -= sign * v / n;
                    }
                    grad_b -= sign / n;
                }
            }
            for (wi, g) in w.iter_mut().zip(&grad_w) {
                *wi -= lr * g;
            }
            b -= lr * grad_b;
        }
        classes.push(SvmClass {
            label: label.to_string(),
            weights: w,
            bias: b,
        });
    }
    Ok(Classifier::LinearSvm { classes })
}

fn svm_score(class: &SvmClass, x: &LatentVector) -> f64 {
    dot_slice(&class.weights, x.as_slice()) + class.bias
}

fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
