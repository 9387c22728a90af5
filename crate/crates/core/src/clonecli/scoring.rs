use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::model::{embed_program, ModelParams, ProgramVector};
use crate::numkernel::cosine;

use super::{CloneDataset, CloneError};

pub const DEFAULT_THETA: f64 = 0.70;
pub const DEFAULT_FUSION_THETA: f64 = 0.50;
pub const DEFAULT_BETA: f64 = 0.60;

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, CloneError> {
    if u.len() != v.len() {
        return Err(CloneError::Config(format!("vector lengths differ: {} vs {}", u.len(), v.len())));
    }
    cosine(u, v).map(|c| c.clamp(-1.0, 1.0)).ok_or(CloneError::DegenerateVector)
}

/// Clone verdict: similarity strictly above `theta`.
pub fn classify_pair(u: &[f64], v: &[f64], theta: f64) -> Result<bool, CloneError> {
    Ok(cosine_similarity(u, v)? > theta)
}

/// `β·s1 + (1−β)·s2`.
pub fn fuse_scores(s1: f64, s2: f64, beta: f64) -> f64 {
    beta * s1 + (1.0 - beta) * s2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairVerdict {
    /// Fragment indices.
    pub pair: (usize, usize),
    pub similarity: f64,
    pub predicted: bool,
    pub label: bool,
}

impl PairVerdict {
    pub fn new(pair: (usize, usize), similarity: f64, theta: f64, label: bool) -> Self {
        PairVerdict { pair, similarity, predicted: similarity > theta, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// False when the metric's denominator was zero and it is reported as 0.
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f1_defined: bool,
    pub theta: f64,
    pub beta: Option<f64>,
    pub second_model: Option<String>,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn predicted_positive(&self) -> usize {
        self.true_pos + self.false_pos
    }

    /// `theta beta TP FP FN TN precision recall f1`; beta prints as `-` when absent.
    pub fn record_line(&self) -> String {
        let beta = self.beta.map_or_else(|| "-".to_string(), |b| format!("{b:.4}"));
        format!(
            "{:.4} {beta} {} {} {} {} {:.6} {:.6} {:.6}",
            self.theta, self.true_pos, self.false_pos, self.false_neg, self.true_neg, self.precision, self.recall, self.f1
        )
    }
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flag = |defined: bool| if defined { "" } else { " (undefined)" };
        writeln!(f, "theta      {:.4}", self.theta)?;
        if let Some(b) = self.beta {
            writeln!(f, "beta       {b:.4}")?;
        }
        if let Some(m) = &self.second_model {
            writeln!(f, "model 2    {m}")?;
        }
        writeln!(f, "TP {}  FP {}  FN {}  TN {}", self.true_pos, self.false_pos, self.false_neg, self.true_neg)?;
        writeln!(f, "precision  {:.4}{}", self.precision, flag(self.precision_defined))?;
        writeln!(f, "recall     {:.4}{}", self.recall, flag(self.recall_defined))?;
        write!(f, "f1         {:.4}{}", self.f1, flag(self.f1_defined))
    }
}

/// Confusion counts and precision, recall and F1.
pub fn evaluate(verdicts: &[PairVerdict], theta: f64) -> Result<EvalReport, CloneError> {
    if verdicts.is_empty() {
        return Err(CloneError::EmptyEval);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for v in verdicts {
        match (v.predicted, v.label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den > 0 { (num as f64 / den as f64, true) } else { (0.0, false) };
    let (precision, precision_defined) = ratio(tp, tp + fp);
    let (recall, recall_defined) = ratio(tp, tp + fn_);
    let f1_defined = precision_defined && recall_defined && precision + recall > 0.0;
    let f1 = if f1_defined { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(EvalReport {
        true_pos: tp,
        false_pos: fp,
        false_neg: fn_,
        true_neg: tn,
        precision,
        recall,
        f1,
        precision_defined,
        recall_defined,
        f1_defined,
        theta,
        beta: None,
        second_model: None,
    })
}

/// A labelled pair with one or two model similarities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPair {
    pub pair: (usize, usize),
    pub score: f64,
    pub second: Option<f64>,
    pub label: bool,
}

impl ScoredPair {
    fn fused(&self, beta: Option<f64>) -> f64 {
        match (self.second, beta) {
            (Some(s2), Some(b)) => fuse_scores(self.score, s2, b),
            _ => self.score,
        }
    }
}

pub fn verdicts(pairs: &[ScoredPair], theta: f64, beta: Option<f64>) -> Vec<PairVerdict> {
    pairs.iter().map(|p| PairVerdict::new(p.pair, p.fused(beta), theta, p.label)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub reports: Vec<EvalReport>,
    /// Index of the first report with the highest F1.
    pub best: usize,
}

/// One report per `(β, θ)` grid point over precomputed scores. The β grid
/// applies only when pairs carry a second score.
pub fn sweep(pairs: &[ScoredPair], thetas: &[f64], betas: Option<&[f64]>) -> Result<SweepTable, CloneError> {
    if thetas.is_empty() || betas.is_some_and(|b| b.is_empty()) {
        return Err(CloneError::Config("sweep grids must be non-empty".into()));
    }
    let fused = pairs.first().is_some_and(|p| p.second.is_some());
    let beta_points: Vec<Option<f64>> = match betas {
        Some(b) if fused => b.iter().map(|&x| Some(x)).collect(),
        _ => vec![None],
    };
    let mut reports = Vec::new();
    for beta in &beta_points {
        for &theta in thetas {
            let mut r = evaluate(&verdicts(pairs, theta, *beta), theta)?;
            r.beta = *beta;
            reports.push(r);
        }
    }
    let best = reports
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.f1 > reports[best].f1 { i } else { best });
    Ok(SweepTable { reports, best })
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, ...`.
pub fn parse_grid(grid: &str) -> Result<Vec<f64>, CloneError> {
    let bad = || CloneError::Config(format!("grid `{grid}` is not start:stop:step"));
    let parts: Vec<f64> = grid.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || b < a || ![a, b, step].iter().all(|x| x.is_finite()) {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + i as f64 * step).collect())
}

/// Program vectors of every fragment, computed in parallel.
pub fn embed_fragments(dataset: &CloneDataset, params: &ModelParams) -> Result<Vec<ProgramVector>, CloneError> {
    dataset.fragments.par_iter().map(|f| embed_program(&f.graph, params).map_err(CloneError::from)).collect()
}

/// Similarities for labelled pairs, with an optional second model.
pub fn score_pairs(
    pairs: &[(usize, usize, bool)],
    vectors: &[ProgramVector],
    second: Option<&[ProgramVector]>,
) -> Result<Vec<ScoredPair>, CloneError> {
    pairs
        .par_iter()
        .map(|&(a, b, label)| {
            let score = cosine_similarity(&vectors[a].values, &vectors[b].values)?;
            let second = second.map(|v| cosine_similarity(&v[a].values, &v[b].values)).transpose()?;
            Ok(ScoredPair { pair: (a, b), score, second, label })
        })
        .collect()
}

/// Corpus entries at or above `theta`, most similar first, ties by id.
pub fn detect(target: &ProgramVector, corpus: &[(String, ProgramVector)], theta: f64) -> Result<Vec<(String, f64)>, CloneError> {
    let mut hits = Vec::new();
    for (id, v) in corpus {
        let s = cosine_similarity(&target.values, &v.values)?;
        if s >= theta {
            hits.push((id.clone(), s));
        }
    }
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    Ok(hits)
}

/// One line per fragment: id, label, then the vector entries.
pub fn export_embeddings<W: Write>(
    dataset: &CloneDataset,
    vectors: &[ProgramVector],
    mut out: W,
) -> Result<(), CloneError> {
    for (f, v) in dataset.fragments.iter().zip(vectors) {
        write!(out, "{}\t{}", f.id, f.label)?;
        for x in &v.values {
            write!(out, "\t{x:e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
