use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::eventgraph::{graph_from_source, EventDependencyGraph};
use crate::numkernel::Rng;

use super::CloneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct Fragment {
    /// `<problem>/<file stem>`.
    pub id: String,
    pub label: String,
    pub path: PathBuf,
    pub graph: EventDependencyGraph,
    pub split: Split,
}

#[derive(Debug, Clone, Default)]
pub struct CloneDataset {
    pub fragments: Vec<Fragment>,
    /// Files that failed to parse or lower, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

/// How same-problem pairs are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairMode {
    /// Each `{i, j}` with `i < j` once.
    #[default]
    Unordered,
    /// Every `(i, j)` including `i == j`.
    OrderedWithSelf,
}

/// Which cross-problem pairs serve as negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeSampling {
    #[default]
    All,
    /// Seeded uniform sample without replacement, capped at the number available.
    Sample { count: usize, seed: u64 },
}

impl CloneDataset {
    /// Builds a dataset from in-memory `(problem, fragment name, source)` triples.
    pub fn from_sources<'a, I>(sources: I, train_ratio: f64, seed: u64) -> Result<Self, CloneError>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut problems: BTreeMap<String, Vec<(String, PathBuf, String)>> = BTreeMap::new();
        for (problem, name, src) in sources {
            let path = PathBuf::from(problem).join(format!("{name}.c"));
            problems.entry(problem.to_string()).or_default().push((name.to_string(), path, src.to_string()));
        }
        assemble(problems, train_ratio, seed)
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.fragments.len()).filter(|&i| self.fragments[i].split == split).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.fragments.iter().map(|f| f.label.as_str()).collect();
        out.dedup();
        out
    }

    /// Same-label pairs among `indices`.
    pub fn positive_pairs(&self, indices: &[usize], mode: PairMode) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                let keep = match mode {
                    PairMode::Unordered => a < b,
                    PairMode::OrderedWithSelf => true,
                };
                if keep && self.fragments[i].label == self.fragments[j].label {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Cross-label unordered pairs among `indices`.
    pub fn negative_pairs(&self, indices: &[usize], sampling: NegativeSampling) -> Vec<(usize, usize)> {
        let mut all = Vec::new();
        for (a, &i) in indices.iter().enumerate() {
            for &j in &indices[a + 1..] {
                if self.fragments[i].label != self.fragments[j].label {
                    all.push((i, j));
                }
            }
        }
        match sampling {
            NegativeSampling::All => all,
            NegativeSampling::Sample { count, seed } => {
                let mut rng = Rng::new(seed);
                let take = count.min(all.len());
                for k in 0..take {
                    let pick = k + rng.below(all.len() - k);
                    all.swap(k, pick);
                }
                all.truncate(take);
                all.sort_unstable();
                all
            }
        }
    }

    /// Labelled evaluation pairs of one split: positives first, then negatives.
    pub fn labelled_pairs(&self, split: Split, mode: PairMode, sampling: NegativeSampling) -> Vec<(usize, usize, bool)> {
        let idx = self.indices(split);
        let pos = self.positive_pairs(&idx, mode).into_iter().map(|(a, b)| (a, b, true));
        let neg = self.negative_pairs(&idx, sampling).into_iter().map(|(a, b)| (a, b, false));
        pos.chain(neg).collect()
    }
}

/// Reads `<root>/<problem>/<fragment>.c`, parses every fragment and splits
/// each problem at `train_ratio` after a seeded shuffle.
pub fn load_dataset(root: &Path, train_ratio: f64, seed: u64) -> Result<CloneDataset, CloneError> {
    if !root.is_dir() {
        return Err(CloneError::Dataset(format!("{} is not a directory", root.display())));
    }
    let mut problems: BTreeMap<String, Vec<(String, PathBuf, String)>> = BTreeMap::new();
    for entry in WalkDir::new(root).min_depth(2).max_depth(2).sort_by_file_name() {
        let entry = entry.map_err(|e| CloneError::Dataset(e.to_string()))?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some("c") {
            continue;
        }
        let problem = path.parent().and_then(|p| p.file_name()).and_then(|n| n.to_str());
        let name = path.file_stem().and_then(|n| n.to_str());
        let (Some(problem), Some(name)) = (problem, name) else { continue };
        let bytes = std::fs::read(path)?;
        let src = String::from_utf8_lossy(&bytes).into_owned();
        problems.entry(problem.to_string()).or_default().push((name.to_string(), path.to_path_buf(), src));
    }
    if problems.is_empty() {
        return Err(CloneError::Dataset(format!("no fragments under {}", root.display())));
    }
    assemble(problems, train_ratio, seed)
}

fn assemble(
    problems: BTreeMap<String, Vec<(String, PathBuf, String)>>,
    train_ratio: f64,
    seed: u64,
) -> Result<CloneDataset, CloneError> {
    if !(0.0..=1.0).contains(&train_ratio) {
        return Err(CloneError::Dataset(format!("split ratio {train_ratio} outside [0, 1]")));
    }
    if problems.is_empty() {
        return Err(CloneError::Dataset("dataset is empty".into()));
    }
    let root = Rng::new(seed);
    let mut ds = CloneDataset::default();
    for (p_index, (label, files)) in problems.into_iter().enumerate() {
        let mut parsed = Vec::new();
        for (name, path, src) in files {
            match graph_from_source(&src) {
                Ok(graph) if !graph.is_empty() => parsed.push((name, path, graph)),
                Ok(_) => {
                    log::warn!("{}: no events, skipped", path.display());
                    ds.skipped.push((path, "fragment produced no events".into()));
                }
                Err(e) => {
                    log::warn!("{}: {e}, skipped", path.display());
                    ds.skipped.push((path, e.to_string()));
                }
            }
        }
        if parsed.len() < 2 {
            return Err(CloneError::Dataset(format!("problem `{label}` has {} usable fragments, need 2", parsed.len())));
        }
        let mut order: Vec<usize> = (0..parsed.len()).collect();
        root.fork(p_index as u64).shuffle(&mut order);
        let n_train = (parsed.len() as f64 * train_ratio).round() as usize;
        let mut split = vec![Split::Test; parsed.len()];
        for &i in &order[..n_train] {
            split[i] = Split::Train;
        }
        for ((name, path, graph), split) in parsed.into_iter().zip(split) {
            ds.fragments.push(Fragment { id: format!("{label}/{name}"), label: label.clone(), path, graph, split });
        }
    }
    Ok(ds)
}
