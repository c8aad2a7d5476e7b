//! Method comparison harness: tree vs. global POD vs. tangent-space
//! interpolation on a train/test split of a snapshot archive.

mod correlation;

pub use correlation::{
    correlation_diagnostic, correlation_of, distance_pairs, pearson, write_scatter, DistancePair,
    ZERO_VARIANCE_TOL,
};

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::load_archive;
use crate::error::{Error, Result};
use crate::grassmann::TangentInterpolator;
use crate::matrix::{DenseMatrix, ParamPoint};
use crate::pod::{pod_basis, reconstruction_error, PodBasis, DEFAULT_OVERSAMPLE};
use crate::snapshot::SnapshotSet;
use crate::tree::{self, TreeConfig};

pub const REPORT_FILE: &str = "report.json";
pub const ERRORS_FILE: &str = "errors.csv";
pub const SCATTER_FILE: &str = "scatter.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tree,
    Global,
    Interp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tree, Method::Global, Method::Interp];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Tree => "tree",
            Method::Global => "global",
            Method::Interp => "interp",
        }
    }

    /// Parses a comma-separated list such as `tree,global`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out: Vec<Method> = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidConfig("method list is empty".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "tree" => Ok(Method::Tree),
            "global" => Ok(Method::Global),
            "interp" => Ok(Method::Interp),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}; expected tree, global or interp"
            ))),
        }
    }
}

/// How the training entries are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainSelection {
    /// Explicit ids; everything else is the test set.
    Ids(Vec<String>),
    /// A seeded random fraction of the archive.
    Fraction { frac: f64, seed: u64 },
}

/// Which training entries serve as interpolation reference points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpReference {
    Id(String),
    All,
}

impl FromStr for InterpReference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" => Err(Error::InvalidConfig("empty interpolation reference".into())),
            "all" => Ok(InterpReference::All),
            id => Ok(InterpReference::Id(id.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub archive: PathBuf,
    pub train: TrainSelection,
    pub methods: Vec<Method>,
    pub rank: usize,
    pub min_leaf: usize,
    pub interp_ref: InterpReference,
    /// Randomized SVD for wide tree nodes.
    pub rsvd: bool,
    pub oversample: usize,
    pub seed: u64,
    /// Also compute the distance-correlation diagnostic over the archive.
    pub correlation: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(archive: impl Into<PathBuf>, train: TrainSelection, rank: usize, min_leaf: usize) -> Self {
        ExperimentConfig {
            archive: archive.into(),
            train,
            methods: Method::ALL.to_vec(),
            rank,
            min_leaf,
            interp_ref: InterpReference::All,
            rsvd: false,
            oversample: DEFAULT_OVERSAMPLE,
            seed: 0,
            correlation: false,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("method list is empty".into()));
        }
        if let TrainSelection::Fraction { frac, .. } = self.train {
            if !(frac > 0.0 && frac < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "train fraction must lie in (0, 1), got {frac}"
                )));
            }
        }
        self.tree_config().validate()
    }

    pub fn tree_config(&self) -> TreeConfig {
        let cfg = TreeConfig::new(self.rank, self.min_leaf);
        if self.rsvd {
            cfg.with_rsvd(self.oversample, self.seed)
        } else {
            cfg
        }
    }
}

/// Training ids in archive order.
pub fn select_train(set: &SnapshotSet, selection: &TrainSelection) -> Result<Vec<String>> {
    match selection {
        TrainSelection::Ids(ids) => {
            // validates existence and uniqueness
            set.split_train_test(ids)?;
            Ok(set
                .ids()
                .filter(|id| ids.iter().any(|t| t == id))
                .map(str::to_string)
                .collect())
        }
        TrainSelection::Fraction { frac, seed } => {
            let n = set.len();
            if n < 2 {
                return Err(Error::TooFewPoints { needed: 2, got: n });
            }
            let take = ((frac * n as f64).round() as usize).clamp(1, n - 1);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut chosen = order[..take].to_vec();
            chosen.sort_unstable();
            Ok(chosen.into_iter().map(|i| set.entries()[i].id.clone()).collect())
        }
    }
}

/// Pairwise outcome counts; `first + second + ties` is the number of test
/// entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinCount {
    pub first: usize,
    pub second: usize,
    pub ties: usize,
}

impl WinCount {
    fn record(&mut self, a: f64, b: f64) {
        if a < b {
            self.first += 1;
        } else if b < a {
            self.second += 1;
        } else {
            self.ties += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.first + self.second + self.ties
    }
}

/// Interpolation about one reference for one test entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpResult {
    pub reference: String,
    /// `None` when the log map at this reference is undefined.
    pub error: Option<f64>,
    pub stable: bool,
    /// Largest principal angle of the interpolated tangent vector.
    pub max_angle: Option<f64>,
    pub failure: Option<String>,
}

/// Statistics over the stable interpolation results of one test entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpStats {
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    pub stable: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub id: String,
    pub lambda: Vec<f64>,
    pub tree: Option<f64>,
    pub global: Option<f64>,
    pub interp: Vec<InterpResult>,
    /// `None` if interpolation was not run or no reference was stable.
    pub interp_stats: Option<InterpStats>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tests: usize,
    /// `first` = tree wins.
    pub tree_vs_global: Option<WinCount>,
    /// Against the mean stable interpolation error; an entry with no stable
    /// interpolation counts as a win for the other method.
    pub tree_vs_interp: Option<WinCount>,
    pub global_vs_interp: Option<WinCount>,
    pub mean_tree: Option<f64>,
    pub mean_global: Option<f64>,
    pub mean_interp: Option<f64>,
    pub interp_unstable: usize,
    pub interp_failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub leaves: usize,
    pub depth: usize,
    pub splits: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rank: usize,
    pub min_leaf: usize,
    pub methods: Vec<Method>,
    pub train_ids: Vec<String>,
    pub references: Vec<String>,
    pub tree: Option<TreeSummary>,
    pub results: Vec<TestResult>,
    pub summary: Summary,
    pub correlation: Option<f64>,
}

/// Loads the archive, runs the comparison and writes the report files if
/// an output directory is configured.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let set = load_archive(&cfg.archive)?;
    let report = compare(&set, cfg)?;
    if let Some(out) = &cfg.out {
        write_report(&report, out)?;
    }
    Ok(report)
}

/// Runs the comparison on an in-memory snapshot set; `cfg.archive` and
/// `cfg.out` are ignored.
pub fn compare(set: &SnapshotSet, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let train_ids = select_train(set, &cfg.train)?;
    let (train, test) = set.split_train_test(&train_ids)?;
    if test.is_empty() {
        return Err(Error::InvalidConfig("empty test set".into()));
    }
    let has = |m| cfg.methods.contains(&m);

    let fitted = if has(Method::Tree) {
        Some(tree::fit(&train, &cfg.tree_config())?)
    } else {
        None
    };

    let global = if has(Method::Global) {
        let blocks: Vec<&DenseMatrix> = train.entries().iter().map(|e| &e.snapshots).collect();
        Some(pod_basis(&DenseMatrix::hconcat(&blocks)?, cfg.rank)?)
    } else {
        None
    };

    let need_bases = has(Method::Interp) || cfg.correlation;
    let train_bases: Vec<PodBasis> = if need_bases {
        train
            .entries()
            .par_iter()
            .map(|e| pod_basis(&e.snapshots, cfg.rank))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let references: Vec<usize> = if has(Method::Interp) {
        match &cfg.interp_ref {
            InterpReference::All => (0..train.len()).collect(),
            InterpReference::Id(id) => vec![train
                .entries()
                .iter()
                .position(|e| &e.id == id)
                .ok_or_else(|| Error::UnknownId(format!("interpolation reference {id} is not a training id")))?],
        }
    } else {
        Vec::new()
    };
    let pairs: Vec<(ParamPoint, PodBasis)> = train
        .entries()
        .iter()
        .zip(&train_bases)
        .map(|(e, b)| (e.lambda.clone(), b.clone()))
        .collect();
    // an undefined log map disqualifies one reference, not the whole run
    let interpolators: Vec<std::result::Result<TangentInterpolator, String>> = references
        .par_iter()
        .map(|&k| match TangentInterpolator::new(&pairs, k) {
            Ok(i) => Ok(Ok(i)),
            Err(e @ Error::LogMapUndefined { .. }) => Ok(Err(e.to_string())),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let results: Vec<TestResult> = test
        .entries()
        .par_iter()
        .map(|entry| {
            let d = &entry.snapshots;
            let tree_err = match &fitted {
                Some(t) => Some(reconstruction_error(d, t.predict(&entry.lambda)?)?),
                None => None,
            };
            let global_err = match &global {
                Some(g) => Some(reconstruction_error(d, g)?),
                None => None,
            };
            let mut interp = Vec::with_capacity(references.len());
            for (&k, ip) in references.iter().zip(&interpolators) {
                let reference = train.entries()[k].id.clone();
                interp.push(match ip {
                    Ok(ip) => {
                        let (basis, flag) = ip.predict(&entry.lambda)?;
                        InterpResult {
                            reference,
                            error: Some(reconstruction_error(d, &basis)?),
                            stable: flag.stable,
                            max_angle: Some(flag.max_angle),
                            failure: None,
                        }
                    }
                    Err(msg) => InterpResult {
                        reference,
                        error: None,
                        stable: false,
                        max_angle: None,
                        failure: Some(msg.clone()),
                    },
                });
            }
            let interp_stats = interp_stats(&interp);
            Ok(TestResult {
                id: entry.id.clone(),
                lambda: entry.lambda.coords().to_vec(),
                tree: tree_err,
                global: global_err,
                interp,
                interp_stats,
            })
        })
        .collect::<Result<_>>()?;

    let correlation = if cfg.correlation {
        let all_bases = set
            .entries()
            .par_iter()
            .map(|e| match train.entries().iter().position(|t| t.id == e.id) {
                Some(k) => Ok(train_bases[k].clone()),
                None => pod_basis(&e.snapshots, cfg.rank),
            })
            .collect::<Result<Vec<_>>>()?;
        let pairs = correlation::distance_pairs_with(set, &all_bases)?;
        Some(correlation_of(&pairs)?)
    } else {
        None
    };

    Ok(ExperimentReport {
        rank: cfg.rank,
        min_leaf: cfg.min_leaf,
        methods: cfg.methods.clone(),
        train_ids,
        references: references.iter().map(|&k| train.entries()[k].id.clone()).collect(),
        tree: fitted.as_ref().map(|t| TreeSummary {
            leaves: t.num_leaves(),
            depth: t.depth(),
            splits: t.splits(),
        }),
        summary: summarize(&results, &cfg.methods),
        results,
        correlation,
    })
}

fn interp_stats(results: &[InterpResult]) -> Option<InterpStats> {
    let stable: Vec<f64> = results
        .iter()
        .filter(|r| r.stable)
        .filter_map(|r| r.error)
        .collect();
    if stable.is_empty() {
        return None;
    }
    Some(InterpStats {
        best: stable.iter().copied().fold(f64::INFINITY, f64::min),
        mean: stable.iter().sum::<f64>() / stable.len() as f64,
        worst: stable.iter().copied().fold(0.0, f64::max),
        stable: stable.len(),
    })
}

fn summarize(results: &[TestResult], methods: &[Method]) -> Summary {
    let has = |m| methods.contains(&m);
    let tree = |r: &TestResult| r.tree.unwrap_or(f64::INFINITY);
    let global = |r: &TestResult| r.global.unwrap_or(f64::INFINITY);
    let interp = |r: &TestResult| r.interp_stats.map_or(f64::INFINITY, |s| s.mean);
    let count = |a: &dyn Fn(&TestResult) -> f64, b: &dyn Fn(&TestResult) -> f64| {
        let mut w = WinCount::default();
        for r in results {
            w.record(a(r), b(r));
        }
        w
    };
    let mean = |f: &dyn Fn(&TestResult) -> Option<f64>| {
        let v: Vec<f64> = results.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Summary {
        tests: results.len(),
        tree_vs_global: (has(Method::Tree) && has(Method::Global)).then(|| count(&tree, &global)),
        tree_vs_interp: (has(Method::Tree) && has(Method::Interp)).then(|| count(&tree, &interp)),
        global_vs_interp: (has(Method::Global) && has(Method::Interp)).then(|| count(&global, &interp)),
        mean_tree: mean(&|r| r.tree),
        mean_global: mean(&|r| r.global),
        mean_interp: mean(&|r| r.interp_stats.map(|s| s.mean)),
        interp_unstable: results
            .iter()
            .flat_map(|r| &r.interp)
            .filter(|i| i.error.is_some() && !i.stable)
            .count(),
        interp_failed: results
            .iter()
            .flat_map(|r| &r.interp)
            .filter(|i| i.error.is_none())
            .count(),
    }
}

struct ErrorRow<'a> {
    id: &'a str,
    method: &'static str,
    reference: &'a str,
    error: Option<f64>,
    stable: Option<bool>,
}

/// Writes `report.json` and `errors.csv` into `dir`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join(ERRORS_FILE);
    let d = report.results.first().map_or(1, |r| r.lambda.len());
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| correlation::csv_error(&csv_path, e))?;
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|j| if d == 1 { "lambda".to_string() } else { format!("lambda{j}") }));
    header.extend(["method", "reference", "error", "stable"].map(String::from));
    w.write_record(&header).map_err(|e| correlation::csv_error(&csv_path, e))?;

    // shortest round-trip scientific notation; errors span many decades
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in &report.results {
        let mut rows: Vec<ErrorRow<'_>> = Vec::new();
        if report.methods.contains(&Method::Tree) {
            rows.push(ErrorRow { id: &r.id, method: "tree", reference: "", error: r.tree, stable: None });
        }
        if report.methods.contains(&Method::Global) {
            rows.push(ErrorRow { id: &r.id, method: "global", reference: "", error: r.global, stable: None });
        }
        for i in &r.interp {
            rows.push(ErrorRow {
                id: &r.id,
                method: "interp",
                reference: &i.reference,
                error: i.error,
                stable: Some(i.stable),
            });
        }
        for row in rows {
            let mut rec = vec![row.id.to_string()];
            rec.extend(r.lambda.iter().map(|v| v.to_string()));
            rec.push(row.method.to_string());
            rec.push(row.reference.to_string());
            rec.push(fmt_opt(row.error));
            rec.push(row.stable.map(|s| s.to_string()).unwrap_or_default());
            w.write_record(&rec).map_err(|e| correlation::csv_error(&csv_path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::SnapshotEntry;

    fn toy_set() -> SnapshotSet {
        // three distinct one-dimensional modes blended by the parameter
        let entries = (0..8)
            .map(|k| {
                let lam = k as f64 / 7.0;
                let snaps = DenseMatrix::from_fn(12, 6, |i, j| {
                    let x = i as f64 / 11.0;
                    let t = j as f64 / 5.0;
                    (1.0 - lam) * (std::f64::consts::PI * x).sin() * (1.0 + t)
                        + lam * (2.0 * std::f64::consts::PI * x).sin() * (1.0 - 0.5 * t)
                        + 0.1 * (3.0 * x + t * lam).cos()
                });
                SnapshotEntry {
                    id: format!("p{k}"),
                    lambda: ParamPoint::scalar(lam).unwrap(),
                    snapshots: snaps,
                }
            })
            .collect();
        SnapshotSet::from_entries(entries).unwrap()
    }

    fn ids(v: &[&str]) -> TrainSelection {
        TrainSelection::Ids(v.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn method_list_parsing() {
        assert_eq!(Method::parse_list("interp,tree,tree").unwrap(), vec![Method::Tree, Method::Interp]);
        assert!(Method::parse_list("").is_err());
        assert!(Method::parse_list("tree,svd").is_err());
    }

    #[test]
    fn compare_produces_consistent_report() {
        let set = toy_set();
        let cfg = ExperimentConfig::new("unused", ids(&["p0", "p2", "p4", "p7"]), 2, 2);
        let report = compare(&set, &cfg).unwrap();
        assert_eq!(report.results.len(), 4);
        assert_eq!(report.references, vec!["p0", "p2", "p4", "p7"]);
        let s = &report.summary;
        for w in [s.tree_vs_global, s.tree_vs_interp, s.global_vs_interp] {
            assert_eq!(w.unwrap().total(), 4);
        }
        for r in &report.results {
            assert!(r.tree.unwrap() >= 0.0 && r.global.unwrap() >= 0.0);
            if let Some(st) = r.interp_stats {
                assert!(st.best <= st.mean && st.mean <= st.worst);
            }
        }
    }

    #[test]
    fn full_rank_global_on_training_data_is_exact() {
        let set = toy_set();
        let mut cfg = ExperimentConfig::new("unused", ids(&["p0", "p1", "p2", "p3"]), 12, 1);
        cfg.methods = vec![Method::Global];
        let report = compare(&set, &cfg).unwrap();
        for r in &report.results {
            assert!(r.global.unwrap() < 1e-20);
        }
    }

    #[test]
    fn single_leaf_tree_matches_global() {
        let set = toy_set();
        let cfg = ExperimentConfig::new("unused", ids(&["p0", "p2", "p5", "p7"]), 2, 4);
        let report = compare(&set, &cfg).unwrap();
        assert_eq!(report.tree.as_ref().unwrap().leaves, 1);
        for r in &report.results {
            assert!((r.tree.unwrap() - r.global.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fraction_selection_is_seeded_and_ordered() {
        let set = toy_set();
        let sel = TrainSelection::Fraction { frac: 0.5, seed: 7 };
        let a = select_train(&set, &sel).unwrap();
        assert_eq!(a, select_train(&set, &sel).unwrap());
        assert_eq!(a.len(), 4);
        let positions: Vec<usize> = a.iter().map(|id| id[1..].parse().unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_test_set_and_bad_reference_are_rejected() {
        let set = toy_set();
        let all: Vec<String> = set.ids().map(str::to_string).collect();
        let cfg = ExperimentConfig::new("unused", TrainSelection::Ids(all), 2, 2);
        assert!(compare(&set, &cfg).is_err());
        let mut cfg = ExperimentConfig::new("unused", ids(&["p0", "p7"]), 2, 1);
        cfg.interp_ref = InterpReference::Id("p3".into());
        assert!(matches!(compare(&set, &cfg), Err(Error::UnknownId(_))));
    }

    #[test]
    fn report_files_are_written() {
        let set = toy_set();
        let mut cfg = ExperimentConfig::new("unused", ids(&["p0", "p3", "p7"]), 2, 1);
        cfg.interp_ref = InterpReference::Id("p3".into());
        let report = compare(&set, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&report, dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join(ERRORS_FILE)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "id,lambda,method,reference,error,stable");
        assert_eq!(lines.count(), 5 * 3);
        let back: ExperimentReport =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
