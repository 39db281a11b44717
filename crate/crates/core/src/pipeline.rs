//! End-to-end runs: for each `n` from 3 upward, subdivide the previous
//! point set, enumerate full-support vertices over the candidate support
//! graphs, deduplicate, compute gaps and persist the results.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{canonical_form, CanonicalKey, DedupStore};
use crate::gap::{gap_plus, max_gap_of, GapCertificate, GapError};
use crate::graph::Graph;
use crate::graphgen::{generate_support_candidates, Mode};
use crate::io::{format_certificates, write_points, IoError, PointList, PointRecord};
use crate::polytope::{build_face_system, extreme_test_independent, is_extreme, WeightedPoint};
use crate::rational::format_rational;
use crate::subdivide::{seed_base, step3_closure, SubdivideError};
use crate::vertexenum::{enumerate_half_integral, enumerate_vertices, filter_full_support, verify_vertex_cross};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyLevel {
    None,
    Sample,
    Full,
}

impl std::str::FromStr for VerifyLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "sample" => Ok(Self::Sample),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown verify level `{other}` (expected none, sample or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub n_max: usize,
    pub mode: Mode,
    pub workers: usize,
    /// Where point files, certificates and the report go; nothing is written if `None`.
    pub output_dir: Option<PathBuf>,
    pub verify_level: VerifyLevel,
    pub compute_gaps: bool,
    pub write_certificates: bool,
}

impl RunConfig {
    pub fn new(n_max: usize, mode: Mode) -> Self {
        Self {
            n_max,
            mode,
            workers: 1,
            output_dir: None,
            verify_level: VerifyLevel::Sample,
            compute_gaps: true,
            write_certificates: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("vertex enumeration failed on graph `{graph}`: {msg}")]
    Enumeration { graph: String, msg: String },
    #[error("validation failed for point `{point}`: {msg}")]
    Validation { point: String, msg: String },
    #[error(transparent)]
    Subdivide(#[from] SubdivideError),
    #[error("gap computation failed for point `{point}`: {source}")]
    Gap { point: String, source: GapError },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepSeconds {
    pub graphs: f64,
    pub step2: f64,
    pub step3: f64,
    pub gaps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub support_graphs: usize,
    pub step2_classes: usize,
    pub step3_classes: usize,
    pub total: usize,
    /// Classes whose weights all lie in `{1/2, 1}`.
    pub half_integral: usize,
    /// Exact `p/q`, absent when gaps were not computed.
    pub max_gap: Option<String>,
    pub attaining_ids: Vec<usize>,
    pub seconds: StepSeconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub mode: Mode,
    pub rows: Vec<ReportRow>,
}

impl EnumerationReport {
    pub fn row(&self, n: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Everything computed for one `n`.
#[derive(Debug, Clone)]
pub struct Level {
    pub n: usize,
    pub store: DedupStore,
    /// Gap certificates aligned with `store` order, if computed.
    pub certificates: Option<Vec<GapCertificate>>,
    pub row: ReportRow,
}

impl Level {
    pub fn point_list(&self, mode: Mode) -> PointList {
        let mut list = PointList::new(self.n, mode);
        for (id, p) in self.store.points().enumerate() {
            list.points.push(PointRecord {
                id,
                gap: self.certificates.as_ref().map(|c| c[id].gap_plus.clone()),
                point: p.clone(),
            });
        }
        list
    }
}

pub fn points_file_name(n: usize, mode: Mode) -> String {
    format!("points-n{n:02}-{mode}.txt")
}

pub fn certificates_file_name(n: usize, mode: Mode) -> String {
    format!("certificates-n{n:02}-{mode}.txt")
}

pub fn report_file_name(mode: Mode) -> String {
    format!("report-{mode}.json")
}

/// Runs the chain `3..=n_max`, writing files when an output directory is set.
pub fn run(config: &RunConfig) -> Result<EnumerationReport, PipelineError> {
    let mut rows = Vec::new();
    run_with(config, |level| {
        rows.push(level.row.clone());
        Ok(())
    })?;
    let report = EnumerationReport { mode: config.mode, rows };
    if let Some(dir) = &config.output_dir {
        let json = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(dir.join(report_file_name(config.mode)), json).map_err(IoError::from)?;
    }
    Ok(report)
}

/// As [`run`], handing each finished level to `sink`.
pub fn run_with(
    config: &RunConfig,
    mut sink: impl FnMut(&Level) -> Result<(), PipelineError>,
) -> Result<(), PipelineError> {
    if config.n_max < 3 {
        return Err(PipelineError::Config("n_max must be at least 3".into()));
    }
    if config.workers == 0 {
        return Err(PipelineError::Config("workers must be at least 1".into()));
    }
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir).map_err(IoError::from)?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let mut prev: Option<DedupStore> = None;
    for n in 3..=config.n_max {
        let level = pool.install(|| build_level(config, n, prev.as_ref()))?;
        if let Some(dir) = &config.output_dir {
            persist(dir, config, &level)?;
        }
        sink(&level)?;
        prev = Some(level.store);
    }
    Ok(())
}

fn persist(dir: &Path, config: &RunConfig, level: &Level) -> Result<(), PipelineError> {
    write_points(&level.point_list(config.mode), &dir.join(points_file_name(level.n, config.mode)))?;
    if config.write_certificates {
        if let Some(certs) = &level.certificates {
            let numbered: Vec<(usize, &GapCertificate)> = certs.iter().enumerate().collect();
            std::fs::write(dir.join(certificates_file_name(level.n, config.mode)), format_certificates(&numbered))
                .map_err(IoError::from)?;
        }
    }
    Ok(())
}

fn build_level(config: &RunConfig, n: usize, prev: Option<&DedupStore>) -> Result<Level, PipelineError> {
    let mut seconds = StepSeconds::default();

    let t = Instant::now();
    let step3 = match prev {
        None => seed_base(),
        Some(p) => step3_closure(p)?,
    };
    seconds.step3 = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let graphs = generate_support_candidates(n, config.mode);
    seconds.graphs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let step2 = step2(config, &graphs)?;
    seconds.step2 = t.elapsed().as_secs_f64();

    verify_points(config.verify_level, &step2)?;
    verify_points(config.verify_level, &step3)?;

    let (step2_classes, step3_classes) = (step2.len(), step3.len());
    let mut store = step2;
    for (k, p) in step3.iter() {
        if store.contains_key(k) {
            return Err(PipelineError::Validation {
                point: p.graph().to_string(),
                msg: "produced by both vertex enumeration and subdivision".into(),
            });
        }
    }
    store.merge(step3);

    let t = Instant::now();
    let certificates = if config.compute_gaps {
        let points: Vec<&WeightedPoint> = store.points().collect();
        let certs = points
            .par_iter()
            .map(|p| {
                gap_plus(p).map_err(|source| PipelineError::Gap {
                    point: p.graph().to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(certs)
    } else {
        None
    };
    seconds.gaps = t.elapsed().as_secs_f64();

    let (max_gap, attaining_ids) = match certificates.as_deref().and_then(max_gap_of) {
        Some((g, _)) => {
            let certs = certificates.as_ref().expect("computed");
            let ids = (0..certs.len()).filter(|&i| certs[i].gap_plus == g).collect();
            (Some(format_rational(&g)), ids)
        }
        None => (None, Vec::new()),
    };
    let row = ReportRow {
        n,
        support_graphs: graphs.len(),
        step2_classes,
        step3_classes,
        total: store.len(),
        half_integral: store.points().filter(|p| p.is_half_integral()).count(),
        max_gap,
        attaining_ids,
        seconds,
    };
    Ok(Level {
        n,
        store,
        certificates,
        row,
    })
}

/// Full-support extreme points over `graphs`, one task per graph.
fn step2(config: &RunConfig, graphs: &[Graph]) -> Result<DedupStore, PipelineError> {
    let per_graph = graphs
        .par_iter()
        .map(|g| -> Result<Vec<(CanonicalKey, WeightedPoint)>, PipelineError> {
            let points = match config.mode {
                Mode::General => {
                    let sys = build_face_system(g);
                    let vrep = enumerate_vertices(&sys).map_err(|e| PipelineError::Enumeration {
                        graph: g.to_string(),
                        msg: e.to_string(),
                    })?;
                    if config.verify_level == VerifyLevel::Full && sys.num_vars <= 12 && !verify_vertex_cross(&sys, &vrep) {
                        return Err(PipelineError::Enumeration {
                            graph: g.to_string(),
                            msg: "disagrees with the basis-enumeration oracle".into(),
                        });
                    }
                    filter_full_support(g, &vrep)
                }
                Mode::HalfIntegral => enumerate_half_integral(g),
            };
            Ok(points.iter().map(canonical_form).collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut store = DedupStore::new();
    for (k, p) in per_graph.into_iter().flatten() {
        store.insert_canonical(k, p);
    }
    Ok(store)
}

/// Re-checks extremeness with both tests; `Sample` covers every 20th point.
fn verify_points(level: VerifyLevel, store: &DedupStore) -> Result<(), PipelineError> {
    let stride = match level {
        VerifyLevel::None => return Ok(()),
        VerifyLevel::Sample => 20,
        VerifyLevel::Full => 1,
    };
    let chosen: Vec<&WeightedPoint> = store.points().step_by(stride).collect();
    chosen.par_iter().try_for_each(|p| {
        let fail = |msg: String| PipelineError::Validation {
            point: p.graph().to_string(),
            msg,
        };
        let rank = is_extreme(p.graph(), p).map_err(|e| fail(e.to_string()))?;
        let pinned = extreme_test_independent(p.graph(), p).map_err(|e| fail(e.to_string()))?;
        if rank && pinned {
            Ok(())
        } else {
            Err(fail(format!("extreme-point tests returned rank={rank}, pinning={pinned}")))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_chain() {
        let report = run(&RunConfig::new(7, Mode::General)).unwrap();
        let totals: Vec<usize> = report.rows.iter().map(|r| r.total).collect();
        assert_eq!(totals, vec![1, 1, 1, 2, 3]);
        let gaps: Vec<&str> = report.rows.iter().map(|r| r.max_gap.as_deref().unwrap()).collect();
        assert_eq!(gaps, vec!["1/1", "1/1", "1/1", "10/9", "9/8"]);
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(run(&RunConfig::new(2, Mode::General)).is_err());
        let mut c = RunConfig::new(5, Mode::General);
        c.workers = 0;
        assert!(run(&c).is_err());
    }
}
