//! One `run_*` function per subcommand.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::io::{read_csv_table, write_atomic, write_json, Provenance};
use super::report::{
    batch_permutation, metrics_csv, metrics_rows, read_metrics_csv, read_rim_csv, rim_csv, spatial_table,
    table9_csv, CaseTable, CohortReport, RimRow,
};
use super::{find_volume, layout, list_cases, require_volume, CaseFailure, RunOutcome};
use crate::error::{Error, Result};
use crate::fusion::fuse;
use crate::morphology::{rim_shells, RimShellSet};
use crate::phantom::{generate_label_phantom, generate_probability_phantom, generate_scalar_phantom, PhantomSpec, Primitive};
use crate::rng::CounterRng;
use crate::segmetrics::{evaluate_case, summarize_cohort, CaseReport};
use crate::spatial::{spatial_report, DistanceTarget, SpatialOptions, SpatialReport};
use crate::stats::{sign_flip_permutation, PermutationResult};
use crate::volume::{load_volume, masked_stats, save_volume, BinaryMask, Region};

/// Run `f` on every case in parallel; results come back in input order.
fn for_each_case<C: Sync, R: Send>(
    cases: &[C],
    id: impl Fn(&C) -> &str + Sync,
    f: impl Fn(&C) -> Result<R> + Sync,
) -> (Vec<(String, R)>, Vec<CaseFailure>) {
    let results: Vec<_> = cases.par_iter().map(|c| (id(c).to_string(), f(c))).collect();
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (case_id, r) in results {
        match r {
            Ok(v) => ok.push((case_id, v)),
            Err(e) => {
                log::error!("case {case_id}: {e}");
                failures.push(CaseFailure {
                    case_id,
                    error: e.to_string(),
                });
            }
        }
    }
    (ok, failures)
}

fn finish(
    mut prov: Provenance,
    out_dir: &Path,
    name: &str,
    outputs: Vec<PathBuf>,
    processed: Vec<String>,
    failures: Vec<CaseFailure>,
) -> Result<RunOutcome> {
    for o in &outputs {
        prov.add_output(o, out_dir)?;
    }
    prov.processed = processed.clone();
    prov.failures = failures.clone();
    let path = out_dir.join(format!("provenance_{name}.json"));
    let hash = prov.finish(&path)?;
    let mut outputs = outputs;
    outputs.push(path);
    Ok(RunOutcome {
        processed,
        failures,
        outputs,
        provenance_hash: Some(hash),
    })
}

fn ensure_any_processed(processed: &[String], failures: &[CaseFailure]) -> Result<()> {
    if processed.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no case could be processed ({} failed)",
            failures.len()
        )));
    }
    Ok(())
}

/// A binary mask read from a file: nonzero voxels, or one region of a label map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSource {
    pub path: PathBuf,
    pub region: Option<Region>,
}

impl MaskSource {
    pub fn nonzero(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), region: None }
    }

    pub fn region(path: impl Into<PathBuf>, region: Region) -> Self {
        Self { path: path.into(), region: Some(region) }
    }

    pub fn load(&self) -> Result<BinaryMask> {
        let vol = load_volume(&self.path)?;
        match self.region {
            None => Ok(vol.into_mask()),
            Some(r) => vol.into_labels()?.region(r),
        }
    }
}

// ---------------------------------------------------------------- fuse

#[derive(Debug, Clone, PartialEq)]
pub struct FuseCase {
    pub case_id: String,
    pub maps: Vec<PathBuf>,
    /// Receives `neh.nii.gz` and `neh_confidence.nii.gz`.
    pub out_dir: PathBuf,
}

/// Each case directory's `prob_*` maps, fused in place.
pub fn fuse_cases_from_cohort(root: &Path) -> Result<Vec<FuseCase>> {
    list_cases(root)?
        .into_iter()
        .map(|(case_id, dir)| {
            let mut maps: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    name.starts_with(layout::PROB_PREFIX) && (name.ends_with(".nii") || name.ends_with(".nii.gz"))
                })
                .collect();
            maps.sort();
            Ok(FuseCase { case_id, maps, out_dir: dir })
        })
        .collect()
}

pub fn run_fuse(cfg: &PipelineConfig, cases: &[FuseCase], out_dir: &Path) -> Result<RunOutcome> {
    cfg.fusion.validate()?;
    let mut prov = Provenance::new("fuse", &cfg.fusion)?;
    for c in cases {
        for m in &c.maps {
            prov.add_input(m, out_dir)?;
        }
    }
    let (ok, failures) = for_each_case(cases, |c| &c.case_id, |c| {
        if c.maps.is_empty() {
            return Err(Error::InvalidArgument("no probability maps".into()));
        }
        let maps = c
            .maps
            .iter()
            .map(|p| load_volume(p)?.into_probability::<f64>())
            .collect::<Result<Vec<_>>>()?;
        let fused = fuse(&maps, &cfg.fusion)?;
        let mask_path = c.out_dir.join(format!("{}.nii.gz", layout::NEH));
        let conf_path = c.out_dir.join(format!("{}.nii.gz", layout::NEH_CONFIDENCE));
        save_volume(&fused.mask, &mask_path)?;
        save_volume(&fused.confidence, &conf_path)?;
        log::info!("case {}: NEH mask {} voxels", c.case_id, fused.mask.count());
        Ok(vec![mask_path, conf_path])
    });
    let processed: Vec<String> = ok.iter().map(|(id, _)| id.clone()).collect();
    ensure_any_processed(&processed, &failures)?;
    let outputs = ok.into_iter().flat_map(|(_, v)| v).collect();
    finish(prov, out_dir, "fuse", outputs, processed, failures)
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone, PartialEq)]
pub struct CasePair {
    pub case_id: String,
    pub a: PathBuf,
    pub b: PathBuf,
}

/// `seg_a` vs `seg_b` in every case directory.
pub fn metric_pairs_from_cohort(root: &Path) -> Result<Vec<CasePair>> {
    list_cases(root)?
        .into_iter()
        .map(|(case_id, dir)| {
            Ok(CasePair {
                a: require_volume(&dir, layout::SEG_A)?,
                b: require_volume(&dir, layout::SEG_B)?,
                case_id,
            })
        })
        .collect()
}

fn volume_stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.trim_end_matches(".gz").trim_end_matches(".nii").to_string()
}

/// Two files, or two directories whose NIfTI files are paired by name.
pub fn metric_pairs_from_paths(a: &Path, b: &Path) -> Result<Vec<CasePair>> {
    if a.is_file() && b.is_file() {
        return Ok(vec![CasePair { case_id: volume_stem(a), a: a.into(), b: b.into() }]);
    }
    if !(a.is_dir() && b.is_dir()) {
        return Err(Error::InvalidArgument(format!(
            "{} and {} must both be files or both be directories",
            a.display(),
            b.display()
        )));
    }
    let mut pairs = Vec::new();
    for entry in std::fs::read_dir(a).map_err(|e| Error::io(a, e))? {
        let path = entry.map_err(|e| Error::io(a, e))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if !(name.ends_with(".nii") || name.ends_with(".nii.gz")) {
            continue;
        }
        let other = b.join(&name);
        if other.is_file() {
            pairs.push(CasePair { case_id: volume_stem(&path), a: path, b: other });
        } else {
            log::warn!("{name}: no counterpart in {}", b.display());
        }
    }
    pairs.sort_by(|x, y| x.case_id.cmp(&y.case_id));
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no matching segmentation pairs".into()));
    }
    Ok(pairs)
}

pub const METRICS_CSV: &str = "metrics_cases.csv";
pub const METRICS_SUMMARY: &str = "metrics_summary.json";
pub const TABLE1_CSV: &str = "table1.csv";

pub fn run_metrics(cfg: &PipelineConfig, pairs: &[CasePair], out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut prov = Provenance::new("metrics", &cfg.metrics)?;
    for p in pairs {
        prov.add_input(&p.a, out_dir)?;
        prov.add_input(&p.b, out_dir)?;
    }
    let (ok, failures) = for_each_case(pairs, |p| &p.case_id, |p| {
        let a = load_volume(&p.a)?.into_labels()?;
        let b = load_volume(&p.b)?.into_labels()?;
        evaluate_case::<f64>(&p.case_id, &a, &b, &cfg.metrics.regions, cfg.metrics.tau_mm)
    });
    let processed: Vec<String> = ok.iter().map(|(id, _)| id.clone()).collect();
    ensure_any_processed(&processed, &failures)?;
    let reports: Vec<CaseReport<f64>> = ok.into_iter().map(|(_, r)| r).collect();

    let csv_path = out_dir.join(METRICS_CSV);
    write_atomic(&csv_path, &metrics_csv(&metrics_rows(&reports)))?;
    let summary_path = out_dir.join(METRICS_SUMMARY);
    write_json(&summary_path, &summarize_cohort(&reports, &cfg.metrics.regions))?;
    let report = CohortReport::build(metrics_rows(&reports), vec![], None, None)?;
    let table_path = out_dir.join(TABLE1_CSV);
    write_atomic(&table_path, &report.table1_csv().expect("at least one case"))?;
    finish(prov, out_dir, "metrics", vec![csv_path, summary_path, table_path], processed, failures)
}

// ---------------------------------------------------------------- rim

#[derive(Debug, Clone, PartialEq)]
pub struct RimCase {
    pub case_id: String,
    /// Enhancing tumor: label 4 of a segmentation, or a plain mask.
    pub et: MaskSource,
    pub scalar: PathBuf,
    /// NEH mask; defaults to label 3 of the segmentation `et` was read from.
    pub neh: Option<MaskSource>,
    pub exclusions: Vec<MaskSource>,
    /// Rims are clipped to this mask when given.
    pub brain: Option<MaskSource>,
}

/// `seg_a`, `rcbv`, fused `neh` (else label 3) and optional `brain` per case.
pub fn rim_cases_from_cohort(root: &Path) -> Result<Vec<RimCase>> {
    list_cases(root)?
        .into_iter()
        .map(|(case_id, dir)| {
            Ok(RimCase {
                et: MaskSource::region(require_volume(&dir, layout::SEG_A)?, Region::ET),
                scalar: require_volume(&dir, layout::SCALAR)?,
                neh: find_volume(&dir, layout::NEH).map(MaskSource::nonzero),
                exclusions: Vec::new(),
                brain: find_volume(&dir, layout::BRAIN).map(MaskSource::nonzero),
                case_id,
            })
        })
        .collect()
}

pub const RIM_CSV: &str = "rim.csv";
pub const RIM_ANOVA: &str = "rim_anova.json";

fn rim_case(cfg: &PipelineConfig, c: &RimCase) -> Result<Vec<RimRow>> {
    let scalar = load_volume(&c.scalar)?.into_scalar::<f64>();
    let et = c.et.load()?;
    et.geometry().assert_match(scalar.geometry())?;
    let neh = match (&c.neh, c.et.region) {
        (Some(src), _) => src.load()?,
        (None, Some(_)) => MaskSource::region(&c.et.path, Region::NEH).load()?,
        (None, None) => return Err(Error::InvalidArgument("an NEH mask is required when ET is a plain mask".into())),
    };
    let mut exclusions = c.exclusions.iter().map(MaskSource::load).collect::<Result<Vec<_>>>()?;
    if let Some(brain) = &c.brain {
        exclusions.push(brain.load()?.not());
    }
    let shells: RimShellSet = rim_shells(&et, &cfg.rim.radii_mm, &exclusions)?;
    let regions: Vec<(String, BinaryMask)> = if cfg.rim.annular {
        shells.annular()
    } else {
        shells.names().into_iter().zip(shells.shells).collect()
    };
    std::iter::once(("NEH".to_string(), neh))
        .chain(regions)
        .map(|(name, mask)| {
            let s = masked_stats(&scalar, &mask)?;
            if s.is_empty() {
                log::warn!("case {}: region {name} is empty", c.case_id);
            }
            Ok(RimRow {
                case_id: c.case_id.clone(),
                region: name,
                mean: s.mean,
                sd: s.sd,
                count: s.voxel_count,
                volume_mm3: s.volume_mm3,
            })
        })
        .collect()
}

pub fn run_rim(cfg: &PipelineConfig, cases: &[RimCase], out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut prov = Provenance::new("rim", &cfg.rim)?;
    for c in cases {
        prov.add_input(&c.et.path, out_dir)?;
        prov.add_input(&c.scalar, out_dir)?;
        for m in c.neh.iter().chain(&c.exclusions).chain(&c.brain) {
            prov.add_input(&m.path, out_dir)?;
        }
    }
    let (ok, failures) = for_each_case(cases, |c| &c.case_id, |c| rim_case(cfg, c));
    let processed: Vec<String> = ok.iter().map(|(id, _)| id.clone()).collect();
    ensure_any_processed(&processed, &failures)?;
    let rows: Vec<RimRow> = ok.into_iter().flat_map(|(_, r)| r).collect();
    let csv_path = out_dir.join(RIM_CSV);
    write_atomic(&csv_path, &rim_csv(&rows))?;
    let anova_path = out_dir.join(RIM_ANOVA);
    let anova = super::report::rim_anova(&rows)?;
    if anova.is_none() {
        log::warn!("ANOVA skipped: needs two compartments with at least two case means each");
    }
    write_json(&anova_path, &anova)?;
    finish(prov, out_dir, "rim", vec![csv_path, anova_path], processed, failures)
}

// ---------------------------------------------------------------- spatial

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCase {
    pub case_id: String,
    pub pneh: MaskSource,
    pub etrl: MaskSource,
}

/// Fused `neh` (else label 3 of `seg_a`) against `etrl` per case.
pub fn spatial_cases_from_cohort(root: &Path) -> Result<Vec<SpatialCase>> {
    list_cases(root)?
        .into_iter()
        .map(|(case_id, dir)| {
            let pneh = match find_volume(&dir, layout::NEH) {
                Some(p) => MaskSource::nonzero(p),
                None => MaskSource::region(require_volume(&dir, layout::SEG_A)?, Region::NEH),
            };
            Ok(SpatialCase {
                pneh,
                etrl: MaskSource::nonzero(require_volume(&dir, layout::ETRL)?),
                case_id,
            })
        })
        .collect()
}

pub const SPATIAL_CSV: &str = "spatial_cases.csv";
pub const SPATIAL_JSON: &str = "spatial_cases.json";
pub const TABLE8_CSV: &str = "table8.csv";

pub fn spatial_options(cfg: &PipelineConfig) -> SpatialOptions {
    SpatialOptions {
        near_mm: cfg.spatial.near_mm,
        target: if cfg.spatial.to_region { DistanceTarget::Region } else { DistanceTarget::Boundary },
        null: cfg.spatial.ratio_vs_null.then_some((cfg.spatial.null_shifts, cfg.seed)),
    }
}

pub fn run_spatial(cfg: &PipelineConfig, cases: &[SpatialCase], out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut prov = Provenance::new("spatial", &(cfg.seed, &cfg.spatial))?;
    for c in cases {
        prov.add_input(&c.pneh.path, out_dir)?;
        prov.add_input(&c.etrl.path, out_dir)?;
    }
    let opts = spatial_options(cfg);
    let (ok, failures) = for_each_case(cases, |c| &c.case_id, |c| {
        spatial_report::<f64>(&c.case_id, &c.pneh.load()?, &c.etrl.load()?, &opts)
    });
    let processed: Vec<String> = ok.iter().map(|(id, _)| id.clone()).collect();
    ensure_any_processed(&processed, &failures)?;
    let reports: Vec<SpatialReport<f64>> = ok.into_iter().map(|(_, r)| r).collect();
    let json_path = out_dir.join(SPATIAL_JSON);
    write_json(&json_path, &reports)?;
    let table = spatial_table(&reports);
    let csv_path = out_dir.join(SPATIAL_CSV);
    write_atomic(&csv_path, &table.to_csv())?;
    let report = CohortReport::build(vec![], vec![], Some(table), None)?;
    let t8_path = out_dir.join(TABLE8_CSV);
    write_atomic(&t8_path, &report.table8_csv().expect("spatial table present"))?;
    finish(prov, out_dir, "spatial", vec![json_path, csv_path, t8_path], processed, failures)
}

// ---------------------------------------------------------------- permtest

pub const PERMTEST_JSON: &str = "permtest.json";
pub const TABLE9_CSV: &str = "table9.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct PermtestSingle {
    pub input: PathBuf,
    pub column: String,
    pub baseline: f64,
}

/// Test one CSV column; rows are taken in `case` order when that column exists.
pub fn permtest_column(cfg: &PipelineConfig, job: &PermtestSingle) -> Result<PermutationResult<f64>> {
    let t = read_csv_table(&job.input)?;
    let col = t.require_column(&job.column)?;
    let mut order: Vec<usize> = (0..t.rows.len()).collect();
    if let Some(case) = t.column("case") {
        order.sort_by(|&a, &b| t.rows[a][case].cmp(&t.rows[b][case]));
    }
    let mut values = Vec::new();
    for r in order {
        values.extend(t.f64_at(r, col)?);
    }
    sign_flip_permutation(&values, job.baseline, cfg.permutation.draws, cfg.seed, cfg.permutation.tail)
}

pub fn run_permtest(cfg: &PipelineConfig, job: &PermtestSingle, out_dir: &Path) -> Result<(PermutationResult<f64>, RunOutcome)> {
    cfg.validate()?;
    let result = permtest_column(cfg, job)?;
    let mut prov = Provenance::new("permtest", &(cfg.seed, &cfg.permutation, &job.column, job.baseline))?;
    prov.add_input(&job.input, out_dir)?;
    let path = out_dir.join(PERMTEST_JSON);
    write_json(&path, &result)?;
    let outcome = finish(prov, out_dir, "permtest", vec![path], vec![job.column.clone()], vec![])?;
    Ok((result, outcome))
}

/// The configured spatial metrics of a spatial per-case CSV, in Table 9 layout.
pub fn run_permtest_batch(cfg: &PipelineConfig, spatial_csv: &Path, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let table = CaseTable::read(spatial_csv)?;
    let mut sorted = table.clone();
    sorted.rows.sort_by(|a, b| a.0.cmp(&b.0));
    let rows = batch_permutation(&sorted, &cfg.permutation, cfg.seed)?;
    let mut prov = Provenance::new("permtest", &(cfg.seed, &cfg.permutation))?;
    prov.add_input(spatial_csv, out_dir)?;
    let json_path = out_dir.join(PERMTEST_JSON);
    write_json(&json_path, &rows)?;
    let t9_path = out_dir.join(TABLE9_CSV);
    write_atomic(&t9_path, &table9_csv(&rows))?;
    let processed = rows.iter().map(|r| r.metric.clone()).collect();
    finish(prov, out_dir, "permtest", vec![json_path, t9_path], processed, vec![])
}

// ---------------------------------------------------------------- phantom

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    Label,
    Scalar,
    Probability,
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "label" => Ok(PhantomKind::Label),
            "scalar" => Ok(PhantomKind::Scalar),
            "probability" => Ok(PhantomKind::Probability),
            _ => Err(Error::InvalidArgument(format!("unknown phantom kind '{s}'"))),
        }
    }
}

pub fn run_phantom(spec: &PhantomSpec, kind: PhantomKind, blur_sigma_mm: f64, out: &Path) -> Result<()> {
    match kind {
        PhantomKind::Label => save_volume(&generate_label_phantom(spec)?, out),
        PhantomKind::Scalar => save_volume(&generate_scalar_phantom::<f64>(spec)?, out),
        PhantomKind::Probability => save_volume(&generate_probability_phantom::<f64>(spec, blur_sigma_mm)?, out),
    }
}

/// Grid of the demo cohort: 48³ voxels at 1 mm.
pub const COHORT_DIMS: [usize; 3] = [48, 48, 48];

/// Specs for one synthetic case: two segmentations that disagree slightly,
/// two model NEH probability maps, a perfusion-like map that peaks in NEH and
/// falls off with distance from ET, and a recurrence lesion next to NEH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePhantoms {
    pub seg_a: PhantomSpec,
    pub seg_b: PhantomSpec,
    pub probs: Vec<PhantomSpec>,
    pub scalar: PhantomSpec,
    pub etrl: PhantomSpec,
}

pub fn cohort_case_phantoms(case_index: u64, seed: u64) -> CasePhantoms {
    let mut rng = CounterRng::new(seed, case_index);
    let mut jitter = |amp: f64| amp * (2.0 * rng.next_f64() - 1.0);
    let c = [24.0 + jitter(2.0), 24.0 + jitter(2.0), 24.0 + jitter(2.0)];
    let at = |d: [f64; 3]| [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
    let sphere = |center_mm, radius_mm, value| Primitive::Sphere { center_mm, radius_mm, value };
    let shell = |center_mm, inner_mm, outer_mm, value| Primitive::Shell { center_mm, inner_mm, outer_mm, value };
    let base = PhantomSpec::new(COHORT_DIMS, [1.0; 3]);
    let neh_at = at([9.0, 0.0, 0.0]);
    let seg = |dr: f64, dc: [f64; 3]| {
        let cc = [c[0] + dc[0], c[1] + dc[1], c[2] + dc[2]];
        PhantomSpec {
            primitives: vec![
                sphere(cc, 16.0 + dr, 2.0),
                sphere([neh_at[0] + dc[0], neh_at[1] + dc[1], neh_at[2] + dc[2]], 6.0 + dr, 3.0),
                sphere(cc, 8.0 + dr, 4.0),
                sphere(cc, 3.0, 1.0),
            ],
            ..base.clone()
        }
    };
    let seg_a = seg(0.0, [0.0; 3]);
    let seg_b = seg(jitter(1.0), [jitter(1.0), jitter(1.0), jitter(1.0)]);
    let probs = (0..2)
        .map(|_| PhantomSpec {
            primitives: vec![sphere([neh_at[0] + jitter(1.0), neh_at[1] + jitter(1.0), neh_at[2]], 6.0 + jitter(0.5), 1.0)],
            ..base.clone()
        })
        .collect();
    let scalar = PhantomSpec {
        background: 1.0,
        primitives: vec![
            sphere(c, 16.0, 1.5),
            shell(c, 12.0, 14.0, 1.9),
            shell(c, 10.0, 12.0, 2.4),
            shell(c, 8.0, 10.0, 3.0),
            sphere(c, 8.0, 3.5),
            sphere(neh_at, 6.0, 4.5),
        ],
        noise_sd: 0.2,
        seed: seed ^ case_index.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ..base.clone()
    };
    let etrl = PhantomSpec {
        primitives: vec![sphere(at([12.0 + jitter(1.5), jitter(1.5), jitter(1.5)]), 5.0, 1.0)],
        ..base
    };
    CasePhantoms { seg_a, seg_b, probs, scalar, etrl }
}

/// Write `n_cases` synthetic cases (`case_000`, …) in the cohort layout.
pub fn run_phantom_cohort(cfg: &PipelineConfig, n_cases: usize, out_dir: &Path) -> Result<RunOutcome> {
    if n_cases == 0 {
        return Err(Error::InvalidArgument("cohort needs at least one case".into()));
    }
    let prov = Provenance::new("phantom", &(cfg.seed, n_cases, &cfg.fusion))?;
    let ids: Vec<u64> = (0..n_cases as u64).collect();
    let (ok, failures) = for_each_case(
        &ids.iter().map(|i| (format!("case_{i:03}"), *i)).collect::<Vec<_>>(),
        |(id, _)| id,
        |(id, i)| {
            let dir = out_dir.join(id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let p = cohort_case_phantoms(*i, cfg.seed);
            let file = |stem: &str| dir.join(format!("{stem}.nii.gz"));
            let mut written = vec![file(layout::SEG_A), file(layout::SEG_B), file(layout::SCALAR), file(layout::ETRL)];
            run_phantom(&p.seg_a, PhantomKind::Label, 0.0, &written[0])?;
            run_phantom(&p.seg_b, PhantomKind::Label, 0.0, &written[1])?;
            run_phantom(&p.scalar, PhantomKind::Scalar, 0.0, &written[2])?;
            run_phantom(&p.etrl, PhantomKind::Label, 0.0, &written[3])?;
            for (k, spec) in p.probs.iter().enumerate() {
                let path = file(&format!("{}{k}", layout::PROB_PREFIX));
                run_phantom(spec, PhantomKind::Probability, 1.0, &path)?;
                written.push(path);
            }
            Ok(written)
        },
    );
    let processed: Vec<String> = ok.iter().map(|(id, _)| id.clone()).collect();
    ensure_any_processed(&processed, &failures)?;
    let outputs = ok.into_iter().flat_map(|(_, v)| v).collect();
    finish(prov, out_dir, "phantom", outputs, processed, failures)
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportInputs {
    pub metrics: Option<PathBuf>,
    pub rim: Option<PathBuf>,
    pub spatial: Option<PathBuf>,
    /// Append Table 9 permutation tests of the spatial metrics.
    pub permtest: bool,
}

pub const REPORT_JSON: &str = "report.json";
pub const TABLE7_CSV: &str = "table7.csv";

pub fn run_report(cfg: &PipelineConfig, inputs: &ReportInputs, out_dir: &Path) -> Result<(CohortReport, RunOutcome)> {
    cfg.validate()?;
    if inputs.metrics.is_none() && inputs.rim.is_none() && inputs.spatial.is_none() {
        return Err(Error::InvalidArgument("report needs at least one per-case CSV".into()));
    }
    if inputs.permtest && inputs.spatial.is_none() {
        return Err(Error::InvalidArgument("permutation tests need the spatial CSV".into()));
    }
    let mut prov = Provenance::new("report", &(cfg.seed, &cfg.permutation, inputs.permtest))?;
    for p in inputs.metrics.iter().chain(&inputs.rim).chain(&inputs.spatial) {
        prov.add_input(p, out_dir)?;
    }
    let metrics = inputs.metrics.as_deref().map(read_metrics_csv).transpose()?.unwrap_or_default();
    let rim = inputs.rim.as_deref().map(read_rim_csv).transpose()?.unwrap_or_default();
    let spatial = inputs.spatial.as_deref().map(CaseTable::read).transpose()?;
    let n_rows = metrics.len() + rim.len() + spatial.as_ref().map_or(0, |t| t.rows.len());
    if n_rows == 0 {
        return Err(Error::InvalidArgument("report inputs contain no case rows".into()));
    }
    let perm = inputs.permtest.then_some((&cfg.permutation, cfg.seed));
    let report = CohortReport::build(metrics, rim, spatial, perm)?;

    let mut outputs = Vec::new();
    for (name, bytes) in [
        (TABLE1_CSV, report.table1_csv()),
        (TABLE7_CSV, report.table7_csv()),
        (TABLE8_CSV, report.table8_csv()),
        (TABLE9_CSV, report.table9_csv()),
    ] {
        if let Some(bytes) = bytes {
            let path = out_dir.join(name);
            write_atomic(&path, &bytes)?;
            outputs.push(path);
        }
    }
    let json_path = out_dir.join(REPORT_JSON);
    write_json(&json_path, &report)?;
    outputs.push(json_path);
    let mut cases: Vec<String> = report
        .metrics
        .iter()
        .map(|r| r.case_id.clone())
        .chain(report.rim.iter().map(|r| r.case_id.clone()))
        .chain(report.spatial.iter().flat_map(|t| t.rows.iter().map(|r| r.0.clone())))
        .collect();
    cases.sort();
    cases.dedup();
    let outcome = finish(prov, out_dir, "report", outputs, cases, vec![])?;
    Ok((report, outcome))
}
