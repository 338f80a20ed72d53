//! Per-case CSV records, cohort summaries and the table layouts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PermutationConfig;
use super::io::{csv_bytes, fmt_opt, read_csv_table, CsvTable};
use crate::error::{Error, Result};
use crate::segmetrics::{CaseReport, Metric};
use crate::spatial::{SpatialReport, SPATIAL_METRIC_NAMES};
use crate::stats::{descriptive, one_way_anova, sign_flip_permutation, AnovaResult, Descriptive, PermutationResult};
use crate::volume::Region;

pub const METRICS_HEADER: [&str; 8] = [
    "case",
    "region",
    "dice",
    "jaccard",
    "hausdorff95_mm",
    "surface_dice",
    "a_voxels",
    "b_voxels",
];
pub const RIM_HEADER: [&str; 6] = ["case", "region", "mean", "sd", "count", "volume_mm3"];
pub const TABLE9_HEADER: [&str; 5] = ["metric", "observed_mean", "null_mean", "p_one_sided", "p_two_sided"];
pub const NULL_SUFFIX: &str = "_vs_null";

/// One region of one case in the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub case_id: String,
    pub region: Region,
    pub dice: f64,
    pub jaccard: f64,
    pub hausdorff95_mm: Option<f64>,
    pub surface_dice: Option<f64>,
    pub a_voxels: usize,
    pub b_voxels: usize,
}

impl MetricsRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.case_id.clone(),
            self.region.name(),
            self.dice.to_string(),
            self.jaccard.to_string(),
            fmt_opt(self.hausdorff95_mm),
            fmt_opt(self.surface_dice),
            self.a_voxels.to_string(),
            self.b_voxels.to_string(),
        ]
    }

    fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Dice => Some(self.dice),
            Metric::Jaccard => Some(self.jaccard),
            Metric::Hausdorff95 => self.hausdorff95_mm,
            Metric::SurfaceDice => self.surface_dice,
        }
    }
}

pub fn metrics_rows(reports: &[CaseReport<f64>]) -> Vec<MetricsRow> {
    reports
        .iter()
        .flat_map(|rep| {
            rep.regions.iter().map(move |(region, m)| MetricsRow {
                case_id: rep.case_id.clone(),
                region: *region,
                dice: m.dice,
                jaccard: m.jaccard,
                hausdorff95_mm: m.hausdorff95_mm,
                surface_dice: m.surface_dice,
                a_voxels: m.a_voxels,
                b_voxels: m.b_voxels,
            })
        })
        .collect()
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Vec<u8> {
    csv_bytes(&METRICS_HEADER, &rows.iter().map(MetricsRow::record).collect::<Vec<_>>())
}

fn usize_at(t: &CsvTable, row: usize, col: usize) -> Result<usize> {
    t.rows[row][col]
        .trim()
        .parse()
        .map_err(|_| t.error(row, format!("column '{}' must be a non-negative integer", t.headers[col])))
}

fn required_f64(t: &CsvTable, row: usize, col: usize) -> Result<f64> {
    t.f64_at(row, col)?
        .ok_or_else(|| t.error(row, format!("column '{}' must not be empty", t.headers[col])))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let t = read_csv_table(path)?;
    let cols: Vec<usize> = METRICS_HEADER.iter().map(|h| t.require_column(h)).collect::<Result<_>>()?;
    (0..t.rows.len())
        .map(|r| {
            let region = t.rows[r][cols[1]]
                .parse()
                .map_err(|e: Error| t.error(r, e.to_string()))?;
            Ok(MetricsRow {
                case_id: t.rows[r][cols[0]].clone(),
                region,
                dice: required_f64(&t, r, cols[2])?,
                jaccard: required_f64(&t, r, cols[3])?,
                hausdorff95_mm: t.f64_at(r, cols[4])?,
                surface_dice: t.f64_at(r, cols[5])?,
                a_voxels: usize_at(&t, r, cols[6])?,
                b_voxels: usize_at(&t, r, cols[7])?,
            })
        })
        .collect()
}

/// Masked scalar statistics of one rim compartment of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RimRow {
    pub case_id: String,
    pub region: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub count: usize,
    pub volume_mm3: f64,
}

pub fn rim_csv(rows: &[RimRow]) -> Vec<u8> {
    let records: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.case_id.clone(),
                r.region.clone(),
                fmt_opt(r.mean),
                fmt_opt(r.sd),
                r.count.to_string(),
                r.volume_mm3.to_string(),
            ]
        })
        .collect();
    csv_bytes(&RIM_HEADER, &records)
}

pub fn read_rim_csv(path: &Path) -> Result<Vec<RimRow>> {
    let t = read_csv_table(path)?;
    let cols: Vec<usize> = RIM_HEADER.iter().map(|h| t.require_column(h)).collect::<Result<_>>()?;
    (0..t.rows.len())
        .map(|r| {
            Ok(RimRow {
                case_id: t.rows[r][cols[0]].clone(),
                region: t.rows[r][cols[1]].clone(),
                mean: t.f64_at(r, cols[2])?,
                sd: t.f64_at(r, cols[3])?,
                count: usize_at(&t, r, cols[4])?,
                volume_mm3: required_f64(&t, r, cols[5])?,
            })
        })
        .collect()
}

/// NEH first, then shells by outer and inner radius ("0-2mm", "2-4mm", …).
fn rim_region_key(name: &str) -> (u8, f64, f64, String) {
    if name == "NEH" {
        return (0, 0.0, 0.0, String::new());
    }
    let parsed = name
        .strip_suffix("mm")
        .and_then(|s| s.split_once('-'))
        .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)));
    match parsed {
        Some((inner, outer)) => (1, outer, inner, String::new()),
        None => (2, 0.0, 0.0, name.to_string()),
    }
}

/// Numeric per-case table keyed by case id (spatial metrics and flags).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl CaseTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Defined values of a column, in row order.
    pub fn values(&self, col: usize) -> Vec<f64> {
        self.rows.iter().filter_map(|(_, v)| v[col]).collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut header = vec!["case"];
        header.extend(self.columns.iter().map(String::as_str));
        let records: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(id, vals)| std::iter::once(id.clone()).chain(vals.iter().map(|&v| fmt_opt(v))).collect())
            .collect();
        csv_bytes(&header, &records)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let t = read_csv_table(path)?;
        let case = t.require_column("case")?;
        let cols: Vec<usize> = (0..t.headers.len()).filter(|&c| c != case).collect();
        let rows = (0..t.rows.len())
            .map(|r| {
                let vals = cols.iter().map(|&c| t.f64_at(r, c)).collect::<Result<_>>()?;
                Ok((t.rows[r][case].clone(), vals))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            columns: cols.iter().map(|&c| t.headers[c].clone()).collect(),
            rows,
        })
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| a.0.cmp(&b.0));
    }
}

fn flag(b: bool) -> Option<f64> {
    Some(if b { 1.0 } else { 0.0 })
}

/// Spatial per-case table; `VolumeContainment` is log10 mm³. Null-ratio
/// columns are added when any report carries them.
pub fn spatial_table(reports: &[SpatialReport<f64>]) -> CaseTable {
    let with_null = reports.iter().any(|r| r.null_ratios.is_some());
    let mut columns: Vec<String> = SPATIAL_METRIC_NAMES.iter().map(|s| s.to_string()).collect();
    columns.extend(
        [
            "VolumeContainment_mm3",
            "pneh_mm3",
            "etrl_mm3",
            "proximity_flag",
            "near_edge_flag",
            "containment_flag",
            "inside_flag",
        ]
        .map(String::from),
    );
    if with_null {
        columns.extend(SPATIAL_METRIC_NAMES.iter().map(|s| format!("{s}{NULL_SUFFIX}")));
    }
    let rows = reports
        .iter()
        .map(|r| {
            let m = &r.metrics;
            let b = &r.benchmarks;
            let mut v = vec![
                Some(m.fraction_inside),
                Some(m.fraction_near_edge),
                Some(m.mean_edge_distance_mm),
                m.volume_containment_log10,
                Some(m.volume_containment_mm3),
                Some(r.pneh_mm3),
                Some(r.etrl_mm3),
                flag(b.proximity_flag),
                flag(b.near_edge_flag),
                flag(b.containment_flag),
                flag(b.inside_flag),
            ];
            if with_null {
                let n = r.null_ratios.as_ref();
                v.extend([
                    n.and_then(|n| n.fraction_inside),
                    n.and_then(|n| n.fraction_near_edge),
                    n.and_then(|n| n.mean_edge_distance),
                    n.and_then(|n| n.volume_containment),
                ]);
            }
            (r.case_id.clone(), v)
        })
        .collect();
    CaseTable { columns, rows }
}

/// One cohort summary cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// "table1", "table7" or "table8".
    pub table: String,
    pub row: String,
    pub column: String,
    pub summary: Option<Descriptive<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationRow {
    pub metric: String,
    pub column: String,
    pub result: PermutationResult<f64>,
}

/// Sign-flip tests of the configured spatial columns against their baselines.
pub fn batch_permutation(table: &CaseTable, cfg: &PermutationConfig, seed: u64) -> Result<Vec<PermutationRow>> {
    cfg.batch
        .iter()
        .map(|bm| {
            let column = if table.column(&bm.column).is_some() {
                bm.column.clone()
            } else if table.column(&bm.metric).is_some() {
                log::warn!(
                    "column '{}' not found; testing raw '{}' against baseline {}",
                    bm.column,
                    bm.metric,
                    bm.baseline
                );
                bm.metric.clone()
            } else {
                return Err(Error::InvalidArgument(format!(
                    "neither '{}' nor '{}' is a column of the spatial table",
                    bm.column, bm.metric
                )));
            };
            let values = table.values(table.column(&column).expect("checked above"));
            let result = sign_flip_permutation(&values, bm.baseline, cfg.draws, seed, cfg.tail)?;
            Ok(PermutationRow {
                metric: bm.metric.clone(),
                column,
                result,
            })
        })
        .collect()
}

pub fn format_p(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".into()
    } else {
        format!("{p:.4}")
    }
}

pub fn table9_csv(rows: &[PermutationRow]) -> Vec<u8> {
    let records: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.metric.clone(),
                format!("{:.3}", r.result.observed_mean),
                format!("{:.3}", r.result.null_mean),
                format_p(r.result.p_one_sided),
                format_p(r.result.p_two_sided),
            ]
        })
        .collect();
    csv_bytes(&TABLE9_HEADER, &records)
}

/// ANOVA across rim compartments on per-case means. `None` when fewer than
/// two compartments have at least two defined means.
pub fn rim_anova(rows: &[RimRow]) -> Result<Option<AnovaResult>> {
    let mut groups: BTreeMap<(u8, u64, u64, String), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let (a, b, c, d) = rim_region_key(&r.region);
        let g = groups.entry((a, b.to_bits(), c.to_bits(), d)).or_default();
        g.extend(r.mean);
    }
    let groups: Vec<Vec<f64>> = groups.into_values().filter(|g| g.len() >= 2).collect();
    if groups.len() < 2 {
        return Ok(None);
    }
    one_way_anova(&groups).map(Some)
}

/// Per-case records plus cohort summaries; see [`CohortReport::verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub metrics: Vec<MetricsRow>,
    pub rim: Vec<RimRow>,
    pub spatial: Option<CaseTable>,
    pub summaries: Vec<SummaryRow>,
    pub rim_anova: Option<AnovaResult>,
    pub permutation: Vec<PermutationRow>,
}

fn summarize(values: &[f64]) -> Option<Descriptive<f64>> {
    descriptive(values).ok()
}

impl CohortReport {
    /// Rows are sorted by case first, so the result does not depend on input order.
    pub fn build(
        mut metrics: Vec<MetricsRow>,
        mut rim: Vec<RimRow>,
        mut spatial: Option<CaseTable>,
        permutation: Option<(&PermutationConfig, u64)>,
    ) -> Result<Self> {
        metrics.sort_by(|a, b| (&a.case_id, a.region).cmp(&(&b.case_id, b.region)));
        rim.sort_by(|a, b| {
            a.case_id
                .cmp(&b.case_id)
                .then_with(|| rim_region_key(&a.region).partial_cmp(&rim_region_key(&b.region)).expect("finite radii"))
        });
        if let Some(t) = spatial.as_mut() {
            t.sort();
        }
        let permutation = match (&spatial, permutation) {
            (Some(t), Some((cfg, seed))) => batch_permutation(t, cfg, seed)?,
            _ => Vec::new(),
        };
        let mut report = Self {
            rim_anova: rim_anova(&rim)?,
            metrics,
            rim,
            spatial,
            summaries: Vec::new(),
            permutation,
        };
        report.summaries = report.compute_summaries();
        report.verify()?;
        Ok(report)
    }

    fn metric_regions(&self) -> Vec<Region> {
        let mut regions: Vec<Region> = self.metrics.iter().map(|r| r.region).collect();
        regions.sort();
        regions.dedup();
        regions
    }

    fn rim_regions(&self) -> Vec<String> {
        let mut names: Vec<String> = self.rim.iter().map(|r| r.region.clone()).collect();
        names.sort_by(|a, b| rim_region_key(a).partial_cmp(&rim_region_key(b)).expect("finite radii"));
        names.dedup();
        names
    }

    fn table8_rows(&self) -> Vec<(String, usize)> {
        let Some(t) = &self.spatial else { return Vec::new() };
        SPATIAL_METRIC_NAMES
            .iter()
            .map(|s| s.to_string())
            .chain(SPATIAL_METRIC_NAMES.iter().map(|s| format!("{s}{NULL_SUFFIX}")))
            .filter_map(|name| t.column(&name).map(|c| (name, c)))
            .collect()
    }

    fn compute_summaries(&self) -> Vec<SummaryRow> {
        let mut out = Vec::new();
        for metric in Metric::ALL {
            for region in self.metric_regions() {
                let values: Vec<f64> = self
                    .metrics
                    .iter()
                    .filter(|r| r.region == region)
                    .filter_map(|r| r.metric(metric))
                    .collect();
                out.push(SummaryRow {
                    table: "table1".into(),
                    row: metric.label().into(),
                    column: region.name(),
                    summary: summarize(&values),
                });
            }
        }
        for region in self.rim_regions() {
            let values: Vec<f64> = self.rim.iter().filter(|r| r.region == region).filter_map(|r| r.mean).collect();
            out.push(SummaryRow {
                table: "table7".into(),
                row: region,
                column: "mean".into(),
                summary: summarize(&values),
            });
        }
        if let Some(t) = &self.spatial {
            for (name, col) in self.table8_rows() {
                out.push(SummaryRow {
                    table: "table8".into(),
                    row: name,
                    column: "mean ± SD".into(),
                    summary: summarize(&t.values(col)),
                });
            }
        }
        out
    }

    /// Summaries must be exactly recomputable from the per-case rows.
    pub fn verify(&self) -> Result<()> {
        if self.compute_summaries() != self.summaries {
            return Err(Error::InvalidData(
                "cohort summaries are inconsistent with the per-case rows".into(),
            ));
        }
        Ok(())
    }

    fn cell(&self, table: &str, row: &str, column: &str) -> Option<&Descriptive<f64>> {
        self.summaries
            .iter()
            .find(|s| s.table == table && s.row == row && s.column == column)
            .and_then(|s| s.summary.as_ref())
    }

    /// "Metric,ET,TC,WT,…" with mean ± sd cells.
    pub fn table1_csv(&self) -> Option<Vec<u8>> {
        if self.metrics.is_empty() {
            return None;
        }
        let regions: Vec<String> = self.metric_regions().iter().map(|r| r.name()).collect();
        let mut header = vec!["Metric"];
        header.extend(regions.iter().map(String::as_str));
        let records: Vec<Vec<String>> = Metric::ALL
            .iter()
            .map(|m| {
                std::iter::once(m.label().to_string())
                    .chain(regions.iter().map(|r| {
                        self.cell("table1", m.label(), r).map_or("n/a".into(), |d| d.format_pm(2))
                    }))
                    .collect()
            })
            .collect();
        Some(csv_bytes(&header, &records))
    }

    /// "Region,mean intensity" over per-case compartment means.
    pub fn table7_csv(&self) -> Option<Vec<u8>> {
        if self.rim.is_empty() {
            return None;
        }
        let records: Vec<_> = self
            .rim_regions()
            .into_iter()
            .map(|r| {
                let v = self.cell("table7", &r, "mean").map_or("n/a".into(), |d| format!("{:.2}", d.mean));
                vec![r, v]
            })
            .collect();
        Some(csv_bytes(&["Region", "mean intensity"], &records))
    }

    /// "Metric,mean ± SD" for the spatial metrics.
    pub fn table8_csv(&self) -> Option<Vec<u8>> {
        self.spatial.as_ref()?;
        let records: Vec<_> = self
            .table8_rows()
            .into_iter()
            .map(|(name, _)| {
                let v = self.cell("table8", &name, "mean ± SD").map_or("n/a".into(), |d| d.format_pm(2));
                vec![name, v]
            })
            .collect();
        Some(csv_bytes(&["Metric", "mean ± SD"], &records))
    }

    pub fn table9_csv(&self) -> Option<Vec<u8>> {
        (!self.permutation.is_empty()).then(|| table9_csv(&self.permutation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mrow(case: &str, region: Region, dice: f64, hd: Option<f64>) -> MetricsRow {
        MetricsRow {
            case_id: case.into(),
            region,
            dice,
            jaccard: dice / (2.0 - dice),
            hausdorff95_mm: hd,
            surface_dice: hd.map(|_| 0.9),
            a_voxels: 10,
            b_voxels: 12,
        }
    }

    fn rrow(case: &str, region: &str, mean: f64) -> RimRow {
        RimRow {
            case_id: case.into(),
            region: region.into(),
            mean: Some(mean),
            sd: Some(0.5),
            count: 100,
            volume_mm3: 100.0,
        }
    }

    fn spatial(rows: &[(&str, f64, f64)]) -> CaseTable {
        CaseTable {
            columns: vec!["FractionInside".into(), "MeanEdgeDistance".into()],
            rows: rows.iter().map(|&(c, a, b)| (c.to_string(), vec![Some(a), Some(b)])).collect(),
        }
    }

    #[test]
    fn table1_layout() {
        let rows = vec![
            mrow("a", Region::WT, 0.9, Some(2.0)),
            mrow("a", Region::ET, 0.8, Some(3.0)),
            mrow("b", Region::ET, 0.6, None),
            mrow("b", Region::WT, 0.7, Some(4.0)),
        ];
        let rep = CohortReport::build(rows, vec![], None, None).unwrap();
        let text = String::from_utf8(rep.table1_csv().unwrap()).unwrap();
        assert_eq!(
            text,
            "Metric,ET,WT\n\
             Dice,0.70 ± 0.14,0.80 ± 0.14\n\
             Hausdorff95,3.00 ± n/a,3.00 ± 1.41\n\
             Jaccard,0.55 ± 0.17,0.68 ± 0.20\n\
             Surface Dice,0.90 ± n/a,0.90 ± 0.00\n"
        );
    }

    #[test]
    fn singleton_cohort_flags_sd() {
        let rep = CohortReport::build(vec![mrow("a", Region::ET, 0.5, Some(1.0))], vec![], None, None).unwrap();
        let cell = rep.cell("table1", "Dice", "ET").unwrap();
        assert_eq!((cell.mean, cell.sd, cell.n), (0.5, None, 1));
    }

    #[test]
    fn order_invariance() {
        let rows = vec![
            mrow("c", Region::ET, 0.1, Some(1.5)),
            mrow("a", Region::ET, 0.7, Some(2.5)),
            mrow("b", Region::ET, 0.3, Some(7.25)),
        ];
        let mut shuffled = rows.clone();
        shuffled.reverse();
        let rim = vec![rrow("a", "0-4mm", 2.0), rrow("a", "NEH", 5.0), rrow("a", "0-2mm", 3.0)];
        let mut rim_shuffled = rim.clone();
        rim_shuffled.swap(0, 2);
        let sp = spatial(&[("x", 0.5, 1.0), ("y", 0.25, 3.0)]);
        let mut sp_shuffled = sp.clone();
        sp_shuffled.rows.reverse();
        let mut cfg = PermutationConfig::default();
        cfg.batch.retain(|b| b.metric == "FractionInside" || b.metric == "MeanEdgeDistance");
        let a = CohortReport::build(rows, rim, Some(sp), Some((&cfg, 1))).unwrap();
        let b = CohortReport::build(shuffled, rim_shuffled, Some(sp_shuffled), Some((&cfg, 1))).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            String::from_utf8(a.table7_csv().unwrap()).unwrap(),
            "Region,mean intensity\nNEH,5.00\n0-2mm,3.00\n0-4mm,2.00\n"
        );
    }

    #[test]
    fn verify_detects_tampering() {
        let mut rep = CohortReport::build(vec![mrow("a", Region::ET, 0.5, None)], vec![], None, None).unwrap();
        rep.metrics[0].dice = 0.6;
        assert!(matches!(rep.verify(), Err(Error::InvalidData(_))));
    }

    #[test]
    fn table9_columns_and_p_format() {
        let sp = spatial(&[("a", 0.5, 2.0), ("b", 0.7, 3.0), ("c", 0.9, 2.5)]);
        let mut cfg = PermutationConfig::default();
        cfg.batch.retain(|b| b.metric == "FractionInside" || b.metric == "MeanEdgeDistance");
        let rep = CohortReport::build(vec![], vec![], Some(sp), Some((&cfg, 42))).unwrap();
        let text = String::from_utf8(rep.table9_csv().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "metric,observed_mean,null_mean,p_one_sided,p_two_sided");
        // Raw FractionInside is used (no _vs_null column); exact enumeration over 2³ patterns.
        assert_eq!(lines.next().unwrap(), "FractionInside,0.700,1.000,1.0000,0.2500");
        assert_eq!(lines.next().unwrap(), "MeanEdgeDistance,2.500,0.000,0.1250,0.2500");
        assert_eq!(format_p(0.00009), "<0.0001");
        assert_eq!(format_p(0.0344), "0.0344");
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![mrow("a", Region::Label(3), 0.25, None), mrow("a", Region::TC, 1.0 / 3.0, Some(1.2))];
        let p = dir.path().join("m.csv");
        std::fs::write(&p, metrics_csv(&rows)).unwrap();
        assert_eq!(read_metrics_csv(&p).unwrap(), rows);
        let rim = vec![rrow("a", "NEH", 0.1), RimRow { mean: None, sd: None, count: 0, ..rrow("a", "0-2mm", 0.0) }];
        std::fs::write(&p, rim_csv(&rim)).unwrap();
        assert_eq!(read_rim_csv(&p).unwrap(), rim);
        let t = spatial(&[("a", 0.1, 0.2)]);
        std::fs::write(&p, t.to_csv()).unwrap();
        assert_eq!(CaseTable::read(&p).unwrap(), t);
    }

    #[test]
    fn malformed_csv_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "case,region,dice,jaccard,hausdorff95_mm,surface_dice,a_voxels,b_voxels\na,ET,0.5,0.3,,,1,2\na,XX,0.5,0.3,,,1,2\n").unwrap();
        match read_metrics_csv(&p) {
            Err(Error::Csv { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn anova_on_rim_means() {
        let mut rows = Vec::new();
        for (i, case) in ["a", "b", "c"].iter().enumerate() {
            let j = i as f64 * 0.01;
            rows.push(rrow(case, "NEH", 5.0 + j));
            rows.push(rrow(case, "0-2mm", 3.0 - j));
            rows.push(rrow(case, "0-4mm", 2.0 + j));
        }
        let a = rim_anova(&rows).unwrap().unwrap();
        assert_eq!((a.df_between, a.df_within), (2, 6));
        assert!(a.p_value < 1e-6);
        assert!(rim_anova(&rows[..3]).unwrap().is_none());
    }
}
