use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusionConfig;
use crate::morphology::DEFAULT_RIM_RADII_MM;
use crate::segmetrics::DEFAULT_SURFACE_TOLERANCE_MM;
use crate::spatial::{DEFAULT_NEAR_EDGE_MM, DEFAULT_NULL_SHIFTS};
use crate::stats::{Tail, DEFAULT_DRAWS};
use crate::volume::Region;

pub const DEFAULT_SEED: u64 = 42;

/// Everything a batch run depends on, as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Seed for permutation draws, null shifts and phantom noise.
    pub seed: u64,
    pub fusion: FusionConfig,
    pub metrics: MetricsConfig,
    pub rim: RimConfig,
    pub spatial: SpatialConfig,
    pub permutation: PermutationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            fusion: FusionConfig::default(),
            metrics: MetricsConfig::default(),
            rim: RimConfig::default(),
            spatial: SpatialConfig::default(),
            permutation: PermutationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        if self.metrics.regions.is_empty() {
            return Err(Error::InvalidArgument("metrics.regions must not be empty".into()));
        }
        if !(self.metrics.tau_mm.is_finite() && self.metrics.tau_mm > 0.0) {
            return Err(Error::InvalidArgument(format!("metrics.tau_mm {} must be positive", self.metrics.tau_mm)));
        }
        if self.rim.radii_mm.is_empty()
            || self.rim.radii_mm.iter().any(|&r| !(r.is_finite() && r > 0.0))
            || self.rim.radii_mm.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidArgument(format!(
                "rim.radii_mm {:?} must be positive and strictly ascending",
                self.rim.radii_mm
            )));
        }
        if !(self.spatial.near_mm.is_finite() && self.spatial.near_mm >= 0.0) {
            return Err(Error::InvalidArgument(format!("spatial.near_mm {} must be >= 0", self.spatial.near_mm)));
        }
        if self.spatial.null_shifts == 0 {
            return Err(Error::InvalidArgument("spatial.null_shifts must be >= 1".into()));
        }
        if self.permutation.draws == 0 {
            return Err(Error::InvalidArgument("permutation.draws must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub regions: Vec<Region>,
    pub tau_mm: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            regions: Region::DEFAULT_EVALUATION.to_vec(),
            tau_mm: DEFAULT_SURFACE_TOLERANCE_MM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RimConfig {
    pub radii_mm: Vec<f64>,
    /// Report disjoint bands instead of cumulative shells.
    pub annular: bool,
}

impl Default for RimConfig {
    fn default() -> Self {
        Self {
            radii_mm: DEFAULT_RIM_RADII_MM.to_vec(),
            annular: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialConfig {
    pub near_mm: f64,
    /// Measure distance to the ETRL region rather than its boundary.
    pub to_region: bool,
    /// Also emit each metric divided by its random-shift chance baseline.
    pub ratio_vs_null: bool,
    pub null_shifts: usize,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            near_mm: DEFAULT_NEAR_EDGE_MM,
            to_region: false,
            ratio_vs_null: false,
            null_shifts: DEFAULT_NULL_SHIFTS,
        }
    }
}

/// One row of the batch permutation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchMetric {
    /// Row label.
    pub metric: String,
    /// Preferred column; when absent from the input the `metric` column is used.
    pub column: String,
    pub baseline: f64,
}

impl BatchMetric {
    fn new(metric: &str, column: &str, baseline: f64) -> Self {
        Self {
            metric: metric.into(),
            column: column.into(),
            baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PermutationConfig {
    pub draws: u64,
    pub tail: Tail,
    pub batch: Vec<BatchMetric>,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        // Distances are tested against 0, chance-normalized ratios against 1.
        Self {
            draws: DEFAULT_DRAWS,
            tail: Tail::Upper,
            batch: vec![
                BatchMetric::new("FractionInside", "FractionInside_vs_null", 1.0),
                BatchMetric::new("FractionNearEdge", "FractionNearEdge_vs_null", 1.0),
                BatchMetric::new("MeanEdgeDistance", "MeanEdgeDistance", 0.0),
                BatchMetric::new("VolumeContainment", "VolumeContainment_vs_null", 1.0),
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.fusion.sigma_mm, 1.5);
        assert_eq!(cfg.fusion.threshold, 0.5);
        let back: PipelineConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let partial: PipelineConfig = serde_json::from_str(r#"{"seed": 7, "rim": {"radii_mm": [1, 3]}}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.rim.radii_mm, vec![1.0, 3.0]);
        assert_eq!(partial.metrics, MetricsConfig::default());
        assert!(cfg.to_json().contains(r#""ET""#));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sead": 1}"#).is_err());
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"fusion": {"sigma": 1}}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = PipelineConfig::default();
        cfg.rim.radii_mm = vec![4.0, 2.0];
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.fusion.threshold = 1.0;
        assert!(cfg.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
    }
}
