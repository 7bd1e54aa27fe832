use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster-distance update used when building the initialization tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

/// Color difference used by the similar-color criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMetric {
    #[default]
    Redmean,
    Rgb,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            _ => Err(format!("unknown linkage `{s}` (single, complete, average)")),
        }
    }
}

impl std::str::FromStr for ColorMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "redmean" => Ok(ColorMetric::Redmean),
            "rgb" => Ok(ColorMetric::Rgb),
            _ => Err(format!("unknown color metric `{s}` (redmean, rgb)")),
        }
    }
}

/// Tunables shared by initialization, rendering and adaptive control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Max pairwise color distance for a subset to count as one color.
    pub omega_color: f64,
    /// World-space distance under which vertices count as coincident.
    pub omega_dist: f64,
    /// |Pearson r| above which a triangle counts as collinear.
    pub omega_pear: f64,
    /// Initial learning rate of mu1, mu2, mu3.
    pub lr_mu: f64,
    pub opacity_prune: f64,
    pub densify_grad_threshold: f64,
    /// Gaussian value at the boundary ellipse; footprints are truncated below it.
    pub cutoff: f64,
    pub sh_order: usize,
    pub linkage: Linkage,
    pub color_metric: ColorMetric,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            omega_color: 5.0,
            omega_dist: 0.5,
            omega_pear: 0.9,
            lr_mu: 2e-4,
            opacity_prune: 0.005,
            densify_grad_threshold: 2e-4,
            cutoff: 1.0 / 255.0,
            sh_order: 0,
            linkage: Linkage::Average,
            color_metric: ColorMetric::Redmean,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_color", self.omega_color),
            ("omega_dist", self.omega_dist),
            ("lr_mu", self.lr_mu),
            ("opacity_prune", self.opacity_prune),
            ("densify_grad_threshold", self.densify_grad_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.omega_pear > 0.0 && self.omega_pear < 1.0) {
            return Err(Error::InvalidConfig(format!("omega_pear must lie in (0,1), got {}", self.omega_pear)));
        }
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::InvalidConfig(format!("cutoff must lie in (0,1), got {}", self.cutoff)));
        }
        if self.sh_order > 3 {
            return Err(Error::ShOrder(self.sh_order));
        }
        Ok(())
    }
}
