//! Small-scale photometric fitting of a scene against posed images.

mod grad;
mod loss;
mod params;

pub use grad::{supports_analytic, Objective};
pub use loss::{gaussian_taps, mae, photometric_loss, photometric_loss_grad, psnr, ssim, LossWeights, SSIM_SIGMA, SSIM_WINDOW};
pub use params::{logit, pack, sigmoid, unpack, ParamGroup, ParamSlot};

use std::io::Write;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{densify_clone_split, kind_totals, prune_pass, DensifyParams};
use crate::error::{Error, Result};
use crate::model::{Camera, Config, Image, Scene};

/// Keeps near-zero gradients from being normalized into full steps.
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// Central differences for everything.
    Numeric,
    /// Closed form; fails on scenes it does not cover.
    Analytic,
    /// Closed form when the scene allows it, central differences otherwise.
    #[default]
    Auto,
}

impl std::str::FromStr for GradientMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "numeric" => Ok(GradientMode::Numeric),
            "analytic" => Ok(GradientMode::Analytic),
            "auto" => Ok(GradientMode::Auto),
            _ => Err(format!("unknown gradient mode `{s}` (numeric, analytic, auto)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    /// `mu1`, `mu2`, `mu3`.
    pub position: f64,
    pub rotation: f64,
    /// Applied to log scales.
    pub scale: f64,
    /// Applied to opacity logits.
    pub opacity: f64,
    pub color: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        LearningRates {
            position: 2e-4,
            rotation: 1e-3,
            scale: 5e-3,
            opacity: 5e-2,
            color: 2.5e-3,
        }
    }
}

impl LearningRates {
    fn get(&self, g: ParamGroup) -> f64 {
        match g {
            ParamGroup::Position => self.position,
            ParamGroup::Rotation => self.rotation,
            ParamGroup::Scale => self.scale,
            ParamGroup::Opacity => self.opacity,
            ParamGroup::Color => self.color,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub iterations: usize,
    pub lr: LearningRates,
    /// The position rate decays exponentially to `lr.position * lr_position_final`.
    pub lr_position_final: f64,
    /// First-moment decay of the optimizer.
    pub momentum: f64,
    /// Second-moment decay of the optimizer.
    pub beta2: f64,
    pub weights: LossWeights,
    pub gradient: GradientMode,
    /// Finite-difference step in packed parameter space.
    pub fd_step: f64,
    /// Densify and prune every this many iterations.
    pub interval: usize,
    pub densify: bool,
    pub prune: bool,
    /// Densification stops after this iteration.
    pub densify_until: usize,
    pub clone_max_scale: f64,
    pub clone_step: f64,
    /// Pruning thresholds, densification threshold and render cutoff.
    pub control: Config,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 500,
            lr: LearningRates::default(),
            lr_position_final: 0.01,
            momentum: 0.9,
            beta2: 0.999,
            weights: LossWeights::default(),
            gradient: GradientMode::Auto,
            fd_step: 1e-4,
            interval: 100,
            densify: true,
            prune: true,
            densify_until: usize::MAX,
            clone_max_scale: 0.01,
            clone_step: 1.0,
            control: Config::default(),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let lr = &self.lr;
        for (name, v) in [
            ("lr position", lr.position),
            ("lr rotation", lr.rotation),
            ("lr scale", lr.scale),
            ("lr opacity", lr.opacity),
            ("lr color", lr.color),
            ("lr_position_final", self.lr_position_final),
            ("fd_step", self.fd_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidConfig("moment decays must lie in [0,1)".into()));
        }
        if self.interval == 0 {
            return Err(Error::InvalidConfig("densify/prune interval must be at least 1".into()));
        }
        self.control.validate()
    }

    fn position_rate(&self, it: usize) -> f64 {
        let t = if self.iterations > 1 {
            it as f64 / (self.iterations - 1) as f64
        } else {
            0.0
        };
        self.lr.position * crate::math::exp(t * crate::math::ln(self.lr_position_final))
    }
}

/// One row of the fit log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loss: f64,
    pub ellipses: usize,
    pub lines: usize,
    pub triangles: usize,
}

/// Counts of control events during a fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitStats {
    pub densify_events: usize,
    pub primitive_prune_events: usize,
    pub vertex_prune_events: usize,
    pub clones_and_splits: usize,
    pub removed: usize,
    pub conversions: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub scene: Scene,
    /// Loss of the view used at each iteration, measured before its update.
    pub history: Vec<f64>,
    pub records: Vec<IterationRecord>,
    /// Mean loss over all views for the returned scene.
    pub final_loss: f64,
    pub stats: FitStats,
}

/// Fits `scene` to the views. See [`fit_with`].
pub fn fit(scene: &Scene, views: &[(Camera, Image)], cfg: &FitConfig) -> Result<FitResult> {
    fit_with(scene, views, cfg, |_, _| Ok(()))
}

/// Gradient descent with first and second moment estimates over all packed
/// parameters, cycling through the views. Every `interval` iterations the
/// scene is densified (clone or split on large mean position gradients) and
/// pruned (vertex rules together with opacity pruning). `observer` sees
/// every iteration record and the scene after its update.
pub fn fit_with(
    scene: &Scene,
    views: &[(Camera, Image)],
    cfg: &FitConfig,
    mut observer: impl FnMut(&IterationRecord, &Scene) -> Result<()>,
) -> Result<FitResult> {
    if views.is_empty() {
        return Err(Error::InvalidConfig("fitting needs at least one view".into()));
    }
    cfg.validate()?;
    scene.validate()?;
    let cutoff = cfg.control.cutoff;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = scene.clone();
    let (mut x, mut slots) = pack(&current);
    let mut m = vec![0.0; x.len()];
    let mut v = vec![0.0; x.len()];
    let mut steps = 0i32;
    let mut pos_grad = vec![Vector3::zeros(); current.primitives.len()];
    let mut pos_count = 0usize;
    let mut stats = FitStats::default();
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut records = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let (cam, target) = &views[it % views.len()];
        let obj = Objective {
            camera: cam,
            target,
            weights: cfg.weights,
            cutoff,
        };
        let use_analytic = match cfg.gradient {
            GradientMode::Numeric => false,
            GradientMode::Analytic => true,
            GradientMode::Auto => supports_analytic(&current),
        };
        let (loss, g) = if use_analytic {
            obj.analytic_gradient(&current)?
        } else {
            let all: Vec<usize> = (0..x.len()).collect();
            (obj.loss(&current)?, obj.numeric_gradient(&current, &all, cfg.fd_step)?)
        };
        history.push(loss);

        for (k, s) in slots.iter().enumerate() {
            if s.group == ParamGroup::Position && s.local < 3 {
                pos_grad[s.primitive][s.local] += g[k];
            }
        }
        pos_count += 1;

        steps += 1;
        let (b1, b2) = (cfg.momentum, cfg.beta2);
        let c1 = 1.0 - crate::math::pow(b1, f64::from(steps));
        let c2 = 1.0 - crate::math::pow(b2, f64::from(steps));
        let lr_pos = cfg.position_rate(it);
        let x_prev = x.clone();
        for k in 0..x.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let rate = match slots[k].group {
                ParamGroup::Position => lr_pos,
                grp => cfg.lr.get(grp),
            };
            let denom = (v[k] / c2).sqrt() + ADAM_EPS;
            x[k] -= rate * (m[k] / c1) / denom;
        }
        // primitives whose parameters did not move keep their exact values
        let mut moved = vec![false; current.primitives.len()];
        for (k, s) in slots.iter().enumerate() {
            moved[s.primitive] |= x[k] != x_prev[k];
        }
        let updated = unpack(&current, &x)?;
        for (i, p) in updated.primitives.into_iter().enumerate() {
            if moved[i] {
                current.primitives[i] = p;
            }
        }

        if (it + 1) % cfg.interval == 0 && it + 1 < cfg.iterations {
            let before = current.clone();
            if cfg.densify && it < cfg.densify_until {
                let params = DensifyParams {
                    grad_threshold: cfg.control.densify_grad_threshold,
                    clone_max_scale: cfg.clone_max_scale,
                    clone_step: cfg.clone_step,
                };
                let mut next = Vec::with_capacity(current.primitives.len());
                for (p, g) in current.primitives.iter().zip(&pos_grad) {
                    let mean = g / pos_count as f64;
                    let out = densify_clone_split(p, &mean, &params, &mut rng);
                    stats.clones_and_splits += out.len() - 1;
                    next.extend(out);
                }
                current.primitives = next;
                stats.densify_events += 1;
            }
            if cfg.prune {
                let report = prune_pass(&mut current, &cfg.control);
                stats.primitive_prune_events += 1;
                stats.vertex_prune_events += 1;
                stats.removed += report.removed;
                stats.conversions += report.triangle_to_ellipse + report.triangle_to_line + report.line_to_ellipse;
            }
            if current != before {
                (x, slots) = pack(&current);
                m = vec![0.0; x.len()];
                v = vec![0.0; x.len()];
                steps = 0;
            }
            pos_grad = vec![Vector3::zeros(); current.primitives.len()];
            pos_count = 0;
        }

        let (ellipses, lines, triangles) = kind_totals(&current);
        let rec = IterationRecord {
            iteration: it,
            loss,
            ellipses,
            lines,
            triangles,
        };
        records.push(rec);
        observer(&rec, &current)?;
    }

    let mut total = 0.0;
    for (cam, target) in views {
        total += Objective {
            camera: cam,
            target,
            weights: cfg.weights,
            cutoff,
        }
        .loss(&current)?;
    }
    Ok(FitResult {
        scene: current,
        history,
        records,
        final_loss: total / views.len() as f64,
        stats,
    })
}

pub const CSV_HEADER: &str = "iteration,loss,ellipses,lines,triangles";

/// Writes records as CSV with a header line.
pub fn write_log_csv(mut w: impl Write, records: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{},{:.12e},{},{},{}", r.iteration, r.loss, r.ellipses, r.lines, r.triangles)?;
    }
    Ok(())
}
