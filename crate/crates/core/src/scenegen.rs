//! Procedural desk-scale scenes: layered primitives composed back to front
//! into a piecewise-smooth depth field, plus an aligned guide intensity.
//!
//! The guide brightens with depth and carries a per-layer albedo and a
//! smooth seeded texture, so its edges sit on the depth discontinuities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{DepthField, Grid};
use crate::rng::{CounterRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Plane,
    Ramp,
    Rectangle,
    Disk,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Plane, Shape::Ramp, Shape::Rectangle, Shape::Disk];

    fn is_background(self) -> bool {
        matches!(self, Shape::Plane | Shape::Ramp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub layers: usize,
    pub depth_min: f64,
    pub depth_max: f64,
    pub shapes: Vec<Shape>,
    /// When set, every layer sits at one of these depths (no ramps), so a
    /// mixture prior over the same values has a well-defined true mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            layers: 3,
            depth_min: 1.0,
            depth_max: 8.0,
            shapes: Shape::ALL.to_vec(),
            levels: None,
            seed: 0,
        }
    }
}

impl SceneSpec {
    /// Two-layer scenes whose layers take distinct values from `levels`.
    pub fn leveled(width: usize, height: usize, levels: Vec<f64>, seed: u64) -> Self {
        let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            width,
            height,
            layers: 2,
            depth_min: lo,
            depth_max: hi,
            shapes: vec![Shape::Plane, Shape::Rectangle, Shape::Disk],
            levels: Some(levels),
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::invalid(
                "scene size",
                "width and height must be >= 16",
            ));
        }
        if self.layers == 0 {
            return Err(Error::invalid("layers", "must be >= 1"));
        }
        if !(self.depth_min.is_finite() && self.depth_min > 0.0) {
            return Err(Error::invalid("depth_min", "must be > 0"));
        }
        if !(self.depth_max.is_finite() && self.depth_max > self.depth_min) {
            return Err(Error::invalid("depth_max", "must exceed depth_min"));
        }
        if self.shapes.is_empty() {
            return Err(Error::invalid("shapes", "vocabulary is empty"));
        }
        if let Some(levels) = &self.levels {
            if levels.is_empty() {
                return Err(Error::invalid("levels", "must not be empty"));
            }
            if levels
                .iter()
                .any(|l| !(l.is_finite() && *l >= self.depth_min && *l <= self.depth_max))
            {
                return Err(Error::invalid("levels", "must lie within the depth range"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub gt: DepthField,
    pub guide: Grid,
}

/// Sequential draws from the layout stream.
struct Draws {
    rng: CounterRng,
    next: u64,
}

impl Draws {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.rng.uniform_at(self.next, 0);
        self.next += 1;
        lo + (hi - lo) * u
    }

    fn pick(&mut self, n: usize) -> usize {
        let i = self.rng.range_at(self.next, 0, n - 1);
        self.next += 1;
        i
    }
}

enum Profile {
    Constant(f64),
    /// depth = base + gx·x + gy·y
    Linear {
        base: f64,
        gx: f64,
        gy: f64,
    },
}

impl Profile {
    fn at(&self, x: f64, y: f64) -> f64 {
        match *self {
            Profile::Constant(d) => d,
            Profile::Linear { base, gx, gy } => base + gx * x + gy * y,
        }
    }
}

enum Region {
    Everywhere,
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Region {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Region::Everywhere => true,
            Region::Rectangle { x0, x1, y0, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            Region::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
        }
    }
}

/// Ramp over the whole image between two in-range depths.
fn ramp_profile(d: &mut Draws, spec: &SceneSpec) -> Profile {
    let a = d.uniform(spec.depth_min, spec.depth_max);
    let b = d.uniform(spec.depth_min, spec.depth_max);
    let theta = d.uniform(0.0, std::f64::consts::TAU);
    let (w, h) = ((spec.width - 1) as f64, (spec.height - 1) as f64);
    let (c, s) = (theta.cos(), theta.sin());
    // projection onto the direction, normalized to [0, 1] over the corners
    let corners = [0.0, c * w, s * h, c * w + s * h];
    let pmin = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let pmax = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (pmax - pmin).max(1e-12);
    let k = (b - a) / span;
    Profile::Linear {
        base: a - k * pmin,
        gx: k * c,
        gy: k * s,
    }
}

fn level_depth(d: &mut Draws, levels: &[f64], exclude: Option<usize>) -> (usize, f64) {
    let choices: Vec<usize> = (0..levels.len())
        .filter(|&i| Some(i) != exclude || levels.len() == 1)
        .collect();
    let i = choices[d.pick(choices.len())];
    (i, levels[i])
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut draws = Draws {
        rng: CounterRng::new(spec.seed, Stream::SceneLayout),
        next: 0,
    };
    let d = &mut draws;
    let (w, h) = (spec.width as f64, spec.height as f64);

    let backgrounds: Vec<Shape> = spec
        .shapes
        .iter()
        .copied()
        .filter(|s| s.is_background())
        .collect();
    let regions: Vec<Shape> = spec
        .shapes
        .iter()
        .copied()
        .filter(|s| !s.is_background())
        .collect();

    let mut layers: Vec<(Region, Profile, f64)> = Vec::with_capacity(spec.layers);
    let mut last_level = None;
    for layer in 0..spec.layers {
        let region = if layer == 0 {
            Region::Everywhere
        } else {
            match regions
                .get(d.pick(regions.len().max(1)))
                .copied()
                .unwrap_or(Shape::Rectangle)
            {
                Shape::Disk => {
                    let r = d.uniform(0.12, 0.3) * w.min(h);
                    Region::Disk {
                        cx: d.uniform(0.2, 0.8) * w,
                        cy: d.uniform(0.2, 0.8) * h,
                        r,
                    }
                }
                _ => {
                    let (cx, cy) = (d.uniform(0.2, 0.8) * w, d.uniform(0.2, 0.8) * h);
                    let (hw, hh) = (d.uniform(0.1, 0.3) * w, d.uniform(0.1, 0.3) * h);
                    Region::Rectangle {
                        x0: cx - hw,
                        x1: cx + hw,
                        y0: cy - hh,
                        y1: cy + hh,
                    }
                }
            }
        };
        let profile = match &spec.levels {
            Some(levels) => {
                let (i, v) = level_depth(d, levels, last_level);
                last_level = Some(i);
                Profile::Constant(v)
            }
            None => {
                let ramp = if layer == 0 {
                    backgrounds.get(d.pick(backgrounds.len().max(1))) == Some(&Shape::Ramp)
                } else {
                    spec.shapes.contains(&Shape::Ramp) && d.uniform(0.0, 1.0) < 0.25
                };
                if ramp {
                    ramp_profile(d, spec)
                } else {
                    Profile::Constant(d.uniform(spec.depth_min, spec.depth_max))
                }
            }
        };
        let albedo = d.uniform(0.0, 1.0);
        layers.push((region, profile, albedo));
    }

    let tex_rng = CounterRng::new(spec.seed, Stream::SceneTexture);
    let waves: Vec<(f64, f64, f64, f64)> = (0..3u64)
        .map(|k| {
            let period = 12.0 + 36.0 * tex_rng.uniform_at(k, 0);
            let theta = std::f64::consts::TAU * tex_rng.uniform_at(k, 1);
            let phase = std::f64::consts::TAU * tex_rng.uniform_at(k, 2);
            (period, theta.cos(), theta.sin(), phase)
        })
        .collect();

    let range = spec.depth_max - spec.depth_min;
    let n = spec.width * spec.height;
    let mut depth = Vec::with_capacity(n);
    let mut guide = Vec::with_capacity(n);
    for py in 0..spec.height {
        for px in 0..spec.width {
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            let mut top = 0;
            for (k, (region, _, _)) in layers.iter().enumerate() {
                if region.contains(x, y) {
                    top = k;
                }
            }
            let (_, profile, albedo) = &layers[top];
            let z = profile
                .at(px as f64, py as f64)
                .clamp(spec.depth_min, spec.depth_max);
            let texture: f64 = waves
                .iter()
                .map(|(p, c, s, ph)| {
                    0.01 * ((c * x + s * y) * std::f64::consts::TAU / p + ph).sin()
                })
                .sum();
            depth.push(z);
            guide.push(0.8 * (z - spec.depth_min) / range + 0.1 * albedo + texture);
        }
    }
    let guide = Grid::new(spec.width, spec.height, guide)?;
    let (lo, hi) = guide.min_max();
    let guide = if hi > lo {
        Grid::new(
            spec.width,
            spec.height,
            guide.data().iter().map(|g| (g - lo) / (hi - lo)).collect(),
        )?
    } else {
        Grid::filled(spec.width, spec.height, 0.5)?
    };
    Ok(Scene {
        gt: DepthField::from_values(spec.width, spec.height, depth)?,
        guide,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_plane_is_constant() {
        let spec = SceneSpec {
            layers: 1,
            shapes: vec![Shape::Plane],
            ..SceneSpec::default()
        };
        let s = generate_scene(&spec).unwrap();
        let v0 = s.gt.values()[0];
        assert!(s.gt.values().iter().all(|&v| v == v0));
        assert!(v0 >= spec.depth_min && v0 <= spec.depth_max);
    }

    #[test]
    fn deterministic() {
        let spec = SceneSpec::default().with_seed(42);
        assert_eq!(
            generate_scene(&spec).unwrap(),
            generate_scene(&spec).unwrap()
        );
        assert_ne!(
            generate_scene(&spec).unwrap(),
            generate_scene(&spec.with_seed(43)).unwrap()
        );
    }

    #[test]
    fn within_range_and_valid() {
        for seed in 0..100 {
            let spec = SceneSpec {
                width: 32,
                height: 32,
                ..SceneSpec::default().with_seed(seed)
            };
            let s = generate_scene(&spec).unwrap();
            assert!(s.gt.is_fully_valid());
            assert!(s
                .gt
                .values()
                .iter()
                .all(|&v| v >= spec.depth_min && v <= spec.depth_max));
            let (lo, hi) = s.guide.min_max();
            assert!(lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn leveled_scenes_use_levels() {
        let spec = SceneSpec::leveled(32, 32, vec![2.0, 7.0], 3);
        let s = generate_scene(&spec).unwrap();
        assert!(s.gt.values().iter().all(|&v| v == 2.0 || v == 7.0));
    }

    #[test]
    fn rejects_bad_specs() {
        let base = SceneSpec::default();
        assert!(generate_scene(&SceneSpec {
            width: 8,
            ..base.clone()
        })
        .is_err());
        assert!(generate_scene(&SceneSpec {
            depth_min: 0.0,
            ..base.clone()
        })
        .is_err());
        assert!(generate_scene(&SceneSpec {
            depth_max: 0.5,
            ..base.clone()
        })
        .is_err());
        assert!(generate_scene(&SceneSpec { layers: 0, ..base }).is_err());
    }
}
