//! Experiment configuration: one JSON file with a section per command.
//! Every field has a default, so `{}` is a valid file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use pluripot_core::series::SeriesSpec;
use pluripot_core::{ComplexPoint, RegionSpec, SolverConfig};
use serde::{Deserialize, Serialize};

fn c(re: f64, im: f64) -> ComplexPoint {
    ComplexPoint::new(re, im)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub series: SeriesSpec,
    pub solver: SolverConfig,
    pub prop_a: PropAConfig,
    pub prop_b: PropBConfig,
    pub prop_c: PropCConfig,
    pub solve: SolveConfig,
    pub dichotomy: DichotomyConfig,
    pub connectivity: ConnectivityConfig,
    pub path: PathConfig,
    pub blowup: BlowupConfig,
    pub envelope: EnvelopeConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropAConfig {
    pub dimension: usize,
    /// Defaults to `𝒜_n`.
    pub region: Option<RegionSpec>,
    pub thin_radius: f64,
    pub thin_samples: usize,
    pub resolutions: Vec<usize>,
    pub half_side: f64,
}

impl Default for PropAConfig {
    fn default() -> Self {
        Self { dimension: 2, region: None, thin_radius: 0.1, thin_samples: 9, resolutions: vec![65, 129], half_side: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropBConfig {
    pub ball_center: ComplexPoint,
    pub ball_radius: f64,
    pub resolution: usize,
    pub cell_resolution: usize,
    pub cube_centers: Vec<Vec<ComplexPoint>>,
    pub half_side: f64,
    pub separation_resolution: usize,
    pub witness_floor: f64,
}

impl Default for PropBConfig {
    fn default() -> Self {
        let q = c(-0.5, -0.5);
        let o = c(0.0, 0.0);
        Self {
            ball_center: q,
            ball_radius: 0.0,
            resolution: 257,
            cell_resolution: 13,
            cube_centers: vec![vec![q, o], vec![o, q], vec![o, o]],
            half_side: 0.25,
            separation_resolution: 65,
            witness_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropCConfig {
    pub ball_center: ComplexPoint,
    pub ball_radius: f64,
    pub resolution: usize,
    pub fiber_samples: Vec<ComplexPoint>,
    pub pole_samples: usize,
    pub t_stride: usize,
    pub omega_floor: f64,
}

impl Default for PropCConfig {
    fn default() -> Self {
        Self {
            ball_center: c(-0.5, -0.5),
            ball_radius: 0.0,
            resolution: 257,
            fiber_samples: vec![c(0.0, 0.0), c(0.3, 0.1), c(-0.7, 0.2)],
            pole_samples: 12,
            t_stride: 1024,
            omega_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub center: ComplexPoint,
    pub radius: f64,
    pub resolution: usize,
    pub oracle_tolerance: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { center: c(0.0, 0.0), radius: 0.25, resolution: 257, oracle_tolerance: 0.02 }
    }
}

/// Contact set for the dichotomy experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContactSet {
    /// The whole domain.
    Domain,
    Disc { center: ComplexPoint, radius: f64 },
    /// A planar region, sampled by cell certificates.
    Region { region: RegionSpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomyConfig {
    pub contact: ContactSet,
    pub resolution: usize,
    pub levels: usize,
    pub delta: f64,
    pub sup_floor: f64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            contact: ContactSet::Region { region: RegionSpec::b() },
            resolution: 257,
            levels: 4,
            delta: pluripot_core::extremal::DEFAULT_DELTA_CLASSIFY,
            sup_floor: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectivityConfig {
    /// Defaults to `E^2 ∖ 𝒜_2`.
    pub obstruction: Option<RegionSpec>,
    /// Explicit cube centres; the default suite when empty.
    pub cube_centers: Vec<Vec<ComplexPoint>>,
    pub half_side: f64,
    pub resolutions: Vec<usize>,
}

impl Default for ConnectivityConfig {
    fn default() -> Self {
        Self { obstruction: None, cube_centers: Vec::new(), half_side: 0.25, resolutions: vec![65, 129] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub z: Vec<ComplexPoint>,
    pub w: Vec<ComplexPoint>,
    pub cube_center: Vec<ComplexPoint>,
    pub half_side: f64,
    /// Defaults to `𝒜_n` with `n = z.len()`.
    pub region: Option<RegionSpec>,
    pub step_fraction: f64,
    pub max_refinements: usize,
    pub candidates: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        let p = pluripot_core::topology::PathConfig::default();
        Self {
            z: vec![c(0.25, 0.0), c(0.1, 0.3)],
            w: vec![c(-0.2, 0.1), c(-0.25, 0.25)],
            cube_center: vec![c(0.0, 0.0); 2],
            half_side: 0.5,
            region: None,
            step_fraction: p.step_fraction,
            max_refinements: p.max_refinements,
            candidates: p.candidates,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    pub poles: usize,
    pub ratio: f64,
    pub threshold: f64,
    pub decades: u32,
    pub delta: f64,
    pub resolution: usize,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self { poles: 10, ratio: 0.5, threshold: 1e3, decades: 6, delta: 0.1, resolution: 257 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Planar region whose extremal function is used in every factor.
    pub region: RegionSpec,
    pub factors: usize,
    pub threshold: f64,
    pub resolution: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { region: RegionSpec::b(), factors: 2, threshold: 1.0, resolution: 257 }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub resolution: Option<usize>,
    pub terms: Option<usize>,
    pub tolerance: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(k) = o.terms {
            self.series.pole_count = k;
        }
        if let Some(t) = o.tolerance {
            self.solver.tolerance = t;
        }
        if let Some(r) = o.resolution {
            self.prop_a.resolutions = vec![r];
            self.prop_b.resolution = r;
            self.prop_b.separation_resolution = r;
            self.prop_c.resolution = r;
            self.solve.resolution = r;
            self.dichotomy.resolution = r;
            self.connectivity.resolutions = vec![r];
            self.blowup.resolution = r;
            self.envelope.resolution = r;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![
            ("prop_b.resolution", self.prop_b.resolution),
            ("prop_b.cell_resolution", self.prop_b.cell_resolution),
            ("prop_b.separation_resolution", self.prop_b.separation_resolution),
            ("prop_c.resolution", self.prop_c.resolution),
            ("solve.resolution", self.solve.resolution),
            ("dichotomy.resolution", self.dichotomy.resolution),
            ("blowup.resolution", self.blowup.resolution),
            ("envelope.resolution", self.envelope.resolution),
        ];
        all.extend(self.prop_a.resolutions.iter().map(|r| ("prop_a.resolutions", *r)));
        all.extend(self.connectivity.resolutions.iter().map(|r| ("connectivity.resolutions", *r)));
        for (name, r) in all {
            if r < 3 || r % 2 == 0 {
                bail!("invalid config: {name} = {r}, resolutions must be odd and at least 3");
            }
        }
        if self.series.pole_count == 0 {
            bail!("invalid config: series.pole_count must be positive");
        }
        if !(self.solver.tolerance > 0.0) {
            bail!("invalid config: solver.tolerance must be positive");
        }
        if self.prop_a.resolutions.is_empty() || self.connectivity.resolutions.is_empty() {
            bail!("invalid config: resolution lists must not be empty");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.prop_a.resolutions, vec![65, 129]);
        assert_eq!(cfg.series.pole_count, SeriesSpec::default().pole_count);
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_reach_every_section() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(Overrides { resolution: Some(33), terms: Some(100), tolerance: Some(1e-6) });
        assert_eq!(cfg.solve.resolution, 33);
        assert_eq!(cfg.connectivity.resolutions, vec![33]);
        assert_eq!(cfg.series.pole_count, 100);
        assert_eq!(cfg.solver.tolerance, 1e-6);
    }

    #[test]
    fn even_or_tiny_resolution_rejected() {
        for r in [1, 2, 64] {
            let mut cfg = ExperimentConfig::default();
            cfg.apply(Overrides { resolution: Some(r), ..Default::default() });
            assert!(cfg.validate().is_err(), "{r}");
        }
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"solve": {"radius": 0.1, "oops": 1}}"#).is_err());
    }
}
