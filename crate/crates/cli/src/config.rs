//! Mission configuration files.

use std::path::PathBuf;

use serde::Deserialize;
use topt_core::coverage::SurveySpec;
use topt_core::nlp::{NlpOptions, WaypointPath};
use topt_core::steer::SolveOptions;
use topt_core::{PointState, Vec3};

use crate::CliError;

fn default_gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, -9.8)
}

fn at_rest() -> Option<Vec3> {
    Some(Vec3::zeros())
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// One mission. Exactly one of `waypoints`, `survey` or the pair
/// `start`/`end` describes where to fly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    /// Input (thrust per unit mass) bound, m/s².
    pub u_max: f64,
    #[serde(default = "default_gravity")]
    pub g: Vec3,
    #[serde(default)]
    pub waypoints: Option<Vec<Vec3>>,
    #[serde(default)]
    pub survey: Option<SurveySpec>,
    /// Two-point problems only.
    #[serde(default)]
    pub start: Option<PointState>,
    #[serde(default)]
    pub end: Option<PointState>,
    #[serde(default)]
    pub v_start: Vec3,
    /// `null` leaves the final velocity free; omitted means rest.
    #[serde(default = "at_rest")]
    pub v_end: Option<Vec3>,
    #[serde(default)]
    pub speed_cap: Option<f64>,
    #[serde(default = "one")]
    pub switch_points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub include_gravity: bool,
    /// Sample spacing of the CSV outputs, seconds.
    #[serde(default)]
    pub sample_dt: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Output directory, used when `--out` is not given.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Optional overrides of the solver defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub residual_tol: Option<f64>,
    pub max_restarts: Option<usize>,
    pub boundary_tol: Option<f64>,
    pub position_tol: Option<f64>,
    pub nlp_starts: Option<usize>,
    pub nlp_max_iter: Option<usize>,
    pub nlp_inner_iter: Option<usize>,
}

/// What the config asks to fly.
#[derive(Debug, Clone)]
pub enum Mission {
    TwoPoint { start: PointState, end: PointState },
    Waypoints(WaypointPath),
    Survey(SurveySpec),
}

impl MissionConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: MissionConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(CliError::Config(format!("u_max must be positive, got {}", self.u_max)));
        }
        if !self.g.iter().all(|c| c.is_finite()) {
            return Err(CliError::Config("gravity must be finite".into()));
        }
        if self.include_gravity && self.g.norm() >= self.u_max {
            return Err(CliError::Config(format!("u_max {} must exceed |g| = {}", self.u_max, self.g.norm())));
        }
        let two_point = match (&self.start, &self.end) {
            (Some(_), Some(_)) => true,
            (None, None) => false,
            _ => return Err(CliError::Config("start and end must be given together".into())),
        };
        let given = [self.waypoints.is_some(), self.survey.is_some(), two_point].iter().filter(|b| **b).count();
        if given != 1 {
            return Err(CliError::Config("give exactly one of waypoints, survey, or start/end".into()));
        }
        if self.switch_points < 1 {
            return Err(CliError::Config("switch_points must be at least 1".into()));
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Config(format!("sample_dt must be positive, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn mission(&self) -> Result<Mission, CliError> {
        if let (Some(start), Some(end)) = (self.start, self.end) {
            return Ok(Mission::TwoPoint { start, end });
        }
        if let Some(spec) = self.survey {
            spec.validate()?;
            return Ok(Mission::Survey(spec));
        }
        let waypoints = self.waypoints.clone().unwrap_or_default();
        Ok(Mission::Waypoints(self.path(waypoints)?))
    }

    /// Path through `waypoints` with the configured boundary velocities.
    pub fn path(&self, waypoints: Vec<Vec3>) -> Result<WaypointPath, CliError> {
        let path = WaypointPath::new(waypoints, self.v_start, self.v_end)?;
        Ok(match self.speed_cap {
            Some(cap) => path.with_speed_cap(cap)?,
            None => path,
        })
    }

    pub fn gravity(&self) -> Vec3 {
        if self.include_gravity {
            self.g
        } else {
            Vec3::zeros()
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let d = SolveOptions::default();
        let s = &self.solver;
        SolveOptions {
            residual_tol: s.residual_tol.unwrap_or(d.residual_tol),
            max_restarts: s.max_restarts.unwrap_or(d.max_restarts),
            boundary_tol: s.boundary_tol.unwrap_or(d.boundary_tol),
            seed: self.seed,
            ..d
        }
    }

    pub fn nlp_options(&self) -> NlpOptions {
        let d = NlpOptions::default();
        let s = &self.solver;
        NlpOptions {
            switch_points: self.switch_points,
            position_tol: s.position_tol.unwrap_or(d.position_tol),
            starts: s.nlp_starts.unwrap_or(d.starts),
            max_iter: s.nlp_max_iter.unwrap_or(d.max_iter),
            inner_iter: s.nlp_inner_iter.unwrap_or(d.inner_iter),
            seed: self.seed,
            include_gravity: self.include_gravity,
            ..d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = MissionConfig::parse(r#"{"u_max": 10.5, "waypoints": [[0,0,0],[1,0,0]]}"#).unwrap();
        assert_eq!(c.g, Vec3::new(0.0, 0.0, -9.8));
        assert_eq!(c.v_end, Some(Vec3::zeros()));
        assert_eq!(c.switch_points, 1);
    }

    #[test]
    fn null_end_velocity_is_free() {
        let c = MissionConfig::parse(r#"{"u_max": 10.5, "waypoints": [[0,0,0],[1,0,0]], "v_end": null}"#).unwrap();
        assert_eq!(c.v_end, None);
    }

    #[test]
    fn rejects_unknown_keys_and_double_missions() {
        assert!(MissionConfig::parse(r#"{"u_max": 1, "waypoints": [[0,0,0],[1,0,0]], "bogus": 1}"#).is_err());
        let both = r#"{"u_max": 1, "g": [0,0,0], "waypoints": [[0,0,0],[1,0,0]],
            "start": {"r": [0,0,0], "v": [0,0,0]}, "end": {"r": [1,0,0], "v": [0,0,0]}}"#;
        assert!(matches!(MissionConfig::parse(both), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_weak_input() {
        let c = MissionConfig::parse(r#"{"u_max": 9.0, "waypoints": [[0,0,0],[1,0,0]]}"#);
        assert!(matches!(c, Err(CliError::Config(_))));
    }
}
