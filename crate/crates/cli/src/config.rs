//! Scenario files: a strict TOML schema with two-link defaults, semantic
//! validation that names the offending key path, and detection of which
//! keys fell back to their defaults (echoed in every output header).

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use rhcsim::control::{ControllerParams, ControllerVariant};
use rhcsim::dynamics::{
    apply_payload, FrictionParams, JointState, PayloadPerturbation, RobotParams,
};
use rhcsim::observer::ObserverParams;
use rhcsim::reference::RefModelParams;
use rhcsim::sim::SimConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioToml {
    pub name: String,
    pub plant: PlantToml,
    pub payload: PayloadToml,
    pub friction: FrictionToml,
    pub reference: ReferenceToml,
    pub controller: ControllerToml,
    pub observer: ObserverToml,
    pub initial: InitialToml,
    pub sim: SimToml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantToml {
    pub gravity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motor_inertia: Option<[f64; 2]>,
    pub link1: LinkToml,
    pub link2: LinkToml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkToml {
    pub mass: f64,
    pub length: f64,
    pub com: f64,
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PayloadToml {
    pub dm2: f64,
    pub dlc2: f64,
    pub di2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrictionToml {
    pub enabled: bool,
    pub viscous: [f64; 2],
    pub coulomb: [f64; 2],
    pub eps: f64,
    pub on_position: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceToml {
    pub amplitude: f64,
    pub rate: f64,
    pub omega: [f64; 2],
    pub zeta: [f64; 2],
    pub literal_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerToml {
    /// One of basic, computed_torque, integral, none.
    pub variant: String,
    pub q_weight: f64,
    pub r_weight: f64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e0_clamp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverToml {
    pub enabled: bool,
    pub alpha: f64,
    pub poles: [f64; 2],
    pub pre_scaling: bool,
    pub p_on_estimate: bool,
    pub qhat0: [f64; 2],
    pub qdhat0: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zhat_clamp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialToml {
    pub q: [f64; 2],
    pub qd: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimToml {
    pub dt: f64,
    pub t_end: f64,
    pub log_stride: usize,
    pub settle_band: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torque_limit: Option<f64>,
}

impl Default for ScenarioToml {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            plant: PlantToml::default(),
            payload: PayloadToml::default(),
            friction: FrictionToml::default(),
            reference: ReferenceToml::default(),
            controller: ControllerToml::default(),
            observer: ObserverToml::default(),
            initial: InitialToml::default(),
            sim: SimToml::default(),
        }
    }
}

impl Default for PlantToml {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            motor_inertia: None,
            link1: LinkToml {
                mass: 10.0,
                length: 1.0,
                com: 0.5,
                inertia: 10.0 / 12.0,
            },
            link2: LinkToml {
                mass: 5.0,
                length: 1.0,
                com: 0.5,
                inertia: 5.0 / 12.0,
            },
        }
    }
}

impl Default for LinkToml {
    fn default() -> Self {
        Self {
            mass: 1.0,
            length: 1.0,
            com: 0.5,
            inertia: 1.0 / 12.0,
        }
    }
}

impl Default for PayloadToml {
    fn default() -> Self {
        Self {
            dm2: 0.0,
            dlc2: 0.0,
            di2: 0.0,
        }
    }
}

impl Default for FrictionToml {
    fn default() -> Self {
        Self {
            enabled: false,
            viscous: [5.0, 5.0],
            coulomb: [5.0, 5.0],
            eps: 1e-3,
            on_position: false,
        }
    }
}

impl Default for ReferenceToml {
    fn default() -> Self {
        Self {
            amplitude: 1.5,
            rate: 5.0,
            omega: [10.0, 10.0],
            zeta: [1.0, 1.0],
            literal_form: false,
        }
    }
}

impl Default for ControllerToml {
    fn default() -> Self {
        Self {
            variant: "basic".into(),
            q_weight: 1e7,
            r_weight: 1e-14,
            h: 1e-3,
            sample_period: None,
            e0_clamp: None,
        }
    }
}

impl Default for ObserverToml {
    fn default() -> Self {
        Self {
            enabled: false,
            alpha: 0.01,
            poles: [-0.4, -0.8],
            pre_scaling: true,
            p_on_estimate: false,
            qhat0: [0.01, 0.01],
            qdhat0: [0.0, 0.0],
            zhat_clamp: None,
        }
    }
}

impl Default for InitialToml {
    fn default() -> Self {
        Self {
            q: [0.0, 0.0],
            qd: [0.0, 0.0],
        }
    }
}

impl Default for SimToml {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 4.0,
            log_stride: 10,
            settle_band: 5e-3,
            torque_limit: None,
        }
    }
}

/// Fully validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub sim: SimConfig,
    pub torque_limit: Option<f64>,
    /// Resolved schema (defaults applied) as echoed in output headers.
    pub resolved: ScenarioToml,
    /// Keys that fell back to their defaults, dotted paths, sorted.
    pub defaulted: Vec<String>,
    /// Non-fatal warnings from validation.
    pub warnings: Vec<String>,
}

fn fail(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_positive(value: f64, path: &str) -> Result<(), CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(fail(format!(
            "{path}: must be strictly positive (got {value})"
        )))
    }
}

fn check_non_negative(value: f64, path: &str) -> Result<(), CliError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(fail(format!("{path}: must be non-negative (got {value})")))
    }
}

fn validate_link(link: &LinkToml, path: &str) -> Result<(), CliError> {
    check_positive(link.mass, &format!("{path}.mass"))?;
    check_positive(link.length, &format!("{path}.length"))?;
    check_positive(link.com, &format!("{path}.com"))?;
    check_positive(link.inertia, &format!("{path}.inertia"))?;
    if link.com > link.length {
        return Err(fail(format!("{path}.com: must not exceed {path}.length")));
    }
    Ok(())
}

impl ScenarioToml {
    /// Semantic validation with key-path diagnostics, then conversion into
    /// the runnable configuration.
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(fail("name: must be non-empty and use only [A-Za-z0-9_-]"));
        }
        validate_link(&self.plant.link1, "plant.link1")?;
        validate_link(&self.plant.link2, "plant.link2")?;
        if !self.plant.gravity.is_finite() {
            return Err(fail("plant.gravity: must be finite"));
        }
        if let Some(j) = &self.plant.motor_inertia {
            for (i, v) in j.iter().enumerate() {
                check_non_negative(*v, &format!("plant.motor_inertia[{i}]"))?;
            }
        }

        let nominal = RobotParams {
            masses: vec![self.plant.link1.mass, self.plant.link2.mass],
            lengths: vec![self.plant.link1.length, self.plant.link2.length],
            com: vec![self.plant.link1.com, self.plant.link2.com],
            inertias: vec![self.plant.link1.inertia, self.plant.link2.inertia],
            gravity: self.plant.gravity,
            motor_inertia: self
                .plant
                .motor_inertia
                .map_or(vec![0.0, 0.0], |j| j.to_vec()),
        };
        nominal
            .validate()
            .map_err(|e| fail(format!("plant: {e}")))?;

        let payload = PayloadPerturbation {
            dm2: self.payload.dm2,
            dlc2: self.payload.dlc2,
            di2: self.payload.di2,
        };
        let plant = apply_payload(&nominal, &payload).map_err(|e| fail(format!("payload: {e}")))?;

        let friction = if self.friction.enabled {
            for (i, v) in self.friction.viscous.iter().enumerate() {
                check_non_negative(*v, &format!("friction.viscous[{i}]"))?;
            }
            for (i, v) in self.friction.coulomb.iter().enumerate() {
                check_non_negative(*v, &format!("friction.coulomb[{i}]"))?;
            }
            check_positive(self.friction.eps, "friction.eps")?;
            Some(FrictionParams {
                viscous: DVector::from_row_slice(&self.friction.viscous),
                coulomb: DVector::from_row_slice(&self.friction.coulomb),
                eps: self.friction.eps,
                on_position: self.friction.on_position,
            })
        } else {
            None
        };

        for (i, w) in self.reference.omega.iter().enumerate() {
            check_positive(*w, &format!("reference.omega[{i}]"))?;
        }
        for (i, z) in self.reference.zeta.iter().enumerate() {
            check_positive(*z, &format!("reference.zeta[{i}]"))?;
        }
        check_positive(self.reference.rate, "reference.rate")?;
        let reference = RefModelParams {
            omega: DVector::from_row_slice(&self.reference.omega),
            zeta: DVector::from_row_slice(&self.reference.zeta),
            amplitude: self.reference.amplitude,
            rate: self.reference.rate,
            literal_form: self.reference.literal_form,
        };
        reference
            .validate()
            .map_err(|e| fail(format!("reference: {e}")))?;

        let controller = match self.controller.variant.as_str() {
            "none" => None,
            name => {
                let variant = match name {
                    "basic" => ControllerVariant::Basic,
                    "computed_torque" => ControllerVariant::ComputedTorque,
                    "integral" => ControllerVariant::Integral,
                    other => {
                        return Err(fail(format!(
                            "controller.variant: unknown variant '{other}' (expected basic, computed_torque, integral or none)"
                        )))
                    }
                };
                let cp = ControllerParams {
                    q_weight: self.controller.q_weight,
                    r_weight: self.controller.r_weight,
                    h: self.controller.h,
                    variant,
                    sample_period: self.controller.sample_period,
                    e0_clamp: self.controller.e0_clamp,
                };
                cp.validate()
                    .map_err(|e| fail(format!("controller: {e}")))?;
                Some(cp)
            }
        };

        let observer = ObserverParams {
            alpha: self.observer.alpha,
            poles: self.observer.poles,
            pre_scaling: self.observer.pre_scaling,
            p_on_estimate: self.observer.p_on_estimate,
            zhat_clamp: self.observer.zhat_clamp,
        };
        if self.observer.enabled {
            observer
                .validate()
                .map_err(|e| fail(format!("observer: {e}")))?;
        }

        check_positive(self.sim.dt, "sim.dt")?;
        check_positive(self.sim.settle_band, "sim.settle_band")?;
        if let Some(limit) = self.sim.torque_limit {
            check_positive(limit, "sim.torque_limit")?;
        }
        if self.sim.log_stride == 0 {
            return Err(fail("sim.log_stride: must be at least 1"));
        }
        if self.sim.t_end < 10.0 * self.sim.dt {
            return Err(fail("sim.t_end: must cover at least ten integration steps"));
        }

        let sim = SimConfig {
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            log_stride: self.sim.log_stride,
            controller,
            use_observer: self.observer.enabled,
            observer,
            nominal,
            plant,
            friction,
            reference,
            initial: JointState::new(
                DVector::from_row_slice(&self.initial.q),
                DVector::from_row_slice(&self.initial.qd),
            )
            .map_err(|e| fail(format!("initial: {e}")))?,
            qhat0: DVector::from_row_slice(&self.observer.qhat0),
            qdhat0: DVector::from_row_slice(&self.observer.qdhat0),
            settle_band: self.sim.settle_band,
        };
        let warnings = sim.validate().map_err(|e| fail(format!("{e}")))?;

        Ok(ScenarioConfig {
            name: self.name.clone(),
            sim,
            torque_limit: self.sim.torque_limit,
            resolved: self.clone(),
            defaulted: Vec::new(),
            warnings,
        })
    }
}

/// Dotted leaf paths of a TOML table, sorted.
fn leaf_paths(table: &toml::Table) -> Vec<String> {
    fn walk(prefix: &str, value: &toml::Value, out: &mut Vec<String>) {
        match value {
            toml::Value::Table(t) => {
                for (k, v) in t {
                    let path = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&path, v, out);
                }
            }
            _ => out.push(prefix.to_string()),
        }
    }
    let mut out = Vec::new();
    for (k, v) in table {
        walk(k, v, &mut out);
    }
    out.sort();
    out
}

/// Parse scenario text: strict schema, semantic validation, defaults
/// detection. Parse errors carry line/column from the TOML reader; unknown
/// keys are rejected with the offending path named.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, CliError> {
    let raw: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("scenario parse error: {e}")))?;
    let scenario: ScenarioToml = raw.clone().try_into().map_err(|e: toml::de::Error| {
        CliError::Validation(format!("scenario schema error: {e}"))
    })?;
    let mut cfg = scenario.resolve()?;

    let present = leaf_paths(&raw);
    let resolved_table = toml::Table::try_from(&cfg.resolved)
        .map_err(|e| CliError::Validation(format!("internal: {e}")))?;
    cfg.defaulted = leaf_paths(&resolved_table)
        .into_iter()
        .filter(|p| !present.contains(p))
        .collect();
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Set a dotted key path in a raw TOML table (for parameter sweeps);
/// intermediate tables must already exist or be creatable.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts = path.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            current.insert(part.to_string(), value);
            return Ok(());
        }
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "sweep parameter path '{path}' crosses a non-table key"
                ))
            })?;
    }
    Err(CliError::Validation("sweep parameter path is empty".into()))
}

/// Serialize the resolved schema exactly as echoed into output headers.
pub fn resolved_toml_string(cfg: &ScenarioConfig) -> String {
    toml::to_string(&cfg.resolved).expect("resolved scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = parse_config_str("").unwrap();
        assert_eq!(cfg.name, "scenario");
        assert_eq!(cfg.sim.dt, 1e-4);
        // every resolved leaf is flagged as defaulted
        let resolved = toml::Table::try_from(&cfg.resolved).unwrap();
        assert_eq!(cfg.defaulted.len(), leaf_paths(&resolved).len());
        assert!(cfg.defaulted.iter().any(|p| p == "controller.q_weight"));
    }

    #[test]
    fn unknown_key_is_rejected_with_its_path() {
        let err = parse_config_str("[plant.link1]\nmasss = 3.0\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("masss"), "{msg}");
    }

    #[test]
    fn negative_mass_names_the_key_path() {
        let err = parse_config_str("[plant.link1]\nmass = -1.0\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("plant.link1.mass"), "{msg}");
    }

    #[test]
    fn parse_error_reports_line_and_column() {
        let err = parse_config_str("[plant\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn variant_computed_torque_requires_zero_effort_weight() {
        let err = parse_config_str("[controller]\nvariant = \"computed_torque\"\n").unwrap_err();
        assert!(format!("{err}").contains("r_weight"));
        let ok = parse_config_str("[controller]\nvariant = \"computed_torque\"\nr_weight = 0.0\n");
        assert!(ok.is_ok());
    }

    #[test]
    fn defaulted_keys_exclude_present_ones() {
        let cfg = parse_config_str("[controller]\nq_weight = 5.0e6\n").unwrap();
        assert!(!cfg.defaulted.iter().any(|p| p == "controller.q_weight"));
        assert!(cfg.defaulted.iter().any(|p| p == "controller.r_weight"));
    }

    #[test]
    fn sweep_path_override() {
        let mut table: toml::Table = "".parse().unwrap();
        set_path(&mut table, "controller.h", toml::Value::Float(0.005)).unwrap();
        let text = toml::to_string(&table).unwrap();
        let cfg = parse_config_str(&text).unwrap();
        assert_eq!(cfg.sim.controller.as_ref().unwrap().h, 0.005);
    }

    #[test]
    fn resolved_round_trips_through_toml() {
        let cfg = parse_config_str("[observer]\nenabled = true\n").unwrap();
        let text = resolved_toml_string(&cfg);
        let back: ScenarioToml = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg.resolved);
    }
}
