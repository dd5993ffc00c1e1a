//! JSON equilibrium reports.

use std::fs;
use std::path::Path;

use fedgame_core::equilibrium::{
    BestResponseMap, EquilibriumKind, MixedEquilibrium, PureEquilibrium, SweepPoint,
};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Interior,
    Boundary,
    Pure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub client: f64,
    pub attacker: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedRecord {
    pub kind: Kind,
    pub p: f64,
    pub q: f64,
    pub u_defender: f64,
    pub u_attacker: f64,
    pub residuals: Residuals,
    pub verified: bool,
    pub attacker_joint_gain: f64,
}

impl From<&MixedEquilibrium> for MixedRecord {
    fn from(e: &MixedEquilibrium) -> Self {
        MixedRecord {
            kind: match e.kind {
                EquilibriumKind::Interior => Kind::Interior,
                EquilibriumKind::Boundary => Kind::Boundary,
            },
            p: e.profile.p,
            q: e.profile.q,
            u_defender: e.u_defender,
            u_attacker: e.u_attacker,
            residuals: Residuals {
                client: e.client_residual,
                attacker: e.attacker_residual,
            },
            verified: e.verified,
            attacker_joint_gain: e.attacker_joint_gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game2Report {
    pub attack_cost: f64,
    pub defense_cost: f64,
    pub grid_points: usize,
    pub tolerance: f64,
    pub equilibria: Vec<MixedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureRecord {
    pub kind: Kind,
    pub i_star: usize,
    pub m_star: usize,
    pub u_defender: f64,
    pub u_attacker: f64,
    pub verified: bool,
}

impl PureRecord {
    pub fn new(e: &PureEquilibrium, verified: bool) -> Self {
        PureRecord {
            kind: Kind::Pure,
            i_star: e.i_star,
            m_star: e.m_star,
            u_defender: e.u_defender,
            u_attacker: e.u_attacker,
            verified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Equilibrium,
    NoPureEquilibrium,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestResponses {
    pub attacker: Vec<Vec<usize>>,
    pub defender: Vec<Vec<usize>>,
}

impl From<&BestResponseMap> for BestResponses {
    fn from(map: &BestResponseMap) -> Self {
        BestResponses {
            attacker: map.attacker.clone(),
            defender: map.defender.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamenRecord {
    pub n: usize,
    pub status: Status,
    pub equilibria: Vec<PureRecord>,
    /// Highest defender utility among `equilibria`.
    pub selected: Option<PureRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_responses: Option<BestResponses>,
    /// Best-response cycle as `[i, m]` states, present when no equilibrium exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<(usize, usize)>>,
}

impl GamenRecord {
    pub fn sweep_point(&self) -> SweepPoint {
        SweepPoint {
            n: self.n,
            equilibrium: self.selected.as_ref().map(|s| PureEquilibrium {
                i_star: s.i_star,
                m_star: s.m_star,
                u_defender: s.u_defender,
                u_attacker: s.u_attacker,
            }),
            count: self.equilibria.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamenReport {
    pub attack_cost: f64,
    pub defense_cost: f64,
    pub records: Vec<GamenRecord>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    write_file(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.line() as u64, e.to_string()))
}
