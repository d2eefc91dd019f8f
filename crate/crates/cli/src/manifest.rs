//! Experiment manifests: flat TOML with one `[params]` section.
//!
//! ```toml
//! name = "fig1_stable_0.6"
//! engine = "piece"            # piece | coded | mu-infinity | alt-system
//! policy = "random-useful"    # random-useful | rarest-first | sequential
//! replicas = 20
//! horizon = 1000.0
//! sample_dt = 1.0
//! rng_seed = 1
//! initial = "empty"           # empty | one-club | one-club:<n> | reduced:<n>,<k>
//! outputs = "out/fig1_stable_0.6"
//!
//! [params]
//! K = 40
//! lambda = 0.6
//! mu = 1.0
//! Us = 1.0
//! # q = 2                     # field order, coded engine only
//! ```
//!
//! `one-club` without a count launches from `N_o` one-club peers, with `N_o`
//! taken from the instability constants of `[params]`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use missing_piece::analysis::ReducedState;
use missing_piece::{ModelParams, Policy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Piece,
    Coded,
    MuInfinity,
    AltSystem,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Piece => "piece",
            Engine::Coded => "coded",
            Engine::MuInfinity => "mu-infinity",
            Engine::AltSystem => "alt-system",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Initial {
    Empty,
    /// One-club peers; `None` means `N_o`.
    OneClub(Option<u64>),
    /// `(n, k)` of the reduced chain.
    Reduced(ReducedState),
}

impl FromStr for Initial {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("initial: expected empty, one-club, one-club:<n> or reduced:<n>,<k>, got '{s}'");
        match s {
            "empty" => Ok(Initial::Empty),
            "one-club" => Ok(Initial::OneClub(None)),
            _ => {
                if let Some(n) = s.strip_prefix("one-club:") {
                    return n.parse().map(|n| Initial::OneClub(Some(n))).map_err(|_| bad());
                }
                let (n, k) = s
                    .strip_prefix("reduced:")
                    .and_then(|r| r.split_once(','))
                    .ok_or_else(bad)?;
                Ok(Initial::Reduced(ReducedState {
                    n: n.trim().parse().map_err(|_| bad())?,
                    k: k.trim().parse().map_err(|_| bad())?,
                }))
            }
        }
    }
}

impl TryFrom<String> for Initial {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Initial> for String {
    fn from(i: Initial) -> String {
        match i {
            Initial::Empty => "empty".into(),
            Initial::OneClub(None) => "one-club".into(),
            Initial::OneClub(Some(n)) => format!("one-club:{n}"),
            Initial::Reduced(s) => format!("reduced:{},{}", s.n, s.k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(rename = "K")]
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "Us")]
    pub us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
}

impl Params {
    pub fn model(&self) -> missing_piece::Result<ModelParams> {
        ModelParams::new(self.k, self.lambda, self.mu, self.us)
    }
}

mod policy_name {
    use missing_piece::Policy;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Policy, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(p.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Policy, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn default_policy() -> Policy {
    Policy::RandomUseful
}

fn default_sample_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub engine: Engine,
    #[serde(with = "policy_name", default = "default_policy")]
    pub policy: Policy,
    pub replicas: usize,
    pub horizon: f64,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    pub rng_seed: u64,
    pub initial: Initial,
    pub outputs: PathBuf,
    pub params: Params,
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| crate::Exit::validation(format!("{}: {e}", path.display())))?;
        let m = Self::parse(&text).map_err(|e| crate::Exit::validation(format!("{}: {e}", path.display())))?;
        Ok(m)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let m: Manifest = toml::from_str(text).map_err(|e| e.to_string())?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    /// Field-level checks that do not need any simulation.
    pub fn validate(&self) -> Result<(), String> {
        let field = |name: &str, msg: String| Err(format!("{name}: {msg}"));
        if self.replicas < 1 {
            return field("replicas", "must be ≥ 1".into());
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return field("horizon", format!("must be positive and finite, got {}", self.horizon));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt <= self.horizon) {
            return field("sample_dt", format!("must lie in (0, horizon], got {}", self.sample_dt));
        }
        self.params.model().map_err(|e| format!("params: {e}"))?;
        match (self.engine, self.params.q) {
            (Engine::Coded, None) => return field("params.q", "required by the coded engine".into()),
            (Engine::Coded, Some(_)) => {}
            (_, Some(_)) => {
                return field(
                    "params.q",
                    format!("only valid for the coded engine, not {}", self.engine),
                )
            }
            _ => {}
        }
        match (self.engine, self.initial) {
            (Engine::MuInfinity, Initial::Reduced(s)) => {
                ReducedState::new(s.n, s.k, self.params.k).map_err(|e| format!("initial: {e}"))?;
            }
            (Engine::MuInfinity, Initial::Empty) => {}
            (Engine::MuInfinity, i) => {
                return field("initial", format!("{} is not a reduced-chain state", String::from(i)))
            }
            (Engine::AltSystem, Initial::OneClub(None)) => {}
            (Engine::AltSystem, i) => {
                return field(
                    "initial",
                    format!("the alt-system engine launches from one-club, not {}", String::from(i)),
                )
            }
            (Engine::Coded, Initial::OneClub(_)) => {
                return field("initial", "one-club is defined for the piece engine only".into())
            }
            (_, Initial::Reduced(_)) => return field("initial", "reduced states need the mu-infinity engine".into()),
            _ => {}
        }
        if matches!(self.initial, Initial::OneClub(None)) && self.params.lambda <= self.params.us {
            return field(
                "initial",
                "one-club needs N_o, which exists only for lambda > Us".into(),
            );
        }
        Ok(())
    }
}
