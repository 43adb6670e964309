use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::field::{Gf, DEFAULT_MODULUS};
use crate::netgraph::ConnectivityProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileName {
    Weak,
    Strong,
    LocateAdv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    RlncWeak,
    RlncStrong,
    Nrsc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    None,
    Random,
    Adversarial,
    Erasure,
    Delay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    LocateAdversaryRlnc,
    LocateRandomRlnc,
    LocateAdversaryRs,
    LocateRandomRs,
    LocateErasure,
    LocateDelay,
    FindTopo,
    FindTopoRs,
    TopoAdv,
}

impl Operation {
    pub fn natural_model(self) -> ModelName {
        match self {
            Operation::LocateAdversaryRlnc | Operation::LocateAdversaryRs | Operation::TopoAdv => {
                ModelName::Adversarial
            }
            Operation::LocateErasure => ModelName::Erasure,
            Operation::LocateDelay => ModelName::Delay,
            _ => ModelName::Random,
        }
    }

    pub fn schemes(self) -> &'static [SchemeName] {
        use SchemeName::*;
        match self {
            Operation::LocateAdversaryRs | Operation::LocateRandomRs | Operation::FindTopoRs => {
                &[Nrsc]
            }
            Operation::TopoAdv => &[RlncStrong],
            _ => &[RlncWeak, RlncStrong],
        }
    }
}

/// How adversarial packets are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    Uniform,
    /// Steer the received transform toward a wrong candidate.
    Mimic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum AutoTag {
    Auto,
}

/// A setting that is either fixed or derived per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting<T> {
    Value(T),
    #[serde(with = "auto")]
    Auto,
}

mod auto {
    use super::AutoTag;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        AutoTag::deserialize(d).map(|_| ())
    }
}

/// One experiment. Parsed from flat `key = value` text; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub q: u64,
    pub nodes: usize,
    #[serde(rename = "C")]
    pub capacity: usize,
    pub profile: ProfileName,
    pub scheme: SchemeName,
    pub op: Operation,
    pub model: Option<ModelName>,
    /// Per-edge failure probability; `auto` is `1 / |E|`.
    pub p_f: Setting<f64>,
    /// Faulty edges per generation for adversarial, delay and planted models.
    pub z: usize,
    /// Nonzero symbols per random error packet.
    pub s: usize,
    /// Block length.
    pub n: usize,
    /// Generations per trial; `auto` is `ceil(c |E| ln |E|)`.
    pub t: Setting<usize>,
    /// NRSC depth; `auto` is `2 z`.
    pub depth: Setting<usize>,
    pub trials: usize,
    pub seed: u64,
    pub attack: Attack,
    /// Candidate graphs offered to `topo-adv`, including the true one.
    pub candidates: usize,
    /// Subset visits allowed per column in adversarial RLNC localization.
    pub max_subsets: u64,
    /// Node cap for exhaustive candidate enumeration.
    pub max_nodes: usize,
    /// Fail a trial if tomography code reads ground truth.
    pub audit: bool,
    /// Include wall-clock timings in records; breaks byte-identical output.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            q: DEFAULT_MODULUS,
            nodes: 8,
            capacity: 3,
            profile: ProfileName::Weak,
            scheme: SchemeName::RlncWeak,
            op: Operation::LocateRandomRlnc,
            model: None,
            p_f: Setting::Auto,
            z: 1,
            s: 1,
            n: 32,
            t: Setting::Auto,
            depth: Setting::Auto,
            trials: 10,
            seed: 1,
            attack: Attack::Uniform,
            candidates: 10,
            max_subsets: 5_000_000,
            max_nodes: 6,
            audit: true,
            timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn field(&self) -> Result<Gf, HarnessError> {
        Gf::new(self.q).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn model(&self) -> ModelName {
        self.model.unwrap_or(self.op.natural_model())
    }

    pub fn depth(&self) -> usize {
        match self.depth {
            Setting::Value(d) => d,
            Setting::Auto => 2 * self.z,
        }
    }

    pub fn profile(&self) -> ConnectivityProfile {
        match self.profile {
            ProfileName::Weak => ConnectivityProfile::weak(),
            ProfileName::Strong => ConnectivityProfile::strong(self.z),
            ProfileName::LocateAdv => ConnectivityProfile::locate_adv(self.z),
        }
    }

    /// Reject values and combinations no trial could satisfy.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let usage = |m: String| Err(HarnessError::Config(m));
        let bad = |m: String| Err(HarnessError::Incompatible(m));
        self.field()?;
        for (name, v) in [
            ("nodes", self.nodes),
            ("C", self.capacity),
            ("s", self.s),
            ("n", self.n),
            ("candidates", self.candidates),
        ] {
            if v == 0 {
                return usage(format!("{name} must be positive"));
            }
        }
        if self.nodes < 3 {
            return usage("nodes must be at least 3".into());
        }
        if let Setting::Value(p) = self.p_f {
            if !(0.0..=1.0).contains(&p) {
                return usage(format!("p_f = {p} outside [0, 1]"));
            }
        }
        if self.t == Setting::Value(0) {
            return usage("t must be positive".into());
        }
        if self.n <= self.capacity {
            return usage(format!(
                "block length {} must exceed C = {}",
                self.n, self.capacity
            ));
        }
        if self.s > self.n {
            return usage(format!(
                "sparsity {} exceeds block length {}",
                self.s, self.n
            ));
        }
        if !self.op.schemes().contains(&self.scheme) {
            return bad(format!("{:?} cannot run under {:?}", self.op, self.scheme));
        }
        if self.model() != self.op.natural_model() {
            return bad(format!(
                "{:?} needs the {:?} model",
                self.op,
                self.op.natural_model()
            ));
        }
        let profile = self.profile();
        if profile.min_out_degree > self.capacity || profile.min_in_degree > self.capacity {
            return bad(format!(
                "profile {:?} infeasible with C = {}",
                self.profile, self.capacity
            ));
        }
        if self.model() == ModelName::Adversarial && self.capacity < 2 * self.z + 1 {
            return bad(format!(
                "{} adversarial edges are undecodable with C = {}",
                self.z, self.capacity
            ));
        }
        match self.op {
            Operation::LocateAdversaryRlnc | Operation::LocateDelay if self.z == 0 => {
                return usage("z must be positive".into());
            }
            Operation::TopoAdv => {
                if self.profile != ProfileName::Strong {
                    return bad("topo-adv needs the strong profile".into());
                }
                if self.capacity < 2 * self.z + 1 {
                    return bad(format!(
                        "topo-adv needs C >= 2z+1, got C = {}",
                        self.capacity
                    ));
                }
            }
            _ => {}
        }
        if self.scheme == SchemeName::Nrsc {
            let d = self.depth();
            if d == 0 || d > self.capacity {
                return bad(format!("NRSC depth {d} outside [1, C]"));
            }
            if profile.min_out_degree < d {
                return bad(format!(
                    "NRSC depth {d} needs out-degree at least {d}; profile gives {}",
                    profile.min_out_degree
                ));
            }
            if self.op == Operation::LocateAdversaryRs && 2 * self.z > d {
                return bad(format!("z = {} exceeds half the depth {d}", self.z));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg =
            ExperimentConfig::parse("# comment\nop = \"locate-erasure\"\nt = 40\np_f = 0.1\n")
                .unwrap();
        assert_eq!(cfg.op, Operation::LocateErasure);
        assert_eq!(cfg.t, Setting::Value(40));
        assert_eq!(cfg.p_f, Setting::Value(0.1));
        assert_eq!(cfg.model(), ModelName::Erasure);
        assert_eq!(
            ExperimentConfig::parse("").unwrap(),
            ExperimentConfig::default()
        );
        let auto = ExperimentConfig::parse("t = \"auto\"").unwrap();
        assert_eq!(auto.t, Setting::Auto);
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.t = Setting::Value(12);
        cfg.model = Some(ModelName::Random);
        assert_eq!(ExperimentConfig::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn rejections() {
        for (text, usage) in [
            ("bogus = 1", true),
            ("nodes = 0", true),
            ("q = 12", true),
            ("n = 2", true),
            ("t = 0", true),
            ("op = \"locate-adversary-rs\"", false),
            ("op = \"topo-adv\"\nscheme = \"rlnc-strong\"", false),
            ("model = \"erasure\"", false),
            (
                "op = \"locate-adversary-rs\"\nscheme = \"nrsc\"\nz = 2\nprofile = \"locate-adv\"",
                false,
            ),
        ] {
            match ExperimentConfig::parse(text) {
                Err(HarnessError::Config(_)) => assert!(usage, "{text}"),
                Err(HarnessError::Incompatible(_)) => assert!(!usage, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }
}
