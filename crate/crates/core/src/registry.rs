//! Stable string identifiers for uncertainty methods and quality metrics.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sr,
    Smp,
    Ent,
    EntMc,
    Pv,
    Bald,
    Md,
    HuqMd,
    Lof,
    Isof,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Sr,
        Method::Smp,
        Method::Ent,
        Method::EntMc,
        Method::Pv,
        Method::Bald,
        Method::Md,
        Method::HuqMd,
        Method::Lof,
        Method::Isof,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Sr => "sr",
            Method::Smp => "smp",
            Method::Ent => "ent",
            Method::EntMc => "ent_mc",
            Method::Pv => "pv",
            Method::Bald => "bald",
            Method::Md => "md",
            Method::HuqMd => "huq_md",
            Method::Lof => "lof",
            Method::Isof => "isof",
        }
    }

    /// Whether the method needs training embeddings.
    pub fn needs_training(self) -> bool {
        matches!(self, Method::Md | Method::HuqMd | Method::Lof | Method::Isof)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    RocAuc,
    AuPrc,
    CSlope,
    Citl,
    Ece,
    RcAuc,
    NrcAuc,
    EAuoptrc,
    Ti,
    Ti95,
}

/// Which direction of a metric is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
    /// Closer to the target is better.
    Target(f64),
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::RocAuc,
        Metric::AuPrc,
        Metric::CSlope,
        Metric::Citl,
        Metric::Ece,
        Metric::RcAuc,
        Metric::NrcAuc,
        Metric::EAuoptrc,
        Metric::Ti,
        Metric::Ti95,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Metric::RocAuc => "roc_auc",
            Metric::AuPrc => "au_prc",
            Metric::CSlope => "c_slope",
            Metric::Citl => "citl",
            Metric::Ece => "ece",
            Metric::RcAuc => "rc_auc",
            Metric::NrcAuc => "nrc_auc",
            Metric::EAuoptrc => "e_auoptrc",
            Metric::Ti => "ti",
            Metric::Ti95 => "ti95",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Metric::RocAuc | Metric::AuPrc | Metric::NrcAuc | Metric::Ti | Metric::Ti95 => {
                Orientation::HigherBetter
            }
            Metric::Ece | Metric::RcAuc | Metric::EAuoptrc => Orientation::LowerBetter,
            Metric::CSlope => Orientation::Target(1.0),
            Metric::Citl => Orientation::Target(0.0),
        }
    }
}

fn registry_error(kind: &str, name: &str, valid: &[&str]) -> Error {
    Error::invalid(format!("unknown {kind} `{name}`; valid: {}", valid.join(", ")))
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| registry_error("method", s, &Method::ALL.map(Method::id)))
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| registry_error("metric", s, &Metric::ALL.map(Metric::id)))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
        for m in Metric::ALL {
            assert_eq!(m.id().parse::<Metric>().unwrap(), m);
        }
    }

    #[test]
    fn unknown_name_lists_registry() {
        let msg = "mc_entropy".parse::<Method>().unwrap_err().to_string();
        assert!(msg.contains("sr, smp, ent, ent_mc, pv, bald, md, huq_md, lof, isof"));
    }
}
