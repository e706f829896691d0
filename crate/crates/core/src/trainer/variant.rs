use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::advisor::{AdvisorMode, CostSpec};

/// The advisor family being trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Accounts for the human's discretion and the advising cost.
    #[serde(rename = "TR")]
    Tr,
    /// Assumes every contradicting advice is accepted.
    #[serde(rename = "TR_no_ADB")]
    TrNoAdb,
    /// Ignores the advising cost during training.
    #[serde(rename = "TR_no_Cost")]
    TrNoCost,
    #[serde(rename = "TR_no_ADB_Cost")]
    TrNoAdbCost,
    /// Full-coverage classifier trained for accuracy alone.
    #[serde(rename = "task_only")]
    TaskOnly,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Tr,
        Variant::TrNoAdb,
        Variant::TrNoCost,
        Variant::TrNoAdbCost,
        Variant::TaskOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Tr => "TR",
            Variant::TrNoAdb => "TR_no_ADB",
            Variant::TrNoCost => "TR_no_Cost",
            Variant::TrNoAdbCost => "TR_no_ADB_Cost",
            Variant::TaskOnly => "task_only",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
                format!("unknown variant `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// How a variant departs from the full objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantOverrides {
    /// Replace the learned discretion model by this constant.
    pub discretion_fixed: Option<f64>,
    /// Costs used during training (and believed by the advisor at inference).
    pub training_costs: CostSpec,
    pub mode: AdvisorMode,
}

pub fn apply_variant(variant: Variant, context: &CostSpec) -> VariantOverrides {
    let free = CostSpec {
        alpha: 0.0,
        ..*context
    };
    let (discretion_fixed, training_costs, mode) = match variant {
        Variant::Tr => (None, *context, AdvisorMode::TeamRules),
        Variant::TrNoAdb => (Some(1.0), *context, AdvisorMode::TeamRules),
        Variant::TrNoCost => (None, free, AdvisorMode::TeamRules),
        Variant::TrNoAdbCost => (Some(1.0), free, AdvisorMode::TeamRules),
        Variant::TaskOnly => (None, free, AdvisorMode::TaskOnly),
    };
    VariantOverrides {
        discretion_fixed,
        training_costs,
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let c = CostSpec::with_alpha(0.3);
        let o = apply_variant(Variant::TrNoAdb, &c);
        assert_eq!(o.discretion_fixed, Some(1.0));
        assert_eq!(o.training_costs.alpha, 0.3);
        let o = apply_variant(Variant::TrNoAdbCost, &c);
        assert_eq!((o.discretion_fixed, o.training_costs.alpha), (Some(1.0), 0.0));
        let o = apply_variant(Variant::Tr, &c);
        assert_eq!((o.discretion_fixed, o.training_costs), (None, c));
        assert_eq!(apply_variant(Variant::TaskOnly, &c).mode, AdvisorMode::TaskOnly);
    }

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
        assert!("TR_maybe".parse::<Variant>().is_err());
    }
}
