use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five score weights and the routing step cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    #[serde(rename = "weight_expected_value")]
    pub expected_value: f64,
    #[serde(rename = "weight_uncertainty")]
    pub uncertainty: f64,
    #[serde(rename = "weight_prefer_center")]
    pub prefer_center: f64,
    #[serde(rename = "weight_prefer_closeness")]
    pub prefer_closeness: f64,
    #[serde(rename = "weight_prefer_current_goal")]
    pub prefer_current_goal: f64,
    #[serde(rename = "weight_step_cost")]
    pub step_cost: f64,
}

pub const WEIGHT_KEYS: [&str; 6] = [
    "weight_expected_value",
    "weight_uncertainty",
    "weight_prefer_center",
    "weight_prefer_closeness",
    "weight_prefer_current_goal",
    "weight_step_cost",
];

impl Default for ScoreWeights {
    fn default() -> Self {
        Self::for_agents(1)
    }
}

impl ScoreWeights {
    /// Tuned defaults. The current-goal weight is 10 for teams of one or
    /// two and 1 for larger teams.
    pub fn for_agents(n: usize) -> Self {
        Self {
            expected_value: 1.0,
            uncertainty: 10.0,
            prefer_center: 0.1,
            prefer_closeness: 0.1,
            prefer_current_goal: if n <= 2 { 10.0 } else { 1.0 },
            step_cost: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let score = [
            self.expected_value,
            self.uncertainty,
            self.prefer_center,
            self.prefer_closeness,
            self.prefer_current_goal,
        ];
        if score.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "score weights must be finite and non-negative".into(),
            ));
        }
        if !score.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidParameter(
                "at least one score weight must be positive".into(),
            ));
        }
        if !(self.step_cost.is_finite() && self.step_cost > 0.0) {
            return Err(Error::InvalidParameter("weight_step_cost must be positive".into()));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "weight_expected_value" => self.expected_value,
            "weight_uncertainty" => self.uncertainty,
            "weight_prefer_center" => self.prefer_center,
            "weight_prefer_closeness" => self.prefer_closeness,
            "weight_prefer_current_goal" => self.prefer_current_goal,
            "weight_step_cost" => self.step_cost,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "weight_expected_value" => &mut self.expected_value,
            "weight_uncertainty" => &mut self.uncertainty,
            "weight_prefer_center" => &mut self.prefer_center,
            "weight_prefer_closeness" => &mut self.prefer_closeness,
            "weight_prefer_current_goal" => &mut self.prefer_current_goal,
            "weight_step_cost" => &mut self.step_cost,
            _ => return Err(Error::InvalidParameter(format!("unknown weight key `{key}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped; unknown keys are rejected.
    pub fn parse_kv(mut self, text: &str) -> Result<Self> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value: f64 = v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("line {}: bad number `{}`", lineno + 1, v.trim()))
            })?;
            self.set(k.trim(), value)?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for key in WEIGHT_KEYS {
            let _ = writeln!(s, "{key}={}", self.get(key).unwrap_or_default());
        }
        s
    }
}
