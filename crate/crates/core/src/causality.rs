//! Lightcone relations between choice and readout events, and the admissible
//! variable list of a choice-conditioned joint Kraus operator.
//!
//! Units have `c = 1`. A readout depends on a choice iff it lies in the
//! choice's closed future lightcone; it then carries one conditioned variable
//! per subset of its influencing choices.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CausalityError {
    #[error("event coordinates must be finite")]
    NonFinite,
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0} influencing choices is more than the supported 16")]
    TooManyChoices(usize),
}

/// A spacetime point `(t, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub pos: [f64; 3],
}

impl Event {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Result<Self, CausalityError> {
        if [t, x, y, z].iter().all(|v| v.is_finite()) {
            Ok(Event { t, pos: [x, y, z] })
        } else {
            Err(CausalityError::NonFinite)
        }
    }

    pub fn spatial_distance(&self, other: &Event) -> f64 {
        let d: f64 = self.pos.iter().zip(&other.pos).map(|(a, b)| (a - b) * (a - b)).sum();
        d.sqrt()
    }
}

/// True iff `target` lies in the closed future lightcone of `source`.
pub fn in_future_lightcone(source: &Event, target: &Event) -> bool {
    target.t - source.t >= source.spatial_distance(target)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CausalScenario {
    choices: Vec<(String, Event)>,
    readouts: Vec<(String, Event)>,
}

impl CausalScenario {
    pub fn new(choices: Vec<(String, Event)>, readouts: Vec<(String, Event)>) -> Result<Self, CausalityError> {
        let mut seen = HashSet::new();
        for (label, _) in choices.iter().chain(&readouts) {
            if !seen.insert(label.as_str()) {
                return Err(CausalityError::DuplicateLabel(label.clone()));
            }
        }
        Ok(CausalScenario { choices, readouts })
    }

    pub fn choices(&self) -> &[(String, Event)] {
        &self.choices
    }

    pub fn readouts(&self) -> &[(String, Event)] {
        &self.readouts
    }
}

impl FromStr for CausalScenario {
    type Err = CausalityError;

    /// One event per line: `choice <label> <t> <x> <y> <z>` or
    /// `readout <label> <t> <x> <y> <z>`. Blank lines and `#` comments are
    /// skipped.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut choices = Vec::new();
        let mut readouts = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let err = |message: String| CausalityError::Parse { line, message };
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let mut coords = [0.0; 4];
            for (slot, field) in coords.iter_mut().zip(&fields[2..]) {
                *slot = field.parse::<f64>().map_err(|_| err(format!("invalid coordinate `{field}`")))?;
            }
            let event = Event::new(coords[0], coords[1], coords[2], coords[3])
                .map_err(|_| err("coordinates must be finite".into()))?;
            let label = fields[1].to_string();
            match fields[0] {
                "choice" => choices.push((label, event)),
                "readout" => readouts.push((label, event)),
                other => return Err(err(format!("unknown event kind `{other}`"))),
            }
        }
        CausalScenario::new(choices, readouts)
    }
}

/// Influencing choices and conditioned variables of one readout.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutVariables {
    pub readout: String,
    pub influencing: Vec<String>,
    pub variables: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutSignature {
    pub readouts: Vec<ReadoutVariables>,
}

impl ReadoutSignature {
    /// All conditioned variables, in readout order.
    pub fn all_variables(&self) -> Vec<&str> {
        self.readouts.iter().flat_map(|r| r.variables.iter().map(String::as_str)).collect()
    }

    pub fn variables_of(&self, readout: &str) -> Option<&[String]> {
        self.readouts.iter().find(|r| r.readout == readout).map(|r| r.variables.as_slice())
    }
}

impl fmt::Display for ReadoutSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.readouts {
            writeln!(f, "readout {}: vars {}", r.readout, r.variables.join(","))?;
        }
        Ok(())
    }
}

/// Derives every readout's influencing set and enumerates its conditioned
/// variables. Choices are sorted by label and subsets listed in binary
/// counting order, so `γ` influenced by `a, b` yields `γ, γ_a, γ_b, γ_ab`.
pub fn readout_signature(scenario: &CausalScenario) -> Result<ReadoutSignature, CausalityError> {
    let mut readouts = Vec::with_capacity(scenario.readouts.len());
    for (label, event) in &scenario.readouts {
        let mut influencing: Vec<&str> = scenario
            .choices
            .iter()
            .filter(|(_, choice)| in_future_lightcone(choice, event))
            .map(|(name, _)| name.as_str())
            .collect();
        influencing.sort_unstable();
        if influencing.len() > 16 {
            return Err(CausalityError::TooManyChoices(influencing.len()));
        }
        let variables = (0u32..1 << influencing.len())
            .map(|mask| {
                let suffix: String = influencing
                    .iter()
                    .enumerate()
                    .filter(|(bit, _)| mask & (1 << bit) != 0)
                    .map(|(_, name)| *name)
                    .collect();
                if suffix.is_empty() {
                    label.clone()
                } else {
                    format!("{label}_{suffix}")
                }
            })
            .collect();
        readouts.push(ReadoutVariables {
            readout: label.clone(),
            influencing: influencing.into_iter().map(String::from).collect(),
            variables,
        });
    }
    Ok(ReadoutSignature { readouts })
}
