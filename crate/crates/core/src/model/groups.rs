use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The penalty group a feature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Causal,
    Spurious,
    Remaining,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Causal, Group::Spurious, Group::Remaining];
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Causal => "causal",
            Group::Spurious => "spurious",
            Group::Remaining => "remaining",
        })
    }
}

/// Partition of feature indices `0..dim` into causal, spurious and remaining
/// sets. Any of the three may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GroupsRepr", into = "GroupsRepr")]
pub struct FeatureGroups {
    assignment: Vec<Group>,
    causal: Vec<usize>,
    spurious: Vec<usize>,
    remaining: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GroupsRepr {
    dim: usize,
    causal: Vec<usize>,
    spurious: Vec<usize>,
    remaining: Vec<usize>,
}

impl TryFrom<GroupsRepr> for FeatureGroups {
    type Error = Error;

    fn try_from(r: GroupsRepr) -> Result<Self> {
        FeatureGroups::from_partition(r.dim, r.causal, r.spurious, r.remaining)
    }
}

impl From<FeatureGroups> for GroupsRepr {
    fn from(g: FeatureGroups) -> Self {
        GroupsRepr {
            dim: g.dim(),
            causal: g.causal,
            spurious: g.spurious,
            remaining: g.remaining,
        }
    }
}

impl FeatureGroups {
    /// Labels `causal` and `spurious`; every other index is `remaining`.
    pub fn new(
        dim: usize,
        causal: impl IntoIterator<Item = usize>,
        spurious: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut assignment: Vec<Option<Group>> = vec![None; dim];
        for (group, indices) in [
            (Group::Causal, causal.into_iter().collect::<Vec<_>>()),
            (Group::Spurious, spurious.into_iter().collect()),
        ] {
            for i in indices {
                Self::claim(&mut assignment, i, group)?;
            }
        }
        Ok(Self::from_assignment(
            assignment
                .into_iter()
                .map(|g| g.unwrap_or(Group::Remaining))
                .collect(),
        ))
    }

    /// Builds groups from three explicit sets that must be disjoint and
    /// cover `0..dim`.
    pub fn from_partition(
        dim: usize,
        causal: impl IntoIterator<Item = usize>,
        spurious: impl IntoIterator<Item = usize>,
        remaining: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut assignment: Vec<Option<Group>> = vec![None; dim];
        for (group, indices) in [
            (Group::Causal, causal.into_iter().collect::<Vec<_>>()),
            (Group::Spurious, spurious.into_iter().collect()),
            (Group::Remaining, remaining.into_iter().collect()),
        ] {
            for i in indices {
                Self::claim(&mut assignment, i, group)?;
            }
        }
        if let Some(missing) = assignment.iter().position(Option::is_none) {
            return Err(Error::InvalidGroups(format!(
                "feature {missing} is not assigned to any group"
            )));
        }
        Ok(Self::from_assignment(
            assignment.into_iter().map(Option::unwrap).collect(),
        ))
    }

    /// Every feature in the remaining group.
    pub fn all_remaining(dim: usize) -> Self {
        Self::from_assignment(vec![Group::Remaining; dim])
    }

    pub fn from_assignment(assignment: Vec<Group>) -> Self {
        let mut causal = Vec::new();
        let mut spurious = Vec::new();
        let mut remaining = Vec::new();
        for (i, g) in assignment.iter().enumerate() {
            match g {
                Group::Causal => causal.push(i),
                Group::Spurious => spurious.push(i),
                Group::Remaining => remaining.push(i),
            }
        }
        Self {
            assignment,
            causal,
            spurious,
            remaining,
        }
    }

    fn claim(assignment: &mut [Option<Group>], i: usize, group: Group) -> Result<()> {
        let dim = assignment.len();
        let slot = assignment.get_mut(i).ok_or_else(|| {
            Error::InvalidGroups(format!("feature index {i} out of range for dimension {dim}"))
        })?;
        if let Some(prev) = slot {
            return Err(Error::InvalidGroups(if *prev == group {
                format!("feature {i} listed twice in the {group} set")
            } else {
                format!("feature {i} is in both the {prev} and {group} sets")
            }));
        }
        *slot = Some(group);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.assignment.len()
    }

    pub fn group_of(&self, i: usize) -> Group {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[Group] {
        &self.assignment
    }

    pub fn indices(&self, group: Group) -> &[usize] {
        match group {
            Group::Causal => &self.causal,
            Group::Spurious => &self.spurious,
            Group::Remaining => &self.remaining,
        }
    }

    pub fn causal(&self) -> &[usize] {
        &self.causal
    }

    pub fn spurious(&self) -> &[usize] {
        &self.spurious
    }

    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    pub fn size(&self, group: Group) -> usize {
        self.indices(group).len()
    }

    /// Groups after deleting the `removed` columns, with surviving columns
    /// renumbered densely in their original order. Returns the kept original
    /// indices alongside.
    pub fn without(&self, removed: &[usize]) -> Result<(FeatureGroups, Vec<usize>)> {
        let mut drop = vec![false; self.dim()];
        for &i in removed {
            if i >= self.dim() {
                return Err(Error::InvalidGroups(format!(
                    "cannot remove feature {i}: dimension is {}",
                    self.dim()
                )));
            }
            drop[i] = true;
        }
        let kept: Vec<usize> = (0..self.dim()).filter(|&i| !drop[i]).collect();
        let assignment = kept.iter().map(|&i| self.assignment[i]).collect();
        Ok((Self::from_assignment(assignment), kept))
    }
}

/// Penalty strengths for the causal, spurious and remaining groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda_c: f64,
    pub lambda_s: f64,
    pub lambda_r: f64,
}

impl PenaltyConfig {
    pub fn new(lambda_c: f64, lambda_s: f64, lambda_r: f64) -> Result<Self> {
        let cfg = Self {
            lambda_c,
            lambda_s,
            lambda_r,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub const fn zero() -> Self {
        Self {
            lambda_c: 0.0,
            lambda_s: 0.0,
            lambda_r: 0.0,
        }
    }

    /// The same strength for every group (the plain L2 baseline).
    pub fn uniform(lambda: f64) -> Result<Self> {
        Self::new(lambda, lambda, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_c", self.lambda_c),
            ("lambda_s", self.lambda_s),
            ("lambda_r", self.lambda_r),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidPenalty(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn strength(&self, group: Group) -> f64 {
        match group {
            Group::Causal => self.lambda_c,
            Group::Spurious => self.lambda_s,
            Group::Remaining => self.lambda_r,
        }
    }

    pub fn max_strength(&self) -> f64 {
        self.lambda_c.max(self.lambda_s).max(self.lambda_r)
    }

    pub fn as_triple(&self) -> [f64; 3] {
        [self.lambda_c, self.lambda_s, self.lambda_r]
    }

    pub fn is_uniform(&self) -> bool {
        self.lambda_c == self.lambda_s && self.lambda_s == self.lambda_r
    }

    /// Search-grid admissibility: `λs ≥ λr ≥ λc` and `λs > λc`.
    ///
    /// The strict inequality sits between the spurious and causal strengths so
    /// that settings such as (0, 10, 0) remain admissible.
    pub fn is_admissible(&self) -> bool {
        self.lambda_s >= self.lambda_r
            && self.lambda_r >= self.lambda_c
            && self.lambda_s > self.lambda_c
    }
}

impl fmt::Display for PenaltyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.lambda_c, self.lambda_s, self.lambda_r)
    }
}
