use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    consistency_with, normalize_measurements, principal_eigenpair, AhpError, ComparisonMatrix,
    ConsistencyOptions, ConsistencyReport, PriorityVector,
};

/// How a node's children are weighted.
#[derive(Debug, Clone, PartialEq)]
pub enum Judgment {
    /// Pairwise comparisons; weights are the principal eigenvector.
    Matrix(ComparisonMatrix),
    /// Raw positive measurements, normalized by their sum.
    Measurements(Vec<f64>),
    /// Already-normalized weights.
    Priorities(PriorityVector),
}

impl Judgment {
    fn order(&self) -> usize {
        match self {
            Judgment::Matrix(m) => m.order(),
            Judgment::Measurements(v) => v.len(),
            Judgment::Priorities(p) => p.len(),
        }
    }
}

/// Goal on top, then levels of elements. Every element of level `k` is
/// judged with respect to each element of level `k - 1` (the goal for level 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    goal: String,
    levels: Vec<Vec<String>>,
    judgments: BTreeMap<String, Judgment>,
}

impl Hierarchy {
    pub fn new(goal: impl Into<String>, levels: Vec<Vec<String>>) -> Self {
        Hierarchy {
            goal: goal.into(),
            levels,
            judgments: BTreeMap::new(),
        }
    }

    pub fn goal(&self) -> &str {
        &self.goal
    }

    pub fn levels(&self) -> &[Vec<String>] {
        &self.levels
    }

    /// Attaches the judgment of `parent`'s children.
    pub fn judge(&mut self, parent: impl Into<String>, judgment: Judgment) -> &mut Self {
        self.judgments.insert(parent.into(), judgment);
        self
    }

    /// Levels outside the recommended 5..=9 elements per node.
    pub fn size_warnings(&self) -> Vec<String> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| !(5..=9).contains(&l.len()))
            .map(|(k, l)| {
                format!(
                    "level {} has {} elements; 5 to 9 per node is recommended",
                    k + 1,
                    l.len()
                )
            })
            .collect()
    }
}

/// Per-node outcome of an aggregation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalPriority {
    pub node: String,
    pub weights: PriorityVector,
    /// Present for matrix judgments.
    pub consistency: Option<ConsistencyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregation {
    pub alternatives: Vec<String>,
    pub priorities: PriorityVector,
    /// Alternative indices, best first; ties by element order.
    pub ranking: Vec<usize>,
    pub local: Vec<LocalPriority>,
    pub warnings: Vec<String>,
}

impl Aggregation {
    pub fn ranked_labels(&self) -> Vec<&str> {
        self.ranking
            .iter()
            .map(|&i| self.alternatives[i].as_str())
            .collect()
    }
}

fn local_priorities(node: &str, judgment: &Judgment) -> Result<LocalPriority, AhpError> {
    let (weights, consistency) = match judgment {
        Judgment::Matrix(m) => {
            let pair = principal_eigenpair(m)?;
            // order > 15 has no random index: weights still valid, no report
            let report = consistency_with(
                m,
                ConsistencyOptions {
                    extended_aci: true,
                    ..Default::default()
                },
            )
            .ok();
            (pair.vector, report)
        }
        Judgment::Measurements(raw) => (normalize_measurements(raw)?, None),
        Judgment::Priorities(p) => (p.clone(), None),
    };
    Ok(LocalPriority {
        node: node.to_string(),
        weights,
        consistency,
    })
}

/// Composes priorities top-down: the weight of an element is the sum over
/// parents of parent weight times the element's local weight under that parent.
pub fn aggregate(h: &Hierarchy) -> Result<Aggregation, AhpError> {
    if h.levels.is_empty() || h.levels.iter().any(Vec::is_empty) {
        return Err(AhpError::EmptyHierarchy);
    }
    let mut local = Vec::new();
    let lookup = |node: &str, expected: usize| -> Result<LocalPriority, AhpError> {
        let j = h
            .judgments
            .get(node)
            .ok_or_else(|| AhpError::MissingJudgment(node.to_string()))?;
        if j.order() != expected {
            return Err(AhpError::OrderMismatch {
                node: node.to_string(),
                got: j.order(),
                expected,
            });
        }
        local_priorities(node, j)
    };

    let top = lookup(&h.goal, h.levels[0].len())?;
    let mut current: Vec<f64> = top.weights.weights().to_vec();
    local.push(top);

    for pair in h.levels.windows(2) {
        let (parents, children) = (&pair[0], &pair[1]);
        let mut next = vec![0.0; children.len()];
        for (parent, &pw) in parents.iter().zip(&current) {
            let lp = lookup(parent, children.len())?;
            for (acc, w) in next.iter_mut().zip(lp.weights.weights()) {
                *acc += pw * w;
            }
            local.push(lp);
        }
        current = next;
    }

    let priorities = PriorityVector::normalized(current).ok_or(AhpError::EmptyHierarchy)?;
    Ok(Aggregation {
        alternatives: h.levels.last().cloned().unwrap_or_default(),
        ranking: priorities.ranking(),
        priorities,
        local,
        warnings: h.size_warnings(),
    })
}
