use crate::error::{KsError, Result};

/// Discretization of the half-line in the squared-radius variable s = r^2.
///
/// The first node is strictly positive: s = 0 is a regular singular point of
/// every ODE in this crate and is always handled by series expansions, never
/// by evaluating coefficients at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: SpacingRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpacingRule {
    Uniform,
    Geometric,
}

pub const MIN_NODES: usize = 64;

impl RadialGrid {
    /// Geometric grid from `s_first` to at least `s_max` with the given ratio,
    /// clustering nodes near the origin where the indicial behavior lives.
    pub fn geometric(s_first: f64, s_max: f64, ratio: f64) -> Result<Self> {
        if !(s_first > 0.0) || !(s_max > s_first) {
            return Err(KsError::InvalidGrid(format!(
                "need 0 < s_first < s_max, got {s_first}, {s_max}"
            )));
        }
        if !(ratio > 1.0) {
            return Err(KsError::InvalidGrid(format!("ratio {ratio} must be > 1")));
        }
        let mut nodes = Vec::new();
        let mut s = s_first;
        while s < s_max {
            nodes.push(s);
            s *= ratio;
        }
        nodes.push(s_max);
        Self::from_nodes(nodes, SpacingRule::Geometric)
    }

    pub fn uniform(s_first: f64, s_max: f64, n: usize) -> Result<Self> {
        if !(s_first > 0.0) || !(s_max > s_first) {
            return Err(KsError::InvalidGrid(format!(
                "need 0 < s_first < s_max, got {s_first}, {s_max}"
            )));
        }
        let h = (s_max - s_first) / (n.max(2) - 1) as f64;
        let nodes = (0..n).map(|i| s_first + h * i as f64).collect();
        Self::from_nodes(nodes, SpacingRule::Uniform)
    }

    /// Default grid shared by all modules: s in [1e-6, 400], ratio 1.02.
    pub fn default_grid() -> Self {
        Self::geometric(1e-6, 400.0, 1.02).expect("default grid parameters are valid")
    }

    pub fn from_nodes(nodes: Vec<f64>, spacing: SpacingRule) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(KsError::InvalidGrid(format!(
                "grid has {} nodes, need at least {MIN_NODES}",
                nodes.len()
            )));
        }
        if !(nodes[0] > 0.0) {
            return Err(KsError::InvalidGrid("first node must be positive".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(KsError::InvalidGrid(
                "nodes must be strictly increasing".into(),
            ));
        }
        let last = *nodes.last().unwrap();
        if !last.is_finite() {
            return Err(KsError::InvalidGrid("s_max must be finite".into()));
        }
        Ok(Self { nodes, spacing })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn s_first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn spacing(&self) -> SpacingRule {
        self.spacing
    }

    /// Radii r_i = sqrt(s_i).
    pub fn radii(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.sqrt()).collect()
    }

    /// Same truncation point with roughly twice the node density.
    pub fn refined(&self) -> Self {
        match self.spacing {
            SpacingRule::Geometric => {
                let ratio = self.nodes[1] / self.nodes[0];
                Self::geometric(self.s_first(), self.s_max(), ratio.sqrt())
                    .expect("refining a valid grid stays valid")
            }
            SpacingRule::Uniform => Self::uniform(self.s_first(), self.s_max(), 2 * self.len() - 1)
                .expect("refining a valid grid stays valid"),
        }
    }
}
