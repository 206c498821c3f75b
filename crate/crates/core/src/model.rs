use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A fair-division instance: an item graph, `n` agents and an `n × m`
/// table of non-negative integer item values. Bundle values are additive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    graph: Graph,
    values: Vec<Vec<u64>>,
    names: Vec<Option<String>>,
    totals: Vec<u64>,
}

impl Instance {
    /// Validates the value table against the graph. Rejects rows of the
    /// wrong length, zero agents, and tables where `n · W` overflows `u64`.
    pub fn new(graph: Graph, values: Vec<Vec<u64>>) -> Result<Self> {
        let names = vec![None; values.len()];
        Instance::with_names(graph, values, names)
    }

    pub fn with_names(graph: Graph, values: Vec<Vec<u64>>, names: Vec<Option<String>>) -> Result<Self> {
        let n = values.len();
        let m = graph.vertex_count();
        if n == 0 {
            return Err(Error::InvalidInstance("at least one agent is required".into()));
        }
        if names.len() != n {
            return Err(Error::InvalidInstance("one name slot per agent is required".into()));
        }
        let mut totals = Vec::with_capacity(n);
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has {} values but the graph has {m} vertices",
                    row.len()
                )));
            }
            let total = row
                .iter()
                .try_fold(0u64, |acc, &x| acc.checked_add(x))
                .ok_or_else(|| Error::InvalidInstance(format!("total value of agent {i} overflows")))?;
            totals.push(total);
        }
        let w = totals.iter().copied().max().unwrap_or(0);
        if w.checked_mul(n as u64).is_none() {
            return Err(Error::InvalidInstance("n times the largest total value overflows".into()));
        }
        Ok(Instance { graph, values, names, totals })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Number of items `m`.
    pub fn item_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Number of agents `n`.
    pub fn agent_count(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, agent: usize, item: usize) -> u64 {
        self.values[agent][item]
    }

    pub fn values(&self) -> &[Vec<u64>] {
        &self.values
    }

    pub fn name(&self, agent: usize) -> Option<&str> {
        self.names[agent].as_deref()
    }

    /// `W_i`, the agent's value for all items.
    pub fn total_value(&self, agent: usize) -> Result<u64> {
        self.totals
            .get(agent)
            .copied()
            .ok_or(Error::AgentOutOfRange { agent, len: self.agent_count() })
    }

    pub(crate) fn total(&self, agent: usize) -> u64 {
        self.totals[agent]
    }

    /// `W = max_i W_i`.
    pub fn max_total_value(&self) -> u64 {
        self.totals.iter().copied().max().unwrap_or(0)
    }

    pub fn bundle_value<'a>(&self, agent: usize, bundle: impl IntoIterator<Item = &'a usize>) -> u64 {
        bundle.into_iter().map(|&z| self.values[agent][z]).sum()
    }

    /// Groups agents with identical value rows; returns the type of each agent
    /// (types numbered by first occurrence).
    pub fn agent_types(&self) -> Vec<usize> {
        let mut reps: Vec<usize> = Vec::new();
        let mut out = Vec::with_capacity(self.agent_count());
        for i in 0..self.agent_count() {
            match reps.iter().position(|&r| self.values[r] == self.values[i]) {
                Some(t) => out.push(t),
                None => {
                    out.push(reps.len());
                    reps.push(i);
                }
            }
        }
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }
}

/// On-disk instance format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub edges: Vec<[usize; 2]>,
    pub agents: Vec<AgentFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AgentFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Signed so that negative entries produce a useful error instead of a
    /// generic type mismatch.
    pub values: Vec<i64>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Instance> {
        let edges: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        let graph = Graph::from_edges(file.m, &edges)?;
        let mut values = Vec::with_capacity(file.agents.len());
        let mut names = Vec::with_capacity(file.agents.len());
        for (i, agent) in file.agents.into_iter().enumerate() {
            let row = agent
                .values
                .iter()
                .map(|&x| {
                    u64::try_from(x).map_err(|_| Error::InvalidInstance(format!("agent {i} has negative value {x}")))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
            names.push(agent.name);
        }
        Instance::with_names(graph, values, names)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            m: inst.item_count(),
            edges: inst.graph.edges().map(|(u, v)| [u, v]).collect(),
            agents: inst
                .values
                .iter()
                .zip(&inst.names)
                .map(|(row, name)| AgentFile {
                    name: name.clone(),
                    values: row.iter().map(|&x| x as i64).collect(),
                })
                .collect(),
        }
    }
}

/// One bundle per agent. Bundles are pairwise disjoint; items may be left
/// unallocated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    bundles: Vec<BTreeSet<usize>>,
}

impl Allocation {
    /// Checks that there is one bundle per agent, that every item exists and
    /// that no item is given twice.
    pub fn new(instance: &Instance, bundles: Vec<BTreeSet<usize>>) -> Result<Self> {
        if bundles.len() != instance.agent_count() {
            return Err(Error::InvalidAllocation(format!(
                "{} bundles for {} agents",
                bundles.len(),
                instance.agent_count()
            )));
        }
        let m = instance.item_count();
        let mut seen = vec![false; m];
        for bundle in &bundles {
            for &z in bundle {
                if z >= m {
                    return Err(Error::InvalidAllocation(format!("item {z} does not exist")));
                }
                if std::mem::replace(&mut seen[z], true) {
                    return Err(Error::InvalidAllocation(format!("item {z} is in two bundles")));
                }
            }
        }
        Ok(Allocation { bundles })
    }

    pub(crate) fn from_bundles(bundles: Vec<BTreeSet<usize>>) -> Self {
        Allocation { bundles }
    }

    pub fn empty(agents: usize) -> Self {
        Allocation { bundles: vec![BTreeSet::new(); agents] }
    }

    pub fn bundles(&self) -> &[BTreeSet<usize>] {
        &self.bundles
    }

    pub fn bundle(&self, agent: usize) -> &BTreeSet<usize> {
        &self.bundles[agent]
    }

    pub fn agent_count(&self) -> usize {
        self.bundles.len()
    }

    pub fn owner_of(&self, item: usize) -> Option<usize> {
        self.bundles.iter().position(|b| b.contains(&item))
    }

    pub fn allocated_count(&self) -> usize {
        self.bundles.iter().map(BTreeSet::len).sum()
    }

    /// `matrix[i][j] = v_i(π(j))`.
    pub fn value_matrix(&self, instance: &Instance) -> Vec<Vec<u64>> {
        (0..instance.agent_count())
            .map(|i| self.bundles.iter().map(|b| instance.bundle_value(i, b)).collect())
            .collect()
    }

    /// Bundles as sorted vectors, the shape used in JSON output.
    pub fn to_vecs(&self) -> Vec<Vec<usize>> {
        self.bundles.iter().map(|b| b.iter().copied().collect()).collect()
    }
}

/// Parameters of the allowed bundle shape: at most `alpha` balls of radius
/// `beta` (or, when `strong`, at most `alpha` groups of pairwise distance at
/// most `beta`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompactnessSpec {
    pub alpha: usize,
    pub beta: usize,
    pub strong: bool,
}

impl CompactnessSpec {
    pub fn new(alpha: usize, beta: usize, strong: bool) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidSpec("alpha must be at least 1".into()));
        }
        Ok(CompactnessSpec { alpha, beta, strong })
    }

    pub fn compact(alpha: usize, beta: usize) -> Self {
        CompactnessSpec::new(alpha, beta, false).expect("alpha >= 1")
    }

    pub fn strong(alpha: usize, beta: usize) -> Self {
        CompactnessSpec::new(alpha, beta, true).expect("alpha >= 1")
    }
}

impl fmt::Display for CompactnessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = if self.strong { "strongly " } else { "" };
        write!(f, "{prefix}({}, {})-compact", self.alpha, self.beta)
    }
}

/// What an allocation has to achieve besides compactness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FairnessGoal {
    Proportional,
    EnvyFreeComplete,
    EnvyFreeParetoOptimal,
    Maximin,
    /// A compact allocation whose utilitarian welfare equals the
    /// unconstrained optimum `Σ_z max_i v_i(z)`.
    MaxWelfare,
}

impl FairnessGoal {
    pub const ALL: [FairnessGoal; 5] = [
        FairnessGoal::Proportional,
        FairnessGoal::EnvyFreeComplete,
        FairnessGoal::EnvyFreeParetoOptimal,
        FairnessGoal::Maximin,
        FairnessGoal::MaxWelfare,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            FairnessGoal::Proportional => "prop",
            FairnessGoal::EnvyFreeComplete => "ef-complete",
            FairnessGoal::EnvyFreeParetoOptimal => "ef-po",
            FairnessGoal::Maximin => "mms",
            FairnessGoal::MaxWelfare => "welfare",
        }
    }
}

impl FromStr for FairnessGoal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FairnessGoal::ALL
            .into_iter()
            .find(|g| g.cli_name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown goal {s:?}")))
    }
}

impl fmt::Display for FairnessGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: usize, edges: &[(usize, usize)], values: Vec<Vec<u64>>) -> Instance {
        Instance::new(Graph::from_edges(m, edges).unwrap(), values).unwrap()
    }

    #[test]
    fn total_values() {
        let empty = inst(0, &[], vec![vec![]]);
        assert_eq!(empty.total_value(0).unwrap(), 0);
        let one = inst(4, &[], vec![vec![3, 1, 2, 2]]);
        assert_eq!(one.total_value(0).unwrap(), 8);
        let two = inst(2, &[], vec![vec![1, 1], vec![5, 0]]);
        assert_eq!(two.total_value(0).unwrap(), 2);
        assert_eq!(two.total_value(1).unwrap(), 5);
        assert!(matches!(two.total_value(2), Err(Error::AgentOutOfRange { .. })));
    }

    #[test]
    fn rejects_overflow() {
        let g = Graph::empty(2);
        assert!(Instance::new(g.clone(), vec![vec![u64::MAX, 1]]).is_err());
        let half = u64::MAX / 2 + 1;
        assert!(Instance::new(g.clone(), vec![vec![half, 0], vec![0, 0]]).is_err());
        assert!(Instance::new(g, vec![vec![half, 0]]).is_ok());
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let text = r#"{"m":3,"edges":[[0,1],[1,2]],"agents":[{"name":"ann","values":[1,2,3]},{"values":[0,0,4]}]}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.item_count(), 3);
        assert_eq!(inst.name(0), Some("ann"));
        assert_eq!(inst.name(1), None);
        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(inst, again);

        for bad in [
            r#"{"m":2,"edges":[[0,1],[1,0]],"agents":[{"values":[1,1]}]}"#,
            r#"{"m":2,"edges":[[1,1]],"agents":[{"values":[1,1]}]}"#,
            r#"{"m":2,"edges":[],"agents":[{"values":[1]}]}"#,
            r#"{"m":2,"edges":[],"agents":[{"values":[1,-1]}]}"#,
            r#"{"m":2,"edges":[],"agents":[]}"#,
            r#"{"m":2,"edges":[[0,2]],"agents":[{"values":[1,1]}]}"#,
        ] {
            assert!(Instance::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn allocation_validation() {
        let i = inst(3, &[], vec![vec![1, 1, 1], vec![1, 1, 1]]);
        let b = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
        assert!(Allocation::new(&i, vec![b(&[0]), b(&[1])]).is_ok());
        assert!(Allocation::new(&i, vec![b(&[0]), b(&[0])]).is_err());
        assert!(Allocation::new(&i, vec![b(&[3]), b(&[])]).is_err());
        assert!(Allocation::new(&i, vec![b(&[0])]).is_err());
    }

    #[test]
    fn agent_types_group_identical_rows() {
        let i = inst(2, &[], vec![vec![1, 2], vec![3, 4], vec![1, 2]]);
        assert_eq!(i.agent_types(), vec![0, 1, 0]);
    }

    #[test]
    fn goal_names_parse() {
        for g in FairnessGoal::ALL {
            assert_eq!(g.cli_name().parse::<FairnessGoal>().unwrap(), g);
        }
        assert!("fair".parse::<FairnessGoal>().is_err());
    }
}
