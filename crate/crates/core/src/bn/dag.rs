use super::BnError;

/// Directed acyclic graph over named nodes.
///
/// Parent lists are kept sorted by node index so that two DAGs with the same
/// edge set compare equal and produce identical CPT row layouts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dag {
    nodes: Vec<String>,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(nodes: Vec<String>) -> Self {
        let parents = vec![Vec::new(); nodes.len()];
        Self { nodes, parents }
    }

    /// Builds a DAG from explicit parent lists, rejecting cycles.
    pub fn from_parents(nodes: Vec<String>, parents: Vec<Vec<usize>>) -> Result<Self, BnError> {
        if parents.len() != nodes.len() {
            return Err(BnError::InvalidModel(format!(
                "{} parent lists for {} nodes",
                parents.len(),
                nodes.len()
            )));
        }
        let mut dag = Self::empty(nodes);
        for (child, ps) in parents.iter().enumerate() {
            for &p in ps {
                if p >= dag.len() {
                    return Err(BnError::InvalidModel(format!("parent index {p} out of range")));
                }
                dag.add_edge(p, child)?;
            }
        }
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn name(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All edges as (parent, child), sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(child, ps)| ps.iter().map(move |&p| (p, child)))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.has_edge(node, c)).collect()
    }

    /// True when `to` can be reached from `from` along directed edges,
    /// optionally ignoring one edge.
    pub fn reaches(&self, from: usize, to: usize, skip: Option<(usize, usize)>) -> bool {
        let children = self.child_lists();
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            for &c in &children[u] {
                if skip != Some((u, c)) && !seen[c] {
                    stack.push(c);
                }
            }
        }
        false
    }

    pub(crate) fn child_lists(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (child, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(child);
            }
        }
        children
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<(), BnError> {
        if from == to {
            return Err(BnError::SelfLoop(self.nodes[from].clone()));
        }
        if self.has_edge(from, to) {
            return Ok(());
        }
        if self.reaches(to, from, None) {
            return Err(BnError::Cycle {
                from: self.nodes[from].clone(),
                to: self.nodes[to].clone(),
            });
        }
        let ps = &mut self.parents[to];
        let pos = ps.binary_search(&from).unwrap_err();
        ps.insert(pos, from);
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> bool {
        match self.parents[to].binary_search(&from) {
            Ok(pos) => {
                self.parents[to].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Kahn's algorithm; `None` if the graph has a cycle. Ties resolve to the
    /// lowest index first.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let children = self.child_lists();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..self.len()).filter(|&n| indegree[n] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(n) = ready.pop_first() {
            order.push(n);
            for &c in &children[n] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == self.len()).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }
}
