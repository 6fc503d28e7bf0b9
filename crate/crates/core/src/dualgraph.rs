//! Arc-labeled dual join-graphs.
//!
//! A node (cluster) holds one or more functions; its scope is the union of
//! their scopes. An arc carries a label, a subset of the variables the two
//! endpoint scopes share. The graph is a valid join-graph when every
//! variable's nodes are connected through arcs whose labels mention it.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use log::warn;

use crate::error::{Error, Result};
use crate::model::{BayesNetwork, VarId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub functions: Vec<usize>,
    pub scope: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    pub u: usize,
    pub v: usize,
    pub label: Vec<VarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualJoinGraph {
    nodes: Vec<Cluster>,
    arcs: Vec<Arc>,
    /// Per node, `(neighbor, arc index)` sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Arcs whose singleton label had to be widened to restore connectedness.
    widened_arcs: Vec<usize>,
}

fn union_scope(scopes: &[Vec<VarId>], functions: &[usize]) -> Vec<VarId> {
    let mut scope: Vec<VarId> = Vec::new();
    for &f in functions {
        for &v in &scopes[f] {
            if !scope.contains(&v) {
                scope.push(v);
            }
        }
    }
    scope
}

impl DualJoinGraph {
    /// Assembles a graph from explicit clusters and arcs without validating it.
    pub fn new(nodes: Vec<Cluster>, arcs: Vec<Arc>) -> Result<Self> {
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        for (k, a) in arcs.iter().enumerate() {
            if a.u >= n || a.v >= n || a.u == a.v {
                return Err(Error::InvalidGraph(format!("arc {k} joins invalid nodes {} and {}", a.u, a.v)));
            }
            if adjacency[a.u].iter().any(|&(w, _)| w == a.v) {
                return Err(Error::InvalidGraph(format!("duplicate arc between {} and {}", a.u, a.v)));
            }
            adjacency[a.u].push((a.v, k));
            adjacency[a.v].push((a.u, k));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(DualJoinGraph { nodes, arcs, adjacency, widened_arcs: Vec::new() })
    }

    /// Clusters built from groups of function indices; each cluster's scope is the union of its functions' scopes.
    pub fn from_groups(scopes: &[Vec<VarId>], groups: Vec<Vec<usize>>, arcs: Vec<Arc>) -> Result<Self> {
        let nodes = groups
            .into_iter()
            .map(|functions| Cluster { scope: union_scope(scopes, &functions), functions })
            .collect();
        DualJoinGraph::new(nodes, arcs)
    }

    /// The dual graph: a node per function, an arc between every two nodes
    /// sharing variables, labeled by the full intersection.
    pub fn build_dual_graph(scopes: &[Vec<VarId>]) -> Self {
        let nodes: Vec<Cluster> = scopes
            .iter()
            .enumerate()
            .map(|(i, s)| Cluster { functions: vec![i], scope: s.clone() })
            .collect();
        let mut arcs = Vec::new();
        for i in 0..scopes.len() {
            for j in i + 1..scopes.len() {
                let label: Vec<VarId> = scopes[i].iter().copied().filter(|v| scopes[j].contains(v)).collect();
                if !label.is_empty() {
                    arcs.push(Arc { u: i, v: j, label });
                }
            }
        }
        DualJoinGraph::new(nodes, arcs).expect("dual graph arcs are distinct")
    }

    /// One node per family; for each parent `P` of `C` an arc between the
    /// families of `C` and `P` labeled `{P}`. Node `i` holds CPT `i`.
    pub fn singleton_join_graph(bn: &BayesNetwork) -> Self {
        let scopes = bn.family_scopes();
        let nodes: Vec<Cluster> = scopes
            .iter()
            .enumerate()
            .map(|(i, s)| Cluster { functions: vec![i], scope: s.clone() })
            .collect();
        let mut arcs = Vec::new();
        for c in 0..bn.num_vars() {
            for &p in bn.parents(c) {
                arcs.push(Arc { u: c, v: p, label: vec![p] });
            }
        }
        let mut g = DualJoinGraph::new(nodes, arcs).expect("parent arcs are distinct");
        g.restore_connectedness();
        g
    }

    /// Widens labels to the full scope intersection on arcs touching a
    /// variable whose occurrences are disconnected. Each widening is logged
    /// and kept in [`widened_arcs`](Self::widened_arcs).
    fn restore_connectedness(&mut self) {
        for var in self.disconnected_variables() {
            for k in 0..self.arcs.len() {
                let (u, v) = (self.arcs[k].u, self.arcs[k].v);
                let shares = self.nodes[u].scope.contains(&var) && self.nodes[v].scope.contains(&var);
                if shares && !self.arcs[k].label.contains(&var) {
                    let full: Vec<VarId> = self.nodes[u]
                        .scope
                        .iter()
                        .copied()
                        .filter(|x| self.nodes[v].scope.contains(x))
                        .collect();
                    warn!("singleton labels disconnect variable {var}; widening arc {u}-{v} to {full:?}");
                    self.arcs[k].label = full;
                    if !self.widened_arcs.contains(&k) {
                        self.widened_arcs.push(k);
                    }
                }
            }
        }
    }

    pub fn nodes(&self) -> &[Cluster] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn widened_arcs(&self) -> &[usize] {
        &self.widened_arcs
    }

    /// `(neighbor, arc index)` pairs of `u`, sorted by neighbor.
    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adjacency[u]
    }

    pub fn arc_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u].iter().find(|&&(w, _)| w == v).map(|&(_, k)| k)
    }

    /// Node holding function `f`.
    pub fn node_of_function(&self, f: usize) -> Option<usize> {
        self.nodes.iter().position(|c| c.functions.contains(&f))
    }

    fn all_vars(&self) -> BTreeSet<VarId> {
        self.nodes.iter().flat_map(|c| c.scope.iter().copied()).collect()
    }

    fn disconnected_variables(&self) -> Vec<VarId> {
        self.all_vars().into_iter().filter(|&v| !self.variable_connected(v)).collect()
    }

    fn variable_connected(&self, var: VarId) -> bool {
        let holders: Vec<usize> = (0..self.nodes.len()).filter(|&u| self.nodes[u].scope.contains(&var)).collect();
        let Some(&start) = holders.first() else { return true };
        let mut seen = vec![false; self.nodes.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(w, k) in &self.adjacency[u] {
                if !seen[w] && self.arcs[k].label.contains(&var) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        holders.iter().all(|&u| seen[u])
    }

    /// Running-intersection test: for every variable, the arcs whose label
    /// contains it connect all nodes whose scope contains it.
    pub fn check_connectedness(&self) -> bool {
        self.all_vars().into_iter().all(|v| self.variable_connected(v))
    }

    /// Every label is a subset of both endpoint scopes.
    pub fn labels_within_scopes(&self) -> bool {
        self.arcs
            .iter()
            .all(|a| a.label.iter().all(|x| self.nodes[a.u].scope.contains(x) && self.nodes[a.v].scope.contains(x)))
    }

    /// Arc set is a forest (and the graph is a valid join-graph).
    pub fn is_join_tree(&self) -> bool {
        self.check_connectedness() && self.is_forest()
    }

    fn is_forest(&self) -> bool {
        // union-find over arcs
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for a in &self.arcs {
            let (ru, rv) = (find(&mut parent, a.u), find(&mut parent, a.v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }

    /// Checks function coverage (each of `scopes.len()` functions in exactly
    /// one node), cluster scopes, label containment and connectedness.
    pub fn validate_cluster_join_graph(&self, scopes: &[Vec<VarId>]) -> bool {
        let mut owner = vec![0usize; scopes.len()];
        for c in &self.nodes {
            for &f in &c.functions {
                if f >= scopes.len() {
                    return false;
                }
                owner[f] += 1;
            }
        }
        if owner.iter().any(|&c| c != 1) {
            return false;
        }
        let scopes_ok = self.nodes.iter().all(|c| {
            let mut expected = union_scope(scopes, &c.functions);
            let mut actual = c.scope.clone();
            expected.sort_unstable();
            actual.sort_unstable();
            expected == actual
        });
        scopes_ok && self.labels_within_scopes() && self.check_connectedness()
    }

    /// Arc-minimality: removing any single variable from any label breaks connectedness.
    pub fn is_arc_minimal(&self) -> bool {
        for k in 0..self.arcs.len() {
            for i in 0..self.arcs[k].label.len() {
                let mut g = self.clone();
                let var = g.arcs[k].label.remove(i);
                if g.variable_connected(var) {
                    return false;
                }
            }
        }
        true
    }

    /// Copy with extra functions appended to the listed nodes (`(node, function)` pairs).
    pub fn with_extra_functions(&self, scopes: &[Vec<VarId>], extra: &[(usize, usize)]) -> Result<Self> {
        let mut g = self.clone();
        for &(u, f) in extra {
            let node = g.nodes.get_mut(u).ok_or_else(|| Error::InvalidGraph(format!("no node {u}")))?;
            node.functions.push(f);
            for &v in &scopes[f] {
                if !node.scope.contains(&v) {
                    node.scope.push(v);
                }
            }
        }
        Ok(g)
    }

    /// Text dump used by golden-file tests and the `--graph file` option.
    pub fn to_text(&self) -> String {
        let mut s = String::from("JOINGRAPH\n");
        writeln!(s, "nodes {}", self.nodes.len()).unwrap();
        for (i, c) in self.nodes.iter().enumerate() {
            writeln!(s, "node {i} functions {} scope {}", join(&c.functions), join(&c.scope)).unwrap();
        }
        writeln!(s, "arcs {}", self.arcs.len()).unwrap();
        for a in &self.arcs {
            writeln!(s, "arc {} {} label {}", a.u, a.v, join(&a.label)).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse { line: 0, message: format!("missing {what}") })
        };
        let (ln, head) = next("header")?;
        if head.trim() != "JOINGRAPH" {
            return Err(Error::Parse { line: ln + 1, message: "expected JOINGRAPH".into() });
        }
        let n = count_line(next("node count")?, "nodes")?;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let (ln, l) = next("node")?;
            let err = |m: &str| Error::Parse { line: ln + 1, message: m.to_string() };
            let rest = l
                .strip_prefix(&format!("node {i} functions "))
                .ok_or_else(|| err("expected `node <i> functions ...`"))?;
            let (f, s) = rest.split_once(" scope ").ok_or_else(|| err("missing scope"))?;
            nodes.push(Cluster { functions: parse_list(f, ln)?, scope: parse_list(s, ln)? });
        }
        let m = count_line(next("arc count")?, "arcs")?;
        let mut arcs = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = next("arc")?;
            let err = |m: &str| Error::Parse { line: ln + 1, message: m.to_string() };
            let rest = l.strip_prefix("arc ").ok_or_else(|| err("expected `arc u v label ...`"))?;
            let (uv, label) = rest.split_once(" label ").ok_or_else(|| err("missing label"))?;
            let uv: Vec<usize> = uv.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            if uv.len() != 2 {
                return Err(err("arc needs two endpoints"));
            }
            arcs.push(Arc { u: uv[0], v: uv[1], label: parse_list(label, ln)? });
        }
        DualJoinGraph::new(nodes, arcs)
    }
}

fn join(xs: &[usize]) -> String {
    let mut s = xs.len().to_string();
    s.push_str(" :");
    for x in xs {
        write!(s, " {x}").unwrap();
    }
    s
}

fn parse_list(s: &str, ln: usize) -> Result<Vec<usize>> {
    let err = |m: String| Error::Parse { line: ln + 1, message: m };
    let (n, rest) = s.split_once(':').ok_or_else(|| err(format!("expected `<n> : ...`, found `{s}`")))?;
    let n: usize = n.trim().parse().map_err(|_| err(format!("bad count `{n}`")))?;
    let items = rest
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad integer `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if items.len() != n {
        return Err(err(format!("expected {n} items, found {}", items.len())));
    }
    Ok(items)
}

fn count_line((ln, l): (usize, &str), key: &str) -> Result<usize> {
    l.strip_prefix(key)
        .and_then(|r| r.trim().parse().ok())
        .ok_or_else(|| Error::Parse { line: ln + 1, message: format!("expected `{key} <count>`") })
}

/// Order in which nodes are visited; one iteration sends every message of
/// each visited node, first in this order and then in reverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    order: Vec<usize>,
}

impl Schedule {
    pub fn from_order(g: &DualJoinGraph, order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; g.num_nodes()];
        for &u in &order {
            if u >= seen.len() || seen[u] {
                return Err(Error::InvalidGraph(format!("schedule visits node {u} twice or out of range")));
            }
            seen[u] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidGraph("schedule omits a node".into()));
        }
        Ok(Schedule { order })
    }

    /// Default schedule for a Bayesian network's join-graph.
    ///
    /// Nodes are ranked by the topological position of their earliest CPT
    /// child (ties by node id). On a forest the order is instead a post-order
    /// from the top-ranked node of each tree, so that the forward pass
    /// collects toward the root and the backward pass distributes from it.
    pub fn topological(bn: &BayesNetwork, g: &DualJoinGraph) -> Self {
        let topo = bn.topological_order().unwrap_or_else(|| (0..bn.num_vars()).collect());
        let mut rank = vec![0usize; bn.num_vars()];
        for (i, &v) in topo.iter().enumerate() {
            rank[v] = i;
        }
        let key = |u: usize| -> usize {
            g.nodes[u].functions.iter().map(|&f| rank.get(f).copied().unwrap_or(f)).min().unwrap_or(usize::MAX)
        };
        let mut order: Vec<usize> = (0..g.num_nodes()).collect();
        order.sort_by_key(|&u| (key(u), u));
        if g.is_forest() {
            order = post_order(g, &order);
        }
        Schedule { order }
    }

    /// Nodes in id order (post-order on forests), for graphs not tied to a Bayesian network.
    pub fn by_id(g: &DualJoinGraph) -> Self {
        let order: Vec<usize> = (0..g.num_nodes()).collect();
        if g.is_forest() {
            Schedule { order: post_order(g, &order) }
        } else {
            Schedule { order }
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Message steps of one iteration: forward pass, then backward pass.
    pub fn steps(&self, g: &DualJoinGraph) -> Vec<(usize, usize)> {
        let mut steps = Vec::new();
        for &u in self.order.iter().chain(self.order.iter().rev()) {
            for &(v, _) in g.neighbors(u) {
                steps.push((u, v));
            }
        }
        steps
    }
}

fn post_order(g: &DualJoinGraph, priority: &[usize]) -> Vec<usize> {
    let n = g.num_nodes();
    let mut visited = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for &root in priority {
        if visited[root] {
            continue;
        }
        // iterative DFS emitting nodes after their subtrees
        let mut stack = vec![(root, 0usize)];
        visited[root] = true;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            let adj = g.neighbors(u);
            if *i < adj.len() {
                let w = adj[*i].0;
                *i += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                out.push(u);
                stack.pop();
            }
        }
    }
    out
}
