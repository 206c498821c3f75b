//! Tree decompositions: PACE `.td` input/output, validation, a min-fill
//! heuristic, and conversion to nice form with a fixed anchor set in every
//! bag.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeDecomposition {
    /// Sorted, 0-indexed vertex lists.
    pub bags: Vec<Vec<usize>>,
    /// Tree edges between bag indices.
    pub edges: Vec<(usize, usize)>,
}

impl TreeDecomposition {
    pub fn new(bags: Vec<Vec<usize>>, edges: Vec<(usize, usize)>) -> Self {
        let bags = bags
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        TreeDecomposition { bags, edges }
    }

    /// Largest bag size minus one (0 when every bag is empty).
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1)
    }

    /// PACE 2017 text with 1-indexed bags and vertices.
    pub fn to_pace(&self, vertex_count: usize) -> String {
        let max_bag = self.bags.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = format!("s td {} {} {}\n", self.bags.len(), max_bag, vertex_count);
        for (i, bag) in self.bags.iter().enumerate() {
            write!(out, "b {}", i + 1).unwrap();
            for v in bag {
                write!(out, " {}", v + 1).unwrap();
            }
            out.push('\n');
        }
        for &(a, b) in &self.edges {
            writeln!(out, "{} {}", a + 1, b + 1).unwrap();
        }
        out
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_num(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("expected a number, found {tok:?}")))
}

/// Parses a PACE `.td` file. Lines starting with `c` are comments.
pub fn parse_td(text: &str) -> Result<TreeDecomposition> {
    let mut header: Option<(usize, usize)> = None;
    let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.first().copied() {
            None | Some("c") => continue,
            Some("s") => {
                if header.is_some() {
                    return Err(parse_err(line, "second header"));
                }
                if toks.len() != 5 || toks[1] != "td" {
                    return Err(parse_err(line, "header must be `s td <bags> <max bag size> <vertices>`"));
                }
                let count = parse_num(toks[2], line)?;
                let vertices = parse_num(toks[4], line)?;
                parse_num(toks[3], line)?;
                header = Some((count, vertices));
                bags = vec![None; count];
            }
            Some(first) => {
                let (count, vertices) = header.ok_or_else(|| parse_err(line, "missing header"))?;
                let bag_id = |tok: &str| -> Result<usize> {
                    let id = parse_num(tok, line)?;
                    if id == 0 || id > count {
                        return Err(parse_err(line, format!("bag {id} out of range 1..={count}")));
                    }
                    Ok(id - 1)
                };
                if first == "b" {
                    let id = bag_id(toks.get(1).ok_or_else(|| parse_err(line, "bag line without id"))?)?;
                    if bags[id].is_some() {
                        return Err(parse_err(line, format!("bag {} listed twice", id + 1)));
                    }
                    let mut bag = Vec::new();
                    for tok in &toks[2..] {
                        let v = parse_num(tok, line)?;
                        if v == 0 || v > vertices {
                            return Err(parse_err(line, format!("vertex {v} out of range 1..={vertices}")));
                        }
                        bag.push(v - 1);
                    }
                    bags[id] = Some(bag);
                } else {
                    if toks.len() != 2 {
                        return Err(parse_err(line, "tree edge lines hold two bag ids"));
                    }
                    edges.push((bag_id(toks[0])?, bag_id(toks[1])?));
                }
            }
        }
    }
    let (count, _) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| parse_err(0, format!("bag {} is never listed", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    if let Err(msg) = check_tree(count, &edges) {
        return Err(parse_err(0, msg));
    }
    Ok(TreeDecomposition::new(bags, edges))
}

/// The edges form a spanning tree on `count` nodes.
fn check_tree(count: usize, edges: &[(usize, usize)]) -> std::result::Result<(), String> {
    let mut parent: Vec<usize> = (0..count).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in edges {
        if a >= count || b >= count {
            return Err(format!("tree edge {a}-{b} names a missing bag"));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(format!("tree edges contain a cycle through bags {} and {}", a + 1, b + 1));
        }
        parent[ra] = rb;
    }
    if count > 0 && edges.len() != count - 1 {
        return Err("the bags do not form a single tree".into());
    }
    Ok(())
}

/// Checks the three tree-decomposition axioms; the error names the first
/// violation.
pub fn validate_td(graph: &Graph, td: &TreeDecomposition) -> std::result::Result<(), String> {
    let n = graph.vertex_count();
    let count = td.bags.len();
    if count == 0 {
        return if n == 0 { Ok(()) } else { Err("no bags".into()) };
    }
    check_tree(count, &td.edges)?;
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v >= n {
                return Err(format!("bag {b} holds unknown vertex {v}"));
            }
            holders[v].push(b);
        }
    }
    if let Some(v) = (0..n).find(|&v| holders[v].is_empty()) {
        return Err(format!("vertex {v} is in no bag"));
    }
    for (u, v) in graph.edges() {
        if !td.bags.iter().any(|bag| bag.binary_search(&u).is_ok() && bag.binary_search(&v).is_ok()) {
            return Err(format!("edge {u}-{v} is in no bag"));
        }
    }
    let mut tree_adj = vec![Vec::new(); count];
    for &(a, b) in &td.edges {
        tree_adj[a].push(b);
        tree_adj[b].push(a);
    }
    for v in 0..n {
        let member = |b: usize| td.bags[b].binary_search(&v).is_ok();
        let mut seen = HashSet::from([holders[v][0]]);
        let mut queue = VecDeque::from([holders[v][0]]);
        while let Some(b) = queue.pop_front() {
            for &c in &tree_adj[b] {
                if member(c) && seen.insert(c) {
                    queue.push_back(c);
                }
            }
        }
        if seen.len() != holders[v].len() {
            return Err(format!("bags holding vertex {v} are not connected"));
        }
    }
    Ok(())
}

/// Min-fill elimination ordering. Each eliminated vertex yields the bag of
/// itself and its current neighbours, attached to the bag of the earliest
/// eliminated of those neighbours. Ties go to the lower degree, then to the
/// lower vertex.
pub fn greedy_decompose(graph: &Graph) -> TreeDecomposition {
    let n = graph.vertex_count();
    if n == 0 {
        return TreeDecomposition::new(vec![Vec::new()], Vec::new());
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| graph.neighbors(v).iter().copied().collect()).collect();
    let mut alive = vec![true; n];
    let mut position = vec![0usize; n];
    let mut bags = Vec::with_capacity(n);
    let mut neighbourhoods = Vec::with_capacity(n);
    for step in 0..n {
        let fill = |v: usize| {
            let ns: Vec<usize> = adj[v].iter().copied().collect();
            let mut missing = 0;
            for (i, &a) in ns.iter().enumerate() {
                missing += ns[i + 1..].iter().filter(|&&b| !adj[a].contains(&b)).count();
            }
            missing
        };
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill(v), adj[v].len(), v))
            .expect("a vertex remains");
        let ns: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &ns {
            adj[a].remove(&v);
        }
        alive[v] = false;
        position[v] = step;
        let mut bag = ns.clone();
        bag.push(v);
        bags.push(bag);
        neighbourhoods.push(ns);
    }
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    for (step, ns) in neighbourhoods.iter().enumerate() {
        match ns.iter().map(|&u| position[u]).min() {
            Some(next) => edges.push((step, next)),
            None => roots.push(step),
        }
    }
    for w in roots.windows(2) {
        edges.push((w[0], w[1]));
    }
    TreeDecomposition::new(bags, edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NiceKind {
    Leaf,
    IntroduceVertex(usize),
    IntroduceEdge(usize, usize),
    Forget(usize),
    Join,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NiceNode {
    pub kind: NiceKind,
    /// Sorted.
    pub bag: Vec<usize>,
    pub children: Vec<usize>,
}

/// Rooted nice decomposition. Nodes are stored children-first, so index
/// order is a valid bottom-up processing order and the root is the last node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NiceTreeDecomposition {
    pub nodes: Vec<NiceNode>,
    pub anchors: Vec<usize>,
}

impl NiceTreeDecomposition {
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn width(&self) -> usize {
        self.nodes.iter().map(|n| n.bag.len()).max().unwrap_or(0).saturating_sub(1)
    }
}

struct NiceBuilder<'a> {
    graph: &'a Graph,
    nodes: Vec<NiceNode>,
    introduced_edges: HashSet<(usize, usize)>,
}

impl NiceBuilder<'_> {
    fn push(&mut self, kind: NiceKind, bag: Vec<usize>, children: Vec<usize>) -> usize {
        self.nodes.push(NiceNode { kind, bag, children });
        self.nodes.len() - 1
    }

    /// Forgets `v`, first introducing its not yet introduced edges to
    /// vertices still in the bag.
    fn forget(&mut self, mut top: usize, v: usize) -> usize {
        let bag = self.nodes[top].bag.clone();
        for &w in self.graph.neighbors(v) {
            let key = (v.min(w), v.max(w));
            if bag.binary_search(&w).is_ok() && self.introduced_edges.insert(key) {
                top = self.push(NiceKind::IntroduceEdge(key.0, key.1), bag.clone(), vec![top]);
            }
        }
        let smaller: Vec<usize> = bag.iter().copied().filter(|&x| x != v).collect();
        self.push(NiceKind::Forget(v), smaller, vec![top])
    }

    fn introduce(&mut self, top: usize, v: usize) -> usize {
        let mut bag = self.nodes[top].bag.clone();
        let pos = bag.binary_search(&v).unwrap_err();
        bag.insert(pos, v);
        self.push(NiceKind::IntroduceVertex(v), bag, vec![top])
    }

    /// Turns the node `top` into one whose bag is `target`.
    fn morph(&mut self, mut top: usize, target: &[usize]) -> usize {
        let current = self.nodes[top].bag.clone();
        for &v in &current {
            if target.binary_search(&v).is_err() {
                top = self.forget(top, v);
            }
        }
        for &v in target {
            if current.binary_search(&v).is_err() {
                top = self.introduce(top, v);
            }
        }
        top
    }
}

/// Converts `td` into a nice decomposition with `anchors` added to every bag.
/// `td` must be a valid decomposition of `graph` once the anchors are added.
///
/// Edge `uv` is introduced directly below the forget node of whichever
/// endpoint is forgotten first, so every edge is introduced exactly once.
/// Vertices of a join bag are introduced in both branches below the join.
pub fn nicefy(td: &TreeDecomposition, graph: &Graph, anchors: &[usize]) -> Result<NiceTreeDecomposition> {
    let mut anchors = anchors.to_vec();
    anchors.sort_unstable();
    anchors.dedup();
    for &a in &anchors {
        graph.check_vertex(a)?;
    }
    let mut bags = if td.bags.is_empty() { vec![Vec::new()] } else { td.bags.clone() };
    for bag in &mut bags {
        bag.extend(anchors.iter().copied());
        bag.sort_unstable();
        bag.dedup();
    }
    let full = TreeDecomposition { bags, edges: td.edges.clone() };
    validate_td(graph, &full).map_err(Error::Decomposition)?;

    let count = full.bags.len();
    let mut tree_adj = vec![Vec::new(); count];
    for &(a, b) in &full.edges {
        tree_adj[a].push(b);
        tree_adj[b].push(a);
    }
    // Children lists from a BFS rooted at bag 0.
    let mut children = vec![Vec::new(); count];
    let mut order = vec![0usize];
    let mut seen = vec![false; count];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        let t = order[i];
        i += 1;
        let mut next: Vec<usize> = tree_adj[t].iter().copied().filter(|&c| !seen[c]).collect();
        next.sort_unstable();
        for &c in &next {
            seen[c] = true;
            order.push(c);
        }
        children[t] = next;
    }

    let mut b = NiceBuilder { graph, nodes: Vec::new(), introduced_edges: HashSet::new() };
    let mut top_of = vec![usize::MAX; count];
    for &t in order.iter().rev() {
        let target = &full.bags[t];
        let mut branches = Vec::new();
        if children[t].is_empty() {
            let leaf = b.push(NiceKind::Leaf, anchors.clone(), Vec::new());
            branches.push(b.morph(leaf, target));
        }
        for &c in &children[t] {
            branches.push(b.morph(top_of[c], target));
        }
        let mut top = branches[0];
        for &other in &branches[1..] {
            top = b.push(NiceKind::Join, target.clone(), vec![top, other]);
        }
        top_of[t] = top;
    }
    let mut top = b.morph(top_of[0], &anchors);
    for (i, &u) in anchors.iter().enumerate() {
        for &v in &anchors[i + 1..] {
            if graph.has_edge(u, v) && b.introduced_edges.insert((u, v)) {
                top = b.push(NiceKind::IntroduceEdge(u, v), anchors.clone(), vec![top]);
            }
        }
    }
    debug_assert_eq!(top, b.nodes.len() - 1);
    let nice = NiceTreeDecomposition { nodes: b.nodes, anchors };
    debug_assert_eq!(validate_nice(graph, &nice), Ok(()));
    Ok(nice)
}

/// Checks the nice-decomposition invariants: local node shapes, children
/// before parents, leaf and root bags equal to the anchors, every non-anchor
/// vertex forgotten exactly once and every edge introduced exactly once.
pub fn validate_nice(graph: &Graph, nice: &NiceTreeDecomposition) -> std::result::Result<(), String> {
    if nice.nodes.is_empty() {
        return Err("no nodes".into());
    }
    let n = graph.vertex_count();
    let anchors: BTreeSet<usize> = nice.anchors.iter().copied().collect();
    let mut forgotten = vec![0usize; n];
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let mut has_parent = vec![false; nice.nodes.len()];
    for (t, node) in nice.nodes.iter().enumerate() {
        if node.bag.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("node {t}: bag not sorted"));
        }
        if node.bag.iter().any(|&v| v >= n) {
            return Err(format!("node {t}: unknown vertex"));
        }
        if !anchors.iter().all(|a| node.bag.binary_search(a).is_ok()) {
            return Err(format!("node {t}: anchors missing from bag"));
        }
        for &c in &node.children {
            if c >= t {
                return Err(format!("node {t}: child {c} is not stored earlier"));
            }
            if std::mem::replace(&mut has_parent[c], true) {
                return Err(format!("node {c} has two parents"));
            }
        }
        let child_bag = |k: usize| &nice.nodes[node.children[k]].bag;
        let arity = match node.kind {
            NiceKind::Leaf => 0,
            NiceKind::Join => 2,
            _ => 1,
        };
        if node.children.len() != arity {
            return Err(format!("node {t}: {:?} with {} children", node.kind, node.children.len()));
        }
        match node.kind {
            NiceKind::Leaf => {
                if node.bag != nice.anchors {
                    return Err(format!("leaf {t}: bag differs from the anchors"));
                }
            }
            NiceKind::IntroduceVertex(v) => {
                let mut expect = child_bag(0).clone();
                if anchors.contains(&v) || expect.binary_search(&v).is_ok() {
                    return Err(format!("node {t}: bad introduction of {v}"));
                }
                expect.push(v);
                expect.sort_unstable();
                if node.bag != expect {
                    return Err(format!("node {t}: bag is not child plus {v}"));
                }
            }
            NiceKind::Forget(v) => {
                if anchors.contains(&v) || child_bag(0).binary_search(&v).is_err() {
                    return Err(format!("node {t}: bad forget of {v}"));
                }
                let expect: Vec<usize> = child_bag(0).iter().copied().filter(|&x| x != v).collect();
                if node.bag != expect {
                    return Err(format!("node {t}: bag is not child minus {v}"));
                }
                forgotten[v] += 1;
            }
            NiceKind::IntroduceEdge(u, v) => {
                if node.bag != *child_bag(0) {
                    return Err(format!("node {t}: edge node changes the bag"));
                }
                if node.bag.binary_search(&u).is_err() || node.bag.binary_search(&v).is_err() {
                    return Err(format!("node {t}: edge endpoints not in bag"));
                }
                if u >= v || !graph.has_edge(u, v) {
                    return Err(format!("node {t}: {u}-{v} is not a graph edge in canonical order"));
                }
                if !edges.insert((u, v)) {
                    return Err(format!("edge {u}-{v} introduced twice"));
                }
            }
            NiceKind::Join => {
                if child_bag(0) != child_bag(1) || node.bag != *child_bag(0) {
                    return Err(format!("join {t}: bags differ"));
                }
            }
        }
    }
    let root = nice.nodes.len() - 1;
    if has_parent[..root].iter().any(|&p| !p) {
        return Err("more than one root".into());
    }
    if nice.nodes[root].bag != nice.anchors {
        return Err("root bag differs from the anchors".into());
    }
    for v in 0..n {
        let expect = usize::from(!anchors.contains(&v));
        if forgotten[v] != expect {
            return Err(format!("vertex {v} forgotten {} times", forgotten[v]));
        }
    }
    if edges.len() != graph.edge_count() {
        return Err("some edge is never introduced".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let td = parse_td("c a comment\ns td 1 2 2\nb 1 1 2\n").unwrap();
        assert_eq!(td.bags, vec![vec![0, 1]]);
        assert_eq!(td.width(), 1);
        let two = parse_td("s td 2 2 3\nb 1 1 2\nb 2 2 3\n1 2\n").unwrap();
        assert_eq!(two.width(), 1);
        assert_eq!(two.edges, vec![(0, 1)]);
        assert!(parse_td("s td 3 1 3\nb 1 1\nb 2 2\nb 3 3\n1 2\n2 3\n3 1\n").is_err());
        assert!(parse_td("s td 2 1 3\nb 1 1\nb 2 2\n").is_err());
        assert!(parse_td("s td 1 1 3\nb 2 1\n").is_err());
        assert!(parse_td("s td 1 1 3\nb 1 4\n").is_err());
        assert!(parse_td("b 1 1\n").is_err());
        assert!(parse_td("s tw 1 1 1\n").is_err());
    }

    #[test]
    fn pace_round_trip() {
        let g = Graph::cycle(6);
        let td = greedy_decompose(&g);
        let again = parse_td(&td.to_pace(6)).unwrap();
        assert_eq!(td, again);
    }

    #[test]
    fn validation_examples() {
        let g = Graph::cycle(4);
        let trivial = TreeDecomposition::new(vec![(0..4).collect()], vec![]);
        assert_eq!(validate_td(&g, &trivial), Ok(()));
        let missing_edge = TreeDecomposition::new(vec![vec![0, 1, 2], vec![2, 3]], vec![(0, 1)]);
        assert!(validate_td(&g, &missing_edge).unwrap_err().contains("edge"));
        let p = Graph::path(3);
        let split = TreeDecomposition::new(vec![vec![0, 1], vec![1, 2], vec![0]], vec![(0, 1), (1, 2)]);
        assert!(validate_td(&p, &split).unwrap_err().contains("not connected"));
    }

    #[test]
    fn greedy_widths() {
        let tree = Graph::from_edges(6, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)]).unwrap();
        let td = greedy_decompose(&tree);
        assert_eq!(validate_td(&tree, &td), Ok(()));
        assert_eq!(td.width(), 1);
        let k5 = Graph::complete(5);
        assert_eq!(greedy_decompose(&k5).width(), 4);
        let c5 = Graph::cycle(5);
        let td = greedy_decompose(&c5);
        assert_eq!(validate_td(&c5, &td), Ok(()));
        assert_eq!(td.width(), 2);
        let forest = Graph::from_edges(5, &[(0, 1), (3, 4)]).unwrap();
        assert_eq!(validate_td(&forest, &greedy_decompose(&forest)), Ok(()));
        assert_eq!(validate_td(&Graph::empty(0), &greedy_decompose(&Graph::empty(0))), Ok(()));
    }

    #[test]
    fn nicefy_single_bag_edge() {
        // Vertices 0 and 1 form the edge, vertex 2 is the anchor.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let td = TreeDecomposition::new(vec![vec![0, 1]], vec![]);
        let nice = nicefy(&td, &g, &[2]).unwrap();
        assert_eq!(validate_nice(&g, &nice), Ok(()));
        let kinds: Vec<NiceKind> = nice.nodes.iter().map(|n| n.kind).collect();
        assert_eq!(kinds[0], NiceKind::Leaf);
        assert_eq!(kinds.iter().filter(|k| matches!(k, NiceKind::IntroduceEdge(..))).count(), 2);
        assert_eq!(kinds.iter().filter(|k| matches!(k, NiceKind::Forget(_))).count(), 2);
        assert_eq!(nice.nodes[nice.root()].bag, vec![2]);
        assert_eq!(nice.width(), td.width() + 1);
    }

    #[test]
    fn nicefy_rejects_invalid() {
        let g = Graph::path(3);
        let td = TreeDecomposition::new(vec![vec![0, 1]], vec![]);
        assert!(nicefy(&td, &g, &[]).is_err());
    }

    #[test]
    fn validator_catches_double_edges() {
        let g = Graph::path(2);
        let td = TreeDecomposition::new(vec![vec![0, 1]], vec![]);
        let mut nice = nicefy(&td, &g, &[]).unwrap();
        let pos = nice.nodes.iter().position(|n| matches!(n.kind, NiceKind::IntroduceEdge(..))).unwrap();
        let dup = nice.nodes[pos].clone();
        // Splice a second copy of the edge node above the first.
        let mut shifted: Vec<NiceNode> = nice.nodes.clone();
        for node in shifted.iter_mut().skip(pos + 1) {
            for c in node.children.iter_mut() {
                if *c >= pos {
                    *c += 1;
                }
            }
        }
        shifted.insert(pos + 1, NiceNode { children: vec![pos], ..dup });
        nice.nodes = shifted;
        assert!(validate_nice(&g, &nice).unwrap_err().contains("twice"));
    }
}
