//! Rooted leaf-labelled combinatorial trees `𝕋_n`.
//!
//! A tree has `n` leaves labelled bijectively by `[n]`, an explicit degree-1
//! root vertex, and no degree-2 vertices; every branch point has at least two
//! children.  Children are kept ordered by the least leaf label in their
//! subtree, matching the convention that subtrees above a branch point are
//! ordered by their least labels.  Optional edge lengths support the
//! continuous-time genealogies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::partitions::{relabel, PartitionN};

#[derive(Debug, Clone)]
struct Node {
    parent: Option<usize>,
    children: Vec<usize>,
    /// Leaf label (None for the root and branch points).
    label: Option<usize>,
    /// Length of the edge to the parent (None in the combinatorial case).
    elen: Option<f64>,
    /// Cached number of leaves in this subtree.
    size: usize,
    /// Cached least leaf label in this subtree.
    min_label: usize,
}

/// Element of `𝕋_n`: rooted, leaf-labelled, no degree-2 vertices.
#[derive(Debug, Clone)]
pub struct LabelledTree {
    nodes: Vec<Node>,
    root: usize,
    n: usize,
}

/// Canonical delabelled encoding of a rooted tree shape.  Two trees have equal
/// shapes exactly when a leaf permutation maps one to the other.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeShape(pub String);

impl PartialEq for LabelledTree {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_code() == other.canonical_code()
    }
}
impl Eq for LabelledTree {}

impl LabelledTree {
    /// The unique tree of `𝕋_1`: root joined to the leaf labelled 1.
    pub fn leaf_tree() -> Self {
        let root = Node {
            parent: None,
            children: vec![1],
            label: None,
            elen: None,
            size: 1,
            min_label: 1,
        };
        let leaf = Node {
            parent: Some(0),
            children: vec![],
            label: Some(1),
            elen: None,
            size: 1,
            min_label: 1,
        };
        LabelledTree {
            nodes: vec![root, leaf],
            root: 0,
            n: 1,
        }
    }

    /// Number of leaves.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted leaf labels.
    pub fn labels(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|nd| nd.label)
            .collect();
        v.sort_unstable();
        v
    }

    /// True when the tree carries edge lengths.
    pub fn has_lengths(&self) -> bool {
        self.nodes
            .iter()
            .any(|nd| nd.parent.is_some() && nd.elen.is_some())
    }

    fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// The first branch point (the child of the root), if `n ≥ 2`.
    fn first_branch(&self) -> Result<usize> {
        if self.n < 2 {
            return Err(Error::InvalidTree(
                "no first branch point in a one-leaf tree".into(),
            ));
        }
        Ok(self.nodes[self.root].children[0])
    }

    fn leaf_labels_under(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node(id).size);
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if let Some(l) = self.node(v).label {
                out.push(l);
            }
            stack.extend(self.node(v).children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    /// Partition of the label set at the first branch point, blocks ordered by
    /// least element.
    pub fn first_split(&self) -> Result<PartitionN> {
        let b = self.first_branch()?;
        let blocks: Vec<Vec<usize>> = self
            .node(b)
            .children
            .iter()
            .map(|&c| self.leaf_labels_under(c))
            .collect();
        // The tree may carry an arbitrary label set (e.g. subtree views); use
        // the relabelling constructor only when labels are exactly [n].
        let labels = self.labels();
        if labels == (1..=self.n).collect::<Vec<_>>() {
            PartitionN::new(self.n, blocks)
        } else {
            relabel(&blocks)
        }
    }

    /// Blocks of the first split with the *original* labels (no relabelling).
    pub fn first_split_blocks(&self) -> Result<Vec<Vec<usize>>> {
        let b = self.first_branch()?;
        let mut blocks: Vec<Vec<usize>> = self
            .node(b)
            .children
            .iter()
            .map(|&c| self.leaf_labels_under(c))
            .collect();
        blocks.sort_by_key(|b| b[0]);
        Ok(blocks)
    }

    fn node_of_label(&self, label: usize) -> Result<usize> {
        self.nodes
            .iter()
            .position(|nd| nd.label == Some(label))
            .ok_or_else(|| Error::InvalidTree(format!("no leaf labelled {label}")))
    }

    fn refresh_caches_upward(&mut self, mut id: usize) {
        loop {
            let (size, min_label) = {
                let nd = &self.nodes[id];
                if nd.children.is_empty() {
                    (1, nd.label.unwrap())
                } else {
                    let mut s = 0;
                    let mut m = usize::MAX;
                    for &c in &nd.children {
                        s += self.nodes[c].size;
                        m = m.min(self.nodes[c].min_label);
                    }
                    (s, m)
                }
            };
            self.nodes[id].size = size;
            self.nodes[id].min_label = min_label;
            let mut kids = std::mem::take(&mut self.nodes[id].children);
            kids.sort_by_key(|&c| self.nodes[c].min_label);
            self.nodes[id].children = kids;
            match self.nodes[id].parent {
                Some(p) => id = p,
                None => break,
            }
        }
    }

    fn push_node(&mut self, nd: Node) -> usize {
        self.nodes.push(nd);
        self.nodes.len() - 1
    }

    /// Subdivide the edge above `child` with a new branch point and hang a new
    /// leaf labelled `label` from it.
    pub fn insert_leaf_at_edge(&mut self, child: usize, label: usize) {
        let parent = self.nodes[child].parent.expect("child has a parent");
        let mid = self.push_node(Node {
            parent: Some(parent),
            children: vec![child],
            label: None,
            elen: None,
            size: 0,
            min_label: 0,
        });
        let leaf = self.push_node(Node {
            parent: Some(mid),
            children: vec![],
            label: Some(label),
            elen: None,
            size: 1,
            min_label: label,
        });
        self.nodes[mid].children.push(leaf);
        let pos = self.nodes[parent]
            .children
            .iter()
            .position(|&c| c == child)
            .expect("child listed under parent");
        self.nodes[parent].children[pos] = mid;
        self.nodes[child].parent = Some(mid);
        self.n += 1;
        self.refresh_caches_upward(mid);
    }

    /// Attach a new leaf labelled `label` directly to branch point `node`.
    pub fn insert_leaf_at_branch(&mut self, node: usize, label: usize) {
        let leaf = self.push_node(Node {
            parent: Some(node),
            children: vec![],
            label: Some(label),
            elen: None,
            size: 1,
            min_label: label,
        });
        self.nodes[node].children.push(leaf);
        self.n += 1;
        self.refresh_caches_upward(node);
    }

    /// All insertion positions: every edge (as the child endpoint) and every
    /// branch point.  Used by the exhaustive enumeration.
    fn insertion_positions(&self) -> (Vec<usize>, Vec<usize>) {
        let edges: Vec<usize> = (0..self.nodes.len())
            .filter(|&id| self.nodes[id].parent.is_some())
            .collect();
        let branches: Vec<usize> = (0..self.nodes.len())
            .filter(|&id| self.nodes[id].children.len() >= 2)
            .collect();
        (edges, branches)
    }

    /// Remove the leaf with the given label, suppressing any resulting
    /// degree-2 vertex (edge lengths, when present, are added on merge).
    pub fn remove_leaf(&self, label: usize) -> Result<LabelledTree> {
        if self.n < 2 {
            return Err(Error::InvalidTree("cannot remove the only leaf".into()));
        }
        let mut t = self.clone();
        let leaf = t.node_of_label(label)?;
        let parent = t.nodes[leaf].parent.unwrap();
        t.nodes[parent].children.retain(|&c| c != leaf);
        if t.nodes[parent].children.len() == 1 && t.nodes[parent].parent.is_some() {
            // parent became degree-2: splice it out
            let only = t.nodes[parent].children[0];
            let gp = t.nodes[parent].parent.unwrap();
            let pos = t.nodes[gp]
                .children
                .iter()
                .position(|&c| c == parent)
                .unwrap();
            t.nodes[gp].children[pos] = only;
            t.nodes[only].parent = Some(gp);
            if let (Some(a), Some(b)) = (t.nodes[parent].elen, t.nodes[only].elen) {
                t.nodes[only].elen = Some(a + b);
            }
        }
        t.n -= 1;
        Ok(t.compact())
    }

    /// Rebuild the arena containing only nodes reachable from the root, with
    /// caches refreshed.  Returns the compacted tree.
    fn compact(&self) -> LabelledTree {
        let mut out = LabelledTree {
            nodes: Vec::new(),
            root: 0,
            n: 0,
        };
        fn copy(src: &LabelledTree, id: usize, parent: Option<usize>, out: &mut LabelledTree) -> usize {
            let nid = out.nodes.len();
            out.nodes.push(Node {
                parent,
                children: vec![],
                label: src.nodes[id].label,
                elen: src.nodes[id].elen,
                size: 1,
                min_label: src.nodes[id].label.unwrap_or(usize::MAX),
            });
            if src.nodes[id].label.is_some() {
                out.n += 1;
            }
            let mut kids: Vec<(usize, usize)> = Vec::new();
            for &c in &src.nodes[id].children {
                let cid = copy(src, c, Some(nid), out);
                kids.push((out.nodes[cid].min_label, cid));
            }
            kids.sort_unstable();
            out.nodes[nid].children = kids.iter().map(|&(_, c)| c).collect();
            if !kids.is_empty() {
                out.nodes[nid].min_label = kids[0].0;
                out.nodes[nid].size = kids
                    .iter()
                    .map(|&(_, c)| out.nodes[c].size)
                    .sum();
            }
            nid
        }
        copy(self, self.root, None, &mut out);
        out
    }

    /// Reduced subtree spanned by the root and the leaves in `B`, with
    /// degree-2 vertices suppressed.
    pub fn reduced_subtree(&self, b: &[usize]) -> Result<LabelledTree> {
        if b.is_empty() {
            return Err(Error::InvalidTree("reduction to an empty label set".into()));
        }
        let keep: std::collections::BTreeSet<usize> = b.iter().copied().collect();
        for &l in &keep {
            self.node_of_label(l)?;
        }
        let mut t = self.clone();
        // Bottom-up rebuild of each node's child list: drop leaves outside B,
        // drop emptied internal nodes, splice degree-2 internal nodes.  A
        // post-order pass handles everything in one sweep.
        fn prune(
            t: &mut LabelledTree,
            id: usize,
            keep: &std::collections::BTreeSet<usize>,
        ) -> Option<usize> {
            if let Some(l) = t.nodes[id].label {
                return keep.contains(&l).then_some(id);
            }
            let old: Vec<usize> = t.nodes[id].children.clone();
            let mut kept = Vec::new();
            for c in old {
                if let Some(k) = prune(t, c, keep) {
                    t.nodes[k].parent = Some(id);
                    kept.push(k);
                }
            }
            if id == t.root {
                t.nodes[id].children = kept;
                return Some(id);
            }
            match kept.len() {
                0 => None,
                1 => {
                    // splice this degree-2 vertex out
                    let only = kept[0];
                    if let (Some(a), Some(b)) = (t.nodes[id].elen, t.nodes[only].elen) {
                        t.nodes[only].elen = Some(a + b);
                    }
                    Some(only)
                }
                _ => {
                    t.nodes[id].children = kept;
                    Some(id)
                }
            }
        }
        let root = t.root;
        prune(&mut t, root, &keep);
        t.n = keep.len();
        Ok(t.compact())
    }

    /// Height in edge count (ignores lengths).
    pub fn height_edges(&self) -> usize {
        fn depth(t: &LabelledTree, id: usize, d: usize) -> usize {
            if t.nodes[id].children.is_empty() {
                return d;
            }
            t.nodes[id]
                .children
                .iter()
                .map(|&c| depth(t, c, d + 1))
                .max()
                .unwrap()
        }
        depth(self, self.root, 0)
    }

    /// Height in summed edge lengths (edges without a length count 1).
    pub fn height_length(&self) -> f64 {
        fn depth(t: &LabelledTree, id: usize, d: f64) -> f64 {
            if t.nodes[id].children.is_empty() {
                return d;
            }
            t.nodes[id]
                .children
                .iter()
                .map(|&c| depth(t, c, d + t.nodes[c].elen.unwrap_or(1.0)))
                .fold(f64::MIN, f64::max)
        }
        depth(self, self.root, 0.0)
    }

    /// Root-to-leaf distance per label, in edge count.
    pub fn leaf_depths(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        fn walk(t: &LabelledTree, id: usize, d: usize, out: &mut BTreeMap<usize, usize>) {
            if let Some(l) = t.nodes[id].label {
                out.insert(l, d);
            }
            for &c in &t.nodes[id].children {
                walk(t, c, d + 1, out);
            }
        }
        walk(self, self.root, 0, &mut out);
        out
    }

    /// Root-to-leaf distance per label in summed edge lengths.
    pub fn leaf_depths_length(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        fn walk(t: &LabelledTree, id: usize, d: f64, out: &mut BTreeMap<usize, f64>) {
            if let Some(l) = t.nodes[id].label {
                out.insert(l, d);
            }
            for &c in &t.nodes[id].children {
                walk(t, c, d + t.nodes[c].elen.unwrap_or(1.0), out);
            }
        }
        walk(self, self.root, 0.0, &mut out);
        out
    }

    /// Canonical labelled encoding: children are listed in least-label order,
    /// so structurally equal trees produce identical strings.
    pub fn canonical_code(&self) -> String {
        fn enc(t: &LabelledTree, id: usize, s: &mut String) {
            match t.nodes[id].label {
                Some(l) => s.push_str(&format!("l{l}")),
                None => {
                    s.push('(');
                    for (i, &c) in t.nodes[id].children.iter().enumerate() {
                        if i > 0 {
                            s.push(',');
                        }
                        enc(t, c, s);
                    }
                    s.push(')');
                }
            }
        }
        let mut s = String::new();
        enc(self, self.root, &mut s);
        s
    }

    /// Canonical delabelled shape: a recursive sorted-multiset encoding.
    pub fn shape(&self) -> TreeShape {
        fn enc(t: &LabelledTree, id: usize) -> String {
            if t.nodes[id].children.is_empty() {
                return "o".to_string();
            }
            let mut parts: Vec<String> =
                t.nodes[id].children.iter().map(|&c| enc(t, c)).collect();
            parts.sort();
            format!("({})", parts.join(","))
        }
        TreeShape(enc(self, self.root))
    }

    /// Newick serialization; lengths are appended as `:len` when present.
    /// The degree-1 root is rendered as the outermost unary level.
    pub fn newick(&self) -> String {
        fn enc(t: &LabelledTree, id: usize, s: &mut String) {
            let nd = &t.nodes[id];
            if let Some(l) = nd.label {
                s.push_str(&l.to_string());
            } else {
                s.push('(');
                for (i, &c) in nd.children.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    enc(t, c, s);
                }
                s.push(')');
            }
            if id != t.root {
                if let Some(len) = nd.elen {
                    s.push_str(&format!(":{len}"));
                }
            }
        }
        let mut s = String::new();
        let top = self.nodes[self.root].children[0];
        enc(self, top, &mut s);
        s.push(';');
        s
    }

    /// Parse the Newick text produced by [`LabelledTree::newick`].
    pub fn parse_newick(text: &str) -> Result<LabelledTree> {
        let text = text.trim();
        let body = text
            .strip_suffix(';')
            .ok_or_else(|| Error::Parse("Newick must end with ';'".into()))?;
        let mut t = LabelledTree {
            nodes: vec![Node {
                parent: None,
                children: vec![],
                label: None,
                elen: None,
                size: 0,
                min_label: usize::MAX,
            }],
            root: 0,
            n: 0,
        };
        let chars: Vec<char> = body.chars().collect();
        let mut pos = 0usize;
        fn parse(
            chars: &[char],
            pos: &mut usize,
            t: &mut LabelledTree,
            parent: usize,
        ) -> Result<usize> {
            let id = t.nodes.len();
            t.nodes.push(Node {
                parent: Some(parent),
                children: vec![],
                label: None,
                elen: None,
                size: 0,
                min_label: usize::MAX,
            });
            if *pos < chars.len() && chars[*pos] == '(' {
                *pos += 1;
                loop {
                    let c = parse(chars, pos, t, id)?;
                    t.nodes[id].children.push(c);
                    match chars.get(*pos) {
                        Some(',') => *pos += 1,
                        Some(')') => {
                            *pos += 1;
                            break;
                        }
                        other => {
                            return Err(Error::Parse(format!(
                                "expected ',' or ')', found {other:?}"
                            )))
                        }
                    }
                }
            } else {
                let start = *pos;
                while *pos < chars.len() && chars[*pos].is_ascii_digit() {
                    *pos += 1;
                }
                if start == *pos {
                    return Err(Error::Parse("expected a leaf label".into()));
                }
                let label: usize = chars[start..*pos]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Parse("bad leaf label".into()))?;
                t.nodes[id].label = Some(label);
                t.n += 1;
            }
            if chars.get(*pos) == Some(&':') {
                *pos += 1;
                let start = *pos;
                while *pos < chars.len()
                    && (chars[*pos].is_ascii_digit()
                        || chars[*pos] == '.'
                        || chars[*pos] == 'e'
                        || chars[*pos] == '-'
                        || chars[*pos] == '+')
                {
                    *pos += 1;
                }
                let len: f64 = chars[start..*pos]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Parse("bad edge length".into()))?;
                t.nodes[id].elen = Some(len);
            }
            Ok(id)
        }
        let top = parse(&chars, &mut pos, &mut t, 0)?;
        if pos != chars.len() {
            return Err(Error::Parse(format!("trailing input at {pos}")));
        }
        t.nodes[0].children.push(top);
        Ok(t.compact())
    }

    /// JSON adjacency export: `{"root": id, "edges": [[parent, child, len?]..],
    /// "leaf_labels": {node: label}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let t = self.compact();
        let mut edges = Vec::new();
        let mut leaf_labels = serde_json::Map::new();
        for (id, nd) in t.nodes.iter().enumerate() {
            if let Some(p) = nd.parent {
                match nd.elen {
                    Some(len) => edges.push(json!([p, id, len])),
                    None => edges.push(json!([p, id])),
                }
            }
            if let Some(l) = nd.label {
                leaf_labels.insert(id.to_string(), json!(l));
            }
        }
        json!({"root": t.root, "edges": edges, "leaf_labels": leaf_labels})
    }

    /// Rebuild from the JSON adjacency form.
    pub fn from_json(v: &serde_json::Value) -> Result<LabelledTree> {
        let bad = |m: &str| Error::Parse(format!("tree JSON: {m}"));
        let root = v["root"].as_u64().ok_or_else(|| bad("missing root"))? as usize;
        let edges = v["edges"].as_array().ok_or_else(|| bad("missing edges"))?;
        let nnodes = edges.len() + 1;
        let mut nodes: Vec<Node> = (0..nnodes)
            .map(|_| Node {
                parent: None,
                children: vec![],
                label: None,
                elen: None,
                size: 0,
                min_label: usize::MAX,
            })
            .collect();
        for e in edges {
            let arr = e.as_array().ok_or_else(|| bad("edge not an array"))?;
            let p = arr[0].as_u64().ok_or_else(|| bad("bad parent"))? as usize;
            let c = arr[1].as_u64().ok_or_else(|| bad("bad child"))? as usize;
            if p >= nnodes || c >= nnodes {
                return Err(bad("edge endpoint out of range"));
            }
            nodes[c].parent = Some(p);
            nodes[c].elen = arr.get(2).and_then(|x| x.as_f64());
            nodes[p].children.push(c);
        }
        let mut n = 0;
        if let Some(map) = v["leaf_labels"].as_object() {
            for (k, lv) in map {
                let id: usize = k.parse().map_err(|_| bad("bad node id"))?;
                let l = lv.as_u64().ok_or_else(|| bad("bad label"))? as usize;
                nodes[id].label = Some(l);
                n += 1;
            }
        }
        let t = LabelledTree { nodes, root, n };
        Ok(t.compact())
    }

    /// Internal consistency check of the tree invariants.
    pub fn validate(&self) -> Result<()> {
        let labels = self.labels();
        if labels.len() != self.n {
            return Err(Error::InvalidTree("label count mismatch".into()));
        }
        if self.nodes[self.root].children.len() != 1 && self.n > 0 {
            return Err(Error::InvalidTree("root must have degree 1".into()));
        }
        for (id, nd) in self.nodes.iter().enumerate() {
            if id == self.root {
                continue;
            }
            let reachable = {
                let mut v = id;
                loop {
                    match self.nodes[v].parent {
                        Some(p) => v = p,
                        None => break v == self.root,
                    }
                }
            };
            if !reachable {
                continue;
            }
            if nd.label.is_none() && nd.children.len() < 2 {
                return Err(Error::InvalidTree(format!(
                    "internal node {id} has degree 2 (1 child)"
                )));
            }
            if nd.label.is_some() && !nd.children.is_empty() {
                return Err(Error::InvalidTree("labelled node with children".into()));
            }
        }
        Ok(())
    }

    /// Internal access for traversals by other modules.
    pub(crate) fn children_of(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }
    pub(crate) fn root_id(&self) -> usize {
        self.root
    }
    pub(crate) fn subtree_size(&self, id: usize) -> usize {
        self.nodes[id].size
    }
    pub(crate) fn min_label_of(&self, id: usize) -> usize {
        self.nodes[id].min_label
    }
    pub(crate) fn labels_under(&self, id: usize) -> Vec<usize> {
        self.leaf_labels_under(id)
    }

    /// Branch points (internal vertices with ≥ 2 children).
    pub fn branch_points(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&id| self.nodes[id].children.len() >= 2)
            .collect()
    }

    /// For each branch point: its label set `B` and the partition of `[#B]`
    /// induced by its child subtrees after relabelling by the increasing
    /// bijection.  This is the data of the tree-probability product formula.
    pub fn branch_partitions(&self) -> Result<Vec<(Vec<usize>, PartitionN)>> {
        let mut out = Vec::new();
        for b in self.branch_points() {
            let blocks: Vec<Vec<usize>> = self
                .node(b)
                .children
                .iter()
                .map(|&c| self.leaf_labels_under(c))
                .collect();
            let labels = self.leaf_labels_under(b);
            out.push((labels, relabel(&blocks)?));
        }
        Ok(out)
    }
}

/// Recursive description used by simulators to build trees (with optional
/// edge lengths) in one shot.
pub(crate) struct RawNode {
    pub label: Option<usize>,
    pub elen: Option<f64>,
    pub children: Vec<RawNode>,
}

/// Build a tree from a recursive description; `top` becomes the single child
/// of the explicit degree-1 root.
pub(crate) fn tree_from_raw(top: RawNode) -> Result<LabelledTree> {
    let mut t = LabelledTree {
        nodes: vec![Node {
            parent: None,
            children: vec![],
            label: None,
            elen: None,
            size: 0,
            min_label: usize::MAX,
        }],
        root: 0,
        n: 0,
    };
    fn add(t: &mut LabelledTree, parent: usize, raw: RawNode) -> usize {
        let id = t.nodes.len();
        t.nodes.push(Node {
            parent: Some(parent),
            children: vec![],
            label: raw.label,
            elen: raw.elen,
            size: 0,
            min_label: usize::MAX,
        });
        if raw.label.is_some() {
            t.n += 1;
        }
        for c in raw.children {
            let cid = add(t, id, c);
            t.nodes[id].children.push(cid);
        }
        id
    }
    let top_id = add(&mut t, 0, top);
    t.nodes[0].children.push(top_id);
    let t = t.compact();
    t.validate()?;
    Ok(t)
}

/// Exhaustive enumeration of `𝕋_n` by recursive insertion of leaf `n` into
/// every edge and every branch point of each tree of `𝕋_{n-1}`.  Guarded at
/// `n ≤ 8` unless `force` is set.
pub fn enumerate_trees(n: usize, force: bool) -> Result<Vec<LabelledTree>> {
    if n == 0 {
        return Err(Error::InvalidTree("n must be positive".into()));
    }
    if n > 8 && !force {
        return Err(Error::ResourceGuard(format!(
            "tree enumeration for n = {n} > 8"
        )));
    }
    let mut cur = vec![LabelledTree::leaf_tree()];
    for m in 2..=n {
        let mut next = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for t in &cur {
            let (edges, branches) = t.insertion_positions();
            for &e in &edges {
                let mut t2 = t.clone();
                t2.insert_leaf_at_edge(e, m);
                if seen.insert(t2.canonical_code()) {
                    next.push(t2);
                }
            }
            for &b in &branches {
                let mut t2 = t.clone();
                t2.insert_leaf_at_branch(b, m);
                if seen.insert(t2.canonical_code()) {
                    next.push(t2);
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 3-leaf caterpillar with cherry {1,2}.
    fn caterpillar3() -> LabelledTree {
        let mut t = LabelledTree::leaf_tree();
        let leaf1 = 1; // node id of leaf 1 in leaf_tree
        t.insert_leaf_at_edge(leaf1, 2);
        // cherry insertion point: the edge above leaf 1 again
        let l1 = (0..t.nodes.len())
            .find(|&i| t.nodes[i].label == Some(1))
            .unwrap();
        let mut t3 = t.clone();
        t3.insert_leaf_at_edge(l1, 3);
        // that built ((1,3),2); rebuild as ((1,2),3): insert 3 below the split
        let mut t = t;
        let b = t.nodes[t.root].children[0];
        t.insert_leaf_at_edge(b, 3);
        drop(t3);
        t
    }

    fn star3() -> LabelledTree {
        let mut t = LabelledTree::leaf_tree();
        t.insert_leaf_at_edge(1, 2);
        let b = t.nodes[t.root].children[0];
        t.insert_leaf_at_branch(b, 3);
        t
    }

    #[test]
    fn t2_first_split() {
        let mut t = LabelledTree::leaf_tree();
        t.insert_leaf_at_edge(1, 2);
        assert_eq!(
            t.first_split().unwrap(),
            PartitionN::new(2, vec![vec![1], vec![2]]).unwrap()
        );
        assert_eq!(t.height_edges(), 2);
        t.validate().unwrap();
    }

    #[test]
    fn caterpillar_and_star_splits() {
        let cat = caterpillar3();
        assert_eq!(
            cat.first_split().unwrap(),
            PartitionN::new(3, vec![vec![1, 2], vec![3]]).unwrap()
        );
        let star = star3();
        assert_eq!(star.first_split().unwrap(), PartitionN::singletons(3));
        assert_eq!(star.height_edges(), 2);
        assert_eq!(cat.height_edges(), 3);
    }

    #[test]
    fn leaf_tree_height_is_one() {
        assert_eq!(LabelledTree::leaf_tree().height_edges(), 1);
    }

    #[test]
    fn removal_examples() {
        let star = star3();
        let t2 = star.remove_leaf(3).unwrap();
        assert_eq!(t2.n(), 2);
        assert_eq!(
            t2.first_split().unwrap(),
            PartitionN::new(2, vec![vec![1], vec![2]]).unwrap()
        );
        let cat = caterpillar3();
        let t2 = cat.remove_leaf(3).unwrap();
        assert_eq!(t2.labels(), vec![1, 2]);
        t2.validate().unwrap();
        assert!(LabelledTree::leaf_tree().remove_leaf(1).is_err());
        assert!(star.remove_leaf(9).is_err());
    }

    #[test]
    fn reduced_subtree_examples() {
        let cat = caterpillar3();
        // full label set: identity
        let r = cat.reduced_subtree(&[1, 2, 3]).unwrap();
        assert_eq!(r, cat);
        // single leaf: a root-leaf edge
        let r = cat.reduced_subtree(&[1]).unwrap();
        assert_eq!(r.n(), 1);
        assert_eq!(r.height_edges(), 1);
        // {1,3} in the caterpillar: a 2-leaf tree on labels {1,3}
        let r = cat.reduced_subtree(&[1, 3]).unwrap();
        assert_eq!(r.labels(), vec![1, 3]);
        assert_eq!(r.height_edges(), 2);
        r.validate().unwrap();
        assert!(cat.reduced_subtree(&[]).is_err());
    }

    #[test]
    fn reduction_is_monotone() {
        for t in enumerate_trees(5, false).unwrap().iter().step_by(17) {
            let b_small = vec![1, 3];
            let b_big = vec![1, 2, 3, 5];
            let once = t.reduced_subtree(&b_small).unwrap();
            let twice = t
                .reduced_subtree(&b_big)
                .unwrap()
                .reduced_subtree(&b_small)
                .unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_trees(1, false).unwrap().len(), 1);
        assert_eq!(enumerate_trees(2, false).unwrap().len(), 1);
        assert_eq!(enumerate_trees(3, false).unwrap().len(), 4);
        assert_eq!(enumerate_trees(4, false).unwrap().len(), 26);
        assert!(enumerate_trees(9, false).is_err());
    }

    #[test]
    fn shapes_of_t4_number_five() {
        let shapes: std::collections::HashSet<TreeShape> = enumerate_trees(4, false)
            .unwrap()
            .iter()
            .map(|t| t.shape())
            .collect();
        assert_eq!(shapes.len(), 5);
    }

    #[test]
    fn t3_shapes() {
        let trees = enumerate_trees(3, false).unwrap();
        let caterpillars: Vec<&LabelledTree> =
            trees.iter().filter(|t| t.first_split().unwrap().num_blocks() == 2).collect();
        assert_eq!(caterpillars.len(), 3);
        let s0 = caterpillars[0].shape();
        assert!(caterpillars.iter().all(|t| t.shape() == s0));
        let star = trees
            .iter()
            .find(|t| t.first_split().unwrap().num_blocks() == 3)
            .unwrap();
        assert_ne!(star.shape(), s0);
    }

    #[test]
    fn caterpillar_heights() {
        // caterpillar on n leaves has height n (edge count, incl. root edge)
        let mut t = LabelledTree::leaf_tree();
        t.insert_leaf_at_edge(1, 2);
        for m in 3..=6 {
            // deepest leaf is the one labelled 1; insert above it
            let l1 = (0..t.nodes.len())
                .find(|&i| t.nodes[i].label == Some(1))
                .unwrap();
            t.insert_leaf_at_edge(l1, m);
            assert_eq!(t.height_edges(), m);
        }
        let depths = t.leaf_depths();
        assert_eq!(depths[&1], 6);
        assert_eq!(depths[&6], 6);
        assert_eq!(depths[&2], 2);
        assert_eq!(depths[&5], 5);
    }

    #[test]
    fn newick_round_trip() {
        let mut t2 = LabelledTree::leaf_tree();
        t2.insert_leaf_at_edge(1, 2);
        assert_eq!(t2.newick(), "(1,2);");
        let cat = caterpillar3();
        assert_eq!(cat.newick(), "((1,2),3);");
        for t in enumerate_trees(4, false).unwrap() {
            let back = LabelledTree::parse_newick(&t.newick()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn json_round_trip() {
        for t in enumerate_trees(4, false).unwrap().iter().step_by(5) {
            let v = t.to_json();
            let back = LabelledTree::from_json(&v).unwrap();
            assert_eq!(&back, t);
        }
    }

    #[test]
    fn first_split_blocks_partition_label_set() {
        for t in enumerate_trees(5, false).unwrap().iter().step_by(23) {
            let pi = t.first_split().unwrap();
            let all: Vec<usize> = pi.blocks().iter().flatten().copied().collect();
            let mut sorted = all.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (1..=5).collect::<Vec<_>>());
            // ordered by least element
            let mins: Vec<usize> = pi.blocks().iter().map(|b| b[0]).collect();
            assert!(mins.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn shape_invariant_under_leaf_permutation() {
        let cat = caterpillar3();
        // swap labels 1 and 3 by rebuilding from Newick with renamed labels
        let swapped = LabelledTree::parse_newick("((3,2),1);").unwrap();
        assert_eq!(cat.shape(), swapped.shape());
        assert_ne!(cat, swapped);
    }
}
