//! Hierarchy construction: BFS tree discovery over the unit-disk graph,
//! then bottom-up cluster formation driven by the size parameter `k`.
//!
//! Formation walks the tree once per hierarchy level. A node whose pending
//! subtree reaches `k` members forms clusters on it: a single cluster when
//! the subtree has fewer than `2k` members, otherwise it packs whole child
//! subtrees, in ascending child id order, into groups that land in
//! `[k, 2k)`; the packing node itself heads the remainder group. Heads and
//! any unclustered leftover around the root then form the next level's tree,
//! contracted along ancestor lines, until a single root cluster remains
//! under the base station. The whole construction is a pure function of
//! `(tree, k)`; the result is immutable and safely shared.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::topology::{euclidean_distance, NodeId, Role, SensorNode};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BfsTree {
    pub root: NodeId,
    /// Parent of every node except the root.
    pub parent_of: BTreeMap<NodeId, NodeId>,
    pub depth_of: BTreeMap<NodeId, u32>,
    pub subtree_size_of: BTreeMap<NodeId, usize>,
    /// Children in ascending id order.
    pub children_of: BTreeMap<NodeId, Vec<NodeId>>,
}

impl BfsTree {
    /// Builds a tree from explicit (node, parent) pairs. The root must not
    /// appear as a child. Used by tests and random-tree studies.
    pub fn from_parents(root: NodeId, pairs: &[(NodeId, NodeId)]) -> Self {
        let parent_of: BTreeMap<NodeId, NodeId> = pairs.iter().copied().collect();
        let mut children_of: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        children_of.entry(root).or_default();
        for (&child, &parent) in &parent_of {
            children_of.entry(parent).or_default();
            children_of.entry(child).or_default();
        }
        for (&child, &parent) in &parent_of {
            children_of.get_mut(&parent).unwrap().push(child);
        }
        for kids in children_of.values_mut() {
            kids.sort_unstable();
        }
        let mut depth_of = BTreeMap::new();
        let mut order = vec![root];
        depth_of.insert(root, 0);
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            i += 1;
            let d = depth_of[&u];
            for &c in &children_of[&u] {
                depth_of.insert(c, d + 1);
                order.push(c);
            }
        }
        let mut subtree_size_of: BTreeMap<NodeId, usize> = order.iter().map(|&u| (u, 1)).collect();
        for &u in order.iter().rev() {
            if let Some(&p) = parent_of.get(&u) {
                let s = subtree_size_of[&u];
                *subtree_size_of.get_mut(&p).unwrap() += s;
            }
        }
        Self {
            root,
            parent_of,
            depth_of,
            subtree_size_of,
            children_of,
        }
    }

    pub fn len(&self) -> usize {
        self.depth_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth_of.is_empty()
    }
}

/// Level-synchronous BFS over the graph with an edge wherever two nodes are
/// within `comm_range`. Among equal-depth candidate parents the lowest node
/// id wins, which makes the tree deterministic.
pub fn tree_discovery(nodes: &[SensorNode], initiator: NodeId, comm_range: f64) -> Result<BfsTree> {
    if initiator >= nodes.len() {
        return Err(SimError::Config(format!(
            "initiator {initiator} does not exist (n = {})",
            nodes.len()
        )));
    }
    let n = nodes.len();
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut depth: Vec<Option<u32>> = vec![None; n];
    depth[initiator] = Some(0);
    let mut frontier = vec![initiator];
    let mut level = 0u32;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for v in 0..n {
                if depth[v].is_some() {
                    continue;
                }
                if euclidean_distance(nodes[u].pos, nodes[v].pos) <= comm_range {
                    depth[v] = Some(level + 1);
                    parent[v] = Some(u);
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
        level += 1;
    }
    if let Some(unreached) = (0..n).find(|&v| depth[v].is_none()) {
        return Err(SimError::Disconnected { node: unreached });
    }
    let pairs: Vec<(NodeId, NodeId)> = (0..n).filter_map(|v| parent[v].map(|p| (v, p))).collect();
    Ok(BfsTree::from_parents(initiator, &pairs))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub head: NodeId,
    /// Sorted ascending; includes the head.
    pub members: Vec<NodeId>,
    /// 1 at the root clusters under the base station, growing downward.
    pub level: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterHierarchy {
    pub k: usize,
    pub clusters: Vec<Cluster>,
    /// Each cluster-head's next hop: a higher-level head or the base station.
    pub uplink: BTreeMap<NodeId, NodeId>,
    pub bs: NodeId,
}

impl ClusterHierarchy {
    pub fn heads(&self) -> BTreeSet<NodeId> {
        self.clusters.iter().map(|c| c.head).collect()
    }
}

#[derive(Debug, Clone)]
struct ProtoCluster {
    head: NodeId,
    members: Vec<NodeId>,
}

/// One bottom-up pass over the tree rooted at `root`. Returns the clusters
/// formed plus the unclustered leftover around the root (fewer than `k`
/// nodes, possibly empty).
fn phase_pass(
    root: NodeId,
    children: &BTreeMap<NodeId, Vec<NodeId>>,
    k: usize,
) -> (Vec<ProtoCluster>, Vec<NodeId>) {
    let mut post = Vec::with_capacity(children.len());
    let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
    while let Some(&mut (u, ref mut idx)) = stack.last_mut() {
        let kids = &children[&u];
        if *idx < kids.len() {
            let c = kids[*idx];
            *idx += 1;
            stack.push((c, 0));
        } else {
            post.push(u);
            stack.pop();
        }
    }

    let mut clusters = Vec::new();
    let mut pending: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &u in &post {
        // Child subtrees still pending, in ascending child id order.
        let mut parts: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
        for &c in &children[&u] {
            if let Some(p) = pending.remove(&c) {
                parts.push((c, p));
            }
        }
        let total = 1 + parts.iter().map(|(_, p)| p.len()).sum::<usize>();
        if total < k {
            let mut merged = vec![u];
            for (_, p) in parts {
                merged.extend(p);
            }
            pending.insert(u, merged);
            continue;
        }
        if total < 2 * k {
            // Single cluster for the whole pending subtree, headed here.
            let mut members = vec![u];
            for (_, p) in parts {
                members.extend(p);
            }
            members.sort_unstable();
            clusters.push(ProtoCluster { head: u, members });
        } else {
            // Pack child subtrees into [k, 2k) groups; the first (lowest id)
            // child root in a group is its closest member and becomes head.
            let mut group: Vec<NodeId> = Vec::new();
            let mut group_head: Option<NodeId> = None;
            for (c, p) in parts {
                if group_head.is_none() {
                    group_head = Some(c);
                }
                group.extend(p);
                if group.len() >= k {
                    group.sort_unstable();
                    clusters.push(ProtoCluster {
                        head: group_head.unwrap(),
                        members: group,
                    });
                    group = Vec::new();
                    group_head = None;
                }
            }
            // Remainder: whatever is left plus the packing node itself.
            group.push(u);
            group.sort_unstable();
            clusters.push(ProtoCluster {
                head: u,
                members: group,
            });
        }
    }
    let leftover = pending.remove(&root).unwrap_or_default();
    debug_assert!(pending.is_empty());
    (clusters, leftover)
}

/// Builds the multi-level hierarchy. The tree root is the base station; it
/// joins no cluster. Formation runs independently on each subtree hanging
/// off the root, so a base station with several direct neighbors yields one
/// root cluster per component, all uplinked to the base station.
pub fn cluster_formation(tree: &BfsTree, k: usize) -> ClusterHierarchy {
    assert!(k >= 1, "size parameter k must be >= 1");
    let bs = tree.root;
    let mut all: Vec<Vec<Vec<ProtoCluster>>> = Vec::new();

    for &comp_root in &tree.children_of[&bs] {
        // Collect the component subtree.
        let mut comp_nodes: BTreeSet<NodeId> = BTreeSet::new();
        let mut stack = vec![comp_root];
        while let Some(u) = stack.pop() {
            comp_nodes.insert(u);
            stack.extend(tree.children_of[&u].iter().copied());
        }
        let mut cur_parent: BTreeMap<NodeId, NodeId> = comp_nodes
            .iter()
            .filter(|&&v| v != comp_root)
            .map(|&v| (v, tree.parent_of[&v]))
            .collect();
        let mut cur_children: BTreeMap<NodeId, Vec<NodeId>> =
            comp_nodes.iter().map(|&v| (v, Vec::new())).collect();
        for (&v, &p) in &cur_parent {
            cur_children.get_mut(&p).unwrap().push(v);
        }
        // Already ascending because cur_parent iterates in id order.

        let mut phases: Vec<Vec<ProtoCluster>> = Vec::new();
        loop {
            if comp_nodes.len() < 2 * k {
                phases.push(vec![ProtoCluster {
                    head: comp_root,
                    members: comp_nodes.iter().copied().collect(),
                }]);
                break;
            }
            let (clusters, leftover) = phase_pass(comp_root, &cur_children, k);
            let next: BTreeSet<NodeId> = clusters
                .iter()
                .map(|c| c.head)
                .chain(leftover.iter().copied())
                .collect();
            phases.push(clusters);
            if next.len() == comp_nodes.len() {
                // No progress is possible (k = 1 makes every node a head);
                // close out with a root cluster over the whole level.
                phases.push(vec![ProtoCluster {
                    head: comp_root,
                    members: next.iter().copied().collect(),
                }]);
                break;
            }
            let mut new_parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
            for &v in &next {
                if v == comp_root {
                    continue;
                }
                let mut a = cur_parent[&v];
                while !next.contains(&a) {
                    a = cur_parent[&a];
                }
                new_parent.insert(v, a);
            }
            let mut new_children: BTreeMap<NodeId, Vec<NodeId>> =
                next.iter().map(|&v| (v, Vec::new())).collect();
            for (&v, &p) in &new_parent {
                new_children.get_mut(&p).unwrap().push(v);
            }
            cur_parent = new_parent;
            cur_children = new_children;
            comp_nodes = next;
        }
        all.push(phases);
    }

    // Levels count up from the root cluster of each component.
    let mut clusters: Vec<Cluster> = Vec::new();
    for phases in all {
        let depth = phases.len() as u32;
        for (i, phase) in phases.into_iter().enumerate() {
            let level = depth - i as u32;
            for proto in phase {
                clusters.push(Cluster {
                    id: 0,
                    head: proto.head,
                    members: proto.members,
                    level,
                });
            }
        }
    }
    clusters.sort_by_key(|c| (c.level, c.head));
    for (i, c) in clusters.iter_mut().enumerate() {
        c.id = i;
    }

    // A head's uplink is the head of the one cluster it belongs to without
    // heading it; heads of root clusters report to the base station.
    let mut uplink: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let heads: BTreeSet<NodeId> = clusters.iter().map(|c| c.head).collect();
    for &h in &heads {
        let mut up = bs;
        for c in &clusters {
            if c.head != h && c.members.binary_search(&h).is_ok() {
                up = c.head;
                break;
            }
        }
        uplink.insert(h, up);
    }

    ClusterHierarchy {
        k,
        clusters,
        uplink,
        bs,
    }
}

/// Installs roles and parent/children links from the hierarchy: heads become
/// CH with their uplink as parent, everyone else becomes NCH parented to its
/// cluster head; the base station keeps its role and no parent.
pub fn assign_roles(h: &ClusterHierarchy, nodes: &mut [SensorNode]) {
    let heads = h.heads();
    for node in nodes.iter_mut() {
        node.children.clear();
        if node.id == h.bs {
            node.role = Role::Bs;
            node.parent = None;
        } else if heads.contains(&node.id) {
            node.role = Role::Ch;
            node.parent = Some(h.uplink[&node.id]);
        } else {
            node.role = Role::Nch;
            // The unique cluster this node belongs to.
            let home = h
                .clusters
                .iter()
                .find(|c| c.members.binary_search(&node.id).is_ok())
                .expect("every non-BS node belongs to a cluster");
            node.parent = Some(home.head);
        }
    }
    let links: Vec<(NodeId, NodeId)> = nodes
        .iter()
        .filter_map(|n| n.parent.map(|p| (p, n.id)))
        .collect();
    for (p, c) in links {
        nodes[p].children.push(c);
    }
    for node in nodes.iter_mut() {
        node.children.sort_unstable();
    }
}
