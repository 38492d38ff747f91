//! Partition of the truncated lattice into resonance clusters.
//!
//! A mode is *driven* by a tuple when the tuple's monomial appears in that
//! mode's own evolution equation with nonzero symmetrized coupling. Cluster
//! equivalence merges the driven modes of each tuple; members that feed a
//! tuple without being driven anywhere (the beta-plane zonal modes) exchange
//! no energy and are attached to the cluster as catalytic modes instead of
//! being merged. Four-wave quadruples drive all four vertices, so for them
//! this reduces to plain member merging.

use super::{ResonantTuple, TupleKind};
use crate::lattice::{box_iter, WaveVector};
use std::collections::{BTreeMap, BTreeSet};

/// Union-find with union by size and path halving.
#[derive(Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> UnionFind {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            let up = self.parent[x];
            self.parent[x] = self.parent[up];
            x = up;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    /// Indices into `ClusterPartition::elements`; the modes merged by the
    /// energy-exchange equivalence.
    pub members: Vec<usize>,
    /// Catalytic modes feeding this cluster's tuples; not members, and a
    /// single zonal mode may serve several clusters.
    pub catalytic: Vec<usize>,
}

/// The induced partition over lattice vectors within the cutoff (over
/// reality classes k ~ −k when `reality_identified`).
#[derive(Debug, Clone)]
pub struct ClusterPartition {
    pub elements: Vec<WaveVector>,
    pub cluster_ids: Vec<usize>,
    pub clusters: Vec<Cluster>,
    pub reality_identified: bool,
}

impl ClusterPartition {
    pub fn index_of(&self, k: &WaveVector) -> Option<usize> {
        let key = if self.reality_identified {
            k.reality_rep()
        } else {
            *k
        };
        self.elements.binary_search(&key).ok()
    }

    pub fn cluster_of(&self, k: &WaveVector) -> Option<&Cluster> {
        self.index_of(k).map(|i| &self.clusters[self.cluster_ids[i]])
    }

    /// Members plus catalytic modes: the dimension of the invariant
    /// subsystem the cluster generates.
    pub fn subsystem_size(&self, id: usize) -> usize {
        self.clusters[id].members.len() + self.clusters[id].catalytic.len()
    }

    pub fn max_subsystem_size(&self) -> usize {
        (0..self.clusters.len())
            .map(|i| self.subsystem_size(i))
            .max()
            .unwrap_or(0)
    }

    pub fn non_singletons(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.members.len() > 1)
    }

    /// Histogram subsystem-size → number of clusters, counting only clusters
    /// with more than one member.
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for (id, c) in self.clusters.iter().enumerate() {
            if c.members.len() > 1 {
                *hist.entry(self.subsystem_size(id)).or_insert(0) += 1;
            }
        }
        hist
    }

    pub fn vector(&self, idx: usize) -> WaveVector {
        self.elements[idx]
    }
}

/// Build the partition from an enumerated tuple list. `reality` identifies
/// k with −k before partitioning (the real-field convention).
pub fn clusters(
    tuples: &[ResonantTuple],
    dim: usize,
    cutoff: i32,
    reality: bool,
) -> ClusterPartition {
    let canon = |k: &WaveVector| if reality { k.reality_rep() } else { *k };

    let mut elements: Vec<WaveVector> = if reality {
        let set: BTreeSet<WaveVector> = box_iter(dim, cutoff).map(|k| k.reality_rep()).collect();
        set.into_iter().collect()
    } else {
        box_iter(dim, cutoff).collect()
    };
    elements.sort();
    let index: BTreeMap<WaveVector, usize> =
        elements.iter().enumerate().map(|(i, k)| (*k, i)).collect();

    let active: Vec<&ResonantTuple> = tuples.iter().filter(|t| !t.sym_coupling_zero).collect();

    // Driven set: equation modes of active tuples. Four-wave quadruples are
    // slot-symmetric (every vertex is the equation mode of a sibling
    // quadruple with the same vertex set), so all their members count.
    let mut driven = vec![false; elements.len()];
    for t in &active {
        match t.kind {
            TupleKind::NlsQuadruple => {
                for k in t.members() {
                    driven[index[&canon(k)]] = true;
                }
            }
            TupleKind::ChmTriad(_) => {
                driven[index[&canon(&t.equation_mode())]] = true;
            }
        }
    }

    let mut uf = UnionFind::new(elements.len());
    for t in &active {
        let ids: Vec<usize> = t.members().map(|k| index[&canon(k)]).collect();
        let driven_ids: Vec<usize> = ids.iter().copied().filter(|&i| driven[i]).collect();
        for w in driven_ids.windows(2) {
            uf.union(w[0], w[1]);
        }
    }

    // Compact cluster ids in order of first appearance over sorted elements.
    let mut root_to_id = BTreeMap::new();
    let mut cluster_ids = vec![0usize; elements.len()];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..elements.len() {
        let root = uf.find(i);
        let id = *root_to_id.entry(root).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        cluster_ids[i] = id;
        members[id].push(i);
    }

    // Attach catalytic modes: tuple members that are not driven anywhere.
    let mut catalytic: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); members.len()];
    for t in &active {
        let ids: Vec<usize> = t.members().map(|k| index[&canon(k)]).collect();
        let home = ids
            .iter()
            .copied()
            .find(|&i| driven[i])
            .expect("active tuple drives its equation mode");
        let cid = cluster_ids[home];
        for i in ids {
            if !driven[i] {
                catalytic[cid].insert(i);
            }
        }
    }

    let clusters = members
        .into_iter()
        .zip(catalytic)
        .map(|(members, cat)| Cluster {
            members,
            catalytic: cat.into_iter().collect(),
        })
        .collect();

    ClusterPartition {
        elements,
        cluster_ids,
        clusters,
        reality_identified: reality,
    }
}
