//! Local mesh refinement by longest-edge bisection with conformity closure.
//!
//! Marked triangles are bisected at their longest edge; when the neighbour
//! across that edge does not share it as its own longest edge, the neighbour
//! is refined first (Rivara's recursion), which terminates because the
//! longest-edge ordering strictly increases along the chain. New boundary
//! nodes are snapped back onto the unit circle.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
// Resolves f64 math in no_std builds; builds that link std use the
// inherent methods instead and leave this import idle.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::field::Field;
use crate::geom;
use crate::Result;

use super::Mesh;

/// How a node of the refined mesh derives from the previous mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum TransferEntry {
    /// Node existed before refinement (same index).
    Old(usize),
    /// New node: P1 weights with respect to a triangle of the old mesh.
    /// For boundary midpoints snapped onto the circle the weights extend
    /// the triangle's affine plane, so affine fields transfer exactly.
    Bary { tri: [usize; 3], weights: [f64; 3] },
}

/// Node interpolation map from an old mesh onto its refinement.
#[derive(Debug, Clone)]
pub struct TransferMap {
    entries: Vec<TransferEntry>,
    old_nodes: usize,
}

impl TransferMap {
    pub fn entries(&self) -> &[TransferEntry] {
        &self.entries
    }

    /// Carry nodal values from the old mesh onto the refined mesh.
    pub fn apply(&self, field: &Field, target: &Arc<Mesh>) -> Result<Field> {
        if field.len() != self.old_nodes {
            return Err(Error::MeshDataMismatch(format!(
                "transfer map expects {} source nodes, field has {}",
                self.old_nodes,
                field.len()
            )));
        }
        let old = field.values();
        let values = self
            .entries
            .iter()
            .map(|e| match e {
                TransferEntry::Old(i) => old[*i],
                TransferEntry::Bary { tri, weights } => {
                    weights[0] * old[tri[0]] + weights[1] * old[tri[1]] + weights[2] * old[tri[2]]
                }
            })
            .collect();
        Field::new(target.clone(), values)
    }
}

/// Bisect the triangles ranking in the top `fraction` of `indicator`
/// (ties broken by ascending triangle index), restoring conformity by
/// longest-edge closure. Returns the refined mesh and the node map.
pub fn refine_where(
    mesh: &Mesh,
    indicator: &[f64],
    fraction: f64,
) -> Result<(Mesh, TransferMap)> {
    if indicator.len() != mesh.num_triangles() {
        return Err(Error::MeshDataMismatch(format!(
            "indicator has {} entries for {} triangles",
            indicator.len(),
            mesh.num_triangles()
        )));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "refinement fraction must lie in (0, 1], got {fraction}"
        )));
    }
    if indicator.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter(
            "refinement indicator must be finite and nonnegative".into(),
        ));
    }

    let ntri = mesh.num_triangles();
    let count = ((fraction * ntri as f64).ceil() as usize).clamp(1, ntri);
    let mut order: Vec<usize> = (0..ntri).collect();
    order.sort_by(|&a, &b| indicator[b].total_cmp(&indicator[a]).then(a.cmp(&b)));
    order.truncate(count);

    let mut state = Bisector::new(mesh);
    // Stack, processed from the back; push in reverse so the strongest
    // indicator is handled first.
    let mut work: Vec<usize> = order.into_iter().rev().collect();
    while let Some(&t) = work.last() {
        if !state.alive[t] {
            work.pop();
            continue;
        }
        let edge = state.longest_edge(t);
        let partner = state.partner(edge, t);
        if let Some(n) = partner {
            if state.longest_edge(n) != edge {
                work.push(n);
                continue;
            }
        }
        work.pop();
        state.split(edge, t, partner);
    }

    let (nodes, triangles, transfer) = state.finish();
    let refined = Mesh::new(nodes, triangles)?;
    Ok((refined, transfer))
}

struct Bisector<'a> {
    mesh: &'a Mesh,
    nodes: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    ancestor: Vec<usize>,
    edges: BTreeMap<(usize, usize), Vec<usize>>,
    transfer: Vec<TransferEntry>,
}

impl<'a> Bisector<'a> {
    fn new(mesh: &'a Mesh) -> Self {
        let tris = mesh.triangles().to_vec();
        let mut edges: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                edges.entry(key).or_default().push(t);
            }
        }
        let transfer = (0..mesh.num_nodes()).map(TransferEntry::Old).collect();
        Self {
            mesh,
            nodes: mesh.nodes().to_vec(),
            alive: vec![true; tris.len()],
            ancestor: (0..tris.len()).collect(),
            tris,
            edges,
            transfer,
        }
    }

    /// Longest edge of a triangle under the total order
    /// (squared length, min index, max index); ties are resolved identically
    /// from both sides of a shared edge.
    fn longest_edge(&self, t: usize) -> (usize, usize) {
        let tri = self.tris[t];
        let mut best: Option<((usize, usize), f64)> = None;
        for k in 0..3 {
            let key = edge_key(tri[k], tri[(k + 1) % 3]);
            let d = geom::dist(self.nodes[key.0], self.nodes[key.1]);
            let len2 = d * d;
            let better = match best {
                None => true,
                Some((bk, bl)) => len2 > bl || (len2 == bl && key > bk),
            };
            if better {
                best = Some((key, len2));
            }
        }
        best.expect("triangle has three edges").0
    }

    fn partner(&self, edge: (usize, usize), t: usize) -> Option<usize> {
        self.edges
            .get(&edge)
            .and_then(|list| list.iter().copied().find(|&x| x != t))
    }

    /// Split `edge`, bisecting triangle `t` and its optional partner.
    fn split(&mut self, edge: (usize, usize), t: usize, partner: Option<usize>) {
        let (p, q) = edge;
        let mut mid = [
            0.5 * (self.nodes[p][0] + self.nodes[q][0]),
            0.5 * (self.nodes[p][1] + self.nodes[q][1]),
        ];
        if partner.is_none() {
            // Boundary edge: snap the midpoint radially onto the circle.
            let r = geom::norm(mid);
            mid = [mid[0] / r, mid[1] / r];
        }
        let mid_idx = self.nodes.len();
        self.nodes.push(mid);

        // Interpolation weights relative to the processed triangle's
        // ancestor in the original mesh.
        let old_tri = self.mesh.triangles()[self.ancestor[t]];
        let weights = geom::barycentric(
            mid,
            self.mesh.nodes()[old_tri[0]],
            self.mesh.nodes()[old_tri[1]],
            self.mesh.nodes()[old_tri[2]],
        );
        self.transfer.push(TransferEntry::Bary { tri: old_tri, weights });

        for tau in core::iter::once(t).chain(partner) {
            self.bisect(tau, edge, mid_idx);
        }
    }

    /// Replace triangle `tau` by its two halves across `edge`'s midpoint.
    fn bisect(&mut self, tau: usize, edge: (usize, usize), mid: usize) {
        let tri = self.tris[tau];
        // Rotate so the split edge is (tri[r], tri[r+1]); orientation is kept.
        let r = (0..3)
            .find(|&k| edge_key(tri[k], tri[(k + 1) % 3]) == edge)
            .expect("edge belongs to triangle");
        let (a, b, o) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);

        self.alive[tau] = false;
        for k in 0..3 {
            let key = edge_key(tri[k], tri[(k + 1) % 3]);
            let list = self.edges.get_mut(&key).expect("registered edge");
            list.retain(|&x| x != tau);
        }

        let anc = self.ancestor[tau];
        for child in [[a, mid, o], [mid, b, o]] {
            let id = self.tris.len();
            self.tris.push(child);
            self.alive.push(true);
            self.ancestor.push(anc);
            for k in 0..3 {
                let key = edge_key(child[k], child[(k + 1) % 3]);
                self.edges.entry(key).or_default().push(id);
            }
        }
    }

    fn finish(self) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, TransferMap) {
        let triangles: Vec<[usize; 3]> = self
            .tris
            .into_iter()
            .zip(self.alive)
            .filter_map(|(tri, alive)| alive.then_some(tri))
            .collect();
        let transfer = TransferMap {
            entries: self.transfer,
            old_nodes: self.mesh.num_nodes(),
        };
        (self.nodes, triangles, transfer)
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}
