use std::rc::Rc;

use crate::graph::Graph;
use crate::matrix::Matrix;

/// Several graphs flattened into one disjoint union for message passing.
///
/// Every undirected edge becomes two messages, emitted in canonical edge order
/// so that the storage order of a graph's edge list never changes results.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub num_graphs: usize,
    pub num_nodes: usize,
    pub node_features: Matrix,
    pub msg_src: Rc<[usize]>,
    pub msg_dst: Rc<[usize]>,
    /// One row per message, copied from the edge's feature row.
    pub msg_edge_features: Option<Matrix>,
    pub node_graph: Rc<[usize]>,
    pub graph_sizes: Vec<usize>,
}

impl GraphBatch {
    pub fn new(graphs: &[&Graph]) -> Self {
        let num_nodes: usize = graphs.iter().map(|g| g.num_nodes).sum();
        let num_msgs: usize = graphs.iter().map(|g| 2 * g.num_edges()).sum();
        let node_dim = graphs.first().map_or(0, |g| g.node_feature_dim());
        let edge_dim = graphs.first().and_then(|g| g.edge_feature_dim());

        let mut src = Vec::with_capacity(num_msgs);
        let mut dst = Vec::with_capacity(num_msgs);
        let mut edge_data = edge_dim.map(|d| Vec::with_capacity(num_msgs * d));
        let mut node_graph = Vec::with_capacity(num_nodes);
        let mut offset = 0;
        for (gi, g) in graphs.iter().enumerate() {
            for e in g.canonical_edge_order() {
                let (a, b) = g.edges[e];
                let (u, v) = if a <= b { (a, b) } else { (b, a) };
                src.extend_from_slice(&[offset + u, offset + v]);
                dst.extend_from_slice(&[offset + v, offset + u]);
                if let (Some(data), Some(ef)) = (edge_data.as_mut(), g.edge_features.as_ref()) {
                    data.extend_from_slice(ef.row(e));
                    data.extend_from_slice(ef.row(e));
                }
            }
            node_graph.extend(std::iter::repeat_n(gi, g.num_nodes));
            offset += g.num_nodes;
        }

        Self {
            num_graphs: graphs.len(),
            num_nodes,
            node_features: Matrix::vstack(node_dim, graphs.iter().map(|g| &g.node_features)),
            msg_src: src.into(),
            msg_dst: dst.into(),
            msg_edge_features: edge_data
                .zip(edge_dim)
                .map(|(data, d)| Matrix::from_vec(num_msgs, d, data)),
            node_graph: node_graph.into(),
            graph_sizes: graphs.iter().map(|g| g.num_nodes).collect(),
        }
    }
}
