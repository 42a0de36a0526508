//! Rectangular lattice graph with coprime-offset ("sector") connectivity and
//! start/goal terminals.

use std::collections::BTreeMap;

use thiserror::Error;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid parameter `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("bounding box admits a {nx}x{ny} lattice, at least 2x2 is required")]
    TooSmall { nx: usize, ny: usize },

    #[error("terminal ({x}, {y}) lies outside the bounding box")]
    OutsideBox { x: f64, y: f64 },

    #[error("no grid node within radius {radius} of terminal ({x}, {y})")]
    Isolated { x: f64, y: f64, radius: f64 },

    #[error("{0:?} terminal already inserted")]
    TerminalExists(TerminalRole),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Lattice spacing.
    pub h: f64,
    /// Chebyshev radius of the offset table; 3 gives the 32-heading grid.
    pub sector_order: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 8.0,
            y_min: -2.5,
            y_max: 2.5,
            h: 0.4,
            sector_order: 3,
        }
    }
}

// Absorbs rounding in span/h when the span is a multiple of h.
const LATTICE_SLACK: f64 = 1e-9;

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |field, reason: String| Err(GridError::InvalidSpec { field, reason });
        for (field, v) in [
            ("x_min", self.x_min),
            ("x_max", self.x_max),
            ("y_min", self.y_min),
            ("y_max", self.y_max),
            ("h", self.h),
        ] {
            if !v.is_finite() {
                return bad(field, format!("must be finite, got {v}"));
            }
        }
        if self.x_max <= self.x_min {
            return bad("x_max", format!("must exceed x_min ({})", self.x_min));
        }
        if self.y_max <= self.y_min {
            return bad("y_max", format!("must exceed y_min ({})", self.y_min));
        }
        if self.h <= 0.0 {
            return bad("h", format!("must be > 0, got {}", self.h));
        }
        if self.sector_order == 0 {
            return bad("sector_order", "must be >= 1".into());
        }
        let (nx, ny) = self.lattice_dims();
        if nx < 2 || ny < 2 {
            return Err(GridError::TooSmall { nx, ny });
        }
        Ok(())
    }

    /// Number of lattice columns and rows that fit in the box.
    pub fn lattice_dims(&self) -> (usize, usize) {
        let count = |span: f64| (span / self.h + LATTICE_SLACK).floor() as usize + 1;
        (count(self.x_max - self.x_min), count(self.y_max - self.y_min))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol = LATTICE_SLACK * self.h;
        x >= self.x_min - tol && x <= self.x_max + tol && y >= self.y_min - tol && y <= self.y_max + tol
    }

    pub fn connection_radius(&self) -> f64 {
        self.sector_order as f64 * self.h
    }
}

/// Lattice offsets `(di, dj)` with Chebyshev norm at most `order` and
/// `gcd(|di|, |dj|) = 1`, ordered lexicographically.
pub fn sector_offsets(order: usize) -> Vec<(i64, i64)> {
    let s = order as i64;
    let mut out = Vec::new();
    for di in -s..=s {
        for dj in -s..=s {
            if (di, dj) != (0, 0) && gcd(di.unsigned_abs(), dj.unsigned_abs()) == 1 {
                out.push((di, dj));
            }
        }
    }
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminalRole {
    Start,
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Lattice { i: usize, j: usize },
    Terminal(TerminalRole),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    /// Unit heading from `from` to `to`.
    pub direction: [f64; 2],
}

/// Straight track a vehicle follows along one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub origin: [f64; 2],
    pub direction: [f64; 2],
    pub length: f64,
}

impl Segment {
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        [
            self.origin[0] + s * self.direction[0],
            self.origin[1] + s * self.direction[1],
        ]
    }

    pub fn end(&self) -> [f64; 2] {
        self.point_at(self.length)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    spec: GridSpec,
    nx: usize,
    ny: usize,
    nodes: Vec<Node>,
    adjacency: Vec<Vec<Edge>>,
    start: Option<NodeId>,
    goal: Option<NodeId>,
}

pub fn build_grid(spec: &GridSpec) -> Result<Graph, GridError> {
    spec.validate()?;
    let (nx, ny) = spec.lattice_dims();
    let mut nodes = Vec::with_capacity(nx * ny + 2);
    for j in 0..ny {
        for i in 0..nx {
            nodes.push(Node {
                id: j * nx + i,
                x: spec.x_min + i as f64 * spec.h,
                y: spec.y_min + j as f64 * spec.h,
                kind: NodeKind::Lattice { i, j },
            });
        }
    }

    let offsets: Vec<_> = sector_offsets(spec.sector_order)
        .into_iter()
        .map(|(di, dj)| {
            let norm = ((di * di + dj * dj) as f64).sqrt();
            (di, dj, spec.h * norm, [di as f64 / norm, dj as f64 / norm])
        })
        .collect();

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for j in 0..ny {
        for i in 0..nx {
            let from = j * nx + i;
            for &(di, dj, length, direction) in &offsets {
                let ti = i as i64 + di;
                let tj = j as i64 + dj;
                if ti < 0 || tj < 0 || ti >= nx as i64 || tj >= ny as i64 {
                    continue;
                }
                adjacency[from].push(Edge {
                    from,
                    to: tj as usize * nx + ti as usize,
                    length,
                    direction,
                });
            }
        }
    }

    Ok(Graph {
        spec: *spec,
        nx,
        ny,
        nodes,
        adjacency,
        start: None,
        goal: None,
    })
}

impl Graph {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn lattice_dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Directed edge count; every undirected link appears twice.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn edges_from(&self, id: NodeId) -> &[Edge] {
        &self.adjacency[id]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency[id].len()
    }

    pub fn start(&self) -> Option<NodeId> {
        self.start
    }

    pub fn goal(&self) -> Option<NodeId> {
        self.goal
    }

    pub fn lattice_id(&self, i: usize, j: usize) -> Option<NodeId> {
        (i < self.nx && j < self.ny).then(|| j * self.nx + i)
    }

    pub fn position(&self, id: NodeId) -> [f64; 2] {
        let n = &self.nodes[id];
        [n.x, n.y]
    }

    pub fn segment(&self, edge: &Edge) -> Segment {
        Segment {
            origin: self.position(edge.from),
            direction: edge.direction,
            length: edge.length,
        }
    }

    /// Adds a start or goal node at `(x, y)`, linked both ways to every
    /// lattice node within Euclidean distance `sector_order·h`. A lattice
    /// node coincident with the terminal is skipped.
    pub fn insert_terminal(&mut self, x: f64, y: f64, role: TerminalRole) -> Result<NodeId, GridError> {
        if !x.is_finite() || !y.is_finite() || !self.spec.contains(x, y) {
            return Err(GridError::OutsideBox { x, y });
        }
        let slot = match role {
            TerminalRole::Start => self.start,
            TerminalRole::Goal => self.goal,
        };
        if slot.is_some() {
            return Err(GridError::TerminalExists(role));
        }

        let radius = self.spec.connection_radius();
        let reach = radius * (1.0 + LATTICE_SLACK);
        let id = self.nodes.len();
        let mut links = Vec::new();
        for node in self.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Lattice { .. })) {
            let dx = node.x - x;
            let dy = node.y - y;
            let length = dx.hypot(dy);
            if length == 0.0 || length > reach {
                continue;
            }
            links.push((node.id, length, [dx / length, dy / length]));
        }
        if links.is_empty() {
            return Err(GridError::Isolated { x, y, radius });
        }

        self.nodes.push(Node {
            id,
            x,
            y,
            kind: NodeKind::Terminal(role),
        });
        self.adjacency.push(Vec::with_capacity(links.len()));
        for (other, length, direction) in links {
            self.adjacency[id].push(Edge {
                from: id,
                to: other,
                length,
                direction,
            });
            self.adjacency[other].push(Edge {
                from: other,
                to: id,
                length,
                direction: [-direction[0], -direction[1]],
            });
        }
        match role {
            TerminalRole::Start => self.start = Some(id),
            TerminalRole::Goal => self.goal = Some(id),
        }
        Ok(id)
    }

    pub fn stats(&self) -> GraphStats {
        let mut degree_histogram = BTreeMap::new();
        for id in 0..self.nodes.len() {
            *degree_histogram.entry(self.degree(id)).or_insert(0) += 1;
        }
        GraphStats {
            nodes: self.node_count(),
            directed_edges: self.edge_count(),
            degree_histogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    pub nodes: usize,
    pub directed_edges: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
}

impl GraphStats {
    /// `degree,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,count\n");
        for (degree, count) in &self.degree_histogram {
            out.push_str(&format!("{degree},{count}\n"));
        }
        out
    }
}
