//! Unstructured polygonal mesh: cells, faces, boundary patches, geometry.
//!
//! Faces store a unit normal pointing outward from their *left* cell; the
//! right cell sees the negated normal. For every closed cell the face vectors
//! satisfy Σ ℓ_f n_f = 0, which the flux divergence and the Green-Gauss bed
//! gradient both rely on.

mod format;
mod generate;

pub use format::{load_mesh, parse_mesh, write_mesh};
pub use generate::{channel_mesh, strip_mesh, Block, EndCondition};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cell {cell}: non-positive area ({area:.3e}); vertices must be counter-clockwise")]
    NegativeArea { cell: usize, area: f64 },
    #[error("cell {cell}: polygon is self-intersecting")]
    SelfIntersecting { cell: usize },
    #[error("topology: {0}")]
    Topology(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Bed elevation (m).
    pub z_b: f64,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub id: usize,
    /// Vertex ids in counter-clockwise order.
    pub node_ids: Vec<usize>,
    pub centroid: [f64; 2],
    pub area: f64,
    pub manning_zone: usize,
    /// (face id, orientation): +1 when this cell is the face's left cell.
    pub faces: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub id: usize,
    pub nodes: [usize; 2],
    pub left_cell: usize,
    /// `None` for boundary faces.
    pub right_cell: Option<usize>,
    /// Unit normal, outward from the left cell.
    pub normal: [f64; 2],
    pub length: f64,
    pub midpoint: [f64; 2],
    /// Bed elevation at the face: mean of the two node elevations.
    pub z_b: f64,
    /// Still-water depth at the face, max(0, reference_ws - z_b).
    pub h_s: f64,
    /// Boundary-patch index for boundary faces.
    pub patch: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.right_cell.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    Wall,
    InletDischarge,
    ExitWse,
}

impl PatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchKind::Wall => "wall",
            PatchKind::InletDischarge => "inlet_discharge",
            PatchKind::ExitWse => "exit_wse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wall" => Some(PatchKind::Wall),
            "inlet_discharge" => Some(PatchKind::InletDischarge),
            "exit_wse" => Some(PatchKind::ExitWse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryPatch {
    pub name: String,
    pub kind: PatchKind,
    /// Total discharge Q (m³/s, positive into the domain) for inlets,
    /// water-surface elevation w_s (m) for exits; unused for walls.
    pub value: f64,
    pub face_ids: Vec<usize>,
    /// Sum of member face lengths (m).
    pub total_length: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    pub patches: Vec<BoundaryPatch>,
    /// Reference water-surface elevation defining still-water depths (m).
    pub reference_ws: f64,
}

/// Cell description used while assembling a mesh.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub node_ids: Vec<usize>,
    pub manning_zone: usize,
}

/// Boundary patch description: member edges as (cell id, local edge index).
#[derive(Debug, Clone)]
pub struct PatchSpec {
    pub name: String,
    pub kind: PatchKind,
    pub value: f64,
    pub edges: Vec<(usize, usize)>,
}

impl Mesh {
    /// Connects cells through shared edges and derives all geometry.
    ///
    /// Fails on non-CCW or self-intersecting cells, edges owned by more than
    /// two cells, and boundary faces not covered by exactly one patch.
    pub fn build(
        nodes: Vec<Node>,
        cell_specs: Vec<CellSpec>,
        patch_specs: Vec<PatchSpec>,
        reference_ws: f64,
    ) -> Result<Mesh, MeshError> {
        for n in &nodes {
            if !(n.x.is_finite() && n.y.is_finite() && n.z_b.is_finite()) {
                return Err(MeshError::InvalidArgument(format!(
                    "node {} has non-finite coordinates",
                    n.id
                )));
            }
        }

        let mut cells = Vec::with_capacity(cell_specs.len());
        for (id, spec) in cell_specs.iter().enumerate() {
            if spec.node_ids.len() < 3 {
                return Err(MeshError::InvalidArgument(format!(
                    "cell {id} has fewer than 3 vertices"
                )));
            }
            let poly: Vec<[f64; 2]> = spec
                .node_ids
                .iter()
                .map(|&v| {
                    let n = &nodes[v];
                    [n.x, n.y]
                })
                .collect();
            let area = polygon_area(&poly);
            if area <= 0.0 {
                return Err(MeshError::NegativeArea { cell: id, area });
            }
            if self_intersects(&poly) {
                return Err(MeshError::SelfIntersecting { cell: id });
            }
            cells.push(Cell {
                id,
                node_ids: spec.node_ids.clone(),
                centroid: polygon_centroid(&poly, area),
                area,
                manning_zone: spec.manning_zone,
                faces: Vec::new(),
            });
        }

        // Match cell edges into faces. First traversal owns the face.
        let mut edge_map: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut faces: Vec<Face> = Vec::new();
        // (cell, local edge) -> face id, for patch resolution.
        let mut edge_face: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        #[allow(clippy::needless_range_loop)] // `cells` is mutated inside the loop
        for cell_id in 0..cells.len() {
            let node_ids = cells[cell_id].node_ids.clone();
            let k = node_ids.len();
            for e in 0..k {
                let a = node_ids[e];
                let b = node_ids[(e + 1) % k];
                let key = (a.min(b), a.max(b));
                match edge_map.get(&key) {
                    None => {
                        let (na, nb) = (&nodes[a], &nodes[b]);
                        let dx = nb.x - na.x;
                        let dy = nb.y - na.y;
                        let length = (dx * dx + dy * dy).sqrt();
                        if length <= 0.0 {
                            return Err(MeshError::Topology(format!(
                                "cell {cell_id}: zero-length edge ({a}, {b})"
                            )));
                        }
                        let z_b = 0.5 * (na.z_b + nb.z_b);
                        let id = faces.len();
                        faces.push(Face {
                            id,
                            nodes: [a, b],
                            left_cell: cell_id,
                            right_cell: None,
                            // CCW traversal puts the outward normal at (dy, -dx).
                            normal: [dy / length, -dx / length],
                            length,
                            midpoint: [0.5 * (na.x + nb.x), 0.5 * (na.y + nb.y)],
                            z_b,
                            h_s: (reference_ws - z_b).max(0.0),
                            patch: None,
                        });
                        edge_map.insert(key, id);
                        edge_face.insert((cell_id, e), id);
                        cells[cell_id].faces.push((id, 1.0));
                    }
                    Some(&fid) => {
                        let face = &mut faces[fid];
                        if face.right_cell.is_some() {
                            return Err(MeshError::Topology(format!(
                                "edge ({}, {}) shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        if face.nodes == [a, b] {
                            return Err(MeshError::Topology(format!(
                                "edge ({a}, {b}) traversed twice in the same direction"
                            )));
                        }
                        face.right_cell = Some(cell_id);
                        edge_face.insert((cell_id, e), fid);
                        cells[cell_id].faces.push((fid, -1.0));
                    }
                }
            }
        }

        let mut patches = Vec::with_capacity(patch_specs.len());
        for (pid, spec) in patch_specs.into_iter().enumerate() {
            let mut face_ids = Vec::with_capacity(spec.edges.len());
            let mut total_length = 0.0;
            for (cell, edge) in &spec.edges {
                let fid = *edge_face.get(&(*cell, *edge)).ok_or_else(|| {
                    MeshError::Topology(format!(
                        "patch '{}': cell {cell} has no edge {edge}",
                        spec.name
                    ))
                })?;
                let face = &mut faces[fid];
                if !face.is_boundary() {
                    return Err(MeshError::Topology(format!(
                        "patch '{}': face {fid} is interior",
                        spec.name
                    )));
                }
                if face.patch.is_some() {
                    return Err(MeshError::Topology(format!(
                        "patch '{}': face {fid} already assigned",
                        spec.name
                    )));
                }
                face.patch = Some(pid);
                face_ids.push(fid);
                total_length += face.length;
            }
            patches.push(BoundaryPatch {
                name: spec.name,
                kind: spec.kind,
                value: spec.value,
                face_ids,
                total_length,
            });
        }

        for face in &faces {
            if face.is_boundary() && face.patch.is_none() {
                return Err(MeshError::Topology(format!(
                    "boundary face {} (cells {:?}) not covered by any patch",
                    face.id, face.left_cell
                )));
            }
        }

        Ok(Mesh { nodes, cells, faces, patches, reference_ws })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn interior_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| !f.is_boundary())
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter().filter(|f| f.is_boundary())
    }

    /// Index of the cell containing (x, y), by point-in-polygon scan.
    pub fn locate_cell(&self, x: f64, y: f64) -> Option<usize> {
        self.cells.iter().position(|c| {
            let poly: Vec<[f64; 2]> = c
                .node_ids
                .iter()
                .map(|&v| [self.nodes[v].x, self.nodes[v].y])
                .collect();
            point_in_polygon(x, y, &poly)
        })
    }
}

/// Per-cell closure defects and global geometry health.
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// max over cells of |Σ ℓ_f n_f| (outward-oriented).
    pub max_closure_defect: f64,
    pub worst_closure_cell: usize,
    pub min_area: f64,
    /// max over faces of | ‖n‖ - 1 |.
    pub max_normal_defect: f64,
    /// Largest area mismatch between stored and recomputed cell area.
    pub max_area_defect: f64,
    pub pass: bool,
}

pub const CLOSURE_TOL: f64 = 1e-12;
pub const NORMAL_TOL: f64 = 1e-14;

/// Recomputes geometric invariants from node positions. Report-only.
pub fn geometry_audit(mesh: &Mesh) -> AuditReport {
    let mut max_closure = 0.0_f64;
    let mut worst_cell = 0;
    let mut max_area_defect = 0.0_f64;
    let mut min_area = f64::INFINITY;
    for cell in &mesh.cells {
        let mut sx = 0.0;
        let mut sy = 0.0;
        for &(fid, sign) in &cell.faces {
            let f = &mesh.faces[fid];
            sx += sign * f.length * f.normal[0];
            sy += sign * f.length * f.normal[1];
        }
        let defect = (sx * sx + sy * sy).sqrt();
        if defect > max_closure {
            max_closure = defect;
            worst_cell = cell.id;
        }
        min_area = min_area.min(cell.area);
        let poly: Vec<[f64; 2]> = cell
            .node_ids
            .iter()
            .map(|&v| [mesh.nodes[v].x, mesh.nodes[v].y])
            .collect();
        max_area_defect = max_area_defect.max((polygon_area(&poly) - cell.area).abs());
    }
    let max_normal_defect = mesh
        .faces
        .iter()
        .map(|f| ((f.normal[0].powi(2) + f.normal[1].powi(2)).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    AuditReport {
        max_closure_defect: max_closure,
        worst_closure_cell: worst_cell,
        min_area,
        max_normal_defect,
        max_area_defect,
        pass: max_closure <= CLOSURE_TOL && min_area > 0.0 && max_normal_defect <= NORMAL_TOL,
    }
}

/// Signed polygon area (positive for CCW).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

fn polygon_centroid(poly: &[[f64; 2]], area: f64) -> [f64; 2] {
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        let cross = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    [cx / (6.0 * area), cy / (6.0 * area)]
}

fn self_intersects(poly: &[[f64; 2]]) -> bool {
    let k = poly.len();
    for i in 0..k {
        for j in (i + 1)..k {
            // Skip adjacent edges (shared endpoint).
            if j == i || (j + 1) % k == i || (i + 1) % k == j {
                continue;
            }
            let (a, b) = (poly[i], poly[(i + 1) % k]);
            let (c, d) = (poly[j], poly[(j + 1) % k]);
            if segments_properly_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn segments_properly_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    };
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn point_in_polygon(x: f64, y: f64, poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let k = poly.len();
    for i in 0..k {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % k];
        if (y0 > y) != (y1 > y) {
            let xi = x0 + (y - y0) / (y1 - y0) * (x1 - x0);
            if x < xi {
                inside = !inside;
            }
        }
    }
    inside
}
