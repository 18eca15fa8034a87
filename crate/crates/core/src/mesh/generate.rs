//! Benchmark mesh generators: thin strips and a block-in-channel layout.

use super::{CellSpec, Mesh, MeshError, Node, PatchKind, PatchSpec};

/// End treatment for generated meshes ((x = 0) / (x = L) for strips,
/// inlet/exit for channels).
#[derive(Debug, Clone, Copy)]
pub struct EndCondition {
    pub kind: PatchKind,
    /// Q (m³/s, positive inflow) for inlets, w_s (m) for exits, ignored for walls.
    pub value: f64,
}

impl EndCondition {
    pub fn wall() -> Self {
        EndCondition { kind: PatchKind::Wall, value: 0.0 }
    }

    pub fn inlet(q: f64) -> Self {
        EndCondition { kind: PatchKind::InletDischarge, value: q }
    }

    pub fn exit(ws: f64) -> Self {
        EndCondition { kind: PatchKind::ExitWse, value: ws }
    }
}

/// Axis-aligned rectangular obstruction.
#[derive(Debug, Clone, Copy)]
pub struct Block {
    pub center: [f64; 2],
    /// Extent along x (m).
    pub size_x: f64,
    /// Extent along y (m).
    pub size_y: f64,
}

impl Block {
    fn contains_closed(&self, x: f64, y: f64) -> bool {
        let eps = 1e-12;
        (x - self.center[0]).abs() <= 0.5 * self.size_x + eps
            && (y - self.center[1]).abs() <= 0.5 * self.size_y + eps
    }
}

/// Single row of `n_cells` rectangles along x with wall sides.
///
/// Node bed elevations sample `bed(x)`; patches are `left`, `right`,
/// `wall_lo` (y = 0) and `wall_hi` (y = width).
pub fn strip_mesh(
    length: f64,
    n_cells: usize,
    width: f64,
    reference_ws: f64,
    bed: impl Fn(f64) -> f64,
    left: EndCondition,
    right: EndCondition,
) -> Result<Mesh, MeshError> {
    if length <= 0.0 || width <= 0.0 {
        return Err(MeshError::InvalidArgument("strip dimensions must be positive".into()));
    }
    if n_cells == 0 {
        return Err(MeshError::InvalidArgument("strip needs at least one cell".into()));
    }
    let dx = length / n_cells as f64;
    let mut nodes = Vec::with_capacity(2 * (n_cells + 1));
    for row in 0..2 {
        for i in 0..=n_cells {
            let x = i as f64 * dx;
            nodes.push(Node {
                id: nodes.len(),
                x,
                y: row as f64 * width,
                z_b: bed(x),
            });
        }
    }
    let top = n_cells + 1;
    let cells: Vec<CellSpec> = (0..n_cells)
        .map(|i| CellSpec {
            node_ids: vec![i, i + 1, top + i + 1, top + i],
            manning_zone: 0,
        })
        .collect();
    // Local edges: 0 bottom, 1 right, 2 top, 3 left.
    let patches = vec![
        PatchSpec {
            name: "left".into(),
            kind: left.kind,
            value: left.value,
            edges: vec![(0, 3)],
        },
        PatchSpec {
            name: "right".into(),
            kind: right.kind,
            value: right.value,
            edges: vec![(n_cells - 1, 1)],
        },
        PatchSpec {
            name: "wall_lo".into(),
            kind: PatchKind::Wall,
            value: 0.0,
            edges: (0..n_cells).map(|i| (i, 0)).collect(),
        },
        PatchSpec {
            name: "wall_hi".into(),
            kind: PatchKind::Wall,
            value: 0.0,
            edges: (0..n_cells).map(|i| (i, 2)).collect(),
        },
    ];
    Mesh::build(nodes, cells, patches, reference_ws)
}

/// Rectangular channel on a structured quad grid, with an optional block
/// obstruction removed; exposed block faces become the `block` wall patch.
///
/// Patches: `inlet` (x = 0), `exit` (x = Lx), `wall_lo`, `wall_hi`, `block`.
/// Cells whose centroid falls within the closed block rectangle are removed,
/// so a grid aligned with the block edges carves it out exactly.
#[allow(clippy::too_many_arguments)]
pub fn channel_mesh(
    lx: f64,
    ly: f64,
    block: Option<Block>,
    target_size: f64,
    reference_ws: f64,
    inlet: EndCondition,
    exit: EndCondition,
    bed: impl Fn(f64, f64) -> f64,
) -> Result<Mesh, MeshError> {
    if lx <= 0.0 || ly <= 0.0 || target_size <= 0.0 {
        return Err(MeshError::InvalidArgument("channel dimensions must be positive".into()));
    }
    if let Some(b) = &block {
        let inside_x = b.center[0] - 0.5 * b.size_x > 0.0 && b.center[0] + 0.5 * b.size_x < lx;
        let inside_y = b.center[1] - 0.5 * b.size_y > 0.0 && b.center[1] + 0.5 * b.size_y < ly;
        if !(inside_x && inside_y) || b.size_x <= 0.0 || b.size_y <= 0.0 {
            return Err(MeshError::InvalidArgument(
                "block must lie strictly inside the channel".into(),
            ));
        }
        if target_size > b.size_x || target_size > b.size_y {
            return Err(MeshError::InvalidArgument(format!(
                "target_size {target_size} larger than block ({} x {})",
                b.size_x, b.size_y
            )));
        }
    }
    let nx = (lx / target_size).ceil() as usize;
    let ny = (ly / target_size).ceil() as usize;
    let dx = lx / nx as f64;
    let dy = ly / ny as f64;

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = i as f64 * dx;
            let y = j as f64 * dy;
            nodes.push(Node { id: nodes.len(), x, y, z_b: bed(x, y) });
        }
    }
    let node_at = |i: usize, j: usize| j * (nx + 1) + i;

    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let cx = (i as f64 + 0.5) * dx;
            let cy = (j as f64 + 0.5) * dy;
            if block.as_ref().is_some_and(|b| b.contains_closed(cx, cy)) {
                continue;
            }
            cells.push(CellSpec {
                node_ids: vec![
                    node_at(i, j),
                    node_at(i + 1, j),
                    node_at(i + 1, j + 1),
                    node_at(i, j + 1),
                ],
                manning_zone: 0,
            });
        }
    }
    if cells.is_empty() {
        return Err(MeshError::InvalidArgument("block removed every cell".into()));
    }

    // Patch membership from edge midpoints against the outer rectangle;
    // everything else exposed must be block perimeter.
    let mut inlet_edges = Vec::new();
    let mut exit_edges = Vec::new();
    let mut lo_edges = Vec::new();
    let mut hi_edges = Vec::new();
    let mut block_edges = Vec::new();
    {
        // Count edges over kept cells to find exposed ones.
        let mut owners: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for spec in &cells {
            for e in 0..4 {
                let a = spec.node_ids[e];
                let b = spec.node_ids[(e + 1) % 4];
                *owners.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let tol = 1e-9 * lx.max(ly);
        for (cid, spec) in cells.iter().enumerate() {
            for e in 0..4 {
                let a = spec.node_ids[e];
                let b = spec.node_ids[(e + 1) % 4];
                if owners[&(a.min(b), a.max(b))] != 1 {
                    continue;
                }
                let mx = 0.5 * (nodes[a].x + nodes[b].x);
                let my = 0.5 * (nodes[a].y + nodes[b].y);
                if mx.abs() < tol {
                    inlet_edges.push((cid, e));
                } else if (mx - lx).abs() < tol {
                    exit_edges.push((cid, e));
                } else if my.abs() < tol {
                    lo_edges.push((cid, e));
                } else if (my - ly).abs() < tol {
                    hi_edges.push((cid, e));
                } else {
                    block_edges.push((cid, e));
                }
            }
        }
    }

    let mut patches = vec![
        PatchSpec { name: "inlet".into(), kind: inlet.kind, value: inlet.value, edges: inlet_edges },
        PatchSpec { name: "exit".into(), kind: exit.kind, value: exit.value, edges: exit_edges },
        PatchSpec { name: "wall_lo".into(), kind: PatchKind::Wall, value: 0.0, edges: lo_edges },
        PatchSpec { name: "wall_hi".into(), kind: PatchKind::Wall, value: 0.0, edges: hi_edges },
    ];
    if !block_edges.is_empty() {
        patches.push(PatchSpec {
            name: "block".into(),
            kind: PatchKind::Wall,
            value: 0.0,
            edges: block_edges,
        });
    }
    Mesh::build(nodes, cells, patches, reference_ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::geometry_audit;

    #[test]
    fn strip_case_dimensions() {
        let mesh = strip_mesh(
            20.0,
            100,
            0.2,
            1.0,
            |_| 0.0,
            EndCondition::wall(),
            EndCondition::wall(),
        )
        .unwrap();
        assert_eq!(mesh.n_cells(), 100);
        for c in &mesh.cells {
            assert!((c.area - 0.04).abs() < 1e-14);
        }
        assert!((mesh.total_area() - 4.0).abs() < 1e-12);
        assert!(geometry_audit(&mesh).pass);
    }

    #[test]
    fn single_cell_strip() {
        let mesh = strip_mesh(
            1.0,
            1,
            0.5,
            1.0,
            |_| 0.0,
            EndCondition::wall(),
            EndCondition::wall(),
        )
        .unwrap();
        assert_eq!(mesh.n_cells(), 1);
        assert_eq!(mesh.boundary_faces().count(), 4);
        assert_eq!(mesh.interior_faces().count(), 0);
    }

    #[test]
    fn strip_samples_bed_profile() {
        let mesh = strip_mesh(
            25.0,
            100,
            1.0,
            0.33,
            crate::reference::bump_bed,
            EndCondition::wall(),
            EndCondition::wall(),
        )
        .unwrap();
        let bathy = crate::physics::Bathymetry::from_mesh(&mesh);
        let (imax, _) = bathy
            .z_b
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &z)| if z > acc.1 { (i, z) } else { acc });
        let crest_x = mesh.cells[imax].centroid[0];
        assert!((crest_x - 10.0).abs() < 0.3, "crest at {crest_x}");
        assert!(bathy.z_b[imax] > 0.19);
    }

    #[test]
    fn channel_block_removes_centroids() {
        let block = Block { center: [5.0, 2.5], size_x: 1.0, size_y: 0.5 };
        let mesh = channel_mesh(
            15.0,
            5.0,
            Some(block),
            0.25,
            0.4,
            EndCondition::inlet(0.38),
            EndCondition::exit(0.4),
            |_, _| 0.0,
        )
        .unwrap();
        for c in &mesh.cells {
            let inside = (c.centroid[0] - 5.0).abs() < 0.5 && (c.centroid[1] - 2.5).abs() < 0.25;
            assert!(!inside, "cell centroid {:?} inside block", c.centroid);
        }
        // Grid is aligned with the block edges, so the removed area is exact.
        assert!((mesh.total_area() - (15.0 * 5.0 - 0.5)).abs() < 1e-10);
        assert!(mesh.patches.iter().any(|p| p.name == "block"));
        assert!(geometry_audit(&mesh).pass);
    }

    #[test]
    fn channel_without_block_is_structured() {
        let mesh = channel_mesh(
            3.0,
            2.0,
            None,
            0.5,
            1.0,
            EndCondition::inlet(0.1),
            EndCondition::exit(1.0),
            |_, _| 0.0,
        )
        .unwrap();
        assert_eq!(mesh.n_cells(), 6 * 4);
        assert!((mesh.total_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn channel_rejects_bad_blocks() {
        let outside = Block { center: [14.9, 2.5], size_x: 1.0, size_y: 0.5 };
        assert!(channel_mesh(
            15.0,
            5.0,
            Some(outside),
            0.25,
            0.4,
            EndCondition::inlet(0.38),
            EndCondition::exit(0.4),
            |_, _| 0.0,
        )
        .is_err());
        let small = Block { center: [5.0, 2.5], size_x: 1.0, size_y: 0.5 };
        let err = channel_mesh(
            15.0,
            5.0,
            Some(small),
            0.6,
            0.4,
            EndCondition::inlet(0.38),
            EndCondition::exit(0.4),
            |_, _| 0.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("target_size"));
    }
}
