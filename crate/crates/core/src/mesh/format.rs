//! Line-oriented mesh text format.
//!
//! ```text
//! SWEMESH 1
//! REF_WS <float>
//! NODES <n>
//! <id> <x> <y> <z_b>
//! CELLS <m>
//! <id> <k> <v1> ... <vk> <manning_zone>
//! PATCHES <p>
//! <name> <wall|inlet_discharge|exit_wse> <value> <nfaces> <cell:edge> ...
//! ```
//!
//! Whitespace-separated, `#` starts a comment, node and cell ids must equal
//! their position. Edge `e` of cell `c` joins the cell's vertices `e` and
//! `e+1` (mod k).

use std::path::Path;

use super::{CellSpec, Mesh, MeshError, Node, PatchKind, PatchSpec};

pub fn load_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty, non-comment line with its 1-based number.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.iter.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), MeshError> {
        self.next_tokens().ok_or_else(|| MeshError::Parse {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, MeshError> {
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("cannot parse {what} from '{tok}'"),
    })
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines { iter: text.lines().enumerate() };

    let (ln, head) = lines.expect("SWEMESH header")?;
    if head.len() != 2 || head[0] != "SWEMESH" || head[1] != "1" {
        return Err(MeshError::Parse { line: ln, msg: "expected 'SWEMESH 1' header".into() });
    }

    let (ln, tok) = lines.expect("REF_WS")?;
    if tok.len() != 2 || tok[0] != "REF_WS" {
        return Err(MeshError::Parse { line: ln, msg: "expected 'REF_WS <value>'".into() });
    }
    let reference_ws: f64 = parse_num(tok[1], ln, "reference water surface")?;

    let (ln, tok) = lines.expect("NODES")?;
    if tok.len() != 2 || tok[0] != "NODES" {
        return Err(MeshError::Parse { line: ln, msg: "expected 'NODES <count>'".into() });
    }
    let n_nodes: usize = parse_num(tok[1], ln, "node count")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let (ln, tok) = lines.expect("node line")?;
        if tok.len() != 4 {
            return Err(MeshError::Parse {
                line: ln,
                msg: "node line needs '<id> <x> <y> <z_b>'".into(),
            });
        }
        let id: usize = parse_num(tok[0], ln, "node id")?;
        if id != i {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("node id {id} out of order, expected {i}"),
            });
        }
        nodes.push(Node {
            id,
            x: parse_num(tok[1], ln, "x")?,
            y: parse_num(tok[2], ln, "y")?,
            z_b: parse_num(tok[3], ln, "z_b")?,
        });
    }

    let (ln, tok) = lines.expect("CELLS")?;
    if tok.len() != 2 || tok[0] != "CELLS" {
        return Err(MeshError::Parse { line: ln, msg: "expected 'CELLS <count>'".into() });
    }
    let n_cells: usize = parse_num(tok[1], ln, "cell count")?;
    let mut cells = Vec::with_capacity(n_cells);
    for i in 0..n_cells {
        let (ln, tok) = lines.expect("cell line")?;
        if tok.len() < 3 {
            return Err(MeshError::Parse {
                line: ln,
                msg: "cell line needs '<id> <k> <v...> <zone>'".into(),
            });
        }
        let id: usize = parse_num(tok[0], ln, "cell id")?;
        if id != i {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("cell id {id} out of order, expected {i}"),
            });
        }
        let k: usize = parse_num(tok[1], ln, "vertex count")?;
        if tok.len() != 3 + k {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("cell {id}: expected {k} vertices and a zone"),
            });
        }
        let mut node_ids = Vec::with_capacity(k);
        for t in &tok[2..2 + k] {
            let v: usize = parse_num(t, ln, "vertex id")?;
            if v >= nodes.len() {
                return Err(MeshError::Parse {
                    line: ln,
                    msg: format!("vertex id {v} out of range"),
                });
            }
            node_ids.push(v);
        }
        let manning_zone: usize = parse_num(tok[2 + k], ln, "manning zone")?;
        cells.push(CellSpec { node_ids, manning_zone });
    }

    let (ln, tok) = lines.expect("PATCHES")?;
    if tok.len() != 2 || tok[0] != "PATCHES" {
        return Err(MeshError::Parse { line: ln, msg: "expected 'PATCHES <count>'".into() });
    }
    let n_patches: usize = parse_num(tok[1], ln, "patch count")?;
    let mut patches = Vec::with_capacity(n_patches);
    for _ in 0..n_patches {
        let (ln, tok) = lines.expect("patch line")?;
        if tok.len() < 4 {
            return Err(MeshError::Parse {
                line: ln,
                msg: "patch line needs '<name> <kind> <value> <nfaces> <cell:edge>...'".into(),
            });
        }
        let kind = PatchKind::parse(tok[1]).ok_or_else(|| MeshError::Parse {
            line: ln,
            msg: format!("unknown patch kind '{}'", tok[1]),
        })?;
        let value: f64 = parse_num(tok[2], ln, "patch value")?;
        let nfaces: usize = parse_num(tok[3], ln, "patch face count")?;
        if tok.len() != 4 + nfaces {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("patch '{}': expected {nfaces} cell:edge entries", tok[0]),
            });
        }
        let mut edges = Vec::with_capacity(nfaces);
        for t in &tok[4..] {
            let (c, e) = t.split_once(':').ok_or_else(|| MeshError::Parse {
                line: ln,
                msg: format!("expected 'cell:edge', got '{t}'"),
            })?;
            edges.push((parse_num(c, ln, "cell id")?, parse_num(e, ln, "edge index")?));
        }
        patches.push(PatchSpec { name: tok[0].to_string(), kind, value, edges });
    }

    Mesh::build(nodes, cells, patches, reference_ws)
}

pub fn write_mesh(mesh: &Mesh) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "SWEMESH 1").unwrap();
    writeln!(out, "REF_WS {}", mesh.reference_ws).unwrap();
    writeln!(out, "NODES {}", mesh.nodes.len()).unwrap();
    for n in &mesh.nodes {
        writeln!(out, "{} {} {} {}", n.id, n.x, n.y, n.z_b).unwrap();
    }
    writeln!(out, "CELLS {}", mesh.cells.len()).unwrap();
    for c in &mesh.cells {
        write!(out, "{} {}", c.id, c.node_ids.len()).unwrap();
        for v in &c.node_ids {
            write!(out, " {v}").unwrap();
        }
        writeln!(out, " {}", c.manning_zone).unwrap();
    }
    writeln!(out, "PATCHES {}", mesh.patches.len()).unwrap();
    for p in &mesh.patches {
        write!(out, "{} {} {} {}", p.name, p.kind.as_str(), p.value, p.face_ids.len()).unwrap();
        for &fid in &p.face_ids {
            let face = &mesh.faces[fid];
            let cell = &mesh.cells[face.left_cell];
            let k = cell.node_ids.len();
            let edge = (0..k)
                .find(|&e| {
                    let a = cell.node_ids[e];
                    let b = cell.node_ids[(e + 1) % k];
                    [a, b] == face.nodes
                })
                .expect("face nodes must match an edge of the left cell");
            write!(out, " {}:{}", cell.id, edge).unwrap();
        }
        writeln!(out).unwrap();
    }
    out
}
