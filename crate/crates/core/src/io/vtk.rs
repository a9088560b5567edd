//! Legacy ASCII VTK unstructured-grid snapshots.
//!
//! Besides the required point/cell arrays the file carries the simulation
//! time and the domain polygon as field data, and the original node and
//! element ids so that a restart reproduces the mesh exactly.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};
use crate::kinetics::Velocities;
use crate::mesh::{Domain, DomainTag, ElemId, Mesh, NodeId, SurfaceId};
use crate::rex::Grains;
use crate::topology::{classify_node, NodeClass};

/// VTK cell type of a linear triangle.
const VTK_TRIANGLE: i64 = 5;

/// Everything a snapshot file holds.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub mesh: Mesh,
    /// Dislocation density per surface as stored on the cells.
    pub rho: BTreeMap<SurfaceId, f64>,
    /// Node class codes as written (0 S, 1 L, 2 P, 3 corner).
    pub node_class: BTreeMap<NodeId, u8>,
}

fn class_code(c: NodeClass) -> u8 {
    match c {
        NodeClass::P { corner: true } => 3,
        c => c.code(),
    }
}

pub fn write_vtk<W: Write>(
    mut w: W,
    mesh: &Mesh,
    grains: &Grains,
    time: f64,
    velocities: Option<&Velocities>,
) -> Result<()> {
    let nodes: Vec<NodeId> = mesh.node_ids().collect();
    let mut index = vec![u32::MAX; mesh.node_capacity()];
    for (i, n) in nodes.iter().enumerate() {
        index[n.idx()] = i as u32;
    }
    let elems: Vec<ElemId> = mesh.element_ids().collect();
    let verts = &mesh.domain().vertices;

    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "grainfront snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "FIELD FieldData 2")?;
    writeln!(w, "TIME 1 1 double")?;
    writeln!(w, "{time:e}")?;
    writeln!(w, "DOMAIN 2 {} double", verts.len())?;
    for v in verts {
        writeln!(w, "{:e} {:e}", v.x, v.y)?;
    }
    writeln!(w, "POINTS {} double", nodes.len())?;
    for &n in &nodes {
        let p = mesh.pos(n);
        writeln!(w, "{:e} {:e} 0", p.x, p.y)?;
    }
    writeln!(w, "CELLS {} {}", elems.len(), 4 * elems.len())?;
    for &e in &elems {
        let [a, b, c] = mesh.element(e).nodes;
        writeln!(w, "3 {} {} {}", index[a.idx()], index[b.idx()], index[c.idx()])?;
    }
    writeln!(w, "CELL_TYPES {}", elems.len())?;
    for _ in &elems {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }

    writeln!(w, "CELL_DATA {}", elems.len())?;
    writeln!(w, "SCALARS surface_id int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &e in &elems {
        writeln!(w, "{}", mesh.element(e).surface.0)?;
    }
    writeln!(w, "SCALARS dislocation_density double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &e in &elems {
        let rho = grains.get(&mesh.element(e).surface).map_or(0.0, |g| g.rho);
        writeln!(w, "{rho:e}")?;
    }
    writeln!(w, "SCALARS element_id int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &e in &elems {
        writeln!(w, "{}", e.0)?;
    }

    writeln!(w, "POINT_DATA {}", nodes.len())?;
    writeln!(w, "SCALARS node_class int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &n in &nodes {
        writeln!(w, "{}", classify_node(mesh, n).map(class_code).unwrap_or(255))?;
    }
    writeln!(w, "SCALARS node_id int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &n in &nodes {
        writeln!(w, "{}", n.0)?;
    }
    writeln!(w, "SCALARS domain_tag int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &n in &nodes {
        writeln!(w, "{}", mesh.tag(n).code())?;
    }
    writeln!(w, "VECTORS velocity double")?;
    for &n in &nodes {
        let v = velocities.map_or(Vec2::zeros(), |v| v.get(n));
        writeln!(w, "{:e} {:e} 0", v.x, v.y)?;
    }
    Ok(())
}

/// Whitespace token stream that remembers line numbers.
struct Tokens {
    path: String,
    toks: Vec<(usize, String)>,
    pos: usize,
}

impl Tokens {
    fn new<R: BufRead>(r: R, path: &str) -> Result<Self> {
        let mut toks = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            // the two header lines are free text
            if i < 2 {
                continue;
            }
            for t in line.split_whitespace() {
                toks.push((i + 1, t.to_string()));
            }
        }
        Ok(Tokens { path: path.to_string(), toks, pos: 0 })
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.0)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), line: self.line(), msg: msg.into() }
    }

    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(|t| t.1.as_str())
    }

    fn next(&mut self) -> Result<String> {
        let t = self.toks.get(self.pos).ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(t.1.clone())
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected `{word}`, found `{t}`")))
        }
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("cannot parse `{t}` as a number"))
        })
    }
}

fn read_scalars<T: std::str::FromStr>(t: &mut Tokens, n: usize) -> Result<Vec<T>> {
    t.next()?; // type
    if t.peek().is_some_and(|s| s.parse::<usize>().is_ok()) {
        t.next()?; // component count
    }
    t.expect("LOOKUP_TABLE")?;
    t.next()?;
    (0..n).map(|_| t.num()).collect()
}

/// Parse a snapshot written by [`write_vtk`]. `path` only labels errors.
pub fn read_vtk<R: BufRead>(r: R, path: &str) -> Result<Snapshot> {
    let mut t = Tokens::new(r, path)?;
    t.expect("ASCII")?;
    t.expect("DATASET")?;
    t.expect("UNSTRUCTURED_GRID")?;

    let mut time = 0.0;
    let mut domain: Option<Vec<Vec2>> = None;
    if t.peek().is_some_and(|s| s.eq_ignore_ascii_case("FIELD")) {
        t.next()?;
        t.next()?;
        let arrays: usize = t.num()?;
        for _ in 0..arrays {
            let name = t.next()?;
            let comps: usize = t.num()?;
            let tuples: usize = t.num()?;
            t.next()?;
            let vals: Vec<f64> = (0..comps * tuples).map(|_| t.num()).collect::<Result<_>>()?;
            match name.as_str() {
                "TIME" => time = vals.first().copied().unwrap_or(0.0),
                "DOMAIN" if comps == 2 => domain = Some(vals.chunks(2).map(|c| vec2(c[0], c[1])).collect()),
                _ => {}
            }
        }
    }
    let domain = domain.ok_or_else(|| t.err("missing DOMAIN field data"))?;

    t.expect("POINTS")?;
    let n_points: usize = t.num()?;
    t.next()?;
    let mut pts = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let x: f64 = t.num()?;
        let y: f64 = t.num()?;
        let _z: f64 = t.num()?;
        pts.push(vec2(x, y));
    }
    t.expect("CELLS")?;
    let n_cells: usize = t.num()?;
    let _size: usize = t.num()?;
    let mut cells = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let k: usize = t.num()?;
        if k != 3 {
            return Err(t.err(format!("only triangles are supported, found a cell with {k} points")));
        }
        let c: [usize; 3] = [t.num()?, t.num()?, t.num()?];
        if c.iter().any(|&i| i >= n_points) {
            return Err(t.err("cell references a missing point"));
        }
        cells.push(c);
    }
    t.expect("CELL_TYPES")?;
    let _: usize = t.num()?;
    for _ in 0..n_cells {
        let ty: i64 = t.num()?;
        if ty != VTK_TRIANGLE {
            return Err(t.err(format!("unsupported cell type {ty}")));
        }
    }

    let mut surface: Option<Vec<u32>> = None;
    let mut rho_cells: Option<Vec<f64>> = None;
    let mut elem_ids: Option<Vec<u32>> = None;
    let mut node_class: Option<Vec<u8>> = None;
    let mut node_ids: Option<Vec<u32>> = None;
    let mut tags: Option<Vec<i64>> = None;
    let mut count = 0usize;
    while let Some(word) = t.peek().map(str::to_string) {
        match word.to_ascii_uppercase().as_str() {
            "CELL_DATA" => {
                t.next()?;
                count = t.num()?;
                if count != n_cells {
                    return Err(t.err("CELL_DATA count differs from the number of cells"));
                }
            }
            "POINT_DATA" => {
                t.next()?;
                count = t.num()?;
                if count != n_points {
                    return Err(t.err("POINT_DATA count differs from the number of points"));
                }
            }
            "SCALARS" => {
                t.next()?;
                let name = t.next()?;
                match name.as_str() {
                    "surface_id" => surface = Some(read_scalars(&mut t, count)?),
                    "dislocation_density" => rho_cells = Some(read_scalars(&mut t, count)?),
                    "element_id" => elem_ids = Some(read_scalars(&mut t, count)?),
                    "node_class" => node_class = Some(read_scalars(&mut t, count)?),
                    "node_id" => node_ids = Some(read_scalars(&mut t, count)?),
                    "domain_tag" => tags = Some(read_scalars(&mut t, count)?),
                    _ => {
                        read_scalars::<f64>(&mut t, count)?;
                    }
                }
            }
            "VECTORS" => {
                t.next()?;
                t.next()?;
                t.next()?;
                for _ in 0..3 * count {
                    t.num::<f64>()?;
                }
            }
            other => return Err(t.err(format!("unexpected keyword `{other}`"))),
        }
    }
    let surface = surface.ok_or_else(|| t.err("missing surface_id cell data"))?;
    let node_ids: Vec<u32> = node_ids.unwrap_or_else(|| (0..n_points as u32).collect());
    let elem_ids: Vec<u32> = elem_ids.unwrap_or_else(|| (0..n_cells as u32).collect());

    let dom = Domain::new(domain);
    let mut mesh = Mesh::new(dom.clone());
    for (i, p) in pts.iter().enumerate() {
        let tag = match &tags {
            Some(v) => DomainTag::from_code(v[i]).ok_or_else(|| t.err(format!("bad domain tag {}", v[i])))?,
            None => dom.tag_for(p, 1e-9),
        };
        mesh.insert_node_with_id(NodeId(node_ids[i]), *p, tag);
    }
    let mut rho = BTreeMap::new();
    for (k, c) in cells.iter().enumerate() {
        let nodes = [NodeId(node_ids[c[0]]), NodeId(node_ids[c[1]]), NodeId(node_ids[c[2]])];
        let s = SurfaceId(surface[k]);
        mesh.insert_element_with_id(ElemId(elem_ids[k]), nodes, s);
        if let Some(r) = &rho_cells {
            rho.insert(s, r[k]);
        }
    }
    let node_class =
        node_class.map(|v| node_ids.iter().zip(v).map(|(&n, c)| (NodeId(n), c)).collect()).unwrap_or_default();
    Ok(Snapshot { time, mesh, rho, node_class })
}
