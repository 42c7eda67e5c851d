//! Domains, uniform simplicial meshes, nodal fields and region masks.
//!
//! Domains are intervals (1D) or axis-aligned rectangles (2D). Rectangles are
//! meshed by splitting each grid cell into two triangles along the main
//! diagonal. An enlarged domain is built by padding every axis outward, so the
//! closure of the base domain sits strictly inside the enlarged one.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Coordinate tolerance for boundary detection and point location.
pub const COORD_TOL: f64 = 1e-12;

/// An interval or axis-aligned rectangle, plus the padding width used when an
/// enlarged copy of the domain is requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    /// Per-axis `[lo, hi]`; the second axis is ignored in 1D.
    pub bounds: [[f64; 2]; 2],
    /// Outward padding per axis for the enlarged domain.
    pub padding: f64,
}

impl DomainSpec {
    pub fn interval(lo: f64, hi: f64) -> Self {
        DomainSpec {
            dim: 1,
            bounds: [[lo, hi], [0.0, 0.0]],
            padding: 0.25 * (hi - lo),
        }
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Self {
        let min_len = (x[1] - x[0]).min(y[1] - y[0]);
        DomainSpec {
            dim: 2,
            bounds: [x, y],
            padding: 0.25 * min_len,
        }
    }

    pub fn with_padding(mut self, padding: f64) -> Self {
        self.padding = padding;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::Domain(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        for axis in 0..self.dim {
            let [lo, hi] = self.bounds[axis];
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!(
                    "axis {axis} bounds must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Spec of the padded domain containing this one.
    pub fn enlarged(&self) -> Result<DomainSpec> {
        self.validate()?;
        if !(self.padding > 0.0) {
            return Err(Error::Domain(format!(
                "enlarged domain requires positive padding, got {}",
                self.padding
            )));
        }
        let mut out = *self;
        for axis in 0..self.dim {
            out.bounds[axis][0] -= self.padding;
            out.bounds[axis][1] += self.padding;
        }
        Ok(out)
    }

    pub fn axis_len(&self, axis: usize) -> f64 {
        self.bounds[axis][1] - self.bounds[axis][0]
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        (0..self.dim).map(|a| 0.5 * self.axis_len(a)).fold(f64::INFINITY, f64::min)
    }
}

/// Element connectivity.
#[derive(Debug, Clone)]
pub enum Cells {
    Segments(Vec<[usize; 2]>),
    Triangles(Vec<[usize; 3]>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Segments(v) => v.len(),
            Cells::Triangles(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed per-element geometry: vertex ids, measure, constant shape
/// gradients and the quadrature rule (midpoint in 1D, edge midpoints in 2D).
#[derive(Debug, Clone)]
pub struct ElemGeom {
    pub verts: [usize; 3],
    pub nv: usize,
    pub measure: f64,
    /// Gradient of each vertex hat function on this element.
    pub grads: [[f64; 2]; 3],
    /// Quadrature points: physical location, hat values, weight.
    pub qpoints: [([f64; 2], [f64; 3], f64); 3],
    pub nq: usize,
}

/// Uniform mesh of a [`DomainSpec`].
#[derive(Debug)]
pub struct Mesh {
    pub spec: DomainSpec,
    pub n: usize,
    pub nodes: Vec<[f64; 2]>,
    pub cells: Cells,
    pub boundary: Vec<bool>,
    /// Characteristic spacing: max over axes of axis length / n.
    pub h: f64,
    elems: Vec<ElemGeom>,
    interior: Vec<usize>,
}

impl Mesh {
    /// Uniform mesh with `n` subdivisions per axis.
    pub fn build(spec: DomainSpec, n: usize) -> Result<Arc<Mesh>> {
        spec.validate()?;
        if n < 2 {
            return Err(Error::Mesh(format!("need at least 2 subdivisions per axis, got {n}")));
        }
        let mesh = match spec.dim {
            1 => Self::build_1d(spec, n),
            2 => Self::build_2d(spec, n),
            _ => unreachable!(),
        };
        mesh.check_invariants()?;
        Ok(Arc::new(mesh))
    }

    /// Mesh of the padded domain, suitable for restriction onto meshes of the
    /// base domain via [`transfer`].
    pub fn build_enlarged(spec: DomainSpec, n: usize) -> Result<Arc<Mesh>> {
        Mesh::build(spec.enlarged()?, n)
    }

    fn build_1d(spec: DomainSpec, n: usize) -> Mesh {
        let [a, b] = spec.bounds[0];
        let h = (b - a) / n as f64;
        let nodes: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let x = if i == n { b } else { a + i as f64 * h };
                [x, 0.0]
            })
            .collect();
        let segs: Vec<[usize; 2]> = (0..n).map(|i| [i, i + 1]).collect();
        let boundary: Vec<bool> = (0..=n).map(|i| i == 0 || i == n).collect();
        let elems = segs
            .iter()
            .map(|&[i, j]| {
                let he = nodes[j][0] - nodes[i][0];
                let mid = [0.5 * (nodes[i][0] + nodes[j][0]), 0.0];
                ElemGeom {
                    verts: [i, j, usize::MAX],
                    nv: 2,
                    measure: he,
                    grads: [[-1.0 / he, 0.0], [1.0 / he, 0.0], [0.0, 0.0]],
                    qpoints: [
                        (mid, [0.5, 0.5, 0.0], he),
                        ([0.0; 2], [0.0; 3], 0.0),
                        ([0.0; 2], [0.0; 3], 0.0),
                    ],
                    nq: 1,
                }
            })
            .collect();
        let interior = (1..n).collect();
        Mesh {
            spec,
            n,
            nodes,
            cells: Cells::Segments(segs),
            boundary,
            h,
            elems,
            interior,
        }
    }

    fn build_2d(spec: DomainSpec, n: usize) -> Mesh {
        let [ax, bx] = spec.bounds[0];
        let [ay, by] = spec.bounds[1];
        let hx = (bx - ax) / n as f64;
        let hy = (by - ay) / n as f64;
        let id = |i: usize, j: usize| i * (n + 1) + j;
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            let y = if i == n { by } else { ay + i as f64 * hy };
            for j in 0..=n {
                let x = if j == n { bx } else { ax + j as f64 * hx };
                nodes.push([x, y]);
                boundary.push(i == 0 || i == n || j == 0 || j == n);
            }
        }
        // Each grid cell splits along the diagonal from its lower-left corner.
        let mut tris = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let v00 = id(i, j);
                let v01 = id(i, j + 1);
                let v10 = id(i + 1, j);
                let v11 = id(i + 1, j + 1);
                tris.push([v00, v01, v11]);
                tris.push([v00, v11, v10]);
            }
        }
        let elems = tris.iter().map(|t| triangle_geom(&nodes, *t)).collect();
        let interior = (0..nodes.len()).filter(|&k| !boundary[k]).collect();
        Mesh {
            spec,
            n,
            nodes,
            cells: Cells::Triangles(tris),
            boundary,
            h: hx.max(hy),
            elems,
            interior,
        }
    }

    fn check_invariants(&self) -> Result<()> {
        for e in &self.elems {
            if !(e.measure > 0.0) {
                return Err(Error::Mesh("element with nonpositive measure".into()));
            }
            for &v in &e.verts[..e.nv] {
                if v >= self.nodes.len() {
                    return Err(Error::Mesh("connectivity references invalid node".into()));
                }
            }
        }
        for (k, &[x, y]) in self.nodes.iter().enumerate() {
            let on = (0..self.spec.dim).any(|a| {
                let c = if a == 0 { x } else { y };
                (c - self.spec.bounds[a][0]).abs() <= COORD_TOL
                    || (c - self.spec.bounds[a][1]).abs() <= COORD_TOL
            });
            if on != self.boundary[k] {
                return Err(Error::Mesh(format!("boundary mask inconsistent at node {k}")));
            }
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn elems(&self) -> &[ElemGeom] {
        &self.elems
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Nodal distance to the domain boundary; exactly zero on boundary nodes.
    pub fn distance_to_boundary(self: &Arc<Self>) -> Field {
        let values = self
            .nodes
            .iter()
            .enumerate()
            .map(|(k, &[x, y])| {
                if self.boundary[k] {
                    return 0.0;
                }
                let mut d = f64::INFINITY;
                for a in 0..self.spec.dim {
                    let c = if a == 0 { x } else { y };
                    d = d.min(c - self.spec.bounds[a][0]).min(self.spec.bounds[a][1] - c);
                }
                d
            })
            .collect();
        Field { mesh: Arc::clone(self), values }
    }

    /// Mask of the strip `{ d(x) < strip_width }` along the boundary.
    pub fn boundary_strip(self: &Arc<Self>, strip_width: f64) -> Result<RegionMask> {
        let half_inradius = 0.5 * self.spec.inradius();
        if !(strip_width > 0.0 && strip_width < half_inradius) {
            return Err(Error::Domain(format!(
                "strip width must lie in (0, {half_inradius}), got {strip_width}"
            )));
        }
        let d = self.distance_to_boundary();
        let inside = d.values.iter().map(|&v| v < strip_width).collect();
        Ok(RegionMask {
            mesh: Arc::clone(self),
            inside,
            strip_width: Some(strip_width),
        })
    }

    /// Locate the element containing `point` and interpolate nodal `values`.
    pub fn interpolate(&self, values: &[f64], point: [f64; 2]) -> Result<f64> {
        let [x, y] = point;
        let tol = COORD_TOL.max(1e-9 * self.h);
        for a in 0..self.spec.dim {
            let c = if a == 0 { x } else { y };
            if c < self.spec.bounds[a][0] - tol || c > self.spec.bounds[a][1] + tol {
                return Err(Error::Mesh(format!(
                    "point ({x}, {y}) outside the mesh hull on axis {a}"
                )));
            }
        }
        match self.spec.dim {
            1 => {
                let [a, _] = self.spec.bounds[0];
                let hx = self.spec.axis_len(0) / self.n as f64;
                let i = (((x - a) / hx).floor() as isize).clamp(0, self.n as isize - 1) as usize;
                let xl = self.nodes[i][0];
                let t = ((x - xl) / hx).clamp(0.0, 1.0);
                Ok(values[i] * (1.0 - t) + values[i + 1] * t)
            }
            2 => {
                let id = |i: usize, j: usize| i * (self.n + 1) + j;
                let [ax, _] = self.spec.bounds[0];
                let [ay, _] = self.spec.bounds[1];
                let hx = self.spec.axis_len(0) / self.n as f64;
                let hy = self.spec.axis_len(1) / self.n as f64;
                let j = (((x - ax) / hx).floor() as isize).clamp(0, self.n as isize - 1) as usize;
                let i = (((y - ay) / hy).floor() as isize).clamp(0, self.n as isize - 1) as usize;
                let xi = ((x - (ax + j as f64 * hx)) / hx).clamp(0.0, 1.0);
                let eta = ((y - (ay + i as f64 * hy)) / hy).clamp(0.0, 1.0);
                let v00 = values[id(i, j)];
                let v01 = values[id(i, j + 1)];
                let v10 = values[id(i + 1, j)];
                let v11 = values[id(i + 1, j + 1)];
                // Cell diagonal runs from (0,0) to (1,1).
                Ok(if xi >= eta {
                    v00 * (1.0 - xi) + v01 * (xi - eta) + v11 * eta
                } else {
                    v00 * (1.0 - eta) + v11 * xi + v10 * (eta - xi)
                })
            }
            _ => unreachable!(),
        }
    }

    /// Write nodes and connectivity as a delimited-value file.
    pub fn export(&self, mut w: impl Write, header: &str) -> Result<()> {
        writeln!(w, "{header}")?;
        writeln!(w, "# nodes: index,x,y,is_boundary")?;
        for (k, &[x, y]) in self.nodes.iter().enumerate() {
            writeln!(w, "{k},{x},{y},{}", u8::from(self.boundary[k]))?;
        }
        match &self.cells {
            Cells::Segments(segs) => {
                writeln!(w, "# elements: index,v0,v1")?;
                for (k, s) in segs.iter().enumerate() {
                    writeln!(w, "{k},{},{}", s[0], s[1])?;
                }
            }
            Cells::Triangles(tris) => {
                writeln!(w, "# elements: index,v0,v1,v2")?;
                for (k, t) in tris.iter().enumerate() {
                    writeln!(w, "{k},{},{},{}", t[0], t[1], t[2])?;
                }
            }
        }
        Ok(())
    }
}

fn triangle_geom(nodes: &[[f64; 2]], verts: [usize; 3]) -> ElemGeom {
    let a = nodes[verts[0]];
    let b = nodes[verts[1]];
    let c = nodes[verts[2]];
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let area = 0.5 * det;
    let perp = |u: [f64; 2]| [-u[1], u[0]];
    let g = |opp0: [f64; 2], opp1: [f64; 2]| {
        let e = [opp1[0] - opp0[0], opp1[1] - opp0[1]];
        let p = perp(e);
        [p[0] / (2.0 * area), p[1] / (2.0 * area)]
    };
    let mid = |u: [f64; 2], v: [f64; 2]| [0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])];
    let wq = area / 3.0;
    ElemGeom {
        verts,
        nv: 3,
        measure: area,
        grads: [g(b, c), g(c, a), g(a, b)],
        qpoints: [
            (mid(a, b), [0.5, 0.5, 0.0], wq),
            (mid(b, c), [0.0, 0.5, 0.5], wq),
            (mid(c, a), [0.5, 0.0, 0.5], wq),
        ],
        nq: 3,
    }
}

/// One scalar value per mesh node.
#[derive(Debug, Clone)]
pub struct Field {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn constant(mesh: &Arc<Mesh>, value: f64) -> Field {
        Field {
            mesh: Arc::clone(mesh),
            values: vec![value; mesh.num_nodes()],
        }
    }

    pub fn zeros(mesh: &Arc<Mesh>) -> Field {
        Field::constant(mesh, 0.0)
    }

    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field {
            mesh: Arc::clone(mesh),
            values: mesh.nodes.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// Nodal power with zero boundary values preserved exactly.
    pub fn powf(&self, e: f64) -> Field {
        self.map(|v| v.powf(e))
    }

    pub fn eval_at(&self, point: [f64; 2]) -> Result<f64> {
        self.mesh.interpolate(&self.values, point)
    }

    pub fn sup_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_interior(&self) -> f64 {
        self.mesh
            .interior_nodes()
            .iter()
            .map(|&k| self.values[k])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn clamp_between(&mut self, lo: &Field, hi: &Field) {
        for k in 0..self.values.len() {
            self.values[k] = self.values[k].max(lo.values[k]).min(hi.values[k]);
        }
    }

    pub fn same_mesh(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Write as `index,x,y,value` rows under the given header.
    pub fn export(&self, mut w: impl Write, header: &str) -> Result<()> {
        writeln!(w, "{header}")?;
        writeln!(w, "# field: index,x,y,value")?;
        for (k, &[x, y]) in self.mesh.nodes.iter().enumerate() {
            writeln!(w, "{k},{x},{y},{}", self.values[k])?;
        }
        Ok(())
    }

    /// Read a field previously written by [`Field::export`], checking node
    /// indices and coordinates against `mesh`.
    pub fn import(mesh: &Arc<Mesh>, text: &str) -> Result<Field> {
        let mut values = vec![f64::NAN; mesh.num_nodes()];
        let mut seen = 0usize;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Mesh(format!("field row needs 4 columns: `{line}`")));
            }
            let k: usize = cols[0]
                .parse()
                .map_err(|_| Error::Mesh(format!("bad node index `{}`", cols[0])))?;
            if k >= mesh.num_nodes() {
                return Err(Error::Mesh(format!("node index {k} outside mesh")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Mesh(format!("bad number `{s}` in field row")))
            };
            let x = parse(cols[1])?;
            let y = parse(cols[2])?;
            if (x - mesh.nodes[k][0]).abs() > 1e-9 || (y - mesh.nodes[k][1]).abs() > 1e-9 {
                return Err(Error::Mesh(format!(
                    "node {k} coordinates ({x}, {y}) disagree with the mesh"
                )));
            }
            values[k] = parse(cols[3])?;
            seen += 1;
        }
        if seen != mesh.num_nodes() || values.iter().any(|v| v.is_nan()) {
            return Err(Error::Mesh(format!(
                "field file covers {seen} of {} nodes",
                mesh.num_nodes()
            )));
        }
        Ok(Field {
            mesh: Arc::clone(mesh),
            values,
        })
    }
}

/// Nodal boolean mask over a mesh.
#[derive(Debug, Clone)]
pub struct RegionMask {
    pub mesh: Arc<Mesh>,
    pub inside: Vec<bool>,
    pub strip_width: Option<f64>,
}

impl RegionMask {
    pub fn whole(mesh: &Arc<Mesh>) -> RegionMask {
        RegionMask {
            mesh: Arc::clone(mesh),
            inside: vec![true; mesh.num_nodes()],
            strip_width: None,
        }
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            mesh: Arc::clone(&self.mesh),
            inside: self.inside.iter().map(|b| !b).collect(),
            strip_width: None,
        }
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Exact nodal extrema of `field` over `mask` (or the whole mesh).
pub fn field_extrema(field: &Field, mask: Option<&RegionMask>) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (k, &v) in field.values.iter().enumerate() {
        if mask.is_none_or(|m| m.inside[k]) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        return Err(Error::Domain("empty mask in extrema computation".into()));
    }
    Ok((lo, hi))
}

/// Piecewise-linear interpolation of `field` onto the nodes of `target`.
///
/// Exact (to rounding) for fields that are affine on each source element; the
/// target domain must sit inside the source hull.
pub fn transfer(field: &Field, target: &Arc<Mesh>) -> Result<Field> {
    let values = target
        .nodes
        .iter()
        .map(|&p| field.mesh.interpolate(&field.values, p))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Field {
        mesh: Arc::clone(target),
        values,
    })
}

/// Gradient recovery: per-node measure-weighted average of the constant
/// element gradients on the elements touching the node.
pub fn nodal_gradients(field: &Field) -> Vec<[f64; 2]> {
    let mesh = &field.mesh;
    let mut acc = vec![[0.0f64; 2]; mesh.num_nodes()];
    let mut wsum = vec![0.0f64; mesh.num_nodes()];
    for e in mesh.elems() {
        let mut g = [0.0f64; 2];
        for (l, &v) in e.verts[..e.nv].iter().enumerate() {
            g[0] += field.values[v] * e.grads[l][0];
            g[1] += field.values[v] * e.grads[l][1];
        }
        for &v in &e.verts[..e.nv] {
            acc[v][0] += e.measure * g[0];
            acc[v][1] += e.measure * g[1];
            wsum[v] += e.measure;
        }
    }
    for k in 0..acc.len() {
        acc[k][0] /= wsum[k];
        acc[k][1] /= wsum[k];
    }
    acc
}
