//! Plain-text mesh formats. Blank lines and `#` comments are ignored.
//!
//! ```text
//! surf <nv> <nt>            tet <nv> <nk>                        wire <nf>
//! x y z      (nv lines)     x y z      (nv lines)                fiber <nn> <a> <sigma_l>
//! i j k      (nt lines)     a b c d sxx syy szz sxy sxz syz      x y z  (nn lines)
//! ```
//!
//! Electrode files hold one `label x y z` line per electrode. Indices are
//! 0-based; coordinates are in meters and conductivities in S/m.

use std::fmt::Write as _;
use std::path::Path;

use super::{ElectrodeSet, Fiber, GeometryError, Mat3, TetRegion, TriangleSurface, Vec3, WireBundle};

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text.lines().enumerate().filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
        });
        Self {
            inner: Box::new(inner),
            last: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), GeometryError> {
        match self.inner.next() {
            Some((n, t)) => {
                self.last = n;
                Ok((n, t))
            }
            None => Err(GeometryError::Parse {
                line: self.last + 1,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn finish(&mut self) -> Result<(), GeometryError> {
        match self.inner.next() {
            Some((line, _)) => Err(GeometryError::Parse {
                line,
                message: "trailing content".into(),
            }),
            None => Ok(()),
        }
    }
}

fn perr(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        line,
        message: message.into(),
    }
}

fn nums<T: std::str::FromStr>(line: usize, toks: &[&str], n: usize) -> Result<Vec<T>, GeometryError> {
    if toks.len() != n {
        return Err(perr(line, format!("expected {n} fields, found {}", toks.len())));
    }
    toks.iter()
        .map(|t| t.parse::<T>().map_err(|_| perr(line, format!("invalid number '{t}'"))))
        .collect()
}

fn header(lines: &mut Lines, keyword: &str, count: usize) -> Result<Vec<usize>, GeometryError> {
    let (n, toks) = lines.next(keyword)?;
    if toks.first() != Some(&keyword) {
        return Err(perr(n, format!("expected '{keyword}' header")));
    }
    nums(n, &toks[1..], count)
}

fn point(lines: &mut Lines) -> Result<Vec3, GeometryError> {
    let (n, toks) = lines.next("vertex")?;
    let v: Vec<f64> = nums(n, &toks, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn read(path: &Path) -> Result<String, GeometryError> {
    std::fs::read_to_string(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_surface(text: &str, layer_index: usize) -> Result<TriangleSurface, GeometryError> {
    let mut lines = Lines::new(text);
    let h = header(&mut lines, "surf", 2)?;
    let vertices = (0..h[0]).map(|_| point(&mut lines)).collect::<Result<Vec<_>, _>>()?;
    let mut triangles = Vec::with_capacity(h[1]);
    for _ in 0..h[1] {
        let (n, toks) = lines.next("triangle")?;
        let t: Vec<usize> = nums(n, &toks, 3)?;
        triangles.push([t[0], t[1], t[2]]);
    }
    lines.finish()?;
    TriangleSurface::new(vertices, triangles, layer_index)
}

pub fn load_surface_mesh(path: impl AsRef<Path>, layer_index: usize) -> Result<TriangleSurface, GeometryError> {
    parse_surface(&read(path.as_ref())?, layer_index)
}

pub fn parse_tets(text: &str, host_layer: usize) -> Result<TetRegion, GeometryError> {
    let mut lines = Lines::new(text);
    let h = header(&mut lines, "tet", 2)?;
    let vertices = (0..h[0]).map(|_| point(&mut lines)).collect::<Result<Vec<_>, _>>()?;
    let mut tets = Vec::with_capacity(h[1]);
    let mut sigma = Vec::with_capacity(h[1]);
    for _ in 0..h[1] {
        let (n, toks) = lines.next("tet")?;
        if toks.len() != 10 {
            return Err(perr(n, format!("expected 10 fields, found {}", toks.len())));
        }
        let idx: Vec<usize> = nums(n, &toks[..4], 4)?;
        let s: Vec<f64> = nums(n, &toks[4..], 6)?;
        tets.push([idx[0], idx[1], idx[2], idx[3]]);
        sigma.push(Mat3::new(s[0], s[3], s[4], s[3], s[1], s[5], s[4], s[5], s[2]));
    }
    lines.finish()?;
    TetRegion::new(vertices, tets, sigma, host_layer)
}

pub fn load_tet_region(path: impl AsRef<Path>, host_layer: usize) -> Result<TetRegion, GeometryError> {
    parse_tets(&read(path.as_ref())?, host_layer)
}

pub fn parse_wires(text: &str, host_layer: usize, max_seg_len: Option<f64>) -> Result<WireBundle, GeometryError> {
    let mut lines = Lines::new(text);
    let h = header(&mut lines, "wire", 1)?;
    let mut fibers = Vec::with_capacity(h[0]);
    for _ in 0..h[0] {
        let (n, toks) = lines.next("fiber header")?;
        if toks.first() != Some(&"fiber") || toks.len() != 4 {
            return Err(perr(n, "expected 'fiber <nn> <a> <sigma_l>'"));
        }
        let nn: usize = toks[1].parse().map_err(|_| perr(n, "invalid node count"))?;
        let ab: Vec<f64> = nums(n, &toks[2..], 2)?;
        let nodes = (0..nn).map(|_| point(&mut lines)).collect::<Result<Vec<_>, _>>()?;
        fibers.push(Fiber {
            nodes,
            radius: ab[0],
            sigma_l: ab[1],
        });
    }
    lines.finish()?;
    WireBundle::new(fibers, host_layer, max_seg_len)
}

pub fn load_wire_bundle(
    path: impl AsRef<Path>,
    host_layer: usize,
    max_seg_len: Option<f64>,
) -> Result<WireBundle, GeometryError> {
    parse_wires(&read(path.as_ref())?, host_layer, max_seg_len)
}

/// Raw (unsnapped) electrode labels and positions.
pub fn parse_electrodes(text: &str) -> Result<(Vec<String>, Vec<Vec3>), GeometryError> {
    let mut labels = Vec::new();
    let mut positions = Vec::new();
    let mut lines = Lines::new(text);
    while let Ok((n, toks)) = lines.next("electrode") {
        if toks.len() != 4 {
            return Err(perr(n, "expected 'label x y z'"));
        }
        let v: Vec<f64> = nums(n, &toks[1..], 3)?;
        labels.push(toks[0].to_string());
        positions.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok((labels, positions))
}

pub fn load_electrodes(
    path: impl AsRef<Path>,
    scalp: &TriangleSurface,
    tolerance: f64,
) -> Result<ElectrodeSet, GeometryError> {
    let (labels, raw) = parse_electrodes(&read(path.as_ref())?)?;
    ElectrodeSet::snap(labels, &raw, scalp, tolerance)
}

fn push_point(out: &mut String, p: &Vec3) {
    let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
}

pub fn write_surface(s: &TriangleSurface) -> String {
    let mut out = format!("surf {} {}\n", s.vertices.len(), s.triangles.len());
    s.vertices.iter().for_each(|p| push_point(&mut out, p));
    for t in &s.triangles {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn write_tets(r: &TetRegion) -> String {
    let mut out = format!("tet {} {}\n", r.vertices.len(), r.tets.len());
    r.vertices.iter().for_each(|p| push_point(&mut out, p));
    for (t, s) in r.tets.iter().zip(&r.sigma) {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {} {}",
            t[0],
            t[1],
            t[2],
            t[3],
            s[(0, 0)],
            s[(1, 1)],
            s[(2, 2)],
            s[(0, 1)],
            s[(0, 2)],
            s[(1, 2)]
        );
    }
    out
}

pub fn write_wires(b: &WireBundle) -> String {
    let mut out = format!("wire {}\n", b.fibers.len());
    for f in &b.fibers {
        let _ = writeln!(out, "fiber {} {} {}", f.nodes.len(), f.radius, f.sigma_l);
        f.nodes.iter().for_each(|p| push_point(&mut out, p));
    }
    out
}

pub fn write_electrodes(labels: &[String], positions: &[Vec3]) -> String {
    let mut out = String::new();
    for (l, p) in labels.iter().zip(positions) {
        let _ = writeln!(out, "{l} {} {} {}", p.x, p.y, p.z);
    }
    out
}
