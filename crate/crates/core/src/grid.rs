//! Dyadic domains and piecewise-constant fields on them.

use crate::convex::{BodyJson, ConvexBody, DirectionGrid};
use crate::error::{Error, Result};
use crate::io::to_json_string;
use crate::linalg::{norm, Mat};
use crate::norm_kernel::{spd_power, Spd};
use crate::SpdMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Base cube `origin + [0, size)^n` split into `2^(nJ)` congruent cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicDomain {
    n: usize,
    origin: Vec<f64>,
    size: f64,
    level: u32,
}

/// A dyadic subcube: `index` is lexicographic among the `2^(n*level)` cubes
/// of that level (first coordinate most significant).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub level: u32,
    pub index: usize,
}

impl DyadicDomain {
    pub fn new(n: usize, origin: Vec<f64>, size: f64, level: u32) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::SchemaMismatch(format!("domain dimension must be 1 or 2, got {n}")));
        }
        if origin.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: origin.len() });
        }
        if !(size > 0.0 && size.is_finite()) || origin.iter().any(|x| !x.is_finite()) {
            return Err(Error::SchemaMismatch("domain size must be positive and finite".into()));
        }
        if level as usize * n > 24 {
            return Err(Error::SchemaMismatch(format!("level {level} is too fine")));
        }
        Ok(DyadicDomain { n, origin, size, level })
    }

    /// `[0,1)^n` at level `level`.
    pub fn unit(n: usize, level: u32) -> Self {
        Self::new(n, vec![0.0; n], 1.0, level).expect("unit domain is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of finest cells.
    pub fn len(&self) -> usize {
        1 << (self.n as u32 * self.level)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cells per axis at `level`.
    pub fn per_axis(&self, level: u32) -> usize {
        1 << level
    }

    pub fn side(&self, level: u32) -> f64 {
        self.size / (1u64 << level) as f64
    }

    /// Lebesgue measure of one cube at `level`.
    pub fn cube_measure(&self, level: u32) -> f64 {
        self.side(level).powi(self.n as i32)
    }

    pub fn cell_measure(&self) -> f64 {
        self.cube_measure(self.level)
    }

    pub fn total_measure(&self) -> f64 {
        self.size.powi(self.n as i32)
    }

    /// Integer coordinates of cube `index` at `level`.
    pub fn coords(&self, level: u32, index: usize) -> Vec<usize> {
        let k = self.per_axis(level);
        match self.n {
            1 => vec![index],
            _ => vec![index / k, index % k],
        }
    }

    pub fn index_of(&self, level: u32, coords: &[usize]) -> usize {
        let k = self.per_axis(level);
        coords.iter().fold(0, |acc, &c| acc * k + c)
    }

    /// Lower corner of a cube.
    pub fn corner(&self, cube: Cube) -> Vec<f64> {
        let s = self.side(cube.level);
        self.coords(cube.level, cube.index).iter().zip(&self.origin).map(|(&c, o)| o + c as f64 * s).collect()
    }

    /// Midpoint of finest cell `i`.
    pub fn midpoint(&self, i: usize) -> Vec<f64> {
        let s = self.side(self.level);
        self.corner(Cube { level: self.level, index: i }).iter().map(|x| x + 0.5 * s).collect()
    }

    pub fn root(&self) -> Cube {
        Cube { level: 0, index: 0 }
    }

    pub fn check_cube(&self, cube: Cube) -> Result<()> {
        if cube.level > self.level || cube.index >= 1 << (self.n as u32 * cube.level) {
            return Err(Error::CubeOutsideDomain { level: cube.level, index: cube.index });
        }
        Ok(())
    }

    /// The level-`level` ancestor of finest cell `i`.
    pub fn ancestor(&self, i: usize, level: u32) -> Cube {
        let shift = self.level - level;
        let c: Vec<usize> = self.coords(self.level, i).iter().map(|x| x >> shift).collect();
        Cube { level, index: self.index_of(level, &c) }
    }

    /// Finest cells inside `cube`, in lexicographic order.
    pub fn cells_in(&self, cube: Cube) -> Vec<usize> {
        let shift = self.level - cube.level;
        let w = 1usize << shift;
        let base: Vec<usize> = self.coords(cube.level, cube.index).iter().map(|c| c << shift).collect();
        match self.n {
            1 => (base[0]..base[0] + w).collect(),
            _ => {
                let mut out = Vec::with_capacity(w * w);
                for a in 0..w {
                    for b in 0..w {
                        out.push(self.index_of(self.level, &[base[0] + a, base[1] + b]));
                    }
                }
                out
            }
        }
    }

    /// Every dyadic subcube, coarse to fine.
    pub fn cubes(&self) -> Vec<Cube> {
        (0..=self.level).flat_map(|l| (0..1usize << (self.n as u32 * l)).map(move |index| Cube { level: l, index })).collect()
    }

    /// Finest-cell index containing point `x`, if inside.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let k = self.per_axis(self.level);
        let s = self.side(self.level);
        let mut c = Vec::with_capacity(self.n);
        for (xi, o) in x.iter().zip(&self.origin) {
            let t = ((xi - o) / s).floor();
            if t < 0.0 || t >= k as f64 {
                return None;
            }
            c.push(t as usize);
        }
        Some(self.index_of(self.level, &c))
    }

    pub fn check_same(&self, other: &DyadicDomain) -> Result<()> {
        if self != other {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }
}

/// Piecewise-constant nonnegative function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub domain: DyadicDomain,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: DyadicDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::DimensionMismatch { expected: domain.len(), got: values.len() });
        }
        Ok(ScalarField { domain, values })
    }

    pub fn constant(domain: &DyadicDomain, c: f64) -> Self {
        ScalarField { values: vec![c; domain.len()], domain: domain.clone() }
    }

    pub fn from_fn(domain: &DyadicDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..domain.len()).map(|i| f(&domain.midpoint(i))).collect();
        ScalarField { domain: domain.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { domain: self.domain.clone(), values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.domain.check_same(&other.domain)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(ScalarField { domain: self.domain.clone(), values })
    }

    /// `(int |f|^p)^(1/p)`, or the maximum at `p = inf`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
        }
        let mu = self.domain.cell_measure();
        (self.values.iter().map(|x| x.abs().powf(p)).sum::<f64>() * mu).powf(1.0 / p)
    }

    /// Average over a dyadic cube.
    pub fn average(&self, cube: Cube) -> f64 {
        let cells = self.domain.cells_in(cube);
        cells.iter().map(|&i| self.values[i]).sum::<f64>() / cells.len() as f64
    }
}

/// Piecewise-constant matrix weight.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixWeight {
    domain: DyadicDomain,
    d: usize,
    cells: Vec<SpdMatrix>,
}

impl MatrixWeight {
    pub fn new(domain: DyadicDomain, cells: Vec<SpdMatrix>) -> Result<Self> {
        if cells.len() != domain.len() {
            return Err(Error::DimensionMismatch { expected: domain.len(), got: cells.len() });
        }
        let d = cells[0].dim();
        if let Some(bad) = cells.iter().position(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: cells[bad].dim() });
        }
        Ok(MatrixWeight { domain, d, cells })
    }

    /// Build from raw matrices, validating each cell.
    pub fn from_matrices(domain: DyadicDomain, mats: Vec<Mat<f64>>) -> Result<Self> {
        let cells = mats.into_iter().enumerate().map(|(i, m)| Spd::new(m).map_err(|e| e.at_cell(i))).collect::<Result<Vec<_>>>()?;
        Self::new(domain, cells)
    }

    pub fn constant(domain: &DyadicDomain, a: &SpdMatrix) -> Self {
        MatrixWeight { domain: domain.clone(), d: a.dim(), cells: vec![a.clone(); domain.len()] }
    }

    pub fn identity(domain: &DyadicDomain, d: usize) -> Self {
        Self::constant(domain, &Spd::identity(d))
    }

    /// `w(x) I` for a positive scalar field.
    pub fn scalar(w: &ScalarField, d: usize) -> Result<Self> {
        let cells = w.values.iter().enumerate().map(|(i, &x)| Spd::from_diag(&vec![x; d]).map_err(|e| e.at_cell(i))).collect::<Result<Vec<_>>>()?;
        Self::new(w.domain.clone(), cells)
    }

    pub fn domain(&self) -> &DyadicDomain {
        &self.domain
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> &[SpdMatrix] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &SpdMatrix {
        &self.cells[i]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cellwise inverse.
    pub fn inverse(&self) -> Self {
        self.map(|m| m.inverse())
    }

    /// Cellwise real power.
    pub fn power(&self, t: f64) -> Self {
        self.map(|m| spd_power(m, t))
    }

    pub fn map(&self, f: impl Fn(&SpdMatrix) -> SpdMatrix) -> Self {
        MatrixWeight { domain: self.domain.clone(), d: self.d, cells: self.cells.iter().map(f).collect() }
    }

    /// `s(x)^e W(x)` for a positive scalar field `s`.
    pub fn scaled_by(&self, s: &ScalarField, e: f64) -> Result<Self> {
        self.domain.check_same(&s.domain)?;
        let cells =
            self.cells.iter().zip(&s.values).enumerate().map(|(i, (m, &x))| m.scale(x.powf(e)).map_err(|err| err.at_cell(i))).collect::<Result<Vec<_>>>()?;
        Ok(MatrixWeight { domain: self.domain.clone(), d: self.d, cells })
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.scaled_by(&ScalarField::constant(&self.domain, c), 1.0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let f = WeightFile {
            schema: WEIGHT_SCHEMA.into(),
            n: self.domain.n,
            d: self.d,
            domain: DomainJson { origin: self.domain.origin.clone(), size: self.domain.size },
            level: self.domain.level,
            cells: self.cells.iter().map(|m| m.mat().row_major()).collect(),
        };
        to_json_string(&f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: WeightFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        check_schema(&f.schema, WEIGHT_SCHEMA)?;
        let domain = f.domain.build(f.n, f.level)?;
        if f.cells.len() != domain.len() {
            return Err(Error::SchemaMismatch(format!("expected {} cells, got {}", domain.len(), f.cells.len())));
        }
        if f.d == 0 {
            return Err(Error::SchemaMismatch("d must be positive".into()));
        }
        let mut mats = Vec::with_capacity(f.cells.len());
        for (i, c) in f.cells.iter().enumerate() {
            if c.len() != f.d * f.d {
                return Err(Error::SchemaMismatch(format!("cell {i} has {} entries, expected {}", c.len(), f.d * f.d)));
            }
            mats.push(Mat::from_row_major(c)?);
        }
        Self::from_matrices(domain, mats)
    }
}

/// Piecewise-constant convex-body valued function.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFunction {
    pub domain: DyadicDomain,
    pub d: usize,
    pub cells: Vec<ConvexBody>,
}

impl SetFunction {
    pub fn new(domain: DyadicDomain, cells: Vec<ConvexBody>) -> Result<Self> {
        if cells.len() != domain.len() {
            return Err(Error::DimensionMismatch { expected: domain.len(), got: cells.len() });
        }
        let d = cells[0].dim();
        if let Some(bad) = cells.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.dim() });
        }
        Ok(SetFunction { domain, d, cells })
    }

    pub fn constant(domain: &DyadicDomain, k: &ConvexBody) -> Self {
        SetFunction { domain: domain.clone(), d: k.dim(), cells: vec![k.clone(); domain.len()] }
    }

    /// `r(x) W(x) B` for a scalar field `r` and matrix weight `W`.
    pub fn ellipsoids(r: &ScalarField, w: &MatrixWeight) -> Result<Self> {
        r.domain.check_same(&w.domain)?;
        let cells = r.values.iter().zip(&w.cells).map(|(&x, m)| ConvexBody::Ellipsoid(m.mat().scale(x.abs()))).collect();
        Ok(SetFunction { domain: r.domain.clone(), d: w.d, cells })
    }

    pub fn map(&self, f: impl Fn(&ConvexBody) -> ConvexBody) -> Self {
        SetFunction { domain: self.domain.clone(), d: self.d, cells: self.cells.iter().map(f).collect() }
    }

    /// Cellwise Minkowski sum.
    pub fn sum(&self, other: &SetFunction) -> Result<Self> {
        self.domain.check_same(&other.domain)?;
        let cells = self.cells.iter().zip(&other.cells).map(|(a, b)| a.minkowski_sum(b)).collect::<Result<Vec<_>>>()?;
        Ok(SetFunction { domain: self.domain.clone(), d: self.d, cells })
    }

    /// Cellwise `s(x) F(x)`.
    pub fn scaled_by(&self, s: &ScalarField) -> Result<Self> {
        self.domain.check_same(&s.domain)?;
        let cells = self.cells.iter().zip(&s.values).map(|(k, &x)| k.scale(x)).collect();
        Ok(SetFunction { domain: self.domain.clone(), d: self.d, cells })
    }

    /// Cellwise `sup_{v in F(x)} |W(x) v|`, Euclidean when `w` is `None`.
    pub fn set_norms(&self, w: Option<&MatrixWeight>) -> Result<ScalarField> {
        let values = match w {
            Some(w) => {
                self.domain.check_same(&w.domain)?;
                self.cells.iter().zip(&w.cells).map(|(k, m)| k.set_norm(m.mat())).collect()
            }
            None => self.cells.iter().map(|k| k.radius()).collect(),
        };
        Ok(ScalarField { domain: self.domain.clone(), values })
    }

    pub fn to_json(&self) -> Result<String> {
        let dirs = self
            .cells
            .iter()
            .find_map(|k| match k {
                ConvexBody::Support(s) => Some(s.grid().name()),
                _ => None,
            })
            .unwrap_or_else(|| DirectionGrid::default_for(self.d).name());
        let f = SetFunctionFile {
            schema: SETFN_SCHEMA.into(),
            n: self.domain.n,
            d: self.d,
            dirs,
            domain: DomainJson { origin: self.domain.origin.clone(), size: self.domain.size },
            level: self.domain.level,
            cells: self.cells.iter().map(BodyJson::from).collect(),
        };
        to_json_string(&f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: SetFunctionFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        check_schema(&f.schema, SETFN_SCHEMA)?;
        let domain = f.domain.build(f.n, f.level)?;
        if f.cells.len() != domain.len() {
            return Err(Error::SchemaMismatch(format!("expected {} cells, got {}", domain.len(), f.cells.len())));
        }
        let grid = DirectionGrid::from_name(f.d, &f.dirs)?;
        let cells = f.cells.into_iter().enumerate().map(|(i, b)| b.into_body(f.d, &grid).map_err(|e| e.at_cell(i))).collect::<Result<Vec<_>>>()?;
        Self::new(domain, cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Piecewise-constant vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub domain: DyadicDomain,
    pub d: usize,
    pub cells: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(domain: DyadicDomain, cells: Vec<Vec<f64>>) -> Result<Self> {
        if cells.len() != domain.len() {
            return Err(Error::DimensionMismatch { expected: domain.len(), got: cells.len() });
        }
        let d = cells[0].len();
        if let Some(bad) = cells.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        if cells.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::SchemaMismatch("non-finite vector entry".into()));
        }
        Ok(VectorField { domain, d, cells })
    }

    pub fn from_fn(domain: &DyadicDomain, d: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let cells = (0..domain.len()).map(|i| f(&domain.midpoint(i))).collect::<Vec<_>>();
        if cells.iter().any(|c| c.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: cells.iter().map(|c| c.len()).find(|&l| l != d).unwrap_or(0) });
        }
        Self::new(domain.clone(), cells)
    }

    /// Cellwise `|W(x) f(x)|`.
    pub fn weighted_norms(&self, w: &MatrixWeight) -> Result<ScalarField> {
        self.domain.check_same(&w.domain)?;
        let values = self.cells.iter().zip(&w.cells).map(|(v, m)| norm(&m.mul_vec(v))).collect();
        Ok(ScalarField { domain: self.domain.clone(), values })
    }

    /// `||f||_{L^p(W)}`.
    pub fn lp_norm(&self, w: &MatrixWeight, p: f64) -> Result<f64> {
        Ok(self.weighted_norms(w)?.lp_norm(p))
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(&FieldFile {
            schema: FIELD_SCHEMA.into(),
            n: self.domain.n,
            d: self.d,
            domain: DomainJson { origin: self.domain.origin.clone(), size: self.domain.size },
            level: self.domain.level,
            cells: self.cells.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: FieldFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        check_schema(&f.schema, FIELD_SCHEMA)?;
        let domain = f.domain.build(f.n, f.level)?;
        if f.cells.len() != domain.len() || f.cells.iter().any(|c| c.len() != f.d) {
            return Err(Error::SchemaMismatch("vector field shape does not match its header".into()));
        }
        Self::new(domain, f.cells)
    }
}

/// `F(x) = conv{f(x), -f(x)}`.
pub fn lift_vector_field(f: &VectorField) -> SetFunction {
    SetFunction { domain: f.domain.clone(), d: f.d, cells: f.cells.iter().map(|v| ConvexBody::segment(v)).collect() }
}

pub const WEIGHT_SCHEMA: &str = "mwlab-weight-v1";
pub const SETFN_SCHEMA: &str = "mwlab-setfn-v1";
pub const FIELD_SCHEMA: &str = "mwlab-field-v1";
pub const SCALAR_SCHEMA: &str = "mwlab-scalar-v1";

fn check_schema(got: &str, want: &str) -> Result<()> {
    if got != want {
        return Err(Error::SchemaMismatch(format!("expected schema '{want}', got '{got}'")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DomainJson {
    origin: Vec<f64>,
    size: f64,
}

impl DomainJson {
    fn build(self, n: usize, level: u32) -> Result<DyadicDomain> {
        DyadicDomain::new(n, self.origin, self.size, level).map_err(|e| match e {
            Error::DimensionMismatch { .. } => Error::SchemaMismatch("domain origin does not match n".into()),
            other => other,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightFile {
    schema: String,
    n: usize,
    d: usize,
    domain: DomainJson,
    level: u32,
    cells: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SetFunctionFile {
    schema: String,
    n: usize,
    d: usize,
    dirs: String,
    domain: DomainJson,
    level: u32,
    cells: Vec<BodyJson>,
}

#[derive(Serialize, Deserialize)]
struct FieldFile {
    schema: String,
    n: usize,
    d: usize,
    domain: DomainJson,
    level: u32,
    cells: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ScalarFile {
    schema: String,
    n: usize,
    domain: DomainJson,
    level: u32,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn to_json(&self) -> Result<String> {
        to_json_string(&ScalarFile {
            schema: SCALAR_SCHEMA.into(),
            n: self.domain.n,
            domain: DomainJson { origin: self.domain.origin.clone(), size: self.domain.size },
            level: self.domain.level,
            values: self.values.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ScalarFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        check_schema(&f.schema, SCALAR_SCHEMA)?;
        let domain = f.domain.build(f.n, f.level)?;
        Self::new(domain, f.values).map_err(|_| Error::SchemaMismatch("value count does not match the domain".into()))
    }
}

/// `|x - c|^alpha I`, with exact cell averages on cells whose closure
/// contains `c`.
pub fn gen_power_weight(domain: &DyadicDomain, d: usize, alpha: f64, center: &[f64]) -> Result<MatrixWeight> {
    if center.len() != domain.n {
        return Err(Error::DimensionMismatch { expected: domain.n, got: center.len() });
    }
    let s = domain.side(domain.level);
    let w = ScalarField::from_fn(domain, |mid| {
        let lo: Vec<f64> = mid.iter().map(|m| m - 0.5 * s).collect();
        let touches = lo.iter().zip(center).all(|(l, c)| *c >= *l && *c <= l + s);
        if !touches {
            let r = mid.iter().zip(center).map(|(m, c)| (m - c).powi(2)).sum::<f64>().sqrt();
            return r.powf(alpha);
        }
        if alpha <= -(domain.n as f64) {
            return (0.25 * s).powf(alpha);
        }
        power_cell_average(&lo, s, center, alpha)
    });
    MatrixWeight::scalar(&w, d)
}

/// Average of `|x - c|^alpha` over the cube `lo + [0, s)^n`, `c` in its closure.
fn power_cell_average(lo: &[f64], s: f64, c: &[f64], alpha: f64) -> f64 {
    match lo.len() {
        1 => {
            let (a, b) = (c[0] - lo[0], lo[0] + s - c[0]);
            (a.powf(alpha + 1.0) + b.powf(alpha + 1.0)) / ((alpha + 1.0) * s)
        }
        _ => {
            let xs = [c[0] - lo[0], lo[0] + s - c[0]];
            let ys = [c[1] - lo[1], lo[1] + s - c[1]];
            let mut total = 0.0;
            for &a in &xs {
                for &b in &ys {
                    total += corner_rectangle_integral(a, b, alpha);
                }
            }
            total / (s * s)
        }
    }
}

/// `int_{[0,a]x[0,b]} |x|^alpha dx` in polar coordinates.
fn corner_rectangle_integral(a: f64, b: f64, alpha: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let e = alpha + 2.0;
    let sec_pow = |th: f64| th.cos().powf(-e);
    let t0 = (b / a).atan();
    (a.powf(e) * simpson(sec_pow, 0.0, t0, 16384) + b.powf(e) * simpson(sec_pow, 0.0, std::f64::consts::FRAC_PI_2 - t0, 16384)) / e
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `W(x) = R(omega x) diag(e^a(x), e^b(x)) R(omega x)'` in the first coordinate.
pub fn gen_rotating_weight(domain: &DyadicDomain, a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, omega: f64) -> Result<MatrixWeight> {
    let mats = (0..domain.len())
        .map(|i| {
            let x = domain.midpoint(i)[0];
            let (c, s) = ((omega * x).cos(), (omega * x).sin());
            let (ea, eb) = (a(x).exp(), b(x).exp());
            Mat::from_row_major(&[c * c * ea + s * s * eb, c * s * (ea - eb), c * s * (ea - eb), s * s * ea + c * c * eb]).expect("2x2").symmetrize()
        })
        .collect();
    MatrixWeight::from_matrices(domain.clone(), mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_indexing() {
        let dom = DyadicDomain::unit(2, 2);
        assert_eq!(dom.len(), 16);
        let cells = dom.cells_in(Cube { level: 1, index: 3 });
        assert_eq!(cells, vec![10, 11, 14, 15]);
        for &c in &cells {
            assert_eq!(dom.ancestor(c, 1), Cube { level: 1, index: 3 });
        }
        assert_eq!(dom.cubes().len(), 1 + 4 + 16);
        assert_eq!(dom.locate(&[0.6, 0.3]), Some(9));
    }

    #[test]
    fn power_weight_average_in_one_dimension() {
        let dom = DyadicDomain::unit(1, 3);
        let w = gen_power_weight(&dom, 1, 0.5, &[0.0]).unwrap();
        // (1/h) int_0^h x^(1/2) dx = (2/3) h^(1/2)
        assert!((w.cell(0).mat()[(0, 0)] - (2.0 / 3.0) * (0.125f64).sqrt()).abs() < 1e-15);
        assert!((w.cell(3).mat()[(0, 0)] - 0.4375f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn planar_corner_integral() {
        // int over [0,1]^2 of |x|^0 is 1, of |x|^2 is 2/3.
        assert!((corner_rectangle_integral(1.0, 1.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((corner_rectangle_integral(1.0, 1.0, 2.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((corner_rectangle_integral(2.0, 0.5, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotating_weight_is_spd() {
        let dom = DyadicDomain::unit(1, 3);
        let w = gen_rotating_weight(&dom, |_| 1.0, |_| 0.0, 2.0 * std::f64::consts::PI).unwrap();
        // Angles a quarter turn apart share eigenvectors; an eighth does not.
        let a = w.cell(1).mat();
        let b = w.cell(2).mat();
        let comm = &(a * b) - &(b * a);
        assert!(comm.frobenius() > 0.1);
    }
}
