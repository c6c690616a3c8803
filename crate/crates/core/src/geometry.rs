//! Point configurations on the unit sphere S^{d-1} and the named families
//! used throughout the crate: regular simplexes, orthogonal simplex
//! products, pyramids over them, cross polytopes and the square pyramid.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Norm tolerance for points produced by the constructors.
pub const UNIT_TOL: f64 = 1e-12;
/// Minimum pairwise distance for two points to count as distinct.
pub const DISTINCT_TOL: f64 = 1e-9;
/// Default norm tolerance for file readers.
pub const DEFAULT_READ_UNIT_TOL: f64 = 1e-9;

/// N unit vectors in R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalConfig {
    dim: usize,
    points: Vec<DVector<f64>>,
    label: Option<String>,
}

impl SphericalConfig {
    /// Validates norms to [`UNIT_TOL`], distinctness, and sizes.
    pub fn new(dim: usize, points: Vec<DVector<f64>>, label: Option<String>) -> Result<Self> {
        Self::with_unit_tol(dim, points, label, UNIT_TOL)
    }

    /// Like [`SphericalConfig::new`] but accepts norms within `unit_tol`;
    /// rows off by more than [`UNIT_TOL`] are renormalized.
    pub fn with_unit_tol(
        dim: usize,
        mut points: Vec<DVector<f64>>,
        label: Option<String>,
        unit_tol: f64,
    ) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 points, got {}", points.len())));
        }
        for (i, p) in points.iter_mut().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!("point {i} is not finite")));
            }
            let n = p.norm();
            if (n - 1.0).abs() > unit_tol {
                return Err(Error::InvalidArgument(format!("point {i} has norm {n}, not 1")));
            }
            if (n - 1.0).abs() > UNIT_TOL {
                *p /= n;
            }
        }
        let cfg = SphericalConfig { dim, points, label };
        if let Some((i, j, dist)) = cfg.closest_pair() {
            if dist <= DISTINCT_TOL {
                return Err(Error::InvalidArgument(format!(
                    "points {i} and {j} coincide (distance {dist:e})"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &DVector<f64> {
        &self.points[i]
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn into_points(self) -> Vec<DVector<f64>> {
        self.points
    }

    /// Gram matrix G_ij = x_i . x_j with an exact unit diagonal.
    pub fn gram(&self) -> DMatrix<f64> {
        gram(self)
    }

    pub fn centroid(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.dim);
        for p in &self.points {
            c += p;
        }
        c / self.points.len() as f64
    }

    /// N x d matrix whose rows are the points.
    pub fn point_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.dim, |i, k| self.points[i][k])
    }

    /// Dimension of the linear span of the points.
    pub fn span_rank(&self) -> usize {
        linalg::numerical_rank(&self.point_matrix())
    }

    pub fn min_distance(&self) -> f64 {
        self.closest_pair().map(|(_, _, d)| d).unwrap_or(f64::INFINITY)
    }

    fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = (&self.points[i] - &self.points[j]).norm();
                if best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        best
    }

    /// Applies `q` (any d x d orthogonal matrix) to every point.
    pub fn transformed(&self, q: &DMatrix<f64>) -> Result<Self> {
        let pts = self.points.iter().map(|p| q * p).collect();
        SphericalConfig::with_unit_tol(self.dim, pts, self.label.clone(), 1e-10)
    }

    /// Embeds the configuration in R^dim by zero padding.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::InvalidArgument(format!("cannot pad R^{} into R^{dim}", self.dim)));
        }
        let pts = self
            .points
            .iter()
            .map(|p| {
                let mut q = DVector::zeros(dim);
                q.rows_mut(0, self.dim).copy_from(p);
                q
            })
            .collect();
        SphericalConfig::new(dim, pts, self.label.clone())
    }
}

/// Block sizes [n_1, .., n_k] of an orthogonal simplex product, possibly
/// preceded by apex blocks of size 1.
///
/// A block of size n >= 2 is a regular simplex spanning n-1 dimensions; a
/// block of size 1 is an apex lifted one dimension above the points after it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartitionType {
    blocks: Vec<usize>,
}

impl PartitionType {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument("partition has no blocks".into()));
        }
        if blocks.contains(&0) {
            return Err(Error::InvalidArgument("partition blocks must be positive".into()));
        }
        let first_big = blocks.iter().position(|&b| b >= 2).ok_or_else(|| {
            Error::InvalidArgument("partition needs at least one block of size >= 2".into())
        })?;
        if blocks[first_big..].contains(&1) {
            return Err(Error::InvalidArgument(
                "apex blocks (size 1) must precede the simplex blocks".into(),
            ));
        }
        Ok(PartitionType { blocks })
    }

    /// Builds the partition and checks that it lives in R^dim.
    pub fn for_dim(blocks: Vec<usize>, dim: usize) -> Result<Self> {
        let p = PartitionType::new(blocks)?;
        if p.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "partition {p} spans dimension {}, not {dim}",
                p.dim()
            )));
        }
        Ok(p)
    }

    /// Parses "3,2" or "1,2,2".
    pub fn parse(s: &str) -> Result<Self> {
        let blocks = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad partition block {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PartitionType::new(blocks)
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn n_points(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn n_apexes(&self) -> usize {
        self.blocks.iter().filter(|&&b| b == 1).count()
    }

    pub fn has_apex(&self) -> bool {
        self.n_apexes() > 0
    }

    /// Ambient dimension: each simplex block adds n-1, each apex adds 1.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|&b| if b == 1 { 1 } else { b - 1 }).sum()
    }

    /// Canonical form: apexes first, simplex blocks in decreasing size.
    pub fn normalized(&self) -> Self {
        let ones = self.n_apexes();
        let mut big: Vec<usize> = self.blocks.iter().cloned().filter(|&b| b >= 2).collect();
        big.sort_unstable_by(|a, b| b.cmp(a));
        let mut blocks = vec![1; ones];
        blocks.extend(big);
        PartitionType { blocks }
    }

    fn simplex_part(&self) -> PartitionType {
        PartitionType { blocks: self.blocks[self.n_apexes()..].to_vec() }
    }
}

impl fmt::Display for PartitionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        write!(f, "[{}]", s.join(","))
    }
}

/// Gauge-fixed chart on Conf(3,5): (theta2, phi3, theta3, phi4, theta4, phi5, theta5),
/// with x1 at the north pole and x2 in the phi = 0 half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conf35Coords {
    pub v: [f64; 7],
}

impl Conf35Coords {
    pub fn new(v: [f64; 7]) -> Result<Self> {
        let c = Conf35Coords { v };
        for (k, &x) in v.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidArgument(format!("chart coordinate {k} is not finite")));
            }
        }
        for k in c.theta_indices() {
            if !(0.0..=PI).contains(&v[k]) {
                return Err(Error::InvalidArgument(format!("theta coordinate {k} = {} outside [0, pi]", v[k])));
            }
        }
        for k in [1, 3, 5] {
            if !(0.0..2.0 * PI).contains(&v[k]) {
                return Err(Error::InvalidArgument(format!("phi coordinate {k} = {} outside [0, 2pi)", v[k])));
            }
        }
        Ok(c)
    }

    /// Positions of the theta entries (for points 2..5) in `v`.
    pub fn theta_indices(&self) -> [usize; 4] {
        [0, 2, 4, 6]
    }

    /// (phi, theta) of point `k` in 0..5.
    pub fn angles(&self, k: usize) -> (f64, f64) {
        match k {
            0 => (0.0, 0.0),
            1 => (0.0, self.v[0]),
            _ => (self.v[2 * k - 3], self.v[2 * k - 2]),
        }
    }

    /// Planar regular pentagon through the pole.
    pub fn c0() -> Self {
        Conf35Coords { v: [2.0 * PI / 5.0, 0.0, 4.0 * PI / 5.0, PI, 4.0 * PI / 5.0, PI, 2.0 * PI / 5.0] }
    }

    /// Square pyramid with its base at height -1/4.
    pub fn c1() -> Self {
        let w = (-0.25f64).acos();
        Conf35Coords { v: [w, PI / 2.0, w, PI, w, 3.0 * PI / 2.0, w] }
    }

    /// Triangular bi-pyramid with the two-point axis horizontal, keeping
    /// points 2..5 away from the poles of the chart.
    pub fn c2() -> Self {
        Conf35Coords {
            v: [PI / 2.0, PI, PI / 2.0, PI / 2.0, 2.0 * PI / 3.0, 3.0 * PI / 2.0, 2.0 * PI / 3.0],
        }
    }
}

/// Unit vector with polar angle `theta` and azimuth `phi`.
pub fn spherical_point(phi: f64, theta: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Squared chord length between two points given in spherical coordinates.
pub fn chord_sq(phi: f64, theta: f64, phi2: f64, theta2: f64) -> f64 {
    2.0 - 2.0 * (theta.sin() * theta2.sin() * (phi - phi2).cos() + theta.cos() * theta2.cos())
}

/// Gram matrix of a configuration.
pub fn gram(config: &SphericalConfig) -> DMatrix<f64> {
    let n = config.len();
    let mut g = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = config.points[i].dot(&config.points[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Vertices of a regular simplex with `m` points in R^{m-1}, centred at 0.
///
/// Uses p_i = sqrt(m/(m-1)) (e_i - (1/m)1) expressed in the Helmert basis
/// of the hyperplane orthogonal to (1, .., 1).
pub fn regular_simplex(m: usize) -> Result<SphericalConfig> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("simplex needs m >= 2, got {m}")));
    }
    let pts = simplex_vertices(m);
    SphericalConfig::new(m - 1, pts, Some(format!("simplex({m})")))
}

pub(crate) fn simplex_vertices(m: usize) -> Vec<DVector<f64>> {
    let scale = (m as f64 / (m as f64 - 1.0)).sqrt();
    // u_k = (1,..,1, -k, 0,..)/sqrt(k(k+1)) for k = 1..m-1; the entries of
    // u_k sum to zero, so the shift by (1/m)1 drops out of (e_i - 1/m) . u_k
    (0..m)
        .map(|i| {
            DVector::from_fn(m - 1, |r, _| {
                let k = r + 1;
                let entry = match i.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0,
                    std::cmp::Ordering::Equal => -(k as f64),
                    std::cmp::Ordering::Greater => 0.0,
                };
                scale * entry / ((k * (k + 1)) as f64).sqrt()
            })
        })
        .collect()
}

/// Union of mutually orthogonal regular simplexes, blocks assigned to
/// coordinates left to right and points ordered block by block.
pub fn orthogonal_simplexes(partition: &PartitionType) -> Result<SphericalConfig> {
    if partition.has_apex() {
        return Err(Error::InvalidArgument(format!(
            "partition {partition} has apex blocks; use pyramid_config"
        )));
    }
    let dim = partition.dim();
    let mut pts = Vec::with_capacity(partition.n_points());
    let mut offset = 0;
    for &b in partition.blocks() {
        for v in simplex_vertices(b) {
            let mut p = DVector::zeros(dim);
            p.rows_mut(offset, b - 1).copy_from(&v);
            pts.push(p);
        }
        offset += b - 1;
    }
    SphericalConfig::new(dim, pts, Some(format!("orthogonal{partition}")))
}

/// Pyramid over an orthogonal simplex product: each apex sits at the pole
/// above the configuration it caps, which is pushed down to height -1/(N-1).
///
/// Points are ordered outermost apex first. Partitions without apexes are
/// delegated to [`orthogonal_simplexes`].
pub fn pyramid_config(partition: &PartitionType) -> Result<SphericalConfig> {
    let base = orthogonal_simplexes(&partition.simplex_part())?;
    let mut pts = base.into_points();
    let mut dim = partition.simplex_part().dim();
    for _ in 0..partition.n_apexes() {
        pts = lift_with_apex(&pts, dim);
        dim += 1;
    }
    SphericalConfig::new(dim, pts, Some(format!("pyramid{partition}")))
}

/// Lifts points z_i in R^dim to (sqrt(1-h^2) z_i, -h) with h = 1/(N-1),
/// where N counts the new apex, and prepends the apex e_{dim+1}.
fn lift_with_apex(inner: &[DVector<f64>], dim: usize) -> Vec<DVector<f64>> {
    let n_total = inner.len() + 1;
    let h = 1.0 / (n_total as f64 - 1.0);
    let r = (1.0 - h * h).sqrt();
    let mut apex = DVector::zeros(dim + 1);
    apex[dim] = 1.0;
    let mut out = vec![apex];
    for z in inner {
        let mut p = DVector::zeros(dim + 1);
        p.rows_mut(0, dim).copy_from(&(z * r));
        p[dim] = -h;
        out.push(p);
    }
    out
}

/// The 2d points +-e_1, .., +-e_d.
pub fn cross_polytope(d: usize) -> Result<SphericalConfig> {
    if d < 1 {
        return Err(Error::InvalidArgument("cross polytope needs d >= 1".into()));
    }
    let mut pts = Vec::with_capacity(2 * d);
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut p = DVector::zeros(d);
            p[k] = s;
            pts.push(p);
        }
    }
    SphericalConfig::new(d, pts, Some(format!("cross_polytope({d})")))
}

/// Apex (0,0,1) over a square of circumradius sqrt(1-t^2) at height t.
pub fn square_pyramid_fp(t: f64) -> Result<SphericalConfig> {
    if !(t > -1.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("square pyramid height {t} not in (-1, 1)")));
    }
    let r = (1.0 - t * t).sqrt();
    let mut pts = vec![DVector::from_vec(vec![0.0, 0.0, 1.0])];
    // exact quarter turns keep the square's coordinates exact
    for (cx, cy) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
        pts.push(DVector::from_vec(vec![r * cx, r * cy, t]));
    }
    SphericalConfig::new(3, pts, Some(format!("fp({t})")))
}

/// Regular n-gon in the plane of the first two coordinates of R^dim.
pub fn equatorial_polygon(n: usize, dim: usize) -> Result<SphericalConfig> {
    if n < 2 || dim < 2 {
        return Err(Error::InvalidArgument("polygon needs n >= 2 and dim >= 2".into()));
    }
    let pts = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            let mut p = DVector::zeros(dim);
            p[0] = a.cos();
            p[1] = a.sin();
            p
        })
        .collect();
    SphericalConfig::new(dim, pts, Some(format!("polygon({n})")))
}

/// `n` i.i.d. uniform points on S^{d-1}, deterministic in `seed`.
pub fn random_config(d: usize, n: usize, seed: u64) -> Result<SphericalConfig> {
    if d < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!("random config needs d >= 2 and N >= 2 (got {d}, {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|_| loop {
            let v = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let nv: f64 = v.norm();
            if nv > 1e-6 {
                break v / nv;
            }
        })
        .collect();
    SphericalConfig::new(d, pts, Some(format!("random(d={d},N={n},seed={seed})")))
}

/// Five points on S^2 from chart coordinates.
pub fn from_spherical(v: &Conf35Coords) -> Result<SphericalConfig> {
    let pts = (0..5)
        .map(|k| {
            let (phi, theta) = v.angles(k);
            let p = spherical_point(phi, theta);
            DVector::from_column_slice(p.as_slice())
        })
        .collect();
    SphericalConfig::new(3, pts, Some("conf35".into()))
}

/// Rotates a five-point configuration on S^2 into the gauge (x1 at the
/// north pole, x2 at phi = 0) and reads off the chart coordinates.
pub fn to_spherical(config: &SphericalConfig) -> Result<Conf35Coords> {
    if config.dim() != 3 || config.len() != 5 {
        return Err(Error::InvalidArgument(format!(
            "chart needs 5 points in R^3, got {} in R^{}",
            config.len(),
            config.dim()
        )));
    }
    let p: Vec<Vector3<f64>> = config.points().iter().map(|x| Vector3::new(x[0], x[1], x[2])).collect();
    let r1 = linalg::rotation_between(&p[0], &Vector3::z());
    let q: Vec<Vector3<f64>> = p.iter().map(|x| r1 * x).collect();
    let rho = q[1].x.hypot(q[1].y);
    if rho < 1e-12 {
        return Err(Error::GaugeSingular("x2 lies on the polar axis of x1".into()));
    }
    let phi2 = q[1].y.atan2(q[1].x);
    let (s, c) = (-phi2).sin_cos();
    let q: Vec<Vector3<f64>> = q.iter().map(|x| Vector3::new(c * x.x - s * x.y, s * x.x + c * x.y, x.z)).collect();
    let theta = |x: &Vector3<f64>| x.z.clamp(-1.0, 1.0).acos();
    let phi = |x: &Vector3<f64>| {
        let a = x.y.atan2(x.x).rem_euclid(2.0 * PI);
        if a >= 2.0 * PI {
            0.0
        } else {
            a
        }
    };
    Conf35Coords::new([
        theta(&q[1]),
        phi(&q[2]),
        theta(&q[2]),
        phi(&q[3]),
        theta(&q[3]),
        phi(&q[4]),
        theta(&q[4]),
    ])
}

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    dim: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// `{"dim": d, "points": [[..], ..], "label": ..}`
pub fn to_json(config: &SphericalConfig) -> String {
    let j = ConfigJson {
        dim: config.dim,
        points: config.points.iter().map(|p| p.iter().cloned().collect()).collect(),
        label: config.label.clone(),
    };
    serde_json::to_string_pretty(&j).expect("config serializes")
}

pub fn from_json(s: &str, unit_tol: f64) -> Result<SphericalConfig> {
    let j: ConfigJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    let pts = j.points.into_iter().map(DVector::from_vec).collect();
    SphericalConfig::with_unit_tol(j.dim, pts, j.label, unit_tol)
}

/// One point per row under a header `x1,..,xd`.
pub fn to_csv(config: &SphericalConfig) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=config.dim).map(|k| format!("x{k}")).collect();
    w.write_record(&header).expect("in-memory write");
    for p in &config.points {
        w.write_record(p.iter().map(|c| c.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

pub fn from_csv(s: &str, unit_tol: f64) -> Result<SphericalConfig> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(s.as_bytes());
    let dim = r.headers().map_err(|e| Error::Parse(e.to_string()))?.len();
    let mut pts = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let v = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("row {row}: bad number {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        pts.push(DVector::from_vec(v));
    }
    SphericalConfig::with_unit_tol(dim, pts, None, unit_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_entries_match(a: &SphericalConfig, b: &SphericalConfig, tol: f64) -> bool {
        // compare sorted multisets of Gram entries
        let flat = |c: &SphericalConfig| {
            let mut v: Vec<f64> = c.gram().iter().cloned().collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let (x, y) = (flat(a), flat(b));
        x.len() == y.len() && x.iter().zip(&y).all(|(p, q)| (p - q).abs() < tol)
    }

    #[test]
    fn simplex_small_cases() {
        let s2 = regular_simplex(2).unwrap();
        assert_eq!(s2.dim(), 1);
        assert_eq!(s2.point(0).dot(s2.point(1)), -1.0);
        let s3 = regular_simplex(3).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((s3.point(i).dot(s3.point(j)) + 0.5).abs() < 1e-15);
        }
        let g = regular_simplex(5).unwrap().gram();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { -0.25 };
                assert!((g[(i, j)] - want).abs() < 1e-15);
            }
        }
        assert!(regular_simplex(5).unwrap().centroid().norm() < 1e-14);
        assert!(matches!(regular_simplex(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn tbp_gram_values() {
        let tbp = orthogonal_simplexes(&PartitionType::new(vec![3, 2]).unwrap()).unwrap();
        assert_eq!(tbp.dim(), 3);
        let g = tbp.gram();
        for i in 0..5 {
            for j in 0..5 {
                let want = match (i < 3, j < 3) {
                    _ if i == j => 1.0,
                    (true, true) => -0.5,
                    (false, false) => -1.0,
                    _ => 0.0,
                };
                assert!((g[(i, j)] - want).abs() < 1e-15, "{i} {j} {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn square_from_two_pairs() {
        let sq = orthogonal_simplexes(&PartitionType::new(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(sq.dim(), 2);
        assert!((sq.min_distance() - 2f64.sqrt()).abs() < 1e-15);
        let c = orthogonal_simplexes(&PartitionType::new(vec![3, 3]).unwrap()).unwrap();
        assert_eq!(c.dim(), 4);
        assert!((c.point(0).dot(c.point(1)) + 0.5).abs() < 1e-15);
        assert_eq!(c.point(0).dot(c.point(4)), 0.0);
    }

    #[test]
    fn apex_blocks_rejected_by_orthogonal_simplexes() {
        let p = PartitionType::new(vec![1, 2, 2]).unwrap();
        assert!(matches!(orthogonal_simplexes(&p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn partition_dims() {
        assert_eq!(PartitionType::new(vec![3, 2]).unwrap().dim(), 3);
        assert_eq!(PartitionType::new(vec![1, 2, 2]).unwrap().dim(), 3);
        assert_eq!(PartitionType::new(vec![1, 1, 2, 2]).unwrap().dim(), 4);
        assert!(PartitionType::for_dim(vec![1, 4], 3).is_err());
        assert!(PartitionType::new(vec![2, 1]).is_err());
        assert!(PartitionType::new(vec![1, 1]).is_err());
        assert_eq!(PartitionType::parse("1, 2,3").unwrap().normalized().blocks(), &[1, 3, 2]);
    }

    #[test]
    fn pyramid_122_is_fp_quarter() {
        let p = pyramid_config(&PartitionType::new(vec![1, 2, 2]).unwrap()).unwrap();
        let apex = p.point(0);
        for k in 1..5 {
            assert!((apex.dot(p.point(k)) + 0.25).abs() < 1e-15);
        }
        let fp = square_pyramid_fp(-0.25).unwrap();
        // same point set
        for x in fp.points() {
            assert!(p.points().iter().any(|y| (x - y).norm() < 1e-15));
        }
    }

    #[test]
    fn double_apex_gram() {
        let p = pyramid_config(&PartitionType::new(vec![1, 1, 2, 2]).unwrap()).unwrap();
        assert_eq!((p.dim(), p.len()), (4, 6));
        // oracle: lift the [1,2,2] Gram by hand, G' = (1 - 1/25) G + 1/25
        let inner = pyramid_config(&PartitionType::new(vec![1, 2, 2]).unwrap()).unwrap().gram();
        let g = p.gram();
        for j in 1..6 {
            assert!((g[(0, j)] + 0.2).abs() < 1e-15);
            for k in 1..6 {
                if j != k {
                    let want = (24.0 / 25.0) * inner[(j - 1, k - 1)] + 1.0 / 25.0;
                    assert!((g[(j, k)] - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn cross_polytope_cases() {
        let o = cross_polytope(3).unwrap();
        assert!((o.min_distance() - 2f64.sqrt()).abs() < 1e-15);
        let c4 = cross_polytope(4).unwrap();
        assert!(c4.gram().iter().all(|&x| x == 0.0 || x == -1.0 || x == 1.0));
        assert_eq!(cross_polytope(2).unwrap().len(), 4);
    }

    #[test]
    fn fp_heights() {
        let f = square_pyramid_fp(0.5).unwrap();
        let b = f.point(1);
        assert!((b[0].hypot(b[1]) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(square_pyramid_fp(0.0).unwrap().point(2)[2], 0.0);
        assert!(square_pyramid_fp(1.0).is_err());
        assert!(square_pyramid_fp(-1.5).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let a = random_config(3, 5, 1).unwrap();
        assert_eq!(a, random_config(3, 5, 1).unwrap());
        assert_ne!(a.points(), random_config(3, 5, 2).unwrap().points());
        assert!(a.points().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        let g = a.gram();
        assert!((&g - g.transpose()).amax() < 1e-15);
    }

    #[test]
    fn chart_named_points() {
        let c0 = from_spherical(&Conf35Coords::c0()).unwrap();
        assert!(c0.points().iter().all(|p| p[1].abs() < 1e-15));
        assert_eq!(c0.span_rank(), 2);
        let c1 = from_spherical(&Conf35Coords::c1()).unwrap();
        let fp = square_pyramid_fp(-0.25).unwrap();
        for (x, y) in c1.points().iter().zip(fp.points()) {
            assert!((x - y).norm() < 1e-15);
        }
        let c2 = from_spherical(&Conf35Coords::c2()).unwrap();
        let tbp = orthogonal_simplexes(&PartitionType::new(vec![3, 2]).unwrap()).unwrap();
        assert!(gram_entries_match(&c2, &tbp, 1e-15));
    }

    #[test]
    fn chart_distance_formula() {
        let v = Conf35Coords::new([0.7, 1.1, 2.0, 3.3, 0.4, 5.9, 2.8]).unwrap();
        let c = from_spherical(&v).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let (p1, t1) = v.angles(i);
                let (p2, t2) = v.angles(j);
                let d = (c.point(i) - c.point(j)).norm_squared();
                assert!((d - chord_sq(p1, t1, p2, t2)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chart_round_trip() {
        let x = random_config(3, 5, 7).unwrap();
        let v = to_spherical(&x).unwrap();
        let y = from_spherical(&v).unwrap();
        assert!((x.gram() - y.gram()).amax() < 1e-10);
        let tbp = orthogonal_simplexes(&PartitionType::new(vec![3, 2]).unwrap()).unwrap();
        let back = from_spherical(&to_spherical(&tbp).unwrap()).unwrap();
        assert!((tbp.gram() - back.gram()).amax() < 1e-10);
    }

    #[test]
    fn chart_gauge_singular() {
        let mut pts = random_config(3, 5, 3).unwrap().into_points();
        pts[1] = -pts[0].clone();
        let c = SphericalConfig::new(3, pts, None).unwrap();
        assert!(matches!(to_spherical(&c), Err(Error::GaugeSingular(_))));
    }

    #[test]
    fn chart_ranges_validated() {
        assert!(Conf35Coords::new([4.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(Conf35Coords::new([1.0, 7.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(Conf35Coords::new(Conf35Coords::c1().v).is_ok());
    }

    #[test]
    fn rejects_bad_points() {
        let p = vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.5, 0.0])];
        assert!(SphericalConfig::new(2, p, None).is_err());
        let p = vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![1.0, 0.0])];
        assert!(SphericalConfig::new(2, p, None).is_err());
        let p = vec![DVector::from_vec(vec![1.0, 0.0])];
        assert!(SphericalConfig::new(2, p, None).is_err());
    }

    #[test]
    fn readers_apply_unit_tolerance() {
        let csv = "x1,x2\n1.0000000001,0\n0,-1\n";
        assert!(from_csv(csv, 1e-9).is_ok());
        assert!(from_csv(csv, 1e-12).is_err());
        let json = r#"{"dim":2,"points":[[1.1,0],[0,1]]}"#;
        assert!(from_json(json, 1e-9).is_err());
    }
}
