//! Explicit perturbations of stationary configurations: the rotation that
//! lowers the energy of a degenerate configuration, the one-parameter path
//! through a {1,k,m} pyramid, and the second-order form D at a two-simplex
//! split together with the two matrix inequalities that make it nonnegative.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{simplex_vertices, SphericalConfig};
use crate::linalg;
use crate::potentials::{energy, PotentialKind};
use crate::stationarity::{build_diagnostics, classify, verify_blocks, StationaryClass};

/// Per-point displacements h_i.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationBundle {
    pub h: Vec<DVector<f64>>,
}

impl PerturbationBundle {
    pub fn new(h: Vec<DVector<f64>>) -> Self {
        PerturbationBundle { h }
    }

    pub fn zero(config: &SphericalConfig) -> Self {
        PerturbationBundle { h: vec![DVector::zeros(config.dim()); config.len()] }
    }

    /// I.i.d. Gaussian displacements, projected to the tangent spaces and
    /// scaled so the largest has norm `scale`.
    pub fn random_tangent(config: &SphericalConfig, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (0..config.len()).map(|_| DVector::from_fn(config.dim(), |_, _| StandardNormal.sample(&mut rng))).collect();
        PerturbationBundle { h }.tangent(config).scaled_to(scale)
    }

    /// h_i = W x_i for skew-symmetric W (an infinitesimal rotation).
    pub fn rotation(config: &SphericalConfig, w: &DMatrix<f64>) -> Self {
        PerturbationBundle { h: config.points().iter().map(|x| w * x).collect() }
    }

    /// Random skew generator with Gaussian entries, scaled so the bundle's largest displacement is `scale`.
    pub fn random_rotation(config: &SphericalConfig, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.dim();
        let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let w: DMatrix<f64> = &g - g.transpose();
        PerturbationBundle::rotation(config, &w).scaled_to(scale)
    }

    pub fn max_norm(&self) -> f64 {
        self.h.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Removes the radial parts: h_i - (x_i . h_i) x_i.
    pub fn tangent(&self, config: &SphericalConfig) -> Self {
        let h = self.h.iter().zip(config.points()).map(|(h, x)| h - x * x.dot(h)).collect();
        PerturbationBundle { h }
    }

    pub fn scaled_to(&self, eps: f64) -> Self {
        let m = self.max_norm();
        if m == 0.0 {
            return self.clone();
        }
        PerturbationBundle { h: self.h.iter().map(|v| v * (eps / m)).collect() }
    }

    /// y_i = (x_i + h~_i)/|x_i + h~_i| with h~ the tangent part of the bundle.
    pub fn apply(&self, config: &SphericalConfig) -> Result<SphericalConfig> {
        let t = self.tangent(config);
        let pts = config.points().iter().zip(&t.h).map(|(x, h)| (x + h).normalize()).collect();
        SphericalConfig::with_unit_tol(config.dim(), pts, None, 1e-10)
    }
}

/// Coordinates of a two-simplex split: block one spans U, block two spans V.
#[derive(Clone, Debug)]
pub struct TwoSimplexFrame {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    /// Orthonormal basis (columns) of the span of the first block.
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl TwoSimplexFrame {
    /// Identifies the blocks via the sign of the rank-one factor and checks
    /// the Gram structure to 1e-8.
    pub fn detect(config: &SphericalConfig) -> Result<Self> {
        let not_split = || Error::NotApplicable("configuration is not a two-simplex split".into());
        let class = classify(config, 1e-8).map_err(|_| not_split())?;
        if !matches!(class.class, StationaryClass::TwoSimplex { .. }) {
            return Err(not_split());
        }
        let diag = build_diagnostics(config)?;
        let first: Vec<usize> = (0..config.len()).filter(|&i| diag.a[i] > 0.0).collect();
        let second: Vec<usize> = (0..config.len()).filter(|&i| diag.a[i] < 0.0).collect();
        verify_blocks(config, &[first.clone(), second.clone()]).map_err(|_| not_split())?;
        let basis = |idx: &[usize]| {
            let vs: Vec<DVector<f64>> = idx.iter().map(|&i| config.point(i).clone()).collect();
            let b = linalg::orthonormal_basis(&vs, 1e-8);
            DMatrix::from_columns(&b)
        };
        let u = basis(&first);
        let v = basis(&second);
        if u.ncols() != first.len() - 1 || v.ncols() != second.len() - 1 {
            return Err(not_split());
        }
        Ok(TwoSimplexFrame { first, second, u, v })
    }

    pub fn m(&self) -> usize {
        self.first.len()
    }

    pub fn n(&self) -> usize {
        self.second.len()
    }

    /// Splits a tangent bundle into (a_i, b_i) on the first block and
    /// (c_j, d_j) on the second, with p_i, q_j the block coordinates.
    pub fn decompose(&self, config: &SphericalConfig, bundle: &PerturbationBundle) -> BundleComponents {
        let ut = self.u.transpose();
        let vt = self.v.transpose();
        BundleComponents {
            p: self.first.iter().map(|&i| &ut * config.point(i)).collect(),
            q: self.second.iter().map(|&j| &vt * config.point(j)).collect(),
            a: self.first.iter().map(|&i| &ut * &bundle.h[i]).collect(),
            b: self.first.iter().map(|&i| &vt * &bundle.h[i]).collect(),
            c: self.second.iter().map(|&j| &ut * &bundle.h[j]).collect(),
            d: self.second.iter().map(|&j| &vt * &bundle.h[j]).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BundleComponents {
    pub p: Vec<DVector<f64>>,
    pub q: Vec<DVector<f64>>,
    pub a: Vec<DVector<f64>>,
    pub b: Vec<DVector<f64>>,
    pub c: Vec<DVector<f64>>,
    pub d: Vec<DVector<f64>>,
}

/// D = |sum h|^2 + D1 + D2 + D3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticForm {
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

fn vsum(v: &[DVector<f64>]) -> DVector<f64> {
    let dim = v.first().map_or(0, |x| x.len());
    v.iter().fold(DVector::zeros(dim), |acc, x| acc + x)
}

/// Second-order term of 2[E_log(Y) - E_log(X)] at a two-simplex split, as a
/// quadratic form in the tangent part of `bundle`.
pub fn quadratic_form_d(config: &SphericalConfig, bundle: &PerturbationBundle) -> Result<QuadraticForm> {
    let frame = TwoSimplexFrame::detect(config)?;
    Ok(quadratic_form_in_frame(config, &frame, bundle))
}

pub fn quadratic_form_in_frame(
    config: &SphericalConfig,
    frame: &TwoSimplexFrame,
    bundle: &PerturbationBundle,
) -> QuadraticForm {
    let tangent = bundle.tangent(config);
    let comp = frame.decompose(config, &tangent);
    let m = frame.m() as f64;
    let n = frame.n() as f64;

    let mut d1 = 0.0;
    for i in 0..frame.m() {
        for j in i + 1..frame.m() {
            let s = comp.p[i].dot(&comp.a[j]) + comp.p[j].dot(&comp.a[i]);
            d1 += s * s;
        }
    }
    d1 = ((m - 1.0) / m).powi(2) * d1 - vsum(&comp.a).norm_squared() / m;

    let mut d2 = 0.0;
    for i in 0..frame.n() {
        for j in i + 1..frame.n() {
            let s = comp.q[i].dot(&comp.d[j]) + comp.q[j].dot(&comp.d[i]);
            d2 += s * s;
        }
    }
    d2 = ((n - 1.0) / n).powi(2) * d2 - vsum(&comp.d).norm_squared() / n;

    let mut d3 = 0.0;
    for i in 0..frame.m() {
        for j in 0..frame.n() {
            let s = comp.p[i].dot(&comp.c[j]) + comp.q[j].dot(&comp.b[i]);
            d3 += s * s;
        }
    }
    d3 -= vsum(&comp.b).norm_squared() / m + vsum(&comp.c).norm_squared() / n;

    let total = vsum(&tangent.h).norm_squared();
    QuadraticForm { d: total + d1 + d2 + d3, d1, d2, d3 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondOrderSample {
    pub eps: f64,
    /// 2 [E(Y) - E(X)]
    pub twice_delta_e: f64,
    pub d: f64,
    /// |2 dE - D| / eps^3
    pub ratio: f64,
}

/// Compares 2[E(Y) - E(X)] against D for the bundle rescaled to each eps.
pub fn second_order_check(
    config: &SphericalConfig,
    bundle: &PerturbationBundle,
    eps_list: &[f64],
) -> Result<Vec<SecondOrderSample>> {
    let frame = TwoSimplexFrame::detect(config)?;
    let e0 = energy(config, PotentialKind::Log)?;
    let tangent = bundle.tangent(config);
    eps_list
        .iter()
        .map(|&eps| {
            let scaled = tangent.scaled_to(eps);
            let y = scaled.apply(config)?;
            let twice_delta_e = 2.0 * (energy(&y, PotentialKind::Log)? - e0);
            let d = quadratic_form_in_frame(config, &frame, &scaled).d;
            Ok(SecondOrderSample { eps, twice_delta_e, d, ratio: (twice_delta_e - d).abs() / eps.powi(3) })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct EscapeResult {
    pub config: SphericalConfig,
    pub energy_delta: f64,
    /// The rotated pair and the witness point.
    pub pair: (usize, usize),
    pub witness: usize,
}

/// Rotates a pair x_i, x_j of a degenerate configuration oppositely by
/// `theta` out of its span. With m = (x_i + x_j)/2, w = (x_i - x_j)/2 and e
/// a unit normal to the span,
///
///   x_i' = m + cos(theta) w + sin(theta) |w| e,   x_j' = m - cos(theta) w - sin(theta) |w| e.
///
/// The pair is chosen to maximize |x_i . x_k - x_j . x_k| over witnesses k,
/// which makes the energy drop for every strictly convex h and theta in (0, pi).
pub fn degenerate_escape(config: &SphericalConfig, kind: PotentialKind, theta: f64) -> Result<EscapeResult> {
    let d = config.dim();
    let n = config.len();
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("theta = {theta} not in (0, pi)")));
    }
    let normals = linalg::orthogonal_complement(config.points(), d, 1e-8);
    if normals.is_empty() {
        return Err(Error::NotDegenerate);
    }
    if n < d + 2 {
        return Err(Error::NotApplicable(format!("needs N >= d + 2, got N = {n}, d = {d}")));
    }
    if !kind.is_strictly_convex() {
        return Err(Error::NotApplicable(format!("potential {kind} is not strictly convex")));
    }
    let g = config.gram();
    let mut best = (0usize, 0usize, 0usize, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            for k in (0..n).filter(|&k| k != i && k != j) {
                let diff = (g[(i, k)] - g[(j, k)]).abs();
                if diff > best.3 {
                    best = (i, j, k, diff);
                }
            }
        }
    }
    let (i, j, witness, diff) = best;
    if diff < 1e-12 {
        return Err(Error::NotApplicable("all adjacent edges have equal length".into()));
    }
    let e = &normals[0];
    let mid = (config.point(i) + config.point(j)) * 0.5;
    let half = (config.point(i) - config.point(j)) * 0.5;
    let r = half.norm();
    let (s, c) = theta.sin_cos();
    let mut pts = config.points().to_vec();
    pts[i] = (&mid + &half * c + e * (s * r)).normalize();
    pts[j] = (&mid - &half * c - e * (s * r)).normalize();
    let moved = SphericalConfig::with_unit_tol(d, pts, config.label().map(String::from), 1e-10)?;
    let energy_delta = energy(&moved, kind)? - energy(config, kind)?;
    Ok(EscapeResult { config: moved, energy_delta, pair: (i, j), witness })
}

/// Closed interval of admissible path parameters for a {1,k,m} pyramid.
pub fn pyramid_bracket(k: usize, m: usize) -> (f64, f64) {
    let s = (k + m) as f64;
    (-1.0 / (m as f64 * s), 1.0 / (k as f64 * s))
}

fn check_path_args(k: usize, m: usize, t: f64) -> Result<()> {
    if k < 2 || m < 2 {
        return Err(Error::InvalidArgument(format!("pyramid path needs k, m >= 2, got {k}, {m}")));
    }
    let (lo, hi) = pyramid_bracket(k, m);
    let slack = 1e-15;
    if !(t >= lo - slack && t <= hi + slack) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// The {1,k,m} pyramid in R^{k+m-1} with its two blocks moved to heights
/// -1/(k+m) - m t and -1/(k+m) + k t; the apex stays at the pole.
pub fn pyramid_path(k: usize, m: usize, t: f64) -> Result<SphericalConfig> {
    check_path_args(k, m, t)?;
    let dim = k + m - 1;
    let s = 1.0 / (k + m) as f64;
    let hy = -s - m as f64 * t;
    let hz = -s + k as f64 * t;
    let ry = (1.0 - hy * hy).max(0.0).sqrt();
    let rz = (1.0 - hz * hz).max(0.0).sqrt();
    let mut apex = DVector::zeros(dim);
    apex[dim - 1] = 1.0;
    let mut pts = vec![apex];
    for y in simplex_vertices(k) {
        let mut p = DVector::zeros(dim);
        p.rows_mut(0, k - 1).copy_from(&(y * ry));
        p[dim - 1] = hy;
        pts.push(p);
    }
    for z in simplex_vertices(m) {
        let mut p = DVector::zeros(dim);
        p.rows_mut(k - 1, m - 1).copy_from(&(z * rz));
        p[dim - 1] = hz;
        pts.push(p);
    }
    SphericalConfig::new(dim, pts, Some(format!("pyramid_path(k={k},m={m},t={t})")))
}

/// f(t) = -sum_{i<j} log(1 - x_i . x_j) along [`pyramid_path`], in closed form.
pub fn pyramid_f(k: usize, m: usize, t: f64) -> f64 {
    let (kf, mf) = (k as f64, m as f64);
    let s = 1.0 / (kf + mf);
    let u = s + mf * t;
    let w = s - kf * t;
    kf * (kf + 1.0) / 2.0 * (1.0 / (1.0 + u)).ln()
        + kf * (kf - 1.0) / 2.0 * ((kf - 1.0) / kf / (1.0 - u)).ln()
        + mf * (mf + 1.0) / 2.0 * (1.0 / (1.0 + w)).ln()
        + mf * (mf - 1.0) / 2.0 * ((mf - 1.0) / mf / (1.0 - w)).ln()
        + kf * mf * (1.0 / (1.0 - u * w)).ln()
}

/// f'(t) in closed form.
pub fn pyramid_f_prime(k: usize, m: usize, t: f64) -> f64 {
    let (kf, mf) = (k as f64, m as f64);
    let s = 1.0 / (kf + mf);
    let u = s + mf * t;
    let w = s - kf * t;
    let lead = kf * mf * (mf + kf) * t * u * (kf * t - s) / (1.0 - u * w);
    lead * (mf / (1.0 - u * u) + kf / (1.0 - w * w))
}

/// sign(t (m t + 1/(k+m)) (k t - 1/(k+m))).
pub fn pyramid_derivative_sign(k: usize, m: usize, t: f64) -> i8 {
    let s = 1.0 / (k + m) as f64;
    let v = t * (m as f64 * t + s) * (k as f64 * t - s);
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    /// Closed form, shifted to the -log|x - y| ordered-pair convention.
    pub energy: f64,
    /// Log energy recomputed from the points.
    pub energy_direct: f64,
    pub derivative_sign: i8,
}

pub fn pyramid_energy(k: usize, m: usize, t: f64) -> Result<PathSample> {
    let cfg = pyramid_path(k, m, t)?;
    let n = (k + m + 1) as f64;
    let shift = n * (n - 1.0) / 2.0 * std::f64::consts::LN_2;
    Ok(PathSample {
        t,
        energy: pyramid_f(k, m, t) - shift,
        energy_direct: energy(&cfg, PotentialKind::Log)?,
        derivative_sign: pyramid_derivative_sign(k, m, t),
    })
}

/// Sum_{i<j} (M_ij + M_ji)^2 - (1/(m-2)) sum_j (column sum j)^2 for an m x m
/// matrix with zero diagonal and zero row sums; nonnegative.
pub fn lemma51_gap(mat: &DMatrix<f64>) -> Result<f64> {
    let m = mat.nrows();
    if mat.ncols() != m {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if m < 3 {
        return Err(Error::InvalidArgument(format!("need m >= 3, got {m}")));
    }
    let scale = mat.amax().max(1.0);
    if (0..m).any(|i| mat[(i, i)].abs() > 1e-12 * scale) {
        return Err(Error::InvalidArgument("diagonal must vanish".into()));
    }
    if mat.row_iter().any(|r| r.sum().abs() > 1e-12 * scale * m as f64) {
        return Err(Error::InvalidArgument("row sums must vanish".into()));
    }
    let mut lhs = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let s = mat[(i, j)] + mat[(j, i)];
            lhs += s * s;
        }
    }
    let cols: f64 = mat.column_iter().map(|c| c.sum().powi(2)).sum();
    Ok(lhs - cols / (m as f64 - 2.0))
}

/// Sum_{i,j} (F_ij + G_ji)^2 - (1/m) sum_j y_j^2 - (1/n) sum_i z_i^2 with y, z
/// the column sums of F (m x n) and G (n x m), both with zero row sums.
pub fn lemma52_gap(f: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    let (m, n) = f.shape();
    if g.shape() != (n, m) {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: F is {m}x{n} but G is {}x{}",
            g.nrows(),
            g.ncols()
        )));
    }
    let scale = f.amax().max(g.amax()).max(1.0);
    let bad = |x: &DMatrix<f64>| x.row_iter().any(|r| r.sum().abs() > 1e-12 * scale * x.ncols() as f64);
    if bad(f) || bad(g) {
        return Err(Error::InvalidArgument("row sums must vanish".into()));
    }
    let mut lhs = 0.0;
    for i in 0..m {
        for j in 0..n {
            let s = f[(i, j)] + g[(j, i)];
            lhs += s * s;
        }
    }
    let y: f64 = f.column_iter().map(|c| c.sum().powi(2)).sum();
    let z: f64 = g.column_iter().map(|c| c.sum().powi(2)).sum();
    Ok(lhs - y / m as f64 - z / n as f64)
}

fn center_rows(x: &mut DMatrix<f64>, skip_diagonal: bool) {
    for i in 0..x.nrows() {
        let cols: Vec<usize> = (0..x.ncols()).filter(|&j| !(skip_diagonal && j == i)).collect();
        let mean = cols.iter().map(|&j| x[(i, j)]).sum::<f64>() / cols.len() as f64;
        for &j in &cols {
            x[(i, j)] -= mean;
        }
    }
}

/// Gaussian m x m matrix projected onto zero diagonal and zero row sums.
pub fn random_lemma51_input(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut x = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { StandardNormal.sample(rng) });
    center_rows(&mut x, true);
    x
}

/// Gaussian F (m x n) and G (n x m) projected onto zero row sums.
pub fn random_lemma52_input(m: usize, n: usize, rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut f = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng));
    let mut g = DMatrix::from_fn(n, m, |_, _| StandardNormal.sample(rng));
    center_rows(&mut f, false);
    center_rows(&mut g, false);
    (f, g)
}
