//! Hessian spectra and Morse indices of critical configurations, in the
//! gauge-fixed chart on Conf(3,5) and, for any d, in an orthonormal tangent
//! basis with the rotation orbit projected out.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{spherical_point, Conf35Coords, SphericalConfig};
use crate::linalg;
use crate::potentials::{energy_of_points, riemannian_grad_norm, PotentialKind};

pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Relative zero threshold: eigenvalues within this fraction of the largest are null.
pub const ZERO_RTOL: f64 = 1e-6;
/// Chart gradient bound for [`hessian_conf35`].
pub const CHART_STATIONARY_TOL: f64 = 1e-6;
/// Riemannian gradient bound for [`morse_index_general`].
pub const GENERAL_STATIONARY_TOL: f64 = 1e-8;
const GAUGE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    /// Rotation directions projected out (0 in the chart).
    pub orbit_dim: usize,
    pub zero_tol: f64,
}

impl MorseReport {
    fn from_spectrum(eigenvalues: Vec<f64>, orbit_dim: usize, zero_tol: Option<f64>) -> Self {
        let max = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let zero_tol = zero_tol.unwrap_or(ZERO_RTOL * max);
        let index = eigenvalues.iter().filter(|&&e| e < -zero_tol).count();
        let nullity = eigenvalues.iter().filter(|&&e| e.abs() <= zero_tol).count();
        MorseReport { eigenvalues, index, nullity, orbit_dim, zero_tol }
    }
}

fn chart_points(v: &[f64; 7]) -> Vec<DVector<f64>> {
    let angle = |k: usize| match k {
        0 => (0.0, 0.0),
        1 => (0.0, v[0]),
        _ => (v[2 * k - 3], v[2 * k - 2]),
    };
    (0..5)
        .map(|k| {
            let (phi, theta) = angle(k);
            DVector::from_column_slice(spherical_point(phi, theta).as_slice())
        })
        .collect()
}

fn chart_energy_raw(v: &[f64; 7]) -> Result<f64> {
    energy_of_points(&chart_points(v), PotentialKind::Log)
}

/// E_log of the five points described by `v`.
pub fn energy_in_chart(v: &Conf35Coords) -> Result<f64> {
    chart_energy_raw(&v.v)
}

fn shifted(v: &[f64; 7], moves: &[(usize, f64)]) -> [f64; 7] {
    let mut w = *v;
    for &(k, h) in moves {
        w[k] += h;
    }
    w
}

/// Central-difference gradient of [`energy_in_chart`].
pub fn chart_gradient(v: &Conf35Coords, fd_step: f64) -> Result<[f64; 7]> {
    let mut g = [0.0; 7];
    for (k, gk) in g.iter_mut().enumerate() {
        let fp = chart_energy_raw(&shifted(&v.v, &[(k, fd_step)]))?;
        let fm = chart_energy_raw(&shifted(&v.v, &[(k, -fd_step)]))?;
        *gk = (fp - fm) / (2.0 * fd_step);
    }
    Ok(g)
}

fn check_gauge(v: &Conf35Coords) -> Result<()> {
    for (p, k) in v.theta_indices().into_iter().enumerate() {
        if v.v[k].sin().abs() < GAUGE_TOL {
            return Err(Error::GaugeSingular(format!("point {} sits on the polar axis", p + 2)));
        }
    }
    Ok(())
}

fn check_fd_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::InvalidArgument(format!("fd_step = {h} must lie in (0, 0.1)")));
    }
    Ok(())
}

/// Symmetrized central-difference Hessian of a scalar function of p variables.
fn fd_hessian<F>(p: usize, h: f64, f: F) -> Result<DMatrix<f64>>
where
    F: Fn(&[(usize, f64)]) -> Result<f64> + Sync,
{
    let f0 = f(&[])?;
    let rows: Vec<Result<Vec<f64>>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; p];
            for (j, r) in row.iter_mut().enumerate().skip(i) {
                *r = if i == j {
                    (f(&[(i, h)])? - 2.0 * f0 + f(&[(i, -h)])?) / (h * h)
                } else {
                    (f(&[(i, h), (j, h)])? - f(&[(i, h), (j, -h)])? - f(&[(i, -h), (j, h)])?
                        + f(&[(i, -h), (j, -h)])?)
                        / (4.0 * h * h)
                };
            }
            Ok(row)
        })
        .collect();
    let mut hess = DMatrix::zeros(p, p);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, val) in row?.into_iter().enumerate().skip(i) {
            hess[(i, j)] = val;
            hess[(j, i)] = val;
        }
    }
    Ok(hess)
}

/// 7 x 7 Hessian of the chart energy at a near-critical point.
pub fn hessian_conf35(v: &Conf35Coords, fd_step: f64) -> Result<DMatrix<f64>> {
    check_fd_step(fd_step)?;
    check_gauge(v)?;
    let g = chart_gradient(v, fd_step.min(1e-5))?;
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if gn > CHART_STATIONARY_TOL {
        return Err(Error::NonStationary(gn));
    }
    fd_hessian(7, fd_step, |moves| chart_energy_raw(&shifted(&v.v, moves)))
}

/// Morse index and nullity in the chart. `zero_tol = None` uses
/// [`ZERO_RTOL`] times the largest eigenvalue magnitude.
pub fn morse_index_conf35(v: &Conf35Coords, fd_step: f64, zero_tol: Option<f64>) -> Result<MorseReport> {
    let h = hessian_conf35(v, fd_step)?;
    let (eig, _) = linalg::sorted_symmetric_eigen(&h);
    Ok(MorseReport::from_spectrum(eig, 0, zero_tol))
}

/// Orthonormal basis of T_x S^{d-1} for every point, as (point, direction) pairs.
fn tangent_basis(config: &SphericalConfig) -> Vec<(usize, DVector<f64>)> {
    let d = config.dim();
    config
        .points()
        .iter()
        .enumerate()
        .flat_map(|(i, x)| {
            linalg::orthogonal_complement(std::slice::from_ref(x), d, 1e-12).into_iter().map(move |e| (i, e))
        })
        .collect()
}

/// Morse index of E at a critical configuration in (S^{d-1})^N.
///
/// The Hessian of E composed with the radial retraction is taken by central
/// differences in an orthonormal tangent basis; the span of the rotation
/// generators (W x_1, .., W x_N), W skew, is then projected out.
pub fn morse_index_general(
    config: &SphericalConfig,
    kind: PotentialKind,
    fd_step: f64,
    zero_tol: Option<f64>,
) -> Result<MorseReport> {
    check_fd_step(fd_step)?;
    let gn = riemannian_grad_norm(config, kind)?;
    if gn > GENERAL_STATIONARY_TOL {
        return Err(Error::NonStationary(gn));
    }
    let d = config.dim();
    let basis = tangent_basis(config);
    let p = basis.len();
    let base = config.points();
    let energy_at = |moves: &[(usize, f64)]| {
        let mut pts = base.to_vec();
        for &(k, h) in moves {
            let (i, e) = &basis[k];
            pts[*i].axpy(h, e, 1.0);
        }
        for x in pts.iter_mut() {
            x.normalize_mut();
        }
        energy_of_points(&pts, kind)
    };
    let hess = fd_hessian(p, fd_step, energy_at)?;

    let mut generators = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            let coeffs = DVector::from_iterator(
                p,
                basis.iter().map(|(i, e)| {
                    let x = &base[*i];
                    // e . (E_ab - E_ba) x
                    e[a] * x[b] - e[b] * x[a]
                }),
            );
            generators.push(coeffs);
        }
    }
    let orbit = linalg::orthonormal_basis(&generators, 1e-8);
    let orbit_dim = orbit.len();
    let complement = linalg::orthogonal_complement(&orbit, p, 1e-8);
    let q = DMatrix::from_columns(&complement);
    let reduced = q.transpose() * &hess * &q;
    let (eig, _) = linalg::sorted_symmetric_eigen(&reduced);
    Ok(MorseReport::from_spectrum(eig, orbit_dim, zero_tol))
}
