//! Riesz s-energy of the triangular bi-pyramid against the square pyramid
//! with optimized base height, and the crossover between them.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{orthogonal_simplexes, square_pyramid_fp, PartitionType};
use crate::potentials::{energy, euclidean_gradient, PotentialKind};

/// Search interval for the base height.
pub const HEIGHT_LO: f64 = -1.0 + 1e-6;
pub const HEIGHT_HI: f64 = 1.0 - 1e-6;
pub const HEIGHT_TOL: f64 = 1e-12;
pub const CROSSOVER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub e_tbp: f64,
    pub t_star: f64,
    pub e_fp_opt: f64,
    /// e_tbp - e_fp_opt
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Root of the gap inside the first sign change of the grid.
    pub crossover: Option<f64>,
}

impl SweepResult {
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("s,e_tbp,t_star,e_fp_opt,gap\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.digits$},{:.digits$},{:.digits$},{:.digits$},{:.digits$e}\n",
                r.s, r.e_tbp, r.t_star, r.e_fp_opt, r.gap
            ));
        }
        out
    }
}

fn check_s(s: f64) -> Result<PotentialKind> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("Riesz exponent s = {s} must be positive")));
    }
    PotentialKind::riesz(s)
}

/// Riesz s-energy of the bi-pyramid.
pub fn tbp_energy(s: f64) -> Result<f64> {
    let kind = check_s(s)?;
    energy(&orthogonal_simplexes(&PartitionType::new(vec![3, 2])?)?, kind)
}

/// Energy of the square pyramid with base height `t`.
pub fn fp_energy(s: f64, t: f64) -> Result<f64> {
    energy(&square_pyramid_fp(t)?, check_s(s)?)
}

/// dE/dt along the height family, from the Euclidean gradient.
pub fn fp_energy_derivative(s: f64, t: f64) -> Result<f64> {
    let cfg = square_pyramid_fp(t)?;
    let g = euclidean_gradient(&cfg, check_s(s)?)?;
    let r = (1.0 - t * t).sqrt();
    let mut out = 0.0;
    for (x, gi) in cfg.points().iter().zip(&g).skip(1) {
        // d/dt (r cos a, r sin a, t) = (-t/r cos a, -t/r sin a, 1)
        out += gi[0] * (-t / r) * x[0] / r + gi[1] * (-t / r) * x[1] / r + gi[2];
    }
    Ok(out)
}

/// Minimizes the square-pyramid energy over the base height.
///
/// Golden-section search narrows the minimizer, then bisection on the
/// analytic derivative pins it down; near the minimum the energy itself is
/// flat to rounding well before the step reaches [`HEIGHT_TOL`].
pub fn fp_optimal_height(s: f64) -> Result<(f64, f64)> {
    check_s(s)?;
    let f = |t: f64| fp_energy(s, t);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (HEIGHT_LO, HEIGHT_HI);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
    }
    let (mut lo, mut hi) = (a, b);
    let df = |t: f64| fp_energy_derivative(s, t);
    let (mut dlo, dhi) = (df(lo)?, df(hi)?);
    if dlo < 0.0 && dhi > 0.0 {
        while hi - lo > HEIGHT_TOL {
            let mid = 0.5 * (lo + hi);
            let dm = df(mid)?;
            if dm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if dm.signum() == dlo.signum() {
                lo = mid;
                dlo = dm;
            } else {
                hi = mid;
            }
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t, f(t)?))
}

/// E_s(TBP) - min_t E_s(FP(t)); negative where the bi-pyramid wins.
pub fn riesz_gap(s: f64) -> Result<f64> {
    Ok(tbp_energy(s)? - fp_optimal_height(s)?.1)
}

fn row(s: f64) -> Result<SweepRow> {
    let e_tbp = tbp_energy(s)?;
    let (t_star, e_fp_opt) = fp_optimal_height(s)?;
    Ok(SweepRow { s, e_tbp, t_star, e_fp_opt, gap: e_tbp - e_fp_opt })
}

/// Bisects the sign change of [`riesz_gap`] on [lo, hi] to [`CROSSOVER_TOL`].
pub fn find_crossover(lo: f64, hi: f64) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::BracketInvalid { lo, hi });
    }
    bisect_gap(lo, riesz_gap(lo)?, hi, riesz_gap(hi)?)
}

fn bisect_gap(mut lo: f64, glo: f64, mut hi: f64, ghi: f64) -> Result<f64> {
    if glo.signum() == ghi.signum() || glo == 0.0 || ghi == 0.0 {
        if glo == 0.0 {
            return Ok(lo);
        }
        if ghi == 0.0 {
            return Ok(hi);
        }
        return Err(Error::BracketInvalid { lo, hi });
    }
    let sign_lo = glo.signum();
    while hi - lo > CROSSOVER_TOL {
        let mid = 0.5 * (lo + hi);
        let g = riesz_gap(mid)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if g.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Evaluates the comparison on s = from, from + step, .., <= to.
pub fn sweep(from: f64, to: f64, step: f64) -> Result<SweepResult> {
    if !(step > 0.0 && step.is_finite() && from > 0.0 && from <= to) {
        return Err(Error::InvalidArgument(format!("bad sweep grid from={from} to={to} step={step}")));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    let rows = (0..count)
        .into_par_iter()
        .map(|i| row(from + step * i as f64))
        .collect::<Result<Vec<_>>>()?;
    let crossover = match rows.windows(2).find(|w| w[0].gap.signum() != w[1].gap.signum()) {
        Some(w) => Some(bisect_gap(w[0].s, w[0].gap, w[1].s, w[1].gap)?),
        None => None,
    };
    Ok(SweepResult { rows, crossover })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::riemannian_grad_norm;

    #[test]
    fn derivative_matches_differences() {
        for (s, t) in [(1.0, -0.2), (6.0, 0.1), (16.0, -0.05)] {
            let h = 1e-6;
            let fd = (fp_energy(s, t + h).unwrap() - fp_energy(s, t - h).unwrap()) / (2.0 * h);
            let an = fp_energy_derivative(s, t).unwrap();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} {an}");
        }
    }

    #[test]
    fn optimal_height_is_stationary() {
        for s in [1.0, 2.0, 8.0, 16.0] {
            let (t, _) = fp_optimal_height(s).unwrap();
            assert!(t > -1.0 && t < 0.0);
            assert!(fp_energy_derivative(s, t).unwrap().abs() < 1e-8);
            let g = riemannian_grad_norm(&square_pyramid_fp(t).unwrap(), PotentialKind::riesz(s).unwrap()).unwrap();
            assert!(g < 1e-8, "s={s} grad={g}");
        }
    }

    #[test]
    fn gap_signs() {
        assert!(riesz_gap(1.0).unwrap() < 0.0);
        assert!(riesz_gap(2.0).unwrap() < 0.0);
        assert!(riesz_gap(15.0).unwrap() < 0.0);
        assert!(riesz_gap(15.1).unwrap() > 0.0);
        assert!(riesz_gap(16.0).unwrap() > 0.0);
        assert!(riesz_gap(0.0).is_err());
    }

    #[test]
    fn crossover_brackets() {
        let a = find_crossover(15.0, 15.1).unwrap();
        assert!((a - 15.048081).abs() < 1e-3, "{a}");
        let b = find_crossover(14.0, 16.0).unwrap();
        assert!((a - b).abs() < 1e-6);
        assert!(matches!(find_crossover(1.0, 2.0), Err(Error::BracketInvalid { .. })));
    }

    #[test]
    fn sweep_grid() {
        let r = sweep(14.0, 16.0, 0.1).unwrap();
        assert_eq!(r.rows.len(), 21);
        assert!(r.rows.windows(2).all(|w| w[1].gap > w[0].gap && w[1].s > w[0].s));
        assert!((r.crossover.unwrap() - 15.048081).abs() < 1e-3);
        assert!(sweep(1.0, 3.0, 1.0).unwrap().crossover.is_none());
        assert!(sweep(1.0, 3.0, 0.0).is_err());
        assert_eq!(r.to_csv(6).lines().count(), 22);
    }
}
