//! Adaptive Simpson quadrature for the sharply peaked rational spectra this
//! crate integrates. Callers seed the subdivision with breakpoints at known
//! pole locations so the recursion finds narrow resonances.

use crate::{Error, Result};

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::Quadrature(format!(
            "integrand not finite on [{a}, {b}] (f({lm}) = {flm}, f({rm}) = {frm})"
        )));
    }
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "maximum recursion depth {MAX_DEPTH} reached on [{a}, {b}], residual error {:.3e}",
            delta.abs() / 15.0
        )));
    }
    let l = adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

fn integrate_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
        return Err(Error::Quadrature(format!("integrand not finite at panel [{a}, {b}]")));
    }
    adapt(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)
}

/// Integrate `f` over `[a, b]` to relative tolerance `rel_tol`, splitting the
/// interval first at the supplied interior `breakpoints`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    if !(b > a) {
        return Err(Error::invalid(format!("integration bounds reversed: [{a}, {b}]")));
    }
    let mut edges = vec![a];
    let mut points: Vec<f64> = breakpoints.iter().copied().filter(|x| *x > a && *x < b).collect();
    points.sort_by(|x, y| x.partial_cmp(y).unwrap());
    edges.extend(points);
    edges.push(b);

    // First pass with a coarse absolute tolerance to estimate the magnitude,
    // then refine against the requested relative tolerance.
    let mut rough = 0.0;
    for w in edges.windows(2) {
        rough += integrate_panel(&f, w[0], w[1], f64::MAX.min(1e300))?;
    }
    let scale = rough.abs().max(f64::MIN_POSITIVE);
    let tol_per_panel = rel_tol * scale / edges.len() as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate_panel(&f, w[0], w[1], tol_per_panel)?;
    }
    Ok(total)
}
