//! Numerical workhorses: adaptive Dormand-Prince 5(4) integration, bisection,
//! and adaptive Simpson quadrature.

use nalgebra::SVector;

use crate::error::{Error, Result};

/// Options for the adaptive integrator.
#[derive(Debug, Clone)]
pub struct OdeOptions<const N: usize> {
    /// Relative tolerance on the embedded error estimate.
    pub rtol: f64,
    /// Per-component absolute tolerance floor.
    pub atol: SVector<f64, N>,
    /// Hard cap on the step size (s).
    pub max_dt: f64,
    /// Abort after this many accepted+rejected steps.
    pub max_steps: usize,
}

impl<const N: usize> OdeOptions<N> {
    pub fn new(rtol: f64, atol: SVector<f64, N>, max_dt: f64) -> Self {
        Self {
            rtol,
            atol,
            max_dt,
            max_steps: 200_000_000,
        }
    }
}

/// Integrator statistics.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct OdeStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    /// Largest accepted scaled error estimate (<= 1 by construction).
    pub max_residual: f64,
}

/// One accepted step with derivatives at both endpoints, for dense output.
pub struct Step<'a, const N: usize> {
    pub t0: f64,
    pub y0: &'a SVector<f64, N>,
    pub f0: &'a SVector<f64, N>,
    pub t1: f64,
    pub y1: &'a SVector<f64, N>,
    pub f1: &'a SVector<f64, N>,
}

impl<const N: usize> Step<'_, N> {
    /// Cubic Hermite interpolation inside the step.
    pub fn interpolate(&self, t: f64) -> SVector<f64, N> {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        self.y0 * h00 + self.f0 * (h10 * h) + self.y1 * h01 + self.f1 * (h11 * h)
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C_NODES: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate dy/dt = rhs(t, y) from `t0` to `t_end` with the adaptive
/// Dormand-Prince 5(4) pair. `on_step` is called after every accepted step
/// with both endpoints, enabling dense output without storing the path.
pub fn integrate<const N: usize>(
    rhs: impl Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    opts: &OdeOptions<N>,
    mut on_step: impl FnMut(Step<'_, N>),
) -> Result<(SVector<f64, N>, OdeStats)> {
    let mut stats = OdeStats::default();
    if t_end == t0 {
        return Ok((y0, stats));
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut f = rhs(t, &y);
    stats.rhs_evals += 1;

    // Initial step: conservative fraction of the span, bounded by max_dt.
    let mut h = (span / 100.0).min(opts.max_dt);
    let mut k = [SVector::<f64, N>::zeros(); 7];

    loop {
        if stats.accepted_steps + stats.rejected_steps >= opts.max_steps {
            return Err(Error::numerical(format!(
                "integrator exceeded {} steps at t = {t:e}",
                opts.max_steps
            )));
        }
        let remaining = (t_end - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        h = h.min(remaining).min(opts.max_dt);
        if h < 1e-15 * t.abs().max(span) {
            return Err(Error::numerical(format!(
                "step size underflow at t = {t:e}; the problem is too stiff at this \
                 displacement (try a smaller trap-relative initial displacement)"
            )));
        }
        let hd = h * dir;

        k[0] = f;
        for stage in 0..6 {
            let mut acc = SVector::<f64, N>::zeros();
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                let a = A[stage][j];
                if a != 0.0 {
                    acc += kj * a;
                }
            }
            k[stage + 1] = rhs(t + C_NODES[stage] * hd, &(y + acc * hd));
        }
        stats.rhs_evals += 6;

        // 5th-order solution is the last A row (FSAL); error vs 4th order.
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[5][j] != 0.0 {
                y5 += kj * (A[5][j] * hd);
            }
        }
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            if B4[j] != 0.0 {
                y4 += kj * (B4[j] * hd);
            }
        }

        let mut err: f64 = 0.0;
        for i in 0..N {
            let scale = opts.atol[i] + opts.rtol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / scale;
            err += e * e;
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let f1 = k[6]; // FSAL: rhs at (t + hd, y5)
            on_step(Step {
                t0: t,
                y0: &y,
                f0: &f,
                t1: t + hd,
                y1: &y5,
                f1: &f1,
            });
            t += hd;
            y = y5;
            f = f1;
            stats.accepted_steps += 1;
            stats.max_residual = stats.max_residual.max(err);
        } else {
            stats.rejected_steps += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y, stats))
}

/// Bisection on a sign change of `f` over [a, b], to relative tolerance
/// `rel_tol` on the root location.
pub fn bisect(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::infeasible(format!(
            "no sign change in [{a:e}, {b:e}] (f = {flo:e} .. {fhi:e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= rel_tol * hi.abs().max(lo.abs()) {
            return Ok(0.5 * (lo + hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Adaptive Simpson quadrature of `f` over [a, b] to relative tolerance.
///
/// The interval is pre-split into 32 panels before the adaptive recursion:
/// a single coarse estimate of a localized integrand can agree with its
/// first refinement while both miss the feature entirely.
pub fn integrate_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const PANELS: usize = 32;
    let node = |i: usize| a + (b - a) * i as f64 / (2 * PANELS) as f64;
    let values: Vec<f64> = (0..=2 * PANELS).map(|i| f(node(i))).collect();
    // Magnitude scale from the node samples; localized integrands make any
    // single panel useless for tolerance scaling.
    let l1: f64 = values.iter().map(|v| v.abs()).sum::<f64>() * (b - a)
        / (2 * PANELS + 1) as f64;
    let mut evals = values.len();
    let mut total = 0.0;
    let mut panel_sums = [0.0; PANELS];
    for p in 0..PANELS {
        let (pa, pb) = (node(2 * p), node(2 * p + 2));
        panel_sums[p] =
            (pb - pa) / 6.0 * (values[2 * p] + 4.0 * values[2 * p + 1] + values[2 * p + 2]);
        total += panel_sums[p];
    }
    let scale = l1.max(total.abs()).max(f64::MIN_POSITIVE);
    let eps = rel_tol * scale / PANELS as f64;
    let mut sum = 0.0;
    for p in 0..PANELS {
        sum += simpson_rec(
            f,
            node(2 * p),
            node(2 * p + 2),
            values[2 * p],
            values[2 * p + 2],
            values[2 * p + 1],
            panel_sums[p],
            eps,
            46,
            &mut evals,
        )?;
    }
    Ok(sum)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    eps: f64,
    depth: usize,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > 20_000_000 {
        return Err(Error::numerical("quadrature did not converge"));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        return Err(Error::numerical(
            "quadrature recursion depth exhausted",
        ));
    }
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_rec(f, a, m, fa, fm, flm, left, eps / 2.0, depth - 1, evals)?;
    let r = simpson_rec(f, m, b, fm, fb, frm, right, eps / 2.0, depth - 1, evals)?;
    Ok(l + r)
}
