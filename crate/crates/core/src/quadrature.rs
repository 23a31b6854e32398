//! Adaptive Simpson quadrature on piecewise-smooth integrands.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 8;

/// Outcome of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error (Richardson bound summed over accepted panels).
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    integrate_pieces(f, &[a, b], tol)
}

/// Integrates `f` over `[cuts[0], cuts[last]]`, treating each consecutive pair of
/// `cuts` as a separate smooth piece. Cuts must be nondecreasing; the integrand is
/// never evaluated at a cut, only strictly inside or at the open-side limit through
/// panel endpoints, so jumps at cuts do not disturb the error estimate.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, cuts: &[f64], tol: f64) -> Result<Integral> {
    let pieces: Vec<(f64, f64)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1]))
        .collect();
    let mut out = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    if pieces.is_empty() {
        return Ok(out);
    }
    let span: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let mut missed = false;
    for (a, b) in pieces {
        // Sample each panel endpoint slightly inside the piece so that a jump
        // located exactly at a cut is seen from the correct side.
        let inset = (b - a) * 1e-14;
        let lo = a + inset;
        let hi = b - inset;
        let h = (b - a) / INITIAL_PANELS as f64;
        let piece_tol = tol * (b - a) / span;
        for k in 0..INITIAL_PANELS {
            let pa = a + k as f64 * h;
            let pb = if k + 1 == INITIAL_PANELS { b } else { pa + h };
            let ea = if k == 0 { lo } else { pa };
            let eb = if k + 1 == INITIAL_PANELS { hi } else { pb };
            let fa = f(ea);
            let fb = f(eb);
            let fm = f(0.5 * (pa + pb));
            out.evaluations += 3;
            let panel = Panel {
                a: pa,
                b: pb,
                fa,
                fm,
                fb,
                whole: simpson(pa, pb, fa, fm, fb),
            };
            let (v, e, ok) = refine(&mut f, panel, piece_tol / INITIAL_PANELS as f64, MAX_DEPTH, &mut out.evaluations);
            out.value += v;
            out.error += e;
            missed |= !ok;
        }
    }
    if missed && out.error > tol {
        return Err(Error::Quadrature {
            tolerance: tol,
            achieved: out.error,
        });
    }
    Ok(out)
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, p: Panel, tol: f64, depth: u32, evals: &mut usize) -> (f64, f64, bool) {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let diff = left + right - p.whole;
    if diff.abs() <= 15.0 * tol {
        return (left + right + diff / 15.0, diff.abs() / 15.0, true);
    }
    if depth == 0 {
        return (left + right + diff / 15.0, diff.abs() / 15.0, false);
    }
    let l = refine(
        f,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        0.5 * tol,
        depth - 1,
        evals,
    );
    let r = refine(
        f,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        0.5 * tol,
        depth - 1,
        evals,
    );
    (l.0 + r.0, l.1 + r.1, l.2 && r.2)
}
