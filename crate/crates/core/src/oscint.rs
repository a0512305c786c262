//! Oscillatory singular integrals over dyadic shells: the one-dimensional
//! fiber integral with phase `beta P(x, t2)`, the two-dimensional integral
//! with phase `xi1 x1 + xi2 x2 + xi3 P(x1, x2)`, and the smooth cutoffs they
//! are taken against.
//!
//! Two cutoff families are provided. The smooth dyadic family
//! `chi(x / 2^j)` (a standard Littlewood-Paley bump) drives the decay
//! probes; the sharp-window family `chi_j` equals 1 strictly inside a dyadic
//! block, 1/2 at its endpoints, and falls to 0 across width-1 transitions,
//! which makes it the right weight for comparing discrete blocks against
//! integrals.
//!
//! The 2-D evaluator picks between two routes. When the surface phase varies
//! little over a shell rectangle (small `|xi3| sup|P|` after recentering) the
//! exponential is expanded in a short Taylor series, which separates the
//! integral into cached 1-D moments per axis; linear-phase batches (many
//! `(xi1, xi2)` against one `xi3`) share that moment cache. Otherwise a
//! nested adaptive Gauss-Kronrod pass is used, guarded by a hard panel
//! budget: running out flags the result instead of silently degrading.

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::polynomial::Polynomial;
use crate::stats;

/// Sides of the singular kernel to integrate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    TwoSided,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffKind {
    /// `chi(x / 2^j)` with the smooth bump, support `[2^j, 2^{j+2}]`.
    SmoothDyadic,
    /// Sharp dyadic window `chi_j`, support `[2^{j-1} - 1/2, 2^j + 1/2]`.
    SharpWindow,
}

#[derive(Debug, Clone, Copy)]
pub struct OscConfig {
    pub tol: f64,
    pub side: Side,
    pub cutoff: CutoffKind,
}

impl Default for OscConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            side: Side::TwoSided,
            cutoff: CutoffKind::SharpWindow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscIntegralResult {
    pub value: Complex64,
    pub quadrature_error: f64,
    /// False when the panel budget ran out before reaching the tolerance.
    pub converged: bool,
}

impl OscIntegralResult {
    fn exact_zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            quadrature_error: 0.0,
            converged: true,
        }
    }
}

const PANEL_BUDGET: u64 = 1 << 22;

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, strictly increasing with
/// value 1/2 at `u = 1/2`, all derivatives vanishing at both ends.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        // B(u)/(B(u)+B(1-u)) with B(v) = exp(-1/v)
        1.0 / (1.0 + (1.0 / u - 1.0 / (1.0 - u)).exp())
    }
}

/// Smooth bump equal to 1 on `[-1,1]`, 0 outside `[-2,2]`.
pub fn phi(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        smooth_step(2.0 - a)
    }
}

/// `chi(x) = phi(x/2) - phi(x)`: supported on `1 <= |x| <= 4`.
pub fn chi(x: f64) -> f64 {
    phi(x / 2.0) - phi(x)
}

/// Sharp dyadic window: 1 on the open block `(2^{l-1}+1/2, 2^l-1/2)`, exactly
/// 1/2 at `|s| = 2^{l-1}` and `2^l`, 0 beyond the width-1 transitions.
pub fn chi_sharp(ell: u64, s: f64) -> f64 {
    let a = s.abs();
    let lo = if ell == 0 { 0.5 } else { (1u64 << (ell - 1)) as f64 };
    let hi = (1u64 << ell) as f64;
    smooth_step(a - (lo - 0.5)) - smooth_step(a - (hi - 0.5))
}

/// Exact-coefficient polynomial evaluated at a real point.
pub fn poly_real(p: &Polynomial, x1: f64, x2: f64) -> f64 {
    let mut acc = 0.0;
    for t in p.terms() {
        let c = t.coefficient.to_f64().unwrap_or(f64::NAN);
        acc += c * x1.powi(t.exponent.0 as i32) * x2.powi(t.exponent.1 as i32);
    }
    acc
}

// 15-point Kronrod rule with embedded 7-point Gauss (QUADPACK abscissae).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += (f1 + f2) * WGK[i];
        if i % 2 == 1 {
            g += (f1 + f2) * WG[i / 2];
        }
    }
    ((k * h), (k - g).norm() * h.abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    err: f64,
    seq: u64,
    a: f64,
    b: f64,
    val: Complex64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.seq == other.seq
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // max-heap on error, deterministic tiebreak on insertion order
        self.err
            .total_cmp(&other.err)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Worst-first adaptive refinement over seeded panel boundaries.
fn adaptive<F: FnMut(f64) -> Complex64>(
    f: &mut F,
    boundaries: &[f64],
    tol: f64,
    budget: &mut u64,
) -> OscIntegralResult {
    use std::collections::BinaryHeap;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut total_err = 0.0;
    for w in boundaries.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        if *budget == 0 {
            break;
        }
        *budget -= 1;
        let (val, err) = gk15(f, w[0], w[1]);
        total_err += err;
        heap.push(Panel {
            err,
            seq,
            a: w[0],
            b: w[1],
            val,
        });
        seq += 1;
    }
    let converged = loop {
        if total_err <= tol {
            break true;
        }
        if *budget < 2 {
            break false;
        }
        let worst = heap.pop().unwrap();
        total_err -= worst.err;
        let mid = 0.5 * (worst.a + worst.b);
        if worst.err <= tol * 1e-6 || mid <= worst.a || mid >= worst.b {
            // refinement exhausted at floating resolution; keep the estimate
            let mut dead = worst;
            dead.err = 0.0;
            heap.push(dead);
            break true;
        }
        *budget -= 2;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (val, err) = gk15(f, a, b);
            total_err += err;
            heap.push(Panel {
                err,
                seq,
                a,
                b,
                val,
            });
            seq += 1;
        }
    };
    let (value, quadrature_error) = drain(heap);
    OscIntegralResult {
        value,
        quadrature_error,
        converged,
    }
}

fn drain(heap: std::collections::BinaryHeap<Panel>) -> (Complex64, f64) {
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut val = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in panels {
        val += p.val;
        err += p.err;
    }
    (val, err)
}

/// Normalized integration window for one axis: `x = scale * w`.
#[derive(Debug, Clone)]
struct AxisWindow {
    scale: f64,
    /// seeded panel boundaries in `w`, ascending
    breaks: Vec<f64>,
    kind: CutoffKind,
    j: u64,
}

impl AxisWindow {
    fn new(kind: CutoffKind, j: u64) -> Self {
        match kind {
            CutoffKind::SharpWindow => {
                let scale = (1u64 << j) as f64;
                let lo = if j == 0 { 0.5 } else { (1u64 << (j - 1)) as f64 };
                let hi = scale;
                let mut breaks = vec![];
                // transition edges, then a few plateau seeds
                let edges = [lo - 0.5, lo + 0.5, hi - 0.5, hi + 0.5];
                for e in edges {
                    breaks.push(e / scale);
                }
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                // subdivide each transition so the bump is resolved
                let mut seeded = vec![];
                for w in breaks.windows(2) {
                    seeded.push(w[0]);
                    let width = w[1] - w[0];
                    if width <= 1.5 / scale {
                        for k in 1..8 {
                            seeded.push(w[0] + width * k as f64 / 8.0);
                        }
                    }
                }
                seeded.push(*breaks.last().unwrap());
                Self {
                    scale,
                    breaks: seeded,
                    kind,
                    j,
                }
            }
            CutoffKind::SmoothDyadic => {
                let scale = (1u64 << (j + 2)) as f64;
                Self {
                    scale,
                    breaks: vec![0.25, 0.375, 0.5, 0.75, 1.0],
                    kind,
                    j,
                }
            }
        }
    }

    fn cutoff(&self, w: f64) -> f64 {
        match self.kind {
            CutoffKind::SharpWindow => chi_sharp(self.j, w * self.scale),
            CutoffKind::SmoothDyadic => chi(w * self.scale / (1u64 << self.j) as f64),
        }
    }

    /// Boundaries refined so an `e^{i omega w}` factor spans at most ~2
    /// radians per seed panel.
    fn phase_seeded(&self, omega: f64) -> Vec<f64> {
        refine_breaks(&self.breaks, omega.abs(), 2.0)
    }
}

fn refine_breaks(breaks: &[f64], omega_abs: f64, rad_per_panel: f64) -> Vec<f64> {
    let mut out = vec![];
    for w in breaks.windows(2) {
        out.push(w[0]);
        let span = omega_abs * (w[1] - w[0]);
        let extra = ((span / rad_per_panel).ceil() as usize).clamp(1, 1 << 16) - 1;
        for k in 1..=extra {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / (extra + 1) as f64);
        }
    }
    out.push(*breaks.last().unwrap());
    out
}

/// `H_{j1}^{t2}(beta) = int e^{-2 pi i beta P(x, t2)} chi_{j1}(x) dx / x`.
pub fn osc_1d(p: &Polynomial, t2: i64, j1: u64, beta: f64, side: Side, tol: f64) -> OscIntegralResult {
    assert!(j1 >= 1, "fiber integral needs j1 >= 1");
    if beta == 0.0 && side == Side::TwoSided {
        return OscIntegralResult::exact_zero();
    }
    let win = AxisWindow::new(CutoffKind::SharpWindow, j1);
    let mut budget = PANEL_BUDGET;
    let mut total = OscIntegralResult::exact_zero();
    let signs: &[f64] = match side {
        Side::TwoSided => &[1.0, -1.0],
        Side::Positive => &[1.0],
    };
    for &s in signs {
        // phase variation estimate along the window
        let span = sample_phase_span(
            |w| -std::f64::consts::TAU * beta * poly_real(p, s * win.scale * w, t2 as f64),
            &win.breaks,
        );
        let width = win.breaks.last().unwrap() - win.breaks[0];
        let boundaries = refine_breaks(&win.breaks, span / width, 2.0);
        let mut f = |w: f64| -> Complex64 {
            let x = s * win.scale * w;
            let ph = -std::f64::consts::TAU * beta * poly_real(p, x, t2 as f64);
            let (si, co) = ph.sin_cos();
            // dx/x = dw/w on either side, sign carried by the kernel
            Complex64::new(co, si) * (win.cutoff(w) / w) * s
        };
        let r = adaptive(&mut f, &boundaries, tol / signs.len() as f64, &mut budget);
        total.value += r.value;
        total.quadrature_error += r.quadrature_error;
        total.converged &= r.converged;
    }
    total
}

fn sample_phase_span<F: Fn(f64) -> f64>(phase: F, breaks: &[f64]) -> f64 {
    let lo = breaks[0];
    let hi = *breaks.last().unwrap();
    let mut span = 0.0;
    let mut prev = phase(lo);
    for k in 1..=64 {
        let w = lo + (hi - lo) * k as f64 / 64.0;
        let cur = phase(w);
        span += (cur - prev).abs();
        prev = cur;
    }
    span
}

/// `H_j^{Lambda(P)}(xi) = int e^{2 pi i (xi1 x1 + xi2 x2 + xi3 P(x))}
/// chi(x1) chi(x2) dx1 dx2 / (x1 x2)` over the chosen cutoff family.
pub fn osc_2d(
    p: &Polynomial,
    j: (u64, u64),
    xi: (f64, f64, f64),
    cfg: &OscConfig,
) -> OscIntegralResult {
    osc_2d_batch(p, j, xi.2, &[(xi.0, xi.1)], cfg).remove(0)
}

/// Batched 2-D integrals sharing one surface frequency `xi3`; the per-axis
/// moment cache is shared across the whole batch.
pub fn osc_2d_batch(
    p: &Polynomial,
    j: (u64, u64),
    xi3: f64,
    linear: &[(f64, f64)],
    cfg: &OscConfig,
) -> Vec<OscIntegralResult> {
    assert!(j.0 >= 1 && j.1 >= 1, "shell integrals need j >= 1");
    let win1 = AxisWindow::new(cfg.cutoff, j.0);
    let win2 = AxisWindow::new(cfg.cutoff, j.1);
    // Taylor eligibility: recentred phase sup bound over a shell rectangle
    let z: f64 = std::f64::consts::TAU
        * xi3.abs()
        * p.terms()
            .map(|t| {
                let c = t.coefficient.to_f64().unwrap_or(f64::INFINITY).abs();
                c * win1.scale.powi(t.exponent.0 as i32) * win2.scale.powi(t.exponent.1 as i32)
            })
            .sum::<f64>();
    if z.is_finite() && z <= 2.5 {
        taylor_batch(p, xi3, linear, &win1, &win2, cfg)
    } else {
        linear
            .iter()
            .map(|&(x1, x2)| nested(p, (x1, x2, xi3), &win1, &win2, cfg))
            .collect()
    }
}

type MomentKey = (u8, u16, u64);

/// Separable evaluation: expand `e^{i 2 pi xi3 (P - P0)}` in a Taylor series
/// per shell rectangle and pair coefficient grids with cached 1-D moments.
fn taylor_batch(
    p: &Polynomial,
    xi3: f64,
    linear: &[(f64, f64)],
    win1: &AxisWindow,
    win2: &AxisWindow,
    cfg: &OscConfig,
) -> Vec<OscIntegralResult> {
    let signs: &[f64] = match cfg.side {
        Side::TwoSided => &[1.0, -1.0],
        Side::Positive => &[1.0],
    };
    // per rectangle: phase grid, its Taylor exponential, and the prefactor
    struct Rect {
        s1: f64,
        s2: f64,
        gre: Grid,
        gim: Grid,
        phase0: f64,
        tail: f64,
    }
    let mut rects = Vec::new();
    let wc1 = 0.5 * (win1.breaks[0] + win1.breaks.last().unwrap());
    let wc2 = 0.5 * (win2.breaks[0] + win2.breaks.last().unwrap());
    for &s1 in signs {
        for &s2 in signs {
            let r = phase_grid(p, xi3, s1 * win1.scale, s2 * win2.scale);
            let phase0 = r.eval(wc1, wc2);
            let mut r0 = r;
            r0.c[0] -= phase0;
            let (gre, gim, tail) = taylor_exp(&r0, cfg.tol * 1e-2);
            rects.push(Rect {
                s1,
                s2,
                gre,
                gim,
                phase0,
                tail,
            });
        }
    }
    let mut cache: HashMap<MomentKey, (Complex64, f64)> = HashMap::new();
    linear
        .iter()
        .map(|&(x1, x2)| {
            let mut value = Complex64::new(0.0, 0.0);
            let mut err = 0.0;
            let mut converged = true;
            for rect in &rects {
                let omega1 = std::f64::consts::TAU * x1 * rect.s1 * win1.scale;
                let omega2 = std::f64::consts::TAU * x2 * rect.s2 * win2.scale;
                let (ph_s, ph_c) = rect.phase0.sin_cos();
                let pref = Complex64::new(ph_c, ph_s) * (rect.s1 * rect.s2);
                let mut rect_val = Complex64::new(0.0, 0.0);
                let mut rect_err = rect.tail;
                for n1 in 0..=rect.gre.d1 {
                    for n2 in 0..=rect.gre.d2 {
                        let g = Complex64::new(
                            rect.gre.get(n1, n2),
                            rect.gim.get(n1, n2),
                        );
                        if g.norm() < cfg.tol * 1e-4 {
                            continue;
                        }
                        let (m1, e1) =
                            moment(&mut cache, 1, n1, omega1, win1, cfg.tol, &mut converged);
                        let (m2, e2) =
                            moment(&mut cache, 2, n2, omega2, win2, cfg.tol, &mut converged);
                        rect_val += g * m1 * m2;
                        rect_err += g.norm() * (e1 * m2.norm() + m1.norm() * e2 + e1 * e2);
                    }
                }
                value += pref * rect_val;
                err += rect_err;
            }
            OscIntegralResult {
                value,
                quadrature_error: err,
                converged,
            }
        })
        .collect()
}

fn moment(
    cache: &mut HashMap<MomentKey, (Complex64, f64)>,
    axis: u8,
    n: usize,
    omega: f64,
    win: &AxisWindow,
    tol: f64,
    converged: &mut bool,
) -> (Complex64, f64) {
    let key = (axis, n as u16, omega.to_bits());
    if let Some(&(v, e)) = cache.get(&key) {
        return (v, e);
    }
    let boundaries = win.phase_seeded(omega);
    let mut f = |w: f64| -> Complex64 {
        let (s, c) = (omega * w).sin_cos();
        Complex64::new(c, s) * (w.powi(n as i32 - 1) * win.cutoff(w))
    };
    let mut budget = PANEL_BUDGET / 4; // per-moment slice of the panel budget
    let r = adaptive(&mut f, &boundaries, tol * 0.1, &mut budget);
    *converged &= r.converged;
    cache.insert(key, (r.value, r.quadrature_error));
    (r.value, r.quadrature_error)
}

/// Dense bivariate grid of f64 coefficients.
#[derive(Debug, Clone)]
struct Grid {
    d1: usize,
    d2: usize,
    c: Vec<f64>,
}

impl Grid {
    fn zero(d1: usize, d2: usize) -> Self {
        Self {
            d1,
            d2,
            c: vec![0.0; (d1 + 1) * (d2 + 1)],
        }
    }

    fn get(&self, n1: usize, n2: usize) -> f64 {
        if n1 <= self.d1 && n2 <= self.d2 {
            self.c[n1 * (self.d2 + 1) + n2]
        } else {
            0.0
        }
    }

    fn set(&mut self, n1: usize, n2: usize, v: f64) {
        let idx = n1 * (self.d2 + 1) + n2;
        self.c[idx] = v;
    }

    fn add(&mut self, n1: usize, n2: usize, v: f64) {
        let idx = n1 * (self.d2 + 1) + n2;
        self.c[idx] += v;
    }

    fn mul(&self, other: &Grid) -> Grid {
        let mut out = Grid::zero(self.d1 + other.d1, self.d2 + other.d2);
        for a1 in 0..=self.d1 {
            for a2 in 0..=self.d2 {
                let ca = self.get(a1, a2);
                if ca == 0.0 {
                    continue;
                }
                for b1 in 0..=other.d1 {
                    for b2 in 0..=other.d2 {
                        let cb = other.get(b1, b2);
                        if cb != 0.0 {
                            out.add(a1 + b1, a2 + b2, ca * cb);
                        }
                    }
                }
            }
        }
        out
    }

    fn scale(&mut self, k: f64) {
        for v in &mut self.c {
            *v *= k;
        }
    }

    fn norm1(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    fn eval(&self, w1: f64, w2: f64) -> f64 {
        let mut acc = 0.0;
        for n1 in 0..=self.d1 {
            for n2 in 0..=self.d2 {
                let c = self.get(n1, n2);
                if c != 0.0 {
                    acc += c * w1.powi(n1 as i32) * w2.powi(n2 as i32);
                }
            }
        }
        acc
    }
}

/// `2 pi xi3 P(sx1 w1, sx2 w2)` as a normalized coefficient grid.
fn phase_grid(p: &Polynomial, xi3: f64, sx1: f64, sx2: f64) -> Grid {
    let d1 = p.deg_t1() as usize;
    let d2 = p.deg_t2() as usize;
    let mut g = Grid::zero(d1, d2);
    for t in p.terms() {
        let c = t.coefficient.to_f64().unwrap_or(f64::NAN);
        let v = std::f64::consts::TAU
            * xi3
            * c
            * sx1.powi(t.exponent.0 as i32)
            * sx2.powi(t.exponent.1 as i32);
        g.set(t.exponent.0 as usize, t.exponent.1 as usize, v);
    }
    g
}

/// `(Re, Im)` coefficient grids of `e^{iR}` with a bound on the dropped tail.
fn taylor_exp(r: &Grid, tol: f64) -> (Grid, Grid, f64) {
    const MAX_ORDER: usize = 48;
    let z = r.norm1();
    let mut term = Grid::zero(0, 0);
    term.set(0, 0, 1.0);
    let mut kept = vec![(term.clone(), 0usize)];
    let mut m = 0usize;
    let mut tail = 0.0;
    loop {
        m += 1;
        if m > MAX_ORDER {
            tail = (z.powi(m as i32) / factorial(m)) * z.exp();
            break;
        }
        term = term.mul(r);
        term.scale(1.0 / m as f64);
        let sz = term.norm1();
        kept.push((term.clone(), m));
        if sz < tol && z < m as f64 {
            break;
        }
    }
    let d1 = kept.iter().map(|(g, _)| g.d1).max().unwrap();
    let d2 = kept.iter().map(|(g, _)| g.d2).max().unwrap();
    let mut gre = Grid::zero(d1, d2);
    let mut gim = Grid::zero(d1, d2);
    for (g, m) in kept {
        // multiply by i^m
        let (real_part, sign) = match m % 4 {
            0 => (true, 1.0),
            1 => (false, 1.0),
            2 => (true, -1.0),
            _ => (false, -1.0),
        };
        for n1 in 0..=g.d1 {
            for n2 in 0..=g.d2 {
                let v = g.get(n1, n2);
                if v != 0.0 {
                    if real_part {
                        gre.add(n1, n2, sign * v);
                    } else {
                        gim.add(n1, n2, sign * v);
                    }
                }
            }
        }
    }
    (gre, gim, tail)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Nested adaptive evaluation of one 2-D integral.
fn nested(
    p: &Polynomial,
    xi: (f64, f64, f64),
    win1: &AxisWindow,
    win2: &AxisWindow,
    cfg: &OscConfig,
) -> OscIntegralResult {
    let signs: &[f64] = match cfg.side {
        Side::TwoSided => &[1.0, -1.0],
        Side::Positive => &[1.0],
    };
    let mut total = OscIntegralResult::exact_zero();
    let inner_tol = cfg.tol / 16.0;
    for &s1 in signs {
        for &s2 in signs {
            let omega2 = std::f64::consts::TAU * xi.1 * s2 * win2.scale;
            // outer phase span estimate along w2 at the window center of w1
            let wc1 = 0.5 * (win1.breaks[0] + win1.breaks.last().unwrap());
            let span2 = sample_phase_span(
                |w2: f64| {
                    omega2 * w2
                        + std::f64::consts::TAU
                            * xi.2
                            * poly_real(p, s1 * win1.scale * wc1, s2 * win2.scale * w2)
                },
                &win2.breaks,
            );
            let outer_bounds = refine_breaks(
                &win2.breaks,
                span2 / (win2.breaks.last().unwrap() - win2.breaks[0]),
                2.0,
            );
            let mut inner_budget = PANEL_BUDGET;
            let mut inner_converged = true;
            let mut outer = |w2: f64| -> Complex64 {
                let x2 = s2 * win2.scale * w2;
                let omega1 = std::f64::consts::TAU * xi.0 * s1 * win1.scale;
                let span1 = sample_phase_span(
                    |w1: f64| {
                        omega1 * w1
                            + std::f64::consts::TAU
                                * xi.2
                                * poly_real(p, s1 * win1.scale * w1, x2)
                    },
                    &win1.breaks,
                );
                let inner_bounds = refine_breaks(
                    &win1.breaks,
                    span1 / (win1.breaks.last().unwrap() - win1.breaks[0]),
                    2.0,
                );
                let mut f = |w1: f64| -> Complex64 {
                    let x1 = s1 * win1.scale * w1;
                    let ph =
                        std::f64::consts::TAU * (xi.0 * x1 + xi.2 * poly_real(p, x1, x2));
                    let (si, co) = ph.sin_cos();
                    Complex64::new(co, si) * (win1.cutoff(w1) / w1)
                };
                let inner = adaptive(&mut f, &inner_bounds, inner_tol, &mut inner_budget);
                inner_converged &= inner.converged;
                let (si, co) = (omega2 * w2).sin_cos();
                inner.value * Complex64::new(co, si) * (win2.cutoff(w2) / w2)
            };
            let mut outer_budget = PANEL_BUDGET;
            let r = adaptive(
                &mut outer,
                &outer_bounds,
                cfg.tol / (signs.len() * signs.len()) as f64,
                &mut outer_budget,
            );
            total.value += r.value * (s1 * s2);
            total.quadrature_error += r.quadrature_error + inner_tol * 2.0;
            total.converged &= r.converged && inner_converged;
        }
    }
    total
}

/// Row of a decay probe along a ray of dyadic indices.
#[derive(Debug, Clone)]
pub struct DecayRow {
    pub j: (u64, u64),
    pub value: Complex64,
    pub abs: f64,
    pub quadrature_error: f64,
    /// `|xi3| 2^{j.m}`, the scaled frequency driving the decay.
    pub scaled_freq: f64,
}

#[derive(Debug, Clone)]
pub struct DecayProbe {
    pub rows: Vec<DecayRow>,
    pub sum_abs: f64,
    pub sum_sqrt: f64,
    /// Fitted decay rate of `|H_j|` against the scaled frequency (log-log
    /// slope, positive = decay), when enough nonzero rows exist.
    pub fitted_rate: Option<f64>,
}

/// Evaluates `|H_j|` along a ray inside a vertex's dual cone and reports the
/// running sums that quantify summability.
pub fn decay_probe(
    p: &Polynomial,
    vertex: (u32, u32),
    ray: &[(u64, u64)],
    xi3: f64,
    cfg: &OscConfig,
) -> DecayProbe {
    let mut rows = Vec::with_capacity(ray.len());
    let mut sum_abs = 0.0;
    let mut sum_sqrt = 0.0;
    for &j in ray {
        let r = osc_2d(p, j, (0.0, 0.0, xi3), cfg);
        let jm = j.0 as f64 * vertex.0 as f64 + j.1 as f64 * vertex.1 as f64;
        let abs = r.value.norm();
        sum_abs += abs;
        sum_sqrt += abs.sqrt();
        rows.push(DecayRow {
            j,
            value: r.value,
            abs,
            quadrature_error: r.quadrature_error,
            scaled_freq: xi3.abs() * 2f64.powf(jm),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs > 1e-14 && r.scaled_freq > 0.0)
        .map(|r| (r.scaled_freq.ln(), r.abs.ln()))
        .collect();
    let fitted_rate = if pts.len() >= 3 {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        Some(-stats::linear_fit(&xs, &ys).slope)
    } else {
        None
    };
    DecayProbe {
        rows,
        sum_abs,
        sum_sqrt,
        fitted_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn smooth_step_plateaus() {
        assert_eq!(smooth_step(-0.5), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sharp_window_values() {
        for ell in [1u64, 3, 8] {
            let lo = (1u64 << (ell - 1)) as f64;
            let hi = (1u64 << ell) as f64;
            assert!((chi_sharp(ell, lo) - 0.5).abs() < 1e-15);
            assert!((chi_sharp(ell, hi) - 0.5).abs() < 1e-15);
            assert_eq!(chi_sharp(ell, (lo + hi) / 2.0), 1.0);
            assert_eq!(chi_sharp(ell, lo - 0.6), 0.0);
            assert_eq!(chi_sharp(ell, hi + 0.6), 0.0);
        }
        assert!((chi_sharp(0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity() {
        // sum_l chi(x / 2^l) = 1 for |x| >= 2 within the covered range
        for k in 0..1000 {
            let x = 2.0 + (k as f64) * 0.97;
            let total: f64 = (0..40).map(|l| chi(x / 2f64.powi(l))).sum();
            assert!((total - 1.0).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn discrete_sharp_windows_partition_integers() {
        // at integers the sharp windows take values 0, 1/2, 1 and sum to 1
        for t in 1..=4096u64 {
            let total: f64 = (0..14).map(|l| chi_sharp(l, t as f64)).sum();
            assert!((total - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn osc_1d_zero_beta() {
        let p = poly("t1^2");
        let r = osc_1d(&p, 5, 3, 0.0, Side::TwoSided, 1e-10);
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        // one-sided integral of chi/x across block 3 is about ln 2
        let r = osc_1d(&p, 5, 3, 0.0, Side::Positive, 1e-12);
        assert!(r.converged);
        assert!((r.value.re - std::f64::consts::LN_2).abs() < 0.01);
        assert!(r.value.im.abs() < 1e-12);
    }

    #[test]
    fn osc_1d_conjugation() {
        let p = poly("t1^3");
        let a = osc_1d(&p, 1, 4, 1e-4, Side::Positive, 1e-11);
        let b = osc_1d(&p, 1, 4, -1e-4, Side::Positive, 1e-11);
        assert!((a.value.conj() - b.value).norm() < 1e-10);
    }

    #[test]
    fn osc_1d_matches_fixed_grid_oracle() {
        // dense Simpson oracle over the positive window
        let p = poly("t1^2");
        let j1 = 3u64;
        let beta = 1e-6;
        let r = osc_1d(&p, 0, j1, beta, Side::Positive, 1e-12);
        let (a, b) = (3.5, 8.5);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |x: f64| -> Complex64 {
            let ph = -std::f64::consts::TAU * beta * x * x;
            Complex64::new(ph.cos(), ph.sin()) * chi_sharp(j1, x) / x
        };
        let mut oracle = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            oracle += f(a + k as f64 * h) * w;
        }
        oracle *= h / 3.0;
        assert!(
            (r.value - oracle).norm() < 1e-8,
            "adaptive {} vs oracle {}",
            r.value,
            oracle
        );
    }

    #[test]
    fn osc_2d_zero_frequency() {
        let p = poly("t1^2*t2");
        let r = osc_2d(
            &p,
            (3, 2),
            (0.0, 0.0, 0.0),
            &OscConfig::default(),
        );
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn osc_2d_factorized_oddness_zero() {
        // xi = (x1, 0, 0): the x2 factor integrates chi/x over both sides -> 0
        let p = poly("t1^2*t2");
        let r = osc_2d(&p, (3, 2), (0.37, 0.0, 0.0), &OscConfig::default());
        assert!(r.value.norm() < 1e-10, "{}", r.value);
    }

    #[test]
    fn osc_2d_taylor_matches_nested() {
        let p = poly("t1^2*t2");
        let j = (4, 3);
        let xi = (0.0, 0.0, 1e-4);
        let cfg = OscConfig {
            tol: 1e-10,
            side: Side::TwoSided,
            cutoff: CutoffKind::SharpWindow,
        };
        let taylor = osc_2d(&p, j, xi, &cfg);
        assert!(taylor.converged);
        let win1 = AxisWindow::new(cfg.cutoff, j.0);
        let win2 = AxisWindow::new(cfg.cutoff, j.1);
        let direct = nested(&p, xi, &win1, &win2, &cfg);
        assert!(
            (taylor.value - direct.value).norm() < 1e-8,
            "taylor {} vs nested {}",
            taylor.value,
            direct.value
        );
    }

    #[test]
    fn quadrature_tolerance_is_honoured() {
        let p = poly("t1^2*t2");
        let cfg_loose = OscConfig {
            tol: 1e-6,
            ..OscConfig::default()
        };
        let cfg_tight = OscConfig {
            tol: 1e-12,
            ..OscConfig::default()
        };
        let a = osc_2d(&p, (3, 3), (0.01, 0.0, 1e-5), &cfg_loose);
        let b = osc_2d(&p, (3, 3), (0.01, 0.0, 1e-5), &cfg_tight);
        assert!(a.converged && b.converged);
        assert!(
            (a.value - b.value).norm() <= a.quadrature_error + b.quadrature_error + 1e-12
        );
    }

    #[test]
    fn decay_probe_zero_frequency() {
        let p = poly("t1^2*t2^2");
        let probe = decay_probe(
            &p,
            (2, 2),
            &[(1, 1), (2, 2), (3, 3)],
            0.0,
            &OscConfig {
                cutoff: CutoffKind::SmoothDyadic,
                ..OscConfig::default()
            },
        );
        assert!(probe.rows.iter().all(|r| r.abs < 1e-12));
    }
}
