//! Locating the discrete spectrum.
//!
//! Eigenvalues of the operator are exactly the points `λ = z + 1/z` where
//! `γ(z) = det Δ(z)` vanishes in the unit disk. The search runs an adaptive
//! rectangle subdivision over the disk of radius `1 - δ_edge`: the winding
//! number of `γ` around each cell boundary (phase-continuation quadrature)
//! counts the zeros inside, cells with nonzero count are split until small,
//! then simple zeros are polished by Newton and multiple zeros are reported
//! at cell-center accuracy with their winding multiplicity.
//!
//! The enclosure criteria certify spectrum-free regions from `Q0 = Σ q_k`,
//! `Q1 = Σ k q_k` and `q = sup q_n` alone, via the root of `t e^t = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::NormalizedCoefficients;
use crate::error::{Error, Result};
use crate::jost::{jost_iterate, TaylorTable};
use crate::linalg::{adjugate, det_lu};
use crate::operator::BandedOperator;
use crate::{C64, CMat};

/// `λ = z + 1/z`, mapping the punctured unit disk onto the complement of
/// `[-2, 2]`.
pub fn zhukovsky(z: C64) -> C64 {
    z + z.inv()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreimageClass {
    InsideDisk,
    OutsideDisk,
    Boundary,
}

/// Both roots of `z² - λz + 1 = 0`, each flagged by its position relative
/// to the unit circle. `λ = ±2` gives a double boundary root.
pub fn zhukovsky_preimages(lambda: C64) -> [(C64, PreimageClass); 2] {
    let half = lambda * 0.5;
    let disc = (half * half - C64::new(1.0, 0.0)).sqrt();
    let classify = |z: C64| {
        let r = z.norm();
        if (r - 1.0).abs() < 1e-12 {
            PreimageClass::Boundary
        } else if r < 1.0 {
            PreimageClass::InsideDisk
        } else {
            PreimageClass::OutsideDisk
        }
    };
    let a = half + disc;
    let b = half - disc;
    [(a, classify(a)), (b, classify(b))]
}

/// Root of `t e^t = 1` (the omega constant), to full precision.
pub fn omega_constant() -> f64 {
    let mut t = 0.567f64;
    for _ in 0..8 {
        let e = t.exp();
        t -= (t * e - 1.0) / (e * (1.0 + t));
    }
    t
}

/// Evaluates `Δ(z)` and `γ(z) = det Δ(z)`, preferring the Taylor table
/// (analytic derivatives) and falling back to successive approximations.
pub struct Evaluator<'a> {
    pub coeffs: &'a NormalizedCoefficients,
    pub taylor: Option<&'a TaylorTable>,
    pub tol: f64,
}

impl<'a> Evaluator<'a> {
    pub fn new(coeffs: &'a NormalizedCoefficients, taylor: Option<&'a TaylorTable>) -> Self {
        Evaluator {
            coeffs,
            taylor,
            tol: 1e-12,
        }
    }

    pub fn delta(&self, z: C64) -> Result<CMat> {
        match self.taylor {
            Some(t) => Ok(t.delta_at(z)),
            None => Ok(jost_iterate(self.coeffs, z, 0, self.tol)?.vtilde[0].clone()),
        }
    }

    pub fn gamma(&self, z: C64) -> Result<C64> {
        Ok(det_lu(&self.delta(z)?))
    }

    /// `(γ, γ')`; the derivative comes from the differentiated δ-series via
    /// `γ' = tr(adj(Δ) Δ')` when a Taylor table is present, else from a
    /// central finite difference with the given step.
    pub fn gamma_with_derivative(&self, z: C64, fd_step: f64) -> Result<(C64, C64)> {
        if let Some(t) = self.taylor {
            let delta = t.delta_at(z);
            let dprime = t.delta_prime_at(z);
            let adj = adjugate(&delta);
            let prod = &adj * &dprime;
            let mut trace = C64::new(0.0, 0.0);
            for i in 0..prod.nrows() {
                trace += prod[(i, i)];
            }
            Ok((det_lu(&delta), trace))
        } else {
            let h = C64::new(fd_step.max(1e-12), 0.0);
            let g = self.gamma(z)?;
            let gp = (self.gamma(z + h)? - self.gamma(z - h)?) / (h * 2.0);
            Ok((g, gp))
        }
    }
}

/// A located eigenvalue: `λ = z + 1/z`, `|z| < 1 - δ_edge`, with its
/// winding multiplicity and the determinant residual at `z`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenvalue {
    #[serde(with = "crate::cserde::c64")]
    pub lambda: C64,
    #[serde(with = "crate::cserde::c64")]
    pub z: C64,
    pub multiplicity: u32,
    pub residual: f64,
    /// Estimated absolute accuracy of `lambda` (Newton step size for simple
    /// zeros, cell size through the Zhukovsky derivative for multiple ones).
    pub accuracy: f64,
}

/// A cell the search could not resolve, kept for the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnresolvedCell {
    #[serde(with = "crate::cserde::c64")]
    pub center: C64,
    pub size: f64,
    pub winding: Option<i32>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroScan {
    pub eigenvalues: Vec<Eigenvalue>,
    pub unresolved: Vec<UnresolvedCell>,
}

/// Search-region and refinement parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourConfig {
    /// Stand-off from the unit circle: search `|z| <= 1 - edge_delta`.
    pub edge_delta: f64,
    /// Exclusion radius around `z = ±1`.
    pub exclusion_eps: f64,
    /// Exclusion radius around `z = 0` (`Δ(0) = I`, verified at run time).
    pub origin_radius: f64,
    /// Subdivide winding cells down to this size before Newton refinement.
    pub newton_cell: f64,
    /// Report multiple zeros at cell-center accuracy of this size.
    pub mult_cell: f64,
    /// Give up (unresolved) below this cell size.
    pub min_cell: f64,
    /// Evaluation budget per cell boundary.
    pub boundary_budget: usize,
    /// Residual target for refined zeros, relative to the boundary modulus.
    pub residual_tol: f64,
    pub max_cells: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            edge_delta: 1e-2,
            exclusion_eps: 1e-3,
            origin_radius: 1e-3,
            newton_cell: 2e-3,
            mult_cell: 2e-6,
            min_cell: 1e-7,
            boundary_budget: 4096,
            residual_tol: 1e-9,
            max_cells: 400_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Cell {
    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    fn center(&self) -> C64 {
        C64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn split(&self) -> [Cell; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Cell { x0: self.x0, y0: self.y0, x1: xm, y1: ym },
            Cell { x0: xm, y0: self.y0, x1: self.x1, y1: ym },
            Cell { x0: self.x0, y0: ym, x1: xm, y1: self.y1 },
            Cell { x0: xm, y0: ym, x1: self.x1, y1: self.y1 },
        ]
    }

    /// Minimum distance from the origin to the (closed) cell.
    fn min_abs(&self) -> f64 {
        let dx = if self.x0 > 0.0 {
            self.x0
        } else if self.x1 < 0.0 {
            -self.x1
        } else {
            0.0
        };
        let dy = if self.y0 > 0.0 {
            self.y0
        } else if self.y1 < 0.0 {
            -self.y1
        } else {
            0.0
        };
        dx.hypot(dy)
    }

    /// Maximum distance from the origin to the cell (farthest corner).
    fn max_abs(&self) -> f64 {
        let dx = self.x0.abs().max(self.x1.abs());
        let dy = self.y0.abs().max(self.y1.abs());
        dx.hypot(dy)
    }

    fn max_dist_to(&self, p: C64) -> f64 {
        let dx = (p.re - self.x0).abs().max((p.re - self.x1).abs());
        let dy = (p.im - self.y0).abs().max((p.im - self.y1).abs());
        dx.hypot(dy)
    }

    /// Boundary point at parameter `t ∈ [0, 4)`, counterclockwise.
    fn boundary_point(&self, t: f64) -> C64 {
        let frac = t.fract();
        match t as usize % 4 {
            0 => C64::new(self.x0 + (self.x1 - self.x0) * frac, self.y0),
            1 => C64::new(self.x1, self.y0 + (self.y1 - self.y0) * frac),
            2 => C64::new(self.x1 - (self.x1 - self.x0) * frac, self.y1),
            _ => C64::new(self.x0, self.y1 - (self.y1 - self.y0) * frac),
        }
    }
}

struct WindingOutcome {
    winding: i32,
    boundary_max: f64,
}

/// Winding number of `γ` around the cell by adaptive phase continuation:
/// adjacent samples must differ in argument by less than π/2, refining the
/// boundary until they do or the budget runs out.
fn winding_rect(ev: &Evaluator, cell: &Cell, budget: usize) -> Result<Option<WindingOutcome>> {
    let mut evals = 0usize;
    let mut boundary_max = 0.0f64;
    let sample = |t: f64, evals: &mut usize| -> Result<Option<C64>> {
        *evals += 1;
        let g = ev.gamma(cell.boundary_point(t))?;
        if g.norm() < 1e-250 {
            return Ok(None); // zero on (or absurdly near) the boundary
        }
        Ok(Some(g))
    };

    let initial = 16usize;
    let mut ts: Vec<f64> = (0..initial).map(|i| 4.0 * i as f64 / initial as f64).collect();
    ts.push(4.0);
    let mut gs = Vec::with_capacity(ts.len());
    for &t in &ts {
        match sample(t % 4.0, &mut evals)? {
            Some(g) => gs.push(g),
            None => return Ok(None),
        }
    }

    let mut total = 0.0f64;
    let mut stack: Vec<(f64, C64, f64, C64)> = Vec::new();
    for i in (0..ts.len() - 1).rev() {
        stack.push((ts[i], gs[i], ts[i + 1], gs[i + 1]));
    }
    while let Some((ta, ga, tb, gb)) = stack.pop() {
        boundary_max = boundary_max.max(ga.norm()).max(gb.norm());
        // The wrapped argument alone can silently swallow a full turn when
        // a zero sits close to the boundary; the chord criterion forces
        // subdivision near any close approach.
        let darg = (gb / ga).arg();
        let chord_ok = (gb - ga).norm() <= 0.5 * ga.norm().min(gb.norm());
        if darg.abs() < std::f64::consts::FRAC_PI_2 && chord_ok {
            total += darg;
            continue;
        }
        if evals >= budget {
            return Ok(None); // instability: caller subdivides or retries
        }
        let tm = 0.5 * (ta + tb);
        match sample(tm % 4.0, &mut evals)? {
            Some(gm) => {
                stack.push((tm, gm, tb, gb));
                stack.push((ta, ga, tm, gm));
            }
            None => return Ok(None),
        }
    }
    let w = total / std::f64::consts::TAU;
    let rounded = w.round();
    if (w - rounded).abs() > 0.25 {
        return Ok(None);
    }
    Ok(Some(WindingOutcome {
        winding: rounded as i32,
        boundary_max,
    }))
}

/// Winding number of `γ` along the circle `|z| = radius` (diagnostic; the
/// total must match the multiplicity count of the zeros inside).
pub fn winding_on_circle(ev: &Evaluator, radius: f64, min_samples: usize) -> Result<i32> {
    let n = min_samples.max(16);
    let mut total = 0.0f64;
    let mut stack: Vec<(f64, C64, f64, C64)> = Vec::new();
    let at = |theta: f64| -> Result<C64> { ev.gamma(C64::from_polar(radius, theta)) };
    let mut prev_t = 0.0;
    let mut prev_g = at(0.0)?;
    let first_g = prev_g;
    for i in 1..=n {
        let t = std::f64::consts::TAU * i as f64 / n as f64;
        let g = if i == n { first_g } else { at(t)? };
        stack.push((prev_t, prev_g, t, g));
        prev_t = t;
        prev_g = g;
    }
    stack.reverse();
    let mut evals = n;
    while let Some((ta, ga, tb, gb)) = stack.pop() {
        if ga.norm() < 1e-250 || gb.norm() < 1e-250 {
            return Err(Error::Inconsistency("zero of γ on the test circle".into()));
        }
        let darg = (gb / ga).arg();
        let chord_ok = (gb - ga).norm() <= 0.5 * ga.norm().min(gb.norm());
        if darg.abs() < std::f64::consts::FRAC_PI_2 && chord_ok {
            total += darg;
            continue;
        }
        evals += 1;
        if evals > 1_000_000 {
            return Err(Error::Inconsistency("circle winding did not stabilize".into()));
        }
        let tm = 0.5 * (ta + tb);
        let gm = at(tm)?;
        stack.push((tm, gm, tb, gb));
        stack.push((ta, ga, tm, gm));
    }
    Ok((total / std::f64::consts::TAU).round() as i32)
}

/// First-order propagation of a z-accuracy through `λ = z + 1/z`.
fn lambda_accuracy(z: C64, z_accuracy: f64) -> f64 {
    let slope = (C64::new(1.0, 0.0) - (z * z).inv()).norm();
    1.5 * z_accuracy * slope.max(1.0)
}

/// Is `z` inside the search annulus (and outside the exclusion disks)?
fn in_search_region(z: C64, cfg: &ContourConfig, r_search: f64) -> bool {
    z.norm() <= r_search
        && z.norm() >= cfg.origin_radius
        && (z - C64::new(1.0, 0.0)).norm() >= cfg.exclusion_eps
        && (z + C64::new(1.0, 0.0)).norm() >= cfg.exclusion_eps
}

enum Outcome {
    Drop,
    Split([Cell; 4]),
    Zero(Eigenvalue),
    NearBoundary(Eigenvalue),
    Unresolved(UnresolvedCell),
}

fn newton_refine(ev: &Evaluator, start: C64, cell_size: f64) -> Option<(C64, f64)> {
    let fd_step = 1e-6 * cell_size;
    let mut z = start;
    for _ in 0..80 {
        let (g, gp) = ev.gamma_with_derivative(z, fd_step).ok()?;
        if gp.norm() == 0.0 {
            return None;
        }
        let step = g / gp;
        z -= step;
        if (z - start).norm() > 8.0 * cell_size {
            return None;
        }
        if step.norm() < 1e-13 * z.norm().max(1.0) {
            let residual = ev.gamma(z).ok()?.norm();
            return Some((z, residual));
        }
    }
    let residual = ev.gamma(z).ok()?.norm();
    Some((z, residual))
}

fn process_cell(ev: &Evaluator, cell: Cell, cfg: &ContourConfig, r_search: f64) -> Outcome {
    let unresolved = |reason: &str, winding: Option<i32>| {
        Outcome::Unresolved(UnresolvedCell {
            center: cell.center(),
            size: cell.size(),
            winding,
            reason: reason.to_string(),
        })
    };

    // Geometry against the search annulus and exclusion disks.
    if cell.min_abs() > r_search {
        return Outcome::Drop;
    }
    if cell.max_abs() <= cfg.origin_radius {
        return Outcome::Drop;
    }
    for pole in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)] {
        if cell.max_dist_to(pole) <= cfg.exclusion_eps {
            return Outcome::Drop;
        }
    }
    // The boundary must stay inside the closed unit disk for evaluation.
    if cell.max_abs() > 1.0 {
        if cell.size() <= cfg.min_cell {
            return unresolved("cell outside evaluation domain", None);
        }
        return Outcome::Split(cell.split());
    }

    let mut attempt = winding_rect(ev, &cell, cfg.boundary_budget);
    if matches!(attempt, Ok(None)) && cell.size() <= cfg.min_cell {
        // Last resort at the size floor: shrink slightly and retry once (a
        // zero almost exactly on the boundary destabilizes the phase
        // tracking). At larger sizes we subdivide instead, which keeps the
        // region covered.
        let s = 0.03 * cell.size();
        let shrunk = Cell {
            x0: cell.x0 + s,
            y0: cell.y0 + s,
            x1: cell.x1 - s,
            y1: cell.y1 - s,
        };
        attempt = winding_rect(ev, &shrunk, cfg.boundary_budget);
    }
    let outcome = match attempt {
        Err(_) | Ok(None) => {
            if cell.size() > cfg.min_cell {
                return Outcome::Split(cell.split());
            }
            return unresolved("winding-count instability", None);
        }
        Ok(Some(o)) => o,
    };

    if outcome.winding == 0 {
        return Outcome::Drop;
    }
    if outcome.winding == 1 {
        if cell.size() > cfg.newton_cell {
            return Outcome::Split(cell.split());
        }
        match newton_refine(ev, cell.center(), cell.size()) {
            Some((z, residual))
                if residual <= cfg.residual_tol * outcome.boundary_max.max(1e-30) =>
            {
                let eig = Eigenvalue {
                    lambda: zhukovsky(z),
                    z,
                    multiplicity: 1,
                    residual,
                    accuracy: lambda_accuracy(z, 1e-12 * z.norm().max(1.0)),
                };
                if in_search_region(z, cfg, r_search) {
                    Outcome::Zero(eig)
                } else {
                    Outcome::NearBoundary(eig)
                }
            }
            _ => {
                if cell.size() > cfg.min_cell {
                    Outcome::Split(cell.split())
                } else {
                    unresolved("Newton refinement failed", Some(outcome.winding))
                }
            }
        }
    } else if cell.size() > cfg.mult_cell {
        Outcome::Split(cell.split())
    } else {
        // Multiple zero (or unresolvable cluster): cell-center accuracy.
        let z = cell.center();
        let residual = ev.gamma(z).map(|g| g.norm()).unwrap_or(f64::NAN);
        let eig = Eigenvalue {
            lambda: zhukovsky(z),
            z,
            multiplicity: outcome.winding.unsigned_abs(),
            residual,
            accuracy: lambda_accuracy(z, 0.75 * cell.size()),
        };
        if in_search_region(z, cfg, r_search) {
            Outcome::Zero(eig)
        } else {
            Outcome::NearBoundary(eig)
        }
    }
}

/// Find all zeros of `γ` in the disk `|z| <= 1 - edge_delta` (minus the
/// exclusion disks), with multiplicities; each zero is mapped to an
/// eigenvalue through the Zhukovsky transform. Results are deterministic:
/// cells are processed in waves and merged by sorting on `(Re z, Im z)`.
pub fn find_zeros(ev: &Evaluator, cfg: &ContourConfig) -> Result<ZeroScan> {
    let r_search = 1.0 - cfg.edge_delta;
    // Zeros with |z| <= origin_radius would mean |λ| > 1/r - r, impossible
    // while the operator norm bound 2 + sup q_n is below that.
    let norm_bound = ev.coeffs.operator().row_norm_bound();
    let r0 = cfg.origin_radius;
    if 1.0 / r0 - r0 <= norm_bound {
        return Err(Error::InvalidArgument(format!(
            "origin exclusion {r0} not justified: operator norm bound {norm_bound} \
             reaches λ = z + 1/z there"
        )));
    }

    // Asymmetric root cell so that subdivision lines stay away from the
    // real/imaginary axes, where symmetric operators put their zeros.
    let root = Cell {
        x0: -r_search - 1.3717e-2,
        y0: -r_search - 0.9433e-2,
        x1: r_search + 0.7719e-2,
        y1: r_search + 0.5937e-2,
    };

    let mut generation = vec![root];
    let mut zeros: Vec<Eigenvalue> = Vec::new();
    let mut near_boundary: Vec<Eigenvalue> = Vec::new();
    let mut unresolved: Vec<UnresolvedCell> = Vec::new();
    let mut processed = 0usize;

    while !generation.is_empty() {
        processed += generation.len();
        if processed > cfg.max_cells {
            for cell in &generation {
                unresolved.push(UnresolvedCell {
                    center: cell.center(),
                    size: cell.size(),
                    winding: None,
                    reason: "cell budget exhausted".into(),
                });
            }
            break;
        }
        let outcomes: Vec<Outcome> = generation
            .par_iter()
            .map(|cell| process_cell(ev, *cell, cfg, r_search))
            .collect();
        let mut next = Vec::new();
        for outcome in outcomes {
            match outcome {
                Outcome::Drop => {}
                Outcome::Split(children) => next.extend_from_slice(&children),
                Outcome::Zero(e) => zeros.push(e),
                Outcome::NearBoundary(e) => near_boundary.push(e),
                Outcome::Unresolved(u) => unresolved.push(u),
            }
        }
        generation = next;
    }

    let key = |z: &C64| (z.re, z.im);
    zeros.sort_by(|a, b| key(&a.z).partial_cmp(&key(&b.z)).unwrap());
    // Merge duplicates claimed by adjacent cells.
    let mut merged: Vec<Eigenvalue> = Vec::new();
    for e in zeros {
        match merged.last_mut() {
            Some(last) if (last.z - e.z).norm() < 1e-12 => {
                last.multiplicity = last.multiplicity.max(e.multiplicity);
                if e.residual < last.residual {
                    last.z = e.z;
                    last.lambda = e.lambda;
                    last.residual = e.residual;
                }
            }
            _ => merged.push(e),
        }
    }
    for e in near_boundary {
        unresolved.push(UnresolvedCell {
            center: e.z,
            size: 0.0,
            winding: Some(e.multiplicity as i32),
            reason: format!(
                "zero within edge band or exclusion region (λ = {} + {}i)",
                e.lambda.re, e.lambda.im
            ),
        });
    }
    unresolved.sort_by(|a, b| {
        (a.center.re, a.center.im)
            .partial_cmp(&(b.center.re, b.center.im))
            .unwrap()
    });
    Ok(ZeroScan {
        eigenvalues: merged,
        unresolved,
    })
}

/// Axis-symmetric rectangle pair `√(4-c²) < |Re w| < √(4+c²)`,
/// `|Im w| < c²/4` containing the discrete spectrum when `c < 2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpectralRectangles {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl SpectralRectangles {
    pub fn contains(&self, w: C64) -> bool {
        let re = w.re.abs();
        re > self.re_min && re < self.re_max && w.im.abs() < self.im_max
    }
}

/// Outcome of the spectrum-enclosure criteria.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnclosureVerdict {
    pub q0: f64,
    pub q1: Option<f64>,
    pub q_sup: f64,
    /// Root of `t e^t = 1`.
    pub t_root: f64,
    /// `c = (8 Q0 / t) exp{(2-q)/(1-q) Q0}`: the disk preimages of the
    /// certified-free region satisfy `|z - 1/z| > c`.
    pub region_radius: f64,
    /// Spectrum certified empty: `Q0 = 0`, or the first-moment criterion
    /// `exp{(2-q)/(1-q) Q0} Q1 < 4/t`.
    pub empty_spectrum_certified: bool,
    /// Present exactly when `region_radius < 2`.
    pub rectangles: Option<SpectralRectangles>,
}

impl EnclosureVerdict {
    /// Is `λ` inside the certified spectrum-free region `G(D)`?
    pub fn in_free_region(&self, lambda: C64) -> bool {
        // |z - 1/z| = sqrt(|λ² - 4|) for either preimage.
        let dist = (lambda * lambda - C64::new(4.0, 0.0)).norm().sqrt();
        dist > self.region_radius
    }
}

/// Enclosure availability for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EnclosureOutcome {
    Available(EnclosureVerdict),
    Unavailable { q_sup: f64, reason: String },
}

/// Evaluate the enclosure criteria; requires `Q0 < ∞` and `q < 1`.
pub fn enclosure(op: &BandedOperator) -> Result<EnclosureVerdict> {
    let q_sup = op.q_sup();
    if q_sup >= 1.0 {
        return Err(Error::QTooLarge { q: q_sup });
    }
    let q0 = op.q0_tail(1);
    let q1 = op.q1_tail(1).ok();
    let t = omega_constant();
    let factor = ((2.0 - q_sup) / (1.0 - q_sup) * q0).exp();
    let region_radius = 8.0 * q0 / t * factor;
    let empty = q0 == 0.0 || q1.map(|m| factor * m < 4.0 / t).unwrap_or(false);
    let rectangles = if region_radius < 2.0 {
        let c2 = region_radius * region_radius;
        Some(SpectralRectangles {
            re_min: (4.0 - c2).sqrt(),
            re_max: (4.0 + c2).sqrt(),
            im_max: c2 / 4.0,
        })
    } else {
        None
    };
    Ok(EnclosureVerdict {
        q0,
        q1,
        q_sup,
        t_root: t,
        region_radius,
        empty_spectrum_certified: empty,
        rectangles,
    })
}

/// Full spectral report for one operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Eigenvalue>,
    pub enclosure: EnclosureOutcome,
    pub unresolved_cells: Vec<UnresolvedCell>,
}
