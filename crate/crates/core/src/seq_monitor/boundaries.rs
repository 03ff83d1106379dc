//! Alpha-spending functions and the first-passage recursion that turns
//! spending increments into critical values for a Brownian motion observed
//! at a sequence of information fractions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_pdf, norm_quantile, norm_sf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spending {
    #[default]
    ObrienFlemingType,
    PocockType,
    Linear,
}

impl Spending {
    pub fn name(self) -> &'static str {
        match self {
            Spending::ObrienFlemingType => "obrien_fleming_type",
            Spending::PocockType => "pocock_type",
            Spending::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "obrien_fleming_type" | "obf" => Some(Spending::ObrienFlemingType),
            "pocock_type" | "pocock" => Some(Spending::PocockType),
            "linear" => Some(Spending::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    One,
    #[default]
    Two,
}

impl Sidedness {
    pub fn name(self) -> &'static str {
        match self {
            Sidedness::One => "one",
            Sidedness::Two => "two",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one" | "1" => Some(Sidedness::One),
            "two" | "2" => Some(Sidedness::Two),
            _ => None,
        }
    }
}

/// Cumulative type-I error spent by information fraction `v` (clamped to
/// `[0, 1]`).
pub fn spending_value(spending: Spending, sidedness: Sidedness, alpha: f64, v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v == 0.0 {
        return 0.0;
    }
    if v == 1.0 {
        return alpha;
    }
    match spending {
        // Lan–DeMets form `2(1 − Φ(z_{a/2}/√v))` for a one-sided level `a`;
        // the two-sided version spends it on each side with `a = α/2`.
        Spending::ObrienFlemingType => match sidedness {
            Sidedness::One => 2.0 * norm_sf(norm_quantile(1.0 - alpha / 2.0) / v.sqrt()),
            Sidedness::Two => 4.0 * norm_sf(norm_quantile(1.0 - alpha / 4.0) / v.sqrt()),
        },
        Spending::PocockType => alpha * (1.0 + (std::f64::consts::E - 1.0) * v).ln(),
        Spending::Linear => alpha * v,
    }
}

/// Nodes of the recursion grid.
pub const DEFAULT_NODES: usize = 4001;
/// Grid half-width in standard deviations of `B(v)`.
pub const SUPPORT_SD: f64 = 8.0;
/// Tolerance on mass conservation and on total spent alpha.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Kernel values below this are dropped from the convolution.
const KERNEL_CUTOFF: f64 = 1e-30;

/// Sub-density of `B(v_k)` on the continuation region of look `k`, stored
/// with Simpson weights.
#[derive(Debug, Clone)]
struct Density {
    x: Vec<f64>,
    weights: Vec<f64>,
    g: Vec<f64>,
}

impl Density {
    fn mass(&self) -> f64 {
        self.weights.iter().zip(&self.g).map(|(w, g)| w * g).sum()
    }
}

fn simpson_grid(lo: f64, hi: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (nodes - 1) as f64;
    let x = (0..nodes).map(|i| lo + h * i as f64).collect();
    let weights = (0..nodes)
        .map(|i| {
            let c = if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    (x, weights)
}

/// What the density at the most recent look is built from.
#[derive(Debug, Clone)]
enum Source {
    /// No look yet: `B(0) = 0`.
    Origin,
    /// Density at the previous look, materialised on its grid.
    Grid(Density),
}

#[derive(Debug, Clone)]
struct Look {
    v: f64,
    /// Crossing threshold on the `B` scale, `c √v`; infinite when nothing
    /// is spent at this look.
    b: f64,
    cross: f64,
}

/// Incremental boundary computation: each [`push_look`](Self::push_look)
/// returns the next critical value. The density at a look is only
/// convolved forward when a further look is pushed, so the final look of a
/// plan costs no convolution.
#[derive(Debug, Clone)]
pub struct BoundaryRecursion {
    alpha: f64,
    spending: Spending,
    sidedness: Sidedness,
    nodes: usize,
    /// Density feeding the latest look (the look before it, or the origin).
    source: Source,
    source_v: f64,
    /// Mass of `source` still in play.
    source_mass: f64,
    last: Option<Look>,
    spent: f64,
    crossings: Vec<f64>,
}

impl BoundaryRecursion {
    pub fn new(alpha: f64, spending: Spending, sidedness: Sidedness) -> Result<Self> {
        Self::with_nodes(alpha, spending, sidedness, DEFAULT_NODES)
    }

    pub fn with_nodes(alpha: f64, spending: Spending, sidedness: Sidedness, nodes: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::validation("alpha", "must lie in (0, 1)"));
        }
        if nodes < 5 || nodes.is_multiple_of(2) {
            return Err(Error::InvalidArgument("grid nodes must be odd and at least 5".into()));
        }
        Ok(Self {
            alpha,
            spending,
            sidedness,
            nodes,
            source: Source::Origin,
            source_v: 0.0,
            source_mass: 1.0,
            last: None,
            spent: 0.0,
            crossings: Vec::new(),
        })
    }

    /// Per-look crossing probabilities so far.
    pub fn crossings(&self) -> &[f64] {
        &self.crossings
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    /// Critical value (z scale) for a look at information fraction `v`,
    /// which must exceed the previous look's. Returns infinity when the
    /// spending function assigns no new alpha.
    pub fn push_look(&mut self, v: f64) -> Result<f64> {
        let prev_v = self.last.as_ref().map_or(0.0, |l| l.v);
        if !(v > prev_v) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "look fractions must increase strictly ({prev_v} then {v})"
            )));
        }
        let target = spending_value(self.spending, self.sidedness, self.alpha, v);
        let increment = target - self.spent;

        // Bring the density forward to the previous look.
        if let Some(prev) = self.last.take() {
            let density = self.materialize(&prev)?;
            let mass = density.mass();
            let expected = self.source_mass - prev.cross;
            if (mass - expected).abs() > MASS_TOLERANCE {
                return Err(Error::QuadratureFailure {
                    discrepancy: (mass - expected).abs(),
                });
            }
            self.source_mass = expected;
            self.source = Source::Grid(density);
            self.source_v = prev.v;
        }
        let delta = v - prev_v;

        let (b, cross) = if increment <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let b = self.solve_threshold(delta, increment)?;
            (b, increment)
        };
        self.spent += cross;
        self.crossings.push(cross);
        self.last = Some(Look { v, b, cross });
        Ok(b / v.sqrt())
    }

    /// Probability of crossing `±b` (or `b` one-sided) at the latest look,
    /// starting from the source density after a Brownian increment of
    /// variance `delta`, with its derivative in `b`.
    fn crossing_probability(&self, delta: f64, b: f64) -> (f64, f64) {
        let s = delta.sqrt();
        let two = self.sidedness == Sidedness::Two;
        let tail = |x: f64| {
            let (up, down) = ((b - x) / s, (-b - x) / s);
            if two {
                (norm_sf(up) + norm_cdf(down), -(norm_pdf(up) + norm_pdf(down)) / s)
            } else {
                (norm_sf(up), -norm_pdf(up) / s)
            }
        };
        match &self.source {
            Source::Origin => tail(0.0),
            Source::Grid(d) => {
                d.x.iter()
                    .zip(&d.weights)
                    .zip(&d.g)
                    .fold((0.0, 0.0), |acc, ((&x, &w), &g)| {
                        let (p, dp) = tail(x);
                        (acc.0 + w * g * p, acc.1 + w * g * dp)
                    })
            }
        }
    }

    /// Threshold `b` with crossing probability `target`: Newton steps kept
    /// inside a shrinking bisection bracket.
    fn solve_threshold(&self, delta: f64, target: f64) -> Result<f64> {
        let (available, _) = self.crossing_probability(delta, 0.0);
        if target > available + MASS_TOLERANCE {
            return Err(Error::QuadratureFailure {
                discrepancy: target - available,
            });
        }
        let sd = (self.source_v + delta).sqrt();
        let (mut lo, mut hi) = (0.0, 40.0 * sd);
        let mut b = sd * norm_quantile(1.0 - 0.5 * target.min(0.5));
        for _ in 0..200 {
            let (p, dp) = self.crossing_probability(delta, b);
            let f = p - target;
            if f > 0.0 {
                lo = b;
            } else {
                hi = b;
            }
            if f.abs() <= 1e-15 * target.max(1e-300) || hi - lo <= 1e-13 * hi.max(1.0) {
                break;
            }
            let newton = b - f / dp;
            if dp < 0.0 && newton > lo && newton < hi {
                let settled = (newton - b).abs() <= 1e-14 * b.max(1.0);
                b = newton;
                if settled {
                    break;
                }
            } else {
                b = 0.5 * (lo + hi);
            }
        }
        Ok(b)
    }

    /// Density of `B(v)` at `look`, restricted to its continuation region.
    fn materialize(&self, look: &Look) -> Result<Density> {
        let sd = look.v.sqrt();
        let edge = SUPPORT_SD * sd;
        let hi = look.b.min(edge);
        let lo = match self.sidedness {
            Sidedness::Two => -hi,
            Sidedness::One => -edge,
        };
        let (x, weights) = simpson_grid(lo, hi, self.nodes);
        let g = match &self.source {
            Source::Origin => x.iter().map(|&y| norm_pdf(y / sd) / sd).collect(),
            Source::Grid(prev) => convolve(
                prev,
                &x,
                (look.v - self.source_v).sqrt(),
                self.sidedness == Sidedness::Two,
            ),
        };
        Ok(Density { x, weights, g })
    }
}

/// `∫ g(x) φ((y − x)/s)/s dx` at every `y` in `targets`, with the Gaussian
/// kernel advanced by a multiplicative recurrence outward from the nearest
/// source node.
fn convolve(source: &Density, targets: &[f64], s: f64, symmetric: bool) -> Vec<f64> {
    let a: Vec<f64> = source.weights.iter().zip(&source.g).map(|(w, g)| w * g).collect();
    let xs = &source.x;
    let n = xs.len();
    let h = xs[1] - xs[0];
    let inv_s2 = 1.0 / (s * s);
    let q = (-h * h * inv_s2).exp();
    let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
    let eval = |y: f64| {
        let j0 = (((y - xs[0]) / h).round().max(0.0) as usize).min(n - 1);
        let d0 = y - xs[j0];
        let e0 = (-0.5 * d0 * d0 * inv_s2).exp();
        if e0 < KERNEL_CUTOFF {
            return 0.0;
        }
        let mut sum = a[j0] * e0;
        // rightward: d shrinks by h per step
        let (mut e, mut r) = (e0, ((d0 * h - 0.5 * h * h) * inv_s2).exp());
        for &aj in &a[j0 + 1..] {
            e *= r;
            r *= q;
            if e < KERNEL_CUTOFF {
                break;
            }
            sum += aj * e;
        }
        let (mut e, mut r) = (e0, ((-d0 * h - 0.5 * h * h) * inv_s2).exp());
        for &aj in a[..j0].iter().rev() {
            e *= r;
            r *= q;
            if e < KERNEL_CUTOFF {
                break;
            }
            sum += aj * e;
        }
        sum * norm
    };
    let m = targets.len();
    let mut out = vec![0.0; m];
    if symmetric {
        for i in 0..m.div_ceil(2) {
            out[i] = eval(targets[i]);
        }
        for i in m.div_ceil(2)..m {
            out[i] = out[m - 1 - i];
        }
    } else {
        for (o, &y) in out.iter_mut().zip(targets) {
            *o = eval(y);
        }
    }
    out
}

/// Critical values for looks at `fractions` with `nodes` grid points.
pub fn boundaries_with_nodes(
    fractions: &[f64],
    alpha: f64,
    spending: Spending,
    sidedness: Sidedness,
    nodes: usize,
) -> Result<Vec<f64>> {
    let mut rec = BoundaryRecursion::with_nodes(alpha, spending, sidedness, nodes)?;
    let cs = fractions
        .iter()
        .map(|&v| rec.push_look(v))
        .collect::<Result<Vec<_>>>()?;
    let total = spending_value(spending, sidedness, alpha, *fractions.last().unwrap_or(&0.0));
    if (rec.spent() - total).abs() > MASS_TOLERANCE {
        return Err(Error::QuadratureFailure {
            discrepancy: (rec.spent() - total).abs(),
        });
    }
    Ok(cs)
}
