//! Quality functions over block summaries and their planted-partition forms.
//!
//! The Infomap score follows the maximization convention: it is the negated
//! two-level map equation with the degree-entropy term `H(k)` removed, so
//! values are not comparable with raw codelengths from Infomap tools.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BlockSummary;
use crate::numeric::xlogx;

/// Which objective is maximized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodKind {
    Modularity { gamma: f64 },
    Infomap,
}

/// An objective plus whether description lengths use degree correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MethodRepr", into = "MethodRepr")]
pub struct Method {
    pub kind: MethodKind,
    pub degree_corrected: bool,
}

#[derive(Serialize, Deserialize)]
struct MethodRepr {
    method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default)]
    dc: bool,
}

impl From<Method> for MethodRepr {
    fn from(m: Method) -> Self {
        match m.kind {
            MethodKind::Modularity { gamma } => {
                MethodRepr { method: "modularity".into(), gamma: Some(gamma), dc: m.degree_corrected }
            }
            MethodKind::Infomap => MethodRepr { method: "infomap".into(), gamma: None, dc: m.degree_corrected },
        }
    }
}

impl TryFrom<MethodRepr> for Method {
    type Error = Error;

    fn try_from(r: MethodRepr) -> Result<Self> {
        let m = match r.method.as_str() {
            "modularity" => Method::modularity(r.gamma.unwrap_or(1.0))?,
            "infomap" => Method::infomap(),
            other => return Err(Error::Validation(format!("unknown method {other:?}"))),
        };
        Ok(m.with_dc(r.dc))
    }
}

impl Method {
    pub fn modularity(gamma: f64) -> Result<Method> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("resolution must be positive, got {gamma}")));
        }
        Ok(Method { kind: MethodKind::Modularity { gamma }, degree_corrected: false })
    }

    pub fn infomap() -> Method {
        Method { kind: MethodKind::Infomap, degree_corrected: false }
    }

    pub fn with_dc(mut self, dc: bool) -> Method {
        self.degree_corrected = dc;
        self
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.kind {
            MethodKind::Modularity { gamma } => Some(gamma),
            MethodKind::Infomap => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MethodKind::Modularity { .. } => "modularity",
            MethodKind::Infomap => "infomap",
        }
    }

    /// Evaluates the objective on a block summary.
    pub fn score(&self, s: &BlockSummary) -> Result<f64> {
        match self.kind {
            MethodKind::Modularity { gamma } => modularity(s, gamma),
            MethodKind::Infomap => infomap_score(s),
        }
    }

    /// Planted-partition value at real-valued `(E_in, E, B)`.
    pub fn planted(&self, e_in: f64, e: f64, b: f64) -> f64 {
        match self.kind {
            MethodKind::Modularity { gamma } => e_in / e - gamma / b,
            MethodKind::Infomap => l_pp_real(e_in, e, b),
        }
    }

    /// Term of the objective that depends only on the totals.
    #[inline]
    pub fn global_term(&self, e_in: u64, e: u64, _b: usize) -> f64 {
        match self.kind {
            MethodKind::Modularity { .. } => 0.0,
            MethodKind::Infomap => -xlogx(1.0 - e_in as f64 / e as f64),
        }
    }

    /// Contribution of one group; zero for an empty group.
    #[inline]
    pub fn group_term(&self, e_rr: u64, e_r: u64, _n_r: u64, e: u64) -> f64 {
        let two_e = 2.0 * e as f64;
        match self.kind {
            MethodKind::Modularity { gamma } => {
                let fr = e_r as f64 / two_e;
                e_rr as f64 / two_e - gamma * fr * fr
            }
            MethodKind::Infomap => {
                let exit = (e_r - e_rr) as f64 / two_e;
                let total = (2 * e_r - e_rr) as f64 / two_e;
                2.0 * xlogx(exit) - xlogx(total)
            }
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            MethodKind::Modularity { gamma } => write!(f, "modularity(gamma={gamma})")?,
            MethodKind::Infomap => write!(f, "infomap")?,
        }
        if self.degree_corrected {
            write!(f, "+dc")?;
        }
        Ok(())
    }
}

fn require_edges(s: &BlockSummary) -> Result<()> {
    if s.e == 0 {
        return Err(Error::UndefinedObjective("graph has no edges".into()));
    }
    Ok(())
}

/// Generalized modularity `(1/2E) Σ_r [e_rr − γ e_r²/2E]`.
pub fn modularity(s: &BlockSummary, gamma: f64) -> Result<f64> {
    require_edges(s)?;
    let two_e = 2.0 * s.e as f64;
    let within: f64 = s.e_rr.iter().map(|&x| x as f64).sum::<f64>() / two_e;
    let null: f64 = s.e_r.iter().map(|&x| (x as f64 / two_e).powi(2)).sum();
    Ok(within - gamma * null)
}

/// Sign-flipped two-level map equation without the degree-entropy term.
pub fn infomap_score(s: &BlockSummary) -> Result<f64> {
    require_edges(s)?;
    let two_e = 2.0 * s.e as f64;
    let x = 1.0 - s.e_rr.iter().sum::<u64>() as f64 / two_e;
    let mut total = -xlogx(x);
    for (&err, &er) in s.e_rr.iter().zip(&s.e_r) {
        total += 2.0 * xlogx((er - err) as f64 / two_e);
        total -= xlogx((2 * er - err) as f64 / two_e);
    }
    Ok(total)
}

/// Planted-partition modularity `E_in/E − γ/B`.
pub fn q_pp(e_in: u64, e: u64, b: u64, gamma: f64) -> f64 {
    e_in as f64 / e as f64 - gamma / b as f64
}

/// Planted-partition Infomap score.
pub fn l_pp(e_in: u64, e: u64, b: u64) -> f64 {
    l_pp_real(e_in as f64, e as f64, b as f64)
}

/// Real-argument form of [`l_pp`].
pub fn l_pp_real(e_in: f64, e: f64, b: f64) -> f64 {
    l_pp_fraction(e_in / e, b)
}

/// [`l_pp`] in terms of the internal fraction `x = E_in/E`.
#[inline]
fn l_pp_fraction(x: f64, b: f64) -> f64 {
    let out = 1.0 - x;
    let exit = out / b;
    let total = (2.0 - x) / b;
    -xlogx(out) + 2.0 * out * if exit > 0.0 { exit.ln() } else { 0.0 } - (2.0 - x) * total.ln()
}

/// Inverse of [`q_pp`] in `E_in`: `E(Q + γ/B)`.
pub fn ein_from_q(q: f64, e: u64, b: u64, gamma: f64) -> Result<f64> {
    let ef = e as f64;
    let v = ef * (q + gamma / b as f64);
    let slack = 1e-9 * ef.max(1.0);
    if !(v >= -slack && v <= ef + slack) {
        return Err(Error::Infeasible(format!("E_in = {v} outside [0, {e}] for Q={q}, B={b}")));
    }
    Ok(v.clamp(0.0, ef))
}

/// Default tolerance in `x = E_in/E` for [`ein_from_l`].
pub const EIN_FROM_L_TOL: f64 = 1e-12;

/// Inverse of [`l_pp`] in `E_in` by bisection over the fraction `x ∈ [0,1]`.
pub fn ein_from_l(l: f64, e: u64, b: u64, tol: f64) -> Result<f64> {
    let bf = b as f64;
    let lo_val = l_pp_fraction(0.0, bf);
    let hi_val = l_pp_fraction(1.0, bf);
    let slack = 1e-12 * (1.0 + l.abs());
    if !(l >= lo_val - slack && l <= hi_val + slack) {
        return Err(Error::Infeasible(format!(
            "L = {l} outside [{lo_val}, {hi_val}] for B={b}"
        )));
    }
    let ef = e as f64;
    if l <= lo_val + slack {
        return Ok(0.0);
    }
    if l >= hi_val - slack {
        return Ok(ef);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let tol = tol.max(f64::EPSILON);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if l_pp_fraction(mid, bf) < l {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(Error::Numeric(format!(
                "ein_from_l failed to bracket L={l} (B={b}, width {})",
                hi - lo
            )));
        }
    }
    Ok(0.5 * (lo + hi) * ef)
}
