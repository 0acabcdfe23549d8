//! Counting integer partitions: `q(m, n)` is the number of ways to write
//! `m` as a sum of at most `n` positive parts (order ignored).

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{ln_binom, ln_fact};

/// Exact evaluation is attempted only for `m` up to this bound.
pub const EXACT_M_LIMIT: u64 = 100_000;

/// Upper bound on big-integer additions spent on one exact evaluation.
const EXACT_OP_BUDGET: u64 = 60_000_000;

/// Whether a value was computed exactly or from the asymptotic expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogQ {
    pub value: f64,
    pub provenance: Provenance,
}

/// Dense table of exact `q(m, n)` for `m ≤ max_m`, `n ≤ max_n`.
#[derive(Debug, Clone)]
pub struct PartitionCountTable {
    max_m: usize,
    max_n: usize,
    cells: Vec<BigUint>,
}

impl PartitionCountTable {
    /// Fills the table with `q(m,n) = q(m,n−1) + q(m−n,n)`.
    pub fn build(max_m: usize, max_n: usize) -> Self {
        let width = max_n + 1;
        let mut cells = vec![BigUint::zero(); (max_m + 1) * width];
        for n in 0..=max_n {
            cells[n] = BigUint::one();
        }
        for m in 1..=max_m {
            for n in 1..=max_n {
                let mut v = cells[m * width + n - 1].clone();
                if m >= n {
                    v += &cells[(m - n) * width + n];
                }
                cells[m * width + n] = v;
            }
        }
        PartitionCountTable { max_m, max_n, cells }
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn get(&self, m: usize, n: usize) -> Option<&BigUint> {
        if m > self.max_m || n > self.max_n {
            return None;
        }
        Some(&self.cells[m * (self.max_n + 1) + n])
    }

    pub fn log(&self, m: usize, n: usize) -> Option<f64> {
        self.get(m, n).map(ln_biguint)
    }

    /// Checks the defining recursion and boundary values on every cell.
    pub fn satisfies_recursion(&self) -> bool {
        let width = self.max_n + 1;
        for m in 0..=self.max_m {
            for n in 0..=self.max_n {
                let v = &self.cells[m * width + n];
                let ok = if m == 0 {
                    v.is_one()
                } else if n == 0 {
                    v.is_zero()
                } else if n == 1 {
                    v.is_one() && {
                        let mut s = self.cells[m * width].clone();
                        if m >= 1 {
                            s += &self.cells[(m - 1) * width + 1];
                        }
                        &s == v
                    }
                } else {
                    let mut s = self.cells[m * width + n - 1].clone();
                    if m >= n {
                        s += &self.cells[(m - n) * width + n];
                    }
                    &s == v
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

/// Natural log of a big unsigned integer; `-inf` for zero.
pub(crate) fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn cache() -> &'static Mutex<HashMap<(u64, u64), LogQ>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), LogQ>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `ln q(m, n)`.
pub fn log_q_partitions(m: u64, n: u64) -> f64 {
    log_q_with_provenance(m, n).value
}

/// `ln q(m, n)` together with how it was obtained.
///
/// Exact big-integer evaluation is used whenever `m ≤ 10^5` and the work
/// stays within a fixed budget; otherwise the Szekeres expansion is used and
/// the result is marked [`Provenance::Asymptotic`]. Results are cached.
pub fn log_q_with_provenance(m: u64, n: u64) -> LogQ {
    if m == 0 {
        return LogQ { value: 0.0, provenance: Provenance::Exact };
    }
    if n == 0 {
        return LogQ { value: f64::NEG_INFINITY, provenance: Provenance::Exact };
    }
    let n = n.min(m);
    if n == 1 {
        return LogQ { value: 0.0, provenance: Provenance::Exact };
    }
    if let Some(v) = cache().lock().expect("q cache poisoned").get(&(m, n)) {
        return *v;
    }
    let v = match exact_log_q(m, n) {
        Some(value) => LogQ { value, provenance: Provenance::Exact },
        None => LogQ { value: log_q_asymptotic(m, n), provenance: Provenance::Asymptotic },
    };
    cache().lock().expect("q cache poisoned").insert((m, n), v);
    v
}

fn exact_log_q(m: u64, n: u64) -> Option<f64> {
    if m > EXACT_M_LIMIT {
        return None;
    }
    let pentagonal_ops = (m as f64 * (1.7 * (m as f64).sqrt() + 1.0)) as u64;
    let dp_ops = n * m;
    if 2 * n >= m && pentagonal_ops <= EXACT_OP_BUDGET {
        // parts larger than n are counted by p(m - j) once j > m/2
        let p = partition_numbers(m as usize);
        let mut total = p[m as usize].clone();
        let mut excluded = BigUint::zero();
        for j in (n + 1)..=m {
            excluded += &p[(m - j) as usize];
        }
        total -= excluded;
        return Some(ln_biguint(&total));
    }
    if dp_ops <= EXACT_OP_BUDGET {
        let m = m as usize;
        let mut a = vec![BigUint::zero(); m + 1];
        a[0] = BigUint::one();
        for j in 1..=n as usize {
            for i in j..=m {
                let (lo, hi) = a.split_at_mut(i);
                hi[0] += &lo[i - j];
            }
        }
        return Some(ln_biguint(&a[m]));
    }
    None
}

/// Unrestricted partition numbers `p(0..=m)` from Euler's pentagonal recurrence.
fn partition_numbers(m: usize) -> Vec<BigUint> {
    let mut p: Vec<BigUint> = Vec::with_capacity(m + 1);
    p.push(BigUint::one());
    for i in 1..=m {
        let mut plus = BigUint::zero();
        let mut minus = BigUint::zero();
        let mut k = 1usize;
        loop {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > i {
                break;
            }
            let target = if k % 2 == 1 { &mut plus } else { &mut minus };
            *target += &p[i - g1];
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= i {
                *target += &p[i - g2];
            }
            k += 1;
        }
        p.push(plus - minus);
    }
    p
}

/// Dilogarithm `Li₂(x)` for `x ≤ 1`.
pub fn dilog(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x == 1.0 {
        return PI * PI / 6.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    if x > 0.5 {
        return PI * PI / 6.0 - x.ln() * (-x).ln_1p() - dilog(1.0 - x);
    }
    if x < -1.0 {
        // Li2(x) = -π²/6 - ln²(-x)/2 - Li2(1/x)
        let l = (-x).ln();
        return -PI * PI / 6.0 - 0.5 * l * l - dilog(1.0 / x);
    }
    if x < -0.5 {
        // Li2(x) = -Li2(x/(x-1)) - ln²(1-x)/2, argument lands in (1/3, 1/2]
        let l = (-x).ln_1p();
        return -dilog(x / (x - 1.0)) - 0.5 * l * l;
    }
    let mut term = x;
    let mut sum = 0.0f64;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        sum += term / (k * k);
        k += 1.0;
        term *= x;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn szekeres_v(u: f64) -> f64 {
    let mut v = u;
    for _ in 0..10_000 {
        let next = u * dilog(1.0 - (-v).exp()).sqrt();
        if (next - v).abs() <= 1e-14 * v.abs().max(1.0) {
            return next;
        }
        v = next;
    }
    v
}

/// Asymptotic `ln q(m, n)` (Szekeres), with the small-`n` form
/// `ln C(m−1, n−1) − ln n!` when `n < m^{1/4}`.
pub fn log_q_asymptotic(m: u64, n: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = n.min(m);
    if n <= 1 {
        return if n == 1 { 0.0 } else { f64::NEG_INFINITY };
    }
    let mf = m as f64;
    let nf = n as f64;
    if nf < mf.powf(0.25) {
        return ln_binom(mf - 1.0, nf - 1.0) - ln_fact(nf);
    }
    let u = nf / mf.sqrt();
    let v = szekeres_v(u);
    let lf = v.ln() - 0.5 * (-(-v).exp() * (1.0 + 0.5 * u * u)).ln_1p()
        - 1.5 * std::f64::consts::LN_2
        - u.ln()
        - std::f64::consts::PI.ln();
    let g = 2.0 * v / u - u * (-(-v).exp()).ln_1p();
    lf - mf.ln() + mf.sqrt() * g
}
