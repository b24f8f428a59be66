//! Exact statistics without sampling error.
//!
//! Random-pick and unanimity models are enumerated over their hidden picks and
//! outcome tables. The tomography model is evaluated through the Legendre
//! expansion of the threshold readout: with `c = A·B` distributed as
//! `(N+1)/2 ((1−c)/2)^N`, only degrees `l ≤ N` survive, so
//!
//! `E[f(a·A) g(b·B)] = Σ_{l≤N} f_l g_l P_l(a·b) E[P_l(c)] / (2l+1)`
//!
//! is a finite sum. The infinite-copy limit shares one axis and is integrated
//! directly over `a·A` with the azimuthal cap fraction in closed form.

use std::f64::consts::PI;

use crate::geometry::{legendre, Direction, GaussLegendre, DEFAULT_QUADRATURE_NODES};
use crate::models::{Copies, Model, ModelConfig};
use crate::quantum::{preselection_weight, quantum_correlation};

use super::stats::{RunStatistics, Table};
use super::EstimateError;

/// Largest finite copy count the Legendre route handles exactly with the
/// default 64-node rule (polynomial degree ≤ 127).
pub const MAX_EXACT_TOMOGRAPHY_COPIES: u32 = 60;

const MINUS: usize = 0;
const ZERO: usize = 1;
const PLUS: usize = 2;

/// Exact per-pair tables for every setting pair of the configured model.
pub fn enumerate_exact(config: &ModelConfig) -> Result<RunStatistics, EstimateError> {
    let model = Model::from_config(config)?;
    let alice = model.alice_directions();
    let bob = model.bob_directions();
    let mut tables = Vec::with_capacity(alice.len() * bob.len());
    let mut preselection = None;
    match &model {
        Model::RandomPick { .. } => {
            for a in alice {
                for b in bob {
                    tables.push(random_pick_table(a, b, alice.len(), bob.len()));
                }
            }
        }
        Model::Unanimity { n_copies, .. } => {
            if *n_copies > 10 {
                return Err(EstimateError::Unsupported(format!(
                    "exact unanimity enumeration is limited to N <= 10, got {n_copies}"
                )));
            }
            for a in alice {
                for b in bob {
                    tables.push(unanimity_table(a, b, *n_copies, bob.len()));
                }
            }
        }
        Model::Tomography { n_copies, q_alice, q_bob, .. } => {
            let gl = GaussLegendre::new(DEFAULT_QUADRATURE_NODES).expect("nodes >= 2");
            let moments = match n_copies {
                Copies::Finite(n) if *n > MAX_EXACT_TOMOGRAPHY_COPIES => {
                    return Err(EstimateError::Unsupported(format!(
                        "exact tomography is limited to N <= {MAX_EXACT_TOMOGRAPHY_COPIES}, got {n}"
                    )))
                }
                Copies::Finite(n) => {
                    preselection = Some(preselection_weight(*n));
                    Some(pair_legendre_moments(*n, &gl))
                }
                Copies::Infinite => None,
            };
            for a in alice {
                for b in bob {
                    let cos_phi = a.dot(b).clamp(-1.0, 1.0);
                    let (tt, mut dd) = match &moments {
                        Some(m) => legendre_expectations(cos_phi, *q_alice, *q_bob, m),
                        None => shared_axis_expectations(cos_phi, *q_alice, *q_bob, &gl),
                    };
                    // a side without deadzone always detects
                    if *q_alice == 0.0 {
                        dd = 1.0 - q_bob;
                    } else if *q_bob == 0.0 {
                        dd = 1.0 - q_alice;
                    }
                    tables.push(threshold_table(tt, dd, *q_alice, *q_bob));
                }
            }
        }
    }
    Ok(RunStatistics::from_exact(alice.len(), bob.len(), tables).with_preselection(preselection))
}

/// Both parties pick one of their `M` directions uniformly; the singlet is
/// measured only along the picked pair.
fn random_pick_table(a: &Direction, b: &Direction, ma: usize, mb: usize) -> Table {
    let pa = 1.0 / ma as f64;
    let pb = 1.0 / mb as f64;
    let e = quantum_correlation(a, b);
    let mut t = [[0.0; 3]; 3];
    for (ia, sa) in [(MINUS, -1.0), (PLUS, 1.0)] {
        for (ib, sb) in [(MINUS, -1.0), (PLUS, 1.0)] {
            t[ia][ib] = pa * pb * (1.0 + sa * sb * e) / 4.0;
        }
        t[ia][ZERO] = pa * (1.0 - pb) / 2.0;
        t[ZERO][ia] = (1.0 - pa) * pb / 2.0;
    }
    t[ZERO][ZERO] = (1.0 - pa) * (1.0 - pb);
    t
}

/// Bob registers with probability `(1/M)·2^{1−N}`; given his unanimous value
/// `β`, Alice's copy was steered to `−β·b`.
fn unanimity_table(a: &Direction, b: &Direction, n_copies: u32, mb: usize) -> Table {
    let each = 2f64.powi(-(n_copies as i32)) / mb as f64;
    let overlap = a.dot(b);
    let mut t = [[0.0; 3]; 3];
    for (ia, sa) in [(MINUS, -1.0), (PLUS, 1.0)] {
        let mut registered = 0.0;
        for (ib, sb) in [(MINUS, -1.0), (PLUS, 1.0)] {
            t[ia][ib] = each * (1.0 - sa * sb * overlap) / 2.0;
            registered += t[ia][ib];
        }
        t[ia][ZERO] = 0.5 - registered;
    }
    t
}

/// Table of two threshold readouts from `E[t_A t_B]` and `E[d_A d_B]`, where
/// `t` is the signed readout and `d = t²` the detection indicator. Mixed
/// parity terms vanish by the `(A,B) → (−A,−B)` symmetry.
fn threshold_table(tt: f64, dd: f64, qa: f64, qb: f64) -> Table {
    let da = 1.0 - qa;
    let db = 1.0 - qb;
    let mut t = [[0.0; 3]; 3];
    t[PLUS][PLUS] = (dd + tt) / 4.0;
    t[MINUS][MINUS] = (dd + tt) / 4.0;
    t[PLUS][MINUS] = (dd - tt) / 4.0;
    t[MINUS][PLUS] = (dd - tt) / 4.0;
    t[PLUS][ZERO] = (da - dd) / 2.0;
    t[MINUS][ZERO] = (da - dd) / 2.0;
    t[ZERO][PLUS] = (db - dd) / 2.0;
    t[ZERO][MINUS] = (db - dd) / 2.0;
    t[ZERO][ZERO] = 1.0 - da - db + dd;
    t
}

/// `E[P_l(A·B)]` for `l = 0..=N` under the tomography pair law.
pub fn pair_legendre_moments(n_copies: u32, gl: &GaussLegendre) -> Vec<f64> {
    let n = f64::from(n_copies);
    (0..=n_copies as usize)
        .map(|l| gl.integrate(|c| legendre(l, c) * 0.5 * (n + 1.0) * ((1.0 - c) / 2.0).powi(n_copies as i32)))
        .collect()
}

/// Legendre coefficient of degree `l ≥ 1` for the readout thresholded at `q`
/// (odd `l`: signed readout, even `l`: detection indicator).
fn threshold_coefficient(l: usize, q: f64) -> f64 {
    if l == 0 {
        1.0 - q
    } else {
        legendre(l - 1, q) - legendre(l + 1, q)
    }
}

fn legendre_expectations(cos_phi: f64, qa: f64, qb: f64, moments: &[f64]) -> (f64, f64) {
    let mut tt = 0.0;
    let mut dd = 0.0;
    for (l, m) in moments.iter().enumerate() {
        let term =
            threshold_coefficient(l, qa) * threshold_coefficient(l, qb) * legendre(l, cos_phi) * m / (2 * l + 1) as f64;
        if l % 2 == 1 {
            tt += term;
        } else {
            dd += term;
        }
    }
    (tt, dd)
}

/// `E[t_A t_B]`, `E[d_A d_B]` for one shared uniform axis (`B = A`).
///
/// With `x = a·A` uniform on `[−1, 1]`, `b·A = x cosφ + √(1−x²) sinφ cosψ`
/// and ψ uniform, so each conditional cap probability is an arccos.
pub fn shared_axis_expectations(cos_phi: f64, qa: f64, qb: f64, gl: &GaussLegendre) -> (f64, f64) {
    let phi = cos_phi.clamp(-1.0, 1.0).acos();
    let sin_phi = phi.sin();
    let cap = |x: f64, level: f64, upper: bool| -> f64 {
        // P(±(b·A) > level | a·A = x)
        let center = if upper { x * cos_phi } else { -x * cos_phi };
        let spread = (1.0 - x * x).max(0.0).sqrt() * sin_phi;
        if spread <= 1e-15 {
            return if center > level { 1.0 } else { 0.0 };
        }
        ((level - center) / spread).clamp(-1.0, 1.0).acos() / PI
    };
    let integrand = |x: f64| -> (f64, f64) {
        let ta = crate::models::threshold_readout(x, qa).value() as f64;
        if ta == 0.0 {
            return (0.0, 0.0);
        }
        let up = cap(x, qb, true);
        let down = cap(x, qb, false);
        (0.5 * ta * (up - down), 0.5 * (up + down))
    };

    let mut breaks = vec![-1.0, 1.0, -qa, qa];
    for beta in [qb.acos(), (-qb).acos()] {
        breaks.push((phi + beta).cos());
        breaks.push((phi - beta).cos());
    }
    breaks.retain(|x| x.is_finite());
    for x in breaks.iter_mut() {
        *x = x.clamp(-1.0, 1.0);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut tt = 0.0;
    let mut dd = 0.0;
    for w in breaks.windows(2) {
        tt += gl.integrate_on_smoothed(w[0], w[1], |x| integrand(x).0);
        dd += gl.integrate_on_smoothed(w[0], w[1], |x| integrand(x).1);
    }
    (tt, dd)
}
