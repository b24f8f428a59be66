//! Unit-sphere directions, seeded random streams, pair sampling for the
//! coherent-state tomography model, and Gauss–Legendre quadrature.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Neg;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

/// Default node count for the deterministic 1-D quadrature.
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("direction has zero or non-finite length")]
    Degenerate,
    #[error("direction norm {0} is not 1 within 1e-12")]
    NotUnit(f64),
    #[error("copy count must be at least 1")]
    InvalidCopies,
    #[error("cosine {0} lies outside [-1, 1]")]
    Domain(f64),
    #[error("quadrature needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
}

/// A unit vector on the measurement (Bloch) sphere.
#[derive(Clone, Copy, PartialEq)]
pub struct Direction([f64; 3]);

impl Direction {
    pub const X: Direction = Direction([1.0, 0.0, 0.0]);
    pub const Y: Direction = Direction([0.0, 1.0, 0.0]);
    pub const Z: Direction = Direction([0.0, 0.0, 1.0]);

    /// Normalizes an arbitrary non-zero finite vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(GeometryError::Degenerate);
        }
        Ok(Direction([x / norm, y / norm, z / norm]))
    }

    /// Accepts a vector only if it is already unit length.
    pub fn from_unit(v: [f64; 3]) -> Result<Self, GeometryError> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(GeometryError::Degenerate);
        }
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeometryError::NotUnit(norm));
        }
        Ok(Direction(v))
    }

    /// Direction with polar angle `theta` from +z and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction([st * cp, st * sp, ct])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Polar angle from +z and azimuth, as used for the Bloch parametrization.
    pub fn angles(&self) -> (f64, f64) {
        let theta = self.0[2].clamp(-1.0, 1.0).acos();
        let phi = self.0[1].atan2(self.0[0]);
        (theta, phi)
    }

    /// Two unit vectors completing `self` to a right-handed orthonormal frame.
    pub fn orthonormal_basis(&self) -> ([f64; 3], [f64; 3]) {
        // Branchless construction of Duff et al. (2017).
        let [x, y, z] = self.0;
        let sign = 1.0f64.copysign(z);
        let a = -1.0 / (sign + z);
        let b = x * y * a;
        ([1.0 + sign * x * x * a, sign * b, -sign * x], [b, sign + y * y * a, -y])
    }
}

impl Neg for Direction {
    type Output = Direction;

    fn neg(self) -> Direction {
        Direction([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Direction({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Seeded pseudo-random stream. Equal `(seed, stream)` pairs yield identical
/// sequences; distinct stream indices are independent ChaCha streams.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream { inner }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn sample_uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    // Marsaglia's method is unit length up to rounding; renormalize anyway.
    let norm = (x * x + y * y + z * z).sqrt();
    Direction([x / norm, y / norm, z / norm])
}

/// Samples `(A, B)` from the normalized tomography density
/// `∝ ((1 - A·B)/2)^n_copies`.
pub fn sample_pair<R: Rng + ?Sized>(n_copies: u32, rng: &mut R) -> Result<(Direction, Direction), GeometryError> {
    if n_copies == 0 {
        return Err(GeometryError::InvalidCopies);
    }
    Ok(sample_pair_exponent(n_copies, rng))
}

/// Same as [`sample_pair`] but accepts exponent 0 (independent uniform pair).
///
/// `A` is uniform, `u = (1 - A·B)/2` has density `(n+1) u^n` on `[0, 1]`, and
/// `B` is uniform in azimuth about `A`.
pub fn sample_pair_exponent<R: Rng + ?Sized>(exponent: u32, rng: &mut R) -> (Direction, Direction) {
    let a = sample_uniform_direction(rng);
    // 1 - U lies in (0, 1], so u is never exactly zero by accident of U = 0.
    let uniform: f64 = 1.0 - rng.random::<f64>();
    let u = uniform.powf(1.0 / (f64::from(exponent) + 1.0));
    let cos_theta = 1.0 - 2.0 * u;
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (sin_psi, cos_psi) = (2.0 * PI * rng.random::<f64>()).sin_cos();
    let (e1, e2) = a.orthonormal_basis();
    let av = a.as_array();
    let mut b = [0.0; 3];
    for k in 0..3 {
        b[k] = cos_theta * av[k] + sin_theta * (cos_psi * e1[k] + sin_psi * e2[k]);
    }
    let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    (a, Direction([b[0] / norm, b[1] / norm, b[2] / norm]))
}

/// Conditional joint density of the tomography pair, per unit solid angle on
/// each sphere: `(N+1)/(4π)² · ((1 - cos)/2)^N`. Integrates to 1.
pub fn pair_density(n_copies: u32, cos_angle: f64) -> Result<f64, GeometryError> {
    if n_copies == 0 {
        return Err(GeometryError::InvalidCopies);
    }
    if !(-1.0..=1.0).contains(&cos_angle) {
        return Err(GeometryError::Domain(cos_angle));
    }
    let n = f64::from(n_copies);
    Ok((n + 1.0) / (16.0 * PI * PI) * ((1.0 - cos_angle) / 2.0).powi(n_copies as i32))
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::TooFewNodes(n));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[-1, 1]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Integral of `f` over `[lo, hi]`.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self.integrate(|s| f(mid + half * s))
    }

    /// Integral over `[lo, hi]` after the substitution `x = mid + half·sin(πs/2)`,
    /// which flattens square-root behaviour at both endpoints.
    pub fn integrate_on_smoothed<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let scale = 0.5 * PI;
        half * scale
            * self.integrate(|s| {
                let (sn, cs) = (scale * s).sin_cos();
                f(mid + half * sn) * cs
            })
    }
}

/// Gauss–Legendre estimate of `∫_{-1}^{1} f(c) dc`.
///
/// # Panics
/// If `nodes < 2`.
pub fn cap_overlap_quadrature<F: Fn(f64) -> f64>(f: F, nodes: usize) -> f64 {
    GaussLegendre::new(nodes).expect("cap_overlap_quadrature needs at least 2 nodes").integrate(f)
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre(l: usize, x: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..l {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let p = legendre(n, x);
    let pm1 = legendre(n - 1, x);
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}
