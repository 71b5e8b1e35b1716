//! Test-only oracles: dense second-moment construction, a gradient-descent
//! minimizer for quadratics, and central finite differences.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qsense::network_model::{analytic_mse, AutocorrelationModel, ChannelSpec, CombinerWeights};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `E[φ̂ φ̂ᵀ]` for i.i.d. estimates with mean `phase` and variance `sigma_sq`,
/// entry by entry.
pub fn second_moment_matrix(k: usize, sigma_sq: f64, phase: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| {
        let cross = phase * phase;
        if i == j {
            cross + sigma_sq
        } else {
            cross
        }
    })
}

/// `f(x) = xᵀAx − 2bᵀx + c`.
pub struct Quadratic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.a * x)[(0, 0)] - 2.0 * self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a + self.a.transpose()) * x - &self.b * 2.0
    }

    /// ε as a function of `g` for fixed `H`.
    pub fn over_g(h: &DMatrix<f64>, v: f64, sigma_sq: f64, phase: f64) -> Self {
        let k = h.nrows();
        let r = second_moment_matrix(k, sigma_sq, phase);
        let a = h * r * h.transpose() + DMatrix::identity(k, k) * v;
        let b = h * DVector::from_element(k, 1.0) * (phase * phase);
        Quadratic { a, b, c: phase * phase }
    }

    /// ε as a function of `vec(H)` (column-major) for fixed `g`.
    /// `Hᵀg = M vec(H)` with `M[j, i + k·j] = g_i`.
    pub fn over_h(g: &DVector<f64>, v: f64, sigma_sq: f64, phase: f64) -> Self {
        let k = g.len();
        let mut m = DMatrix::zeros(k, k * k);
        for j in 0..k {
            for i in 0..k {
                m[(j, i + k * j)] = g[i];
            }
        }
        let r = second_moment_matrix(k, sigma_sq, phase);
        let a = m.transpose() * r * &m;
        let b = m.transpose() * DVector::from_element(k, 1.0) * (phase * phase);
        Quadratic { a, b, c: v * g.norm_squared() + phase * phase }
    }
}

pub struct Minimum {
    pub value: f64,
    pub argmin: DVector<f64>,
    pub iterations: usize,
}

/// Conjugate gradients with exact line search from `starts` random points.
/// Stops a run when the gradient norm drops to 1e−10 or after 20·n iterations.
pub fn minimize(q: &Quadratic, starts: usize, seed: u64) -> Minimum {
    let n = q.b.len();
    let mut rng = rng(seed);
    let mut best: Option<Minimum> = None;
    for _ in 0..starts {
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut grad = q.gradient(&x);
        let mut dir = -&grad;
        let mut it = 0;
        while it < 20 * n && grad.norm() > 1e-10 {
            let curv = dir.dot(&((&q.a + q.a.transpose()) * &dir));
            if curv <= 0.0 {
                dir = -&grad;
                it += 1;
                continue;
            }
            let alpha = -grad.dot(&dir) / curv;
            x += &dir * alpha;
            let next = q.gradient(&x);
            let beta = if (it + 1) % n == 0 { 0.0 } else { next.norm_squared() / grad.norm_squared() };
            dir = -&next + dir * beta;
            grad = next;
            it += 1;
        }
        let fx = q.value(&x);
        if best.as_ref().is_none_or(|b| fx < b.value) {
            best = Some(Minimum { value: fx, argmin: x, iterations: it });
        }
    }
    best.expect("at least one start")
}

pub fn mse(g: &DVector<f64>, h: &DMatrix<f64>, v: f64, model: &AutocorrelationModel, phase: f64) -> f64 {
    analytic_mse(
        &CombinerWeights::new(g.clone()).unwrap(),
        &ChannelSpec::new(h.clone(), v).unwrap(),
        model,
        phase,
    )
    .unwrap()
    .mse
}

pub fn fd_gradient_g(g: &DVector<f64>, h: &DMatrix<f64>, v: f64, model: &AutocorrelationModel, phase: f64, step: f64) -> DVector<f64> {
    DVector::from_fn(g.len(), |i, _| {
        let (mut p, mut m) = (g.clone(), g.clone());
        p[i] += step;
        m[i] -= step;
        (mse(&p, h, v, model, phase) - mse(&m, h, v, model, phase)) / (2.0 * step)
    })
}

pub fn fd_gradient_h(g: &DVector<f64>, h: &DMatrix<f64>, v: f64, model: &AutocorrelationModel, phase: f64, step: f64) -> DMatrix<f64> {
    DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| {
        let (mut p, mut m) = (h.clone(), h.clone());
        p[(i, j)] += step;
        m[(i, j)] -= step;
        (mse(g, &p, v, model, phase) - mse(g, &m, v, model, phase)) / (2.0 * step)
    })
}

/// Random instance with `σ² = 1/(N_e² r)`, `N_e ≤ 3`, `r ≤ 10`, `φ ∈ (0.05, 0.5)`.
pub struct Instance {
    pub k: usize,
    pub sigma_sq: f64,
    pub phase: f64,
    pub v: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
}

impl Instance {
    pub fn random<R: Rng>(rng: &mut R, k: usize, v: f64) -> Self {
        let n_e = rng.random_range(1..=3usize);
        let r = rng.random_range(1..=10usize);
        Instance {
            k,
            sigma_sq: 1.0 / ((n_e * n_e * r) as f64),
            phase: rng.random_range(0.05..0.5),
            v,
            g: DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0)),
            h: DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)),
        }
    }

    pub fn model(&self) -> AutocorrelationModel {
        AutocorrelationModel::new(self.k, self.sigma_sq, self.phase).unwrap()
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
