//! Shared test oracles, independent of the library's solver internals.

use gugt_core::classifier::{rbf_kernel, SvmModel};

/// Dense kernel matrix over standardized inputs, built through the public
/// scaler so oracle and solver see the same geometry.
pub fn kernel_matrix(model: &SvmModel, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let z: Vec<Vec<f64>> = x.iter().map(|r| model.scaler.apply(r).unwrap()).collect();
    let n = z.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = rbf_kernel(&z[i], &z[j], model.gamma).unwrap();
        }
    }
    k
}

/// SVM dual objective: sum(alpha) - 1/2 * alpha' Q alpha, Q = yy' .* K.
pub fn dual_objective(alpha: &[f64], y: &[f64], kernel: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut linear = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        linear += alpha[i];
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i][j];
        }
    }
    linear - 0.5 * quad
}

/// Projects v onto the intersection of the box [0, C]^n and the hyperplane
/// y'a = 0, by bisection on the hyperplane multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let clip = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect()
    };
    let residual = |lambda: f64| -> f64 {
        clip(lambda).iter().zip(y).map(|(a, &yi)| a * yi).sum()
    };
    let bound = c + v.iter().fold(0.0f64, |m, &x| m.max(x.abs())) + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip(0.5 * (lo + hi))
}

/// Independent reference solver for the C-SVM dual: projected gradient
/// ascent with a conservative step size. Returns (alpha, dual objective).
pub fn projected_gradient_qp(y: &[f64], kernel: &[Vec<f64>], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    // Lipschitz bound on the gradient: infinity norm of Q.
    let mut lip: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| (y[i] * y[j] * kernel[i][j]).abs()).sum();
        lip = lip.max(row);
    }
    let step = 1.0 / lip.max(1e-12);

    let mut alpha = project(&vec![c / 2.0; n], y, c);
    for _ in 0..200_000 {
        let mut grad = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                grad[i] -= y[i] * y[j] * kernel[i][j] * alpha[j];
            }
        }
        let proposed: Vec<f64> = alpha.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
        let next = project(&proposed, y, c);
        let delta: f64 = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        alpha = next;
        if delta < 1e-13 {
            break;
        }
    }
    let obj = dual_objective(&alpha, y, kernel);
    (alpha, obj)
}

/// Reconstructs the full alpha vector (zeros included) from a trained
/// model by walking the training set in order and matching standardized
/// vectors against the retained support vectors bitwise.
pub fn full_alphas(model: &SvmModel, x: &[Vec<f64>]) -> Vec<f64> {
    let mut alphas = vec![0.0; x.len()];
    let mut next_sv = 0;
    for (i, xi) in x.iter().enumerate() {
        if next_sv >= model.support_vectors.len() {
            break;
        }
        let z = model.scaler.apply(xi).unwrap();
        if z == model.support_vectors[next_sv] {
            alphas[i] = model.alpha[next_sv];
            next_sv += 1;
        }
    }
    assert_eq!(
        next_sv,
        model.support_vectors.len(),
        "every support vector must match a training point"
    );
    alphas
}

/// Max KKT residual over all training points, computed from public model
/// output only.
pub fn max_kkt_residual(model: &SvmModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let alphas = full_alphas(model, x);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let margin = y[i] * model.decision_value(&x[i]).unwrap();
        let a = alphas[i];
        let residual = if a <= 1e-12 {
            (1.0 - margin).max(0.0)
        } else if a >= model.c - 1e-12 {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(residual);
    }
    worst
}
