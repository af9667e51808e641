//! One split step against a dense RK4 integration of the method-of-lines
//! system the scheme discretizes in time. The local error of a first-order
//! step is O(dt^2).

use mhd1d_core::*;

/// Packed unknowns: v (n), theta (n), u (n+1), w1, w2, b1, b2 (n+1 each).
fn pack(s: &SimState) -> Vec<f64> {
    let mut y = Vec::new();
    y.extend(&s.v);
    y.extend(&s.theta);
    y.extend(&s.u);
    for k in 0..2 {
        y.extend(s.w.iter().map(|w| w[k]));
    }
    for k in 0..2 {
        y.extend(s.b.iter().map(|b| b[k]));
    }
    y
}

fn rhs(y: &[f64], n: usize, p: &PhysParams) -> Vec<f64> {
    let dx = 1.0 / n as f64;
    let m = n + 1;
    let v = &y[0..n];
    let th = &y[n..2 * n];
    let u = &y[2 * n..2 * n + m];
    let node = |f: usize| &y[2 * n + m * f..2 * n + m * (f + 1)];
    let (w, b) = ([node(1), node(2)], [node(3), node(4)]);
    let vbar = |j: usize| 0.5 * (v[j - 1] + v[j]);
    let grad = |q: &[f64], c: usize| (q[c + 1] - q[c]) / dx;
    let central = |q: &[f64], j: usize| (q[j + 1] - q[j - 1]) / (2.0 * dx);
    let lap = |q: &[f64], j: usize, coef: f64| {
        coef * ((q[j + 1] - q[j]) / v[j] - (q[j] - q[j - 1]) / v[j - 1]) / (dx * dx)
    };

    let mut out = vec![0.0; y.len()];
    let bsq = |j: usize| b[0][j] * b[0][j] + b[1][j] * b[1][j];
    let total_p = |c: usize| p.r_gas * th[c] / v[c] + 0.25 * (bsq(c) + bsq(c + 1));
    for c in 0..n {
        out[c] = grad(u, c);
        let ux = grad(u, c);
        let mut heat = p.mu * ux * ux;
        for k in 0..2 {
            heat += p.lambda * grad(w[k], c).powi(2) + p.nu * grad(b[k], c).powi(2);
        }
        let flux = |face: usize| {
            let kappa = 0.5 * (p.conductivity(th[face - 1]) + p.conductivity(th[face]));
            kappa * (th[face] - th[face - 1]) / (dx * vbar(face))
        };
        let right = if c + 1 < n { flux(c + 1) } else { 0.0 };
        let left = if c > 0 { flux(c) } else { 0.0 };
        out[n + c] = ((right - left) / dx - p.r_gas * th[c] / v[c] * ux + heat / v[c]) / p.c_v;
    }
    for j in 1..n {
        out[2 * n + j] = -(total_p(j) - total_p(j - 1)) / dx + lap(u, j, p.mu);
        for k in 0..2 {
            out[2 * n + m * (1 + k) + j] = central(b[k], j) + lap(w[k], j, p.lambda);
            out[2 * n + m * (3 + k) + j] =
                (central(w[k], j) - b[k][j] * central(u, j) + lap(b[k], j, p.nu)) / vbar(j);
        }
    }
    out
}

fn rk4(mut y: Vec<f64>, n: usize, p: &PhysParams, t: f64, substeps: usize) -> Vec<f64> {
    let h = t / substeps as f64;
    let axpy = |y: &[f64], k: &[f64], a: f64| y.iter().zip(k).map(|(y, k)| y + a * k).collect::<Vec<_>>();
    for _ in 0..substeps {
        let k1 = rhs(&y, n, p);
        let k2 = rhs(&axpy(&y, &k1, 0.5 * h), n, p);
        let k3 = rhs(&axpy(&y, &k2, 0.5 * h), n, p);
        let k4 = rhs(&axpy(&y, &k3, h), n, p);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn one_step_local_error_is_second_order() {
    let n = 50;
    let p = PhysParams::normalized(1.0).unwrap();
    let s = make_initial(&InitFamily::single_mode(0.1), Grid::new(n).unwrap()).unwrap();
    let controls = StepControls {
        picard_tol: 1e-14,
        ..Default::default()
    };
    let y0 = pack(&s);

    let local_error = |dt: f64| {
        let (next, _) = step(&s, &p, &controls, dt, None).unwrap();
        let exact = rk4(y0.clone(), n, &p, dt, 200);
        pack(&next)
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };

    let base = compute_dt(&s, &p, &controls).unwrap() / 256.0;
    let errors: Vec<f64> = (0..4).map(|i| local_error(base / 2f64.powi(i))).collect();
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order > 1.8 && order < 2.2, "errors {errors:?}");
    }
    assert!(errors[0] < 1e-5, "errors {errors:?}");
}
