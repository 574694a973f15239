//! Adaptive Dormand-Prince 5(4) integration with forced stops.

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-11,
            atol: 1e-13,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One accepted step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub x: f64,
    pub y: Vec<f64>,
}

/// Integrates `y' = f(x, y)` from `x0` through every entry of `stops`
/// (increasing, all `> x0`), landing exactly on each. `f` returns `None` to
/// signal that the state left its domain. `halt` may end the run early after
/// any accepted step; states for stops not reached are then absent.
///
/// Returns the states at the stops reached and the list of all accepted steps.
pub fn integrate<F, H>(
    mut f: F,
    x0: f64,
    y0: &[f64],
    stops: &[f64],
    tol: Tolerances,
    h0: f64,
    mut halt: H,
) -> Result<(Vec<Vec<f64>>, Vec<StepRecord>), String>
where
    F: FnMut(f64, &[f64]) -> Option<Vec<f64>>,
    H: FnMut(f64, &[f64]) -> bool,
{
    let n = y0.len();
    let mut x = x0;
    let mut y = y0.to_vec();
    let mut h = h0.abs().max(1e-12);
    let mut out = Vec::with_capacity(stops.len());
    let mut steps = vec![StepRecord { x, y: y.clone() }];
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut k0 = f(x, &y).ok_or_else(|| format!("vector field undefined at x = {x}"))?;
    let mut stop_idx = 0;
    let mut rejects = 0usize;
    while stop_idx < stops.len() {
        let target = stops[stop_idx];
        let mut step = h.min(target - x);
        let landing = step >= target - x;
        if landing {
            step = target - x;
        }
        k[0].copy_from_slice(&k0);
        let mut ok = true;
        for stage in 1..7 {
            let mut yt = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..n {
                        yt[i] += step * a * kj[i];
                    }
                }
            }
            match f(x + C[stage] * step, &yt) {
                Some(v) => k[stage] = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        let (mut y5, mut err) = (y.clone(), 0.0f64);
        if ok {
            for i in 0..n {
                let mut s5 = 0.0;
                let mut s4 = 0.0;
                for j in 0..7 {
                    s5 += B5[j] * k[j][i];
                    s4 += B4[j] * k[j][i];
                }
                y5[i] = y[i] + step * s5;
                let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((step * (s5 - s4)).abs() / sc);
            }
            if !err.is_finite() {
                ok = false;
            }
        }
        if !ok {
            h = 0.25 * step;
            rejects += 1;
            if h < 1e-14 * (1.0 + x.abs()) || rejects > 10_000 {
                return Err(format!("step size underflow at x = {x}"));
            }
            continue;
        }
        if err <= 1.0 {
            x = if landing { target } else { x + step };
            y = y5;
            k0 = k[6].clone();
            steps.push(StepRecord { x, y: y.clone() });
            if landing {
                out.push(y.clone());
                stop_idx += 1;
            }
            if halt(x, &y) {
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !landing || fac < 1.0 {
                h = step * fac;
            } else {
                h = h.max(step * fac);
            }
        } else {
            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            rejects += 1;
            if h < 1e-14 * (1.0 + x.abs()) || rejects > 1_000_000 {
                return Err(format!("step size underflow at x = {x}"));
            }
        }
    }
    Ok((out, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let stops: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let (ys, _) = integrate(
            |_, y| Some(vec![y[1], -y[0]]),
            0.0,
            &[1.0, 0.0],
            &stops,
            Tolerances::default(),
            0.1,
            |_, _| false,
        )
        .unwrap();
        for (x, y) in stops.iter().zip(&ys) {
            assert!((y[0] - x.cos()).abs() < 1e-9);
            assert!((y[1] + x.sin()).abs() < 1e-9);
        }
    }
}
