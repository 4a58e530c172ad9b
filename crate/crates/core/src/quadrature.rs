//! Adaptive Gauss–Kronrod quadrature (7-point Gauss, 15-point Kronrod) for scalar and vector integrands.

const MAX_DEPTH: u32 = 48;

/// Kronrod abscissae on `[0, 1]`; odd indices are the 7-point Gauss–Legendre nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss–Legendre weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    /// Sum over accepted panels of the discrepancy between one and two panel estimates.
    pub error: f64,
}

struct Scratch {
    buf: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
}

/// 15-point Kronrod estimate and its discrepancy from the embedded 7-point Gauss rule.
fn panel<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, s: &mut Scratch) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    s.kronrod.iter_mut().for_each(|v| *v = 0.0);
    s.gauss.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..8 {
        let xs: &[f64] = if k == 7 { &[0.0] } else { &[-XGK[k], XGK[k]] };
        for &x in xs {
            f(mid + half * x, &mut s.buf);
            for (acc, v) in s.kronrod.iter_mut().zip(&s.buf) {
                *acc += WGK[k] * half * v;
            }
            if k % 2 == 1 {
                for (acc, v) in s.gauss.iter_mut().zip(&s.buf) {
                    *acc += WG[k / 2] * half * v;
                }
            }
        }
    }
    s.kronrod.iter().zip(&s.gauss).map(|(k, g)| (k - g).abs()).fold(0.0, f64::max)
}

/// Integrates a vector-valued `f` over `[a, b]` to absolute tolerance `tol` in the max norm,
/// bisecting panels whose Kronrod/Gauss discrepancy exceeds their share of `tol`.
/// `f(x, out)` must fill all `dim` components of `out`.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(mut f: F, a: f64, b: f64, dim: usize, tol: f64) -> Quadrature<Vec<f64>> {
    let mut total = vec![0.0; dim];
    if !(b > a) || dim == 0 {
        return Quadrature { value: total, error: 0.0 };
    }
    let mut s = Scratch { buf: vec![0.0; dim], kronrod: vec![0.0; dim], gauss: vec![0.0; dim] };
    let width = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut error = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let diff = panel(&mut f, lo, hi, &mut s);
        let scale = s.kronrod.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let budget = (tol * (hi - lo) / width).max(50.0 * f64::EPSILON * scale);
        if diff <= budget || depth >= MAX_DEPTH {
            for (t, k) in total.iter_mut().zip(&s.kronrod) {
                *t += k;
            }
            error += diff;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Quadrature { value: total, error }
}

/// Integrates a scalar `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Quadrature<f64> {
    let q = integrate_vec(|x, out| out[0] = f(x), a, b, 1, tol);
    Quadrature { value: q.value[0], error: q.error }
}
