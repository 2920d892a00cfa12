//! Smooth bump weights supported in [1/2, 1] and their Mellin transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_INTERVALS: usize = 1 << 14;
/// Above this height the initial subdivision resolves the oscillation of y^{it}.
const OSCILLATORY_HEIGHT: f64 = 200.0;
const NODES_PER_PERIOD: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightFamily {
    /// exp(-β / ((y - 1/2)(1 - y))) on (1/2, 1).
    ExpBump,
}

/// ω(y) = amplitude · exp(log_peak − β/((y − 1/2)(1 − y))) on (1/2, 1), zero elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothWeight {
    pub family: WeightFamily,
    beta: f64,
    log_peak: f64,
    amplitude: f64,
    tolerance: f64,
}

impl Default for SmoothWeight {
    fn default() -> Self {
        SmoothWeight::clamped(1.0).expect("β = 1 is valid")
    }
}

impl SmoothWeight {
    /// The bare bump, c = 1.
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("sharpness β must be positive, got {beta}")));
        }
        Ok(SmoothWeight { family: WeightFamily::ExpBump, beta, log_peak: 0.0, amplitude: 1.0, tolerance: DEFAULT_TOLERANCE })
    }

    /// Normalized so that max ω = ω(3/4) = 1, hence 0 <= ω <= 1.
    pub fn clamped(beta: f64) -> Result<Self> {
        let mut w = Self::new(beta)?;
        w.log_peak = 16.0 * beta;
        Ok(w)
    }

    /// The weight multiplied by a positive constant.
    pub fn scaled(mut self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("weight scale factor must be positive"));
        }
        self.amplitude *= factor;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// The constant c in c·exp(−β/((y−½)(1−y))).
    pub fn normalization(&self) -> f64 {
        self.amplitude * self.log_peak.exp()
    }

    pub fn is_clamped(&self) -> bool {
        self.log_peak != 0.0 && self.amplitude <= 1.0
    }

    #[inline]
    fn log_shape(&self, y: f64) -> Option<f64> {
        if y <= 0.5 || y >= 1.0 {
            return None;
        }
        Some(self.log_peak - self.beta / ((y - 0.5) * (1.0 - y)))
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.log_shape(y).map_or(0.0, |l| self.amplitude * l.exp())
    }
}

/// ω(y) for the given weight.
pub fn bump(y: f64, w: &SmoothWeight) -> f64 {
    w.eval(y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MellinValue {
    pub s: Complex64,
    pub value: Complex64,
    /// Σ |K15 − G7| over the final subintervals.
    pub error: f64,
}

/// ω̃(s) = ∫_{1/2}^{1} y^{s−1} ω(y) dy to the weight's tolerance.
pub fn mellin(w: &SmoothWeight, s: Complex64) -> Result<MellinValue> {
    mellin_with_tolerance(w, s, w.tolerance)
}

/// The tolerance applies to the bump without its amplitude factor, so rescaling ω
/// rescales the result exactly.
pub fn mellin_with_tolerance(w: &SmoothWeight, s: Complex64, tol: f64) -> Result<MellinValue> {
    let integrand = |y: f64| -> Complex64 {
        match w.log_shape(y) {
            None => Complex64::new(0.0, 0.0),
            Some(l) => {
                let ly = y.ln();
                let mag = (l + (s.re - 1.0) * ly).exp();
                let ph = s.im * ly;
                Complex64::new(mag * ph.cos(), mag * ph.sin())
            }
        }
    };
    // dyadic start; at large heights, enough pieces for 8 nodes per period of y^{it}
    let mut pieces = 4usize;
    if s.im.abs() > OSCILLATORY_HEIGHT {
        let periods = s.im.abs() * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI);
        let need = (periods * NODES_PER_PERIOD / 15.0).ceil() as usize;
        pieces = need.next_power_of_two().max(pieces);
    }
    let h = 0.5 / pieces as f64;
    let mut intervals: Vec<Segment> = (0..pieces).map(|i| Segment::new(0.5 + i as f64 * h, 0.5 + (i + 1) as f64 * h, &integrand)).collect();
    loop {
        let err: f64 = intervals.iter().map(|seg| seg.err).sum();
        if err <= tol {
            let value = intervals.iter().fold(Complex64::new(0.0, 0.0), |acc, seg| acc + seg.value);
            return Ok(MellinValue { s, value: value * w.amplitude, error: err * w.amplitude });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure(format!("ω̃({s}) did not reach tolerance {tol:e} (estimate {err:e})")));
        }
        let (worst, _) = intervals.iter().enumerate().fold((0, -1.0), |best, (i, seg)| if seg.err > best.1 { (i, seg.err) } else { best });
        let seg = intervals.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        intervals.push(Segment::new(seg.a, mid, &integrand));
        intervals.push(Segment::new(mid, seg.b, &integrand));
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl Segment {
    fn new(a: f64, b: f64, f: &impl Fn(f64) -> Complex64) -> Self {
        let c = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        let fc = f(c);
        let mut kron = fc * WGK[7];
        let mut gauss = fc * WG[3];
        for j in 0..7 {
            let x = hl * XGK[j];
            let sum = f(c - x) + f(c + x);
            kron += sum * WGK[j];
            if j % 2 == 1 {
                gauss += sum * WG[j / 2];
            }
        }
        Segment { a, b, value: kron * hl, err: ((kron - gauss) * hl).norm() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub sigma: f64,
    pub a: f64,
    /// (t, |ω̃(σ + it)|) for each sample.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of log|ω̃| against log|s|.
    pub exponent: f64,
    /// Empirical constant max_t |ω̃(σ+it)|·|s|^{A+1} over the samples (not certified).
    pub empirical_constant: f64,
    pub passed: bool,
}

/// Line used by [`decay_check`].
pub const DECAY_SIGMA: f64 = 2.0;

/// Fits the decay exponent of |ω̃(2 + it)| over `t_samples` and checks it against −(A+1).
pub fn decay_check(w: &SmoothWeight, a: f64, t_samples: &[f64]) -> Result<DecayReport> {
    if t_samples.len() < 3 {
        return Err(Error::invalid("decay check needs at least 3 heights"));
    }
    if t_samples.windows(2).any(|p| p[1] <= p[0]) || t_samples[0] <= 0.0 {
        return Err(Error::invalid("decay heights must be positive and increasing"));
    }
    if !(a > 0.0) {
        return Err(Error::invalid("decay order A must be positive"));
    }
    let mut samples = Vec::with_capacity(t_samples.len());
    let mut xs = Vec::with_capacity(t_samples.len());
    let mut ys = Vec::with_capacity(t_samples.len());
    let mut constant: f64 = 0.0;
    // absolute accuracy far below the sampled magnitudes
    let unit = SmoothWeight { amplitude: 1.0, ..*w };
    let tol = w.tolerance.min(1e-12 * mellin(&unit, Complex64::new(DECAY_SIGMA, 0.0))?.value.norm());
    for &t in t_samples {
        let s = Complex64::new(DECAY_SIGMA, t);
        let v = mellin_with_tolerance(w, s, tol)?;
        let mag = v.value.norm();
        samples.push((t, mag));
        xs.push(s.norm().ln());
        ys.push(mag.max(f64::MIN_POSITIVE).ln());
        constant = constant.max(mag * s.norm().powf(a + 1.0));
    }
    let exponent = slope(&xs, &ys);
    Ok(DecayReport { sigma: DECAY_SIGMA, a, samples, exponent, empirical_constant: constant, passed: exponent <= -(a + 1.0) + 0.25 })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
