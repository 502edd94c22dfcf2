//! Location of the leading singularity pair of the strong-coupling series.
//!
//! Two independent routes:
//!
//! * oscillation fit: the error `Delta_N` of the order-`N` approximant decays
//!   like `A exp(-a cos(theta) N^(1/3)) |cos(a sin(theta) N^(1/3) + phi)|`,
//!   with `|g_s| = a^(-3/2) / c`;
//! * ratio fit: `R_n = alpha_{n+1} / alpha_n` approaches
//!   `-cos((n+1) theta + delta) / (|x_s| cos(n theta + delta))`,
//!   with `|g_s| = 4 |x_s|^(-3/2)`.
//!
//! The pair `(theta, phase)` and `(-theta, -phase)` give identical models; estimates are
//! normalized to `theta < 0`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DVector, Dyn, Matrix, Owned, Vector, U3, U4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precision::BigReal;
use crate::variational::{ApproximantRecord, DEFAULT_C};

/// Phase distance to a model zero below which points are down-weighted.
pub const ZERO_WINDOW: f64 = 0.15;
/// First ratio index used by default; earlier ratios are pre-asymptotic.
pub const DEFAULT_N_MIN: usize = 6;
/// Relative agreement required between the two estimates.
pub const CROSS_TOLERANCE: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(order: usize) -> Self {
        if order.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Where the reference `alpha_0` came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Extrapolated,
}

#[derive(Clone, Debug)]
pub struct DeltaEntry {
    pub order: usize,
    /// `|alpha_0(N) - reference|`.
    pub delta: BigReal,
    /// `alpha_0(N) - reference`.
    pub signed: BigReal,
    pub parity: Parity,
}

#[derive(Clone, Debug)]
pub struct DeltaSequence {
    pub entries: Vec<DeltaEntry>,
    pub reference_alpha0: BigReal,
    pub provenance: Provenance,
}

impl DeltaSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sequence built directly from signed deviations, bypassing the precision check.
    pub fn from_signed(orders_and_values: &[(usize, f64)], provenance: Provenance) -> Result<Self> {
        let mut entries = Vec::with_capacity(orders_and_values.len());
        for &(order, value) in orders_and_values {
            if !value.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite deviation at N = {order}")));
            }
            let signed = BigReal::from_f64(value, 17);
            entries.push(DeltaEntry {
                order,
                delta: signed.abs(),
                signed,
                parity: Parity::of(order),
            });
        }
        check_increasing(&entries)?;
        Ok(DeltaSequence {
            entries,
            reference_alpha0: BigReal::zero(17),
            provenance,
        })
    }
}

fn check_increasing(entries: &[DeltaEntry]) -> Result<()> {
    if entries.windows(2).any(|w| w[1].order <= w[0].order) {
        return Err(Error::InvalidInput("orders must be strictly increasing".into()));
    }
    Ok(())
}

/// `Delta_N` for each record against a reference certified to `certified_digits`.
pub fn build_delta_sequence(
    records: &[ApproximantRecord],
    reference: &BigReal,
    certified_digits: u32,
    provenance: Provenance,
) -> Result<DeltaSequence> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no approximant records".into()));
    }
    let entries: Vec<DeltaEntry> = records
        .iter()
        .map(|r| {
            let signed = r.signed_deviation(reference);
            DeltaEntry {
                order: r.order,
                delta: signed.abs(),
                signed,
                parity: Parity::of(r.order),
            }
        })
        .collect();
    check_increasing(&entries)?;
    let scale = reference.to_f64().abs().max(f64::MIN_POSITIVE);
    let smallest = entries
        .iter()
        .map(|e| e.delta.to_f64())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if smallest.is_finite() {
        // two significant digits of the smallest deviation
        let needed = ((scale / smallest).log10().ceil().max(0.0) as u32) + 2;
        if certified_digits < needed {
            return Err(Error::InsufficientPrecision {
                needed,
                available: certified_digits,
            });
        }
    }
    Ok(DeltaSequence {
        entries,
        reference_alpha0: reference.clone(),
        provenance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    OscillationFit,
    RatioFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityEstimate {
    pub x_s_abs: Option<f64>,
    pub theta: f64,
    /// `delta` of the ratio model.
    pub delta_phase: Option<f64>,
    pub g_s_abs: f64,
    /// `(3/2) |theta|`.
    pub g_s_arg: f64,
    pub a: Option<f64>,
    /// Oscillation phase `phi` of the error model.
    pub phase: Option<f64>,
    /// `log A` of the error model.
    pub log_amplitude: Option<f64>,
    pub fit_rms: f64,
    pub method: Method,
}

impl SingularityEstimate {
    /// `a cos(theta)` when the estimate carries `a`.
    pub fn envelope_exponent(&self) -> Option<f64> {
        self.a.map(|a| a * self.theta.cos())
    }

    /// JSON object with every field as a decimal string.
    pub fn to_json(&self, reference: Option<(&BigReal, Provenance)>) -> serde_json::Value {
        let num = |x: f64| serde_json::Value::String(format!("{x}"));
        let opt = |x: Option<f64>| x.map(num).unwrap_or(serde_json::Value::Null);
        let mut map = serde_json::Map::new();
        map.insert("method".into(), serde_json::to_value(self.method).expect("method"));
        map.insert("x_s_abs".into(), opt(self.x_s_abs));
        map.insert("theta".into(), num(self.theta));
        map.insert("delta_phase".into(), opt(self.delta_phase));
        map.insert("g_s_abs".into(), num(self.g_s_abs));
        map.insert("g_s_arg".into(), num(self.g_s_arg));
        map.insert("a".into(), opt(self.a));
        map.insert("envelope_exponent".into(), opt(self.envelope_exponent()));
        map.insert("phase".into(), opt(self.phase));
        map.insert("log_amplitude".into(), opt(self.log_amplitude));
        map.insert("fit_rms".into(), num(self.fit_rms));
        if let Some((value, provenance)) = reference {
            map.insert("reference_alpha0".into(), value.to_decimal_string().into());
            map.insert(
                "reference_provenance".into(),
                serde_json::to_value(provenance).expect("provenance"),
            );
        }
        serde_json::Value::Object(map)
    }
}

// Folds (theta, phase) so that theta < 0 and phase lies in [0, period).
fn normalize_sign(theta: f64, phase: f64, period: f64) -> (f64, f64) {
    let (theta, phase) = if theta > 0.0 { (-theta, -phase) } else { (theta, phase) };
    (theta, phase.rem_euclid(period))
}

fn wrap_angle(x: f64) -> f64 {
    // into (-pi, pi]
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn lm() -> LevenbergMarquardt<f64> {
    LevenbergMarquardt::new()
}

#[derive(Clone, Debug)]
pub struct OscillationFitOptions {
    /// Constant `c` in `|g_s| = a^(-3/2) / c`.
    pub c: f64,
    /// Smallest order entering the fit.
    pub n_min: usize,
    /// Average signed deviations over `(N-1, N, N+1)` with weights `(1, 2, 1)/4`
    /// and fit the identically filtered model, cancelling the component that
    /// alternates with `N`.
    pub parity_filter: bool,
    /// IRLS rounds of weight updates per start.
    pub reweight_rounds: usize,
}

impl Default for OscillationFitOptions {
    fn default() -> Self {
        OscillationFitOptions {
            c: DEFAULT_C.parse().expect("constant"),
            n_min: 40,
            parity_filter: true,
            reweight_rounds: 5,
        }
    }
}

#[derive(Clone, Debug)]
struct OscPoint {
    /// `N^(1/3)` of the stencil points with their filter weights.
    stencil: Vec<(f64, f64)>,
    /// `N^(1/3)` of the centre.
    t: f64,
    y: f64,
}

// p = (log A, a, theta, phi); returns m and dm/dp at t
fn osc_term(p: &[f64; 4], t: f64) -> (f64, [f64; 4]) {
    let [la, a, th, ph] = *p;
    let (s, c) = th.sin_cos();
    let psi = a * s * t + ph;
    let env = (la - a * c * t).exp();
    let (sp, cp) = psi.sin_cos();
    let m = env * cp;
    let d_a = env * (-c * t * cp - s * t * sp);
    let d_th = env * (a * s * t * cp - a * c * t * sp);
    let d_ph = -env * sp;
    (m, [m, d_a, d_th, d_ph])
}

fn zero_weight(p: &[f64; 4], t: f64) -> f64 {
    let psi = p[1] * p[2].sin() * t + p[3];
    let dist = (psi.rem_euclid(PI) - FRAC_PI_2).abs();
    if dist < ZERO_WINDOW {
        (dist.sin() / ZERO_WINDOW.sin()).powi(2)
    } else {
        1.0
    }
}

struct OscProblem<'a> {
    points: &'a [OscPoint],
    weights: Vec<f64>,
    p: [f64; 4],
}

impl OscProblem<'_> {
    fn model(&self, point: &OscPoint) -> (f64, [f64; 4]) {
        let mut m = 0.0;
        let mut dm = [0.0; 4];
        for &(t, w) in &point.stencil {
            let (v, d) = osc_term(&self.p, t);
            m += w * v;
            for k in 0..4 {
                dm[k] += w * d[k];
            }
        }
        (m, dm)
    }

    fn weighted_rms(&self) -> f64 {
        let r = self.residual_vec();
        let total: f64 = self.weights.iter().sum();
        (r.iter().map(|x| x * x).sum::<f64>() / total).sqrt()
    }

    fn residual_vec(&self) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(pt, w)| {
                let (m, _) = self.model(pt);
                w.sqrt() * (m.abs().max(f64::MIN_POSITIVE).ln() - pt.y)
            })
            .collect()
    }

    fn reweight(&mut self) {
        self.weights = self.points.iter().map(|pt| zero_weight(&self.p, pt.t)).collect();
    }
}

impl LeastSquaresProblem<f64, Dyn, U4> for OscProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U4>;
    type ParameterStorage = Owned<f64, U4>;

    fn set_params(&mut self, x: &Vector<f64, U4, Self::ParameterStorage>) {
        self.p = [x[0], x[1], x[2], x[3]];
    }

    fn params(&self) -> Vector<f64, U4, Self::ParameterStorage> {
        Vector::<f64, U4, Self::ParameterStorage>::from_column_slice(&self.p)
    }

    fn residuals(&self) -> Option<Vector<f64, Dyn, Self::ResidualStorage>> {
        let r = self.residual_vec();
        r.iter().all(|x| x.is_finite()).then(|| DVector::from_vec(r))
    }

    fn jacobian(&self) -> Option<Matrix<f64, Dyn, U4, Self::JacobianStorage>> {
        let mut j = Matrix::<f64, Dyn, U4, Self::JacobianStorage>::zeros(self.points.len());
        for (i, (pt, w)) in self.points.iter().zip(&self.weights).enumerate() {
            let (m, dm) = self.model(pt);
            if m == 0.0 {
                return None;
            }
            for k in 0..4 {
                j[(i, k)] = w.sqrt() * dm[k] / m;
            }
        }
        j.iter().all(|x| x.is_finite()).then_some(j)
    }
}

fn oscillation_points(seq: &DeltaSequence, options: &OscillationFitOptions) -> Vec<OscPoint> {
    let value = |i: usize| seq.entries[i].signed.to_f64();
    let t_of = |n: usize| (n as f64).cbrt();
    let mut points = Vec::new();
    for (i, e) in seq.entries.iter().enumerate() {
        if e.order < options.n_min {
            continue;
        }
        if options.parity_filter {
            let has_neighbours = i >= 1
                && i + 1 < seq.entries.len()
                && seq.entries[i - 1].order + 1 == e.order
                && seq.entries[i + 1].order == e.order + 1;
            if !has_neighbours {
                continue;
            }
            let avg = 0.25 * value(i - 1) + 0.5 * value(i) + 0.25 * value(i + 1);
            if avg == 0.0 {
                continue;
            }
            points.push(OscPoint {
                stencil: vec![
                    (t_of(e.order - 1), 0.25),
                    (t_of(e.order), 0.5),
                    (t_of(e.order + 1), 0.25),
                ],
                t: t_of(e.order),
                y: avg.abs().ln(),
            });
        } else {
            let d = e.delta.to_f64();
            if d == 0.0 {
                continue;
            }
            points.push(OscPoint {
                stencil: vec![(t_of(e.order), 1.0)],
                t: t_of(e.order),
                y: d.ln(),
            });
        }
    }
    points
}

/// Oscillating-decay fit with the default options.
pub fn fit_oscillation(seq: &DeltaSequence) -> Result<SingularityEstimate> {
    fit_oscillation_with(seq, &OscillationFitOptions::default())
}

/// Least-squares fit of `log Delta_N` to the oscillating-decay model.
///
/// Multi-start over a 3x3x4 grid in `(a, theta, phi)`; each start alternates
/// Levenberg-Marquardt with re-weighting of points near model zeros.
pub fn fit_oscillation_with(seq: &DeltaSequence, options: &OscillationFitOptions) -> Result<SingularityEstimate> {
    let usable = seq.entries.iter().filter(|e| e.order >= options.n_min).count();
    if usable < 20 {
        return Err(Error::InvalidInput(format!(
            "oscillation fit needs at least 20 entries with N >= {}, got {usable}",
            options.n_min
        )));
    }
    let points = oscillation_points(seq, options);
    if points.len() < 8 {
        return Err(Error::InvalidInput("too few usable points after filtering".into()));
    }

    let mut best: Option<(f64, f64, [f64; 4])> = None;
    for a0 in [8.0, 10.4, 13.0] {
        for th0 in [-0.3, -0.467, -0.7] {
            for ph0 in [0.0, 0.8, 1.6, 2.4] {
                // amplitude from the mean of y + a cos(theta) t
                let decay = a0 * f64::cos(th0);
                let la0 = points.iter().map(|pt| pt.y + decay * pt.t).sum::<f64>() / points.len() as f64;
                let mut problem = OscProblem {
                    points: &points,
                    weights: vec![1.0; points.len()],
                    p: [la0, a0, th0, ph0],
                };
                problem.reweight();
                let start_rms = problem.weighted_rms();
                for _ in 0..options.reweight_rounds.max(1) {
                    let (solved, _) = lm().minimize(problem);
                    problem = solved;
                    let previous = problem.weights.clone();
                    problem.reweight();
                    if problem.weights == previous {
                        break;
                    }
                }
                let rms = problem.weighted_rms();
                if !rms.is_finite() || problem.p.iter().any(|x| !x.is_finite()) {
                    continue;
                }
                if better(rms, &problem.p, best.as_ref().map(|b| (b.1, &b.2))) {
                    best = Some((start_rms, rms, problem.p));
                }
            }
        }
    }
    let (start_rms, rms, p) = best.ok_or(Error::FitDiverged {
        start_rms: f64::INFINITY,
        final_rms: f64::INFINITY,
    })?;
    if rms > start_rms {
        return Err(Error::FitDiverged {
            start_rms,
            final_rms: rms,
        });
    }
    let [la, mut a, mut theta, phase] = p;
    if a < 0.0 {
        // (a, theta) and (-a, theta + pi) describe the same curve
        a = -a;
        theta += PI;
    }
    theta = wrap_angle(theta);
    if theta.sin().abs() < 1e-6 {
        return Err(Error::DegenerateFit(format!(
            "theta = {theta}: no oscillation detected"
        )));
    }
    let (theta, phase) = normalize_sign(theta, phase, PI);
    Ok(SingularityEstimate {
        x_s_abs: None,
        theta,
        delta_phase: None,
        g_s_abs: a.powf(-1.5) / options.c,
        g_s_arg: 1.5 * theta.abs(),
        a: Some(a),
        phase: Some(phase),
        log_amplitude: Some(la),
        fit_rms: rms,
        method: Method::OscillationFit,
    })
}

// Lower RMS wins; exact ties go to the lexicographically smaller parameters.
fn better(rms: f64, p: &[f64], incumbent: Option<(f64, &[f64; 4])>) -> bool {
    better_slice(rms, p, incumbent.map(|(r, q)| (r, q.as_slice())))
}

fn better_slice(rms: f64, p: &[f64], incumbent: Option<(f64, &[f64])>) -> bool {
    match incumbent {
        None => true,
        Some((best, q)) => {
            rms < best
                || (rms == best
                    && p.iter().zip(q).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
                        == Some(std::cmp::Ordering::Less))
        }
    }
}

/// `alpha_{n+1} / alpha_n`.
pub fn ratio_sequence(alphas: &[BigReal]) -> Result<Vec<BigReal>> {
    if let Some(index) = alphas
        .iter()
        .take(alphas.len().saturating_sub(1))
        .position(BigReal::is_zero)
    {
        return Err(Error::DivisionByZero { index });
    }
    Ok(alphas.windows(2).map(|w| &w[1] / &w[0]).collect())
}

/// `-cos((n+1) theta + delta) / (|x_s| cos(n theta + delta))`.
pub fn ratio_model(n: usize, x_s_abs: f64, theta: f64, delta: f64) -> Result<f64> {
    let denominator = (n as f64 * theta + delta).cos();
    if denominator.abs() < 1e-12 {
        return Err(Error::PoleAtIndex { index: n });
    }
    Ok(-((n + 1) as f64 * theta + delta).cos() / (x_s_abs * denominator))
}

struct RatioProblem<'a> {
    indices: &'a [usize],
    ratios: &'a [f64],
    p: [f64; 3],
}

impl RatioProblem<'_> {
    fn residual_vec(&self) -> Vec<f64> {
        let [xs, th, d] = self.p;
        self.indices
            .iter()
            .zip(self.ratios)
            .map(|(&n, r)| {
                let n = n as f64;
                -((n + 1.0) * th + d).cos() / (xs * (n * th + d).cos()) - r
            })
            .collect()
    }

    fn rms(&self) -> f64 {
        let r = self.residual_vec();
        (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
    }
}

impl LeastSquaresProblem<f64, Dyn, U3> for RatioProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, x: &Vector<f64, U3, Self::ParameterStorage>) {
        self.p = [x[0], x[1], x[2]];
    }

    fn params(&self) -> Vector<f64, U3, Self::ParameterStorage> {
        Vector::<f64, U3, Self::ParameterStorage>::from_column_slice(&self.p)
    }

    fn residuals(&self) -> Option<Vector<f64, Dyn, Self::ResidualStorage>> {
        let r = self.residual_vec();
        r.iter().all(|x| x.is_finite()).then(|| DVector::from_vec(r))
    }

    fn jacobian(&self) -> Option<Matrix<f64, Dyn, U3, Self::JacobianStorage>> {
        let [xs, th, d] = self.p;
        let mut j = Matrix::<f64, Dyn, U3, Self::JacobianStorage>::zeros(self.indices.len());
        for (i, &n) in self.indices.iter().enumerate() {
            let n = n as f64;
            let (s1, c1) = ((n + 1.0) * th + d).sin_cos();
            let (s0, c0) = (n * th + d).sin_cos();
            let r = -c1 / (xs * c0);
            let denom = xs * c0 * c0;
            j[(i, 0)] = -r / xs;
            j[(i, 1)] = ((n + 1.0) * s1 * c0 - n * c1 * s0) / denom;
            j[(i, 2)] = th.sin() / denom;
        }
        j.iter().all(|x| x.is_finite()).then_some(j)
    }
}

// The model makes alpha_n proportional to (-1/x_s)^n cos(n theta + delta), a
// two-term recurrence, so R_n R_{n-1} = p R_{n-1} + q with p = -2 cos(theta)/x_s
// and q = -1/x_s^2. Solving that linear problem gives a start free of poles.
fn recurrence_seed(indices: &[usize], values: &[f64]) -> Option<[f64; 3]> {
    let (mut s11, mut s1, mut s0, mut t1, mut t0) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for w in 1..values.len() {
        if indices[w] != indices[w - 1] + 1 {
            continue;
        }
        let (prev, cur) = (values[w - 1], values[w]);
        s11 += prev * prev;
        s1 += prev;
        s0 += 1.0;
        t1 += cur * prev * prev;
        t0 += cur * prev;
    }
    let det = s11 * s0 - s1 * s1;
    if det.abs() < f64::EPSILON * s11 * s0 {
        return None;
    }
    let p = (t1 * s0 - t0 * s1) / det;
    let q = (s11 * t0 - s1 * t1) / det;
    if q >= 0.0 || p * p + 4.0 * q >= 0.0 {
        // real roots: no conjugate pair
        return None;
    }
    let xs = 1.0 / (-q).sqrt();
    let theta = -(-p * xs / 2.0).clamp(-1.0, 1.0).acos();
    let (sin_t, cos_t) = theta.sin_cos();
    // R_n = -(cos(theta) - sin(theta) tan(n theta + delta)) / x_s, so every
    // index yields delta modulo pi; average on the doubled angle.
    let (mut c, mut s) = (0.0, 0.0);
    for (&n, &r) in indices.iter().zip(values) {
        let phase = ((cos_t + xs * r) / sin_t).atan() - n as f64 * theta;
        c += (2.0 * phase).cos();
        s += (2.0 * phase).sin();
    }
    let delta = 0.5 * s.atan2(c);
    [xs, theta, delta]
        .iter()
        .all(|x| x.is_finite())
        .then_some([xs, theta, delta])
}

/// Least-squares fit of the ratio model over `n >= n_min`.
///
/// Starts from the two-term recurrence solution and a grid over `|x_s|`,
/// `theta` and a dense set of `delta`; the model has poles, so a coarse grid
/// alone lands in spurious minima.
pub fn fit_ratio_singularity(ratios: &[BigReal], n_min: usize) -> Result<SingularityEstimate> {
    let indices: Vec<usize> = (n_min..ratios.len()).collect();
    if indices.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "ratio fit needs at least 8 ratios with index >= {n_min}, got {}",
            indices.len()
        )));
    }
    let values: Vec<f64> = indices.iter().map(|&n| ratios[n].to_f64()).collect();
    // a conjugate pair flips the sign of some ratio every pi/|theta| indices
    if values.iter().all(|v| *v > 0.0) || values.iter().all(|v| *v < 0.0) {
        return Err(Error::DegenerateFit(
            "ratios keep one sign: no conjugate singularity pair resolved".into(),
        ));
    }
    let mut starts: Vec<[f64; 3]> = recurrence_seed(&indices, &values).into_iter().collect();
    for x0 in [6.0, 8.5, 11.0] {
        for th0 in [-0.3, -0.467, -0.6] {
            for k in 0..13 {
                starts.push([x0, th0, -1.5 + 0.25 * k as f64]);
            }
        }
    }
    let mut best: Option<(f64, f64, [f64; 3])> = None;
    for start in starts {
        let problem = RatioProblem {
            indices: &indices,
            ratios: &values,
            p: start,
        };
        let start_rms = problem.rms();
        let (problem, _) = lm().minimize(problem);
        let rms = problem.rms();
        if !rms.is_finite() || problem.p.iter().any(|x| !x.is_finite()) {
            continue;
        }
        if better_slice(rms, &problem.p, best.as_ref().map(|b| (b.1, b.2.as_slice()))) {
            best = Some((start_rms, rms, problem.p));
        }
    }
    let (start_rms, rms, [mut xs, mut theta, delta]) = best.ok_or(Error::FitDiverged {
        start_rms: f64::INFINITY,
        final_rms: f64::INFINITY,
    })?;
    if start_rms.is_finite() && rms > start_rms {
        return Err(Error::FitDiverged {
            start_rms,
            final_rms: rms,
        });
    }
    if xs < 0.0 {
        // (x_s, theta) and (-x_s, theta + pi) give the same ratios
        xs = -xs;
        theta += PI;
    }
    theta = wrap_angle(theta);
    if theta.sin().abs() < 1e-6 {
        return Err(Error::DegenerateFit(format!(
            "theta = {theta}: ratios show no conjugate pair"
        )));
    }
    let (theta, delta) = normalize_sign(theta, delta, PI);
    let delta = if delta > FRAC_PI_2 { delta - PI } else { delta };
    Ok(SingularityEstimate {
        x_s_abs: Some(xs),
        theta,
        delta_phase: Some(delta),
        g_s_abs: 4.0 * xs.powf(-1.5),
        g_s_arg: 1.5 * theta.abs(),
        a: None,
        phase: None,
        log_amplitude: None,
        fit_rms: rms,
        method: Method::RatioFit,
    })
}

/// CSV rows `n,R_n,R_model` for the fitted ratio model; poles leave the model column empty.
pub fn write_ratio_csv<W: Write>(
    ratios: &[BigReal],
    estimate: &SingularityEstimate,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "n,R_n,R_model")?;
    let xs = estimate.x_s_abs.unwrap_or(f64::NAN);
    let delta = estimate.delta_phase.unwrap_or(0.0);
    for (n, r) in ratios.iter().enumerate() {
        let model = ratio_model(n, xs, estimate.theta, delta)
            .ok()
            .filter(|m| m.is_finite())
            .map(|m| format!("{m}"))
            .unwrap_or_default();
        writeln!(out, "{n},{},{model}", r.to_decimal_string())?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidation {
    pub g_s_abs_relative_difference: f64,
    pub theta_relative_difference: f64,
    pub pass: bool,
}

fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = 0.5 * (a.abs() + b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Relative differences of `|g_s|` and `theta` between two estimates.
pub fn cross_validate(a: &SingularityEstimate, b: &SingularityEstimate) -> CrossValidation {
    let g = relative_difference(a.g_s_abs, b.g_s_abs);
    let t = relative_difference(a.theta, b.theta);
    CrossValidation {
        g_s_abs_relative_difference: g,
        theta_relative_difference: t,
        pass: g <= CROSS_TOLERANCE && t <= CROSS_TOLERANCE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(la: f64, a: f64, th: f64, ph: f64, noise: f64) -> DeltaSequence {
        let data: Vec<(usize, f64)> = (38..=122)
            .map(|n| {
                let (m, _) = osc_term(&[la, a, th, ph], (n as f64).cbrt());
                // deterministic pseudo-noise in [-1, 1]
                let eps = ((n as f64) * 12.9898).sin() * 43758.5453;
                let eps = 2.0 * (eps - eps.floor()) - 1.0;
                (n, m * (1.0 + noise * eps))
            })
            .collect();
        DeltaSequence::from_signed(&data, Provenance::Oracle).unwrap()
    }

    #[test]
    fn oscillation_round_trip_noise_free() {
        let seq = synthetic(1.5, 10.4, -0.467, 0.3, 0.0);
        let est = fit_oscillation(&seq).unwrap();
        let a = est.a.unwrap();
        assert!((a / 10.4 - 1.0).abs() < 1e-6, "{est:?}");
        assert!((est.theta / -0.467 - 1.0).abs() < 1e-6, "{est:?}");
        assert!((est.phase.unwrap() - 0.3).abs() < 1e-6, "{est:?}");
        assert!((est.g_s_abs - a.powf(-1.5) / 0.186047272987975).abs() < 1e-15);
        assert_eq!(est.method, Method::OscillationFit);
    }

    #[test]
    fn oscillation_round_trip_with_noise() {
        let seq = synthetic(1.5, 10.4, -0.467, 0.3, 0.01);
        let est = fit_oscillation(&seq).unwrap();
        assert!((est.a.unwrap() / 10.4 - 1.0).abs() < 5e-3, "{est:?}");
        assert!((est.theta / -0.467 - 1.0).abs() < 5e-3, "{est:?}");
    }

    #[test]
    fn oscillation_fit_is_deterministic() {
        let seq = synthetic(0.7, 9.8, -0.42, 1.1, 0.01);
        assert_eq!(fit_oscillation(&seq).unwrap(), fit_oscillation(&seq).unwrap());
    }

    #[test]
    fn oscillation_fit_preconditions() {
        let short: Vec<(usize, f64)> = (40..50).map(|n| (n, (-(n as f64)).exp())).collect();
        let seq = DeltaSequence::from_signed(&short, Provenance::Oracle).unwrap();
        assert!(matches!(fit_oscillation(&seq), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pure_decay_is_degenerate() {
        let data: Vec<(usize, f64)> = (38..=122).map(|n| (n, (2.0 - 9.0 * (n as f64).cbrt()).exp())).collect();
        let seq = DeltaSequence::from_signed(&data, Provenance::Oracle).unwrap();
        match fit_oscillation(&seq) {
            Err(Error::DegenerateFit(_)) => {}
            Ok(est) => assert!(est.theta.abs() < 1e-3, "{est:?}"),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn delta_sequence_checks() {
        let reference = BigReal::parse("0.66798625915577710827", 30).unwrap();
        let record = |order: usize, value: &str| ApproximantRecord {
            order,
            sigma: BigReal::from_i64(1, 30),
            ghat: BigReal::from_i64(1, 30),
            alphas: vec![BigReal::parse(value, 30).unwrap()],
            delta: None,
        };
        let same = build_delta_sequence(
            &[record(1, "0.66798625915577710827")],
            &reference,
            20,
            Provenance::Oracle,
        )
        .unwrap();
        assert!(same.entries[0].delta.is_zero());
        let seq = build_delta_sequence(
            &[record(1, "0.68147438341253440070")],
            &reference,
            20,
            Provenance::Oracle,
        )
        .unwrap();
        assert!((seq.entries[0].delta.to_f64() - 0.013488).abs() < 1e-5);
        assert_eq!(seq.entries[0].parity, Parity::Odd);
        let tiny = record(2, "0.66798625915577710828");
        let err = build_delta_sequence(&[tiny], &reference, 15, Provenance::Oracle).unwrap_err();
        assert!(
            matches!(err, Error::InsufficientPrecision { available: 15, .. }),
            "{err}"
        );
        let unordered = [record(3, "0.7"), record(2, "0.7")];
        assert!(build_delta_sequence(&unordered, &reference, 20, Provenance::Oracle).is_err());
    }

    fn reals(xs: &[f64]) -> Vec<BigReal> {
        xs.iter().map(|&x| BigReal::from_f64(x, 30)).collect()
    }

    #[test]
    fn ratios_of_simple_sequences() {
        let geometric: Vec<f64> = (0..10).map(|n| 0.3f64.powi(n)).collect();
        for r in ratio_sequence(&reals(&geometric)).unwrap() {
            assert!((r.to_f64() - 0.3).abs() < 1e-15);
        }
        for r in ratio_sequence(&reals(&[2.0; 6])).unwrap() {
            assert_eq!(r.to_f64(), 1.0);
        }
        let err = ratio_sequence(&reals(&[1.0, 2.0, 0.0, 3.0])).unwrap_err();
        assert_eq!(err, Error::DivisionByZero { index: 2 });
        assert!(ratio_sequence(&reals(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn ratios_are_scale_invariant() {
        let alphas = reals(&[0.66, 0.14, -0.008, 0.0002, 0.00003]);
        let scaled: Vec<BigReal> = alphas.iter().map(|a| a * &BigReal::from_f64(-3.7, 30)).collect();
        for (x, y) in ratio_sequence(&alphas)
            .unwrap()
            .iter()
            .zip(ratio_sequence(&scaled).unwrap())
        {
            assert!(x.agrees_with(&y, 14));
        }
    }

    #[test]
    fn ratio_model_values() {
        for n in 0..10 {
            assert!((ratio_model(n, 4.0, 0.0, 0.3).unwrap() + 0.25).abs() < 1e-15);
        }
        assert_eq!(
            ratio_model(2, 1.0, 0.5, FRAC_PI_2 - 1.0),
            Err(Error::PoleAtIndex { index: 2 })
        );
    }

    #[test]
    fn ratio_model_matches_two_branch_expansion() {
        // f(x) = (1 - x/x_s)^(1/2) + (1 - x/conj(x_s))^(1/2), x_s = -|x_s| e^(i theta):
        // c_n = 2 C(1/2, n) |x_s|^(-n) cos(n theta)
        use crate::precision::rational_binomial;
        use rug::Rational;
        let (xs, th) = (2.0f64, -0.4f64);
        let half = Rational::from((1, 2));
        let coeff = |n: usize| {
            let b = rational_binomial(&half, n as u32).to_f64();
            2.0 * b * (n as f64 * th).cos() * xs.powf(-(n as f64))
        };
        let mut checked = 0;
        for n in [50usize, 100, 200, 300] {
            for k in n..n + 5 {
                if (k as f64 * th).cos().abs() < 0.2 {
                    continue;
                }
                let empirical = coeff(k + 1) / coeff(k);
                let model = ratio_model(k, xs, th, 0.0).unwrap();
                assert!((empirical / model - 1.0).abs() < 2.0 / k as f64, "n={k}");
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn ratio_round_trip() {
        let (xs, th, d) = (1.0 / 0.117, -0.467, -0.6);
        let ratios: Vec<BigReal> = (0..22)
            .map(|n| BigReal::from_f64(ratio_model(n, xs, th, d).unwrap(), 30))
            .collect();
        let est = fit_ratio_singularity(&ratios, DEFAULT_N_MIN).unwrap();
        assert!((est.x_s_abs.unwrap() / xs - 1.0).abs() < 1e-6, "{est:?}");
        assert!((est.theta / th - 1.0).abs() < 1e-6, "{est:?}");
        assert!((est.delta_phase.unwrap() - d).abs() < 1e-6, "{est:?}");
        assert_eq!(est.g_s_abs, 4.0 * est.x_s_abs.unwrap().powf(-1.5));
        assert!((est.g_s_arg - 1.5 * 0.467).abs() < 1e-6);
        assert!(fit_ratio_singularity(&ratios[..10], DEFAULT_N_MIN).is_err());
    }

    #[test]
    fn long_windows_across_poles() {
        let (xs, th, d) = (8.4, -0.47, -0.5);
        for len in [30, 39, 60] {
            let ratios: Vec<BigReal> = (0..len)
                .map(|n| BigReal::from_f64(ratio_model(n, xs, th, d).unwrap(), 30))
                .collect();
            let est = fit_ratio_singularity(&ratios, DEFAULT_N_MIN).unwrap();
            assert!((est.theta - th).abs() < 1e-8, "{len}: {est:?}");
            assert!((est.x_s_abs.unwrap() - xs).abs() < 1e-7, "{len}: {est:?}");
            assert!((est.delta_phase.unwrap() - d).abs() < 1e-8, "{len}: {est:?}");
        }
    }

    #[test]
    fn recurrence_seed_is_exact_on_model_data() {
        let (xs, th, d) = (9.0, -0.5, 0.3);
        let indices: Vec<usize> = (6..26).collect();
        let values: Vec<f64> = indices.iter().map(|&n| ratio_model(n, xs, th, d).unwrap()).collect();
        let [x, t, p] = recurrence_seed(&indices, &values).unwrap();
        assert!((x - xs).abs() < 1e-8 && (t - th).abs() < 1e-10);
        assert!(((p - d) / PI).fract().abs() < 1e-9 || (p - d).abs() < 1e-9, "{p}");
        assert!(recurrence_seed(&indices, &[0.5; 20]).is_none());
    }

    #[test]
    fn single_sign_ratios_are_degenerate() {
        let ratios = reals(&[0.5; 20]);
        let r = fit_ratio_singularity(&ratios, DEFAULT_N_MIN);
        assert!(matches!(r, Err(Error::DegenerateFit(_))), "{r:?}");
    }

    fn estimate(g: f64, theta: f64) -> SingularityEstimate {
        SingularityEstimate {
            x_s_abs: None,
            theta,
            delta_phase: None,
            g_s_abs: g,
            g_s_arg: 1.5 * theta.abs(),
            a: None,
            phase: None,
            log_amplitude: None,
            fit_rms: 0.0,
            method: Method::OscillationFit,
        }
    }

    #[test]
    fn cross_validation_thresholds() {
        let a = estimate(0.16, -0.467);
        let same = cross_validate(&a, &a);
        assert_eq!(same.g_s_abs_relative_difference, 0.0);
        assert!(same.pass);
        assert!(cross_validate(&a, &estimate(0.163, -0.455)).pass);
        assert!(!cross_validate(&a, &estimate(0.24, -0.467)).pass);
        assert!(!cross_validate(&a, &estimate(0.16, -0.7)).pass);
    }

    #[test]
    fn estimate_json_has_decimal_strings() {
        let est = estimate(0.16, -0.467);
        let reference = BigReal::parse("0.667986", 10).unwrap();
        let json = est.to_json(Some((&reference, Provenance::Oracle)));
        assert_eq!(json["g_s_abs"], "0.16");
        assert_eq!(json["method"], "OscillationFit");
        assert_eq!(json["reference_provenance"], "oracle");
        assert!(json["x_s_abs"].is_null());
    }

    #[test]
    fn ratio_csv_layout() {
        let ratios: Vec<BigReal> = ["0.2", "-0.1", "0.05"]
            .iter()
            .map(|x| BigReal::parse(x, 20).unwrap())
            .collect();
        let mut est = estimate(0.16, -0.467);
        est.x_s_abs = Some(8.5);
        est.delta_phase = Some(-0.6);
        let mut buf = Vec::new();
        write_ratio_csv(&ratios, &est, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("n,R_n,R_model\n0,0.2,"));
    }
}
