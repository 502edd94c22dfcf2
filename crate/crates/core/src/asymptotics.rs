//! Saddle-point asymptotics of the reexpanded series and closed-form models
//! for how the `N`th term `S_N` falls off.
//!
//! The large-order reexpansion coefficients are dominated by the extremum of
//!
//! ```text
//! f_k(gamma) = -(k + 3/2) log(-gamma) + (4 sigma / 3 gamma) (1 - gamma)^(3/2),   gamma = sigma ghat
//! ```
//!
//! With `k = N` and `sigma = c N` the extremum and the vanishing of `f_N`
//! fix `gamma` and `c` together.

use std::io::Write;

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::precision::{digits_to_bits, BigReal};

/// Reference magnitude of the singularity position in the reduced coupling.
pub const DEFAULT_G_S_ABS: &str = "0.160";
/// Reference argument of the singularity position, radians.
pub const DEFAULT_THETA: &str = "-0.467";
/// Reference value of the envelope constant `a cos(theta)`.
pub const REFERENCE_ENVELOPE: f64 = 9.23;

#[derive(Clone, Debug)]
pub struct SaddleSolution {
    pub gamma: BigReal,
    pub c: BigReal,
    pub residual_gamma1: BigReal,
    pub residual_f_n: BigReal,
}

#[derive(Clone, Debug)]
pub struct ConvergenceModelParams {
    pub g_s_abs: BigReal,
    pub theta: BigReal,
    pub c: BigReal,
    /// `(g_s_abs c)^(-2/3)`, fixed at construction.
    pub a: BigReal,
    pub correction_constant: BigReal,
    /// Saddle `gamma`, which sets the `C_1` exponent `q = -log(-gamma) * correction`.
    pub gamma: BigReal,
}

impl ConvergenceModelParams {
    pub fn new(
        g_s_abs: BigReal,
        theta: BigReal,
        c: BigReal,
        correction_constant: BigReal,
        gamma: BigReal,
    ) -> Result<Self> {
        if g_s_abs.is_zero() || g_s_abs.is_sign_negative() {
            return Err(Error::InvalidInput("|g_s| must be positive".into()));
        }
        let t = theta.to_f64();
        if !(t > -std::f64::consts::FRAC_PI_2 && t < 0.0) {
            return Err(Error::InvalidInput(format!("theta {t} outside (-pi/2, 0)")));
        }
        if c.is_zero() || c.is_sign_negative() {
            return Err(Error::InvalidInput("c must be positive".into()));
        }
        if !gamma.is_sign_negative() || gamma.is_zero() {
            return Err(Error::InvalidInput("saddle gamma must be negative".into()));
        }
        let digits = g_s_abs.digits().min(c.digits());
        let bits = digits_to_bits(digits);
        let product = Float::with_val(bits, g_s_abs.value() * c.value());
        let a = product.pow(Float::with_val(bits, -2) / 3u32);
        Ok(ConvergenceModelParams {
            a: BigReal::from_float(&a, digits),
            g_s_abs,
            theta,
            c,
            correction_constant,
            gamma,
        })
    }

    /// Reference singularity position with the saddle constants solved at `digits`.
    pub fn reference(digits: u32) -> Result<Self> {
        let saddle = solve_gamma_c(digits)?;
        Self::new(
            BigReal::parse(DEFAULT_G_S_ABS, digits)?,
            BigReal::parse(DEFAULT_THETA, digits)?,
            saddle.c,
            BigReal::parse(crate::variational::DEFAULT_CORRECTION, digits)?,
            saddle.gamma,
        )
    }

    /// `a cos(theta)`, the decay rate of the oscillating envelope in `N^(1/3)`.
    pub fn envelope_exponent(&self) -> BigReal {
        &self.a * &self.theta.cos()
    }

    /// `q = -log(-gamma) * correction`.
    pub fn c1_constant(&self) -> BigReal {
        &(-(-&self.gamma).ln()) * &self.correction_constant
    }
}

fn require_negative(gamma: &BigReal) -> Result<()> {
    if gamma.is_zero() || !gamma.is_sign_negative() {
        return Err(Error::DomainError(format!("gamma must be negative, got {gamma}")));
    }
    Ok(())
}

fn saddle_term(gamma: &Float, scale: &Float, power: u32) -> Float {
    // (4 scale / 3 gamma) (1 - gamma)^(power/2)
    let bits = gamma.prec();
    let one_minus = Float::with_val(bits, 1 - gamma);
    let root = one_minus.pow(Float::with_val(bits, power) / 2u32);
    Float::with_val(bits, scale * 4u32) / 3u32 / gamma * root
}

/// `-(k + 3/2) log(-gamma) + (4 sigma / 3 gamma)(1 - gamma)^(3/2)`.
pub fn f_k(gamma: &BigReal, sigma: &BigReal, k: u64) -> Result<BigReal> {
    require_negative(gamma)?;
    let digits = gamma.digits().min(sigma.digits());
    let bits = digits_to_bits(digits);
    let g = Float::with_val(bits, gamma.value());
    let log = Float::with_val(bits, -&g).ln();
    let weight = Float::with_val(bits, k) + Float::with_val(bits, 1.5);
    let value = -(weight * log) + saddle_term(&g, &Float::with_val(bits, sigma.value()), 3);
    Ok(BigReal::from_float(&value, digits))
}

/// `d f_k / d gamma`.
pub fn f_k_derivative(gamma: &BigReal, sigma: &BigReal, k: u64) -> Result<BigReal> {
    require_negative(gamma)?;
    let digits = gamma.digits().min(sigma.digits());
    let bits = digits_to_bits(digits);
    let g = Float::with_val(bits, gamma.value());
    let s = Float::with_val(bits, sigma.value());
    let weight = Float::with_val(bits, k) + Float::with_val(bits, 1.5);
    let one_minus = Float::with_val(bits, 1 - &g);
    let half = Float::with_val(bits, one_minus.sqrt_ref());
    let three_half = Float::with_val(bits, &half * &one_minus);
    let g2 = Float::with_val(bits, g.square_ref());
    let bracket = -(three_half / &g2) - Float::with_val(bits, &half * 1.5) / &g;
    let value = -(weight / &g) + Float::with_val(bits, &s * 4u32) / 3u32 * bracket;
    Ok(BigReal::from_float(&value, digits))
}

/// `f_N / N` at `sigma = c N`: `-log(-gamma) + (4c / 3 gamma)(1 - gamma)^(3/2)`.
pub fn f_n_reduced(gamma: &BigReal, c: &BigReal) -> Result<BigReal> {
    require_negative(gamma)?;
    let digits = gamma.digits().min(c.digits());
    let bits = digits_to_bits(digits);
    let g = Float::with_val(bits, gamma.value());
    let log = Float::with_val(bits, -&g).ln();
    let value = -log + saddle_term(&g, &Float::with_val(bits, c.value()), 3);
    Ok(BigReal::from_float(&value, digits))
}

// Residuals and Jacobian in (u, v) = (log(-gamma), log c).
fn saddle_system(u: &Float, v: &Float) -> ([Float; 2], [[Float; 2]; 2]) {
    let bits = u.prec();
    let gamma = -Float::with_val(bits, u.exp_ref());
    let c = Float::with_val(bits, v.exp_ref());
    let k = Float::with_val(bits, &c * 4u32) / 3u32;
    let one_minus = Float::with_val(bits, 1 - &gamma);
    let root = Float::with_val(bits, one_minus.sqrt_ref());
    let g2 = Float::with_val(bits, gamma.square_ref());
    let lin = Float::with_val(bits, &gamma / 2u32) + 1u32;
    // h = (1-g)^(1/2) (1 + g/2) / g
    let h = Float::with_val(bits, &root * &lin) / &gamma;
    let dh = -(Float::with_val(bits, &lin / &root) / 2u32 / &gamma) + Float::with_val(bits, &root / &gamma) / 2u32
        - Float::with_val(bits, &root * &lin) / &g2;
    // m = (1-g)^(3/2) / g
    let three_half = Float::with_val(bits, &root * &one_minus);
    let m = Float::with_val(bits, &three_half / &gamma);
    let dm = -(Float::with_val(bits, &root * 1.5) / &gamma) - three_half / &g2;
    let r1 = Float::with_val(bits, &k * &h) + 1u32;
    let r2 = Float::with_val(bits, &k * &m) - u;
    let j11 = Float::with_val(bits, &k * &dh) * &gamma;
    let j12 = Float::with_val(bits, &k * &h);
    let j21 = Float::with_val(bits, &k * &dm) * &gamma - 1u32;
    let j22 = Float::with_val(bits, &k * &m);
    ([r1, r2], [[j11, j12], [j21, j22]])
}

fn residual_norm(r: &[Float; 2]) -> Float {
    let a = Float::with_val(r[0].prec(), r[0].abs_ref());
    let b = Float::with_val(r[1].prec(), r[1].abs_ref());
    a.max(&b)
}

/// Joint solution of the extremum condition and `f_N = 0` at `digits` precision.
pub fn solve_gamma_c(digits: u32) -> Result<SaddleSolution> {
    let bits = digits_to_bits(digits + 10);
    let mut u = Float::with_val(bits, 0.25f64).ln();
    let mut v = Float::with_val(bits, 0.19f64).ln();
    let tol = Float::with_val(bits, 10).pow(-(digits as i32 - 8));
    let (mut r, mut jac) = saddle_system(&u, &v);
    let mut norm = residual_norm(&r);
    for _ in 0..200 {
        if norm < tol {
            let gamma = -Float::with_val(bits, u.exp_ref());
            let c = Float::with_val(bits, v.exp_ref());
            return Ok(SaddleSolution {
                gamma: BigReal::from_float(&gamma, digits),
                c: BigReal::from_float(&c, digits),
                residual_gamma1: BigReal::from_float(&r[0], digits),
                residual_f_n: BigReal::from_float(&r[1], digits),
            });
        }
        let det = Float::with_val(bits, &jac[0][0] * &jac[1][1]) - Float::with_val(bits, &jac[0][1] * &jac[1][0]);
        if det.is_zero() {
            break;
        }
        let du = (Float::with_val(bits, &jac[1][1] * &r[0]) - Float::with_val(bits, &jac[0][1] * &r[1])) / &det;
        let dv = (Float::with_val(bits, &jac[0][0] * &r[1]) - Float::with_val(bits, &jac[1][0] * &r[0])) / &det;
        let mut step = Float::with_val(bits, 1);
        let mut accepted = false;
        for _ in 0..60 {
            let nu = Float::with_val(bits, &u - Float::with_val(bits, &du * &step));
            let nv = Float::with_val(bits, &v - Float::with_val(bits, &dv * &step));
            let (nr, nj) = saddle_system(&nu, &nv);
            let nn = residual_norm(&nr);
            if nn.is_finite() && nn < norm {
                u = nu;
                v = nv;
                r = nr;
                jac = nj;
                norm = nn;
                accepted = true;
                break;
            }
            step /= 2u32;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence(format!(
        "saddle system residual {} above tolerance",
        norm.to_f64()
    )))
}

/// `sqrt(6/pi) sqrt(4 / (-3 gbar)) exp(4 / (3 gbar))`, the imaginary part of the
/// energy just below the cut at negative reduced coupling.
pub fn semiclassical_discontinuity_magnitude(gbar: &BigReal) -> Result<BigReal> {
    if gbar.is_zero() || !gbar.is_sign_negative() {
        return Err(Error::DomainError("reduced coupling must be negative".into()));
    }
    let digits = gbar.digits();
    let bits = digits_to_bits(digits);
    let g = Float::with_val(bits, gbar.value());
    let pi = Float::with_val(bits, Constant::Pi);
    let prefactor = (Float::with_val(bits, 6) / pi).sqrt();
    let root = (Float::with_val(bits, -4) / 3u32 / &g).sqrt();
    let exponent = (Float::with_val(bits, 4) / 3u32 / &g).exp();
    Ok(BigReal::from_float(&(prefactor * root * exponent), digits))
}

fn cube_root(n: usize, bits: u32) -> Float {
    Float::with_val(bits, n).cbrt()
}

/// `exp(-[q + (c g)^(-2/3)] N^(1/3))`, the falloff from the cut `C_1` with
/// the finite-order correction folded into `q`.
pub fn model_sn_c1(n: usize, g: &BigReal, params: &ConvergenceModelParams) -> Result<BigReal> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if g.is_zero() || g.is_sign_negative() {
        return Err(Error::InvalidInput("g must be positive".into()));
    }
    let digits = g.digits().min(params.c.digits());
    let bits = digits_to_bits(digits);
    let cg = Float::with_val(bits, params.c.value() * g.value());
    let coupling = cg.pow(Float::with_val(bits, -2) / 3u32);
    let rate = Float::with_val(bits, params.c1_constant().value()) + coupling;
    let value = (-(rate * cube_root(n, bits))).exp();
    Ok(BigReal::from_float(&value, digits))
}

/// `exp(-a cos(theta) N^(1/3)) cos(a sin(theta) N^(1/3) + phase)`, the
/// contribution of the two conjugate cuts.
pub fn model_sn_osc(n: usize, params: &ConvergenceModelParams, phase: &BigReal) -> BigReal {
    let digits = params.a.digits().min(params.theta.digits());
    let bits = digits_to_bits(digits);
    let t = cube_root(n, bits);
    let theta = Float::with_val(bits, params.theta.value());
    let a = Float::with_val(bits, params.a.value());
    let decay = Float::with_val(bits, theta.cos_ref()) * &a * &t;
    let angle = Float::with_val(bits, theta.sin_ref()) * &a * &t + phase.value();
    BigReal::from_float(&((-decay).exp() * angle.cos()), digits)
}

/// `exp(-a cos(theta) N^(1/3))`.
pub fn model_sn_envelope(n: usize, params: &ConvergenceModelParams) -> BigReal {
    let digits = params.a.digits();
    let bits = digits_to_bits(digits);
    let rate = Float::with_val(bits, params.envelope_exponent().value());
    BigReal::from_float(&(-(rate * cube_root(n, bits))).exp(), digits)
}

#[derive(Clone, Debug)]
pub struct SubleadingTerm {
    /// `(sigma ghat)^N`.
    pub exact: BigReal,
    /// `exp(-N / (sigma g)^(2/3))`.
    pub approximant: BigReal,
}

/// Magnitude of the last reexpansion term, exactly and in its large-`N` form.
///
/// `sigma ghat = 1` is the strong-coupling identity at `omega = 0`, where the
/// estimate carries no information; it is rejected with the other
/// out-of-range products.
pub fn model_sn_subleading(n: usize, sigma: &BigReal, ghat: &BigReal, g: &BigReal) -> Result<SubleadingTerm> {
    let product = sigma * ghat;
    let p = product.to_f64();
    let one = BigReal::from_i64(1, product.digits());
    if product.is_zero() || product.is_sign_negative() || product >= one {
        return Err(Error::DomainError(format!(
            "sigma ghat = {p} outside (0, 1); equal to 1 is the degenerate strong-coupling case"
        )));
    }
    if g.is_zero() || g.is_sign_negative() {
        return Err(Error::InvalidInput("g must be positive".into()));
    }
    let digits = product.digits().min(g.digits());
    let bits = digits_to_bits(digits);
    let exact = Float::with_val(bits, product.value()).pow(n as u32);
    let sg = Float::with_val(bits, sigma.value() * g.value());
    let scale = sg.pow(Float::with_val(bits, 2) / 3u32);
    let approximant = (-(Float::with_val(bits, n) / scale)).exp();
    Ok(SubleadingTerm {
        exact: BigReal::from_float(&exact, digits),
        approximant: BigReal::from_float(&approximant, digits),
    })
}

/// CSV of model curves: `N,S_N_C1,S_N_osc,envelope`.
pub fn write_model_curves_csv<W: Write>(
    orders: impl IntoIterator<Item = usize>,
    g: &BigReal,
    params: &ConvergenceModelParams,
    phase: &BigReal,
    mut out: W,
) -> std::result::Result<(), CsvError> {
    writeln!(out, "N,S_N_C1,S_N_osc,envelope")?;
    for n in orders {
        let c1 = model_sn_c1(n, g, params)?;
        let osc = model_sn_osc(n, params, phase);
        let env = model_sn_envelope(n, params);
        writeln!(
            out,
            "{n},{},{},{}",
            c1.to_decimal_string(),
            osc.to_decimal_string(),
            env.to_decimal_string()
        )?;
    }
    Ok(())
}

/// Failure while writing a model table.
#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(s: &str) -> BigReal {
        BigReal::parse(s, 50).unwrap()
    }

    #[test]
    fn f_k_hand_values() {
        let v = f_k(&real("-1"), &real("0.75"), 7).unwrap();
        assert!((v.to_f64() + 2f64.powf(1.5)).abs() < 1e-14);
        let v = f_n_reduced(&real("-1"), &real("0.75")).unwrap();
        assert!((v.to_f64() + 2f64.powf(1.5)).abs() < 1e-14);
        assert!(f_k(&real("0"), &real("1"), 3).is_err());
        assert!(f_n_reduced(&real("0.1"), &real("1")).is_err());
        let near_zero = f_k(&real("-1e-20"), &real("1"), 3).unwrap();
        assert!(near_zero.to_f64() < -1e19);
    }

    #[test]
    fn f_k_derivative_matches_difference() {
        let sigma = real("1.3");
        let h = real("1e-20");
        let at = real("-0.4");
        let plus = f_k(&(&at + &h), &sigma, 12).unwrap();
        let minus = f_k(&(&at - &h), &sigma, 12).unwrap();
        let numeric = (&(&plus - &minus) / &(&h * &BigReal::from_i64(2, 50))).to_f64();
        let analytic = f_k_derivative(&at, &sigma, 12).unwrap().to_f64();
        assert!((numeric - analytic).abs() < 1e-12 * analytic.abs());
    }

    #[test]
    fn finite_k_saddle_drifts_toward_leading_estimate() {
        let sigma = real("1");
        let mut previous = f64::INFINITY;
        for k in [100u64, 1000, 10000] {
            let estimate = -4.0 / (3.0 * k as f64);
            // bisection on the derivative between half and twice the estimate
            let (mut lo, mut hi) = (2.0 * estimate, 0.5 * estimate);
            let sign = |x: f64| {
                f_k_derivative(&BigReal::from_f64(x, 50), &sigma, k)
                    .unwrap()
                    .is_sign_negative()
            };
            let s_lo = sign(lo);
            assert_ne!(s_lo, sign(hi));
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if sign(mid) == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let relative = (lo / estimate - 1.0).abs();
            assert!(relative * (k as f64) < 5.0, "k={k} {relative}");
            assert!(relative < previous);
            previous = relative;
        }
    }

    #[test]
    fn saddle_constants() {
        let s = solve_gamma_c(50).unwrap();
        assert!(s.gamma.agrees_with(&real("-0.242964029973520"), 15), "{}", s.gamma);
        // the default c agrees with the root to 11 significant digits only
        assert!(s.c.agrees_with(&real("0.186047272987975"), 11), "{}", s.c);
        let root = real("0.18604727298739751298455474046201654960241488565255");
        assert!(s.c.agrees_with(&root, 40), "{}", s.c);
        assert!(s.residual_gamma1.to_f64().abs() < 1e-30);
        assert!(s.residual_f_n.to_f64().abs() < 1e-30);
        let reduced = f_n_reduced(&s.gamma, &s.c).unwrap();
        assert!(reduced.to_f64().abs() < 1e-12);
        let coarse = solve_gamma_c(30).unwrap();
        assert!(coarse.gamma.agrees_with(&s.gamma, 28));
        assert!(coarse.c.agrees_with(&s.c, 28));
    }

    #[test]
    fn discontinuity_values() {
        let v = semiclassical_discontinuity_magnitude(&(&real("-4") / &real("3")))
            .unwrap()
            .to_f64();
        assert!((v - (6.0 / std::f64::consts::PI).sqrt() / std::f64::consts::E).abs() < 1e-14);
        assert!((v - 0.50834).abs() < 1e-4);
        let at = |d: u32| semiclassical_discontinuity_magnitude(&BigReal::parse("-0.1", d).unwrap()).unwrap();
        let expected = (6.0 / std::f64::consts::PI).sqrt() * (40.0f64 / 3.0).sqrt() * (-40.0f64 / 3.0).exp();
        assert!((at(30).to_f64() / expected - 1.0).abs() < 1e-13);
        assert!(at(30).agrees_with(&at(60), 28));
        let tiny = semiclassical_discontinuity_magnitude(&real("-1e-3")).unwrap().to_f64();
        assert!(tiny < 1e-300);
        assert!(semiclassical_discontinuity_magnitude(&real("0")).is_err());
    }

    #[test]
    fn c1_model() {
        let params = ConvergenceModelParams::reference(40).unwrap();
        let q = params.c1_constant().to_f64();
        assert!((9.65..9.75).contains(&q), "{q}");
        let huge = real("1e30");
        let v = model_sn_c1(8, &huge, &params).unwrap().to_f64();
        assert!((v / (-2.0 * q).exp() - 1.0).abs() < 1e-6);
        assert!((v / 3.7e-9 - 1.0).abs() < 0.1, "{v}");
        let g = real("2");
        let mut last = f64::INFINITY;
        for n in 1..40 {
            let v = model_sn_c1(n, &g, &params).unwrap().to_f64();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn oscillating_model() {
        let params = ConvergenceModelParams::reference(40).unwrap();
        let e = params.envelope_exponent().to_f64();
        assert!((9.2..9.4).contains(&e), "{e}");
        let a = params.a.to_f64();
        assert!((a / (0.160f64 * 0.186047272987975).powf(-2.0 / 3.0) - 1.0).abs() < 1e-10);
        // a zero of the cosine
        let n = 27usize;
        let t = 3.0;
        let phase = std::f64::consts::FRAC_PI_2 - a * (-0.467f64).sin() * t;
        let v = model_sn_osc(n, &params, &BigReal::from_f64(phase, 40)).to_f64();
        assert!(v.abs() < 1e-25);
        let mut flat = params.clone();
        flat.theta = BigReal::zero(40);
        let v = model_sn_osc(8, &flat, &BigReal::zero(40)).to_f64();
        assert!((v / (-2.0 * a).exp() - 1.0).abs() < 1e-12);
        assert!(
            ConvergenceModelParams::new(real("0.16"), real("0.1"), real("0.186"), real("6.85"), real("-0.24")).is_err()
        );
    }

    #[test]
    fn subleading_model() {
        // (sigma g)^(2/3) = 3 at N = 27
        let g = real("1");
        let sigma = real("3").pow(&real("1.5"));
        let ghat = real("0.1");
        let term = model_sn_subleading(27, &sigma, &ghat, &g).unwrap();
        assert!((term.approximant.to_f64() - (-9.0f64).exp()).abs() < 1e-15);
        assert!((term.exact.to_f64() - (0.1 * sigma.to_f64()).powi(27)).abs() < 1e-20);
        // sigma ghat = 1 - 1/Omega^2 at omega = 1
        let big = 30.0f64;
        let g = real("0.7");
        let sigma = BigReal::from_f64(big * (big * big - 1.0) / 0.7, 50);
        let ghat = BigReal::from_f64(0.7 / big.powi(3), 50);
        let n = 900;
        let term = model_sn_subleading(n, &sigma, &ghat, &g).unwrap();
        let leading = (-(n as f64) / (big * big)).exp();
        assert!((term.exact.to_f64() / leading - 1.0).abs() < 0.01);
        assert!(model_sn_subleading(3, &real("2"), &real("0.5"), &g).is_err());
        assert!(model_sn_subleading(3, &real("2"), &real("-0.5"), &g).is_err());
    }

    #[test]
    fn curves_csv() {
        let params = ConvergenceModelParams::reference(30).unwrap();
        let mut buf = Vec::new();
        write_model_curves_csv(1..=3, &real("1"), &params, &real("0"), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("N,S_N_C1,S_N_osc,envelope"));
        assert_eq!(text.lines().count(), 4);
    }
}
