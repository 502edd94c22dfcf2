//! Variational reexpansion of the perturbation series.
//!
//! The harmonic frequency is split as `omega^2 = Omega^2 - g sigma / Omega`
//! and the series is re-expanded in the reduced coupling `ghat = g / Omega^3`
//! at fixed `sigma = Omega (Omega^2 - omega^2) / g`:
//!
//! ```text
//! W_N = Omega * sum_{l=0}^{N} eps_l(sigma) (ghat/4)^l
//! eps_l(sigma) = sum_{j=0}^{l} E_j C((1-3j)/2, l-j) (-4 sigma)^(l-j)
//! ```
//!
//! Expanding `W_N = (g/ghat)^(1/3) w_N(ghat, omegahat^2)` in
//! `omegahat^2 = (omega/Omega)^2` gives the strong-coupling coefficients
//!
//! ```text
//! alpha_n = (1/n!) d^n w_N / d(omegahat^2)^n |_0 * (ghat/4)^((2n-1)/3)
//! (1/n!) w_N^(n) = sum_l (-1)^(l+n) sum_{j=0}^{l-n} E_j C((1-3j)/2, l-j) C(l-j, n) (-ghat/4)^j
//! ```
//!
//! evaluated at `ghat_N = 1 / sigma_N`, `sigma_N = c N (1 + kappa / N^(2/3))`.

use std::io::Write;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::precision::{
    digits_to_bits, verified_eval, verified_eval_many, BigReal, HalfBinomialTable, PrecisionPolicy,
};
use crate::series::{rs_coefficients_capped, RationalSeries, DEFAULT_MAX_ORDER};

/// Saddle-point growth constant of the optimal `sigma_N`, to 15 digits.
pub const DEFAULT_C: &str = "0.186047272987975";
/// Finite-order correction in `sigma_N = c N (1 + kappa / N^(2/3))`.
pub const DEFAULT_CORRECTION: &str = "6.85";
/// Number of strong-coupling coefficients computed by default (`alpha_0 .. alpha_22`).
pub const DEFAULT_N_MAX: usize = 22;
/// Digits to which every verified result must be stable.
pub const DEFAULT_TARGET_DIGITS: u32 = 32;

/// How the trial frequency is chosen at each order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaStrategy {
    /// `sigma_N = c N (1 + kappa / N^(2/3))`.
    Formula,
    /// Stationary point (or turning point) of `W_N` in `Omega`.
    Stationary,
}

impl std::str::FromStr for OmegaStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "formula" => Ok(OmegaStrategy::Formula),
            "stationary" => Ok(OmegaStrategy::Stationary),
            other => Err(Error::InvalidInput(format!("unknown omega strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for OmegaStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OmegaStrategy::Formula => "formula",
            OmegaStrategy::Stationary => "stationary",
        })
    }
}

#[derive(Clone, Debug)]
pub struct VariationalConfig {
    pub g: BigReal,
    pub omega: BigReal,
    pub order: usize,
    pub c_constant: BigReal,
    pub correction_constant: BigReal,
    pub omega_strategy: OmegaStrategy,
    pub policy: PrecisionPolicy,
    pub target_digits: u32,
}

impl VariationalConfig {
    /// Config with the default constants, formula strategy and precision policy.
    pub fn new(g: BigReal, omega: BigReal, order: usize) -> Result<Self> {
        let digits = 60;
        let config = VariationalConfig {
            g,
            omega,
            order,
            c_constant: BigReal::parse(DEFAULT_C, digits)?,
            correction_constant: BigReal::parse(DEFAULT_CORRECTION, digits)?,
            omega_strategy: OmegaStrategy::Formula,
            policy: PrecisionPolicy::default(),
            target_digits: DEFAULT_TARGET_DIGITS,
        };
        config.validate()?;
        Ok(config)
    }

    /// Pure quartic oscillator, `g = 4`, `omega = 0`: energies equal `alpha_0` directly.
    pub fn strong_coupling(order: usize) -> Result<Self> {
        Self::new(BigReal::from_i64(4, 60), BigReal::zero(60), order)
    }

    pub fn with_order(mut self, order: usize) -> Result<Self> {
        self.order = order;
        self.validate()?;
        Ok(self)
    }

    pub fn with_strategy(mut self, strategy: OmegaStrategy) -> Self {
        self.omega_strategy = strategy;
        self
    }

    pub fn with_policy(mut self, policy: PrecisionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_target_digits(mut self, digits: u32) -> Self {
        self.target_digits = digits;
        self
    }

    pub fn with_constants(mut self, c: BigReal, correction: BigReal) -> Result<Self> {
        self.c_constant = c;
        self.correction_constant = correction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.is_zero() || self.g.is_sign_negative() {
            return Err(Error::InvalidInput("coupling g must be positive".into()));
        }
        if self.omega.is_sign_negative() {
            return Err(Error::InvalidInput("omega must be nonnegative".into()));
        }
        if self.order == 0 {
            return Err(Error::InvalidInput("order N must be at least 1".into()));
        }
        let c = self.c_constant.to_f64();
        if !(c > 0.18 && c < 0.19) {
            return Err(Error::InvalidInput(format!("c constant {c} outside (0.18, 0.19)")));
        }
        if self.correction_constant.is_sign_negative() {
            return Err(Error::InvalidInput("correction constant must be nonnegative".into()));
        }
        self.policy.validate()
    }

    pub fn working_digits(&self) -> u32 {
        self.policy.working_digits(self.order)
    }
}

/// `eps_0 .. eps_N` at one value of `sigma`.
#[derive(Clone, Debug)]
pub struct ReexpansionTable {
    pub sigma: BigReal,
    pub epsilons: Vec<BigReal>,
}

/// Strong-coupling approximants at one order.
#[derive(Clone, Debug)]
pub struct ApproximantRecord {
    pub order: usize,
    pub sigma: BigReal,
    pub ghat: BigReal,
    pub alphas: Vec<BigReal>,
    /// `|alpha_0 - reference|` when a reference was supplied.
    pub delta: Option<BigReal>,
}

impl ApproximantRecord {
    /// `alpha_0 - reference`, keeping the sign.
    pub fn signed_deviation(&self, reference: &BigReal) -> BigReal {
        &self.alphas[0] - reference
    }
}

/// Whether the selected trial frequency is a true extremum of `W_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StationaryKind {
    Extremum,
    TurningPoint,
}

#[derive(Clone, Debug)]
pub struct OmegaOptimum {
    pub omega: BigReal,
    pub kind: StationaryKind,
    /// Frequency predicted by `sigma_N`, the anchor for tie-breaking.
    pub prediction: f64,
    /// Every root found in the search window, nearest first.
    pub candidates: Vec<BigReal>,
}

/// `sigma_N = c N (1 + kappa / N^(2/3))`.
pub fn sigma_of_order(order: usize, config: &VariationalConfig) -> BigReal {
    let digits = config.working_digits().max(config.target_digits);
    BigReal::from_float(&sigma_float(order, config, digits), digits)
}

fn sigma_float(order: usize, config: &VariationalConfig, digits: u32) -> Float {
    let bits = digits_to_bits(digits);
    let n = Float::with_val(bits, order);
    let two_thirds = Float::with_val(bits, 2) / 3u32;
    let n23 = Float::with_val(bits, n.clone().pow(&two_thirds));
    let correction = Float::with_val(bits, config.correction_constant.value()) / n23 + 1u32;
    Float::with_val(bits, config.c_constant.value()) * n * correction
}

/// Exact ingredients (series and binomial table) shared by every evaluation
/// up to a fixed maximum order.
#[derive(Clone, Debug)]
pub struct VariationalEngine {
    series: RationalSeries,
    binomials: HalfBinomialTable,
}

impl VariationalEngine {
    pub fn new(series: RationalSeries) -> Self {
        let binomials = HalfBinomialTable::new(series.max_order());
        VariationalEngine { series, binomials }
    }

    /// Engine holding `E_0 .. E_order`; orders past the default cap are allowed here.
    pub fn for_order(order: usize) -> Result<Self> {
        Ok(Self::new(rs_coefficients_capped(order, order.max(DEFAULT_MAX_ORDER))?))
    }

    pub fn series(&self) -> &RationalSeries {
        &self.series
    }

    pub fn max_order(&self) -> usize {
        self.series.max_order()
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > self.max_order() {
            return Err(Error::InvalidInput(format!(
                "order {order} exceeds the {} coefficients held by the engine",
                self.max_order()
            )));
        }
        Ok(())
    }

    /// `eps_l(sigma)` exactly, for rational `sigma`.
    pub fn exact_reexpansion_coefficients(&self, sigma: &Rational, order: usize) -> Result<Vec<Rational>> {
        self.check_order(order)?;
        let s = Rational::from(sigma * -4i32);
        let mut powers = vec![Rational::from(1)];
        for k in 1..=order {
            let next = Rational::from(&powers[k - 1] * &s);
            powers.push(next);
        }
        Ok((0..=order)
            .map(|l| {
                let mut acc = Rational::new();
                for j in 0..=l {
                    let term = Rational::from(&self.series.coefficients()[j] * self.binomials.get(j, l - j));
                    acc += term * &powers[l - j];
                }
                acc
            })
            .collect())
    }

    fn epsilons_float(&self, sigma: &Float, order: usize, bits: u32) -> Vec<Float> {
        let s = Float::with_val(bits, sigma * -4i32);
        let mut powers = vec![Float::with_val(bits, 1)];
        for k in 1..=order {
            let next = Float::with_val(bits, &powers[k - 1] * &s);
            powers.push(next);
        }
        let coeffs: Vec<Float> = self.series.coefficients()[..=order]
            .iter()
            .map(|e| Float::with_val(bits, e))
            .collect();
        (0..=order)
            .map(|l| {
                let mut acc = Float::new(bits);
                for j in 0..=l {
                    let mut term = Float::with_val(bits, self.binomials.get(j, l - j));
                    term *= &coeffs[j];
                    term *= &powers[l - j];
                    acc += term;
                }
                acc
            })
            .collect()
    }

    /// `eps_0(sigma) .. eps_N(sigma)`, each verified across an escalation.
    pub fn reexpansion_coefficients(
        &self,
        sigma: &BigReal,
        order: usize,
        policy: &PrecisionPolicy,
        target_digits: u32,
    ) -> Result<ReexpansionTable> {
        self.check_order(order)?;
        let epsilons = verified_eval_many(policy, order, target_digits, |digits| {
            let bits = digits_to_bits(digits);
            let sigma = Float::with_val(bits, sigma.value());
            Ok(self.epsilons_float(&sigma, order, bits))
        })?;
        Ok(ReexpansionTable {
            sigma: sigma.clone(),
            epsilons,
        })
    }

    /// `W_N(g, Omega)` with `sigma` and `ghat` derived from the trial frequency.
    pub fn truncated_energy(&self, config: &VariationalConfig, trial: &BigReal) -> Result<BigReal> {
        let order = config.order;
        self.check_order(order)?;
        if trial.is_zero() || trial.is_sign_negative() {
            return Err(Error::DomainError("trial frequency must be positive".into()));
        }
        verified_eval(&config.policy, order, config.target_digits, |digits| {
            let bits = digits_to_bits(digits);
            let big_omega = Float::with_val(bits, trial.value());
            let omega = Float::with_val(bits, config.omega.value());
            let g = Float::with_val(bits, config.g.value());
            let cube = Float::with_val(bits, big_omega.clone().square() * &big_omega);
            let omega_sq = Float::with_val(bits, omega.square_ref());
            let sigma = Float::with_val(bits, big_omega.clone().square() - &omega_sq) * &big_omega / &g;
            let quarter_ghat = Float::with_val(bits, &g / &cube) / 4u32;
            let eps = self.epsilons_float(&sigma, order, bits);
            let mut acc = Float::new(bits);
            for e in eps.iter().rev() {
                acc *= &quarter_ghat;
                acc += e;
            }
            Ok(acc * big_omega)
        })
    }

    /// Exact polynomial coefficients `r[n][j]` with
    /// `(1/n!) w_N^(n)(ghat, 0) = sum_j r[n][j] (-ghat/4)^j`.
    pub fn strong_coupling_polynomials(&self, order: usize, n_max: usize) -> Result<Vec<Vec<Rational>>> {
        self.check_order(order)?;
        if n_max > order {
            return Err(Error::InvalidInput(format!("n_max {n_max} exceeds order {order}")));
        }
        let mut out = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut row = Vec::with_capacity(order - n + 1);
            for j in 0..=(order - n) {
                let mut inner = Rational::new();
                // C(l-j, n) for l - j = n, n+1, ...
                let mut choose = Integer::from(1);
                for l in (j + n)..=order {
                    let m = l - j;
                    if m > n {
                        choose *= m as u32;
                        choose.div_exact_u_mut((m - n) as u32);
                    }
                    let term = Rational::from(self.binomials.get(j, m) * &choose);
                    if (l + n) % 2 == 0 {
                        inner += term;
                    } else {
                        inner -= term;
                    }
                }
                row.push(inner * &self.series.coefficients()[j]);
            }
            out.push(row);
        }
        Ok(out)
    }

    /// `[(1/n!) w_N^(n)(ghat, 0)]` for `n = 0 .. n_max`.
    pub fn strong_derivative_sums(
        &self,
        ghat: &BigReal,
        order: usize,
        n_max: usize,
        policy: &PrecisionPolicy,
        target_digits: u32,
    ) -> Result<Vec<BigReal>> {
        if ghat.is_zero() || ghat.is_sign_negative() {
            return Err(Error::DomainError("ghat must be positive".into()));
        }
        let polys = self.strong_coupling_polynomials(order, n_max)?;
        verified_eval_many(policy, order, target_digits, |digits| {
            let bits = digits_to_bits(digits);
            let y = -Float::with_val(bits, ghat.value()) / 4u32;
            Ok(polys.iter().map(|p| horner(p, &y, bits)).collect())
        })
    }

    /// `alpha_0 .. alpha_{n_max}` at order `config.order`.
    ///
    /// With the formula strategy the evaluation point is `ghat_N = 1/sigma_N`;
    /// with the stationary strategy it is `g / Omega_N^3` for the pure
    /// quartic oscillator's optimal `Omega_N`.
    pub fn alpha_approximants(
        &self,
        config: &VariationalConfig,
        n_max: usize,
        reference: Option<&BigReal>,
    ) -> Result<ApproximantRecord> {
        let order = config.order;
        let polys = self.strong_coupling_polynomials(order, n_max)?;
        let stationary_sigma = match config.omega_strategy {
            OmegaStrategy::Formula => None,
            OmegaStrategy::Stationary => {
                let mut quartic = config.clone();
                quartic.omega = BigReal::zero(config.omega.digits());
                let opt = self.optimize_omega(&quartic)?;
                let digits = opt.omega.digits();
                let bits = digits_to_bits(digits);
                let w = Float::with_val(bits, opt.omega.value());
                let cube = Float::with_val(bits, w.clone().square() * &w);
                Some(Float::with_val(bits, cube / config.g.value()))
            }
        };
        let values = verified_eval_many(&config.policy, order, config.target_digits, |digits| {
            let bits = digits_to_bits(digits);
            let sigma = match &stationary_sigma {
                Some(s) => Float::with_val(bits, s),
                None => sigma_float(order, config, digits),
            };
            let ghat = Float::with_val(bits, sigma.recip_ref());
            let quarter = Float::with_val(bits, &ghat / 4u32);
            let y = -quarter.clone();
            let mut out = vec![sigma, ghat.clone()];
            for (n, p) in polys.iter().enumerate() {
                let sum = horner(p, &y, bits);
                let exponent = Float::with_val(bits, 2 * n as i64 - 1) / 3u32;
                let scale = Float::with_val(bits, (&quarter).pow(&exponent));
                out.push(sum * scale);
            }
            Ok(out)
        })?;
        let mut values = values.into_iter();
        let sigma = values.next().expect("sigma");
        let ghat = values.next().expect("ghat");
        let alphas: Vec<BigReal> = values.collect();
        let delta = reference.map(|r| (&alphas[0] - r).abs());
        Ok(ApproximantRecord {
            order,
            sigma,
            ghat,
            alphas,
            delta,
        })
    }

    /// `W`, `dW/dOmega`, `d^2W/dOmega^2` at trial frequency `omega_trial`,
    /// differentiated term by term through `sigma(Omega)` and `ghat(Omega)`.
    pub fn energy_derivatives(&self, config: &VariationalConfig, omega_trial: &Float, digits: u32) -> [Float; 3] {
        let bits = digits_to_bits(digits);
        let order = config.order;
        let big = Float::with_val(bits, omega_trial);
        let w2 = Float::with_val(bits, config.omega.value().square_ref());
        let quarter_g = Float::with_val(bits, config.g.value()) / 4u32;
        let inv = Float::with_val(bits, big.recip_ref());
        let inv2 = Float::with_val(bits, inv.square_ref());
        let inv3 = Float::with_val(bits, &inv2 * &inv);
        // u = omega^2/Omega^2 - 1 = -sigma ghat
        let u = Float::with_val(bits, &w2 * &inv2) - 1u32;
        let du = Float::with_val(bits, &w2 * &inv3) * -2i32;
        let d2u = Float::with_val(bits, &w2 * &inv3) * &inv * 6u32;
        let mut total = [Float::new(bits), Float::new(bits), Float::new(bits)];
        // scale_j = E_j (g/4)^j Omega^(-3j)
        let mut geometric = Float::with_val(bits, 1);
        let step = Float::with_val(bits, &quarter_g * &inv3);
        for j in 0..=order {
            let mut p = Float::new(bits);
            let mut dp = Float::new(bits);
            let mut ddp = Float::new(bits);
            for m in (0..=(order - j)).rev() {
                ddp *= &u;
                ddp += &dp;
                dp *= &u;
                dp += &p;
                p *= &u;
                p += self.binomials.get(j, m);
            }
            ddp *= 2u32;
            let scale = Float::with_val(bits, &geometric * &self.series.coefficients()[j]);
            let k = 1 - 3 * j as i64;
            // Omega^(1-3j) = Omega * geometric-part; fold Omega powers explicitly
            let f0 = Float::with_val(bits, &scale * &big);
            total[0] += Float::with_val(bits, &f0 * &p);
            let mut first = Float::with_val(bits, &scale * &p) * k;
            first += Float::with_val(bits, &f0 * &dp) * &du;
            total[1] += &first;
            let mut second = Float::with_val(bits, &scale * &p) * (k * (k - 1)) * &inv;
            second += Float::with_val(bits, &scale * &dp) * &du * (2 * k);
            let mut curvature = Float::with_val(bits, &ddp * &du) * &du;
            curvature += Float::with_val(bits, &dp * &d2u);
            second += curvature * &f0;
            total[2] += &second;
            geometric *= &step;
        }
        total
    }

    /// Trial frequency where `W_N` depends least on `Omega`.
    ///
    /// Searches `[0.2, 5]` times the frequency predicted by `sigma_N` for
    /// sign changes of `dW/dOmega`, falling back to `d^2W/dOmega^2` when
    /// there are none, and returns the root nearest the prediction.
    pub fn optimize_omega(&self, config: &VariationalConfig) -> Result<OmegaOptimum> {
        self.check_order(config.order)?;
        let digits = config.working_digits().max(config.target_digits + 10);
        let prediction = predicted_omega(config);
        let lo = 0.2 * prediction;
        let hi = 5.0 * prediction;
        const GRID: usize = 240;
        let grid: Vec<f64> = (0..=GRID)
            .map(|i| lo * (hi / lo).powf(i as f64 / GRID as f64))
            .collect();
        let bits = digits_to_bits(digits);
        let samples: Vec<[Float; 3]> = grid
            .iter()
            .map(|&x| self.energy_derivatives(config, &Float::with_val(bits, x), digits))
            .collect();
        for (kind, index) in [
            (StationaryKind::Extremum, 1usize),
            (StationaryKind::TurningPoint, 2usize),
        ] {
            let mut roots: Vec<Float> = Vec::new();
            for i in 0..GRID {
                let (a, b) = (&samples[i][index], &samples[i + 1][index]);
                if a.is_zero() {
                    roots.push(Float::with_val(bits, grid[i]));
                } else if a.is_sign_negative() != b.is_sign_negative() && !b.is_zero() {
                    let root = illinois(
                        |x| self.energy_derivatives(config, x, digits)[index].clone(),
                        Float::with_val(bits, grid[i]),
                        Float::with_val(bits, grid[i + 1]),
                        digits,
                    );
                    roots.push(root);
                }
            }
            if roots.is_empty() {
                continue;
            }
            roots.sort_by(|x, y| {
                let dx = (x.to_f64() - prediction).abs();
                let dy = (y.to_f64() - prediction).abs();
                dx.total_cmp(&dy).then_with(|| x.partial_cmp(y).unwrap())
            });
            let candidates: Vec<BigReal> = roots.iter().map(|r| BigReal::from_float(r, digits)).collect();
            return Ok(OmegaOptimum {
                omega: candidates[0].clone(),
                kind,
                prediction,
                candidates,
            });
        }
        Err(Error::NoExtremum { lo, hi })
    }
}

/// Frequency solving `Omega (Omega^2 - omega^2) / g = sigma_N`, the largest real root.
pub fn predicted_omega(config: &VariationalConfig) -> f64 {
    let sigma = sigma_of_order(config.order, config).to_f64();
    let g = config.g.to_f64();
    let w2 = config.omega.to_f64().powi(2);
    let rhs = g * sigma;
    let mut x = w2.sqrt().max(rhs.cbrt()).max(1e-300);
    for _ in 0..200 {
        let f = x * x * x - w2 * x - rhs;
        let df = 3.0 * x * x - w2;
        let next = x - f / df;
        if !next.is_finite() {
            break;
        }
        if (next - x).abs() <= 1e-15 * x {
            x = next;
            break;
        }
        x = next;
    }
    x
}

fn horner(coeffs: &[Rational], x: &Float, bits: u32) -> Float {
    let mut acc = Float::new(bits);
    for c in coeffs.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

// False position with the Illinois modification on a sign-changing bracket.
fn illinois<F>(f: F, mut a: Float, mut b: Float, digits: u32) -> Float
where
    F: Fn(&Float) -> Float,
{
    let bits = digits_to_bits(digits);
    let mut fa = f(&a);
    let mut fb = f(&b);
    let tol_exp = -(digits as i32 - 5);
    let tol = Float::with_val(bits, 10).pow(tol_exp);
    let mut side = 0i8;
    for _ in 0..4000 {
        let width = Float::with_val(bits, &b - &a).abs();
        let scale = Float::with_val(bits, a.abs_ref()).max(&Float::with_val(bits, b.abs_ref()));
        if width <= Float::with_val(bits, &scale * &tol) {
            break;
        }
        let denom = Float::with_val(bits, &fb - &fa);
        let mut c = Float::with_val(bits, &b - &a) * &fb / &denom;
        c = Float::with_val(bits, &b - &c);
        let (left, right) = if a < b { (&a, &b) } else { (&b, &a) };
        if !c.is_finite() || c <= *left || c >= *right {
            c = Float::with_val(bits, &a + &b) / 2u32;
        }
        let fc = f(&c);
        if fc.is_zero() {
            return c;
        }
        if fc.is_sign_negative() == fb.is_sign_negative() {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= 2u32;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= 2u32;
            }
            side = 1;
        }
    }
    Float::with_val(bits, &a + &b) / 2u32
}

/// `eps_0 .. eps_N` at `sigma` from a series, building a one-off binomial table.
pub fn reexpansion_coefficients(
    series: &RationalSeries,
    sigma: &BigReal,
    order: usize,
    policy: &PrecisionPolicy,
    target_digits: u32,
) -> Result<ReexpansionTable> {
    VariationalEngine::new(series.truncated(order)).reexpansion_coefficients(sigma, order, policy, target_digits)
}

/// `[(1/n!) w_N^(n)(ghat, 0)]` from a series, building a one-off binomial table.
pub fn strong_derivative_sums(
    ghat: &BigReal,
    order: usize,
    n_max: usize,
    series: &RationalSeries,
    policy: &PrecisionPolicy,
    target_digits: u32,
) -> Result<Vec<BigReal>> {
    VariationalEngine::new(series.truncated(order)).strong_derivative_sums(ghat, order, n_max, policy, target_digits)
}

/// CSV of approximant records: `N,sigma_N,ghat_N,alpha_0..alpha_{n_max},delta_N`.
pub fn write_records_csv<W: Write>(records: &[ApproximantRecord], n_max: usize, mut out: W) -> std::io::Result<()> {
    let mut header = String::from("N,sigma_N,ghat_N");
    for n in 0..=n_max {
        header.push_str(&format!(",alpha_{n}"));
    }
    header.push_str(",delta_N");
    writeln!(out, "{header}")?;
    for r in records {
        let mut row = format!("{},{},{}", r.order, r.sigma, r.ghat);
        for n in 0..=n_max {
            row.push(',');
            if let Some(a) = r.alphas.get(n) {
                row.push_str(&a.to_decimal_string());
            }
        }
        row.push(',');
        if let Some(d) = &r.delta {
            row.push_str(&d.to_decimal_string());
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}
