//! Ground-state energies of `p^2/2 + omega^2 x^2/2 + g x^4/4` by
//! diagonalization in a truncated harmonic-oscillator basis.
//!
//! Only even states couple to the ground state, so the Hamiltonian is
//! pentadiagonal in the basis `|0>, |2>, |4>, ...`. The lowest eigenvalue is
//! bracketed by Sturm counts from a banded `LDL^T` factorization and then
//! polished by Rayleigh-quotient inverse iteration at full precision. The
//! basis is doubled until successive energies agree.

use std::io::Write;

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::precision::{agreed_digits, digits_to_bits, BigReal};

pub const DEFAULT_MAX_DIGITS: u32 = 40;
pub const DEFAULT_MAX_BASIS: usize = 4096;
const INITIAL_BASIS: usize = 32;
// guard digits against cancellation in entries that grow like g n^2
const GUARD_DIGITS: u32 = 30;

#[derive(Clone, Debug)]
pub struct OracleEnergy {
    pub energy: BigReal,
    pub certified_digits: u32,
    pub basis_size_used: usize,
    pub scale_frequency: BigReal,
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub max_digits: u32,
    pub max_basis: usize,
    /// Basis frequency; `max(omega, g^(1/3))` when absent.
    pub scale_frequency: Option<BigReal>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_digits: DEFAULT_MAX_DIGITS,
            max_basis: DEFAULT_MAX_BASIS,
            scale_frequency: None,
        }
    }
}

/// Lowest eigenvalue with the default options.
pub fn ground_energy(g: &BigReal, omega: &BigReal, target_digits: u32) -> Result<OracleEnergy> {
    ground_energy_with(g, omega, target_digits, &OracleOptions::default())
}

pub fn ground_energy_with(
    g: &BigReal,
    omega: &BigReal,
    target_digits: u32,
    options: &OracleOptions,
) -> Result<OracleEnergy> {
    if g.is_sign_negative() && !g.is_zero() || omega.is_sign_negative() && !omega.is_zero() {
        return Err(Error::InvalidInput("g and omega must be nonnegative".into()));
    }
    if g.is_zero() && omega.is_zero() {
        return Err(Error::InvalidInput("g and omega cannot both vanish".into()));
    }
    if target_digits == 0 || target_digits > options.max_digits {
        return Err(Error::InvalidInput(format!(
            "target digits {target_digits} outside 1..={}",
            options.max_digits
        )));
    }
    let digits = target_digits + GUARD_DIGITS;
    let bits = digits_to_bits(digits);
    let g = Float::with_val(bits, g.value());
    let omega = Float::with_val(bits, omega.value());
    let scale = match &options.scale_frequency {
        Some(s) if !s.is_zero() && !s.is_sign_negative() => Float::with_val(bits, s.value()),
        Some(_) => return Err(Error::InvalidInput("basis frequency must be positive".into())),
        None => Float::with_val(bits, g.cbrt_ref()).max(&omega),
    };

    let mut size = INITIAL_BASIS.min(options.max_basis);
    let mut previous = lowest_eigenvalue(&Hamiltonian::new(&g, &omega, &scale, size), bits);
    while size < options.max_basis {
        size = (2 * size).min(options.max_basis);
        let current = lowest_eigenvalue(&Hamiltonian::new(&g, &omega, &scale, size), bits);
        let agreed = agreed_digits(&previous, &current).min(digits);
        if agreed >= target_digits {
            return Ok(OracleEnergy {
                energy: BigReal::from_float(&current, target_digits),
                certified_digits: agreed.min(target_digits),
                basis_size_used: size,
                scale_frequency: BigReal::from_float(&scale, digits),
            });
        }
        previous = current;
    }
    Err(Error::NonConvergent {
        max_basis: options.max_basis,
    })
}

/// Lowest eigenvalue in the first `size` even basis states, an upper bound on
/// the ground energy.
pub fn truncated_ground_energy(
    g: &BigReal,
    omega: &BigReal,
    scale_frequency: &BigReal,
    size: usize,
    digits: u32,
) -> Result<BigReal> {
    if size == 0 || digits == 0 {
        return Err(Error::InvalidInput("basis size and digits must be positive".into()));
    }
    if g.is_sign_negative() && !g.is_zero() || omega.is_sign_negative() && !omega.is_zero() {
        return Err(Error::InvalidInput("g and omega must be nonnegative".into()));
    }
    if scale_frequency.is_zero() || scale_frequency.is_sign_negative() {
        return Err(Error::InvalidInput("basis frequency must be positive".into()));
    }
    let bits = digits_to_bits(digits);
    let h = Hamiltonian::new(
        &Float::with_val(bits, g.value()),
        &Float::with_val(bits, omega.value()),
        &Float::with_val(bits, scale_frequency.value()),
        size,
    );
    Ok(BigReal::from_float(&lowest_eigenvalue(&h, bits), digits))
}

/// `alpha_0` as the pure quartic energy at `g = 4`, where `(g/4)^(1/3) = 1`.
pub fn alpha0_reference(target_digits: u32) -> Result<OracleEnergy> {
    let digits = target_digits + GUARD_DIGITS;
    ground_energy(&BigReal::from_i64(4, digits), &BigReal::zero(digits), target_digits)
}

/// `(g/4)^(1/3) sum_{n < terms} alpha_n (g / 4 omega^3)^(-2n/3)`.
pub fn strong_coupling_partial_sum(alphas: &[BigReal], g: &BigReal, omega: &BigReal, terms: usize) -> Result<BigReal> {
    if terms > alphas.len() {
        return Err(Error::InvalidInput(format!(
            "{terms} terms requested, {} available",
            alphas.len()
        )));
    }
    if g.is_zero() || g.is_sign_negative() || omega.is_zero() || omega.is_sign_negative() {
        return Err(Error::InvalidInput("g and omega must be positive".into()));
    }
    let digits = alphas
        .iter()
        .take(terms)
        .map(BigReal::digits)
        .chain([g.digits(), omega.digits()])
        .min()
        .unwrap_or(g.digits());
    let bits = digits_to_bits(digits);
    let quarter = Float::with_val(bits, g.value()) / 4u32;
    let cube = Float::with_val(bits, omega.value()).pow(3u32);
    let x = Float::with_val(bits, &quarter / &cube);
    let step = x.pow(Float::with_val(bits, -2) / 3u32);
    let mut acc = Float::new(bits);
    for a in alphas[..terms].iter().rev() {
        acc *= &step;
        acc += a.value();
    }
    Ok(BigReal::from_float(&(acc * quarter.cbrt()), digits))
}

/// CSV rows `g,omega,energy,certified_digits`.
pub fn write_energies_csv<W: Write>(rows: &[(BigReal, BigReal, OracleEnergy)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "g,omega,energy,certified_digits")?;
    for (g, omega, e) in rows {
        writeln!(
            out,
            "{g},{omega},{},{}",
            e.energy.to_decimal_string(),
            e.certified_digits
        )?;
    }
    Ok(())
}

/// Even-parity block of the Hamiltonian; `diag[i]`, `off1[i] = H[i][i+1]`, `off2[i] = H[i][i+2]`.
#[derive(Clone, Debug)]
struct Hamiltonian {
    diag: Vec<Float>,
    off1: Vec<Float>,
    off2: Vec<Float>,
}

impl Hamiltonian {
    fn new(g: &Float, omega: &Float, scale: &Float, size: usize) -> Self {
        let bits = g.prec();
        // x^2 = (a + a+)^2 / (2 W), x^4 = (a + a+)^4 / (4 W^2)
        let w2 = Float::with_val(bits, scale.square_ref());
        let quad = (Float::with_val(bits, omega.square_ref()) - &w2) / Float::with_val(bits, scale * 4u32);
        let quart = Float::with_val(bits, g / 16u32) / &w2;
        let half_scale = Float::with_val(bits, scale / 2u32);
        let mut diag = Vec::with_capacity(size);
        let mut off1 = Vec::with_capacity(size.saturating_sub(1));
        let mut off2 = Vec::with_capacity(size.saturating_sub(2));
        for i in 0..size {
            let n = 2 * i as u64;
            let ho = Float::with_val(bits, &half_scale * (2 * n + 1));
            let x2 = Float::with_val(bits, &quad * (2 * n + 1));
            let x4 = Float::with_val(bits, &quart * (6 * n * n + 6 * n + 3));
            diag.push(ho + x2 + x4);
            if i + 1 < size {
                let root = Float::with_val(bits, Integer::from((n + 1) * (n + 2))).sqrt();
                let coeff = Float::with_val(bits, &quart * (4 * n + 6)) + &quad;
                off1.push(coeff * root);
            }
            if i + 2 < size {
                let product = Integer::from((n + 1) * (n + 2)) * ((n + 3) * (n + 4));
                let root = Float::with_val(bits, product).sqrt();
                off2.push(root * &quart);
            }
        }
        Hamiltonian { diag, off1, off2 }
    }

    fn size(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, v: &[Float], bits: u32) -> Vec<Float> {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut acc = Float::with_val(bits, &self.diag[i] * &v[i]);
                if i + 1 < n {
                    acc += Float::with_val(bits, &self.off1[i] * &v[i + 1]);
                }
                if i >= 1 {
                    acc += Float::with_val(bits, &self.off1[i - 1] * &v[i - 1]);
                }
                if i + 2 < n {
                    acc += Float::with_val(bits, &self.off2[i] * &v[i + 2]);
                }
                if i >= 2 {
                    acc += Float::with_val(bits, &self.off2[i - 2] * &v[i - 2]);
                }
                acc
            })
            .collect()
    }

    fn gershgorin_lower(&self) -> f64 {
        let n = self.size();
        (0..n)
            .map(|i| {
                let mut r = 0.0;
                if i + 1 < n {
                    r += self.off1[i].to_f64().abs();
                }
                if i >= 1 {
                    r += self.off1[i - 1].to_f64().abs();
                }
                if i + 2 < n {
                    r += self.off2[i].to_f64().abs();
                }
                if i >= 2 {
                    r += self.off2[i - 2].to_f64().abs();
                }
                self.diag[i].to_f64() - r
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `LDL^T` of `H - shift` for bandwidth 2: unit lower factor rows `(l1, l2)` and pivots.
struct BandedLdl {
    pivots: Vec<Float>,
    l1: Vec<Float>,
    l2: Vec<Float>,
}

impl BandedLdl {
    fn factor(h: &Hamiltonian, shift: &Float, bits: u32) -> Self {
        let n = h.size();
        let mut pivots: Vec<Float> = Vec::with_capacity(n);
        // l1[i] = L[i][i-1], l2[i] = L[i][i-2]
        let mut l1 = vec![Float::new(bits); n];
        let mut l2 = vec![Float::new(bits); n];
        let tiny = Float::with_val(bits, 10).pow(-(bits as i32 / 4));
        for i in 0..n {
            if i >= 2 {
                l2[i] = Float::with_val(bits, &h.off2[i - 2] / &pivots[i - 2]);
            }
            if i >= 1 {
                let mut a = Float::with_val(bits, &h.off1[i - 1]);
                if i >= 2 {
                    a -= Float::with_val(bits, &l2[i] * &pivots[i - 2]) * &l1[i - 1];
                }
                l1[i] = a / &pivots[i - 1];
            }
            let mut d = Float::with_val(bits, &h.diag[i] - shift);
            if i >= 1 {
                d -= Float::with_val(bits, l1[i].square_ref()) * &pivots[i - 1];
            }
            if i >= 2 {
                d -= Float::with_val(bits, l2[i].square_ref()) * &pivots[i - 2];
            }
            if d.is_zero() {
                d = tiny.clone();
            }
            pivots.push(d);
        }
        BandedLdl { pivots, l1, l2 }
    }

    fn negative_pivots(&self) -> usize {
        self.pivots.iter().filter(|d| d.is_sign_negative()).count()
    }

    fn solve(&self, rhs: &[Float], bits: u32) -> Vec<Float> {
        let n = rhs.len();
        let mut y: Vec<Float> = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = Float::with_val(bits, &rhs[i]);
            if i >= 1 {
                v -= Float::with_val(bits, &self.l1[i] * &y[i - 1]);
            }
            if i >= 2 {
                v -= Float::with_val(bits, &self.l2[i] * &y[i - 2]);
            }
            y.push(v);
        }
        for (v, d) in y.iter_mut().zip(&self.pivots) {
            *v /= d;
        }
        for i in (0..n).rev() {
            let mut v = y[i].clone();
            if i + 1 < n {
                v -= Float::with_val(bits, &self.l1[i + 1] * &y[i + 1]);
            }
            if i + 2 < n {
                v -= Float::with_val(bits, &self.l2[i + 2] * &y[i + 2]);
            }
            y[i] = v;
        }
        y
    }
}

fn lowest_eigenvalue(h: &Hamiltonian, bits: u32) -> Float {
    // Sturm bisection at modest precision
    const COARSE_BITS: u32 = 128;
    let coarse = Hamiltonian {
        diag: h.diag.iter().map(|x| Float::with_val(COARSE_BITS, x)).collect(),
        off1: h.off1.iter().map(|x| Float::with_val(COARSE_BITS, x)).collect(),
        off2: h.off2.iter().map(|x| Float::with_val(COARSE_BITS, x)).collect(),
    };
    let mut lo = coarse.gershgorin_lower();
    let mut hi = coarse.diag[0].to_f64();
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi.abs().max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let ldl = BandedLdl::factor(&coarse, &Float::with_val(COARSE_BITS, mid), COARSE_BITS);
        if ldl.negative_pivots() >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // Rayleigh-quotient iteration from the bracket midpoint
    let n = h.size();
    let mut shift = Float::with_val(bits, 0.5 * (lo + hi));
    let mut v: Vec<Float> = vec![Float::with_val(bits, 1); n];
    let tolerance = Float::with_val(bits, 2).pow(-(bits as i32) + 8);
    let mut last = Float::with_val(bits, f64::INFINITY);
    for _ in 0..60 {
        let ldl = BandedLdl::factor(h, &shift, bits);
        let w = ldl.solve(&v, bits);
        let norm = w
            .iter()
            .fold(Float::new(bits), |acc, x| acc + Float::with_val(bits, x.square_ref()))
            .sqrt();
        v = w.into_iter().map(|x| x / &norm).collect();
        let hv = h.apply(&v, bits);
        let quotient = v
            .iter()
            .zip(&hv)
            .fold(Float::new(bits), |acc, (a, b)| acc + Float::with_val(bits, a * b));
        let change = Float::with_val(bits, &quotient - &last).abs();
        let converged = change <= Float::with_val(bits, quotient.abs_ref()) * &tolerance;
        last = quotient.clone();
        shift = quotient;
        if converged {
            break;
        }
    }
    last
}
