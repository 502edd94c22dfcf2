//! Exact Rayleigh-Schroedinger coefficients of the anharmonic oscillator
//! ground-state energy,
//!
//! ```text
//! E(g) = omega * sum_l E_l ((g/4) / omega^3)^l,   V(x) = omega^2 x^2 / 2 + g x^4 / 4.
//! ```
//!
//! The coefficients come from a Bender-Wu style recursion on the polynomial
//! part of the wavefunction. Writing `psi = exp(-x^2/2) phi` with
//! `phi = sum_k lambda^k phi_k(x)`, `lambda = g/4`, `omega = 1`, the
//! Schroedinger equation becomes
//!
//! ```text
//! x phi' - phi''/2 + lambda x^4 phi = (E - 1/2) phi
//! ```
//!
//! and each `phi_k = sum_{m=1}^{2k} A[k][m] x^{2m}` (normalized by
//! `phi_k(0) = 0`) is solved from its highest power downwards. The constant
//! term of the order-`k` equation gives `E_k = -A[k][1]`.

use std::io::Write;

use rug::{Assign, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::precision::{digits_to_bits, BigReal};

/// Default cap on the perturbative order.
pub const DEFAULT_MAX_ORDER: usize = 200;

/// Normalization of the stored coefficients.
pub const CONVENTION_NOTE: &str = "E(g) = omega * sum_l E_l ((g/4)/omega^3)^l";

/// Exact coefficients `E_0 ... E_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalSeries {
    coefficients: Vec<Rational>,
}

impl RationalSeries {
    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn get(&self, l: usize) -> Option<&Rational> {
        self.coefficients.get(l)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Highest stored order `L`.
    pub fn max_order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn convention_note(&self) -> &'static str {
        CONVENTION_NOTE
    }

    /// Truncated copy holding `E_0 ... E_order`.
    pub fn truncated(&self, order: usize) -> RationalSeries {
        RationalSeries {
            coefficients: self.coefficients[..=order.min(self.max_order())].to_vec(),
        }
    }

    /// CSV with columns `l,numerator,denominator`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "l,numerator,denominator")?;
        for (l, c) in self.coefficients.iter().enumerate() {
            writeln!(out, "{l},{},{}", c.numer(), c.denom())?;
        }
        Ok(())
    }

    /// Parse the CSV produced by [`write_csv`](Self::write_csv); lines
    /// starting with `#` are skipped.
    pub fn read_csv(text: &str) -> Result<RationalSeries> {
        let mut coefficients = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || line.starts_with("l,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::InvalidInput(format!("malformed coefficient row '{line}'")));
            }
            let l: usize = fields[0]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad order in '{line}'")))?;
            if l != coefficients.len() {
                return Err(Error::InvalidInput(format!("rows out of order at l = {l}")));
            }
            let parsed = Rational::parse(format!("{}/{}", fields[1], fields[2]))
                .map_err(|e| Error::InvalidInput(format!("bad rational in '{line}': {e}")))?;
            coefficients.push(Rational::from(parsed));
        }
        if coefficients.is_empty() {
            return Err(Error::InvalidInput("no coefficient rows".into()));
        }
        Ok(RationalSeries { coefficients })
    }
}

/// `E_0 ... E_order` with the default order cap.
pub fn rs_coefficients(order: usize) -> Result<RationalSeries> {
    rs_coefficients_capped(order, DEFAULT_MAX_ORDER)
}

/// `E_0 ... E_order`, refusing orders above `max_order`.
///
/// Runs in integers: `a[k][m] = 4^k m! A[k][m]` and `e_k = 4^k E_k` satisfy
///
/// ```text
/// 2m a[k][m] = (2m+1) a[k][m+1] - 4m(m-1) a[k-1][m-2] + sum_{i=1}^{k-1} e_i a[k-i][m]
/// ```
///
/// with `e_k = -a[k][1]`, and the division by `2m` is always exact.
pub fn rs_coefficients_capped(order: usize, max_order: usize) -> Result<RationalSeries> {
    if order > max_order {
        return Err(Error::ResourceLimit {
            requested: order,
            max: max_order,
        });
    }
    // e_0 never enters the recursion; E_0 = 1/2 is filled in at the end
    let mut scaled_energies = vec![Integer::new()];
    let mut poly: Vec<Vec<Integer>> = vec![vec![Integer::from(1)]];
    let mut term = Integer::new();
    for k in 1..=order {
        let top = 2 * k;
        let mut row = vec![Integer::new(); top + 2];
        for m in (1..=top).rev() {
            let mut acc = Integer::from(&row[m + 1] * (2 * m + 1) as u64);
            if m >= 2 {
                if let Some(prev) = poly[k - 1].get(m - 2) {
                    term.assign(prev * (4 * m * (m - 1)) as u64);
                    acc -= &term;
                }
            }
            for i in 1..k {
                let lower = &poly[k - i];
                if m < lower.len() {
                    term.assign(&scaled_energies[i] * &lower[m]);
                    acc += &term;
                }
            }
            let divisor = (2 * m) as u32;
            assert!(
                acc.is_divisible_u(divisor),
                "scaled Bender-Wu recursion lost integrality at k={k}, m={m}"
            );
            acc.div_exact_u_mut(divisor);
            row[m] = acc;
        }
        row.truncate(top + 1);
        scaled_energies.push(Integer::from(-&row[1]));
        poly.push(row);
    }
    let coefficients = scaled_energies
        .into_iter()
        .enumerate()
        .map(|(k, e)| match k {
            0 => Rational::from((1, 2)),
            _ => Rational::from((e, Integer::from(1) << (2 * k as u32))),
        })
        .collect();
    Ok(RationalSeries { coefficients })
}

/// The same recursion carried out directly in rationals, without the integer
/// scaling; `O(L^3)` gcd-heavy rational operations.
pub fn rs_coefficients_rational(order: usize) -> RationalSeries {
    let mut energies = vec![Rational::from((1, 2))];
    // poly[k][m] is the x^(2m) coefficient of phi_k, m = 0..=2k
    let mut poly: Vec<Vec<Rational>> = vec![vec![Rational::from(1)]];
    let mut term = Rational::new();
    for k in 1..=order {
        let top = 2 * k;
        let mut row = vec![Rational::new(); top + 2];
        for m in (1..=top).rev() {
            let mut acc = Rational::from(&row[m + 1] * ((m + 1) * (2 * m + 1)) as u64);
            if m >= 2 {
                if let Some(prev) = poly[k - 1].get(m - 2) {
                    acc -= prev;
                }
            }
            for i in 1..k {
                let lower = &poly[k - i];
                if m < lower.len() {
                    term.assign(&energies[i] * &lower[m]);
                    acc += &term;
                }
            }
            acc /= (2 * m) as u64;
            row[m] = acc;
        }
        row.truncate(top + 1);
        energies.push(Rational::from(-&row[1]));
        poly.push(row);
    }
    RationalSeries { coefficients: energies }
}

/// `omega * sum_{l=0}^{order} E_l ((g/4)/omega^3)^l` at the larger of the
/// two argument precisions.
pub fn series_partial_sum(series: &RationalSeries, g: &BigReal, omega: &BigReal, order: usize) -> Result<BigReal> {
    if order > series.max_order() {
        return Err(Error::InvalidInput(format!(
            "order {order} exceeds stored series order {}",
            series.max_order()
        )));
    }
    if omega.value().is_sign_negative() || omega.is_zero() {
        return Err(Error::DomainError("omega must be positive".into()));
    }
    let digits = g.digits().max(omega.digits());
    let prec = digits_to_bits(digits) + 32;
    let w = Float::with_val(prec, omega.value());
    let mut x = Float::with_val(prec, g.value()) / 4u32;
    x /= Float::with_val(prec, w.clone().square() * &w);
    // Horner from the top
    let mut acc = Float::new(prec);
    for c in series.coefficients()[..=order].iter().rev() {
        acc *= &x;
        acc += c;
    }
    acc *= &w;
    Ok(BigReal::from_float(&acc, digits))
}
