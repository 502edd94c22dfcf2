use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use vpt_core::asymptotics::{solve_gamma_c, write_model_curves_csv, ConvergenceModelParams, REFERENCE_ENVELOPE};
use vpt_core::oracle::{alpha0_reference, ground_energy, strong_coupling_partial_sum};
use vpt_core::series::rs_coefficients_capped;
use vpt_core::singularity::{
    build_delta_sequence, cross_validate, fit_oscillation_with, fit_ratio_singularity, ratio_sequence, write_ratio_csv,
    DeltaSequence, OscillationFitOptions, Parity, Provenance, SingularityEstimate,
};
use vpt_core::variational::{
    write_records_csv, ApproximantRecord, OmegaStrategy, VariationalConfig, VariationalEngine,
};
use vpt_core::{BigRational, BigReal, Error, PrecisionPolicy};

use crate::args::{CoefficientsArgs, ConstantArgs, ConstantsArgs, ConvergeArgs, LocateArgs, OracleArgs, PrecisionArgs};
use crate::error::CliError;
use crate::header::Header;

const MAX_DIGITS: u32 = 2000;
// Digits used to parse couplings and constants given on the command line.
const INPUT_DIGITS: u32 = 60;
// Terms of the strong-coupling sums reported by `oracle`.
const SUM_TERMS: [usize; 3] = [2, 3, 23];

fn write_file(path: &Path, header: &Header, body: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = header.comment_lines().into_bytes();
    text.extend_from_slice(body);
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn check_digits(name: &str, digits: u32) -> Result<(), CliError> {
    if digits == 0 || digits > MAX_DIGITS {
        return Err(CliError::Validation(format!(
            "--{name} must lie in 1..={MAX_DIGITS}, got {digits}"
        )));
    }
    Ok(())
}

fn parse_rational(name: &str, s: &str) -> Result<BigRational, CliError> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|e| CliError::Validation(format!("--{name}: cannot parse '{s}' as a rational: {e}")))
}

fn parse_real(name: &str, s: &str) -> Result<BigReal, CliError> {
    BigReal::parse(s, INPUT_DIGITS).map_err(|e| CliError::Validation(format!("--{name}: {e}")))
}

fn policy_of(p: &PrecisionArgs) -> Result<PrecisionPolicy, CliError> {
    check_digits("base-digits", p.base_digits)?;
    check_digits("target-digits", p.target_digits)?;
    let mut policy = PrecisionPolicy::new(
        p.base_digits,
        parse_rational("per-order-digits", &p.per_order_digits)?,
        parse_rational("escalation-factor", &p.escalation_factor)?,
    )
    .map_err(|e| CliError::core("precision policy", e))?;
    policy.max_escalations = p.max_escalations;
    Ok(policy)
}

fn describe_policy(policy: &PrecisionPolicy, target_digits: u32) -> String {
    format!(
        "base_digits={} per_order_digits={} escalation_factor={} max_escalations={} target_digits={}",
        policy.base_digits, policy.per_order_digits, policy.escalation_factor, policy.max_escalations, target_digits
    )
}

/// Strong-coupling configuration shared by every order of a run.
struct Pipeline {
    template: VariationalConfig,
    c_text: String,
    correction_text: String,
}

impl Pipeline {
    fn new(p: &PrecisionArgs, k: &ConstantArgs, strategy: OmegaStrategy) -> Result<Self, CliError> {
        let policy = policy_of(p)?;
        let c = parse_real("c", &k.c_constant)?;
        let correction = parse_real("correction", &k.correction_constant)?;
        let template = VariationalConfig::strong_coupling(1)
            .map_err(|e| CliError::core("configuration", e))?
            .with_policy(policy)
            .with_target_digits(p.target_digits)
            .with_strategy(strategy)
            .with_constants(c, correction)
            .map_err(|e| CliError::core("constants", e))?;
        Ok(Pipeline {
            template,
            c_text: k.c_constant.trim().to_string(),
            correction_text: k.correction_constant.trim().to_string(),
        })
    }

    fn decorate(&self, header: Header) -> Header {
        header
            .policy(describe_policy(&self.template.policy, self.template.target_digits))
            .constant("c", &self.c_text)
            .constant("correction", &self.correction_text)
    }

    /// Records for each order, computed in parallel and returned in order.
    fn records(
        &self,
        engine: &VariationalEngine,
        orders: std::ops::RangeInclusive<usize>,
        alphas: usize,
        reference: Option<&BigReal>,
    ) -> Result<Vec<ApproximantRecord>, CliError> {
        let results: Vec<Result<ApproximantRecord, CliError>> = orders
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|n| {
                let config = self
                    .template
                    .clone()
                    .with_order(n)
                    .map_err(|e| CliError::core(format!("order N = {n}"), e))?;
                engine
                    .alpha_approximants(&config, alphas.min(n), reference)
                    .map_err(|e| CliError::core(format!("order N = {n}"), e))
            })
            .collect();
        // lowest failing order wins
        results.into_iter().collect()
    }
}

fn engine_for(order: usize, max_order: usize) -> Result<VariationalEngine, CliError> {
    let series = rs_coefficients_capped(order, max_order).map_err(|e| CliError::core("coefficients", e))?;
    Ok(VariationalEngine::new(series))
}

fn reference_alpha0(digits: u32) -> Result<(BigReal, u32), CliError> {
    check_digits("reference-digits", digits)?;
    let r = alpha0_reference(digits).map_err(|e| CliError::core("reference alpha_0", e))?;
    Ok((r.energy, r.certified_digits))
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::Oracle => "oracle",
        Provenance::Extrapolated => "extrapolated",
    }
}

fn deltas_body(seq: &DeltaSequence) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "N,delta,signed_delta,parity").expect("vec write");
    for e in &seq.entries {
        writeln!(
            out,
            "{},{},{},{}",
            e.order,
            e.delta.to_decimal_string(),
            e.signed.to_decimal_string(),
            parity_name(e.parity)
        )
        .expect("vec write");
    }
    out
}

pub fn coefficients(a: &CoefficientsArgs) -> Result<(), CliError> {
    let series = rs_coefficients_capped(a.order, a.max_order).map_err(|e| CliError::core("coefficients", e))?;
    let header = Header::new("coefficients")
        .set("order", a.order)
        .set("max-order", a.max_order)
        .constant("convention", series.convention_note());
    let mut body = Vec::new();
    series.write_csv(&mut body).expect("vec write");
    write_file(&a.out, &header, &body)
}

pub fn converge(a: &ConvergeArgs) -> Result<(), CliError> {
    if a.n_min == 0 || a.n_max < a.n_min {
        return Err(CliError::Validation(format!(
            "need 1 <= --n-min <= --n-max, got {} and {}",
            a.n_min, a.n_max
        )));
    }
    let strategy: OmegaStrategy = a.strategy.parse().map_err(|e: Error| CliError::core("--strategy", e))?;
    let pipeline = Pipeline::new(&a.precision, &a.constants, strategy)?;
    let engine = engine_for(a.n_max, a.max_order)?;
    let (reference, certified) = reference_alpha0(a.reference_digits)?;
    let records = pipeline.records(&engine, a.n_min..=a.n_max, a.alphas, Some(&reference))?;
    let seq = build_delta_sequence(&records, &reference, certified, Provenance::Oracle)
        .map_err(|e| CliError::core("deviation sequence", e))?;

    let header = pipeline
        .decorate(
            Header::new("converge")
                .set("n-min", a.n_min)
                .set("n-max", a.n_max)
                .set("alphas", a.alphas)
                .set("strategy", strategy)
                .set("reference-digits", a.reference_digits)
                .set("max-order", a.max_order),
        )
        .constant("reference_alpha0", reference.to_decimal_string())
        .constant("reference_certified_digits", certified)
        .constant("reference_provenance", provenance_name(seq.provenance));

    let mut body = Vec::new();
    write_records_csv(&records, a.alphas.min(a.n_max), &mut body).expect("vec write");
    write_file(&a.out_dir.join("approximants.csv"), &header, &body)?;
    write_file(&a.out_dir.join("deltas.csv"), &header, &deltas_body(&seq))
}

/// Data rows of a CSV with `#` comments, keyed by the header row.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    comments: Vec<String>,
}

impl Table {
    fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut comments = Vec::new();
        let mut lines = Vec::new();
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
            } else if !line.trim().is_empty() {
                lines.push(line);
            }
        }
        let Some((head, rest)) = lines.split_first() else {
            return Err(CliError::Validation(format!("{}: no header row", path.display())));
        };
        let columns: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let rows = rest
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let row: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
                if row.len() == columns.len() {
                    Ok(row)
                } else {
                    Err(CliError::Validation(format!(
                        "{}: data row {} has {} fields, header has {}",
                        path.display(),
                        i + 1,
                        row.len(),
                        columns.len()
                    )))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Table {
            columns,
            rows,
            comments,
        })
    }

    fn column(&self, name: &str, path: &Path) -> Result<usize, CliError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Validation(format!("{}: missing column '{name}'", path.display())))
    }

    fn constant(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .find_map(|c| c.strip_prefix("constant ")?.strip_prefix(key)?.strip_prefix('='))
    }
}

fn bad_value(path: &Path, what: &str, value: &str) -> CliError {
    CliError::Validation(format!("{}: cannot parse {what} '{value}'", path.display()))
}

fn read_deltas(path: &Path) -> Result<(DeltaSequence, Option<BigReal>), CliError> {
    let table = Table::parse(&read_file(path)?, path)?;
    let order_col = table.column("N", path)?;
    let signed_col = table.column("signed_delta", path)?;
    let pairs = table
        .rows
        .iter()
        .map(|r| {
            let n = r[order_col]
                .parse::<usize>()
                .map_err(|_| bad_value(path, "order", &r[order_col]))?;
            let d = r[signed_col]
                .parse::<f64>()
                .map_err(|_| bad_value(path, "deviation", &r[signed_col]))?;
            Ok((n, d))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let provenance = match table.constant("reference_provenance") {
        Some("extrapolated") => Provenance::Extrapolated,
        _ => Provenance::Oracle,
    };
    let reference = table
        .constant("reference_alpha0")
        .map(|s| parse_real("deltas reference", s))
        .transpose()?;
    let seq = DeltaSequence::from_signed(&pairs, provenance).map_err(|e| CliError::core(path.display(), e))?;
    Ok((seq, reference))
}

/// `alpha_0, alpha_1, ...` from the highest-order row of an approximant CSV.
fn read_alphas(path: &Path) -> Result<Vec<BigReal>, CliError> {
    let table = Table::parse(&read_file(path)?, path)?;
    let order_col = table.column("N", path)?;
    let row = table
        .rows
        .iter()
        .max_by_key(|r| r[order_col].parse::<usize>().unwrap_or(0))
        .ok_or_else(|| CliError::Validation(format!("{}: no data rows", path.display())))?;
    let mut alphas = Vec::new();
    for n in 0.. {
        let Some(col) = table.columns.iter().position(|c| *c == format!("alpha_{n}")) else {
            break;
        };
        let cell = &row[col];
        if cell.is_empty() {
            break;
        }
        let digits = cell.chars().filter(char::is_ascii_digit).count().max(17) as u32;
        alphas.push(BigReal::parse(cell, digits).map_err(|_| bad_value(path, "coefficient", cell))?);
    }
    if alphas.is_empty() {
        return Err(CliError::Validation(format!("{}: no alpha_n columns", path.display())));
    }
    Ok(alphas)
}

fn computed_alphas(pipeline: &Pipeline, order: usize, count: usize) -> Result<Vec<BigReal>, CliError> {
    let engine = engine_for(order, order)?;
    let mut records = pipeline.records(&engine, order..=order, count, None)?;
    Ok(records.pop().expect("one record").alphas)
}

/// `{"error": {"kind", "message"}}` for a failed fit.
fn error_json(err: &Error) -> serde_json::Value {
    let debug = format!("{err:?}");
    let kind = debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("Error")
        .to_string();
    serde_json::json!({ "error": { "kind": kind, "message": err.to_string() } })
}

pub fn locate(a: &LocateArgs) -> Result<(), CliError> {
    let pipeline = Pipeline::new(&a.precision, &a.constants, OmegaStrategy::Formula)?;
    let c = a
        .constants
        .c_constant
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Validation(format!("--c: cannot parse '{}'", a.constants.c_constant)))?;
    let curve_g = parse_real("curve-g", &a.curve_g)?;

    let (seq, reference) = match &a.deltas {
        Some(path) => read_deltas(path)?,
        None => {
            if a.delta_n_min == 0 || a.delta_n_max < a.delta_n_min {
                return Err(CliError::Validation("need 1 <= --delta-n-min <= --delta-n-max".into()));
            }
            let (reference, certified) = reference_alpha0(a.reference_digits)?;
            let engine = engine_for(a.delta_n_max, a.delta_n_max)?;
            let records = pipeline.records(&engine, a.delta_n_min..=a.delta_n_max, 0, Some(&reference))?;
            let seq = build_delta_sequence(&records, &reference, certified, Provenance::Oracle)
                .map_err(|e| CliError::core("deviation sequence", e))?;
            (seq, Some(reference))
        }
    };
    let alphas = match &a.approximants {
        Some(path) => read_alphas(path)?,
        None => computed_alphas(&pipeline, a.ratio_order, a.alphas)?,
    };

    let options = OscillationFitOptions {
        c,
        n_min: a.fit_n_min,
        parity_filter: !a.no_parity_filter,
        ..OscillationFitOptions::default()
    };
    let (oscillation, ratio_result) = rayon::join(
        || fit_oscillation_with(&seq, &options),
        || {
            let ratios = ratio_sequence(&alphas)?;
            let fit = fit_ratio_singularity(&ratios, a.ratio_n_min);
            Ok::<_, Error>((ratios, fit))
        },
    );
    let (ratios, ratio) = match ratio_result {
        Ok((ratios, fit)) => (ratios, fit),
        Err(e) => (Vec::new(), Err(e)),
    };

    let reference_pair = reference.as_ref().map(|r| (r, seq.provenance));
    let estimate_json = |r: &Result<SingularityEstimate, Error>| match r {
        Ok(est) => est.to_json(reference_pair),
        Err(e) => error_json(e),
    };
    let cross = match (&oscillation, &ratio) {
        (Ok(x), Ok(y)) => serde_json::to_value(cross_validate(x, y)).expect("serializable"),
        _ => serde_json::Value::Null,
    };

    let mut header = pipeline.decorate(
        Header::new("locate")
            .set(
                "deltas",
                a.deltas.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            )
            .set(
                "approximants",
                a.approximants
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            )
            .set("delta-n-min", a.delta_n_min)
            .set("delta-n-max", a.delta_n_max)
            .set("fit-n-min", a.fit_n_min)
            .set("ratio-order", a.ratio_order)
            .set("alphas", a.alphas)
            .set("ratio-n-min", a.ratio_n_min)
            .set("parity-filter", !a.no_parity_filter)
            .set("curve-g", &a.curve_g)
            .set("reference-digits", a.reference_digits),
    );
    if let Some(r) = &reference {
        header = header.constant("reference_alpha0", r.to_decimal_string());
    }

    let report = serde_json::json!({
        "header": header.to_json(),
        "oscillation_fit": estimate_json(&oscillation),
        "ratio_fit": estimate_json(&ratio),
        "cross_validation": cross,
    });
    let mut json = serde_json::to_string_pretty(&report).expect("serializable");
    json.push('\n');
    let path = a.out_dir.join("estimates.json");
    fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    fs::write(&path, &json).map_err(|e| CliError::io(&path, e))?;

    let mut body = Vec::new();
    match &ratio {
        Ok(est) => write_ratio_csv(&ratios, est, &mut body).expect("vec write"),
        Err(_) => {
            writeln!(body, "n,R_n,R_model").expect("vec write");
            for (n, r) in ratios.iter().enumerate() {
                writeln!(body, "{n},{},", r.to_decimal_string()).expect("vec write");
            }
        }
    }
    write_file(&a.out_dir.join("ratios.csv"), &header, &body)?;

    let digits = 30;
    let saddle = solve_gamma_c(digits).map_err(|e| CliError::core("saddle constants", e))?;
    let correction = parse_real("correction", &a.constants.correction_constant)?;
    let (params, phase) = match &oscillation {
        Ok(est) => (
            ConvergenceModelParams::new(
                BigReal::from_f64(est.g_s_abs, 17),
                BigReal::from_f64(est.theta, 17),
                saddle.c.clone(),
                correction.clone(),
                saddle.gamma.clone(),
            ),
            BigReal::from_f64(est.phase.unwrap_or(0.0), 17),
        ),
        Err(_) => (ConvergenceModelParams::reference(digits), BigReal::zero(17)),
    };
    let params = params.map_err(|e| CliError::core("model parameters", e))?;
    let orders: Vec<usize> = seq.entries.iter().map(|e| e.order).collect();
    let mut body = Vec::new();
    write_model_curves_csv(orders, &curve_g, &params, &phase, &mut body)
        .map_err(|e| CliError::Numerical(format!("model curves: {e}")))?;
    write_file(&a.out_dir.join("model_curves.csv"), &header, &body)?;

    let failures: Vec<String> = [("oscillation fit", &oscillation), ("ratio fit", &ratio)]
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {}", error_json(e))))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}

pub fn oracle(a: &OracleArgs) -> Result<(), CliError> {
    check_digits("digits", a.digits)?;
    let pipeline = Pipeline::new(&a.precision, &a.constants, OmegaStrategy::Formula)?;
    let omega = parse_real("omega", &a.omega)?;
    let couplings =
        a.g.iter()
            .map(|s| {
                let g = parse_real("g", s)?;
                if g.is_sign_negative() && !g.is_zero() {
                    return Err(CliError::Validation(format!("--g: coupling {s} is negative")));
                }
                Ok(g)
            })
            .collect::<Result<Vec<_>, _>>()?;
    let terms = *SUM_TERMS.last().expect("terms");
    let alphas = match &a.approximants {
        Some(path) => read_alphas(path)?,
        None => computed_alphas(&pipeline, a.alphas_order, terms - 1)?,
    };
    if alphas.len() < terms {
        return Err(CliError::Validation(format!(
            "{terms} strong-coupling coefficients needed, {} available",
            alphas.len()
        )));
    }

    let rows: Vec<Result<String, CliError>> = couplings
        .par_iter()
        .zip(a.g.par_iter())
        .map(|(g, text)| {
            let exact = ground_energy(g, &omega, a.digits).map_err(|e| CliError::core(format!("g = {text}"), e))?;
            let mut row = format!(
                "{},{},{},{}",
                text.trim(),
                a.omega.trim(),
                exact.energy.to_decimal_string(),
                exact.certified_digits
            );
            let positive = !g.is_zero() && !omega.is_zero() && !omega.is_sign_negative();
            for t in SUM_TERMS {
                row.push(',');
                if positive {
                    let sum = strong_coupling_partial_sum(&alphas, g, &omega, t)
                        .map_err(|e| CliError::core(format!("g = {text}"), e))?;
                    row.push_str(&sum.to_decimal_string());
                }
            }
            Ok(row)
        })
        .collect();
    let mut body = String::from("g,omega,oracle,certified_digits");
    for t in SUM_TERMS {
        body.push_str(&format!(",sum_{t}"));
    }
    body.push('\n');
    for row in rows {
        body.push_str(&row?);
        body.push('\n');
    }

    let header = pipeline.decorate(
        Header::new("oracle")
            .set("g", a.g.iter().map(|s| s.trim()).collect::<Vec<_>>().join(","))
            .set("omega", a.omega.trim())
            .set("digits", a.digits)
            .set(
                "approximants",
                a.approximants
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            )
            .set("alphas-order", a.alphas_order),
    );
    write_file(&a.out, &header, body.as_bytes())
}

pub fn constants(a: &ConstantsArgs) -> Result<String, CliError> {
    check_digits("digits", a.digits)?;
    if a.digits < 16 {
        return Err(CliError::Validation("--digits must be at least 16".into()));
    }
    let saddle = solve_gamma_c(a.digits).map_err(|e| CliError::core("saddle constants", e))?;
    let params = ConvergenceModelParams::new(
        BigReal::parse(&a.g_s_abs, a.digits).map_err(|e| CliError::core("--g-s-abs", e))?,
        BigReal::parse(&a.theta, a.digits).map_err(|e| CliError::core("--theta", e))?,
        saddle.c.clone(),
        BigReal::parse(&a.correction_constant, a.digits).map_err(|e| CliError::core("--correction", e))?,
        saddle.gamma.clone(),
    )
    .map_err(|e| CliError::core("model parameters", e))?;
    let header = Header::new("constants")
        .set("digits", a.digits)
        .constant("g_s_abs", a.g_s_abs.trim())
        .constant("theta", a.theta.trim())
        .constant("correction", a.correction_constant.trim());
    let mut out = header.comment_lines();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    line("gamma", saddle.gamma.to_decimal_string());
    line("c", saddle.c.to_decimal_string());
    line("c_default", vpt_core::variational::DEFAULT_C.to_string());
    line("q", params.c1_constant().to_decimal_string());
    line("a", params.a.to_decimal_string());
    line("a_cos_theta", params.envelope_exponent().to_decimal_string());
    line("a_cos_theta_reference", format!("{REFERENCE_ENVELOPE}"));
    Ok(out)
}
