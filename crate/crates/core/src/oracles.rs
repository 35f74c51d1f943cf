//! Independent checks: Kontsevich's recursion for plane rational curves,
//! closed forms for plane curves of large genus, and the arithmetic
//! properties of the Welschinger invariants of 3-space.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{FloorError, Result};
use crate::invariants::Engine;

/// Largest degree accepted by the oracle suites.
pub const MAX_ORACLE_DEGREE: u32 = 7;

/// `C(n, k)`, zero unless `0 <= k <= n`.
pub fn binom(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    binomial(BigInt::from(n), BigInt::from(k))
}

/// Number of rational plane curves of degree `d` through `3d - 1` points,
/// from Kontsevich's recursion seeded with `N_1 = 1`.
pub fn kontsevich_rational(d: u32) -> Result<BigInt> {
    if d == 0 {
        return Err(FloorError::InvalidArgument(
            "degree must be at least 1".into(),
        ));
    }
    let mut n = vec![BigInt::zero(), BigInt::from(1)];
    for dd in 2..=i64::from(d) {
        let mut sum = BigInt::zero();
        for d1 in 1..dd {
            let d2 = dd - d1;
            let bracket = d2 * binom(3 * dd - 4, 3 * d1 - 2) - d1 * binom(3 * dd - 4, 3 * d1 - 1);
            sum += &n[d1 as usize] * &n[d2 as usize] * (d1 * d1 * d2) * bracket;
        }
        n.push(sum);
    }
    Ok(n.swap_remove(d as usize))
}

/// `(d - 1)(d - 2) / 2`.
pub fn max_genus(d: u32) -> u32 {
    (d.saturating_sub(1)) * (d.saturating_sub(2)) / 2
}

/// `3(d - 1)^2`, the degree of the discriminant of plane curves of degree
/// `d`; it counts curves of genus one below the maximum through
/// `d(d + 3)/2 - 1` points.
pub fn discriminant_degree(d: u32) -> Result<BigUint> {
    if d < 2 {
        return Err(FloorError::InvalidArgument(format!(
            "discriminant degree needs d >= 2, got {d}"
        )));
    }
    Ok(BigUint::from(3u32) * BigUint::from(d - 1).pow(2))
}

/// `(3/2)(d - 1)(d - 2)(3d^2 - 3d - 11)`: plane curves of genus two below
/// the maximum through `d(d + 3)/2 - 2` points.
pub fn codim_two_formula(d: u32) -> Result<BigUint> {
    if d < 4 {
        return Err(FloorError::InvalidArgument(format!(
            "the codimension-two count needs d >= 4, got {d}"
        )));
    }
    let d = BigUint::from(d);
    let pairs = (&d - 1u32) * (&d - 2u32) / 2u32;
    Ok(BigUint::from(3u32) * pairs * (BigUint::from(3u32) * &d * &d - 3u32 * &d - 11u32))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

/// Outcome of an oracle suite. `notes` are informational and never fail.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn check(&mut self, name: String, passed: bool, detail: String) {
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        for n in &self.notes {
            writeln!(f, "note {n}")?;
        }
        Ok(())
    }
}

fn check_cap(max_d: u32) -> Result<()> {
    if max_d > MAX_ORACLE_DEGREE {
        return Err(FloorError::InvalidArgument(format!(
            "max degree {max_d} exceeds the oracle cap {MAX_ORACLE_DEGREE}"
        )));
    }
    Ok(())
}

/// Compares the engine with Kontsevich's recursion for `d <= max_d`.
pub fn kontsevich_suite(max_d: u32, engine: &Engine) -> Result<Report> {
    check_cap(max_d)?;
    let mut report = Report::default();
    for d in 1..=max_d {
        let expected = kontsevich_rational(d)?;
        let got = BigInt::from(engine.gromov_witten(2, d, 0, &[3 * d - 1])?);
        report.check(
            format!("kontsevich d={d}"),
            got == expected,
            format!("floor diagrams {got}, recursion {expected}"),
        );
    }
    Ok(report)
}

/// Compares the engine with the closed forms for plane curves of genus one
/// and two below the maximum, for `3 <= d <= max_d`.
pub fn formulas_suite(max_d: u32, engine: &Engine) -> Result<Report> {
    check_cap(max_d)?;
    let mut report = Report::default();
    for d in 3..=max_d {
        let g = max_genus(d) - 1;
        let l0 = d * (d + 3) / 2 - 1;
        let got = engine.gromov_witten(2, d, g, &[l0])?;
        let expected = discriminant_degree(d)?;
        report.check(
            format!("discriminant d={d} g={g}"),
            got == expected,
            format!("floor diagrams {got}, 3(d-1)^2 = {expected}"),
        );
        if d >= 4 {
            let g = max_genus(d) - 2;
            let got = engine.gromov_witten(2, d, g, &[l0 - 1])?;
            let expected = codim_two_formula(d)?;
            report.check(
                format!("codimension two d={d} g={g}"),
                got == expected,
                format!("floor diagrams {got}, closed form {expected}"),
            );
        }
    }
    Ok(report)
}

/// Checks, for `d <= max_d`: `|W_d| = N_d mod 4`, `W_d = 0` for even `d`,
/// and `|W_{2k+1}| > |W_{2k-1}|` for `k > 1`, where `W_d` is the
/// Welschinger invariant of 3-space and `N_d = N^(3)_{d,0}(2d, 0)`. Log
/// ratios for odd degrees are added as notes.
pub fn proposition_checks(max_d: u32, engine: &Engine) -> Result<Report> {
    check_cap(max_d)?;
    let mut report = Report::default();
    let mut w = vec![BigInt::zero()];
    for d in 1..=max_d {
        let wd = engine.welschinger(3, d)?;
        let nd = BigInt::from(engine.gromov_witten(3, d, 0, &[2 * d, 0])?);
        let (a, b) = (wd.abs() % 4, &nd % 4);
        report.check(
            format!("mod 4 d={d}"),
            a == b,
            format!("|W| = {} = {a} mod 4, N = {nd} = {b} mod 4", wd.abs()),
        );
        if d % 2 == 0 {
            report.check(
                format!("even vanishing d={d}"),
                wd.is_zero(),
                format!("W = {wd}"),
            );
        } else if d >= 5 {
            let prev = &w[(d - 2) as usize];
            report.check(
                format!("monotonicity d={d}"),
                wd.abs() > prev.abs(),
                format!("|W_{d}| = {}, |W_{}| = {}", wd.abs(), d - 2, prev.abs()),
            );
            let lw = ln(&wd.abs());
            let ln_n = ln(&nd);
            let k = f64::from((d - 1) / 2);
            report.notes.push(format!(
                "d={d} log|W|/log N = {:.4}, log|W|/(4k log k) = {:.4}",
                lw / ln_n,
                lw / (4.0 * k * k.ln())
            ));
        }
        w.push(wd);
    }
    Ok(report)
}

fn ln(x: &BigInt) -> f64 {
    x.to_f64().map_or(f64::NAN, f64::ln)
}
