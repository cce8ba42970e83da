//! Flag value parsers shared by the subcommands.

use std::collections::BTreeMap;

use prismlab::montecarlo::SettingPolicy;
use prismlab::rational::{self, Rational};
use prismlab::AngleKey;

pub fn float_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", v.trim())))
        .collect()
}

pub fn angles(s: &str) -> Result<Vec<f64>, String> {
    let v = float_list(s)?;
    if v.is_empty() || v.iter().any(|a| !a.is_finite()) {
        return Err("expected a comma-separated list of angles in degrees".into());
    }
    Ok(v)
}

pub fn unit_rational(s: &str) -> Result<Rational, String> {
    let r = rational::parse(s.trim()).map_err(|e| e.to_string())?;
    if r < rational::int(0) || r > rational::int(1) {
        return Err(format!("{s} is outside [0, 1]"));
    }
    Ok(r)
}

/// `fixed:a,b` or `random`.
pub fn settings(s: &str) -> Result<SettingPolicy, String> {
    if s == "random" {
        return Ok(SettingPolicy::Random);
    }
    let rest = s.strip_prefix("fixed:").ok_or("expected `fixed:a,b` or `random`")?;
    let (a, b) = rest.split_once(',').ok_or("expected `fixed:a,b`")?;
    let idx = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a direction index"));
    Ok(SettingPolicy::Fixed { left: idx(a)?, right: idx(b)? })
}

/// `angle:value,...` with angles in degrees.
pub fn sigma_map(s: &str) -> Result<BTreeMap<AngleKey, Rational>, String> {
    let mut out = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (angle, value) = part.split_once(':').ok_or_else(|| format!("`{part}` is not angle:value"))?;
        let angle: f64 = angle.trim().parse().map_err(|_| format!("`{angle}` is not an angle"))?;
        out.insert(AngleKey::from_degrees(angle), unit_rational(value)?);
    }
    Ok(out)
}

/// Four direction indices `a,a',b,b'`.
pub fn ch_settings(s: &str) -> Result<prismlab::bell::ChSettings, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a direction index")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, a_prime, b, b_prime] => Ok(prismlab::bell::ChSettings { a, a_prime, b, b_prime }),
        _ => Err("expected four indices a,a',b,b'".into()),
    }
}

pub fn eta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

pub fn positive_u64(s: &str) -> Result<u64, String> {
    match s.replace('_', "").parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

pub fn drift(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.abs() < 1e-3 {
        Ok(v)
    } else {
        Err(format!("drift {v} exceeds 1e-3 in magnitude"))
    }
}
