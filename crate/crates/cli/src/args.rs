//! Parsers for angle expressions, sweep ranges and coin states.

use std::f64::consts::PI;
use std::str::FromStr;

use ptwalk::evolution::CoinState;
use ptwalk::numerics::{c64, CMat, C64};

/// Largest number of points accepted in one sweep.
pub const MAX_SWEEP_POINTS: usize = 100_000;

/// Parses sums of terms such as `pi/4`, `-pi/7`, `3pi/4`, `2*pi/3`,
/// `pi-0.01` or plain floats.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let src: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if src.is_empty() {
        return Err("empty angle".into());
    }
    let mut total = 0.0;
    let mut rest = src.as_str();
    let mut first = true;
    while !rest.is_empty() {
        let mut sign = 1.0;
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if !first {
            return Err(format!("cannot parse angle '{s}'"));
        }
        // a term ends at the next + or - that does not follow an exponent marker
        let bytes = rest.as_bytes();
        let mut end = bytes.len();
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                end = i;
                break;
            }
        }
        total += sign * parse_term(&rest[..end]).map_err(|e| format!("cannot parse angle '{s}': {e}"))?;
        rest = &rest[end..];
        first = false;
    }
    if !total.is_finite() {
        return Err(format!("angle '{s}' is not finite"));
    }
    Ok(total)
}

fn parse_term(term: &str) -> Result<f64, String> {
    let lower = term.to_ascii_lowercase();
    let Some(idx) = lower.find("pi") else {
        return f64::from_str(&lower).map_err(|_| format!("bad number '{term}'"));
    };
    let coeff = lower[..idx].trim_end_matches('*');
    let coeff = if coeff.is_empty() {
        1.0
    } else {
        f64::from_str(coeff).map_err(|_| format!("bad coefficient '{coeff}'"))?
    };
    let tail = &lower[idx + 2..];
    let divisor = if tail.is_empty() {
        1.0
    } else {
        let d = tail.strip_prefix('/').ok_or_else(|| format!("unexpected '{tail}'"))?;
        f64::from_str(d).map_err(|_| format!("bad divisor '{d}'"))?
    };
    if divisor == 0.0 {
        return Err("division by zero".into());
    }
    Ok(coeff * PI / divisor)
}

/// `a:b` interval of angle expressions.
pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected 'a:b', got '{s}'"))?;
    let (a, b) = (parse_angle(a)?, parse_angle(b)?);
    if b < a {
        return Err(format!("interval '{s}' is reversed"));
    }
    Ok((a, b))
}

/// Finite arithmetic progression `a:b:step`, inclusive of `b` when it lies
/// on the progression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("expected 'a:b:step', got '{s}'"));
        };
        let sweep = Sweep {
            start: parse_angle(a)?,
            stop: parse_angle(b)?,
            step: parse_angle(step)?,
        };
        if sweep.step.is_nan() || sweep.step <= 0.0 {
            return Err(format!("range step must be positive in '{s}'"));
        }
        if sweep.stop < sweep.start {
            return Err(format!("range '{s}' is reversed"));
        }
        if (sweep.stop - sweep.start) / sweep.step >= MAX_SWEEP_POINTS as f64 {
            return Err(format!("range '{s}' has more than {MAX_SWEEP_POINTS} points"));
        }
        Ok(sweep)
    }
}

/// Named preset (`up`, `down`, `plus`, `minus`) or four comma-separated
/// row-major entries such as `0.5,0.5,0.5,0.5` or `0.5,0.5i,-0.5i,0.5`.
pub fn parse_state(s: &str) -> Result<CoinState, String> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let preset = match s.trim().to_ascii_lowercase().as_str() {
        "up" => Some(CoinState::up()),
        "down" => Some(CoinState::down()),
        "plus" => Some(CoinState::plus()),
        "minus" => CoinState::pure([c64(r, 0.0), c64(-r, 0.0)]).ok(),
        _ => None,
    };
    if let Some(state) = preset {
        return Ok(state);
    }
    let entries = s
        .split(',')
        .map(|e| C64::from_str(e.trim()).map_err(|_| format!("bad matrix entry '{e}'")))
        .collect::<Result<Vec<_>, _>>()?;
    if entries.len() != 4 {
        return Err(format!("state '{s}' needs a preset name or 4 entries"));
    }
    let m = CMat::new(2, &entries).map_err(|e| e.to_string())?;
    CoinState::new(m).map_err(|e| format!("state '{s}': {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("-pi/7").unwrap(), -PI / 7.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("1e-3").unwrap(), 1e-3);
        assert!((parse_angle("pi-0.01").unwrap() - (PI - 0.01)).abs() < 1e-15);
        assert!((parse_angle("-pi+0.01").unwrap() - (0.01 - PI)).abs() < 1e-15);
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("").is_err());
    }

    #[test]
    fn sweeps() {
        let s: Sweep = "0:0.3:0.1".parse().unwrap();
        assert_eq!(s.len(), 4);
        assert!((s.points()[3] - 0.3).abs() < 1e-15);
        assert_eq!("0:0.25:0.1".parse::<Sweep>().unwrap().len(), 3);
        assert!("0:1:0".parse::<Sweep>().is_err());
        assert!("1:0:0.1".parse::<Sweep>().is_err());
        assert!("0:1".parse::<Sweep>().is_err());
        assert_eq!("0.2:0.2:0.1".parse::<Sweep>().unwrap().points(), vec![0.2]);
    }

    #[test]
    fn states() {
        assert_eq!(parse_state("up").unwrap(), CoinState::up());
        assert_eq!(parse_state("PLUS").unwrap(), CoinState::plus());
        let s = parse_state("0.5, 0.5i, -0.5i, 0.5").unwrap();
        assert_eq!(s.matrix()[(0, 1)], c64(0.0, 0.5));
        assert!(parse_state("1,0,0,1").is_err());
        assert!(parse_state("1,0,0").is_err());
    }
}
