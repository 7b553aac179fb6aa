//! Parsers for list and grid arguments.

use isac_core::ranging::Target;

use crate::CliError;

fn num<T: std::str::FromStr>(token: &str, what: &str) -> Result<T, CliError> {
    token
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse `{token}` as {what}")))
}

/// Comma-separated descriptors. Pieces starting with a digit, sign or dot
/// continue the previous item, so `apsk:r=1,2;n=8,8,qam:16` splits into two.
pub fn split_descriptors(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for piece in text.split(',') {
        let continues = piece.starts_with(|c: char| c.is_ascii_digit() || matches!(c, '.' | '-' | '+'));
        match out.last_mut() {
            Some(last) if continues => {
                last.push(',');
                last.push_str(piece);
            }
            _ => out.push(piece.trim().to_string()),
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Block sizes: a single value, a list `16,32`, or a grid `16:1024:x2`
/// (multiplicative) / `16:64:16` (additive).
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let sizes = match parts.as_slice() {
        [single] => single.split(',').map(|t| num(t, "a block size")).collect::<Result<Vec<usize>, _>>()?,
        [start, stop, step] => {
            let start: usize = num(start, "a block size")?;
            let stop: usize = num(stop, "a block size")?;
            let mut v = Vec::new();
            if let Some(factor) = step.strip_prefix('x') {
                let factor: usize = num(factor, "a growth factor")?;
                if factor < 2 || start == 0 {
                    return Err(CliError::Usage(format!("`{text}` does not grow")));
                }
                let mut n = start;
                while n <= stop {
                    v.push(n);
                    n *= factor;
                }
            } else {
                let step: usize = num(step, "a step")?;
                if step == 0 {
                    return Err(CliError::Usage(format!("`{text}` has a zero step")));
                }
                v.extend((start..=stop).step_by(step));
            }
            v
        }
        _ => return Err(CliError::Usage(format!("`{text}` is not a size or start:stop:step grid"))),
    };
    if sizes.is_empty() {
        return Err(CliError::Usage(format!("`{text}` selects no sizes")));
    }
    Ok(sizes)
}

/// Real grid `start:stop:step` (inclusive, within half a step) or a single value.
pub fn parse_real_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(|t| num(t, "a number")).collect(),
        [start, stop, step] => {
            let start: f64 = num(start, "a number")?;
            let stop: f64 = num(stop, "a number")?;
            let step: f64 = num(step, "a number")?;
            if !(step > 0.0) || stop < start {
                return Err(CliError::Usage(format!("`{text}` needs start ≤ stop and a positive step")));
            }
            let count = ((stop - start) / step + 0.5).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(CliError::Usage(format!("`{text}` is not a value or start:stop:step grid"))),
    }
}

/// Targets as `range_m:power` pairs, comma separated.
pub fn parse_targets(text: &str) -> Result<Vec<Target>, CliError> {
    text.split(',')
        .map(|item| {
            let (r, p) = item
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("target `{item}` must be range_m:power")))?;
            Ok(Target {
                range_m: num(r, "a range")?,
                power: num(p, "a power")?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_lists() {
        assert_eq!(split_descriptors("psk:16,qam:16,qam:64"), vec!["psk:16", "qam:16", "qam:64"]);
        assert_eq!(
            split_descriptors("apsk:r=4.54e-5,0.0067;n=16,16,qpsk"),
            vec!["apsk:r=4.54e-5,0.0067;n=16,16", "qpsk"]
        );
    }

    #[test]
    fn sizes() {
        assert_eq!(parse_sizes("16:1024:x2").unwrap(), vec![16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(parse_sizes("8:32:8").unwrap(), vec![8, 16, 24, 32]);
        assert_eq!(parse_sizes("64,128").unwrap(), vec![64, 128]);
        assert!(parse_sizes("16:8:x1").is_err());
        assert!(parse_sizes("abc").is_err());
    }

    #[test]
    fn real_grid() {
        let g = parse_real_grid("-10:20:5").unwrap();
        assert_eq!(g, vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
        assert_eq!(parse_real_grid("0:1:0.25").unwrap().len(), 5);
        assert_eq!(parse_real_grid("3").unwrap(), vec![3.0]);
        assert!(parse_real_grid("5:0:1").is_err());
    }

    #[test]
    fn targets() {
        let t = parse_targets("11.25:1.0,18.75:0.1").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].power, 0.1);
        assert!(parse_targets("11.25").is_err());
    }
}
