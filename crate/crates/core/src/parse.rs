//! Text descriptors for constellations and bases, as used on the command line.
//!
//! Constellations: `bpsk`, `qpsk`, `psk:16`, `qam:64`, `gauss`, `sg64apsk`,
//! `apsk:r=1,2.5;n=8,16`, `im:psk:4:p0=0.75`.
//!
//! Bases (size given separately): `sc`, `ofdm`, `ofdm:L=4,M=32`, `cdma`,
//! `otfs`, `otfs:M=16,L=8`, `afdm`, `afdm:c1=0.004,c2=0`,
//! `gofdm:perm=random,seed=3`, `haar:seed=3`.

use std::str::FromStr;

use crate::basis::{
    basis_afdm, basis_cdma, basis_haar, basis_ofdm, basis_ofdm_multi, basis_otfs, basis_sc, random_generalized_ofdm,
    UnitaryBasis,
};
use crate::constellation::{apply_index_modulation, make_apsk, make_psk, make_qam, sg64_apsk, SymbolSource};
use crate::optimality::otfs_grid;
use crate::stats::trial_rng;
use crate::{Error, Result};

fn number<T: FromStr>(token: &str) -> Result<T> {
    token
        .trim()
        .parse()
        .map_err(|_| Error::parse(token, "not a valid number"))
}

fn list<T: FromStr>(token: &str) -> Result<Vec<T>> {
    token.split(',').map(number).collect()
}

/// `key=value` pairs separated by `sep`; unknown or repeated keys are errors.
fn pairs<'a>(token: &'a str, sep: char, allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for item in token.split(sep) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::parse(item, "expected key=value"))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(Error::parse(item, format!("unknown key, expected one of {}", allowed.join(", "))));
        }
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(Error::parse(item, "repeated key"));
        }
        out.push((k, v.trim()));
    }
    Ok(out)
}

fn lookup<'a>(pairs: &[(&str, &'a str)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
}

/// Parse a constellation descriptor.
pub fn parse_constellation(text: &str) -> Result<SymbolSource> {
    let text = text.trim();
    let lower = text.to_ascii_lowercase();
    match lower.as_str() {
        "bpsk" => return Ok(make_psk(2)?.into()),
        "qpsk" => return Ok(make_psk(4)?.into()),
        "gauss" | "gaussian" => return Ok(SymbolSource::Gaussian),
        "sg64apsk" | "sg-64-apsk" => return Ok(sg64_apsk().into()),
        _ => {}
    }
    if let Some(rest) = lower.strip_prefix("im:") {
        let (base, p0) = rest
            .rsplit_once(":p0=")
            .ok_or_else(|| Error::parse(text, "index modulation needs im:<base>:p0=<prob>"))?;
        let p0: f64 = number(p0)?;
        return match parse_constellation(base)? {
            SymbolSource::Alphabet(c) => Ok(apply_index_modulation(&c, p0)?.into()),
            SymbolSource::Gaussian => Err(Error::parse(base, "index modulation needs a finite alphabet")),
        };
    }
    let (kind, arg) = lower
        .split_once(':')
        .ok_or_else(|| Error::parse(text, "unknown constellation"))?;
    match kind {
        "psk" => Ok(make_psk(number(arg)?)?.into()),
        "qam" => Ok(make_qam(number(arg)?)?.into()),
        "apsk" => {
            let kv = pairs(arg, ';', &["r", "n"])?;
            let radii: Vec<f64> = list(lookup(&kv, "r").ok_or_else(|| Error::parse(arg, "missing r="))?)?;
            let counts: Vec<usize> = list(lookup(&kv, "n").ok_or_else(|| Error::parse(arg, "missing n="))?)?;
            Ok(make_apsk(&radii, &counts)?.into())
        }
        _ => Err(Error::parse(kind, "unknown constellation family")),
    }
}

/// Parse a basis descriptor for block length `n`.
pub fn parse_basis(text: &str, n: usize) -> Result<UnitaryBasis> {
    let text = text.trim();
    let lower = text.to_ascii_lowercase();
    let (kind, arg) = match lower.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (lower.as_str(), None),
    };
    let no_args = |b: Result<UnitaryBasis>| match arg {
        Some(a) => Err(Error::parse(a, format!("`{kind}` takes no parameters"))),
        None => b,
    };
    let check_size = |a: usize, b: usize, what: &str| {
        if a * b == n {
            Ok(())
        } else {
            Err(Error::parse(text, format!("{what} = {} does not equal n = {n}", a * b)))
        }
    };
    match kind {
        "sc" => no_args(basis_sc(n)),
        "cdma" => no_args(basis_cdma(n)),
        "ofdm" => match arg {
            None => basis_ofdm(n),
            Some(a) => {
                let kv = pairs(a, ',', &["l", "m"])?;
                let l: usize = number(lookup(&kv, "l").ok_or_else(|| Error::parse(a, "missing L="))?)?;
                let m: usize = number(lookup(&kv, "m").ok_or_else(|| Error::parse(a, "missing M="))?)?;
                check_size(l, m, "L·M")?;
                basis_ofdm_multi(l, m)
            }
        },
        "otfs" => {
            let (m, l) = match arg {
                None => otfs_grid(n),
                Some(a) => {
                    let kv = pairs(a, ',', &["m", "l"])?;
                    let m = number(lookup(&kv, "m").ok_or_else(|| Error::parse(a, "missing M="))?)?;
                    let l = number(lookup(&kv, "l").ok_or_else(|| Error::parse(a, "missing L="))?)?;
                    (m, l)
                }
            };
            check_size(m, l, "M·L")?;
            basis_otfs(m, l)
        }
        "afdm" => {
            let (mut c1, mut c2) = (1.0 / (2.0 * n as f64), 0.0);
            if let Some(a) = arg {
                let kv = pairs(a, ',', &["c1", "c2"])?;
                if let Some(v) = lookup(&kv, "c1") {
                    c1 = number(v)?;
                }
                if let Some(v) = lookup(&kv, "c2") {
                    c2 = number(v)?;
                }
            }
            basis_afdm(n, c1, c2)
        }
        "gofdm" | "haar" => {
            let mut seed = 0u64;
            if let Some(a) = arg {
                let allowed: &[&str] = if kind == "gofdm" { &["perm", "seed"] } else { &["seed"] };
                let kv = pairs(a, ',', allowed)?;
                if let Some(p) = lookup(&kv, "perm") {
                    if p != "random" {
                        return Err(Error::parse(p, "only perm=random is supported"));
                    }
                }
                if let Some(s) = lookup(&kv, "seed") {
                    seed = number(s)?;
                }
            }
            let mut rng = trial_rng(seed, 0);
            if kind == "gofdm" {
                random_generalized_ofdm(n, &mut rng)
            } else {
                basis_haar(n, &mut rng)
            }
        }
        _ => Err(Error::parse(kind, "unknown basis")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Scheme;

    #[test]
    fn constellations() {
        assert!((parse_constellation("qam:16").unwrap().kurtosis() - 1.32).abs() < 1e-12);
        assert!((parse_constellation("psk:8").unwrap().kurtosis() - 1.0).abs() < 1e-12);
        assert_eq!(parse_constellation("QPSK").unwrap().label(), "qpsk");
        assert_eq!(parse_constellation("gauss").unwrap().kurtosis(), 2.0);
        let sg = parse_constellation("apsk:r=4.54e-5,0.0067,0.0815,1.9983;n=16,16,16,16").unwrap();
        assert!((sg.kurtosis() - sg64_apsk().kurtosis()).abs() < 1e-12);
        let im = parse_constellation("im:psk:4:p0=0.75").unwrap();
        assert!((im.kurtosis() - 4.0).abs() < 1e-12);
        assert!(parse_constellation("bpsk").unwrap().pseudo_variance_nonzero());
    }

    fn offending(e: Error) -> String {
        match e {
            Error::Parse { token, .. } => token,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn constellation_errors_name_the_token() {
        assert_eq!(offending(parse_constellation("qam:sixteen").unwrap_err()), "sixteen");
        assert_eq!(offending(parse_constellation("pam:4").unwrap_err()), "pam");
        assert_eq!(offending(parse_constellation("apsk:r=1,2;q=3").unwrap_err()), "q=3");
        assert_eq!(offending(parse_constellation("wat").unwrap_err()), "wat");
        assert!(matches!(parse_constellation("qam:32"), Err(Error::UnsupportedOrder(32))));
    }

    #[test]
    fn bases() {
        assert_eq!(*parse_basis("sc", 16).unwrap().scheme(), Scheme::SingleCarrier);
        assert_eq!(parse_basis("ofdm:L=4,M=32", 128).unwrap().n(), 128);
        assert_eq!(parse_basis("otfs:M=16,L=8", 128).unwrap().n(), 128);
        assert_eq!(parse_basis("otfs", 128).unwrap().scheme().to_string(), "otfs:M=16,L=8");
        assert_eq!(parse_basis("cdma", 64).unwrap().n(), 64);
        assert!(parse_basis("afdm:c1=0.01,c2=0.2", 32).unwrap().unitarity_residual() < 1e-10);
        let a = parse_basis("gofdm:perm=random,seed=3", 16).unwrap();
        let b = parse_basis("gofdm:perm=random,seed=3", 16).unwrap();
        assert_eq!(a.u(), b.u());
        assert!(parse_basis("haar:seed=1", 8).unwrap().unitarity_residual() < 1e-10);
    }

    #[test]
    fn basis_errors() {
        assert!(matches!(parse_basis("cdma", 12), Err(Error::UnsupportedSize(12, _))));
        assert_eq!(offending(parse_basis("ofdm:L=4,M=16", 128).unwrap_err()), "ofdm:L=4,M=16");
        assert_eq!(offending(parse_basis("sc:x=1", 8).unwrap_err()), "x=1");
        assert_eq!(offending(parse_basis("chirp", 8).unwrap_err()), "chirp");
        assert_eq!(offending(parse_basis("gofdm:perm=identity", 8).unwrap_err()), "identity");
    }
}
