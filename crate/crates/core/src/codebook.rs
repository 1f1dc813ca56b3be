//! Random Gaussian codebook shared by transmitter and receiver.
//!
//! Row `i` is the codeword for the natural-binary message `i`. Entries are
//! drawn i.i.d. from `N(0, P)` on the [`Purpose::Codebook`] stream of the
//! seed and then scaled by one global factor so the empirical average power
//! of the whole book equals `P`.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use crate::bits::{bits_to_index, Bit};
use crate::error::{check_capacity, Error, Result};
use crate::rng::{GaussianRng, Purpose, GENERATOR_NAME, GENERATOR_VERSION};

/// Default memory cap for a codebook matrix (1 GiB).
pub const DEFAULT_CODEBOOK_CAP: u64 = 1 << 30;

const FILE_MAGIC: &str = "GAUSSIAN-CODEBOOK";

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCodebook {
    k2: u32,
    n2: usize,
    rate: f64,
    power: f64,
    seed: u64,
    /// Row-major `2^k2 x n2`.
    codewords: Vec<f64>,
}

/// Codeword length `k2 / rate`, rejecting non-integral results.
pub fn codeword_len(k2: u32, rate: f64) -> Result<usize> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::domain(format!("rate must be in (0, 1], got {rate}")));
    }
    let n = k2 as f64 / rate;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 * n.max(1.0) || rounded < 1.0 {
        return Err(Error::domain(format!(
            "k2 / rate = {k2} / {rate} is not an integer codeword length"
        )));
    }
    Ok(rounded as usize)
}

impl GaussianCodebook {
    pub fn build(k2: u32, rate: f64, power: f64, seed: u64) -> Result<Self> {
        Self::build_with_cap(k2, rate, power, seed, DEFAULT_CODEBOOK_CAP)
    }

    pub fn build_with_cap(k2: u32, rate: f64, power: f64, seed: u64, cap_bytes: u64) -> Result<Self> {
        if k2 == 0 {
            return Err(Error::domain("k2 must be at least 1"));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::domain(format!("power must be positive, got {power}")));
        }
        let n2 = codeword_len(k2, rate)?;
        if k2 >= 63 {
            return Err(Error::Capacity {
                what: format!("codebook with k2={k2}"),
                requested: u128::MAX,
                cap: cap_bytes,
            });
        }
        let rows = 1u128 << k2;
        check_capacity(&format!("codebook with k2={k2}"), rows * n2 as u128 * 8, cap_bytes)?;
        let rows = rows as usize;

        let sd = power.sqrt();
        let mut rng = GaussianRng::for_purpose(seed, Purpose::Codebook, 0, 0);
        let mut codewords: Vec<f64> = (0..rows * n2).map(|_| sd * rng.standard_normal()).collect();

        // Distinct rows make encoding injective. A collision is a measure-zero
        // event, so redrawing the later row from the same stream suffices.
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(rows);
        for r in 0..rows {
            loop {
                let row = &codewords[r * n2..(r + 1) * n2];
                if seen.insert(row.iter().map(|x| x.to_bits()).collect()) {
                    break;
                }
                for x in &mut codewords[r * n2..(r + 1) * n2] {
                    *x = sd * rng.standard_normal();
                }
            }
        }

        let empirical = codewords.iter().map(|x| x * x).sum::<f64>() / codewords.len() as f64;
        let scale = (power / empirical).sqrt();
        codewords.iter_mut().for_each(|x| *x *= scale);

        Ok(Self {
            k2,
            n2,
            rate,
            power,
            seed,
            codewords,
        })
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of codewords, `2^k2`.
    pub fn len(&self) -> usize {
        self.codewords.len() / self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.codewords[index * self.n2..(index + 1) * self.n2]
    }

    /// Flat row-major codeword matrix.
    pub fn as_flat(&self) -> &[f64] {
        &self.codewords
    }

    pub fn empirical_power(&self) -> f64 {
        self.codewords.iter().map(|x| x * x).sum::<f64>() / self.codewords.len() as f64
    }

    pub fn encode(&self, bits: &[Bit]) -> Result<Vec<f64>> {
        if bits.len() != self.k2 as usize {
            return Err(Error::domain(format!(
                "expected {} bits, got {}",
                self.k2,
                bits.len()
            )));
        }
        Ok(self.row(bits_to_index(bits)?).to_vec())
    }

    /// Text format: magic line, `key=value` header, a `rows` marker, then one
    /// comma-separated line per codeword at 17 significant digits.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FILE_MAGIC}")?;
        writeln!(out, "k2={}", self.k2)?;
        writeln!(out, "n2={}", self.n2)?;
        writeln!(out, "rate={}", self.rate)?;
        writeln!(out, "power={}", self.power)?;
        writeln!(out, "seed={}", self.seed)?;
        writeln!(out, "generator={GENERATOR_NAME}")?;
        writeln!(out, "version={GENERATOR_VERSION}")?;
        writeln!(out, "rows")?;
        for r in 0..self.len() {
            let line: Vec<String> = self.row(r).iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::format("codebook file truncated"))?
                .map_err(Error::from)
        };
        if next()?.trim() != FILE_MAGIC {
            return Err(Error::format("missing codebook magic line"));
        }
        let mut header = std::collections::HashMap::new();
        loop {
            let line = next()?;
            let line = line.trim();
            if line == "rows" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(format!("bad header line `{line}`")))?;
            header.insert(k.to_string(), v.to_string());
        }
        let field = |name: &str| -> Result<&String> {
            header
                .get(name)
                .ok_or_else(|| Error::format(format!("codebook header lacks `{name}`")))
        };
        fn parse<T: std::str::FromStr>(name: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::format(format!("bad value `{v}` for `{name}`")))
        }
        let k2: u32 = parse("k2", field("k2")?)?;
        let n2: usize = parse("n2", field("n2")?)?;
        let rate: f64 = parse("rate", field("rate")?)?;
        let power: f64 = parse("power", field("power")?)?;
        let seed: u64 = parse("seed", field("seed")?)?;
        if field("generator")? != GENERATOR_NAME {
            return Err(Error::format(format!(
                "codebook generated by `{}`, expected `{GENERATOR_NAME}`",
                field("generator")?
            )));
        }
        let version: u32 = parse("version", field("version")?)?;
        if version != GENERATOR_VERSION {
            return Err(Error::format(format!("unsupported generator version {version}")));
        }
        if k2 == 0 || k2 >= 40 || codeword_len(k2, rate)? != n2 {
            return Err(Error::format("inconsistent k2/n2/rate in codebook header"));
        }
        let rows = 1usize << k2;
        let mut codewords = Vec::with_capacity(rows * n2);
        for r in 0..rows {
            let line = next()?;
            let before = codewords.len();
            for tok in line.trim().split(',') {
                codewords.push(parse::<f64>("codeword entry", tok.trim())?);
            }
            if codewords.len() - before != n2 {
                return Err(Error::format(format!("row {r} has wrong length")));
            }
        }
        Ok(Self {
            k2,
            n2,
            rate,
            power,
            seed,
            codewords,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_follows_k2_and_rate() {
        let cb = GaussianCodebook::build(4, 0.5, 1.0, 1).unwrap();
        assert_eq!(cb.len(), 16);
        assert_eq!(cb.n2(), 8);
        assert_eq!(cb.as_flat().len(), 128);
    }

    #[test]
    fn seeded_regeneration_is_identical() {
        let a = GaussianCodebook::build(2, 0.5, 1.0, 99).unwrap();
        let b = GaussianCodebook::build(2, 0.5, 1.0, 99).unwrap();
        assert_eq!(a, b);
        let c = GaussianCodebook::build(2, 0.5, 1.0, 100).unwrap();
        assert_ne!(a.as_flat(), c.as_flat());
    }

    #[test]
    fn empirical_power_is_exact() {
        for (k2, power) in [(1, 1.0), (2, 2.5), (6, 1.0), (8, 0.3)] {
            let cb = GaussianCodebook::build(k2, 0.5, power, 3).unwrap();
            assert!((cb.empirical_power() - power).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_is_statistically_zero() {
        for k2 in [6, 8, 10] {
            let cb = GaussianCodebook::build(k2, 0.5, 1.0, 11).unwrap();
            let n = cb.as_flat().len() as f64;
            let mean = cb.as_flat().iter().sum::<f64>() / n;
            assert!(mean.abs() < 5.0 / n.sqrt(), "k2={k2} mean={mean}");
        }
    }

    #[test]
    fn rows_are_distinct() {
        let cb = GaussianCodebook::build(8, 0.5, 1.0, 5).unwrap();
        let set: HashSet<Vec<u64>> = (0..cb.len())
            .map(|r| cb.row(r).iter().map(|x| x.to_bits()).collect())
            .collect();
        assert_eq!(set.len(), cb.len());
    }

    #[test]
    fn encode_selects_natural_binary_row() {
        let cb = GaussianCodebook::build(3, 0.5, 1.0, 2).unwrap();
        assert_eq!(cb.encode(&[0, 0, 0]).unwrap(), cb.row(0));
        assert_eq!(cb.encode(&[1, 1, 1]).unwrap(), cb.row(7));
        assert_eq!(cb.encode(&[1, 0, 1]).unwrap(), cb.row(5));
        assert!(cb.encode(&[1, 0]).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(GaussianCodebook::build(0, 0.5, 1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(GaussianCodebook::build(3, 0.7, 1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(GaussianCodebook::build(3, 0.5, 0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(
            GaussianCodebook::build_with_cap(10, 0.5, 1.0, 0, 1024),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn file_round_trip_is_exact() {
        let cb = GaussianCodebook::build(5, 0.5, 1.0, 77).unwrap();
        let mut buf = Vec::new();
        cb.write_to(&mut buf).unwrap();
        let back = GaussianCodebook::read_from(&buf[..]).unwrap();
        assert_eq!(cb, back);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let cb = GaussianCodebook::build(3, 0.5, 1.0, 77).unwrap();
        let mut buf = Vec::new();
        cb.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            GaussianCodebook::read_from(cut.as_bytes()),
            Err(Error::Format(_))
        ));
    }
}
