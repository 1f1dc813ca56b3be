//! Disc-shaped golden angle modulation.
//!
//! Point `m` (1-based) sits at radius `sqrt(2 P m / (M + 1))` and phase
//! `2 pi theta m` with `theta = (3 - sqrt 5) / 2`, so consecutive points turn
//! by the golden angle and the radii grow along a spiral that fills a disc.
//! Bits map to points by natural binary: bits `b` (MSB first) select
//! `m = 1 + value(b)`.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;

use crate::bits::{bits_to_index, index_to_bits, Bit};
use crate::error::{Error, Result};

/// Largest supported bits-per-symbol.
pub const MAX_K1: u32 = 30;

/// `theta = 1 - (sqrt 5 - 1) / 2`, i.e. the golden angle divided by 2 pi.
pub fn golden_theta() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamConstellation {
    k1: u32,
    power: f64,
    theta: f64,
    points: Vec<Complex64>,
}

impl GamConstellation {
    pub fn build(k1: u32, power: f64) -> Result<Self> {
        if k1 == 0 || k1 > MAX_K1 {
            return Err(Error::domain(format!("k1 must be in 1..={MAX_K1}, got {k1}")));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::domain(format!("power must be positive, got {power}")));
        }
        let theta = golden_theta();
        let order = 1usize << k1;
        let scale = 2.0 * power / (order as f64 + 1.0);
        let points = (1..=order)
            .map(|m| {
                let m = m as f64;
                let radius = (scale * m).sqrt();
                // Reduce the turn count before scaling so large m keeps full phase precision.
                let phase = (theta * m).rem_euclid(1.0) * TAU;
                Complex64::from_polar(radius, phase)
            })
            .collect();
        Ok(Self {
            k1,
            power,
            theta,
            points,
        })
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    /// Modulation order `M = 2^k1`.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Entry `m - 1` holds point `s_m`.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Point `s_m` for the 1-based index `m`.
    pub fn point(&self, m: usize) -> Result<Complex64> {
        self.check_index(m)?;
        Ok(self.points[m - 1])
    }

    /// Average of `|s_m|^2` over the constellation.
    pub fn mean_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    pub fn bits_to_symbol(&self, bits: &[Bit]) -> Result<Complex64> {
        Ok(self.points[self.bits_to_zero_index(bits)?])
    }

    /// Zero-based point index (`m - 1`) selected by `bits`.
    pub fn bits_to_zero_index(&self, bits: &[Bit]) -> Result<usize> {
        if bits.len() != self.k1 as usize {
            return Err(Error::domain(format!(
                "expected {} bits, got {}",
                self.k1,
                bits.len()
            )));
        }
        bits_to_index(bits)
    }

    /// Bit label of the 1-based index `m`.
    pub fn symbol_to_bits(&self, m: usize) -> Result<Vec<Bit>> {
        self.check_index(m)?;
        Ok(index_to_bits(m - 1, self.k1 as usize))
    }

    fn check_index(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.order() {
            return Err(Error::domain(format!(
                "index {m} outside 1..={}",
                self.order()
            )));
        }
        Ok(())
    }

    /// Writes `m,re,im,radius,phase_rad` rows, phase in [0, 2 pi).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,re,im,radius,phase_rad")?;
        for (i, p) in self.points.iter().enumerate() {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                i + 1,
                p.re,
                p.im,
                p.norm(),
                p.arg().rem_euclid(TAU)
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrapped(d: f64) -> f64 {
        let d = d.rem_euclid(TAU);
        d.min(TAU - d)
    }

    #[test]
    fn radii_for_4gam() {
        let c = GamConstellation::build(2, 1.0).unwrap();
        assert!((c.points()[0].norm() - 0.632_455_532_033_675_9).abs() < 1e-12);
        assert!((c.points()[3].norm() - 1.264_911_064_067_351_8).abs() < 1e-12);
    }

    #[test]
    fn first_points_of_4gam() {
        let c = GamConstellation::build(2, 1.0).unwrap();
        let s1 = c.point(1).unwrap();
        assert!((s1.re + 0.466_353_026_090_098_4).abs() < 1e-12);
        assert!((s1.im - 0.427_217_573_440_756_3).abs() < 1e-12);
        assert!((s1.arg() - 2.399_963_229_728_653).abs() < 1e-12);
        let s2 = c.bits_to_symbol(&[0, 1]).unwrap();
        assert!((s2.re - 0.078_195_945_379_722_34).abs() < 1e-12);
        assert!((s2.im + 0.891_002_465_836_190_2).abs() < 1e-12);
    }

    #[test]
    fn labeling_endpoints() {
        let c = GamConstellation::build(2, 1.0).unwrap();
        assert_eq!(c.bits_to_symbol(&[0, 0]).unwrap(), c.point(1).unwrap());
        assert_eq!(c.bits_to_symbol(&[1, 1]).unwrap(), c.point(4).unwrap());
        assert_eq!(c.symbol_to_bits(1).unwrap(), vec![0, 0]);
        let c4 = GamConstellation::build(4, 1.0).unwrap();
        assert_eq!(c4.symbol_to_bits(16).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn invariants_hold_across_orders_and_powers() {
        for k1 in 1..=10 {
            for power in [0.5, 1.0, 2.0] {
                let c = GamConstellation::build(k1, power).unwrap();
                assert_eq!(c.order(), 1 << k1);
                assert!((c.mean_energy() - power).abs() < 1e-12);
                let golden = TAU * c.theta();
                for w in c.points().windows(2) {
                    assert!(w[1].norm() > w[0].norm());
                    assert!(wrapped(w[1].arg() - w[0].arg() - golden) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn labeling_is_a_bijection() {
        let c = GamConstellation::build(5, 1.0).unwrap();
        for m in 1..=c.order() {
            let bits = c.symbol_to_bits(m).unwrap();
            assert_eq!(c.bits_to_symbol(&bits).unwrap(), c.point(m).unwrap());
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(GamConstellation::build(0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(GamConstellation::build(2, 0.0), Err(Error::Domain(_))));
        assert!(matches!(GamConstellation::build(2, -1.0), Err(Error::Domain(_))));
        let c = GamConstellation::build(2, 1.0).unwrap();
        assert!(c.bits_to_symbol(&[1]).is_err());
        assert!(c.symbol_to_bits(0).is_err());
        assert!(c.symbol_to_bits(5).is_err());
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let c = GamConstellation::build(8, 1.0).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 257);
        assert!(text.starts_with("m,re,im,radius,phase_rad\n"));
    }
}
