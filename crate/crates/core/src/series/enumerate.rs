//! Deterministic enumeration of the nonzero Gaussian rationals in `|z| < 2`.

use std::cmp::Ordering;

use num_complex::Complex64;
use num_integer::Integer;

/// Reduced fraction `num / den` with `den >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: i64,
    pub den: i64,
}

impl Fraction {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn cmp_value(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

/// `re + i·im` with exact rational parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: Fraction,
    pub im: Fraction,
}

impl GaussianRational {
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// `|self|^2 < 4`, decided in integer arithmetic.
    fn inside_radius_two(&self) -> bool {
        let (a, b) = (self.re.num as i128, self.re.den as i128);
        let (c, d) = (self.im.num as i128, self.im.den as i128);
        a * a * d * d + c * c * b * b < 4 * b * b * d * d
    }
}

/// Fractions in `(-2, 2)` with denominator at most `d`, ascending.
fn fractions_up_to(d: i64) -> Vec<Fraction> {
    let mut out: Vec<Fraction> = (1..=d)
        .flat_map(|den| {
            (-2 * den + 1..2 * den)
                .filter(move |num| num.gcd(&den) == 1)
                .map(move |num| Fraction { num, den })
        })
        .collect();
    out.sort_by(Fraction::cmp_value);
    out
}

/// First `count` points of the enumeration: denominator bound `d = 1, 2, …`;
/// within one bound the points first reachable at that bound, ordered
/// lexicographically by `(Re, Im)`. Zero is skipped.
pub fn enumerate_gaussian_rationals(count: usize) -> Vec<GaussianRational> {
    let mut out = Vec::with_capacity(count);
    let mut d = 1i64;
    while out.len() < count {
        let vals = fractions_up_to(d);
        'level: for re in &vals {
            for im in &vals {
                if re.den.max(im.den) != d || (re.num == 0 && im.num == 0) {
                    continue;
                }
                let p = GaussianRational { re: *re, im: *im };
                if p.inside_radius_two() {
                    out.push(p);
                    if out.len() == count {
                        break 'level;
                    }
                }
            }
        }
        d += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Brute force: all Gaussian rationals with denominators <= dmax in the
    /// radius-2 disc, grouped by the level at which they first appear.
    fn brute_levels(dmax: i64) -> Vec<Vec<(f64, f64)>> {
        let mut seen = HashSet::new();
        let mut levels = Vec::new();
        for d in 1..=dmax {
            let mut level = Vec::new();
            for b1 in 1..=d {
                for a1 in -2 * b1..=2 * b1 {
                    for b2 in 1..=d {
                        for a2 in -2 * b2..=2 * b2 {
                            let (x, y) = (a1 as f64 / b1 as f64, a2 as f64 / b2 as f64);
                            if (x == 0.0 && y == 0.0) || x * x + y * y >= 4.0 - 1e-12 {
                                continue;
                            }
                            let key = ((x * 1e9).round() as i64, (y * 1e9).round() as i64);
                            if seen.insert(key) {
                                level.push((x, y));
                            }
                        }
                    }
                }
            }
            level.sort_by(|p, q| p.partial_cmp(q).unwrap());
            levels.push(level);
        }
        levels
    }

    #[test]
    fn first_point_is_minus_one_minus_i() {
        let first = enumerate_gaussian_rationals(1);
        assert_eq!(first[0].to_complex(), Complex64::new(-1.0, -1.0));
    }

    #[test]
    fn matches_brute_force_order() {
        let levels = brute_levels(4);
        let expected: Vec<(f64, f64)> = levels.into_iter().flatten().collect();
        let got: Vec<(f64, f64)> = enumerate_gaussian_rationals(expected.len())
            .into_iter()
            .map(|p| (p.re.to_f64(), p.im.to_f64()))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn denominator_one_level_has_eight_points() {
        let pts = enumerate_gaussian_rationals(9);
        assert!(pts[..8].iter().all(|p| p.re.den == 1 && p.im.den == 1));
        assert_eq!(pts[8].re.den.max(pts[8].im.den), 2);
    }
}
