use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Symmetric rule on a triangle, weights normalised to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Physical points and area-scaled weights on a triangle.
    pub fn map(&self, corners: &[Vec3; 3], area: f64) -> impl Iterator<Item = (Vec3, f64)> + '_ {
        let [a, b, c] = *corners;
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(l, w)| (a * l[0] + b * l[1] + c * l[2], w * area))
    }

    /// `∫_T f dA` on a physical triangle.
    pub fn integrate<T>(&self, corners: &[Vec3; 3], f: impl Fn(&Vec3) -> T) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    {
        let area = 0.5 * (corners[1] - corners[0]).cross(&(corners[2] - corners[0])).norm();
        self.map(corners, area)
            .fold(T::default(), |acc, (p, w)| acc + f(&p) * w)
    }
}

fn push_orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        points.push(p);
        weights.push(w);
    }
}

/// Rules for degrees 1, 2, 3, 5 and 7. All weights are positive and all
/// points interior.
///
/// Degree 3 is served by the six-point degree-4 rule, degree 7 by Gatermann's
/// twelve-point rule.
pub fn gauss_rule(degree: usize) -> Result<TriangleRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match degree {
        1 => {
            points.push([1.0 / 3.0; 3]);
            weights.push(1.0);
        }
        2 => push_orbit3(&mut points, &mut weights, 1.0 / 6.0, 1.0 / 3.0),
        3 => {
            push_orbit3(&mut points, &mut weights, 0.445_948_490_915_965, 0.223_381_589_678_011);
            push_orbit3(&mut points, &mut weights, 0.091_576_213_509_771, 0.109_951_743_655_322);
        }
        5 => {
            let s = 15f64.sqrt();
            points.push([1.0 / 3.0; 3]);
            weights.push(9.0 / 40.0);
            push_orbit3(&mut points, &mut weights, (6.0 - s) / 21.0, (155.0 - s) / 1200.0);
            push_orbit3(&mut points, &mut weights, (6.0 + s) / 21.0, (155.0 + s) / 1200.0);
        }
        7 => {
            const ORBITS: [([f64; 3], f64); 4] = [
                ([0.062_382_265_094_390_84, 0.067_517_867_073_924_36, 0.870_099_867_831_684_8], 0.026_517_028_157_434_50),
                ([0.055_225_456_656_920_00, 0.321_502_493_852_015_6, 0.623_272_049_491_064_4], 0.043_881_408_714_448_11),
                ([0.034_324_302_945_094_88, 0.660_949_196_186_798, 0.304_726_500_868_107_2], 0.028_775_042_784_975_28),
                ([0.515_842_334_353_591_8, 0.277_716_166_976_391_8, 0.206_441_498_670_016_4], 0.067_493_187_009_808_79),
            ];
            for (l, w) in ORBITS {
                let [a, b, c] = l;
                for p in [[a, b, c], [b, c, a], [c, a, b]] {
                    points.push(p);
                    weights.push(2.0 * w);
                }
            }
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "no triangle rule of degree {degree} (supported: 1, 2, 3, 5, 7)"
            )))
        }
    }
    Ok(TriangleRule {
        degree,
        points,
        weights,
    })
}
