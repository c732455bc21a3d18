use super::{BoundaryProfile, GeometryError};

/// The box `[-R, R] × [boundary, H]` cut out of the half-plane domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDomain {
    pub profile: BoundaryProfile,
    pub r: f64,
    pub h: f64,
}

impl TruncatedDomain {
    /// Corners where the weighted norms place their corner weights:
    /// `A_-`, `A_+` and the bottom ends `S^R_-`, `S^R_+` of the side walls.
    pub fn weight_corners(&self) -> [[f64; 2]; 4] {
        let p = &self.profile;
        [p.corner_minus, p.corner_plus, [-self.r, p.height(-self.r)], [self.r, p.height(self.r)]]
    }

    /// Height above which the boundary data vanishes and the grid is a
    /// plain Cartesian strip.
    pub fn blend_height(&self) -> f64 {
        self.profile.d0 + 1.0
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        x[0].abs() <= self.r && x[1] <= self.h && x[1] >= self.profile.height(x[0])
    }
}

/// Truncates the half-plane domain to a box of half-width `r` and height `h`.
pub fn truncate(profile: BoundaryProfile, r: f64, h: f64) -> Result<TruncatedDomain, GeometryError> {
    let limit = profile.d0 + 1.0;
    if !(r > limit && h > limit) {
        return Err(GeometryError::TruncationTooSmall { r, h, limit });
    }
    Ok(TruncatedDomain { profile, r, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_profile, ProfileOptions, ProfileSpec};

    #[test]
    fn bump_domain_has_four_distinct_corners() {
        let p = build_profile(ProfileSpec::bump(0.1, 1), &ProfileOptions::new(0.1, 2.0, 0.8, 0.4)).unwrap();
        let d = truncate(p, 8.0, 8.0).unwrap();
        let c = d.weight_corners();
        for a in 0..4 {
            for b in a + 1..4 {
                assert!(c[a] != c[b]);
            }
        }
        assert!(d.contains([0.0, 0.2]));
        assert!(!d.contains([0.0, 0.05]));
    }

    #[test]
    fn small_truncation_is_rejected() {
        let p = build_profile(ProfileSpec::bump(0.1, 1), &ProfileOptions::new(0.1, 2.0, 0.8, 0.4)).unwrap();
        assert!(matches!(truncate(p, 2.0, 8.0), Err(GeometryError::TruncationTooSmall { .. })));
    }

    #[test]
    fn flat_domain_side_corners() {
        let o = ProfileOptions::new(0.0, 2.0, 0.8, 0.4).allow_straight_corners();
        let p = build_profile(ProfileSpec::flat(), &o).unwrap();
        let d = truncate(p, 8.0, 8.0).unwrap();
        assert_eq!(d.weight_corners()[2], [-8.0, 0.0]);
        assert_eq!(d.weight_corners()[3], [8.0, 0.0]);
    }
}
