use crate::geometry::{wrap_angle, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("target coincides with the projector")]
pub struct CoincidentTarget;

/// Pan/tilt for a 2-DOF gimbal mounted at `projector` and facing `heading`.
///
/// Pan is the signed angle from the heading to the target bearing, in
/// `[-PI, PI]`, positive to the left. Tilt is the elevation from horizontal,
/// negative when the target is below the projector.
pub fn gimbal_angles(
    projector: Point3,
    heading: f64,
    target: Point3,
) -> Result<(f64, f64), CoincidentTarget> {
    let dx = target.x - projector.x;
    let dy = target.y - projector.y;
    let dz = target.z - projector.z;
    let horizontal = dx.hypot(dy);
    if horizontal == 0.0 && dz == 0.0 {
        return Err(CoincidentTarget);
    }
    let pan = if horizontal == 0.0 {
        0.0
    } else {
        wrap_angle(dy.atan2(dx) - heading)
    };
    Ok((pan, dz.atan2(horizontal)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    const P: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 1.5,
    };

    #[test]
    fn straight_ahead_level() {
        let (pan, tilt) = gimbal_angles(P, 0.0, Point3::new(1.0, 0.0, 1.5)).unwrap();
        assert_eq!((pan, tilt), (0.0, 0.0));
    }

    #[test]
    fn ahead_and_below() {
        let (pan, tilt) = gimbal_angles(P, 0.0, Point3::new(1.0, 0.0, 0.5)).unwrap();
        assert_eq!(pan, 0.0);
        assert!((tilt + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn directly_left() {
        let (pan, tilt) = gimbal_angles(P, 0.0, Point3::new(0.0, 1.0, 1.5)).unwrap();
        assert!((pan - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(tilt, 0.0);
    }

    #[test]
    fn heading_is_subtracted() {
        let (pan, _) = gimbal_angles(P, FRAC_PI_2, Point3::new(0.0, 1.0, 1.5)).unwrap();
        assert!(pan.abs() < 1e-15);
        let (pan, _) = gimbal_angles(P, FRAC_PI_2, Point3::new(1.0, 0.0, 1.5)).unwrap();
        assert!((pan + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn straight_up_has_zero_pan() {
        let (pan, tilt) = gimbal_angles(P, 0.3, Point3::new(0.0, 0.0, 3.0)).unwrap();
        assert_eq!(pan, 0.0);
        assert!((tilt - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn coincident_is_an_error() {
        assert_eq!(gimbal_angles(P, 0.0, P), Err(CoincidentTarget));
    }
}
