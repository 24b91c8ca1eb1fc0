use groundlink_core::engine::{
    check_style, evaluate_zone, is_within_tolerance, EngineParams, ZoneCue,
};
use groundlink_core::model::{
    DepartmentTag, PropertyValue, Rgb, StyleConstraint, Vec3, Zone, ZoneKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zone(kind: ZoneKind, center: Vec3, radius: f64) -> Zone {
    Zone {
        zone_id: "z".into(),
        kind,
        center,
        radius,
        department: DepartmentTag::Director,
        target_object_ids: vec![],
        entry_ids: vec!["e".into()],
    }
}

/// Point at ground distance `d` from the center along unit direction `(dx, dz)`,
/// with an arbitrary height that must not matter.
fn along(z: &Zone, dx: f64, dz: f64, d: f64, y: f64) -> Vec3 {
    Vec3::new(z.center.x + dx * d, y, z.center.z + dz * d)
}

fn check_rendering(cue: &ZoneCue) {
    let bands = (3.0 * cue.intensity).ceil().clamp(0.0, 3.0) as u8;
    assert!(
        cue.band_count == bands
            || (cue.intensity * 3.0 - (cue.intensity * 3.0).round()).abs() < 1e-9,
        "bands {} for intensity {}",
        cue.band_count,
        cue.intensity
    );
    assert!((cue.animation_rate_hz - 2.0 * cue.intensity).abs() < 1e-12);
    assert_eq!(cue.color_ramp.len(), usize::from(cue.band_count));
}

pub fn zone_geometry() -> String {
    let params = EngineParams::default();
    let k = params.activation_factor;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut cases = 0;
    for kind in [ZoneKind::Restriction, ZoneKind::Encouragement] {
        let sign = if kind == ZoneKind::Restriction {
            -1.0
        } else {
            1.0
        };
        for _ in 0..1000 {
            let r = rng.gen_range(0.1..10.0);
            let z = zone(
                kind,
                Vec3::new(
                    rng.gen_range(-50.0..50.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-50.0..50.0),
                ),
                r,
            );
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (dx, dz) = (theta.cos(), theta.sin());
            let y = rng.gen_range(-5.0..5.0);
            let d = rng.gen_range(0.0..4.0 * r);
            let p = along(&z, dx, dz, d, y);
            let cue = evaluate_zone(p, &z, "o", &params);
            check_rendering(&cue);
            cases += 1;

            // Farther along the same ray: restriction never rises, encouragement never falls.
            let d2 = d + rng.gen_range(0.0..2.0 * r);
            let farther = evaluate_zone(along(&z, dx, dz, d2, y), &z, "o", &params);
            assert!(
                sign * (farther.intensity - cue.intensity) >= -1e-12,
                "{kind:?}: intensity {} at d={d} then {} at d={d2}, r={r}",
                cue.intensity,
                farther.intensity
            );

            // Closed-form value.
            let outside = ((d - r) / (k * r)).clamp(0.0, 1.0);
            let expected = match (kind, d <= r) {
                (ZoneKind::Restriction, true) => 1.0,
                (ZoneKind::Restriction, false) => 1.0 - outside,
                (ZoneKind::Encouragement, true) => 0.0,
                (ZoneKind::Encouragement, false) => outside,
            };
            assert!(
                (cue.intensity - expected).abs() < 1e-9,
                "{kind:?}: got {} want {expected}",
                cue.intensity
            );
            if d < r {
                assert_eq!(cue.intensity, expected, "inside value must be exact");
                assert!(cue.arrow.is_none(), "no arrow inside the zone");
            }
            if kind == ZoneKind::Encouragement && d > r * (1.0 + 1e-9) {
                let arrow = cue.arrow.expect("arrow outside an encouragement zone");
                assert_eq!(arrow.to, z.center);
            }

            // Continuity across the boundary and at the activation horizon.
            let inner = evaluate_zone(along(&z, dx, dz, r, y), &z, "o", &params).intensity;
            let outer =
                evaluate_zone(along(&z, dx, dz, r * (1.0 + 1e-12), y), &z, "o", &params).intensity;
            assert!(
                (inner - outer).abs() <= 1e-9,
                "{kind:?}: jump at boundary {inner} -> {outer}"
            );
            let horizon = r + k * r;
            let before = evaluate_zone(
                along(&z, dx, dz, horizon * (1.0 - 1e-13), y),
                &z,
                "o",
                &params,
            )
            .intensity;
            let after = evaluate_zone(
                along(&z, dx, dz, horizon * (1.0 + 1e-13), y),
                &z,
                "o",
                &params,
            )
            .intensity;
            assert!(
                (before - after).abs() <= 1e-9,
                "{kind:?}: jump at horizon {before} -> {after}"
            );
        }
    }

    // d = 4, r = 2, k = 2 is halfway through the activation band.
    let spot = zone(ZoneKind::Restriction, Vec3::new(0.0, 0.0, 0.0), 2.0);
    let cue = evaluate_zone(Vec3::new(4.0, 0.0, 0.0), &spot, "o", &params);
    assert!(
        (cue.intensity - 0.5).abs() <= 1e-12,
        "spot check intensity {}",
        cue.intensity
    );
    assert_eq!(cue.band_count, 2);
    assert!((cue.animation_rate_hz - 1.0).abs() <= 1e-12);
    let mirror = evaluate_zone(
        Vec3::new(4.0, 0.0, 0.0),
        &zone(ZoneKind::Encouragement, Vec3::new(0.0, 0.0, 0.0), 2.0),
        "o",
        &params,
    );
    assert!((mirror.intensity - 0.5).abs() <= 1e-12);
    format!("{cases} zone/position pairs, spot check 0.5")
}

fn constraint(expected: PropertyValue, tolerance: f64, message: &str) -> StyleConstraint {
    StyleConstraint {
        constraint_id: "s".into(),
        object_id: "tent".into(),
        property: "material.color".into(),
        expected,
        tolerance,
        message: message.into(),
        entry_ids: vec!["e".into()],
    }
}

pub fn style_compliance() -> String {
    let blue = constraint(
        PropertyValue::Color(Rgb::new(0, 0, 255)),
        0.0,
        "Should be blue",
    );
    let cue = check_style(&PropertyValue::Color(Rgb::new(0, 0, 0)), &blue).unwrap();
    assert!(!cue.compliant && cue.blink, "black is not blue");
    assert_eq!(cue.message, "Should be blue");
    assert_eq!(cue.linked_entry_ids, ["e"]);
    let ok = check_style(&PropertyValue::Color(Rgb::new(0, 0, 255)), &blue).unwrap();
    assert!(ok.compliant && !ok.blink, "identical color must comply");

    // Inclusive bounds on both value kinds.
    let grey = PropertyValue::Color(Rgb::new(100, 100, 100));
    assert_eq!(
        is_within_tolerance(&PropertyValue::Color(Rgb::new(110, 90, 100)), &grey, 10.0),
        Some(true)
    );
    assert_eq!(
        is_within_tolerance(&PropertyValue::Color(Rgb::new(111, 100, 100)), &grey, 10.0),
        Some(false)
    );
    let half = PropertyValue::Scalar(0.5);
    assert_eq!(
        is_within_tolerance(&PropertyValue::Scalar(0.55), &half, 0.05),
        Some(true)
    );
    assert_eq!(
        is_within_tolerance(&PropertyValue::Scalar(0.45), &half, 0.05),
        Some(true)
    );
    assert_eq!(
        is_within_tolerance(&PropertyValue::Scalar(0.5501), &half, 0.05),
        Some(false)
    );
    assert_eq!(
        is_within_tolerance(
            &PropertyValue::Scalar(1.0),
            &PropertyValue::Scalar(1.0),
            0.0
        ),
        Some(true)
    );
    let text = PropertyValue::Text("matte".into());
    assert_eq!(
        is_within_tolerance(&PropertyValue::Text(" matte ".into()), &text, 0.0),
        Some(true)
    );
    assert_eq!(
        is_within_tolerance(&PropertyValue::Text("gloss".into()), &text, 0.0),
        Some(false)
    );

    // A value of the wrong kind cannot be compared.
    assert!(check_style(&PropertyValue::Scalar(1.0), &blue).is_err());
    "color, scalar and text bounds".into()
}
