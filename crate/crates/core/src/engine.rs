//! Feedforward cue evaluation.
//!
//! Pure functions from scene state plus knowledge base to render-ready cue
//! descriptors. Zones are ground-plane circles; distance ignores `y`.
//!
//! Zone salience is linear in distance past the boundary and reaches the
//! far end of its range at `radius * (1 + activation_factor)`:
//!
//! * restriction: `1` inside, fading to `0` at the activation horizon;
//! * encouragement: `0` inside, growing to `1` at the activation horizon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    DepartmentTag, KnowledgeBase, PropertyValue, StyleConstraint, Vec3, Zone, ZoneKind,
};

/// Animation rate of a cue at full intensity.
pub const MAX_ANIMATION_HZ: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("zone `{zone_id}` is {actual}, expected {expected}")]
    ZoneKindMismatch {
        zone_id: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("constraint `{constraint_id}` expects a different value kind")]
    ValueKindMismatch { constraint_id: String },
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("non-finite position for `{0}`")]
    NonFinite(String),
    #[error("invalid engine parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    /// Activation horizon beyond the boundary, as a multiple of the radius.
    pub activation_factor: f64,
    pub max_bands: u8,
    pub blink_on_selection_only: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            activation_factor: 2.0,
            max_bands: 3,
            blink_on_selection_only: true,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.activation_factor.is_finite() && self.activation_factor > 0.0) {
            return Err(EngineError::InvalidParams("activation_factor must be > 0"));
        }
        if self.max_bands == 0 {
            return Err(EngineError::InvalidParams("max_bands must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CueColor {
    Green,
    Yellow,
    Orange,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub from: Vec3,
    pub to: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneCue {
    pub zone_id: String,
    pub object_id: String,
    pub kind: ZoneKind,
    pub department: DepartmentTag,
    pub distance: f64,
    pub intensity: f64,
    pub band_count: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrow: Option<Arrow>,
    /// One color per visible band, innermost first.
    pub color_ramp: Vec<CueColor>,
    pub animation_rate_hz: f64,
}

impl ZoneCue {
    pub fn is_visible(&self) -> bool {
        self.band_count > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleCue {
    pub constraint_id: String,
    pub object_id: String,
    pub property: String,
    pub compliant: bool,
    pub blink: bool,
    pub expected: PropertyValue,
    pub actual: PropertyValue,
    pub message: String,
    pub linked_entry_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CueSet {
    pub zone_cues: Vec<ZoneCue>,
    /// Non-compliant style cues only.
    pub style_cues: Vec<StyleCue>,
    pub generated_at: u64,
}

/// Positions, properties and selection of the live scene. Mutators that take
/// a knowledge base reject objects it does not know.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneState {
    pub positions: BTreeMap<String, Vec3>,
    /// object id -> property path -> value
    pub properties: BTreeMap<String, BTreeMap<String, PropertyValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_object: Option<String>,
    /// Bumped on every mutation; stamps the cue sets computed from it.
    pub revision: u64,
}

impl SceneState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every object at its last recorded position, or at the origin when it
    /// has no history.
    pub fn bootstrap(kb: &KnowledgeBase) -> Self {
        let positions = kb
            .scene_objects
            .iter()
            .map(|o| {
                (
                    o.object_id.clone(),
                    kb.last_known_position(&o.object_id).unwrap_or(Vec3::ORIGIN),
                )
            })
            .collect();
        Self {
            positions,
            ..Self::default()
        }
    }

    fn check(kb: &KnowledgeBase, object_id: &str) -> Result<(), EngineError> {
        kb.object(object_id)
            .map(|_| ())
            .ok_or_else(|| EngineError::UnknownObject(object_id.to_string()))
    }

    pub fn validate(&self, kb: &KnowledgeBase) -> Result<(), EngineError> {
        for (id, p) in &self.positions {
            Self::check(kb, id)?;
            if !p.is_finite() {
                return Err(EngineError::NonFinite(id.clone()));
            }
        }
        for id in self.properties.keys().chain(self.selected_object.iter()) {
            Self::check(kb, id)?;
        }
        Ok(())
    }

    pub fn position(&self, object_id: &str) -> Option<Vec3> {
        self.positions.get(object_id).copied()
    }

    pub fn property(&self, object_id: &str, property: &str) -> Option<&PropertyValue> {
        self.properties.get(object_id)?.get(property)
    }

    pub fn set_position(
        &mut self,
        kb: &KnowledgeBase,
        object_id: &str,
        p: Vec3,
    ) -> Result<(), EngineError> {
        Self::check(kb, object_id)?;
        if !p.is_finite() {
            return Err(EngineError::NonFinite(object_id.to_string()));
        }
        self.put_position(object_id, p);
        Ok(())
    }

    pub fn set_property(
        &mut self,
        kb: &KnowledgeBase,
        object_id: &str,
        property: &str,
        value: PropertyValue,
    ) -> Result<(), EngineError> {
        Self::check(kb, object_id)?;
        self.put_property(object_id, property, value);
        Ok(())
    }

    pub fn select(
        &mut self,
        kb: &KnowledgeBase,
        object_id: Option<&str>,
    ) -> Result<(), EngineError> {
        if let Some(id) = object_id {
            Self::check(kb, id)?;
        }
        self.put_selection(object_id);
        Ok(())
    }

    pub(crate) fn put_position(&mut self, object_id: &str, p: Vec3) {
        self.positions.insert(object_id.to_string(), p);
        self.revision += 1;
    }

    pub(crate) fn put_property(&mut self, object_id: &str, property: &str, value: PropertyValue) {
        self.properties
            .entry(object_id.to_string())
            .or_default()
            .insert(property.to_string(), value);
        self.revision += 1;
    }

    pub(crate) fn put_selection(&mut self, object_id: Option<&str>) {
        self.selected_object = object_id.map(str::to_string);
        self.revision += 1;
    }
}

/// Distance from `p` to the zone center in the x/z plane.
pub fn ground_distance(p: Vec3, zone: &Zone) -> f64 {
    (p.x - zone.center.x).hypot(p.z - zone.center.z)
}

fn band_count(intensity: f64, max_bands: u8) -> u8 {
    if intensity <= 0.0 {
        return 0;
    }
    // Absorb rounding noise at exact band edges; any visible cue keeps >= 1 band.
    let raw = (intensity * f64::from(max_bands) - 1e-9).ceil();
    raw.clamp(1.0, f64::from(max_bands)) as u8
}

fn restriction_ramp(bands: u8, max_bands: u8) -> Vec<CueColor> {
    // Innermost band is the hottest; fewer bands drop the hot end first.
    const RAMP: [CueColor; 3] = [CueColor::Red, CueColor::Orange, CueColor::Yellow];
    let n = usize::from(bands);
    if max_bands == 3 {
        return RAMP[3 - n..].to_vec();
    }
    (0..n)
        .map(|i| {
            let heat = (n - i) as f64 / f64::from(max_bands);
            if heat > 2.0 / 3.0 {
                CueColor::Red
            } else if heat > 1.0 / 3.0 {
                CueColor::Orange
            } else {
                CueColor::Yellow
            }
        })
        .collect()
}

fn check_kind(zone: &Zone, expected: ZoneKind) -> Result<(), EngineError> {
    if zone.kind == expected {
        Ok(())
    } else {
        Err(EngineError::ZoneKindMismatch {
            zone_id: zone.zone_id.clone(),
            expected: expected.as_str(),
            actual: zone.kind.as_str(),
        })
    }
}

fn zone_cue(
    zone: &Zone,
    object_id: &str,
    d: f64,
    intensity: f64,
    arrow: Option<Arrow>,
    params: &EngineParams,
) -> ZoneCue {
    let bands = band_count(intensity, params.max_bands);
    let color_ramp = match zone.kind {
        ZoneKind::Encouragement => vec![CueColor::Green; usize::from(bands)],
        ZoneKind::Restriction => restriction_ramp(bands, params.max_bands),
    };
    ZoneCue {
        zone_id: zone.zone_id.clone(),
        object_id: object_id.to_string(),
        kind: zone.kind,
        department: zone.department.clone(),
        distance: d,
        intensity,
        band_count: bands,
        arrow,
        color_ramp,
        animation_rate_hz: intensity * MAX_ANIMATION_HZ,
    }
}

pub fn evaluate_restriction(
    p: Vec3,
    zone: &Zone,
    params: &EngineParams,
) -> Result<ZoneCue, EngineError> {
    evaluate_restriction_for(p, zone, params, "")
}

pub fn evaluate_encouragement(
    p: Vec3,
    zone: &Zone,
    params: &EngineParams,
) -> Result<ZoneCue, EngineError> {
    evaluate_encouragement_for(p, zone, params, "")
}

fn evaluate_restriction_for(
    p: Vec3,
    zone: &Zone,
    params: &EngineParams,
    object_id: &str,
) -> Result<ZoneCue, EngineError> {
    check_kind(zone, ZoneKind::Restriction)?;
    let d = ground_distance(p, zone);
    let r = zone.radius;
    let intensity = if d <= r {
        1.0
    } else {
        (1.0 - (d - r) / (params.activation_factor * r)).clamp(0.0, 1.0)
    };
    Ok(zone_cue(zone, object_id, d, intensity, None, params))
}

fn evaluate_encouragement_for(
    p: Vec3,
    zone: &Zone,
    params: &EngineParams,
    object_id: &str,
) -> Result<ZoneCue, EngineError> {
    check_kind(zone, ZoneKind::Encouragement)?;
    let d = ground_distance(p, zone);
    let r = zone.radius;
    let (intensity, arrow) = if d <= r {
        (0.0, None)
    } else {
        let i = ((d - r) / (params.activation_factor * r)).clamp(0.0, 1.0);
        (
            i,
            Some(Arrow {
                from: p,
                to: zone.center,
            }),
        )
    };
    Ok(zone_cue(zone, object_id, d, intensity, arrow, params))
}

/// Cue for `object_id` at `p` against a zone of either kind.
pub fn evaluate_zone(p: Vec3, zone: &Zone, object_id: &str, params: &EngineParams) -> ZoneCue {
    let cue = match zone.kind {
        ZoneKind::Restriction => evaluate_restriction_for(p, zone, params, object_id),
        ZoneKind::Encouragement => evaluate_encouragement_for(p, zone, params, object_id),
    };
    cue.expect("dispatch matches zone kind")
}

/// Color: max channel delta; scalar: absolute delta; text: trimmed equality.
/// Tolerance bounds are inclusive.
pub fn is_within_tolerance(
    actual: &PropertyValue,
    expected: &PropertyValue,
    tolerance: f64,
) -> Option<bool> {
    match (actual, expected) {
        (PropertyValue::Color(a), PropertyValue::Color(e)) => {
            let delta = [a.r.abs_diff(e.r), a.g.abs_diff(e.g), a.b.abs_diff(e.b)]
                .into_iter()
                .max()
                .unwrap_or(0);
            Some(f64::from(delta) <= tolerance)
        }
        (PropertyValue::Scalar(a), PropertyValue::Scalar(e)) => {
            if !a.is_finite() {
                return Some(false);
            }
            // Inclusive bound measured in the inputs' own precision.
            let slack = 4.0 * f64::EPSILON * a.abs().max(e.abs()).max(1.0);
            Some((a - e).abs() <= tolerance + slack)
        }
        (PropertyValue::Text(a), PropertyValue::Text(e)) => Some(a.trim() == e.trim()),
        _ => None,
    }
}

pub fn check_style(
    actual: &PropertyValue,
    constraint: &StyleConstraint,
) -> Result<StyleCue, EngineError> {
    let compliant = is_within_tolerance(actual, &constraint.expected, constraint.tolerance)
        .ok_or_else(|| EngineError::ValueKindMismatch {
            constraint_id: constraint.constraint_id.clone(),
        })?;
    Ok(StyleCue {
        constraint_id: constraint.constraint_id.clone(),
        object_id: constraint.object_id.clone(),
        property: constraint.property.clone(),
        compliant,
        blink: !compliant,
        expected: constraint.expected.clone(),
        actual: actual.clone(),
        message: constraint.message.clone(),
        linked_entry_ids: constraint.entry_ids.clone(),
    })
}

/// All cues for the current scene.
///
/// Zone cues cover every (zone, object) pair where the object has a position
/// and is a target of the zone (or the zone has no explicit targets). Style
/// cues cover constraints whose property is set and out of compliance; a
/// value of the wrong kind counts as non-compliant.
pub fn evaluate_scene(
    state: &SceneState,
    kb: &KnowledgeBase,
    params: &EngineParams,
) -> Result<CueSet, EngineError> {
    params.validate()?;
    state.validate(kb)?;
    let mut zone_cues = Vec::new();
    let mut zones: Vec<&Zone> = kb.zones.iter().collect();
    zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    for zone in zones {
        if zone.target_object_ids.is_empty() {
            for (oid, p) in &state.positions {
                zone_cues.push(evaluate_zone(*p, zone, oid, params));
            }
        } else {
            let mut targets: Vec<&String> = zone.target_object_ids.iter().collect();
            targets.sort();
            targets.dedup();
            for oid in targets {
                if let Some(p) = state.position(oid) {
                    zone_cues.push(evaluate_zone(p, zone, oid, params));
                }
            }
        }
    }

    let mut style_cues = Vec::new();
    let mut constraints: Vec<&StyleConstraint> = kb.style_constraints.iter().collect();
    constraints.sort_by(|a, b| a.constraint_id.cmp(&b.constraint_id));
    for c in constraints {
        let Some(actual) = state.property(&c.object_id, &c.property) else {
            continue;
        };
        let mut cue = match check_style(actual, c) {
            Ok(cue) => cue,
            Err(EngineError::ValueKindMismatch { .. }) => StyleCue {
                constraint_id: c.constraint_id.clone(),
                object_id: c.object_id.clone(),
                property: c.property.clone(),
                compliant: false,
                blink: true,
                expected: c.expected.clone(),
                actual: actual.clone(),
                message: c.message.clone(),
                linked_entry_ids: c.entry_ids.clone(),
            },
            Err(e) => return Err(e),
        };
        if cue.compliant {
            continue;
        }
        if params.blink_on_selection_only {
            cue.blink = state.selected_object.as_deref() == Some(c.object_id.as_str());
        }
        style_cues.push(cue);
    }

    Ok(CueSet {
        zone_cues,
        style_cues,
        generated_at: state.revision,
    })
}
