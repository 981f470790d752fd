use serde_json::{Map, Value};

use crate::error::{Error, Result};

use super::EffectPreset;

/// One `key = value` preset override. Dotted keys address nested fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: Value,
}

impl Override {
    pub fn new(key: impl Into<String>, value: impl Into<Value>) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
        }
    }
}

/// Every leaf of the preset as `(dotted key, value)`, in field order.
/// Ranges appear as `key.min` / `key.max`; arrays are leaves.
pub fn flatten_preset(preset: &EffectPreset) -> Vec<(String, Value)> {
    let v = serde_json::to_value(preset).expect("presets serialize");
    let mut out = Vec::new();
    flatten_into("", &v, &mut out);
    out
}

fn flatten_into(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, child, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

/// Applies overrides in order and re-validates the preset.
pub fn apply_overrides(preset: &EffectPreset, overrides: &[Override]) -> Result<EffectPreset> {
    let mut v = serde_json::to_value(preset).expect("presets serialize");
    for o in overrides {
        if o.key.is_empty() {
            return Err(Error::Config("empty override key".into()));
        }
        let path: Vec<&str> = o.key.split('.').collect();
        if path[0] == "name" {
            return Err(Error::Config("the effect name cannot be overridden; set `effect` instead".into()));
        }
        let mut expanded = o.value.clone();
        for seg in path.iter().skip(1).rev() {
            let mut m = Map::new();
            m.insert((*seg).to_string(), expanded);
            expanded = Value::Object(m);
        }
        merge(&mut v, path[0], expanded, path[0])?;
    }
    let out: EffectPreset = serde_json::from_value(v)
        .map_err(|e| Error::Config(format!("override produced an invalid preset: {e}")))?;
    out.validate()?;
    Ok(out)
}

fn merge(target: &mut Value, key: &str, value: Value, full: &str) -> Result<()> {
    let Value::Object(map) = target else {
        return Err(Error::Config(format!("override key '{full}' does not name a preset field")));
    };
    let Some(slot) = map.get_mut(key) else {
        return Err(Error::Config(format!("unknown preset key '{full}'")));
    };
    match (slot, value) {
        (slot @ Value::Object(_), Value::Object(sub)) if !sub.contains_key("kind") => {
            for (k, child) in sub {
                merge(slot, &k, child, &format!("{full}.{k}"))?;
            }
            Ok(())
        }
        (Value::Null, Value::Object(sub)) if !sub.contains_key("kind") => Err(Error::Config(format!(
            "preset key '{full}' is not set for this effect; override it as a whole"
        ))),
        (slot, value) => {
            *slot = value;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{preset, EffectName, Range3};

    #[test]
    fn nested_and_range_overrides() {
        let base = preset(EffectName::Snowfall);
        let out = apply_overrides(
            &base,
            &[
                Override::new("emitter.count", 250),
                Override::new("render_scale", 0.01),
                Override::new("render_color", serde_json::json!([0.2, 0.3, 0.4])),
            ],
        )
        .unwrap();
        assert_eq!(out.emitter.count, 250);
        assert_eq!(out.render_scale, Range3::iso(0.01));
        assert_eq!(out.render_color, [0.2, 0.3, 0.4]);
        let out = apply_overrides(&out, &[Override::new("render_scale.max", serde_json::json!([0.02, 0.02, 0.02]))])
            .unwrap();
        assert_eq!(out.render_scale.max, [0.02; 3]);
    }

    #[test]
    fn bad_overrides_fail() {
        let base = preset(EffectName::Snowfall);
        assert!(apply_overrides(&base, &[Override::new("no_such_field", 1)]).is_err());
        assert!(apply_overrides(&base, &[Override::new("render_opacity", 2.0)]).is_err());
        assert!(apply_overrides(&base, &[Override::new("clone.scale", 0.1)]).is_err());
        assert!(apply_overrides(&base, &[Override::new("name", "fog")]).is_err());
    }

    #[test]
    fn region_kind_can_be_replaced() {
        let base = preset(EffectName::Snowfall);
        let region = serde_json::json!({"kind": "side_x", "x": 0.05, "min_y": 0.2, "max_y": 0.3});
        let out = apply_overrides(&base, &[Override::new("emitter.region", region)]).unwrap();
        assert!(matches!(out.emitter.region, crate::presets::RegionPreset::SideX { .. }));
    }

    #[test]
    fn every_numeric_leaf_is_overridable() {
        for name in EffectName::ALL {
            let base = preset(name);
            for (key, value) in flatten_preset(&base) {
                let nudged = match &value {
                    Value::Number(n) => {
                        let x = n.as_f64().unwrap();
                        if n.is_f64() {
                            serde_json::json!(x)
                        } else {
                            value.clone()
                        }
                    }
                    _ => continue,
                };
                let out = apply_overrides(&base, &[Override::new(key.clone(), nudged.clone())])
                    .unwrap_or_else(|e| panic!("{name} {key}: {e}"));
                let found = flatten_preset(&out).into_iter().find(|(k, _)| *k == key).unwrap().1;
                assert_eq!(found, nudged, "{name} {key}");
            }
        }
    }
}
