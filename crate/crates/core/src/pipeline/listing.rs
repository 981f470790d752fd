use std::fmt::Write;

use crate::error::Result;
use crate::presets::{flatten_preset, preset, EffectName};

use super::RunConfig;

/// Every preset field of every effect, one `effect key value` row each.
/// With a config, its effect shows the overridden values and those rows are
/// tagged `[override]`.
pub fn list_presets(config: Option<&RunConfig>) -> Result<String> {
    let mut out = String::new();
    let overridden = match config {
        Some(c) => Some((c.effect, c.effect_preset()?, c.override_list()?)),
        None => None,
    };
    let _ = writeln!(out, "{:<13} {:<34} value", "effect", "key");
    for name in EffectName::ALL {
        let (p, keys) = match &overridden {
            Some((e, p, o)) if *e == name => (p.clone(), o.iter().map(|o| o.key.clone()).collect()),
            _ => (preset(name), Vec::new()),
        };
        for (key, value) in flatten_preset(&p) {
            let tag = keys
                .iter()
                .any(|k: &String| key == *k || key.starts_with(&format!("{k}.")))
                .then_some("  [override]")
                .unwrap_or("");
            let _ = writeln!(out, "{:<13} {:<34} {}{}", name.as_str(), key, value, tag);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row<'a>(text: &'a str, effect: &str, key: &str) -> &'a str {
        text.lines()
            .find(|l| {
                let mut it = l.split_whitespace();
                it.next() == Some(effect) && it.next() == Some(key)
            })
            .unwrap_or_else(|| panic!("no row {effect} {key}"))
    }

    #[test]
    fn lists_every_effect() {
        let text = list_presets(None).unwrap();
        for e in EffectName::ALL {
            assert!(text.contains(e.as_str()));
        }
        assert!(row(&text, "snowfall", "render_opacity").ends_with(" 0.65"));
        assert!(!text.contains("[override]"));
    }

    #[test]
    fn marks_overrides() {
        let mut cfg = RunConfig::new("s", "m", EffectName::Fog, "o");
        cfg.overrides.insert("render_color".into(), toml::Value::Array(vec![0.5.into(), 0.6.into(), 0.7.into()]));
        let text = list_presets(Some(&cfg)).unwrap();
        let r = row(&text, "fog", "render_color");
        assert!(r.contains("[0.5,0.6,0.7]") && r.ends_with("[override]"), "{r}");
        assert!(!row(&text, "snowfall", "render_color").contains("[override]"));
    }
}
