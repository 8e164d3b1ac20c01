//! Checked-in figure-reproduction presets, embedded in the binary so a
//! clean checkout can run them anywhere. The JSON files under `presets/`
//! are the source of truth and double as config-schema documentation.

use crate::config::ExperimentConfig;

macro_rules! preset_table {
    ($(($name:literal, $file:literal)),* $(,)?) => {
        &[ $(($name, include_str!(concat!("../presets/", $file)))),* ]
    };
}

const PRESETS: &[(&str, &str)] = preset_table![
    ("fig2", "fig2.json"),
    ("fig3-ddp", "fig3-ddp.json"),
    ("fig3-ddp-ttl", "fig3-ddp-ttl.json"),
    ("fig3-gauss", "fig3-gauss.json"),
    ("fig4-cpr", "fig4-cpr.json"),
    ("fig4-phase-sweep", "fig4-phase-sweep.json"),
    ("fig5-drift", "fig5-drift.json"),
    ("fig5-delta-scan", "fig5-delta-scan.json"),
    ("fig6", "fig6.json"),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn load_preset(name: &str) -> Result<ExperimentConfig, String> {
    let text = preset_source(name)
        .ok_or_else(|| format!("unknown preset {name:?} (try `rydgate list`)"))?;
    ExperimentConfig::from_json(text).map_err(|e| format!("preset {name:?} is invalid: {e}"))
}

/// Name and one-line description of every preset.
pub fn preset_descriptions() -> Vec<(String, String)> {
    PRESETS
        .iter()
        .map(|(name, text)| {
            let desc = ExperimentConfig::from_json(text)
                .ok()
                .and_then(|c| c.description)
                .unwrap_or_default();
            (name.to_string(), desc)
        })
        .collect()
}
